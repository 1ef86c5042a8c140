use fuselab::datagen;
use fuselab::trainer::{cross_entropy_accuracy, train_with_history, TrainConfig};

#[test]
fn default_config_reaches_ninety_percent_train_accuracy() {
    let ds = datagen::generate(
        datagen::DEFAULT_NUM_CLASSES,
        datagen::DEFAULT_PER_CLASS,
        datagen::DEFAULT_DIM,
        0,
    )
    .unwrap();
    for seed in [0, 1, 2] {
        let (model, history) = train_with_history(&ds, &TrainConfig::for_seed(seed)).unwrap();
        let (_, acc) = cross_entropy_accuracy(&model, &ds).unwrap();
        assert!(acc >= 0.9, "seed {seed}: train accuracy {acc}");
        assert!(
            history.epoch_losses[0] < history.initial_loss,
            "seed {seed}: first epoch {} vs init {}",
            history.epoch_losses[0],
            history.initial_loss
        );
        assert_eq!(history.epoch_losses.len(), 30);
    }
}

#[test]
fn seeds_change_both_init_and_order() {
    let a = TrainConfig::for_seed(3);
    let b = TrainConfig::for_seed(4);
    assert_ne!(a.init_seed, b.init_seed);
    assert_ne!(a.shuffle_seed, b.shuffle_seed);
    assert_ne!(a.init_seed, a.shuffle_seed);
}
