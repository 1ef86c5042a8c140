//! Seeded synthetic classification data and two-way data-split protocols.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::manifest::{push_f64s, Manifest, PayloadReader};

/// Distance of every class center from the origin.
pub const CENTER_RADIUS: f64 = 3.0;
pub const DEFAULT_NUM_CLASSES: usize = 4;
pub const DEFAULT_PER_CLASS: usize = 500;
pub const DEFAULT_DIM: usize = 16;

pub const DATASET_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "FUSELAB-DATASET";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    num_classes: usize,
    seed: u64,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<usize>, num_classes: usize, seed: u64) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::Validation("dataset has no samples".into()));
        }
        if labels.len() != features.nrows() {
            return Err(Error::Validation(format!(
                "{} labels for {} samples",
                labels.len(),
                features.nrows()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::Validation(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("features contain non-finite values".into()));
        }
        Ok(Self {
            features,
            labels,
            num_classes,
            seed,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let features = self.features.select_rows(indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Dataset::new(features, labels, self.num_classes, self.seed)
    }

    /// Sample indices of each class, in dataset order.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn class_counts(&self) -> Vec<usize> {
        self.class_indices().iter().map(Vec::len).collect()
    }
}

/// Gaussian mixture: class `k` is centered on a seeded random unit direction
/// scaled by [`CENTER_RADIUS`], with unit isotropic noise. Rows are shuffled
/// with the same seed.
pub fn generate(num_classes: usize, per_class: usize, dim: usize, seed: u64) -> Result<Dataset> {
    if num_classes < 2 || per_class < 2 || dim < 2 {
        return Err(Error::Config(format!(
            "generate needs K >= 2, per_class >= 2, dim >= 2 (got {num_classes}, {per_class}, {dim})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = class_centers(num_classes, dim, &mut rng);
    let m = num_classes * per_class;
    let mut order: Vec<usize> = (0..m).collect();
    let mut raw = Matrix::zeros(m, dim);
    for i in 0..m {
        let k = i / per_class;
        for j in 0..dim {
            let noise: f64 = rng.sample(StandardNormal);
            raw[(i, j)] = centers[k][j] + noise;
        }
    }
    order.shuffle(&mut rng);
    let features = raw.select_rows(&order);
    let labels = order.iter().map(|&i| i / per_class).collect();
    Dataset::new(features, labels, num_classes, seed)
}

/// The class centers `generate` uses for this seed.
pub fn centers_for_seed(num_classes: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    class_centers(num_classes, dim, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn class_centers(num_classes: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..num_classes)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 {
                break v.into_iter().map(|x| CENTER_RADIUS * x / norm).collect();
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitKind {
    Full,
    /// First half of the classes 80/20, second half 20/80.
    EightyTwenty,
    /// Per-class proportions drawn from Dirichlet(alpha).
    Dirichlet([f64; 2]),
    DisjointClasses,
}

impl SplitKind {
    pub fn name(&self) -> &'static str {
        match self {
            SplitKind::Full => "full",
            SplitKind::EightyTwenty => "eighty-twenty",
            SplitKind::Dirichlet(_) => "dirichlet",
            SplitKind::DisjointClasses => "disjoint",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub kind: SplitKind,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(kind: SplitKind, seed: u64) -> Result<Self> {
        if let SplitKind::Dirichlet(alpha) = kind {
            if alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
                return Err(Error::Config(format!("Dirichlet alpha must be positive, got {alpha:?}")));
            }
        }
        Ok(Self { kind, seed })
    }
}

/// Two-way partition of `ds`. `Full` gives both parts the whole dataset
/// (each model trains on everything), so it is the one protocol that is not
/// a partition.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (first, second) = split_indices(ds, spec)?;
    if first.is_empty() || second.is_empty() {
        return Err(Error::Config(format!(
            "{} split produced an empty part",
            spec.kind.name()
        )));
    }
    Ok((ds.subset(&first)?, ds.subset(&second)?))
}

/// Index sets of the two parts, each sorted ascending.
pub fn split_indices(ds: &Dataset, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let k = ds.num_classes();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let classes = ds.class_indices();
    let mut first = Vec::new();
    let mut second = Vec::new();
    match spec.kind {
        SplitKind::Full => {
            first = (0..ds.len()).collect();
            second = first.clone();
        }
        SplitKind::EightyTwenty => {
            require_even(k, "eighty-twenty")?;
            for (class, idx) in classes.iter().enumerate() {
                let mut idx = idx.clone();
                idx.shuffle(&mut rng);
                let share = if class < k / 2 { 8 } else { 2 };
                let take = (idx.len() * share + 5) / 10;
                first.extend_from_slice(&idx[..take]);
                second.extend_from_slice(&idx[take..]);
            }
        }
        SplitKind::Dirichlet(alpha) => {
            SplitSpec::new(spec.kind, spec.seed)?;
            let dist = Dirichlet::new(alpha)
                .map_err(|e| Error::Config(format!("invalid Dirichlet alpha: {e}")))?;
            for idx in &classes {
                let p: [f64; 2] = dist.sample(&mut rng);
                for &i in idx {
                    if rng.random::<f64>() < p[0] {
                        first.push(i);
                    } else {
                        second.push(i);
                    }
                }
            }
        }
        SplitKind::DisjointClasses => {
            require_even(k, "disjoint")?;
            let mut order: Vec<usize> = (0..k).collect();
            order.shuffle(&mut rng);
            for (pos, &class) in order.iter().enumerate() {
                let target = if pos < k / 2 { &mut first } else { &mut second };
                target.extend_from_slice(&classes[class]);
            }
        }
    }
    first.sort_unstable();
    second.sort_unstable();
    Ok((first, second))
}

fn require_even(k: usize, name: &str) -> Result<()> {
    if k % 2 != 0 {
        return Err(Error::Config(format!(
            "{name} split needs an even number of classes, got {k}"
        )));
    }
    Ok(())
}

/// Stratified holdout: `fraction` of each class (rounded) goes to the
/// second returned dataset.
pub fn holdout(ds: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("holdout fraction must be in (0, 1), got {fraction}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::new();
    let mut held = Vec::new();
    for idx in ds.class_indices() {
        let mut idx = idx;
        idx.shuffle(&mut rng);
        let take = (idx.len() as f64 * fraction).round() as usize;
        held.extend_from_slice(&idx[..take]);
        keep.extend_from_slice(&idx[take..]);
    }
    keep.sort_unstable();
    held.sort_unstable();
    Ok((ds.subset(&keep)?, ds.subset(&held)?))
}

pub fn write_dataset(ds: &Dataset) -> Vec<u8> {
    let mut manifest = Manifest::new();
    manifest.push("format_version", DATASET_FORMAT_VERSION);
    manifest.push("m", ds.len());
    manifest.push("d", ds.dim());
    manifest.push("K", ds.num_classes());
    manifest.push("seed", ds.seed());
    let mut payload = Vec::with_capacity(ds.len() * (ds.dim() * 8 + 4));
    push_f64s(&mut payload, ds.features.transpose().iter().copied());
    for &l in &ds.labels {
        payload.extend_from_slice(&(l as u32).to_le_bytes());
    }
    manifest.encode(MAGIC, &payload)
}

pub fn read_dataset(bytes: &[u8]) -> Result<Dataset> {
    let (manifest, payload) = Manifest::decode(MAGIC, bytes)?;
    let version: u32 = manifest.parse_num("format_version")?;
    if version != DATASET_FORMAT_VERSION {
        return Err(Error::parse("format_version", format!("unsupported version {version}")));
    }
    let m: usize = manifest.parse_num("m")?;
    let d: usize = manifest.parse_num("d")?;
    let k: usize = manifest.parse_num("K")?;
    let seed: u64 = manifest.parse_num("seed")?;
    let mut reader = PayloadReader::new(payload);
    let features = reader.f64s(m * d, "features")?;
    let labels = reader.u32s(m, "labels")?;
    reader.finish()?;
    Dataset::new(
        Matrix::from_row_slice(m, d, &features),
        labels.into_iter().map(|l| l as usize).collect(),
        k,
        seed,
    )
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_dataset(ds)).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_dataset(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generate_is_deterministic() {
        assert_eq!(generate(2, 50, 2, 7).unwrap(), generate(2, 50, 2, 7).unwrap());
        assert_ne!(generate(2, 50, 2, 7).unwrap(), generate(2, 50, 2, 8).unwrap());
    }

    #[test]
    fn generate_balances_classes() {
        let ds = generate(5, 13, 3, 1).unwrap();
        assert_eq!(ds.class_counts(), vec![13; 5]);
    }

    #[test]
    fn generate_rejects_degenerate_sizes() {
        assert!(generate(1, 10, 3, 0).is_err());
        assert!(generate(3, 1, 3, 0).is_err());
        assert!(generate(3, 10, 1, 0).is_err());
    }

    #[test]
    fn class_means_sit_near_their_centers() {
        // 3σ/√100 = 0.3 per coordinate; the norm bound 0.5 is loose in d=2.
        let ds = generate(3, 100, 2, 11).unwrap();
        let centers = centers_for_seed(3, 2, 11);
        for (k, idx) in ds.class_indices().iter().enumerate() {
            let mean = ds.features().select_rows(idx).row_mean();
            let dist = (0..2).map(|j| (mean[j] - centers[k][j]).powi(2)).sum::<f64>().sqrt();
            assert!(dist < 0.5, "class {k} mean is {dist} from its center");
            let radius = centers[k].iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((radius - CENTER_RADIUS).abs() < 1e-12);
        }
    }

    #[test]
    fn eighty_twenty_counts() {
        let ds = generate(2, 100, 4, 3).unwrap();
        let (a, b) = split(&ds, &SplitSpec::new(SplitKind::EightyTwenty, 9).unwrap()).unwrap();
        assert_eq!(a.class_counts(), vec![80, 20]);
        assert_eq!(b.class_counts(), vec![20, 80]);
    }

    #[test]
    fn disjoint_classes_do_not_overlap() {
        let ds = generate(4, 20, 3, 5).unwrap();
        let (a, b) = split(&ds, &SplitSpec::new(SplitKind::DisjointClasses, 2).unwrap()).unwrap();
        let set = |d: &Dataset| {
            let mut s: Vec<usize> = d.labels().to_vec();
            s.sort_unstable();
            s.dedup();
            s
        };
        let (sa, sb) = (set(&a), set(&b));
        assert!(sa.iter().all(|c| !sb.contains(c)));
        let mut all = [sa, sb].concat();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3]);
        assert_eq!(a.len() + b.len(), ds.len());
    }

    #[test]
    fn odd_class_count_is_a_config_error() {
        let ds = generate(3, 10, 2, 0).unwrap();
        for kind in [SplitKind::EightyTwenty, SplitKind::DisjointClasses] {
            assert!(matches!(
                split(&ds, &SplitSpec { kind, seed: 0 }),
                Err(Error::Config(_))
            ));
        }
    }

    #[test]
    fn dirichlet_rejects_nonpositive_alpha() {
        assert!(SplitSpec::new(SplitKind::Dirichlet([0.5, 0.0]), 0).is_err());
        assert!(SplitSpec::new(SplitKind::Dirichlet([0.5, 0.5]), 0).is_ok());
    }

    #[test]
    fn holdout_is_stratified() {
        let ds = generate(4, 50, 3, 0).unwrap();
        let (train, test) = holdout(&ds, 0.2, 1).unwrap();
        assert_eq!(test.class_counts(), vec![10; 4]);
        assert_eq!(train.class_counts(), vec![40; 4]);
    }

    #[test]
    fn dataset_file_round_trip() {
        let ds = generate(3, 7, 4, 21).unwrap();
        assert_eq!(read_dataset(&write_dataset(&ds)).unwrap(), ds);
    }

    #[test]
    fn dataset_file_rejects_bad_label() {
        let ds = generate(2, 3, 2, 0).unwrap();
        let mut bytes = write_dataset(&ds);
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(read_dataset(&bytes), Err(Error::Validation(_))));
    }
}
