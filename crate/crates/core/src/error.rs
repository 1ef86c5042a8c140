use std::path::PathBuf;

/// Errors produced anywhere in the merging pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch{}: {detail}", layer_suffix(*.layer))]
    Shape { layer: Option<usize>, detail: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("malformed file, field `{field}`: {detail}")]
    Parse { field: String, detail: String },

    #[error("numerical failure{}: {detail}", layer_suffix(*.layer))]
    Numerical { layer: Option<usize>, detail: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: non-finite loss")]
    TrainingDiverged { epoch: usize, batch: usize },

    #[error("alignment of model {model} failed: {source}")]
    Alignment {
        model: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("gamma selection failed: {0}")]
    Selection(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn layer_suffix(layer: Option<usize>) -> String {
    match layer {
        Some(l) => format!(" at layer {l}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn shape(layer: impl Into<Option<usize>>, detail: impl Into<String>) -> Self {
        Error::Shape {
            layer: layer.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn numerical(layer: impl Into<Option<usize>>, detail: impl Into<String>) -> Self {
        Error::Numerical {
            layer: layer.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn parse(field: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
