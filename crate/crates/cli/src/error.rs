use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid descriptor: {0}")]
    DescriptorInvalid(String),
    #[error("{experiment}: {source}")]
    Module {
        experiment: &'static str,
        #[source]
        source: virlab_core::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn module(experiment: &'static str) -> impl Fn(virlab_core::Error) -> CliError {
    move |source| CliError::Module { experiment, source }
}
