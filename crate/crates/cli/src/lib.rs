//! Experiment runner around `qpeh_core`: configuration, pipelines and
//! figure-ready output files.

use std::path::PathBuf;

use qpeh_core::analysis::AnalysisError;
use qpeh_core::corr::CorrError;
use qpeh_core::model::ModelError;
use qpeh_core::peschel::PeschelError;
use qpeh_core::qpp::QppError;
use thiserror::Error;

pub mod config;
pub mod output;
pub mod run;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("could not format output: {0}")]
    Output(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Corr(#[from] CorrError),
    #[error(transparent)]
    Peschel(#[from] PeschelError),
    #[error(transparent)]
    Qpp(#[from] QppError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}
