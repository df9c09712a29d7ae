use thiserror::Error;

use crate::eval::EvalError;
use crate::forest::ForestError;
use crate::partition::PartitionError;
use crate::prep::PrepError;
use crate::screening::ScreenError;
use crate::stats::StatsError;
use crate::table::TableError;

/// Umbrella error for callers that drive several stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Prep(#[from] PrepError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Screen(#[from] ScreenError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
