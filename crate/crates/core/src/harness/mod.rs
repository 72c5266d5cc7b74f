//! Everything above the estimator: fitting and persisting models, the
//! resampling evaluation protocol, hyperparameter sweeps under stratified
//! cross-validation, and paired comparison of two result sets.

mod compare;
mod eval;
mod model;
mod sweep;

pub use compare::{compare, wilcoxon_signed_rank, ComparisonReport, DatasetComparison, Wilcoxon, WilcoxonMethod};
pub use eval::{evaluate, EvalOptions, EvalReport, PhaseTimes, Summary};
pub use model::{FitTimings, Model, FORMAT_VERSION, MAGIC};
pub use sweep::{run_sweep, write_sweep, AxisValue, SweepAxis, SweepRow, SweepSpec};

use crate::error::{QuantError, Result};

/// Run `f` on a rayon pool of `threads` workers (`None` = rayon's default).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(QuantError::Config("thread count must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| QuantError::Config(format!("cannot start thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
