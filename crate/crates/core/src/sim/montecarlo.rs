//! Independent runs in parallel, one random stream per run.

use rayon::prelude::*;

use super::engine::{run_seeded, SimSetup};
use super::perturb::StochasticConfig;
use crate::error::Result;
use crate::metrics::{compute_run_metrics, MetricsContext, RunMetrics};

/// Metrics of runs `0..cfg.runs`, in run order whatever the thread count.
pub fn run_monte_carlo(
    setup: &SimSetup<'_>,
    cfg: &StochasticConfig,
    ctx: &MetricsContext<'_>,
) -> Result<Vec<RunMetrics>> {
    cfg.check()?;
    setup.check()?;
    if cfg.is_deterministic() {
        let one = compute_run_metrics(&run_seeded(setup, cfg, 0)?, ctx)?;
        return Ok(vec![one; cfg.runs]);
    }
    (0..cfg.runs as u64)
        .into_par_iter()
        .map(|run| compute_run_metrics(&run_seeded(setup, cfg, run)?, ctx))
        .collect()
}
