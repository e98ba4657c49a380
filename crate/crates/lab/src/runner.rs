//! Path-parallel drivers. Paths are computed on the rayon pool and
//! aggregated in path-index order, so results do not depend on the thread
//! count.

use kylepriv_core::lvr::{simulate_lvr_path, CpammParams, LvrResult, LvrStep};
use kylepriv_core::sim::{simulate_path, StepRecord};
use kylepriv_core::{EquilibriumPath, SimConfig, SimResult};
use rayon::prelude::*;

use crate::error::{LabError, Result};

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T, F>(threads: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> Result<T> + Send,
{
    match threads {
        None => f(),
        Some(0) => Err(LabError::Input("threads must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| LabError::Thread(e.to_string()))?
            .install(f),
    }
}

#[derive(Debug, Clone)]
pub struct SimRun {
    pub result: SimResult,
    /// Steps of the first `config.record_paths` paths, path by path.
    pub steps: Vec<StepRecord>,
}

pub fn run_sim<E>(eq: &E, config: &SimConfig) -> Result<SimRun>
where
    E: EquilibriumPath + Sync + ?Sized,
{
    config.validate()?;
    let per_path = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut steps = Vec::new();
            let keep = (i as usize) < config.record_paths;
            let summary = simulate_path(eq, config, i, |r| {
                if keep {
                    steps.push(*r)
                }
            })?;
            Ok((summary, steps))
        })
        .collect::<std::result::Result<Vec<_>, kylepriv_core::Error>>()?;

    let mut paths = Vec::with_capacity(per_path.len());
    let mut steps = Vec::new();
    for (summary, s) in per_path {
        paths.push(summary);
        steps.extend(s);
    }
    Ok(SimRun {
        result: SimResult::from_paths(config, eq.horizon(), paths),
        steps,
    })
}

#[derive(Debug, Clone)]
pub struct LvrRun {
    pub result: LvrResult,
    pub steps: Vec<LvrStep>,
}

pub fn run_lvr(
    params: &CpammParams,
    n_steps: usize,
    n_paths: usize,
    master_seed: u64,
    record_paths: usize,
) -> Result<LvrRun> {
    if n_paths < 1 {
        return Err(kylepriv_core::Error::InvalidParameter {
            field: "n_paths",
            value: n_paths as f64,
            requirement: ">= 1",
        }
        .into());
    }
    let per_path = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut steps = Vec::new();
            let keep = (i as usize) < record_paths;
            let summary = simulate_lvr_path(params, n_steps, master_seed, i, |r| {
                if keep {
                    steps.push(*r)
                }
            })?;
            Ok((summary, steps))
        })
        .collect::<std::result::Result<Vec<_>, kylepriv_core::Error>>()?;

    let mut paths = Vec::with_capacity(per_path.len());
    let mut steps = Vec::new();
    for (summary, s) in per_path {
        paths.push(summary);
        steps.extend(s);
    }
    Ok(LvrRun {
        result: LvrResult::from_paths(params, n_steps, master_seed, &paths)?,
        steps,
    })
}
