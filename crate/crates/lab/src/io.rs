//! CSV formats: noise schedules in, trajectories out.

use std::path::Path;

use kylepriv_core::lvr::LvrStep;
use kylepriv_core::sim::StepRecord;
use kylepriv_core::{NoiseSchedule, Segment};
use serde::Serialize;

use crate::error::{LabError, Result};

pub const SCHEDULE_HEADER: [&str; 3] = ["t_start", "t_end", "variance"];

/// Reads a `t_start,t_end,variance` file.
pub fn read_schedule(path: &Path) -> Result<NoiseSchedule> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| LabError::csv(path, e))?;
    let headers = reader.headers().map_err(|e| LabError::csv(path, e))?;
    if headers.iter().ne(SCHEDULE_HEADER) {
        return Err(LabError::Input(format!(
            "{}: expected header `{}`",
            path.display(),
            SCHEDULE_HEADER.join(",")
        )));
    }
    let segments = reader
        .deserialize::<Segment>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| LabError::csv(path, e))?;
    Ok(NoiseSchedule::new(segments)?)
}

pub fn write_schedule(path: &Path, schedule: &NoiseSchedule) -> Result<()> {
    write_rows(path, schedule.segments())
}

/// Header `path_id,step,t,v,p,dx,du,deps,dy_obs,sigma_post,profit_I,profit_N,profit_M`.
pub fn write_steps(path: &Path, steps: &[StepRecord]) -> Result<()> {
    write_rows(path, steps)
}

/// Header `path_id,step,t,q,V,lvr_step`.
pub fn write_lvr_steps(path: &Path, steps: &[LvrStep]) -> Result<()> {
    write_rows(path, steps)
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| LabError::csv(path, e))?;
    for row in rows {
        writer.serialize(row).map_err(|e| LabError::csv(path, e))?;
    }
    writer.flush().map_err(|e| LabError::io(path, e))
}
