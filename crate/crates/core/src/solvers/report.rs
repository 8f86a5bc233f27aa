use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    /// The monitored residual stopped improving before reaching the target.
    Stalled,
    MaxIterations,
    /// Zero right-hand side; the zero vector is returned without iterating.
    ZeroRhs,
}

/// One inner solve of a (possibly chained) solver.
#[derive(Clone, Debug, Serialize)]
pub struct StageRecord {
    pub name: String,
    /// Accuracy assigned to the stage by the schedule.
    pub eps: f64,
    pub delta: f64,
    /// Tolerance actually requested from the inner solver.
    pub tolerance: f64,
    pub iterations: usize,
    pub max_iterations: usize,
    /// Residual of the stage's own objective relative to its right-hand side.
    pub relative_residual: f64,
    pub stop: StopReason,
    pub sketch_rows: usize,
    /// `‖x‖` of the stage output.
    pub solution_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    /// Residual norm of the solved objective.
    pub residual: f64,
    /// `residual/‖b‖`.
    pub relative_residual: f64,
    /// Gradient steps summed over stages.
    pub iterations: usize,
    /// Sum of the per-stage iteration caps.
    pub max_iterations: usize,
    pub max_iterations_hit: bool,
    /// Every stage met its tolerance.
    pub converged: bool,
    pub wall_time: f64,
    pub stage_log: Vec<StageRecord>,
    pub warnings: Vec<String>,
}

impl SolveReport {
    pub(crate) fn from_stages(
        solution: Vec<f64>,
        residual: f64,
        rhs_norm: f64,
        stage_log: Vec<StageRecord>,
        warnings: Vec<String>,
        started: std::time::Instant,
    ) -> Self {
        let relative_residual = if rhs_norm > 0.0 { residual / rhs_norm } else { 0.0 };
        Self {
            solution,
            residual,
            relative_residual,
            iterations: stage_log.iter().map(|s| s.iterations).sum(),
            max_iterations: stage_log.iter().map(|s| s.max_iterations).sum(),
            max_iterations_hit: stage_log.iter().any(|s| s.stop == StopReason::MaxIterations),
            converged: stage_log
                .iter()
                .all(|s| matches!(s.stop, StopReason::Converged | StopReason::ZeroRhs)),
            wall_time: started.elapsed().as_secs_f64(),
            stage_log,
            warnings,
        }
    }
}
