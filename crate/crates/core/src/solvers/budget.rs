use crate::error::check_unit_interval;
use crate::Result;
use serde::Serialize;

/// Final accuracy and failure probability of a chained solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrecisionBudget {
    pub eps_final: f64,
    pub delta_final: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StageBudget {
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
}

impl PrecisionBudget {
    pub fn new(eps_final: f64, delta_final: f64) -> Result<Self> {
        check_unit_interval("eps_final", eps_final, 0.1)?;
        check_unit_interval("delta_final", delta_final, 0.1)?;
        Ok(Self {
            eps_final,
            delta_final,
        })
    }

    /// Stages `k = 1..=j` of the even-power chain:
    /// `ε_k = ε_final·0.5^(j−k)` and `δ_k = δ_final/k`.
    pub fn even_schedule(&self, j: usize) -> Vec<StageBudget> {
        (1..=j)
            .map(|k| StageBudget {
                k,
                eps: self.eps_final * 0.5f64.powi((j - k) as i32),
                delta: self.delta_final / k as f64,
            })
            .collect()
    }
}
