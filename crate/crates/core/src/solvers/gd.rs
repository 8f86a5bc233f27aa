use super::StopReason;
use crate::linalg::{mat_t_vec, mat_vec, norm};
use crate::DenseMatrix;

/// A matrix accessed only through products with it and its transpose.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn apply_transpose(&self, y: &[f64]) -> Vec<f64>;
}

impl LinearOperator for DenseMatrix {
    fn nrows(&self) -> usize {
        DenseMatrix::nrows(self)
    }

    fn ncols(&self) -> usize {
        DenseMatrix::ncols(self)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        mat_vec(self, x)
    }

    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        mat_t_vec(self, y)
    }
}

#[derive(Clone, Debug)]
pub struct GdOutcome {
    /// Final iterate on convergence, otherwise the best one seen.
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub stop: StopReason,
    /// Monitored quantity at `solution`.
    pub metric: f64,
    /// Monitored quantity at every iterate, starting with `x₀`.
    pub history: Vec<f64>,
}

/// What a monitor reports about the current iterate.
#[derive(Clone, Copy, Debug)]
pub struct Check {
    pub metric: f64,
    pub done: bool,
}

/// Unit-step gradient descent `x ← x − Bᵀ(Bx − y)`.
///
/// `monitor` sees each iterate with its residual `Bx − y` and gradient
/// `Bᵀ(Bx − y)` and decides when to stop. The loop also stops after `max_iter` updates or when the metric has
/// not improved for `stall_window` iterations; in both cases the best iterate
/// is returned.
pub fn gradient_descent<B, M>(
    op: &B,
    y: &[f64],
    x0: Vec<f64>,
    max_iter: usize,
    stall_window: usize,
    mut monitor: M,
) -> GdOutcome
where
    B: LinearOperator + ?Sized,
    M: FnMut(&[f64], &[f64], &[f64]) -> Check,
{
    let mut x = x0;
    let mut best = (x.clone(), f64::INFINITY);
    let mut last_improvement = 0;
    let mut history = Vec::new();
    let mut t = 0;
    loop {
        let mut r = op.apply(&x);
        r.iter_mut().zip(y).for_each(|(ri, yi)| *ri -= yi);
        let g = op.apply_transpose(&r);
        let check = monitor(&x, &r, &g);
        history.push(check.metric);
        if check.done {
            return GdOutcome {
                solution: x,
                iterations: t,
                stop: StopReason::Converged,
                metric: check.metric,
                history,
            };
        }
        if check.metric < best.1 * (1.0 - 1e-6) || !best.1.is_finite() {
            best = (x.clone(), check.metric);
            last_improvement = t;
        }
        let stop = if t >= max_iter {
            Some(StopReason::MaxIterations)
        } else if t - last_improvement >= stall_window || !check.metric.is_finite() {
            Some(StopReason::Stalled)
        } else {
            None
        };
        if let Some(stop) = stop {
            return GdOutcome {
                solution: best.0,
                iterations: t,
                stop,
                metric: best.1,
                history,
            };
        }
        x.iter_mut().zip(&g).for_each(|(xi, gi)| *xi -= gi);
        t += 1;
    }
}

/// Gradient descent for a `B` whose singular values lie in `[3/4, 5/4]`,
/// stopping once `‖Bx − y‖ ≤ target_eps·‖y‖`.
pub fn gd_well_conditioned(b: &DenseMatrix, y: &[f64], target_eps: f64, max_iter: usize) -> GdOutcome {
    let target = target_eps * norm(y);
    gradient_descent(b, y, vec![0.0; b.ncols()], max_iter, usize::MAX, |_, r, _| {
        let metric = norm(r);
        Check {
            metric,
            done: metric <= target,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_converges_in_one_step() {
        let b = DenseMatrix::identity(3, 3);
        let y = [1.0, -2.0, 0.5];
        let out = gd_well_conditioned(&b, &y, 1e-12, 10);
        assert_eq!(out.iterations, 1);
        assert_eq!(out.stop, StopReason::Converged);
        assert_eq!(out.solution, y.to_vec());
    }

    #[test]
    fn contraction_on_diagonal() {
        let b = DenseMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.8, 1.2]));
        let out = gd_well_conditioned(&b, &[0.8, 1.2], 1e-12, 200);
        assert_eq!(out.stop, StopReason::Converged);
        for w in out.history.windows(2) {
            if w[0] > 1e-14 {
                assert!(w[1] / w[0] <= 9.0 / 16.0 + 1e-12, "{w:?}");
            }
        }
        assert!((out.solution[0] - 1.0).abs() < 1e-11);
        assert!((out.solution[1] - 1.0).abs() < 1e-11);
    }

    #[test]
    fn zero_rhs_stops_immediately() {
        let b = DenseMatrix::identity(2, 2);
        let out = gd_well_conditioned(&b, &[0.0, 0.0], 1e-6, 10);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn cap_returns_best() {
        let b = DenseMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.8, 1.2]));
        let out = gd_well_conditioned(&b, &[0.8, 1.2], 1e-15, 3);
        assert_eq!(out.stop, StopReason::MaxIterations);
        assert_eq!(out.iterations, 3);
        assert_eq!(out.metric, out.history.iter().cloned().fold(f64::INFINITY, f64::min));
    }

    #[test]
    fn rectangular_least_squares() {
        // Orthonormal columns: the minimizer is Bᵀy, reached in one step.
        let mut b = DenseMatrix::zeros(3, 2);
        b[(0, 0)] = 1.0;
        b[(1, 1)] = 1.0;
        let y = [1.0, 2.0, 3.0];
        let out = gradient_descent(&b, &y, vec![0.0; 2], 5, 2, |_, r, _| Check {
            metric: norm(r),
            done: false,
        });
        assert_eq!(out.stop, StopReason::Stalled);
        assert_eq!(out.solution, vec![1.0, 2.0]);
    }
}
