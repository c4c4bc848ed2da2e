use crate::error::{NegfError, Result};

/// Uniform grid `t_k = kΔt`, `k = 0..=n`, with `nΔt = T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || !(t_max >= 0.0 && t_max.is_finite()) {
            return Err(NegfError::GridMismatch(format!("need dt > 0 and T >= 0, got dt = {dt}, T = {t_max}")));
        }
        let steps = t_max / dt;
        let n = steps.round();
        if (steps - n).abs() > 1e-9 * steps.max(1.0) {
            return Err(NegfError::GridMismatch(format!("T/dt = {steps} is not an integer")));
        }
        Ok(Self { dt, n: n as usize })
    }

    pub fn from_steps(n: usize, dt: f64) -> Self {
        Self { dt, n }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Index of the last point.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_max(&self) -> f64 {
        self.n as f64 * self.dt
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n).map(|k| self.t(k)).collect()
    }

    /// Trapezoid weight of point `m` for an integral over `[t_lo, t_hi]`.
    pub fn weight(&self, lo: usize, hi: usize, m: usize) -> f64 {
        if lo == hi || m < lo || m > hi {
            0.0
        } else if m == lo || m == hi {
            0.5 * self.dt
        } else {
            self.dt
        }
    }

    /// Full-horizon weights `w_0 = w_n = Δt/2`, otherwise `Δt`.
    pub fn weights(&self) -> Vec<f64> {
        (0..=self.n).map(|m| self.weight(0, self.n, m)).collect()
    }

    /// Grid with half the step over the same horizon.
    pub fn refined(&self) -> Self {
        Self {
            dt: 0.5 * self.dt,
            n: 2 * self.n,
        }
    }

    pub fn same_as(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(NegfError::GridMismatch(format!(
                "grid (n = {}, dt = {}) vs (n = {}, dt = {})",
                self.n, self.dt, other.n, other.dt
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_horizon() {
        let g = TimeGrid::new(3.0, 0.025).unwrap();
        assert_eq!(g.len(), 121);
        assert!((g.weights().iter().sum::<f64>() - 3.0).abs() < 1e-12);
        assert_eq!(g.refined().len(), 241);
    }

    #[test]
    fn non_integral_horizon_is_rejected() {
        assert!(TimeGrid::new(1.0, 0.3).is_err());
        assert!(TimeGrid::new(1.0, 0.0).is_err());
    }
}
