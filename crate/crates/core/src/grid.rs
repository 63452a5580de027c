use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `t_i = t0 + i h`, `i = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t0: f64,
    t1: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, steps: usize) -> Result<Self> {
        if !t0.is_finite() || !t1.is_finite() {
            return Err(Error::InvalidGrid(format!("non-finite bounds [{t0}, {t1}]")));
        }
        if t1 <= t0 {
            return Err(Error::InvalidGrid(format!("t1 = {t1} must exceed t0 = {t0}")));
        }
        if steps < 2 {
            return Err(Error::InvalidGrid(format!("steps = {steps}, need at least 2")));
        }
        Ok(TimeGrid { t0, t1, steps })
    }

    /// Grid with spacing as close as possible to `h` covering `[t0, t1]`.
    pub fn with_spacing(t0: f64, t1: f64, h: f64) -> Result<Self> {
        let steps = ((t1 - t0) / h).round();
        if !steps.is_finite() || steps < 0.0 {
            return Err(Error::InvalidGrid(format!("spacing {h} on [{t0}, {t1}]")));
        }
        Self::new(t0, t1, steps as usize)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.steps {
            self.t1
        } else {
            self.t0 + i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    /// Same interval, `factor` times as many steps.
    pub fn refined(&self, factor: usize) -> Self {
        TimeGrid { steps: self.steps * factor.max(1), ..*self }
    }

    pub fn check_len(&self, found: usize) -> Result<()> {
        if found != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), found });
        }
        Ok(())
    }
}

/// Cumulative composite trapezoid of node samples, starting at 0.
pub fn cumulative_trapezoid(h: f64, samples: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in samples.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out.truncate(samples.len());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(0.0, 1.0, 1).is_err());
        assert!(TimeGrid::new(1.0, 1.0, 10).is_err());
        assert!(TimeGrid::new(0.0, f64::NAN, 10).is_err());
        let g = TimeGrid::new(0.0, 2.0, 4).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.nodes().collect::<Vec<_>>(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(g.refined(2).steps(), 8);
    }

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let g = TimeGrid::new(0.0, 3.0, 6).unwrap();
        let f: Vec<f64> = g.nodes().map(|t| 2.0 * t + 1.0).collect();
        let acc = cumulative_trapezoid(g.h(), &f);
        for (t, a) in g.nodes().zip(acc) {
            assert!((a - (t * t + t)).abs() < 1e-14);
        }
    }
}
