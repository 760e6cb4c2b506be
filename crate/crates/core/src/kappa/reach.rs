use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tabulated reaching times: from initial distance at most `v`, the
/// trajectory stays within `eps` from time `T(v, eps)` on.
///
/// `+∞` marks an `(v, eps)` pair that is not certified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachCertificate {
    v_grid: Vec<f64>,
    eps_grid: Vec<f64>,
    /// Row-major, one row per `v`.
    times: Vec<f64>,
}

impl ReachCertificate {
    pub fn new(v_grid: Vec<f64>, eps_grid: Vec<f64>, times: Vec<f64>) -> Result<Self> {
        check_grid("v", &v_grid)?;
        check_grid("eps", &eps_grid)?;
        if eps_grid[0] <= 0.0 {
            return Err(Error::Contract("eps grid must be positive".into()));
        }
        if times.len() != v_grid.len() * eps_grid.len() {
            return Err(Error::Contract(format!(
                "reach table has {} entries, expected {}×{}",
                times.len(),
                v_grid.len(),
                eps_grid.len()
            )));
        }
        if let Some(t) = times.iter().find(|t| t.is_nan() || **t < 0.0) {
            return Err(Error::Contract(format!("reach times must be nonnegative, found {t}")));
        }
        Ok(Self { v_grid, eps_grid, times })
    }

    pub fn from_fn(v_grid: Vec<f64>, eps_grid: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let times = v_grid
            .iter()
            .flat_map(|&v| eps_grid.iter().map(move |&e| (v, e)))
            .map(|(v, e)| f(v, e))
            .collect();
        Self::new(v_grid, eps_grid, times)
    }

    pub fn v_grid(&self) -> &[f64] {
        &self.v_grid
    }

    pub fn eps_grid(&self) -> &[f64] {
        &self.eps_grid
    }

    pub fn time(&self, vi: usize, ei: usize) -> f64 {
        self.times[vi * self.eps_grid.len() + ei]
    }

    pub fn row(&self, vi: usize) -> &[f64] {
        let m = self.eps_grid.len();
        &self.times[vi * m..(vi + 1) * m]
    }

    /// Index of the smallest grid `v` at or above `v`.
    pub fn row_at_least(&self, v: f64) -> Option<usize> {
        let i = self.v_grid.partition_point(|&x| x < v);
        (i < self.v_grid.len()).then_some(i)
    }

    /// Raises entries so that `T` is nonincreasing in eps and nondecreasing in v.
    ///
    /// Both adjustments only increase times, so the result remains a valid
    /// certificate whenever the input was.
    pub fn envelope(&self) -> Self {
        let (n, m) = (self.v_grid.len(), self.eps_grid.len());
        let mut t = self.times.clone();
        for i in 0..n {
            for j in (0..m - 1).rev() {
                t[i * m + j] = t[i * m + j].max(t[i * m + j + 1]);
            }
        }
        for i in 1..n {
            for j in 0..m {
                t[i * m + j] = t[i * m + j].max(t[(i - 1) * m + j]);
            }
        }
        Self {
            v_grid: self.v_grid.clone(),
            eps_grid: self.eps_grid.clone(),
            times: t,
        }
    }

    pub fn is_monotone(&self) -> bool {
        self.envelope().times == self.times
    }
}

fn check_grid(name: &str, g: &[f64]) -> Result<()> {
    if g.is_empty() {
        return Err(Error::Contract(format!("{name} grid is empty")));
    }
    if g.iter().any(|x| !x.is_finite() || *x < 0.0) || g.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Contract(format!("{name} grid must be finite, nonnegative, strictly increasing")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_raises_to_monotone() {
        let r = ReachCertificate::new(vec![1.0, 2.0], vec![0.1, 0.2, 0.3], vec![2.0, 3.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(!r.is_monotone());
        let e = r.envelope();
        assert_eq!(e.row(0), &[3.0, 3.0, 0.0]);
        assert_eq!(e.row(1), &[3.0, 3.0, 1.0]);
        assert!(e.is_monotone());
    }

    #[test]
    fn row_lookup() {
        let r = ReachCertificate::from_fn(vec![0.0, 1.5, 3.0], vec![1.0], |_, _| 0.0).unwrap();
        assert_eq!(r.row_at_least(1.0), Some(1));
        assert_eq!(r.row_at_least(3.0), Some(2));
        assert_eq!(r.row_at_least(3.1), None);
    }

    #[test]
    fn infinite_entries_allowed() {
        let r = ReachCertificate::from_fn(vec![1.0], vec![1e-3, 1.0], |_, e| if e < 0.01 { f64::INFINITY } else { 0.0 });
        assert!(r.is_ok());
    }
}
