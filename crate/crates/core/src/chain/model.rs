use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `next = step(state, action, noise)`, writing into the output slice.
pub type StepFn = dyn Fn(&[f64], &[f64], &[f64], &mut [f64]) + Send + Sync;

#[derive(Clone)]
pub enum Transition {
    /// `F·s + G·a + w`.
    Linear { f: DMatrix<f64>, g: DMatrix<f64> },
    Custom(Arc<StepFn>),
}

impl fmt::Debug for Transition {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transition::Linear { f, g } => fm.debug_struct("Linear").field("f", f).field("g", g).finish(),
            Transition::Custom(_) => fm.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// Independent uniform components on `[−half_width, half_width]`.
    UniformBox { half_width: f64 },
}

impl NoiseSpec {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match *self {
            NoiseSpec::UniformBox { half_width } => {
                for w in out.iter_mut() {
                    let u: f64 = rng.random();
                    *w = half_width * (2.0 * u - 1.0);
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            NoiseSpec::UniformBox { half_width } => half_width == 0.0,
        }
    }
}

/// A controlled Markov chain; all randomness enters through the noise draw.
#[derive(Debug, Clone)]
pub struct ChainModel {
    pub dim: usize,
    pub action_dim: usize,
    pub transition: Transition,
    pub noise: NoiseSpec,
}

/// `s₊ = F·s + G·a + w` with `w` uniform on `[−wbar, wbar]ⁿ`.
pub fn linear_uniform_chain(f: DMatrix<f64>, g: DMatrix<f64>, wbar: f64) -> Result<ChainModel> {
    let n = f.nrows();
    if n == 0 || f.ncols() != n {
        return Err(Error::Config(format!("F must be square and nonempty, got {}×{}", f.nrows(), f.ncols())));
    }
    if g.nrows() != n || g.ncols() == 0 {
        return Err(Error::Config(format!("G must be {n}×m with m ≥ 1, got {}×{}", g.nrows(), g.ncols())));
    }
    if !(wbar.is_finite() && wbar >= 0.0) {
        return Err(Error::Config(format!("noise half-width must be finite and nonnegative, got {wbar}")));
    }
    if f.iter().chain(g.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Config("F and G must be finite".into()));
    }
    let m = g.ncols();
    Ok(ChainModel {
        dim: n,
        action_dim: m,
        transition: Transition::Linear { f, g },
        noise: NoiseSpec::UniformBox { half_width: wbar },
    })
}

impl ChainModel {
    pub fn custom(dim: usize, action_dim: usize, step: Arc<StepFn>, noise: NoiseSpec) -> Self {
        Self {
            dim,
            action_dim,
            transition: Transition::Custom(step),
            noise,
        }
    }

    pub fn step(&self, s: &[f64], a: &[f64], w: &[f64], out: &mut [f64]) {
        match &self.transition {
            Transition::Linear { f, g } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = w[i];
                    for (j, sj) in s.iter().enumerate() {
                        acc += f[(i, j)] * sj;
                    }
                    for (j, aj) in a.iter().enumerate() {
                        acc += g[(i, j)] * aj;
                    }
                    *o = acc;
                }
            }
            Transition::Custom(step) => step(s, a, w, out),
        }
    }

    pub fn wbar(&self) -> f64 {
        match self.noise {
            NoiseSpec::UniformBox { half_width } => half_width,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::rng::trajectory_rng;

    fn scalar(f: f64, g: f64, w: f64) -> ChainModel {
        linear_uniform_chain(DMatrix::from_element(1, 1, f), DMatrix::from_element(1, 1, g), w).unwrap()
    }

    #[test]
    fn closed_loop_contracts() {
        let m = scalar(1.2, 1.0, 0.0);
        let mut out = [0.0];
        m.step(&[2.0], &[-0.9 * 2.0], &[0.0], &mut out);
        assert!((out[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let r = linear_uniform_chain(DMatrix::zeros(2, 2), DMatrix::zeros(3, 1), 0.0);
        assert!(matches!(r, Err(Error::Config(_))));
        assert!(linear_uniform_chain(DMatrix::zeros(2, 3), DMatrix::zeros(2, 1), 0.0).is_err());
    }

    #[test]
    fn uniform_noise_mean_within_standard_error() {
        let wbar = 0.3;
        let spec = NoiseSpec::UniformBox { half_width: wbar };
        let mut rng = trajectory_rng(11, 0);
        let n = 100_000;
        let mut buf = [0.0];
        let mut sum = 0.0;
        for _ in 0..n {
            spec.draw(&mut rng, &mut buf);
            assert!(buf[0].abs() <= wbar);
            sum += buf[0];
        }
        let mean = sum / n as f64;
        assert!(mean.abs() <= 3.0 * wbar / (3.0 * n as f64).sqrt(), "mean {mean}");
    }
}
