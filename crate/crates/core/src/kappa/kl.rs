use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parametric KL families addressed by name in certificates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `θ = [C, λ]`, `β(v, t) = C·v·e^{−λt}`.
    Exponential,
    /// `θ = [C, p]`, `β(v, t) = C·v·(1 + t)^{−p}`.
    Rational,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Exponential => "exponential",
            Family::Rational => "rational",
        }
    }
}

/// A two-argument comparison bound `β(v, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum KLFunction {
    Grid(KlGrid),
    Exponential { c: f64, lambda: f64 },
    ParamFamily { family: Family, theta: Vec<f64> },
}

impl KLFunction {
    pub fn exponential(c: f64, lambda: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0 && lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Contract(format!("exponential bound needs C, λ > 0, got {c}, {lambda}")));
        }
        Ok(KLFunction::Exponential { c, lambda })
    }

    pub fn param(family: Family, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != 2 || theta.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::Contract(format!("{} family takes two positive parameters", family.name())));
        }
        Ok(KLFunction::ParamFamily { family, theta })
    }

    pub fn eval(&self, v: f64, t: f64) -> Result<f64> {
        if v.is_nan() || t.is_nan() || v < 0.0 || t < 0.0 {
            return Err(Error::Domain(format!("KL functions take v, t >= 0, got ({v}, {t})")));
        }
        Ok(self.at(v, t))
    }

    pub(crate) fn at(&self, v: f64, t: f64) -> f64 {
        match self {
            KLFunction::Grid(g) => g.at(v, t),
            KLFunction::Exponential { c, lambda } => c * v * (-lambda * t).exp(),
            KLFunction::ParamFamily { family, theta } => match family {
                Family::Exponential => theta[0] * v * (-theta[1] * t).exp(),
                Family::Rational => theta[0] * v * (1.0 + t).powf(-theta[1]),
            },
        }
    }

    /// KL axioms checked on the product grid `vs × ts`.
    pub fn axioms_on(&self, vs: &[f64], ts: &[f64]) -> KlAxioms {
        let vals: Vec<f64> = vs.iter().flat_map(|&v| ts.iter().map(move |&t| (v, t))).map(|(v, t)| self.at(v, t)).collect();
        KlAxioms::check(vs, ts, &vals)
    }
}

/// Outcome of the grid checks for the KL axioms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlAxioms {
    pub zero_at_zero: bool,
    pub increasing_in_v: bool,
    pub decreasing_in_t: bool,
    pub vanishing_tail: bool,
    pub finite: bool,
}

impl KlAxioms {
    /// Tail test: the last value in `t` is below `1e-3` of the first.
    pub const TAIL_RATIO: f64 = 1e-3;

    pub fn check(vs: &[f64], ts: &[f64], vals: &[f64]) -> Self {
        let m = ts.len();
        let at = |i: usize, j: usize| vals[i * m + j];
        let finite = vals.iter().all(|x| x.is_finite() && *x >= 0.0);
        let zero_at_zero = vs.iter().enumerate().filter(|(_, &v)| v == 0.0).all(|(i, _)| (0..m).all(|j| at(i, j) == 0.0));
        let increasing_in_v = (1..vs.len()).all(|i| (0..m).all(|j| at(i, j) > at(i - 1, j)));
        let positive_rows: Vec<usize> = (0..vs.len()).filter(|&i| vs[i] > 0.0).collect();
        let decreasing_in_t = positive_rows.iter().all(|&i| (1..m).all(|j| at(i, j) < at(i, j - 1)));
        let vanishing_tail = positive_rows.iter().all(|&i| at(i, m - 1) < at(i, 0) * Self::TAIL_RATIO);
        Self {
            zero_at_zero,
            increasing_in_v,
            decreasing_in_t,
            vanishing_tail,
            finite,
        }
    }

    pub fn all(&self) -> bool {
        self.zero_at_zero && self.increasing_in_v && self.decreasing_in_t && self.vanishing_tail && self.finite
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for (ok, name) in [
            (self.finite, "finite"),
            (self.zero_at_zero, "zero_at_zero"),
            (self.increasing_in_v, "increasing_in_v"),
            (self.decreasing_in_t, "decreasing_in_t"),
            (self.vanishing_tail, "vanishing_tail"),
        ] {
            if !ok {
                out.push(name);
            }
        }
        out
    }
}

/// KL bound tabulated on a `v × t` grid, row-major by `v`.
///
/// Evaluation is bilinear. Beyond the last `t` the last column is used;
/// beyond the last `v` the last two rows are extended linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlGrid {
    v_grid: Vec<f64>,
    t_grid: Vec<f64>,
    values: Vec<f64>,
}

impl KlGrid {
    pub fn new(v_grid: Vec<f64>, t_grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        for (name, g) in [("v", &v_grid), ("t", &t_grid)] {
            if g.len() < 2 || g[0] != 0.0 || g.windows(2).any(|w| !(w[1] > w[0])) || g.iter().any(|x| !x.is_finite()) {
                return Err(Error::Contract(format!(
                    "{name} grid needs at least two finite, strictly increasing points starting at 0"
                )));
            }
        }
        if values.len() != v_grid.len() * t_grid.len() {
            return Err(Error::Contract(format!(
                "KL grid has {} values, expected {}×{}",
                values.len(),
                v_grid.len(),
                t_grid.len()
            )));
        }
        Ok(Self { v_grid, t_grid, values })
    }

    pub fn v_grid(&self) -> &[f64] {
        &self.v_grid
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, vi: usize, ti: usize) -> f64 {
        self.values[vi * self.t_grid.len() + ti]
    }

    pub fn axioms(&self) -> KlAxioms {
        KlAxioms::check(&self.v_grid, &self.t_grid, &self.values)
    }

    fn at_row(&self, vi: usize, t: f64) -> f64 {
        let ts = &self.t_grid;
        let m = ts.len();
        if t >= ts[m - 1] {
            return self.value(vi, m - 1);
        }
        let j = ts.partition_point(|&x| x <= t).max(1);
        let w = (t - ts[j - 1]) / (ts[j] - ts[j - 1]);
        let (a, b) = (self.value(vi, j - 1), self.value(vi, j));
        a + (b - a) * w
    }

    pub(crate) fn at(&self, v: f64, t: f64) -> f64 {
        let vs = &self.v_grid;
        let n = vs.len();
        let i = if v >= vs[n - 1] { n - 1 } else { vs.partition_point(|&x| x <= v).max(1) };
        let w = (v - vs[i - 1]) / (vs[i] - vs[i - 1]);
        let (a, b) = (self.at_row(i - 1, t), self.at_row(i, t));
        a + (b - a) * w
    }
}
