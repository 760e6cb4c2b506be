use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nondecreasing, nonnegative piecewise-linear function on `[0, ∞)`.
///
/// The function interpolates linearly between knots and continues past the
/// last knot with a fixed `extension_slope`. This is the working
/// representation for class-K and K∞ functions as well as for the
/// nondecreasing auxiliary functions (overshoot certificates, smoothed
/// envelopes) that are not zero at zero.
///
/// With a positive extension slope the function is unbounded, so in this
/// representation "class K" and "class K∞" coincide: see [`is_strict`].
///
/// [`is_strict`]: PiecewiseKappa::is_strict
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KappaRepr", into = "KappaRepr")]
pub struct PiecewiseKappa {
    xs: Vec<f64>,
    ys: Vec<f64>,
    extension_slope: f64,
}

impl PiecewiseKappa {
    /// Builds a function from `(v, y)` knots.
    ///
    /// Knot abscissae must start at zero and be strictly increasing;
    /// ordinates must be nonnegative and nondecreasing.
    pub fn new(knots: Vec<(f64, f64)>, extension_slope: f64) -> Result<Self> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = knots.into_iter().unzip();
        Self::from_parts(xs, ys, extension_slope)
    }

    pub fn from_parts(xs: Vec<f64>, ys: Vec<f64>, extension_slope: f64) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::Contract(format!(
                "knot lists must be nonempty and of equal length (got {} and {})",
                xs.len(),
                ys.len()
            )));
        }
        if xs[0] != 0.0 {
            return Err(Error::Contract(format!("first knot must be at v = 0, got {}", xs[0])));
        }
        if !(extension_slope.is_finite() && extension_slope >= 0.0) {
            return Err(Error::Contract(format!(
                "extension slope must be finite and nonnegative, got {extension_slope}"
            )));
        }
        for (i, (&x, &y)) in xs.iter().zip(&ys).enumerate() {
            if !x.is_finite() || !y.is_finite() || y < 0.0 {
                return Err(Error::Contract(format!("knot {i} = ({x}, {y}) is not finite and nonnegative")));
            }
            if i > 0 {
                if x <= xs[i - 1] {
                    return Err(Error::Contract(format!("knot abscissae not strictly increasing at index {i}")));
                }
                if y < ys[i - 1] {
                    return Err(Error::Contract(format!("knot ordinates decrease at index {i}")));
                }
            }
        }
        Ok(Self { xs, ys, extension_slope })
    }

    /// Samples `f` at the given abscissae (which must start at zero).
    pub fn from_fn(xs: &[f64], f: impl Fn(f64) -> f64, extension_slope: f64) -> Result<Self> {
        let ys = xs.iter().map(|&x| f(x)).collect();
        Self::from_parts(xs.to_vec(), ys, extension_slope)
    }

    pub fn identity() -> Self {
        Self::linear(1.0)
    }

    /// `v ↦ slope·v`.
    pub fn linear(slope: f64) -> Self {
        Self {
            xs: vec![0.0, 1.0],
            ys: vec![0.0, slope],
            extension_slope: slope,
        }
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn extension_slope(&self) -> f64 {
        self.extension_slope
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn last_knot(&self) -> (f64, f64) {
        let n = self.xs.len() - 1;
        (self.xs[n], self.ys[n])
    }

    /// Segment slopes followed by the extension slope.
    pub fn slopes(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect();
        out.push(self.extension_slope);
        out
    }

    /// Zero at zero, strictly increasing and unbounded (class K∞).
    pub fn is_strict(&self) -> bool {
        self.ys[0] == 0.0 && self.extension_slope > 0.0 && self.ys.windows(2).all(|w| w[1] > w[0])
    }

    pub fn is_unbounded(&self) -> bool {
        self.extension_slope > 0.0
    }

    /// Slopes nondecreasing within a relative tolerance.
    pub fn is_convex(&self, rel_tol: f64) -> bool {
        self.slopes()
            .windows(2)
            .all(|w| w[1] >= w[0] - rel_tol * w[0].abs().max(w[1].abs()))
    }

    /// Slopes nonincreasing within a relative tolerance.
    pub fn is_concave(&self, rel_tol: f64) -> bool {
        self.slopes()
            .windows(2)
            .all(|w| w[1] <= w[0] + rel_tol * w[0].abs().max(w[1].abs()))
    }

    pub fn eval(&self, v: f64) -> Result<f64> {
        if v.is_nan() || v < 0.0 {
            return Err(Error::Domain(format!("comparison functions take v >= 0, got {v}")));
        }
        Ok(self.at(v))
    }

    /// Evaluation without the domain check; negative inputs are clamped to zero.
    pub(crate) fn at(&self, v: f64) -> f64 {
        let v = v.max(0.0);
        let i = self.xs.partition_point(|&x| x <= v);
        if i == self.xs.len() {
            let (x, y) = self.last_knot();
            return y + self.extension_slope * (v - x);
        }
        // xs[0] = 0 <= v, so i >= 1
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let (y0, y1) = (self.ys[i - 1], self.ys[i]);
        y0 + (y1 - y0) * ((v - x0) / (x1 - x0))
    }

    /// Inverse of a strict function.
    pub fn invert(&self, y: f64) -> Result<f64> {
        if !self.is_strict() {
            return Err(Error::Contract("invert requires a strictly increasing, zero-at-zero function".into()));
        }
        self.upper_inverse(y)
    }

    /// Generalized inverse `sup { v : f(v) <= y }` of a nondecreasing function.
    ///
    /// Agrees with [`invert`](Self::invert) on strict functions. On a flat
    /// stretch at level `y` it returns the right end of the stretch, which
    /// is the convention used for the zero set of overshoot certificates.
    pub fn upper_inverse(&self, y: f64) -> Result<f64> {
        if y.is_nan() || y < self.ys[0] {
            return Err(Error::Domain(format!("value {y} is below f(0) = {}", self.ys[0])));
        }
        let j = self.ys.partition_point(|&yy| yy <= y);
        if j == self.ys.len() {
            let (x, yl) = self.last_knot();
            if self.extension_slope <= 0.0 {
                return Err(Error::Domain(format!(
                    "bounded function never exceeds {yl}; inverse of {y} is unbounded"
                )));
            }
            return Ok(x + (y - yl) / self.extension_slope);
        }
        let (x0, x1) = (self.xs[j - 1], self.xs[j]);
        let (y0, y1) = (self.ys[j - 1], self.ys[j]);
        Ok(x0 + (x1 - x0) * ((y - y0) / (y1 - y0)))
    }

    /// The inverse function of a strict `f`, as a knot swap.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_strict() {
            return Err(Error::Contract("inverse requires a strict function".into()));
        }
        Self::from_parts(self.ys.clone(), self.xs.clone(), 1.0 / self.extension_slope)
    }

    /// `v ↦ factor·f(v)` for `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::Contract(format!("scale factor must be positive, got {factor}")));
        }
        Self::from_parts(
            self.xs.clone(),
            self.ys.iter().map(|y| y * factor).collect(),
            self.extension_slope * factor,
        )
    }

    /// `f ∘ g`, sampled on g's knots refined by the preimages of f's knots.
    ///
    /// The refinement makes the result exact: between consecutive output
    /// knots both `g` and `f` restricted to `g`'s image are affine.
    pub fn compose(f: &Self, g: &Self) -> Result<Self> {
        let mut vs: Vec<f64> = g.xs.clone();
        for (seg, (xw, yw)) in g.xs.windows(2).zip(g.ys.windows(2)).enumerate() {
            let _ = seg;
            if yw[1] <= yw[0] {
                continue;
            }
            let lo = f.xs.partition_point(|&u| u <= yw[0]);
            for &u in f.xs[lo..].iter().take_while(|&&u| u < yw[1]) {
                vs.push(xw[0] + (xw[1] - xw[0]) * ((u - yw[0]) / (yw[1] - yw[0])));
            }
        }
        let (gx, gy) = g.last_knot();
        if g.extension_slope > 0.0 {
            let lo = f.xs.partition_point(|&u| u <= gy);
            vs.extend(f.xs[lo..].iter().map(|&u| gx + (u - gy) / g.extension_slope));
        }
        vs.sort_by(f64::total_cmp);
        vs.dedup();
        let ys: Vec<f64> = vs.iter().map(|&v| f.at(g.at(v))).collect();
        // rounding in the preimages can produce one-ulp dips; the true composition is monotone
        let ys = running_max(ys);
        let tail_slope = if g.extension_slope > 0.0 {
            f.extension_slope * g.extension_slope
        } else {
            0.0
        };
        Self::from_parts(vs, ys, tail_slope)
    }

    /// Pointwise maximum deviation from `other` over the union of both knot sets.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.xs
            .iter()
            .chain(other.xs.iter())
            .map(|&v| (self.at(v) - other.at(v)).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn running_max(mut ys: Vec<f64>) -> Vec<f64> {
    for i in 1..ys.len() {
        if ys[i] < ys[i - 1] {
            ys[i] = ys[i - 1];
        }
    }
    ys
}

/// The unit ramp `½(1 + |τ| − |τ − 1|)`: 0 below 0, τ on [0, 1], 1 above.
pub fn chi(tau: f64) -> f64 {
    0.5 * (1.0 + tau.abs() - (tau - 1.0).abs())
}

#[derive(Serialize, Deserialize)]
struct KappaFlags {
    strict: bool,
    kinf: bool,
}

/// Flat serialized form: header (flags) plus interleaved `[v0, y0, v1, y1, …]`.
#[derive(Serialize, Deserialize)]
struct KappaRepr {
    kind: String,
    flags: KappaFlags,
    extension_slope: f64,
    knots: Vec<f64>,
}

impl From<PiecewiseKappa> for KappaRepr {
    fn from(k: PiecewiseKappa) -> Self {
        let strict = k.is_strict();
        KappaRepr {
            kind: "piecewise_kappa".into(),
            flags: KappaFlags { strict, kinf: strict },
            extension_slope: k.extension_slope,
            knots: k.xs.iter().zip(&k.ys).flat_map(|(&x, &y)| [x, y]).collect(),
        }
    }
}

impl TryFrom<KappaRepr> for PiecewiseKappa {
    type Error = Error;

    fn try_from(r: KappaRepr) -> Result<Self> {
        if r.kind != "piecewise_kappa" || !r.knots.len().is_multiple_of(2) {
            return Err(Error::Contract(format!("not a piecewise_kappa record (kind {})", r.kind)));
        }
        let (xs, ys) = r.knots.chunks(2).map(|c| (c[0], c[1])).unzip();
        let k = PiecewiseKappa::from_parts(xs, ys, r.extension_slope)?;
        if r.flags.strict && !k.is_strict() {
            return Err(Error::Contract("record flagged strict but knots are not".into()));
        }
        Ok(k)
    }
}
