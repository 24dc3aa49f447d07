//! Weight functions of exponential growth rate and weighted norms.
//!
//! A weight `θ : ℝ^d → (0, ∞)` of growth rate `η ≥ 0` satisfies
//! `θ(x+y) ≤ C_θ θ(x) e^{η|y|}`. The four named families
//!
//! ```text
//! θ₁(x) = exp(-μ|x|)            θ₂(x) = cosh(μ|x|)
//! θ₃(x) = exp(-μ√(|x|²+1))      θ₄(x) = cosh(μ√(|x|²+1))
//! ```
//!
//! are radial with `η = |μ|` and `C_θ = 1`; μ may be negative, so both
//! exponentially decaying and exponentially growing weights are covered. The
//! axioms (positivity, growth envelope, translation/rotation regularity,
//! gradient bound, exponential lower envelope) are exposed as executable
//! sampling checks with a fixed seed, and the weighted `L^p` / sup norms act
//! on [`GridFunction`] data.

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    ExpAbs,
    CoshAbs,
    ExpSmooth,
    CoshSmooth,
    Unit,
    Custom,
}

/// A weight function with its declared growth data `(η, C_θ)`.
type CustomWeight = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct WeightFunction {
    pub kind: WeightKind,
    pub mu: f64,
    pub eta: f64,
    pub c_theta: f64,
    custom: Option<CustomWeight>,
    custom_radial: bool,
}

impl std::fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeightFunction")
            .field("kind", &self.kind)
            .field("mu", &self.mu)
            .field("eta", &self.eta)
            .field("c_theta", &self.c_theta)
            .finish()
    }
}

impl WeightFunction {
    fn named(kind: WeightKind, mu: f64) -> Self {
        WeightFunction { kind, mu, eta: mu.abs(), c_theta: 1.0, custom: None, custom_radial: false }
    }

    /// θ₁(x) = exp(-μ|x|)
    pub fn exp_abs(mu: f64) -> Self {
        Self::named(WeightKind::ExpAbs, mu)
    }
    /// θ₂(x) = cosh(μ|x|)
    pub fn cosh_abs(mu: f64) -> Self {
        Self::named(WeightKind::CoshAbs, mu)
    }
    /// θ₃(x) = exp(-μ√(|x|²+1))
    pub fn exp_smooth(mu: f64) -> Self {
        Self::named(WeightKind::ExpSmooth, mu)
    }
    /// θ₄(x) = cosh(μ√(|x|²+1))
    pub fn cosh_smooth(mu: f64) -> Self {
        Self::named(WeightKind::CoshSmooth, mu)
    }
    /// θ ≡ 1
    pub fn unit() -> Self {
        WeightFunction {
            kind: WeightKind::Unit,
            mu: 0.0,
            eta: 0.0,
            c_theta: 1.0,
            custom: None,
            custom_radial: false,
        }
    }

    /// Pass-through hook for a user weight with declared `(η, C_θ)`.
    pub fn custom<F: Fn(&[f64]) -> f64 + Send + Sync + 'static>(
        f: F,
        eta: f64,
        c_theta: f64,
        radial: bool,
    ) -> Self {
        WeightFunction {
            kind: WeightKind::Custom,
            mu: 0.0,
            eta,
            c_theta,
            custom: Some(Arc::new(f)),
            custom_radial: radial,
        }
    }

    pub fn is_radial(&self) -> bool {
        match self.kind {
            WeightKind::Custom => self.custom_radial,
            _ => true,
        }
    }

    /// Evaluates θ(x); strictly positive for the named families (W1).
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.eval_radius_or(r, x)
    }

    /// Radial profile φ(r) for radial weights (equals `eval` on |x| = r).
    pub fn eval_radius(&self, r: f64) -> f64 {
        debug_assert!(self.is_radial());
        self.eval_radius_or(r, &[])
    }

    fn eval_radius_or(&self, r: f64, x: &[f64]) -> f64 {
        match self.kind {
            WeightKind::ExpAbs => (-self.mu * r).exp(),
            WeightKind::CoshAbs => (self.mu * r).cosh(),
            WeightKind::ExpSmooth => (-self.mu * (r * r + 1.0).sqrt()).exp(),
            WeightKind::CoshSmooth => (self.mu * (r * r + 1.0).sqrt()).cosh(),
            WeightKind::Unit => 1.0,
            WeightKind::Custom => (self.custom.as_ref().expect("custom weight"))(x),
        }
    }

    /// The (W7) lower envelope `θ(x) ≥ C̃_θ e^{ν|x|}` with per-family
    /// constants; `None` for custom weights (caller knows their envelope).
    pub fn lower_envelope(&self) -> Option<(f64, f64)> {
        let mu = self.mu;
        match self.kind {
            WeightKind::ExpAbs => Some((1.0, -mu)),
            WeightKind::CoshAbs => Some((0.5, mu.abs())),
            WeightKind::ExpSmooth => {
                if mu >= 0.0 {
                    Some(((-mu).exp(), -mu))
                } else {
                    Some((1.0, mu.abs()))
                }
            }
            WeightKind::CoshSmooth => Some((0.5, mu.abs())),
            WeightKind::Unit => Some((1.0, 0.0)),
            WeightKind::Custom => None,
        }
    }
}

fn sample_point(rng: &mut ChaCha8Rng, d: usize, radius: f64) -> Vec<f64> {
    (0..d).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * radius).collect()
}

/// Result of the (W2) sampling check.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GrowthEnvelopeCheck {
    /// max over samples of θ(x+y) / (θ(x) e^{η|y|}) — the observed C_θ
    pub c_observed: f64,
    /// `c_observed / C_θ`; at most `1 + 1e-9` for the named families
    pub max_violation: f64,
}

/// Samples the growth envelope (W2) over random pairs `(x, y)`.
pub fn check_growth_envelope(
    w: &WeightFunction,
    d: usize,
    sample_count: usize,
    seed: u64,
) -> GrowthEnvelopeCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c_observed = 0.0f64;
    for k in 0..sample_count.max(1) {
        // mix length scales so both the near field and the far tail are hit
        let rx = [0.5, 2.0, 8.0, 20.0][k % 4];
        let ry = [0.25, 1.0, 4.0][k % 3];
        let x = sample_point(&mut rng, d, rx);
        let y = sample_point(&mut rng, d, ry);
        let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ratio = w.eval(&xy) / (w.eval(&x) * (w.eta * ny).exp());
        c_observed = c_observed.max(ratio);
    }
    GrowthEnvelopeCheck { c_observed, max_violation: c_observed / w.c_theta }
}

/// Result of the (W4)/(W6) sampling check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TranslationRegularityCheck {
    /// for each requested |ψ|: sup over samples of |θ(x+ψ) - θ(x)| / θ(x)
    pub w4_ratios: Vec<f64>,
    /// sup over samples of |∇θ(x)| / θ(x) by central differences, for the
    /// C¹ families (`exp_smooth`, `cosh_smooth`, `unit`); `None` otherwise.
    /// Bounded by |μ| for the named smooth families (W6).
    pub w6_max_ratio: Option<f64>,
}

/// Samples the translation regularity (W4) for a decreasing sequence of
/// shift magnitudes, and the gradient bound (W6) for the C¹ families.
pub fn check_translation_regularity(
    w: &WeightFunction,
    d: usize,
    psi_magnitudes: &[f64],
    seed: u64,
) -> TranslationRegularityCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = 600usize;
    let points: Vec<Vec<f64>> = (0..samples)
        .map(|k| sample_point(&mut rng, d, [0.5, 3.0, 10.0, 25.0][k % 4]))
        .collect();
    let dirs: Vec<Vec<f64>> = (0..16)
        .map(|_| {
            let v = sample_point(&mut rng, d, 1.0);
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
            v.into_iter().map(|a| a / n).collect()
        })
        .collect();
    let mut w4_ratios = Vec::with_capacity(psi_magnitudes.len());
    for &mag in psi_magnitudes {
        let mut sup = 0.0f64;
        for x in &points {
            for dir in &dirs {
                let shifted: Vec<f64> =
                    x.iter().zip(dir).map(|(a, u)| a + mag * u).collect();
                let base = w.eval(x);
                sup = sup.max((w.eval(&shifted) - base).abs() / base);
            }
        }
        w4_ratios.push(sup);
    }
    let smooth = matches!(
        w.kind,
        WeightKind::ExpSmooth | WeightKind::CoshSmooth | WeightKind::Unit
    );
    let w6_max_ratio = smooth.then(|| {
        let h = 1e-6;
        let mut sup = 0.0f64;
        for x in &points {
            let mut grad_sq = 0.0;
            for k in 0..d {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                let g = (w.eval(&xp) - w.eval(&xm)) / (2.0 * h);
                grad_sq += g * g;
            }
            sup = sup.max(grad_sq.sqrt() / w.eval(x));
        }
        sup
    });
    TranslationRegularityCheck { w4_ratios, w6_max_ratio }
}

/// Max over samples of |θ(e^{tS}x) - θ(x)| / θ(x); ≤ 1e-12 for radial
/// weights (W3/W5), O(1) for genuinely non-radial ones.
pub fn check_rotation_invariance(
    w: &WeightFunction,
    s: &Array2<f64>,
    t_samples: &[f64],
    seed: u64,
) -> Result<f64> {
    let d = s.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> =
        (0..200).map(|k| sample_point(&mut rng, d, [1.0, 5.0, 15.0][k % 3])).collect();
    let mut sup = 0.0f64;
    for &t in t_samples {
        let rot = crate::linalg::rotation(s, t)?;
        for x in &points {
            let mut rx = vec![0.0; d];
            for i in 0..d {
                for j in 0..d {
                    rx[i] += rot[[i, j]] * x[j];
                }
            }
            let base = w.eval(x);
            sup = sup.max((w.eval(&rx) - base).abs() / base);
        }
    }
    Ok(sup)
}

/// A weighted norm value with the boundary mass it saw.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WeightedNorm {
    pub value: f64,
    /// max of θ|v| over boundary nodes relative to the grid max; above 1e-6
    /// the grid is suspected of truncating the essential support
    pub boundary_fraction: f64,
}

impl WeightedNorm {
    pub fn tail_warning(&self) -> bool {
        self.boundary_fraction > 1e-6
    }
}

fn weighted_samples(v: &GridFunction, w: &WeightFunction) -> Result<(Vec<f64>, f64)> {
    if v.values.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let d = v.spec.dim();
    let count = v.spec.node_count();
    let mut x = vec![0.0; d];
    let mut theta_v = vec![0.0f64; count];
    let mut boundary_max = 0.0f64;
    let mut multi = vec![0usize; d];
    for node in 0..count {
        v.spec.node(node, &mut x);
        let modulus = v.value(node).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let tv = w.eval(&x) * modulus;
        theta_v[node] = tv;
        v.spec.multi_index(node, &mut multi);
        let on_boundary =
            multi.iter().zip(&v.spec.axes).any(|(&i, ax)| i == 0 || i == ax.count - 1);
        if on_boundary {
            boundary_max = boundary_max.max(tv);
        }
    }
    Ok((theta_v, boundary_max))
}

/// `(∫ |θ v|^p)^{1/p}` by the composite trapezoid rule on the grid.
///
/// The grid must cover the essential support of `θ·v`; the returned
/// [`WeightedNorm::boundary_fraction`] flags visible truncation.
pub fn weighted_lp_norm(v: &GridFunction, w: &WeightFunction, p: f64) -> Result<WeightedNorm> {
    if !(p >= 1.0) {
        return Err(Error::ConfigInvalid(format!("p must be >= 1, got {p}")));
    }
    let (theta_v, boundary_max) = weighted_samples(v, w)?;
    let mut acc = 0.0f64;
    for (node, tv) in theta_v.iter().enumerate() {
        acc += v.spec.trapezoid_weight(node) * tv.powf(p);
    }
    let value = acc.powf(1.0 / p);
    let peak = theta_v.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
    Ok(WeightedNorm { value, boundary_fraction: boundary_max / peak })
}

/// `sup_x |θ(x) v(x)|` — exact max over the grid nodes.
pub fn weighted_sup_norm(v: &GridFunction, w: &WeightFunction) -> Result<WeightedNorm> {
    let (theta_v, boundary_max) = weighted_samples(v, w)?;
    let value = theta_v.iter().cloned().fold(0.0f64, f64::max);
    Ok(WeightedNorm { value, boundary_fraction: boundary_max / value.max(1e-300) })
}
