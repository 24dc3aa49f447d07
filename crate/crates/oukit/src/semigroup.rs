//! The semigroup `T(t)`, the diffusion factor `G(t,0)`, the resolvent
//! `R(λ)`, a finite-difference application of the generator, and the growth
//! pair `(M, ω)`.
//!
//! For `t > 0` the semigroup acts by kernel convolution,
//!
//! ```text
//! [T(t)v](x) = ∫ H(x,ξ,t) v(ξ) dξ = ∫ K(ψ,t) v(e^{tS}x - ψ) dψ,
//! ```
//!
//! and `T(0) = I` identically (no quadrature path taken). The diffusion
//! factor drops the rotation, `[G(t,0)v](y) = ∫ K(ψ,t) v(y-ψ) dψ`, so that
//! `[T(t)v](x) = [G(t,0)v](e^{tS}x)`. The resolvent is the Laplace transform
//!
//! ```text
//! R(λ)g = ∫₀^∞ e^{-λt} T(t) g dt,      Re λ > ω,
//! ```
//!
//! integrated after the substitution `t = s²` (which absorbs the `t^{-1/2}`
//! short-time growth of the derivative bounds) on geometrically refined
//! Gauss-Legendre panels, with the tail beyond `T` bounded analytically
//! through `C4`. Spatial derivatives of semigroup and resolvent output come
//! from the differentiated kernels `Kⁱ` inside the integral (the route the
//! operator bounds control directly).

use crate::dense::matvec;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::kernel::{
    bound_c, nodes_for_loose, truncation_radius, BoundExtra, KernelTable,
    MatrixQuad, QUAD_TOL,
};
use crate::linalg::{spectral_quantities, OUSystem, SpectralQuantities};
use crate::quad::{geometric_panels, GaussLegendre};
use crate::weights::{weighted_lp_norm, weighted_sup_norm, WeightFunction};
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

// ---------------------------------------------------------------------------
// input fields
// ---------------------------------------------------------------------------

/// Data the semigroup can act on: sampled either from a grid (multilinear
/// interpolation, zero outside with the truncation recorded) or analytically.
pub trait InputField: Sync {
    fn components(&self) -> usize;
    fn dim(&self) -> usize;
    /// Writes the value at `x`; returns `false` when `x` fell outside the
    /// field's represented region (the value is then zero).
    fn sample(&self, x: &[f64], out: &mut [Complex64]) -> bool;
    /// Bounding box outside which the field is (treated as) zero.
    fn support(&self) -> Option<Vec<(f64, f64)>> {
        None
    }
}

impl InputField for GridFunction {
    fn components(&self) -> usize {
        self.n
    }
    fn dim(&self) -> usize {
        self.spec.dim()
    }
    fn sample(&self, x: &[f64], out: &mut [Complex64]) -> bool {
        self.interpolate(x, out)
    }
    fn support(&self) -> Option<Vec<(f64, f64)>> {
        Some(self.spec.axes.iter().map(|ax| (ax.min, ax.max)).collect())
    }
}

/// A closure-backed field, optionally with a declared support box.
pub struct AnalyticField<F> {
    f: F,
    n: usize,
    d: usize,
    bounds: Option<Vec<(f64, f64)>>,
}

impl<F: Fn(&[f64], &mut [Complex64]) + Sync> AnalyticField<F> {
    pub fn new(d: usize, n: usize, f: F) -> Self {
        AnalyticField { f, n, d, bounds: None }
    }

    /// Declares the box outside which the field is negligible; convolution
    /// boxes are clipped against it.
    pub fn with_support(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = Some(bounds);
        self
    }
}

impl<F: Fn(&[f64], &mut [Complex64]) + Sync> InputField for AnalyticField<F> {
    fn components(&self) -> usize {
        self.n
    }
    fn dim(&self) -> usize {
        self.d
    }
    fn sample(&self, x: &[f64], out: &mut [Complex64]) -> bool {
        (self.f)(x, out);
        true
    }
    fn support(&self) -> Option<Vec<(f64, f64)>> {
        self.bounds.clone()
    }
}

/// Which norm a probe/check works in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormMode {
    Lp(f64),
    Sup,
}

impl NormMode {
    /// The index entering the bound constants (`p = 1` in sup mode).
    pub fn bound_index(&self) -> f64 {
        match self {
            NormMode::Lp(p) => *p,
            NormMode::Sup => 1.0,
        }
    }

    pub fn norm(&self, v: &GridFunction, w: &WeightFunction) -> Result<f64> {
        Ok(match self {
            NormMode::Lp(p) => weighted_lp_norm(v, w, *p)?.value,
            NormMode::Sup => weighted_sup_norm(v, w)?.value,
        })
    }
}

/// Quadrature knobs for the convolution routines.
#[derive(Clone, Copy, Debug)]
pub struct QuadSettings {
    /// relative target for the spatial quadrature
    pub rel_tol: f64,
    /// smallest length scale on which the input data varies
    pub field_scale: f64,
    /// re-run with a refined rule and compare (doubles the work)
    pub check: bool,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings { rel_tol: QUAD_TOL, field_scale: 1.0, check: false }
    }
}

/// A grid field produced by quadrature, with its error bookkeeping.
#[derive(Clone, Debug)]
pub struct FieldResult {
    pub field: GridFunction,
    /// refinement disagreement (0 when `check` was off)
    pub est_error: f64,
    /// kernel mass that sampled the input outside its represented region
    pub tail_fraction: f64,
}

// ---------------------------------------------------------------------------
// the shared convolution core
// ---------------------------------------------------------------------------

struct ConvOut {
    /// node-major values, `n` components per node
    values: Vec<Complex64>,
    /// derivative fields (one per direction), same layout
    derivs: Vec<Vec<Complex64>>,
    /// second-derivative fields, pairs (i,j) with i <= j, same layout
    derivs2: Vec<Vec<Complex64>>,
    tail_fraction: f64,
}

/// Index of the (i, j), i <= j, pair in the packed second-derivative list.
fn pair_index(d: usize, i: usize, j: usize) -> usize {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    // row-major upper triangle
    lo * d - lo * (lo + 1) / 2 + hi
}

/// Evaluates `u(x) = ∫ K(ψ,t) v(c(x) - ψ) dψ` at every point of `points`
/// (flattened, `d` coordinates each), where `c(x) = e^{tS}x` (semigroup) or
/// `c(x) = x` (diffusion factor). Optionally accumulates the
/// `Kⁱ`-differentiated fields in the same sweep.
#[allow(clippy::too_many_arguments)]
fn convolve_points<F: InputField + ?Sized>(
    sys: &OUSystem,
    t: f64,
    field: &F,
    points: &[f64],
    rotate: bool,
    with_derivs: bool,
    with_second: bool,
    nodes_bump: usize,
    quad: &QuadSettings,
) -> Result<ConvOut> {
    let d = sys.dim();
    let n = sys.size();
    if field.dim() != d || field.components() != n {
        return Err(Error::ShapeMismatch(format!(
            "field is {}-dimensional with {} components, system needs ({d}, {n})",
            field.dim(),
            field.components()
        )));
    }
    let table = KernelTable::new(sys, t)?;
    let sq = spectral_quantities(sys, 0.0, 1.0)?;
    let radius = truncation_radius(&sq, t, 0.0, (quad.rel_tol * 1e-3).max(1e-15), 1.0);
    let sigma = table.narrow_scale().min(quad.field_scale);
    let support = field.support();

    let count = points.len() / d;
    let nderiv = if with_derivs { d } else { 0 };
    let npairs = if with_second { d * (d + 1) / 2 } else { 0 };
    let stride = n * (1 + nderiv + npairs);
    let mut packed = vec![Complex64::ZERO; count * stride];
    let mut tails = vec![0.0f64; count];

    // rotated basis vectors for the derivative kernels
    let mut rot_cols = vec![0.0f64; d * d];
    for i in 0..d {
        let mut col = vec![0.0; d];
        table.rot_col(i, &mut col);
        rot_cols[i * d..(i + 1) * d].copy_from_slice(&col);
    }
    // node counts follow the box that actually gets integrated: the kernel
    // ball clipped against the data's support (otherwise long Laplace times
    // would inflate the rule quadratically for nothing)
    let mut count_width = 2.0 * radius;
    if let Some(sup) = &support {
        let extent = sup.iter().map(|(lo, hi)| hi - lo).fold(0.0f64, f64::max);
        count_width = count_width.min(extent);
    }
    let reference = GaussLegendre::new(nodes_for_loose(count_width, sigma) + nodes_bump);

    packed
        .par_chunks_mut(stride)
        .zip(tails.par_iter_mut())
        .enumerate()
        .for_each(|(node, (out, tail))| {
            let x = &points[node * d..(node + 1) * d];
            let mut center = vec![0.0; d];
            if rotate {
                table.rotate(x, &mut center);
            } else {
                center.copy_from_slice(x);
            }
            // clip the ψ box against the field support shifted to the center
            let mut lo = vec![-radius; d];
            let mut hi = vec![radius; d];
            if let Some(sup) = &support {
                for k in 0..d {
                    lo[k] = lo[k].max(center[k] - sup[k].1);
                    hi[k] = hi[k].min(center[k] - sup[k].0);
                }
                if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
                    return; // kernel never meets the data
                }
            }
            let axes: Vec<Vec<(f64, f64)>> =
                (0..d).map(|k| reference.mapped(lo[k], hi[k])).collect();
            let mut diag = vec![Complex64::ZERO; n];
            let mut sample = vec![Complex64::ZERO; n];
            let mut transformed = vec![Complex64::ZERO; n];
            let mut y = vec![0.0; d];
            let mut mass = 0.0f64;
            let mut missed = 0.0f64;
            crate::quad::for_each_node(&axes, |psi, w| {
                let mut r2 = 0.0;
                for k in 0..d {
                    y[k] = center[k] - psi[k];
                    r2 += psi[k] * psi[k];
                }
                table.diag_k(r2, &mut diag);
                let peak = diag.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
                mass += w * peak;
                let inside = field.sample(&y, &mut sample);
                if !inside {
                    missed += w * peak;
                    return;
                }
                if n == 1 {
                    transformed[0] = sample[0];
                } else {
                    matvec(sys.y_inv_flat(), &sample, &mut transformed, n);
                }
                let mut projs = [0.0f64; 8];
                if nderiv > 0 || npairs > 0 {
                    for (i, proj) in projs.iter_mut().enumerate().take(d) {
                        *proj = psi
                            .iter()
                            .zip(&rot_cols[i * d..(i + 1) * d])
                            .map(|(a, b)| a * b)
                            .sum();
                    }
                }
                for k in 0..n {
                    let base = w * diag[k] * transformed[k];
                    out[k] += base;
                    let v2 = table.inv2ta[k];
                    for i in 0..nderiv {
                        out[(1 + i) * n + k] -= v2 * projs[i] * base;
                    }
                    if npairs > 0 {
                        let mut slot = 0usize;
                        for i in 0..d {
                            for j in i..d {
                                let delta = if i == j { 1.0 } else { 0.0 };
                                out[(1 + nderiv + slot) * n + k] +=
                                    (v2 * v2 * projs[i] * projs[j] - v2 * delta) * base;
                                slot += 1;
                            }
                        }
                    }
                }
            });
            // back-transform all component blocks
            if n > 1 {
                let mut scratch = vec![Complex64::ZERO; n];
                for blk in 0..(1 + nderiv + npairs) {
                    scratch.copy_from_slice(&out[blk * n..(blk + 1) * n]);
                    matvec(sys.y_flat(), &scratch, &mut out[blk * n..(blk + 1) * n], n);
                }
            }
            *tail = if mass > 0.0 { missed / mass } else { 0.0 };
        });

    let tail_fraction = tails.iter().cloned().fold(0.0f64, f64::max);
    let mut values = vec![Complex64::ZERO; count * n];
    let mut derivs = vec![vec![Complex64::ZERO; count * n]; nderiv];
    let mut derivs2 = vec![vec![Complex64::ZERO; count * n]; npairs];
    for node in 0..count {
        let chunk = &packed[node * stride..(node + 1) * stride];
        values[node * n..(node + 1) * n].copy_from_slice(&chunk[..n]);
        for (i, dv) in derivs.iter_mut().enumerate() {
            dv[node * n..(node + 1) * n].copy_from_slice(&chunk[(1 + i) * n..(2 + i) * n]);
        }
        for (s2, dv) in derivs2.iter_mut().enumerate() {
            let off = (1 + nderiv + s2) * n;
            dv[node * n..(node + 1) * n].copy_from_slice(&chunk[off..off + n]);
        }
    }
    Ok(ConvOut { values, derivs, derivs2, tail_fraction })
}


fn grid_points(spec: &GridSpec) -> Vec<f64> {
    let d = spec.dim();
    let mut pts = vec![0.0; spec.node_count() * d];
    let mut x = vec![0.0; d];
    for node in 0..spec.node_count() {
        spec.node(node, &mut x);
        pts[node * d..(node + 1) * d].copy_from_slice(&x);
    }
    pts
}

#[allow(clippy::too_many_arguments)]
fn convolve<F: InputField + ?Sized>(
    sys: &OUSystem,
    t: f64,
    field: &F,
    out_spec: &GridSpec,
    rotate: bool,
    with_derivs: bool,
    nodes_bump: usize,
    quad: &QuadSettings,
) -> Result<ConvOut> {
    convolve_points(
        sys,
        t,
        field,
        &grid_points(out_spec),
        rotate,
        with_derivs,
        false,
        nodes_bump,
        quad,
    )
}

fn field_scale(values: &[Complex64]) -> f64 {
    values.iter().map(|z| z.norm()).fold(0.0f64, f64::max)
}

fn field_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0f64, f64::max)
}

// ---------------------------------------------------------------------------
// semigroup, diffusion factor, generator
// ---------------------------------------------------------------------------

/// `[T(t)v](x)` sampled on `out_spec`; `T(0)` is the identity.
pub fn apply_semigroup<F: InputField + ?Sized>(
    sys: &OUSystem,
    v: &F,
    t: f64,
    out_spec: &GridSpec,
    quad: &QuadSettings,
) -> Result<FieldResult> {
    if t < 0.0 {
        return Err(Error::ConfigInvalid(format!("t must be >= 0, got {t}")));
    }
    let n = sys.size();
    if t == 0.0 {
        let mut field = GridFunction::zeros(out_spec.clone(), n);
        let d = sys.dim();
        let mut x = vec![0.0; d];
        let mut missed = false;
        for node in 0..out_spec.node_count() {
            out_spec.node(node, &mut x);
            let inside = v.sample(&x, &mut field.values[node * n..(node + 1) * n]);
            missed |= !inside;
        }
        return Ok(FieldResult {
            field,
            est_error: 0.0,
            tail_fraction: if missed { 1.0 } else { 0.0 },
        });
    }
    let base = convolve(sys, t, v, out_spec, true, false, 0, quad)?;
    let est_error = if quad.check {
        let fine = convolve(sys, t, v, out_spec, true, false, 8, quad)?;
        let diff = field_diff(&base.values, &fine.values);
        let scale = field_scale(&fine.values);
        if diff > 10.0 * quad.rel_tol * scale.max(1e-300) {
            return Err(Error::QuadratureNotConverged {
                context: "semigroup application",
                difference: diff,
                tolerance: quad.rel_tol * scale,
            });
        }
        diff
    } else {
        0.0
    };
    Ok(FieldResult {
        field: GridFunction { spec: out_spec.clone(), n, values: base.values },
        est_error,
        tail_fraction: base.tail_fraction,
    })
}

/// `[T(t)v]` together with its first and second derivative fields, all from
/// the differentiated kernels inside the same quadrature sweep. Second
/// derivatives come packed as pairs `(i,j)`, `i ≤ j`, row-major.
pub struct SemigroupDerivatives {
    pub value: GridFunction,
    pub first: Vec<GridFunction>,
    pub second: Vec<GridFunction>,
    pub tail_fraction: f64,
}

/// See [`SemigroupDerivatives`]; `t` must be positive.
pub fn apply_semigroup_with_derivatives<F: InputField + ?Sized>(
    sys: &OUSystem,
    v: &F,
    t: f64,
    out_spec: &GridSpec,
    quad: &QuadSettings,
) -> Result<SemigroupDerivatives> {
    if !(t > 0.0) {
        return Err(Error::ConfigInvalid(format!(
            "derivative fields need t > 0, got {t}"
        )));
    }
    let n = sys.size();
    let out = convolve_points(
        sys,
        t,
        v,
        &grid_points(out_spec),
        true,
        true,
        true,
        0,
        quad,
    )?;
    let wrap = |values: Vec<Complex64>| GridFunction { spec: out_spec.clone(), n, values };
    Ok(SemigroupDerivatives {
        value: wrap(out.values),
        first: out.derivs.into_iter().map(wrap).collect(),
        second: out.derivs2.into_iter().map(wrap).collect(),
        tail_fraction: out.tail_fraction,
    })
}

/// Packed index of the second-derivative pair `(i, j)` in
/// [`SemigroupDerivatives::second`].
pub fn second_derivative_index(d: usize, i: usize, j: usize) -> usize {
    pair_index(d, i, j)
}

/// The pure-diffusion factor `[G(t,0)v](y) = ∫ H(e^{-tS}y, ξ, t) v(ξ) dξ`.
///
/// Satisfies `[T(t)v](x) = [G(t,0)v](e^{tS}x)`; this routine runs its own
/// quadrature (different order than `apply_semigroup`) so that checking the
/// factorization numerically is meaningful.
pub fn apply_diffusion<F: InputField + ?Sized>(
    sys: &OUSystem,
    v: &F,
    t: f64,
    out_spec: &GridSpec,
    quad: &QuadSettings,
) -> Result<FieldResult> {
    if !(t > 0.0) {
        return Err(Error::ConfigInvalid(format!("diffusion factor needs t > 0, got {t}")));
    }
    let out = convolve(sys, t, v, out_spec, false, false, 6, quad)?;
    Ok(FieldResult {
        field: GridFunction { spec: out_spec.clone(), n: sys.size(), values: out.values },
        est_error: 0.0,
        tail_fraction: out.tail_fraction,
    })
}

/// `[T(t)v]` at arbitrary points (one value vector per point).
pub fn apply_semigroup_at<F: InputField + ?Sized>(
    sys: &OUSystem,
    v: &F,
    t: f64,
    points: &[Vec<f64>],
    quad: &QuadSettings,
) -> Result<Vec<Vec<Complex64>>> {
    let n = sys.size();
    let flat: Vec<f64> = points.iter().flat_map(|p| p.iter().cloned()).collect();
    let out = convolve_points(sys, t, v, &flat, true, false, false, 0, quad)?;
    Ok((0..points.len()).map(|k| out.values[k * n..(k + 1) * n].to_vec()).collect())
}

/// `[G(t,0)v]` at arbitrary points (its own quadrature order, see
/// [`apply_diffusion`]).
pub fn apply_diffusion_at<F: InputField + ?Sized>(
    sys: &OUSystem,
    v: &F,
    t: f64,
    points: &[Vec<f64>],
    quad: &QuadSettings,
) -> Result<Vec<Vec<Complex64>>> {
    let n = sys.size();
    let flat: Vec<f64> = points.iter().flat_map(|p| p.iter().cloned()).collect();
    let out = convolve_points(sys, t, v, &flat, false, false, false, 6, quad)?;
    Ok((0..points.len()).map(|k| out.values[k * n..(k + 1) * n].to_vec()).collect())
}

/// Relative sup discrepancy of `T(t)T(s)v = T(t+s)v` over the interior nodes
/// of `out_spec` (a 10% boundary layer is excluded: truncation error of the
/// grid pipeline concentrates there).
pub fn semigroup_composition_residual<F: InputField + ?Sized>(
    sys: &OUSystem,
    v: &F,
    s: f64,
    t: f64,
    intermediate_spec: &GridSpec,
    out_spec: &GridSpec,
    quad: &QuadSettings,
) -> Result<f64> {
    if s == 0.0 || t == 0.0 {
        // T(0) = I makes the identity exact by construction
        return Ok(0.0);
    }
    let stage = apply_semigroup(sys, v, s, intermediate_spec, quad)?;
    let composed = apply_semigroup(sys, &stage.field, t, out_spec, quad)?;
    let direct = apply_semigroup(sys, v, s + t, out_spec, quad)?;
    let n = sys.size();
    let interior = out_spec.interior_nodes(0.1);
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for &node in &interior {
        for k in 0..n {
            let a = composed.field.values[node * n + k];
            let b = direct.field.values[node * n + k];
            num = num.max((a - b).norm());
            den = den.max(b.norm());
        }
    }
    Ok(num / den.max(1e-300))
}

/// `[L v](x) = A Δv(x) + <Sx, ∇v(x)> - B v(x)` by second-order central
/// differences on the grid data (step = one grid spacing).
pub fn apply_generator_fd(sys: &OUSystem, v: &GridFunction, x: &[f64]) -> Result<Vec<Complex64>> {
    let d = sys.dim();
    let n = sys.size();
    if !v.spec.stencil_safe(x) {
        return Err(Error::TooCloseToBoundary);
    }
    let mut value = vec![Complex64::ZERO; n];
    v.sample(x, &mut value);
    let mut laplace = vec![Complex64::ZERO; n];
    let mut drift = vec![Complex64::ZERO; n];
    let mut plus = vec![Complex64::ZERO; n];
    let mut minus = vec![Complex64::ZERO; n];
    let sx: Vec<f64> = (0..d)
        .map(|i| (0..d).map(|j| sys.s()[[i, j]] * x[j]).sum())
        .collect();
    for k in 0..d {
        let h = v.spec.axes[k].spacing();
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += h;
        xm[k] -= h;
        v.sample(&xp, &mut plus);
        v.sample(&xm, &mut minus);
        for c in 0..n {
            laplace[c] += (plus[c] - 2.0 * value[c] + minus[c]) / (h * h);
            drift[c] += sx[k] * (plus[c] - minus[c]) / (2.0 * h);
        }
    }
    let mut out = vec![Complex64::ZERO; n];
    let mut tmp = vec![Complex64::ZERO; n];
    // A Δv
    let a = sys.a();
    for i in 0..n {
        tmp[i] = (0..n).map(|j| a[[i, j]] * laplace[j]).sum();
    }
    let b = sys.b();
    for i in 0..n {
        let bv: Complex64 = (0..n).map(|j| b[[i, j]] * value[j]).sum();
        out[i] = tmp[i] + drift[i] - bv;
    }
    Ok(out)
}

/// Fourth-order variant of [`apply_generator_fd`] (5-point symmetric
/// stencils), used where the h² truncation of the second-order form would
/// dominate the quantity being verified. Needs points `4h` inside the grid.
pub fn apply_generator_fd4(sys: &OUSystem, v: &GridFunction, x: &[f64]) -> Result<Vec<Complex64>> {
    let d = sys.dim();
    let n = sys.size();
    for k in 0..d {
        let ax = &v.spec.axes[k];
        let h4 = 4.0 * ax.spacing();
        if x[k] < ax.min + h4 - 1e-12 || x[k] > ax.max - h4 + 1e-12 {
            return Err(Error::TooCloseToBoundary);
        }
    }
    let mut value = vec![Complex64::ZERO; n];
    v.sample(x, &mut value);
    let mut laplace = vec![Complex64::ZERO; n];
    let mut drift = vec![Complex64::ZERO; n];
    let mut s1 = vec![Complex64::ZERO; n];
    let mut s2 = vec![Complex64::ZERO; n];
    let mut s3 = vec![Complex64::ZERO; n];
    let mut s4 = vec![Complex64::ZERO; n];
    let sx: Vec<f64> = (0..d)
        .map(|i| (0..d).map(|j| sys.s()[[i, j]] * x[j]).sum())
        .collect();
    for k in 0..d {
        let h = v.spec.axes[k].spacing();
        let shifted = |step: f64, out: &mut Vec<Complex64>| {
            let mut xx = x.to_vec();
            xx[k] += step;
            v.sample(&xx, out);
        };
        shifted(h, &mut s1);
        shifted(-h, &mut s2);
        shifted(2.0 * h, &mut s3);
        shifted(-2.0 * h, &mut s4);
        for c in 0..n {
            laplace[c] += (-s3[c] + 16.0 * s1[c] - 30.0 * value[c] + 16.0 * s2[c] - s4[c])
                / (12.0 * h * h);
            drift[c] += sx[k] * (-s3[c] + 8.0 * s1[c] - 8.0 * s2[c] + s4[c]) / (12.0 * h);
        }
    }
    let mut out = vec![Complex64::ZERO; n];
    let a = sys.a();
    let b = sys.b();
    for i in 0..n {
        let al: Complex64 = (0..n).map(|j| a[[i, j]] * laplace[j]).sum();
        let bv: Complex64 = (0..n).map(|j| b[[i, j]] * value[j]).sum();
        out[i] = al + drift[i] - bv;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// growth bound (M, ω)
// ---------------------------------------------------------------------------

/// Which function-space regime the growth bound is for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OmegaMode {
    /// weighted `L^p`: `ω = -b₀ + (1+ε)ν/p`, `M = C_θ κ a₁^{d/2} C*`
    LpWeighted,
    /// unweighted sup norm: exactly `(ω, M) = (-b₀, κ a₁^{d/2})`
    CbUnweighted,
}

/// The pair `(ω, M)` with `‖T(t)‖ ≤ M e^{ωt}`.
#[derive(Clone, Copy, Debug)]
pub struct GrowthBound {
    pub omega: f64,
    pub m: f64,
}

/// Computes the growth bound. In the weighted-`L^p` mode the envelope
/// constant `C*` is the smallest constant with `C4(t) ≤ C_θ κ a₁^{d/2} C*
/// e^{ωt}` over a log-spaced `t` grid, times a 1.05 safety factor; `ε > 0` is
/// the exponent slack the bound needs (the estimate holds for any
/// positive choice; 0.1 is the crate default).
pub fn omega_bound(
    sq: &SpectralQuantities,
    mode: OmegaMode,
    p: f64,
    c_theta: f64,
    epsilon: f64,
) -> Result<GrowthBound> {
    let base = sq.kappa * sq.a1.powf(sq.d as f64 / 2.0);
    match mode {
        OmegaMode::CbUnweighted => Ok(GrowthBound { omega: -sq.b0, m: base }),
        OmegaMode::LpWeighted => {
            if !(epsilon > 0.0) {
                return Err(Error::ConfigInvalid(format!("epsilon must be > 0, got {epsilon}")));
            }
            let omega = -sq.b0 + (1.0 + epsilon) * sq.nu / p;
            let extra = BoundExtra { p, c_theta, delta_ij: true };
            let denom = c_theta * base;
            let t_max = if sq.nu > 0.0 {
                (40.0 * p / (epsilon * sq.nu)).clamp(10.0, 1e6)
            } else {
                10.0
            };
            let mut c_star = 1.0f64;
            let steps = 400;
            for k in 0..=steps {
                let t = 1e-8 * (t_max / 1e-8).powf(k as f64 / steps as f64);
                let ratio = bound_c(4, sq, t, &extra)? * (-omega * t).exp() / denom;
                c_star = c_star.max(ratio);
            }
            Ok(GrowthBound { omega, m: denom * c_star * 1.05 })
        }
    }
}

// ---------------------------------------------------------------------------
// resolvent
// ---------------------------------------------------------------------------

/// Output of [`apply_resolvent`]: the solution samples, the kernel-route
/// first derivatives, and the growth data the time quadrature used.
#[derive(Clone, Debug)]
pub struct ResolventSolution {
    pub v: GridFunction,
    /// `D_i v★` for each direction, from `Kⁱ` inside the Laplace integral
    pub dv: Vec<GridFunction>,
    pub est_error: f64,
    pub tail_fraction: f64,
    pub growth: GrowthBound,
}

/// `R(λ)g = ∫₀^∞ e^{-λt} T(t)g dt` by `t = s²` substitution, 24-point
/// Gauss-Legendre panels geometric in `s`, and an analytic `C4` tail bound.
///
/// `growth` must be the governing `(ω, M)` pair (see [`omega_bound`]);
/// the margin `Re λ - ω` must be at least `1e-3`.
pub fn apply_resolvent<F: InputField + ?Sized>(
    sys: &OUSystem,
    g: &F,
    lambda: Complex64,
    growth: GrowthBound,
    out_spec: &GridSpec,
    quad: &QuadSettings,
) -> Result<ResolventSolution> {
    let margin = lambda.re - growth.omega;
    if margin < 1e-3 {
        return Err(Error::SpectralMarginTooSmall(margin));
    }
    let d = sys.dim();
    let n = sys.size();
    // tail: ∫_T^∞ e^{-Re λ t} C4(t) dt ≤ M e^{-(Reλ-ω)T} / (Reλ-ω) < 1e-9
    let t_cut = ((growth.m / (margin * 1e-9)).ln() / margin).max(1.0);
    let s_max = t_cut.sqrt();
    let rule = GaussLegendre::new(24);
    let panels = geometric_panels(s_max, 0.45, 8);

    let count = out_spec.node_count();
    let mut acc_v = vec![Complex64::ZERO; count * n];
    let mut acc_dv = vec![vec![Complex64::ZERO; count * n]; d];
    let mut tail_fraction = 0.0f64;

    for (lo, hi) in panels {
        for (&s_node, &w) in rule.nodes.iter().zip(&rule.weights) {
            let s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * s_node;
            let ws = 0.5 * (hi - lo) * w * 2.0 * s;
            let t = s * s;
            if t == 0.0 {
                continue;
            }
            let out = convolve(sys, t, g, out_spec, true, true, 0, quad)?;
            let factor = (-lambda * t).exp() * ws;
            for (a, b) in acc_v.iter_mut().zip(&out.values) {
                *a += factor * b;
            }
            for i in 0..d {
                for (a, b) in acc_dv[i].iter_mut().zip(&out.derivs[i]) {
                    *a += factor * b;
                }
            }
            tail_fraction = tail_fraction.max(out.tail_fraction);
        }
    }
    let tail_bound = growth.m * (-margin * t_cut).exp() / margin;
    Ok(ResolventSolution {
        v: GridFunction { spec: out_spec.clone(), n, values: acc_v },
        dv: acc_dv
            .into_iter()
            .map(|values| GridFunction { spec: out_spec.clone(), n, values })
            .collect(),
        est_error: tail_bound,
        tail_fraction,
        growth,
    })
}

/// Relative interior residual `‖λ v★ - L v★ - g‖_∞ / ‖g‖_∞` with the
/// generator applied by central differences on the resolvent output.
pub fn resolvent_residual<F: InputField + ?Sized>(
    sys: &OUSystem,
    g: &F,
    lambda: Complex64,
    solution: &ResolventSolution,
) -> Result<f64> {
    let n = sys.size();
    let d = sys.dim();
    let spec = &solution.v.spec;
    let interior = spec.interior_nodes(0.1);
    let mut x = vec![0.0; d];
    let mut gx = vec![Complex64::ZERO; n];
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for &node in &interior {
        spec.node(node, &mut x);
        let lv = match apply_generator_fd4(sys, &solution.v, &x) {
            Ok(v) => v,
            Err(Error::TooCloseToBoundary) => continue,
            Err(e) => return Err(e),
        };
        g.sample(&x, &mut gx);
        for k in 0..n {
            let r = lambda * solution.v.values[node * n + k] - lv[k] - gx[k];
            num = num.max(r.norm());
            den = den.max(gx[k].norm());
        }
    }
    Ok(num / den.max(1e-300))
}

// ---------------------------------------------------------------------------
// probes and estimate checks
// ---------------------------------------------------------------------------

/// `‖T(t)v - v‖` along a decreasing `t` sequence; strong continuity shows as
/// monotone decay to zero for smooth compactly supported data.
///
/// Strong continuity holds on the whole weighted `L^p` space (p < ∞) for
/// radial weights with the translation-regularity axiom, and in sup norm on
/// the subspace of uniformly continuous data that is additionally continuous
/// under the rotation group. Without those axioms the semigroup is still
/// strongly continuous, but only on the closed subspace of data whose
/// weighted norm is continuous under translations and rotations; the probe
/// reports whatever the supplied data and norm actually do.
pub fn strong_continuity_probe<F: InputField + ?Sized>(
    sys: &OUSystem,
    v: &F,
    weight: &WeightFunction,
    mode: NormMode,
    t_sequence: &[f64],
    out_spec: &GridSpec,
    quad: &QuadSettings,
) -> Result<Vec<f64>> {
    let n = sys.size();
    let mut norms = Vec::with_capacity(t_sequence.len());
    for &t in t_sequence {
        let tv = apply_semigroup(sys, v, t, out_spec, quad)?;
        let mut diff = GridFunction::zeros(out_spec.clone(), n);
        let d = sys.dim();
        let mut x = vec![0.0; d];
        let mut sample = vec![Complex64::ZERO; n];
        for node in 0..out_spec.node_count() {
            out_spec.node(node, &mut x);
            v.sample(&x, &mut sample);
            for k in 0..n {
                diff.values[node * n + k] = tv.field.values[node * n + k] - sample[k];
            }
        }
        norms.push(mode.norm(&diff, weight)?);
    }
    Ok(norms)
}

/// Everything [`resolvent_estimate_check`] measured, next to its bounds.
#[derive(Clone, Debug)]
pub struct ResolventCheck {
    pub lambda: Complex64,
    pub omega: f64,
    pub c7: f64,
    pub c8: f64,
    /// `‖v★‖_{θ₂}` against `C7 ‖g‖_{θ₂} / (Reλ - ω)`
    pub v_norm: f64,
    pub v_bound: f64,
    /// max over directions of `‖D_i v★‖_{θ₂}` against `C8 ‖g‖ / (Reλ-ω)^{1/2}`
    pub dv_norm: f64,
    pub dv_bound: f64,
    /// sup mode only: max over interior nodes of `θ(x)|v★(x)|` against the
    /// same `C7` bound (the pointwise estimate)
    pub pointwise_max: Option<f64>,
    /// relative interior residual of `(λI - L)v★ = g`
    pub residual: f64,
    pub g_norm: f64,
}

impl ResolventCheck {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.v_norm <= self.v_bound * (1.0 + tolerance)
            && self.dv_norm <= self.dv_bound * (1.0 + tolerance)
            && self.pointwise_max.is_none_or(|m| m <= self.v_bound * (1.0 + tolerance))
    }
}

/// Runs the full weighted resolvent-estimate verification:
/// solves `(λI - L)v★ = g` through the Laplace quadrature in the `θ₁` space,
/// then checks the `θ₂`-weighted estimates with the λ-independent constants
/// `C7, C8` (and the pointwise bound in sup mode).
#[allow(clippy::too_many_arguments)]
pub fn resolvent_estimate_check<F: InputField + ?Sized>(
    sys: &OUSystem,
    g: &F,
    lambda: Complex64,
    theta1: &WeightFunction,
    theta2: &WeightFunction,
    vartheta: f64,
    mode: NormMode,
    epsilon: f64,
    out_spec: &GridSpec,
    quad: &QuadSettings,
) -> Result<ResolventCheck> {
    let p = mode.bound_index();
    let sq1 = spectral_quantities(sys, theta1.eta, p)?;
    let omega_mode = match mode {
        NormMode::Lp(_) => OmegaMode::LpWeighted,
        NormMode::Sup => OmegaMode::CbUnweighted,
    };
    let growth = omega_bound(&sq1, omega_mode, p, theta1.c_theta, epsilon)?;
    let margin = lambda.re - growth.omega;
    if margin <= 0.0 {
        return Err(Error::SpectralMarginTooSmall(margin));
    }
    // admissible decay rate for θ₂
    let eta2_cap = vartheta * sq1.a0 * margin / (sq1.a_max * sq1.a_max * p * p);
    if theta2.eta * theta2.eta > eta2_cap {
        return Err(Error::HypothesisViolated(format!(
            "eta2^2 = {:.6} exceeds the admissible {:.6}",
            theta2.eta * theta2.eta,
            eta2_cap
        )));
    }
    let solution = apply_resolvent(sys, g, lambda, growth, out_spec, quad)?;
    let residual = resolvent_residual(sys, g, lambda, &solution)?;

    let consts = crate::kernel::bound_c78(&sq1, p, theta2.c_theta, vartheta)?;
    // sample g on the output grid for its θ₂ norm
    let n = sys.size();
    let mut g_grid = GridFunction::zeros(out_spec.clone(), n);
    {
        let d = sys.dim();
        let mut x = vec![0.0; d];
        for node in 0..out_spec.node_count() {
            out_spec.node(node, &mut x);
            g.sample(&x, &mut g_grid.values[node * n..(node + 1) * n]);
        }
    }
    let g_norm = mode.norm(&g_grid, theta2)?;
    let v_norm = mode.norm(&solution.v, theta2)?;
    let mut dv_norm = 0.0f64;
    for dv in &solution.dv {
        dv_norm = dv_norm.max(mode.norm(dv, theta2)?);
    }
    let v_bound = consts.c7 * g_norm / margin;
    let dv_bound = consts.c8 * g_norm / margin.sqrt();

    let pointwise_max = match mode {
        NormMode::Sup => {
            let d = sys.dim();
            let mut x = vec![0.0; d];
            let mut sup = 0.0f64;
            for &node in &out_spec.interior_nodes(0.1) {
                out_spec.node(node, &mut x);
                let w = theta2.eval(&x);
                let modulus = solution.v.value(node)
                    .iter()
                    .map(|z| z.norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                sup = sup.max(w * modulus);
            }
            Some(sup)
        }
        NormMode::Lp(_) => None,
    };

    Ok(ResolventCheck {
        lambda,
        omega: growth.omega,
        c7: consts.c7,
        c8: consts.c8,
        v_norm,
        v_bound,
        dv_norm,
        dv_bound,
        pointwise_max,
        residual,
        g_norm,
    })
}

/// `G(x,ξ) = -∫₀^{T_max} H(x,ξ,t) dt` with the tail beyond `T_max` bounded by
/// the kernel envelope. Needs `b₀ > 0` for convergence and `x ≠ ξ` (the
/// integrand is otherwise non-integrable at `t = 0`).
pub fn greens_function_probe(
    sys: &OUSystem,
    x: &[f64],
    xi: &[f64],
    t_max: f64,
) -> Result<MatrixQuad> {
    let sq = spectral_quantities(sys, 0.0, 1.0)?;
    if sq.b0 <= 0.0 {
        return Err(Error::NonDecayingB(sq.b0));
    }
    let d = sys.dim();
    let n = sys.size();
    let dist: f64 = x.iter().zip(xi).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if dist < 1e-12 {
        return Err(Error::ConfigInvalid("Green's function probe needs x != xi".into()));
    }
    let run = |panels: usize, nodes: usize| -> Result<Vec<Complex64>> {
        let rule = GaussLegendre::new(nodes);
        let pts = crate::quad::panel_points(0.0, t_max.sqrt(), panels, &rule);
        let mut acc = vec![Complex64::ZERO; n];
        let mut diag = vec![Complex64::ZERO; n];
        let mut rx = vec![0.0; d];
        for &(s, w) in &pts {
            let t = s * s;
            if t == 0.0 {
                continue;
            }
            let table = KernelTable::new(sys, t)?;
            table.rotate(x, &mut rx);
            let r2: f64 = rx.iter().zip(xi).map(|(a, b)| (a - b) * (a - b)).sum();
            table.diag_k(r2, &mut diag);
            let ws = w * 2.0 * s;
            for k in 0..n {
                acc[k] += ws * diag[k];
            }
        }
        Ok(acc)
    };
    let coarse = run(40, 16)?;
    let fine = run(60, 16)?;
    let scale = fine.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1e-300);
    let diff = coarse.iter().zip(&fine).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    if diff > 10.0 * QUAD_TOL * scale {
        return Err(Error::QuadratureNotConverged {
            context: "Green's function probe",
            difference: diff,
            tolerance: QUAD_TOL * scale,
        });
    }
    // tail bound from |H| ≤ κ (4π t a_min)^{-d/2} e^{-b0 t}
    let tail = sq.kappa
        * (4.0 * std::f64::consts::PI * t_max * sq.a_min).powf(-0.5 * d as f64)
        * (-sq.b0 * t_max).exp()
        / sq.b0;
    let mut diag_final = vec![Complex64::ZERO; n];
    for k in 0..n {
        diag_final[k] = -fine[k];
    }
    let mut flat = vec![Complex64::ZERO; n * n];
    crate::kernel::assemble_flat(sys, &diag_final, &mut flat);
    Ok(MatrixQuad {
        value: Array2::from_shape_vec((n, n), flat).expect("square"),
        est_error: diff + tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::validate_system;
    use approx::assert_relative_eq;
    use ndarray::array;
    use num_complex::Complex64 as C;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn zero_s(d: usize) -> Array2<f64> {
        Array2::zeros((d, d))
    }

    fn planar_s(sigma: f64) -> Array2<f64> {
        array![[0.0, sigma], [-sigma, 0.0]]
    }

    fn scalar_sys(alpha: C, delta: C, s: Array2<f64>) -> OUSystem {
        validate_system(array![[alpha]], array![[delta]], s).unwrap()
    }

    fn pair_sys() -> OUSystem {
        let a = array![[c(1.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(2.0, 0.0)]];
        let b = array![[c(3.0, 0.0), c(2.0, 0.0)], [c(0.0, 0.0), c(5.0, 0.0)]];
        validate_system(a, b, planar_s(1.0)).unwrap()
    }

    fn gaussian_field(d: usize, width: f64) -> AnalyticField<impl Fn(&[f64], &mut [C]) + Sync> {
        AnalyticField::new(d, 1, move |x: &[f64], out: &mut [C]| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            out[0] = C::new((-r2 / (2.0 * width * width)).exp(), 0.0);
        })
        .with_support(vec![(-10.0 * width, 10.0 * width); 2])
    }

    #[test]
    fn t_zero_is_identity() {
        let sys = pair_sys();
        let spec = GridSpec::uniform(2, -2.0, 2.0, 9).unwrap();
        let v = GridFunction::from_fn(spec.clone(), 2, |x, out| {
            out[0] = c(x[0], x[1]);
            out[1] = c(x[0] * x[1], 0.0);
        });
        let r = apply_semigroup(&sys, &v, 0.0, &spec, &QuadSettings::default()).unwrap();
        for (a, b) in r.field.values.iter().zip(&v.values) {
            assert_eq!(a, b);
        }
        assert_eq!(r.est_error, 0.0);
    }

    #[test]
    fn constant_data_decays_by_exp_minus_bt() {
        let sys = pair_sys();
        let t = 0.7;
        let cval = [c(0.8, -0.4), c(-0.3, 0.9)];
        let g = AnalyticField::new(2, 2, move |_x: &[f64], out: &mut [C]| {
            out.copy_from_slice(&cval);
        });
        let spec = GridSpec::uniform(2, -1.0, 1.0, 3).unwrap();
        let r = apply_semigroup(&sys, &g, t, &spec, &QuadSettings::default()).unwrap();
        let decay = sys.matrix_function(|z| (-z * t).exp(), crate::linalg::MatrixSelector::B).unwrap();
        let expect = [
            decay[[0, 0]] * cval[0] + decay[[0, 1]] * cval[1],
            decay[[1, 0]] * cval[0] + decay[[1, 1]] * cval[1],
        ];
        for node in 0..spec.node_count() {
            for k in 0..2 {
                let got = r.field.values[node * 2 + k];
                assert!(
                    (got - expect[k]).norm() <= 1e-8 * expect[k].norm().max(1e-10),
                    "node {node} k {k}: {got} vs {}",
                    expect[k]
                );
            }
        }
    }

    #[test]
    fn quadratic_data_gains_2t() {
        // scalar heat: T(t)[x1^2] = x1^2 + 2t
        let sys = scalar_sys(c(1.0, 0.0), c(0.0, 0.0), zero_s(2));
        let v = AnalyticField::new(2, 1, |x: &[f64], out: &mut [C]| {
            out[0] = c(x[0] * x[0], 0.0);
        });
        let spec = GridSpec::uniform(2, -1.5, 1.5, 4).unwrap();
        let t = 0.4;
        let r = apply_semigroup(&sys, &v, t, &spec, &QuadSettings::default()).unwrap();
        let mut x = [0.0; 2];
        for node in 0..spec.node_count() {
            spec.node(node, &mut x);
            let expect = x[0] * x[0] + 2.0 * t;
            assert_relative_eq!(r.field.values[node].re, expect, max_relative = 1e-7);
        }
    }

    #[test]
    fn composition_zero_time_is_exact() {
        let sys = pair_sys();
        let spec = GridSpec::uniform(2, -3.0, 3.0, 21).unwrap();
        let v = GridFunction::from_fn(spec.clone(), 2, |x, out| {
            let g = (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp();
            out[0] = c(g, 0.0);
            out[1] = c(0.5 * g, 0.1 * g);
        });
        let r = semigroup_composition_residual(
            &sys,
            &v,
            0.0,
            0.5,
            &spec,
            &spec,
            &QuadSettings::default(),
        )
        .unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn factorization_through_rotation() {
        // [T(t)v](x) = [G(t,0)v](e^{tS}x), two independent quadratures
        let sys = scalar_sys(c(1.0, 0.4), c(0.5, 0.0), planar_s(1.0));
        let v = gaussian_field(2, 1.0);
        let t = 0.6;
        let xs = vec![vec![0.3, -0.4], vec![1.1, 0.7], vec![-0.8, 0.2]];
        let tv = apply_semigroup_at(&sys, &v, t, &xs, &QuadSettings::default()).unwrap();
        let rot = crate::linalg::rotation(sys.s(), t).unwrap();
        let ys: Vec<Vec<f64>> = xs
            .iter()
            .map(|x| {
                (0..2)
                    .map(|i| (0..2).map(|j| rot[[i, j]] * x[j]).sum())
                    .collect()
            })
            .collect();
        let gv = apply_diffusion_at(&sys, &v, t, &ys, &QuadSettings::default()).unwrap();
        for (a, b) in tv.iter().zip(&gv) {
            assert!(
                (a[0] - b[0]).norm() <= 1e-8 * a[0].norm().max(1e-12),
                "{:?} vs {:?}",
                a,
                b
            );
        }
    }

    #[test]
    fn generator_fd_polynomials() {
        // v = x1^2, S = 0: L v = A Δv = 2
        let sys = scalar_sys(c(1.0, 0.0), c(0.0, 0.0), zero_s(2));
        let spec = GridSpec::uniform(2, -2.0, 2.0, 41).unwrap();
        let v = GridFunction::from_scalar_fn(spec.clone(), |x| c(x[0] * x[0], 0.0));
        let lv = apply_generator_fd(&sys, &v, &[0.3, -0.5]).unwrap();
        assert_relative_eq!(lv[0].re, 2.0, max_relative = 1e-9);

        // v = x1 x2 with planar drift: L v = sigma (x2^2 - x1^2) - delta x1 x2
        let sigma = 0.8;
        let delta = c(1.3, 0.0);
        let sys2 = scalar_sys(c(2.0, 0.0), delta, planar_s(sigma));
        let v2 = GridFunction::from_scalar_fn(spec.clone(), |x| c(x[0] * x[1], 0.0));
        let x = [0.5, -0.25];
        let lv2 = apply_generator_fd(&sys2, &v2, &x).unwrap();
        let expect = sigma * (x[1] * x[1] - x[0] * x[0]) - delta.re * x[0] * x[1];
        assert_relative_eq!(lv2[0].re, expect, max_relative = 1e-9);

        // boundary guard
        assert!(matches!(
            apply_generator_fd(&sys, &v, &[1.95, 0.0]),
            Err(Error::TooCloseToBoundary)
        ));
    }

    #[test]
    fn generator_fd_richardson_order() {
        // halving h must cut the FD error by ~4 (second order)
        let sys = scalar_sys(c(1.0, 0.0), c(0.5, 0.0), planar_s(1.0));
        let f = |x: &[f64]| c((x[0] * 1.3).sin() * (-x[1] * x[1] / 2.0).exp(), 0.0);
        let x = [0.4, -0.3];
        let exact = {
            // analytic L v for the chosen v
            let (x1, x2) = (x[0], x[1]);
            let sx = [x2, -x1]; // S x with sigma = 1
            let g = (-x2 * x2 / 2.0_f64).exp();
            let v = (1.3 * x1).sin() * g;
            let vx1 = 1.3 * (1.3 * x1).cos() * g;
            let vx2 = (1.3 * x1).sin() * g * (-x2);
            let vxx = -1.69 * v;
            let vyy = (1.3 * x1).sin() * g * (x2 * x2 - 1.0);
            1.0 * (vxx + vyy) + sx[0] * vx1 + sx[1] * vx2 - 0.5 * v
        };
        let mut errs = Vec::new();
        for count in [81usize, 161] {
            let spec = GridSpec::uniform(2, -3.0, 3.0, count).unwrap();
            let v = GridFunction::from_scalar_fn(spec, |y| f(y));
            let lv = apply_generator_fd(&sys, &v, &x).unwrap();
            errs.push((lv[0].re - exact).abs());
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.7, "observed order {order}, errors {errs:?}");
    }

    #[test]
    fn omega_bound_modes() {
        let sys = pair_sys();
        // cb mode is exact: kappa a1^{d/2} and -b0
        let sq0 = spectral_quantities(&sys, 0.0, 1.0).unwrap();
        let gb = omega_bound(&sq0, OmegaMode::CbUnweighted, 1.0, 1.0, 0.1).unwrap();
        assert_relative_eq!(gb.omega, -3.0, max_relative = 1e-12);
        assert_relative_eq!(gb.m, sq0.kappa * sq0.a1, max_relative = 1e-12);
        // eta = 0 implies omega = -b0 in the weighted mode too
        let lp = omega_bound(&sq0, OmegaMode::LpWeighted, 2.0, 1.0, 0.1).unwrap();
        assert_relative_eq!(lp.omega, -3.0, max_relative = 1e-12);
        assert!(lp.m >= sq0.kappa * sq0.a1);
        // with growth the bound envelope must dominate C4 on a t grid
        let sq = spectral_quantities(&sys, 0.4, 2.0).unwrap();
        let lpw = omega_bound(&sq, OmegaMode::LpWeighted, 2.0, 1.0, 0.1).unwrap();
        let extra = BoundExtra { p: 2.0, c_theta: 1.0, delta_ij: true };
        for k in 0..60 {
            let t = 1e-3 * (1e4f64).powf(k as f64 / 59.0);
            let c4 = bound_c(4, &sq, t, &extra).unwrap();
            assert!(
                c4 <= lpw.m * (lpw.omega * t).exp() * (1.0 + 1e-9),
                "t={t}: C4 {c4} vs envelope {}",
                lpw.m * (lpw.omega * t).exp()
            );
        }
    }

    #[test]
    fn resolvent_constant_data_closed_form() {
        // scalar B = b: R(lambda) c = c / (lambda + b)
        let b = c(1.0, 0.0);
        let sys = scalar_sys(c(1.0, 0.2), b, planar_s(1.0));
        let cval = c(0.7, -0.2);
        let g = AnalyticField::new(2, 1, move |_x: &[f64], out: &mut [C]| out[0] = cval);
        let sq = spectral_quantities(&sys, 0.0, 1.0).unwrap();
        let growth = omega_bound(&sq, OmegaMode::CbUnweighted, 1.0, 1.0, 0.1).unwrap();
        let lambda = c(-0.4, 0.3); // Re λ - ω = 0.6
        let spec = GridSpec::uniform(2, -1.0, 1.0, 3).unwrap();
        let sol =
            apply_resolvent(&sys, &g, lambda, growth, &spec, &QuadSettings::default()).unwrap();
        let expect = cval / (lambda + b);
        for node in 0..spec.node_count() {
            let got = sol.v.values[node];
            assert!(
                (got - expect).norm() <= 1e-8 * expect.norm(),
                "node {node}: {got} vs {expect}"
            );
        }
        // margin guard
        let tight = c(growth.omega + 5e-4, 0.0);
        assert!(matches!(
            apply_resolvent(&sys, &g, tight, growth, &spec, &QuadSettings::default()),
            Err(Error::SpectralMarginTooSmall(_))
        ));
    }

    #[test]
    fn strong_continuity_zero_data() {
        let sys = pair_sys();
        let spec = GridSpec::uniform(2, -2.0, 2.0, 9).unwrap();
        let v = GridFunction::zeros(spec.clone(), 2);
        let norms = strong_continuity_probe(
            &sys,
            &v,
            &WeightFunction::unit(),
            NormMode::Lp(2.0),
            &[0.2, 0.1],
            &spec,
            &QuadSettings::default(),
        )
        .unwrap();
        assert!(norms.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn resolvent_hypothesis_guard() {
        let sys = scalar_sys(c(1.0, 0.0), c(1.0, 0.0), planar_s(1.0));
        let g = gaussian_field(2, 1.0);
        let spec = GridSpec::uniform(2, -4.0, 4.0, 17).unwrap();
        // eta2 far beyond the cap
        let theta2 = WeightFunction::exp_smooth(5.0);
        let err = resolvent_estimate_check(
            &sys,
            &g,
            c(0.5, 0.0),
            &WeightFunction::unit(),
            &theta2,
            0.5,
            NormMode::Lp(2.0),
            0.1,
            &spec,
            &QuadSettings::default(),
        );
        assert!(matches!(err, Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn greens_probe_scalar_oracle_and_symmetry() {
        let sys = scalar_sys(c(1.0, 0.5), c(2.0, 0.0), planar_s(1.0));
        let x = [0.7, 0.2];
        let xi = [-0.4, 0.9];
        let t_max = 40.0;
        let probe = greens_function_probe(&sys, &x, &xi, t_max).unwrap();
        // oracle: independent adaptive quadrature of the scalar integrand,
        // real and imaginary parts separately
        let alpha = sys.lambda_a()[0];
        let delta = sys.lambda_b()[0];
        let integrand = |t: f64| -> C {
            let rot = crate::linalg::rotation(sys.s(), t).unwrap();
            let rx = [
                rot[[0, 0]] * x[0] + rot[[0, 1]] * x[1],
                rot[[1, 0]] * x[0] + rot[[1, 1]] * x[1],
            ];
            let r2 = (rx[0] - xi[0]).powi(2) + (rx[1] - xi[1]).powi(2);
            (4.0 * std::f64::consts::PI * t * alpha).powf(-1.0)
                * (-delta * t - r2 / (4.0 * t * alpha)).exp()
        };
        let (re, _) = crate::quad::adaptive_1d(|t| integrand(t).re, 1e-9, t_max, 1e-11);
        let (im, _) = crate::quad::adaptive_1d(|t| integrand(t).im, 1e-9, t_max, 1e-11);
        let oracle = -c(re, im);
        assert!(
            (probe.value[[0, 0]] - oracle).norm() <= 1e-6 * oracle.norm(),
            "{} vs {}",
            probe.value[[0, 0]],
            oracle
        );

        // joint rotation invariance: G(e^{τS}x, e^{τS}ξ) = G(x, ξ)
        let tau = 1.3;
        let rot = crate::linalg::rotation(sys.s(), tau).unwrap();
        let rx = [rot[[0, 0]] * x[0] + rot[[0, 1]] * x[1], rot[[1, 0]] * x[0] + rot[[1, 1]] * x[1]];
        let rxi = [
            rot[[0, 0]] * xi[0] + rot[[0, 1]] * xi[1],
            rot[[1, 0]] * xi[0] + rot[[1, 1]] * xi[1],
        ];
        let rotated = greens_function_probe(&sys, &rx, &rxi, t_max).unwrap();
        assert!(
            (rotated.value[[0, 0]] - probe.value[[0, 0]]).norm()
                <= 1e-9 * probe.value[[0, 0]].norm()
        );

        // non-decaying B is rejected
        let flat = scalar_sys(c(1.0, 0.0), c(0.0, 0.0), planar_s(1.0));
        assert!(matches!(
            greens_function_probe(&flat, &x, &xi, t_max),
            Err(Error::NonDecayingB(_))
        ));
    }
}
