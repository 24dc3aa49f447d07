//! Complex dense matrix core: system validation, simultaneous
//! diagonalization, matrix functions and the scalar spectral constants.
//!
//! A system is the triple `(A, B, S)` with `A, B ∈ ℂ^{N×N}` simultaneously
//! diagonalizable, `Re σ(A) > 0` and `S ∈ ℝ^{d×d}` skew-symmetric. Validation
//! produces the transformation `Y` with `Y⁻¹AY`, `Y⁻¹BY` diagonal; everything
//! downstream (kernels, bounds, semigroup) works through that diagonalization.

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use ndarray::{s, Array1, Array2};
use ndarray_linalg::{Eig, Inverse, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// cond(Y) above this is treated as numerically defective.
pub const COND_LIMIT: f64 = 1e8;
/// Relative off-diagonal mass of `Y⁻¹BY` tolerated by the simultaneity test.
pub const SIMULTANEITY_TOL: f64 = 1e-9;
/// Relative tolerance on `‖S + Sᵀ‖` for the skew-symmetry test.
pub const SKEW_TOL: f64 = 1e-12;

/// Which matrix of the pair a function acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixSelector {
    A,
    B,
}

/// A validated Ornstein-Uhlenbeck system `(A, B, S)` with its cached
/// simultaneous diagonalization `A = Y Λ_A Y⁻¹`, `B = Y Λ_B Y⁻¹`.
#[derive(Clone, Debug)]
pub struct OUSystem {
    a: Array2<Complex64>,
    b: Array2<Complex64>,
    s: Array2<f64>,
    d: usize,
    n: usize,
    y: Array2<Complex64>,
    y_inv: Array2<Complex64>,
    lambda_a: Array1<Complex64>,
    lambda_b: Array1<Complex64>,
    cond_y: f64,
    // row-major copies for the quadrature hot paths
    y_flat: Vec<Complex64>,
    y_inv_flat: Vec<Complex64>,
}

impl OUSystem {
    pub fn a(&self) -> &Array2<Complex64> {
        &self.a
    }
    pub fn b(&self) -> &Array2<Complex64> {
        &self.b
    }
    pub fn s(&self) -> &Array2<f64> {
        &self.s
    }
    pub fn dim(&self) -> usize {
        self.d
    }
    pub fn size(&self) -> usize {
        self.n
    }
    pub fn y(&self) -> &Array2<Complex64> {
        &self.y
    }
    pub fn y_inv(&self) -> &Array2<Complex64> {
        &self.y_inv
    }
    pub fn lambda_a(&self) -> &Array1<Complex64> {
        &self.lambda_a
    }
    pub fn lambda_b(&self) -> &Array1<Complex64> {
        &self.lambda_b
    }
    pub fn cond_y(&self) -> f64 {
        self.cond_y
    }
    pub(crate) fn y_flat(&self) -> &[Complex64] {
        &self.y_flat
    }
    pub(crate) fn y_inv_flat(&self) -> &[Complex64] {
        &self.y_inv_flat
    }

    /// `(α, δ)` of the scalar case, if `N = 1`.
    pub fn scalar(&self) -> Option<(Complex64, Complex64)> {
        (self.n == 1).then(|| (self.lambda_a[0], self.lambda_b[0]))
    }

    /// `Y diag(f(λ_k)) Y⁻¹` for the matrix picked by `which`.
    ///
    /// `f` must be finite on the relevant eigenvalues; fractional powers use
    /// the principal branch (see [`matrix_power`]).
    pub fn matrix_function<F: Fn(Complex64) -> Complex64>(
        &self,
        f: F,
        which: MatrixSelector,
    ) -> Result<Array2<Complex64>> {
        let lambda = match which {
            MatrixSelector::A => &self.lambda_a,
            MatrixSelector::B => &self.lambda_b,
        };
        let mut diag = Array1::<Complex64>::zeros(self.n);
        for (k, &lam) in lambda.iter().enumerate() {
            let v = f(lam);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::BranchCutHit { eigenvalue: lam });
            }
            diag[k] = v;
        }
        Ok(transform(&self.y, &diag, &self.y_inv))
    }

    /// Principal-branch matrix power `Y diag(λ_k^p) Y⁻¹`.
    ///
    /// Errors with [`Error::BranchCutHit`] when `p` is non-integer and an
    /// eigenvalue sits on the negative real axis, where the principal branch
    /// is discontinuous. For powers of `A` this cannot happen under the
    /// ellipticity assumption.
    pub fn matrix_power(&self, p: f64, which: MatrixSelector) -> Result<Array2<Complex64>> {
        let lambda = match which {
            MatrixSelector::A => &self.lambda_a,
            MatrixSelector::B => &self.lambda_b,
        };
        if (p - p.round()).abs() > 1e-14 {
            for &lam in lambda {
                if lam.re < 0.0 && lam.im.abs() <= 1e-14 * lam.norm() {
                    return Err(Error::BranchCutHit { eigenvalue: lam });
                }
            }
        }
        self.matrix_function(|z| z.powf(p), which)
    }
}

fn transform(
    y: &Array2<Complex64>,
    diag: &Array1<Complex64>,
    y_inv: &Array2<Complex64>,
) -> Array2<Complex64> {
    let n = diag.len();
    let mut scaled = y.clone();
    for k in 0..n {
        for i in 0..n {
            scaled[[i, k]] *= diag[k];
        }
    }
    scaled.dot(y_inv)
}

fn frob<T: ndarray::Data<Elem = Complex64>>(m: &ndarray::ArrayBase<T, ndarray::Ix2>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn lin_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Linalg(e.to_string())
}

/// Validates assumptions on `(A, B, S)` and caches the diagonalization.
///
/// Checks, in order: shapes, numerical diagonalizability of `A`
/// (`cond(Y) ≤ 1e8`), `Re σ(A) > 0`, skew-symmetry of `S`, and that the same
/// `Y` diagonalizes `B` (relative off-diagonal mass of `Y⁻¹BY` below `1e-9`).
/// Within eigenvalue clusters of `A` the eigenvector basis is refined against
/// `B`, so repeated eigenvalues of `A` (for example `A = I`) are handled.
pub fn validate_system(
    a: Array2<Complex64>,
    b: Array2<Complex64>,
    s: Array2<f64>,
) -> Result<OUSystem> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n || n == 0 {
        return Err(Error::ShapeMismatch(format!(
            "A and B must be square of equal size, got A {}x{}, B {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let d = s.nrows();
    if s.ncols() != d || d < 2 {
        return Err(Error::ShapeMismatch(format!(
            "S must be square of size d >= 2, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }

    // eigendecomposition of A, deterministically ordered
    let (vals, vecs) = a.eig().map_err(lin_err)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        (vals[i].re, vals[i].im)
            .partial_cmp(&(vals[j].re, vals[j].im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut y = Array2::<Complex64>::zeros((n, n));
    let mut lambda_a = Array1::<Complex64>::zeros(n);
    for (pos, &src) in order.iter().enumerate() {
        lambda_a[pos] = vals[src];
        y.slice_mut(s![.., pos]).assign(&vecs.slice(s![.., src]));
    }
    normalize_columns(&mut y);

    // refine eigenvector bases inside clusters of (numerically) equal
    // eigenvalues of A so that they also diagonalize B
    let rho_a = lambda_a.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let cluster_tol = 1e-8 * rho_a.max(1.0);
    let mut start = 0usize;
    while start < n {
        let mut end = start + 1;
        while end < n && (lambda_a[end] - lambda_a[start]).norm() <= cluster_tol {
            end += 1;
        }
        if end - start > 1 {
            let y_inv = y.inv().map_err(|_| Error::NotDiagonalizable { cond: f64::INFINITY })?;
            let bhat = y_inv.dot(&b).dot(&y);
            let block = bhat.slice(s![start..end, start..end]).to_owned();
            let (_, w) = block.eig().map_err(lin_err)?;
            let refined = y.slice(s![.., start..end]).dot(&w);
            y.slice_mut(s![.., start..end]).assign(&refined);
            normalize_columns(&mut y);
        }
        start = end;
    }

    // conditioning of the eigenvector matrix
    let (_, sing, _) = y.svd(false, false).map_err(lin_err)?;
    let smax = sing.iter().cloned().fold(0.0f64, f64::max);
    let smin = sing.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond_y = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !cond_y.is_finite() || cond_y > COND_LIMIT {
        return Err(Error::NotDiagonalizable { cond: cond_y });
    }
    let y_inv = y.inv().map_err(|_| Error::NotDiagonalizable { cond: cond_y })?;

    // keep Λ_A consistent with the final basis
    let ahat = y_inv.dot(&a).dot(&y);
    for k in 0..n {
        lambda_a[k] = ahat[[k, k]];
    }

    // ellipticity
    for &lam in &lambda_a {
        if lam.re <= 0.0 {
            return Err(Error::NonEllipticA { eigenvalue: lam });
        }
    }

    // skew-symmetry of the drift
    let skew_dev = {
        let mut acc = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let v = s[[i, j]] + s[[j, i]];
                acc += v * v;
            }
        }
        acc.sqrt()
    };
    let s_norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    if skew_dev > SKEW_TOL * (1.0 + s_norm) {
        return Err(Error::NotSkew { deviation: skew_dev });
    }

    // simultaneity
    let bhat = y_inv.dot(&b).dot(&y);
    let mut offdiag = 0.0f64;
    let mut lambda_b = Array1::<Complex64>::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                lambda_b[i] = bhat[[i, j]];
            } else {
                offdiag += bhat[[i, j]].norm_sqr();
            }
        }
    }
    let rel_offdiag = offdiag.sqrt() / frob(&b).max(1e-300);
    if n > 1 && rel_offdiag > SIMULTANEITY_TOL {
        return Err(Error::NotSimultaneous { offdiag: rel_offdiag });
    }

    let y_flat = y.iter().cloned().collect();
    let y_inv_flat = y_inv.iter().cloned().collect();
    Ok(OUSystem {
        a,
        b,
        s,
        d,
        n,
        y,
        y_inv,
        lambda_a,
        lambda_b,
        cond_y,
        y_flat,
        y_inv_flat,
    })
}

fn normalize_columns(y: &mut Array2<Complex64>) {
    let n = y.nrows();
    for k in 0..n {
        let mut col = y.slice_mut(s![.., k]);
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        // fix the phase: largest-modulus entry becomes real positive
        let mut pivot = Complex64::new(1.0, 0.0);
        let mut best = -1.0;
        for z in col.iter() {
            if z.norm() > best {
                best = z.norm();
                pivot = *z;
            }
        }
        let phase = pivot / pivot.norm();
        let scale = (norm * phase).finv();
        col.map_inplace(|z| *z *= scale);
    }
}

/// The scalar constants that feed every bound: moduli/real-part extremes of
/// the spectra, the conditioning `κ = cond(Y)`, and the derived `a₁`, `ν`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralQuantities {
    /// smallest eigenvalue modulus of `A` (`= 1/ρ(A⁻¹)`)
    pub a_min: f64,
    /// spectral radius of `A`
    pub a_max: f64,
    /// smallest real part over `σ(A)`
    pub a0: f64,
    /// smallest real part over `σ(B)`
    pub b0: f64,
    /// `cond(Y)` in the spectral norm
    pub kappa: f64,
    /// `a_max² / (a_min a₀) ≥ 1`
    pub a1: f64,
    /// `a_max² η² p² / a₀ ≥ 0`
    pub nu: f64,
    /// spatial dimension, carried along since every bound formula needs it
    pub d: usize,
}

/// Computes the spectral constants of a validated system for a weight growth
/// rate `η ≥ 0` and integrability index `p ∈ [1, ∞)`.
///
/// For sup-norm (`p = ∞`) bounds, call with `p = 1`: all bound constants in
/// that regime are the `p = 1` expressions.
pub fn spectral_quantities(sys: &OUSystem, eta: f64, p: f64) -> Result<SpectralQuantities> {
    if !(eta >= 0.0) {
        return Err(Error::ConfigInvalid(format!("eta must be >= 0, got {eta}")));
    }
    if !(p >= 1.0) {
        return Err(Error::ConfigInvalid(format!("p must be >= 1, got {p}")));
    }
    let a_min = sys.lambda_a.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let a_max = sys.lambda_a.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let a0 = sys.lambda_a.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let b0 = sys.lambda_b.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let a1 = a_max * a_max / (a_min * a0);
    let nu = a_max * a_max * eta * eta * p * p / a0;
    Ok(SpectralQuantities {
        a_min,
        a_max,
        a0,
        b0,
        kappa: sys.cond_y,
        a1,
        nu,
        d: sys.dim(),
    })
}

/// `e^{tS}` for skew-symmetric `S`, through the Hermitian eigendecomposition
/// of `iS`; the result is orthogonal up to rounding and preserves `|x|`.
pub fn rotation(s: &Array2<f64>, t: f64) -> Result<Array2<f64>> {
    let d = s.nrows();
    if s.ncols() != d {
        return Err(Error::ShapeMismatch(format!("S must be square, got {}x{}", d, s.ncols())));
    }
    let mut dev = 0.0f64;
    let mut s_norm = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let v = s[[i, j]] + s[[j, i]];
            dev += v * v;
            s_norm += s[[i, j]] * s[[i, j]];
        }
    }
    if dev.sqrt() > SKEW_TOL * (1.0 + s_norm.sqrt()) {
        return Err(Error::NotSkew { deviation: dev.sqrt() });
    }
    // iS is Hermitian with real eigenvalues w and unitary eigenvectors U,
    // so S = U diag(-i w) U^H and e^{tS} = U diag(e^{-i t w}) U^H.
    let herm: Vec<Complex64> = s.iter().map(|&v| Complex64::new(0.0, v)).collect();
    let (w, u) = crate::dense::hermitian_eig(&herm, d);
    let mut full = Array2::<f64>::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            let mut acc = Complex64::ZERO;
            for k in 0..d {
                let phase = Complex64::from_polar(1.0, -t * w[k]);
                acc += u[i * d + k] * phase * u[j * d + k].conj();
            }
            full[[i, j]] = acc.re;
        }
    }
    Ok(full)
}

// ---------------------------------------------------------------------------
// JSON interface
// ---------------------------------------------------------------------------

/// On-disk system description: row-major nested arrays, complex entries as
/// `[re, im]` pairs, `S` real.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemDocument {
    #[serde(rename = "A")]
    pub a: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "S")]
    pub s: Vec<Vec<f64>>,
    pub d: usize,
}

impl SystemDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_system(sys: &OUSystem) -> Self {
        let pack = |m: &Array2<Complex64>| {
            m.rows().into_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
        };
        SystemDocument {
            a: pack(sys.a()),
            b: pack(sys.b()),
            s: sys.s().rows().into_iter().map(|r| r.to_vec()).collect(),
            d: sys.dim(),
        }
    }

    /// Validates the document into an [`OUSystem`].
    pub fn build(&self) -> Result<OUSystem> {
        let unpack = |rows: &Vec<Vec<[f64; 2]>>, name: &str| -> Result<Array2<Complex64>> {
            let n = rows.len();
            let mut m = Array2::<Complex64>::zeros((n, n));
            for (i, row) in rows.iter().enumerate() {
                if row.len() != n {
                    return Err(Error::ShapeMismatch(format!("{name} row {i} has length {}", row.len())));
                }
                for (j, &[re, im]) in row.iter().enumerate() {
                    m[[i, j]] = Complex64::new(re, im);
                }
            }
            Ok(m)
        };
        let a = unpack(&self.a, "A")?;
        let b = unpack(&self.b, "B")?;
        let dd = self.s.len();
        if dd != self.d {
            return Err(Error::ConfigInvalid(format!(
                "declared d = {} does not match S size {}",
                self.d, dd
            )));
        }
        let mut s_mat = Array2::<f64>::zeros((dd, dd));
        for (i, row) in self.s.iter().enumerate() {
            if row.len() != dd {
                return Err(Error::ShapeMismatch(format!("S row {i} has length {}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                s_mat[[i, j]] = v;
            }
        }
        validate_system(a, b, s_mat)
    }
}

/// Loads and validates a system from a JSON file.
pub fn load_system(path: &std::path::Path) -> Result<OUSystem> {
    let text = std::fs::read_to_string(path)?;
    SystemDocument::from_json(&text)?.build()
}

// internal helper used by a few oracles: adaptive-free 1-d integral of the
// gamma integrand, kept here to avoid a test-only module dependency cycle
#[allow(dead_code)]
pub(crate) fn gamma_by_quadrature(x: f64) -> f64 {
    let rule = GaussLegendre::new(40);
    let mut total = 0.0;
    // integrand t^{x-1} e^{-t}; panels to 60 suffice for x <= 10
    for k in 0..60 {
        let (a, b) = (k as f64, k as f64 + 1.0);
        total += rule.integrate(a, b, |t| if t > 0.0 { t.powf(x - 1.0) * (-t).exp() } else { 0.0 });
    }
    total
}
