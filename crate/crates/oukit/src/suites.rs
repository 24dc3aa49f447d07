//! Verification suites: each one turns a family of kernel/semigroup
//! properties into [`VerificationRecord`]s on a given system.
//!
//! The suites are what `ou-kit verify` runs and what the acceptance tests
//! assert on. Configuration is deliberately small: a seed for the sampled
//! checks and a global tolerance scale. Any error inside a check is recorded
//! as a failing record rather than propagated.

use crate::error::Result;
use crate::grid::{GridFunction, GridSpec};
use crate::kernel::{
    bound_c, bound_c78, chapman_kolmogorov_residual, dirac_limit_probe, heat_kernel, kernel_k,
    kernel_ki, kernel_moments, riccati_residual, weighted_kernel_l1, BoundExtra,
};
use crate::linalg::{rotation, spectral_quantities, MatrixSelector, OUSystem};
use crate::quad::adaptive_1d;
use crate::report::VerificationRecord;
use crate::semigroup::{
    apply_diffusion_at, apply_resolvent, apply_semigroup, apply_semigroup_at,
    apply_semigroup_with_derivatives, resolvent_residual, second_derivative_index,
    strong_continuity_probe, AnalyticField, GrowthBound, InputField, NormMode, QuadSettings,
};
use crate::special::{gamma_fn, gauss_2f1, gaussian_moment_integral, kummer_1f1};
use crate::weights::{
    check_growth_envelope, check_rotation_invariance, check_translation_regularity,
    weighted_lp_norm, weighted_sup_norm, WeightFunction,
};
use ndarray::{array, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

/// All suite names `cmd_verify` understands, in execution order.
pub const SUITE_NAMES: &[&str] = &[
    "kernel",
    "riccati",
    "moments",
    "chapman",
    "bounds",
    "special",
    "weights",
    "semigroup",
    "continuity",
    "resolvent",
];

/// Knobs shared by all suites.
#[derive(Clone, Copy, Debug)]
pub struct SuiteSettings {
    /// seed for every sampled check (reports are reproducible per seed)
    pub seed: u64,
    /// global multiplier on the residual thresholds (1 = the documented values)
    pub tol_scale: f64,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        SuiteSettings { seed: 7, tol_scale: 1.0 }
    }
}

// ---------------------------------------------------------------------------
// preset systems
// ---------------------------------------------------------------------------

/// Canonical desk-scale systems the default verification runs on.
pub mod presets {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn planar(sigma: f64) -> Array2<f64> {
        array![[0.0, sigma], [-sigma, 0.0]]
    }

    /// d=2, N=1, A=1, B=0, S=0: the classical heat kernel.
    pub fn scalar_heat() -> OUSystem {
        crate::linalg::validate_system(
            array![[c(1.0, 0.0)]],
            array![[c(0.0, 0.0)]],
            Array2::zeros((2, 2)),
        )
        .expect("static system")
    }

    /// d=2, N=1, complex diffusion with decay and planar rotation.
    pub fn scalar_complex() -> OUSystem {
        crate::linalg::validate_system(
            array![[c(1.0, 0.5)]],
            array![[c(2.0, 0.0)]],
            planar(1.0),
        )
        .expect("static system")
    }

    /// d=2, N=2, non-diagonal simultaneously diagonalizable pair, rotating.
    pub fn rotating_pair() -> OUSystem {
        crate::linalg::validate_system(
            array![[c(1.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(2.0, 0.0)]],
            array![[c(3.0, 0.0), c(2.0, 0.0)], [c(0.0, 0.0), c(5.0, 0.0)]],
            planar(1.0),
        )
        .expect("static system")
    }

    /// d=2, N=3, diagonal with complex entries.
    pub fn triple_diagonal() -> OUSystem {
        crate::linalg::validate_system(
            array![
                [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
                [c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)],
                [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 1.0)]
            ],
            array![
                [c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
                [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
                [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 2.0)]
            ],
            planar(1.0),
        )
        .expect("static system")
    }

    /// d=3, N=1, complex scalar with a single rotation plane.
    pub fn scalar_rotating_3d() -> OUSystem {
        crate::linalg::validate_system(
            array![[c(1.2, 0.3)]],
            array![[c(1.0, 0.0)]],
            array![[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
        )
        .expect("static system")
    }

    pub fn all() -> Vec<(&'static str, OUSystem)> {
        vec![
            ("scalar-heat", scalar_heat()),
            ("scalar-complex", scalar_complex()),
            ("rotating-pair", rotating_pair()),
            ("triple-diagonal", triple_diagonal()),
            ("scalar-rotating-3d", scalar_rotating_3d()),
        ]
    }
}

// ---------------------------------------------------------------------------
// plumbing
// ---------------------------------------------------------------------------

fn guard<F: FnOnce() -> Result<VerificationRecord>>(
    property: &str,
    f: F,
) -> VerificationRecord {
    let started = Instant::now();
    let mut record = match f() {
        Ok(r) => r,
        Err(e) => VerificationRecord::error(property, &e.to_string()),
    };
    record.runtime_ms = started.elapsed().as_secs_f64() * 1e3;
    record
}

fn spectral_diff(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    let n = a.nrows();
    let flat: Vec<Complex64> = a.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
    crate::dense::spectral_norm(&flat, n)
}

fn vector_gaussian(
    d: usize,
    n: usize,
    scale: f64,
) -> AnalyticField<impl Fn(&[f64], &mut [Complex64]) + Sync> {
    let s2 = 2.0 * scale * scale;
    AnalyticField::new(d, n, move |x: &[f64], out: &mut [Complex64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let bump = (-r2 / s2).exp();
        for (k, o) in out.iter_mut().enumerate() {
            let phase = 0.4 * k as f64;
            *o = Complex64::new(bump * phase.cos(), bump * phase.sin() * 0.5);
        }
    })
    .with_support(vec![(-6.0 * scale, 6.0 * scale); 8][..d].to_vec())
}

fn rotate_point(rot: &Array2<f64>, x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| (0..x.len()).map(|j| rot[[i, j]] * x[j]).sum())
        .collect()
}

/// Scalar subsystems (one per eigenvalue pair) sharing the drift.
fn scalar_reductions(sys: &OUSystem) -> Vec<(usize, OUSystem)> {
    (0..sys.size())
        .map(|k| {
            let a = array![[sys.lambda_a()[k]]];
            let b = array![[sys.lambda_b()[k]]];
            (k, crate::linalg::validate_system(a, b, sys.s().clone()).expect("eigenvalue pair"))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// the suites
// ---------------------------------------------------------------------------

/// Runs one named suite on a system; unknown names yield a failing record.
pub fn run_suite(
    suite: &str,
    sys_name: &str,
    sys: &OUSystem,
    cfg: &SuiteSettings,
) -> Vec<VerificationRecord> {
    match suite {
        "kernel" => kernel_suite(sys_name, sys, cfg),
        "riccati" => riccati_suite(sys_name, sys, cfg),
        "moments" => moments_suite(sys_name, sys, cfg),
        "chapman" => chapman_suite(sys_name, sys, cfg),
        "bounds" => bounds_suite(sys_name, sys, cfg),
        "special" => special_suite(cfg),
        "weights" => weights_suite(sys_name, sys, cfg),
        "semigroup" => semigroup_suite(sys_name, sys, cfg),
        "continuity" => continuity_suite(sys_name, sys, cfg),
        "resolvent" => resolvent_suite(sys_name, sys, cfg),
        other => vec![VerificationRecord::error(
            format!("suite.{other}"),
            "unknown suite name",
        )],
    }
}

/// Kernel identities: gauge consistency, rotation invariance, derivative
/// kernels against finite differences, and the Dirac initial-condition probe.
pub fn kernel_suite(name: &str, sys: &OUSystem, cfg: &SuiteSettings) -> Vec<VerificationRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let d = sys.dim();
    let mut records = Vec::new();
    let mut rand_point = move |scale: f64| -> Vec<f64> {
        (0..d).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * scale).collect()
    };
    // draw every sample up front so each record closure owns its data
    let gauge_samples: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..20)
        .map(|_| (0.1 + 1.9 * rand_point(0.5)[0].abs(), rand_point(2.0), rand_point(3.0)))
        .collect();
    let rot_samples: Vec<(f64, f64, Vec<f64>)> = (0..20)
        .map(|_| {
            (
                0.2 + rand_point(0.4)[0].abs(),
                4.0 * (rand_point(0.5)[0]),
                rand_point(2.0),
            )
        })
        .collect();
    let deriv_sample = (rand_point(1.0), rand_point(1.0));

    // gauge consistency: K(psi,t) = H(x, e^{tS}x - psi, t) for any x
    records.push(guard(&format!("kernel.gauge[{name}]"), || {
        let mut worst = 0.0f64;
        for (t, psi, x) in &gauge_samples {
            let (t, psi, x) = (*t, psi.clone(), x.clone());
            let k = kernel_k(sys, &psi, t)?;
            let rot = rotation(sys.s(), t)?;
            let rx = rotate_point(&rot, &x);
            let xi: Vec<f64> = rx.iter().zip(&psi).map(|(a, b)| a - b).collect();
            let h = heat_kernel(sys, &x, &xi, t)?;
            let scale = crate::dense::spectral_norm(k.as_slice().unwrap(), sys.size()).max(1e-300);
            worst = worst.max(spectral_diff(&k, &h) / scale);
        }
        Ok(VerificationRecord::residual(
            format!("kernel.gauge[{name}]"),
            worst,
            1e-12 * cfg.tol_scale,
            0.0,
        ))
    }));

    // rotation invariance of the shifted kernel
    records.push(guard(&format!("kernel.rotation-invariance[{name}]"), || {
        let mut worst = 0.0f64;
        for (t, tau, psi) in &rot_samples {
            let (t, tau, psi) = (*t, *tau, psi.clone());
            let k = kernel_k(sys, &psi, t)?;
            let rot = rotation(sys.s(), tau)?;
            let rpsi = rotate_point(&rot, &psi);
            let kr = kernel_k(sys, &rpsi, t)?;
            let scale = crate::dense::spectral_norm(k.as_slice().unwrap(), sys.size()).max(1e-300);
            worst = worst.max(spectral_diff(&k, &kr) / scale);
        }
        Ok(VerificationRecord::residual(
            format!("kernel.rotation-invariance[{name}]"),
            worst,
            1e-12 * cfg.tol_scale,
            0.0,
        ))
    }));

    // derivative kernels against central differences of H in x
    records.push(guard(&format!("kernel.derivative-consistency[{name}]"), || {
        let t = 0.7;
        let h = 1e-4;
        let (x, xi) = deriv_sample.clone();
        let rot = rotation(sys.s(), t)?;
        let rx = rotate_point(&rot, &x);
        let psi: Vec<f64> = rx.iter().zip(&xi).map(|(a, b)| a - b).collect();
        let scale = crate::dense::spectral_norm(
            heat_kernel(sys, &x, &xi, t)?.as_slice().unwrap(),
            sys.size(),
        )
        .max(1e-300);
        let mut worst = 0.0f64;
        for i in 0..d {
            let ki = kernel_ki(sys, &psi, t, i)?;
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (&heat_kernel(sys, &xp, &xi, t)? - &heat_kernel(sys, &xm, &xi, t)?)
                / Complex64::new(2.0 * h, 0.0);
            worst = worst.max(spectral_diff(&ki, &fd) / scale);
        }
        Ok(VerificationRecord::residual(
            format!("kernel.derivative-consistency[{name}]"),
            worst,
            1e-6 * cfg.tol_scale,
            0.0,
        ))
    }));

    // Dirac limit: errors decrease with observed order >= 0.9 (measured in
    // the small-t regime where the first-order term dominates)
    records.push(guard(&format!("kernel.dirac-order[{name}]"), || {
        let ts = [0.02, 0.01, 0.005, 0.002];
        let x = vec![0.25; d];
        let errs = dirac_limit_probe(
            sys,
            |y: &[f64]| (-(y.iter().map(|v| v * v).sum::<f64>()) / 2.0).exp(),
            &x,
            &ts,
        )?;
        let monotone = errs.windows(2).all(|p| p[1] < p[0]);
        // observed order: end-to-end log-log slope across the sequence
        let order = (errs[0] / errs[ts.len() - 1]).ln() / (ts[0] / ts[ts.len() - 1]).ln();
        // bound expresses "order >= 0.9" as -order <= -0.9
        let measured = if monotone { -order } else { f64::INFINITY };
        Ok(VerificationRecord::residual(
            format!("kernel.dirac-order[{name}]"),
            measured,
            -0.9,
            0.0,
        ))
    }));

    records
}

/// Residuals of the quadratic-ansatz ODEs for each scalar reduction.
pub fn riccati_suite(name: &str, sys: &OUSystem, cfg: &SuiteSettings) -> Vec<VerificationRecord> {
    let mut records = Vec::new();
    for (k, scalar) in scalar_reductions(sys) {
        records.push(guard(&format!("riccati.residuals[{name}][k={k}]"), || {
            let mut worst_n = 0.0f64;
            let mut worst_phi = 0.0f64;
            for step in 0..12 {
                let t = 0.1 * (100f64).powf(step as f64 / 11.0);
                let r = riccati_residual(&scalar, t)?;
                worst_n = worst_n.max(r.res_n);
                worst_phi = worst_phi.max(r.res_phi);
            }
            Ok(VerificationRecord::residual(
                format!("riccati.residuals[{name}][k={k}]"),
                worst_n.max(worst_phi),
                1e-7 * cfg.tol_scale,
                0.0,
            ))
        }));
    }
    records
}

/// Moment identities: order 0/1/2 quadratures against the closed forms.
pub fn moments_suite(name: &str, sys: &OUSystem, cfg: &SuiteSettings) -> Vec<VerificationRecord> {
    let mut records = Vec::new();
    let n = sys.size();
    for &t in &[0.1, 1.0, 5.0] {
        records.push(guard(&format!("moments.order0[{name}][t={t}]"), || {
            let m = kernel_moments(sys, t, 0, 0, 0)?;
            let expect = sys.matrix_function(|z| (-z * t).exp(), MatrixSelector::B)?;
            Ok(VerificationRecord::residual(
                format!("moments.order0[{name}][t={t}]"),
                spectral_diff(&m.value, &expect),
                1e-6 * cfg.tol_scale,
                m.est_error,
            ))
        }));
        records.push(guard(&format!("moments.order1[{name}][t={t}]"), || {
            let m = kernel_moments(sys, t, 1, 0, 0)?;
            let zero = Array2::<Complex64>::zeros((n, n));
            Ok(VerificationRecord::residual(
                format!("moments.order1[{name}][t={t}]"),
                spectral_diff(&m.value, &zero),
                1e-6 * cfg.tol_scale,
                m.est_error,
            ))
        }));
        for (i, j) in [(0usize, 0usize), (0, 1)] {
            records.push(guard(&format!("moments.order2[{name}][t={t}][{i}{j}]"), || {
                let m = kernel_moments(sys, t, 2, i, j)?;
                let expect = if i == j {
                    // 2 t e^{-Bt} A through the common diagonalization
                    let mut diag = ndarray::Array1::<Complex64>::zeros(n);
                    for k in 0..n {
                        diag[k] =
                            2.0 * t * (-sys.lambda_b()[k] * t).exp() * sys.lambda_a()[k];
                    }
                    let mut flat = vec![Complex64::ZERO; n * n];
                    crate::kernel::assemble_flat(sys, diag.as_slice().unwrap(), &mut flat);
                    Array2::from_shape_vec((n, n), flat).unwrap()
                } else {
                    Array2::zeros((n, n))
                };
                Ok(VerificationRecord::residual(
                    format!("moments.order2[{name}][t={t}][{i}{j}]"),
                    spectral_diff(&m.value, &expect),
                    1e-6 * cfg.tol_scale,
                    m.est_error,
                ))
            }));
        }
    }
    records
}

/// Chapman-Kolmogorov composition residuals at sampled point pairs.
pub fn chapman_suite(name: &str, sys: &OUSystem, cfg: &SuiteSettings) -> Vec<VerificationRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xc4a);
    let d = sys.dim();
    let mut records = Vec::new();
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..3)
        .map(|_| {
            let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let xi: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            (x, xi)
        })
        .collect();
    for (pair_id, (x, xi)) in pairs.iter().enumerate() {
        for &(t1, t2) in &[(0.5, 0.5), (0.3, 0.7)] {
            let prop = format!("chapman.residual[{name}][pair={pair_id}][t1={t1},t2={t2}]");
            records.push(guard(&prop, || {
                let r = chapman_kolmogorov_residual(sys, x, xi, t1, t2)?;
                Ok(VerificationRecord::residual(prop.clone(), r, 1e-5 * cfg.tol_scale, 0.0))
            }));
        }
    }
    records
}

/// Weighted L¹ kernel masses against `C1..C3`, the long/short-time behaviour
/// of the bounds, and the Laplace-transform inequality behind `C7`.
pub fn bounds_suite(name: &str, sys: &OUSystem, _cfg: &SuiteSettings) -> Vec<VerificationRecord> {
    let mut records = Vec::new();
    let d = sys.dim();

    // 10 x 5 grid of (t, eta p), levels 0..=2
    let t_grid: Vec<f64> =
        (0..10).map(|k| 0.1 * (100f64).powf(k as f64 / 9.0)).collect();
    let etas = [0.0, 0.1, 0.25, 0.4, 0.6];
    for level in 0..=2usize {
        let (i, j) = (0, if level == 2 { 1 % d } else { 0 });
        let prop = format!("bounds.l1-vs-c{}[{name}][level={level}]", level + 1);
        records.push(guard(&prop, || {
            let mut worst_ratio = 0.0f64;
            let mut est = 0.0f64;
            for &t in &t_grid {
                for &etap in &etas {
                    let sq = spectral_quantities(sys, etap, 1.0)?;
                    let extra = BoundExtra { p: 1.0, c_theta: 1.0, delta_ij: i == j };
                    let l1 = weighted_kernel_l1(sys, level, etap, t, i, j)?;
                    let bound = bound_c(level + 1, &sq, t, &extra)?;
                    worst_ratio = worst_ratio.max(l1.value / bound);
                    est = est.max(l1.est_error / bound);
                }
            }
            Ok(VerificationRecord::inequality(prop.clone(), worst_ratio, 1.0, 1e-6, est))
        }));
    }

    // long-time order: C1(t) t^{-(d-1)/2} e^{(b0-nu)t} stabilizes
    records.push(guard(&format!("bounds.c1-longtime[{name}]"), || {
        let eta = 0.4;
        let sq = spectral_quantities(sys, eta, 1.0)?;
        let scaled = |t: f64| -> Result<f64> {
            let c1 = bound_c(1, &sq, t, &BoundExtra::default())?;
            Ok(c1 * t.powf(-0.5 * (d as f64 - 1.0)) * ((sq.b0 - sq.nu) * t).exp())
        };
        let ratio = scaled(100.0)? / scaled(50.0)?;
        Ok(VerificationRecord::residual(
            format!("bounds.c1-longtime[{name}]"),
            (ratio - 1.0).abs(),
            0.1,
            0.0,
        ))
    }));

    // short-time order: C3(t) ~ 1/t as t -> 0
    records.push(guard(&format!("bounds.c3-shorttime[{name}]"), || {
        let sq = spectral_quantities(sys, 0.3, 1.0)?;
        let extra = BoundExtra { p: 1.0, c_theta: 1.0, delta_ij: true };
        let a = bound_c(3, &sq, 1e-4, &extra)? * 1e-4;
        let b = bound_c(3, &sq, 1e-5, &extra)? * 1e-5;
        Ok(VerificationRecord::residual(
            format!("bounds.c3-shorttime[{name}]"),
            (a / b - 1.0).abs(),
            0.02,
            0.0,
        ))
    }));

    // Laplace-transform inequality: ∫ e^{-Reλ t} C4(t) dt ≤ C7/(Reλ-ω)
    for &(p, vartheta, margin) in &[(1.0, 0.3, 0.8), (2.0, 0.7, 0.5), (1.0, 0.6, 2.0)] {
        let prop =
            format!("bounds.c7-laplace[{name}][p={p}][theta={vartheta}][margin={margin}]");
        records.push(guard(&prop, || {
            let sq0 = spectral_quantities(sys, 0.0, p)?;
            let omega = -sq0.b0;
            let re_lambda = omega + margin;
            // maximal admissible decay rate, slightly inside the cap
            let eta = (vartheta * sq0.a0 * margin).sqrt() / (sq0.a_max * p) * 0.98;
            let sq = spectral_quantities(sys, eta, p)?;
            let extra = BoundExtra { p, c_theta: 1.0, delta_ij: true };
            let horizon = (60.0 / (margin * (1.0 - vartheta))).min(2e4);
            let (integral, est) = adaptive_1d(
                |t: f64| {
                    if t <= 0.0 {
                        return 0.0;
                    }
                    crate::kernel::bound_c_scaled(4, &sq, t, &extra, re_lambda).unwrap_or(0.0)
                },
                0.0,
                horizon,
                1e-9,
            );
            let c7 = bound_c78(&sq, p, 1.0, vartheta)?.c7;
            Ok(VerificationRecord::inequality(
                prop.clone(),
                integral,
                c7 / margin,
                1e-6,
                est,
            ))
        }));
    }

    // C7 grows with the vartheta budget
    records.push(guard(&format!("bounds.c7-monotone[{name}]"), || {
        let sq = spectral_quantities(sys, 0.2, 1.0)?;
        let lo = bound_c78(&sq, 1.0, 1.0, 0.3)?.c7;
        let hi = bound_c78(&sq, 1.0, 1.0, 0.6)?.c7;
        Ok(VerificationRecord::inequality(
            format!("bounds.c7-monotone[{name}]"),
            lo,
            hi,
            0.0,
            0.0,
        ))
    }));

    records
}

/// Hypergeometric identity battery (system-independent).
pub fn special_suite(cfg: &SuiteSettings) -> Vec<VerificationRecord> {
    let mut records = Vec::new();

    // connection formula: ₁F₁(a;b;x) = e^x ₁F₁(b-a;b;-x)
    records.push(guard("special.kummer-connection", || {
        let mut worst = 0.0f64;
        for a10 in (5..=50).step_by(9) {
            for b10 in (5..=50).step_by(9) {
                let (a, b) = (a10 as f64 / 10.0, b10 as f64 / 10.0);
                for x10 in (0..=20).step_by(4) {
                    let x = x10 as f64;
                    let lhs = kummer_1f1(a, b, x)?.value;
                    let rhs = x.exp() * kummer_1f1(b - a, b, -x)?.value;
                    worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1e-300));
                }
            }
        }
        Ok(VerificationRecord::residual(
            "special.kummer-connection",
            worst,
            1e-9 * cfg.tol_scale,
            0.0,
        ))
    }));

    // Laplace transform: ∫ t^{α-1} e^{-ct} ₁F₁(a;b;-t) dt = c^{-α} Γ(α) ₂F₁(a,α;b;-1/c)
    records.push(guard("special.laplace-identity", || {
        let mut worst = 0.0f64;
        for &alpha in &[0.5, 1.0, 1.5] {
            for &cc in &[0.5f64, 1.0, 2.0] {
                for &(a, b) in &[(0.5, 1.5), (1.0, 2.0), (2.0, 3.5)] {
                    let upper = (80.0 / cc).sqrt();
                    let (lhs, _) = adaptive_1d(
                        |u: f64| {
                            let t = u * u;
                            if t == 0.0 {
                                return 0.0;
                            }
                            2.0 * u.powf(2.0 * alpha - 1.0)
                                * (-cc * t).exp()
                                * kummer_1f1(a, b, -t).map(|r| r.value).unwrap_or(f64::NAN)
                        },
                        0.0,
                        upper,
                        1e-11,
                    );
                    let rhs = cc.powf(-alpha)
                        * gamma_fn(Complex64::new(alpha, 0.0))?.re
                        * gauss_2f1(a, alpha, b, -1.0 / cc)?.value;
                    worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1e-300));
                }
            }
        }
        Ok(VerificationRecord::residual(
            "special.laplace-identity",
            worst,
            1e-8 * cfg.tol_scale,
            0.0,
        ))
    }));

    // Gaussian moment integral against direct quadrature
    records.push(guard("special.moment-integral", || {
        let mut worst = 0.0f64;
        for &nn in &[0.0, 0.5, 1.0, 2.5] {
            for &r in &[0.0, 0.6, 1.3, 2.5] {
                let closed = gaussian_moment_integral(nn, r)?;
                let upper = r / 2.0 + 10.0;
                let (direct, _) = adaptive_1d(
                    |s: f64| {
                        if s == 0.0 && nn < 1.0 {
                            return 0.0;
                        }
                        s.powf(nn) * (-s * s + r * s).exp()
                    },
                    0.0,
                    upper,
                    1e-12,
                );
                worst = worst.max((closed - direct).abs() / direct.abs().max(1e-300));
            }
        }
        Ok(VerificationRecord::residual(
            "special.moment-integral",
            worst,
            1e-9 * cfg.tol_scale,
            0.0,
        ))
    }));

    records
}

/// Weight-axiom battery for the named families (uses the system's drift for
/// the rotation-invariance part).
pub fn weights_suite(_name: &str, sys: &OUSystem, cfg: &SuiteSettings) -> Vec<VerificationRecord> {
    let d = sys.dim();
    let families: Vec<(&str, WeightFunction)> = vec![
        ("exp_abs(1.0)", WeightFunction::exp_abs(1.0)),
        ("exp_abs(-0.7)", WeightFunction::exp_abs(-0.7)),
        ("cosh_abs(0.5)", WeightFunction::cosh_abs(0.5)),
        ("exp_smooth(0.8)", WeightFunction::exp_smooth(0.8)),
        ("cosh_smooth(0.5)", WeightFunction::cosh_smooth(0.5)),
        ("unit", WeightFunction::unit()),
    ];
    let mut records = Vec::new();
    for (fam, w) in &families {
        let prop = format!("weights.w2-envelope[{fam}]");
        records.push(guard(&prop, || {
            let chk = check_growth_envelope(w, d, 10_000, cfg.seed);
            Ok(VerificationRecord::inequality(prop.clone(), chk.max_violation, 1.0, 1e-9, 0.0))
        }));
        let prop = format!("weights.w4-translation[{fam}]");
        records.push(guard(&prop, || {
            let chk = check_translation_regularity(w, d, &[0.1, 0.01], cfg.seed);
            let decreasing = chk.w4_ratios[1] <= chk.w4_ratios[0] + 1e-15;
            let within = chk.w4_ratios[0] <= 0.1f64.exp() * w.eta.exp().max(1.0); // loose cap
            let measured = if decreasing && within { chk.w4_ratios[1] } else { f64::INFINITY };
            Ok(VerificationRecord::residual(
                prop.clone(),
                measured,
                (0.01f64 * w.eta.max(1.0)).exp() - 1.0 + 1e-12,
                0.0,
            ))
        }));
        if let Some(w6) = check_translation_regularity(w, d, &[0.1], cfg.seed).w6_max_ratio {
            let prop = format!("weights.w6-gradient[{fam}]");
            records.push(VerificationRecord::inequality(
                prop,
                w6,
                w.mu.abs().max(1e-12),
                1e-6,
                0.0,
            ));
        }
        let prop = format!("weights.w3-rotation[{fam}]");
        records.push(guard(&prop, || {
            let sup = check_rotation_invariance(w, sys.s(), &[0.4, 1.1, 3.0], cfg.seed)?;
            Ok(VerificationRecord::residual(prop.clone(), sup, 1e-12 * cfg.tol_scale, 0.0))
        }));
        if let Some((c_tilde, nu)) = w.lower_envelope() {
            let prop = format!("weights.w7-lower[{fam}]");
            records.push(guard(&prop, || {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x77);
                let mut worst = f64::INFINITY;
                for _ in 0..2000 {
                    let x: Vec<f64> =
                        (0..d).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * 12.0).collect();
                    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    worst = worst.min(w.eval(&x) / (c_tilde * (nu * r).exp()));
                }
                // ratio must stay >= 1; recorded as 1/ratio <= 1
                Ok(VerificationRecord::inequality(prop.clone(), 1.0 / worst, 1.0, 1e-12, 0.0))
            }));
        }
    }
    records
}

/// Semigroup laws, the diffusion factorization and operator-norm bounds.
pub fn semigroup_suite(name: &str, sys: &OUSystem, cfg: &SuiteSettings) -> Vec<VerificationRecord> {
    let d = sys.dim();
    let n = sys.size();
    let quad = QuadSettings::default();
    let mut records = Vec::new();

    // T(0) = I exactly
    records.push(guard(&format!("semigroup.identity-at-zero[{name}]"), || {
        let spec = GridSpec::uniform(d, -2.0, 2.0, 5)?;
        let v = GridFunction::from_fn(spec.clone(), n, |x, out| {
            for (k, o) in out.iter_mut().enumerate() {
                *o = Complex64::new(x[0] + k as f64, x[d - 1]);
            }
        });
        let r = apply_semigroup(sys, &v, 0.0, &spec, &quad)?;
        let exact = r.field.values.iter().zip(&v.values).all(|(a, b)| a == b);
        Ok(VerificationRecord::residual(
            format!("semigroup.identity-at-zero[{name}]"),
            if exact { 0.0 } else { 1.0 },
            0.0,
            0.0,
        ))
    }));

    // constant data: T(t)c = e^{-Bt} c
    records.push(guard(&format!("semigroup.constant-decay[{name}]"), || {
        let t = 0.8;
        let cval: Vec<Complex64> =
            (0..n).map(|k| Complex64::new(0.9 - 0.2 * k as f64, 0.3 * k as f64)).collect();
        let cval2 = cval.clone();
        let g = AnalyticField::new(d, n, move |_x: &[f64], out: &mut [Complex64]| {
            out.copy_from_slice(&cval2);
        });
        let spec = GridSpec::uniform(d, -1.0, 1.0, 3)?;
        let r = apply_semigroup(sys, &g, t, &spec, &quad)?;
        let decay = sys.matrix_function(|z| (-z * t).exp(), MatrixSelector::B)?;
        let mut expect = vec![Complex64::ZERO; n];
        for i in 0..n {
            expect[i] = (0..n).map(|j| decay[[i, j]] * cval[j]).sum();
        }
        let mut worst = 0.0f64;
        let scale = expect.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        for node in 0..spec.node_count() {
            for k in 0..n {
                worst = worst.max((r.field.values[node * n + k] - expect[k]).norm());
            }
        }
        Ok(VerificationRecord::residual(
            format!("semigroup.constant-decay[{name}]"),
            worst / scale.max(1e-300),
            1e-7 * cfg.tol_scale,
            r.est_error,
        ))
    }));

    // composition law through a grid-sampled intermediate stage
    records.push(guard(&format!("semigroup.composition[{name}]"), || {
        let v = vector_gaussian(d, n, 1.0);
        let mid = GridSpec::uniform(d, -5.0, 5.0, if d == 2 { 501 } else { 101 })?;
        let out = GridSpec::uniform(d, -2.5, 2.5, 11)?;
        let r = crate::semigroup::semigroup_composition_residual(
            sys, &v, 0.25, 0.25, &mid, &out, &quad,
        )?;
        Ok(VerificationRecord::residual(
            format!("semigroup.composition[{name}]"),
            r,
            1e-4 * cfg.tol_scale,
            0.0,
        ))
    }));

    // diffusion factorization at rotated points
    records.push(guard(&format!("semigroup.factorization[{name}]"), || {
        let v = vector_gaussian(d, n, 1.0);
        let t = 0.6;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xfac);
        let xs: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
            .collect();
        let tv = apply_semigroup_at(sys, &v, t, &xs, &quad)?;
        let rot = rotation(sys.s(), t)?;
        let ys: Vec<Vec<f64>> = xs.iter().map(|x| rotate_point(&rot, x)).collect();
        let gv = apply_diffusion_at(sys, &v, t, &ys, &quad)?;
        let mut worst = 0.0f64;
        for (a, b) in tv.iter().zip(&gv) {
            let scale = a.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1e-300);
            let diff = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0f64, f64::max);
            worst = worst.max(diff / scale);
        }
        Ok(VerificationRecord::residual(
            format!("semigroup.factorization[{name}]"),
            worst,
            1e-8 * cfg.tol_scale,
            0.0,
        ))
    }));

    // operator-norm bounds C4/C5/C6 for p in {1,2} and three weights
    let weights: Vec<(&str, WeightFunction)> = vec![
        ("unit", WeightFunction::unit()),
        ("cosh_abs(0.3)", WeightFunction::cosh_abs(0.3)),
        ("exp_smooth(0.3)", WeightFunction::exp_smooth(0.3)),
    ];
    for &t in &[0.1, 0.5, 2.0] {
        let prop = format!("semigroup.boundedness[{name}][t={t}]");
        records.push(guard(&prop, || {
            let v = vector_gaussian(d, n, 1.0);
            let spec = GridSpec::uniform(d, -9.0, 9.0, if d == 2 { 73 } else { 31 })?;
            let fields = apply_semigroup_with_derivatives(sys, &v, t, &spec, &quad)?;
            let mut v_grid = GridFunction::zeros(spec.clone(), n);
            let mut x = vec![0.0; d];
            for node in 0..spec.node_count() {
                spec.node(node, &mut x);
                v.sample(&x, &mut v_grid.values[node * n..(node + 1) * n]);
            }
            let mut worst = 0.0f64;
            for (_wname, w) in &weights {
                for &p in &[1.0, 2.0] {
                    let sq = spectral_quantities(sys, w.eta, p)?;
                    let extra = BoundExtra { p, c_theta: w.c_theta, delta_ij: true };
                    let vn = weighted_lp_norm(&v_grid, w, p)?.value;
                    let tn = weighted_lp_norm(&fields.value, w, p)?.value;
                    worst = worst.max(tn / (bound_c(4, &sq, t, &extra)? * vn));
                    for der in &fields.first {
                        let dn = weighted_lp_norm(der, w, p)?.value;
                        worst = worst.max(dn / (bound_c(5, &sq, t, &extra)? * vn));
                    }
                    for i in 0..d {
                        for j in i..d {
                            let idx = second_derivative_index(d, i, j);
                            let extra2 = BoundExtra { p, c_theta: w.c_theta, delta_ij: i == j };
                            let dn = weighted_lp_norm(&fields.second[idx], w, p)?.value;
                            worst = worst.max(dn / (bound_c(6, &sq, t, &extra2)? * vn));
                        }
                    }
                }
            }
            Ok(VerificationRecord::inequality(prop.clone(), worst, 1.0, 1e-8, 0.0))
        }));
    }

    records
}

/// Strong continuity: `‖T(t)v - v‖` decreasing with a small final value.
pub fn continuity_suite(name: &str, sys: &OUSystem, _cfg: &SuiteSettings) -> Vec<VerificationRecord> {
    let d = sys.dim();
    let n = sys.size();
    let quad = QuadSettings::default();
    let cases: Vec<(&str, WeightFunction, NormMode)> = vec![
        ("unit-l2", WeightFunction::unit(), NormMode::Lp(2.0)),
        ("cosh(0.3)-l2", WeightFunction::cosh_abs(0.3), NormMode::Lp(2.0)),
        ("unit-sup", WeightFunction::unit(), NormMode::Sup),
    ];
    let mut records = Vec::new();
    let ts = [0.2, 0.1, 0.05, 0.01];
    for (case, w, mode) in cases {
        let prop = format!("continuity.decay[{name}][{case}]");
        records.push(guard(&prop, || {
            let v = vector_gaussian(d, n, 1.0);
            let spec = GridSpec::uniform(d, -8.0, 8.0, if d == 2 { 65 } else { 25 })?;
            let norms = strong_continuity_probe(sys, &v, &w, mode, &ts, &spec, &quad)?;
            let mut v_grid = GridFunction::zeros(spec.clone(), n);
            let mut x = vec![0.0; d];
            for node in 0..spec.node_count() {
                spec.node(node, &mut x);
                v.sample(&x, &mut v_grid.values[node * n..(node + 1) * n]);
            }
            let vnorm = mode.norm(&v_grid, &w)?;
            let decreasing = norms.windows(2).all(|p| p[1] < p[0]);
            let measured =
                if decreasing { norms.last().unwrap() / vnorm } else { f64::INFINITY };
            Ok(VerificationRecord::residual(prop.clone(), measured, 0.05, 0.0))
        }));
    }
    records
}

/// Resolvent closed form, residual, and the weighted estimates with C7/C8.
pub fn resolvent_suite(name: &str, sys: &OUSystem, cfg: &SuiteSettings) -> Vec<VerificationRecord> {
    let d = sys.dim();
    let n = sys.size();
    let quad = QuadSettings { field_scale: 1.2, ..QuadSettings::default() };
    let mut records = Vec::new();
    let sq0 = match spectral_quantities(sys, 0.0, 1.0) {
        Ok(s) => s,
        Err(e) => {
            return vec![VerificationRecord::error(
                format!("resolvent.setup[{name}]"),
                &e.to_string(),
            )]
        }
    };
    let growth = GrowthBound { omega: -sq0.b0, m: sq0.kappa * sq0.a1.powf(d as f64 / 2.0) };

    // constant data: closed form c/(λ+b) for scalar systems
    if let Some((_, delta)) = sys.scalar() {
        let prop = format!("resolvent.constant-data[{name}]");
        records.push(guard(&prop, || {
            let cval = Complex64::new(0.8, -0.3);
            let g = AnalyticField::new(d, 1, move |_x: &[f64], out: &mut [Complex64]| {
                out[0] = cval;
            });
            let lambda = Complex64::new(growth.omega + 0.9, 0.4);
            let spec = GridSpec::uniform(d, -1.0, 1.0, 3)?;
            // constant data has no length scale of its own
            let flat_quad = QuadSettings { field_scale: 1e6, ..quad };
            let sol = apply_resolvent(sys, &g, lambda, growth, &spec, &flat_quad)?;
            let expect = cval / (lambda + delta);
            let mut worst = 0.0f64;
            for node in 0..spec.node_count() {
                worst = worst.max((sol.v.values[node] - expect).norm() / expect.norm());
            }
            Ok(VerificationRecord::residual(prop.clone(), worst, 1e-8 * cfg.tol_scale, sol.est_error))
        }));
    }

    // constant-input eigenrelation for any N: R(λ)c = (λI + B)^{-1} c
    let prop = format!("resolvent.constant-eigenrelation[{name}]");
    records.push(guard(&prop, || {
        let cval: Vec<Complex64> =
            (0..n).map(|k| Complex64::new(0.6 + 0.1 * k as f64, -0.2)).collect();
        let cval2 = cval.clone();
        let g = AnalyticField::new(d, n, move |_x: &[f64], out: &mut [Complex64]| {
            out.copy_from_slice(&cval2);
        });
        let lambda = Complex64::new(growth.omega + 1.1, 0.2);
        let spec = GridSpec::uniform(d, -1.0, 1.0, 3)?;
        let flat_quad = QuadSettings { field_scale: 1e6, ..quad };
        let sol = apply_resolvent(sys, &g, lambda, growth, &spec, &flat_quad)?;
        let inv = sys.matrix_function(|z| (lambda + z).finv(), MatrixSelector::B)?;
        let mut expect = vec![Complex64::ZERO; n];
        for i in 0..n {
            expect[i] = (0..n).map(|j| inv[[i, j]] * cval[j]).sum();
        }
        let scale = expect.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        let mut worst = 0.0f64;
        for node in 0..spec.node_count() {
            for k in 0..n {
                worst = worst.max((sol.v.values[node * n + k] - expect[k]).norm());
            }
        }
        Ok(VerificationRecord::residual(prop.clone(), worst / scale, 1e-7, sol.est_error))
    }));

    // three spectral margins; one solve per λ feeds the residual record and
    // every estimate record
    let g = vector_gaussian(d, n, 1.2);
    let vartheta = 0.5;
    for &margin in &[0.7, 1.5, 3.0] {
        let lambda = Complex64::new(growth.omega + margin, 0.3);
        let prop_base = format!("resolvent[{name}][margin={margin}]");
        let recs = (|| -> Result<Vec<VerificationRecord>> {
            let spec = GridSpec::uniform(d, -5.0, 5.0, if d == 2 { 51 } else { 21 })?;
            let sol = apply_resolvent(sys, &g, lambda, growth, &spec, &quad)?;
            let mut out = Vec::new();
            let residual = resolvent_residual(sys, &g, lambda, &sol)?;
            out.push(VerificationRecord::residual(
                format!("{prop_base}.residual"),
                residual,
                1e-3 * cfg.tol_scale,
                sol.est_error,
            ));
            // sample g on the grid once
            let mut g_grid = GridFunction::zeros(spec.clone(), n);
            let mut x = vec![0.0; d];
            for node in 0..spec.node_count() {
                spec.node(node, &mut x);
                g.sample(&x, &mut g_grid.values[node * n..(node + 1) * n]);
            }
            // admissible decay weight
            let eta2 = (vartheta * sq0.a0 * margin).sqrt() / (sq0.a_max * 2.0) * 0.7;
            let theta2 = WeightFunction::exp_smooth(eta2);
            let p = 2.0;
            let consts = bound_c78(&spectral_quantities(sys, eta2, p)?, p, 1.0, vartheta)?;
            let gn = weighted_lp_norm(&g_grid, &theta2, p)?.value;
            let vn = weighted_lp_norm(&sol.v, &theta2, p)?.value;
            let mut dvn = 0.0f64;
            for der in &sol.dv {
                dvn = dvn.max(weighted_lp_norm(der, &theta2, p)?.value);
            }
            out.push(VerificationRecord::inequality(
                format!("{prop_base}.c7-norm"),
                vn,
                consts.c7 * gn / margin,
                1e-8,
                sol.est_error,
            ));
            out.push(VerificationRecord::inequality(
                format!("{prop_base}.c8-gradient"),
                dvn,
                consts.c8 * gn / margin.sqrt(),
                1e-8,
                sol.est_error,
            ));
            // unweighted growth-bound estimate of the solvability corollary
            let g_unit = weighted_lp_norm(&g_grid, &WeightFunction::unit(), p)?.value;
            let v_unit = weighted_lp_norm(&sol.v, &WeightFunction::unit(), p)?.value;
            out.push(VerificationRecord::inequality(
                format!("{prop_base}.m-omega-norm"),
                v_unit,
                growth.m * g_unit / margin,
                1e-8,
                sol.est_error,
            ));
            // sup-mode pointwise bound with the same decay weight
            let consts1 = bound_c78(&spectral_quantities(sys, eta2, 1.0)?, 1.0, 1.0, vartheta)?;
            let g_sup = weighted_sup_norm(&g_grid, &theta2)?.value;
            let mut pointwise: f64 = 0.0;
            for &node in &spec.interior_nodes(0.1) {
                spec.node(node, &mut x);
                let w = theta2.eval(&x);
                let modulus =
                    sol.v.value(node).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                pointwise = pointwise.max(w * modulus);
            }
            out.push(VerificationRecord::inequality(
                format!("{prop_base}.c7-pointwise"),
                pointwise,
                consts1.c7 * g_sup / margin,
                1e-8,
                sol.est_error,
            ));
            Ok(out)
        })();
        match recs {
            Ok(rs) => records.extend(rs),
            Err(e) => records.push(VerificationRecord::error(&prop_base, &e.to_string())),
        }
    }

    records
}

/// Convenience: run several suites back to back, records concatenated in
/// suite order (deterministic for fixed settings).
pub fn run_suites(
    suites: &[&str],
    sys_name: &str,
    sys: &OUSystem,
    cfg: &SuiteSettings,
) -> Vec<VerificationRecord> {
    let mut all = Vec::new();
    for s in suites {
        all.extend(run_suite(s, sys_name, sys, cfg));
    }
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::all_pass;

    #[test]
    fn presets_validate() {
        for (name, sys) in presets::all() {
            assert!(sys.size() >= 1, "{name}");
            assert!(sys.dim() >= 2, "{name}");
        }
    }

    #[test]
    fn unknown_suite_is_a_failing_record() {
        let sys = presets::scalar_heat();
        let recs = run_suite("nope", "scalar-heat", &sys, &SuiteSettings::default());
        assert_eq!(recs.len(), 1);
        assert!(!recs[0].pass);
    }

    #[test]
    fn special_suite_passes() {
        let recs = special_suite(&SuiteSettings::default());
        assert!(all_pass(&recs), "{}", crate::report::summarize(&recs));
    }

    #[test]
    fn kernel_and_riccati_suites_pass_on_scalar_complex() {
        let sys = presets::scalar_complex();
        let cfg = SuiteSettings::default();
        let recs = run_suites(&["kernel", "riccati"], "scalar-complex", &sys, &cfg);
        assert!(all_pass(&recs), "{}", crate::report::summarize(&recs));
    }

    #[test]
    fn moments_suite_passes_on_pair() {
        let sys = presets::rotating_pair();
        let recs = moments_suite("rotating-pair", &sys, &SuiteSettings::default());
        assert!(all_pass(&recs), "{}", crate::report::summarize(&recs));
    }

    #[test]
    fn weights_suite_passes() {
        let sys = presets::scalar_heat();
        let recs = weights_suite("scalar-heat", &sys, &SuiteSettings::default());
        assert!(all_pass(&recs), "{}", crate::report::summarize(&recs));
    }
}
