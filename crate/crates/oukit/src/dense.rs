//! Small flat helpers for complex N x N matrices used inside quadrature loops.
//!
//! Kernel quadratures call [`spectral_norm`] once per node, so this path avoids
//! allocation and LAPACK dispatch. Matrices are row-major slices of length n*n.

use num_complex::Complex64;

pub(crate) fn matvec(a: &[Complex64], x: &[Complex64], y: &mut [Complex64], n: usize) {
    for i in 0..n {
        let mut acc = Complex64::ZERO;
        let row = &a[i * n..(i + 1) * n];
        for (aij, xj) in row.iter().zip(x.iter()) {
            acc += aij * xj;
        }
        y[i] = acc;
    }
}

pub(crate) fn frobenius(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value of a row-major n x n complex matrix.
///
/// Computed as the square root of the largest eigenvalue of the Gram matrix
/// `M^H M`, obtained by cyclic Jacobi sweeps. Deterministic and exact to
/// rounding for the small N this crate works with.
pub fn spectral_norm(m: &[Complex64], n: usize) -> f64 {
    debug_assert_eq!(m.len(), n * n);
    match n {
        0 => 0.0,
        1 => m[0].norm(),
        2 => {
            // Gram matrix [[a, b], [conj(b), c]] with real a, c.
            let col = |j: usize| [m[j], m[2 + j]];
            let (u, v) = (col(0), col(1));
            let a = u[0].norm_sqr() + u[1].norm_sqr();
            let c = v[0].norm_sqr() + v[1].norm_sqr();
            let b = u[0].conj() * v[0] + u[1].conj() * v[1];
            let half = 0.5 * (a - c);
            let lam = 0.5 * (a + c) + (half * half + b.norm_sqr()).sqrt();
            lam.max(0.0).sqrt()
        }
        _ => {
            let mut h = vec![Complex64::ZERO; n * n];
            for i in 0..n {
                for j in i..n {
                    let mut acc = Complex64::ZERO;
                    for k in 0..n {
                        acc += m[k * n + i].conj() * m[k * n + j];
                    }
                    h[i * n + j] = acc;
                    h[j * n + i] = acc.conj();
                }
            }
            jacobi_sweeps(&mut h, n, None);
            (0..n)
                .map(|i| h[i * n + i].re)
                .fold(f64::NEG_INFINITY, f64::max)
                .max(0.0)
                .sqrt()
        }
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi.
///
/// Returns eigenvalues ascending and the unitary matrix with the matching
/// eigenvectors as columns (row-major). The accumulated rotations keep the
/// eigenvector matrix unitary to rounding, which is what the `e^{tS}`
/// construction relies on.
pub(crate) fn hermitian_eig(h_in: &[Complex64], n: usize) -> (Vec<f64>, Vec<Complex64>) {
    debug_assert_eq!(h_in.len(), n * n);
    let mut h = h_in.to_vec();
    let mut v = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        v[i * n + i] = Complex64::new(1.0, 0.0);
    }
    jacobi_sweeps(&mut h, n, Some(&mut v));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| h[i * n + i].re.partial_cmp(&h[j * n + j].re).unwrap());
    let vals: Vec<f64> = order.iter().map(|&k| h[k * n + k].re).collect();
    let mut vecs = vec![Complex64::ZERO; n * n];
    for (pos, &src) in order.iter().enumerate() {
        for i in 0..n {
            vecs[i * n + pos] = v[i * n + src];
        }
    }
    (vals, vecs)
}

/// Cyclic Jacobi sweeps; diagonalizes `h` in place, optionally accumulating
/// the product of rotations into `v` (so `h_in = v diag v^H` on return).
fn jacobi_sweeps(h: &mut [Complex64], n: usize, mut v: Option<&mut [Complex64]>) {
    let scale: f64 = (0..n).map(|i| h[i * n + i].re.abs()).sum::<f64>().max(1e-300);
    for _sweep in 0..30 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += h[p * n + q].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = h[p * n + q];
                let napq = apq.norm();
                if napq <= 1e-18 * scale {
                    continue;
                }
                let phi = apq.arg();
                let tau = (h[q * n + q].re - h[p * n + p].re) / (2.0 * napq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let eip = Complex64::from_polar(1.0, phi);
                // columns p, q of H <- H U
                for k in 0..n {
                    let hkp = h[k * n + p];
                    let hkq = h[k * n + q];
                    h[k * n + p] = c * hkp - s * eip.conj() * hkq;
                    h[k * n + q] = s * eip * hkp + c * hkq;
                }
                // rows p, q of H <- U^H H
                for k in 0..n {
                    let hpk = h[p * n + k];
                    let hqk = h[q * n + k];
                    h[p * n + k] = c * hpk - s * eip * hqk;
                    h[q * n + k] = s * eip.conj() * hpk + c * hqk;
                }
                if let Some(vm) = v.as_deref_mut() {
                    for k in 0..n {
                        let vkp = vm[k * n + p];
                        let vkq = vm[k * n + q];
                        vm[k * n + p] = c * vkp - s * eip.conj() * vkq;
                        vm[k * n + q] = s * eip * vkp + c * vkq;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::Array2;
    use ndarray_linalg::SVD;

    fn svd_norm(m: &[Complex64], n: usize) -> f64 {
        let a = Array2::from_shape_vec((n, n), m.to_vec()).unwrap();
        let (_, s, _) = a.svd(false, false).unwrap();
        s.iter().cloned().fold(0.0f64, f64::max)
    }

    #[test]
    fn matches_lapack_svd() {
        let cases: Vec<(usize, Vec<Complex64>)> = vec![
            (1, vec![Complex64::new(3.0, -4.0)]),
            (
                2,
                vec![
                    Complex64::new(1.0, 0.5),
                    Complex64::new(-2.0, 1.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(4.0, -1.0),
                ],
            ),
            (
                3,
                (0..9)
                    .map(|k| Complex64::new((k as f64 * 0.7).sin(), (k as f64 * 1.3).cos()))
                    .collect(),
            ),
            (
                4,
                (0..16)
                    .map(|k| Complex64::new((k as f64 * 0.31).cos(), (k as f64 * 0.17).sin() * 2.0))
                    .collect(),
            ),
        ];
        for (n, m) in cases {
            assert_relative_eq!(spectral_norm(&m, n), svd_norm(&m, n), max_relative = 1e-12);
        }
    }

    #[test]
    fn scalar_case_is_modulus() {
        let z = Complex64::new(-1.5, 2.0);
        assert_relative_eq!(spectral_norm(&[z], 1), z.norm(), max_relative = 1e-15);
    }

    #[test]
    fn hermitian_eig_reconstructs() {
        // H = V diag(w) V^H with unitary V
        let n = 3;
        let h: Vec<Complex64> = vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(0.5, 1.0),
            Complex64::new(-0.3, 0.2),
            Complex64::new(0.5, -1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.7, -0.4),
            Complex64::new(-0.3, -0.2),
            Complex64::new(0.7, 0.4),
            Complex64::new(0.25, 0.0),
        ];
        let (w, v) = hermitian_eig(&h, n);
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
        // unitarity
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::ZERO;
                for k in 0..n {
                    acc += v[k * n + i].conj() * v[k * n + j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((acc - expect).norm() < 1e-13);
            }
        }
        // reconstruction
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::ZERO;
                for k in 0..n {
                    acc += v[i * n + k] * w[k] * v[j * n + k].conj();
                }
                assert!((acc - h[i * n + j]).norm() < 1e-12);
            }
        }
    }
}
