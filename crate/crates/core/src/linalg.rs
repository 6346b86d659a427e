//! Small dense linear-algebra helpers (row-major, heap-backed).

use alloc::vec::Vec;

/// Solves `a·x = b` for a square row-major `a` by Gaussian elimination with
/// partial pivoting. Returns `None` when a pivot falls below `tol` relative to
/// the largest entry of `a`.
pub fn solve(a: &[f64], b: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = b.len();
    assert_eq!(a.len(), n * n, "matrix/vector size mismatch");
    let mut m: Vec<f64> = a.to_vec();
    let mut x: Vec<f64> = b.to_vec();
    let scale = m.iter().fold(0.0_f64, |acc, v| acc.max(crate::math::abs(*v)));
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let (piv, pval) = (col..n).map(|r| (r, crate::math::abs(m[r * n + col]))).fold((col, -1.0), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        });
        if pval <= tol * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in (col + 1)..n {
            let f = m[r * n + col] / d;
            if f != 0.0 {
                for k in col..n {
                    m[r * n + k] -= f * m[col * n + k];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for k in (col + 1)..n {
            acc -= m[col * n + k] * x[k];
        }
        x[col] = acc / m[col * n + col];
    }
    Some(x)
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration. Used as a Lipschitz bound, so a slight overestimate is fine.
pub fn spectral_radius_psd(m: &[f64], n: usize, iters: usize) -> f64 {
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * i as f64).collect();
    let mut lambda = 0.0;
    let mut w = alloc::vec![0.0; n];
    for _ in 0..iters {
        for i in 0..n {
            w[i] = (0..n).map(|j| m[i * n + j] * v[j]).sum();
        }
        let norm = crate::math::sqrt(w.iter().map(|x| x * x).sum());
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm / crate::math::sqrt(v.iter().map(|x| x * x).sum());
        for i in 0..n {
            v[i] = w[i] / norm;
        }
    }
    lambda
}

/// Least-squares solution of the overdetermined system `a·x ≈ b`, with `a`
/// row-major `rows × cols`, by Householder QR. Returns `None` when `a` is
/// rank deficient (a diagonal entry of R below `tol` relative to the largest).
pub fn lstsq(a: &[f64], rows: usize, cols: usize, b: &[f64], tol: f64) -> Option<Vec<f64>> {
    assert_eq!(a.len(), rows * cols, "matrix size mismatch");
    assert_eq!(b.len(), rows, "rhs size mismatch");
    if rows < cols {
        return None;
    }
    let mut m = a.to_vec();
    let mut y = b.to_vec();
    let mut rmax = 0.0_f64;
    for k in 0..cols {
        let norm = crate::math::sqrt((k..rows).map(|r| m[r * cols + k] * m[r * cols + k]).sum());
        if norm == 0.0 {
            return None;
        }
        let alpha = if m[k * cols + k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..rows).map(|r| m[r * cols + k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for c in k..cols {
                let dot: f64 = (k..rows).map(|r| v[r - k] * m[r * cols + c]).sum();
                let f = 2.0 * dot / vnorm2;
                for r in k..rows {
                    m[r * cols + c] -= f * v[r - k];
                }
            }
            let dot: f64 = (k..rows).map(|r| v[r - k] * y[r]).sum();
            let f = 2.0 * dot / vnorm2;
            for r in k..rows {
                y[r] -= f * v[r - k];
            }
        }
        rmax = rmax.max(crate::math::abs(m[k * cols + k]));
    }
    let mut x = alloc::vec![0.0; cols];
    for k in (0..cols).rev() {
        let d = m[k * cols + k];
        if crate::math::abs(d) <= tol * rmax {
            return None;
        }
        let acc: f64 = ((k + 1)..cols).map(|c| m[k * cols + c] * x[c]).sum();
        x[k] = (y[k] - acc) / d;
    }
    Some(x)
}

/// Least-squares polynomial of degree `deg` through `(xs, ys)`, constant
/// coefficient first.
pub fn polyfit(xs: &[f64], ys: &[f64], deg: usize) -> Option<Vec<f64>> {
    let cols = deg + 1;
    let mut a = Vec::with_capacity(xs.len() * cols);
    for x in xs {
        let mut p = 1.0;
        for _ in 0..cols {
            a.push(p);
            p *= x;
        }
    }
    lstsq(&a, xs.len(), cols, ys, 1e-12)
}

/// Evaluates a constant-first polynomial by Horner's rule.
pub fn polyval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = [2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3).map(|i| (0..3).map(|j| a[i * 3 + j] * x_true[j]).sum()).collect();
        let x = solve(&a, &b, 1e-12).unwrap();
        for (xi, ti) in x.iter().zip(x_true) {
            assert!((xi - ti).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_is_rejected() {
        let a = [1.0, 2.0, 2.0, 4.0];
        assert!(solve(&a, &[1.0, 2.0], 1e-12).is_none());
    }

    #[test]
    fn power_iteration_finds_top_eigenvalue() {
        let m = [4.0, 1.0, 1.0, 3.0];
        let l = spectral_radius_psd(&m, 2, 200);
        let exact = 3.5 + (1.25f64).sqrt();
        assert!((l - exact).abs() < 1e-9);
    }
    #[test]
    fn lstsq_matches_exact_solution_for_consistent_system() {
        let a = [1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, -1.0];
        let x_true = [0.75, -1.25];
        let b: Vec<f64> = (0..4).map(|i| a[2 * i] * x_true[0] + a[2 * i + 1] * x_true[1]).collect();
        let x = lstsq(&a, 4, 2, &b, 1e-12).unwrap();
        assert!((x[0] - x_true[0]).abs() < 1e-14 && (x[1] - x_true[1]).abs() < 1e-14);
    }

    #[test]
    fn lstsq_residual_is_orthogonal_to_columns() {
        let a = [1.0, 1.0, 1.0, 2.0, 1.0, 3.0, 1.0, 4.0];
        let b = [1.0, 2.5, 2.9, 4.2];
        let x = lstsq(&a, 4, 2, &b, 1e-12).unwrap();
        for c in 0..2 {
            let dot: f64 = (0..4).map(|r| a[r * 2 + c] * (b[r] - a[r * 2] * x[0] - a[r * 2 + 1] * x[1])).sum();
            assert!(dot.abs() < 1e-12);
        }
    }

    #[test]
    fn lstsq_rejects_rank_deficient() {
        let a = [1.0, 2.0, 2.0, 4.0, 3.0, 6.0];
        assert!(lstsq(&a, 3, 2, &[1.0, 2.0, 3.0], 1e-12).is_none());
    }

    #[test]
    fn polyfit_recovers_quadratic() {
        let xs: Vec<f64> = (0..9).map(|i| 5.0 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|v| -9.3 - 0.013 * v + 0.00072 * v * v).collect();
        let c = polyfit(&xs, &ys, 2).unwrap();
        assert!((c[0] + 9.3).abs() < 1e-12);
        assert!((c[1] + 0.013).abs() < 1e-13);
        assert!((c[2] - 0.00072).abs() < 1e-14);
        assert!((polyval(&c, 20.0) + 9.272).abs() < 1e-12);
    }
}
