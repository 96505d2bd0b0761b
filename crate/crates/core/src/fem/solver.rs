use super::{dot, CsrMatrix, FemError};

#[derive(Debug, Clone, PartialEq)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final `||b - A x|| / ||b||`.
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients, sequential and deterministic.
pub fn solve_cg(a: &CsrMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<CgSolution, FemError> {
    let n = a.n();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(CgSolution {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|d| if *d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = 1.0;
    for it in 1..=max_iter.max(1) {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(FemError::NoConvergence {
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
        if res <= rel_tol {
            return Ok(CgSolution {
                x,
                iterations: it,
                residual: res,
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(FemError::NoConvergence {
        iterations: max_iter,
        residual: res,
    })
}

/// Largest `lambda` with `M x = lambda A x` by inverse-free power iteration
/// on `A^{-1} M`; `A` must be SPD. Used for Friedrichs-type constants
/// `x^T M x <= C x^T A x`.
pub fn generalized_max_eigenvalue(a: &CsrMatrix, m: &CsrMatrix, iterations: usize) -> Result<f64, FemError> {
    let n = a.n();
    let mut x = vec![1.0; n];
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let mx = m.mul_vec(&x);
        let y = solve_cg(a, &mx, 1e-12, 20 * n + 100)?.x;
        let num = m.bilinear(&y, &y);
        let den = a.bilinear(&y, &y);
        if den <= 0.0 {
            break;
        }
        let next = num / den;
        let norm = dot(&y, &y).sqrt();
        x = y.iter().map(|v| v / norm).collect();
        let done = (next - lambda).abs() <= 1e-10 * next.abs();
        lambda = next;
        if done {
            break;
        }
    }
    Ok(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_in_one_step() {
        let a = CsrMatrix::identity(4);
        let b = [1.0, -2.0, 3.0, 0.5];
        let s = solve_cg(&a, &b, 1e-10, 80).unwrap();
        assert_eq!(s.iterations, 1);
        assert_eq!(s.x, b.to_vec());
    }

    #[test]
    fn two_by_two() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]);
        let s = solve_cg(&a, &[1.0, 1.0], 1e-12, 40).unwrap();
        assert!((s.x[0] - 1.0 / 3.0).abs() < 1e-14);
        assert!((s.x[1] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn no_convergence_is_reported() {
        let a = CsrMatrix::from_triplets(3, vec![(0, 0, 1.0), (1, 1, 100.0), (2, 2, 1e4), (0, 2, 0.9), (2, 0, 0.9)]);
        let err = solve_cg(&a, &[1.0, 1.0, 1.0], 1e-30, 1).unwrap_err();
        assert!(matches!(err, FemError::NoConvergence { iterations: 1, .. }));
    }

    #[test]
    fn generalized_eigenvalue_of_diagonal_pencil() {
        let a = CsrMatrix::from_triplets(3, vec![(0, 0, 1.0), (1, 1, 2.0), (2, 2, 4.0)]);
        let m = CsrMatrix::from_triplets(3, vec![(0, 0, 1.0), (1, 1, 3.0), (2, 2, 1.0)]);
        let l = generalized_max_eigenvalue(&a, &m, 500).unwrap();
        assert!((l - 1.5).abs() < 1e-8);
    }
}
