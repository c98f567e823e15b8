//! Small dense linear-algebra helpers shared by the identification routines.
//!
//! Least squares goes through orthogonal factorization, never normal
//! equations; the generalized symmetric eigenproblem is reduced through a
//! Cholesky factor so eigenvectors come out mass-normalized.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative diagonal threshold below which an R factor is treated as rank deficient.
const RANK_TOL: f64 = 1.0e-12;

/// Least-squares solution of `a x ≈ b` via Householder QR.
///
/// Fails with [`Error::RankDeficient`] when the triangular factor has a
/// diagonal entry below `RANK_TOL` times its largest diagonal magnitude.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::RankDeficient(format!(
            "underdetermined system ({m} rows, {n} unknowns)"
        )));
    }
    let qr = a.clone().qr();
    let mut rhs = b.clone();
    qr.q_tr_mul(&mut rhs);
    let r = qr.r();
    let diag_max = (0..n).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if diag_max == 0.0 {
        return Err(Error::RankDeficient("zero matrix".into()));
    }
    for i in 0..n {
        if r[(i, i)].abs() < RANK_TOL * diag_max {
            return Err(Error::RankDeficient(format!(
                "pivot {i} is {:.3e} of the largest",
                r[(i, i)].abs() / diag_max
            )));
        }
    }
    let c = rhs.rows(0, n).into_owned();
    r.view((0, 0), (n, n))
        .solve_upper_triangular(&c)
        .ok_or_else(|| Error::RankDeficient("triangular solve failed".into()))
}

/// Upper-triangular factor of the QR decomposition of `a` (min(m,n) x n).
pub fn qr_r(a: DMatrix<f64>) -> DMatrix<f64> {
    a.qr().r()
}

/// Minimum-norm least-squares solution of `a x ~= b` through the SVD,
/// discarding singular values below `max(m, n) * eps * sigma_max`.
///
/// Over-parameterized fits routinely produce working-precision-singular
/// systems (surplus poles on exactly rational data); the pseudo-inverse
/// solution zeroes the unconstrained directions instead of amplifying them.
/// Structurally underdetermined systems (fewer rows than unknowns) are still
/// rejected.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::RankDeficient(format!(
            "underdetermined system ({m} rows, {n} unknowns)"
        )));
    }
    let svd = nalgebra::linalg::SVD::try_new(a.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::EigenFailure("SVD did not converge".into()))?;
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        if b.norm() == 0.0 {
            return Ok(DVector::zeros(n));
        }
        return Err(Error::RankDeficient("zero matrix with nonzero data".into()));
    }
    let eps = m.max(n) as f64 * f64::EPSILON * smax;
    svd.solve(b, eps)
        .map(|x| x.column(0).into_owned())
        .map_err(|e| Error::RankDeficient(e.to_string()))
}

/// Generalized symmetric-definite eigenproblem `K phi = omega^2 M phi`.
///
/// Returns ascending circular frequencies `omega_n` and the matrix of
/// mass-normalized eigenvectors (`Phi^T M Phi = I`).
pub fn generalized_eigen(
    k: &DMatrix<f64>,
    m: &DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = k.nrows();
    if k.shape() != (n, n) || m.shape() != (n, n) {
        return Err(Error::InvalidInput("K and M must be square and same size".into()));
    }
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::EigenFailure("mass matrix not positive definite".into()))?;
    let l = chol.l();
    // S = L^-1 K L^-T, symmetric by construction of K.
    let x = l
        .solve_lower_triangular(k)
        .ok_or_else(|| Error::EigenFailure("singular Cholesky factor".into()))?;
    let mut s = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::EigenFailure("singular Cholesky factor".into()))?;
    // symmetrize rounding residue
    let st = s.transpose();
    s = (s + st) * 0.5;
    let eig = nalgebra::linalg::SymmetricEigen::try_new(s, f64::EPSILON, 0)
        .ok_or_else(|| Error::EigenFailure("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lt = l.transpose();
    let mut omegas = DVector::zeros(n);
    let mut phi = DMatrix::zeros(n, n);
    for (col, &idx) in order.iter().enumerate() {
        let lam = eig.eigenvalues[idx];
        if lam < 0.0 && lam.abs() > 1e-8 * eig.eigenvalues[order[n - 1]].abs() {
            return Err(Error::EigenFailure(format!("negative eigenvalue {lam:e}")));
        }
        omegas[col] = lam.max(0.0).sqrt();
        let v = eig.eigenvectors.column(idx).into_owned();
        let p = lt
            .solve_upper_triangular(&v)
            .ok_or_else(|| Error::EigenFailure("singular Cholesky factor".into()))?;
        phi.set_column(col, &p);
    }
    Ok((omegas, phi))
}

/// Eigenvalues of a real (generally nonsymmetric) matrix via the real Schur form.
pub fn real_matrix_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 200 * n.max(10))
        .ok_or_else(|| Error::EigenFailure("Schur iteration did not converge".into()))?;
    let ev = schur.complex_eigenvalues();
    Ok(ev.iter().map(|z| Complex64::new(z.re, z.im)).collect())
}

/// Eigenvector of a real matrix for a known (possibly complex) eigenvalue,
/// computed by shifted inverse iteration with a deterministic start vector.
pub fn complex_eigenvector(a: &DMatrix<f64>, lambda: Complex64) -> Result<DVector<Complex64>> {
    let n = a.nrows();
    let ac: DMatrix<Complex64> = a.map(|x| Complex64::new(x, 0.0));
    let scale = lambda.norm().max(a.amax()).max(1.0);
    // keep the shifted matrix invertible without drifting to a neighbor eigenvalue
    let mu = lambda + Complex64::new(1e-10, 1e-10) * scale;
    let mut shifted = ac.clone();
    for i in 0..n {
        shifted[(i, i)] -= mu;
    }
    let lu = nalgebra::linalg::LU::new(shifted);
    let mut v: DVector<Complex64> =
        DVector::from_fn(n, |i, _| Complex64::new(1.0, 0.3 + i as f64 / n as f64));
    v /= Complex64::new(v.norm(), 0.0);
    let mut best = v.clone();
    let mut best_res = f64::INFINITY;
    for _ in 0..5 {
        let solved = match lu.solve(&v) {
            Some(x) => x,
            None => break,
        };
        let nrm = solved.norm();
        if !nrm.is_finite() || nrm == 0.0 {
            break;
        }
        v = solved / Complex64::new(nrm, 0.0);
        let res = (&ac * &v - &v * lambda).norm();
        if res < best_res {
            best_res = res;
            best = v.clone();
        }
        if res < 1e-12 * scale {
            break;
        }
    }
    if !best_res.is_finite() {
        return Err(Error::EigenFailure(format!(
            "inverse iteration failed for eigenvalue {lambda}"
        )));
    }
    Ok(best)
}

/// Thin SVD wrapper returning `(U, sigma, V^T)`.
pub fn svd(a: DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let svd = nalgebra::linalg::SVD::try_new(a, true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::EigenFailure("SVD did not converge".into()))?;
    let u = svd.u.ok_or_else(|| Error::EigenFailure("SVD missing U".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::EigenFailure("SVD missing V^T".into()))?;
    Ok((u, svd.singular_values, vt))
}
