//! Dense kernels in the `L²(P)` inner product.
//!
//! Vectors are plain value slices; the inner product weights outcome `i`
//! by `p_i`. Matrices handed to `nalgebra` for eigen-solves are first
//! conjugated by `diag(√p)` so that `P`-self-adjoint operators become
//! symmetric.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub fn inner(probs: &[f64], a: &[f64], b: &[f64]) -> f64 {
    probs.iter().zip(a.iter().zip(b)).map(|(p, (x, y))| p * x * y).sum()
}

pub fn norm(probs: &[f64], a: &[f64]) -> f64 {
    inner(probs, a, a).sqrt()
}

fn subtract_projection<T: AsRef<[f64]>>(probs: &[f64], v: &mut [f64], basis: &[T]) {
    for e in basis {
        let e = e.as_ref();
        let c = inner(probs, e, v);
        if c != 0.0 {
            v.iter_mut().zip(e).for_each(|(x, y)| *x -= c * y);
        }
    }
}

/// Outcome of [`extend_orthonormal`] when a candidate cannot be classified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankAmbiguity {
    pub residual: f64,
}

/// Extends the orthonormal family `existing` by an orthonormal basis of the
/// part of `span(candidates)` orthogonal to it.
///
/// Candidates are pivoted by largest relative residual. A residual below
/// `tol` (relative to the candidate's original norm) counts as dependent,
/// one above `√tol` as new; anything in between is reported as ambiguous.
pub fn extend_orthonormal<T: AsRef<[f64]>>(
    probs: &[f64],
    existing: &[T],
    candidates: Vec<Vec<f64>>,
    tol: f64,
) -> Result<Vec<Vec<f64>>, RankAmbiguity> {
    let accept = tol.sqrt();
    let mut pool: Vec<(Vec<f64>, f64)> = candidates
        .into_iter()
        .filter_map(|mut v| {
            let n0 = norm(probs, &v);
            if n0 == 0.0 {
                return None;
            }
            subtract_projection(probs, &mut v, existing);
            subtract_projection(probs, &mut v, existing);
            Some((v, n0))
        })
        .collect();
    let mut found: Vec<Vec<f64>> = Vec::new();
    loop {
        let best = pool
            .iter()
            .enumerate()
            .map(|(i, (v, n0))| (i, norm(probs, v) / n0))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((i, rel)) = best else { break };
        if rel < tol {
            break;
        }
        if rel < accept {
            return Err(RankAmbiguity { residual: rel });
        }
        let (mut v, _) = pool.swap_remove(i);
        subtract_projection(probs, &mut v, existing);
        subtract_projection(probs, &mut v, &found);
        let n = norm(probs, &v);
        v.iter_mut().for_each(|x| *x /= n);
        for (w, _) in pool.iter_mut() {
            let c = inner(probs, &v, w);
            w.iter_mut().zip(&v).for_each(|(x, y)| *x -= c * y);
        }
        found.push(v);
    }
    Ok(found)
}

/// Coordinates of `f` against an orthonormal family.
pub fn coefficients<T: AsRef<[f64]>>(probs: &[f64], basis: &[T], f: &[f64]) -> Vec<f64> {
    basis.iter().map(|e| inner(probs, e.as_ref(), f)).collect()
}

/// Orthogonal projection of `f` onto the span of an orthonormal family.
pub fn project<T: AsRef<[f64]>>(probs: &[f64], basis: &[T], f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for e in basis {
        let e = e.as_ref();
        let c = inner(probs, e, f);
        out.iter_mut().zip(e).for_each(|(o, x)| *o += c * x);
    }
    out
}

/// `diag(√p) M diag(1/√p)`.
pub fn whiten(probs: &[f64], m: &DMatrix<f64>) -> DMatrix<f64> {
    let s: Vec<f64> = probs.iter().map(|p| p.sqrt()).collect();
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| s[i] * m[(i, j)] / s[j])
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Eigenpairs of a symmetric matrix, ascending.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Vec<(f64, DVector<f64>)> {
    let eig = SymmetricEigen::new(m.clone());
    let mut pairs: Vec<(f64, DVector<f64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, eig.eigenvectors.column(i).into_owned()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Sine of the largest principal angle between the spans of two
/// orthonormal families (1 when the dimensions differ), computed as the
/// largest singular value of the residual of `b` after projecting on `a`.
pub fn subspace_distance<A: AsRef<[f64]>, B: AsRef<[f64]>>(probs: &[f64], a: &[A], b: &[B]) -> f64 {
    if a.len() != b.len() {
        return 1.0;
    }
    if a.is_empty() {
        return 0.0;
    }
    let sq: Vec<f64> = probs.iter().map(|p| p.sqrt()).collect();
    let residual = DMatrix::from_fn(probs.len(), b.len(), |i, j| {
        let bj = b[j].as_ref();
        let proj: f64 = a.iter().map(|ak| inner(probs, ak.as_ref(), bj) * ak.as_ref()[i]).sum();
        sq[i] * (bj[i] - proj)
    });
    residual.singular_values().iter().copied().fold(0.0, f64::max)
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extends_and_detects_dependence() {
        let p = [0.25; 4];
        let one = vec![vec![1.0; 4]];
        let cands = vec![vec![1.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 1.0]];
        let found = extend_orthonormal(&p, &one, cands, 1e-9).unwrap();
        assert_eq!(found.len(), 1);
        assert!((norm(&p, &found[0]) - 1.0).abs() < 1e-14);
        assert!(inner(&p, &found[0], &one[0]).abs() < 1e-14);
        assert!((found[0][0].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn flags_ambiguous_residuals() {
        let p = [0.5, 0.5];
        let one = vec![vec![1.0, 1.0]];
        let cands = vec![vec![1.0, 1.0 + 1e-6]];
        let err = extend_orthonormal(&p, &one, cands, 1e-9).unwrap_err();
        assert!(err.residual > 1e-9 && err.residual < 1e-4);
    }

    #[test]
    fn principal_angle_distance() {
        let p = [0.5, 0.5];
        let a = vec![vec![1.0, 1.0]];
        let b = vec![vec![-1.0, -1.0]];
        assert!(subspace_distance(&p, &a, &b) < 1e-12);
        let c = vec![vec![1.0, -1.0]];
        assert!((subspace_distance(&p, &a, &c) - 1.0).abs() < 1e-12);
    }
}
