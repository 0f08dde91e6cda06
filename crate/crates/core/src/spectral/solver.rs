use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::operator::SymmetricOperator;
use crate::{Error, Result};

/// Operators up to this dimension are solved densely by default.
pub const DENSE_LIMIT: usize = 512;

const START_SEED: u64 = 0x1a2c_705e_ed00_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Iterative,
}

/// Extreme eigenvalues of an operator after removing its known top
/// eigenpair. `second_eigenvalue` is the signed second-largest eigenvalue;
/// `second_abs_eigenvalue = max(|second|, |bottom|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub top_eigenvalue: f64,
    pub second_eigenvalue: f64,
    pub second_abs_eigenvalue: f64,
    pub bottom_eigenvalue: f64,
    pub method: Method,
    pub residual: f64,
    pub iterations: usize,
}

/// All eigenvalues in decreasing order together with the eigenvectors as
/// columns (same order).
pub fn dense_eigen(n: usize, a: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = DMatrix::from_row_slice(n, n, a);
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn dense_spectrum<O: SymmetricOperator + ?Sized>(op: &O) -> Vec<f64> {
    dense_eigen(op.dim(), &op.to_dense()).0
}

fn top_rayleigh<O: SymmetricOperator + ?Sized>(op: &O, top: &[f64]) -> f64 {
    let mut y = vec![0.0; op.dim()];
    op.apply(top, &mut y);
    dot(top, &y)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn residual_norm<O: SymmetricOperator + ?Sized>(op: &O, deflate: Option<&[f64]>, v: &[f64], theta: f64) -> f64 {
    let mut y = vec![0.0; v.len()];
    op.apply(v, &mut y);
    if let Some(phi) = deflate {
        let c = dot(phi, &y);
        y.iter_mut().zip(phi).for_each(|(a, b)| *a -= c * b);
    }
    y.iter().zip(v).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt()
}

/// `|lambda|_2` with the default method for the operator's size.
pub fn second_abs_eigenvalue<O: SymmetricOperator + ?Sized>(op: &O, tol: f64) -> Result<SpectralReport> {
    let method = if op.dim() <= DENSE_LIMIT { Method::Dense } else { Method::Iterative };
    second_abs_eigenvalue_with(op, tol, method)
}

pub fn second_abs_eigenvalue_with<O: SymmetricOperator + ?Sized>(
    op: &O,
    tol: f64,
    method: Method,
) -> Result<SpectralReport> {
    if !(tol > 0.0) {
        return Err(Error::Domain { what: "tol", value: tol });
    }
    let n = op.dim();
    let top = op
        .top_eigenvector()
        .ok_or_else(|| Error::InvalidArgument("operator has no known top eigenvector to deflate".into()))?;
    if n < 2 {
        return Err(Error::EmptyInput("spectral gap needs at least two vertices"));
    }
    match method {
        Method::Dense => {
            let (values, vectors) = dense_eigen(n, &op.to_dense());
            // The deflated spectrum drops the eigenvalue whose eigenvector
            // overlaps the known top vector the most.
            let top_index = (0..n)
                .max_by(|&i, &j| {
                    let oi = dot(vectors.column(i).as_slice(), top).abs();
                    let oj = dot(vectors.column(j).as_slice(), top).abs();
                    oi.total_cmp(&oj).then(j.cmp(&i))
                })
                .expect("n >= 2");
            let rest: Vec<usize> = (0..n).filter(|&i| i != top_index).collect();
            let second = rest[0];
            let bottom = *rest.last().expect("n >= 2");
            let abs_index = if values[second].abs() >= values[bottom].abs() { second } else { bottom };
            let residual = residual_norm(op, None, vectors.column(abs_index).as_slice(), values[abs_index]);
            Ok(SpectralReport {
                top_eigenvalue: values[top_index],
                second_eigenvalue: values[second],
                second_abs_eigenvalue: values[second].abs().max(values[bottom].abs()),
                bottom_eigenvalue: values[bottom],
                method,
                residual,
                iterations: 0,
            })
        }
        Method::Iterative => {
            let cap = iteration_cap(n, tol);
            let ext = lanczos_extremes(op, Some(top), tol, cap, START_SEED)?;
            Ok(SpectralReport {
                top_eigenvalue: top_rayleigh(op, top),
                second_eigenvalue: ext.max,
                second_abs_eigenvalue: ext.max.abs().max(ext.min.abs()),
                bottom_eigenvalue: ext.min,
                method,
                residual: ext.residual,
                iterations: ext.iterations,
            })
        }
    }
}

/// `50 sqrt(n) log(1/tol)`, at most the dimension of the deflated space.
pub fn iteration_cap(n: usize, tol: f64) -> usize {
    let c = (50.0 * (n as f64).sqrt() * (1.0 / tol).ln().max(1.0)).ceil() as usize;
    c.min(n.saturating_sub(1)).max(1)
}

#[derive(Debug, Clone)]
pub struct Extremes {
    pub max: f64,
    pub min: f64,
    pub max_vector: Vec<f64>,
    pub min_vector: Vec<f64>,
    /// Larger of the two explicit Ritz residuals.
    pub residual: f64,
    pub iterations: usize,
}

/// Largest and smallest eigenvalues of `op` restricted to the orthogonal
/// complement of `deflate` (or of the whole space), by Lanczos with full
/// reorthogonalization. Converged when both extreme Ritz pairs have explicit
/// residual at most `tol * max(1, |ritz|)`.
pub fn lanczos_extremes<O: SymmetricOperator + ?Sized>(
    op: &O,
    deflate: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<Extremes> {
    let n = op.dim();
    let space = n - usize::from(deflate.is_some());
    if space == 0 {
        return Err(Error::EmptyInput("operator acts on an empty space"));
    }
    let steps = max_iter.min(space).max(1);
    let mut rng = crate::rng::from_seed(seed);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut alpha: Vec<f64> = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);

    let orthogonalize = |w: &mut Vec<f64>, basis: &[Vec<f64>]| {
        for _ in 0..2 {
            if let Some(phi) = deflate {
                let c = dot(phi, w);
                w.iter_mut().zip(phi).for_each(|(a, b)| *a -= c * b);
            }
            for v in basis {
                let c = dot(v, w);
                w.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
            }
        }
    };
    let fresh = |rng: &mut crate::rng::StreamRng, basis: &[Vec<f64>]| -> Option<Vec<f64>> {
        for _ in 0..8 {
            let mut w: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            orthogonalize(&mut w, basis);
            let norm = dot(&w, &w).sqrt();
            if norm > 1e-8 {
                w.iter_mut().for_each(|x| *x /= norm);
                return Some(w);
            }
        }
        None
    };

    let mut v = fresh(&mut rng, &basis).ok_or(Error::Singular("no start vector orthogonal to the deflated vector"))?;
    let mut w = vec![0.0; n];
    let mut last_residual = f64::INFINITY;
    for k in 0..steps {
        op.apply(&v, &mut w);
        if let Some(phi) = deflate {
            let c = dot(phi, &w);
            w.iter_mut().zip(phi).for_each(|(a, b)| *a -= c * b);
        }
        let a = dot(&v, &w);
        alpha.push(a);
        basis.push(v.clone());
        orthogonalize(&mut w, &basis);
        let b = dot(&w, &w).sqrt();
        let scale = alpha.iter().fold(1e-300f64, |m, x| m.max(x.abs()));
        let breakdown = b <= 1e-12 * scale.max(1.0);
        let last = k + 1 == steps;

        if last || breakdown || (k + 1) % 8 == 0 {
            let (theta, s) = tridiagonal_eigen(&alpha, &beta);
            let m = theta.len();
            let (imax, imin) = (0, m - 1);
            let est = |i: usize| b * s[(m - 1, i)].abs();
            let thr = |x: f64| tol * x.abs().max(1.0);
            let exhausted = last && k + 1 == space;
            if exhausted || (est(imax) <= thr(theta[imax]) && est(imin) <= thr(theta[imin])) || (breakdown && k + 1 == space)
            {
                let ritz = |i: usize| -> Vec<f64> {
                    let mut y = vec![0.0; n];
                    for (j, bj) in basis.iter().enumerate() {
                        let c = s[(j, i)];
                        y.iter_mut().zip(bj).for_each(|(a, b)| *a += c * b);
                    }
                    y
                };
                let (ymax, ymin) = (ritz(imax), ritz(imin));
                let rmax = residual_norm(op, deflate, &ymax, theta[imax]);
                let rmin = residual_norm(op, deflate, &ymin, theta[imin]);
                last_residual = rmax.max(rmin);
                if exhausted || (rmax <= thr(theta[imax]) && rmin <= thr(theta[imin])) {
                    return Ok(Extremes {
                        max: theta[imax],
                        min: theta[imin],
                        max_vector: ymax,
                        min_vector: ymin,
                        residual: last_residual,
                        iterations: k + 1,
                    });
                }
            } else {
                last_residual = est(imax).max(est(imin));
            }
        }
        if last {
            break;
        }
        if breakdown {
            // Invariant subspace found: restart in its complement.
            match fresh(&mut rng, &basis) {
                Some(nv) => {
                    beta.push(0.0);
                    v = nv;
                }
                None => break,
            }
        } else {
            beta.push(b);
            v = w.iter().map(|x| x / b).collect();
        }
    }
    Err(Error::NoConvergence { iterations: basis.len(), residual: last_residual })
}

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta`; eigenvalues decreasing.
fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = alpha.len();
    let mut t = vec![0.0; m * m];
    for i in 0..m {
        t[i * m + i] = alpha[i];
        if i + 1 < m {
            t[i * m + i + 1] = beta[i];
            t[(i + 1) * m + i] = beta[i];
        }
    }
    dense_eigen(m, &t)
}
