use serde::{Deserialize, Serialize};

use super::operator::{MinusRank1, SymmetricOperator};
use super::solver::{dense_spectrum, iteration_cap, lanczos_extremes, DENSE_LIMIT};
use crate::complex::WeightedGraph;
use crate::{Error, Result};

/// Rank-1 positive semidefinite matrix `v v^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1 {
    v: Vec<f64>,
}

impl Rank1 {
    pub fn from_vector(v: Vec<f64>) -> Self {
        Rank1 { v }
    }

    /// `c u u^T` for `c >= 0`.
    pub fn scaled(c: f64, u: &[f64]) -> Result<Self> {
        if !(c >= 0.0) {
            return Err(Error::NotRankOnePsd(format!("negative scale {c}")));
        }
        Ok(Rank1 { v: u.iter().map(|x| x * c.sqrt()).collect() })
    }

    /// Validates a dense row-major matrix as `v v^T` within `tol` (relative
    /// to its largest entry) and recovers `v`.
    pub fn from_dense(n: usize, r: &[f64], tol: f64) -> Result<Self> {
        if r.len() != n * n {
            return Err(Error::NotRankOnePsd("wrong number of entries".into()));
        }
        let scale = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return Ok(Rank1 { v: vec![0.0; n] });
        }
        let k = (0..n)
            .max_by(|&i, &j| r[i * n + i].total_cmp(&r[j * n + j]))
            .expect("n > 0");
        let pivot = r[k * n + k];
        if pivot <= 0.0 {
            return Err(Error::NotRankOnePsd("no positive diagonal entry".into()));
        }
        let v: Vec<f64> = (0..n).map(|i| r[i * n + k] / pivot.sqrt()).collect();
        for i in 0..n {
            for j in 0..n {
                if (r[i * n + j] - v[i] * v[j]).abs() > tol * scale {
                    return Err(Error::NotRankOnePsd(format!("entry ({i}, {j}) differs from v v^T")));
                }
            }
        }
        Ok(Rank1 { v })
    }

    pub fn vector(&self) -> &[f64] {
        &self.v
    }
}

/// Spectral norm `||op - R||`, which bounds `|lambda|_2(op)` from above.
pub fn rank1_deflated_norm<O: SymmetricOperator + ?Sized>(op: &O, r: &Rank1, tol: f64) -> Result<f64> {
    if r.v.len() != op.dim() {
        return Err(Error::NotRankOnePsd("dimension mismatch".into()));
    }
    let m = MinusRank1 { op, v: &r.v };
    spectral_norm(&m, tol)
}

pub fn spectral_norm<O: SymmetricOperator + ?Sized>(op: &O, tol: f64) -> Result<f64> {
    let n = op.dim();
    if n <= DENSE_LIMIT {
        let s = dense_spectrum(op);
        return Ok(s.first().map_or(0.0, |x| x.abs()).max(s.last().map_or(0.0, |x| x.abs())));
    }
    let ext = lanczos_extremes(op, None, tol, iteration_cap(n + 1, tol), 0x6e6f_726d)?;
    Ok(ext.max.abs().max(ext.min.abs()))
}

/// Maximum absolute row sum, an upper bound on every `|eigenvalue|`.
pub fn row_sum_bound<O: SymmetricOperator + ?Sized>(op: &O) -> f64 {
    op.abs_row_sums().into_iter().fold(0.0, f64::max)
}

/// Lower bound on the second eigenvalue of the random walk on `graph` using
/// the points `embedding[i]` as a vector-valued test function:
/// `1 - E_edge |v_x - v_y|^2 / E_{pi x pi} |v_x - v_y|^2`, where edges are
/// drawn proportional to weight.
pub fn rayleigh_lower_bound(graph: &WeightedGraph, embedding: &[&[f64]], stationary: &[f64]) -> Result<f64> {
    let n = graph.n();
    if embedding.len() != n || stationary.len() != n {
        return Err(Error::InvalidArgument("embedding and stationary vector must cover every vertex".into()));
    }
    let mass: f64 = stationary.iter().sum();
    if (mass - 1.0).abs() > 1e-9 || stationary.iter().any(|&p| p < 0.0) {
        return Err(Error::InvalidArgument(format!("stationary vector sums to {mass}, not 1")));
    }
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();

    let mut edge_sum = 0.0;
    let mut edge_weight = 0.0;
    for (i, j, w) in graph.edges() {
        edge_sum += w * sq(embedding[i], embedding[j]);
        edge_weight += w;
    }
    if edge_weight == 0.0 {
        return Err(Error::EmptyInput("graph has no edges"));
    }
    // sum_{x,y} pi_x pi_y |v_x - v_y|^2 = 2 (sum pi |v|^2 - |sum pi v|^2)
    let d = embedding[0].len();
    let mut mean = vec![0.0; d];
    let mut second = 0.0;
    for (v, &p) in embedding.iter().zip(stationary) {
        second += p * v.iter().map(|x| x * x).sum::<f64>();
        mean.iter_mut().zip(v.iter()).for_each(|(m, x)| *m += p * x);
    }
    let spread = 2.0 * (second - mean.iter().map(|x| x * x).sum::<f64>());
    if spread <= 1e-14 * second.max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateEmbedding);
    }
    Ok(1.0 - (edge_sum / edge_weight) / spread)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrickleDown {
    pub link_lambda: f64,
    pub skeleton_lambda: f64,
    pub bound: f64,
    /// `bound + tol - skeleton_lambda`; nonnegative iff the check passes.
    pub slack: f64,
    pub pass: bool,
}

/// Checks `skeleton_lambda <= link_lambda / (1 - link_lambda) + tol`.
pub fn trickle_down_check(skeleton_lambda: f64, link_lambda: f64, tol: f64) -> Result<TrickleDown> {
    if link_lambda >= 1.0 {
        return Err(Error::VacuousInput(format!("link eigenvalue {link_lambda} >= 1 gives no bound")));
    }
    if !(link_lambda >= 0.0) {
        return Err(Error::Domain { what: "link_lambda", value: link_lambda });
    }
    let bound = link_lambda / (1.0 - link_lambda);
    let slack = bound + tol - skeleton_lambda;
    Ok(TrickleDown { link_lambda, skeleton_lambda, bound, slack, pass: slack >= 0.0 })
}
