use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::WeightedGraph;
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::spectral::{second_abs_eigenvalue_with, DenseSymmetric, Method};
use crate::sphere::{dot, shifted_threshold, BetaDist, CapSampler, TailTable, UnitVector};

/// Largest `m` handled with a dense eigendecomposition.
pub const SHELL_DENSE_LIMIT: usize = 2048;

/// Heights `kappa_i = <w, v_i>` of the vertices of one link around its
/// center `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellVector {
    kappas: Vec<f64>,
    tau: f64,
    d: usize,
}

impl ShellVector {
    pub fn new(kappas: Vec<f64>, tau: f64, d: usize) -> Result<Self> {
        if d < 3 {
            return Err(Error::InvalidDimension(d));
        }
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::Domain { what: "tau", value: tau });
        }
        if let Some(&k) = kappas.iter().find(|&&k| !(k >= tau && k <= 1.0)) {
            return Err(Error::Domain { what: "kappa", value: k });
        }
        Ok(ShellVector { kappas, tau, d })
    }

    pub fn kappas(&self) -> &[f64] {
        &self.kappas
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.kappas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappas.is_empty()
    }
}

fn check_pair(kappa: f64, tau: f64) -> Result<()> {
    if kappa == 1.0 {
        return Err(Error::Singular("shell height equal to 1"));
    }
    if !(kappa >= tau && kappa < 1.0) {
        return Err(Error::Domain { what: "kappa", value: kappa });
    }
    Ok(())
}

/// `Pr[<v_i, v_j> >= tau]` given the two shell heights: the `Beta_{d-1}`
/// tail at the shifted threshold `T(kappa_i, kappa_j)`.
pub fn conditional_edge_prob(kappa_i: f64, kappa_j: f64, tau: f64, d: usize) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain { what: "tau", value: tau });
    }
    if d < 3 {
        return Err(Error::InvalidDimension(d));
    }
    check_pair(kappa_i, tau)?;
    check_pair(kappa_j, tau)?;
    let t = shifted_threshold(kappa_i, kappa_j, tau)?.clamp(-1.0, 1.0);
    BetaDist::new(d - 1)?.tail(t)
}

/// `q = Pr_{Beta_{d-1}}[X >= tau / (1 + tau)]`, the edge probability at the
/// inner shell and its minimum over all pairs.
pub fn min_edge_prob(tau: f64, d: usize) -> Result<f64> {
    if d < 3 {
        return Err(Error::InvalidDimension(d));
    }
    BetaDist::new(d - 1)?.tail(tau / (1.0 + tau))
}

/// `m` i.i.d. draws of `Beta_d` conditioned on `[tau, 1]`.
pub fn sample_shells<R: Rng + ?Sized>(m: usize, tau: f64, d: usize, rng: &mut R) -> Result<ShellVector> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("need at least two shells, got {m}")));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain { what: "tau", value: tau });
    }
    let sampler = CapSampler::new(d, tau)?;
    // keep strictly below 1 so every pair has a finite shifted threshold
    let kappas = (0..m).map(|_| sampler.sample_projection(rng).min(1.0 - f64::EPSILON)).collect();
    ShellVector::new(kappas, tau, d)
}

/// A link sampled directly from a cap: `m` points of the cap around
/// `e_0`, joined when their inner product clears `tau`.
#[derive(Debug, Clone)]
pub struct CapLink {
    pub shells: ShellVector,
    pub graph: WeightedGraph,
}

pub fn sample_cap_link(m: usize, tau: f64, d: usize, seed: u64) -> Result<CapLink> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("need at least two link vertices, got {m}")));
    }
    let sampler = CapSampler::new(d, tau)?;
    let center = UnitVector::basis(d, 0)?;
    let points: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, "cap-link", i as u64);
            let mut out = vec![0.0; d];
            sampler.sample_around_into(center.coords(), &mut out, &mut rng);
            out
        })
        .collect();
    let kappas = points.iter().map(|p| p[0].clamp(tau, 1.0 - f64::EPSILON)).collect();
    let edges: Vec<(u32, u32, f64)> = (0..m)
        .into_par_iter()
        .flat_map_iter(|i| {
            let points = &points;
            ((i + 1)..m)
                .filter(move |&j| dot(&points[i], &points[j]) >= tau)
                .map(move |j| (i as u32, j as u32, 1.0))
        })
        .collect();
    Ok(CapLink { shells: ShellVector::new(kappas, tau, d)?, graph: WeightedGraph::from_edges(m, &edges) })
}

/// Expected link adjacency given the shells, its row normalization and
/// stationary distribution. Dense, row-major.
#[derive(Debug, Clone)]
pub struct ShellMatrices {
    m: usize,
    tau: f64,
    d: usize,
    q: Vec<f64>,
    degrees: Vec<f64>,
    qbar: Vec<f64>,
    pi: Vec<f64>,
}

impl ShellMatrices {
    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.m + j]
    }

    pub fn q_row(&self, i: usize) -> &[f64] {
        &self.q[i * self.m..(i + 1) * self.m]
    }

    /// Diagonal of `D_kappa`: the expected degree of each vertex.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn qbar(&self, i: usize, j: usize) -> f64 {
        self.qbar[i * self.m + j]
    }

    pub fn qbar_row(&self, i: usize) -> &[f64] {
        &self.qbar[i * self.m..(i + 1) * self.m]
    }

    pub fn qbar_entries(&self) -> &[f64] {
        &self.qbar
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    /// Largest deviation from the structural identities: row sums of
    /// `Qbar`, `pi Qbar = pi`, and detailed balance.
    pub fn invariant_errors(&self) -> InvariantErrors {
        let m = self.m;
        let row_sum = (0..m).map(|i| (self.qbar_row(i).iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
        let stationarity = (0..m)
            .map(|j| ((0..m).map(|i| self.pi[i] * self.qbar(i, j)).sum::<f64>() - self.pi[j]).abs())
            .fold(0.0, f64::max);
        let mut balance = 0.0f64;
        for i in 0..m {
            for j in (i + 1)..m {
                balance = balance.max((self.pi[i] * self.qbar(i, j) - self.pi[j] * self.qbar(j, i)).abs());
            }
        }
        InvariantErrors { row_sum, stationarity, detailed_balance: balance }
    }

    /// `D^{-1/2} Q D^{-1/2}`, similar to `Qbar`, and its top eigenvector
    /// `sqrt(pi)`.
    pub fn symmetrized(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.m;
        let s: Vec<f64> = self.degrees.iter().map(|x| 1.0 / x.sqrt()).collect();
        let mut a = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                a[i * m + j] = s[i] * self.q[i * m + j] * s[j];
            }
        }
        (a, self.pi.iter().map(|p| p.sqrt()).collect())
    }

    /// `Qbar^2`, row-major.
    pub fn qbar_squared(&self) -> Vec<f64> {
        let qb = DMatrix::from_row_slice(self.m, self.m, &self.qbar);
        let sq = &qb * &qb;
        // nalgebra is column-major; the transpose's storage is row-major
        sq.transpose().as_slice().to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantErrors {
    pub row_sum: f64,
    pub stationarity: f64,
    pub detailed_balance: f64,
}

/// Assembles `Q[i, j] = tail_{d-1}(T(kappa_i, kappa_j))` (zero diagonal),
/// `D`, `Qbar = D^{-1} Q` and `pi = D 1 / tr D`.
pub fn build_shell_matrices(kappa: &ShellVector) -> Result<ShellMatrices> {
    let m = kappa.len();
    if m < 2 {
        return Err(Error::InvalidArgument(format!("need at least two shells, got {m}")));
    }
    let (tau, d) = (kappa.tau(), kappa.dim());
    let k = kappa.kappas();
    if let Some(&x) = k.iter().find(|&&x| x >= 1.0) {
        check_pair(x, tau)?;
    }
    let table = TailTable::new(d - 1)?;
    let upper: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..m)
                .map(|j| {
                    let t = shifted_threshold(k[i], k[j], tau)?.clamp(-1.0, 1.0);
                    Ok(table.tail(t)?.min(1.0))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut q = vec![0.0; m * m];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            q[i * m + j] = v;
            q[j * m + i] = v;
        }
    }
    let degrees: Vec<f64> = (0..m).map(|i| q[i * m..(i + 1) * m].iter().sum()).collect();
    if let Some(i) = degrees.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::DegenerateDegree { vertex: i });
    }
    let mut qbar = q.clone();
    for i in 0..m {
        qbar[i * m..(i + 1) * m].iter_mut().for_each(|x| *x /= degrees[i]);
    }
    let trace: f64 = degrees.iter().sum();
    let pi = degrees.iter().map(|x| x / trace).collect();
    Ok(ShellMatrices { m, tau, d, q, degrees, qbar, pi })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellSpectrum {
    /// `|lambda|_max(Qbar - 1 pi^T)`.
    pub lambda_max_deflated: f64,
    pub method: Method,
}

/// `|lambda|_max(Qbar - 1 pi^T)` through the symmetrized matrix with its top
/// eigenvector `sqrt(pi)` projected out.
pub fn shell_spectral_check(mats: &ShellMatrices, tol: f64) -> Result<ShellSpectrum> {
    let m = mats.len();
    let (mut a, phi) = mats.symmetrized();
    if m <= SHELL_DENSE_LIMIT {
        for i in 0..m {
            for j in 0..m {
                a[i * m + j] -= phi[i] * phi[j];
            }
        }
        let values = DMatrix::from_row_slice(m, m, &a).symmetric_eigenvalues();
        let lambda = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        Ok(ShellSpectrum { lambda_max_deflated: lambda, method: Method::Dense })
    } else {
        let op = DenseSymmetric::new(m, a)?.with_top_eigenvector(phi)?;
        let report = second_abs_eigenvalue_with(&op, tol, Method::Iterative)?;
        Ok(ShellSpectrum { lambda_max_deflated: report.second_abs_eigenvalue, method: Method::Iterative })
    }
}
