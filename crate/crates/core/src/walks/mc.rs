use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::sample_geo_graph;
use crate::rng::{split_seed, stream};
use crate::sphere::{dot, fill_uniform_sphere, tau_of};
use crate::stats::{mean_and_stderr, wilson_interval};
use crate::{Error, Result};

/// A small simple graph on vertices `0..vertices`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

pub const MAX_PATTERN_VERTICES: usize = 8;

impl Pattern {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if vertices == 0 || vertices > MAX_PATTERN_VERTICES {
            return Err(Error::InvalidArgument(format!("pattern must have 1..={MAX_PATTERN_VERTICES} vertices")));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(a, b) in &edges {
            if a == b || a >= vertices || b >= vertices || !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidArgument(format!("bad pattern edge ({a}, {b})")));
            }
        }
        Ok(Pattern { vertices, edges })
    }

    pub fn edge() -> Self {
        Pattern { vertices: 2, edges: vec![(0, 1)] }
    }

    pub fn path(k: usize) -> Self {
        Pattern { vertices: k, edges: (1..k).map(|i| (i - 1, i)).collect() }
    }

    pub fn cycle(k: usize) -> Self {
        Pattern { vertices: k, edges: (0..k).map(|i| (i, (i + 1) % k)).collect() }
    }

    pub fn is_forest(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.vertices).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return false;
            }
            parent[ra] = rb;
        }
        true
    }

    /// Random labeled forest: each vertex `i > 0` attaches to a uniform
    /// earlier vertex with probability `attach`.
    pub fn random_forest<R: Rng + ?Sized>(vertices: usize, attach: f64, rng: &mut R) -> Self {
        let edges = (1..vertices)
            .filter_map(|i| if rng.random::<f64>() < attach { Some((rng.random_range(0..i), i)) } else { None })
            .collect();
        Pattern { vertices, edges }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubgraphEstimate {
    pub hits: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// False when no trial succeeded; only `ci_high` is informative then.
    pub resolved: bool,
}

impl SubgraphEstimate {
    /// Binomial standard error of the estimate under success rate `p0`.
    pub fn sigma_at(&self, p0: f64) -> f64 {
        (p0 * (1.0 - p0) / self.trials as f64).sqrt()
    }
}

const CHUNK: u64 = 4096;

/// Fraction of i.i.d. uniform tuples `(u_0, ..., u_{k-1})` on S^{d-1} with
/// `<u_a, u_b> >= tau(p, d)` on every pattern edge; Wilson 95% interval.
pub fn subgraph_probability_mc(pattern: &Pattern, d: usize, p: f64, trials: u64, seed: u64) -> Result<SubgraphEstimate> {
    if trials == 0 {
        return Err(Error::EmptyInput("trials must be positive"));
    }
    let tau = tau_of(p, d)?.tau;
    let chunks = trials.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, "subgraph", c);
            let count = CHUNK.min(trials - c * CHUNK);
            let mut pts = vec![0.0; pattern.vertices * d];
            let mut hits = 0u64;
            for _ in 0..count {
                for row in pts.chunks_mut(d) {
                    fill_uniform_sphere(row, &mut rng);
                }
                let ok = pattern
                    .edges
                    .iter()
                    .all(|&(a, b)| dot(&pts[a * d..(a + 1) * d], &pts[b * d..(b + 1) * d]) >= tau);
                hits += u64::from(ok);
            }
            hits
        })
        .sum();
    let (ci_low, ci_high) = wilson_interval(hits, trials, 1.96);
    Ok(SubgraphEstimate { hits, trials, estimate: hits as f64 / trials as f64, ci_low, ci_high, resolved: hits > 0 })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceEstimate {
    pub ell: usize,
    pub mean: f64,
    pub stderr: f64,
    /// Mean spectral norm of the centered adjacency over the same samples.
    pub mean_norm: f64,
    pub trials: usize,
}

pub const TRACE_MAX_N: usize = 64;
pub const TRACE_MAX_ELL: usize = 8;

/// Monte Carlo mean of `tr((A - E A)^ell)` where `E A = p (J - I)`.
pub fn trace_power_mc(n: usize, d: usize, p: f64, ell: usize, trials: usize, seed: u64) -> Result<TraceEstimate> {
    if !(2..=TRACE_MAX_N).contains(&n) {
        return Err(Error::InvalidArgument(format!("n must be in 2..={TRACE_MAX_N}")));
    }
    if ell == 0 || ell > TRACE_MAX_ELL || ell % 2 == 1 {
        return Err(Error::InvalidArgument(format!("ell must be even and at most {TRACE_MAX_ELL}")));
    }
    if trials == 0 {
        return Err(Error::EmptyInput("trials must be positive"));
    }
    let samples: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let g = sample_geo_graph(n, d, p, split_seed(seed, "trace", t as u64))?;
            let m = DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    0.0
                } else {
                    f64::from(u8::from(g.has_edge(i, j))) - p
                }
            });
            let mut power = m.clone();
            for _ in 1..ell {
                power = &power * &m;
            }
            let eig = m.symmetric_eigenvalues();
            let norm = eig.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            Ok((power.trace(), norm))
        })
        .collect::<Result<_>>()?;
    let traces: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let (mean, stderr) = mean_and_stderr(&traces);
    let mean_norm = samples.iter().map(|s| s.1).sum::<f64>() / trials as f64;
    Ok(TraceEstimate { ell, mean, stderr, mean_norm, trials })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRow {
    pub pattern_id: String,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub analytic_reference: f64,
}
