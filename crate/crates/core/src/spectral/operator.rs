use rayon::prelude::*;

use crate::complex::WeightedGraph;
use crate::{Error, Result};

/// A real symmetric linear operator given by its action on vectors.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;

    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Unit eigenvector of the top eigenvalue when it is known in closed
    /// form; spectral routines deflate it.
    fn top_eigenvector(&self) -> Option<&[f64]> {
        None
    }

    /// Row-major dense matrix.
    fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let mut a = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            e[j] = 0.0;
            for i in 0..n {
                a[i * n + j] = col[i];
            }
        }
        a
    }

    /// `sum_j |op[i, j]|` for every row.
    fn abs_row_sums(&self) -> Vec<f64> {
        let n = self.dim();
        let a = self.to_dense();
        (0..n).map(|i| a[i * n..(i + 1) * n].iter().map(|x| x.abs()).sum()).collect()
    }
}

/// `D^{-1/2} A D^{-1/2}` for a weighted graph with positive degrees.
#[derive(Debug, Clone)]
pub struct NormalizedAdjacency {
    graph: WeightedGraph,
    inv_sqrt_degree: Vec<f64>,
    top: Vec<f64>,
}

pub fn normalized_adjacency(graph: &WeightedGraph) -> Result<NormalizedAdjacency> {
    let degrees = graph.degrees();
    if let Some(v) = degrees.iter().position(|&d| d <= 0.0) {
        return Err(Error::DegenerateDegree { vertex: v });
    }
    let total: f64 = degrees.iter().sum();
    let top = degrees.iter().map(|d| (d / total).sqrt()).collect();
    let inv_sqrt_degree = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    Ok(NormalizedAdjacency { graph: graph.clone(), inv_sqrt_degree, top })
}

impl NormalizedAdjacency {
    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    /// Stationary distribution of the random walk, `deg / sum(deg)`.
    pub fn stationary(&self) -> Vec<f64> {
        self.top.iter().map(|x| x * x).collect()
    }

    fn row_value(&self, i: usize, x: &[f64]) -> f64 {
        let (t, w) = self.graph.row(i);
        let s: f64 = t.iter().zip(w).map(|(&j, &wij)| wij * self.inv_sqrt_degree[j as usize] * x[j as usize]).sum();
        s * self.inv_sqrt_degree[i]
    }
}

const PARALLEL_ROWS: usize = 2048;

impl SymmetricOperator for NormalizedAdjacency {
    fn dim(&self) -> usize {
        self.graph.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        if y.len() >= PARALLEL_ROWS {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = self.row_value(i, x));
        } else {
            y.iter_mut().enumerate().for_each(|(i, yi)| *yi = self.row_value(i, x));
        }
    }

    fn top_eigenvector(&self) -> Option<&[f64]> {
        Some(&self.top)
    }

    fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for (j, w) in self.graph.neighbors(i) {
                a[i * n + j] = w * self.inv_sqrt_degree[i] * self.inv_sqrt_degree[j];
            }
        }
        a
    }

    fn abs_row_sums(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.graph.neighbors(i).map(|(j, w)| w * self.inv_sqrt_degree[i] * self.inv_sqrt_degree[j]).sum())
            .collect()
    }
}

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric {
    n: usize,
    a: Vec<f64>,
    top: Option<Vec<f64>>,
}

impl DenseSymmetric {
    /// Checks symmetry to `1e-12` relative to the largest entry.
    pub fn new(n: usize, a: Vec<f64>) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::InvalidArgument(format!("expected {} entries, got {}", n * n, a.len())));
        }
        let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in (i + 1)..n {
                if (a[i * n + j] - a[j * n + i]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidArgument(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(DenseSymmetric { n, a, top: None })
    }

    pub fn with_top_eigenvector(mut self, v: Vec<f64>) -> Result<Self> {
        if v.len() != self.n {
            return Err(Error::InvalidArgument("top eigenvector has the wrong length".into()));
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Singular("zero top eigenvector"));
        }
        self.top = Some(v.into_iter().map(|x| x / norm).collect());
        Ok(self)
    }

    pub fn entries(&self) -> &[f64] {
        &self.a
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }
}

impl SymmetricOperator for DenseSymmetric {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        let row = |i: usize| -> f64 { self.a[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum() };
        if n >= PARALLEL_ROWS / 4 {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = row(i));
        } else {
            y.iter_mut().enumerate().for_each(|(i, yi)| *yi = row(i));
        }
    }

    fn top_eigenvector(&self) -> Option<&[f64]> {
        self.top.as_deref()
    }

    fn to_dense(&self) -> Vec<f64> {
        self.a.clone()
    }
}

/// `op - v v^T` as an operator.
pub(crate) struct MinusRank1<'a, O: SymmetricOperator + ?Sized> {
    pub op: &'a O,
    pub v: &'a [f64],
}

impl<O: SymmetricOperator + ?Sized> SymmetricOperator for MinusRank1<'_, O> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.op.apply(x, y);
        let c: f64 = self.v.iter().zip(x).map(|(a, b)| a * b).sum();
        y.iter_mut().zip(self.v).for_each(|(yi, vi)| *yi -= c * vi);
    }
}
