use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::split_seed;
use crate::sphere::{dot, fill_uniform_sphere, tau_of, UnitVector};
use crate::{Error, Result};

/// Default cap on the number of pair inner products one sample may evaluate.
pub const DEFAULT_PAIR_BUDGET: u128 = 2_000_000_000;

/// `n` points on S^{d-1}, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    d: usize,
    seed: u64,
    coords: Vec<f64>,
}

impl PointCloud {
    /// Point `i` is drawn from its own stream `split_seed(seed, "points", i)`,
    /// so the cloud is independent of thread count.
    pub fn sample(n: usize, d: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput("point cloud needs n >= 1"));
        }
        if d == 0 {
            return Err(Error::InvalidDimension(d));
        }
        let mut coords = vec![0.0; n * d];
        coords.par_chunks_mut(d).enumerate().for_each(|(i, row)| {
            let mut rng = crate::rng::from_seed(split_seed(seed, "points", i as u64));
            fill_uniform_sphere(row, &mut rng);
        });
        Ok(PointCloud { d, seed, coords })
    }

    pub fn from_points(points: &[UnitVector], seed: u64) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyInput("point cloud needs n >= 1"))?;
        let d = first.dim();
        let mut coords = Vec::with_capacity(points.len() * d);
        for p in points {
            if p.dim() != d {
                return Err(Error::InvalidDimension(p.dim()));
            }
            coords.extend_from_slice(p.coords());
        }
        Ok(PointCloud { d, seed, coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn inner(&self, i: usize, j: usize) -> f64 {
        dot(self.point(i), self.point(j))
    }
}

/// Threshold graph: `i ~ j` iff `<u_i, u_j> >= tau`.
#[derive(Debug, Clone)]
pub struct GeoGraph {
    cloud: PointCloud,
    tau: f64,
    p: f64,
    neighbors: Vec<Vec<u32>>,
}

pub fn sample_geo_graph(n: usize, d: usize, p: f64, seed: u64) -> Result<GeoGraph> {
    sample_geo_graph_with_budget(n, d, p, seed, DEFAULT_PAIR_BUDGET)
}

pub fn sample_geo_graph_with_budget(n: usize, d: usize, p: f64, seed: u64, budget: u128) -> Result<GeoGraph> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain { what: "p", value: p });
    }
    let pairs = n as u128 * (n as u128).saturating_sub(1) / 2;
    if pairs > budget {
        return Err(Error::ResourceBudget { needed: pairs, budget });
    }
    let tau = tau_of(p, d)?.tau;
    let cloud = PointCloud::sample(n, d, seed)?;
    Ok(GeoGraph::from_cloud(cloud, tau, p))
}

impl GeoGraph {
    pub fn from_cloud(cloud: PointCloud, tau: f64, p: f64) -> Self {
        let n = cloud.len();
        let upper: Vec<Vec<u32>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let ui = cloud.point(i);
                ((i + 1)..n).filter(|&j| dot(ui, cloud.point(j)) >= tau).map(|j| j as u32).collect()
            })
            .collect();
        let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (i, row) in upper.iter().enumerate() {
            for &j in row {
                neighbors[j as usize].push(i as u32);
            }
        }
        // lower neighbors were pushed in increasing i; append upper ones
        for (i, row) in upper.into_iter().enumerate() {
            neighbors[i].extend(row);
        }
        GeoGraph { cloud, tau, p, neighbors }
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    /// Sorted neighbor list of `i`.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&(j as u32)).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges `(i, j)` with `i < j` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().filter(move |&&j| j as usize > i).map(move |&j| (i as u32, j)))
    }

    pub fn to_weighted(&self) -> WeightedGraph {
        let edges: Vec<(u32, u32, f64)> = self.edges().map(|(i, j)| (i, j, 1.0)).collect();
        WeightedGraph::from_edges(self.n(), &edges)
    }
}

/// Symmetric weighted graph in compressed sparse row form. Row entries are
/// sorted by neighbor index. Self-loops are allowed and stored once.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
}

impl WeightedGraph {
    /// Builds from an undirected edge list; duplicate pairs are summed and
    /// zero or negative weights dropped.
    pub fn from_edges(n: usize, edges: &[(u32, u32, f64)]) -> Self {
        let mut entries: Vec<(u32, u32, f64)> = Vec::with_capacity(edges.len() * 2);
        for &(a, b, w) in edges {
            entries.push((a, b, w));
            if a != b {
                entries.push((b, a, w));
            }
        }
        entries.sort_by_key(|x| (x.0, x.1));
        let mut offsets = vec![0usize; n + 1];
        let mut targets = Vec::with_capacity(entries.len());
        let mut weights: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(u32, u32)> = None;
        for (a, b, w) in entries {
            if last == Some((a, b)) {
                *weights.last_mut().expect("previous entry") += w;
                continue;
            }
            last = Some((a, b));
            targets.push(b);
            weights.push(w);
            offsets[a as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut g = WeightedGraph { offsets, targets, weights };
        g.drop_nonpositive();
        g
    }

    fn drop_nonpositive(&mut self) {
        if self.weights.iter().all(|&w| w > 0.0) {
            return;
        }
        let n = self.n();
        let mut offsets = vec![0usize; n + 1];
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        for i in 0..n {
            for (j, w) in self.neighbors(i) {
                if w > 0.0 {
                    targets.push(j as u32);
                    weights.push(w);
                }
            }
            offsets[i + 1] = targets.len();
        }
        *self = WeightedGraph { offsets, targets, weights };
    }

    /// Dense symmetric matrix, row-major (`n <= a few thousand`).
    pub fn from_dense(n: usize, a: &[f64]) -> Self {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i..n {
                if a[i * n + j] != 0.0 {
                    edges.push((i as u32, j as u32, a[i * n + j]));
                }
            }
        }
        WeightedGraph::from_edges(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.targets[r.clone()].iter().zip(&self.weights[r]).map(|(&j, &w)| (j as usize, w))
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.targets[r.clone()], &self.weights[r])
    }

    /// Weighted degree; a self-loop counts its weight once.
    pub fn degree(&self, i: usize) -> f64 {
        self.row(i).1.iter().sum()
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.degree(i)).collect()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let (t, w) = self.row(i);
        t.binary_search(&(j as u32)).map(|k| w[k]).unwrap_or(0.0)
    }

    /// Number of undirected edges (self-loops count once).
    pub fn edge_count(&self) -> usize {
        let mut loops = 0;
        for i in 0..self.n() {
            if self.weight(i, i) > 0.0 {
                loops += 1;
            }
        }
        (self.targets.len() - loops) / 2 + loops
    }

    /// Undirected edges `(i, j, w)` with `i <= j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n())
            .flat_map(|i| self.neighbors(i).filter(move |&(j, _)| j >= i).map(move |(j, w)| (i, j, w)))
            .collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn components(&self) -> usize {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for (v, _) in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.n() > 0 && self.components() == 1
    }

    /// Drops zero-degree vertices; returns the reduced graph and the kept
    /// original indices.
    pub fn without_isolated(&self) -> (WeightedGraph, Vec<usize>) {
        let kept: Vec<usize> = (0..self.n()).filter(|&i| self.offsets[i + 1] > self.offsets[i]).collect();
        let mut index = vec![u32::MAX; self.n()];
        for (k, &i) in kept.iter().enumerate() {
            index[i] = k as u32;
        }
        let mut offsets = vec![0usize; kept.len() + 1];
        let mut targets = Vec::with_capacity(self.targets.len());
        let mut weights = Vec::with_capacity(self.weights.len());
        for (k, &i) in kept.iter().enumerate() {
            let (t, w) = self.row(i);
            targets.extend(t.iter().map(|&j| index[j as usize]));
            weights.extend_from_slice(w);
            offsets[k + 1] = targets.len();
        }
        (WeightedGraph { offsets, targets, weights }, kept)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for (j, w) in self.neighbors(i) {
                a[i * n + j] = w;
            }
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn complete(n: usize) -> WeightedGraph {
        let mut e = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                e.push((i as u32, j as u32, 1.0));
            }
        }
        WeightedGraph::from_edges(n, &e)
    }

    #[test]
    fn csr_basics() {
        let g = WeightedGraph::from_edges(4, &[(0, 1, 1.0), (1, 0, 2.0), (2, 3, 0.5), (1, 1, 4.0)]);
        assert_eq!(g.weight(0, 1), 3.0);
        assert_eq!(g.weight(1, 0), 3.0);
        assert_eq!(g.degree(1), 7.0);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.components(), 2);
        let k4 = complete(4);
        assert!(k4.is_connected());
        assert_eq!(k4.edge_count(), 6);
    }

    #[test]
    fn isolated_removal() {
        let g = WeightedGraph::from_edges(5, &[(1, 3, 1.0)]);
        let (h, kept) = g.without_isolated();
        assert_eq!(kept, vec![1, 3]);
        assert_eq!(h.n(), 2);
        assert_eq!(h.weight(0, 1), 1.0);
    }

    #[test]
    fn p_one_gives_complete_graph() {
        let g = sample_geo_graph(2, 5, 1.0, 9).unwrap();
        assert_eq!(g.tau(), -1.0);
        assert!(g.has_edge(0, 1));
    }

    #[test]
    fn adjacency_is_exact_threshold() {
        let g = sample_geo_graph(120, 8, 0.2, 4).unwrap();
        for i in 0..g.n() {
            for j in 0..g.n() {
                if i != j {
                    assert_eq!(g.has_edge(i, j), g.cloud().inner(i, j) >= g.tau());
                }
            }
            assert!(!g.has_edge(i, i));
            assert!(g.neighbors(i).windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn budget_guard() {
        let e = sample_geo_graph_with_budget(1000, 5, 0.1, 0, 1000).unwrap_err();
        assert!(matches!(e, Error::ResourceBudget { .. }));
    }
}
