use std::collections::BTreeMap;

use rayon::prelude::*;

use super::graph::{GeoGraph, WeightedGraph};
use crate::{Error, Result};

/// Clique complex of a graph truncated at dimension 2, with integer weights:
/// every triangle has weight 1, an edge weighs the number of triangles on
/// it, and a vertex weighs the sum of its edge weights. Edges and vertices
/// that lie in no triangle are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoComplex {
    vertex_count: usize,
    triangles: Vec<[u32; 3]>,
    edge_weights: BTreeMap<(u32, u32), u64>,
    vertex_weights: Vec<u64>,
}

/// Sorted triples `i < j < k` with all three pairs adjacent.
pub fn enumerate_triangles(g: &GeoGraph) -> Vec<[u32; 3]> {
    let per_vertex: Vec<Vec<[u32; 3]>> = (0..g.n())
        .into_par_iter()
        .map(|i| {
            let ni = g.neighbors(i);
            let mut out = Vec::new();
            for &j in ni.iter().filter(|&&j| j as usize > i) {
                let nj = g.neighbors(j as usize);
                for_each_common(ni, nj, |k| {
                    if k > j {
                        out.push([i as u32, j, k]);
                    }
                });
            }
            out
        })
        .collect();
    per_vertex.into_iter().flatten().collect()
}

/// Calls `f` on each element present in both sorted slices.
pub(crate) fn for_each_common(a: &[u32], b: &[u32], mut f: impl FnMut(u32)) {
    let (mut x, mut y) = (0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                f(a[x]);
                x += 1;
                y += 1;
            }
        }
    }
}

pub fn build_two_complex(g: &GeoGraph) -> TwoComplex {
    TwoComplex::from_triangles(g.n(), enumerate_triangles(g))
}

impl TwoComplex {
    /// Triangles must be sorted triples; the list is sorted and deduplicated.
    pub fn from_triangles(vertex_count: usize, mut triangles: Vec<[u32; 3]>) -> Self {
        for t in &mut triangles {
            t.sort_unstable();
        }
        triangles.sort_unstable();
        triangles.dedup();
        let mut edge_weights = BTreeMap::new();
        for &[a, b, c] in &triangles {
            for e in [(a, b), (a, c), (b, c)] {
                *edge_weights.entry(e).or_insert(0u64) += 1;
            }
        }
        let mut vertex_weights = vec![0u64; vertex_count];
        for (&(a, b), &w) in &edge_weights {
            vertex_weights[a as usize] += w;
            vertex_weights[b as usize] += w;
        }
        TwoComplex { vertex_count, triangles, edge_weights, vertex_weights }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn edge_weights(&self) -> &BTreeMap<(u32, u32), u64> {
        &self.edge_weights
    }

    pub fn edge_weight(&self, a: u32, b: u32) -> u64 {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edge_weights.get(&key).copied().unwrap_or(0)
    }

    pub fn vertex_weights(&self) -> &[u64] {
        &self.vertex_weights
    }

    /// Checks the weight identities from scratch.
    pub fn is_downward_closed(&self) -> bool {
        let recomputed = TwoComplex::from_triangles(self.vertex_count, self.triangles.clone());
        recomputed.edge_weights == self.edge_weights
            && recomputed.vertex_weights == self.vertex_weights
            && self.vertex_weights.iter().zip(self.vertex_weights_from_triangles()).all(|(a, b)| *a == b)
            && self.edge_weights.values().all(|&w| w >= 1)
    }

    /// Vertex weight counted directly as 2 x (triangles containing it).
    fn vertex_weights_from_triangles(&self) -> Vec<u64> {
        let mut w = vec![0u64; self.vertex_count];
        for t in &self.triangles {
            for &v in t {
                w[v as usize] += 2;
            }
        }
        w
    }
}

/// Link of a vertex with its shell coordinates `kappa_i = <u_i, u_v>`.
#[derive(Debug, Clone)]
pub struct Link {
    pub center: usize,
    /// Degree of the center in the graph, before isolated link vertices are
    /// removed.
    pub neighbor_count: usize,
    /// Global indices of the link vertices (those in some triangle with the
    /// center), sorted.
    pub vertices: Vec<u32>,
    pub shells: Vec<f64>,
    /// Unit-weight graph on `0..vertices.len()`.
    pub graph: WeightedGraph,
}

impl Link {
    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

pub fn link_of(c: &TwoComplex, g: &GeoGraph, v: usize) -> Result<Link> {
    if v >= c.vertex_count() || v >= g.n() {
        return Err(Error::InvalidArgument(format!("vertex {v} out of range")));
    }
    Ok(graph_link(g, v))
}

/// Link computed straight from the graph: `(i, j)` is a link edge iff `v`,
/// `i`, `j` are pairwise adjacent.
pub fn graph_link(g: &GeoGraph, v: usize) -> Link {
    let nv = g.neighbors(v);
    let mut edges = Vec::new();
    for (a, &i) in nv.iter().enumerate() {
        let ni = g.neighbors(i as usize);
        for_each_common(&nv[a + 1..], ni, |j| {
            let b = nv.binary_search(&j).expect("j is a neighbor of v");
            edges.push((a as u32, b as u32, 1.0));
        });
    }
    let full = WeightedGraph::from_edges(nv.len(), &edges);
    let (graph, kept) = full.without_isolated();
    let vertices: Vec<u32> = kept.iter().map(|&k| nv[k]).collect();
    let cloud = g.cloud();
    let shells = vertices.iter().map(|&u| cloud.inner(v, u as usize)).collect();
    Link { center: v, neighbor_count: nv.len(), vertices, shells, graph }
}

/// Triangle-weighted 1-skeleton on the vertices that lie in a triangle.
#[derive(Debug, Clone)]
pub struct Skeleton {
    pub vertices: Vec<u32>,
    pub graph: WeightedGraph,
    pub connected: bool,
}

pub fn one_skeleton(c: &TwoComplex) -> Skeleton {
    let vertices: Vec<u32> = (0..c.vertex_count()).filter(|&v| c.vertex_weights()[v] > 0).map(|v| v as u32).collect();
    let mut index = vec![u32::MAX; c.vertex_count()];
    for (k, &v) in vertices.iter().enumerate() {
        index[v as usize] = k as u32;
    }
    let edges: Vec<(u32, u32, f64)> =
        c.edge_weights().iter().map(|(&(a, b), &w)| (index[a as usize], index[b as usize], w as f64)).collect();
    let graph = WeightedGraph::from_edges(vertices.len(), &edges);
    let connected = graph.is_connected();
    Skeleton { vertices, graph, connected }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::graph::PointCloud;

    // Points at angle spacing on a circle in R^2; with a tau between the
    // relevant cosines this yields chosen small graphs.
    fn ring_graph(n: usize, tau: f64) -> GeoGraph {
        let pts: Vec<_> = (0..n)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                crate::sphere::UnitVector::normalize(vec![a.cos(), a.sin()]).unwrap()
            })
            .collect();
        GeoGraph::from_cloud(PointCloud::from_points(&pts, 0).unwrap(), tau, 0.0)
    }

    #[test]
    fn k3_and_k4() {
        let k3 = ring_graph(3, -0.9);
        let c = build_two_complex(&k3);
        assert_eq!(c.triangles(), &[[0, 1, 2]]);
        assert!(c.edge_weights().values().all(|&w| w == 1));
        assert_eq!(c.vertex_weights(), &[2, 2, 2]);

        let k4 = ring_graph(4, -1.0);
        let c = build_two_complex(&k4);
        assert_eq!(c.triangles().len(), 4);
        assert!(c.edge_weights().values().all(|&w| w == 2));
        assert!(c.is_downward_closed());
        for v in 0..4 {
            let l = link_of(&c, &k4, v).unwrap();
            assert_eq!(l.vertices.len(), 3);
            assert_eq!(l.edge_count(), 3);
        }
        let s = one_skeleton(&c);
        assert!(s.connected);
        assert_eq!(s.graph.edge_count(), 6);
        assert!(s.graph.edges().iter().all(|e| e.2 == 2.0));
    }

    #[test]
    fn path_has_no_triangles() {
        // 3 consecutive points of a 12-gon, cos(30°) > 0.8 > cos(60°)
        let g = ring_graph(12, 0.8);
        let c = build_two_complex(&g);
        assert!(c.triangles().is_empty());
        assert!(c.edge_weights().is_empty());
        assert!(graph_link(&g, 0).is_empty());
        let s = one_skeleton(&c);
        assert!(s.vertices.is_empty());
    }

    #[test]
    fn two_disjoint_triangles_are_disconnected() {
        let c = TwoComplex::from_triangles(6, vec![[0, 1, 2], [3, 4, 5]]);
        let s = one_skeleton(&c);
        assert!(!s.connected);
        assert_eq!(s.graph.components(), 2);
    }
}
