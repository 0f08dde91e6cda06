use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Edge = (u32, u32);

fn key(a: u32, b: u32) -> Edge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Edge of the junction multigraph: a maximal path of the 2-core whose
/// interior vertices all have degree 2. `from == to` for self-loops.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JunctionEdge {
    pub from: u32,
    pub to: u32,
    /// Number of 2-core edges on the path.
    pub length: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ShapeStats {
    /// Distinct edges walked on.
    pub edges: usize,
    /// Edges walked exactly once.
    pub singletons: usize,
    /// `|E| - |V| + 1` of the walk graph.
    pub excess: usize,
}

/// A closed walk with the statistics of the graph it traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkShape {
    /// Steps `i_0, ..., i_{l-1}`; the walk returns from `i_{l-1}` to `i_0`.
    pub vertices: Vec<u32>,
    pub multiplicity: BTreeMap<Edge, usize>,
    pub graph_vertices: BTreeSet<u32>,
    pub core_vertices: BTreeSet<u32>,
    pub core_edges: BTreeSet<Edge>,
    pub forest_edges: BTreeSet<Edge>,
    pub junction_vertices: BTreeSet<u32>,
    pub junction_edges: Vec<JunctionEdge>,
    pub stats: ShapeStats,
}

/// Decomposes a closed walk written as `i_0, i_1, ..., i_{l-1}, i_0`.
pub fn decompose(walk: &[u32]) -> Result<WalkShape> {
    if walk.len() < 2 {
        return Err(Error::InvalidWalk("a closed walk needs at least one step".into()));
    }
    if walk.first() != walk.last() {
        return Err(Error::InvalidWalk("walk does not return to its start".into()));
    }
    if let Some(w) = walk.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidWalk(format!("step {} -> {} is a self-loop", w[0], w[1])));
    }
    let vertices = walk[..walk.len() - 1].to_vec();
    let mut multiplicity = BTreeMap::new();
    for w in walk.windows(2) {
        *multiplicity.entry(key(w[0], w[1])).or_insert(0) += 1;
    }
    let graph_vertices: BTreeSet<u32> = vertices.iter().copied().collect();
    let all_edges: BTreeSet<Edge> = multiplicity.keys().copied().collect();

    // 2-core: repeatedly delete degree-1 vertices.
    let mut core_edges = all_edges.clone();
    loop {
        let mut deg: BTreeMap<u32, usize> = BTreeMap::new();
        for &(a, b) in &core_edges {
            *deg.entry(a).or_insert(0) += 1;
            *deg.entry(b).or_insert(0) += 1;
        }
        let leaves: BTreeSet<u32> = deg.iter().filter(|(_, &k)| k == 1).map(|(&v, _)| v).collect();
        if leaves.is_empty() {
            break;
        }
        core_edges.retain(|(a, b)| !leaves.contains(a) && !leaves.contains(b));
    }
    let core_vertices: BTreeSet<u32> = core_edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    let forest_edges: BTreeSet<Edge> = all_edges.difference(&core_edges).copied().collect();

    let (junction_vertices, junction_edges) = junction_graph(&core_vertices, &core_edges);

    let e = all_edges.len();
    let stats = ShapeStats {
        edges: e,
        singletons: multiplicity.values().filter(|&&m| m == 1).count(),
        excess: e + 1 - graph_vertices.len(),
    };
    Ok(WalkShape {
        vertices,
        multiplicity,
        graph_vertices,
        core_vertices,
        core_edges,
        forest_edges,
        junction_vertices,
        junction_edges,
        stats,
    })
}

/// Junction vertices (degree >= 3 in the core, or the smallest vertex of a
/// core that is a single cycle) and the paths between them.
fn junction_graph(core_vertices: &BTreeSet<u32>, core_edges: &BTreeSet<Edge>) -> (BTreeSet<u32>, Vec<JunctionEdge>) {
    let mut adj: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for &(a, b) in core_edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut junctions: BTreeSet<u32> = adj.iter().filter(|(_, n)| n.len() >= 3).map(|(&v, _)| v).collect();
    if junctions.is_empty() {
        if let Some(&v) = core_vertices.iter().next() {
            junctions.insert(v);
        }
    }
    let mut used: BTreeSet<Edge> = BTreeSet::new();
    let mut out = Vec::new();
    for &u in &junctions {
        for &first in &adj[&u] {
            if used.contains(&key(u, first)) {
                continue;
            }
            used.insert(key(u, first));
            let (mut prev, mut cur, mut length) = (u, first, 1);
            while !junctions.contains(&cur) {
                let next = *adj[&cur].iter().find(|&&x| x != prev).expect("core vertex of degree 2");
                used.insert(key(cur, next));
                prev = cur;
                cur = next;
                length += 1;
            }
            let (from, to) = if u <= cur { (u, cur) } else { (cur, u) };
            out.push(JunctionEdge { from, to, length });
        }
    }
    out.sort();
    (junctions, out)
}

impl WalkShape {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn core_excess(&self) -> usize {
        if self.core_edges.is_empty() {
            0
        } else {
            self.core_edges.len() + 1 - self.core_vertices.len()
        }
    }

    pub fn junction_excess(&self) -> usize {
        if self.junction_edges.is_empty() {
            0
        } else {
            self.junction_edges.len() + 1 - self.junction_vertices.len()
        }
    }

    /// Recomputes every structural invariant and lists the violated ones.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut core_deg: BTreeMap<u32, usize> = BTreeMap::new();
        for &(a, b) in &self.core_edges {
            *core_deg.entry(a).or_insert(0) += 1;
            *core_deg.entry(b).or_insert(0) += 1;
        }
        if core_deg.values().any(|&k| k < 2) {
            v.push("2-core has a vertex of degree < 2".into());
        }
        let union: BTreeSet<Edge> = self.core_edges.union(&self.forest_edges).copied().collect();
        let all: BTreeSet<Edge> = self.multiplicity.keys().copied().collect();
        if union != all || self.core_edges.intersection(&self.forest_edges).next().is_some() {
            v.push("core and forest do not partition the edges".into());
        }
        // forest part: acyclic, each component meets the core in <= 1 vertex
        let mut parent: BTreeMap<u32, u32> = BTreeMap::new();
        fn find(p: &mut BTreeMap<u32, u32>, x: u32) -> u32 {
            let mut r = x;
            while let Some(&q) = p.get(&r) {
                if q == r {
                    break;
                }
                r = q;
            }
            p.insert(x, r);
            r
        }
        for &(a, b) in &self.forest_edges {
            parent.entry(a).or_insert(a);
            parent.entry(b).or_insert(b);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                v.push("forest part has a cycle".into());
            } else {
                parent.insert(ra, rb);
            }
        }
        let forest_vertices: Vec<u32> = parent.keys().copied().collect();
        let mut touches: BTreeMap<u32, usize> = BTreeMap::new();
        for x in forest_vertices {
            if self.core_vertices.contains(&x) {
                let r = find(&mut parent, x);
                *touches.entry(r).or_insert(0) += 1;
            }
        }
        if touches.values().any(|&k| k > 1) {
            v.push("a forest component meets the core twice".into());
        }
        let exc = self.stats.excess;
        if self.core_excess() != exc || self.junction_excess() != exc {
            v.push(format!("excess not conserved: G {exc}, core {}, junction {}", self.core_excess(), self.junction_excess()));
        }
        if self.junction_edges.len() > 3 * exc {
            v.push("junction graph has more than 3 exc edges".into());
        }
        if 2 * self.stats.edges > self.len() + self.stats.singletons {
            v.push("more than (l + sing) / 2 edges".into());
        }
        let mut jdeg: BTreeMap<u32, usize> = BTreeMap::new();
        for e in &self.junction_edges {
            *jdeg.entry(e.from).or_insert(0) += 1;
            *jdeg.entry(e.to).or_insert(0) += 1;
        }
        if self.junction_edges.iter().map(|e| e.length).sum::<usize>() != self.core_edges.len() {
            v.push("junction paths do not cover the core".into());
        }
        v
    }
}

/// Relabels vertices in order of first visit.
pub fn canonical_form(walk: &[u32]) -> Vec<u32> {
    let mut map: BTreeMap<u32, u32> = BTreeMap::new();
    walk.iter()
        .map(|&x| {
            let next = map.len() as u32;
            *map.entry(x).or_insert(next)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backtrack_walk() {
        let s = decompose(&[0, 1, 0, 1, 0]).unwrap();
        assert!(s.core_edges.is_empty());
        assert_eq!(s.forest_edges.len(), 1);
        assert_eq!(s.stats, ShapeStats { edges: 1, singletons: 0, excess: 0 });
        assert!(s.violations().is_empty());
    }

    #[test]
    fn six_cycle() {
        let s = decompose(&[3, 1, 4, 5, 9, 2, 3]).unwrap();
        assert_eq!(s.core_edges.len(), 6);
        assert!(s.forest_edges.is_empty());
        assert_eq!(s.stats, ShapeStats { edges: 6, singletons: 6, excess: 1 });
        assert_eq!(s.junction_vertices.iter().copied().collect::<Vec<_>>(), vec![1]);
        assert_eq!(s.junction_edges, vec![JunctionEdge { from: 1, to: 1, length: 6 }]);
        assert!(s.violations().is_empty());
    }

    #[test]
    fn theta_walk() {
        // paths 0-1-5, 0-2-5, 0-3-5; each path walked there and back
        let w = [0, 1, 5, 2, 0, 3, 5, 1, 0, 2, 5, 3, 0];
        let s = decompose(&w).unwrap();
        assert_eq!(s.junction_vertices.iter().copied().collect::<Vec<_>>(), vec![0, 5]);
        assert_eq!(s.junction_edges.len(), 3);
        assert!(s.junction_edges.iter().all(|e| e.from == 0 && e.to == 5 && e.length == 2));
        assert_eq!(s.stats.excess, 2);
        assert!(s.violations().is_empty());
    }

    #[test]
    fn cycle_with_tail() {
        let s = decompose(&[0, 1, 2, 0, 3, 4, 3, 0]).unwrap();
        assert_eq!(s.core_edges.len(), 3);
        assert_eq!(s.forest_edges.len(), 2);
        assert!(s.violations().is_empty());
    }

    #[test]
    fn rejects_bad_walks() {
        assert!(decompose(&[0, 1, 2]).is_err());
        assert!(decompose(&[0, 0]).is_err());
        assert!(decompose(&[0]).is_err());
    }

    #[test]
    fn canonical_relabeling() {
        assert_eq!(canonical_form(&[7, 3, 7, 9, 7]), vec![0, 1, 0, 2, 0]);
    }
}
