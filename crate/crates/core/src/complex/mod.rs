//! Geometric graphs, their clique 2-complexes, links and 1-skeletons.

pub mod graph;
pub mod serialize;
pub mod twocomplex;

pub use graph::{sample_geo_graph, sample_geo_graph_with_budget, GeoGraph, PointCloud, WeightedGraph, DEFAULT_PAIR_BUDGET};
pub use serialize::ComplexRecord;
pub use twocomplex::{build_two_complex, enumerate_triangles, graph_link, link_of, one_skeleton, Link, Skeleton, TwoComplex};
