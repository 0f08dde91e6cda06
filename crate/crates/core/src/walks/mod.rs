//! Closed-walk shapes for trace-method counting, and Monte Carlo subgraph
//! and trace estimates in geometric graphs.

pub mod enumerate;
pub mod mc;
pub mod shape;

pub use enumerate::{count_bound, enumerate_shapes, ClassRow, Enumeration, DEFAULT_ENUMERATION_BUDGET};
pub use mc::{subgraph_probability_mc, trace_power_mc, Pattern, PatternRow, SubgraphEstimate, TraceEstimate};
pub use shape::{canonical_form, decompose, JunctionEdge, ShapeStats, WalkShape};
