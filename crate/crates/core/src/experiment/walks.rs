use serde::Serialize;

use super::{Relation, RunContext, WalkParams};
use crate::error::Result;
use crate::rng::{split_seed, stream};
use crate::sphere::tau_of;
use crate::walks::{enumerate_shapes, subgraph_probability_mc, Pattern};

#[derive(Debug, Serialize)]
struct ShapeRow {
    ell: usize,
    walks: u64,
    shapes: usize,
    violations: usize,
}

#[derive(Debug, Serialize)]
struct PatternCsvRow {
    pattern_id: String,
    edges: usize,
    hits: u64,
    trials: u64,
    estimate: f64,
    ci_low: f64,
    ci_high: f64,
    reference_low: f64,
    reference_high: f64,
    pass: bool,
}

fn pattern_id(kind: &str, p: &Pattern) -> String {
    let edges: Vec<String> = p.edges.iter().map(|(a, b)| format!("{a}-{b}")).collect();
    format!("{kind}:{}:{}", p.vertices, edges.join(" "))
}

pub(super) fn run(params: &WalkParams, ctx: &mut RunContext) -> Result<()> {
    let mut shapes = Vec::new();
    let mut classes = Vec::new();
    let mut messages = Vec::new();
    ctx.phase("enumerate", |_| {
        for ell in 2..=params.ell_max {
            let e = enumerate_shapes(ell, params.labels, u128::from(params.budget))?;
            let mut violations = 0;
            for (walk, (_, shape)) in &e.shapes {
                let v = shape.violations();
                violations += v.len();
                messages.extend(v.into_iter().map(|m| format!("{walk:?}: {m}")));
            }
            shapes.push(ShapeRow { ell, walks: e.total_walks, shapes: e.shapes.len(), violations });
            classes.extend(e.class_rows()?);
        }
        Ok(())
    })?;
    let shape_violations: usize = shapes.iter().map(|s| s.violations).sum();
    let class_violations = classes.iter().filter(|c| !c.within_bound).count();
    ctx.write_csv("shapes.csv", &shapes)?;
    ctx.write_csv("classes.csv", &classes)?;
    let note = messages.first().cloned();
    ctx.check_with_note("shape_violations", shape_violations as f64, Relation::Le, 0.0, note);
    ctx.check("class_bound_violations", class_violations as f64, Relation::Le, 0.0);

    let (d, p) = (params.d, params.p);
    let tau = tau_of(p, d)?.tau;
    ctx.derive("tau", tau);
    ctx.derive("p", p);
    let master = ctx.seed();
    let rows = ctx.phase("subgraphs", |_| {
        let mut rows = Vec::new();
        let mut shape_rng = stream(master, "forest-shape", 0);
        for i in 0..params.forests {
            let pattern = loop {
                let k = 2 + (i % (params.forest_max_vertices - 1));
                let f = Pattern::random_forest(k, 0.7, &mut shape_rng);
                if !f.edges.is_empty() {
                    break f;
                }
            };
            let est = subgraph_probability_mc(&pattern, d, p, params.forest_trials, split_seed(master, "forest", i as u64))?;
            let reference = p.powi(pattern.edges.len() as i32);
            let slack = params.sigma * est.sigma_at(reference);
            rows.push(PatternCsvRow {
                pattern_id: pattern_id("forest", &pattern),
                edges: pattern.edges.len(),
                hits: est.hits,
                trials: est.trials,
                estimate: est.estimate,
                ci_low: est.ci_low,
                ci_high: est.ci_high,
                reference_low: reference - slack,
                reference_high: reference + slack,
                pass: (est.estimate - reference).abs() <= slack,
            });
        }
        let tri = Pattern::cycle(3);
        let est = subgraph_probability_mc(&tri, d, p, params.triangle_trials, split_seed(master, "triangle", 0))?;
        let lo = p.powi(3);
        let hi = p * p * (p + 1.5 * tau * (0.5 * (1.0 / p).ln()).sqrt());
        rows.push(PatternCsvRow {
            pattern_id: pattern_id("triangle", &tri),
            edges: 3,
            hits: est.hits,
            trials: est.trials,
            estimate: est.estimate,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            reference_low: lo,
            reference_high: hi,
            pass: est.estimate >= lo && est.estimate <= hi,
        });
        Ok(rows)
    })?;
    let (tri, forests) = rows.split_last().expect("triangle row present");
    let forest_fail = forests.iter().filter(|r| !r.pass).count();
    ctx.check("forest_outside_sigma", forest_fail as f64, Relation::Le, 0.0);
    ctx.check_with_note(
        "triangle_in_window",
        f64::from(u8::from(tri.pass)),
        Relation::Ge,
        1.0,
        Some(format!("estimate {} in [{}, {}]", tri.estimate, tri.reference_low, tri.reference_high)),
    );
    ctx.write_csv("patterns.csv", &rows)?;
    Ok(())
}
