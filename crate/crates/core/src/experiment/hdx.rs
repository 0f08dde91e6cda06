use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HdxParams, Relation, RunContext, TightnessParams};
use crate::complex::{build_two_complex, graph_link, one_skeleton, sample_geo_graph, GeoGraph, Skeleton, TwoComplex};
use crate::error::{Error, Result};
use crate::rng::split_seed;
use crate::shell::{min_edge_prob, sample_cap_link};
use crate::spectral::{
    normalized_adjacency, rayleigh_lower_bound, second_abs_eigenvalue, trickle_down_check, SpectralReport,
};
use crate::sphere::{tau_of, BetaDist};

/// Spectrum of one vertex link. Eigenvalues are NaN for an empty link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRow {
    pub trial: usize,
    pub vertex: usize,
    pub neighbors: usize,
    pub link_vertices: usize,
    pub link_edges: usize,
    pub connected: bool,
    pub lambda2: f64,
    pub lambda_abs: f64,
}

fn link_rows(g: &GeoGraph, trial: usize, tol: f64) -> Result<Vec<LinkRow>> {
    (0..g.n())
        .into_par_iter()
        .map(|v| {
            let link = graph_link(g, v);
            let mut row = LinkRow {
                trial,
                vertex: v,
                neighbors: link.neighbor_count,
                link_vertices: link.vertices.len(),
                link_edges: link.edge_count(),
                connected: false,
                lambda2: f64::NAN,
                lambda_abs: f64::NAN,
            };
            if link.vertices.len() >= 2 {
                let rep = second_abs_eigenvalue(&normalized_adjacency(&link.graph)?, tol)?;
                row.connected = link.graph.is_connected();
                row.lambda2 = rep.second_eigenvalue;
                row.lambda_abs = rep.second_abs_eigenvalue;
            }
            Ok(row)
        })
        .collect()
}

fn skeleton_spectrum(sk: &Skeleton, tol: f64) -> Result<Option<SpectralReport>> {
    if sk.graph.n() < 2 {
        return Ok(None);
    }
    Ok(Some(second_abs_eigenvalue(&normalized_adjacency(&sk.graph)?, tol)?))
}

fn nonempty_max(rows: &[LinkRow]) -> (f64, f64, usize) {
    let mut max = f64::NAN;
    let mut min = f64::NAN;
    let mut empty = 0;
    for r in rows {
        if r.lambda_abs.is_nan() {
            empty += 1;
        } else {
            max = if max.is_nan() { r.lambda_abs } else { max.max(r.lambda_abs) };
            min = if min.is_nan() { r.lambda_abs } else { min.min(r.lambda_abs) };
        }
    }
    (max, min, empty)
}

#[derive(Debug, Serialize)]
struct SkeletonRow {
    trial: usize,
    vertices: usize,
    edges: usize,
    triangles: usize,
    connected: bool,
    lambda2: f64,
    lambda_abs: f64,
    link_lambda_max: f64,
    link_lambda_min: f64,
    empty_links: usize,
    trickle_bound: f64,
    trickle_slack: f64,
}

/// A link drawn directly from a cap: `m` cap points around a center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapLinkRow {
    pub index: usize,
    pub m: usize,
    pub link_vertices: usize,
    pub link_edges: usize,
    pub connected: bool,
    /// NaN when no two cap points are adjacent.
    pub lambda_abs: f64,
}

pub fn cap_link_spectrum(index: usize, m: usize, tau: f64, d: usize, seed: u64, tol: f64) -> Result<CapLinkRow> {
    let link = sample_cap_link(m, tau, d, seed)?;
    let (g, _) = link.graph.without_isolated();
    let mut row = CapLinkRow {
        index,
        m,
        link_vertices: g.n(),
        link_edges: g.edge_count(),
        connected: false,
        lambda_abs: f64::NAN,
    };
    if g.n() >= 2 {
        row.connected = g.is_connected();
        row.lambda_abs = second_abs_eigenvalue(&normalized_adjacency(&g)?, tol)?.second_abs_eigenvalue;
    }
    Ok(row)
}

fn sample_complex(n: usize, d: usize, p: f64, seed: u64) -> Result<(GeoGraph, TwoComplex)> {
    let g = sample_geo_graph(n, d, p, seed)?;
    let c = build_two_complex(&g);
    Ok((g, c))
}

pub(super) fn run(params: &HdxParams, ctx: &mut RunContext) -> Result<()> {
    let n = params.n;
    let d = params.dimension();
    let p = params.edge_probability();
    let tau = tau_of(p, d)?.tau;
    let q = BetaDist::new(d - 1)?.tail((tau / (1.0 + tau)).clamp(-1.0, 1.0))?;
    let pn = p * n as f64;
    ctx.derive("d", d as f64);
    ctx.derive("p", p);
    ctx.derive("tau", tau);
    ctx.derive("q", q);
    ctx.derive("pn", pn);
    ctx.derive("qpn", q * pn);
    ctx.derive("link_target", tau / (1.0 + tau));
    if pn < params.min_pn {
        return Err(Error::config("n", format!("p n = {pn:.1} is below min_pn = {}", params.min_pn)));
    }
    if q * pn < params.min_qpn {
        return Err(Error::config("n", format!("q p n = {:.2} is below min_qpn = {}", q * pn, params.min_qpn)));
    }

    let master = ctx.seed();
    let mut links = Vec::new();
    let mut skeletons = Vec::new();
    for trial in 0..params.trials {
        let (g, c) = ctx.phase("sample", |_| sample_complex(n, d, p, split_seed(master, "complex", trial as u64)))?;
        let rows = ctx.phase("links", |_| link_rows(&g, trial, params.tol))?;
        let sk = one_skeleton(&c);
        let rep = ctx.phase("skeleton", |_| skeleton_spectrum(&sk, params.tol))?;
        let (link_max, link_min, empty) = nonempty_max(&rows);
        let (lambda2, lambda_abs) = rep.map_or((f64::NAN, f64::NAN), |r| (r.second_eigenvalue, r.second_abs_eigenvalue));
        let (bound, slack) = if link_max < 1.0 {
            let t = trickle_down_check(lambda_abs, link_max, params.trickle_tol)?;
            (t.bound, t.slack)
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        skeletons.push(SkeletonRow {
            trial,
            vertices: sk.graph.n(),
            edges: sk.graph.edge_count(),
            triangles: c.triangles().len(),
            connected: sk.connected,
            lambda2,
            lambda_abs,
            link_lambda_max: link_max,
            link_lambda_min: link_min,
            empty_links: empty,
            trickle_bound: bound,
            trickle_slack: slack,
        });
        links.extend(rows);
    }
    ctx.write_csv("links.csv", &links)?;
    ctx.write_csv("skeleton.csv", &skeletons)?;

    let target = tau / (1.0 + tau);
    let link_max = skeletons.iter().map(|s| s.link_lambda_max).fold(f64::NAN, f64::max);
    let link_min = skeletons.iter().map(|s| s.link_lambda_min).fold(f64::NAN, f64::min);
    let empty: usize = skeletons.iter().map(|s| s.empty_links).sum();
    ctx.derive("empty_links", empty as f64);
    // distance of the worst link from the trickle-down threshold 1/2
    ctx.derive("link_margin_below_half", 0.5 - link_max);
    ctx.check("link_lambda_max", link_max, Relation::Le, target + params.link_slack);
    ctx.check("link_lambda_min", link_min, Relation::Ge, target - params.link_slack);
    let disconnected = skeletons.iter().filter(|s| !s.connected).count();
    ctx.derive("connected_skeletons", (skeletons.len() - disconnected) as f64);
    ctx.check("disconnected_skeletons", disconnected as f64, Relation::Le, 0.0);
    // the inequality is only asserted on connected skeletons
    let worst_slack =
        skeletons.iter().filter(|s| s.connected).map(|s| s.trickle_slack).fold(f64::INFINITY, f64::min);
    if skeletons.iter().any(|s| s.connected) {
        ctx.check_with_note(
            "trickle_down_min_slack",
            worst_slack,
            Relation::Ge,
            0.0,
            Some(format!("skeleton |lambda|_2 <= l/(1-l) + {}", params.trickle_tol)),
        );
    }

    if params.cap_links > 0 {
        let (cd, ct, cm) = (params.cap_link_d, params.cap_link_tau, params.cap_link_m);
        let rows = ctx.phase("cap-links", |_| {
            (0..params.cap_links)
                .map(|i| cap_link_spectrum(i, cm, ct, cd, split_seed(master, "cap-link", i as u64), params.tol))
                .collect::<Result<Vec<_>>>()
        })?;
        let target = ct / (1.0 + ct);
        ctx.derive("cap_link_q", min_edge_prob(ct, cd)?);
        let worst = rows
            .iter()
            .map(|r| if r.lambda_abs.is_nan() { f64::INFINITY } else { (r.lambda_abs - target).abs() })
            .fold(0.0, f64::max);
        ctx.write_csv("cap_links.csv", &rows)?;
        ctx.check("cap_link_max_deviation", worst, Relation::Le, params.link_slack);
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct TightSkeletonRow {
    attempt: usize,
    vertices: usize,
    edges: usize,
    triangles: usize,
    connected: bool,
    lambda2: f64,
    rayleigh_lower: f64,
    stationary_tv: f64,
}

pub(super) fn run_tightness(params: &TightnessParams, ctx: &mut RunContext) -> Result<()> {
    let lambda = params.lambda_target;
    let tau = lambda / (1.0 - lambda);
    let (n, d) = (params.n, params.d);
    let p = BetaDist::new(d)?.tail(tau)?;
    ctx.derive("tau", tau);
    ctx.derive("p", p);
    ctx.derive("pn", p * n as f64);
    ctx.derive("q", min_edge_prob(tau, d)?);

    let master = ctx.seed();
    let mut attempts = Vec::new();
    let mut chosen = None;
    for attempt in 0..params.attempts {
        let (g, c) = ctx.phase("sample", |_| sample_complex(n, d, p, split_seed(master, "complex", attempt as u64)))?;
        let sk = one_skeleton(&c);
        let mut row = TightSkeletonRow {
            attempt,
            vertices: sk.graph.n(),
            edges: sk.graph.edge_count(),
            triangles: c.triangles().len(),
            connected: sk.connected,
            lambda2: f64::NAN,
            rayleigh_lower: f64::NAN,
            stationary_tv: f64::NAN,
        };
        if sk.connected && sk.graph.n() >= 2 {
            let op = normalized_adjacency(&sk.graph)?;
            let rep = ctx.phase("skeleton", |_| second_abs_eigenvalue(&op, params.tol))?;
            let pi = op.stationary();
            let cloud = g.cloud();
            let embedding: Vec<&[f64]> = sk.vertices.iter().map(|&v| cloud.point(v as usize)).collect();
            row.lambda2 = rep.second_eigenvalue;
            row.rayleigh_lower = rayleigh_lower_bound(&sk.graph, &embedding, &pi)?;
            // vertices outside the skeleton carry no stationary mass
            let uniform = 1.0 / n as f64;
            let missing = (n - sk.graph.n()) as f64 * uniform;
            row.stationary_tv = 0.5 * (pi.iter().map(|x| (x - uniform).abs()).sum::<f64>() + missing);
            attempts.push(row);
            chosen = Some((attempt, g, rep.second_abs_eigenvalue));
            break;
        }
        attempts.push(row);
    }
    ctx.write_csv("skeleton.csv", &attempts)?;
    let Some((attempt, g, skeleton_abs)) = chosen else {
        ctx.check("connected_attempts", 0.0, Relation::Ge, 1.0);
        return Ok(());
    };
    let last = attempts.last().expect("chosen attempt recorded");
    let (lambda2, rayleigh, tv) = (last.lambda2, last.rayleigh_lower, last.stationary_tv);
    let rows = ctx.phase("links", |_| link_rows(&g, attempt, params.tol))?;
    let (link_max, _, empty) = nonempty_max(&rows);
    ctx.write_csv("links.csv", &rows)?;
    ctx.derive("empty_links", empty as f64);
    ctx.derive("skeleton_abs_lambda", skeleton_abs);
    ctx.check("skeleton_lambda2", lambda2, Relation::Ge, tau - params.skeleton_slack);
    ctx.check("skeleton_rayleigh_lower", rayleigh, Relation::Ge, tau - params.skeleton_slack);
    ctx.check("link_lambda_max", link_max, Relation::Le, lambda + params.link_slack);
    ctx.check("stationary_tv", tv, Relation::Le, params.tv_max);
    if link_max < 1.0 {
        let t = trickle_down_check(skeleton_abs, link_max, params.trickle_tol)?;
        ctx.check("trickle_down_slack", t.slack, Relation::Ge, 0.0);
    }
    Ok(())
}
