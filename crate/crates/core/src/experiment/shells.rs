use serde::Serialize;

use super::{fraction_true, Relation, RunContext, ShellParams};
use crate::error::Result;
use crate::rng::{split_seed, stream};
use crate::shell::{
    analyze_shells, build_shell_matrices, degree_concentration_check, min_edge_prob, outlier_ratio_with,
    ratio_claims_check, sample_cap_link, sample_shells, shell_eta, typical_alpha, ShellSlack,
};
use crate::sphere::{BetaDist, TailTable};

#[derive(Debug, Serialize)]
struct ShellRow {
    resample: usize,
    n_typical: usize,
    n_outlier: usize,
    above_eta: usize,
    lambda_max_deflated: f64,
    max_row_l1: f64,
    outlier_mass_max: f64,
    max_square_l1: Option<f64>,
    row_stochastic_error: f64,
}

#[derive(Debug, Serialize)]
struct RatioRow {
    x: f64,
    ratio: f64,
    rel_error: f64,
    threshold: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct ClaimRow {
    kappa_i: f64,
    kappa_j: f64,
    kappa_l: f64,
    threshold_ratio: f64,
    complement_ratio: f64,
    bound: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct DegreeRow {
    resample: usize,
    max_ratio: f64,
    zero_degree: usize,
    bound: f64,
    predicted_failure: f64,
    pass: bool,
}

pub(super) fn run(params: &ShellParams, ctx: &mut RunContext) -> Result<()> {
    let (d, m, tau, gamma) = (params.d, params.m, params.tau, params.gamma);
    let eta = shell_eta(m, tau, d, gamma)?;
    let alpha = typical_alpha(tau, d, eta)?;
    let df = d as f64;
    let ln_d = df.ln();
    ctx.derive("tau", tau);
    ctx.derive("p", BetaDist::new(d)?.tail(tau)?);
    ctx.derive("q", min_edge_prob(tau, d)?);
    ctx.derive("eta", eta);
    ctx.derive("alpha", alpha);
    ctx.derive("typical_cut", tau * (1.0 + alpha));

    let slack = ShellSlack {
        spectral: params.spectral_slack,
        row_l1: params.row_slack,
        outlier_mass: params.outlier_slack,
        outlier_ratio: params.ratio_slack,
        claims: params.claims_slack,
    };
    let master = ctx.seed();
    let reports = ctx.phase("shell-matrices", |_| {
        (0..params.resamples)
            .map(|r| {
                let shells = sample_shells(m, tau, d, &mut stream(master, "shells", r as u64))?;
                analyze_shells(&shells, gamma, &slack, params.with_square, params.tol)
            })
            .collect::<crate::Result<Vec<_>>>()
    })?;
    let rows: Vec<ShellRow> = reports
        .iter()
        .enumerate()
        .map(|(resample, r)| ShellRow {
            resample,
            n_typical: r.n_typical,
            n_outlier: r.n_outlier,
            above_eta: r.above_eta,
            lambda_max_deflated: r.lambda_max_deflated,
            max_row_l1: r.max_row_l1,
            outlier_mass_max: r.outlier_mass_max,
            max_square_l1: r.max_square_l1,
            row_stochastic_error: r.row_stochastic_error,
        })
        .collect();
    ctx.write_csv("shells.csv", &rows)?;
    ctx.write_json("reports.json", &reports)?;
    ctx.derive("spectral_threshold", params.spectral_slack * ln_d / df.sqrt());
    ctx.derive("row_l1_threshold", params.row_slack * ln_d * ln_d / df);
    ctx.derive("outlier_mass_threshold", params.outlier_slack / df);
    ctx.derive("lambda_max_deflated_worst", rows.iter().map(|r| r.lambda_max_deflated).fold(0.0, f64::max));
    ctx.derive("max_row_l1_worst", rows.iter().map(|r| r.max_row_l1).fold(0.0, f64::max));

    let worst_row_sum = rows.iter().map(|r| r.row_stochastic_error).fold(0.0, f64::max);
    ctx.check("row_stochastic_error", worst_row_sum, Relation::Le, params.row_stochastic_tol);
    for name in ["spectral", "row_l1", "outlier_mass"] {
        let frac = fraction_true(reports.iter().map(|r| r.pass(name)));
        ctx.check(&format!("{name}_pass_fraction"), frac, Relation::Ge, params.min_pass_fraction);
    }
    let eta_frac = fraction_true(reports.iter().map(|r| r.above_eta == 0));
    ctx.derive("below_eta_fraction", eta_frac);
    if params.with_square {
        let bad = reports
            .iter()
            .filter(|r| r.max_square_l1.is_some_and(|b| r.lambda_max_deflated.powi(2) > b + 1e-12))
            .count();
        ctx.check("square_row_bound_violations", bad as f64, Relation::Le, 0.0);
    }

    let ratio_rows = ctx.phase("outlier-ratio", |_| {
        let table = TailTable::new(d - 1)?;
        let k = params.nd_points.max(1);
        (0..k)
            .map(|i| {
                let x = if k == 1 { tau } else { tau + (eta - tau) * i as f64 / (k - 1) as f64 };
                let r = outlier_ratio_with(x, tau, d, alpha, &table)?;
                let threshold = params.ratio_slack / df;
                Ok(RatioRow { x, ratio: r.ratio, rel_error: r.rel_error, threshold, pass: r.ratio <= threshold })
            })
            .collect::<crate::Result<Vec<_>>>()
    })?;
    let worst_ratio = ratio_rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    ctx.write_csv("outlier_ratio.csv", &ratio_rows)?;
    ctx.check("outlier_ratio_max", worst_ratio, Relation::Le, params.ratio_slack / df);

    let claim_rows = ctx.phase("ratio-claims", |_| {
        let cut = tau * (1.0 + alpha);
        let mut rng = stream(master, "claims", 0);
        let mut typical = Vec::new();
        while typical.len() < 3 * params.claim_triples {
            let s = sample_shells(3 * params.claim_triples.max(1), tau, d, &mut rng)?;
            typical.extend(s.kappas().iter().copied().filter(|&k| k <= cut));
        }
        typical.truncate(3 * params.claim_triples);
        let bound = params.claims_slack * alpha * alpha;
        typical
            .chunks(3)
            .map(|c| {
                let r = ratio_claims_check(c[0], c[1], c[2], tau, d)?;
                Ok(ClaimRow {
                    kappa_i: c[0],
                    kappa_j: c[1],
                    kappa_l: c[2],
                    threshold_ratio: r.threshold_ratio,
                    complement_ratio: r.complement_ratio,
                    bound,
                    pass: r.within(alpha, params.claims_slack),
                })
            })
            .collect::<crate::Result<Vec<_>>>()
    })?;
    let worst_claim = claim_rows.iter().map(|r| r.threshold_ratio.max(r.complement_ratio)).fold(0.0, f64::max);
    ctx.write_csv("claims.csv", &claim_rows)?;
    ctx.derive("claims_alpha_sq", alpha * alpha);
    ctx.check("ratio_claims_max_deviation", worst_claim, Relation::Le, params.claims_slack * alpha * alpha);

    if params.degree_resamples > 0 {
        let (dd, dt, dm, da) = (params.degree_d, params.degree_tau, params.degree_m, params.degree_alpha);
        let q = min_edge_prob(dt, dd)?;
        ctx.derive("degree_q_times_m", q * (dm as f64 - 1.0));
        let deg_rows = ctx.phase("degrees", |_| {
            (0..params.degree_resamples)
                .map(|r| {
                    let link = sample_cap_link(dm, dt, dd, split_seed(master, "degree-link", r as u64))?;
                    let mats = build_shell_matrices(&link.shells)?;
                    let c = degree_concentration_check(&link.graph, &mats, da)?;
                    Ok(DegreeRow {
                        resample: r,
                        max_ratio: c.max_ratio,
                        zero_degree: c.zero_degree,
                        bound: c.bound,
                        predicted_failure: c.predicted_failure,
                        pass: c.pass,
                    })
                })
                .collect::<crate::Result<Vec<_>>>()
        })?;
        let frac = fraction_true(deg_rows.iter().map(|r| r.pass));
        ctx.write_csv("degrees.csv", &deg_rows)?;
        ctx.check("degree_pass_fraction", frac, Relation::Ge, params.min_pass_fraction);
    }
    Ok(())
}
