use serde::Serialize;

use super::{MixingParams, Relation, RunContext};
use crate::capwalk::{bm_concentration_check, fit_decay_rate};
use crate::error::Result;
use crate::rng::split_seed;
use crate::sphere::{BetaDist, UnitVector};

#[derive(Debug, Serialize)]
struct DecayCsvRow {
    k: usize,
    tv_estimate: f64,
    noise_floor: f64,
    usable: bool,
    /// `TV(k) / TV(k-1)` when both steps are usable and `k >= 2`.
    ratio: Option<f64>,
}

#[derive(Debug, Serialize)]
struct BmMeanRow {
    t: f64,
    dt: f64,
    trials: usize,
    mean: f64,
    expected_mean: f64,
    sigma: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct BmTailRow {
    t: f64,
    x: f64,
    empirical: f64,
    bound: f64,
    mc_error: f64,
    pass: bool,
}

pub(super) fn run(params: &MixingParams, ctx: &mut RunContext) -> Result<()> {
    let d = params.d;
    let p = BetaDist::new(d)?.tail(params.tau)?;
    ctx.derive("tau", params.tau);
    ctx.derive("p", p);
    let master = ctx.seed();
    let x0 = UnitVector::basis(d, 0)?;
    let fit = ctx.phase("cap-walk", |_| {
        fit_decay_rate(&x0, p, params.k_max, params.trials, params.bins, split_seed(master, "decay", 0))
    })?;
    let ratios = fit.ratios();
    let rows: Vec<DecayCsvRow> = fit
        .rows
        .iter()
        .map(|r| DecayCsvRow {
            k: r.k,
            tv_estimate: r.tv_estimate,
            noise_floor: r.noise_floor,
            usable: fit.usable.contains(&r.k),
            ratio: ratios.iter().find(|(k, _)| k + 1 == r.k).map(|&(_, v)| v),
        })
        .collect();
    ctx.write_csv("decay.csv", &rows)?;
    ctx.derive("noise_floor", fit.noise_floor);
    if let Some(s) = fit.slope {
        ctx.derive("log_tv_slope", s);
        ctx.derive("fitted_rate", s.exp());
    }
    let worst = ratios.iter().map(|&(_, r)| r).fold(f64::NAN, f64::max);
    ctx.check_with_note(
        "decay_ratio_max",
        worst,
        Relation::Le,
        params.ratio_slack * params.tau,
        Some(format!("{} consecutive usable step pairs", ratios.len())),
    );

    let dt = params.bm_dt_scale / (params.bm_d as f64 - 1.0);
    ctx.derive("bm_dt", dt);
    let mut means = Vec::new();
    let mut tails = Vec::new();
    ctx.phase("brownian", |_| {
        for (i, &t) in params.bm_times.iter().enumerate() {
            let r = bm_concentration_check(
                params.bm_d,
                t,
                dt,
                params.bm_trials,
                &params.bm_grid,
                split_seed(master, "bm", i as u64),
            )?;
            means.push(BmMeanRow {
                t,
                dt,
                trials: r.trials,
                mean: r.mean,
                expected_mean: r.expected_mean,
                sigma: r.sigma,
                pass: r.mean_pass,
            });
            tails.extend(r.tails.iter().map(|row| BmTailRow {
                t,
                x: row.x,
                empirical: row.empirical,
                bound: row.bound,
                mc_error: row.mc_error,
                pass: row.pass,
            }));
        }
        Ok(())
    })?;
    let mean_fail = means.iter().filter(|r| !r.pass).count();
    let tail_fail = tails.iter().filter(|r| !r.pass).count();
    ctx.write_csv("bm_means.csv", &means)?;
    ctx.write_csv("bm_tails.csv", &tails)?;
    ctx.check("bm_mean_outside_3sigma", mean_fail as f64, Relation::Le, 0.0);
    ctx.check("bm_tail_violations", tail_fail as f64, Relation::Le, 0.0);
    Ok(())
}
