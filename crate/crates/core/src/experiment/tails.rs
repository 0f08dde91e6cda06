use serde::Serialize;

use super::{Relation, RunContext, TailsParams};
use crate::error::Result;
use crate::sphere::{tail_sandwich, tau_of, BetaDist};

#[derive(Debug, Serialize)]
struct TailRow {
    d: usize,
    t: f64,
    tail: f64,
    lower: f64,
    upper: f64,
    /// The lower bound is only informative when positive.
    lower_active: bool,
    in_sandwich: bool,
}

#[derive(Debug, Serialize)]
struct InversionRow {
    d: usize,
    p: f64,
    tau: f64,
    tail_at_tau: f64,
    abs_error: f64,
    pass: bool,
}

pub(super) fn run(params: &TailsParams, ctx: &mut RunContext) -> Result<()> {
    let rows = ctx.phase("sandwich", |_| {
        let mut rows = Vec::new();
        for &d in &params.d_grid {
            let dist = BetaDist::new(d)?;
            for &t in &params.t_grid {
                let tail = dist.tail(t)?;
                let (lower, upper) = tail_sandwich(d, t)?;
                let lower_active = lower > 0.0;
                let in_sandwich = (!lower_active || tail >= lower) && tail <= upper;
                rows.push(TailRow { d, t, tail, lower, upper, lower_active, in_sandwich });
            }
        }
        Ok(rows)
    })?;
    let violations = rows.iter().filter(|r| !r.in_sandwich).count();
    ctx.write_csv("tails.csv", &rows)?;
    ctx.check("tail_sandwich_violations", violations as f64, Relation::Le, 0.0);

    let inv = ctx.phase("inversion", |_| {
        let mut rows = Vec::new();
        for &d in &params.d_grid {
            let dist = BetaDist::new(d)?;
            for &p in &params.p_grid {
                let tau = tau_of(p, d)?.tau;
                let tail_at_tau = dist.tail(tau)?;
                let abs_error = (tail_at_tau - p).abs();
                rows.push(InversionRow { d, p, tau, tail_at_tau, abs_error, pass: abs_error <= params.inversion_tol });
            }
        }
        Ok(rows)
    })?;
    let worst = inv.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    ctx.write_csv("inversion.csv", &inv)?;
    ctx.check("inversion_max_error", worst, Relation::Le, params.inversion_tol);
    Ok(())
}
