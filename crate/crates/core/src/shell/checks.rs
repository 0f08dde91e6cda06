use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrices::{min_edge_prob, shell_spectral_check, ShellMatrices, ShellVector};
use crate::complex::WeightedGraph;
use crate::error::{Error, Result};
use crate::sphere::quadrature::{integrate_with_breaks, Tolerance};
use crate::sphere::{shifted_threshold, tau_of, BetaDist, TailTable};

/// Typical/outlier labels for one shell vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellClasses {
    pub gamma: f64,
    /// Width of the typical band `[tau, tau (1 + alpha)]`.
    pub alpha: f64,
    /// Height every shell stays below with probability `1 - m^{-2 gamma}`.
    pub eta: f64,
    pub typical: Vec<bool>,
    pub n_typical: usize,
    pub n_outlier: usize,
    /// Number of shells above `eta`.
    pub above_eta: usize,
}

impl ShellClasses {
    pub fn typical_indices(&self) -> Vec<usize> {
        (0..self.typical.len()).filter(|&i| self.typical[i]).collect()
    }
}

/// `eta = tau_of(m^{-2 gamma - 1} tail_d(tau), d)`.
pub fn shell_eta(m: usize, tau: f64, d: usize, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Domain { what: "gamma", value: gamma });
    }
    let ln_p = -(2.0 * gamma + 1.0) * (m as f64).ln() + BetaDist::new(d)?.log_tail(tau)?;
    let p = ln_p.exp();
    if p == 0.0 {
        return Err(Error::DegenerateEta(1.0));
    }
    let eta = tau_of(p, d)?.tau;
    if eta >= 1.0 - 1e-12 {
        return Err(Error::DegenerateEta(eta));
    }
    Ok(eta)
}

/// `alpha = 36 ln d / (tau^2 (d - 3) (1 - eta))`.
pub fn typical_alpha(tau: f64, d: usize, eta: f64) -> Result<f64> {
    if d <= 3 {
        return Err(Error::InvalidDimension(d));
    }
    Ok(36.0 * (d as f64).ln() / (tau * tau * (d as f64 - 3.0) * (1.0 - eta)))
}

pub fn classify_shells(kappa: &ShellVector, gamma: f64) -> Result<ShellClasses> {
    let (tau, d) = (kappa.tau(), kappa.dim());
    if d <= 3 {
        return Err(Error::InvalidDimension(d));
    }
    let eta = shell_eta(kappa.len(), tau, d, gamma)?;
    let alpha = typical_alpha(tau, d, eta)?;
    let cut = tau * (1.0 + alpha);
    let typical: Vec<bool> = kappa.kappas().iter().map(|&k| k <= cut).collect();
    let n_typical = typical.iter().filter(|&&t| t).count();
    let above_eta = kappa.kappas().iter().filter(|&&k| k > eta).count();
    Ok(ShellClasses { gamma, alpha, eta, n_typical, n_outlier: typical.len() - n_typical, typical, above_eta })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowSimilarity {
    /// Max over typical pairs of `||Qbar_i - Qbar_j||_1`.
    pub max_typical_l1: f64,
    /// Max over all pairs of `||(Qbar^2)_i - (Qbar^2)_j||_1`, if computed.
    pub max_square_l1: Option<f64>,
    /// Max over rows of `||(Qbar^2)_i - pi||_1`, if computed.
    pub max_square_to_pi_l1: Option<f64>,
    /// Max over rows with `kappa_i <= eta` of the `Qbar` mass on outlier
    /// columns.
    pub outlier_mass_max: f64,
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Largest `l1` distance between rows `idx` of the row-major `m x m` matrix.
pub fn max_pair_l1(rows: &[f64], m: usize, idx: &[usize]) -> f64 {
    let row = |i: usize| &rows[i * m..(i + 1) * m];
    (0..idx.len())
        .into_par_iter()
        .map(|a| idx[a + 1..].iter().map(|&j| l1(row(idx[a]), row(j))).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max)
}

pub fn row_similarity_check(
    mats: &ShellMatrices,
    kappa: &ShellVector,
    classes: &ShellClasses,
    with_square: bool,
) -> Result<RowSimilarity> {
    let m = mats.len();
    if kappa.len() != m || classes.typical.len() != m {
        return Err(Error::InvalidArgument("shell vector, classes and matrices disagree in size".into()));
    }
    let typical = classes.typical_indices();
    if typical.len() < 2 {
        return Err(Error::VacuousInput(format!("{} typical shells; need at least two", typical.len())));
    }
    let max_typical_l1 = max_pair_l1(mats.qbar_entries(), m, &typical);
    let outlier_mass_max = (0..m)
        .filter(|&i| kappa.kappas()[i] <= classes.eta)
        .map(|i| {
            let row = mats.qbar_row(i);
            let mut mass = 0.0;
            for k in (0..m).filter(|&k| !classes.typical[k]) {
                mass += row[k];
            }
            mass
        })
        .fold(0.0, f64::max);
    let (max_square_l1, max_square_to_pi_l1) = if with_square {
        let sq = mats.qbar_squared();
        let all: Vec<usize> = (0..m).collect();
        let pi = mats.stationary();
        let to_pi = (0..m).map(|i| l1(&sq[i * m..(i + 1) * m], pi)).fold(0.0, f64::max);
        (Some(max_pair_l1(&sq, m, &all)), Some(to_pi))
    } else {
        (None, None)
    };
    Ok(RowSimilarity { max_typical_l1, max_square_l1, max_square_to_pi_l1, outlier_mass_max })
}

/// `N(x) / D(x)`: the expected `Q` mass a shell at height `x` puts on
/// outlier shells, relative to its total expected mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierRatio {
    pub ln_numerator: f64,
    pub ln_denominator: f64,
    pub ratio: f64,
    /// Larger of the two relative quadrature error estimates.
    pub rel_error: f64,
}

/// `ln ∫_lo^1 dens_d(y) tail_{d-1}(T(x, y)) dy` with its relative error.
fn ln_shell_integral(x: f64, lo: f64, tau: f64, dist: &BetaDist, table: &TailTable) -> Result<(f64, f64)> {
    if lo >= 1.0 {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    let k = (dist.dim() as f64 - 3.0) / 2.0;
    let ln_z = dist.ln_normalization();
    let log_f = |y: f64| -> f64 {
        if y >= 1.0 {
            return f64::NEG_INFINITY;
        }
        let t = match shifted_threshold(x, y, tau) {
            Ok(t) => t.clamp(-1.0, 1.0),
            Err(_) => return f64::NEG_INFINITY,
        };
        let lt = table.log_tail(t).unwrap_or(f64::NEG_INFINITY);
        ln_z + k * ((1.0 - y) * (1.0 + y)).ln() + lt
    };
    let width = 1.0 - lo;
    let mut breaks: Vec<f64> = (1..40).map(|j| lo + width * 0.5f64.powi(j)).collect();
    breaks.extend((1..64).map(|j| lo + width * j as f64 / 64.0));
    let shift = breaks.iter().map(|&y| log_f(y)).fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    let tol = Tolerance { abs: 0.0, rel: 1e-10, max_intervals: 4000 };
    let r = integrate_with_breaks(|y| (log_f(y) - shift).exp(), lo, 1.0, &breaks, tol);
    Ok((shift + r.value.ln(), r.error / r.value.abs().max(f64::MIN_POSITIVE)))
}

pub fn outlier_ratio_quadrature(x: f64, tau: f64, d: usize, alpha: f64) -> Result<OutlierRatio> {
    let table = TailTable::new(d.checked_sub(1).filter(|&k| k >= 2).ok_or(Error::InvalidDimension(d))?)?;
    outlier_ratio_with(x, tau, d, alpha, &table)
}

/// As [`outlier_ratio_quadrature`] with a caller-provided `Beta_{d-1}` table.
pub fn outlier_ratio_with(x: f64, tau: f64, d: usize, alpha: f64, table: &TailTable) -> Result<OutlierRatio> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain { what: "tau", value: tau });
    }
    if !(x >= tau && x < 1.0) {
        return Err(Error::Domain { what: "x", value: x });
    }
    if !(alpha >= 0.0) {
        return Err(Error::Domain { what: "alpha", value: alpha });
    }
    if table.dist().dim() + 1 != d {
        return Err(Error::InvalidArgument("tail table must be for dimension d - 1".into()));
    }
    let dist = BetaDist::new(d)?;
    let (ln_d, err_d) = ln_shell_integral(x, tau, tau, &dist, table)?;
    let (ln_n, err_n) = ln_shell_integral(x, tau * (1.0 + alpha), tau, &dist, table)?;
    Ok(OutlierRatio {
        ln_numerator: ln_n,
        ln_denominator: ln_d,
        ratio: (ln_n - ln_d).exp(),
        rel_error: err_d.max(err_n),
    })
}

/// Deviations from 1 of the two ratios that control how far typical rows of
/// `Q` are from constant multiples of each other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioDeviations {
    /// `|T(kj, kl) T(ki, tau) / (T(ki, kl) T(kj, tau)) - 1|`.
    pub threshold_ratio: f64,
    /// `|A / B - 1|` with `A = (1 - T(ki, kl)^2)(1 - T(kj, tau)^2)` and
    /// `B = (1 - T(kj, kl)^2)(1 - T(ki, tau)^2)`.
    pub complement_ratio: f64,
}

impl RatioDeviations {
    pub fn within(&self, alpha: f64, slack: f64) -> bool {
        let bound = slack * alpha * alpha;
        self.threshold_ratio <= bound && self.complement_ratio <= bound
    }
}

pub fn ratio_claims_check(kappa_i: f64, kappa_j: f64, kappa_l: f64, tau: f64, _d: usize) -> Result<RatioDeviations> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain { what: "tau", value: tau });
    }
    for (what, k) in [("kappa_i", kappa_i), ("kappa_j", kappa_j), ("kappa_l", kappa_l)] {
        if !(k >= tau && k < 1.0) {
            return Err(Error::Domain { what, value: k });
        }
    }
    // the square roots in T cancel in this ratio
    let h = (tau - kappa_j * kappa_l) * (1.0 - kappa_i) / ((tau - kappa_i * kappa_l) * (1.0 - kappa_j));
    let t = |a: f64, b: f64| shifted_threshold(a, b, tau);
    let a = (1.0 - t(kappa_i, kappa_l)?.powi(2)) * (1.0 - t(kappa_j, tau)?.powi(2));
    let b = (1.0 - t(kappa_j, kappa_l)?.powi(2)) * (1.0 - t(kappa_i, tau)?.powi(2));
    let abs_dev = |r: f64| if r.is_finite() { (r - 1.0).abs() } else { f64::INFINITY };
    Ok(RatioDeviations { threshold_ratio: abs_dev(h), complement_ratio: abs_dev(a / b) })
}

/// Observed link degrees against the expected degrees `D_kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeConcentration {
    /// `max_i D[i, i] / deg(i)`; infinite when some vertex is isolated.
    pub max_ratio: f64,
    pub zero_degree: usize,
    pub alpha: f64,
    /// `1 / (1 - alpha)`.
    pub bound: f64,
    /// `m exp(-alpha^2 q (m - 1) / 4)`.
    pub predicted_failure: f64,
    pub pass: bool,
}

pub fn degree_concentration_check(link: &WeightedGraph, mats: &ShellMatrices, alpha: f64) -> Result<DegreeConcentration> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain { what: "alpha", value: alpha });
    }
    let m = mats.len();
    if link.n() != m {
        return Err(Error::InvalidArgument(format!("link has {} vertices, shells have {m}", link.n())));
    }
    let mut max_ratio = 0.0f64;
    let mut zero_degree = 0;
    for (i, &expected) in mats.degrees().iter().enumerate() {
        let deg = link.neighbors(i).count();
        if deg == 0 {
            zero_degree += 1;
            max_ratio = f64::INFINITY;
        } else {
            max_ratio = max_ratio.max(expected / deg as f64);
        }
    }
    let q = min_edge_prob(mats.tau(), mats.dim())?;
    let bound = 1.0 / (1.0 - alpha);
    let predicted_failure = m as f64 * (-alpha * alpha * q * (m as f64 - 1.0) / 4.0).exp();
    Ok(DegreeConcentration { max_ratio, zero_degree, alpha, bound, predicted_failure, pass: max_ratio <= bound })
}

/// Slack constants for the per-instance checks; each check passes when the
/// measured value is at most `slack` times its asymptotic rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellSlack {
    /// against `sqrt(ln^2 d / d)`
    pub spectral: f64,
    /// against `ln^2 d / d`
    pub row_l1: f64,
    /// against `1 / d`
    pub outlier_mass: f64,
    /// against `1 / d`
    pub outlier_ratio: f64,
    /// against `alpha^2`
    pub claims: f64,
}

impl Default for ShellSlack {
    fn default() -> Self {
        ShellSlack { spectral: 3.0, row_l1: 3.0, outlier_mass: 3.0, outlier_ratio: 5.0, claims: 10.0 }
    }
}

/// Per-instance summary written as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellReport {
    pub d: usize,
    pub m: usize,
    pub tau: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub eta: f64,
    pub n_typical: usize,
    pub n_outlier: usize,
    pub above_eta: usize,
    pub lambda_max_deflated: f64,
    pub max_row_l1: f64,
    pub outlier_mass_max: f64,
    pub max_square_l1: Option<f64>,
    pub row_stochastic_error: f64,
    /// measured / threshold per check; at most 1 means pass
    pub slack_ratios: BTreeMap<String, f64>,
}

impl ShellReport {
    pub fn pass(&self, name: &str) -> bool {
        self.slack_ratios.get(name).is_some_and(|&r| r <= 1.0)
    }
}

/// Builds the matrices for one shell vector and runs the spectral,
/// row-similarity and outlier-mass checks.
pub fn analyze_shells(
    kappa: &ShellVector,
    gamma: f64,
    slack: &ShellSlack,
    with_square: bool,
    tol: f64,
) -> Result<ShellReport> {
    let mats = super::build_shell_matrices(kappa)?;
    let classes = classify_shells(kappa, gamma)?;
    let spectrum = shell_spectral_check(&mats, tol)?;
    let rows = row_similarity_check(&mats, kappa, &classes, with_square)?;
    let errors = mats.invariant_errors();
    let d = kappa.dim() as f64;
    let ln_d = d.ln();
    let mut slack_ratios = BTreeMap::new();
    slack_ratios.insert("spectral".to_string(), spectrum.lambda_max_deflated / (slack.spectral * ln_d / d.sqrt()));
    slack_ratios.insert("row_l1".to_string(), rows.max_typical_l1 / (slack.row_l1 * ln_d * ln_d / d));
    slack_ratios.insert("outlier_mass".to_string(), rows.outlier_mass_max / (slack.outlier_mass / d));
    Ok(ShellReport {
        d: kappa.dim(),
        m: kappa.len(),
        tau: kappa.tau(),
        gamma,
        alpha: classes.alpha,
        eta: classes.eta,
        n_typical: classes.n_typical,
        n_outlier: classes.n_outlier,
        above_eta: classes.above_eta,
        lambda_max_deflated: spectrum.lambda_max_deflated,
        max_row_l1: rows.max_typical_l1,
        outlier_mass_max: rows.outlier_mass_max,
        max_square_l1: rows.max_square_l1,
        row_stochastic_error: errors.row_sum,
        slack_ratios,
    })
}
