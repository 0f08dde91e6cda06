use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::walk::{uniform_projections, CapWalk};
use crate::rng::stream;
use crate::sphere::{BetaDist, UnitVector};
use crate::{Error, Result};

pub const MIN_BINS: usize = 10;

/// Histogram of projections `<x, axis>` over `bins` equal cells of [-1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projected1DMeasure {
    pub axis: Option<UnitVector>,
    pub d: usize,
    pub weights: Vec<f64>,
    pub samples: usize,
}

fn bin_of(x: f64, bins: usize) -> usize {
    (((x.clamp(-1.0, 1.0) + 1.0) * 0.5 * bins as f64) as usize).min(bins - 1)
}

impl Projected1DMeasure {
    pub fn from_projections(values: &[f64], d: usize, bins: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("no samples to project"));
        }
        if bins < MIN_BINS {
            return Err(Error::InvalidArgument(format!("need at least {MIN_BINS} bins, got {bins}")));
        }
        let mut counts = vec![0u64; bins];
        for &v in values {
            counts[bin_of(v, bins)] += 1;
        }
        let n = values.len() as f64;
        Ok(Projected1DMeasure { axis: None, d, weights: counts.iter().map(|&c| c as f64 / n).collect(), samples: values.len() })
    }

    pub fn bin_count(&self) -> usize {
        self.weights.len()
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        let b = self.bin_count();
        (0..=b).map(|i| -1.0 + 2.0 * i as f64 / b as f64).collect()
    }
}

pub fn project_1d(samples: &[UnitVector], axis: &UnitVector, bins: usize) -> Result<Projected1DMeasure> {
    let values: Vec<f64> = samples.iter().map(|s| s.dot(axis)).collect();
    let mut m = Projected1DMeasure::from_projections(&values, axis.dim(), bins)?;
    m.axis = Some(axis.clone());
    Ok(m)
}

/// Mass the projected uniform law puts on each of `bins` equal cells.
pub fn reference_masses(d: usize, bins: usize) -> Result<Vec<f64>> {
    let b = BetaDist::new(d)?;
    (0..bins)
        .map(|i| {
            let lo = -1.0 + 2.0 * i as f64 / bins as f64;
            let hi = (-1.0 + 2.0 * (i + 1) as f64 / bins as f64).min(1.0);
            b.interval_mass(lo, hi)
        })
        .collect()
}

/// Half the l1 distance between the histogram and the binned projected
/// uniform law.
pub fn tv_to_uniform(m: &Projected1DMeasure) -> Result<f64> {
    let reference = reference_masses(m.d, m.bin_count())?;
    Ok(tv_between(&m.weights, &reference))
}

pub fn tv_between(a: &[f64], b: &[f64]) -> f64 {
    (0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()).min(1.0)
}

/// Self-distance of two independent uniform samples of size `trials`.
pub fn noise_floor(d: usize, trials: usize, bins: usize, seed: u64) -> Result<f64> {
    let a = uniform_projections(d, trials, seed, "noise-a")?;
    let b = uniform_projections(d, trials, seed, "noise-b")?;
    let ha = Projected1DMeasure::from_projections(&a, d, bins)?;
    let hb = Projected1DMeasure::from_projections(&b, d, bins)?;
    Ok(tv_between(&ha.weights, &hb.weights))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub k: usize,
    pub tv_estimate: f64,
    pub noise_floor: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    pub d: usize,
    pub p: f64,
    pub tau: f64,
    pub noise_floor: f64,
    pub rows: Vec<DecayRow>,
    /// Steps whose estimate is at least twice the noise floor.
    pub usable: Vec<usize>,
    /// Least-squares slope of `ln TV` against `k` over the usable steps;
    /// absent with fewer than two usable steps.
    pub slope: Option<f64>,
}

impl DecayFit {
    /// `(k, TV(k+1)/TV(k))` for `k >= 1` with both steps usable.
    pub fn ratios(&self) -> Vec<(usize, f64)> {
        self.usable
            .windows(2)
            .filter(|w| w[1] == w[0] + 1 && w[0] >= 1)
            .map(|w| (w[0], self.rows[w[1]].tv_estimate / self.rows[w[0]].tv_estimate))
            .collect()
    }
}

/// Runs `trials` independent cap walks from `x0` for `k_max` steps and
/// measures the projected distance to uniform after every step.
pub fn fit_decay_rate(x0: &UnitVector, p: f64, k_max: usize, trials: usize, bins: usize, seed: u64) -> Result<DecayFit> {
    if k_max < 2 {
        return Err(Error::InvalidArgument("k_max must be at least 2".into()));
    }
    if trials == 0 {
        return Err(Error::EmptyInput("trials must be positive"));
    }
    let d = x0.dim();
    let walk = CapWalk::new(d, p)?;
    let paths: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|i| walk.projections(x0, k_max, &mut stream(seed, "capwalk", i as u64)))
        .collect();
    let floor = noise_floor(d, trials, bins, seed)?;
    let reference = reference_masses(d, bins)?;
    let mut rows = Vec::with_capacity(k_max + 1);
    let mut column = vec![0.0; trials];
    for k in 0..=k_max {
        column.iter_mut().zip(&paths).for_each(|(c, p)| *c = p[k]);
        let h = Projected1DMeasure::from_projections(&column, d, bins)?;
        rows.push(DecayRow { k, tv_estimate: tv_between(&h.weights, &reference), noise_floor: floor, trials });
    }
    let usable: Vec<usize> = rows.iter().filter(|r| r.tv_estimate >= 2.0 * floor).map(|r| r.k).collect();
    if usable.is_empty() {
        return Err(Error::InsufficientSignal { floor });
    }
    let slope = if usable.len() >= 2 {
        let xs: Vec<f64> = usable.iter().map(|&k| k as f64).collect();
        let ys: Vec<f64> = usable.iter().map(|&k| rows[k].tv_estimate.ln()).collect();
        Some(least_squares_slope(&xs, &ys))
    } else {
        None
    };
    Ok(DecayFit { d, p, tau: walk.tau(), noise_floor: floor, rows, usable, slope })
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// A nondecreasing step function on [-1, 1]: value `values[i]` on
/// `[breaks[i], breaks[i+1])`, with `breaks[0] = -1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepFunction {
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.breaks.partition_point(|&b| b <= x);
        if i == 0 {
            0.0
        } else {
            self.values[i - 1]
        }
    }

    /// `∫ ell dBeta_d`.
    pub fn integral(&self, d: usize) -> Result<f64> {
        let b = BetaDist::new(d)?;
        let mut total = 0.0;
        for i in 0..self.values.len() {
            let hi = self.breaks.get(i + 1).copied().unwrap_or(1.0);
            total += self.values[i] * b.interval_mass(self.breaks[i], hi)?;
        }
        Ok(total)
    }
}

/// Mixture of cap densities: mass `masses[i]` on the cap `{x >= thresholds[i]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapMixture {
    pub d: usize,
    pub thresholds: Vec<f64>,
    pub masses: Vec<f64>,
}

impl CapMixture {
    /// Relative density `sum_i masses[i] 1[x >= theta_i] / Pr[X >= theta_i]`.
    pub fn reconstruct(&self, x: f64) -> Result<f64> {
        let b = BetaDist::new(self.d)?;
        let mut v = 0.0;
        for (&t, &m) in self.thresholds.iter().zip(&self.masses) {
            if x >= t {
                v += m / b.tail(t)?;
            }
        }
        Ok(v)
    }
}

/// Writes a spherically monotone relative density as a mixture of caps:
/// the jump at each breakpoint times the cap measure above it.
pub fn cap_decomposition(ell: &StepFunction, d: usize) -> Result<CapMixture> {
    let k = ell.values.len();
    if k == 0 || ell.breaks.len() != k {
        return Err(Error::InvalidArgument("step function needs one break per value".into()));
    }
    if ell.breaks[0] != -1.0 || ell.breaks.windows(2).any(|w| w[1] <= w[0]) || ell.breaks[k - 1] > 1.0 {
        return Err(Error::InvalidArgument("breaks must start at -1 and increase within [-1, 1]".into()));
    }
    if ell.values[0] < 0.0 {
        return Err(Error::NotMonotone { index: 0 });
    }
    if let Some(i) = (1..k).find(|&i| ell.values[i] < ell.values[i - 1]) {
        return Err(Error::NotMonotone { index: i });
    }
    let total = ell.integral(d)?;
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidArgument(format!("density integrates to {total}, not 1")));
    }
    let b = BetaDist::new(d)?;
    let mut thresholds = Vec::new();
    let mut masses = Vec::new();
    let mut prev = 0.0;
    for i in 0..k {
        let jump = ell.values[i] - prev;
        prev = ell.values[i];
        if jump > 0.0 {
            thresholds.push(ell.breaks[i]);
            masses.push(jump * b.tail(ell.breaks[i])?);
        }
    }
    Ok(CapMixture { d, thresholds, masses })
}

pub const DOMINANCE_MIN_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dominance {
    pub holds: bool,
    /// `max_x F_mu(x) - F_nu(x)`.
    pub max_excess: f64,
    pub tolerance: f64,
}

/// DKW radius at confidence 99% for a sample of size `n`.
pub fn dkw_radius(n: usize) -> f64 {
    ((200.0f64).ln() / (2.0 * n as f64)).sqrt()
}

/// Whether the projection of `mu` is stochastically at least that of `nu`:
/// `F_mu <= F_nu + tol` everywhere, `tol` the sum of the two DKW radii.
pub fn dominance_check_projections(mu: &[f64], nu: &[f64]) -> Result<Dominance> {
    if mu.len() < DOMINANCE_MIN_SAMPLES || nu.len() < DOMINANCE_MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!("dominance needs at least {DOMINANCE_MIN_SAMPLES} samples per side")));
    }
    let mut a = mu.to_vec();
    let mut b = nu.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut max_excess = f64::NEG_INFINITY;
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        max_excess = max_excess.max(i as f64 / na - j as f64 / nb);
    }
    let tolerance = dkw_radius(a.len()) + dkw_radius(b.len());
    Ok(Dominance { holds: max_excess <= tolerance, max_excess, tolerance })
}

pub fn dominance_check(mu: &[UnitVector], nu: &[UnitVector], axis: &UnitVector) -> Result<Dominance> {
    let pa: Vec<f64> = mu.iter().map(|v| v.dot(axis)).collect();
    let pb: Vec<f64> = nu.iter().map(|v| v.dot(axis)).collect();
    dominance_check_projections(&pa, &pb)
}
