use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::stream;
use crate::sphere::{dot, norm, tau_of, BetaDist, CapSampler, UnitVector};
use crate::{Error, Result};

/// The cap walk `P_p`: from `x`, move to a uniform point of `cap_p(x)`.
#[derive(Debug, Clone)]
pub struct CapWalk {
    p: f64,
    sampler: CapSampler,
}

impl CapWalk {
    pub fn new(d: usize, p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain { what: "p", value: p });
        }
        let tau = tau_of(p, d)?.tau;
        Ok(CapWalk { p, sampler: CapSampler::new(d, tau)? })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn tau(&self) -> f64 {
        self.sampler.tau()
    }

    pub fn dim(&self) -> usize {
        self.sampler.dim()
    }

    pub fn step<R: Rng + ?Sized>(&self, x: &UnitVector, rng: &mut R) -> UnitVector {
        self.sampler.sample_around(x, rng)
    }

    pub fn run<R: Rng + ?Sized>(&self, x0: &UnitVector, k: usize, rng: &mut R) -> UnitVector {
        let mut x = x0.clone();
        for _ in 0..k {
            x = self.step(&x, rng);
        }
        x
    }

    /// `<X_j, x0>` for `j = 0..=k` along one walk.
    pub fn projections<R: Rng + ?Sized>(&self, x0: &UnitVector, k: usize, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        let mut cur = x0.coords().to_vec();
        let mut next = vec![0.0; d];
        let mut out = Vec::with_capacity(k + 1);
        out.push(1.0);
        for _ in 0..k {
            self.sampler.sample_around_into(&cur, &mut next, rng);
            std::mem::swap(&mut cur, &mut next);
            out.push(dot(&cur, x0.coords()));
        }
        out
    }
}

pub fn cap_walk<R: Rng + ?Sized>(x0: &UnitVector, p: f64, k: usize, rng: &mut R) -> Result<UnitVector> {
    if k == 0 {
        return Ok(x0.clone());
    }
    Ok(CapWalk::new(x0.dim(), p)?.run(x0, k, rng))
}

/// Largest `dt (d - 1)` accepted by the Brownian simulator.
pub const BM_STABILITY: f64 = 0.1;

/// A simulated path of Brownian motion on the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BMPath {
    pub start: UnitVector,
    pub times: Vec<f64>,
    pub positions: Vec<UnitVector>,
    pub step_size: f64,
}

fn check_bm(d: usize, t: f64, dt: f64) -> Result<usize> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain { what: "t", value: t });
    }
    if t == 0.0 {
        return Ok(0);
    }
    if !(dt > 0.0 && dt <= t) {
        return Err(Error::Domain { what: "dt", value: dt });
    }
    if dt * (d as f64 - 1.0) > BM_STABILITY {
        return Err(Error::Stability { dt, limit: BM_STABILITY });
    }
    Ok((t / dt).round().max(1.0) as usize)
}

/// One Euler–Maruyama step of `dV = sqrt(2)(I - V V^T) dB - (d-1) V dt`
/// followed by renormalization. `g` is scratch space.
fn bm_step<R: Rng + ?Sized>(v: &mut [f64], g: &mut [f64], dt: f64, rng: &mut R) {
    let d = v.len();
    let sd = (2.0 * dt).sqrt();
    for x in g.iter_mut() {
        *x = sd * rng.sample::<f64, _>(StandardNormal);
    }
    let c = dot(g, v);
    let shrink = 1.0 - (d as f64 - 1.0) * dt;
    for (vi, gi) in v.iter_mut().zip(g.iter()) {
        *vi = shrink * *vi + (gi - c * *vi);
    }
    let n = norm(v);
    v.iter_mut().for_each(|x| *x /= n);
}

/// Path on the grid `0, dt, 2dt, ...` up to `t` (the step count is
/// `round(t / dt)`).
pub fn brownian_sphere<R: Rng + ?Sized>(x0: &UnitVector, t: f64, dt: f64, rng: &mut R) -> Result<BMPath> {
    let steps = check_bm(x0.dim(), t, dt)?;
    let h = if steps == 0 { 0.0 } else { t / steps as f64 };
    let mut v = x0.coords().to_vec();
    let mut g = vec![0.0; v.len()];
    let mut times = vec![0.0];
    let mut positions = vec![x0.clone()];
    for s in 1..=steps {
        bm_step(&mut v, &mut g, h, rng);
        times.push(s as f64 * h);
        positions.push(UnitVector::normalize(v.clone())?);
    }
    Ok(BMPath { start: x0.clone(), times, positions, step_size: h })
}

/// Endpoint `V_t` only, without storing the path.
pub fn brownian_endpoint<R: Rng + ?Sized>(x0: &UnitVector, t: f64, dt: f64, rng: &mut R) -> Result<UnitVector> {
    let steps = check_bm(x0.dim(), t, dt)?;
    let h = if steps == 0 { 0.0 } else { t / steps as f64 };
    let mut v = x0.coords().to_vec();
    let mut g = vec![0.0; v.len()];
    for _ in 0..steps {
        bm_step(&mut v, &mut g, h, rng);
    }
    UnitVector::normalize(v)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailRow {
    pub x: f64,
    pub empirical: f64,
    pub bound: f64,
    pub mc_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BmConcentration {
    pub d: usize,
    pub t: f64,
    pub dt: f64,
    pub trials: usize,
    pub mean: f64,
    pub expected_mean: f64,
    pub sigma: f64,
    pub mean_pass: bool,
    pub tails: Vec<TailRow>,
    pub pass: bool,
}

/// `2 exp(-((d-1)/2) x^2 / (1 - e^{-2(d-1)t}))`.
pub fn bm_tail_bound(d: usize, t: f64, x: f64) -> f64 {
    let k = d as f64 - 1.0;
    let var = -(-2.0 * k * t).exp_m1();
    2.0 * (-0.5 * k * x * x / var).exp()
}

/// Samples `<V_0, V_t>` over `trials` independent paths (trial `i` uses the
/// stream `(seed, "bm", i)`).
pub fn bm_overlaps(d: usize, t: f64, dt: f64, trials: usize, seed: u64) -> Result<Vec<f64>> {
    check_bm(d, t, dt)?;
    let x0 = UnitVector::basis(d, 0)?;
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, "bm", i as u64);
            brownian_endpoint(&x0, t, dt, &mut rng).map(|v| v.coords()[0])
        })
        .collect()
}

/// Compares the mean of `<V_0, V_t>` with `e^{-(d-1)t}` (3 sigma) and the
/// deviation tails with [`bm_tail_bound`] plus 3 binomial standard errors
/// at every `x` in `grid`.
pub fn bm_concentration_check(d: usize, t: f64, dt: f64, trials: usize, grid: &[f64], seed: u64) -> Result<BmConcentration> {
    if trials == 0 {
        return Err(Error::EmptyInput("trials must be positive"));
    }
    let a = bm_overlaps(d, t, dt, trials, seed)?;
    let n = trials as f64;
    let k = d as f64 - 1.0;
    let expected_mean = (-k * t).exp();
    let mean = a.iter().sum::<f64>() / n;
    let sigma = (-(-2.0 * k * t).exp_m1() / (k * n)).sqrt();
    let mean_pass = (mean - expected_mean).abs() <= 3.0 * sigma;
    let tails: Vec<TailRow> = grid
        .iter()
        .map(|&x| {
            let empirical = a.iter().filter(|&&v| (v - expected_mean).abs() >= x).count() as f64 / n;
            let bound = bm_tail_bound(d, t, x);
            let b = bound.min(1.0);
            let mc_error = (b * (1.0 - b) / n).sqrt();
            TailRow { x, empirical, bound, mc_error, pass: empirical <= bound + 3.0 * mc_error }
        })
        .collect();
    let pass = mean_pass && tails.iter().all(|r| r.pass);
    Ok(BmConcentration { d, t, dt, trials, mean, expected_mean, sigma, mean_pass, tails, pass })
}

/// Draws `count` values of one coordinate of a uniform point, exactly.
pub fn uniform_projections(d: usize, count: usize, seed: u64, phase: &str) -> Result<Vec<f64>> {
    let s = CapSampler::new(d, -1.0)?;
    let mut rng = stream(seed, phase, 0);
    Ok((0..count).map(|_| s.sample_projection(&mut rng)).collect())
}

/// Cumulative distribution of the projected coordinate, for KS tests.
pub fn beta_cdf(d: usize) -> Result<impl Fn(f64) -> f64> {
    let b = BetaDist::new(d)?;
    Ok(move |x: f64| b.cdf(x.clamp(-1.0, 1.0)).unwrap_or(f64::NAN))
}
