//! Unit vectors, uniform sampling, caps and shells.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::beta::{tau_of, BetaDist};
use super::quadrature::gk15;
use crate::{Error, Result};

const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Wraps `coords`, which must already have unit norm (within 1e-12).
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        let n = norm(&coords);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::Domain { what: "norm", value: n });
        }
        Ok(UnitVector(coords))
    }

    pub fn normalize(mut coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        let n = norm(&coords);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Singular("cannot normalize a zero or non-finite vector"));
        }
        coords.iter_mut().for_each(|x| *x /= n);
        Ok(UnitVector(coords))
    }

    pub fn basis(d: usize, i: usize) -> Result<Self> {
        if d == 0 || i >= d {
            return Err(Error::InvalidDimension(d));
        }
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        Ok(UnitVector(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        dot(&self.0, &other.0)
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        UnitVector::new(v)
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(v: UnitVector) -> Self {
        v.0
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn gaussian_vec<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Fills `out` with a uniform point of S^{d-1}, `d = out.len()`.
pub fn fill_uniform_sphere<R: Rng + ?Sized>(out: &mut [f64], rng: &mut R) {
    loop {
        for x in out.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let n = norm(out);
        if n > 1e-150 {
            out.iter_mut().for_each(|x| *x /= n);
            return;
        }
    }
}

pub fn sample_uniform_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<UnitVector> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let mut v = vec![0.0; d];
    fill_uniform_sphere(&mut v, rng);
    Ok(UnitVector(v))
}

/// Uniform unit vector orthogonal to `center` (requires `d >= 2`).
fn orthogonal_unit<R: Rng + ?Sized>(center: &[f64], rng: &mut R) -> Vec<f64> {
    loop {
        let mut g = gaussian_vec(center.len(), rng);
        let c = dot(&g, center);
        g.iter_mut().zip(center).for_each(|(x, y)| *x -= c * y);
        let n = norm(&g);
        if n > 1e-8 {
            g.iter_mut().for_each(|x| *x /= n);
            return g;
        }
    }
}

fn combine(center: &[f64], a: f64, perp: &[f64]) -> Vec<f64> {
    let b = ((1.0 - a) * (1.0 + a)).max(0.0).sqrt();
    center.iter().zip(perp).map(|(c, u)| a * c + b * u).collect()
}

/// Point at inner product `tau` with `center`, uniform in the orthogonal
/// directions.
pub fn sample_shell<R: Rng + ?Sized>(center: &UnitVector, tau: f64, rng: &mut R) -> Result<UnitVector> {
    if !(-1.0..=1.0).contains(&tau) {
        return Err(Error::Domain { what: "tau", value: tau });
    }
    if center.dim() < 2 {
        return Err(Error::InvalidDimension(center.dim()));
    }
    let perp = orthogonal_unit(center.coords(), rng);
    Ok(UnitVector(combine(center.coords(), tau, &perp)))
}

/// `cap_p(center) = {x : <x, center> >= tau}` with `p = Pr[X >= tau]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CapSpec {
    pub center: UnitVector,
    pub tau: f64,
    pub p: f64,
}

impl CapSpec {
    pub fn from_p(center: UnitVector, p: f64) -> Result<Self> {
        let tau = tau_of(p, center.dim())?.tau;
        Ok(CapSpec { center, tau, p })
    }

    pub fn from_tau(center: UnitVector, tau: f64) -> Result<Self> {
        let p = BetaDist::new(center.dim())?.tail(tau)?;
        Ok(CapSpec { center, tau, p })
    }

    pub fn contains(&self, v: &UnitVector) -> bool {
        self.center.dot(v) >= self.tau
    }

    pub fn sampler(&self) -> Result<CapSampler> {
        if self.p == 0.0 {
            return Err(Error::EmptyCap);
        }
        CapSampler::new(self.center.dim(), self.tau)
    }
}

/// One draw from `cap`. Builds the inverse-CDF table on every call; use a
/// [`CapSampler`] for repeated draws.
pub fn sample_cap<R: Rng + ?Sized>(cap: &CapSpec, rng: &mut R) -> Result<UnitVector> {
    Ok(cap.sampler()?.sample_around(&cap.center, rng))
}

const SAMPLER_CELLS: usize = 4096;
// Density ratios below exp(-60) relative to the peak are dropped.
const SAMPLER_LOG_CUTOFF: f64 = 60.0;

/// Inverse-CDF sampler for `X | X >= tau` where `X ~ Beta_d`.
///
/// Works on the angle `theta = asin(X)`, whose density is proportional to
/// `cos^{d-2}(theta)`, tabulated on a fixed grid and inverted with a
/// piecewise-linear CDF.
#[derive(Debug, Clone)]
pub struct CapSampler {
    d: usize,
    tau: f64,
    theta_lo: f64,
    h: f64,
    cdf: Vec<f64>,
}

impl CapSampler {
    pub fn new(d: usize, tau: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        if tau.is_nan() || tau > 1.0 {
            return Err(Error::Domain { what: "tau", value: tau });
        }
        if tau == 1.0 {
            return Err(Error::EmptyCap);
        }
        let tau = tau.max(-1.0);
        let theta0 = tau.asin();
        let (theta_lo, theta_hi) = if d == 2 {
            (theta0, FRAC_PI_2)
        } else {
            let k = d as f64 - 2.0;
            let shrink = (-SAMPLER_LOG_CUTOFF / k).exp();
            if theta0 >= 0.0 {
                let hi = (theta0.cos() * shrink).acos();
                (theta0, hi.min(FRAC_PI_2))
            } else {
                let c = shrink.acos();
                (theta0.max(-c), c)
            }
        };
        let h = (theta_hi - theta_lo) / SAMPLER_CELLS as f64;
        let peak = theta_lo.max(0.0).min(theta_hi);
        let k = d as f64 - 2.0;
        let ln_peak = peak.cos().ln();
        let f = |th: f64| if d == 2 { 1.0 } else { (k * (th.cos().ln() - ln_peak)).exp() };
        let mut cdf = Vec::with_capacity(SAMPLER_CELLS + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 0..SAMPLER_CELLS {
            let a = theta_lo + i as f64 * h;
            acc += gk15(&f, a, a + h).0;
            cdf.push(acc);
        }
        cdf.iter_mut().for_each(|c| *c /= acc);
        Ok(CapSampler { d, tau, theta_lo, h, cdf })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Draws the inner product with the cap center.
    pub fn sample_projection<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let k = self.cdf.partition_point(|&c| c <= u).clamp(1, SAMPLER_CELLS) - 1;
        let (c0, c1) = (self.cdf[k], self.cdf[k + 1]);
        let frac = if c1 > c0 { ((u - c0) / (c1 - c0)).clamp(0.0, 1.0) } else { 0.5 };
        let theta = self.theta_lo + (k as f64 + frac) * self.h;
        theta.sin().max(self.tau)
    }

    pub fn sample_around<R: Rng + ?Sized>(&self, center: &UnitVector, rng: &mut R) -> UnitVector {
        debug_assert_eq!(center.dim(), self.d);
        let mut out = vec![0.0; self.d];
        self.sample_around_into(center.coords(), &mut out, rng);
        UnitVector(out)
    }

    /// Writes a cap point around `center` into `out`.
    pub fn sample_around_into<R: Rng + ?Sized>(&self, center: &[f64], out: &mut [f64], rng: &mut R) {
        let a = self.sample_projection(rng);
        let perp = orthogonal_unit(center, rng);
        let b = ((1.0 - a) * (1.0 + a)).max(0.0).sqrt();
        for ((o, c), u) in out.iter_mut().zip(center).zip(&perp) {
            *o = a * c + b * u;
        }
        // guard against drift of the unit norm over long walks
        let n = norm(out);
        out.iter_mut().for_each(|x| *x /= n);
    }
}

/// `T(x, y) = (tau - x y) / sqrt((1 - x^2)(1 - y^2))`: the threshold two
/// shell points at heights `x`, `y` must clear in the orthogonal sphere.
pub fn shifted_threshold(x: f64, y: f64, tau: f64) -> Result<f64> {
    for (what, v) in [("x", x), ("y", y)] {
        if v.abs() >= 1.0 {
            if v.abs() == 1.0 {
                return Err(Error::Singular("shell height equal to 1"));
            }
            return Err(Error::Domain { what, value: v });
        }
    }
    // fixed operand order keeps T exactly symmetric
    let (x, y) = if x <= y { (x, y) } else { (y, x) };
    let den = ((1.0 - x) * (1.0 + x) * (1.0 - y) * (1.0 + y)).sqrt();
    Ok((tau - x * y) / den)
}
