//! The law of one coordinate of a uniform point on S^{d-1}.
//!
//! `X = <u, e>` has density `psi_d(x) = Z_d (1 - x^2)^{(d-3)/2}` on `[-1, 1]`.
//! Tails are computed in log space through the substitution `x = sin(theta)`,
//! which turns the integrand into `Z_d cos^{d-2}(theta)` and removes the
//! endpoint singularity at `d = 2`.

use std::f64::consts::{FRAC_PI_2, PI};

use super::quadrature::{gk15, integrate_with_breaks, Tolerance};
use crate::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaDist {
    d: usize,
    ln_z: f64,
}

impl BetaDist {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        let h = d as f64 / 2.0;
        let ln_z = ln_gamma(h) - ln_gamma(h - 0.5) - 0.5 * PI.ln();
        Ok(BetaDist { d, ln_z })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `Z_d = Gamma(d/2) / (Gamma((d-1)/2) sqrt(pi))`.
    pub fn normalization(&self) -> f64 {
        self.ln_z.exp()
    }

    pub fn ln_normalization(&self) -> f64 {
        self.ln_z
    }

    pub fn log_density(&self, x: f64) -> Result<f64> {
        check_unit("x", x)?;
        if self.d == 3 {
            return Ok(self.ln_z);
        }
        let one_minus = (1.0 - x) * (1.0 + x);
        Ok(self.ln_z + 0.5 * (self.d as f64 - 3.0) * one_minus.ln())
    }

    /// `psi_d(x)`; infinite at `x = ±1` when `d = 2`.
    pub fn density(&self, x: f64) -> Result<f64> {
        Ok(self.log_density(x)?.exp())
    }

    /// Density of `theta` where `X = sin(theta)`, in log space.
    pub(crate) fn log_angle_density(&self, theta: f64) -> f64 {
        if self.d == 2 {
            self.ln_z
        } else {
            self.ln_z + (self.d as f64 - 2.0) * theta.cos().ln()
        }
    }

    /// `ln Pr[X >= t]`.
    pub fn log_tail(&self, t: f64) -> Result<f64> {
        check_unit("t", t)?;
        if t == 0.0 {
            return Ok(-std::f64::consts::LN_2);
        }
        if t < 0.0 {
            let upper = self.log_tail(-t)?.exp();
            return Ok((-upper).ln_1p());
        }
        if t == 1.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let theta0 = t.asin();
        let ln_integral = self.ln_cos_power_integral(theta0, FRAC_PI_2);
        Ok(self.ln_z + ln_integral)
    }

    /// `Pr[X >= t]`, nonincreasing in `t`.
    pub fn tail(&self, t: f64) -> Result<f64> {
        Ok(self.log_tail(t)?.exp())
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        check_unit("t", t)?;
        self.tail(-t)
    }

    /// `Pr[a <= X <= b]` computed directly (no tail subtraction).
    pub fn interval_mass(&self, a: f64, b: f64) -> Result<f64> {
        check_unit("a", a)?;
        check_unit("b", b)?;
        if b <= a {
            return Ok(0.0);
        }
        let (ta, tb) = (a.asin(), b.asin());
        let dens = |th: f64| self.log_angle_density(th).exp();
        let r = integrate_with_breaks(dens, ta, tb, &[0.0], Tolerance::default());
        Ok(r.value.clamp(0.0, 1.0))
    }

    /// `ln ∫_{a}^{b} cos^{d-2}(theta) dtheta` for `0 <= a < b <= pi/2`.
    fn ln_cos_power_integral(&self, a: f64, b: f64) -> f64 {
        if self.d == 2 {
            return (b - a).ln();
        }
        let k = self.d as f64 - 2.0;
        let c = k * a.cos().ln();
        let f = |th: f64| {
            let lc = th.cos().ln();
            if lc.is_finite() {
                (k * lc - c).exp()
            } else {
                0.0
            }
        };
        // Geometric breakpoints at the width of the peak at `a`.
        let scale = 1.0 / (k * a.tan() + k.sqrt());
        let mut breaks = Vec::with_capacity(40);
        let mut s = 0.25 * scale;
        while a + s < b {
            breaks.push(a + s);
            s *= 2.0;
        }
        let r = integrate_with_breaks(f, a, b, &breaks, Tolerance::default());
        c + r.value.ln()
    }
}

fn check_unit(what: &'static str, x: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain { what, value: x });
    }
    Ok(())
}

/// Two-sided analytic bracket on the tail for `0 < t < 1`. The lower value
/// can be negative (and is then vacuous) when `d t^2` is small.
pub fn tail_sandwich(d: usize, t: f64) -> Result<(f64, f64)> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain { what: "t", value: t });
    }
    let dist = BetaDist::new(d)?;
    let df = d as f64;
    let upper = (dist.ln_z - (t * (df - 1.0)).ln() + 0.5 * (df - 1.0) * ((1.0 - t) * (1.0 + t)).ln()).exp();
    let dt2 = df * t * t;
    let lower = upper * (1.0 - 4.0 * dt2.ln_1p() / dt2);
    Ok((lower, upper))
}

/// Threshold returned by [`tau_of`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub tau: f64,
    /// Set when `p = 0`: the cap is a single point and `tau = 1`.
    pub degenerate: bool,
}

/// Inverts the tail: the `tau` with `Pr[X >= tau] = p`.
pub fn tau_of(p: f64, d: usize) -> Result<Threshold> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain { what: "p", value: p });
    }
    let dist = BetaDist::new(d)?;
    if p == 0.0 {
        return Ok(Threshold { tau: 1.0, degenerate: true });
    }
    let tau = if p == 1.0 {
        -1.0
    } else if p == 0.5 {
        0.0
    } else {
        let target = p.ln();
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        while hi - lo > 1e-14 {
            let mid = 0.5 * (lo + hi);
            if dist.log_tail(mid)? > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    Ok(Threshold { tau, degenerate: false })
}

/// Log-tail lookup for one dimension using cubic Hermite interpolation in
/// `theta = asin(t)`. Falls back to direct quadrature above `t = 0.95`.
#[derive(Debug, Clone)]
pub struct TailTable {
    dist: BetaDist,
    theta_max: f64,
    h: f64,
    log_tail: Vec<f64>,
    slope: Vec<f64>,
}

const TABLE_CELLS: usize = 8192;
const TABLE_T_MAX: f64 = 0.95;

impl TailTable {
    pub fn new(d: usize) -> Result<Self> {
        let dist = BetaDist::new(d)?;
        let theta_lo = -FRAC_PI_2;
        let theta_max = TABLE_T_MAX.asin();
        let h = (theta_max - theta_lo) / TABLE_CELLS as f64;
        let dens = |th: f64| dist.log_angle_density(th).exp();

        // Accumulate cell masses from the right so small tails keep
        // relative accuracy.
        let mut tails = vec![0.0; TABLE_CELLS + 1];
        tails[TABLE_CELLS] = dist.tail(TABLE_T_MAX)?;
        for k in (0..TABLE_CELLS).rev() {
            let a = theta_lo + k as f64 * h;
            let (m, _) = gk15(&dens, a, a + h);
            tails[k] = tails[k + 1] + m;
        }
        let log_tail: Vec<f64> = tails.iter().map(|v| v.min(1.0).ln()).collect();
        let slope = (0..=TABLE_CELLS)
            .map(|k| {
                let th = theta_lo + k as f64 * h;
                if th <= -FRAC_PI_2 && d > 2 {
                    0.0
                } else {
                    -(dist.log_angle_density(th) - log_tail[k]).exp()
                }
            })
            .collect();
        Ok(TailTable { dist, theta_max, h, log_tail, slope })
    }

    pub fn dist(&self) -> &BetaDist {
        &self.dist
    }

    pub fn log_tail(&self, t: f64) -> Result<f64> {
        check_unit("t", t)?;
        let th = t.asin();
        if th >= self.theta_max {
            return self.dist.log_tail(t);
        }
        let u = (th + FRAC_PI_2) / self.h;
        let k = (u.floor() as usize).min(TABLE_CELLS - 1);
        let s = u - k as f64;
        let (y0, y1) = (self.log_tail[k], self.log_tail[k + 1]);
        let (m0, m1) = (self.slope[k] * self.h, self.slope[k + 1] * self.h);
        let s2 = s * s;
        let s3 = s2 * s;
        Ok((2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1)
    }

    pub fn tail(&self, t: f64) -> Result<f64> {
        Ok(self.log_tail(t)?.exp())
    }
}
