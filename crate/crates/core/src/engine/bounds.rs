use serde::{Deserialize, Serialize};

use super::checks::find_threshold;
use super::params::{derive_delta, DecayParams};
use super::trace::{compute_g, EnergyTrace, GTrace};
use crate::error::{invalid, Error, Result};

/// Upper bound for `G(s)` from `G(r)`, `s ≤ r`, on the positive side.
/// Nonpositive `G(r)` returns `G(r)` itself (monotonicity).
pub fn comparison_bound(g_at_r: f64, r: f64, s: f64, delta: f64, gamma: f64) -> Result<f64> {
    if s > r {
        return Err(invalid("s", format!("{s} exceeds r = {r}")));
    }
    if g_at_r <= 0.0 {
        return Ok(g_at_r);
    }
    Ok(if gamma > 0.0 {
        (g_at_r.powf(-gamma) + delta * gamma * (r / s).ln()).powf(-1.0 / gamma)
    } else {
        (s / r).powf(delta) * g_at_r
    })
}

/// Upper bound for `−G(r)` from `G(s) < 0`, `s ≤ r`: the mirrored negative side.
pub fn comparison_bound_negative(g_at_s: f64, s: f64, r: f64, delta: f64, gamma: f64) -> Result<f64> {
    if s > r {
        return Err(invalid("s", format!("{s} exceeds r = {r}")));
    }
    if g_at_s >= 0.0 {
        return Ok(0.0);
    }
    let h = -g_at_s;
    Ok(if gamma > 0.0 {
        (h.powf(-gamma) + delta * gamma * (r / s).ln()).powf(-1.0 / gamma)
    } else {
        (s / r).powf(delta) * h
    })
}

/// `c([G(r1)]₋^{(1−γ)/2} + [G(r3)]₊^{(1−γ)/2})`.
pub fn dini_bound(g_r1: f64, g_r3: f64, gamma: f64, c: f64) -> f64 {
    let p = (1.0 - gamma) / 2.0;
    c * ((-g_r1).max(0.0).powf(p) + g_r3.max(0.0).powf(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Growth,
    Decay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalBound {
    pub side: Side,
    pub r2: f64,
    pub bound: f64,
}

/// Bound on `∫_s^r ‖∂_ρ u_ρ‖ dρ`. The growth side evaluates at `r`, the decay
/// side at `s`; `r1`, `r3` are the trace endpoints.
pub fn growth_decay_bounds(g: &GTrace, s: f64, r: f64, c: f64) -> Result<IntervalBound> {
    if g.is_empty() {
        return Err(Error::TooFewSamples { found: 0, needed: 1 });
    }
    if s > r {
        return Err(invalid("s", format!("{s} exceeds r = {r}")));
    }
    let (r1, r3) = (g.radii[0], g.radii[g.len() - 1]);
    if s < r1 || r > r3 {
        return Err(Error::RadiusOutOfRange { radius: if s < r1 { s } else { r }, lo: r1, hi: r3 });
    }
    let r2 = find_threshold(g)?;
    let (delta, gamma) = (g.delta, g.gamma);
    if s >= r2 {
        let g3 = g.g[g.len() - 1];
        let bound = if g3 <= 0.0 {
            0.0
        } else if gamma > 0.0 {
            c * (g3.powf(-gamma) + delta * gamma * (r3 / r).ln()).powf((gamma - 1.0) / (2.0 * gamma))
        } else {
            c * g3.sqrt() * (r / r3).powf(delta / 2.0)
        };
        return Ok(IntervalBound { side: Side::Growth, r2, bound });
    }
    if r <= r2 {
        let h1 = -g.g[0];
        let bound = if h1 <= 0.0 {
            0.0
        } else if gamma > 0.0 {
            c * (h1.powf(-gamma) + delta * gamma * (s / r1).ln()).powf((gamma - 1.0) / (2.0 * gamma))
        } else {
            c * h1.sqrt() * (r1 / s).powf(delta / 2.0)
        };
        return Ok(IntervalBound { side: Side::Decay, r2, bound });
    }
    Err(Error::StraddlesThreshold { s, r, r2 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiniCheck {
    /// Trapezoid value of `∫ D d(log r)` over the trace.
    pub integral: f64,
    pub bound: f64,
    pub ratio: f64,
    /// Triangle-inequality estimate of `‖u_{r_k} − u_{r_0}‖` at each sample.
    pub displacement: Vec<f64>,
}

fn cumulative_log_trapezoid(radii: &[f64], d: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; radii.len()];
    for k in 1..radii.len() {
        acc[k] = acc[k - 1] + 0.5 * (d[k] + d[k - 1]) * (radii[k] / radii[k - 1]).ln();
    }
    acc
}

pub fn check_dini(trace: &EnergyTrace, bound: f64) -> Result<DiniCheck> {
    let d = trace.d.as_ref().ok_or(Error::MissingColumn("D"))?;
    let displacement = cumulative_log_trapezoid(&trace.radii, d);
    let integral = *displacement.last().unwrap_or(&0.0);
    let ratio = if integral == 0.0 {
        0.0
    } else if bound > 0.0 {
        integral / bound
    } else {
        f64::INFINITY
    };
    Ok(DiniCheck { integral, bound, ratio, displacement })
}

/// Smallest `c` with `check_dini` ratio ≤ 1 on every trace of a family.
pub fn fit_dini_constant(family: &[(EnergyTrace, DecayParams)]) -> Result<f64> {
    let mut c: f64 = 0.0;
    for (trace, params) in family {
        let g = compute_g(trace, params)?;
        let unit = dini_bound(g.g[0], g.g[g.len() - 1], params.gamma, 1.0);
        let obs = check_dini(trace, unit)?;
        if obs.integral > 0.0 {
            c = c.max(obs.ratio);
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RateFit {
    /// `D ≡ 0`: the trace is already at its limit.
    ExactConvergence,
    Fitted {
        exponent: f64,
        /// `δ/2` for γ = 0, `(γ−1)/(2γ)` otherwise.
        expected: f64,
        relative_error: f64,
        samples: usize,
    },
}

impl RateFit {
    pub fn exponent(&self) -> Option<f64> {
        match self {
            RateFit::ExactConvergence => None,
            RateFit::Fitted { exponent, .. } => Some(*exponent),
        }
    }
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Fits the convergence rate of `u_r` as `r → 0`.
///
/// The distance to the limit is the remaining `∫ D d(log r)` below each
/// sample; the part below the first sample is completed by the local power
/// law of `D`. For γ = 0 the fit is against `log r`; for γ > 0 against
/// `log(G(r3)^{−γ} + δγ log(r3/r))`, the variable of the logarithmic rate.
pub fn limit_rate_fit(trace: &EnergyTrace, params: &DecayParams) -> Result<RateFit> {
    let d = trace.d.as_ref().ok_or(Error::MissingColumn("D"))?;
    let n = trace.len();
    if n < 4 {
        return Err(Error::TooFewSamples { found: n, needed: 4 });
    }
    if (trace.radii[n - 1] / trace.radii[0]).log10() < 2.0 {
        return Err(Error::InsufficientRange("rate fit needs at least two decades of radius".into()));
    }
    if d.iter().all(|&v| v == 0.0) {
        return Ok(RateFit::ExactConvergence);
    }
    if d.iter().any(|&v| v <= 0.0) {
        return Err(invalid("D", "rate fit needs D > 0 at every sample"));
    }
    let g = compute_g(trace, params)?;
    let delta = derive_delta(params)?;
    let gamma = params.gamma;
    let r3 = trace.radii[n - 1];
    let x: Vec<f64> = if gamma > 0.0 {
        let g3 = g.g[n - 1];
        if g3 <= 0.0 {
            return Err(invalid("trace", "logarithmic rate needs G(r3) > 0"));
        }
        let a = g3.powf(-gamma);
        trace.radii.iter().map(|r| a + delta * gamma * (r3 / r).ln()).collect()
    } else {
        trace.radii.clone()
    };
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ld: Vec<f64> = d.iter().map(|v| v.ln()).collect();
    let head = (n / 10).max(3);
    let p = least_squares_slope(&lx[..head], &ld[..head]);
    let remainder = if gamma > 0.0 {
        if !(p < -1.0) {
            return Err(invalid("D", "tail of D is not integrable"));
        }
        d[0] * x[0] / (-(p + 1.0) * delta * gamma)
    } else {
        if !(p > 0.0) {
            return Err(invalid("D", "tail of D is not integrable"));
        }
        d[0] / p
    };
    let cum = cumulative_log_trapezoid(&trace.radii, d);
    let tail: Vec<f64> = cum.iter().map(|c| (c + remainder).ln()).collect();
    let exponent = least_squares_slope(&lx, &tail);
    let expected = if gamma > 0.0 { (gamma - 1.0) / (2.0 * gamma) } else { delta / 2.0 };
    Ok(RateFit::Fitted {
        exponent,
        expected,
        relative_error: (exponent - expected).abs() / expected.abs(),
        samples: n,
    })
}
