use super::params::{derive_delta, DecayParams};
use super::trace::{log_spaced, EnergyTrace};
use crate::error::{invalid, Error, Result};

fn sampled_range(params: &DecayParams, n_samples: usize) -> Result<Vec<f64>> {
    params.validate()?;
    if params.r1 <= 0.0 || !params.r3.is_finite() {
        return Err(invalid("r1/r3", "synthetic traces need a finite sentinel range with r1 > 0"));
    }
    if n_samples < 3 {
        return Err(Error::TooFewSamples { found: n_samples, needed: 3 });
    }
    Ok(log_spaced(params.r1, params.r3, n_samples))
}

/// Exact solution of `r G' = δ|G|^{1+γ}` through `G_end`, anchored at `r3`
/// when positive and at `r1` when negative.
pub fn saturating_g(params: &DecayParams, delta: f64, g_end: f64, r: f64) -> f64 {
    let gamma = params.gamma;
    if g_end > 0.0 {
        if gamma > 0.0 {
            (g_end.powf(-gamma) + delta * gamma * (params.r3 / r).ln()).powf(-1.0 / gamma)
        } else {
            g_end * (r / params.r3).powf(delta)
        }
    } else {
        let h = -g_end;
        -if gamma > 0.0 {
            (h.powf(-gamma) + delta * gamma * (r / params.r1).ln()).powf(-1.0 / gamma)
        } else {
            h * (params.r1 / r).powf(delta)
        }
    }
}

/// Trace whose `G` solves the comparison ODE with equality and whose `D`
/// saturates the almost-monotonicity inequality (`F = E`,
/// `c_E D² = r G' − 2λ(r)`).
///
/// Because `F = E`, the epiperimetric inequality is not satisfied by this
/// trace; see [`synth_hypothesis_trace`] for one that satisfies both.
pub fn synth_saturating_trace(params: &DecayParams, g_end: f64, n_samples: usize) -> Result<EnergyTrace> {
    if g_end == 0.0 || !g_end.is_finite() {
        return Err(invalid("g_end", "must be finite and nonzero"));
    }
    let radii = sampled_range(params, n_samples)?;
    let delta = derive_delta(params)?;
    let mut e = Vec::with_capacity(n_samples);
    let mut d = Vec::with_capacity(n_samples);
    for &r in &radii {
        let g = saturating_g(params, delta, g_end, r);
        let rg = delta * g.abs().powf(1.0 + params.gamma);
        let lam = params.error_term(r);
        e.push(g - params.g_shift(r));
        d.push(((rg - 2.0 * lam).max(0.0) / params.c_e).sqrt());
    }
    EnergyTrace::new(radii, e.clone(), Some(e), Some(d))
}

/// Solves `F − ε|F|^{1+γ} = E` for the competitor energy `F ∈ [−1, 1]`.
pub fn saturating_competitor(e: f64, epsilon: f64, gamma: f64) -> Result<f64> {
    let h = |f: f64| f - epsilon * f.abs().powf(1.0 + gamma) - e;
    let (mut lo, mut hi) = if e <= 0.0 {
        (e, 0.0)
    } else {
        let top = if gamma > 0.0 {
            (1.0 / (epsilon * (1.0 + gamma))).powf(1.0 / gamma).min(1.0)
        } else {
            1.0
        };
        if h(top) < 0.0 {
            return Err(invalid("e", format!("no competitor energy in [-1, 1] saturates E = {e}")));
        }
        (e, top)
    };
    if e == 0.0 {
        return Ok(0.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Trace satisfying both hypotheses with equality: `F` saturates the
/// epiperimetric inequality and `D² = F − E`, so `r E' = 2 c_E (F − E)`.
/// Integrated by RK4 in `log r` from `E_end` (at `r3` if positive, `r1` if
/// negative). Requires `Λ± = 0`.
pub fn synth_hypothesis_trace(params: &DecayParams, e_end: f64, n_samples: usize) -> Result<EnergyTrace> {
    if e_end == 0.0 || !(e_end.abs() <= 1.0) {
        return Err(invalid("e_end", "must be nonzero and in [-1, 1]"));
    }
    if params.lambda_plus != 0.0 || params.lambda_minus != 0.0 {
        return Err(invalid("lambda", "hypothesis-saturating traces need Λ± = 0"));
    }
    let radii = sampled_range(params, n_samples)?;
    let (c_e, eps, gamma) = (params.c_e, params.epsilon, params.gamma);
    saturating_competitor(e_end, eps, gamma)?;
    let rhs = |e: f64| -> Result<f64> { Ok(2.0 * c_e * (saturating_competitor(e, eps, gamma)? - e)) };
    let t: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let n = radii.len();
    let mut e = vec![0.0; n];
    let order: Vec<usize> = if e_end > 0.0 { (0..n).rev().collect() } else { (0..n).collect() };
    e[order[0]] = e_end;
    const SUB: usize = 64;
    for w in order.windows(2) {
        let (from, to) = (w[0], w[1]);
        let h = (t[to] - t[from]) / SUB as f64;
        let mut y = e[from];
        for _ in 0..SUB {
            let k1 = rhs(y)?;
            let k2 = rhs(y + 0.5 * h * k1)?;
            let k3 = rhs(y + 0.5 * h * k2)?;
            let k4 = rhs(y + h * k3)?;
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        e[to] = y;
    }
    let f = e
        .iter()
        .map(|&v| saturating_competitor(v, eps, gamma))
        .collect::<Result<Vec<_>>>()?;
    let d = f.iter().zip(&e).map(|(fv, ev)| (fv - ev).max(0.0).sqrt()).collect();
    EnergyTrace::new(radii, e, Some(f), Some(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::checks::{check_assumptions, verify_ode};
    use crate::engine::trace::compute_g;

    fn base(gamma: f64, eps: f64) -> DecayParams {
        DecayParams::new(1.0, eps, gamma, 1.0).with_range(1e-3, 1.0)
    }

    #[test]
    fn saturating_closed_forms() {
        let p = base(0.0, 1.0);
        let t = synth_saturating_trace(&p, 0.1, 50).unwrap();
        for (r, e) in t.radii.iter().zip(&t.e) {
            assert!((e - 0.1 * r.powf(1.0 / 12.0)).abs() < 1e-15);
        }
        let p = base(0.5, 1.0);
        let delta = derive_delta(&p).unwrap();
        let t = synth_saturating_trace(&p, 0.1, 50).unwrap();
        for (r, e) in t.radii.iter().zip(&t.e) {
            let o = (0.1f64.powf(-0.5) + delta / 2.0 * (1.0 / r).ln()).powi(-2);
            assert!((e - o).abs() < 1e-14);
        }
        assert!(synth_saturating_trace(&p, 0.0, 50).is_err());
    }

    #[test]
    fn saturating_trace_passes_ode_and_hyp1() {
        for gamma in [0.0, 0.25, 0.5] {
            for g_end in [0.3, -0.3] {
                let p = base(gamma, 1.0);
                let t = synth_saturating_trace(&p, g_end, 200).unwrap();
                let g = compute_g(&t, &p).unwrap();
                let rep = verify_ode(&g, 1e-6).unwrap();
                assert!(rep.pass, "γ={gamma} G={g_end}: {}", rep.worst_margin);
                let a = check_assumptions(&t, &p, 1e-6).unwrap();
                assert!(a.details["hyp1_worst"] > -1e-6);
            }
        }
    }

    #[test]
    fn competitor_root() {
        for (e, eps, gamma) in [(0.2, 0.5, 0.0), (-0.4, 1.0, 0.5), (0.05, 1.0, 0.25)] {
            let f = saturating_competitor(e, eps, gamma).unwrap();
            assert!((f - eps * f.abs().powf(1.0 + gamma) - e).abs() < 1e-14);
        }
        assert!(saturating_competitor(0.2, 1.0, 0.0).is_err());
        // max of F − F^{5/4} is about 0.082
        assert!(saturating_competitor(0.1, 1.0, 0.25).is_err());
    }

    #[test]
    fn hypothesis_trace_passes_everything() {
        for (gamma, eps) in [(0.0, 0.5), (0.25, 1.0), (0.5, 1.0)] {
            for e_end in [0.05, -0.5] {
                let p = base(gamma, eps);
                let t = synth_hypothesis_trace(&p, e_end, 200).unwrap();
                let a = check_assumptions(&t, &p, 1e-6).unwrap();
                assert!(a.pass, "γ={gamma} E={e_end}: {}", a.worst_margin);
                let rep = verify_ode(&compute_g(&t, &p).unwrap(), 1e-6).unwrap();
                assert!(rep.pass, "γ={gamma} E={e_end}: {}", rep.worst_margin);
            }
        }
    }
}
