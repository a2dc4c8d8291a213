use super::params::{derive_delta, DecayParams};
use super::report::VerificationReport;
use super::trace::{EnergyTrace, GTrace};
use crate::error::{Error, Result};

/// `d f / d log r` at interior samples by the nonuniform three-point formula.
/// Entry `k` of the output corresponds to sample `k + 1`.
pub(crate) fn log_derivative(radii: &[f64], f: &[f64]) -> Vec<f64> {
    let t: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    (1..radii.len() - 1)
        .map(|k| {
            let h1 = t[k] - t[k - 1];
            let h2 = t[k + 1] - t[k];
            -h2 / (h1 * (h1 + h2)) * f[k - 1] + (h2 - h1) / (h1 * h2) * f[k] + h1 / (h2 * (h1 + h2)) * f[k + 1]
        })
        .collect()
}

fn need(found: usize, needed: usize) -> Result<()> {
    if found < needed {
        return Err(Error::TooFewSamples { found, needed });
    }
    Ok(())
}

/// Checks the almost-monotonicity inequality (multiplied by r) at interior
/// samples and the epiperimetric inequality at every sample. The reported
/// margin of each sample is the smaller of the two.
pub fn check_assumptions(trace: &EnergyTrace, params: &DecayParams, tol: f64) -> Result<VerificationReport> {
    trace.validate()?;
    params.validate()?;
    need(trace.len(), 3)?;
    let f = trace.f.as_ref().ok_or(Error::MissingColumn("F"))?;
    let d = trace.d.as_ref().ok_or(Error::MissingColumn("D"))?;
    for &r in &trace.radii {
        if r < params.r1 || r > params.r3 {
            return Err(Error::RadiusOutOfRange { radius: r, lo: params.r1, hi: params.r3 });
        }
    }
    let de = log_derivative(&trace.radii, &trace.e);
    let n = trace.len();
    let mut hyp1 = vec![f64::INFINITY; n];
    let mut hyp2 = vec![0.0; n];
    for k in 0..n {
        let r = trace.radii[k];
        let lam = params.error_term(r);
        if k > 0 && k < n - 1 {
            let rhs = params.c_e * (f[k] - trace.e[k]) + params.c_e * d[k] * d[k] - lam;
            hyp1[k] = de[k - 1] - rhs;
        }
        hyp2[k] = f[k] - params.epsilon * f[k].abs().powf(1.0 + params.gamma) + lam - trace.e[k];
    }
    let worst = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let (w1, w2) = (worst(&hyp1), worst(&hyp2));
    let margins = hyp1.iter().zip(&hyp2).map(|(a, b)| a.min(*b)).collect();
    Ok(VerificationReport::from_margins("check_assumptions", margins, tol)
        .detail("hyp1_worst", w1)
        .detail("hyp2_worst", w2)
        .detail("delta", derive_delta(params)?))
}

/// Which right-hand side the ODE check uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OdeForm {
    /// `r G' ≥ δ |G|^{1+γ}`
    #[default]
    Standard,
    /// `r G' ≥ δ min{|G|^{1+γ}, |G|}`, for energies that may leave [-1, 1]
    Unbounded,
}

pub fn verify_ode(g: &GTrace, tol: f64) -> Result<VerificationReport> {
    verify_ode_with(g, tol, OdeForm::Standard)
}

/// Margins `r G' − δ|G|^{1+γ}` at interior samples, combined with the
/// monotonicity margins `G_{k+1} − G_k` of adjacent intervals.
pub fn verify_ode_with(g: &GTrace, tol: f64, form: OdeForm) -> Result<VerificationReport> {
    need(g.len(), 3)?;
    let dg = log_derivative(&g.radii, &g.g);
    let n = g.len();
    let mut margins = vec![f64::INFINITY; n];
    let mut ode_worst = f64::INFINITY;
    let mut mono_worst = f64::INFINITY;
    for k in 0..n {
        if k > 0 && k < n - 1 {
            let a = g.g[k].abs();
            let p = a.powf(1.0 + g.gamma);
            let rhs = match form {
                OdeForm::Standard => p,
                OdeForm::Unbounded => p.min(a),
            };
            let m = dg[k - 1] - g.delta * rhs;
            ode_worst = ode_worst.min(m);
            margins[k] = margins[k].min(m);
        }
        if k + 1 < n {
            let m = g.g[k + 1] - g.g[k];
            mono_worst = mono_worst.min(m);
            margins[k] = margins[k].min(m);
            margins[k + 1] = margins[k + 1].min(m);
        }
    }
    Ok(VerificationReport::from_margins("verify_ode", margins, tol)
        .detail("ode_worst", ode_worst)
        .detail("monotone_worst", mono_worst)
        .detail("delta", g.delta)
        .detail("gamma", g.gamma))
}

/// `r2 = sup{r : G(r) ≤ 0}` with linear interpolation to the zero crossing.
/// Returns the first radius when `G > 0` throughout and the last when `G ≤ 0`
/// throughout.
pub fn find_threshold(g: &GTrace) -> Result<f64> {
    need(g.len(), 1)?;
    let last_nonpos = g.g.iter().rposition(|&v| v <= 0.0);
    let Some(k) = last_nonpos else {
        return Ok(g.radii[0]);
    };
    if let Some(j) = g.g[..k].iter().position(|&v| v > 0.0) {
        return Err(Error::NonMonotoneSign { pos_at: g.radii[j], neg_at: g.radii[k] });
    }
    if k == g.len() - 1 {
        return Ok(g.radii[k]);
    }
    let (r0, r1) = (g.radii[k], g.radii[k + 1]);
    let (g0, g1) = (g.g[k], g.g[k + 1]);
    Ok(r0 + (r1 - r0) * (-g0) / (g1 - g0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::trace::log_spaced;

    fn gtrace(radii: Vec<f64>, g: Vec<f64>) -> GTrace {
        GTrace { radii, g, delta: 1.0 / 12.0, gamma: 0.0 }
    }

    #[test]
    fn log_derivative_exact_on_quadratics_in_log_r() {
        let r = vec![0.1, 0.13, 0.3, 0.31, 1.0];
        let f: Vec<f64> = r.iter().map(|x: &f64| 2.0 * x.ln().powi(2) - x.ln() + 3.0).collect();
        let d = log_derivative(&r, &f);
        for (k, v) in d.iter().enumerate() {
            let t = r[k + 1].ln();
            assert!((v - (4.0 * t - 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn threshold_cases() {
        let r = vec![0.1, 0.2, 0.3, 0.4];
        assert_eq!(find_threshold(&gtrace(r.clone(), vec![0.1, 0.2, 0.3, 0.4])).unwrap(), 0.1);
        assert_eq!(find_threshold(&gtrace(r.clone(), vec![-0.4, -0.3, -0.2, 0.0])).unwrap(), 0.4);
        let r2 = find_threshold(&gtrace(r.clone(), vec![-0.3, -0.1, 0.1, 0.2])).unwrap();
        assert!((r2 - 0.25).abs() < 1e-15);
        assert!(matches!(
            find_threshold(&gtrace(r, vec![-0.3, 0.1, -0.1, 0.2])),
            Err(Error::NonMonotoneSign { .. })
        ));
    }

    #[test]
    fn ode_check_on_exact_power_law() {
        let r = log_spaced(1e-3, 1.0, 200);
        let g: Vec<f64> = r.iter().map(|x| 0.5 * x.powf(1.0 / 12.0)).collect();
        let rep = verify_ode(&gtrace(r.clone(), g), 1e-6).unwrap();
        assert!(rep.pass, "{:?}", rep.worst_margin);
        // slower growth must fail
        let g: Vec<f64> = r.iter().map(|x| 0.5 * x.powf(1.0 / 24.0)).collect();
        assert!(!verify_ode(&gtrace(r, g), 1e-6).unwrap().pass);
    }

    #[test]
    fn assumptions_need_f_and_d() {
        let t = EnergyTrace::new(vec![0.1, 0.5, 1.0], vec![0.0; 3], None, None).unwrap();
        let p = DecayParams::default();
        assert!(matches!(check_assumptions(&t, &p, 1e-6), Err(Error::MissingColumn("F"))));
    }
}
