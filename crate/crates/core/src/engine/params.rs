use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Constants of the almost-monotonicity / symmetric epiperimetric hypotheses.
///
/// `r1 = 0` and `r3 = f64::INFINITY` are accepted; sampled traces always live
/// on a finite sentinel range inside `[r1, r3]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    pub c_e: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub m: f64,
    pub r1: f64,
    pub r3: f64,
}

impl Default for DecayParams {
    fn default() -> Self {
        Self {
            c_e: 1.0,
            epsilon: 1.0,
            gamma: 0.0,
            alpha: 1.0,
            lambda_plus: 0.0,
            lambda_minus: 0.0,
            m: 1.0,
            r1: 0.0,
            r3: 1.0,
        }
    }
}

impl DecayParams {
    pub fn new(c_e: f64, epsilon: f64, gamma: f64, alpha: f64) -> Self {
        Self {
            c_e,
            epsilon,
            gamma,
            alpha,
            ..Self::default()
        }
    }

    pub fn with_errors(mut self, lambda_plus: f64, lambda_minus: f64) -> Self {
        self.lambda_plus = lambda_plus;
        self.lambda_minus = lambda_minus;
        self
    }

    pub fn with_range(mut self, r1: f64, r3: f64) -> Self {
        self.r1 = r1;
        self.r3 = r3;
        self
    }

    pub fn with_homogeneity(mut self, m: f64) -> Self {
        self.m = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_core_constants(self.c_e, self.epsilon, self.gamma)?;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid("alpha", format!("{} not in (0, 1]", self.alpha)));
        }
        if !(self.lambda_plus >= 0.0 && self.lambda_plus.is_finite()) {
            return Err(invalid("lambda_plus", "must be finite and nonnegative"));
        }
        if !(self.lambda_minus >= 0.0 && self.lambda_minus.is_finite()) {
            return Err(invalid("lambda_minus", "must be finite and nonnegative"));
        }
        if !self.m.is_finite() {
            return Err(invalid("m", "must be finite"));
        }
        if !(self.r1 >= 0.0 && self.r1.is_finite()) {
            return Err(invalid("r1", "must be finite and nonnegative"));
        }
        if !(self.r3 > self.r1) {
            return Err(invalid("r3", format!("{} must exceed r1 = {}", self.r3, self.r1)));
        }
        if self.r1 == 0.0 && self.lambda_minus != 0.0 {
            return Err(invalid("lambda_minus", "must vanish when r1 = 0"));
        }
        if self.r3.is_infinite() && self.lambda_plus != 0.0 {
            return Err(invalid("lambda_plus", "must vanish when r3 is infinite"));
        }
        let outer = if self.lambda_plus == 0.0 {
            0.0
        } else {
            self.lambda_plus * self.r3.powf(self.alpha)
        };
        let inner = if self.lambda_minus == 0.0 {
            0.0
        } else {
            self.lambda_minus * self.r1.powf(-self.alpha)
        };
        if outer.max(inner) > 1.0 {
            return Err(invalid(
                "lambda_plus/lambda_minus",
                format!("max(Λ+ r3^α, Λ- r1^-α) = {} exceeds 1", outer.max(inner)),
            ));
        }
        Ok(())
    }

    /// `λ(r) = Λ+ r^α + Λ- r^-α`.
    pub fn error_term(&self, r: f64) -> f64 {
        let mut v = 0.0;
        if self.lambda_plus != 0.0 {
            v += self.lambda_plus * r.powf(self.alpha);
        }
        if self.lambda_minus != 0.0 {
            v += self.lambda_minus * r.powf(-self.alpha);
        }
        v
    }

    /// The shift `G(r) - E(r) = 3/α (Λ+ r^α - Λ- r^-α)`.
    pub fn g_shift(&self, r: f64) -> f64 {
        let mut v = 0.0;
        if self.lambda_plus != 0.0 {
            v += 3.0 / self.alpha * self.lambda_plus * r.powf(self.alpha);
        }
        if self.lambda_minus != 0.0 {
            v -= 3.0 / self.alpha * self.lambda_minus * r.powf(-self.alpha);
        }
        v
    }
}

fn check_core_constants(c_e: f64, epsilon: f64, gamma: f64) -> Result<()> {
    if !(c_e > 0.0 && c_e <= 1.0) {
        return Err(invalid("c_e", format!("{c_e} not in (0, 1]")));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(invalid("epsilon", format!("{epsilon} not in (0, 1]")));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(invalid("gamma", format!("{gamma} not in [0, 1)")));
    }
    Ok(())
}

/// Intermediate constants of the ODE derivation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaConstants {
    /// The four case constants `c_E ε`, `c_E/3`, `c_E/6`, `c_E ε/4`.
    pub cases: [f64; 4],
    pub delta_prime: f64,
    pub delta_double_prime: f64,
    pub delta: f64,
}

/// δ′, δ″ and δ = δ″/2 for the given constants. Only `α > 0` is required of
/// `alpha`, so the large-α limit can be explored.
pub fn delta_constants(c_e: f64, epsilon: f64, gamma: f64, alpha: f64) -> Result<DeltaConstants> {
    check_core_constants(c_e, epsilon, gamma)?;
    if !(alpha > 0.0) {
        return Err(invalid("alpha", "must be positive"));
    }
    let cases = [c_e * epsilon, c_e / 3.0, c_e / 6.0, c_e * epsilon / 4.0];
    let delta_prime = cases.iter().copied().fold(f64::INFINITY, f64::min);
    let growth = 2f64.powf(-gamma) * (1.0 + 3.0 / alpha).powf(-1.0 - gamma);
    let delta_double_prime = delta_prime.min(growth);
    Ok(DeltaConstants {
        cases,
        delta_prime,
        delta_double_prime,
        delta: delta_double_prime / 2.0,
    })
}

pub fn derive_delta(params: &DecayParams) -> Result<f64> {
    params.validate()?;
    Ok(delta_constants(params.c_e, params.epsilon, params.gamma, params.alpha)?.delta)
}

/// Exact δ for γ = 0 and rational `(c_E, ε, α)`.
pub fn derive_delta_rational(
    c_e: Ratio<i64>,
    epsilon: Ratio<i64>,
    alpha: Ratio<i64>,
) -> Result<Ratio<i64>> {
    let zero = Ratio::from_integer(0);
    let one = Ratio::from_integer(1);
    if c_e <= zero || c_e > one {
        return Err(invalid("c_e", format!("{c_e} not in (0, 1]")));
    }
    if epsilon <= zero || epsilon > one {
        return Err(invalid("epsilon", format!("{epsilon} not in (0, 1]")));
    }
    if alpha <= zero {
        return Err(invalid("alpha", "must be positive"));
    }
    let cases = [
        c_e * epsilon,
        c_e / 3,
        c_e / 6,
        c_e * epsilon / 4,
    ];
    let delta_prime = cases.into_iter().min().expect("four cases");
    let growth = (one + Ratio::from_integer(3) / alpha).recip();
    Ok(delta_prime.min(growth) / 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent re-derivation: evaluate each case inequality's constant
    // separately instead of through the shared min.
    fn four_case_oracle(c_e: f64, eps: f64, gamma: f64, alpha: f64) -> f64 {
        let case1 = c_e * eps; // F ≥ 0, E - λ ≥ 0
        let case2 = c_e / 3.0; // F ≥ 0, E - λ ≤ 0
        let case3 = c_e / 6.0; // F ≤ 0, |F| ≤ |E - λ|/2
        let case4 = c_e * eps / 4.0; // F ≤ 0, |F| ≥ |E - λ|/2
        let mut dp = case1;
        for c in [case2, case3, case4] {
            if c < dp {
                dp = c;
            }
        }
        let g = 1.0 / (2f64.powf(gamma) * (1.0 + 3.0 / alpha).powf(1.0 + gamma));
        if dp < g {
            dp / 2.0
        } else {
            g / 2.0
        }
    }

    #[test]
    fn unit_constants_give_one_twelfth() {
        let d = delta_constants(1.0, 1.0, 0.0, 1.0).unwrap();
        assert!((d.delta_prime - 1.0 / 6.0).abs() < 1e-15);
        assert!((d.delta_double_prime - 1.0 / 6.0).abs() < 1e-15);
        assert!((d.delta - 1.0 / 12.0).abs() < 1e-15);
        assert!((d.delta - four_case_oracle(1.0, 1.0, 0.0, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn large_alpha_keeps_delta_prime_binding() {
        let d = delta_constants(1.0, 1.0, 0.0, 1e9).unwrap();
        assert!((d.delta - 1.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn epsilon_above_one_is_rejected() {
        assert!(delta_constants(1.0, 4.0, 0.0, 1.0).is_err());
        assert!(DecayParams::new(1.0, 4.0, 0.0, 1.0).validate().is_err());
    }

    #[test]
    fn rational_path_is_exact() {
        let one = Ratio::from_integer(1);
        assert_eq!(derive_delta_rational(one, one, one).unwrap(), Ratio::new(1, 12));
        // small α: the growth constant binds
        let d = derive_delta_rational(one, one, Ratio::new(1, 10)).unwrap();
        assert_eq!(d, Ratio::new(1, 62));
    }

    #[test]
    fn error_budget_invariant() {
        let p = DecayParams::new(1.0, 1.0, 0.0, 1.0).with_errors(2.0, 0.0).with_range(0.1, 1.0);
        assert!(p.validate().is_err());
        let p = DecayParams::new(1.0, 1.0, 0.0, 1.0).with_errors(0.0, 0.01).with_range(0.0, 1.0);
        assert!(p.validate().is_err());
        let p = DecayParams::new(1.0, 1.0, 0.0, 1.0).with_errors(0.5, 0.0).with_range(0.0, f64::INFINITY);
        assert!(p.validate().is_err());
        let p = DecayParams::new(1.0, 1.0, 0.0, 1.0).with_errors(0.5, 0.01).with_range(0.1, 1.0);
        assert!(p.validate().is_ok());
    }

    proptest::proptest! {
        #[test]
        fn matches_four_case_oracle(
            c_e in 0.01f64..1.0, eps in 0.01f64..1.0, gamma in 0.0f64..0.99, alpha in 0.01f64..1.0
        ) {
            let d = delta_constants(c_e, eps, gamma, alpha).unwrap();
            let o = four_case_oracle(c_e, eps, gamma, alpha);
            proptest::prop_assert!((d.delta - o).abs() <= 1e-15 * o.max(1.0));
        }
    }
}
