use crate::error::{invalid, Result};

/// `Σ_{j ≥ i′} e^{j/2} (a + e^j)^{−β/2}` and its ratio to `(a + e^{i′})^{(1−β)/2}`.
///
/// Terms are summed in log space until the geometric tail estimate drops
/// below `1e-12` of the partial sum.
pub fn dyadic_lemma_check(beta: f64, a: f64, i_start: u32) -> Result<(f64, f64)> {
    if !(beta > 1.0) {
        return Err(invalid("beta", "series diverges for beta <= 1"));
    }
    if !(a >= 0.0 && a.is_finite()) {
        return Err(invalid("a", "must be finite and nonnegative"));
    }
    let log_term = |j: f64| j / 2.0 - beta / 2.0 * (j + (a * (-j).exp()).ln_1p());
    let mut j = i_start as f64;
    let mut sum = 0.0;
    let mut prev = log_term(j);
    loop {
        let term = prev.exp();
        sum += term;
        let next = log_term(j + 1.0);
        let ratio = (next - prev).exp();
        if ratio < 1.0 && term * ratio / (1.0 - ratio) < 1e-12 * sum {
            break;
        }
        prev = next;
        j += 1.0;
    }
    let scale = ((a + (i_start as f64).exp()).ln() * (1.0 - beta) / 2.0).exp();
    Ok((sum, sum / scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_closed_form() {
        let exact = 1.0 / (1.0 - (-0.5f64).exp());
        let (s, c) = dyadic_lemma_check(2.0, 0.0, 0).unwrap();
        assert!((s - exact).abs() < 1e-10 && (c - exact).abs() < 1e-10);
        let (_, c3) = dyadic_lemma_check(2.0, 0.0, 3).unwrap();
        assert!((c3 - exact).abs() < 1e-10);
        assert!(dyadic_lemma_check(1.0, 0.0, 0).is_err());
    }

    #[test]
    fn bounded_for_large_a() {
        // For a → ∞ the terms up to e^j ≈ a contribute a^{1/2}·a^{-3/2}, so the
        // normalized constant settles to a finite limit.
        let cs: Vec<f64> = [1e4, 1e6, 1e8, 1e10]
            .iter()
            .map(|&a| dyadic_lemma_check(3.0, a, 0).unwrap().1)
            .collect();
        assert!(cs.iter().all(|c| c.is_finite() && *c < 2.0 + 1e-6));
        assert!((cs[3] - cs[2]).abs() < 1e-3 * cs[3]);
    }
}
