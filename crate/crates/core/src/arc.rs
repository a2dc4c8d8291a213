//! Arc domains on the unit circle, their Dirichlet spectra, and the 2-D arc
//! objective of the half-plane cone.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::polar::{wrap_angle, SphericalFunction};

/// `κ²` of the half-plane cone: `σ = cos₊ = κ φ₁` on the half circle.
pub const KAPPA_SQ: f64 = PI / 2.0;

pub const DEFAULT_MODE_COUNT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub start: f64,
    pub length: f64,
}

impl Arc {
    /// Offset of `θ` from the start of the arc, if inside.
    pub fn offset(&self, theta: f64) -> Option<f64> {
        let x = wrap_angle(theta - self.start);
        (x < self.length).then_some(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcDomain {
    pub arcs: Vec<Arc>,
}

impl ArcDomain {
    pub fn new(arcs: Vec<Arc>) -> Result<Self> {
        if arcs.is_empty() {
            return Err(invalid("arcs", "domain is empty"));
        }
        if arcs.iter().any(|a| !(a.length > 0.0) || !a.start.is_finite()) {
            return Err(invalid("arcs", "lengths must be positive"));
        }
        let total: f64 = arcs.iter().map(|a| a.length).sum();
        if total >= 2.0 * PI {
            return Err(invalid("arcs", format!("total length {total} is not below 2π")));
        }
        let mut sorted: Vec<(f64, f64)> = arcs.iter().map(|a| (wrap_angle(a.start), a.length)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        for k in 0..sorted.len() {
            let (s, l) = sorted[k];
            let next = if k + 1 < sorted.len() { sorted[k + 1].0 } else { sorted[0].0 + 2.0 * PI };
            if s + l > next + 1e-12 {
                return Err(invalid("arcs", "arcs overlap"));
            }
        }
        Ok(Self { arcs })
    }

    pub fn centered(center: f64, length: f64) -> Result<Self> {
        Self::new(vec![Arc { start: center - length / 2.0, length }])
    }

    /// The half circle `{θ : cos(θ − θ_e) > 0}`.
    pub fn half_circle(theta_e: f64) -> Self {
        Self { arcs: vec![Arc { start: theta_e - PI / 2.0, length: PI }] }
    }

    pub fn locate(&self, theta: f64) -> Option<(usize, f64)> {
        self.arcs.iter().enumerate().find_map(|(i, a)| a.offset(theta).map(|x| (i, x)))
    }

    pub fn total_length(&self) -> f64 {
        self.arcs.iter().map(|a| a.length).sum()
    }
}

/// Dirichlet eigenfunction `√(2/L) sin(kπx/L)` of one arc, eigenvalue `(kπ/L)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub arc: usize,
    pub k: usize,
    pub lambda: f64,
}

impl Mode {
    pub fn eval(&self, domain: &ArcDomain, theta: f64) -> f64 {
        let a = domain.arcs[self.arc];
        match a.offset(theta) {
            Some(x) => (2.0 / a.length).sqrt() * (self.k as f64 * PI * x / a.length).sin(),
            None => 0.0,
        }
    }

    pub fn sample(&self, domain: &ArcDomain, n_theta: usize) -> SphericalFunction {
        let d = 2.0 * PI / n_theta as f64;
        SphericalFunction { values: (0..n_theta).map(|j| self.eval(domain, j as f64 * d)).collect() }
    }
}

/// The `count` lowest Dirichlet eigenpairs of the domain, sorted by eigenvalue.
pub fn arc_eigenpairs(domain: &ArcDomain, count: usize) -> Result<Vec<Mode>> {
    if count == 0 {
        return Err(invalid("count", "must be at least 1"));
    }
    if domain.arcs.is_empty() {
        return Err(invalid("domain", "domain is empty"));
    }
    let mut modes: Vec<Mode> = domain
        .arcs
        .iter()
        .enumerate()
        .flat_map(|(i, a)| {
            (1..=count).map(move |k| Mode { arc: i, k, lambda: (k as f64 * PI / a.length).powi(2) })
        })
        .collect();
    modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.arc.cmp(&b.arc)));
    modes.truncate(count);
    Ok(modes)
}

/// Positive root of `α(α + n − 2) = λ`.
pub fn harmonic_exponent(lambda: f64, n: usize) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(invalid("lambda", "must be nonnegative"));
    }
    let b = n as f64 - 2.0;
    Ok(0.5 * (-b + (b * b + 4.0 * lambda).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeExpansion {
    pub domain: ArcDomain,
    pub modes: Vec<Mode>,
    pub coeffs: Vec<f64>,
}

impl ModeExpansion {
    pub fn new(domain: ArcDomain, modes: Vec<Mode>, coeffs: Vec<f64>) -> Result<Self> {
        if modes.len() != coeffs.len() {
            return Err(invalid("coeffs", "one coefficient per mode required"));
        }
        if modes.windows(2).any(|w| w[1].lambda < w[0].lambda) {
            return Err(invalid("modes", "eigenvalues must be ascending"));
        }
        Ok(Self { domain, modes, coeffs })
    }

    pub fn zero(domain: ArcDomain) -> Self {
        Self { domain, modes: Vec::new(), coeffs: Vec::new() }
    }

    /// Single-mode expansion `c φ_k` on arc 0.
    pub fn single(domain: ArcDomain, k: usize, c: f64) -> Result<Self> {
        let a = domain.arcs.first().ok_or_else(|| invalid("domain", "domain is empty"))?;
        let lambda = (k as f64 * PI / a.length).powi(2);
        Self::new(domain, vec![Mode { arc: 0, k, lambda }], vec![c])
    }

    /// `L²` projection of `f` onto the first `count` modes (trapezoid rule,
    /// exact for arcs whose endpoints are grid nodes).
    pub fn project(domain: &ArcDomain, f: &SphericalFunction, count: usize) -> Result<Self> {
        let modes = arc_eigenpairs(domain, count)?;
        let d = f.dtheta();
        let coeffs = modes
            .iter()
            .map(|m| d * f.values.iter().enumerate().map(|(j, v)| v * m.eval(domain, j as f64 * d)).sum::<f64>())
            .collect();
        Self::new(domain.clone(), modes, coeffs)
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.modes.iter().zip(&self.coeffs).map(|(m, c)| c * m.eval(&self.domain, theta)).sum()
    }

    pub fn synthesize(&self, n_theta: usize) -> SphericalFunction {
        let d = 2.0 * PI / n_theta as f64;
        SphericalFunction { values: (0..n_theta).map(|j| self.eval(j as f64 * d)).collect() }
    }

    pub fn mass(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// `W₀¹(r z) = Σ c_i² (λ_i − 1)/2`.
    pub fn w0_homogeneous(&self) -> f64 {
        self.modes.iter().zip(&self.coeffs).map(|(m, c)| c * c * (m.lambda - 1.0) / 2.0).sum()
    }

    /// Errors unless every mode with a nonzero coefficient has `λ > n − 1`.
    pub fn check_gap(&self, n: usize) -> Result<()> {
        let threshold = n as f64 - 1.0;
        for (m, c) in self.modes.iter().zip(&self.coeffs) {
            if *c != 0.0 && m.lambda <= threshold {
                return Err(Error::SpectralGap { lambda: m.lambda, threshold });
            }
        }
        Ok(())
    }
}

/// `𝒢(L, s) = (κ² + s³)((π/L)² − 1) + L − π`: the spherical Weiss energy of
/// `√(κ² + s³) φ₁` on an arc of length `L`, relative to the cone.
pub fn arc_objective(length: f64, s: f64) -> f64 {
    (KAPPA_SQ + s * s * s) * ((PI / length).powi(2) - 1.0) + length - PI
}

/// Length solving `∂_L 𝒢 = 0`: `L(s) = (2π²(κ² + s³))^{1/3}`.
pub fn ls_length(s: f64) -> f64 {
    (2.0 * PI * PI * (KAPPA_SQ + s * s * s)).cbrt()
}

pub fn ls_length_derivative(s: f64) -> f64 {
    s * s * (2.0 * PI * PI).cbrt() * (KAPPA_SQ + s * s * s).powf(-2.0 / 3.0)
}

/// Reduced objective on the Lyapunov–Schmidt manifold: `(3/2)L(s) − (κ² + s³) − π`.
pub fn reduced_objective(s: f64) -> f64 {
    1.5 * ls_length(s) - (KAPPA_SQ + s * s * s) - PI
}

pub fn reduced_objective_derivative(s: f64) -> f64 {
    1.5 * ls_length_derivative(s) - 3.0 * s * s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_circle_spectrum() {
        let m = arc_eigenpairs(&ArcDomain::half_circle(0.0), 4).unwrap();
        let l: Vec<f64> = m.iter().map(|m| m.lambda).collect();
        for (a, b) in l.iter().zip([1.0, 4.0, 9.0, 16.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        // φ_k(θ) = √(2/π) sin(k(θ + π/2))
        let th = 0.3;
        let v = m[1].eval(&ArcDomain::half_circle(0.0), th);
        assert!((v - (2.0 / PI).sqrt() * (2.0 * (th + PI / 2.0)).sin()).abs() < 1e-14);
    }

    #[test]
    fn scaled_and_merged_spectra() {
        let t = 0.2;
        let m = arc_eigenpairs(&ArcDomain::centered(0.0, PI * (1.0 + t)).unwrap(), 1).unwrap();
        assert!((m[0].lambda - 1.0 / (1.0 + t).powi(2)).abs() < 1e-14);
        let d = ArcDomain::new(vec![Arc { start: 0.0, length: PI / 2.0 }, Arc { start: 2.0, length: PI / 3.0 }]).unwrap();
        let oracle = {
            let mut v: Vec<f64> = (1..10)
                .flat_map(|k| [(2.0 * k as f64).powi(2), (3.0 * k as f64).powi(2)])
                .collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let got: Vec<f64> = arc_eigenpairs(&d, 6).unwrap().iter().map(|m| m.lambda).collect();
        for (a, b) in got.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((got[0] - 4.0).abs() < 1e-12 && (got[3] - 36.0).abs() < 1e-10);
    }

    #[test]
    fn domain_validation() {
        assert!(ArcDomain::new(vec![]).is_err());
        assert!(ArcDomain::new(vec![Arc { start: 0.0, length: 2.0 }, Arc { start: 1.0, length: 1.0 }]).is_err());
        assert!(ArcDomain::new(vec![Arc { start: 0.0, length: 7.0 }]).is_err());
    }

    #[test]
    fn exponents() {
        assert!((harmonic_exponent(4.0, 2).unwrap() - 2.0).abs() < 1e-15);
        assert!((harmonic_exponent(1.0, 2).unwrap() - 1.0).abs() < 1e-15);
        assert!((harmonic_exponent(2.0, 3).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gram_matrix_and_round_trip() {
        let n = 256;
        let dom = ArcDomain::half_circle(0.0);
        let modes = arc_eigenpairs(&dom, 16).unwrap();
        let samples: Vec<SphericalFunction> = modes.iter().map(|m| m.sample(&dom, n)).collect();
        let d = 2.0 * PI / n as f64;
        for a in 0..16 {
            for b in 0..16 {
                let g: f64 = d * samples[a].values.iter().zip(&samples[b].values).map(|(x, y)| x * y).sum::<f64>();
                assert!((g - if a == b { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        let e = ModeExpansion::new(dom.clone(), modes[..3].to_vec(), vec![0.3, -0.2, 0.1]).unwrap();
        let f = e.synthesize(n);
        let back = ModeExpansion::project(&dom, &f, 64).unwrap();
        for (k, c) in back.coeffs.iter().enumerate() {
            let want = if k < 3 { e.coeffs[k] } else { 0.0 };
            assert!((c - want).abs() < 1e-12);
        }
        assert!((back.mass() - f.l2_norm().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn gap_check() {
        let dom = ArcDomain::half_circle(0.0);
        assert!(ModeExpansion::single(dom.clone(), 2, 1.0).unwrap().check_gap(2).is_ok());
        assert!(matches!(
            ModeExpansion::single(dom, 1, 1.0).unwrap().check_gap(2),
            Err(Error::SpectralGap { .. })
        ));
    }

    #[test]
    fn arc_objective_critical_point() {
        let h = 1e-4;
        assert!(arc_objective(PI, 0.0).abs() < 1e-15);
        let dl = (arc_objective(PI + h, 0.0) - arc_objective(PI - h, 0.0)) / (2.0 * h);
        assert!(dl.abs() < 1e-8);
        // second derivative in L at π is 3/π
        let d2 = (arc_objective(PI + h, 0.0) - 2.0 * arc_objective(PI, 0.0) + arc_objective(PI - h, 0.0)) / (h * h);
        assert!((d2 - 3.0 / PI).abs() < 1e-6);
        assert!((ls_length(0.0) - PI).abs() < 1e-14);
        for s in [-0.3, 0.1, 0.4] {
            assert!(reduced_objective(s) <= 0.0);
            assert!((reduced_objective(s) - arc_objective(ls_length(s), s)).abs() < 1e-14);
            let fd = (reduced_objective(s + 1e-6) - reduced_objective(s - 1e-6)) / 2e-6;
            assert!((fd - reduced_objective_derivative(s)).abs() < 1e-8);
        }
    }
}
