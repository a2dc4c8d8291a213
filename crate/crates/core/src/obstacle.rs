//! Obstacle-problem energies, the eigenmode split on the circle, the
//! competitor `ũ`, and the constrained Łojasiewicz check (`d = 2`).

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::engine::VerificationReport;
use crate::error::{invalid, Error, Result};
use crate::polar::{PolarField, PolarGrid};
use crate::weiss::RingQuadrature;

fn check_dim(d: usize) -> Result<()> {
    match d {
        2 => Ok(()),
        3 => Err(Error::Unsupported("obstacle checks on the 2-sphere".into())),
        _ => Err(invalid("d", "must be 2 or 3")),
    }
}

/// `γ = 1/(d + 2)`.
pub fn obstacle_gamma(d: usize) -> f64 {
    1.0 / (d as f64 + 2.0)
}

/// `c_d = (2d)^{−1/2}`.
pub fn c_d(d: usize) -> f64 {
    (2.0 * d as f64).powf(-0.5)
}

/// Values at uniform angles `2πj/N` on the circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereField {
    pub d: usize,
    pub values: Vec<f64>,
}

impl SphereField {
    pub fn new(d: usize, values: Vec<f64>) -> Result<Self> {
        check_dim(d)?;
        if values.len() < 8 {
            return Err(invalid("values", "at least 8 samples required"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "must be finite"));
        }
        Ok(Self { d, values })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(2, (0..n).map(|j| f(2.0 * PI * j as f64 / n as f64)).collect())
    }

    pub fn zeros_like(&self) -> Self {
        Self { d: self.d, values: vec![0.0; self.values.len()] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn weight(&self) -> f64 {
        2.0 * PI / self.len() as f64
    }

    pub fn integral(&self) -> f64 {
        self.weight() * self.values.iter().sum::<f64>()
    }

    pub fn dot(&self, other: &SphereField) -> f64 {
        self.weight() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn combine(&self, a: f64, other: &SphereField, b: f64) -> SphereField {
        SphereField { d: self.d, values: self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect() }
    }

    fn same_grid(&self, other: &SphereField) -> Result<()> {
        if self.len() != other.len() || self.d != other.d {
            return Err(invalid("field", "grids are not aligned"));
        }
        Ok(())
    }
}

/// Symmetric nonnegative `A` with `tr A = 1/4`; `Q_A(x) = x·Ax`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticProfile {
    pub a: [[f64; 2]; 2],
}

impl QuadraticProfile {
    pub fn new(a: [[f64; 2]; 2]) -> Result<Self> {
        if (a[0][1] - a[1][0]).abs() > 1e-14 {
            return Err(invalid("a", "must be symmetric"));
        }
        if (a[0][0] + a[1][1] - 0.25).abs() > 1e-12 {
            return Err(invalid("a", "trace must be 1/4"));
        }
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if a[0][0] < -1e-15 || a[1][1] < -1e-15 || det < -1e-15 {
            return Err(invalid("a", "must be nonnegative"));
        }
        Ok(Self { a })
    }

    /// `A = diag(cos²α, sin²α)/4` rotated by `α`: the half-space-type profile
    /// `(x·e)²/4` vanishing on the line orthogonal to `e`.
    pub fn rank_one(angle: f64) -> Self {
        let (c, s) = (angle.cos(), angle.sin());
        Self { a: [[c * c / 4.0, c * s / 4.0], [c * s / 4.0, s * s / 4.0]] }
    }

    pub fn isotropic() -> Self {
        Self { a: [[0.125, 0.0], [0.0, 0.125]] }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.a[0][0] * x * x + 2.0 * self.a[0][1] * x * y + self.a[1][1] * y * y
    }

    pub fn sphere(&self, n: usize) -> Result<SphereField> {
        SphereField::from_fn(n, |th| self.eval(th.cos(), th.sin()))
    }

    pub fn field(&self, grid: &PolarGrid) -> Result<PolarField> {
        PolarField::from_fn(*grid, 2.0, |r, th| r * r * self.eval(th.cos(), th.sin()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Disk,
    /// Radii are snapped to grid nodes.
    Annulus { inner: f64, outer: f64 },
}

fn clip_warn(field: &PolarField) -> PolarField {
    if field.values.iter().any(|&v| v < 0.0) {
        log::warn!("negative values clipped to zero before evaluating the obstacle energy");
        let mut f = field.clone();
        f.values.mapv_inplace(|v| v.max(0.0));
        f
    } else {
        field.clone()
    }
}

/// `½∫_W |∇u|² + ∫_W u`.
pub fn obstacle_f(u: &PolarField, region: Region) -> Result<f64> {
    let f = clip_warn(u);
    let q = RingQuadrature::new(&f);
    let last = f.grid.n_r - 1;
    Ok(match region {
        Region::Disk => {
            0.5 * (q.dirichlet[last] + q.cap_dirichlet(f.m)) + q.positive_mass[last] + q.cap_positive_mass(f.m)
        }
        Region::Annulus { inner, outer } => {
            let (a, b) = (f.grid.node(inner)?, f.grid.node(outer)?);
            if a > b {
                return Err(invalid("region", "inner radius exceeds outer radius"));
            }
            0.5 * (q.dirichlet[b] - q.dirichlet[a]) + q.positive_mass[b] - q.positive_mass[a]
        }
    })
}

/// `W₀²(u) + ∫_{B₁} u₊ − ∫_{B₁} σ₊` on the full disk.
pub fn obstacle_energy(u: &PolarField, sigma: &QuadraticProfile) -> Result<f64> {
    let q = RingQuadrature::new(u);
    let last = u.grid.n_r - 1;
    let w0 = q.dirichlet[last] + q.cap_dirichlet(u.m) - 2.0 * q.p[last];
    let mass = q.positive_mass[last] + q.cap_positive_mass(u.m);
    let s = RingQuadrature::new(&sigma.field(&u.grid)?);
    let s_mass = s.positive_mass[last] + s.cap_positive_mass(2.0);
    Ok(w0 + mass - s_mass)
}

/// `𝓔(u) − 𝓔(σ)`, zero at `u = σ`.
pub fn obstacle_gap(u: &PolarField, sigma: &QuadraticProfile) -> Result<f64> {
    Ok(obstacle_energy(u, sigma)? - obstacle_energy(&sigma.field(&u.grid)?, sigma)?)
}

fn spectrum(w: &SphereField) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = w.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

fn synthesize(d: usize, mut spec: Vec<Complex<f64>>) -> SphereField {
    let n = spec.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
    SphereField { d, values: spec.iter().map(|c| c.re / n as f64).collect() }
}

/// Eigenvalue of the Fourier index `k` on an `n`-point circle grid.
fn eigenvalue(k: usize, n: usize) -> f64 {
    let k = k.min(n - k) as f64;
    k * k
}

/// `∫(|∇_θ w|² − 2d w²)` by Parseval.
pub fn sphere_f(w: &SphereField) -> Result<f64> {
    check_dim(w.d)?;
    let n = w.len();
    let two_d = 2.0 * w.d as f64;
    let spec = spectrum(w);
    Ok(2.0 * PI / (n * n) as f64
        * spec.iter().enumerate().map(|(k, c)| (eigenvalue(k, n) - two_d) * c.norm_sqr()).sum::<f64>())
}

/// `F(w) + ∫w`; `Q_A` with `tr A = 1/4` is critical for it.
pub fn sphere_energy(w: &SphereField) -> Result<f64> {
    Ok(sphere_f(w)? + w.integral())
}

/// Spectral Laplace–Beltrami operator.
pub fn laplacian(w: &SphereField) -> SphereField {
    let n = w.len();
    let spec = spectrum(w).into_iter().enumerate().map(|(k, c)| c * -eigenvalue(k, n)).collect();
    synthesize(w.d, spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSplit {
    pub q_minus: SphereField,
    pub q_zero: SphereField,
    pub eta: SphereField,
}

/// Orthogonal split by eigenvalue below, equal to, and above `2d`.
pub fn mode_split(v: &SphereField) -> Result<ModeSplit> {
    check_dim(v.d)?;
    let n = v.len();
    let two_d = 2.0 * v.d as f64;
    let spec = spectrum(v);
    let part = |keep: &dyn Fn(f64) -> bool| {
        let s = spec
            .iter()
            .enumerate()
            .map(|(k, c)| if keep(eigenvalue(k, n)) { *c } else { Complex::new(0.0, 0.0) })
            .collect();
        synthesize(v.d, s)
    };
    Ok(ModeSplit {
        q_minus: part(&|l| l < two_d),
        q_zero: part(&|l| l == two_d),
        eta: part(&|l| l > two_d),
    })
}

/// `min |λ − 2d|` over eigenvalues `λ ≠ 2d`.
pub fn spectral_gap(d: usize) -> Result<f64> {
    check_dim(d)?;
    let two_d = 2.0 * d as f64;
    Ok((0..16)
        .map(|k| (k * k) as f64)
        .filter(|&l| l != two_d)
        .map(|l| (l - two_d).abs())
        .fold(f64::INFINITY, f64::min))
}

/// `max(−2Q₋ − Q₀ − φ)` on the grid, refined by a parabola through the
/// maximizing node and its neighbours.
pub fn compute_m(q_minus: &SphereField, q_zero: &SphereField, phi: &SphereField) -> Result<f64> {
    q_minus.same_grid(q_zero)?;
    q_minus.same_grid(phi)?;
    let n = phi.len();
    let g: Vec<f64> = (0..n).map(|j| -2.0 * q_minus.values[j] - q_zero.values[j] - phi.values[j]).collect();
    let (jm, &gm) = g.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
    let (a, c) = (g[(jm + n - 1) % n], g[(jm + 1) % n]);
    let curv = a - 2.0 * gm + c;
    if curv < 0.0 {
        let x = 0.5 * (a - c) / curv;
        if x.abs() <= 1.0 {
            return Ok(gm - 0.125 * (a - c) * (a - c) / curv);
        }
    }
    Ok(gm)
}

/// `ũ = 2Q₋ + Q₀ + φ + (2M/c_d)(c_d − φ)` with `M` clamped at 0.
pub fn build_u_tilde(split: &ModeSplit, phi: &SphereField, m: f64) -> Result<SphereField> {
    let d = phi.d;
    check_dim(d)?;
    let m = m.max(0.0);
    let cd = c_d(d);
    let values: Vec<f64> = (0..phi.len())
        .map(|j| {
            2.0 * split.q_minus.values[j] + split.q_zero.values[j] + phi.values[j] + 2.0 * m / cd * (cd - phi.values[j])
        })
        .collect();
    let scale = phi.values.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if let Some((j, v)) = values.iter().enumerate().find(|(_, &v)| v < -1e-12 * scale.max(1.0)) {
        return Err(Error::Nonnegativity(format!(
            "ũ = {v} at node {j}; the perturbation is too large for the smallness condition"
        )));
    }
    Ok(SphereField { d, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientBound {
    /// `−(ũ − u)·∇𝔽(u)` by pointwise quadrature, `∇𝔽(u) = 2(−Δu − 2du) + 1`.
    pub directional: f64,
    /// `‖u − ũ‖₂`.
    pub distance: f64,
    /// `directional / distance`, a lower bound for `‖∇𝔽(u)‖_𝒦`.
    pub quotient: f64,
    pub f_eta: f64,
    pub f_q_minus: f64,
    pub m: f64,
    /// Term dropped by the identity `−(ũ − u)·∇𝔽(u) = 2(F(η) − F(Q₋))`:
    /// `(8dM/c_d)(c_d − mean φ)∫Q₋`, nonzero because `c_d − φ` has nonzero mean.
    pub correction: f64,
    /// `(F(η) − F(Q₋))/(M + 3(F(η) − F(Q₋))^{1/2})`, the final form with `C = 1`.
    pub final_form: f64,
    pub norm_eta: f64,
    pub norm_q_minus: f64,
}

impl GradientBound {
    /// `2(F(η) − F(Q₋))`.
    pub fn identity_rhs(&self) -> f64 {
        2.0 * (self.f_eta - self.f_q_minus)
    }

    fn scale(&self) -> f64 {
        self.directional.abs().max(self.identity_rhs().abs()).max(f64::MIN_POSITIVE)
    }

    /// Relative residual of the identity as stated (no correction).
    pub fn identity_residual(&self) -> f64 {
        (self.directional - self.identity_rhs()).abs() / self.scale()
    }

    /// Relative residual with the mean-correction term included.
    pub fn corrected_residual(&self) -> f64 {
        (self.directional - self.identity_rhs() - self.correction).abs() / self.scale()
    }
}

pub fn gradient_lower_bound(u: &SphereField, phi: &SphereField) -> Result<GradientBound> {
    u.same_grid(phi)?;
    let d = u.d;
    check_dim(d)?;
    let split = mode_split(&u.combine(1.0, phi, -1.0))?;
    let m = compute_m(&split.q_minus, &split.q_zero, phi)?;
    let ut = build_u_tilde(&split, phi, m)?;
    let lap = laplacian(u);
    let two_d = 2.0 * d as f64;
    let grad: Vec<f64> = (0..u.len()).map(|j| 2.0 * (-lap.values[j] - two_d * u.values[j]) + 1.0).collect();
    let diff = u.combine(1.0, &ut, -1.0);
    let directional = diff.weight() * grad.iter().zip(&diff.values).map(|(g, v)| g * v).sum::<f64>();
    let distance = diff.l2_norm();
    let f_eta = sphere_f(&split.eta)?;
    let f_q_minus = sphere_f(&split.q_minus)?;
    let cd = c_d(d);
    let mean_phi = phi.integral() / (2.0 * PI);
    let mp = m.max(0.0);
    let correction = 8.0 * d as f64 * mp / cd * (cd - mean_phi) * split.q_minus.integral();
    let gap = f_eta - f_q_minus;
    let quotient = if distance == 0.0 {
        if gap.abs() > 0.0 {
            return Err(Error::InadmissibleObjective("u = ũ with a nonzero energy gap".into()));
        }
        f64::INFINITY
    } else {
        directional / distance
    };
    let final_form = if gap == 0.0 { 0.0 } else { gap / (mp + 3.0 * gap.sqrt()) };
    Ok(GradientBound {
        directional,
        distance,
        quotient,
        f_eta,
        f_q_minus,
        m,
        correction,
        final_form,
        norm_eta: split.eta.l2_norm(),
        norm_q_minus: split.q_minus.l2_norm(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LojaSample {
    pub lhs: f64,
    pub quotient: f64,
    pub ratio: f64,
    pub bound: GradientBound,
}

/// Checks `|𝔽(u) − 𝔽(φ)|^{1−γ} ≤ C_fit ‖∇𝔽(u)‖_𝒦` with the directional lower
/// bound for the dual norm, `γ = 1/(d+2)`, and `C_fit` fitted over the family.
/// The report passes when every sample lies in the `2δ` window, satisfies
/// `|𝔽(u) − 𝔽(φ)| ≤ F(η) − F(Q₋)` and the spectral-gap inequalities, and
/// `C_fit ≤ c_max`.
pub fn constrained_loja_check(
    family: &[SphereField],
    phi: &SphereField,
    delta: f64,
    c_max: f64,
) -> Result<(VerificationReport, Vec<LojaSample>)> {
    let d = phi.d;
    check_dim(d)?;
    let gamma = obstacle_gamma(d);
    let gap = spectral_gap(d)?;
    let f_phi = sphere_energy(phi)?;
    let mut samples = Vec::with_capacity(family.len());
    let mut margins = Vec::new();
    for u in family {
        let dist = u.combine(1.0, phi, -1.0).l2_norm();
        if dist > 2.0 * delta {
            return Err(Error::WindowViolated(format!("‖u − φ‖ = {dist} exceeds 2δ = {}", 2.0 * delta)));
        }
        let b = gradient_lower_bound(u, phi)?;
        let diff = (sphere_energy(u)? - f_phi).abs();
        let upper = b.f_eta - b.f_q_minus;
        let tol = 1e-10 * upper.abs().max(1e-300);
        margins.push((upper - diff) + tol);
        margins.push(b.f_eta - gap / 2.0 * b.norm_eta.powi(2) + tol);
        margins.push(-b.f_q_minus - gap / 2.0 * b.norm_q_minus.powi(2) + tol);
        let lhs = diff.powf(1.0 - gamma);
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / b.quotient };
        samples.push(LojaSample { lhs, quotient: b.quotient, ratio, bound: b });
    }
    let c_fit = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    margins.push(c_max - c_fit);
    let worst_identity = samples.iter().map(|s| s.bound.corrected_residual()).fold(0.0, f64::max);
    let report = VerificationReport::from_margins("constrained_loja_check", margins, 0.0)
        .detail("c_fit", c_fit)
        .detail("gamma", gamma)
        .detail("spectral_gap", gap)
        .detail("worst_identity_residual", worst_identity)
        .detail("samples", samples.len() as f64);
    Ok((report, samples))
}

/// `u = max(φ + Σ cₖ cos(kθ) + sₖ sin(kθ), 0)` for the given coefficients.
pub fn perturbed(phi: &SphereField, coeffs: &[(usize, f64, f64)]) -> SphereField {
    let n = phi.len();
    let values = (0..n)
        .map(|j| {
            let th = 2.0 * PI * j as f64 / n as f64;
            let p: f64 = coeffs.iter().map(|&(k, c, s)| c * (k as f64 * th).cos() + s * (k as f64 * th).sin()).sum();
            (phi.values[j] + p).max(0.0)
        })
        .collect();
    SphereField { d: phi.d, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi(n: usize) -> SphereField {
        QuadraticProfile::rank_one(0.0).sphere(n).unwrap()
    }

    #[test]
    fn profile_validation() {
        assert!(QuadraticProfile::new([[0.2, 0.0], [0.0, 0.1]]).is_err());
        assert!(QuadraticProfile::new([[0.3, 0.0], [0.0, -0.05]]).is_err());
        let r = QuadraticProfile::rank_one(0.7);
        assert!(QuadraticProfile::new(r.a).is_ok());
    }

    #[test]
    fn obstacle_closed_forms() {
        let grid = PolarGrid::square(256).unwrap();
        assert_eq!(obstacle_f(&PolarField::zeros(grid, 2.0), Region::Disk).unwrap(), 0.0);
        let q = QuadraticProfile::isotropic();
        let f = q.field(&grid).unwrap();
        // |∇Q|² = r²/16 and Q = r²/8: π/64 + π/16
        assert!((obstacle_f(&f, Region::Disk).unwrap() - 5.0 * PI / 64.0).abs() < 1e-6);
        let inner = obstacle_f(&f, Region::Annulus { inner: grid.r_min, outer: grid.radius(128) }).unwrap();
        let outer = obstacle_f(&f, Region::Annulus { inner: grid.radius(128), outer: 1.0 }).unwrap();
        let whole = obstacle_f(&f, Region::Annulus { inner: grid.r_min, outer: 1.0 }).unwrap();
        assert!((inner + outer - whole).abs() < 1e-14);
        // W₀²(Q) = −½∫Q since ΔQ = 2 tr A = 1/2
        assert!((obstacle_energy(&f, &q).unwrap() + PI / 32.0).abs() < 1e-6);
        assert!(obstacle_gap(&f, &q).unwrap().abs() < 1e-12);
        let e0 = obstacle_energy(&PolarField::zeros(grid, 2.0), &q).unwrap();
        assert!((e0 + PI / 16.0).abs() < 1e-6);
    }

    #[test]
    fn sphere_functional() {
        let n = 128;
        let h2 = SphereField::from_fn(n, |t| (2.0 * t).cos()).unwrap();
        assert!(sphere_f(&h2).unwrap().abs() < 1e-12);
        let c = SphereField::from_fn(n, |_| 0.3).unwrap();
        assert!((sphere_f(&c).unwrap() + 4.0 * 2.0 * PI * 0.09).abs() < 1e-12);
        let h1 = SphereField::from_fn(n, |t| t.sin()).unwrap();
        assert!((sphere_f(&h1).unwrap() + 3.0 * h1.l2_norm().powi(2)).abs() < 1e-12);
        assert!(matches!(sphere_f(&SphereField { d: 3, values: vec![0.0; 8] }), Err(Error::Unsupported(_))));
    }

    #[test]
    fn splits() {
        let n = 64;
        let h2 = SphereField::from_fn(n, |t| (2.0 * t).sin()).unwrap();
        let s = mode_split(&h2).unwrap();
        assert!(s.q_minus.l2_norm() < 1e-14 && s.eta.l2_norm() < 1e-14);
        let v = SphereField::from_fn(n, |t| 0.5 + (4.0 * t).cos()).unwrap();
        let s = mode_split(&v).unwrap();
        assert!(s.q_minus.values.iter().all(|x| (x - 0.5).abs() < 1e-14));
        assert!(s.q_zero.l2_norm() < 1e-14);
        let parts = s.q_minus.l2_norm().powi(2) + s.q_zero.l2_norm().powi(2) + s.eta.l2_norm().powi(2);
        assert!((parts - v.l2_norm().powi(2)).abs() < 1e-12);
        // Q_A minus its mean is a pure 2d-mode
        let q = QuadraticProfile::rank_one(0.4).sphere(n).unwrap();
        let mean = q.integral() / (2.0 * PI);
        let s = mode_split(&SphereField { d: 2, values: q.values.iter().map(|x| x - mean).collect() }).unwrap();
        assert!(s.q_minus.l2_norm() < 1e-14 && s.eta.l2_norm() < 1e-14);
        assert_eq!(spectral_gap(2).unwrap(), 3.0);
    }

    #[test]
    fn m_and_u_tilde() {
        let n = 256;
        let p = phi(n);
        let zero = p.zeros_like();
        assert!(compute_m(&zero, &zero, &p).unwrap().abs() < 1e-15);
        let delta = 0.01;
        let q0 = SphereField::from_fn(n, |t| delta * (2.0 * t).cos()).unwrap();
        assert!((compute_m(&zero, &q0, &p).unwrap() - delta).abs() < 1e-14);
        assert!((compute_m(&zero, &q0.combine(2.0, &zero, 0.0), &p.combine(2.0, &zero, 0.0)).unwrap() - 2.0 * delta).abs() < 1e-14);
        assert_eq!(c_d(2), 0.5);
        let split = ModeSplit { q_minus: zero.clone(), q_zero: q0, eta: zero.clone() };
        let ut = build_u_tilde(&split, &p, delta).unwrap();
        assert!(ut.values.iter().all(|&v| v >= 0.0));
        // M = 0 leaves 2Q₋ + Q₀ + φ, which is negative here
        assert!(matches!(build_u_tilde(&split, &p, 0.0), Err(Error::Nonnegativity(_))));
        let eta = SphereField::from_fn(n, |t| 0.01 * (4.0 * t).cos()).unwrap();
        let plain = build_u_tilde(&ModeSplit { q_minus: zero.clone(), q_zero: zero.clone(), eta }, &p, 0.0).unwrap();
        assert_eq!(plain.values, p.values);
    }

    #[test]
    fn gradient_identity() {
        let n = 256;
        let p = phi(n);
        let id = gradient_lower_bound(&p, &p).unwrap();
        assert_eq!(id.quotient, f64::INFINITY);
        let t = 0.01;
        let u = perturbed(&p, &[(4, t, 0.0)]);
        let b = gradient_lower_bound(&u, &p).unwrap();
        let mode_mass = t * t * PI;
        assert!((b.f_eta - 12.0 * mode_mass).abs() < 1e-12);
        assert!(b.m.abs() < 1e-12 && b.identity_residual() < 1e-10);
        // low modes with a negative part make M > 0 and expose the mean term
        let u = perturbed(&p, &[(0, -0.003, 0.0), (1, 0.0, 0.01), (3, 0.004, 0.0)]);
        let b = gradient_lower_bound(&u, &p).unwrap();
        assert!(b.m > 0.0 && b.correction != 0.0);
        assert!(b.corrected_residual() < 1e-10, "{b:?}");
    }

    #[test]
    fn loja_family() {
        let n = 256;
        let p = phi(n);
        let fam: Vec<SphereField> = (0..13)
            .map(|k| 1e-4 * 10f64.powf(k as f64 / 4.0))
            .map(|t| perturbed(&p, &[(4, t, 0.0), (1, 0.3 * t, 0.0)]))
            .collect();
        let (r, s) = constrained_loja_check(&fam, &p, 0.5, 100.0).unwrap();
        assert!(r.pass, "{:?}", r.details);
        assert!(s.iter().all(|s| s.ratio.is_finite()));
        assert!(matches!(constrained_loja_check(&fam, &p, 1e-5, 100.0), Err(Error::WindowViolated(_))));
    }
}
