//! Epiperimetric competitors for 2-D one-phase cones: harmonic extensions
//! with an annular cutoff, arc-length profiles, assembly, and direct
//! measurement of the achieved constant.

use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::arc::{
    arc_objective, harmonic_exponent, ls_length, ls_length_derivative, reduced_objective, ArcDomain, ModeExpansion,
    KAPPA_SQ,
};
use crate::error::{invalid, Error, Result};
use crate::polar::{wrap_angle, ConeDescription, PolarField, PolarGrid, SphericalFunction};
use crate::weiss::{homogeneous_extension, sample_ray, weiss_w, weiss_w0};

pub const DEFAULT_RHO: f64 = 0.5;
pub const RHO_SWEEP: [f64; 3] = [0.25, 0.5, 0.75];
/// `∫(∂_L φ₁)² dθ · L²` for the centered arc eigenfunction.
pub const LENGTH_MODE_NORM: f64 = PI * PI / 12.0 + 0.25;

const QUAD_DEGREE: usize = 48;

fn quad(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    GaussLegendre::new(QUAD_DEGREE).expect("degree is positive").integrate(a, b, f)
}

/// Harmonic function on `A_{1,ρ}` with `ψ(ρ) = 0`, `ψ(1) = 1` (n = 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnularCutoff {
    pub rho: f64,
}

impl AnnularCutoff {
    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.rho {
            0.0
        } else {
            (r / self.rho).ln() / (1.0 / self.rho).ln()
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        if r <= self.rho {
            0.0
        } else {
            1.0 / (r * (1.0 / self.rho).ln())
        }
    }
}

pub fn annular_cutoff(rho: f64, n: usize) -> Result<AnnularCutoff> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::RadiusOutOfRange { radius: rho, lo: 0.0, hi: 1.0 });
    }
    if n != 2 {
        return Err(Error::Unsupported(format!("annular cutoff in dimension {n}")));
    }
    Ok(AnnularCutoff { rho })
}

/// `ψ(r) Σ c_i r^{α_i} φ_i`, zero inside `B_ρ`.
pub fn outer_competitor(z_plus: &ModeExpansion, rho: f64, grid: &PolarGrid) -> Result<PolarField> {
    z_plus.check_gap(2)?;
    let psi = annular_cutoff(rho, 2)?;
    let exps: Vec<f64> = z_plus.modes.iter().map(|m| harmonic_exponent(m.lambda, 2)).collect::<Result<_>>()?;
    let angular: Vec<Vec<f64>> = z_plus.modes.iter().map(|m| m.sample(&z_plus.domain, grid.n_theta).values).collect();
    let values = Array2::from_shape_fn((grid.n_r, grid.n_theta), |(i, j)| {
        let r = grid.radius(i);
        let p = psi.eval(r);
        if p == 0.0 {
            return 0.0;
        }
        p * z_plus.coeffs.iter().zip(&exps).zip(&angular).map(|((c, a), phi)| c * r.powf(*a) * phi[j]).sum::<f64>()
    });
    PolarField::new(*grid, values, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterGain {
    pub rho: Option<f64>,
    /// `W₀(r z₊)`.
    pub w0_homogeneous: f64,
    /// `W₀(ψ h₊)`, or `W₀(h₊)` without cutoff.
    pub w0_competitor: f64,
}

impl OuterGain {
    pub fn gain(&self) -> f64 {
        self.w0_homogeneous - self.w0_competitor
    }

    /// `(W₀(rz₊) − W₀(ψh₊)) / W₀(rz₊)`; `None` for `z₊ = 0`.
    pub fn ratio(&self) -> Option<f64> {
        (self.w0_homogeneous != 0.0).then(|| self.gain() / self.w0_homogeneous)
    }
}

/// Mode-by-mode energies of the outer competitor. `rho = None` is the
/// no-cutoff limit with closed forms `(α² + λ)/(2α) − 1` and `(λ − 1)/2`.
pub fn outer_gain(z_plus: &ModeExpansion, rho: Option<f64>) -> Result<OuterGain> {
    z_plus.check_gap(2)?;
    let cut = rho.map(|r| annular_cutoff(r, 2)).transpose()?;
    let mut w_cut = 0.0;
    for (m, c) in z_plus.modes.iter().zip(&z_plus.coeffs) {
        let a = harmonic_exponent(m.lambda, 2)?;
        let per_mode = match cut {
            None => (a * a + m.lambda) / (2.0 * a),
            Some(psi) => {
                // in t = log r ∈ [−T, 0] with ψ = 1 + t/T
                let t_len = -psi.rho.ln();
                quad(-t_len, 0.0, |t| {
                    let p = 1.0 + t / t_len;
                    (2.0 * a * t).exp() * ((1.0 / t_len + a * p).powi(2) + m.lambda * p * p)
                })
            }
        };
        w_cut += c * c * (per_mode - 1.0);
    }
    Ok(OuterGain { rho, w0_homogeneous: z_plus.w0_homogeneous(), w0_competitor: w_cut })
}

/// `η₋(r) = 1 + a(1 − r)ε` and `η₊(r) = 1 − a′(1 − r)ε` with their exact
/// integrals `∫₀¹(η² − 1) r^{n−1} dr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaProfiles {
    pub a: f64,
    pub a_prime: f64,
    pub eps: f64,
    pub n: usize,
    pub integral_minus: f64,
    pub integral_plus: f64,
}

impl EtaProfiles {
    pub fn eta_minus(&self, r: f64) -> f64 {
        1.0 + self.a * (1.0 - r) * self.eps
    }

    pub fn eta_plus(&self, r: f64) -> f64 {
        1.0 - self.a_prime * (1.0 - r) * self.eps
    }
}

pub fn eta_profiles(a: f64, a_prime: f64, eps: f64, n: usize) -> Result<EtaProfiles> {
    if n == 0 {
        return Err(invalid("n", "must be positive"));
    }
    if !(eps >= 0.0) || a < 0.0 || a_prime < 0.0 {
        return Err(invalid("eps", "a, a′ and ε must be nonnegative"));
    }
    if a_prime * eps >= 1.0 {
        return Err(invalid("eps", format!("η₊ is not positive: a′ε = {}", a_prime * eps)));
    }
    let nf = n as f64;
    let i1 = 2.0 / (nf * (nf + 1.0));
    let i2 = 2.0 / (nf * (nf + 1.0) * (nf + 2.0));
    let integral_minus = a * eps * i1 + a * a * eps * eps * i2;
    let integral_plus = -a_prime * eps * i1 + a_prime * a_prime * eps * eps * i2;
    let bound = 4.0 * eps / nf;
    if integral_minus < bound {
        return Err(Error::ProfileAssertion(format!(
            "∫(η₋² − 1) = {integral_minus} is below 4ε/n = {bound}; increase a"
        )));
    }
    if integral_plus > -bound {
        return Err(Error::ProfileAssertion(format!(
            "∫(η₊² − 1) = {integral_plus} is above −4ε/n = {}; increase a′",
            -bound
        )));
    }
    Ok(EtaProfiles { a, a_prime, eps, n, integral_minus, integral_plus })
}

/// Single-arc trace `z₁ = c₁ φ₁` on the arc of length `length` centered at `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcPerturbation {
    pub center: f64,
    pub length: f64,
    pub c1: f64,
}

impl ArcPerturbation {
    pub fn new(center: f64, length: f64, c1: f64) -> Result<Self> {
        if !(length > 0.0 && length < 2.0 * PI) {
            return Err(invalid("length", "must lie in (0, 2π)"));
        }
        if !(c1 > 0.0) {
            return Err(invalid("c1", "must be positive"));
        }
        Ok(Self { center, length, c1 })
    }

    /// Same `L²` mass as the cone profile.
    pub fn mass_normalized(center: f64, length: f64) -> Result<Self> {
        Self::new(center, length, KAPPA_SQ.sqrt())
    }

    /// On the critical manifold of the arc objective: `c₁² = L³/(2π²)`.
    pub fn slope_normalized(center: f64, length: f64) -> Result<Self> {
        Self::new(center, length, (length.powi(3) / (2.0 * PI * PI)).sqrt())
    }

    pub fn domain(&self) -> Result<ArcDomain> {
        ArcDomain::centered(self.center, self.length)
    }

    /// `s₀` with `c₁² = κ² + s₀³`.
    pub fn s0(&self) -> f64 {
        let d = self.c1 * self.c1 - KAPPA_SQ;
        // mass-normalized traces sit exactly on s = 0
        if d.abs() <= 4.0 * f64::EPSILON * KAPPA_SQ {
            0.0
        } else {
            d.cbrt()
        }
    }

    pub fn sample(&self, n_theta: usize) -> Result<SphericalFunction> {
        SphericalFunction::from_fn(n_theta, |th| self.c1 * arc_profile(self.center, self.length, th))
    }

    /// `W(r z₁) − W(rσ) = 𝒢(L, s₀)/2`.
    pub fn energy_gap(&self) -> f64 {
        arc_objective(self.length, self.s0()) / 2.0
    }
}

/// `√(2/L) cos(π x/L)` on the centered arc, zero outside.
pub fn arc_profile(center: f64, length: f64, theta: f64) -> f64 {
    let x = wrap_angle(theta - center + PI) - PI;
    if x.abs() < length / 2.0 {
        (2.0 / length).sqrt() * (PI * x / length).cos()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcInnerParams {
    /// Łojasiewicz exponent of the reduced objective.
    pub beta: f64,
    pub b: f64,
    pub a_prime: f64,
    pub eps: f64,
}

impl Default for ArcInnerParams {
    fn default() -> Self {
        Self { beta: 0.5, b: 1.0, a_prime: 8.0, eps: 0.1 }
    }
}

/// `h₁ = r κ(r) φ₁^{L(r)}`: the amplitude parameter follows the normalized
/// gradient flow of the reduced objective by `η(r) = b|G(s₀)|^{1−β}(1 − r)`,
/// and the length deviation from the critical manifold is scaled by `η₊`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcInnerCompetitor {
    pub trace: ArcPerturbation,
    pub params: ArcInnerParams,
}

impl ArcInnerCompetitor {
    pub fn new(trace: ArcPerturbation, params: ArcInnerParams) -> Result<Self> {
        if !(params.beta > 0.0 && params.beta <= 0.5) || !(params.b >= 0.0) {
            return Err(invalid("beta", "β must lie in (0, 1/2] and b ≥ 0"));
        }
        if params.a_prime * params.eps >= 1.0 || params.a_prime < 0.0 || params.eps < 0.0 {
            return Err(invalid("eps", "η₊ must stay positive"));
        }
        let me = Self { trace, params };
        if me.kappa_sq(0.0) <= 0.0 || me.length(0.0) <= 0.0 || me.length(0.0) >= 2.0 * PI {
            return Err(invalid("trace", "flow leaves the admissible arc family"));
        }
        Ok(me)
    }

    fn eta_slope(&self) -> f64 {
        let g = reduced_objective(self.trace.s0());
        self.params.b * g.abs().powf(1.0 - self.params.beta)
    }

    fn direction(&self) -> f64 {
        let s0 = self.trace.s0();
        if s0 > 0.0 {
            1.0
        } else if s0 < 0.0 {
            -1.0
        } else {
            0.0
        }
    }

    pub fn s(&self, r: f64) -> f64 {
        self.trace.s0() + self.direction() * self.eta_slope() * (1.0 - r)
    }

    fn s_prime(&self) -> f64 {
        -self.direction() * self.eta_slope()
    }

    fn length_offset(&self) -> f64 {
        self.trace.length - ls_length(self.trace.s0())
    }

    fn eta_plus(&self, r: f64) -> f64 {
        1.0 - self.params.a_prime * (1.0 - r) * self.params.eps
    }

    pub fn length(&self, r: f64) -> f64 {
        ls_length(self.s(r)) + self.eta_plus(r) * self.length_offset()
    }

    fn length_prime(&self, r: f64) -> f64 {
        ls_length_derivative(self.s(r)) * self.s_prime() + self.params.a_prime * self.params.eps * self.length_offset()
    }

    pub fn kappa_sq(&self, r: f64) -> f64 {
        let s = self.s(r);
        KAPPA_SQ + s * s * s
    }

    pub fn eval(&self, r: f64, theta: f64) -> f64 {
        r * self.kappa_sq(r).sqrt() * arc_profile(self.trace.center, self.length(r), theta)
    }

    /// `W(h₁) − W(r z₁)` by 1-D quadrature in `r`.
    pub fn gain(&self) -> f64 {
        let l_xi = self.trace.length;
        let g_end = arc_objective(l_xi, self.trace.s0());
        let sp = self.s_prime();
        let zeroth = quad(0.0, 1.0, |r| (arc_objective(self.length(r), self.s(r)) - g_end) * r);
        let kinetic = quad(0.0, 1.0, |r| {
            let k2 = self.kappa_sq(r);
            let s = self.s(r);
            let k_prime_sq = (3.0 * s * s * sp).powi(2) / (4.0 * k2);
            let l = self.length(r);
            let lp = self.length_prime(r);
            (k_prime_sq + k2 * lp * lp * LENGTH_MODE_NORM / (l * l)) * r.powi(3)
        });
        zeroth + kinetic
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InnerCompetitor {
    /// `h₁ = r z₁`.
    Identity,
    Arc(ArcInnerCompetitor),
    /// A field on the unit disk whose trace is `z₁`.
    Field(PolarField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompetitorAssembly {
    pub z1: SphericalFunction,
    pub z_plus: ModeExpansion,
    pub inner: InnerCompetitor,
    pub rho: f64,
    /// Semi-analytic description of `z₁` when it is a single arc mode.
    pub arc: Option<ArcPerturbation>,
}

const TRACE_TOL: f64 = 1e-9;

/// Glues `r z₁ + ψ h₊` on `A_{1,ρ}` to `ρ h₁(·/ρ)` on `B_ρ`. `ρ = 1` is allowed
/// only for `z₊ = 0`.
pub fn assemble_competitor(
    z1: SphericalFunction,
    z_plus: ModeExpansion,
    inner: InnerCompetitor,
    rho: f64,
) -> Result<CompetitorAssembly> {
    if !(rho > 0.0 && rho <= 1.0) || (rho == 1.0 && !z_plus.is_zero()) {
        return Err(Error::RadiusOutOfRange { radius: rho, lo: 0.0, hi: 1.0 });
    }
    z_plus.check_gap(2)?;
    let n = z1.len();
    let scale = z1.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let inner_trace = match &inner {
        InnerCompetitor::Identity => None,
        InnerCompetitor::Arc(a) => Some(a.trace.sample(n)?),
        InnerCompetitor::Field(f) => {
            if f.grid.n_theta != n {
                return Err(Error::TraceMismatch("inner field has a different angular grid".into()));
            }
            Some(f.boundary())
        }
    };
    if let Some(tr) = inner_trace {
        let worst = tr.values.iter().zip(&z1.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if worst > TRACE_TOL * scale {
            return Err(Error::TraceMismatch(format!("inner trace differs from z₁ by {worst}")));
        }
    }
    let arc = match &inner {
        InnerCompetitor::Arc(a) => Some(a.trace),
        _ => None,
    };
    Ok(CompetitorAssembly { z1, z_plus, inner, rho, arc })
}

impl CompetitorAssembly {
    /// Records `z₁` as a single arc mode so energies can be computed semi-analytically.
    pub fn with_arc(mut self, arc: ArcPerturbation) -> Result<Self> {
        let s = arc.sample(self.z1.len())?;
        let worst = s.values.iter().zip(&self.z1.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if worst > TRACE_TOL {
            return Err(Error::TraceMismatch(format!("arc description differs from z₁ by {worst}")));
        }
        self.arc = Some(arc);
        Ok(self)
    }

    /// Boundary trace `z₁ + z₊` at the angular grid points.
    pub fn trace(&self) -> SphericalFunction {
        let zp = self.z_plus.synthesize(self.z1.len());
        SphericalFunction { values: self.z1.values.iter().zip(&zp.values).map(|(a, b)| a + b).collect() }
    }

    fn inner_value(&self, r: f64, j: usize, theta: f64) -> f64 {
        match &self.inner {
            InnerCompetitor::Identity => r * self.z1.values[j],
            InnerCompetitor::Arc(a) => a.eval(r, theta),
            InnerCompetitor::Field(f) => sample_ray(f, j, r.ln()),
        }
    }

    pub fn field(&self, grid: &PolarGrid) -> Result<PolarField> {
        if grid.n_theta != self.z1.len() {
            return Err(invalid("grid", "angular resolution does not match z₁"));
        }
        let outer = if self.z_plus.is_zero() { None } else { Some(outer_competitor(&self.z_plus, self.rho, grid)?) };
        let mut values = Array2::zeros((grid.n_r, grid.n_theta));
        for i in 0..grid.n_r {
            let r = grid.radius(i);
            for j in 0..grid.n_theta {
                let th = grid.theta(j);
                values[[i, j]] = if r < self.rho {
                    self.rho * self.inner_value(r / self.rho, j, th)
                } else {
                    let h1 = if self.rho == 1.0 { self.inner_value(r, j, th) } else { r * self.z1.values[j] };
                    h1 + outer.as_ref().map_or(0.0, |o| o.values[[i, j]])
                };
            }
        }
        PolarField::new(*grid, values, 1.0)
    }

    /// `W(h) − W(rz) = ρ²(W(h₁) − W(rz₁)) + W₀(ψh₊) − W₀(rz₊)`, if `z₁` is a
    /// single arc mode and the inner part is the identity or the arc flow.
    pub fn semi_analytic(&self) -> Result<Option<SplitEnergies>> {
        let Some(arc) = self.arc else {
            return Ok(None);
        };
        let inner_gain = match &self.inner {
            InnerCompetitor::Identity => 0.0,
            InnerCompetitor::Arc(a) => a.gain(),
            InnerCompetitor::Field(_) => return Ok(None),
        };
        let outer = if self.rho < 1.0 { outer_gain(&self.z_plus, Some(self.rho))? } else { outer_gain(&self.z_plus, None)? };
        let w_rz1 = arc.energy_gap() + PI / 2.0;
        let w_rz = w_rz1 + outer.w0_homogeneous;
        let w_h = w_rz + self.rho * self.rho * inner_gain - outer.gain();
        Ok(Some(SplitEnergies { w_h, w_rz, w_rz1, w0_rz_plus: outer.w0_homogeneous, w_cone: PI / 2.0 }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitEnergies {
    pub w_h: f64,
    pub w_rz: f64,
    pub w_rz1: f64,
    pub w0_rz_plus: f64,
    pub w_cone: f64,
}

impl SplitEnergies {
    /// `W(rz) − W(rz₁) − W₀(rz₊)`.
    pub fn splitting_residual(&self) -> f64 {
        self.w_rz - self.w_rz1 - self.w0_rz_plus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Route {
    SemiAnalytic,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonMeasurement {
    pub route: Route,
    pub energies: SplitEnergies,
    /// `𝓔(rz) = W(rz) − W(rσ)`.
    pub e_rz: f64,
    /// `𝓔(h) = W(h) − W(rσ)`.
    pub e_h: f64,
    /// `(𝓔(rz) − 𝓔(h))/|𝓔(rz)|^{1+γ}`, `+∞` when `𝓔(rz) = 0` and `W(h) ≤ W(rz)`.
    pub epsilon: f64,
}

fn finish(route: Route, energies: SplitEnergies, gamma: f64) -> EpsilonMeasurement {
    let e_rz = energies.w_rz - energies.w_cone;
    let e_h = energies.w_h - energies.w_cone;
    let epsilon = if e_rz == 0.0 {
        if energies.w_h <= energies.w_rz {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        (e_rz - e_h) / e_rz.abs().powf(1.0 + gamma)
    };
    EpsilonMeasurement { route, energies, e_rz, e_h, epsilon }
}

/// Measures the achieved symmetric epiperimetric constant. Energies come from
/// the semi-analytic splitting when available and from grid quadrature on a
/// square grid matching the cone profile otherwise.
pub fn measure_epsilon(
    h: &CompetitorAssembly,
    z: &SphericalFunction,
    cone: &ConeDescription,
    gamma: f64,
) -> Result<EpsilonMeasurement> {
    let tr = h.trace();
    if tr.len() != z.len() {
        return Err(Error::TraceMismatch("z and the competitor trace have different grids".into()));
    }
    let worst = tr.values.iter().zip(&z.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if worst > TRACE_TOL * z.values.iter().fold(1.0f64, |m, v| m.max(v.abs())) {
        return Err(Error::TraceMismatch(format!("competitor trace differs from z by {worst}")));
    }
    if let Some(e) = h.semi_analytic()? {
        return Ok(finish(Route::SemiAnalytic, e, gamma));
    }
    let grid = PolarGrid::square(z.len())?;
    measure_epsilon_on_grid(h, z, cone, gamma, &grid)
}

/// Grid-quadrature route for every energy.
pub fn measure_epsilon_on_grid(
    h: &CompetitorAssembly,
    z: &SphericalFunction,
    cone: &ConeDescription,
    gamma: f64,
    grid: &PolarGrid,
) -> Result<EpsilonMeasurement> {
    let w_h = weiss_w(&h.field(grid)?)?;
    let w_rz = weiss_w(&homogeneous_extension(z, 1.0, grid)?)?;
    let w_rz1 = weiss_w(&homogeneous_extension(&h.z1, 1.0, grid)?)?;
    let zp = h.z_plus.synthesize(grid.n_theta);
    let w0_rz_plus = weiss_w0(&homogeneous_extension(&zp, 1.0, grid)?, 1.0)?;
    let w_cone = weiss_w(&cone.field(grid)?)?;
    Ok(finish(Route::Grid, SplitEnergies { w_h, w_rz, w_rz1, w0_rz_plus, w_cone }, gamma))
}

/// Which side of the symmetric inequality a family member exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// `𝓔(rz) > 0`.
    Mass,
    /// `𝓔(rz) < 0`.
    Slope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub t: f64,
    pub normalization: Normalization,
    pub distance: f64,
    pub measurement: EpsilonMeasurement,
}

/// Arc-length perturbations `L = π(1 + t)` of the half-plane cone with the
/// arc-flow inner competitor (`ρ = 1`, `z₊ = 0`).
pub fn arc_family(ts: &[f64], n_theta: usize, params: ArcInnerParams) -> Result<Vec<FamilyMember>> {
    let cone = ConeDescription::half_plane(n_theta, 0.0)?;
    let domain = ArcDomain::half_circle(0.0);
    let mut out = Vec::new();
    for &t in ts {
        for normalization in [Normalization::Mass, Normalization::Slope] {
            let length = PI * (1.0 + t);
            let arc = match normalization {
                Normalization::Mass => ArcPerturbation::mass_normalized(0.0, length)?,
                Normalization::Slope => ArcPerturbation::slope_normalized(0.0, length)?,
            };
            let z = arc.sample(n_theta)?;
            let inner = ArcInnerCompetitor::new(arc, params)?;
            let h = assemble_competitor(z.clone(), ModeExpansion::zero(domain.clone()), InnerCompetitor::Arc(inner), 1.0)?;
            let measurement = measure_epsilon(&h, &z, &cone, 0.0)?;
            let distance = arc_distance(&arc);
            out.push(FamilyMember { t, normalization, distance, measurement });
        }
    }
    Ok(out)
}

/// `‖z₁ − σ‖_{L²(S¹)}` by quadrature over the union of the two arcs.
pub fn arc_distance(arc: &ArcPerturbation) -> f64 {
    let half = arc.length.max(PI) / 2.0;
    let f = |th: f64| {
        let d = arc.c1 * arc_profile(arc.center, arc.length, th) - (th).cos().max(0.0);
        d * d
    };
    // integrand has kinks at ±π/2 and ±L/2
    let mut knots = vec![-half, -PI / 2.0, -arc.length / 2.0, 0.0, arc.length / 2.0, PI / 2.0, half];
    knots.sort_by(f64::total_cmp);
    knots.windows(2).map(|w| quad(w[0], w[1], f)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi2() -> ModeExpansion {
        ModeExpansion::single(ArcDomain::half_circle(0.0), 2, 1.0).unwrap()
    }

    #[test]
    fn cutoff_values() {
        let p = annular_cutoff(0.3, 2).unwrap();
        assert_eq!(p.eval(1.0), 1.0);
        assert_eq!(p.eval(0.3), 0.0);
        let e = annular_cutoff((-1.0f64).exp(), 2).unwrap();
        for r in [0.5, 0.7, 0.9] {
            assert!((e.eval(r) - (1.0 + r.ln())).abs() < 1e-15);
        }
        // (r ψ′)′ = 0
        let h = 1e-4;
        let rp = |r: f64| r * p.derivative(r);
        assert!(((rp(0.6 + h) - rp(0.6 - h)) / (2.0 * h)).abs() < 1e-10);
        assert!(annular_cutoff(1.0, 2).is_err() && annular_cutoff(0.0, 2).is_err());
        assert!(matches!(annular_cutoff(0.5, 3), Err(Error::Unsupported(_))));
    }

    #[test]
    fn no_cutoff_closed_form() {
        let g = outer_gain(&phi2(), None).unwrap();
        assert!((g.w0_competitor - 1.0).abs() < 1e-14);
        assert!((g.w0_homogeneous - 1.5).abs() < 1e-14);
        assert!((g.ratio().unwrap() - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn cutoff_quadrature_matches_closed_form() {
        // oracle: ∫_{−T}^0 e^{2αt}((1/T + αψ)² + λψ²) dt with ψ = 1 + t/T, integrated exactly
        let oracle = |rho: f64, a: f64, lam: f64| {
            let t = -rho.ln();
            // expand in powers of ψ: A + Bψ + Cψ², ∫ e^{2αt}ψ^k dt by parts
            let c0 = 1.0 / (t * t);
            let c1 = 2.0 * a / t;
            let c2 = a * a + lam;
            let k = 2.0 * a;
            let e = (-k * t).exp();
            let m0 = (1.0 - e) / k;
            let m1 = 1.0 / k - m0 / (k * t);
            let m2 = 1.0 / k - 2.0 * m1 / (k * t);
            c0 * m0 + c1 * m1 + c2 * m2 - 1.0
        };
        for rho in [0.25, 0.5, 0.75] {
            for k in 2..5 {
                let z = ModeExpansion::single(ArcDomain::half_circle(0.0), k, 1.0).unwrap();
                let g = outer_gain(&z, Some(rho)).unwrap();
                let lam = (k * k) as f64;
                assert!((g.w0_competitor - oracle(rho, k as f64, lam)).abs() < 1e-12);
                if rho <= 0.5 {
                    assert!(g.gain() >= 0.0);
                }
            }
        }
        // a cutoff this close to the boundary costs more than the extension gains
        assert!(outer_gain(&phi2(), Some(0.75)).unwrap().gain() < 0.0);
    }

    #[test]
    fn outer_field_trace_and_gap() {
        let grid = PolarGrid::square(64).unwrap();
        let f = outer_competitor(&phi2(), 0.5, &grid).unwrap();
        let want = phi2().synthesize(64);
        for (a, b) in f.boundary().values.iter().zip(&want.values) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(f.values[[grid.node(0.4).unwrap(), 5]], 0.0);
        let zero = outer_competitor(&ModeExpansion::zero(ArcDomain::half_circle(0.0)), 0.5, &grid).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
        let bad = ModeExpansion::single(ArcDomain::half_circle(0.0), 1, 1.0).unwrap();
        assert!(matches!(outer_competitor(&bad, 0.5, &grid), Err(Error::SpectralGap { .. })));
    }

    #[test]
    fn profile_integrals() {
        let e = 0.05;
        let p = eta_profiles(6.0, 8.0, e, 2).unwrap();
        assert!((p.integral_minus - (2.0 * e + 3.0 * e * e)).abs() < 1e-15);
        let oracle = 0.5 * 0.5 * {
            // midpoint oracle for ∫(η₊² − 1) r dr
            let n = 20000;
            (0..n)
                .map(|i| {
                    let r = (i as f64 + 0.5) / n as f64;
                    (p.eta_plus(r).powi(2) - 1.0) * r
                })
                .sum::<f64>()
                * 4.0
                / n as f64
        };
        assert!((p.integral_plus - oracle).abs() < 1e-8);
        let z = eta_profiles(6.0, 8.0, 0.0, 2).unwrap();
        assert_eq!((z.integral_minus, z.integral_plus), (0.0, 0.0));
        assert!(matches!(eta_profiles(1.0, 8.0, 0.01, 2), Err(Error::ProfileAssertion(_))));
        assert!(eta_profiles(6.0, 20.0, 0.1, 2).is_err());
    }

    #[test]
    fn length_mode_norm() {
        let l = 2.7;
        let h = 1e-5;
        let n = 200000;
        let mut s = 0.0;
        let mut cross = 0.0;
        for i in 0..n {
            let th = -l / 2.0 + l * (i as f64 + 0.5) / n as f64;
            let d = (arc_profile(0.0, l + h, th) - arc_profile(0.0, l - h, th)) / (2.0 * h);
            s += d * d;
            cross += d * arc_profile(0.0, l, th);
        }
        let w = l / n as f64;
        assert!((s * w * l * l - LENGTH_MODE_NORM).abs() < 1e-4);
        assert!((cross * w).abs() < 1e-8);
    }

    #[test]
    fn identity_and_sentinel() {
        let n = 128;
        let cone = ConeDescription::half_plane(n, 0.0).unwrap();
        let sigma = ArcPerturbation::mass_normalized(0.0, PI).unwrap();
        let z = sigma.sample(n).unwrap();
        for (a, b) in z.values.iter().zip(&cone.profile.values) {
            assert!((a - b).abs() < 1e-14);
        }
        let h = assemble_competitor(z.clone(), ModeExpansion::zero(ArcDomain::half_circle(0.0)), InnerCompetitor::Identity, 1.0)
            .unwrap()
            .with_arc(sigma)
            .unwrap();
        let m = measure_epsilon(&h, &z, &cone, 0.0).unwrap();
        assert_eq!(m.e_rz, 0.0);
        assert_eq!(m.epsilon, f64::INFINITY);
        let grid = PolarGrid::square(n).unwrap();
        let hf = h.field(&grid).unwrap();
        let rz = homogeneous_extension(&z, 1.0, &grid).unwrap();
        assert_eq!(hf.values, rz.values);
    }

    #[test]
    fn trace_mismatch() {
        let n = 64;
        let a = ArcPerturbation::mass_normalized(0.0, PI * 1.02).unwrap();
        let inner = ArcInnerCompetitor::new(a, ArcInnerParams::default()).unwrap();
        let z = ArcPerturbation::mass_normalized(0.0, PI).unwrap().sample(n).unwrap();
        let r = assemble_competitor(z, ModeExpansion::zero(ArcDomain::half_circle(0.0)), InnerCompetitor::Arc(inner), 1.0);
        assert!(matches!(r, Err(Error::TraceMismatch(_))));
    }

    #[test]
    fn arc_family_signs() {
        let fam = arc_family(&[-0.04, 0.04], 256, ArcInnerParams::default()).unwrap();
        for m in &fam {
            let sign = m.measurement.e_rz.signum();
            match m.normalization {
                Normalization::Mass => assert_eq!(sign, 1.0),
                Normalization::Slope => assert_eq!(sign, -1.0),
            }
            assert!(m.measurement.epsilon > 0.0, "{m:?}");
            assert!(m.distance <= 0.1);
        }
    }

    #[test]
    #[ignore]
    fn print_family() {
        let ts: Vec<f64> = [0.008, 0.016, 0.024, 0.032, 0.04].iter().flat_map(|t| [-t, *t]).collect();
        for m in arc_family(&ts, 256, ArcInnerParams::default()).unwrap() {
            println!("{:+.3} {:?} d={:.4} E={:.3e} eps={:.4}", m.t, m.normalization, m.distance, m.measurement.e_rz, m.measurement.epsilon);
        }
        for rho in RHO_SWEEP {
            println!("rho {rho} ratio {:?}", outer_gain(&phi2(), Some(rho)).unwrap().ratio());
        }
    }

    #[test]
    fn arc_gain_matches_grid() {
        // semi-analytic inner energy against grid quadrature of the same field
        let n = 384;
        let arc = ArcPerturbation::mass_normalized(0.0, PI * 1.2).unwrap();
        let inner = ArcInnerCompetitor::new(arc, ArcInnerParams::default()).unwrap();
        let z = arc.sample(n).unwrap();
        let h = assemble_competitor(z.clone(), ModeExpansion::zero(ArcDomain::half_circle(0.0)), InnerCompetitor::Arc(inner), 1.0)
            .unwrap();
        let cone = ConeDescription::half_plane(n, 0.0).unwrap();
        let semi = measure_epsilon(&h, &z, &cone, 0.0).unwrap();
        let grid = measure_epsilon_on_grid(&h, &z, &cone, 0.0, &PolarGrid::square(n).unwrap()).unwrap();
        let d_semi = semi.energies.w_h - semi.energies.w_rz;
        let d_grid = grid.energies.w_h - grid.energies.w_rz;
        assert!(d_semi < 0.0);
        assert!((d_semi - d_grid).abs() < 0.05 * d_semi.abs(), "{d_semi} {d_grid}");
    }
}
