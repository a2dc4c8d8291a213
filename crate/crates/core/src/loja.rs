//! Finite-dimensional Łojasiewicz machinery: unit-speed gradient flow, the
//! case split for the flow-time profile `η(r)`, decrease bounds, and exponent
//! fits.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::arc::{reduced_objective, reduced_objective_derivative};
use crate::engine::VerificationReport;
use crate::epi::{ArcInnerCompetitor, ArcInnerParams, ArcPerturbation};
use crate::error::{invalid, Error, Result};
use crate::polar::{PolarField, PolarGrid};
use crate::weiss::{homogeneous_extension, weiss_w};

pub trait Objective: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Radius of the neighbourhood on which the Łojasiewicz inequality holds.
    fn delta_prime(&self) -> f64 {
        1.0
    }
    /// Known exponent `β`, if any.
    fn beta(&self) -> Option<f64> {
        None
    }
}

/// `G(μ) = ±μ^{2p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    pub p: u32,
    pub negative: bool,
}

impl PowerModel {
    pub fn new(p: u32) -> Self {
        Self { p, negative: false }
    }

    pub fn negative(p: u32) -> Self {
        Self { p, negative: true }
    }

    fn sign(&self) -> f64 {
        if self.negative {
            -1.0
        } else {
            1.0
        }
    }
}

impl Objective for PowerModel {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.sign() * x[0].powi(2 * self.p as i32)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        if self.p == 0 {
            return vec![0.0];
        }
        vec![self.sign() * 2.0 * self.p as f64 * x[0].powi(2 * self.p as i32 - 1)]
    }

    fn beta(&self) -> Option<f64> {
        (self.p > 0).then(|| 1.0 / (2.0 * self.p as f64))
    }
}

/// `G ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroObjective;

impl Objective for ZeroObjective {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, _: &[f64]) -> f64 {
        0.0
    }

    fn gradient(&self, _: &[f64]) -> Vec<f64> {
        vec![0.0]
    }
}

/// `𝒢(ζ_a, ζ_b, s) = (κ² + s³)((π/L)² − 1) + L − π` with `L = π + ζ_a + ζ_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcInnerObjective {
    pub kappa_sq: f64,
}

pub fn arc_inner_objective(kappa: f64) -> Result<ArcInnerObjective> {
    if !(kappa > 0.0) {
        return Err(invalid("kappa", "must be positive"));
    }
    Ok(ArcInnerObjective { kappa_sq: kappa * kappa })
}

impl ArcInnerObjective {
    fn length(x: &[f64]) -> f64 {
        PI + (x[0] + x[1])
    }

    /// Errors if the perturbed arc has nonpositive length.
    pub fn checked_value(&self, x: &[f64]) -> Result<f64> {
        if Self::length(x) <= 0.0 {
            return Err(invalid("zeta", "arc length must be positive"));
        }
        Ok(self.value(x))
    }
}

impl Objective for ArcInnerObjective {
    fn dim(&self) -> usize {
        3
    }

    fn value(&self, x: &[f64]) -> f64 {
        let l = Self::length(x);
        let s = x[2];
        (self.kappa_sq + s * s * s) * ((PI / l).powi(2) - 1.0) + (x[0] + x[1])
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let l = Self::length(x);
        let s = x[2];
        let dl = (self.kappa_sq + s * s * s) * (-2.0 * PI * PI / l.powi(3)) + 1.0;
        vec![dl, dl, 3.0 * s * s * ((PI / l).powi(2) - 1.0)]
    }
}

/// The arc objective restricted to its critical length manifold, as a function of `s`.
#[derive(Debug, Clone, Copy)]
pub struct ReducedArcObjective {
    pub delta_prime: f64,
}

impl Default for ReducedArcObjective {
    fn default() -> Self {
        Self { delta_prime: 1.0 }
    }
}

impl Objective for ReducedArcObjective {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        reduced_objective(x[0])
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![reduced_objective_derivative(x[0])]
    }

    fn delta_prime(&self) -> f64 {
        self.delta_prime
    }

    fn beta(&self) -> Option<f64> {
        Some(0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// `G(start) = 0`.
    Stationary,
    Budget,
    /// `|x| = δ′`.
    Radius,
    /// `G` reached the critical level 0.
    CriticalLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// `|DG|` at each sample, so that `dG/dt = −speed`.
    pub speeds: Vec<f64>,
    pub termination: Termination,
}

impl FlowTrajectory {
    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("trajectory has a start sample")
    }

    fn bracket(&self, t: f64) -> Option<(usize, f64)> {
        if t <= 0.0 || self.times.len() < 2 {
            return None;
        }
        if t >= self.end_time() {
            return None;
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        Some((k, t - self.times[k]))
    }

    /// `G` along the flow at time `t` (cubic Hermite); held at the end value past the end.
    pub fn value_at(&self, t: f64) -> f64 {
        match self.bracket(t) {
            None if t <= 0.0 => self.values[0],
            None => *self.values.last().expect("nonempty"),
            Some((k, s)) => {
                let h = self.times[k + 1] - self.times[k];
                let x = s / h;
                let (g0, g1) = (self.values[k], self.values[k + 1]);
                let (d0, d1) = (-self.speeds[k] * h, -self.speeds[k + 1] * h);
                let h00 = 2.0 * x * x * x - 3.0 * x * x + 1.0;
                let h10 = x * x * x - 2.0 * x * x + x;
                let h01 = -2.0 * x * x * x + 3.0 * x * x;
                let h11 = x * x * x - x * x;
                h00 * g0 + h10 * d0 + h01 * g1 + h11 * d1
            }
        }
    }

    /// State at time `t` by linear interpolation.
    pub fn state_at(&self, t: f64) -> Vec<f64> {
        match self.bracket(t) {
            None if t <= 0.0 => self.states[0].clone(),
            None => self.states.last().expect("nonempty").clone(),
            Some((k, s)) => {
                let w = s / (self.times[k + 1] - self.times[k]);
                self.states[k].iter().zip(&self.states[k + 1]).map(|(a, b)| a + w * (b - a)).collect()
            }
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn direction(obj: &dyn Objective, x: &[f64]) -> Vec<f64> {
    let g = obj.gradient(x);
    let n = norm(&g);
    if n == 0.0 {
        return vec![0.0; x.len()];
    }
    g.iter().map(|v| -v / n).collect()
}

fn axpy(x: &[f64], a: f64, v: &[f64]) -> Vec<f64> {
    x.iter().zip(v).map(|(x, v)| x + a * v).collect()
}

fn rk4(obj: &dyn Objective, x: &[f64], h: f64) -> Vec<f64> {
    let k1 = direction(obj, x);
    let k2 = direction(obj, &axpy(x, h / 2.0, &k1));
    let k3 = direction(obj, &axpy(x, h / 2.0, &k2));
    let k4 = direction(obj, &axpy(x, h, &k3));
    (0..x.len()).map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

/// Bisects on `[0, h]` for the last sub-step where `keep` holds.
fn bisect_step(obj: &dyn Objective, x: &[f64], h: f64, keep: impl Fn(f64, &[f64]) -> bool) -> (f64, Vec<f64>) {
    let (mut lo, mut hi) = (0.0, h);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if keep(mid, &rk4(obj, x, mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, rk4(obj, x, lo))
}

/// Integrates `x′ = −DG/|DG|` with classical RK4 until the budget is spent,
/// `|x|` reaches `δ′`, or `G` reaches 0.
pub fn normalized_flow(obj: &dyn Objective, start: &[f64], budget: f64, step: f64) -> Result<FlowTrajectory> {
    if start.len() != obj.dim() {
        return Err(invalid("start", format!("expected {} coordinates", obj.dim())));
    }
    let dp = obj.delta_prime();
    if norm(start) > dp / 4.0 {
        return Err(invalid("start", format!("|start| = {} exceeds δ′/4 = {}", norm(start), dp / 4.0)));
    }
    if !(budget >= 0.0) || !(step > 0.0) {
        return Err(invalid("step", "budget must be nonnegative and step positive"));
    }
    let step = step.min(dp / 1e4);
    let g0 = obj.value(start);
    let speed = |x: &[f64]| norm(&obj.gradient(x));
    let mut traj = FlowTrajectory {
        times: vec![0.0],
        states: vec![start.to_vec()],
        values: vec![g0],
        speeds: vec![speed(start)],
        termination: Termination::Stationary,
    };
    if g0 == 0.0 {
        return Ok(traj);
    }
    let inadmissible = |x: &[f64], g: f64| {
        Error::InadmissibleObjective(format!("gradient vanishes at {x:?} where G = {g}"))
    };
    if traj.speeds[0] == 0.0 {
        return Err(inadmissible(start, g0));
    }
    let level_tol = 1e-12 * g0.abs();
    // unit speed: a shorter displacement means the direction reversed inside the step
    let consistent = |h: f64, z: &[f64], from: &[f64]| {
        let d: Vec<f64> = z.iter().zip(from).map(|(a, b)| a - b).collect();
        norm(&d) >= (1.0 - 1e-3) * h
            && obj.gradient(z).iter().zip(&d).map(|(g, d)| g * d).sum::<f64>() < 0.0
    };
    let mut t = 0.0;
    let mut x = start.to_vec();
    let mut g = g0;
    loop {
        if t >= budget {
            traj.termination = Termination::Budget;
            return Ok(traj);
        }
        let h = step.min(budget - t);
        let mut y = rk4(obj, &x, h);
        let mut gy = obj.value(&y);
        let mut dt = h;
        let mut stop = None;
        if g0 > 0.0 && gy <= 0.0 {
            (dt, y) = bisect_step(obj, &x, h, |_, z| obj.value(z) > 0.0);
            gy = obj.value(&y);
            stop = Some(Termination::CriticalLevel);
        } else if gy >= g || !consistent(h, &y, &x) {
            (dt, y) = bisect_step(obj, &x, h, |hh, z| consistent(hh, z, &x));
            gy = obj.value(&y);
            if g0 > 0.0 && gy <= level_tol {
                stop = Some(Termination::CriticalLevel);
            } else {
                return Err(inadmissible(&y, gy));
            }
        } else if norm(&y) >= dp {
            (dt, y) = bisect_step(obj, &x, h, |_, z| norm(z) < dp);
            gy = obj.value(&y);
            stop = Some(Termination::Radius);
        }
        t += dt;
        let sp = if stop == Some(Termination::CriticalLevel) { 0.0 } else { speed(&y) };
        if sp == 0.0 && stop.is_none() {
            return Err(inadmissible(&y, gy));
        }
        traj.times.push(t);
        traj.states.push(y.clone());
        traj.values.push(gy);
        traj.speeds.push(sp);
        if let Some(s) = stop {
            traj.termination = s;
            return Ok(traj);
        }
        x = y;
        g = gy;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EtaCase {
    Zero,
    Negative,
    PositiveLong,
    PositiveShort,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaProfile {
    pub case: EtaCase,
    pub t1: Option<f64>,
    pub b: f64,
    pub beta: f64,
    pub g0: f64,
    /// `b|G₀|^{1−β}` for the linear cases, `t₁` for the plateau case.
    pub height: f64,
}

impl EtaProfile {
    pub fn eval(&self, r: f64) -> f64 {
        match self.case {
            EtaCase::Zero => 0.0,
            EtaCase::Negative | EtaCase::PositiveLong => self.height * (1.0 - r),
            EtaCase::PositiveShort => {
                if r <= 0.5 {
                    self.height
                } else {
                    let x = (2.0 * r - 1.0).min(1.0);
                    self.height * (1.0 - x * x * (3.0 - 2.0 * x))
                }
            }
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match self.case {
            EtaCase::Zero => 0.0,
            EtaCase::Negative | EtaCase::PositiveLong => -self.height,
            EtaCase::PositiveShort => {
                if r <= 0.5 {
                    0.0
                } else {
                    let x = (2.0 * r - 1.0).min(1.0);
                    -self.height * 12.0 * x * (1.0 - x)
                }
            }
        }
    }

    /// `3b|G₀|^{1−β}`.
    pub fn slope_bound(&self) -> f64 {
        3.0 * self.b * self.g0.abs().powf(1.0 - self.beta)
    }
}

/// Runs the flow from `start` for time `δ′/2` and applies the case split for `η`.
pub fn select_eta(obj: &dyn Objective, start: &[f64], b: f64, beta: f64) -> Result<(EtaProfile, FlowTrajectory)> {
    if !(b > 0.0 && b <= 1.0) {
        return Err(invalid("b", "must lie in (0, 1]"));
    }
    if !(beta > 0.0 && beta <= 0.5) {
        return Err(invalid("beta", "must lie in (0, 1/2]"));
    }
    let dp = obj.delta_prime();
    let traj = normalized_flow(obj, start, dp / 2.0, dp / 1e4)?;
    let g0 = traj.values[0];
    let lin = b * g0.abs().powf(1.0 - beta);
    let mut profile = EtaProfile { case: EtaCase::Zero, t1: None, b, beta, g0, height: 0.0 };
    if g0 == 0.0 {
        return Ok((profile, traj));
    }
    if g0 < 0.0 {
        profile.case = EtaCase::Negative;
        profile.height = lin;
        return Ok((profile, traj));
    }
    let half = g0 / 2.0;
    let t1 = if traj.value_at(traj.end_time()) >= half {
        traj.end_time().min(dp / 2.0)
    } else {
        let (mut lo, mut hi) = (0.0, traj.end_time());
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if traj.value_at(mid) >= half {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    profile.t1 = Some(t1);
    if t1 >= lin {
        profile.case = EtaCase::PositiveLong;
        profile.height = lin;
    } else {
        profile.case = EtaCase::PositiveShort;
        profile.height = t1;
    }
    Ok((profile, traj))
}

pub const DECREASE_SAMPLES: usize = 101;

fn decrease_radii() -> impl Iterator<Item = f64> {
    (0..DECREASE_SAMPLES).map(|k| k as f64 / (DECREASE_SAMPLES - 1) as f64)
}

/// Checks `G(flow(η(r))) ≤ G₀` on `[0, 1]`, the bound
/// `G(flow(η(r))) − G₀ ≤ −(b/c)|G₀|^{2−2β}(1 − r)` on `[0, 1/2]`, and the slope bound.
pub fn verify_decrease(profile: &EtaProfile, trajectory: &FlowTrajectory, c: f64) -> VerificationReport {
    let g0 = profile.g0;
    let tol = 1e-9 * g0.abs();
    let target = profile.b / c * g0.abs().powf(2.0 - 2.0 * profile.beta);
    let mut margins = Vec::new();
    let mut worst_slope: f64 = 0.0;
    for r in decrease_radii() {
        let diff = trajectory.value_at(profile.eval(r)) - g0;
        margins.push(-diff);
        if r <= 0.5 {
            margins.push(-(diff + target * (1.0 - r)));
        }
        worst_slope = worst_slope.max(profile.derivative(r).abs());
    }
    let bound = profile.slope_bound();
    margins.push((bound - worst_slope) * (1.0 + 1e-12) + 1e-300);
    VerificationReport::from_margins("verify_decrease", margins, tol)
        .detail("c", c)
        .detail("g0", g0)
        .detail("eta0", profile.eval(0.0))
        .detail("slope", worst_slope)
        .detail("slope_bound", bound)
}

/// Smallest `c` for which every profile passes the decrease bound.
pub fn fit_decrease_constant(cases: &[(EtaProfile, FlowTrajectory)]) -> f64 {
    let mut c: f64 = 0.0;
    for (p, traj) in cases {
        if p.case == EtaCase::Zero {
            continue;
        }
        let scale = p.b * p.g0.abs().powf(2.0 - 2.0 * p.beta);
        for r in decrease_radii().filter(|&r| r < 0.5 + 1e-12) {
            let drop = p.g0 - traj.value_at(p.eval(r));
            let need = scale * (1.0 - r);
            if need > 0.0 {
                c = c.max(if drop > 0.0 { need / drop } else { f64::INFINITY });
            }
        }
    }
    c * (1.0 + 1e-9)
}

/// Largest `b ∈ {2⁻ᵏ}` for which `verify_decrease` passes on every start with the given `c`.
pub fn calibrate_b(obj: &dyn Objective, starts: &[Vec<f64>], beta: f64, c: f64) -> Result<f64> {
    for k in 0..=20 {
        let b = 0.5f64.powi(k);
        let mut ok = true;
        for s in starts {
            let (p, t) = select_eta(obj, s, b, beta)?;
            ok &= verify_decrease(&p, &t, c).pass;
        }
        if ok {
            return Ok(b);
        }
    }
    Err(Error::NonConvergence("no b = 2^-k with k ≤ 20 passes the decrease check".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LojaFit {
    pub beta: f64,
    /// Smallest `C` with `|G|^{1−β} ≤ C|DG|` over the samples.
    pub c_l: f64,
    pub r2: f64,
    pub samples: usize,
}

/// Regresses `log|DG|` on `log|G|`; the slope is `1 − β`.
pub fn fit_lojasiewicz(obj: &dyn Objective, samples: &[Vec<f64>]) -> Result<LojaFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter_map(|x| {
            let g = obj.value(x).abs();
            let d = norm(&obj.gradient(x));
            (g > 0.0 && d > 0.0).then(|| (g.ln(), d.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return Err(Error::TooFewSamples { found: pts.len(), needed: 2 });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx < 1e-12 * n {
        return Err(Error::InsufficientRange("samples have no spread in log|G|".into()));
    }
    let slope = sxy / sxx;
    let beta = 1.0 - slope;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    let c_l = pts.iter().map(|&(lg, ld)| ((1.0 - beta) * lg - ld).exp()).fold(0.0, f64::max);
    Ok(LojaFit { beta, c_l, r2, samples: pts.len() })
}

/// Epiperimetric exponent matching the decrease exponent `2 − 2β = 1 + γ`.
pub fn epi_gamma(beta: f64) -> f64 {
    1.0 - 2.0 * beta
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerCompetitor2d {
    pub competitor: ArcInnerCompetitor,
    pub field: PolarField,
    /// `W(h₁) − W(rz₁)` from the 1-D radial integral.
    pub gain: f64,
    /// The same difference by grid quadrature.
    pub gain_grid: f64,
    /// `W(rz₁) − W(rσ)`.
    pub energy_gap: f64,
    pub profile: EtaProfile,
}

impl InnerCompetitor2d {
    /// `−gain/|W(rz₁) − W(rσ)|^{1+γ}`.
    pub fn epsilon(&self, gamma: f64) -> f64 {
        if self.energy_gap == 0.0 {
            return if self.gain <= 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
        }
        -self.gain / self.energy_gap.abs().powf(1.0 + gamma)
    }
}

/// Builds `h₁` for an arc trace. The flow of the amplitude parameter is
/// integrated on the reduced arc objective and checked against the closed
/// form `s(η) = s₀ + sign(s₀) η` used by the synthesis. The reduced objective
/// is nonpositive, so only the zero and negative cases of `η` occur.
pub fn inner_competitor_2d(trace: ArcPerturbation, params: ArcInnerParams, grid: &PolarGrid) -> Result<InnerCompetitor2d> {
    let comp = ArcInnerCompetitor::new(trace, params)?;
    let s0 = trace.s0();
    let g0 = reduced_objective(s0);
    let height = params.b * g0.abs().powf(1.0 - params.beta);
    let profile = EtaProfile {
        case: if g0 == 0.0 { EtaCase::Zero } else { EtaCase::Negative },
        t1: None,
        b: params.b,
        beta: params.beta,
        g0,
        height: if g0 == 0.0 { 0.0 } else { height },
    };
    if g0 != 0.0 {
        let obj = ReducedArcObjective { delta_prime: (4.0 * s0.abs()).max(1.0) };
        let traj = normalized_flow(&obj, &[s0], height, obj.delta_prime / 1e4)?;
        for r in [0.0, 0.25, 0.5, 0.75] {
            let eta = profile.eval(r);
            let flowed = traj.state_at(eta)[0];
            let closed = comp.s(r);
            if (flowed - closed).abs() > 1e-8 {
                return Err(Error::TraceMismatch(format!(
                    "flow gives s = {flowed} at η = {eta}, synthesis uses {closed}"
                )));
            }
        }
    }
    let field = PolarField::from_fn(*grid, 1.0, |r, th| comp.eval(r, th))?;
    let z1 = trace.sample(grid.n_theta)?;
    let gain_grid = weiss_w(&field)? - weiss_w(&homogeneous_extension(&z1, 1.0, grid)?)?;
    Ok(InnerCompetitor2d { competitor: comp, field, gain: comp.gain(), gain_grid, energy_gap: trace.energy_gap(), profile })
}
