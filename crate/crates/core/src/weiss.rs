//! Weiss-type energies of polar fields (n = 2) and the Weiss derivative identity.
//!
//! The Dirichlet integral is taken in `(t, θ) = (log r, θ)`, where it reads
//! `∫∫ u_t² + u_θ² dt dθ`. Edge differences are used in both directions, with
//! a cut-cell correction on edges that end at a one-phase free boundary.
//! The disk `r < r_min` is left out of the global energies and reported
//! separately as the energy of the homogeneous extension of the innermost
//! ring; the rescaled energies of [`WeissProfile`] include it, since for
//! small `r` it is a fixed fraction of `B₁`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::engine::EnergyTrace;
use crate::error::{invalid, Error, Result};
use crate::polar::{ConeDescription, PolarField, PolarGrid, SphericalFunction};

const MIN_FRACTION: f64 = 1e-12;

// Distance (in cells) from `p` to the zero of the line through `(inner, p)`.
fn cut_fraction(inner: Option<f64>, p: f64) -> f64 {
    match inner {
        Some(q) if q > p => (p / (q - p)).clamp(MIN_FRACTION, 1.0),
        _ => 1.0,
    }
}

/// Energy `(Δu)²/Δ` and positive length of the edge `a → b`.
/// `before` precedes `a` and `after` follows `b` on the same line.
fn edge(before: Option<f64>, a: f64, b: f64, after: Option<f64>, delta: f64) -> (f64, f64) {
    let zero_beyond = |x: Option<f64>| x.map_or(true, |v| v <= 0.0);
    if a > 0.0 && b == 0.0 && zero_beyond(after) {
        let f = cut_fraction(before, a);
        return (a * a / (f * delta), f * delta);
    }
    if b > 0.0 && a == 0.0 && zero_beyond(before) {
        let f = cut_fraction(after, b);
        return (b * b / (f * delta), f * delta);
    }
    let e = (b - a) * (b - a) / delta;
    let pos = if a > 0.0 && b > 0.0 {
        delta
    } else if a > 0.0 && b < 0.0 {
        delta * a / (a - b)
    } else if b > 0.0 && a < 0.0 {
        delta * b / (b - a)
    } else if a > 0.0 || b > 0.0 {
        delta
    } else {
        0.0
    };
    (e, pos)
}

/// Angular energy `Σ (Δu)²/Δθ` and positive measure of one ring.
pub fn ring_energy(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let d = 2.0 * std::f64::consts::PI / n as f64;
    let mut q = 0.0;
    let mut a = 0.0;
    for j in 0..n {
        let (e, p) = edge(
            Some(values[(j + n - 1) % n]),
            values[j],
            values[(j + 1) % n],
            Some(values[(j + 2) % n]),
            d,
        );
        q += e;
        a += p;
    }
    (q, a)
}

pub fn boundary_mass(values: &[f64]) -> f64 {
    2.0 * std::f64::consts::PI / values.len() as f64 * values.iter().map(|v| v * v).sum::<f64>()
}

/// `I_k = ∫_0^Δ e^{cσ} (σ/Δ)^k dσ` for `k = 0, 1, 2`, by power series.
fn exp_moments(c: f64, delta: f64) -> [f64; 3] {
    let x = c * delta;
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut term = 1.0;
        let mut sum = 0.0;
        for n in 0..400 {
            let add = term / (n + k + 1) as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
            term *= x / (n + 1) as f64;
        }
        *o = delta * sum;
    }
    out
}

/// Per-ring and cumulative quadrature data of a field.
///
/// Along each ray the field is written `u = e^{mt} v` with `m` the field's
/// homogeneity. Ring quantities are scaled by `e^{−2mt}`, interpolated
/// linearly and integrated exactly against `e^{2mt}`; on radial edges
/// `u_t = e^{mt}(v_t + m v)` is taken at the midpoint. Degree-`m`
/// homogeneous fields therefore carry no radial discretization error.
#[derive(Debug, Clone)]
pub struct RingQuadrature {
    pub grid: PolarGrid,
    /// Angular energy of ring `i`.
    pub q: Vec<f64>,
    /// Boundary mass `∫ u² dθ` of ring `i`.
    pub p: Vec<f64>,
    /// Positive angular measure of ring `i`.
    pub a: Vec<f64>,
    /// Dirichlet integral over `r_min < r < r_i`.
    pub dirichlet: Vec<f64>,
    /// Positivity volume over `r_min < r < r_i`.
    pub volume: Vec<f64>,
    /// `∫ u₊ dθ` of ring `i`.
    pub s: Vec<f64>,
    /// `∫ u₊ dx` over `r_min < r < r_i`.
    pub positive_mass: Vec<f64>,
}

impl RingQuadrature {
    pub fn new(field: &PolarField) -> Self {
        let g = field.grid;
        let m = field.m;
        let (dt, dth) = (g.dt(), g.dtheta());
        let u = &field.values;
        let mut q = Vec::with_capacity(g.n_r);
        let mut a = Vec::with_capacity(g.n_r);
        let mut p = Vec::with_capacity(g.n_r);
        for i in 0..g.n_r {
            let row = u.row(i).to_vec();
            let (qi, ai) = ring_energy(&row);
            q.push(qi);
            a.push(ai);
            p.push(boundary_mass(&row));
        }
        let s: Vec<f64> = (0..g.n_r).map(|i| dth * u.row(i).iter().map(|v| v.max(0.0)).sum::<f64>()).collect();
        let [w0, w1, _] = exp_moments(m + 2.0, dt);
        let [i0, i1, _] = exp_moments(2.0 * m, dt);
        let [v0, v1, _] = exp_moments(2.0, dt);
        let scale = |i: usize| (-m * g.t(i)).exp();
        let radial: Vec<f64> = (0..g.n_r - 1)
            .map(|i| {
                let (s0, s1) = (scale(i), scale(i + 1));
                let w = (2.0 * m * g.t(i)).exp();
                let mut sum = 0.0;
                for j in 0..g.n_theta {
                    let (a0, a1) = (u[[i, j]], u[[i + 1, j]]);
                    let before = (i > 0).then(|| u[[i - 1, j]]);
                    let after = (i + 2 < g.n_r).then(|| u[[i + 2, j]]);
                    let plain = (a1 - a0) * (a1 - a0) / dt;
                    let (cut, _) = edge(before, a0, a1, after, dt);
                    if cut != plain {
                        sum += cut;
                        continue;
                    }
                    let (b0, b1) = (a0 * s0, a1 * s1);
                    let mid = (b1 - b0) / dt + 0.5 * m * (b0 + b1);
                    sum += w * mid * mid * i0;
                }
                sum * dth
            })
            .collect();
        let mut dirichlet = vec![0.0; g.n_r];
        let mut volume = vec![0.0; g.n_r];
        let mut positive_mass = vec![0.0; g.n_r];
        for i in 1..g.n_r {
            let wm = ((m + 2.0) * g.t(i - 1)).exp();
            positive_mass[i] =
                positive_mass[i - 1] + wm * (s[i - 1] * scale(i - 1) * (w0 - w1) + s[i] * scale(i) * w1);
            let (s0, s1) = (scale(i - 1).powi(2), scale(i).powi(2));
            let wq = (2.0 * m * g.t(i - 1)).exp();
            let wv = (2.0 * g.t(i - 1)).exp();
            let ang = wq * (q[i - 1] * s0 * (i0 - i1) + q[i] * s1 * i1);
            dirichlet[i] = dirichlet[i - 1] + radial[i - 1] + ang;
            volume[i] = volume[i - 1] + wv * (a[i - 1] * (v0 - v1) + a[i] * v1);
        }
        Self { grid: g, q, p, a, dirichlet, volume, s, positive_mass }
    }

    /// `∫ u₊` over `r < r_min` for the degree-`m` extension of ring 0.
    pub fn cap_positive_mass(&self, m: f64) -> f64 {
        self.s[0] * self.grid.r_min * self.grid.r_min / (m + 2.0)
    }

    /// Dirichlet integral of the degree-`m` extension of ring 0 into `r < r_min`.
    pub fn cap_dirichlet(&self, m: f64) -> f64 {
        (m * m * self.p[0] + self.q[0]) / (2.0 * m)
    }

    pub fn cap_volume(&self) -> f64 {
        0.5 * self.a[0] * self.grid.r_min * self.grid.r_min
    }
}

/// Energy pieces on the disk, with the inner cap `r < r_min` separated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub annulus_dirichlet: f64,
    pub cap_dirichlet: f64,
    pub boundary_mass: f64,
    pub annulus_volume: f64,
    pub cap_volume: f64,
}

impl EnergyBreakdown {
    pub fn dirichlet(&self) -> f64 {
        self.annulus_dirichlet + self.cap_dirichlet
    }

    pub fn volume(&self) -> f64 {
        self.annulus_volume + self.cap_volume
    }
}

fn check_m(m: f64) -> Result<()> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(invalid("m", "homogeneity must be positive in two dimensions"));
    }
    Ok(())
}

pub fn energy_breakdown(field: &PolarField) -> Result<EnergyBreakdown> {
    check_m(field.m)?;
    let q = RingQuadrature::new(field);
    let last = field.grid.n_r - 1;
    Ok(EnergyBreakdown {
        annulus_dirichlet: q.dirichlet[last],
        cap_dirichlet: q.cap_dirichlet(field.m),
        boundary_mass: q.p[last],
        annulus_volume: q.volume[last],
        cap_volume: q.cap_volume(),
    })
}

/// `W₀ᵐ(u) = ∫ |Du|² − m ∫_{∂B₁} u²` over the annulus `r_min < r < 1`.
/// The inner disk is available from [`energy_breakdown`].
pub fn weiss_w0(field: &PolarField, m: f64) -> Result<f64> {
    let b = energy_breakdown(field)?;
    Ok(b.annulus_dirichlet - m * b.boundary_mass)
}

fn clip_negative(field: &PolarField) -> std::borrow::Cow<'_, PolarField> {
    if field.values.iter().any(|&v| v < 0.0) {
        log::warn!("negative values clipped to zero before evaluating J");
        let mut f = field.clone();
        f.values.mapv_inplace(|v| v.max(0.0));
        std::borrow::Cow::Owned(f)
    } else {
        std::borrow::Cow::Borrowed(field)
    }
}

/// Alt–Caffarelli energy `∫ |Du|² + |{u > 0}|` over the annulus.
pub fn ac_j(field: &PolarField) -> Result<f64> {
    let f = clip_negative(field);
    let b = energy_breakdown(&f)?;
    Ok(b.annulus_dirichlet + b.annulus_volume)
}

/// `W(u) = W₀¹(u) + |{u > 0}|` over the annulus.
pub fn weiss_w(field: &PolarField) -> Result<f64> {
    let b = energy_breakdown(field)?;
    Ok(b.annulus_dirichlet - b.boundary_mass + b.annulus_volume)
}

pub fn energy_gap(field: &PolarField, cone: &ConeDescription) -> Result<f64> {
    Ok(weiss_w(field)? - weiss_w(&cone.field(&field.grid)?)?)
}

/// `z(r, θ) = r^m g(θ)`.
pub fn homogeneous_extension(boundary: &SphericalFunction, m: f64, grid: &PolarGrid) -> Result<PolarField> {
    if boundary.len() != grid.n_theta {
        return Err(invalid("boundary", "angular grid does not match"));
    }
    let values = Array2::from_shape_fn((grid.n_r, grid.n_theta), |(i, j)| {
        grid.radius(i).powf(m) * boundary.values[j]
    });
    PolarField::new(*grid, values, m)
}

/// Value of the field along ray `j` at log-radius `t`: cubic Lagrange in `t`
/// applied to `u e^{−mt}`, homogeneous extension below `r_min`.
pub(crate) fn sample_ray(field: &PolarField, j: usize, t: f64) -> f64 {
    let g = &field.grid;
    let x = (t - g.t(0)) / g.dt();
    let m = field.m;
    if x <= 0.0 {
        return (x * g.dt() * m).exp() * field.values[[0, j]];
    }
    let n = g.n_r;
    let k = (x.floor() as usize).min(n - 2);
    let start = k.saturating_sub(1).min(n - 4);
    let mut v = 0.0;
    for a in start..start + 4 {
        let mut w = 1.0;
        for b in start..start + 4 {
            if a != b {
                w *= (x - b as f64) / (a as f64 - b as f64);
            }
        }
        v += w * field.values[[a, j]] * (-m * g.t(a)).exp();
    }
    v * (m * t).exp()
}

/// `u_r(x) = r^{−m} u(r x)` resampled on the grid of `field`.
pub fn rescale(field: &PolarField, r: f64, m: f64) -> Result<PolarField> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::RadiusOutOfRange { radius: r, lo: 0.0, hi: 1.0 });
    }
    let g = field.grid;
    let lr = r.ln();
    let scale = r.powf(-m);
    let values = Array2::from_shape_fn((g.n_r, g.n_theta), |(i, j)| {
        if lr == 0.0 {
            field.values[[i, j]] * scale
        } else {
            scale * sample_ray(field, j, g.t(i) + lr)
        }
    });
    PolarField::new(g, values, m)
}

/// Fourth-order `∂_t (u e^{−mt})` on ring `i` (one-sided stencils at the ends).
fn ring_log_derivative(field: &PolarField, m: f64, i: usize) -> Vec<f64> {
    let g = &field.grid;
    let n = g.n_r;
    let h = 12.0 * g.dt();
    let u = &field.values;
    let scale: Vec<f64> = (0..n).map(|k| (-m * g.t(k)).exp()).collect();
    const FWD0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
    const FWD1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
    (0..g.n_theta)
        .map(|j| {
            let c = |k: usize| u[[k, j]] * scale[k];
            if i >= 2 && i + 2 < n {
                (c(i - 2) - 8.0 * c(i - 1) + 8.0 * c(i + 1) - c(i + 2)) / h
            } else if i < 2 {
                let w = if i == 0 { FWD0 } else { FWD1 };
                (0..5).map(|k| w[k] * c(k)).sum::<f64>() / h
            } else {
                let w = if n - 1 - i == 0 { FWD0 } else { FWD1 };
                -(0..5).map(|k| w[k] * c(n - 1 - k)).sum::<f64>() / h
            }
        })
        .collect()
}

/// `‖r∂_r u_r‖` on ring `i`: `r^{−m}(u_t − m u) = ∂_t(u e^{−mt})`.
fn ring_d(field: &PolarField, m: f64, i: usize) -> f64 {
    let vt = ring_log_derivative(field, m, i);
    (field.grid.dtheta() * vt.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Weiss quantities of the rescalings `u_r` at every radial node.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeissProfile {
    pub radii: Vec<f64>,
    /// `W₀ᵐ(u_r)`
    pub w0: Vec<f64>,
    /// `W₀ᵐ(z_r)`
    pub w0_hom: Vec<f64>,
    /// `|{u_r > 0} ∩ B₁|`
    pub volume: Vec<f64>,
    /// `|{z_r > 0} ∩ B₁|`
    pub volume_hom: Vec<f64>,
    /// `‖r ∂_r u_r‖` on the unit circle
    pub d: Vec<f64>,
}

impl WeissProfile {
    pub fn new(field: &PolarField, m: f64) -> Result<Self> {
        check_m(m)?;
        check_m(field.m)?;
        let g = field.grid;
        let q = RingQuadrature::new(field);
        let cap_d = q.cap_dirichlet(field.m);
        let cap_v = q.cap_volume();
        let mut out = Self {
            radii: g.radii(),
            w0: Vec::with_capacity(g.n_r),
            w0_hom: Vec::with_capacity(g.n_r),
            volume: Vec::with_capacity(g.n_r),
            volume_hom: Vec::with_capacity(g.n_r),
            d: Vec::with_capacity(g.n_r),
        };
        for i in 0..g.n_r {
            let t = g.t(i);
            let s2m = (-2.0 * m * t).exp();
            out.w0.push(s2m * (q.dirichlet[i] + cap_d - m * q.p[i]));
            out.w0_hom.push(s2m * (q.q[i] - m * m * q.p[i]) / (2.0 * m));
            out.volume.push((-2.0 * t).exp() * (q.volume[i] + cap_v));
            out.volume_hom.push(0.5 * q.a[i]);
            out.d.push(ring_d(field, m, i));
        }
        Ok(out)
    }
}

/// `‖r ∂_r u_r‖_{L²(∂B₁)}` at the node nearest `r`, using the field's homogeneity.
pub fn radial_derivative_norm(field: &PolarField, r: f64) -> Result<f64> {
    let i = field.grid.node(r)?;
    check_m(field.m)?;
    Ok(ring_d(field, field.m, i))
}

/// `|dW/dt − [2m(W₀(z_r) − W₀(u_r)) + D²]|` at the node nearest `r`, with the
/// derivative taken as a centered difference of half-width `h` in `log r`
/// (rounded to a whole number of grid steps).
pub fn weiss_derivative_residual(field: &PolarField, m: f64, r: f64, h: f64) -> Result<f64> {
    let g = field.grid;
    let k = (h / g.dt()).round();
    if k < 1.0 {
        return Err(Error::StepUnderflow { step: h, spacing: g.dt() });
    }
    let k = k as usize;
    let i = g.node(r)?;
    if i < k || i + k >= g.n_r {
        return Err(Error::RadiusOutOfRange { radius: r, lo: g.radius(k), hi: g.radius(g.n_r - 1 - k) });
    }
    let p = WeissProfile::new(field, m)?;
    let lhs = (p.w0[i + k] - p.w0[i - k]) / (2.0 * k as f64 * g.dt());
    let rhs = 2.0 * m * (p.w0_hom[i] - p.w0[i]) + p.d[i] * p.d[i];
    Ok((lhs - rhs).abs())
}

/// Energy trace of the one-phase rescalings: `E = W(u_r) − W(u₀)`,
/// `F = W(z_r) − W(u₀)`, `D = ‖r∂_r u_r‖`, at the nodes nearest `radii`.
/// Energies outside `[−1, 1]` are clamped with a warning.
pub fn export_energy_trace(field: &PolarField, cone: &ConeDescription, radii: &[f64]) -> Result<EnergyTrace> {
    let g = field.grid;
    let cone_field = cone.field(&g)?;
    let pu = WeissProfile::new(field, 1.0)?;
    let pc = WeissProfile::new(&cone_field, 1.0)?;
    let mut nodes: Vec<usize> = radii.iter().map(|&r| g.node(r)).collect::<Result<_>>()?;
    nodes.dedup();
    if nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("radii", "must be increasing and map to distinct grid nodes"));
    }
    let last = g.n_r - 1;
    let w_cone_hom = pc.w0_hom[last] + pc.volume_hom[last];
    let clamp = |v: f64, what: &str| {
        if v.abs() > 1.0 {
            log::warn!("{what} = {v} outside [-1, 1], clamped");
            v.clamp(-1.0, 1.0)
        } else {
            v
        }
    };
    let mut out_r = Vec::new();
    let (mut e, mut f, mut d) = (Vec::new(), Vec::new(), Vec::new());
    for &i in &nodes {
        out_r.push(g.radius(i));
        e.push(clamp((pu.w0[i] + pu.volume[i]) - (pc.w0[i] + pc.volume[i]), "E"));
        f.push(clamp((pu.w0_hom[i] + pu.volume_hom[i]) - w_cone_hom, "F"));
        d.push(pu.d[i]);
    }
    EnergyTrace::new(out_r, e, Some(f), Some(d))
}
