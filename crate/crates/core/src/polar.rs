//! Fields on the unit disk sampled on a log-polar grid.
//!
//! Radial nodes are `r_i = r_min·e^{iΔt}` with the last node at `r = 1`;
//! angular nodes are `θ_j = 2πj/N_θ`.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_R_MIN: f64 = 1e-3;
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub n_r: usize,
    pub n_theta: usize,
    pub r_min: f64,
}

impl PolarGrid {
    pub fn new(n_r: usize, n_theta: usize, r_min: f64) -> Result<Self> {
        if n_r < MIN_POINTS || n_theta < MIN_POINTS {
            return Err(Error::GridTooCoarse(format!(
                "{n_r}x{n_theta} grid, at least {MIN_POINTS} points per direction required"
            )));
        }
        if !(r_min > 0.0 && r_min < 1.0) {
            return Err(invalid("r_min", "must lie in (0, 1)"));
        }
        Ok(Self { n_r, n_theta, r_min })
    }

    /// `n × n` grid with the default inner radius.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n, DEFAULT_R_MIN)
    }

    pub fn dt(&self) -> f64 {
        -self.r_min.ln() / (self.n_r - 1) as f64
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        self.r_min.ln() + i as f64 * self.dt()
    }

    pub fn radius(&self, i: usize) -> f64 {
        if i == self.n_r - 1 {
            1.0
        } else {
            self.t(i).exp()
        }
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.n_r).map(|i| self.radius(i)).collect()
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.n_theta).map(|j| self.theta(j)).collect()
    }

    /// Nearest radial node to `r`.
    pub fn node(&self, r: f64) -> Result<usize> {
        if !(r >= self.r_min * (1.0 - 1e-12) && r <= 1.0 + 1e-12) {
            return Err(Error::RadiusOutOfRange { radius: r, lo: self.r_min, hi: 1.0 });
        }
        let x = (r.ln() - self.r_min.ln()) / self.dt();
        Ok((x.round().max(0.0) as usize).min(self.n_r - 1))
    }
}

/// Samples of a function on the unit circle at uniform angles `2πj/N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalFunction {
    pub values: Vec<f64>,
}

impl SphericalFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_POINTS {
            return Err(Error::GridTooCoarse(format!("{} angular samples", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "must be finite"));
        }
        Ok(Self { values })
    }

    pub fn from_fn(n_theta: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let dth = 2.0 * PI / n_theta as f64;
        Self::new((0..n_theta).map(|j| f(j as f64 * dth)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.values.len() as f64
    }

    /// Trapezoid (spectrally accurate) `L²` norm on the circle.
    pub fn l2_norm(&self) -> f64 {
        (self.dtheta() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn sub(&self, other: &SphericalFunction) -> Result<SphericalFunction> {
        if self.len() != other.len() {
            return Err(invalid("other", "angular grids differ"));
        }
        Ok(SphericalFunction { values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect() })
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    theta.rem_euclid(2.0 * PI)
}

/// A 1-homogeneous cone `u₀ = r σ(θ)` with positivity set `Ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeDescription {
    pub direction: [f64; 2],
    /// Counterclockwise arcs `(start, end)` with `end > start`, angles in radians.
    pub arcs: Vec<(f64, f64)>,
    pub profile: SphericalFunction,
}

impl ConeDescription {
    /// Half-plane solution `(x·e)₊` with `e = (cos θ_e, sin θ_e)`.
    pub fn half_plane(n_theta: usize, theta_e: f64) -> Result<Self> {
        let profile = SphericalFunction::from_fn(n_theta, |th| {
            let c = (th - theta_e).cos();
            // exact zeros at the arc endpoints
            if c > 1e-13 {
                c
            } else {
                0.0
            }
        })?;
        Ok(Self {
            direction: [theta_e.cos(), theta_e.sin()],
            arcs: vec![(theta_e - PI / 2.0, theta_e + PI / 2.0)],
            profile,
        })
    }

    pub fn field(&self, grid: &PolarGrid) -> Result<PolarField> {
        crate::weiss::homogeneous_extension(&self.profile, 1.0, grid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarField {
    pub grid: PolarGrid,
    /// `values[[i, j]] = u(r_i, θ_j)`.
    pub values: Array2<f64>,
    pub m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FieldHeader {
    n_r: usize,
    n_theta: usize,
    r_min: f64,
    m: f64,
}

impl PolarField {
    pub fn new(grid: PolarGrid, values: Array2<f64>, m: f64) -> Result<Self> {
        if values.dim() != (grid.n_r, grid.n_theta) {
            return Err(invalid("values", format!("shape {:?} does not match grid", values.dim())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "must be finite"));
        }
        Ok(Self { grid, values, m })
    }

    pub fn from_fn(grid: PolarGrid, m: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = Array2::from_shape_fn((grid.n_r, grid.n_theta), |(i, j)| f(grid.radius(i), grid.theta(j)));
        Self::new(grid, values, m)
    }

    pub fn zeros(grid: PolarGrid, m: f64) -> Self {
        Self { grid, values: Array2::zeros((grid.n_r, grid.n_theta)), m }
    }

    /// Boundary trace on `r = 1`.
    pub fn boundary(&self) -> SphericalFunction {
        self.ring(self.grid.n_r - 1)
    }

    pub fn ring(&self, i: usize) -> SphericalFunction {
        SphericalFunction { values: self.values.row(i).to_vec() }
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let header = FieldHeader { n_r: self.grid.n_r, n_theta: self.grid.n_theta, r_min: self.grid.r_min, m: self.m };
        serde_json::to_writer(&mut w, &header)?;
        writeln!(w)?;
        let mut cw = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for row in self.values.rows() {
            cw.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        cw.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(mut r: R) -> Result<Self> {
        let mut line = String::new();
        r.read_line(&mut line)?;
        let h: FieldHeader = serde_json::from_str(line.trim())?;
        let grid = PolarGrid::new(h.n_r, h.n_theta, h.r_min)?;
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
        let mut data = Vec::with_capacity(h.n_r * h.n_theta);
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != h.n_theta {
                return Err(Error::Schema(format!("row with {} entries, expected {}", rec.len(), h.n_theta)));
            }
            for s in rec.iter() {
                data.push(s.trim().parse::<f64>().map_err(|_| Error::Schema(format!("bad number {s:?}")))?);
            }
        }
        let values = Array2::from_shape_vec((h.n_r, h.n_theta), data)
            .map_err(|_| Error::Schema("row count does not match header".into()))?;
        Self::new(grid, values, h.m)
    }
}
