use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::params::{derive_delta, DecayParams};
use crate::error::{Error, Result};

/// Sampled energies on an increasing radius grid. `f` is the homogeneous
/// competitor energy and `d` the radial-deviation term, both optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub radii: Vec<f64>,
    pub e: Vec<f64>,
    pub f: Option<Vec<f64>>,
    pub d: Option<Vec<f64>>,
}

impl EnergyTrace {
    pub fn new(radii: Vec<f64>, e: Vec<f64>, f: Option<Vec<f64>>, d: Option<Vec<f64>>) -> Result<Self> {
        let t = Self { radii, e, f, d };
        t.validate()?;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.radii.len();
        if self.e.len() != n {
            return Err(Error::MalformedTrace(format!("{} radii but {} E samples", n, self.e.len())));
        }
        for (name, col) in [("F", &self.f), ("D", &self.d)] {
            if let Some(c) = col {
                if c.len() != n {
                    return Err(Error::MalformedTrace(format!("{} radii but {} {name} samples", n, c.len())));
                }
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::MalformedTrace(format!("non-finite {name} sample")));
                }
            }
        }
        if let Some(d) = &self.d {
            if d.iter().any(|&v| v < 0.0) {
                return Err(Error::MalformedTrace("negative D sample".into()));
            }
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::MalformedTrace("radii must be positive and finite".into()));
        }
        if self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::MalformedTrace("radii must be strictly increasing".into()));
        }
        if let Some(bad) = self.e.iter().find(|v| !(v.is_finite() && v.abs() <= 1.0)) {
            return Err(Error::MalformedTrace(format!("E sample {bad} outside [-1, 1]")));
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let find = |name: &str| headers.iter().position(|h| h == name);
        let ir = find("r").ok_or(Error::MissingColumn("r"))?;
        let ie = find("E").ok_or(Error::MissingColumn("E"))?;
        let (i_f, i_d) = (find("F"), find("D"));
        let mut radii = Vec::new();
        let mut e = Vec::new();
        let mut f: Vec<Option<f64>> = Vec::new();
        let mut d: Vec<Option<f64>> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let cell = |i: usize| -> Result<Option<f64>> {
                match rec.get(i) {
                    None | Some("") => Ok(None),
                    Some(s) => s
                        .parse::<f64>()
                        .map(Some)
                        .map_err(|_| Error::MalformedTrace(format!("row {}: cannot parse {s:?}", line + 2))),
                }
            };
            let req = |i: usize, name: &str| -> Result<f64> {
                cell(i)?.ok_or_else(|| Error::MalformedTrace(format!("row {}: empty {name}", line + 2)))
            };
            radii.push(req(ir, "r")?);
            e.push(req(ie, "E")?);
            f.push(i_f.map(cell).transpose()?.flatten());
            d.push(i_d.map(cell).transpose()?.flatten());
        }
        Self::new(radii, e, collect_optional(f, "F")?, collect_optional(d, "D")?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["r", "E", "F", "D"])?;
        let opt = |c: &Option<Vec<f64>>, k: usize| c.as_ref().map(|v| format!("{:e}", v[k])).unwrap_or_default();
        for k in 0..self.len() {
            w.write_record([
                format!("{:e}", self.radii[k]),
                format!("{:e}", self.e[k]),
                opt(&self.f, k),
                opt(&self.d, k),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv_path(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

// A column that is entirely empty counts as absent; a partially filled one is rejected.
fn collect_optional(col: Vec<Option<f64>>, name: &str) -> Result<Option<Vec<f64>>> {
    if col.iter().all(Option::is_none) {
        return Ok(None);
    }
    col.into_iter()
        .map(|v| v.ok_or_else(|| Error::MalformedTrace(format!("column {name} is partially empty"))))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// The shifted energy `G` on the radius grid of its source trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GTrace {
    pub radii: Vec<f64>,
    pub g: Vec<f64>,
    pub delta: f64,
    pub gamma: f64,
}

impl GTrace {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }
}

/// `G = E + 3α⁻¹Λ+ r^α − 3α⁻¹Λ- r^−α`. Radii must lie in `[r1, r3]`.
pub fn compute_g(trace: &EnergyTrace, params: &DecayParams) -> Result<GTrace> {
    trace.validate()?;
    let delta = derive_delta(params)?;
    for &r in &trace.radii {
        if r < params.r1 || r > params.r3 {
            return Err(Error::RadiusOutOfRange { radius: r, lo: params.r1, hi: params.r3 });
        }
    }
    let g = trace
        .radii
        .iter()
        .zip(&trace.e)
        .map(|(&r, &e)| e + params.g_shift(r))
        .collect();
    Ok(GTrace { radii: trace.radii.clone(), g, delta, gamma: params.gamma })
}

/// Log-spaced radii `n` points from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| {
            if k == n - 1 {
                hi
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}
