//! One pipeline per subcommand. Each returns its report and the files it wrote.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use num_rational::Ratio;
use serde::Deserialize;

use epilab::arc::{ArcDomain, Mode, ModeExpansion};
use epilab::engine::{
    check_assumptions, check_dini, comparison_bound, comparison_bound_negative, compute_g, derive_delta_rational,
    delta_constants, dini_bound, find_threshold, limit_rate_fit, log_spaced, verify_ode, DecayParams, EnergyTrace,
    RateFit, VerificationReport,
};
use epilab::epi::{
    assemble_competitor, measure_epsilon, outer_gain, ArcInnerCompetitor, ArcInnerParams, ArcPerturbation,
    InnerCompetitor,
};
use epilab::loja::{
    arc_inner_objective, fit_decrease_constant, fit_lojasiewicz, select_eta, verify_decrease, Objective, PowerModel,
};
use epilab::minimizer::{hausdorff_cells, run_experiment, MinimizeConfig};
use epilab::obstacle::{constrained_loja_check, perturbed, QuadraticProfile};
use epilab::polar::{ConeDescription, SphericalFunction};

use crate::config::ExperimentConfig;
use crate::report::{finite, EpsilonRow, RunReport, Series, SeriesKind};
use crate::CliError;

pub struct Output {
    pub report: RunReport,
    pub files: Vec<PathBuf>,
}

fn params(cfg: &ExperimentConfig) -> DecayParams {
    DecayParams::new(cfg.c_e.unwrap_or(1.0), cfg.epsilon.unwrap_or(1.0), cfg.gamma.unwrap_or(0.0), cfg.alpha.unwrap_or(1.0))
        .with_errors(cfg.lambda_plus.unwrap_or(0.0), cfg.lambda_minus.unwrap_or(0.0))
}

pub fn derive_constants(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let p = params(cfg);
    p.validate()?;
    let k = delta_constants(p.c_e, p.epsilon, p.gamma, p.alpha)?;
    let mut report = RunReport::new("derive-constants", cfg.seed);
    report.value("delta", k.delta);
    report.value("delta_prime", k.delta_prime);
    report.value("delta_double_prime", k.delta_double_prime);
    for (i, c) in k.cases.iter().enumerate() {
        report.value(&format!("case_{}", i + 1), *c);
    }
    let exact = (p.gamma == 0.0)
        .then(|| {
            let q = |x: f64| Ratio::<i64>::approximate_float(x).filter(|r| *r.numer() as f64 / *r.denom() as f64 == x);
            derive_delta_rational(q(p.c_e)?, q(p.epsilon)?, q(p.alpha)?).ok()
        })
        .flatten();
    let shown = match exact {
        Some(r) => {
            report.tag("delta_exact", r.to_string());
            r.to_string()
        }
        None => format!("{}", k.delta),
    };
    println!("δ = {shown}");
    Ok(Output { report, files: Vec::new() })
}

/// `G` bound curves from the trace endpoints: growth side from the last
/// sample where `G > 0`, decay side from the first sample where `G < 0`.
fn bound_curve(radii: &[f64], g: &[f64], delta: f64, gamma: f64) -> Vec<f64> {
    let n = g.len();
    radii
        .iter()
        .zip(g)
        .map(|(&r, &gv)| {
            if g[n - 1] > 0.0 && gv > 0.0 {
                comparison_bound(g[n - 1], radii[n - 1], r, delta, gamma).unwrap_or(f64::NAN)
            } else if g[0] < 0.0 && gv < 0.0 {
                comparison_bound_negative(g[0], radii[0], r, delta, gamma).map(|b| -b).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            }
        })
        .collect()
}

pub fn verify_trace(cfg: &ExperimentConfig, out: &Path) -> Result<Output, CliError> {
    let trace = EnergyTrace::read_csv_path(cfg.trace.as_ref().expect("validated"))?;
    let p = params(cfg).with_range(trace.radii[0], *trace.radii.last().unwrap_or(&1.0));
    let tol = cfg.tol.unwrap_or(1e-6);
    let g = compute_g(&trace, &p)?;
    let delta = epilab::engine::derive_delta(&p)?;
    let mut report = RunReport::new("verify-trace", cfg.seed);
    report.value("delta", delta);
    report.check(&verify_ode(&g, tol)?);
    if cfg.hypotheses.unwrap_or(false) {
        report.check(&check_assumptions(&trace, &p, tol)?);
    }
    match find_threshold(&g) {
        Ok(r2) => report.value("r2", r2),
        Err(e) => {
            report.pass = false;
            report.tag("threshold_error", e.to_string());
        }
    }
    if trace.d.is_some() {
        let dini = check_dini(&trace, dini_bound(g.g[0], g.g[g.len() - 1], p.gamma, 1.0))?;
        report.value("dini_integral", dini.integral);
        report.value("dini_ratio_unit_c", dini.ratio);
        if let Ok(RateFit::Fitted { exponent, expected, .. }) = limit_rate_fit(&trace, &p) {
            report.value("rate_exponent", exponent);
            report.value("rate_expected", expected);
        }
    }
    let bound = bound_curve(&g.radii, &g.g, delta, p.gamma);
    report.series.push(Series::new("G_observed", SeriesKind::Trace, &g.radii, &g.g));
    report.series.push(Series::new("G_bound", SeriesKind::Trace, &g.radii, &bound));
    let g_path = out.join("g.csv");
    let mut w = csv::Writer::from_writer(File::create(&g_path)?);
    w.write_record(["r", "G", "bound"])?;
    for ((r, gv), b) in g.radii.iter().zip(&g.g).zip(&bound) {
        w.write_record([r.to_string(), gv.to_string(), finite(*b).map(|b| b.to_string()).unwrap_or_default()])?;
    }
    w.flush()?;
    Ok(Output { report, files: vec![g_path] })
}

/// Reads a boundary CSV with a `u` column (a `theta` column, if present, is ignored).
pub fn read_boundary(path: &Path) -> Result<SphericalFunction, CliError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let idx = rdr
        .headers()?
        .iter()
        .position(|h| h.trim() == "u")
        .ok_or_else(|| CliError::field("boundary", "file has no `u` column"))?;
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let v: f64 = rec
            .get(idx)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| CliError::field("boundary", format!("bad value on row {}", values.len() + 1)))?;
        values.push(v);
    }
    Ok(SphericalFunction::new(values)?)
}

pub fn ac_run(cfg: &ExperimentConfig, out: &Path) -> Result<Output, CliError> {
    let boundary = read_boundary(cfg.boundary.as_ref().expect("validated"))?;
    let n = boundary.len();
    let mut mc = MinimizeConfig { n_r: cfg.n_r.unwrap_or(n), n_theta: n, seed: cfg.seed, ..MinimizeConfig::default() };
    if let Some(r) = cfg.restarts {
        mc.restarts = r;
    }
    if let Some(e) = &cfg.eps_vol {
        mc.eps_vol = e.clone();
    }
    if let Some(s) = cfg.max_sweeps {
        mc.max_sweeps = s;
    }
    if let Some(t) = cfg.tol {
        mc.tol = t;
    }
    mc.validate()?;
    let cone = ConeDescription::half_plane(n, cfg.theta_e.unwrap_or(0.0))?;
    let r_lo = cfg.r_lo.unwrap_or(0.01);
    let radii = log_spaced(r_lo, 1.0, cfg.samples.unwrap_or(40));
    let p = DecayParams::new(cfg.c_e.unwrap_or(1.0), cfg.epsilon.unwrap_or(0.05), cfg.gamma.unwrap_or(0.0), cfg.alpha.unwrap_or(1.0))
        .with_range(mc.r_min, 1.0);
    let res = run_experiment(&boundary, &mc, &cone, &radii, &p, cfg.dini_c.unwrap_or(2.0))?;

    let field_path = out.join("field.txt");
    res.minimizer.field.write(BufWriter::new(File::create(&field_path)?))?;
    let trace_path = out.join("trace.csv");
    res.trace.write_csv_path(&trace_path)?;
    let fb_path = out.join("free_boundary.csv");
    let mut w = csv::Writer::from_writer(File::create(&fb_path)?);
    w.write_record(["x", "y"])?;
    for [x, y] in &res.curve.points {
        w.write_record([x.to_string(), y.to_string()])?;
    }
    w.flush()?;

    let mut report = RunReport::new("ac-run", cfg.seed);
    report.check(&res.report);
    report.value("energy", res.minimizer.energy);
    report.value("best_restart", res.minimizer.best_restart as f64);
    report.value("hausdorff_cells", hausdorff_cells(&res.curve, &cone, &res.minimizer.field.grid));
    report.value("xi_sup", res.curve.sup_norm);
    report.value("xi_dq1", res.curve.dq1);
    report.value("xi_dq2", res.curve.dq2);
    report.value("non_graphical_rings", res.curve.non_graphical as f64);
    let t = &res.trace;
    report.series.push(Series::new("E", SeriesKind::Trace, &t.radii, &t.e));
    if let Some(f) = &t.f {
        report.series.push(Series::new("F", SeriesKind::Trace, &t.radii, f));
    }
    if let Some(d) = &t.d {
        report.series.push(Series::new("D", SeriesKind::Trace, &t.radii, d));
    }
    Ok(Output { report, files: vec![field_path, trace_path, fb_path] })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConeFile {
    #[serde(default)]
    theta_e: f64,
    #[serde(default = "default_n_theta")]
    n_theta: usize,
}

fn default_n_theta() -> usize {
    256
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ArcNormalization {
    Mass,
    Slope,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcSpec {
    length: f64,
    normalization: Option<ArcNormalization>,
    c1: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeSpec {
    k: usize,
    c: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PerturbationFile {
    arc: Option<ArcSpec>,
    #[serde(default)]
    modes: Vec<ModeSpec>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, field: &'static str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::field(field, format!("{}: {e}", path.display())))
}

pub fn epi_check(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let cone_spec: ConeFile = read_json(cfg.cone.as_ref().expect("validated"), "cone")?;
    let pert: PerturbationFile = read_json(cfg.perturbation.as_ref().expect("validated"), "perturbation")?;
    if cone_spec.theta_e != 0.0 && pert.arc.is_some() {
        return Err(CliError::field("cone", "arc perturbations are centred on θ_e = 0"));
    }
    let n = cone_spec.n_theta;
    let cone = ConeDescription::half_plane(n, cone_spec.theta_e)?;
    let domain = ArcDomain::half_circle(cone_spec.theta_e);
    let arc = match &pert.arc {
        None => ArcPerturbation::mass_normalized(cone_spec.theta_e, PI)?,
        Some(a) => match (&a.normalization, a.c1) {
            (Some(ArcNormalization::Mass), None) => ArcPerturbation::mass_normalized(0.0, a.length)?,
            (Some(ArcNormalization::Slope), None) => ArcPerturbation::slope_normalized(0.0, a.length)?,
            (None, Some(c1)) => ArcPerturbation::new(0.0, a.length, c1)?,
            _ => return Err(CliError::field("perturbation", "give exactly one of `normalization` and `c1`")),
        },
    };
    let mut modes = Vec::new();
    let mut coeffs = Vec::new();
    let mut specs: Vec<&ModeSpec> = pert.modes.iter().collect();
    specs.sort_by_key(|m| m.k);
    for m in specs {
        modes.push(Mode { arc: 0, k: m.k, lambda: (m.k * m.k) as f64 });
        coeffs.push(m.c);
    }
    let z_plus = ModeExpansion::new(domain, modes, coeffs)?;
    let z1 = arc.sample(n)?;
    let inner = if pert.arc.is_some() {
        InnerCompetitor::Arc(ArcInnerCompetitor::new(arc, ArcInnerParams::default())?)
    } else {
        InnerCompetitor::Identity
    };
    let rhos = if z_plus.is_zero() { vec![1.0] } else { cfg.rho.clone().unwrap_or_else(|| vec![0.5]) };
    let gamma = cfg.gamma.unwrap_or(0.0);
    let eps_min = cfg.epsilon_min.unwrap_or(0.05);
    let zp = z_plus.synthesize(n);
    let z = SphericalFunction::new(z1.values.iter().zip(&zp.values).map(|(a, b)| a + b).collect())?;

    let mut report = RunReport::new("epi-check", cfg.seed);
    let mut margins = Vec::new();
    if !z_plus.is_zero() {
        if let Some(r) = outer_gain(&z_plus, None)?.ratio() {
            report.value("outer_ratio_no_cutoff", r);
        }
    }
    for rho in rhos {
        let h = assemble_competitor(z1.clone(), z_plus.clone(), inner.clone(), rho)?;
        let h = if h.arc.is_none() { h.with_arc(arc)? } else { h };
        let m = measure_epsilon(&h, &z, &cone, gamma)?;
        let key = |k: &str| format!("{k}@rho={rho}");
        report.value(&key("W_h"), m.energies.w_h);
        report.value(&key("W_rz"), m.energies.w_rz);
        report.value(&key("W_rz1"), m.energies.w_rz1);
        report.value(&key("W0_rz_plus"), m.energies.w0_rz_plus);
        report.value(&key("E_rz"), m.e_rz);
        report.value(&key("E_h"), m.e_h);
        report.value(&key("epsilon"), m.epsilon);
        report.value(&key("splitting_residual"), m.energies.splitting_residual());
        report.epsilon.push(EpsilonRow { label: format!("rho={rho}"), rho: Some(rho), e_rz: finite(m.e_rz), epsilon: finite(m.epsilon) });
        margins.push(m.epsilon - eps_min);
    }
    report.check(&VerificationReport::from_margins("epsilon_min", margins, 0.0).detail("epsilon_min", eps_min));
    Ok(Output { report, files: Vec::new() })
}

fn objective(name: &str) -> Result<Box<dyn Objective>, CliError> {
    if name == "arc" {
        return Ok(Box::new(arc_inner_objective(epilab::arc::KAPPA_SQ.sqrt())?));
    }
    let p = name
        .strip_prefix("model:")
        .and_then(|p| p.parse::<i64>().ok())
        .filter(|p| *p != 0)
        .ok_or_else(|| CliError::field("objective", format!("`{name}` is not `model:<p>` or `arc`")))?;
    let p32 = u32::try_from(p.unsigned_abs()).map_err(|_| CliError::field("objective", "p out of range"))?;
    Ok(Box::new(if p > 0 { PowerModel::new(p32) } else { PowerModel::negative(p32) }))
}

pub fn loja_flow(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let name = cfg.objective.as_deref().expect("validated");
    let obj = objective(name)?;
    let start = cfg.start.clone().expect("validated");
    if start.len() != obj.dim() {
        return Err(CliError::field("start", format!("expected {} components, got {}", obj.dim(), start.len())));
    }
    let mut report = RunReport::new("loja-flow", cfg.seed);
    report.tag("objective", name);
    let samples: Vec<Vec<f64>> = log_spaced(1e-3, 1.0, 30).iter().map(|l| start.iter().map(|x| l * x).collect()).collect();
    let fit = fit_lojasiewicz(obj.as_ref(), &samples).ok();
    if let Some(f) = &fit {
        report.value("beta_fit", f.beta);
        report.value("c_l", f.c_l);
        report.value("fit_r2", f.r2);
    }
    let beta = match cfg.beta.or(obj.beta()).or(fit.map(|f| f.beta)) {
        Some(b) => b,
        None => return Err(CliError::field("beta", "not known for this objective and could not be fitted")),
    };
    if !(beta > 0.0 && beta <= 0.5) {
        return Err(CliError::field("beta", format!("{beta} outside (0, 1/2]")));
    }
    report.value("beta", beta);
    let b = cfg.b.unwrap_or(0.5);
    let (profile, traj) = select_eta(obj.as_ref(), &start, b, beta)?;
    report.tag("case", format!("{:?}", profile.case));
    report.tag("termination", format!("{:?}", traj.termination));
    let c = cfg.c.unwrap_or_else(|| fit_decrease_constant(&[(profile, traj.clone())]));
    report.value("c", c);
    report.value("g0", profile.g0);
    report.value("eta0", profile.eval(0.0));
    if let Some(t1) = profile.t1 {
        report.value("t1", t1);
    }
    report.check(&verify_decrease(&profile, &traj, c));
    report.series.push(Series::new("G_flow", SeriesKind::Flow, &traj.times, &traj.values));
    let r: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    let drop: Vec<f64> = r.iter().map(|&x| traj.value_at(profile.eval(x)) - profile.g0).collect();
    report.series.push(Series::new("decrease", SeriesKind::Flow, &r, &drop));
    Ok(Output { report, files: Vec::new() })
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum ProfileSpec {
    RankOne(f64),
    Isotropic,
    Matrix([[f64; 2]; 2]),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    #[serde(default = "default_n_theta")]
    n: usize,
    profile: ProfileSpec,
    /// Each member is a list of `(k, cos coefficient, sin coefficient)`.
    members: Vec<Vec<(usize, f64, f64)>>,
}

pub fn obstacle_check(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let d = cfg.d.unwrap_or(2);
    if d != 2 {
        return Err(epilab::Error::Unsupported(format!("d = {d}: only the circle (d = 2) is implemented")).into());
    }
    let fam: FamilyFile = read_json(cfg.family.as_ref().expect("validated"), "family")?;
    let q = match fam.profile {
        ProfileSpec::RankOne(a) => QuadraticProfile::rank_one(a),
        ProfileSpec::Isotropic => QuadraticProfile::isotropic(),
        ProfileSpec::Matrix(a) => QuadraticProfile::new(a)?,
    };
    let phi = q.sphere(fam.n)?;
    let members: Vec<_> = fam.members.iter().map(|m| perturbed(&phi, m)).collect();
    let (loja, samples) = constrained_loja_check(&members, &phi, cfg.delta.unwrap_or(0.5), cfg.c_max.unwrap_or(100.0))?;
    let mut report = RunReport::new("obstacle-check", cfg.seed);
    report.check(&loja);
    let tol = cfg.tol.unwrap_or(1e-6);
    let corrected: Vec<f64> = samples.iter().map(|s| tol - s.bound.corrected_residual()).collect();
    report.check(&VerificationReport::from_margins("identity_corrected", corrected, 0.0));
    let bare = samples.iter().map(|s| s.bound.identity_residual()).fold(0.0, f64::max);
    report.value("identity_residual_stated_max", bare);
    for (k, v) in &loja.details {
        report.value(k, *v);
    }
    Ok(Output { report, files: Vec::new() })
}

pub fn aggregate(cfg: &ExperimentConfig, out: &Path) -> Result<Output, CliError> {
    let dir = cfg.reports.as_ref().expect("validated");
    let reports = crate::report::collect_reports(dir)?;
    let files = crate::report::emit_plot_data(&reports, out)?;
    let mut report = RunReport::new("report", cfg.seed);
    report.pass = reports.iter().all(|(_, r)| r.pass);
    report.value("reports", reports.len() as f64);
    Ok(Output { report, files })
}
