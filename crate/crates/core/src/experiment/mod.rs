//! Config-driven experiments that write a JSON report, CSV time series and
//! optional snapshots to an output directory.

mod config;
pub mod fuzz;
pub mod output;

use std::fs;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use config::{
    DispersiveSettings, ExperimentConfig, ExperimentKind, FuzzSettings, GridSpec, InitialData, ScanSettings,
    VirialSettings,
};

use crate::error::{Error, Result};
use crate::grid::snapshot::{load_snapshot_on, save_snapshot};
use crate::grid::{Field, Grid, RealField};
use crate::ground_state::{
    maximize_wv, pohozaev_extra_term, solve_free_ground_state, GroundStateResult, MaximizeOptions, RadialOptions,
    RadialProfile,
};
use crate::potentials::{admissibility, AdmissibilityReport, KatoQuadrature};
use crate::propagator::{
    dispersive_decay_probe, evolve, s_norm_proxy, scattering_extract, AbortInfo, Trajectory,
};
use crate::thresholds::{classify, compute_thresholds, GroundStateInput, ThresholdReport, Verdict};
use crate::virial::{defocusing_beta, radius_table, VirialProbe};

pub const REPORT_FILE: &str = "report.json";
pub const TIMESERIES_FILE: &str = "timeseries.csv";

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub experiment: ExperimentKind,
    pub library_version: String,
    /// SHA-256 of the effective configuration (after overrides) as JSON,
    /// with `output_dir` left out.
    pub config_sha256: String,
    /// Seconds since the Unix epoch; the only field that differs between reruns.
    pub timestamp: u64,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub admissibility: AdmissibilityReport,
    pub results: Value,
    /// Files written next to the report, relative to the output directory.
    pub artifacts: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub output_dir: PathBuf,
    pub report: Report,
}

pub fn config_sha256(cfg: &ExperimentConfig) -> String {
    let mut cfg = cfg.clone();
    cfg.output_dir = PathBuf::new();
    let bytes = serde_json::to_vec(&cfg).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("result serializes")
}

/// Shared state of one run: the grid, the sampled potential and lazily
/// computed ground states.
struct Context<'a> {
    cfg: &'a ExperimentConfig,
    grid: Grid,
    v: RealField,
    out: PathBuf,
    artifacts: Vec<String>,
    radial: Option<RadialProfile>,
    perturbed: Option<GroundStateResult>,
}

impl Context<'_> {
    fn radial(&mut self) -> Result<&RadialProfile> {
        if self.radial.is_none() {
            self.radial = Some(RadialProfile::solve(&RadialOptions::default())?);
        }
        Ok(self.radial.as_ref().unwrap())
    }

    fn perturbed(&mut self) -> Result<&GroundStateResult> {
        if self.perturbed.is_none() {
            let gs = maximize_wv(&self.cfg.potential, &self.grid, None, &MaximizeOptions::default())?;
            self.perturbed = Some(gs);
        }
        Ok(self.perturbed.as_ref().unwrap())
    }

    fn attractive(&self) -> bool {
        self.cfg.potential.has_negative_part()
    }

    fn thresholds(&mut self) -> Result<ThresholdReport> {
        let spec = self.cfg.potential.clone();
        if self.attractive() {
            compute_thresholds(&spec, GroundStateInput::Perturbed(self.perturbed()?))
        } else {
            compute_thresholds(&spec, GroundStateInput::Free(self.radial()?))
        }
    }

    /// The ground state behind the thresholds, sampled on the grid. `center`
    /// only moves the free `Q`; the maximizer stays where it was found.
    fn ground_state_field(&mut self, center: [f64; 3]) -> Result<Field> {
        if self.attractive() {
            Ok(self.perturbed()?.profile.clone())
        } else {
            let grid = self.grid.clone();
            Ok(self.radial()?.on_grid(&grid, center, 1.0))
        }
    }

    fn initial_field(&mut self) -> Result<Field> {
        let data = self
            .cfg
            .initial_data
            .clone()
            .ok_or_else(|| Error::InvalidConfig(vec!["initial_data: missing".into()]))?;
        match data {
            InitialData::ScaledGroundState { lambda, center } => {
                Ok(self.ground_state_field(center)?.scaled(Complex64::new(lambda, 0.0)))
            }
            InitialData::Gaussian {
                amplitude,
                width,
                center,
                boost,
            } => Ok(Field::from_fn(&self.grid, |x| {
                let d = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
                let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                Complex64::from_polar(
                    amplitude * (-r2 / (width * width)).exp(),
                    boost[0] * x[0] + boost[1] * x[1] + boost[2] * x[2],
                )
            })),
            InitialData::FromSnapshot { path } => load_snapshot_on(&self.cfg.resolve(&path), &self.grid),
        }
    }

    fn file(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_string());
        self.out.join(name)
    }

    fn snapshot(&mut self, name: &str, field: &Field) -> Result<()> {
        if self.cfg.save_snapshots {
            let path = self.file(name);
            save_snapshot(field, &path)?;
        }
        Ok(())
    }

    fn timeseries(&mut self, name: &str, traj: &Trajectory) -> Result<()> {
        let path = self.file(name);
        output::write_text(&path, &output::timeseries_csv(traj))
    }

    fn probes(&self) -> Result<Vec<VirialProbe>> {
        self.cfg
            .virial
            .radii
            .iter()
            .map(|&r| VirialProbe::new(&self.grid, r, &self.cfg.potential, self.cfg.evolution.sigma as f64))
            .collect()
    }
}

/// Runs the configured experiment and writes its artifacts. A numerical
/// abort of a run that the experiment depends on still writes the report and
/// time series, then returns [`Error::Abort`].
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let grid = cfg.grid.build()?;
    let quad = KatoQuadrature::default();
    let adm = admissibility(&cfg.potential, &quad)?;
    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let mut ctx = Context {
        cfg,
        v: cfg.potential.evaluate(&grid),
        grid,
        out: out.clone(),
        artifacts: Vec::new(),
        radial: None,
        perturbed: None,
    };
    let (results, abort) = match cfg.experiment {
        ExperimentKind::GroundState => (ground_state(&mut ctx)?, None),
        ExperimentKind::Thresholds => (thresholds(&mut ctx)?, None),
        ExperimentKind::Evolve => evolve_experiment(&mut ctx)?,
        ExperimentKind::DichotomyScan => (dichotomy_scan(&mut ctx)?, None),
        ExperimentKind::VirialCheck => virial_check(&mut ctx)?,
        ExperimentKind::DispersiveCheck => dispersive_check(&mut ctx)?,
        ExperimentKind::DefocusingEvolve => defocusing(&mut ctx, &adm)?,
        ExperimentKind::InequalityFuzz => (inequality_fuzz(&mut ctx, &adm, &quad)?, None),
    };
    let report_path = ctx.file(REPORT_FILE);
    let report = Report {
        experiment: cfg.experiment,
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config_sha256(cfg),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        seed: cfg.seed,
        config: cfg.clone(),
        admissibility: adm,
        results,
        artifacts: ctx.artifacts.clone(),
    };
    output::write_json(&report_path, &report)?;
    match abort {
        Some(a) => Err(a.into()),
        None => Ok(RunOutput { output_dir: out, report }),
    }
}

fn ground_state(ctx: &mut Context) -> Result<Value> {
    let free_wv = ctx.radial()?.l4_fourth / (ctx.radial()?.mass.sqrt() * ctx.radial()?.grad_sq.powf(1.5));
    if ctx.attractive() {
        let spec = ctx.cfg.potential.clone();
        let gs = ctx.perturbed()?.clone();
        let extra = pohozaev_extra_term(&gs.profile, gs.omega, &spec)?;
        let thresholds = ctx.thresholds()?;
        ctx.snapshot("ground_state.nlsf", &gs.profile)?;
        Ok(json!({
            "source": "perturbed",
            "maximizer": to_value(&gs),
            "potential_term": to_value(&extra),
            "free_wv": free_wv,
            "exceeds_free": gs.wv_value > free_wv,
            "thresholds": to_value(&thresholds),
        }))
    } else {
        let (q, gs) = solve_free_ground_state(&ctx.grid, &RadialOptions::default())?;
        let (r1, r2) = q.pohozaev_ratios();
        let thresholds = ctx.thresholds()?;
        ctx.snapshot("ground_state.nlsf", &gs.profile)?;
        Ok(json!({
            "source": "free",
            "radial": {
                "q0": q.q0,
                "mass": q.mass,
                "grad_sq": q.grad_sq,
                "l4_fourth": q.l4_fourth,
                "grad_over_mass": r1,
                "l4_over_mass": r2,
                "r_match": q.r_match,
                "tail_coefficient": q.tail_coefficient,
                "bisection_steps": q.bisection_steps,
            },
            "on_grid": to_value(&gs),
            "free_wv": free_wv,
            "thresholds": to_value(&thresholds),
        }))
    }
}

fn thresholds(ctx: &mut Context) -> Result<Value> {
    let report = ctx.thresholds()?;
    let classification = match ctx.cfg.initial_data {
        Some(_) => {
            let u0 = ctx.initial_field()?;
            Some(classify(&u0, &ctx.v, &report)?)
        }
        None => None,
    };
    Ok(json!({
        "thresholds": to_value(&report),
        "classification": to_value(&classification),
    }))
}

/// Whether `g(t)` stayed strictly on the side of `α` given by the verdict.
fn side_kept(traj: &Trajectory, verdict: Verdict, alpha: f64) -> Option<bool> {
    match verdict {
        Verdict::BelowGlobal => Some(traj.diagnostics.iter().all(|d| d.g < alpha)),
        Verdict::AboveLine => Some(traj.diagnostics.iter().all(|d| d.g > alpha)),
        Verdict::Indeterminate => None,
    }
}

fn trajectory_summary(traj: &Trajectory) -> Value {
    let (mass_drift, energy_drift) = traj.drifts();
    let first = traj.diagnostics.first();
    let last = traj.diagnostics.last();
    json!({
        "frames": traj.diagnostics.len(),
        "t_final": last.map(|d| d.t),
        "mass_drift": mass_drift,
        "energy_drift": energy_drift,
        "energy_initial": first.map(|d| d.energy),
        "l4_initial": first.map(|d| d.l4),
        "l4_final": last.map(|d| d.l4),
        "wraparound_limit": traj.wraparound_limit,
        "s_norm_proxy": to_value(&s_norm_proxy(traj, None)),
        "abort": to_value(&traj.abort),
    })
}

fn evolve_experiment(ctx: &mut Context) -> Result<(Value, Option<AbortInfo>)> {
    let u0 = ctx.initial_field()?;
    let classification = if ctx.cfg.evolution.sigma == 1 {
        let report = ctx.thresholds()?;
        Some((report, classify(&u0, &ctx.v, &report)?))
    } else {
        None
    };
    let probes = ctx.probes()?;
    let traj = evolve(&u0, &ctx.v, &ctx.cfg.evolution, &probes)?;
    ctx.timeseries(TIMESERIES_FILE, &traj)?;
    ctx.snapshot("initial.nlsf", &u0)?;
    ctx.snapshot("final.nlsf", &traj.final_state)?;
    let scattering = if ctx.cfg.evolution.keep_frames {
        let s = scattering_extract(&traj, &ctx.v)?;
        Some(json!({ "times": s.times, "cauchy_increments": s.cauchy_increments, "l4": s.l4 }))
    } else {
        None
    };
    let mut results = json!({
        "trajectory": trajectory_summary(&traj),
        "scattering": scattering,
        "virial": traj.virial.iter().map(|s| json!({
            "radius": s.radius,
            "fd_mismatch": s.fd_mismatch(),
        })).collect::<Vec<_>>(),
    });
    if let Some((report, c)) = classification {
        results["thresholds"] = to_value(&report);
        results["classification"] = to_value(&c);
        results["side_kept"] = to_value(&side_kept(&traj, c.verdict, report.alpha));
    }
    Ok((results, traj.abort.clone()))
}

fn dichotomy_scan(ctx: &mut Context) -> Result<Value> {
    let report = ctx.thresholds()?;
    let base = ctx.ground_state_field([0.0; 3])?;
    let mut rows = Vec::new();
    for (i, &lambda) in ctx.cfg.scan.lambdas.clone().iter().enumerate() {
        let u0 = base.scaled(Complex64::new(lambda, 0.0));
        let c = classify(&u0, &ctx.v, &report)?;
        let mut row = json!({
            "lambda": lambda,
            "classification": to_value(&c),
            "mass_energy_over_me": c.mass_energy / report.me,
            "g0_over_alpha": c.g0 / report.alpha,
        });
        if ctx.cfg.scan.evolve {
            let traj = evolve(&u0, &ctx.v, &ctx.cfg.evolution, &[])?;
            ctx.timeseries(&format!("scan_{i}.csv"), &traj)?;
            let g: Vec<f64> = traj.diagnostics.iter().map(|d| d.g / report.alpha).collect();
            row["side_kept"] = to_value(&side_kept(&traj, c.verdict, report.alpha));
            row["g_over_alpha_range"] = json!([
                g.iter().cloned().fold(f64::INFINITY, f64::min),
                g.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            ]);
            row["trajectory"] = trajectory_summary(&traj);
        }
        rows.push(row);
    }
    Ok(json!({ "thresholds": to_value(&report), "scan": rows }))
}

fn virial_check(ctx: &mut Context) -> Result<(Value, Option<AbortInfo>)> {
    let u0 = ctx.initial_field()?;
    let alpha = if ctx.cfg.evolution.sigma == 1 {
        Some(ctx.thresholds()?.alpha)
    } else {
        None
    };
    let probes = ctx.probes()?;
    let traj = evolve(&u0, &ctx.v, &ctx.cfg.evolution, &probes)?;
    ctx.timeseries(TIMESERIES_FILE, &traj)?;
    let table = radius_table(&traj.virial);
    let rows: Vec<Value> = traj
        .virial
        .iter()
        .zip(&table)
        .map(|(s, row)| {
            let (rel1, rel2) = s.fd_mismatch();
            let max_dz = s.dz_analytic.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            json!({
                "radius": s.radius,
                "fd_mismatch_first": rel1,
                "fd_mismatch_second": rel2,
                "c0": row.c0,
                "max_remainder": row.max_remainder,
                "max_abs_dz": max_dz,
                "dz_bound": alpha.map(|a| s.radius * a),
            })
        })
        .collect();
    Ok((
        json!({ "alpha": alpha, "radii": rows, "trajectory": trajectory_summary(&traj) }),
        traj.abort.clone(),
    ))
}

fn dispersive_check(ctx: &mut Context) -> Result<(Value, Option<AbortInfo>)> {
    let u0 = ctx.initial_field()?;
    let traj = evolve(&u0, &ctx.v, &ctx.cfg.evolution, &[])?;
    ctx.timeseries(TIMESERIES_FILE, &traj)?;
    let window = ctx.cfg.dispersive.window.unwrap_or_else(|| {
        let end = traj.wraparound_limit.min(ctx.cfg.evolution.t_end);
        [end / 10.0, end]
    });
    let fit = dispersive_decay_probe(&traj, window)?;
    Ok((
        json!({ "fit": to_value(&fit), "trajectory": trajectory_summary(&traj) }),
        traj.abort.clone(),
    ))
}

fn defocusing(ctx: &mut Context, adm: &AdmissibilityReport) -> Result<(Value, Option<AbortInfo>)> {
    let beta = defocusing_beta(adm).ok();
    let u0 = ctx.initial_field()?;
    let probes = ctx.probes()?;
    let traj = evolve(&u0, &ctx.v, &ctx.cfg.evolution, &probes)?;
    ctx.timeseries(TIMESERIES_FILE, &traj)?;
    ctx.snapshot("initial.nlsf", &u0)?;
    ctx.snapshot("final.nlsf", &traj.final_state)?;
    let l4: Vec<f64> = traj.diagnostics.iter().map(|d| d.l4).collect();
    let decreasing = l4.windows(2).all(|w| w[1] < w[0]);
    Ok((
        json!({
            "beta": beta,
            "l4_decreasing": decreasing,
            "trajectory": trajectory_summary(&traj),
        }),
        traj.abort.clone(),
    ))
}

fn inequality_fuzz(ctx: &mut Context, adm: &AdmissibilityReport, quad: &KatoQuadrature) -> Result<Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let fixed = if ctx.cfg.potential.is_zero() {
        None
    } else if adm.passes_small_negative {
        Some((&ctx.cfg.potential, adm))
    } else {
        return Err(Error::NotAdmissible(format!(
            "||V_-||_K = {} is not below 4π; the sandwich bound does not apply",
            adm.kato_norm_negative
        )));
    };
    let tally = fuzz::run_fuzz(&ctx.grid, fixed, ctx.cfg.fuzz.trials, quad, &mut rng)?;
    Ok(json!({
        "potentials": if fixed.is_some() { "configured" } else { "random_radial" },
        "tally": to_value(&tally),
        "violations": tally.violations(),
    }))
}
