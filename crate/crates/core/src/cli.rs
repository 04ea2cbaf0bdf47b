//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::Error;
use crate::geometry::{
    chebyshev_taper, steered_taper, uniform_weights, AngleGrid, ArrayGeometry, GeometryConfig, WeightVector,
};
use crate::io;
use crate::mc::{self, McConfig};
use crate::response::{self, magnitude_db, power_db, PatternEvaluator};
use crate::robust_control::{self, ControlRequest};
use crate::synthesis::{self, MaskSpec, SynthesisProblem};
use crate::uncertainty::UncertaintyBound;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_NONCONVERGED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "robust-sidelobe", version, about = "Robust sidelobe control and synthesis for sensor arrays")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Drive the worst-case upper response at one angle to a desired level.
    Control {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        theta_k: f64,
        #[arg(long, allow_hyphen_values = true)]
        vd_db: f64,
    },
    /// Iterative synthesis against a sidelobe mask.
    Synthesize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long, default_value_t = synthesis::DEFAULT_MAX_ITERS)]
        max_iters: usize,
        #[arg(long, default_value_t = synthesis::DEFAULT_D_TOL_DB, allow_hyphen_values = true)]
        d_tol: f64,
    },
    /// Write the nominal and worst-case patterns of a weight vector.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        weights: PathBuf,
    },
    /// Monte-Carlo check of the worst-case bounds for a weight vector.
    McVerify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Mask whose sidelobe angles are checked against realised patterns.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Write V_b of the first N trials to vb_trials.csv.
        #[arg(long, default_value_t = 0)]
        keep_trials: usize,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Geometry JSON file, `ula:N[:SPACING]` or `arc:N:SPACING:SPAN_DEG`.
    #[arg(long)]
    pub geometry: String,
    /// Uncertainty JSON file, or `constant:EPS`. Defaults to no uncertainty.
    #[arg(long)]
    pub uncertainty: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: f64,
    #[arg(long, default_value_t = 0.1)]
    pub grid_step: f64,
    /// `uniform`, `chebyshev:DB` or `file:PATH`.
    #[arg(long, default_value = "uniform")]
    pub init: String,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Failure carrying its exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            kind: "config",
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numeric_infeasibility() {
            Self {
                code: EXIT_INFEASIBLE,
                kind: "infeasible",
                message: e.to_string(),
            }
        } else {
            CliError::config(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn load_geometry(spec: &str) -> CliResult<ArrayGeometry> {
    if let Some(rest) = spec.strip_prefix("ula:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let n: usize = parts[0]
            .parse()
            .map_err(|_| CliError::config(format!("bad element count in `{spec}`")))?;
        let d: f64 = match parts.get(1) {
            Some(s) => s
                .parse()
                .map_err(|_| CliError::config(format!("bad spacing in `{spec}`")))?,
            None => 0.5,
        };
        return Ok(ArrayGeometry::ula(n, d)?);
    }
    if let Some(rest) = spec.strip_prefix("arc:") {
        let parts: Vec<f64> = rest
            .split(':')
            .map(|x| x.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| CliError::config(format!("bad arc shorthand `{spec}`")))?;
        let [n, d, span] = parts[..] else {
            return Err(CliError::config(format!("expected arc:N:SPACING:SPAN_DEG, got `{spec}`")));
        };
        if n.fract() != 0.0 || n < 0.0 {
            return Err(CliError::config(format!("bad element count in `{spec}`")));
        }
        return Ok(ArrayGeometry::circular_arc(n as usize, d, span)?);
    }
    let cfg: GeometryConfig = io::read_json(Path::new(spec))?;
    Ok(cfg.build()?)
}

pub fn load_uncertainty(spec: Option<&str>, geom: &ArrayGeometry) -> CliResult<UncertaintyBound> {
    let bound = match spec {
        None => UncertaintyBound::constant(0.0),
        Some(s) => match s.strip_prefix("constant:") {
            Some(v) => UncertaintyBound::constant(
                v.parse()
                    .map_err(|_| CliError::config(format!("bad epsilon in `{s}`")))?,
            ),
            None => io::read_json(Path::new(s))?,
        },
    };
    bound.validate(geom)?;
    Ok(bound)
}

pub fn initial_weights(spec: &str, geom: &ArrayGeometry, theta0: f64) -> CliResult<WeightVector> {
    if spec == "uniform" {
        return Ok(uniform_weights(geom, theta0)?);
    }
    if let Some(db) = spec.strip_prefix("chebyshev:") {
        let db: f64 = db
            .parse()
            .map_err(|_| CliError::config(format!("bad attenuation in `{spec}`")))?;
        let taper = chebyshev_taper(geom.len(), db)?;
        return Ok(steered_taper(geom, &taper, theta0)?);
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let w = io::read_weights(Path::new(path))?;
        w.check_len(geom)?;
        return Ok(w);
    }
    Err(CliError::config(format!("unknown --init `{spec}`")))
}

struct Setup {
    geom: ArrayGeometry,
    bound: UncertaintyBound,
    grid: AngleGrid,
    theta0: f64,
}

fn setup(c: &Common) -> CliResult<Setup> {
    let geom = load_geometry(&c.geometry)?;
    let bound = load_uncertainty(c.uncertainty.as_deref(), &geom)?;
    let grid = AngleGrid::new(c.grid_step, c.theta0)?;
    fs::create_dir_all(&c.out)
        .map_err(|e| CliError::config(format!("cannot create {}: {e}", c.out.display())))?;
    Ok(Setup {
        theta0: c.theta0,
        geom,
        bound,
        grid,
    })
}

fn write_pattern(path: &Path, s: &Setup, w: &WeightVector) -> CliResult<response::BoundedResponse> {
    let eps = s.bound.eval_grid(&s.geom, &s.grid)?;
    let pattern = PatternEvaluator::new(&s.geom, &s.grid, eps)?.evaluate(w.as_slice())?;
    let mut buf = Vec::new();
    pattern
        .write_csv(&mut buf)
        .map_err(|e| CliError::config(e.to_string()))?;
    io::write_text(path, &String::from_utf8_lossy(&buf))?;
    Ok(pattern)
}

fn load_weights_for(path: &Path, geom: &ArrayGeometry) -> CliResult<WeightVector> {
    let w = io::read_weights(path)?;
    w.check_len(geom)?;
    Ok(w)
}

fn cmd_control(c: &Common, theta_k: f64, vd_db: f64) -> CliResult<i32> {
    let s = setup(c)?;
    let w0 = initial_weights(&c.init, &s.geom, s.theta0)?;
    let eps0 = s.bound.eval(&s.geom, s.theta0)?;
    let epsk = s.bound.eval(&s.geom, theta_k)?;
    let v_d = response::db_to_magnitude(vd_db);
    let floor = robust_control::chi(&s.geom, s.theta0, eps0, epsk)?;
    if v_d < floor {
        return Err(CliError {
            code: EXIT_INFEASIBLE,
            kind: "unreachable",
            message: format!(
                "desired level {vd_db:.4} dB is below the weight-independent floor chi = {:.4} dB",
                magnitude_db(floor)
            ),
        });
    }
    let req = ControlRequest {
        theta0: s.theta0,
        theta_k,
        v_d,
        eps0,
        epsk,
        w_prev: w0,
    };
    let min_vd = robust_control::min_vd(&req, &s.geom).ok();
    let out = robust_control::control_point(&req, &s.geom)?;
    io::write_weights(&c.out.join("weights.json"), &out.weights)?;
    write_pattern(&c.out.join("pattern.csv"), &s, &out.weights)?;
    let wng = response::wng(&out.weights, &s.geom, s.theta0)?;
    let summary = json!({
        "command": "control",
        "status": "ok",
        "theta0_deg": s.theta0,
        "theta_k_deg": theta_k,
        "v_d_db": vd_db,
        "rho_db": power_db(out.rho_a),
        "beta": [out.beta.re, out.beta.im],
        "beta_abs": out.beta.norm(),
        "beta_arg_rad": out.beta.arg(),
        "v_u_theta_k_db": magnitude_db(out.v_u),
        "wng": wng,
        "wng_db": power_db(wng),
        "feasible": response::feasibility(&out.weights, &s.geom, s.theta0, eps0)?,
        "eps_theta0": eps0,
        "eps_theta_k": epsk,
        "min_vd_db": min_vd.map(magnitude_db),
        "chi_db": magnitude_db(floor),
    });
    io::write_json(&c.out.join("summary.json"), &summary)?;
    Ok(EXIT_OK)
}

fn cmd_synthesize(c: &Common, mask: &Path, max_iters: usize, d_tol: f64) -> CliResult<i32> {
    let s = setup(c)?;
    let mask: MaskSpec = io::read_json(mask)?;
    mask.validate()?;
    let w0 = initial_weights(&c.init, &s.geom, s.theta0)?;
    let mut problem = SynthesisProblem::new(s.geom.clone(), s.grid.clone(), mask, s.bound.clone(), w0);
    problem.theta0 = s.theta0;
    problem.max_iters = max_iters;
    problem.d_tol = d_tol;
    let r = synthesis::synthesize(&problem)?;

    io::write_weights(&c.out.join("weights.json"), &r.weights)?;
    let mut buf = Vec::new();
    r.trace
        .write_csv(&mut buf)
        .map_err(|e| CliError::config(e.to_string()))?;
    io::write_text(&c.out.join("trace.csv"), &String::from_utf8_lossy(&buf))?;
    write_pattern(&c.out.join("pattern.csv"), &s, &r.weights)?;
    let failures: Vec<_> = r
        .trace
        .failures
        .iter()
        .map(|f| json!({"k": f.k, "theta_k_deg": f.theta_k, "error": f.error.to_string()}))
        .collect();
    let summary = json!({
        "command": "synthesize",
        "status": if r.converged { "converged" } else { "nonconverged" },
        "converged": r.converged,
        "iterations": r.trace.records.len() + r.trace.failures.len(),
        "initial_d_db": finite_or_null(r.trace.initial_d_db),
        "final_d_db": finite_or_null(r.final_d_db),
        "d_tol_db": d_tol,
        "mainlobe_deg": [r.mainlobe.0, r.mainlobe.1],
        "wng": response::wng(&r.weights, &s.geom, s.theta0)?,
        "failures": failures,
        "warnings": r.trace.warnings,
    });
    io::write_json(&c.out.join("summary.json"), &summary)?;
    Ok(if r.converged { EXIT_OK } else { EXIT_NONCONVERGED })
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

fn cmd_bounds(c: &Common, weights: &Path) -> CliResult<i32> {
    let s = setup(c)?;
    let w = load_weights_for(weights, &s.geom)?;
    write_pattern(&c.out.join("pattern.csv"), &s, &w)?;
    Ok(EXIT_OK)
}

fn cmd_mc_verify(c: &Common, weights: &Path, trials: usize, mask: Option<&Path>, keep: usize) -> CliResult<i32> {
    let s = setup(c)?;
    let w = load_weights_for(weights, &s.geom)?;
    let mut cfg = McConfig::new(trials, c.seed);
    cfg.keep_trials = keep;
    if let Some(m) = mask {
        let spec: MaskSpec = io::read_json(m)?;
        let mainlobe = match spec.mainlobe {
            Some([a, b]) => (a, b),
            None => {
                let eps = vec![0.0; s.grid.len()];
                let va = PatternEvaluator::new(&s.geom, &s.grid, eps)?.nominal(w.as_slice())?;
                synthesis::detect_mainlobe(&va, &s.grid)
            }
        };
        let levels = spec.levels(&s.grid, mainlobe)?;
        let angles = s.grid.angles();
        cfg.mask = Some(
            levels
                .iter()
                .zip(angles)
                .map(|(l, t)| if *t >= mainlobe.0 - 1e-9 && *t <= mainlobe.1 + 1e-9 { f64::INFINITY } else { *l })
                .collect(),
        );
    }
    let report = mc::verify_bounds(&w, &s.geom, &s.grid, &s.bound, &cfg)?;
    io::write_json(&c.out.join("mc_report.json"), &report_json(&report))?;
    if keep > 0 {
        let mut text = String::from("theta_deg");
        for t in 0..report.kept_v_b.len() {
            text.push_str(&format!(",trial_{t}_db"));
        }
        text.push('\n');
        for (i, th) in s.grid.angles().iter().enumerate() {
            text.push_str(&format!("{th:.4}"));
            for v in &report.kept_v_b {
                text.push_str(&format!(",{:.8}", magnitude_db(v[i])));
            }
            text.push('\n');
        }
        io::write_text(&c.out.join("vb_trials.csv"), &text)?;
    }
    Ok(EXIT_OK)
}

fn report_json(r: &mc::McReport) -> serde_json::Value {
    json!({
        "kind": r.kind,
        "trials": r.trials,
        "seed": r.seed,
        "containment_violations": r.containment_violations,
        "mask_violations": r.mask_violations,
        "max_sidelobe_excess_db": finite_or_null(r.max_sidelobe_excess_db),
        "per_trial_max_excess_db": r.per_trial_max_excess_db.iter().map(|x| finite_or_null(*x)).collect::<Vec<_>>(),
        "max_delta_ratio": r.max_delta_ratio,
    })
}

fn out_dir(cmd: &Command) -> &Path {
    match cmd {
        Command::Control { common, .. }
        | Command::Synthesize { common, .. }
        | Command::Bounds { common, .. }
        | Command::McVerify { common, .. } => &common.out,
    }
}

/// Runs one command and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Control { common, theta_k, vd_db } => cmd_control(common, *theta_k, *vd_db),
        Command::Synthesize {
            common,
            mask,
            max_iters,
            d_tol,
        } => cmd_synthesize(common, mask, *max_iters, *d_tol),
        Command::Bounds { common, weights } => cmd_bounds(common, weights),
        Command::McVerify {
            common,
            weights,
            trials,
            mask,
            keep_trials,
        } => cmd_mc_verify(common, weights, *trials, mask.as_deref(), *keep_trials),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind, e.message);
            let dir = out_dir(&cli.command);
            if e.code == EXIT_INFEASIBLE && dir.is_dir() {
                let summary = json!({"status": "error", "code": e.code, "kind": e.kind, "message": e.message});
                let _ = io::write_json(&dir.join("summary.json"), &summary);
            }
            e.code
        }
    }
}
