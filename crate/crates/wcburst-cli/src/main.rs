//! Command-line front end: regime classification, front speeds, singular
//! skeletons, simulations and the published figure runs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use wcburst::pde::{
    classify_pattern, figure_spec, modulation_run, save_record, simulate_with_threads, write_pgm, write_record_csv,
    FigureId, Overrides, PdeError, Recipe, SimConfig,
};
use wcburst::skeleton::{
    build_standing_burst_skeleton, build_traveling_burst_skeleton, burst_drift_margin, delta_alpha_star, jump_curves,
    medium_params, standing_integrals, traveling_conditions, traveling_front_speed, Direction, SkeletonError,
};
use wcburst::unfolding::{classify_diagram, fixed_points, hausdorff_gaps, DiagramKind, UnfoldingParams};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Mismatch(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Mismatch(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl From<PdeError> for CliError {
    fn from(e: PdeError) -> Self {
        match e {
            PdeError::InvalidConfig(_) | PdeError::Io(_) | PdeError::Json(_) => Self::Usage(e.to_string()),
            PdeError::NoStableRest | PdeError::NoFront | PdeError::Unfolding(_) => Self::Mismatch(e.to_string()),
            PdeError::StepRejected(_) | PdeError::BlowUp { .. } => Self::Numerical(e.to_string()),
        }
    }
}

impl From<SkeletonError> for CliError {
    fn from(e: SkeletonError) -> Self {
        match e {
            SkeletonError::Integration(_) | SkeletonError::ShootingDiverged { .. } => Self::Numerical(e.to_string()),
            _ => Self::Mismatch(format!("{e:?}: {e}")),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

#[derive(Parser)]
#[command(name = "wcburst", version, about = "Winged-cusp bursting waves: geometry, skeletons and simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the critical-manifold diagram and the homogeneous rest roots.
    Classify {
        #[command(flatten)]
        params: ParamArgs,
        /// Ultra-slow offset added to alpha.
        #[arg(long, default_value_t = 0.0)]
        z: f64,
    },
    /// Front speed at rest and the jump loci of the traveling burst.
    Shoot {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 21)]
        z_steps: usize,
        /// Upper end of the z table; defaults to a little past the merge level.
        #[arg(long)]
        z_max: Option<f64>,
    },
    /// Build a singular burst skeleton from a JSON config.
    Skeleton {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Integrate the reaction-diffusion system from a JSON config.
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Also export every frame as CSV.
        #[arg(long)]
        csv: bool,
    },
    /// Run a config and a copy with some of lambda, alpha, beta replaced.
    Modulate {
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Reproduce one of the published simulations.
    Figure {
        id: FigureId,
        /// Run only this panel.
        #[arg(long)]
        panel: Option<String>,
        /// Use the reduced cell count stored with each panel.
        #[arg(long, conflicts_with = "n")]
        ci: bool,
        #[command(flatten)]
        run: RunArgs,
        /// Write the frozen configuration instead of running it.
        #[arg(long)]
        dump_config: bool,
    },
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, allow_hyphen_values = true)]
    gamma: f64,
}

impl ParamArgs {
    fn params(&self) -> UnfoldingParams {
        UnfoldingParams::new(self.lambda, self.alpha, self.beta, self.gamma)
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the cell count.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

/// Skeleton request: parameters given directly or as pitchfork offsets.
#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
enum SkeletonConfig {
    Traveling {
        #[serde(flatten)]
        source: ParamSource,
        eps_us_tilde: f64,
    },
    Standing {
        #[serde(flatten)]
        source: ParamSource,
        delta_ul_tilde: f64,
        #[serde(default)]
        z_bar: f64,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ParamSource {
    Params { params: UnfoldingParams },
    Recipe { recipe: Recipe },
}

impl ParamSource {
    fn params(&self) -> Result<UnfoldingParams, CliError> {
        match self {
            Self::Params { params } => Ok(*params),
            Self::Recipe { recipe } => Ok(recipe.params().map_err(|e| CliError::Mismatch(e.to_string()))?.0),
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).map_err(|e| CliError::Usage(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

fn print_json(v: &impl Serialize) {
    let text = serde_json::to_string_pretty(v).expect("values serialize");
    // A closed pipe downstream is not an error of ours.
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn make_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn classify(p: &UnfoldingParams, z: f64) -> Result<Value, CliError> {
    let diagram = classify_diagram(p, z, None).map_err(|e| CliError::Mismatch(e.to_string()))?;
    let fp = fixed_points(p, z);
    let a = hausdorff_gaps(&p.with_z(z), fp.u_rest()).ok().map(|g| g.2);
    Ok(json!({
        "params": p,
        "z": z,
        "diagram": diagram,
        "fixed_points": fp,
        "rest_flags_hold": fp.flags_hold(),
        "a": a,
    }))
}

fn shoot(p: &UnfoldingParams, z_steps: usize, z_max: Option<f64>) -> Result<Value, CliError> {
    let (medium, u_rest) = medium_params(p);
    let speed = traveling_front_speed(&medium, 0.0, u_rest, Direction::Up)?;
    if (speed.closed_form - speed.shooting).abs() > 1e-6 {
        return Err(CliError::Numerical(format!(
            "shooting {} disagrees with the closed form {}",
            speed.shooting, speed.closed_form
        )));
    }
    let z_star = delta_alpha_star(p, u_rest);
    let z_hi = z_max.unwrap_or(z_star + 0.1 * (z_star - u_rest).abs());
    let rows: Vec<Value> = (0..z_steps.max(2))
        .map(|k| {
            let z = u_rest + (z_hi - u_rest) * k as f64 / (z_steps.max(2) - 1) as f64;
            match jump_curves(p, u_rest, z) {
                Ok(j) => json!({
                    "z": z,
                    "jumps": j,
                    "drift_margin": burst_drift_margin(p, u_rest, z).ok(),
                }),
                Err(e) => json!({ "z": z, "jumps": format!("{e:?}").split(' ').next().unwrap_or("error") }),
            }
        })
        .collect();
    Ok(json!({
        "params": p,
        "u_rest": u_rest,
        "c_star": { "closed_form": speed.closed_form, "shooting": speed.shooting },
        "delta_alpha_star": z_star,
        "jump_table": rows,
    }))
}

fn skeleton(config: &Path, out: &Path) -> Result<Value, CliError> {
    let cfg: SkeletonConfig = read_json(config)?;
    let (p, kind) = match &cfg {
        SkeletonConfig::Traveling { source, .. } => (source.params()?, "traveling"),
        SkeletonConfig::Standing { source, .. } => (source.params()?, "standing"),
    };
    let (medium, u_rest) = medium_params(&p);
    for (name, q) in [("params", &p), ("medium params", &medium)] {
        let d = classify_diagram(q, 0.0, None).map_err(|e| CliError::Mismatch(format!("{e:?}: {e}")))?;
        if d.class_id == DiagramKind::TranscriticalDegenerate {
            return Err(CliError::Mismatch(format!("TranscriticalDegenerate: {name} sit on the transition variety")));
        }
    }
    let (orbit, conditions) = match &cfg {
        SkeletonConfig::Traveling { eps_us_tilde, .. } => {
            let c = traveling_conditions(&medium)?;
            if !c.pass {
                let failed = if c.diagram != DiagramKind::MirroredHysteresis {
                    "diagram"
                } else if c.fixed_point_count != 3 {
                    "fixed_point_count"
                } else if !c.rest_inequalities.iter().all(|&b| b) {
                    "rest_inequalities"
                } else {
                    "gap_inequality"
                };
                return Err(CliError::Mismatch(format!("traveling precondition failed: {failed}")));
            }
            let orbit = build_traveling_burst_skeleton(&p, *eps_us_tilde)?;
            let z_star = delta_alpha_star(&p, u_rest);
            let margin = burst_drift_margin(&p, u_rest, 0.5 * (u_rest + z_star)).ok();
            (orbit, json!({ "traveling": c, "drift_margin_mid": margin }))
        }
        SkeletonConfig::Standing { delta_ul_tilde, z_bar, .. } => {
            let orbit = build_standing_burst_skeleton(&p, *delta_ul_tilde, *z_bar)?;
            let integrals = match standing_integrals(&p, u_rest + z_bar) {
                Ok(i) => json!(i),
                Err(e) => json!({ "error": format!("{e:?}") }),
            };
            (orbit, json!({ "standing_integrals": integrals }))
        }
    };
    let check = orbit.check(&p);
    if !check.ok() {
        return Err(CliError::Numerical(format!("orbit check failed: {check:?}")));
    }
    make_dir(out)?;
    orbit.save(out, "skeleton").map_err(|e| io_err(out, e))?;
    let summary = json!({
        "kind": kind,
        "params": p,
        "spike_count": orbit.spike_count,
        "closed": orbit.closed,
        "symmetric": orbit.symmetric,
        "c_star": orbit.c_star,
        "z_star": orbit.z_star,
        "check": check,
        "conditions": conditions,
    });
    write_json(&out.join("conditions.json"), &summary)?;
    Ok(summary)
}

/// Simulate, write record, heatmap and report under `dir/stem*`.
fn run_and_save(cfg: &SimConfig, threads: usize, dir: &Path, stem: &str, csv: bool) -> Result<Value, CliError> {
    let record = simulate_with_threads(cfg, threads)?;
    let report = classify_pattern(&record);
    make_dir(dir)?;
    save_record(&record, dir, stem)?;
    let pgm = dir.join(format!("{stem}.pgm"));
    write_pgm(&record, fs::File::create(&pgm).map_err(|e| io_err(&pgm, e))?).map_err(|e| io_err(&pgm, e))?;
    if csv {
        let path = dir.join(format!("{stem}.csv"));
        write_record_csv(&record, fs::File::create(&path).map_err(|e| io_err(&path, e))?).map_err(|e| io_err(&path, e))?;
    }
    write_json(&dir.join(format!("{stem}.report.json")), &report)?;
    Ok(json!({ "report": report, "solver_stats": record.solver_stats }))
}

fn with_n(mut cfg: SimConfig, n: Option<usize>) -> SimConfig {
    if let Some(n) = n {
        cfg.grid.n = n;
    }
    cfg
}

fn figure(id: FigureId, panel: Option<&str>, ci: bool, run: &RunArgs, dump: bool) -> Result<Value, CliError> {
    let spec = figure_spec(id).map_err(|e| CliError::Mismatch(e.to_string()))?;
    if dump {
        make_dir(&run.out)?;
        write_json(&run.out.join(format!("{}.json", id.name())), &spec)?;
        return Ok(serde_json::to_value(&spec).expect("spec serializes"));
    }
    let panels: Vec<_> = spec.panels.iter().filter(|p| panel.map_or(true, |l| p.label == l)).collect();
    if panels.is_empty() {
        return Err(CliError::Usage(format!("{} has no panel {panel:?}", id.name())));
    }
    let mut results = Vec::new();
    let mut mismatched = Vec::new();
    for p in panels {
        let n = if ci { Some(p.ci_n) } else { run.n };
        let cfg = with_n(p.config.clone(), n);
        let stem = format!("{}_{}", id.name(), p.label);
        let mut r = run_and_save(&cfg, run.threads, &run.out, &stem, false)?;
        let kind = serde_json::from_value(r["report"]["kind"].clone()).expect("report has a kind");
        let matched = p.expect.holds(kind);
        if !matched {
            mismatched.push(p.label.clone());
        }
        r["panel"] = json!(p.label);
        r["expect"] = json!(p.expect);
        r["matches"] = json!(matched);
        r["n"] = json!(cfg.grid.n);
        results.push(r);
    }
    let summary = json!({ "figure": id, "panels": results });
    write_json(&run.out.join(format!("{}.summary.json", id.name())), &summary)?;
    if mismatched.is_empty() {
        Ok(summary)
    } else {
        print_json(&summary);
        Err(CliError::Mismatch(format!("pattern mismatch in panels {mismatched:?}")))
    }
}

fn run(cli: Cli) -> Result<Value, CliError> {
    match cli.command {
        Command::Classify { params, z } => classify(&params.params(), z),
        Command::Shoot { params, z_steps, z_max } => shoot(&params.params(), z_steps, z_max),
        Command::Skeleton { config, out } => skeleton(&config, &out),
        Command::Simulate { config, run, csv } => {
            let cfg = with_n(read_json(&config)?, run.n);
            run_and_save(&cfg, run.threads, &run.out, "record", csv)
        }
        Command::Modulate { config, lambda, alpha, beta, run } => {
            let cfg = with_n(read_json(&config)?, run.n);
            let o = Overrides { lambda, alpha, beta };
            let (a, b) = modulation_run(&cfg, &o)?;
            make_dir(&run.out)?;
            write_json(&run.out.join("base.report.json"), &a)?;
            write_json(&run.out.join("modulated.report.json"), &b)?;
            Ok(json!({ "overrides": o, "base": a, "modulated": b }))
        }
        Command::Figure { id, panel, ci, run, dump_config } => figure(id, panel.as_deref(), ci, &run, dump_config),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(v) => {
            print_json(&v);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
