use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ubsim_core::analysis::aggregate;
use ubsim_core::config::{scenario_names, ScenarioConfig};
use ubsim_core::engine::{run_scenario, ScenarioResult};
use ubsim_core::firms::ExpectationMode;
use ubsim_core::io::{read_events, read_frames, write_aggregate, write_events, write_frames, write_residuals};
use ubsim_core::labour_market::{ExpiryMode, FiringRule};

const EXIT_USAGE: u8 = 2;
const EXIT_SFC: u8 = 3;

#[derive(Parser)]
#[command(name = "ubsim", version, about = "Run unemployment-benefit scenarios of the agent-based SFC economy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario or all nine and write CSV results.
    Run(RunArgs),
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Recompute aggregates from the per-replicate files of an earlier run.
    Metrics {
        #[arg(long = "in")]
        input: PathBuf,
        /// Override the burn-in recorded with the run.
        #[arg(long)]
        burn_in: Option<u32>,
        #[arg(long)]
        hp_lambda: Option<f64>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario name, or `all`.
    #[arg(long, default_value = "baseline")]
    scenario: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "UBSIM_OUT", default_value = "ubsim-out")]
    out: PathBuf,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    steps: Option<u32>,
    /// Worker threads for replicates (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// `key = value` file applied on top of each scenario preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// adaptive | as-written
    #[arg(long)]
    expectation_mode: Option<ExpectationMode>,
    /// calendar | spell
    #[arg(long)]
    expiry_mode: Option<ExpiryMode>,
    /// either | both
    #[arg(long)]
    firing_rule: Option<FiringRule>,
    /// Log consistency violations and keep going instead of aborting.
    #[arg(long)]
    sfc_warn: bool,
    /// Write every consistency residual of every step.
    #[arg(long)]
    consistency_report: bool,
    #[arg(long)]
    hp_lambda: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    scenario: String,
    /// Every scenario requested by the same invocation.
    scenarios: Vec<String>,
    config_hash: String,
    master_seed: u64,
    replacement_rate: f64,
    benefit_duration: u32,
    replicates: usize,
    steps: u32,
    version: String,
    started_at: String,
    finished_at: Option<String>,
    status: String,
    /// An earlier run in this directory had the same config hash and seed.
    reproduction: bool,
    flagged_steps: u32,
    errors: Vec<String>,
    outputs: Vec<String>,
}

fn version() -> String {
    let git = std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string());
    match git {
        Some(g) if !g.is_empty() => format!("v{}-{g}", env!("CARGO_PKG_VERSION")),
        _ => format!("v{}", env!("CARGO_PKG_VERSION")),
    }
}

fn hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn write_manifest(path: &Path, m: &Manifest) -> anyhow::Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_string_pretty(m)? + "\n")?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

/// Scenario configs for the run, or a usage error message.
fn configs(args: &RunArgs) -> Result<Vec<ScenarioConfig>, String> {
    let mut cfgs = if args.scenario == "all" {
        ScenarioConfig::all_presets()
    } else {
        vec![ScenarioConfig::preset(&args.scenario).map_err(|_| {
            format!(
                "unknown scenario `{}`; valid scenarios: {} (or `all`)",
                args.scenario,
                scenario_names().join(", ")
            )
        })?]
    };
    let text = match &args.config {
        Some(p) => Some(fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?),
        None => None,
    };
    for cfg in &mut cfgs {
        if let Some(t) = &text {
            cfg.apply_text(t).map_err(|e| e.to_string())?;
        }
        if let Some(s) = args.seed {
            cfg.seed = s;
        }
        if let Some(r) = args.replicates {
            cfg.replicates = r;
        }
        if let Some(t) = args.steps {
            cfg.steps = t;
            cfg.burn_in = cfg.burn_in.min(t.saturating_sub(1));
        }
        if let Some(m) = args.expectation_mode {
            cfg.expectation_mode = m;
        }
        if let Some(m) = args.expiry_mode {
            cfg.expiry_mode = m;
        }
        if let Some(r) = args.firing_rule {
            cfg.firing_rule = r;
        }
        if let Some(l) = args.hp_lambda {
            cfg.hp_lambda = l;
        }
        if args.sfc_warn {
            cfg.sfc_strict = false;
        }
        cfg.validate().map_err(|e| e.to_string())?;
    }
    Ok(cfgs)
}

fn write_outputs(dir: &Path, result: &ScenarioResult, residuals: bool) -> anyhow::Result<Vec<String>> {
    let mut outputs = Vec::new();
    let ts = dir.join("timeseries.csv");
    write_frames(create(&ts)?, &result.frames())?;
    outputs.push("timeseries.csv".to_string());
    if result.replicates.iter().any(|r| !r.frame.rows.is_empty()) {
        write_aggregate(create(&dir.join("aggregate.csv"))?, &result.aggregate()?)?;
        outputs.push("aggregate.csv".to_string());
    }
    for r in &result.replicates {
        let sub = format!("replicate_{:03}", r.replicate);
        fs::create_dir_all(dir.join(&sub))?;
        write_events(create(&dir.join(&sub).join("events.csv"))?, &r.events)?;
        outputs.push(format!("{sub}/events.csv"));
        if residuals {
            write_residuals(create(&dir.join(&sub).join("consistency.csv"))?, &r.residuals)?;
            outputs.push(format!("{sub}/consistency.csv"));
        }
    }
    Ok(outputs)
}

fn run(args: RunArgs) -> anyhow::Result<u8> {
    let cfgs = match configs(&args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return Ok(EXIT_USAGE);
        }
    };
    let names: Vec<String> = cfgs.iter().map(|c| c.name.clone()).collect();
    let version = version();
    let mut code = 0u8;
    for cfg in &cfgs {
        let dir = args.out.join(&cfg.name);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let text = cfg.emit();
        let config_hash = hash(&text);
        let manifest_path = dir.join("manifest.json");
        let reproduction = fs::read_to_string(&manifest_path)
            .ok()
            .and_then(|s| serde_json::from_str::<Manifest>(&s).ok())
            .is_some_and(|m| m.config_hash == config_hash && m.master_seed == cfg.seed);
        let mut manifest = Manifest {
            scenario: cfg.name.clone(),
            scenarios: names.clone(),
            config_hash,
            master_seed: cfg.seed,
            replacement_rate: cfg.replacement_rate,
            benefit_duration: cfg.benefit_duration,
            replicates: cfg.replicates,
            steps: cfg.steps,
            version: version.clone(),
            started_at: now(),
            finished_at: None,
            status: "running".into(),
            reproduction,
            flagged_steps: 0,
            errors: Vec::new(),
            outputs: vec!["config.txt".into()],
        };
        write_manifest(&manifest_path, &manifest)?;
        fs::write(dir.join("config.txt"), &text)?;

        eprintln!(
            "{}: {} replicates x {} steps (seed {})",
            cfg.name, cfg.replicates, cfg.steps, cfg.seed
        );
        let result = run_scenario(cfg, args.jobs, args.consistency_report)?;
        manifest.outputs.extend(write_outputs(&dir, &result, args.consistency_report)?);
        manifest.flagged_steps = result.replicates.iter().map(|r| r.flagged_steps).sum();
        manifest.errors = result
            .replicates
            .iter()
            .filter_map(|r| r.error.as_ref().map(|e| format!("replicate {}: {e}", r.replicate)))
            .collect();
        let abort = result.replicates.iter().find_map(|r| r.consistency_abort.clone());
        manifest.status = if let Some((step, label, residual)) = &abort {
            eprintln!("{}: stock-flow check failed at step {step}: {label} residual {residual:e}", cfg.name);
            code = code.max(EXIT_SFC);
            "sfc-abort".into()
        } else if result.is_partial() {
            for e in &manifest.errors {
                eprintln!("{}: {e}", cfg.name);
            }
            code = code.max(1);
            "partial".into()
        } else if manifest.flagged_steps > 0 {
            eprintln!(
                "{}: {} steps broke a stock-flow identity",
                cfg.name, manifest.flagged_steps
            );
            code = code.max(EXIT_SFC);
            "sfc-flagged".into()
        } else {
            "complete".into()
        };
        manifest.finished_at = Some(now());
        write_manifest(&manifest_path, &manifest)?;
    }
    Ok(code)
}

fn validate(path: &Path) -> anyhow::Result<u8> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match ScenarioConfig::parse(&text) {
        Ok(cfg) => {
            println!("{}: ok (scenario {}, hash {})", path.display(), cfg.name, hash(&cfg.emit()));
            Ok(0)
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            Ok(EXIT_USAGE)
        }
    }
}

/// Scenario directories under `root`, or `root` itself if it is one.
fn scenario_dirs(root: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if root.join("timeseries.csv").exists() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .with_context(|| format!("reading {}", root.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("timeseries.csv").exists())
        .collect();
    dirs.sort();
    Ok(dirs)
}

fn metrics(root: &Path, burn_in: Option<u32>, hp_lambda: Option<f64>) -> anyhow::Result<u8> {
    let dirs = scenario_dirs(root)?;
    if dirs.is_empty() {
        bail!("no scenario results under {}", root.display());
    }
    let mut code = 0;
    for dir in dirs {
        let cfg = match fs::read_to_string(dir.join("config.txt")) {
            Ok(t) => ScenarioConfig::parse(&t).with_context(|| format!("{}/config.txt", dir.display()))?,
            Err(_) => ScenarioConfig::default(),
        };
        let frames = read_frames(File::open(dir.join("timeseries.csv"))?, &cfg.name)?;
        if frames.is_empty() {
            bail!("{}: timeseries.csv has no rows", dir.display());
        }
        // The event logs must agree with the recorded match counts.
        let mut mismatches = 0usize;
        for f in &frames {
            let path = dir.join(format!("replicate_{:03}", f.replicate)).join("events.csv");
            let Ok(file) = File::open(&path) else { continue };
            let counts = read_events(file)?.counts_by_step();
            for row in &f.rows {
                let (h, fi, q) = counts.get(&row.step).copied().unwrap_or_default();
                let hires = row.get("hires").unwrap() + row.get("signal_hires").unwrap();
                let got = (hires, row.get("fires").unwrap(), row.get("quits").unwrap());
                if got != (h as f64, fi as f64, q as f64) {
                    mismatches += 1;
                }
            }
        }
        let rows = aggregate(
            &frames,
            burn_in.unwrap_or(cfg.burn_in),
            hp_lambda.unwrap_or(cfg.hp_lambda),
        )?;
        write_aggregate(create(&dir.join("aggregate.csv"))?, &rows)?;
        println!(
            "{}: {} replicates, {} aggregate rows, {} event/frame mismatches",
            dir.display(),
            frames.len(),
            rows.len(),
            mismatches
        );
        if mismatches > 0 {
            code = 1;
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Validate { config } => validate(&config),
        Command::Metrics {
            input,
            burn_in,
            hp_lambda,
        } => metrics(&input, burn_in, hp_lambda),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
