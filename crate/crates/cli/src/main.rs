//! `scaleup` — hidden-population size estimation from network reports.
//!
//! Subcommands: `simulate` (synthetic-population experiment grid),
//! `estimate` (point estimates from survey files), `bootstrap`
//! (replicate-based confidence intervals), `sensitivity` (scenario
//! grids over an existing estimate), and `check` (empirical diagnostics).
//!
//! Every run prints its resolved configuration, including the seed, as a
//! JSON line on stdout; artifacts go to `--out`. Exit codes: 0 success,
//! 2 invalid input, 1 internal error.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use scaleup_core::data::{
    load_estimate, load_frame_survey, load_hidden_survey, load_registry, save_estimate,
    survey_digest, Estimate, FrameSurvey, HiddenSurvey, Interval, KnownPopulationRegistry,
};
use scaleup_core::estimators::{
    self, adjusted_scaleup, basic_scaleup, generalized_scaleup, weight_scale_ratio,
    AdjustedVariant, AdjustmentFactors, BasicVariant, EstimatorError,
};
use scaleup_core::harness::{run_grid, write_grid_csv, CellKnobs, GridSpec, ProbeMode, ProbeSpec};
use scaleup_core::netsim::{generate_population, SimConfig};
use scaleup_core::sensitivity::{adjust_generalized, adjust_modified_basic, SensitivityScenario};
use scaleup_core::variance::{
    bootstrap_estimate, killworth_degree_sum, killworth_interval, BootstrapConfig,
    FrameResampler, HiddenResampler,
};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "scaleup", version, about = "Network scale-up estimation toolkit")]
struct Cli {
    /// Cap the worker-thread count (output is identical for any value).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the synthetic-population experiment grid and write a long-format CSV.
    Simulate(SimulateArgs),
    /// Compute a point estimate from survey files.
    Estimate(EstimateArgs),
    /// Compute an estimate with a bootstrap (or model-based) interval.
    Bootstrap(BootstrapArgs),
    /// Evaluate a sensitivity-scenario grid against a stored estimate.
    Sensitivity(SensitivityArgs),
    /// Empirical diagnostics on survey data.
    #[command(subcommand)]
    Check(CheckCommand),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum MethodArg {
    /// Classic basic scale-up (degree read against the whole universe).
    Basic,
    /// Modified basic scale-up (degree read against the frame).
    Modified,
    /// Generalized scale-up (needs a hidden-population survey).
    Generalized,
    /// Basic scale-up corrected by assumed adjustment factors.
    Adjusted,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum FrameBootArg {
    None,
    Simple,
    Rescaled,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum HiddenBootArg {
    Simple,
    Rds,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum ProbeModeArg {
    UniversePartition,
    FramePartition,
}

#[derive(Args)]
struct SimulateArgs {
    /// Grid specification JSON; defaults to the full benchmark sweep.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    networks: usize,
    #[arg(long, default_value_t = 100)]
    surveys: usize,
    #[arg(long, default_value_t = 500)]
    frame_n: usize,
    #[arg(long, default_value_t = 30)]
    hidden_n: usize,
    /// Exponent of the degree-proportional hidden sampling design.
    #[arg(long, default_value_t = 1.0)]
    hidden_exponent: f64,
    #[arg(long, default_value_t = 4)]
    probe_groups: usize,
    #[arg(long, value_enum, default_value_t = ProbeModeArg::UniversePartition)]
    probe_mode: ProbeModeArg,
    /// Fill probe groups from the top of the degree ranking instead, to
    /// exercise the probe-alter check.
    #[arg(long)]
    biased_probes: bool,
    /// Seed; mandatory so runs are reproducible.
    #[arg(long)]
    seed: u64,
    /// Dump the first generated network as PREFIX.edges / PREFIX.nodes.csv.
    #[arg(long)]
    dump_graph: Option<PathBuf>,
}

#[derive(Args)]
struct SurveyInputs {
    #[arg(long)]
    frame: PathBuf,
    #[arg(long)]
    hidden: Option<PathBuf>,
    #[arg(long)]
    registry: PathBuf,
    /// Cap every reported count at this value (conventionally 30).
    #[arg(long)]
    top_code: Option<u64>,
    /// Post-stratify frame weights to sum to the frame size.
    #[arg(long)]
    rescale_weights: bool,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    inputs: SurveyInputs,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Adjustment factors as `phi=..,delta=..,tau=..,eta=..` (any subset).
    #[arg(long)]
    factors: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BootstrapArgs {
    #[command(flatten)]
    inputs: SurveyInputs,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long)]
    factors: Option<String>,
    /// Frame resampler; `none` uses the historical model-based interval.
    #[arg(long, value_enum, default_value_t = FrameBootArg::Simple)]
    bootstrap: FrameBootArg,
    #[arg(long, value_enum, default_value_t = HiddenBootArg::Simple)]
    hidden_bootstrap: HiddenBootArg,
    #[arg(long, default_value_t = 1_000)]
    replicates: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SensitivityArgs {
    /// Stored estimate JSON (method decides which correction applies).
    #[arg(long)]
    estimate: PathBuf,
    /// Scenario grid JSON: per-parameter value lists, neutral by default.
    #[arg(long)]
    scenario_grid: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum CheckCommand {
    /// Compare mean reports about the hidden population across all
    /// respondents versus probe-group members.
    ProbeAlters {
        #[command(flatten)]
        inputs: SurveyInputs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-estimate each known group's size with the others.
    InternalConsistency {
        #[command(flatten)]
        inputs: SurveyInputs,
        #[arg(long, value_enum, default_value_t = MethodArg::Modified)]
        method: MethodArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        scaleup_core::exec::configure_threads(threads);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn echo_config(command: &str, config: serde_json::Value) -> Result<()> {
    let line = serde_json::json!({
        "schema_version": 1,
        "command": command,
        "config": config,
    });
    print_tolerant(&format!("{line}\n"));
    Ok(())
}

// A downstream `head` may close stdout early; treat that as truncation,
// not failure.
fn print_tolerant(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate(args) => simulate(args),
        Command::Estimate(args) => estimate(args),
        Command::Bootstrap(args) => bootstrap(args),
        Command::Sensitivity(args) => sensitivity(args),
        Command::Check(args) => check(args),
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let spec: GridSpec = match &args.grid {
        Some(path) => serde_json::from_str(
            &std::fs::read_to_string(path)
                .with_context(|| format!("reading grid spec {}", path.display()))?,
        )
        .context("parsing grid spec")?,
        None => GridSpec::default(),
    };
    let probes = ProbeSpec {
        mode: if args.biased_probes {
            ProbeMode::DegreeBiased
        } else {
            match args.probe_mode {
                ProbeModeArg::UniversePartition => ProbeMode::UniversePartition,
                ProbeModeArg::FramePartition => ProbeMode::FramePartition,
            }
        },
        group_count: args.probe_groups,
        sizes: None,
    };
    let knobs = CellKnobs {
        networks: args.networks,
        surveys: args.surveys,
        frame_sample_size: args.frame_n,
        hidden_sample_size: args.hidden_n,
        hidden_exponent: args.hidden_exponent,
        probes,
    };

    if let Some(prefix) = &args.dump_graph {
        let first = spec
            .cells()
            .into_iter()
            .next()
            .ok_or_else(|| anyhow!("grid spec has no cells"))?;
        let graph = generate_population(&SimConfig {
            seed: scaleup_core::rng::derive_seed(args.seed, &[0, 0, 0]),
            ..first
        })?;
        graph.write_edge_list(prefix.with_extension("edges"))?;
        graph.write_node_attributes(prefix.with_extension("nodes.csv"))?;
    }

    let results = run_grid(&spec, &knobs, args.seed)?;
    write_grid_csv(&results, &args.out)?;
    let config = serde_json::json!({
        "grid": spec,
        "knobs": knobs,
        "seed": args.seed,
        "out": args.out,
    });
    std::fs::write(
        args.out.with_extension("meta.json"),
        serde_json::to_string_pretty(&config)?,
    )?;
    echo_config("simulate", config)
}

struct LoadedSurveys {
    frame: FrameSurvey,
    hidden: Option<HiddenSurvey>,
    registry: KnownPopulationRegistry,
}

fn load_inputs(inputs: &SurveyInputs) -> Result<LoadedSurveys> {
    let registry = load_registry(&inputs.registry)
        .with_context(|| format!("loading registry {}", inputs.registry.display()))?;
    let mut frame = load_frame_survey(&inputs.frame, &registry, inputs.top_code)
        .with_context(|| format!("loading frame survey {}", inputs.frame.display()))?;
    let ratio = weight_scale_ratio(&frame, &registry);
    if (ratio - 1.0).abs() > 0.10 {
        if inputs.rescale_weights {
            frame = frame.with_scaled_weights(1.0 / ratio)?;
            log::warn!(
                "frame weights summed to {ratio:.3} x frame size; rescaled to absolute scale"
            );
        } else {
            log::warn!(
                "frame weights sum to {ratio:.3} x frame size; totals assume absolute 1/pi \
                 weights (pass --rescale-weights to post-stratify)"
            );
        }
    }
    let hidden = match &inputs.hidden {
        Some(path) => Some(
            load_hidden_survey(path, &registry)
                .with_context(|| format!("loading hidden survey {}", path.display()))?,
        ),
        None => None,
    };
    Ok(LoadedSurveys {
        frame,
        hidden,
        registry,
    })
}

fn parse_factors(spec: &str) -> Result<(AdjustmentFactors, bool)> {
    let mut factors = AdjustmentFactors::assumed(1.0, 1.0, 1.0, 1.0);
    let mut phi_given = false;
    for part in spec.split(',').filter(|p| !p.trim().is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| anyhow!("factor `{part}` is not of the form name=value"))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| anyhow!("factor `{part}` has a non-numeric value"))?;
        match key.trim() {
            "phi" => {
                factors.phi = value;
                phi_given = true;
            }
            "delta" => factors.delta = value,
            "tau" => factors.tau = value,
            "eta" => factors.eta = value,
            other => bail!("unknown adjustment factor `{other}`"),
        }
    }
    factors.validate()?;
    Ok((factors, phi_given))
}

/// A method with its factor inputs fully resolved, so evaluation on
/// replicate surveys can only fail with estimator errors.
enum ResolvedMethod {
    Basic(BasicVariant),
    Generalized,
    Adjusted {
        base: BasicVariant,
        variant: AdjustedVariant,
        factors: AdjustmentFactors,
    },
}

impl ResolvedMethod {
    fn name(&self) -> &'static str {
        match self {
            ResolvedMethod::Basic(BasicVariant::Classic) => "basic-classic",
            ResolvedMethod::Basic(BasicVariant::Modified) => "basic-modified",
            ResolvedMethod::Generalized => "generalized",
            ResolvedMethod::Adjusted {
                base: BasicVariant::Classic,
                ..
            } => "adjusted-classic",
            ResolvedMethod::Adjusted {
                base: BasicVariant::Modified,
                ..
            } => "adjusted-modified",
        }
    }

    fn evaluate(
        &self,
        frame: &FrameSurvey,
        hidden: Option<&HiddenSurvey>,
        registry: &KnownPopulationRegistry,
    ) -> std::result::Result<f64, EstimatorError> {
        match self {
            ResolvedMethod::Basic(variant) => basic_scaleup(frame, registry, *variant),
            ResolvedMethod::Generalized => {
                let hidden = hidden.expect("generalized estimate needs a hidden survey");
                generalized_scaleup(frame, hidden, registry)
            }
            ResolvedMethod::Adjusted {
                base,
                variant,
                factors,
            } => {
                let raw = basic_scaleup(frame, registry, *base)?;
                adjusted_scaleup(raw, factors, *variant)
            }
        }
    }
}

fn resolve_method(
    method: MethodArg,
    factors: Option<&str>,
    has_hidden: bool,
) -> Result<ResolvedMethod> {
    Ok(match method {
        MethodArg::Basic => ResolvedMethod::Basic(BasicVariant::Classic),
        MethodArg::Modified => ResolvedMethod::Basic(BasicVariant::Modified),
        MethodArg::Generalized => {
            if !has_hidden {
                bail!("generalized estimate needs --hidden");
            }
            ResolvedMethod::Generalized
        }
        MethodArg::Adjusted => {
            let (factors, phi_given) = parse_factors(
                factors.ok_or_else(|| anyhow!("adjusted estimate needs --factors"))?,
            )?;
            // With phi the correction applies to the classic estimator;
            // without it the modified estimator and its delta/tau/eta
            // correction are used.
            if phi_given {
                ResolvedMethod::Adjusted {
                    base: BasicVariant::Classic,
                    variant: AdjustedVariant::ClassicPhiDeltaTau,
                    factors,
                }
            } else {
                ResolvedMethod::Adjusted {
                    base: BasicVariant::Modified,
                    variant: AdjustedVariant::ModifiedWithEta,
                    factors,
                }
            }
        }
    })
}

fn warn_if_implausible(value: f64, registry: &KnownPopulationRegistry) {
    if value > registry.frame_size as f64 {
        log::warn!(
            "estimate {value:.1} exceeds the frame size {}; reported unchanged",
            registry.frame_size
        );
    }
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let loaded = load_inputs(&args.inputs)?;
    let resolved = resolve_method(args.method, args.factors.as_deref(), loaded.hidden.is_some())?;
    let value = resolved.evaluate(&loaded.frame, loaded.hidden.as_ref(), &loaded.registry)?;
    warn_if_implausible(value, &loaded.registry);
    let digest = survey_digest(
        Some(&loaded.frame),
        loaded.hidden.as_ref(),
        Some(&loaded.registry),
    );
    let est = Estimate::point(value, resolved.name(), digest);
    save_estimate(&est, &args.out)?;
    echo_config(
        "estimate",
        serde_json::json!({
            "method": resolved.name(),
            "frame": args.inputs.frame,
            "hidden": args.inputs.hidden,
            "registry": args.inputs.registry,
            "top_code": args.inputs.top_code,
            "factors": args.factors,
            "out": args.out,
            "value": value,
        }),
    )
}

fn bootstrap(args: BootstrapArgs) -> Result<()> {
    let loaded = load_inputs(&args.inputs)?;
    let resolved = resolve_method(args.method, args.factors.as_deref(), loaded.hidden.is_some())?;

    let est = if args.bootstrap == FrameBootArg::None {
        // Historical model-based interval around the point estimate.
        if matches!(resolved, ResolvedMethod::Generalized) {
            bail!("the model-based interval is defined for the basic estimators only");
        }
        let value = resolved.evaluate(&loaded.frame, loaded.hidden.as_ref(), &loaded.registry)?;
        let degree_sum = killworth_degree_sum(&loaded.frame, &loaded.registry)?;
        let iv = killworth_interval(value, degree_sum, loaded.registry.universe_size, args.level)?;
        let digest = survey_digest(
            Some(&loaded.frame),
            loaded.hidden.as_ref(),
            Some(&loaded.registry),
        );
        let mut est = Estimate::point(value, format!("{}+killworth", resolved.name()), digest);
        est.interval = Some(Interval {
            low: iv.low,
            high: iv.high,
            level: args.level,
        });
        est
    } else {
        let cfg = BootstrapConfig {
            level: args.level,
            frame_method: match args.bootstrap {
                FrameBootArg::Simple => FrameResampler::Simple,
                FrameBootArg::Rescaled => FrameResampler::Rescaled,
                FrameBootArg::None => unreachable!(),
            },
            hidden_method: match args.hidden_bootstrap {
                HiddenBootArg::Simple => HiddenResampler::Simple,
                HiddenBootArg::Rds => HiddenResampler::Rds,
            },
            replicates: args.replicates,
            seed: args.seed,
        };
        let registry = loaded.registry.clone();
        let name = resolved.name();
        bootstrap_estimate(
            |f: &FrameSurvey, h: Option<&HiddenSurvey>| resolved.evaluate(f, h, &registry),
            &loaded.frame,
            loaded.hidden.as_ref(),
            &loaded.registry,
            name,
            &cfg,
        )?
    };
    warn_if_implausible(est.value, &loaded.registry);
    save_estimate(&est, &args.out)?;
    echo_config(
        "bootstrap",
        serde_json::json!({
            "method": est.method,
            "bootstrap": format!("{:?}", args.bootstrap).to_lowercase(),
            "hidden_bootstrap": format!("{:?}", args.hidden_bootstrap).to_lowercase(),
            "replicates": args.replicates,
            "level": args.level,
            "seed": args.seed,
            "excluded_replicates": est.excluded_replicates,
            "out": args.out,
            "value": est.value,
        }),
    )
}

/// Scenario grid: each field lists candidate values; the Cartesian
/// product is evaluated. Absent fields stay neutral.
#[derive(Debug, serde::Deserialize)]
#[serde(default)]
struct ScenarioGrid {
    c1: Vec<f64>,
    c2: Vec<f64>,
    c3: Vec<f64>,
    eps_bar_f: Vec<f64>,
    k_f1: Vec<f64>,
    k_f2: Vec<f64>,
    k_h: Vec<f64>,
    eta: Vec<f64>,
    delta: Vec<f64>,
    tau: Vec<f64>,
}

impl Default for ScenarioGrid {
    fn default() -> Self {
        Self {
            c1: vec![1.0],
            c2: vec![1.0],
            c3: vec![1.0],
            eps_bar_f: vec![1.0],
            k_f1: vec![0.0],
            k_f2: vec![0.0],
            k_h: vec![0.0],
            eta: vec![1.0],
            delta: vec![1.0],
            tau: vec![1.0],
        }
    }
}

impl ScenarioGrid {
    fn row_count(&self) -> usize {
        [
            &self.c1, &self.c2, &self.c3, &self.eps_bar_f, &self.k_f1, &self.k_f2, &self.k_h,
            &self.eta, &self.delta, &self.tau,
        ]
        .iter()
        .map(|v| v.len().max(1))
        .product()
    }

    fn scenarios(&self) -> Vec<SensitivityScenario> {
        let mut out = Vec::with_capacity(self.row_count());
        for &c1 in &self.c1 {
            for &c2 in &self.c2 {
                for &c3 in &self.c3 {
                    for &eps_bar_f in &self.eps_bar_f {
                        for &k_f1 in &self.k_f1 {
                            for &k_f2 in &self.k_f2 {
                                for &k_h in &self.k_h {
                                    for &eta in &self.eta {
                                        for &delta in &self.delta {
                                            for &tau in &self.tau {
                                                out.push(SensitivityScenario {
                                                    c1,
                                                    c2,
                                                    c3,
                                                    eps_bar_f,
                                                    k_f1,
                                                    k_f2,
                                                    k_h,
                                                    eta,
                                                    delta,
                                                    tau,
                                                });
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

fn sensitivity(args: SensitivityArgs) -> Result<()> {
    let est = load_estimate(&args.estimate)
        .with_context(|| format!("loading estimate {}", args.estimate.display()))?;
    let grid: ScenarioGrid = serde_json::from_str(
        &std::fs::read_to_string(&args.scenario_grid)
            .with_context(|| format!("reading scenario grid {}", args.scenario_grid.display()))?,
    )
    .context("parsing scenario grid")?;
    if grid.row_count() > 1_000_000 {
        bail!(
            "scenario grid has {} rows; the cap is 1,000,000",
            grid.row_count()
        );
    }
    let generalized = est.method.starts_with("generalized");
    let modified = est.method.starts_with("basic-modified");
    if !generalized && !modified {
        bail!(
            "estimate method `{}` has no tabulated sensitivity correction \
             (expected generalized or basic-modified)",
            est.method
        );
    }

    let mut out =
        String::from("c1,c2,c3,eps_bar_f,k_f1,k_f2,k_h,eta,delta,tau,implied_n_hidden\n");
    for sc in grid.scenarios() {
        let implied = if generalized {
            adjust_generalized(est.value, &sc)?
        } else {
            adjust_modified_basic(est.value, &sc)?
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            sc.c1, sc.c2, sc.c3, sc.eps_bar_f, sc.k_f1, sc.k_f2, sc.k_h, sc.eta, sc.delta,
            sc.tau, implied
        );
    }
    std::fs::write(&args.out, out)?;
    echo_config(
        "sensitivity",
        serde_json::json!({
            "estimate": args.estimate,
            "method": est.method,
            "scenario_grid": args.scenario_grid,
            "rows": grid.row_count(),
            "out": args.out,
        }),
    )
}

fn check(command: CheckCommand) -> Result<()> {
    match command {
        CheckCommand::ProbeAlters { inputs, out } => {
            let loaded = load_inputs(&inputs)?;
            let check = estimators::probe_alter_check(&loaded.frame)?;
            let mut csv =
                String::from("mean_frame_to_hidden,mean_probe_members_to_hidden,difference\n");
            let _ = writeln!(
                csv,
                "{},{},{}",
                check.mean_frame_to_hidden, check.mean_probe_members_to_hidden, check.difference
            );
            match &out {
                Some(path) => std::fs::write(path, csv)?,
                None => print_tolerant(&csv),
            }
            echo_config(
                "check.probe-alters",
                serde_json::json!({
                    "frame": inputs.frame,
                    "registry": inputs.registry,
                    "difference": check.difference,
                    "out": out,
                }),
            )
        }
        CheckCommand::InternalConsistency {
            inputs,
            method,
            out,
        } => {
            let loaded = load_inputs(&inputs)?;
            let variant = match method {
                MethodArg::Basic => BasicVariant::Classic,
                MethodArg::Modified => BasicVariant::Modified,
                _ => bail!("internal consistency uses the basic estimators"),
            };
            let rows = estimators::internal_consistency(&loaded.frame, &loaded.registry, variant)?;
            let mut csv = String::from("group_id,known_size,estimate\n");
            for row in &rows {
                let _ = writeln!(csv, "{},{},{}", row.group_id, row.known_size, row.estimate);
            }
            match &out {
                Some(path) => std::fs::write(path, csv)?,
                None => print_tolerant(&csv),
            }
            echo_config(
                "check.internal-consistency",
                serde_json::json!({
                    "frame": inputs.frame,
                    "registry": inputs.registry,
                    "groups": rows.len(),
                    "out": out,
                }),
            )
        }
    }
}
