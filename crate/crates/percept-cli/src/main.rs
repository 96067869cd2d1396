//! `percept` — reproducible command-line analysis of receiver profiles.
//!
//! Every command reads UTF-8 JSON inputs, writes a deterministic report to
//! standard output (JSON reports carry a top-level `"schema": "percept/1"`
//! field), and signals problems through the exit code: `0` success, `2`
//! usage or file-access error, `3` validation error. Analysis verdicts are
//! data inside the report, never exit codes. Diagnostics go to standard
//! error as a single line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use percept_core::{
    apply_do, assemble_high_level, assemble_low_level, causal_perception, check_conjunction,
    check_exact_transformation, implied_distribution, pib_report, sample_with_workers, Aggregation,
    ConsistencyReport, Error as CoreError, FallacyVerdict, GaussianDist, InterventionGrid,
    InterventionSet, InterventionSpec, LinearScm, Metric, PerceptionReport, PibReport,
    ReceiverProfile, Tau,
};
use serde::Serialize;

const SCHEMA: &str = "percept/1";
const EXIT_USAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "percept",
    version,
    about = "Causal-perception analysis over receiver profiles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a receiver profile and confirm its asserted graph is acyclic.
    Validate(ValidateArgs),
    /// Print the assembled structural model: nodes, weighted edges, noise.
    Build(BuildArgs),
    /// Print the implied Gaussian distribution, optionally under do().
    Distribution(DistributionArgs),
    /// Draw seeded ancestral samples and emit CSV.
    Sample(SampleArgs),
    /// Compare two receivers across an intervention set.
    Compare(CompareArgs),
    /// Check that the descriptor-level model transforms exactly into the
    /// variable-level one.
    Consistency(ConsistencyArgs),
    /// Rank receivers by aggregate distance from a reference receiver.
    Pib(PibArgs),
    /// Check the conjunction rule: P(A and B) must not exceed min(P(A), P(B)).
    Fallacy(FallacyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    /// 2-Wasserstein distance (handles degenerate covariances).
    W2,
    /// Symmetrized Kullback-Leibler divergence with a diagonal ridge.
    Kl,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    /// Variable-level model assembled from significations and assumed edges.
    High,
    /// Descriptor-level model with noise split equally across descriptors.
    Low,
}

#[derive(Args)]
struct ValidateArgs {
    /// Receiver profile (JSON).
    profile: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct BuildArgs {
    /// Receiver profile (JSON).
    profile: PathBuf,
    /// Which assembled model to print.
    #[arg(long, value_enum, default_value_t = LevelArg::High)]
    level: LevelArg,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct DistributionArgs {
    /// Receiver profile (JSON).
    profile: PathBuf,
    /// Intervention assignments, e.g. "Z=1" or "Z=0,X_1=2.5".
    #[arg(long = "do", value_name = "ASSIGNMENTS")]
    intervention: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct SampleArgs {
    /// Receiver profile (JSON).
    profile: PathBuf,
    /// Number of rows to draw.
    #[arg(short = 'n', long = "rows")]
    rows: usize,
    /// RNG seed; identical seeds reproduce identical bytes.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; the output is identical for every worker count.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    workers: u64,
    /// Write CSV here instead of standard output.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// First receiver profile (JSON).
    a: PathBuf,
    /// Second receiver profile (JSON).
    b: PathBuf,
    #[arg(long, value_enum, default_value_t = MetricArg::W2)]
    metric: MetricArg,
    /// Diagonal ridge for the kl metric.
    #[arg(long, default_value_t = Metric::DEFAULT_KL_RIDGE)]
    ridge: f64,
    #[arg(long, value_enum, default_value_t = AggArg::Max)]
    agg: AggArg,
    /// Perception threshold on the aggregate distance.
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Intervention grid file; overrides any grid embedded in the profiles.
    #[arg(long, value_name = "GRID")]
    interventions: Option<PathBuf>,
    /// Compare observational distributions only.
    #[arg(long, conflicts_with = "interventions")]
    observational: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct ConsistencyArgs {
    /// Receiver profile (JSON) with descriptor sets.
    profile: PathBuf,
    /// Override the profile's aggregation map (sum or mean).
    #[arg(long)]
    tau: Option<Tau>,
    /// Pass threshold on each per-intervention distance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = MetricArg::W2)]
    metric: MetricArg,
    /// Diagonal ridge for the kl metric.
    #[arg(long, default_value_t = Metric::DEFAULT_KL_RIDGE)]
    ridge: f64,
    /// Intervention grid file; overrides any grid embedded in the profile.
    #[arg(long, value_name = "GRID")]
    interventions: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct PibArgs {
    /// Receiver profile every other profile is measured against.
    #[arg(long, value_name = "PROFILE")]
    reference: PathBuf,
    /// Receiver profiles to rank.
    #[arg(required = true)]
    others: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = MetricArg::W2)]
    metric: MetricArg,
    /// Diagonal ridge for the kl metric.
    #[arg(long, default_value_t = Metric::DEFAULT_KL_RIDGE)]
    ridge: f64,
    #[arg(long, value_enum, default_value_t = AggArg::Max)]
    agg: AggArg,
    /// Perception threshold on the aggregate distance.
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Intervention grid file; overrides any grid embedded in the profiles.
    #[arg(long, value_name = "GRID")]
    interventions: Option<PathBuf>,
    /// Rank by observational distributions only.
    #[arg(long, conflicts_with = "interventions")]
    observational: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct FallacyArgs {
    /// Probability of the joint event.
    #[arg(long)]
    joint: f64,
    /// Probability of the first constituent.
    #[arg(long)]
    pa: f64,
    /// Probability of the second constituent.
    #[arg(long)]
    pb: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggArg {
    Max,
    Mean,
}

impl From<AggArg> for Aggregation {
    fn from(a: AggArg) -> Self {
        match a {
            AggArg::Max => Aggregation::Max,
            AggArg::Mean => Aggregation::Mean,
        }
    }
}

impl MetricArg {
    fn metric(self, ridge: f64) -> Metric {
        match self {
            MetricArg::W2 => Metric::W2,
            MetricArg::Kl => Metric::Kl { ridge },
        }
    }
}

/// A command failure, carrying the exit code it maps to.
enum CliError {
    /// Bad flags, malformed flag values, unreadable files — exit 2.
    Usage(String),
    /// Inputs that parse but violate the domain contracts — exit 3.
    Validation(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                eprintln!("error: missing command (try --help)");
                return ExitCode::from(EXIT_USAGE);
            }
            let rendered = e.render().to_string();
            let line = rendered
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("error");
            eprintln!("{line}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(cli.command) {
        Ok(stdout) => {
            print!("{stdout}");
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn run(command: Command) -> Result<String, CliError> {
    match command {
        Command::Validate(args) => cmd_validate(args),
        Command::Build(args) => cmd_build(args),
        Command::Distribution(args) => cmd_distribution(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Consistency(args) => cmd_consistency(args),
        Command::Pib(args) => cmd_pib(args),
        Command::Fallacy(args) => cmd_fallacy(args),
    }
}

// ---------------------------------------------------------------------------
// Input plumbing
// ---------------------------------------------------------------------------

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Loads and fully validates a profile; diagnostics name the file.
fn load_profile(path: &Path) -> Result<ReceiverProfile, CliError> {
    let text = read_file(path)?;
    ReceiverProfile::parse_json(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Resolves the intervention set for a command: an explicit `--interventions`
/// grid wins, then the first profile (in argument order) that embeds a grid,
/// then the observational singleton.
fn resolve_iset(
    explicit: Option<&Path>,
    observational: bool,
    profiles: &[&ReceiverProfile],
) -> Result<InterventionSet, CliError> {
    if observational {
        return Ok(InterventionSet::observational());
    }
    if let Some(path) = explicit {
        let text = read_file(path)?;
        let grid = InterventionGrid::parse_json(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        return Ok(grid.to_set()?);
    }
    for profile in profiles {
        if let Some(grid) = profile.intervention_grid() {
            return Ok(grid.to_set()?);
        }
    }
    Ok(InterventionSet::observational())
}

/// Parses `--do` assignments of the form `X=1.5` or `X=0,Y=2`.
fn parse_do(text: &str) -> Result<InterventionSpec, CliError> {
    let mut pairs: Vec<(String, f64)> = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        let Some((name, value)) = part.split_once('=') else {
            return Err(CliError::Usage(format!(
                "--do assignments look like X=1.5, got {part:?}"
            )));
        };
        let value: f64 = value.trim().parse().map_err(|_| {
            CliError::Usage(format!(
                "--do value for {:?} is not a number: {:?}",
                name.trim(),
                value.trim()
            ))
        })?;
        pairs.push((name.trim().to_owned(), value));
    }
    let borrowed: Vec<(&str, f64)> = pairs.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    Ok(InterventionSpec::new(&borrowed)?)
}

// ---------------------------------------------------------------------------
// Report envelope
// ---------------------------------------------------------------------------

/// Versions every JSON report with a leading `"schema"` key; the report's
/// own fields follow in their declared order.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'static str,
    #[serde(flatten)]
    body: &'a T,
}

fn emit_json<T: Serialize>(body: &T) -> String {
    let mut out = serde_json::to_string_pretty(&Envelope {
        schema: SCHEMA,
        body,
    })
    .expect("reports contain only serializable data");
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ValidateReport {
    id: String,
    nodes: usize,
    edges: usize,
    acyclic: bool,
}

fn cmd_validate(args: ValidateArgs) -> Result<String, CliError> {
    let profile = load_profile(&args.profile)?;
    let scm = assemble_high_level(&profile)
        .map_err(|e| CliError::Validation(format!("{}: {e}", args.profile.display())))?;
    let report = ValidateReport {
        id: profile.id().to_owned(),
        nodes: scm.graph().nodes().len(),
        edges: scm.graph().edges().count(),
        acyclic: true,
    };
    Ok(match args.format {
        Format::Json => emit_json(&report),
        Format::Text => format!("ok: graph acyclic, {} edges\n", report.edges),
    })
}

// ---------------------------------------------------------------------------
// build
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct EdgeRow {
    from: String,
    to: String,
    coefficient: f64,
}

#[derive(Serialize)]
struct NoiseRow {
    variable: String,
    mean: f64,
    var: f64,
}

#[derive(Serialize)]
struct BuildReport {
    id: String,
    level: String,
    tau: Tau,
    nodes: Vec<String>,
    edges: Vec<EdgeRow>,
    noise: Vec<NoiseRow>,
    factorization: String,
}

fn build_report(profile: &ReceiverProfile, level: LevelArg, scm: &LinearScm) -> BuildReport {
    let graph = scm.graph();
    let edges = graph
        .edges()
        .map(|(from, to)| EdgeRow {
            from: from.to_owned(),
            to: to.to_owned(),
            coefficient: scm.coefficient(from, to).expect("edge is in the graph"),
        })
        .collect();
    let noise = graph
        .nodes()
        .iter()
        .map(|name| NoiseRow {
            variable: name.clone(),
            mean: scm.noise_mean_of(name).expect("noise covers every node"),
            var: scm.noise_var_of(name).expect("noise covers every node"),
        })
        .collect();
    BuildReport {
        id: profile.id().to_owned(),
        level: match level {
            LevelArg::High => "high".to_owned(),
            LevelArg::Low => "low".to_owned(),
        },
        tau: profile.tau(),
        nodes: graph.nodes().to_vec(),
        edges,
        noise,
        factorization: graph.factorize().render(),
    }
}

fn cmd_build(args: BuildArgs) -> Result<String, CliError> {
    let profile = load_profile(&args.profile)?;
    let scm = match args.level {
        LevelArg::High => assemble_high_level(&profile),
        LevelArg::Low => assemble_low_level(&profile),
    }
    .map_err(|e| CliError::Validation(format!("{}: {e}", args.profile.display())))?;
    let report = build_report(&profile, args.level, &scm);
    Ok(match args.format {
        Format::Json => emit_json(&report),
        Format::Text => build_text(&report),
    })
}

fn build_text(report: &BuildReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "id:     {}", report.id);
    let _ = writeln!(out, "level:  {}", report.level);
    let _ = writeln!(out, "tau:    {}", report.tau);
    let _ = writeln!(out, "nodes:  {}", report.nodes.join(", "));
    let _ = writeln!(out, "edges:");
    let width = report
        .edges
        .iter()
        .map(|e| e.from.len() + e.to.len() + 4)
        .max()
        .unwrap_or(0);
    for edge in &report.edges {
        let arrow = format!("{} -> {}", edge.from, edge.to);
        let _ = writeln!(out, "  {arrow:<width$}  {:.6}", edge.coefficient);
    }
    let _ = writeln!(out, "noise:");
    let width = report
        .noise
        .iter()
        .map(|n| n.variable.len())
        .max()
        .unwrap_or(0);
    for row in &report.noise {
        let _ = writeln!(
            out,
            "  {:<width$}  mean {:.6}  var {:.6}",
            row.variable, row.mean, row.var
        );
    }
    let _ = writeln!(out, "factorization: {}", report.factorization);
    out
}

// ---------------------------------------------------------------------------
// distribution
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct DistributionReport {
    id: String,
    #[serde(rename = "do")]
    label: String,
    variables: Vec<String>,
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

fn cmd_distribution(args: DistributionArgs) -> Result<String, CliError> {
    let profile = load_profile(&args.profile)?;
    let scm = assemble_high_level(&profile)
        .map_err(|e| CliError::Validation(format!("{}: {e}", args.profile.display())))?;
    let (label, dist) = match &args.intervention {
        None => ("observational".to_owned(), implied_distribution(&scm)),
        Some(text) => {
            let spec = parse_do(text)?;
            let mutilated = apply_do(&scm, &spec)?;
            (spec.label(), implied_distribution(&mutilated))
        }
    };
    let report = distribution_report(profile.id(), label, &dist);
    Ok(match args.format {
        Format::Json => emit_json(&report),
        Format::Text => distribution_text(&report),
    })
}

fn distribution_report(id: &str, label: String, dist: &GaussianDist) -> DistributionReport {
    let p = dist.dim();
    DistributionReport {
        id: id.to_owned(),
        label,
        variables: dist.variables().to_vec(),
        mean: dist.mean().iter().copied().collect(),
        cov: (0..p)
            .map(|i| (0..p).map(|j| dist.cov()[(i, j)]).collect())
            .collect(),
    }
}

fn distribution_text(report: &DistributionReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "id:        {}", report.id);
    let _ = writeln!(out, "do:        {}", report.label);
    let _ = writeln!(out, "variables: {}", report.variables.join(", "));
    let mut mean = String::new();
    for value in &report.mean {
        let _ = write!(mean, " {value:>12.6}");
    }
    let _ = writeln!(out, "mean:{mean}");
    let _ = writeln!(out, "cov:");
    for row in &report.cov {
        let mut line = String::new();
        for value in row {
            let _ = write!(line, " {value:>12.6}");
        }
        let _ = writeln!(out, " {line}");
    }
    out
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

fn cmd_sample(args: SampleArgs) -> Result<String, CliError> {
    let profile = load_profile(&args.profile)?;
    let scm = assemble_high_level(&profile)
        .map_err(|e| CliError::Validation(format!("{}: {e}", args.profile.display())))?;
    let matrix = sample_with_workers(&scm, args.rows, args.seed, args.workers as usize);
    let csv = matrix.to_csv();
    match &args.output {
        None => Ok(csv),
        Some(path) => {
            std::fs::write(path, csv)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            Ok(String::new())
        }
    }
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

fn cmd_compare(args: CompareArgs) -> Result<String, CliError> {
    let a = load_profile(&args.a)?;
    let b = load_profile(&args.b)?;
    let iset = resolve_iset(args.interventions.as_deref(), args.observational, &[&a, &b])?;
    let report = causal_perception(
        &a,
        &b,
        &iset,
        args.metric.metric(args.ridge),
        args.agg.into(),
        args.epsilon,
    )?;
    Ok(match args.format {
        Format::Json => emit_json(&report),
        Format::Text => perception_text(&report),
    })
}

fn perception_text(report: &PerceptionReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "receivers:          {} vs {}",
        report.receivers.0, report.receivers.1
    );
    let _ = writeln!(
        out,
        "shared variables:   {}",
        report.shared_variables.join(", ")
    );
    let _ = writeln!(out, "metric:             {}", report.metric);
    let _ = writeln!(out, "aggregation:        {}", report.aggregation);
    let _ = writeln!(out, "epsilon:            {}", report.epsilon);
    let _ = writeln!(out, "interventions:");
    let width = report
        .interventions
        .iter()
        .map(|r| r.label.len())
        .max()
        .unwrap_or(0);
    for row in &report.interventions {
        let _ = writeln!(out, "  {:<width$}  {:.6}", row.label, row.distance);
    }
    let _ = writeln!(out, "aggregate distance: {:.6}", report.aggregate_distance);
    let _ = writeln!(
        out,
        "perception:         {}",
        if report.perception { "yes" } else { "no" }
    );
    let _ = writeln!(out, "kind:               {}", report.kind);
    out
}

// ---------------------------------------------------------------------------
// consistency
// ---------------------------------------------------------------------------

fn cmd_consistency(args: ConsistencyArgs) -> Result<String, CliError> {
    let loaded = load_profile(&args.profile)?;
    let profile = match args.tau {
        Some(tau) => loaded.with_tau(tau),
        None => loaded,
    };
    let iset = resolve_iset(args.interventions.as_deref(), false, &[&profile])?;
    let report =
        check_exact_transformation(&profile, &iset, args.metric.metric(args.ridge), args.tol)
            .map_err(|e| CliError::Validation(format!("{}: {e}", args.profile.display())))?;
    Ok(match args.format {
        Format::Json => emit_json(&report),
        Format::Text => consistency_text(&report),
    })
}

fn consistency_text(report: &ConsistencyReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "profile:    {}", report.profile);
    let _ = writeln!(out, "tau:        {}", report.tau);
    let _ = writeln!(out, "metric:     {}", report.metric);
    let _ = writeln!(out, "tolerance:  {}", report.tolerance);
    let _ = writeln!(out, "interventions:");
    let width = report
        .interventions
        .iter()
        .map(|r| r.label.len())
        .max()
        .unwrap_or(0);
    for row in &report.interventions {
        let verdict = if row.pass { "pass" } else { "FAIL" };
        let _ = writeln!(
            out,
            "  {:<width$}  {:.6}  {verdict}",
            row.label, row.distance
        );
    }
    let _ = writeln!(
        out,
        "overall:    {}",
        if report.pass { "pass" } else { "FAIL" }
    );
    out
}

// ---------------------------------------------------------------------------
// pib
// ---------------------------------------------------------------------------

fn cmd_pib(args: PibArgs) -> Result<String, CliError> {
    let reference = load_profile(&args.reference)?;
    let mut others = Vec::with_capacity(args.others.len());
    for path in &args.others {
        others.push(load_profile(path)?);
    }
    let mut profiles: Vec<&ReceiverProfile> = vec![&reference];
    profiles.extend(others.iter());
    let iset = resolve_iset(args.interventions.as_deref(), args.observational, &profiles)?;
    let borrowed: Vec<&ReceiverProfile> = others.iter().collect();
    let report = pib_report(
        &reference,
        &borrowed,
        &iset,
        args.metric.metric(args.ridge),
        args.agg.into(),
        args.epsilon,
    )?;
    Ok(match args.format {
        Format::Json => emit_json(&report),
        Format::Text => pib_text(&report),
    })
}

fn pib_text(report: &PibReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "reference:   {}", report.reference);
    let _ = writeln!(out, "metric:      {}", report.metric);
    let _ = writeln!(out, "aggregation: {}", report.aggregation);
    let _ = writeln!(out, "epsilon:     {}", report.epsilon);
    let _ = writeln!(out, "ranking:");
    let width = report.rows.iter().map(|r| r.id.len()).max().unwrap_or(0);
    for (rank, row) in report.rows.iter().enumerate() {
        let _ = writeln!(
            out,
            "  {}. {:<width$}  {:.6}  {}",
            rank + 1,
            row.id,
            row.aggregate_distance,
            row.kind
        );
    }
    out
}

// ---------------------------------------------------------------------------
// fallacy
// ---------------------------------------------------------------------------

fn cmd_fallacy(args: FallacyArgs) -> Result<String, CliError> {
    let verdict = check_conjunction(args.joint, args.pa, args.pb)?;
    Ok(match args.format {
        Format::Json => emit_json(&verdict),
        Format::Text => fallacy_text(&verdict),
    })
}

fn fallacy_text(verdict: &FallacyVerdict) -> String {
    let floor = verdict.p_a.min(verdict.p_b);
    if verdict.violated {
        format!(
            "VIOLATED: p_joint {:.6} > min(p_a, p_b) {:.6} (margin {:.6})\n",
            verdict.p_joint, floor, verdict.margin
        )
    } else {
        format!(
            "ok: p_joint {:.6} <= min(p_a, p_b) {:.6} (margin {:.6})\n",
            verdict.p_joint, floor, verdict.margin
        )
    }
}
