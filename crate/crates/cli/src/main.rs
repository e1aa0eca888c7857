use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use aicert::ergodicity::{
    analyze, controllability_lp, farkas_lp, stability_lp, AnalysisOptions, AnalysisReport, Certificate,
    ErgodicityError, DEFAULT_SEED,
};
use aicert::linalg::Matrix;
use aicert::lpsolve::LpError;
use aicert::netdsl::{self, NetworkDocument};
use aicert::netmodel::{
    characteristic_system_as, close_loop, propensity_decomposition, stoichiometry_matrix, CharacteristicForm,
    CharacteristicSystem, ControllerParams, Regime, ReactionNetwork,
};
use aicert::report::{Outcome, ReportDocument, SimulationSummary};
use aicert::sgraph::{augment_with_feedback_edge, graph_of, Digraph};
use aicert::ssa::{self, SimConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_INPUT: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "aicert", version, about = "Certify antithetic integral control of reaction networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check stability and output controllability and compute the set-point bound.
    Analyze(AnalyzeArgs),
    /// Close the loop and estimate the controlled mean by simulation.
    Simulate(SimulateArgs),
    /// Print the matrices, programs and graphs derived from a network.
    Explain(ExplainArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Nominal,
    Robust,
    Structural,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Nominal => Regime::Nominal,
            RegimeArg::Robust => Regime::Robust,
            RegimeArg::Structural => Regime::Structural,
        }
    }
}

#[derive(Args)]
struct BoundArgs {
    /// Bound parameter c; defaults to 0.9 times the magnitude of the Frobenius eigenvalue.
    #[arg(long)]
    c: Option<f64>,
    /// Probe vector, comma separated; defaults to all ones.
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    /// Interior grid points on the Delta box diagonal.
    #[arg(long, default_value_t = 8)]
    grid: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct AnalyzeArgs {
    file: PathBuf,
    /// Defaults to the regime implied by the rates in the file.
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
    /// Write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    bound: BoundArgs,
}

#[derive(Args)]
struct SimulateArgs {
    file: PathBuf,
    /// Production rate of Z1; overrides the file's set-point numerator.
    #[arg(long)]
    mu: Option<f64>,
    /// Sensing gain; overrides the file's set-point denominator.
    #[arg(long)]
    theta: Option<f64>,
    /// Annihilation rate of Z1 + Z2.
    #[arg(long)]
    eta: Option<f64>,
    /// Actuation gain from Z1 to the actuated species.
    #[arg(long)]
    k: Option<f64>,
    #[arg(long, default_value_t = 500.0)]
    horizon: f64,
    #[arg(long, default_value_t = 20)]
    replicates: usize,
    /// Fraction of the horizon discarded before averaging.
    #[arg(long, default_value_t = 0.25)]
    burn_in: f64,
    /// Worker threads for replicates; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Export stored trajectories as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    bound: BoundArgs,
}

#[derive(Args)]
struct ExplainArgs {
    file: PathBuf,
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
}

/// Failure that ends the command with a specific exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Explain(a) => cmd_explain(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &Path) -> Result<(Vec<u8>, NetworkDocument, ReactionNetwork), Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let render = |diags: Vec<netdsl::Diagnostic>| {
        let lines: Vec<String> = diags.iter().map(|d| format!("{}:{d}", path.display())).collect();
        Failure::input(lines.join("\n"))
    };
    let doc = netdsl::parse_bytes(&bytes).map_err(render)?;
    let net = doc.to_network().map_err(render)?;
    Ok((bytes, doc, net))
}

fn options(b: &BoundArgs, doc: &NetworkDocument) -> AnalysisOptions {
    AnalysisOptions {
        c: b.c,
        q: b.q.clone(),
        grid: b.grid,
        seed: b.seed,
        irreducibility: doc.irreducibility(),
        ..AnalysisOptions::default()
    }
}

/// Runs the analysis, keeping the report when routes disagree.
fn run_analysis(
    net: &ReactionNetwork,
    regime: Regime,
    opts: &AnalysisOptions,
) -> Result<AnalysisReport, Failure> {
    match analyze(net, regime, opts) {
        Ok(r) => Ok(r),
        Err(ErgodicityError::OracleDisagreement(r)) => Ok(*r),
        Err(e @ (ErgodicityError::CertificateRejected(_)
        | ErgodicityError::Lp(LpError::NumericalBreakdown { .. } | LpError::VerificationFailed { .. }))) => {
            Err(Failure { code: EXIT_INTERNAL, message: e.to_string() })
        }
        Err(e) => Err(Failure::input(e.to_string())),
    }
}

fn write_json(path: &Option<PathBuf>, doc: &ReportDocument) -> Result<(), Failure> {
    if let Some(p) = path {
        fs::write(p, doc.to_json() + "\n")
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(())
}

fn fmt_vec(x: &[f64]) -> String {
    let items: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
    format!("({})", items.join(", "))
}

fn summary(report: &AnalysisReport, outcome: Outcome) -> String {
    let mut s = String::new();
    let v = &report.verdicts;
    let yn = |b: bool| if b { "yes" } else { "no" };
    let _ = writeln!(s, "regime: {}", report.regime);
    let _ = writeln!(s, "controlled species: {} of {}", report.assumptions.ell, report.assumptions.d);
    let _ = writeln!(s, "Hurwitz stable: {}", yn(v.hurwitz_stable));
    let _ = writeln!(s, "output controllable: {}", yn(v.output_controllable));
    for c in &report.certificates {
        let line = match c {
            Certificate::Nominal { v, w } => format!("certificate v = {}, w = {}", fmt_vec(v), fmt_vec(w)),
            Certificate::Robust { v_plus, w_minus } => {
                format!("certificate v+ = {}, w- = {}", fmt_vec(v_plus), fmt_vec(w_minus))
            }
            Certificate::Structural { v1, v2, v3 } => match (v2, v3) {
                (Some(v2), Some(v3)) => {
                    format!("certificate v1 = {}, v2 = {}, v3 = {}", fmt_vec(v1), fmt_vec(v2), fmt_vec(v3))
                }
                _ => format!("certificate v1 = {}", fmt_vec(v1)),
            },
            Certificate::Stability { v } => format!("stability vector v = {}", fmt_vec(v)),
            Certificate::Path { nodes } => format!("path witness {nodes:?}"),
            Certificate::TopologicalOrder { order } => format!("topological order {order:?}"),
            Certificate::Refutation { reason, witness, .. } => {
                format!("refuted: {reason}; witness {}", serde_json::to_string(witness).unwrap_or_default())
            }
        };
        let _ = writeln!(s, "  {line}");
    }
    let failed: Vec<_> = report.oracle_crosschecks.iter().filter(|c| !c.agrees).collect();
    let _ = writeln!(s, "cross-checks: {} run, {} disagree", report.oracle_crosschecks.len(), failed.len());
    for c in failed {
        let _ = writeln!(s, "  disagreement: {} says {}", c.oracle, c.verdict);
    }
    if let Some(b) = &report.setpoint_bound {
        let _ = writeln!(s, "set-point bound: mu/theta > {} (c = {})", b.bound, b.c);
        if !b.evaluations.is_empty() {
            let _ = writeln!(
                s,
                "  evaluated at {} Delta points; side condition {}",
                b.evaluations.len(),
                if b.side_condition_holds { "held" } else { "failed" }
            );
        }
    }
    if let Some(i) = report.assumptions.irreducibility {
        let _ = writeln!(s, "irreducibility: {} (not checked)", serde_json::to_string(&i).unwrap_or_default());
    }
    let _ = writeln!(s, "outcome: {}", serde_json::to_string(&outcome).unwrap_or_default().trim_matches('"'));
    s
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<u8, Failure> {
    let (bytes, doc, net) = load(&args.file)?;
    let regime = args.regime.map_or(net.natural_regime(), Regime::from);
    let opts = options(&args.bound, &doc);
    let start = Instant::now();
    let report = run_analysis(&net, regime, &opts)?;
    let elapsed = start.elapsed().as_secs_f64();
    let outcome = ReportDocument::outcome_of(&report);
    print!("{}", summary(&report, outcome));
    let mut out = ReportDocument::new(&args.file.display().to_string(), &bytes, regime, outcome);
    out.analysis = Some(report);
    out.timing.analysis_seconds = elapsed;
    write_json(&args.json, &out)?;
    Ok(outcome.exit_code() as u8)
}

fn controller(args: &SimulateArgs, doc: &NetworkDocument) -> Result<ControllerParams, Failure> {
    let file = doc.controller_params();
    let pick = |flag: Option<f64>, from_file: Option<f64>, name: &str| {
        flag.or(from_file).ok_or_else(|| Failure::input(format!("missing controller parameter {name}")))
    };
    let params = ControllerParams {
        mu: pick(args.mu, file.map(|p| p.mu), "mu")?,
        theta: pick(args.theta, file.map(|p| p.theta), "theta")?,
        eta: pick(args.eta, file.map(|p| p.eta), "eta")?,
        k: pick(args.k, file.map(|p| p.k), "k")?,
    };
    params.validate().map_err(|e| Failure::input(e.to_string()))?;
    Ok(params)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<u8, Failure> {
    let (bytes, doc, net) = load(&args.file)?;
    if let Err(k) = net.point_rates() {
        return Err(Failure::input(format!("simulation needs point rates; reaction {} has none", k + 1)));
    }
    let params = controller(args, &doc)?;
    let opts = options(&args.bound, &doc);
    let mut warnings = Vec::new();

    let start = Instant::now();
    let analysis = run_analysis(&net, Regime::Nominal, &opts)?;
    let analysis_seconds = start.elapsed().as_secs_f64();
    let certified_bound = analysis.setpoint_bound.as_ref().map(|b| b.bound);
    if !analysis.verdicts.overall {
        warnings.push("open loop is not certified; tracking is not guaranteed".to_string());
    }
    if let Some(b) = certified_bound {
        if params.setpoint() <= b {
            warnings.push(format!("set-point below certified bound ({} <= {b})", params.setpoint()));
        }
    }

    let closed = close_loop(&net, params).map_err(|e| Failure::input(e.to_string()))?;
    let mut cfg = SimConfig::new(vec![0; closed.species().len()], args.horizon, args.replicates, args.bound.seed);
    cfg.burn_in = args.burn_in;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::input(e.to_string()))?;
    let trajs = pool.install(|| ssa::simulate(&closed, &cfg)).map_err(|e| match e {
        ssa::SsaError::BadConfig(_) | ssa::SsaError::NonPointRate(_) => Failure::input(e.to_string()),
        _ => Failure { code: 1, message: format!("{e}; the closed loop appears to diverge") },
    })?;
    let simulation_seconds = start.elapsed().as_secs_f64();

    let ell = closed.controlled_index();
    let stat = |r: Result<(f64, f64), ssa::SsaError>| r.map_err(|e| Failure::input(e.to_string()));
    let (mean, stderr) = stat(ssa::estimate_mean(&trajs, ell, cfg.burn_in))?;
    let (second_moment, _) = stat(ssa::estimate_second_moment(&trajs, ell, cfg.burn_in))?;
    let growth = ssa::second_moment_growth(&trajs, ell).map_err(|e| Failure::input(e.to_string()))?;
    if growth.monotone_growth {
        warnings.push("second moment grows across windows".to_string());
    }
    let setpoint = params.setpoint();
    let tolerance = (0.05 * setpoint).max(3.0 * stderr);
    let within = stderr.is_finite() && (mean - setpoint).abs() <= tolerance;
    if !stderr.is_finite() {
        warnings.push("standard error is undefined with a single replicate".to_string());
    }
    if let Some(p) = &args.csv {
        let names: Vec<String> = closed.species().iter().map(|s| s.name.clone()).collect();
        let mut f = fs::File::create(p).map_err(|e| Failure::input(format!("cannot write {}: {e}", p.display())))?;
        ssa::write_csv(&mut f, &names, &trajs).map_err(|e| Failure::input(e.to_string()))?;
    }

    let sim = SimulationSummary {
        mu: params.mu,
        theta: params.theta,
        eta: params.eta,
        k: params.k,
        setpoint,
        controlled: closed.species()[ell].name.clone(),
        horizon: cfg.horizon,
        replicates: cfg.replicates,
        burn_in: cfg.burn_in,
        seed: cfg.seed,
        events: trajs.iter().map(|t| t.events).sum(),
        mean,
        stderr: stderr.is_finite().then_some(stderr),
        relative_error: (mean - setpoint).abs() / setpoint,
        tolerance: tolerance.is_finite().then_some(tolerance),
        within_tolerance: within,
        second_moment,
        growth,
        certified_bound,
        warnings,
    };
    for w in &sim.warnings {
        println!("warning: {w}");
    }
    println!("set-point mu/theta = {setpoint}");
    println!("empirical mean of {} = {mean} (stderr {stderr})", sim.controlled);
    println!("tolerance {tolerance}: {}", if within { "within" } else { "outside" });
    if let Some(b) = certified_bound {
        println!("certified bound: mu/theta > {b}");
    }

    let outcome = if within { Outcome::WithinTolerance } else { Outcome::OutOfTolerance };
    let mut out = ReportDocument::new(&args.file.display().to_string(), &bytes, Regime::Nominal, outcome);
    out.analysis = Some(analysis);
    out.simulation = Some(sim);
    out.timing.analysis_seconds = analysis_seconds;
    out.timing.simulation_seconds = Some(simulation_seconds);
    write_json(&args.json, &out)?;
    Ok(outcome.exit_code() as u8)
}

fn edge_list(g: &Digraph) -> String {
    let edges: Vec<String> = g.edges().map(|(a, b)| format!("({}, {})", a + 1, b + 1)).collect();
    format!("{{{}}}", edges.join(", "))
}

fn section(out: &mut String, title: &str, body: impl std::fmt::Display) {
    let _ = writeln!(out, "{title}:\n{body}");
}

fn vec_line<T: std::fmt::Display>(x: &[T]) -> String {
    let items: Vec<String> = x.iter().map(|v| v.to_string()).collect();
    format!("[{}]\n", items.join(", "))
}

fn explain_text(net: &ReactionNetwork, sys: &CharacteristicSystem<f64>) -> Result<String, Failure> {
    let mut out = String::new();
    let names: Vec<&str> = net.species().iter().map(|s| s.name.as_str()).collect();
    let _ = writeln!(out, "species: {} (actuated {}, controlled {})\n", names.join(", "), names[0], names[sys.ell]);
    section(&mut out, "S", stoichiometry_matrix(net));
    if let Ok((w, w0)) = propensity_decomposition::<f64>(net) {
        section(&mut out, "W", w);
        section(&mut out, "w0", vec_line(&w0));
    }
    let ell = sys.ell;
    match &sys.form {
        CharacteristicForm::Point { a, b0 } => {
            section(&mut out, "A", a);
            section(&mut out, "b0", vec_line(b0));
            section(&mut out, "stability program", stability_lp(a, "v"));
            section(&mut out, "controllability program", controllability_lp(a, ell, "w"));
            section(&mut out, "graph of A", edge_list(&graph_of(a)) + "\n");
        }
        CharacteristicForm::Interval { a_minus, a_plus, b0_minus, b0_plus } => {
            section(&mut out, "A-", a_minus);
            section(&mut out, "A+", a_plus);
            section(&mut out, "b0-", vec_line(b0_minus));
            section(&mut out, "b0+", vec_line(b0_plus));
            section(&mut out, "stability program (A+)", stability_lp(a_plus, "v"));
            section(&mut out, "controllability program (A-)", controllability_lp(a_minus, ell, "w"));
            section(&mut out, "graph of A-", edge_list(&graph_of(a_minus)) + "\n");
        }
        CharacteristicForm::Sign { s_a, s_b } => {
            let s_c = augment_with_feedback_edge(s_a, ell).map_err(|e| Failure::input(e.to_string()))?;
            section(&mut out, "S_A", s_a);
            section(&mut out, "S_b", vec_line(s_b));
            section(&mut out, "S_C", &s_c);
            let sgn_a: Matrix<f64> = s_a.sgn();
            section(&mut out, "stability program (sgn S_A)", stability_lp(&sgn_a, "v1_"));
            let sgn_c: Matrix<f64> = s_c.sgn();
            section(&mut out, "cycle program (sgn S_C)", farkas_lp(&sgn_c));
            section(&mut out, "graph of S_A", edge_list(&graph_of(s_a)) + "\n");
            section(&mut out, "graph of S_C", edge_list(&graph_of(&s_c)) + "\n");
        }
    }
    Ok(out)
}

fn cmd_explain(args: &ExplainArgs) -> Result<u8, Failure> {
    let (_, _, net) = load(&args.file)?;
    let regime = args.regime.map_or(net.natural_regime(), Regime::from);
    let sys: CharacteristicSystem<f64> =
        characteristic_system_as(&net, regime).map_err(|e| Failure::input(e.to_string()))?;
    print!("{}", explain_text(&net, &sys)?);
    Ok(0)
}
