use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use lptsp::cover::{allnorm_approx_with, tfp_approx_with, tfp_derandomized_with};
use lptsp::exact::{brute_force_opt, k_stroll_lengths, pareto_dp_opt, K_STROLL_MAX_N};
use lptsp::io::{instance_to_json, parse_instance, parse_instance_file, parse_route};
use lptsp::ktree::{TreeMethod, TreeSweep};
use lptsp::lowerbound::{allnorm_gap, appendix_instance, LineInstance};
use lptsp::metrics::{build_metric, validate_metric, MetricSpec};
use lptsp::report::{csv_table, route_svg, topk_sweep_csv, Algorithm, RunReport};
use lptsp::segdp::{lp_via_segmented, BruteForceOracle, ReductionConfig, SegmentedOracle, SlowedOracle};
use lptsp::{generate, Error, Instance, Objective, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "lptsp", version, about = "Solvers for the L_p traveling salesman family")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Output {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the CSV table here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also write an SVG drawing of the route (line and Euclidean instances).
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Line,
    Euclidean,
    Tree,
    Circle,
    Figure1,
    Appendix,
    Powers2,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Auto,
    Brute,
    Pareto,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Allnorm,
    Tfp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Trees {
    Auto,
    Exact,
    Pd,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Brute,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    Gen {
        kind: Kind,
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Required for line, euclidean and tree.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        /// Copies of the heavy circle point.
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact optimum for one norm.
    Solve {
        /// Instance file; stdin when absent or `-`.
        instance: Option<PathBuf>,
        #[arg(long)]
        norm: Objective,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
        /// Accepted for readability; solve is always exact.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Covering approximations: all-norm or firefighter (L2).
    Approx {
        instance: Option<PathBuf>,
        #[arg(long, value_enum)]
        algo: Algo,
        /// Seed for the randomized firefighter draw.
        #[arg(long)]
        seed: Option<u64>,
        /// Derandomized firefighter over this many budget offsets.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, value_enum, default_value_t = Trees::Auto)]
        trees: Trees,
        #[command(flatten)]
        output: Output,
    },
    /// L_p route through the segmented-TSP dynamic program.
    Reduce {
        instance: Option<PathBuf>,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum)]
        oracle: OracleKind,
        /// Fix the phase offset instead of trying all.
        #[arg(long)]
        j: Option<usize>,
        /// Run the oracle with deadlines scaled by this factor.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[command(flatten)]
        output: Output,
    },
    /// All-norm gap over interval routes of a line instance.
    VerifyLb {
        #[arg(long, conflicts_with = "instance", required_unless_present = "instance")]
        appendix: bool,
        /// Line instance: `{"coords", "start"}` or an instance file with a line metric.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// (candidate, k, ratio) table.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Norms of a given route.
    Eval {
        instance: PathBuf,
        route: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Check an instance file against the metric axioms.
    Validate { instance: Option<PathBuf> },
}

fn read_input(path: Option<&Path>) -> Result<String> {
    let mut text = String::new();
    match path {
        Some(p) if p != Path::new("-") => {
            text = std::fs::read_to_string(p)
                .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", p.display())))?
        }
        _ => {
            std::io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| Error::InvalidParameter(format!("cannot read stdin: {e}")))?;
        }
    }
    Ok(text)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", p.display()))),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                Err(Error::InvalidParameter(format!("cannot write stdout: {e}")))
            }
            _ => Ok(()),
        },
    }
}

fn to_json(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

fn emit_report(instance: &Instance, report: &RunReport, output: &Output, extra: Option<serde_json::Value>) -> Result<()> {
    report.verify(instance)?;
    let text = match extra {
        Some(extra) => to_json(&json!({ "report": report, "details": extra })),
        None => to_json(report),
    };
    write_output(output.out.as_deref(), &text)?;
    if let Some(csv) = &output.csv {
        write_output(Some(csv), &topk_sweep_csv(instance, &report.route)?)?;
    }
    if let Some(svg) = &output.svg {
        write_output(Some(svg), &route_svg(instance, &report.route)?)?;
    }
    Ok(())
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Missing seeds are usage errors (exit 2), like any other missing flag.
fn require_seed(seed: Option<u64>, what: &str) -> u64 {
    seed.unwrap_or_else(|| {
        Cli::command()
            .error(ErrorKind::MissingRequiredArgument, format!("{what} is randomized; pass --seed"))
            .exit()
    })
}

fn gen(kind: Kind, n: usize, seed: Option<u64>, eps: f64, m: usize) -> Result<Instance> {
    match kind {
        Kind::Line => generate::random_line(n, require_seed(seed, "gen line")),
        Kind::Euclidean => generate::random_euclidean(n, require_seed(seed, "gen euclidean")),
        Kind::Tree => generate::random_tree(n, require_seed(seed, "gen tree")),
        Kind::Circle => generate::circle(n, m, eps),
        Kind::Figure1 => generate::figure1(eps),
        Kind::Appendix => generate::appendix(),
        Kind::Powers2 => generate::powers2(n),
    }
}

fn solve(instance: &Instance, norm: Objective, method: Method, output: &Output) -> Result<()> {
    let start = Instant::now();
    let use_pareto = match method {
        Method::Brute => false,
        Method::Pareto => true,
        Method::Auto => matches!(norm, Objective::Lp(_) | Objective::TopK(_)),
    };
    let (route, value) = if use_pareto {
        pareto_dp_opt(instance, norm)?
    } else {
        brute_force_opt(instance, norm)?
    };
    let id = if use_pareto { "pareto_dp" } else { "brute_force" };
    let report = RunReport::new(
        instance,
        Algorithm {
            id: id.into(),
            params: json!({ "norm": norm.to_string() }),
            seed: None,
        },
        route,
        elapsed_ms(start),
    )?;
    emit_report(instance, &report, output, Some(json!({ "optimum": value })))
}

fn approx(instance: &Instance, algo: Algo, seed: Option<u64>, grid: Option<usize>, trees: Trees, output: &Output) -> Result<()> {
    let start = Instant::now();
    let method = match trees {
        Trees::Auto => TreeMethod::Auto,
        Trees::Exact => TreeMethod::Exact,
        Trees::Pd => TreeMethod::PrimalDual,
    };
    let sweep = TreeSweep::build(instance, method)?;
    let (id, route, params, seed, details) = match (algo, grid) {
        (Algo::Allnorm, _) => {
            let (route, schedule) = allnorm_approx_with(instance, &sweep)?;
            ("allnorm", route, json!({ "b": schedule.b, "c": schedule.c }), None, json!({ "schedule": schedule }))
        }
        (Algo::Tfp, Some(g)) => {
            let pick = tfp_derandomized_with(instance, &sweep, g)?;
            let params = json!({ "grid": g, "exponent": pick.exponent, "pattern": format!("{:?}", pick.pattern) });
            ("tfp_derandomized", pick.route, params, None, json!({}))
        }
        (Algo::Tfp, None) => {
            let seed = require_seed(seed, "approx --algo tfp");
            let route = tfp_approx_with(instance, &sweep, &mut ChaCha8Rng::seed_from_u64(seed))?;
            ("tfp", route, json!({}), Some(seed), json!({}))
        }
    };
    let report = RunReport::new(
        instance,
        Algorithm { id: id.into(), params, seed },
        route,
        elapsed_ms(start),
    )?;
    let certified: Vec<bool> = sweep.trees().iter().map(|t| t.is_certified()).collect();
    emit_report(
        instance,
        &report,
        &Output { csv: None, ..clone_output(output) },
        Some(json!({ "trees_certified": certified, "cover": details })),
    )?;
    if let Some(csv) = &output.csv {
        let times = lptsp::visit_times(instance, &report.route)?;
        let strolls = if instance.n() <= K_STROLL_MAX_N { Some(k_stroll_lengths(instance)?) } else { None };
        let rows = times.sorted.iter().enumerate().map(|(i, t)| {
            let lb = strolls.as_ref().map_or(String::new(), |s| s[i].to_string());
            [(i + 1).to_string(), t.to_string(), lb]
        });
        write_output(Some(csv), &csv_table(&["k", "t_k_alg", "k_stroll"], rows))?;
    }
    Ok(())
}

fn clone_output(o: &Output) -> Output {
    Output {
        out: o.out.clone(),
        csv: o.csv.clone(),
        svg: o.svg.clone(),
    }
}

#[allow(clippy::too_many_arguments)]
fn reduce(instance: &Instance, p: f64, eps: f64, k: usize, j: Option<usize>, alpha: f64, output: &Output) -> Result<()> {
    let start = Instant::now();
    let config = ReductionConfig { epsilon: eps, k, j };
    let slowed = SlowedOracle { alpha };
    let oracle: &dyn SegmentedOracle = if alpha == 1.0 { &BruteForceOracle } else { &slowed };
    let result = lp_via_segmented(instance, p, &config, oracle)?;
    let report = RunReport::new(
        instance,
        Algorithm {
            id: "segmented_reduction".into(),
            params: json!({ "p": p, "eps": eps, "k": k, "j": j, "alpha": alpha, "oracle": "brute" }),
            seed: None,
        },
        result.route,
        elapsed_ms(start),
    )?;
    emit_report(instance, &report, output, Some(json!({ "bound": result.bound, "trace": result.trace })))
}

fn load_line(path: &Path) -> Result<LineInstance> {
    let text = read_input(Some(path))?;
    if let Ok(line) = serde_json::from_str::<LineInstance>(&text) {
        return LineInstance::new(line.coords, line.start);
    }
    let file = parse_instance_file(&text)?;
    match file.metric {
        MetricSpec::Line { coords } => {
            let start = *coords
                .get(file.start)
                .ok_or(Error::InvalidStart { start: file.start, n: coords.len() })?;
            LineInstance::new(coords, start)
        }
        _ => Err(Error::InvalidParameter("verify-lb needs a line instance".into())),
    }
}

fn verify_lb(appendix: bool, instance: Option<&Path>, out: Option<&Path>, csv: Option<&Path>) -> Result<()> {
    let line = match (appendix, instance) {
        (_, Some(path)) => load_line(path)?,
        _ => appendix_instance(),
    };
    let start = Instant::now();
    let cert = allnorm_gap(&line)?;
    let wall = elapsed_ms(start);
    write_output(
        out,
        &to_json(&json!({
            "gap": cert.gap,
            "candidates": cert.routes.len(),
            "wall_time_ms": wall,
            "certificate": cert,
        })),
    )?;
    if let Some(csv) = csv {
        let rows = cert
            .ratio_rows()?
            .into_iter()
            .map(|(c, k, r)| [c.to_string(), k.to_string(), r.to_string()]);
        write_output(Some(csv), &csv_table(&["candidate", "k", "ratio"], rows))?;
    }
    Ok(())
}

fn validate(text: &str) -> Result<bool> {
    let file = parse_instance_file(text)?;
    let table = build_metric(&file.metric)?;
    let mut problems = Vec::new();
    if file.start >= table.n() {
        problems.push(format!("start {} out of range for {} vertices", file.start, table.n()));
    }
    let violations = validate_metric(&table);
    let valid = problems.is_empty() && violations.is_empty();
    write_output(
        None,
        &to_json(&json!({ "valid": valid, "n": table.n(), "problems": problems, "violations": violations })),
    )?;
    Ok(valid)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen { kind, n, seed, eps, m, out } => {
            let inst = gen(kind, n, seed, eps, m)?;
            write_output(out.as_deref(), &instance_to_json(&inst))?;
        }
        Command::Solve { instance, norm, method, exact: _, output } => {
            let inst = parse_instance(&read_input(instance.as_deref())?)?;
            solve(&inst, norm, method, &output)?;
        }
        Command::Approx { instance, algo, seed, grid, trees, output } => {
            let inst = parse_instance(&read_input(instance.as_deref())?)?;
            approx(&inst, algo, seed, grid, trees, &output)?;
        }
        Command::Reduce { instance, p, eps, k, oracle: OracleKind::Brute, j, alpha, output } => {
            let inst = parse_instance(&read_input(instance.as_deref())?)?;
            reduce(&inst, p, eps, k, j, alpha, &output)?;
        }
        Command::VerifyLb { appendix, instance, out, csv } => {
            verify_lb(appendix, instance.as_deref(), out.as_deref(), csv.as_deref())?;
        }
        Command::Eval { instance, route, output } => {
            let inst = parse_instance(&read_input(Some(&instance))?)?;
            let start = Instant::now();
            let route = parse_route(&read_input(Some(&route))?, &inst)?;
            let report = RunReport::new(
                &inst,
                Algorithm { id: "eval".into(), params: json!({}), seed: None },
                route,
                elapsed_ms(start),
            )?;
            emit_report(&inst, &report, &output, None)?;
        }
        Command::Validate { instance } => return validate(&read_input(instance.as_deref())?),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = std::env::var("LPTSP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
