use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use sumproduct::census::{
    census_bruteforce, count_rank_bound, count_rank_exact, measured_constant, solvable_pairs_bruteforce,
    CensusRecord, SolvablePairRecord, DEFAULT_PAIR_BUDGET,
};
use sumproduct::config::{Format, RunConfig};
use sumproduct::incidence::{
    count_incidences, count_solutions_by_f, parse_pairs, random_family, random_pairs, theorem_report,
    FamilySizes, SetFamily, DEFAULT_SOLVE_BUDGET,
};
use sumproduct::matrix::space_size;
use sumproduct::spectrum::second_singular_direction;
use sumproduct::verify::{run_all, LAMBDA_MARGIN};
use sumproduct::{audit_graph, AuditOptions, Error, FieldSpec, Result, SpectrumOptions, SumProductDigraph};

/// Sum-product digraphs over matrix rings: censuses, audits, spectra and counts.
#[derive(Parser)]
#[command(name = "sumproduct", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Field order (a prime power).
    #[arg(long, global = true)]
    q: Option<String>,
    /// Field characteristic (with --e, instead of --q).
    #[arg(long, global = true)]
    p: Option<String>,
    /// Extension degree.
    #[arg(long, global = true)]
    e: Option<String>,
    /// Monic modulus coefficients, lowest first, comma separated.
    #[arg(long, global = true)]
    poly: Option<String>,
    /// Matrix size.
    #[arg(long, global = true)]
    n: Option<String>,
    /// Number of products in the sum.
    #[arg(long, global = true)]
    d: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Worker threads (default: available processors).
    #[arg(long, global = true)]
    workers: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<String>,
    /// json or csv.
    #[arg(long, global = true)]
    format: Option<String>,
    /// key=value file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Work budget (pair iterations or equation evaluations).
    #[arg(long, global = true)]
    budget: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Rank census of n x t matrices and solvable-pair table.
    Census(CensusArgs),
    /// Digraph checks.
    Graph {
        #[command(subcommand)]
        action: GraphCommand,
    },
    /// Second singular value of the adjacency matrix.
    Spectrum(SpectrumArgs),
    /// Solution count of A_1 B_1 + ... + A_d B_d = E + F over a set family.
    Solve(SolveArgs),
    /// Point-line incidences in M_n(F_q)^2.
    Incidence(IncidenceArgs),
    /// Run every acceptance check at q = 3, n = 2, d = 1.
    VerifyAll,
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Degree, normality and common-neighbor prediction audit.
    Audit(AuditArgs),
}

#[derive(Args)]
struct CensusArgs {
    /// Column count (default n).
    #[arg(long)]
    t: Option<String>,
    /// rank, pairs or all.
    #[arg(long)]
    table: Option<String>,
    #[arg(long)]
    enum_cap: Option<String>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    vertex_sample: Option<String>,
    #[arg(long)]
    pair_sample: Option<String>,
    /// Audit every vertex.
    #[arg(long)]
    exhaustive: bool,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    /// Dense eigensolve instead of power iteration (small graphs only).
    #[arg(long)]
    dense_oracle: bool,
    #[arg(long)]
    spectral_cap: Option<String>,
}

#[derive(Args)]
struct SolveArgs {
    /// One size for every set, or 2d+2 sizes A_1..A_d,B_1..B_d,E,F.
    #[arg(long)]
    sizes: Option<String>,
    /// Family file with [A1].. [Bd] [E] [F] sections.
    #[arg(long)]
    family: Option<String>,
    /// Use this lambda instead of measuring one.
    #[arg(long)]
    lambda: Option<String>,
}

#[derive(Args)]
struct IncidenceArgs {
    /// |P|,|L| (or one value for both) for random configurations.
    #[arg(long)]
    sizes: Option<String>,
    /// File of "X Y" index pairs.
    #[arg(long)]
    points: Option<String>,
    /// File of "A B" index pairs (the line Y = A X + B).
    #[arg(long)]
    lines: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
}

type Flags = Vec<(&'static str, Option<String>)>;

fn switch(on: bool) -> Option<String> {
    on.then(|| "true".to_string())
}

impl Cli {
    fn flags(&self) -> Flags {
        let g = &self.global;
        let mut flags: Flags = vec![
            ("q", g.q.clone()),
            ("p", g.p.clone()),
            ("e", g.e.clone()),
            ("poly", g.poly.clone()),
            ("n", g.n.clone()),
            ("d", g.d.clone()),
            ("seed", g.seed.clone()),
            ("workers", g.workers.clone()),
            ("out", g.out.clone()),
            ("format", g.format.clone()),
            ("budget", g.budget.clone()),
        ];
        match &self.command {
            Command::Census(a) => flags.extend([
                ("t", a.t.clone()),
                ("table", a.table.clone()),
                ("enum-cap", a.enum_cap.clone()),
            ]),
            Command::Graph {
                action: GraphCommand::Audit(a),
            } => flags.extend([
                ("vertex-sample", a.vertex_sample.clone()),
                ("pair-sample", a.pair_sample.clone()),
                ("exhaustive", switch(a.exhaustive)),
            ]),
            Command::Spectrum(a) => flags.extend([
                ("tol", a.tol.clone()),
                ("max-iter", a.max_iter.clone()),
                ("dense-oracle", switch(a.dense_oracle)),
                ("spectral-cap", a.spectral_cap.clone()),
            ]),
            Command::Solve(a) => flags.extend([
                ("sizes", a.sizes.clone()),
                ("family", a.family.clone()),
                ("lambda", a.lambda.clone()),
            ]),
            Command::Incidence(a) => flags.extend([
                ("sizes", a.sizes.clone()),
                ("points", a.points.clone()),
                ("lines", a.lines.clone()),
                ("lambda", a.lambda.clone()),
            ]),
            Command::VerifyAll => {}
        }
        flags
    }

    fn name(&self) -> &'static str {
        match self.command {
            Command::Census(_) => "census",
            Command::Graph { .. } => "graph audit",
            Command::Spectrum(_) => "spectrum",
            Command::Solve(_) => "solve",
            Command::Incidence(_) => "incidence",
            Command::VerifyAll => "verify-all",
        }
    }
}

/// A finished report: JSON body, optional CSV rendering, and timings.
struct Output {
    report: Value,
    csv: Option<String>,
    timing: Value,
    passed: bool,
}

impl Output {
    fn json(report: Value) -> Self {
        Output {
            report,
            csv: None,
            timing: Value::Null,
            passed: true,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports are serializable")
}

fn census(cfg: &mut RunConfig, field: &Arc<FieldSpec>) -> Result<Output> {
    let n = cfg.n;
    let t = *cfg.t.get_or_insert(n);
    let budget = *cfg.budget.get_or_insert(DEFAULT_PAIR_BUDGET);
    let q = field.order();
    let mut rank: Vec<CensusRecord> = (0..=n.min(t))
        .map(|k| {
            let exact = count_rank_exact(n, t, k, field)?;
            let bound = count_rank_bound(n, t, k, field)?;
            Ok(CensusRecord {
                n,
                t,
                q,
                k,
                exact,
                bound,
                ratio: exact as f64 / bound as f64,
            })
        })
        .collect::<Result<_>>()?;
    let enumerated = space_size(q, n * t).is_some_and(|s| s <= cfg.enum_cap);
    if enumerated {
        let brute = census_bruteforce(n, t, field, cfg.enum_cap)?;
        if brute != rank {
            return Err(Error::AuditFailure(format!(
                "rank census disagrees with enumeration: {brute:?} vs {rank:?}"
            )));
        }
        rank = brute;
    }
    let pairs = match cfg.table.as_str() {
        "rank" => None,
        table => match solvable_pairs_bruteforce(n, t, field, budget) {
            Ok(p) => Some(p),
            Err(Error::BudgetExceeded { .. }) if table == "all" => None,
            Err(e) => return Err(e),
        },
    };
    let show_rank = cfg.table != "pairs";
    let mut csv = String::new();
    if show_rank {
        csv += CensusRecord::CSV_HEADER;
        csv.push('\n');
        rank.iter().for_each(|r| csv += &(r.csv_row() + "\n"));
    }
    if let Some(p) = &pairs {
        if show_rank {
            csv.push('\n');
        }
        csv += SolvablePairRecord::CSV_HEADER;
        csv.push('\n');
        p.iter().for_each(|r| csv += &(r.csv_row() + "\n"));
    }
    let report = json!({
        "rank_census": show_rank.then_some(&rank),
        "checked_by_enumeration": enumerated,
        "solvable_pairs": pairs,
        "solvable_pairs_measured_constant": pairs.as_deref().map(measured_constant),
        "extrapolation": !field.is_odd() || n > t,
    });
    Ok(Output {
        csv: Some(csv),
        ..Output::json(report)
    })
}

fn graph_of(cfg: &RunConfig, field: &Arc<FieldSpec>, d: usize) -> Result<SumProductDigraph> {
    SumProductDigraph::new(field, cfg.n, d)
}

fn audit(cfg: &mut RunConfig, field: &Arc<FieldSpec>) -> Result<Output> {
    let graph = graph_of(cfg, field, cfg.d)?;
    let report = audit_graph(
        &graph,
        &AuditOptions {
            vertex_sample: cfg.vertex_sample,
            pair_sample: cfg.pair_sample,
            seed: cfg.seed,
            exhaustive: cfg.exhaustive,
        },
    )?;
    Ok(Output::json(json!({
        "graph": graph.summary(),
        "audit": report,
        "extrapolation": !field.is_odd(),
    })))
}

fn spectrum_options(cfg: &RunConfig) -> SpectrumOptions {
    SpectrumOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        seed: cfg.seed,
        spectral_cap: cfg.spectral_cap,
        dense_oracle: cfg.dense_oracle,
    }
}

fn spectrum(cfg: &mut RunConfig, field: &Arc<FieldSpec>) -> Result<Output> {
    let graph = graph_of(cfg, field, cfg.d)?;
    let report = second_singular_direction(&graph, &spectrum_options(cfg))?;
    Ok(Output::json(json!({
        "graph": graph.summary(),
        "spectrum": report,
        "extrapolation": !field.is_odd(),
    })))
}

/// The `lambda` used in bounds: given on the command line, else measured
/// (with a small safety margin) when the graph is within the spectral cap.
fn lambda_for(cfg: &RunConfig, graph: &SumProductDigraph) -> Result<(Option<f64>, &'static str)> {
    if let Some(l) = cfg.lambda {
        return Ok((Some(l), "given"));
    }
    if graph.n_vertices() > cfg.spectral_cap {
        return Ok((None, "skipped: above spectral cap"));
    }
    let opts = SpectrumOptions {
        dense_oracle: false,
        ..spectrum_options(cfg)
    };
    let r = second_singular_direction(graph, &opts)?;
    Ok((Some(r.lambda_est * LAMBDA_MARGIN), "measured"))
}

fn solve(cfg: &mut RunConfig, field: &Arc<FieldSpec>) -> Result<Output> {
    let graph = graph_of(cfg, field, cfg.d)?;
    let budget = *cfg.budget.get_or_insert(DEFAULT_SOLVE_BUDGET);
    let family = match &cfg.family {
        Some(path) => SetFamily::parse(&read(path)?, &graph)?,
        None => {
            let sizes = cfg.sizes.get_or_insert_with(|| vec![20]).clone();
            let sizes = match sizes[..] {
                [s] => FamilySizes::uniform(cfg.d, s),
                _ => FamilySizes(sizes),
            };
            random_family(&graph, &sizes, cfg.seed)?
        }
    };
    let (lambda, lambda_source) = lambda_for(cfg, &graph)?;
    let report = theorem_report(&graph, &family, lambda, budget)?;
    let second = count_solutions_by_f(&graph, &family, budget)?;
    if second != report.count {
        return Err(Error::AuditFailure(format!(
            "solution counters disagree: {} vs {second}",
            report.count
        )));
    }
    Ok(Output::json(json!({
        "graph": graph.summary(),
        "family_sizes": family.sizes(),
        "lambda_source": lambda_source,
        "result": report,
    })))
}

fn incidence(cfg: &mut RunConfig, field: &Arc<FieldSpec>) -> Result<Output> {
    let graph = graph_of(cfg, field, 1)?;
    let ring = graph.ring();
    let budget = *cfg.budget.get_or_insert(DEFAULT_SOLVE_BUDGET);
    let sizes = cfg.sizes.get_or_insert_with(|| vec![500]).clone();
    let (np, nl) = match sizes[..] {
        [s] => (s, s),
        [p, l] => (p, l),
        _ => return Err(Error::Config("incidence takes one or two sizes".into())),
    };
    let points = match &cfg.points {
        Some(path) => parse_pairs(&read(path)?)?,
        None => random_pairs(ring, np, cfg.seed)?,
    };
    let lines = match &cfg.lines {
        Some(path) => parse_pairs(&read(path)?)?,
        None => random_pairs(ring, nl, cfg.seed.wrapping_add(1))?,
    };
    let (lambda, lambda_source) = lambda_for(cfg, &graph)?;
    let report = count_incidences(ring, &points, &lines, lambda, budget)?;
    Ok(Output::json(json!({
        "graph": graph.summary(),
        "lambda_source": lambda_source,
        "result": report,
    })))
}

fn verify_all(cfg: &mut RunConfig) -> Result<Output> {
    if cfg.q != Some(3) || cfg.n != 2 || cfg.d != 1 {
        return Err(Error::Config("verify-all runs at q = 3, n = 2, d = 1 only".into()));
    }
    let (report, timings) = run_all(cfg.seed);
    for c in &report.criteria {
        eprintln!("{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.title);
    }
    Ok(Output {
        passed: report.passed,
        timing: to_value(&timings),
        ..Output::json(to_value(&report))
    })
}

fn run(cli: &Cli) -> Result<(RunConfig, Output)> {
    let start = Instant::now();
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.global.config {
        cfg.apply_text(&read(path)?)?;
    }
    for (key, value) in cli.flags() {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    cfg.validate()?;
    let field = cfg.resolve_field()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build_global()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let default_format = if matches!(cli.command, Command::Census(_)) {
        Format::Csv
    } else {
        Format::Json
    };
    let format = *cfg.format.get_or_insert(default_format);
    let mut out = match &cli.command {
        Command::Census(_) => census(&mut cfg, &field)?,
        Command::Graph { .. } => audit(&mut cfg, &field)?,
        Command::Spectrum(_) => spectrum(&mut cfg, &field)?,
        Command::Solve(_) => solve(&mut cfg, &field)?,
        Command::Incidence(_) => incidence(&mut cfg, &field)?,
        Command::VerifyAll => verify_all(&mut cfg)?,
    };
    if format == Format::Csv && out.csv.is_none() {
        return Err(Error::Config(format!("{} has no csv output", cli.name())));
    }
    let total = start.elapsed().as_secs_f64();
    out.timing = match out.timing {
        Value::Object(mut m) => {
            m.insert("total_seconds".into(), json!(total));
            Value::Object(m)
        }
        _ => json!({ "total_seconds": total }),
    };
    Ok((cfg, out))
}

fn render(cli: &Cli, cfg: &RunConfig, out: &Output) -> String {
    match (cfg.format, &out.csv) {
        (Some(Format::Csv), Some(csv)) => {
            let config = serde_json::to_string(cfg).expect("config is serializable");
            format!("# command: {}\n# config: {config}\n{csv}", cli.name())
        }
        _ => {
            let envelope = json!({
                "command": cli.name(),
                "config": cfg,
                "report": out.report,
                "timing": out.timing,
            });
            serde_json::to_string_pretty(&envelope).expect("report is serializable") + "\n"
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|(cfg, out)| {
        let text = render(&cli, &cfg, &out);
        match &cfg.out {
            Some(path) => fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(out.passed)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
