use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use cdadapt::agp::{extract_pool_static, extract_pool_time, OperatorPool, PoolKind};
use cdadapt::molham::{load_problem, MolecularProblem};
use cdadapt::pipeline::{adapt_method, build_basis, build_pool, execute, PoolChoice, RunSettings};
use cdadapt::report::{
    compare, csv_string, format_error, pretty_table, EtaRow, Method, RunReport, ETA_HEADER,
    RESOURCE_HEADER, SCAN_HEADER,
};
use cdadapt::Error;

#[derive(Parser)]
#[command(name = "cdadapt", version, about = "Counterdiabatic ADAPT-VQE on exactly simulated molecular Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an operator pool and report its size
    Pool(PoolArgs),
    /// Run one method on one problem
    Run(RunArgs),
    /// Run methods over a directory of problem files
    Scan(ScanArgs),
    /// Tabulate error and resources of several run reports
    Compare(CompareArgs),
    /// Exact ground-state energy by dense diagonalization
    Fci(FciArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PoolKindArg {
    Cd,
    Fermionic,
}

impl From<PoolKindArg> for PoolChoice {
    fn from(k: PoolKindArg) -> Self {
        match k {
            PoolKindArg::Cd => PoolChoice::Cd,
            PoolKindArg::Fermionic => PoolChoice::Fermionic,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    CdAdapt,
    Adapt,
    Dcqo,
    Fci,
}

/// Options shared by every subcommand that builds or runs something.
#[derive(Args, Clone)]
struct Common {
    /// JSON file of run settings; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "pool-kind", value_enum)]
    pool_kind: Option<PoolKindArg>,
    /// Nested-commutator order
    #[arg(long)]
    l: Option<usize>,
    /// Evaluate the pool at this time instead of the static union
    #[arg(long = "t-prime")]
    t_prime: Option<f64>,
    #[arg(long = "pool-threshold")]
    pool_threshold: Option<f64>,
    /// Total evolution time
    #[arg(long = "T")]
    total_time: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct PoolArgs {
    #[arg(long)]
    problem: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Report pool sizes for every order up to --l
    #[arg(long = "sweep-l")]
    sweep_l: bool,
    /// Pool file to write; the size table goes next to it as <stem>.eta.csv
    #[arg(long, default_value = "pool.json")]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct MethodArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "pool")]
    pool: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// Trotter steps for dcqo
    #[arg(long)]
    trotter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[command(flatten)]
    args: MethodArgs,
    /// JSON report path
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
}

#[derive(Args)]
struct ScanArgs {
    /// Directory of problem files
    #[arg(long)]
    problem: PathBuf,
    /// Methods to run, comma separated or repeated
    #[arg(long, value_enum, value_delimiter = ',', default_value = "cd-adapt")]
    method: Vec<MethodArg>,
    #[command(flatten)]
    args: MethodArgs,
    /// CSV output path
    #[arg(long, default_value = "scan.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Run report files
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    /// CSV output path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FciArgs {
    #[arg(long)]
    problem: PathBuf,
    /// JSON report path
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::OutOfRange { .. } => 2,
        Error::Numerical(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Pool(a) => cmd_pool(a),
        Command::Run(a) => cmd_run(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Fci(a) => cmd_fci(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn set_threads(n: Option<usize>) -> CliResult<()> {
    if let Some(n) = n {
        if n == 0 {
            return Err(Failure::Usage("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

/// Defaults, then the config file, then flags.
fn settings_from(common: &Common, extra: Option<&MethodArgs>) -> CliResult<RunSettings> {
    let mut s = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<RunSettings>(&text)
                .map_err(|e| Failure::Core(Error::Schema(format!("{}: {e}", path.display()))))?
        }
        None => RunSettings::default(),
    };
    if let Some(k) = common.pool_kind {
        s.pool_kind = k.into();
    }
    if let Some(l) = common.l {
        s.l = l;
    }
    if common.t_prime.is_some() {
        s.t_prime = common.t_prime;
    }
    if let Some(v) = common.pool_threshold {
        s.pool_threshold = v;
    }
    if let Some(v) = common.total_time {
        s.total_time = v;
    }
    if let Some(m) = extra {
        if let Some(v) = m.epsilon {
            s.epsilon = v;
        }
        if let Some(v) = m.max_iter {
            s.max_iter = v;
        }
        if let Some(v) = m.trotter {
            s.trotter = v;
        }
        if let Some(v) = m.seed {
            s.seed = v;
        }
        if let Some(p) = &m.pool {
            s.pool_file = Some(p.display().to_string());
        }
    }
    Ok(s)
}

/// Resolves the method flag against the pool kind: the ADAPT family is
/// tagged by the pool it runs on.
fn resolve_method(s: &mut RunSettings, method: Option<MethodArg>, kind_flag: Option<PoolKindArg>) {
    match method {
        Some(MethodArg::Fci) => s.method = Method::Fci,
        Some(MethodArg::Dcqo) => s.method = Method::Dcqo,
        Some(MethodArg::CdAdapt) => {
            if kind_flag.is_none() {
                s.pool_kind = PoolChoice::Cd;
            }
            s.method = adapt_method(s.pool_kind);
        }
        Some(MethodArg::Adapt) => {
            if kind_flag.is_none() {
                s.pool_kind = PoolChoice::Fermionic;
            }
            s.method = adapt_method(s.pool_kind);
        }
        None => {
            if matches!(s.method, Method::CdAdapt | Method::AdaptFermionic) {
                s.method = adapt_method(s.pool_kind);
            }
        }
    }
}

fn load_pool_for(s: &mut RunSettings) -> CliResult<Option<OperatorPool>> {
    let Some(path) = &s.pool_file else {
        return Ok(None);
    };
    let pool = OperatorPool::load(path)?;
    s.pool_kind = match pool.kind {
        PoolKind::Fermionic => PoolChoice::Fermionic,
        PoolKind::CdStatic | PoolKind::CdTime => PoolChoice::Cd,
    };
    if matches!(s.method, Method::CdAdapt | Method::AdaptFermionic) {
        s.method = adapt_method(s.pool_kind);
    }
    Ok(Some(pool))
}

fn load(path: &Path) -> CliResult<MolecularProblem> {
    load_problem(path, None).map_err(|e| {
        Failure::Core(match e {
            Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
            other => other,
        })
    })
}

fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    std::io::Write::write_all(&mut tmp, contents.as_bytes())?;
    tmp.persist(path).map_err(|e| Failure::Core(Error::Io(e.error)))?;
    Ok(())
}

fn eta_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("pool");
    out.with_file_name(format!("{stem}.eta.csv"))
}

fn cmd_pool(a: PoolArgs) -> CliResult<()> {
    set_threads(a.common.threads)?;
    let s = settings_from(&a.common, None)?;
    s.validate()?;
    let problem = load(&a.problem)?;
    let (pool, rows) = match s.pool_kind {
        PoolChoice::Fermionic => {
            let pool = build_pool(&problem, &s)?;
            let rows = vec![EtaRow {
                l: None,
                t_prime: None,
                eta: pool.len(),
            }];
            (pool, rows)
        }
        PoolChoice::Cd => {
            let basis = build_basis(&problem, s.l, s.algebra_threshold)?;
            let schedule = s.schedule()?;
            let orders: Vec<usize> = if a.sweep_l { (1..=s.l).collect() } else { vec![s.l] };
            let mut rows = Vec::new();
            let mut last = None;
            for l in orders {
                let pool = match s.t_prime {
                    None => extract_pool_static(&basis, l, s.pool_threshold)?,
                    Some(t) => extract_pool_time(&basis, l, t, &schedule, s.pool_threshold)?,
                };
                rows.push(EtaRow {
                    l: Some(l),
                    t_prime: s.t_prime,
                    eta: pool.len(),
                });
                last = Some(pool);
            }
            (last.expect("at least one order"), rows)
        }
    };
    for r in &rows {
        match r.l {
            Some(l) => println!("l = {l}  eta = {}", r.eta),
            None => println!("eta = {}", r.eta),
        }
    }
    write_atomic(&a.out, &serde_json::to_string_pretty(&pool.to_file()).map_err(Error::from)?)?;
    let eta = eta_path(&a.out);
    write_atomic(&eta, &csv_string(&ETA_HEADER, &rows)?)?;
    eprintln!("wrote {} and {}", a.out.display(), eta.display());
    Ok(())
}

fn print_summary(r: &RunReport) {
    let dist = r.distance.map(|d| format!(" at {d} A")).unwrap_or_default();
    println!("method      {}", r.method);
    println!("molecule    {}{dist}", r.molecule);
    println!("status      {}", r.status);
    println!("energy      {:.12} Ha", r.energy);
    if let Some(e) = r.fci_energy {
        println!("fci         {e:.12} Ha");
    }
    println!("error       {}", format_error(r.error));
    if let Some(n) = r.pool_size {
        println!("pool size   {n}");
    }
    println!("iterations  {}", r.iterations.len());
    println!("n_params    {}", r.resources.parameter_count);
    println!("n_cnots     {}", r.resources.cnot_count);
}

fn cmd_run(a: RunArgs) -> CliResult<()> {
    set_threads(a.args.common.threads)?;
    let mut s = settings_from(&a.args.common, Some(&a.args))?;
    resolve_method(&mut s, a.method, a.args.common.pool_kind);
    let pool = load_pool_for(&mut s)?;
    let problem = load(&a.problem)?;
    let report = execute(&problem, &s, pool)?;
    print_summary(&report);
    write_atomic(&a.out, &report.to_json()?)?;
    Ok(())
}

fn problem_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Failure::Usage(format!("{} is not a directory", dir.display())));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn cmd_scan(a: ScanArgs) -> CliResult<()> {
    set_threads(a.args.common.threads)?;
    let files = problem_files(&a.problem)?;
    if files.is_empty() {
        log::warn!("no problem files in {}", a.problem.display());
    }
    let base = settings_from(&a.args.common, Some(&a.args))?;
    base.validate()?;
    let mut runs = Vec::new();
    for m in &a.method {
        let mut s = base.clone();
        resolve_method(&mut s, Some(*m), a.args.common.pool_kind);
        let pool = load_pool_for(&mut s)?;
        runs.push((s, pool));
    }

    let loaded: Vec<(PathBuf, cdadapt::Result<MolecularProblem>)> = files
        .into_iter()
        .map(|f| {
            let p = load_problem(&f, None);
            (f, p)
        })
        .collect();
    let mut problems = Vec::new();
    for (f, p) in loaded {
        match p {
            Ok(p) => problems.push(p),
            Err(e) => eprintln!("skipping {}: {e}", f.display()),
        }
    }
    problems.sort_by(|x, y| x.distance().partial_cmp(&y.distance()).unwrap_or(std::cmp::Ordering::Equal));

    let results: Vec<Vec<cdadapt::Result<RunReport>>> = problems
        .par_iter()
        .map(|p| runs.iter().map(|(s, pool)| execute(p, s, pool.clone())).collect())
        .collect();
    let mut rows = Vec::new();
    let mut failures = 0;
    for (p, per) in problems.iter().zip(results) {
        for r in per {
            match r {
                Ok(r) => rows.push(r.scan_row()),
                Err(e) => {
                    failures += 1;
                    eprintln!("{} at {:?}: {e}", p.label(), p.distance());
                }
            }
        }
    }
    write_atomic(&a.out, &csv_string(&SCAN_HEADER, &rows)?)?;
    println!("{} rows written to {}", rows.len(), a.out.display());
    if failures > 0 {
        return Err(Failure::Core(Error::Numerical(format!("{failures} runs failed"))));
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> CliResult<()> {
    let reports = a
        .reports
        .iter()
        .map(RunReport::load)
        .collect::<cdadapt::Result<Vec<_>>>()?;
    let rows = compare(&reports)?;
    print!("{}", pretty_table(&rows));
    if let Some(out) = a.out {
        write_atomic(&out, &csv_string(&RESOURCE_HEADER, &rows)?)?;
    }
    Ok(())
}

fn cmd_fci(a: FciArgs) -> CliResult<()> {
    let problem = load(&a.problem)?;
    let s = RunSettings {
        method: Method::Fci,
        ..RunSettings::default()
    };
    let report = execute(&problem, &s, None)?;
    println!("E_FCI = {:.12} Ha", report.energy);
    if let Some(out) = a.out {
        write_atomic(&out, &report.to_json()?)?;
    }
    Ok(())
}
