//! `waveuc`: single solves, convergence sweeps and iteration tables as CSV.

mod config_file;

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use waveuc_core::experiment::CsvRow;
use waveuc_core::postproc::eoc;
use waveuc_core::{run, DiscretizationConfig, GmresConfig, Orders, PrecondChoice, Preset};

use config_file::{parse_intervals, parse_list, Settings};

#[derive(Parser, Debug)]
#[command(name = "waveuc", version, about = "Space-time finite element reconstruction of 1D waves from interior data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Assemble, solve, lift and measure one configuration.
    Solve(SolveArgs),
    /// Refinement sweep with h = dt and observed orders of convergence.
    Convergence(ConvergenceArgs),
    /// GMRes iteration counts per preconditioner and slab count.
    Iters(ItersArgs),
}

#[derive(Args, Debug)]
struct ProblemArgs {
    /// `key = value` settings file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<Preset>,
    /// spatial order of the primal variable
    #[arg(long)]
    k: Option<usize>,
    /// temporal order of the primal variable
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    kstar: Option<usize>,
    #[arg(long)]
    qstar: Option<usize>,
    /// final time
    #[arg(long = "T")]
    t_final: Option<f64>,
    /// data intervals, e.g. "0,0.25;0.75,1"
    #[arg(long)]
    omega: Option<String>,
    /// Nitsche penalty of the dfb preconditioner
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    maxiter: Option<usize>,
    /// CSV destination, stdout if omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    elems: Option<usize>,
    #[arg(long)]
    slabs: Option<usize>,
    #[arg(long)]
    precond: Option<PrecondChoice>,
    /// file receiving `iter,arnoldi_residual[,true_residual]` lines
    #[arg(long)]
    residual_log: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    precond: Option<PrecondChoice>,
    /// slab counts, e.g. "8,16,32,64"
    #[arg(long)]
    levels: Option<String>,
    /// CSV of observed orders between consecutive levels
    #[arg(long)]
    rates: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ItersArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// e.g. "block,mf,ml,dfb"
    #[arg(long)]
    preconds: Option<String>,
    /// slab counts, e.g. "8,16,32"
    #[arg(long)]
    levels: Option<String>,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Config(String),
    NotConverged,
}

impl From<waveuc_core::Error> for Failure {
    fn from(e: waveuc_core::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<String> for Failure {
    fn from(e: String) -> Self {
        Failure::Config(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

/// Problem settings resolved from flags and the optional settings file.
struct Problem {
    preset: Preset,
    k: usize,
    q: usize,
    kstar: Option<usize>,
    qstar: Option<usize>,
    t_final: f64,
    omega: Vec<[f64; 2]>,
    lambda: Option<f64>,
    gmres: GmresConfig,
}

impl Problem {
    fn resolve(args: &ProblemArgs, file: &Settings) -> Result<Self, String> {
        let preset = file.pick(args.preset, "preset")?.unwrap_or(Preset::Gcc1d);
        let k = file.pick(args.k, "k")?.unwrap_or(1);
        let q = file.pick(args.q, "q")?.unwrap_or(k);
        let omega = match file.pick(args.omega.clone(), "omega")? {
            Some(s) => parse_intervals(&s)?,
            None => preset.omega(),
        };
        let mut gmres = GmresConfig::default();
        if let Some(tol) = file.pick(args.tol, "tol")? {
            gmres.tol = tol;
        }
        if let Some(m) = file.pick(args.maxiter, "maxiter")? {
            gmres.maxiter = m;
        }
        Ok(Self {
            preset,
            k,
            q,
            kstar: file.pick(args.kstar, "kstar")?,
            qstar: file.pick(args.qstar, "qstar")?,
            t_final: file.pick(args.t_final, "T")?.unwrap_or(preset.t_final()),
            omega,
            lambda: file.pick(args.lambda, "lambda")?,
            gmres,
        })
    }

    /// `h = dt` unless `elems` is given.
    fn config(&self, precond: PrecondChoice, n_slabs: usize, elems: Option<usize>) -> DiscretizationConfig {
        let (dk, dq) = precond.default_dual_orders(self.k, self.q);
        let [a, b] = self.preset.domain();
        let matched = ((b - a) * n_slabs as f64 / self.t_final).round().max(4.0) as usize;
        DiscretizationConfig {
            preset: self.preset,
            orders: Orders::new(self.k, self.q, self.kstar.unwrap_or(dk), self.qstar.unwrap_or(dq)),
            n_elems: elems.unwrap_or(matched),
            n_slabs,
            t_final: self.t_final,
            omega: self.omega.clone(),
            lambda: self.lambda,
            precond,
            gmres: self.gmres,
        }
    }
}

fn settings(args: &ProblemArgs) -> Result<Settings, String> {
    match &args.config {
        Some(p) => Settings::read(p),
        None => Ok(Settings::default()),
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).map_err(|e| format!("cannot create {}: {e}", p.display()))?),
        None => Box::new(io::stdout()),
    })
}

fn write_rows(out: &Option<PathBuf>, rows: &[CsvRow]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn summary(row: &CsvRow) -> String {
    let mut s = format!(
        "{} k={} q={} k*={} q*={} N={} ndof={} {} iters={} converged={} LinfL2(u)={:.3e} L2L2(ut)={:.3e}",
        row.preset,
        row.k,
        row.q,
        row.kstar,
        row.qstar,
        row.n,
        row.ndof,
        row.precond,
        row.iters,
        row.converged,
        row.err_linf_l2_u,
        row.err_l2l2_ut
    );
    if let (Some(a), Some(b)) = (row.err_linf_l2_u_bt, row.err_l2l2_ut_bt) {
        s += &format!(" Bt: LinfL2(u)={a:.3e} L2L2(ut)={b:.3e}");
    }
    s
}

fn solve(args: SolveArgs) -> Result<(), Failure> {
    let file = settings(&args.problem)?;
    let problem = Problem::resolve(&args.problem, &file)?;
    let precond = file.pick(args.precond, "precond")?.unwrap_or(PrecondChoice::Mf);
    let slabs = file.pick(args.slabs, "slabs")?.unwrap_or(8);
    let elems = file.pick(args.elems, "elems")?;
    let log = file.pick(args.residual_log, "residual-log")?;
    let cfg = problem.config(precond, slabs, elems);
    let outcome = run(&cfg)?;
    if let Some(path) = log {
        let f = File::create(&path).map_err(|e| format!("cannot create {}: {e}", path.display()))?;
        outcome.report.write_log(io::BufWriter::new(f))?;
    }
    let row = outcome.row();
    eprintln!("{}", summary(&row));
    write_rows(&args.problem.out, &[row])?;
    if outcome.report.converged {
        Ok(())
    } else {
        eprintln!(
            "GMRes stopped after {} iterations ({:?}), relative residual {:.3e}",
            outcome.report.iterations, outcome.report.status, outcome.report.final_residual
        );
        Err(Failure::NotConverged)
    }
}

fn levels(file: &Settings, flag: Option<String>, default: &str) -> Result<Vec<usize>, String> {
    let s = file.pick(flag, "levels")?.unwrap_or_else(|| default.to_string());
    parse_list(&s)
}

fn write_rates(path: &Path, slabs: &[usize], rows: &[CsvRow]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["N_coarse", "N_fine", "eoc_LinfL2_u", "eoc_L2L2_ut", "eoc_LinfL2_u_Bt", "eoc_L2L2_ut_Bt"])?;
    for (i, r) in rate_table(rows).iter().enumerate() {
        let mut rec = vec![slabs[i].to_string(), slabs[i + 1].to_string()];
        rec.extend(r.iter().map(|v| v.map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Observed orders between consecutive rows, one entry per error column.
fn rate_table(rows: &[CsvRow]) -> Vec<[Option<f64>; 4]> {
    let cols: [Vec<Option<f64>>; 4] = [
        rows.iter().map(|r| Some(r.err_linf_l2_u)).collect(),
        rows.iter().map(|r| Some(r.err_l2l2_ut)).collect(),
        rows.iter().map(|r| r.err_linf_l2_u_bt).collect(),
        rows.iter().map(|r| r.err_l2l2_ut_bt).collect(),
    ];
    let rates: Vec<Option<Vec<f64>>> = cols
        .iter()
        .map(|c| c.iter().copied().collect::<Option<Vec<f64>>>().map(|v| eoc(&v)))
        .collect();
    (0..rows.len().saturating_sub(1))
        .map(|i| std::array::from_fn(|c| rates[c].as_ref().map(|r| r[i])))
        .collect()
}

fn convergence(args: ConvergenceArgs) -> Result<(), Failure> {
    let file = settings(&args.problem)?;
    let problem = Problem::resolve(&args.problem, &file)?;
    let precond = file.pick(args.precond, "precond")?.unwrap_or(PrecondChoice::Mf);
    let slabs = levels(&file, args.levels, "8,16,32,64")?;
    if slabs.len() < 3 {
        return Err(Failure::Config(format!(
            "a convergence sweep needs at least 3 levels, got {}",
            slabs.len()
        )));
    }
    for n in &slabs {
        problem.config(precond, *n, None).validate()?;
    }
    let mut rows = Vec::new();
    let mut ok_slabs = Vec::new();
    for &n in &slabs {
        match run(&problem.config(precond, n, None)) {
            Ok(o) => {
                let row = o.row();
                eprintln!("{}", summary(&row));
                rows.push(row);
                ok_slabs.push(n);
            }
            Err(e) => eprintln!("N={n}: {e}"),
        }
    }
    write_rows(&args.problem.out, &rows)?;
    for (i, r) in rate_table(&rows).iter().enumerate() {
        let fmt = |v: Option<f64>| v.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
        eprintln!(
            "EOC N={}->{}: LinfL2(u)={} L2L2(ut)={} Bt: LinfL2(u)={} L2L2(ut)={}",
            ok_slabs[i],
            ok_slabs[i + 1],
            fmt(r[0]),
            fmt(r[1]),
            fmt(r[2]),
            fmt(r[3])
        );
    }
    if let Some(p) = &args.rates {
        write_rates(p, &ok_slabs, &rows)?;
    }
    Ok(())
}

fn iters(args: ItersArgs) -> Result<(), Failure> {
    let file = settings(&args.problem)?;
    let problem = Problem::resolve(&args.problem, &file)?;
    let preconds: Vec<PrecondChoice> = parse_list(
        &file
            .pick(args.preconds, "preconds")?
            .unwrap_or_else(|| "block,mf,ml,dfb".into()),
    )?;
    let slabs = levels(&file, args.levels, "8,16,32")?;
    let mut rows = Vec::new();
    for &p in &preconds {
        for &n in &slabs {
            match run(&problem.config(p, n, None)) {
                Ok(o) => {
                    let row = o.row();
                    eprintln!("{}", summary(&row));
                    rows.push(row);
                }
                Err(e) => eprintln!("{p} N={n}: {e}"),
            }
        }
    }
    write_rows(&args.problem.out, &rows)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Convergence(a) => convergence(a),
        Command::Iters(a) => iters(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::NotConverged) => ExitCode::from(2),
    }
}
