mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hecke_expsum::characters::CharacterGroup;
use hecke_expsum::expsum::{
    arc_partition_sum, bound_sweep, direct_report, Coefficients, KPolicy, SumReport,
};
use hecke_expsum::farey::{dissect, HMap};
use hecke_expsum::hecke::{build_tau_table, HeckeTable, Sym2Coeffs};
use hecke_expsum::phase::{check_conditions_seeded, ConditionReport, PhaseFunction};
use hecke_expsum::psprimes::{ps_enumerate, required_tau_limit, theorem3_report};
use hecke_expsum::verify::{self, Mode};
use hecke_expsum::Error;

use output::{csv, json, Format, Target};

#[derive(Parser, Debug)]
#[command(
    name = "hecke-expsum",
    version,
    about = "Exponential sums twisted by Hecke eigenvalues"
)]
struct Cli {
    /// Worker threads (EXPSUM_THREADS overrides; default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for sampled checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct OutArgs {
    /// `csv`, `json`, `-` for stdout, or a file path.
    #[arg(long)]
    out: Option<String>,

    /// Force the output format.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct PhaseArgs {
    #[arg(long)]
    gamma: f64,

    /// Multiplier k in f(x) = k (m x)^gamma.
    #[arg(long, conflicts_with = "theta")]
    k: Option<f64>,

    /// Choose k so that f(N) = N^theta.
    #[arg(long)]
    theta: Option<f64>,

    #[arg(long, default_value_t = 1)]
    m: u64,
}

impl PhaseArgs {
    fn phase(&self, n: f64) -> hecke_expsum::Result<PhaseFunction> {
        match self.theta {
            Some(t) => PhaseFunction::with_target(self.m, self.gamma, n, t),
            None => PhaseFunction::new(self.k.unwrap_or(1.0), self.m, self.gamma),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CoeffKind {
    Unit,
    A,
    B,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ramanujan tau and normalized eigenvalues for n <= limit.
    Tau {
        #[arg(long)]
        limit: usize,
        #[arg(long)]
        tau_cache: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Dirichlet characters modulo q.
    Chars {
        #[arg(long)]
        q: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Farey dissection of the h-image of (N, N'].
    Farey {
        #[command(flatten)]
        phase: PhaseArgs,
        /// N:N'
        #[arg(long, value_parser = parse_range)]
        range: (f64, f64),
        #[arg(long = "Q")]
        order: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sum of c_n e(f(n)) over (N, N'], or a bound-ratio sweep.
    Expsum {
        #[command(flatten)]
        phase: PhaseArgs,
        /// N:N'
        #[arg(long, value_parser = parse_range, required_unless_present = "sweep")]
        range: Option<(f64, f64)>,
        /// Geometric grid LO:HI:COUNT of N values, summing over (N, 2N].
        #[arg(long, value_parser = parse_grid, conflicts_with = "range")]
        sweep: Option<Grid>,
        #[arg(long, value_enum, default_value = "unit")]
        coeffs: CoeffKind,
        #[arg(long, default_value_t = 1)]
        coprime_to: u64,
        /// Farey level for the arc decomposition.
        #[arg(long = "Q")]
        order: Option<u64>,
        /// Include the per-arc values (requires --Q).
        #[arg(long, requires = "order")]
        breakdown: bool,
        /// Size-window parameter eta.
        #[arg(long, default_value_t = 0.01)]
        eta: f64,
        /// Attach the regularity-condition report (uses --seed).
        #[arg(long)]
        check_conditions: bool,
        #[arg(long)]
        tau_cache: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Piatetski-Shapiro primes floor(n^c) and their eigenvalue sums.
    Psprimes {
        #[arg(long, default_value_t = 1.02)]
        c: f64,
        #[arg(long = "N", required_unless_present = "grid")]
        n: Option<u64>,
        /// Geometric grid LO:HI:COUNT of N values.
        #[arg(long, value_parser = parse_grid, conflicts_with = "n")]
        grid: Option<Grid>,
        #[arg(long)]
        tau_cache: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the invariant suite.
    Verify {
        #[arg(long)]
        quick: bool,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected N:N'")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

/// Geometric grid of N values, endpoints included.
#[derive(Debug, Clone)]
struct Grid(Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, count] = parts[..] else {
        return Err("expected LO:HI:COUNT".into());
    };
    let lo: f64 = lo.parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("{e}"))?;
    let count: usize = count.parse().map_err(|e| format!("{e}"))?;
    if !(lo >= 1.0 && hi >= lo && count >= 1) {
        return Err("need 1 <= LO <= HI and COUNT >= 1".into());
    }
    if count == 1 {
        return Ok(Grid(vec![lo]));
    }
    let step = (hi / lo).ln() / (count - 1) as f64;
    Ok(Grid(
        (0..count)
            .map(|i| {
                if i == count - 1 {
                    hi
                } else {
                    (lo * (step * i as f64).exp()).round()
                }
            })
            .collect(),
    ))
}

enum Failure {
    Usage(String),
    Invariant(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_)
            | Error::Size { .. }
            | Error::OutOfTable { .. }
            | Error::Bracket { .. }
            | Error::NotMonotone { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Invariant(m)) => {
            eprintln!("invariant failure: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), String> {
    let env = match std::env::var("EXPSUM_THREADS") {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("EXPSUM_THREADS must be a positive integer, got {v:?}"))?,
        ),
        Err(_) => None,
    };
    if let Some(n) = env.or(flag) {
        if n == 0 {
            return Err("worker count must be positive".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Tau {
            limit,
            tau_cache,
            out,
        } => cmd_tau(limit, tau_cache.as_deref(), &out),
        Command::Chars { q, out } => cmd_chars(q, &out),
        Command::Farey {
            phase,
            range,
            order,
            out,
        } => cmd_farey(&phase, range, order, &out),
        Command::Expsum {
            phase,
            range,
            sweep,
            coeffs,
            coprime_to,
            order,
            breakdown,
            eta,
            check_conditions,
            tau_cache,
            out,
        } => {
            let opts = ExpsumOpts {
                kind: coeffs,
                coprime_to,
                order,
                breakdown,
                eta,
                conditions: check_conditions.then_some(cli.seed),
                tau_cache,
            };
            match (range, sweep) {
                (Some(r), _) => cmd_expsum(&phase, r, &opts, &out),
                (None, Some(grid)) => cmd_sweep(&phase, &grid.0, &opts, &out),
                (None, None) => Err(Failure::Usage("--range or --sweep is required".into())),
            }
        }
        Command::Psprimes {
            c,
            n,
            grid,
            tau_cache,
            out,
        } => {
            let ns: Vec<u64> = match (n, grid) {
                (Some(n), _) => vec![n],
                (None, Some(g)) => g.0.iter().map(|&x| x as u64).collect(),
                (None, None) => return Err(Failure::Usage("--N or --grid is required".into())),
            };
            cmd_psprimes(c, &ns, tau_cache.as_deref(), &out)
        }
        Command::Verify { quick, out } => cmd_verify(quick, out.as_deref()),
    }
}

/// τ table for `1..=limit`, read from or written to the cache when given.
fn tau_table(limit: usize, cache: Option<&Path>) -> Result<HeckeTable, Failure> {
    if let Some(path) = cache {
        if path.exists() {
            let t = HeckeTable::load(path)?;
            if t.limit() as usize >= limit {
                let mut tau = Vec::with_capacity(limit + 1);
                tau.push(0);
                tau.extend_from_slice(&t.tau_values()[..limit]);
                return Ok(HeckeTable::from_tau(tau)?);
            }
        }
        let t = build_tau_table(limit)?;
        t.save(path)?;
        return Ok(t);
    }
    Ok(build_tau_table(limit)?)
}

fn cmd_tau(limit: usize, cache: Option<&Path>, out: &OutArgs) -> CliResult {
    let table = tau_table(limit, cache)?;
    let target = Target::resolve(out.out.as_deref(), out.format, Format::Csv);
    let body = match target.format {
        Format::Csv => csv(
            &["n", "tau", "lambda"],
            (1..=limit as u64).map(|n| {
                vec![
                    n.to_string(),
                    table.tau(n).unwrap().to_string(),
                    table.lambda(n).unwrap().to_string(),
                ]
            }),
        ),
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                n: u64,
                // as a string: i128 exceeds the range of JSON numbers
                tau: String,
                lambda: f64,
            }
            let rows: Vec<Row> = (1..=limit as u64)
                .map(|n| Row {
                    n,
                    tau: table.tau(n).unwrap().to_string(),
                    lambda: table.lambda(n).unwrap(),
                })
                .collect();
            json(&rows)
        }
    };
    target.write(&body)?;
    Ok(())
}

fn cmd_chars(q: u64, out: &OutArgs) -> CliResult {
    let group = CharacterGroup::new(q)?;
    let target = Target::resolve(out.out.as_deref(), out.format, Format::Csv);
    let body = match target.format {
        Format::Csv => {
            let mut rows = Vec::new();
            for chi in group.characters() {
                for (a, v) in chi.values().iter().enumerate() {
                    rows.push(vec![
                        chi.index().to_string(),
                        a.to_string(),
                        v.re.to_string(),
                        v.im.to_string(),
                    ]);
                }
            }
            csv(&["index", "residue", "re", "im"], rows)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                index: usize,
                principal: bool,
                primitive: bool,
                real: bool,
                gauss_sum: [f64; 2],
                values: Vec<[f64; 2]>,
            }
            let rows: Vec<Row> = group
                .characters()
                .iter()
                .enumerate()
                .map(|(i, chi)| {
                    let g = group.gauss_sum(i);
                    Row {
                        index: chi.index(),
                        principal: chi.is_principal(),
                        primitive: chi.is_primitive(),
                        real: chi.is_real(),
                        gauss_sum: [g.re, g.im],
                        values: chi.values().iter().map(|v| [v.re, v.im]).collect(),
                    }
                })
                .collect();
            json(&rows)
        }
    };
    target.write(&body)?;
    Ok(())
}

fn cmd_farey(phase: &PhaseArgs, (n, nprime): (f64, f64), order: u64, out: &OutArgs) -> CliResult {
    let f = phase.phase(n)?;
    let hmap = HMap::new(&f);
    let arcs = dissect(&hmap, order, n, nprime)?;
    let target = Target::resolve(out.out.as_deref(), out.format, Format::Csv);
    let body = match target.format {
        Format::Csv => csv(
            &["q", "l", "arc_lo", "arc_hi", "x_lo", "x_hi", "x0"],
            arcs.iter().map(|a| {
                vec![
                    a.q.to_string(),
                    a.l.to_string(),
                    a.arc_lo.to_string(),
                    a.arc_hi.to_string(),
                    a.x_lo.to_string(),
                    a.x_hi.to_string(),
                    a.x0.to_string(),
                ]
            }),
        ),
        Format::Json => json(&arcs),
    };
    target.write(&body)?;
    Ok(())
}

struct ExpsumOpts {
    kind: CoeffKind,
    coprime_to: u64,
    order: Option<u64>,
    breakdown: bool,
    eta: f64,
    conditions: Option<u64>,
    tau_cache: Option<PathBuf>,
}

/// Symmetric-square coefficients covering `1..=top` when the kind needs them.
fn sym2_for(
    kind: CoeffKind,
    top: f64,
    cache: Option<&Path>,
) -> Result<Option<Sym2Coeffs>, Failure> {
    if kind == CoeffKind::Unit {
        return Ok(None);
    }
    let top = (top.floor() as usize).max(1);
    let table = tau_table(top, cache)?;
    Ok(Some(Sym2Coeffs::build(&table, top as u64)?))
}

fn coefficients<'a>(
    kind: CoeffKind,
    sym: Option<&'a Sym2Coeffs>,
    coprime_to: u64,
) -> Coefficients<'a> {
    match (kind, sym) {
        (CoeffKind::A, Some(s)) => Coefficients::Sym2(s),
        (CoeffKind::B, Some(s)) => Coefficients::Squarefree {
            table: s,
            coprime_to,
        },
        _ => Coefficients::Unit,
    }
}

#[derive(Serialize)]
struct ExpsumOutput<'a> {
    #[serde(flatten)]
    report: &'a SumReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    conditions: Option<ConditionReport>,
}

fn report_row(r: &SumReport) -> Vec<String> {
    vec![
        r.params.n.to_string(),
        r.params.nprime.to_string(),
        r.params.k.to_string(),
        r.value.re.to_string(),
        r.value.im.to_string(),
        r.abs.to_string(),
        r.bound.to_string(),
        r.ratio.to_string(),
        r.sqrt_ratio.to_string(),
    ]
}

const REPORT_HEADER: [&str; 9] = [
    "N",
    "Nprime",
    "k",
    "re",
    "im",
    "abs",
    "bound",
    "ratio",
    "sqrt_ratio",
];

fn cmd_expsum(
    phase: &PhaseArgs,
    (n, nprime): (f64, f64),
    o: &ExpsumOpts,
    out: &OutArgs,
) -> CliResult {
    let f = phase.phase(n)?;
    let sym = sym2_for(o.kind, nprime, o.tau_cache.as_deref())?;
    let coeffs = coefficients(o.kind, sym.as_ref(), o.coprime_to);
    let mut report = match o.order {
        Some(q) => arc_partition_sum(&coeffs, &f, n, nprime, q)?,
        None => direct_report(&coeffs, &f, n, nprime)?,
    };
    if !o.breakdown {
        report.arcs.clear();
    }
    let conditions = o
        .conditions
        .map(|seed| check_conditions_seeded(&f, n, o.eta, seed, 256));
    if let Some(c) = &conditions {
        if !c.all_pass() {
            eprintln!("warning: phase violates a regularity condition at N = {n}");
        }
    }
    let target = Target::resolve(out.out.as_deref(), out.format, Format::Json);
    let body = match target.format {
        Format::Json => json(&ExpsumOutput {
            report: &report,
            conditions,
        }),
        Format::Csv if o.breakdown => csv(
            &["q", "l", "x_lo", "x_hi", "x0", "terms", "re", "im"],
            report.arcs.iter().map(|a| {
                vec![
                    a.q.to_string(),
                    a.l.to_string(),
                    a.x_lo.to_string(),
                    a.x_hi.to_string(),
                    a.x0.to_string(),
                    a.terms.to_string(),
                    a.value.re.to_string(),
                    a.value.im.to_string(),
                ]
            }),
        ),
        Format::Csv => csv(&REPORT_HEADER, [report_row(&report)]),
    };
    target.write(&body)?;
    Ok(())
}

fn cmd_sweep(phase: &PhaseArgs, grid: &[f64], o: &ExpsumOpts, out: &OutArgs) -> CliResult {
    let top = grid.iter().copied().fold(0.0, f64::max) * 2.0;
    let sym = sym2_for(o.kind, top, o.tau_cache.as_deref())?;
    let coeffs = coefficients(o.kind, sym.as_ref(), o.coprime_to);
    let policy = match phase.theta {
        Some(t) => KPolicy::Target(t),
        None => KPolicy::Fixed(phase.k.unwrap_or(1.0)),
    };
    let sweep = bound_sweep(phase.gamma, phase.m, policy, grid, &coeffs, o.eta)?;
    for s in &sweep.skipped {
        eprintln!("warning: skipped N = {}: {}", s.n, s.reason);
    }
    let target = Target::resolve(out.out.as_deref(), out.format, Format::Csv);
    let body = match target.format {
        Format::Csv => csv(&REPORT_HEADER, sweep.reports.iter().map(report_row)),
        Format::Json => {
            #[derive(Serialize)]
            struct Sweep<'a> {
                reports: &'a [SumReport],
                skipped: &'a [hecke_expsum::expsum::SkippedPoint],
                ratio_slope: Option<f64>,
            }
            json(&Sweep {
                reports: &sweep.reports,
                skipped: &sweep.skipped,
                ratio_slope: sweep.ratio_slope(),
            })
        }
    };
    target.write(&body)?;
    Ok(())
}

fn cmd_psprimes(c: f64, ns: &[u64], cache: Option<&Path>, out: &OutArgs) -> CliResult {
    let top = ns.iter().copied().max().unwrap_or(2);
    let need = required_tau_limit(c, top)?;
    let table = tau_table(need as usize, cache)?;
    let mut reports = Vec::new();
    for &n in ns {
        let run = ps_enumerate(c, n)?;
        let r = theorem3_report(&run, &table)?;
        if !r.in_theorem_range {
            eprintln!("warning: c = {c} is outside theorem range (1, 25/24)");
        }
        if !r.zero_lambda.is_empty() {
            eprintln!(
                "warning: lambda(p) = 0 for p in {:?}; skipped in sign changes",
                r.zero_lambda
            );
        }
        reports.push(r);
    }
    let target = Target::resolve(out.out.as_deref(), out.format, Format::Csv);
    let body = match target.format {
        Format::Csv => csv(
            &[
                "N",
                "c",
                "count",
                "prediction",
                "ratio_count",
                "sum_lambda_sq",
                "ratio_sum",
                "sign_changes",
            ],
            reports.iter().map(|r| {
                vec![
                    r.n.to_string(),
                    r.c.to_string(),
                    r.count.to_string(),
                    r.prediction.to_string(),
                    r.ratio_count.to_string(),
                    r.sum_lambda_sq.to_string(),
                    r.ratio_sum.to_string(),
                    r.sign_changes.to_string(),
                ]
            }),
        ),
        Format::Json => json(&reports),
    };
    target.write(&body)?;
    Ok(())
}

fn cmd_verify(quick: bool, out: Option<&Path>) -> CliResult {
    let mode = if quick { Mode::Quick } else { Mode::Full };
    let report = verify::run(mode)?;
    let target = Target {
        path: out.map(Path::to_path_buf),
        format: Format::Csv,
    };
    target.write(&report.render())?;
    match report.first_failure() {
        None => Ok(()),
        Some(l) => Err(Failure::Invariant(format!("{}: {}", l.name, l.detail))),
    }
}
