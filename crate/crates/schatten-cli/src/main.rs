//! Command-line front end: channel constructors, structure checks, norm
//! computations, and multiplicativity suites with reproducible seeding.
//!
//! Exit codes: 0 success (all checks passed / optimizer converged), 1 invalid
//! input, 2 non-convergence or failed verification cases, 3 I/O failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use schatten::channel::{ChannelMap, QubitDiagonalParams};
use schatten::error::Error as LibError;
use schatten::linalg::{ComplexMatrix, SchattenExponent};
use schatten::norm::{nu, p2q_norm, OptimizerConfig};
use schatten::verify::{
    run_suite, wh_violation, write_reports_jsonl, write_summary_csv, SuiteConfig, TheoremTag,
};

const EXIT_OK: i32 = 0;
const EXIT_INPUT: i32 = 1;
const EXIT_NONCONVERGED: i32 = 2;
const EXIT_IO: i32 = 3;

/// Environment variable overriding the default seed.
const ENV_SEED: &str = "SCHATTEN_SEED";
/// Environment variable overriding the default restart count.
const ENV_RESTARTS: &str = "SCHATTEN_RESTARTS";

#[derive(Parser)]
#[command(
    name = "schatten",
    version,
    about = "Schatten p->q norms, output purity, and structure tests for matrix-algebra maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a p->q norm or the maximal output purity of a channel
    Norm(NormArgs),
    /// Report structural properties: CP, EP, TP, 2-positivity screening
    Check(CheckArgs),
    /// Run multiplicativity suites or the Werner-Holevo witness
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct ChannelArgs {
    /// Channel family: identity | depolarizing | generalized-depolarizing |
    /// qubit-diag | werner-holevo | transpose | random-cp | random-ep-cp
    #[arg(long, conflicts_with = "file")]
    family: Option<String>,

    /// Channel JSON file: {"n", "m", "transfer": [[re, im], ...], "metadata"?}
    #[arg(long)]
    file: Option<PathBuf>,

    /// Dimension for identity / depolarizing / werner-holevo / transpose
    #[arg(long)]
    d: Option<usize>,

    /// Mixing or scaling parameter(s): one value, or three comma-separated
    /// values for qubit-diag
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,

    /// Bloch shift t1,t2,t3 for qubit-diag (default 0,0,0)
    #[arg(long, allow_hyphen_values = true)]
    shift: Option<String>,

    /// Diagonal of the fixed state for generalized-depolarizing
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,

    /// Express generalized-depolarizing in the eigenbasis of gamma
    #[arg(long)]
    diagonalize_gamma: bool,

    /// Input dimension for the random families
    #[arg(long)]
    n: Option<usize>,

    /// Output dimension for the random families
    #[arg(long)]
    m: Option<usize>,

    /// Kraus operator count for the random families
    #[arg(long)]
    kraus: Option<usize>,

    /// Seed for the random families (defaults to the run seed)
    #[arg(long)]
    chan_seed: Option<u64>,

    /// Draw the random families without the trace-preserving normalization
    #[arg(long)]
    non_trace_preserving: bool,
}

#[derive(Args)]
struct NormArgs {
    #[command(flatten)]
    channel: ChannelArgs,

    /// Input exponent (>= 1, or "inf")
    #[arg(long)]
    p: Option<String>,

    /// Output exponent (>= 1, or "inf")
    #[arg(long)]
    q: Option<String>,

    /// Compute the maximal output purity instead of a p->q norm
    #[arg(long)]
    nu: bool,

    /// Purity exponent t (>= 1), used with --nu
    #[arg(long)]
    t: Option<f64>,

    #[command(flatten)]
    optimizer: OptimizerArgs,

    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    channel: ChannelArgs,

    /// Tolerance on the minimum Choi eigenvalue for complete positivity
    #[arg(long, default_value_t = 1e-9)]
    cp_tol: f64,

    /// Absolute tolerance on Choi entries for entrywise positivity
    #[arg(long, default_value_t = 1e-10)]
    ep_tol: f64,

    /// Tolerance for trace preservation
    #[arg(long, default_value_t = 1e-9)]
    tp_tol: f64,

    /// Random positive inputs for 2-positivity falsification
    #[arg(long, default_value_t = 1000)]
    samples: usize,

    /// Seed for the falsification sampling (and the random families)
    #[arg(long)]
    seed: Option<u64>,

    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Theorem suite to run: 1, 2, or 4
    #[arg(long, conflicts_with = "wh")]
    theorem: Option<u32>,

    /// Evaluate the Werner-Holevo multiplicativity witness instead
    #[arg(long)]
    wh: bool,

    /// Number of generated cases
    #[arg(long, default_value_t = 20)]
    cases: usize,

    /// Integer exponents, comma separated
    #[arg(long, default_value = "2,3")]
    t: String,

    /// Input exponents for the theorem-1 suite, comma separated
    #[arg(long, default_value = "1,1.5,2", allow_hyphen_values = true)]
    p: String,

    /// Dimension for --wh
    #[arg(long, default_value_t = 3)]
    d: usize,

    /// Largest channel dimension drawn by the generators
    #[arg(long, default_value_t = 3)]
    dims: usize,

    /// Relative tolerance for the equality checks
    #[arg(long, default_value_t = 1e-3)]
    tolerance: f64,

    /// Report file (one JSON document per line)
    #[arg(long, default_value = "verify_report.jsonl")]
    out_jsonl: PathBuf,

    /// Summary file (CSV)
    #[arg(long, default_value = "verify_summary.csv")]
    out_csv: PathBuf,

    #[command(flatten)]
    optimizer: OptimizerArgs,

    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct OptimizerArgs {
    /// Random restarts per norm evaluation
    #[arg(long)]
    restarts: Option<usize>,

    /// Iteration cap per restart
    #[arg(long)]
    max_iters: Option<usize>,

    /// Stationarity / smallest-step tolerance
    #[arg(long)]
    step_tol: Option<f64>,

    /// Relative improvement considered progress
    #[arg(long)]
    value_tol: Option<f64>,

    /// Master seed (env SCHATTEN_SEED, then 0, when omitted)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct OutputArgs {
    /// Also write the output document to this file
    #[arg(long)]
    output: Option<PathBuf>,

    /// Output encoding: json | csv | pretty
    #[arg(long, default_value = "json")]
    format: String,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

impl From<LibError> for Failure {
    fn from(e: LibError) -> Self {
        match e {
            LibError::Io(err) => Failure::io(err.to_string()),
            other => Failure::input(other.to_string()),
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version print and succeed; everything else is an
            // input error under the exit-code contract.
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_INPUT,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Norm(args) => cmd_norm(args),
        Command::Check(args) => cmd_check(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

// ---------------------------------------------------------------------------
// Shared resolution helpers
// ---------------------------------------------------------------------------

fn env_u64(name: &str) -> Result<Option<u64>, Failure> {
    match std::env::var(name) {
        Ok(text) => text.parse().map(Some).map_err(|_| {
            Failure::input(format!("{name} must be an unsigned integer, got `{text}`"))
        }),
        Err(_) => Ok(None),
    }
}

fn resolve_optimizer(args: &OptimizerArgs) -> Result<OptimizerConfig, Failure> {
    let mut cfg = OptimizerConfig::default();
    cfg.seed = match args.seed {
        Some(seed) => seed,
        None => env_u64(ENV_SEED)?.unwrap_or(0),
    };
    cfg.restarts = match args.restarts {
        Some(r) => r,
        None => env_u64(ENV_RESTARTS)?
            .map(|r| r as usize)
            .unwrap_or(cfg.restarts),
    };
    if let Some(m) = args.max_iters {
        cfg.max_iters = m;
    }
    if let Some(s) = args.step_tol {
        cfg.step_tolerance = s;
    }
    if let Some(v) = args.value_tol {
        cfg.value_tolerance = v;
    }
    Ok(cfg)
}

fn parse_f64_list(field: &str, text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| Failure::input(format!("{field}: cannot parse `{part}` as a number")))
        })
        .collect()
}

fn parse_u32_list(field: &str, text: &str) -> Result<Vec<u32>, Failure> {
    text.split(',')
        .map(|part| {
            part.trim().parse::<u32>().map_err(|_| {
                Failure::input(format!("{field}: cannot parse `{part}` as an integer"))
            })
        })
        .collect()
}

fn triple(field: &str, values: &[f64]) -> Result<[f64; 3], Failure> {
    values.try_into().map_err(|_| {
        Failure::input(format!(
            "{field}: expected exactly three comma-separated values"
        ))
    })
}

fn require<T: Copy>(field: &str, value: Option<T>) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::input(format!("{field}: required for this channel family")))
}

/// Builds the channel and the fully-resolved spec echoed in the output.
fn resolve_channel(args: &ChannelArgs, default_seed: u64) -> Result<(ChannelMap, Value), Failure> {
    if let Some(path) = &args.file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("file: cannot read {}: {e}", path.display())))?;
        let (map, metadata) =
            ChannelMap::from_json(&text).map_err(|e| Failure::input(format!("file: {e}")))?;
        let spec = json!({
            "source": "file",
            "path": path.display().to_string(),
            "n": map.in_dim(),
            "m": map.out_dim(),
            "metadata": metadata,
        });
        return Ok((map, spec));
    }

    let family = args
        .family
        .as_deref()
        .ok_or_else(|| Failure::input("family: either --family or --file is required"))?;
    let seed = args.chan_seed.unwrap_or(default_seed);
    let tp = !args.non_trace_preserving;

    let (map, params) = match family {
        "identity" => {
            let d = require("d", args.d)?;
            (ChannelMap::identity(d)?, json!({ "d": d }))
        }
        "depolarizing" => {
            let d = require("d", args.d)?;
            let lambda = parse_single_lambda(args)?;
            (
                ChannelMap::depolarizing(d, lambda)?,
                json!({ "d": d, "lambda": lambda }),
            )
        }
        "generalized-depolarizing" => {
            let lambda = parse_single_lambda(args)?;
            let gamma_text = args
                .gamma
                .as_deref()
                .ok_or_else(|| Failure::input("gamma: required for generalized-depolarizing"))?;
            let diag = parse_f64_list("gamma", gamma_text)?;
            let gamma = ComplexMatrix::from_diagonal(&diag);
            (
                ChannelMap::generalized_depolarizing(lambda, &gamma, args.diagonalize_gamma)?,
                json!({
                    "lambda": lambda,
                    "gamma_diagonal": diag,
                    "diagonalize_gamma": args.diagonalize_gamma,
                }),
            )
        }
        "qubit-diag" => {
            let lambda_text = args
                .lambda
                .as_deref()
                .ok_or_else(|| Failure::input("lambda: required for qubit-diag"))?;
            let lambda = triple("lambda", &parse_f64_list("lambda", lambda_text)?)?;
            let shift = match args.shift.as_deref() {
                Some(text) => triple("shift", &parse_f64_list("shift", text)?)?,
                None => [0.0; 3],
            };
            let params =
                QubitDiagonalParams::new(lambda, shift).map_err(|e| Failure::input(e.to_string()))?;
            (
                ChannelMap::qubit_from_diagonal(&params)?,
                json!({ "lambda": lambda, "t": shift }),
            )
        }
        "werner-holevo" => {
            let d = require("d", args.d)?;
            (ChannelMap::werner_holevo(d)?, json!({ "d": d }))
        }
        "transpose" => {
            let d = require("d", args.d)?;
            (ChannelMap::transpose_map(d)?, json!({ "d": d }))
        }
        "random-cp" => {
            let n = require("n", args.n)?;
            let m = require("m", args.m)?;
            let kraus = args.kraus.unwrap_or(2);
            (
                ChannelMap::random_cp(n, m, kraus, seed, tp)?,
                json!({ "n": n, "m": m, "kraus": kraus, "seed": seed, "trace_preserving": tp }),
            )
        }
        "random-ep-cp" => {
            let n = require("n", args.n)?;
            let m = require("m", args.m)?;
            let kraus = args.kraus.unwrap_or(2);
            (
                ChannelMap::random_ep_cp(n, m, kraus, seed, tp)?,
                json!({ "n": n, "m": m, "kraus": kraus, "seed": seed, "trace_preserving": tp }),
            )
        }
        other => {
            return Err(Failure::input(format!(
                "family: unknown channel family `{other}`"
            )))
        }
    };
    let spec = json!({
        "source": "family",
        "family": family,
        "params": params,
        "n": map.in_dim(),
        "m": map.out_dim(),
    });
    Ok((map, spec))
}

fn parse_single_lambda(args: &ChannelArgs) -> Result<f64, Failure> {
    let text = args
        .lambda
        .as_deref()
        .ok_or_else(|| Failure::input("lambda: required for this channel family"))?;
    let values = parse_f64_list("lambda", text)?;
    if values.len() != 1 {
        return Err(Failure::input("lambda: expected a single value"));
    }
    Ok(values[0])
}

// ---------------------------------------------------------------------------
// Output rendering
// ---------------------------------------------------------------------------

fn flatten(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (key, inner) in map {
                let path = if prefix.is_empty() {
                    key.clone()
                } else {
                    format!("{prefix}.{key}")
                };
                flatten(&path, inner, rows);
            }
        }
        Value::Array(items) => {
            if items.len() > 24 {
                rows.push((format!("{prefix}.len"), items.len().to_string()));
            } else {
                for (idx, inner) in items.iter().enumerate() {
                    flatten(&format!("{prefix}[{idx}]"), inner, rows);
                }
            }
        }
        Value::Null => rows.push((prefix.to_string(), "null".to_string())),
        Value::Bool(b) => rows.push((prefix.to_string(), b.to_string())),
        Value::Number(n) => rows.push((prefix.to_string(), n.to_string())),
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
    }
}

fn render(doc: &Value, format: &str) -> Result<String, Failure> {
    match format {
        "json" => Ok(format!(
            "{}\n",
            serde_json::to_string_pretty(doc).expect("JSON rendering cannot fail")
        )),
        "csv" => {
            let mut rows = Vec::new();
            flatten("", doc, &mut rows);
            let mut out = String::from("key,value\n");
            for (key, value) in rows {
                out.push_str(&format!("{key},{value}\n"));
            }
            Ok(out)
        }
        "pretty" => {
            let mut rows = Vec::new();
            flatten("", doc, &mut rows);
            let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            let mut out = String::new();
            for (key, value) in rows {
                out.push_str(&format!("{key:<width$}  {value}\n"));
            }
            Ok(out)
        }
        other => Err(Failure::input(format!(
            "format: expected json, csv, or pretty, got `{other}`"
        ))),
    }
}

fn emit(doc: &Value, output: &OutputArgs) -> Result<(), Failure> {
    let text = render(doc, &output.format)?;
    print!("{text}");
    if let Some(path) = &output.output {
        write_text(path, &text)?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| Failure::io(format!("cannot create {}: {e}", path.display())))?;
    file.write_all(text.as_bytes())
        .map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// norm
// ---------------------------------------------------------------------------

fn cmd_norm(args: NormArgs) -> Result<i32, Failure> {
    let optimizer = resolve_optimizer(&args.optimizer)?;
    let (channel, channel_spec) = resolve_channel(&args.channel, optimizer.seed)?;

    enum Mode {
        Purity(SchattenExponent),
        Induced(SchattenExponent, SchattenExponent),
    }
    let mode = if args.nu {
        let t = args
            .t
            .ok_or_else(|| Failure::input("t: required with --nu"))?;
        if args.p.is_some() || args.q.is_some() {
            return Err(Failure::input("p/q: not valid together with --nu"));
        }
        Mode::Purity(SchattenExponent::new(t).map_err(|e| Failure::input(e.to_string()))?)
    } else {
        let p = args
            .p
            .as_deref()
            .ok_or_else(|| Failure::input("p: required unless --nu is given"))?;
        let q = args
            .q
            .as_deref()
            .ok_or_else(|| Failure::input("q: required unless --nu is given"))?;
        Mode::Induced(
            p.parse()
                .map_err(|e: LibError| Failure::input(e.to_string()))?,
            q.parse()
                .map_err(|e: LibError| Failure::input(e.to_string()))?,
        )
    };

    let (result, mode_spec) = match &mode {
        Mode::Purity(t) => (
            nu(&channel, *t, &optimizer)?,
            json!({ "kind": "nu", "t": t.value() }),
        ),
        Mode::Induced(p, q) => (
            p2q_norm(&channel, *p, *q, &optimizer)?,
            json!({ "kind": "p2q", "p": p.value(), "q": q.value() }),
        ),
    };

    let doc = json!({
        "config": {
            "command": "norm",
            "channel": channel_spec,
            "norm": mode_spec,
            "optimizer": optimizer,
            "format": args.output.format,
        },
        "result": result,
    });
    emit(&doc, &args.output)?;
    Ok(if result.converged {
        EXIT_OK
    } else {
        EXIT_NONCONVERGED
    })
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

fn cmd_check(args: CheckArgs) -> Result<i32, Failure> {
    let seed = match args.seed {
        Some(seed) => seed,
        None => env_u64(ENV_SEED)?.unwrap_or(0),
    };
    let (channel, channel_spec) = resolve_channel(&args.channel, seed)?;

    let cp = match channel.is_cp(args.cp_tol) {
        Ok(report) => json!({
            "holds": report.cp,
            "min_eigenvalue": report.min_eigenvalue,
            "hermiticity_preserving": true,
        }),
        Err(LibError::NotHermiticityPreserving(dev)) => json!({
            "holds": false,
            "hermiticity_preserving": false,
            "choi_hermitian_deviation": dev,
        }),
        Err(other) => return Err(other.into()),
    };

    let ep = channel.is_ep_in_basis(args.ep_tol);
    let tp = channel.is_trace_preserving(args.tp_tol);
    let two_positive = channel.two_positive_falsify(args.samples, seed, args.cp_tol)?;

    // For qubit maps in the diagonal family, also report the exact
    // canonical-form criterion read off the Pauli representation.
    let ep_canonical = if channel.in_dim() == 2 && channel.out_dim() == 2 {
        channel.pauli_transfer().ok().map(|pt| {
            let lambda = [pt.a[1][1], pt.a[2][2], pt.a[3][3]];
            let shift = [pt.a[1][0], pt.a[2][0], pt.a[3][0]];
            QubitDiagonalParams { lambda, t: shift }.is_ep_canonical()
        })
    } else {
        None
    };

    let doc = json!({
        "config": {
            "command": "check",
            "channel": channel_spec,
            "cp_tol": args.cp_tol,
            "ep_tol": args.ep_tol,
            "tp_tol": args.tp_tol,
            "samples": args.samples,
            "seed": seed,
            "format": args.output.format,
        },
        "result": {
            "cp": cp,
            "ep": {
                "holds": ep.ep,
                "worst_violation": ep.worst_violation,
                "worst_entry": ep.worst_entry,
            },
            "trace_preserving": tp,
            "two_positive_not_falsified": two_positive.not_falsified,
            "two_positive_worst_eigenvalue": two_positive.worst_eigenvalue,
            "ep_canonical_diagonal": ep_canonical,
        },
    });
    emit(&doc, &args.output)?;
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn cmd_verify(args: VerifyArgs) -> Result<i32, Failure> {
    let optimizer = resolve_optimizer(&args.optimizer)?;

    if args.wh {
        let t_values = parse_u32_list("t", &args.t)?;
        let mut reports = Vec::new();
        for &t in &t_values {
            reports.push(wh_violation(args.d, t)?);
        }
        write_reports_jsonl(&reports, &args.out_jsonl)
            .map_err(|e| Failure::io(format!("{}: {e}", args.out_jsonl.display())))?;
        let doc = json!({
            "config": {
                "command": "verify",
                "mode": "wh",
                "d": args.d,
                "t": t_values,
                "out_jsonl": args.out_jsonl.display().to_string(),
                "format": args.output.format,
            },
            "result": {
                "reports": reports,
            },
        });
        emit(&doc, &args.output)?;
        return Ok(EXIT_OK);
    }

    let theorem = match args.theorem {
        Some(1) => TheoremTag::Thm1,
        Some(2) => TheoremTag::Thm2,
        Some(4) => TheoremTag::Thm4,
        Some(other) => {
            return Err(Failure::input(format!(
                "theorem: suites cover theorems 1, 2, and 4, got {other}"
            )))
        }
        None => {
            return Err(Failure::input(
                "theorem: either --theorem or --wh is required",
            ))
        }
    };

    let config = SuiteConfig {
        theorem,
        cases: args.cases,
        t_values: parse_u32_list("t", &args.t)?,
        p_values: parse_f64_list("p", &args.p)?,
        max_dim: args.dims,
        master_seed: optimizer.seed,
        tolerance: args.tolerance,
        optimizer: optimizer.clone(),
    };
    let result = run_suite(&config).map_err(Failure::from)?;

    write_reports_jsonl(&result.reports, &args.out_jsonl)
        .map_err(|e| Failure::io(format!("{}: {e}", args.out_jsonl.display())))?;
    write_summary_csv(&result.summary, &args.out_csv)
        .map_err(|e| Failure::io(format!("{}: {e}", args.out_csv.display())))?;
    eprintln!(
        "suite {} finished in {:.1}s: {}/{} passed, {} rejected",
        config.theorem,
        result.summary.total_wall_time,
        result.summary.passed,
        result.summary.total,
        result.summary.rejected
    );

    let doc = json!({
        "config": {
            "command": "verify",
            "mode": "suite",
            "suite": config,
            "out_jsonl": args.out_jsonl.display().to_string(),
            "out_csv": args.out_csv.display().to_string(),
            "format": args.output.format,
        },
        "result": {
            "summary": result.summary,
            "rejected": result.rejected,
        },
    });
    emit(&doc, &args.output)?;
    Ok(if result.summary.failed == 0 {
        EXIT_OK
    } else {
        EXIT_NONCONVERGED
    })
}
