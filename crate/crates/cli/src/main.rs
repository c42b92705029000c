//! `qdl`: command-line front end for qdl-core.
//!
//! Exit codes: 0 success, 1 computation failure (or a failed invariant in
//! `sweep` / `selftest`), 2 usage error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use qdl_core::analytic::{self, IntegralOptions, WeightDescriptor};
use qdl_core::corpus::{self, CorpusSpec};
use qdl_core::counting::{self, CountOptions, Method};
use qdl_core::deltamethod::{self, ReconstructOptions, SweepOptions};
use qdl_core::emit;
use qdl_core::qform::{make_form, parse_int_list};
use qdl_core::{densities, expsums, lseries, selftest, DiagonalForm, Error};

#[derive(Parser)]
#[command(name = "qdl", version, about = "Zeros of diagonal quadratic forms by the circle method")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightArg {
    None,
    Wdag,
    Wq,
}

#[derive(Clone, Copy, ValueEnum)]
enum CountMethod {
    Auto,
    Brute,
    Mitm,
}

#[derive(Clone, Copy, ValueEnum)]
enum SumMethod {
    Direct,
    Mult,
    Closed,
}

#[derive(Subcommand)]
enum Cmd {
    /// Count zeros in a box, an energy region, or with a smooth weight.
    Count {
        #[arg(long, allow_hyphen_values = true)]
        form: String,
        #[arg(long, conflicts_with = "energy", required_unless_present = "energy")]
        bound: Option<u64>,
        #[arg(long)]
        energy: Option<u64>,
        #[arg(long, value_enum, default_value = "none")]
        weight: WeightArg,
        #[arg(long)]
        primitive: bool,
        #[arg(long, value_enum, default_value = "auto")]
        method: CountMethod,
        /// Memory budget for the meet-in-the-middle table.
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Exponential sum S_q(c), or partial sums over q ≤ Y.
    Expsum {
        #[arg(long, allow_hyphen_values = true)]
        form: String,
        #[arg(long, required_unless_present = "partial")]
        q: Option<u64>,
        #[arg(long, allow_hyphen_values = true)]
        c: Option<String>,
        #[arg(long, value_enum, default_value = "direct")]
        method: SumMethod,
        #[arg(long, conflicts_with = "q")]
        partial: Option<u64>,
    },
    /// L(s, χ_Q) partial sums, or Σ q^{-s} S_q(c) when --c is given.
    Lseries {
        #[arg(long, allow_hyphen_values = true)]
        form: String,
        /// RE or RE,IM.
        #[arg(long)]
        s: String,
        #[arg(long, allow_hyphen_values = true)]
        c: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        terms: u64,
    },
    /// Local density σ_p, or the singular series.
    Density {
        #[arg(long, allow_hyphen_values = true)]
        form: String,
        #[arg(long, conflicts_with = "series", required_unless_present = "series")]
        p: Option<u64>,
        #[arg(long)]
        series: bool,
        #[arg(long, default_value_t = densities::DEFAULT_CUTOFF)]
        cutoff: u64,
    },
    /// Oscillatory integral I_q(c; w).
    Integral {
        #[arg(long, allow_hyphen_values = true)]
        form: String,
        #[arg(long = "B")]
        b: u64,
        #[arg(long)]
        q: u64,
        #[arg(long, allow_hyphen_values = true)]
        c: Option<String>,
        #[arg(long, default_value = "wdag")]
        weight: String,
        /// Cap on integrand evaluations.
        #[arg(long, default_value_t = analytic::DEFAULT_EVAL_BUDGET)]
        budget: u64,
    },
    /// Delta-method reconstruction of the weighted count.
    Reconstruct {
        #[arg(long, allow_hyphen_values = true)]
        form: String,
        #[arg(long = "B")]
        b: u64,
        #[arg(long)]
        q_max: Option<u64>,
        #[arg(long, default_value_t = deltamethod::DEFAULT_C_MAX)]
        c_max: u64,
        /// Evaluation budget per (q, shell) block.
        #[arg(long, default_value_t = analytic::DEFAULT_EVAL_BUDGET)]
        budget: u64,
    },
    /// Counts and envelope ratios over a seeded corpus.
    Sweep {
        /// JSON config: {"corpus": {...}, "b_values": [...], "epsilon": ...}.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Overrides the config's epsilon.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Runs the acceptance criteria.
    Selftest {
        /// Comma-separated criterion ids (default: all).
        #[arg(long)]
        only: Option<String>,
    },
}

#[derive(Deserialize)]
struct SweepConfig {
    corpus: CorpusSpec,
    b_values: Vec<u64>,
    #[serde(default)]
    epsilon: Option<f64>,
    #[serde(default = "yes")]
    densities: bool,
    #[serde(default = "yes")]
    majorant: bool,
}

fn yes() -> bool {
    true
}

#[derive(Serialize)]
struct CountOut {
    form: Vec<i64>,
    #[serde(rename = "B")]
    b: u64,
    region: &'static str,
    primitive: bool,
    count: u64,
    method: Method,
    seconds: f64,
}

#[derive(Serialize)]
struct WeightedOut {
    form: Vec<i64>,
    #[serde(rename = "B")]
    b: u64,
    weight: &'static str,
    value: f64,
    abs_err: f64,
    terms: u64,
    seconds: f64,
}

#[derive(Serialize)]
struct ExpsumOut {
    form: Vec<i64>,
    q: u64,
    c: Vec<i64>,
    method: &'static str,
    value: f64,
    imag: f64,
    rounded: i128,
    err: f64,
}

#[derive(Serialize)]
struct PartialOut {
    form: Vec<i64>,
    c: Vec<i64>,
    y: u64,
    abs_sum: f64,
    signed_sum: f64,
}

#[derive(Serialize)]
struct SeriesOut {
    form: Vec<i64>,
    s: [f64; 2],
    c: Option<Vec<i64>>,
    re: f64,
    im: f64,
    terms: u64,
    tail_bound: f64,
}

#[derive(Serialize)]
struct IntegralOut {
    form: Vec<i64>,
    #[serde(rename = "B")]
    b: u64,
    q: u64,
    c: Vec<i64>,
    weight: &'static str,
    re: f64,
    im: f64,
    abs_err: f64,
    evals: u64,
    seconds: f64,
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. }
            | Error::InvalidArgument(_)
            | Error::TooFewVariables(_)
            | Error::ZeroCoefficient { .. }
            | Error::CoefficientTooLarge { .. }
            | Error::DimensionMismatch { .. }
            | Error::UnsupportedWeight(_) => Failure::Usage(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

fn form(s: &str) -> Result<DiagonalForm, Failure> {
    Ok(make_form(&parse_int_list(s)?, false)?)
}

fn vector(s: Option<&str>, n: usize) -> Result<Vec<i64>, Failure> {
    match s {
        None => Ok(vec![0; n]),
        Some(s) => {
            let v = parse_int_list(s)?;
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: v.len() }.into());
            }
            Ok(v)
        }
    }
}

fn complex(s: &str) -> Result<Complex64, Failure> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| Failure::Usage(format!("bad number {t:?} in --s")));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(Failure::Usage("--s takes RE or RE,IM".into())),
    }
}

fn count_options(method: CountMethod, budget: Option<u64>) -> CountOptions {
    let mut o = CountOptions::default();
    o.method = match method {
        CountMethod::Auto => Method::Auto,
        CountMethod::Brute => Method::Brute,
        CountMethod::Mitm => Method::Mitm,
    };
    if let Some(b) = budget {
        o.budget_bytes = b;
    }
    o
}

/// Prints or writes the report; Ok(true) means success.
fn report<T: Serialize>(out: &Option<PathBuf>, kind: &str, r: &T) -> Result<bool, Failure> {
    let doc = emit::to_json(kind, r)?;
    match out {
        Some(p) => emit::write_file(p, &doc)?,
        None => print!("{doc}"),
    }
    Ok(true)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let out = &cli.out;
    match cli.cmd {
        Cmd::Count {
            form: f,
            bound,
            energy,
            weight,
            primitive,
            method,
            budget,
        } => {
            let q = form(&f)?;
            let opts = count_options(method, budget);
            let w = match weight {
                WeightArg::None => None,
                WeightArg::Wdag => Some(WeightDescriptor::wdag(q.dim())),
                WeightArg::Wq => Some(WeightDescriptor::wq(&q)),
            };
            if let Some(w) = w {
                let b = bound.ok_or_else(|| Failure::Usage("weighted counts take --bound".into()))?;
                if primitive {
                    return Err(Failure::Usage("--primitive applies to unweighted counts".into()));
                }
                let r = counting::count_weighted(&q, b, &w, &opts)?;
                let o = WeightedOut {
                    form: q.coeffs().to_vec(),
                    b,
                    weight: w.tag(),
                    value: r.value,
                    abs_err: r.abs_err,
                    terms: r.terms,
                    seconds: r.seconds,
                };
                return report(out, "weighted_count", &o);
            }
            let (r, region) = match (bound, energy) {
                (Some(b), _) if primitive => (counting::count_primitive(&q, b, &opts)?, "box"),
                (Some(b), _) => (counting::count_box(&q, b, &opts)?, "box"),
                (None, Some(_)) if primitive => {
                    return Err(Failure::Usage("--primitive applies to box counts".into()))
                }
                (None, Some(x)) => (counting::count_energy(&q, x, &opts)?, "energy"),
                (None, None) => return Err(Failure::Usage("give --bound or --energy".into())),
            };
            let o = CountOut {
                form: q.coeffs().to_vec(),
                b: r.bound,
                region,
                primitive,
                count: r.count,
                method: r.method,
                seconds: r.seconds,
            };
            report(out, "count", &o)
        }
        Cmd::Expsum {
            form: f,
            q: modulus,
            c,
            method,
            partial,
        } => {
            let q = form(&f)?;
            let c = vector(c.as_deref(), q.dim())?;
            if let Some(y) = partial {
                let r = expsums::partial_sum_abs(&q, y, &c, expsums::DEFAULT_CAP)?;
                let o = PartialOut {
                    form: q.coeffs().to_vec(),
                    c,
                    y,
                    abs_sum: r.abs_sum,
                    signed_sum: r.signed_sum,
                };
                return report(out, "expsum_partial", &o);
            }
            let m = modulus.ok_or_else(|| Failure::Usage("give --q or --partial".into()))?;
            let (v, tag) = match method {
                SumMethod::Direct => (expsums::sq_direct(&q, m, &c, expsums::DEFAULT_CAP)?, "direct"),
                SumMethod::Mult => (expsums::sq_multiplicative(&q, m, &c, expsums::DEFAULT_CAP)?, "mult"),
                SumMethod::Closed => (expsums::ExpSumValue::exact(expsums::sp_closed(&q, m, &c)?), "closed"),
            };
            let o = ExpsumOut {
                form: q.coeffs().to_vec(),
                q: m,
                c,
                method: tag,
                value: v.value,
                imag: v.imag,
                rounded: v.rounded,
                err: v.err,
            };
            report(out, "expsum", &o)
        }
        Cmd::Lseries { form: f, s, c, terms } => {
            let q = form(&f)?;
            let s = complex(&s)?;
            let (v, c) = match c {
                None => (lseries::l_partial(&lseries::CharacterQ::of_form(&q), s, terms)?, None),
                Some(c) => {
                    let c = vector(Some(&c), q.dim())?;
                    (lseries::dirichlet_d(&q, &c, s, terms, expsums::DEFAULT_CAP)?, Some(c))
                }
            };
            let o = SeriesOut {
                form: q.coeffs().to_vec(),
                s: [s.re, s.im],
                c,
                re: v.re,
                im: v.im,
                terms: v.terms,
                tail_bound: v.tail_bound,
            };
            report(out, "lseries", &o)
        }
        Cmd::Density {
            form: f,
            p,
            series,
            cutoff,
        } => {
            let q = form(&f)?;
            if series {
                let r = densities::singular_series(&q, cutoff, densities::DEFAULT_BUDGET, densities::DEFAULT_L_TERMS)?;
                report(out, "singular_series", &r)
            } else {
                let p = p.ok_or_else(|| Failure::Usage("give --p or --series".into()))?;
                report(out, "local_density", &densities::sigma_p(&q, p, densities::DEFAULT_BUDGET)?)
            }
        }
        Cmd::Integral {
            form: f,
            b,
            q: modulus,
            c,
            weight,
            budget,
        } => {
            let q = form(&f)?;
            let c = vector(c.as_deref(), q.dim())?;
            let w = WeightDescriptor::from_tag(&weight, &q)?;
            let opts = IntegralOptions {
                budget,
                ..Default::default()
            };
            let start = Instant::now();
            let v = analytic::iq_integral(&q, b, modulus, &c, &w, &opts)?;
            let o = IntegralOut {
                form: q.coeffs().to_vec(),
                b,
                q: modulus,
                c,
                weight: w.tag(),
                re: v.re,
                im: v.im,
                abs_err: v.abs_err,
                evals: v.evals,
                seconds: start.elapsed().as_secs_f64(),
            };
            report(out, "integral", &o)
        }
        Cmd::Reconstruct {
            form: f,
            b,
            q_max,
            c_max,
            budget,
        } => {
            let q = form(&f)?;
            let mut opts = ReconstructOptions {
                q_max,
                c_max,
                ..Default::default()
            };
            opts.integral.budget = budget;
            let r = deltamethod::reconstruct(&q, b, &opts)?;
            report(out, "reconstruction", &r)
        }
        Cmd::Sweep {
            config,
            csv,
            json,
            epsilon,
        } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", config.display())))?;
            let cfg: SweepConfig =
                serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("bad sweep config: {e}")))?;
            if cfg.b_values.is_empty() {
                return Err(Failure::Usage("b_values is empty".into()));
            }
            let forms = corpus::generate_corpus(&cfg.corpus)?;
            let opts = SweepOptions {
                epsilon: epsilon.or(cfg.epsilon).unwrap_or(deltamethod::DEFAULT_EPSILON),
                densities: cfg.densities,
                majorant: cfg.majorant,
                ..Default::default()
            };
            let r = deltamethod::sweep(&forms, &cfg.b_values, &opts);
            if let Some(p) = csv {
                emit::write_file(&p, &emit::to_csv(&r.rows)?)?;
            }
            let doc = emit::to_json("sweep", &r)?;
            match json.as_ref().or(out.as_ref()) {
                Some(p) => emit::write_file(p, &doc)?,
                None => print!("{doc}"),
            }
            Ok(r.failed_rows == 0)
        }
        Cmd::Selftest { only } => {
            let ids: Vec<u32> = match only {
                None => (1..=13).collect(),
                Some(s) => parse_int_list(&s)?
                    .into_iter()
                    .map(|i| u32::try_from(i).map_err(|_| Failure::Usage(format!("bad criterion id {i}"))))
                    .collect::<Result<_, _>>()?,
            };
            let mut results = Vec::new();
            for id in ids {
                let r = selftest::run(id);
                eprintln!("{}", r.line());
                results.push(r);
            }
            let ok = results.iter().all(|r| r.passed);
            report(out, "selftest", &results)?;
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
