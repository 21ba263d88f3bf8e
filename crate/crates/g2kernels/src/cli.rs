//! The `g2k` command-line frontend. Every subcommand prints one JSON document
//! on standard output.
//!
//! Exit codes: 0 pass, 1 fail verdict, 2 usage error, 3 numeric failure.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::automorphisms::{solve_preimage, to_fundamental, G2Point};
use crate::curvature::{curvature_numeric, det_curvature, DetMethod, FDOptions};
use crate::homogeneity::{
    factorization_test, quasi_invariance_trials, random_pairs, seeded_automorphism, MultiplierSpec, ResidualReport,
};
use crate::invariants::{audit, classify, ke_test, signature, Equivalence, ModuleSpec};
use crate::kernels::{eval_kernel, Bound, EvalOptions, KernelSpec, KernelValue};
use crate::psd::{gram, psd_check, wallach_probe, PsdVerdict, SampleSet, DEFAULT_TOL};
use crate::{Error, Mat2, C64};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "g2k", version, about = "Reproducing kernels on the symmetrized bidisc")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SampleArgs {
    /// CSV file, one point per line: re(u1),im(u1),re(u2),im(u2)
    #[arg(long, value_name = "FILE", group = "source")]
    points: Option<PathBuf>,
    /// Polar grid thinned to N points
    #[arg(long, value_name = "N", group = "source")]
    grid: Option<usize>,
    /// N seeded random points
    #[arg(long, value_name = "N", group = "source")]
    random: Option<usize>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct NumericArgs {
    #[arg(long = "fd-step", default_value_t = 1e-4)]
    fd_step: f64,
    /// Threshold of |z1-z2||w1-w2| below which the series path is used
    #[arg(long = "series-eps", default_value_t = 1e-2)]
    series_eps: f64,
}

impl NumericArgs {
    fn eval_options(&self) -> Result<EvalOptions, Error> {
        let o = EvalOptions { series_threshold: self.series_eps, fd_step: self.fd_step, ..EvalOptions::default() };
        o.validate()?;
        Ok(o)
    }

    fn fd(&self) -> Result<FDOptions, Error> {
        let f = FDOptions { step: self.fd_step, ..FDOptions::default() };
        f.validate()?;
        Ok(f)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MethodArg {
    Oracle,
    Paper,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate K(u, v)
    Eval {
        #[arg(long)]
        kernel: String,
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        #[command(flatten)]
        num: NumericArgs,
    },
    /// Curvature matrix of a scalar kernel at u by finite differences
    Curvature {
        #[arg(long)]
        kernel: String,
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        /// Also report det of the B^(l) curvature by this method
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[command(flatten)]
        num: NumericArgs,
    },
    /// Gram-matrix positivity on a sample
    Psd {
        #[arg(long)]
        kernel: String,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        num: NumericArgs,
    },
    /// Positivity of (B^(l))^nu for a list of nu
    Wallach {
        #[arg(long)]
        lambda: f64,
        /// Comma-separated nu values
        #[arg(long, default_value = "0.5,1,1.5,2,3")]
        nu: String,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        num: NumericArgs,
    },
    /// Quasi-invariance and factorization residuals over seeded trials
    Homogeneity {
        #[arg(long)]
        kernel: String,
        /// Exponent of the cocycle; defaults to the family's own
        #[arg(long, allow_hyphen_values = true)]
        exponent: Option<f64>,
        #[arg(long = "jacobian-power", allow_hyphen_values = true)]
        jacobian_power: Option<f64>,
        /// Number of trials
        #[arg(long, default_value_t = 50)]
        random: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        num: NumericArgs,
    },
    /// Decompose u = g(r, 0)
    Fundamental {
        #[arg(long, allow_hyphen_values = true)]
        u: String,
    },
    /// Invariant signature of a module, e.g. w:l=2,nu=1 or det:l=1,nu=0
    Invariants {
        #[arg(long)]
        module: String,
    },
    /// Equivalence of two modules
    Classify {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Kähler–Einstein test of the B^(l) metric
    Ke {
        #[arg(long)]
        lambda: f64,
        #[command(flatten)]
        sample: SampleArgs,
    },
    /// Published closed forms against the oracles
    Audit {
        #[arg(long)]
        lambda: f64,
        /// Comma-separated r values in [0, 0.9]
        #[arg(long = "r-grid", default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
        r_grid: String,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        num: NumericArgs,
    },
}

const PSD_NOTE: &str = "a psd verdict on finitely many points is consistent with, not proof of, positivity";

/// Writes floats like `%.17g`, always with a decimal point or exponent.
struct G17;

impl serde_json::ser::Formatter for G17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(format_g17(v).as_bytes())
    }
}

/// `%.17g` with trailing zeros trimmed and `.0` kept on integral values.
pub fn format_g17(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let neg = mant.starts_with('-');
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let sign = if neg { "-" } else { "" };
    if !(-5..17).contains(&exp) {
        let d = digits.trim_end_matches('0');
        let frac = if d.len() > 1 { &d[1..] } else { "0" };
        return format!("{sign}{}.{frac}e{exp}", &d[..1]);
    }
    let (int, frac) = if exp >= 0 {
        let k = exp as usize + 1;
        (digits[..k].to_string(), digits[k..].to_string())
    } else {
        ("0".to_string(), "0".repeat((-exp - 1) as usize) + &digits)
    };
    let frac = frac.trim_end_matches('0');
    format!("{sign}{int}.{}", if frac.is_empty() { "0" } else { frac })
}

pub fn to_json_string(v: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, G17);
    v.serialize(&mut ser).expect("serializing a JSON value");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// `a,b` (real `u1, u2`) or `a,b,c,d` (`re u1, im u1, re u2, im u2`).
pub fn parse_point(s: &str) -> Result<G2Point, Error> {
    let xs: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("bad number {t:?} in point {s:?}"))))
        .collect::<Result<_, _>>()?;
    let (u1, u2) = match xs[..] {
        [a, b] => (C64::new(a, 0.0), C64::new(b, 0.0)),
        [a, b, c, d] => (C64::new(a, b), C64::new(c, d)),
        _ => return Err(usage(format!("point {s:?} needs 2 or 4 numbers"))),
    };
    G2Point::new(u1, u2)
}

fn parse_list(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("bad number {t:?}")))).collect()
}

fn c2j(z: C64) -> Value {
    json!([z.re, z.im])
}

fn mat2j(m: &Mat2) -> Value {
    json!([[c2j(m[(0, 0)]), c2j(m[(0, 1)])], [c2j(m[(1, 0)]), c2j(m[(1, 1)])]])
}

fn point2j(u: &G2Point) -> Value {
    json!([u.u1.re, u.u1.im, u.u2.re, u.u2.im])
}

fn residual2j(r: &ResidualReport) -> Value {
    json!({
        "max_relative_residual": r.max_relative_residual,
        "argmax_points": [point2j(&r.argmax_points.0), point2j(&r.argmax_points.1)],
        "trials": r.trials,
        "seed": r.seed,
    })
}

fn sample_set(a: &SampleArgs, default_random: usize) -> Result<SampleSet, Error> {
    if let Some(p) = &a.points {
        SampleSet::from_csv(p)
    } else if let Some(n) = a.grid {
        SampleSet::grid(n)
    } else {
        SampleSet::random(a.random.unwrap_or(default_random), a.seed)
    }
}

fn write_csv(path: &PathBuf, header: &[&str], rows: &[Vec<String>]) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path).map_err(|e| usage(e.to_string()))?;
    w.write_record(header).map_err(|e| usage(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| usage(e.to_string()))?;
    }
    w.flush().map_err(|e| usage(e.to_string()))
}

fn parse_kernel(s: &str) -> Result<KernelSpec, Error> {
    s.parse()
}

fn verdict_code(pass: bool) -> i32 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn execute(cmd: Command) -> Result<(Value, i32), Error> {
    match cmd {
        Command::Eval { kernel, u, v, num } => {
            let spec = parse_kernel(&kernel)?;
            let (u, v) = (parse_point(&u)?, parse_point(&v)?);
            let out = match eval_kernel(&spec, &u, &v, &num.eval_options()?)? {
                KernelValue::Scalar(z) => json!({ "value_re": z.re, "value_im": z.im }),
                KernelValue::Matrix(m) => json!({ "matrix": mat2j(&m) }),
            };
            Ok((out, EXIT_PASS))
        }
        Command::Curvature { kernel, u, method, num } => {
            let spec = parse_kernel(&kernel)?;
            if spec.is_matrix() {
                return Err(Error::NotScalar);
            }
            let u = parse_point(&u)?;
            let k = curvature_numeric(&Bound { spec: &spec, opts: num.eval_options()? }, &u, &num.fd()?)?;
            let mut out = json!({
                "kernel": spec.to_string(),
                "u": point2j(&u),
                "entries": mat2j(&k.entries),
                "det": k.det(),
                "error_estimate": k.error_estimate,
            });
            if let Some(m) = method {
                let KernelSpec::WeightedBergman { lambda } = spec else {
                    return Err(usage("--method applies to bergman kernels only"));
                };
                let (name, dm) = match m {
                    MethodArg::Oracle => ("oracle", DetMethod::Oracle),
                    MethodArg::Paper => ("paper", DetMethod::Paper),
                };
                out["det_method"] = json!(name);
                out["det_closed"] = json!(det_curvature(lambda, &u, dm)?);
            }
            Ok((out, EXIT_PASS))
        }
        Command::Psd { kernel, sample, tol, csv, num } => {
            let spec = parse_kernel(&kernel)?;
            let s = sample_set(&sample, 15)?;
            let rep = psd_check(&gram(&spec, &s, &num.eval_options()?)?, tol)?;
            if let Some(p) = csv {
                let row = vec![rep.n.to_string(), format_g17(rep.min_eig), format_g17(rep.max_eig), verdict_str(rep.verdict).into()];
                write_csv(&p, &["n", "min_eig", "max_eig", "verdict"], &[row])?;
            }
            let mut out = serde_json::to_value(rep).map_err(|e| Error::Numeric(e.to_string()))?;
            out["kernel"] = json!(spec.to_string());
            out["scheme"] = json!(s.scheme);
            out["seed"] = json!(s.seed);
            out["note"] = json!(PSD_NOTE);
            Ok((out, verdict_code(rep.verdict == PsdVerdict::Psd)))
        }
        Command::Wallach { lambda, nu, sample, tol, csv, num } => {
            let s = sample_set(&sample, 8)?;
            let rows = wallach_probe(lambda, &parse_list(&nu)?, &s, &num.eval_options()?, tol)?;
            if let Some(p) = csv {
                let body: Vec<Vec<String>> = rows
                    .iter()
                    .map(|(n, r)| vec![format_g17(*n), format_g17(r.min_eig), format_g17(r.max_eig), verdict_str(r.verdict).into()])
                    .collect();
                write_csv(&p, &["nu", "min_eig", "max_eig", "verdict"], &body)?;
            }
            let rows: Vec<Value> = rows
                .iter()
                .map(|(n, r)| json!({ "nu": n, "min_eig": r.min_eig, "max_eig": r.max_eig, "verdict": r.verdict, "n": r.n }))
                .collect();
            Ok((json!({ "lambda": lambda, "scheme": s.scheme, "seed": s.seed, "tol": tol, "rows": rows, "note": PSD_NOTE }), EXIT_PASS))
        }
        Command::Homogeneity { kernel, exponent, jacobian_power, random, seed, tol, num } => {
            let spec = parse_kernel(&kernel)?;
            if spec.is_matrix() {
                return Err(Error::NotScalar);
            }
            let default = MultiplierSpec::for_kernel(&spec);
            let kappa = exponent.or(default.map(|m| m.kappa)).ok_or_else(|| usage("--exponent is required"))?;
            let jp = jacobian_power.or(default.map(|m| m.jacobian_power)).unwrap_or(0.0);
            let mult = MultiplierSpec::new(kappa, jp)?;
            if random == 0 {
                return Err(usage("--random must be positive"));
            }
            let bound = Bound { spec: &spec, opts: num.eval_options()? };
            let qi = quasi_invariance_trials(&bound, &mult, random, seed)?;
            let fact = factorization_test(&bound, &seeded_automorphism(seed), &random_pairs(random, seed), None)?;
            let pass = qi.max_relative_residual <= tol;
            let out = json!({
                "kernel": spec.to_string(),
                "kappa": kappa,
                "jacobian_power": jp,
                "tol": tol,
                "quasi_invariance": residual2j(&qi),
                "factorization": residual2j(&fact),
                "verdict": if pass { "quasi_invariant" } else { "not_quasi_invariant" },
            });
            Ok((out, verdict_code(pass)))
        }
        Command::Fundamental { u } => {
            let u = parse_point(&u)?;
            let d = to_fundamental(&u)?;
            let z = solve_preimage(&u)?;
            let out = json!({
                "u": point2j(&u),
                "r": d.r,
                "theta": d.theta,
                "g": { "t": c2j(d.g.base.t), "alpha": c2j(d.g.base.alpha) },
                "preimage": [c2j(z.z1), c2j(z.z2)],
            });
            Ok((out, EXIT_PASS))
        }
        Command::Invariants { module } => {
            let m: ModuleSpec = module.parse()?;
            let s = signature(&m)?;
            let out = json!({
                "module": m.to_string(),
                "family": s.family,
                "closed_pair": [s.closed_pair.0, s.closed_pair.1],
                "numeric_diagonal_exponent": s.numeric_diagonal_exponent,
                "oracle_diagonal_exponent": m.oracle_diagonal_exponent(),
                "published_diagonal_exponent": m.published_diagonal_exponent(),
            });
            Ok((out, EXIT_PASS))
        }
        Command::Classify { a, b } => {
            let (ma, mb): (ModuleSpec, ModuleSpec) = (a.parse()?, b.parse()?);
            let c = classify(&ma, &mb);
            let out = json!({
                "a": ma.to_string(),
                "b": mb.to_string(),
                "verdict": c.verdict,
                "witness": c.witness,
            });
            Ok((out, verdict_code(c.verdict == Equivalence::Equivalent)))
        }
        Command::Ke { lambda, sample } => {
            let pts = if sample.points.is_none() && sample.grid.is_none() && sample.random.is_none() {
                vec![G2Point::real(0.2, 0.0), G2Point::real(0.6, 0.0)]
            } else {
                sample_set(&sample, 4)?.points
            };
            let rep = ke_test(lambda, &pts)?;
            let est: Vec<Value> = rep
                .c_estimates
                .iter()
                .map(|(p, rs)| json!({ "point": point2j(p), "ratios": rs.iter().map(|z| c2j(*z)).collect::<Vec<_>>() }))
                .collect();
            let out = json!({
                "lambda": lambda,
                "c_estimates": est,
                "max_ratio_spread": rep.max_ratio_spread,
                "verdict": rep.verdict,
            });
            Ok((out, EXIT_PASS))
        }
        Command::Audit { lambda, r_grid, csv, num } => {
            let rows = audit(lambda, &parse_list(&r_grid)?, &num.fd()?)?;
            if let Some(p) = csv {
                let body: Vec<Vec<String>> = rows
                    .iter()
                    .map(|r| vec![r.formula.clone(), r.r.map(format_g17).unwrap_or_default(), format_g17(r.paper), format_g17(r.oracle), format_g17(r.relative_gap)])
                    .collect();
                write_csv(&p, &["formula", "r", "paper", "oracle", "relative_gap"], &body)?;
            }
            let rows = serde_json::to_value(&rows).map_err(|e| Error::Numeric(e.to_string()))?;
            Ok((json!({ "lambda": lambda, "rows": rows }), EXIT_PASS))
        }
    }
}

fn verdict_str(v: PsdVerdict) -> &'static str {
    match v {
        PsdVerdict::Psd => "psd",
        PsdVerdict::NotPsd => "not_psd",
    }
}

/// Exit code for a library error: bad input is a usage error, anything the
/// numerics could not resolve is a numeric failure.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::OutsideDisc(_)
        | Error::NotInG2(_)
        | Error::Domain(_)
        | Error::Parse(_)
        | Error::UnsupportedPower(_)
        | Error::NotScalar
        | Error::DiagonalRejected(_)
        | Error::OffDiagonal(_) => EXIT_USAGE,
        Error::Cancellation
        | Error::NonConvergence(_)
        | Error::BranchTracking(_)
        | Error::SingularJacobian(_)
        | Error::Numeric(_) => EXIT_NUMERIC,
    }
}

/// Parse `argv`, run one subcommand, write JSON to `out` and diagnostics to `err`.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            if code == EXIT_PASS {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    match execute(cli.command) {
        Ok((v, code)) => {
            let _ = writeln!(out, "{}", to_json_string(&v));
            code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut io::stdout().lock(), &mut io::stderr().lock())
}
