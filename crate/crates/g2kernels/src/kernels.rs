//! Kernel families on G2: weighted Bergman kernels, the symmetric kernels,
//! real powers, curvature-matrix kernels, their determinants and products.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::automorphisms::{solve_preimage, Disc2Point, G2Point};
use crate::hyperdual::HyperDual;
use crate::series::binom;
use crate::{Error, Mat2, Result, C64};

const ONE: C64 = C64::new(1.0, 0.0);

/// A kernel family with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// `B^(lambda)`.
    WeightedBergman { lambda: f64 },
    /// `K^nu` for a scalar kernel `K`.
    Power { base: Box<KernelSpec>, nu: f64 },
    /// `C^(lambda)`.
    SymmetricC { lambda: f64 },
    /// `det[(B^(lambda))^(nu+2) B-curvature]`, i.e. `(B^(lambda))^(2 nu + 4)` times
    /// the determinant of the polarized curvature.
    DetCurvature { lambda: f64, nu: f64 },
    /// Matrix kernel `K^(lambda+2)` times the polarized curvature of `K`, with
    /// `K = B^(base)`.
    MatrixCurvature { lambda: f64, base: f64 },
    /// Pointwise product of scalar kernels.
    Product(Vec<KernelSpec>),
}

impl KernelSpec {
    pub fn bergman(lambda: f64) -> Self {
        Self::WeightedBergman { lambda }
    }

    pub fn power(base: KernelSpec, nu: f64) -> Self {
        Self::Power { base: Box::new(base), nu }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive, got {x}")))
            }
        };
        match self {
            Self::WeightedBergman { lambda } | Self::SymmetricC { lambda } => pos("lambda", *lambda),
            Self::Power { base, nu } => {
                pos("nu", *nu)?;
                if base.is_matrix() {
                    return Err(Error::NotScalar);
                }
                base.validate()
            }
            Self::DetCurvature { lambda, nu } => {
                pos("lambda", *lambda)?;
                if *nu >= 0.0 && nu.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Domain(format!("nu must be non-negative, got {nu}")))
                }
            }
            Self::MatrixCurvature { lambda, base } => {
                pos("lambda", *lambda)?;
                pos("base", *base)
            }
            Self::Product(v) => {
                if v.is_empty() {
                    return Err(Error::Domain("empty product".into()));
                }
                for k in v {
                    if k.is_matrix() {
                        return Err(Error::NotScalar);
                    }
                    k.validate()?;
                }
                Ok(())
            }
        }
    }

    pub fn is_matrix(&self) -> bool {
        matches!(self, Self::MatrixCurvature { .. })
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::WeightedBergman { lambda } => write!(f, "bergman:l={lambda}"),
            Self::SymmetricC { lambda } => write!(f, "symC:l={lambda}"),
            Self::Power { base, nu } => write!(f, "power:{base},nu={nu}"),
            Self::DetCurvature { lambda, nu } => write!(f, "detcurv:l={lambda},nu={nu}"),
            Self::MatrixCurvature { lambda, base } => write!(f, "matcurv:l={lambda},base={base}"),
            Self::Product(v) => {
                write!(f, "product:[")?;
                for (i, k) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{k}")?;
                }
                write!(f, "]")
            }
        }
    }
}

fn parse_params(s: &str) -> Result<Vec<(String, f64)>> {
    s.split(',')
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (k, v) = p.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value in {p:?}")))?;
            let x = v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {v:?}")))?;
            Ok((k.trim().to_string(), x))
        })
        .collect()
}

fn param(ps: &[(String, f64)], key: &str) -> Option<f64> {
    ps.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
}

fn require(ps: &[(String, f64)], key: &str, spec: &str) -> Result<f64> {
    param(ps, key).ok_or_else(|| Error::Parse(format!("missing {key} in {spec:?}")))
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            ';' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, rest) = s.split_once(':').ok_or_else(|| Error::Parse(format!("missing family in {s:?}")))?;
        let spec = match family {
            "bergman" => Self::WeightedBergman { lambda: require(&parse_params(rest)?, "l", s)? },
            "symC" => Self::SymmetricC { lambda: require(&parse_params(rest)?, "l", s)? },
            "detcurv" => {
                let ps = parse_params(rest)?;
                Self::DetCurvature { lambda: require(&ps, "l", s)?, nu: param(&ps, "nu").unwrap_or(0.0) }
            }
            "matcurv" => {
                let ps = parse_params(rest)?;
                Self::MatrixCurvature { lambda: require(&ps, "l", s)?, base: param(&ps, "base").unwrap_or(1.0) }
            }
            "power" => {
                let i = rest.rfind(",nu=").ok_or_else(|| Error::Parse(format!("missing nu in {s:?}")))?;
                let nu = parse_params(&rest[i + 1..])?;
                Self::Power { base: Box::new(rest[..i].parse()?), nu: require(&nu, "nu", s)? }
            }
            "product" => {
                let inner = rest
                    .strip_prefix('[')
                    .and_then(|r| r.strip_suffix(']'))
                    .ok_or_else(|| Error::Parse(format!("product needs [..] in {s:?}")))?;
                Self::Product(split_top_level(inner).into_iter().map(str::parse).collect::<Result<_>>()?)
            }
            _ => return Err(Error::Parse(format!("unknown kernel family {family:?}"))),
        };
        spec.validate().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(spec)
    }
}

/// Numerical knobs for kernel evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalOptions {
    /// Below this value of `|z1-z2||w1-w2|` the series path is used.
    pub series_threshold: f64,
    pub series_terms: usize,
    /// Initial subdivision of the continuation path for real powers.
    pub branch_path_steps: usize,
    pub fd_step: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { series_threshold: 1e-2, series_terms: 200, branch_path_steps: 32, fd_step: 1e-4 }
    }
}

impl EvalOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.series_threshold > 0.0 && self.series_threshold < 0.5) {
            return Err(Error::Domain(format!("series_threshold {} not in (0, 0.5)", self.series_threshold)));
        }
        if self.series_terms < 8 {
            return Err(Error::Domain("series_terms must be at least 8".into()));
        }
        if self.branch_path_steps == 0 {
            return Err(Error::Domain("branch_path_steps must be positive".into()));
        }
        if !(1e-7..=1e-2).contains(&self.fd_step) {
            return Err(Error::Domain(format!("fd_step {} not in [1e-7, 1e-2]", self.fd_step)));
        }
        Ok(())
    }
}

/// Value of a kernel: scalar, or a 2x2 block for matrix kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelValue {
    Scalar(C64),
    Matrix(Mat2),
}

impl KernelValue {
    pub fn scalar(self) -> Result<C64> {
        match self {
            Self::Scalar(c) => Ok(c),
            Self::Matrix(_) => Err(Error::NotScalar),
        }
    }

    pub fn matrix(self) -> Mat2 {
        match self {
            Self::Scalar(c) => Mat2::new(c, C64::new(0.0, 0.0), C64::new(0.0, 0.0), c),
            Self::Matrix(m) => m,
        }
    }
}

/// Anything that can be evaluated as a scalar kernel on G2 x G2.
pub trait ScalarKernel {
    fn eval(&self, u: &G2Point, v: &G2Point) -> Result<C64>;
}

/// A spec bound to evaluation options.
#[derive(Debug, Clone)]
pub struct Bound<'a> {
    pub spec: &'a KernelSpec,
    pub opts: EvalOptions,
}

impl ScalarKernel for Bound<'_> {
    fn eval(&self, u: &G2Point, v: &G2Point) -> Result<C64> {
        eval_scalar(self.spec, u, v, &self.opts)
    }
}

impl ScalarKernel for KernelSpec {
    fn eval(&self, u: &G2Point, v: &G2Point) -> Result<C64> {
        eval_scalar(self, u, v, &EvalOptions::default())
    }
}

/// Wraps a closure as a kernel, for synthetic controls.
pub struct FnKernel<F>(pub F);

impl<F: Fn(&G2Point, &G2Point) -> Result<C64>> ScalarKernel for FnKernel<F> {
    fn eval(&self, u: &G2Point, v: &G2Point) -> Result<C64> {
        (self.0)(u, v)
    }
}

fn diag_product(z: &Disc2Point, w: &Disc2Point) -> f64 {
    (z.z1 - z.z2).norm() * (w.z1 - w.z2).norm()
}

/// `(1 - a conj(b))^(-lambda)` on the principal branch.
fn factor_pow(a: C64, b: C64, lambda: f64) -> C64 {
    (ONE - a * b.conj()).powf(-lambda)
}

fn bergman_raw_unchecked(lambda: f64, z: &Disc2Point, w: &Disc2Point) -> Result<C64> {
    let a = factor_pow(z.z1, w.z1, lambda) * factor_pow(z.z2, w.z2, lambda);
    let b = factor_pow(z.z1, w.z2, lambda) * factor_pow(z.z2, w.z1, lambda);
    let diff = a - b;
    if diff.norm() <= 1e-12 * a.norm().max(b.norm()) {
        return Err(Error::Cancellation);
    }
    Ok(diff / (2.0 * (z.z1 - z.z2) * (w.z1 - w.z2).conj()))
}

fn bergman_series_unchecked(lambda: f64, z: &Disc2Point, w: &Disc2Point, terms: usize) -> Result<C64> {
    let x = (z.z1 - z.z2) * (w.z1 - w.z2).conj();
    let y = (ONE - z.z1 * w.z1.conj()) * (ONE - z.z2 * w.z2.conj());
    let pre = 0.5 * factor_pow(z.z1, w.z2, lambda) * factor_pow(z.z2, w.z1, lambda);
    let q = x / y;
    let mut sum = C64::new(0.0, 0.0);
    let mut qn = y.inv();
    let mut c = 1.0;
    for n in 0..terms {
        c *= (lambda - n as f64) / (n as f64 + 1.0);
        if c == 0.0 {
            return Ok(pre * sum);
        }
        let term = c * qn;
        sum += term;
        if n > 0 && term.norm() <= 1e-18 * sum.norm() {
            return Ok(pre * sum);
        }
        qn *= q;
    }
    Err(Error::NonConvergence(terms))
}

/// Two-term formula for `B^(lambda)` in bidisc coordinates.
pub fn eval_bergman_raw(lambda: f64, z: &Disc2Point, w: &Disc2Point, opts: &EvalOptions) -> Result<C64> {
    let p = diag_product(z, w);
    if p < opts.series_threshold {
        return Err(Error::DiagonalRejected(p));
    }
    bergman_raw_unchecked(lambda, z, w)
}

/// Binomial-series form of `B^(lambda)`, valid near the diagonal.
pub fn eval_bergman_series(lambda: f64, z: &Disc2Point, w: &Disc2Point, opts: &EvalOptions) -> Result<C64> {
    let p = diag_product(z, w);
    if p >= opts.series_threshold {
        return Err(Error::OffDiagonal(p));
    }
    bergman_series_unchecked(lambda, z, w, opts.series_terms)
}

/// `B^(lambda)` in bidisc coordinates, choosing the path by the diagonal product.
///
/// The series ratio `|X / Y|` can approach 1 near the boundary of the bidisc
/// even when the diagonal product is small; the raw formula is used there,
/// where it has no cancellation problem.
pub fn eval_bergman_bidisc(lambda: f64, z: &Disc2Point, w: &Disc2Point, opts: &EvalOptions) -> Result<C64> {
    let p = diag_product(z, w);
    if p < opts.series_threshold {
        let x = (z.z1 - z.z2) * (w.z1 - w.z2).conj();
        let y = (ONE - z.z1 * w.z1.conj()) * (ONE - z.z2 * w.z2.conj());
        if (x / y).norm() < 0.5 {
            return bergman_series_unchecked(lambda, z, w, opts.series_terms);
        }
    }
    bergman_raw_unchecked(lambda, z, w)
}

pub fn eval_bergman(lambda: f64, u: &G2Point, v: &G2Point, opts: &EvalOptions) -> Result<C64> {
    eval_bergman_bidisc(lambda, &solve_preimage(u)?, &solve_preimage(v)?, opts)
}

/// `C^(lambda)(u, v)`.
pub fn eval_symmetric(lambda: f64, u: &G2Point, v: &G2Point) -> Result<C64> {
    let (z, w) = (solve_preimage(u)?, solve_preimage(v)?);
    let a = factor_pow(z.z1, w.z1, lambda) * factor_pow(z.z2, w.z2, lambda);
    let b = factor_pow(z.z1, w.z2, lambda) * factor_pow(z.z2, w.z1, lambda);
    Ok(0.5 * (a + b))
}

/// `B^(lambda)` as a holomorphic function of `(u, c)` with `c = conj(v)`.
///
/// With `Y, b` the two products `(1 - z1 w1*)(1 - z2 w2*)` and
/// `(1 - z1 w2*)(1 - z2 w1*)`, the kernel is `-1/2` times the divided
/// difference of `T^(-lambda)` at `Y, b`. Their sum and product are
/// polynomials in `(u, c)`, so no root of the symmetrization map is needed.
pub fn bergman_holomorphic(lambda: f64, u1: HyperDual, u2: HyperDual, c1: HyperDual, c2: HyperDual) -> HyperDual {
    let s = 2.0 - u1 * c1 + 2.0 * (u2 * c2);
    let p = 1.0 - u1 * c1 + (u1 * u1 - 2.0 * u2) * c2 + u2 * c1 * c1 - u1 * u2 * c1 * c2 + u2 * u2 * c2 * c2;
    let m = s * 0.5;
    let delta = m * m - p;
    let dd = if delta.re.norm() <= 0.25 * m.re.norm_sqr() && m.re.re > 0.0 {
        // even Taylor expansion of the divided difference about the midpoint
        let minv = m.recip();
        let q = delta * minv * minv;
        let base = m.powf(-lambda) * minv;
        let mut sum = HyperDual::constant(C64::new(0.0, 0.0));
        let mut qj = base;
        for j in 0..400 {
            let term = qj.scale(C64::new(binom(-lambda, 2 * j + 1), 0.0));
            sum = sum + term;
            let mag = [term.re, term.e1, term.e2, term.e12].iter().map(|c| c.norm()).fold(0.0, f64::max);
            let scale = [sum.re, sum.e1, sum.e2, sum.e12].iter().map(|c| c.norm()).fold(0.0, f64::max);
            if j > 1 && mag <= 1e-18 * scale {
                break;
            }
            qj = qj * q;
        }
        sum
    } else {
        let sq = delta.sqrt();
        ((m + sq).powf(-lambda) - (m - sq).powf(-lambda)) / (2.0 * sq)
    };
    dd * -0.5
}

/// `B^(lambda)(u, v)` through [`bergman_holomorphic`].
pub fn bergman_value_polynomial(lambda: f64, u: &G2Point, v: &G2Point) -> C64 {
    let k = HyperDual::constant;
    bergman_holomorphic(lambda, k(u.u1), k(u.u2), k(v.u1.conj()), k(v.u2.conj())).re
}

/// Polarized curvature `d/du_i d/dconj(v_j) log B^(lambda)(u, v)`, exact up to roundoff.
pub fn bergman_log_curvature(lambda: f64, u: &G2Point, v: &G2Point) -> Result<Mat2> {
    solve_preimage(u)?;
    solve_preimage(v)?;
    let mut m = Mat2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let var = |x: C64, on: bool, first: bool| match (on, first) {
                (false, _) => HyperDual::constant(x),
                (true, true) => HyperDual::var1(x),
                (true, false) => HyperDual::var2(x),
            };
            let b = bergman_holomorphic(
                lambda,
                var(u.u1, i == 0, true),
                var(u.u2, i == 1, true),
                var(v.u1.conj(), j == 0, false),
                var(v.u2.conj(), j == 1, false),
            );
            m[(i, j)] = b.ln().e12;
        }
    }
    Ok(m)
}

/// Continue `log K(t u, t v)` from `t = 0`, where the value must be positive.
pub fn path_log<F: Fn(f64) -> Result<C64>>(k: F, start_steps: usize) -> Result<C64> {
    let max_steps = start_steps << 10;
    let k0 = k(0.0)?;
    if !(k0.re > 0.0 && k0.im.abs() <= 1e-12 * k0.re) {
        return Err(Error::Numeric(format!("path start value {k0} is not positive")));
    }
    let mut n = start_steps;
    'refine: while n <= max_steps {
        let mut acc = C64::new(k0.re.ln(), 0.0);
        let mut prev = k0;
        for step in 1..=n {
            let cur = k(step as f64 / n as f64)?;
            let d = (cur / prev).ln();
            if d.im.abs() >= FRAC_PI_2 {
                n *= 2;
                continue 'refine;
            }
            acc += d;
            prev = cur;
        }
        return Ok(acc);
    }
    Err(Error::BranchTracking(max_steps))
}

fn scaled(u: &G2Point, t: f64) -> G2Point {
    G2Point::raw(u.u1 * t, u.u2 * t)
}

fn is_integer(x: f64) -> bool {
    x.fract() == 0.0 && x.abs() < 1e9
}

/// `K(u, v)^nu` with the logarithm continued along `t -> (t u, t v)`.
pub fn eval_power(base: &KernelSpec, nu: f64, u: &G2Point, v: &G2Point, opts: &EvalOptions) -> Result<C64> {
    if base.is_matrix() {
        return Err(Error::NotScalar);
    }
    if is_integer(nu) {
        return Ok(eval_scalar(base, u, v, opts)?.powi(nu as i32));
    }
    if matches!(base, KernelSpec::SymmetricC { .. }) {
        return Err(Error::UnsupportedPower(format!("non-integer power {nu} of a symmetric kernel")));
    }
    solve_preimage(u)?;
    solve_preimage(v)?;
    let l = path_log(|t| eval_scalar(base, &scaled(u, t), &scaled(v, t), opts), opts.branch_path_steps)?;
    Ok((nu * l).exp())
}

fn bergman_power(lambda: f64, e: f64, u: &G2Point, v: &G2Point, opts: &EvalOptions) -> Result<C64> {
    eval_power(&KernelSpec::bergman(lambda), e, u, v, opts)
}

/// Evaluate any spec.
pub fn eval_kernel(spec: &KernelSpec, u: &G2Point, v: &G2Point, opts: &EvalOptions) -> Result<KernelValue> {
    match spec {
        KernelSpec::MatrixCurvature { lambda, base } => {
            let k = bergman_power(*base, lambda + 2.0, u, v, opts)?;
            Ok(KernelValue::Matrix(bergman_log_curvature(*base, u, v)? * k))
        }
        _ => eval_scalar(spec, u, v, opts).map(KernelValue::Scalar),
    }
}

/// Evaluate a scalar spec; matrix kernels give [`Error::NotScalar`].
pub fn eval_scalar(spec: &KernelSpec, u: &G2Point, v: &G2Point, opts: &EvalOptions) -> Result<C64> {
    match spec {
        KernelSpec::WeightedBergman { lambda } => eval_bergman(*lambda, u, v, opts),
        KernelSpec::SymmetricC { lambda } => eval_symmetric(*lambda, u, v),
        KernelSpec::Power { base, nu } => eval_power(base, *nu, u, v, opts),
        KernelSpec::DetCurvature { lambda, nu } => {
            let k = bergman_power(*lambda, 2.0 * nu + 4.0, u, v, opts)?;
            Ok(k * bergman_log_curvature(*lambda, u, v)?.determinant())
        }
        KernelSpec::MatrixCurvature { .. } => Err(Error::NotScalar),
        KernelSpec::Product(v_) => {
            v_.iter().try_fold(C64::new(1.0, 0.0), |acc, k| Ok(acc * eval_scalar(k, u, v, opts)?))
        }
    }
}

/// Record of one coefficient of the expansion of `H^(lambda)` near the diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesAuditRecord {
    pub lambda: f64,
    pub p: usize,
    pub coefficient: f64,
    pub helper_values: Vec<(String, f64)>,
}

/// Leading coefficient `lambda (lambda+1) (2 lambda+1) / 12`.
pub fn h_leading(lambda: f64) -> f64 {
    lambda * (lambda + 1.0) * (2.0 * lambda + 1.0) / 12.0
}

/// The bracketed binomial combination `h_p` for `p >= 3`.
pub fn h_coefficients(lambda: f64, p: usize) -> Result<SeriesAuditRecord> {
    if p < 3 {
        return Err(Error::Domain(format!("p = {p} must be at least 3")));
    }
    let a = -lambda * binom(lambda, p);
    let b = 0.5 * lambda * binom(lambda + 1.0, p);
    let c = binom(lambda, p + 1);
    let d = 0.5 * (1..p).map(|m| binom(lambda, m + 1) * binom(lambda + 1.0, p - m)).sum::<f64>();
    Ok(SeriesAuditRecord {
        lambda,
        p,
        coefficient: a + b + c + d,
        helper_values: vec![
            ("-lambda*binom(lambda,p)".into(), a),
            ("lambda/2*binom(lambda+1,p)".into(), b),
            ("binom(lambda,p+1)".into(), c),
            ("convolution".into(), d),
            ("leading".into(), h_leading(lambda)),
        ],
    })
}

fn rising(a: f64, k: usize) -> f64 {
    (0..k).map(|j| a + j as f64).product()
}

/// Coefficient of `|z|^(4(p-1))` in `H^(lambda)((z,-z),(z,-z))`:
/// `(1/32) sum_{n+m=p} (2l)_(2n+1) / (2n+1)! binom(2l+2, 2m)`.
pub fn h_antidiagonal_coefficient(lambda: f64, p: usize) -> f64 {
    let l2 = 2.0 * lambda;
    (0..=p)
        .map(|n| {
            let k = 2 * n + 1;
            rising(l2, k) / rising(1.0, k) * binom(l2 + 2.0, 2 * (p - n))
        })
        .sum::<f64>()
        / 32.0
}

/// `B^(lambda)(s(z), s(z))` for `z` in the bidisc (real and positive).
pub fn bergman_diagonal(lambda: f64, z: &Disc2Point) -> Result<f64> {
    Ok(eval_bergman_bidisc(lambda, z, z, &EvalOptions::default())?.re)
}

/// Below this value of `s = |z1 - z2|^2 / |1 - conj(z1) z2|^2` the quotient loses
/// about `eps / s^2` to cancellation, so `eval_h` switches to the expansion.
pub const H_SERIES_S: f64 = 0.25;

/// `H^(lambda)` on the bidisc. The expansion in `|z1 - z2|^2` is used inside the
/// tube `|z1 - z2| < 1e-2` and wherever `s < H_SERIES_S`; the quotient elsewhere.
/// The expansion runs in `s / (1 - s)` and diverges once `s >= 1/2`, so thin
/// parts of the tube near the torus fall back to the quotient.
pub fn eval_h(lambda: f64, z: &Disc2Point) -> Result<f64> {
    let d2 = (z.z1 - z.z2).norm_sqr();
    let p = (1.0 - z.z1.norm_sqr()) * (1.0 - z.z2.norm_sqr());
    let q = (ONE - z.z1.conj() * z.z2).norm_sqr();
    let s = d2 / q;
    let t = p / q;
    if s < H_SERIES_S || (d2 < 1e-4 && s < 0.4) {
        return h_series(lambda, p, q, s / t);
    }
    // B(z, z) = (Q^l - P^l) / (2 d^2 (PQ)^l) turns the quotient into a function of t = P/Q.
    let e = t.powf(lambda);
    let l = (1.0 - e) * (1.0 + t * e) / (2.0 * s * e) - lambda;
    Ok(l / (s * s * q * q))
}

fn h_series(lambda: f64, p: f64, q: f64, ratio: f64) -> Result<f64> {
    let scale = p.powf(lambda - 2.0) * q.powf(-lambda);
    let mut sum = h_leading(lambda);
    let mut pw = ratio;
    for k in 3..400 {
        let term = h_coefficients(lambda, k)?.coefficient * pw;
        sum += term;
        if k > 8 && term.abs() <= 1e-18 * sum.abs() {
            return Ok(sum * scale);
        }
        pw *= ratio;
    }
    Err(Error::NonConvergence(400))
}
