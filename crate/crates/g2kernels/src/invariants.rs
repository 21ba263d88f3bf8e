//! Unitary invariants of the two module families, the cross-family
//! obstruction, the Kähler–Einstein test and the closed-form audit.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::automorphisms::{solve_preimage, Disc2Point, G2Point};
use crate::curvature::{
    bergman_curvature_on_lambda, curvature_numeric, curvature_polarized, det_curvature, det_curvature_lemma,
    det_fundamental_published, royal_det_kernel_published, to_bidisc, CurvatureMatrix, DetMethod, FDOptions,
    LemmaVariant,
};
use crate::kernels::{eval_scalar, h_antidiagonal_coefficient, h_leading, EvalOptions, KernelSpec};
use crate::{Error, Mat2, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Powers `(B^(lambda))^nu` of the weighted Bergman kernel.
    WeightedPower,
    /// `det` of `(B^(lambda))^(nu+2)` times the curvature of `B^(lambda)`.
    DetCurvature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuleSpec {
    pub family: Family,
    pub lambda: f64,
    pub nu: f64,
}

impl ModuleSpec {
    pub fn weighted_power(lambda: f64, nu: f64) -> Result<Self> {
        let m = Self { family: Family::WeightedPower, lambda, nu };
        m.validate()?;
        Ok(m)
    }

    pub fn det_curvature(lambda: f64, nu: f64) -> Result<Self> {
        let m = Self { family: Family::DetCurvature, lambda, nu };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let nu_ok = match self.family {
            Family::WeightedPower => self.nu > 0.0,
            Family::DetCurvature => self.nu >= 0.0,
        };
        if self.lambda > 0.0 && self.lambda.is_finite() && nu_ok && self.nu.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid module parameters lambda = {}, nu = {}", self.lambda, self.nu)))
        }
    }

    pub fn kernel(&self) -> KernelSpec {
        match self.family {
            Family::WeightedPower => KernelSpec::power(KernelSpec::bergman(self.lambda), self.nu),
            Family::DetCurvature => KernelSpec::DetCurvature { lambda: self.lambda, nu: self.nu },
        }
    }

    /// The pair of closed-form invariants.
    pub fn closed_pair(&self) -> (f64, f64) {
        let (l, n) = (self.lambda, self.nu);
        match self.family {
            Family::WeightedPower => (n * (l + 1.0), n * l),
            Family::DetCurvature => ((n + 2.0) * (l + 1.0), (2.0 * n + 4.0) * l),
        }
    }

    fn pair_names(&self) -> (&'static str, &'static str) {
        match self.family {
            Family::WeightedPower => ("nu(lambda+1)", "nu*lambda"),
            Family::DetCurvature => ("(nu+2)(lambda+1)", "(2nu+4)lambda"),
        }
    }

    /// Exponent of `(1 - |z|^2)^(-1)` in `K(s(z,z), s(z,z))` in the published form.
    pub fn published_diagonal_exponent(&self) -> f64 {
        let (l, n) = (self.lambda, self.nu);
        match self.family {
            Family::WeightedPower => 2.0 * n * (l + 1.0),
            Family::DetCurvature => 4.0 * ((n + 2.0) * (l + 1.0) + 2.0),
        }
    }

    /// The same exponent from the closed curvature entries.
    pub fn oracle_diagonal_exponent(&self) -> f64 {
        let (l, n) = (self.lambda, self.nu);
        match self.family {
            Family::WeightedPower => 2.0 * n * (l + 1.0),
            Family::DetCurvature => 4.0 * (n + 2.0) * (l + 1.0) + 6.0,
        }
    }
}

impl fmt::Display for ModuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.family {
            Family::WeightedPower => "w",
            Family::DetCurvature => "det",
        };
        write!(f, "{tag}:l={},nu={}", self.lambda, self.nu)
    }
}

/// `w:l=2,nu=1` or `det:l=1,nu=0`.
impl FromStr for ModuleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (tag, rest) = s.trim().split_once(':').ok_or_else(|| Error::Parse(format!("missing family in {s:?}")))?;
        let mut lambda = None;
        let mut nu = None;
        for kv in rest.split(',') {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value in {kv:?}")))?;
            let x: f64 = v.trim().parse().map_err(|_| Error::Parse(format!("bad number {v:?}")))?;
            match k.trim() {
                "l" => lambda = Some(x),
                "nu" => nu = Some(x),
                other => return Err(Error::Parse(format!("unknown key {other:?}"))),
            }
        }
        let lambda = lambda.ok_or_else(|| Error::Parse(format!("missing l in {s:?}")))?;
        let m = match tag.trim() {
            "w" => ModuleSpec::weighted_power(lambda, nu.unwrap_or(1.0)),
            "det" => ModuleSpec::det_curvature(lambda, nu.unwrap_or(0.0)),
            other => return Err(Error::Parse(format!("unknown module family {other:?}"))),
        };
        m.map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantSignature {
    pub closed_pair: (f64, f64),
    pub numeric_diagonal_exponent: f64,
    pub family: Family,
}

/// Points `|z|^2` used for the diagonal exponent fit.
pub const EXPONENT_FIT_POINTS: [f64; 2] = [0.5, 0.75];

/// Slope of `log K(s(z,z), s(z,z))` against `-log(1 - |z|^2)`.
pub fn diagonal_exponent(spec: &KernelSpec, opts: &EvalOptions) -> Result<f64> {
    let mut ys = [0.0; 2];
    let mut xs = [0.0; 2];
    for (i, &x) in EXPONENT_FIT_POINTS.iter().enumerate() {
        let u = G2Point::royal(C64::new(x.sqrt(), 0.0));
        ys[i] = eval_scalar(spec, &u, &u, opts)?.re.ln();
        xs[i] = -(1.0 - x).ln();
    }
    Ok((ys[1] - ys[0]) / (xs[1] - xs[0]))
}

pub fn signature(m: &ModuleSpec) -> Result<InvariantSignature> {
    m.validate()?;
    Ok(InvariantSignature {
        closed_pair: m.closed_pair(),
        numeric_diagonal_exponent: diagonal_exponent(&m.kernel(), &EvalOptions::default())?,
        family: m.family,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Equivalence {
    Equivalent,
    Inequivalent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub verdict: Equivalence,
    pub witness: Option<String>,
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Same family: equivalent iff the invariant pairs agree. Different
/// families: never equivalent, witnessed by the obstruction quadratic.
pub fn classify(a: &ModuleSpec, b: &ModuleSpec) -> Classification {
    if a.family != b.family {
        let nu = match a.family {
            Family::DetCurvature => a.nu,
            Family::WeightedPower => b.nu,
        };
        let q = cross_family_quadratic(nu.max(0.0));
        let witness = format!(
            "cross-family: {}*lambda^2 + ({})*lambda + ({}) has no positive root",
            q.coefficients.0, q.coefficients.1, q.coefficients.2
        );
        return Classification { verdict: Equivalence::Inequivalent, witness: Some(witness) };
    }
    let (pa, pb) = (a.closed_pair(), b.closed_pair());
    let (n1, n2) = a.pair_names();
    let witness = if !same(pa.0, pb.0) {
        Some(format!("{n1}: {} vs {}", pa.0, pb.0))
    } else if !same(pa.1, pb.1) {
        Some(format!("{n2}: {} vs {}", pa.1, pb.1))
    } else {
        None
    };
    let verdict = if witness.is_some() { Equivalence::Inequivalent } else { Equivalence::Equivalent };
    Classification { verdict, witness }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticReport {
    pub nu: f64,
    pub coefficients: (f64, f64, f64),
    pub discriminant: f64,
    pub has_positive_root: bool,
}

/// `nu lambda^2 + (5 - 4 nu) lambda + (23 nu + 35) = 0` in `lambda`.
pub fn cross_family_quadratic(nu: f64) -> QuadraticReport {
    let (a, b, c) = (nu, 5.0 - 4.0 * nu, 23.0 * nu + 35.0);
    let discriminant = b * b - 4.0 * a * c;
    let has_positive_root = if a == 0.0 {
        b != 0.0 && -c / b > 0.0
    } else if discriminant < 0.0 {
        false
    } else {
        let s = discriminant.sqrt();
        [(-b + s) / (2.0 * a), (-b - s) / (2.0 * a)].iter().any(|&r| r > 0.0)
    };
    QuadraticReport { nu, coefficients: (a, b, c), discriminant, has_positive_root }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KeVerdict {
    EinsteinConsistent,
    NotEinstein,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KEReport {
    pub c_estimates: Vec<(G2Point, Vec<C64>)>,
    pub max_ratio_spread: f64,
    pub verdict: KeVerdict,
}

pub const KE_THRESHOLD: f64 = 0.01;

fn perturb(u: &G2Point, k: usize, h: f64) -> G2Point {
    let mut p = *u;
    let d = [C64::new(h, 0.0), C64::new(0.0, h)][k % 2];
    if k < 2 {
        p.u1 += d;
    } else {
        p.u2 += d;
    }
    p
}

/// `d_i dbar_j F` of a real function of two complex variables from its real
/// Hessian in `(x1, y1, x2, y2)`, by central differences with one Richardson step.
pub fn complex_hessian<F: Fn(&G2Point) -> Result<f64>>(f: &F, u: &G2Point, h: f64) -> Result<Mat2> {
    let real_hessian = |h: f64| -> Result<[[f64; 4]; 4]> {
        let f0 = f(u)?;
        let mut m = [[0.0; 4]; 4];
        for a in 0..4 {
            let fp = f(&perturb(u, a, h))?;
            let fm = f(&perturb(u, a, -h))?;
            m[a][a] = (fp - 2.0 * f0 + fm) / (h * h);
            for b in 0..a {
                let pp = f(&perturb(&perturb(u, a, h), b, h))?;
                let pm = f(&perturb(&perturb(u, a, h), b, -h))?;
                let mp = f(&perturb(&perturb(u, a, -h), b, h))?;
                let mm = f(&perturb(&perturb(u, a, -h), b, -h))?;
                m[a][b] = (pp - pm - mp + mm) / (4.0 * h * h);
                m[b][a] = m[a][b];
            }
        }
        Ok(m)
    };
    let (m1, m2) = (real_hessian(h)?, real_hessian(h / 2.0)?);
    let m = |a: usize, b: usize| (4.0 * m2[a][b] - m1[a][b]) / 3.0;
    let entry = |i: usize, j: usize| {
        let (xi, yi, xj, yj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
        C64::new(m(xi, xj) + m(yi, yj), m(xi, yj) - m(yi, xj)) * 0.25
    };
    Ok(Mat2::new(entry(0, 0), entry(0, 1), entry(1, 0), entry(1, 1)))
}

/// Step of the Ricci finite differences.
pub const KE_STEP: f64 = 1e-3;

/// Ratios `Ric_{i jbar} / B_{i jbar}` with `Ric = -d dbar log_field`, against
/// the curvature of `B^(lambda)`; entries of `B` below `1e-8 |B|` are skipped.
pub fn ke_test_field<F>(lambda: f64, log_field: F, points: &[G2Point]) -> Result<KEReport>
where
    F: Fn(&G2Point) -> Result<f64>,
{
    if points.len() < 2 {
        return Err(Error::Domain("the Kähler–Einstein test needs at least two points".into()));
    }
    let mut c_estimates = Vec::new();
    let mut all = Vec::new();
    for u in points {
        let z = solve_preimage(u)?;
        let rho = z.z1.norm().max(z.z2.norm());
        let ric = -complex_hessian(&log_field, u, KE_STEP * (1.0 - rho * rho).min(1.0))?;
        let metric = curvature_polarized(lambda, u)?.entries;
        let floor = 1e-8 * metric.norm();
        let ratios: Vec<C64> =
            ric.iter().zip(metric.iter()).filter(|(_, m)| m.norm() > floor).map(|(r, m)| r / m).collect();
        all.extend_from_slice(&ratios);
        c_estimates.push((*u, ratios));
    }
    let mean = all.iter().sum::<C64>() / all.len() as f64;
    let max_ratio_spread = all.iter().map(|r| (r - mean).norm()).fold(0.0, f64::max) / mean.norm().max(1e-30);
    let verdict = if max_ratio_spread > KE_THRESHOLD { KeVerdict::NotEinstein } else { KeVerdict::EinsteinConsistent };
    Ok(KEReport { c_estimates, max_ratio_spread, verdict })
}

/// Kähler–Einstein test of the metric of `B^(lambda)`, with `log det B` from the oracle.
pub fn ke_test(lambda: f64, points: &[G2Point]) -> Result<KEReport> {
    ke_test_field(lambda, |u| Ok(det_curvature(lambda, u, DetMethod::Oracle)?.ln()), points)
}

/// Control: the field `(B^(lambda))^(-c)` in place of `det B` gives ratios `c`.
pub fn ke_control(lambda: f64, c: f64, points: &[G2Point]) -> Result<KEReport> {
    let b = KernelSpec::bergman(lambda);
    let opts = EvalOptions::default();
    ke_test_field(lambda, |u| Ok(-c * eval_scalar(&b, u, u, &opts)?.re.ln()), points)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub formula: String,
    pub lambda: f64,
    /// Radius of the evaluation point; absent for rows that are not point values.
    pub r: Option<f64>,
    pub paper: f64,
    pub oracle: f64,
    pub relative_gap: f64,
}

impl AuditRow {
    fn new(formula: &str, lambda: f64, r: Option<f64>, paper: f64, oracle: f64, scale: f64) -> Self {
        let relative_gap = (paper - oracle).abs() / oracle.abs().max(scale).max(1e-30);
        Self { formula: formula.into(), lambda, r, paper, oracle, relative_gap }
    }
}

/// Row labels of [`audit`].
pub mod rows {
    pub const CURV_G2: [&str; 3] = ["curv_G2_11", "curv_G2_12", "curv_G2_22"];
    pub const CURV_BIDISC: [&str; 3] = ["curv_bidisc_11", "curv_bidisc_12", "curv_bidisc_22"];
    pub const DET_FUNDAMENTAL: &str = "det_curv_on_lambda";
    pub const DET_LEMMA_PRINTED: &str = "det_curv_bidisc_printed";
    pub const DET_LEMMA_PROOF: &str = "det_curv_bidisc_proof_variant";
    pub const ROYAL_DET_KERNEL: &str = "royal_det_kernel_nu0";
    pub const H_LEADING: &str = "h_leading";
    pub const DET_EXPONENT: &str = "det_kernel_diagonal_exponent_nu0";
}

/// Published closed forms against independent evaluations at `(r, 0)`.
///
/// Curvature entries are compared with finite differences of the kernel
/// (entries relative to `max(|oracle entry|, 1e-6 |oracle matrix|)`);
/// determinant formulas with the oracle determinant; the royal determinant
/// kernel with its direct evaluation; the leading `H` coefficient with the
/// first term of the anti-diagonal series.
pub fn audit(lambda: f64, r_grid: &[f64], fd: &FDOptions) -> Result<Vec<AuditRow>> {
    let mut out = Vec::new();
    let k = KernelSpec::bergman(lambda);
    let opts = EvalOptions::default();
    let det_spec = KernelSpec::DetCurvature { lambda, nu: 0.0 };
    for &r in r_grid {
        if !(0.0..=0.9).contains(&r) {
            return Err(Error::Domain(format!("r = {r} outside [0, 0.9]")));
        }
        let u = G2Point::fundamental(r);
        let num = curvature_numeric(&k, &u, fd)?;
        let closed = bergman_curvature_on_lambda(lambda, r)?;
        let scale = 1e-6 * num.entries.norm();
        for (name, (i, j)) in rows::CURV_G2.iter().zip([(0, 0), (0, 1), (1, 1)]) {
            out.push(AuditRow::new(name, lambda, Some(r), closed[(i, j)].re, num.entries[(i, j)].re, scale));
        }
        if r > 0.0 {
            let b_num = to_bidisc(&num)?;
            let b_closed = to_bidisc(&CurvatureMatrix::g2(closed, u))?;
            for (name, (i, j)) in rows::CURV_BIDISC.iter().zip([(0, 0), (0, 1), (1, 1)]) {
                out.push(AuditRow::new(name, lambda, Some(r), b_closed.entries[(i, j)].re, b_num.entries[(i, j)].re, scale));
            }
        }
        let oracle_det = det_curvature(lambda, &u, DetMethod::Oracle)?;
        out.push(AuditRow::new(rows::DET_FUNDAMENTAL, lambda, Some(r), det_fundamental_published(lambda, r)?, oracle_det, 0.0));
        let z = Disc2Point { z1: C64::new(r, 0.0), z2: C64::new(0.0, 0.0) };
        for (name, v) in [(rows::DET_LEMMA_PRINTED, LemmaVariant::AsStated), (rows::DET_LEMMA_PROOF, LemmaVariant::Shifted)] {
            out.push(AuditRow::new(name, lambda, Some(r), det_curvature_lemma(lambda, &z, v)?, oracle_det, 0.0));
        }
        let royal = G2Point::royal(C64::new(r, 0.0));
        let direct = eval_scalar(&det_spec, &royal, &royal, &opts)?.re;
        out.push(AuditRow::new(rows::ROYAL_DET_KERNEL, lambda, Some(r), royal_det_kernel_published(lambda, 0.0, r * r), direct, 0.0));
    }
    out.push(AuditRow::new(rows::H_LEADING, lambda, None, h_leading(lambda), h_antidiagonal_coefficient(lambda, 1), 0.0));
    let m = ModuleSpec::det_curvature(lambda, 0.0)?;
    let exponent = diagonal_exponent(&det_spec, &opts)?;
    out.push(AuditRow::new(rows::DET_EXPONENT, lambda, None, m.published_diagonal_exponent(), exponent, 0.0));
    Ok(out)
}
