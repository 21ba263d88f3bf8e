//! Gram matrices, eigenvalue positivity checks and Wallach-set scans.

use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::automorphisms::{symmetrize, Disc2Point, G2Point};
use crate::kernels::{eval_kernel, EvalOptions, KernelSpec, KernelValue, ScalarKernel};
use crate::sampling::{random_g2, rng};
use crate::{Error, Result, C64};

pub const MAX_POINTS: usize = 64;
pub const MIN_SEPARATION: f64 = 1e-8;
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Grid,
    Random,
    File,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub points: Vec<G2Point>,
    pub seed: u64,
    pub scheme: Scheme,
}

fn push_distinct(points: &mut Vec<G2Point>, p: G2Point) {
    if points.iter().all(|q| q.dist(&p) > MIN_SEPARATION) {
        points.push(p);
    }
}

impl SampleSet {
    pub fn new(points: Vec<G2Point>, seed: u64, scheme: Scheme) -> Result<Self> {
        let s = Self { points, seed, scheme };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() || self.points.len() > MAX_POINTS {
            return Err(Error::Domain(format!("sample size {} not in 1..={MAX_POINTS}", self.points.len())));
        }
        for (i, p) in self.points.iter().enumerate() {
            if !p.is_in_g2() {
                return Err(Error::NotInG2(p.u1.norm().max(p.u2.norm())));
            }
            if self.points[..i].iter().any(|q| q.dist(p) <= MIN_SEPARATION) {
                return Err(Error::Domain(format!("sample point {i} duplicates an earlier point")));
            }
        }
        Ok(())
    }

    /// `n` area-uniform bidisc points of modulus below 0.85, symmetrized.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        let mut r = rng(seed);
        let mut points = Vec::with_capacity(n);
        let mut draws = 0;
        while points.len() < n && draws < 100 * n + 100 {
            push_distinct(&mut points, random_g2(&mut r, 0.85));
            draws += 1;
        }
        Self::new(points, seed, Scheme::Random)
    }

    /// Polar grid in each disc coordinate (radii 0, 0.25, 0.5, 0.75 and five
    /// angles per circle), pushed through the symmetrization map, deduplicated,
    /// and thinned evenly to `n` points (at most 64).
    pub fn grid(n: usize) -> Result<Self> {
        let mut disc = vec![C64::new(0.0, 0.0)];
        for k in 1..=3 {
            for j in 0..5 {
                let phase = 2.0 * std::f64::consts::PI * (j as f64 + 0.1 * k as f64) / 5.0;
                disc.push(C64::from_polar(0.25 * k as f64, phase));
            }
        }
        let mut all = Vec::new();
        for (i, &a) in disc.iter().enumerate() {
            for &b in &disc[i..] {
                push_distinct(&mut all, symmetrize(&Disc2Point { z1: a, z2: b }));
            }
        }
        let n = n.min(all.len()).min(MAX_POINTS);
        if n == 0 {
            return Err(Error::Domain("grid size must be positive".into()));
        }
        let points = (0..n).map(|k| all[k * all.len() / n]).collect();
        Self::new(points, 0, Scheme::Grid)
    }

    /// CSV with one point per line: `re(u1),im(u1),re(u2),im(u2)`.
    pub fn from_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path.as_ref())
            .map_err(|e| Error::Parse(e.to_string()))?;
        let mut points = Vec::new();
        for rec in rdr.deserialize::<(f64, f64, f64, f64)>() {
            let (a, b, c, d) = rec.map_err(|e| Error::Parse(e.to_string()))?;
            points.push(G2Point::new(C64::new(a, b), C64::new(c, d))?);
        }
        Self::new(points, 0, Scheme::File)
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = csv::Writer::from_path(path.as_ref()).map_err(|e| Error::Parse(e.to_string()))?;
        for p in &self.points {
            w.serialize((p.u1.re, p.u1.im, p.u2.re, p.u2.im)).map_err(|e| Error::Parse(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Gram matrix `K(w_i, w_j)` of a spec; `2n x 2n` with 2x2 blocks for matrix kernels.
pub fn gram(spec: &KernelSpec, sample: &SampleSet, opts: &EvalOptions) -> Result<DMatrix<C64>> {
    sample.validate()?;
    let pts = &sample.points;
    let n = pts.len();
    if !spec.is_matrix() {
        return gram_scalar(&crate::kernels::Bound { spec, opts: *opts }, pts);
    }
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let KernelValue::Matrix(m) = eval_kernel(spec, &pts[i], &pts[j], opts)? else {
                unreachable!("matrix spec returned a scalar");
            };
            for a in 0..2 {
                for b in 0..2 {
                    g[(2 * i + a, 2 * j + b)] = m[(a, b)];
                }
            }
        }
    }
    Ok(g)
}

/// Gram matrix of any scalar kernel on a list of points.
pub fn gram_scalar<K: ScalarKernel + ?Sized>(k: &K, pts: &[G2Point]) -> Result<DMatrix<C64>> {
    let n = pts.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = k.eval(&pts[i], &pts[j])?;
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdVerdict {
    Psd,
    NotPsd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PSDReport {
    pub n: usize,
    pub min_eig: f64,
    pub max_eig: f64,
    pub verdict: PsdVerdict,
    pub tol: f64,
}

/// `|G - G*|_max / max(|G|_max, 1e-30)`.
pub fn hermitian_defect(g: &DMatrix<C64>) -> f64 {
    let scale = g.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-30);
    (g - g.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale
}

/// Extreme eigenvalues of a Hermitian matrix; psd iff `min >= -tol max(|max|, 1e-30)`.
pub fn psd_check(g: &DMatrix<C64>, tol: f64) -> Result<PSDReport> {
    if !g.is_square() || g.nrows() == 0 {
        return Err(Error::Domain("Gram matrix must be square and non-empty".into()));
    }
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::Domain(format!("tolerance {tol} must be non-negative")));
    }
    let defect = hermitian_defect(g);
    if defect > 1e-10 {
        return Err(Error::Domain(format!("matrix is not Hermitian (defect {defect:.3e})")));
    }
    let h = (g + g.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigenvalues();
    if eig.iter().any(|e| !e.is_finite()) {
        return Err(Error::Numeric("eigensolver returned non-finite values".into()));
    }
    let min_eig = eig.min();
    let max_eig = eig.max();
    let verdict = if min_eig >= -tol * max_eig.abs().max(1e-30) { PsdVerdict::Psd } else { PsdVerdict::NotPsd };
    Ok(PSDReport { n: g.nrows(), min_eig, max_eig, verdict, tol })
}

/// PSD verdict of the Gram matrix of `(B^(lambda))^nu` for each `nu`. A
/// `psd` entry only means the sample is consistent with membership.
pub fn wallach_probe(
    lambda: f64,
    nu_grid: &[f64],
    sample: &SampleSet,
    opts: &EvalOptions,
    tol: f64,
) -> Result<Vec<(f64, PSDReport)>> {
    nu_grid
        .iter()
        .map(|&nu| {
            if nu.is_nan() || nu <= 0.0 {
                return Err(Error::Domain(format!("nu = {nu} must be positive")));
            }
            let spec = KernelSpec::power(KernelSpec::bergman(lambda), nu);
            Ok((nu, psd_check(&gram(&spec, sample, opts)?, tol)?))
        })
        .collect()
}
