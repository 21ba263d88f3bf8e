//! Quasi-invariance residuals, the multiplier-free factorization test, the
//! curvature criterion on the fundamental set, and reconstruction from it.

use crate::automorphisms::{to_fundamental, to_fundamental_swapped, AutomorphismMap, G2Point};
use crate::curvature::{
    bergman_curvature_on_lambda, curvature_numeric, curvature_transport, fundamental_identity_residual,
    CurvatureMatrix, FDOptions,
};
use crate::kernels::{KernelSpec, ScalarKernel};
use crate::sampling::{random_automorphism, random_g2, rng};
use crate::{Error, Mat2, Result, C64};

const FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub max_relative_residual: f64,
    pub argmax_points: (G2Point, G2Point),
    pub trials: usize,
    pub seed: u64,
}

impl ResidualReport {
    fn empty(seed: u64) -> Self {
        let o = G2Point::real(0.0, 0.0);
        Self { max_relative_residual: 0.0, argmax_points: (o, o), trials: 0, seed }
    }

    fn record(&mut self, residual: f64, u: G2Point, v: G2Point) {
        self.trials += 1;
        if residual > self.max_relative_residual || residual.is_nan() {
            self.max_relative_residual = residual;
            self.argmax_points = (u, v);
        }
    }

    /// Max-reduction of two reports.
    pub fn merge(mut self, o: &ResidualReport) -> Self {
        let trials = self.trials + o.trials;
        if o.max_relative_residual > self.max_relative_residual {
            self = *o;
        }
        self.trials = trials;
        self
    }
}

/// Multiplier `J(g, u) = phi_hat(u)^kappa (det D phi~(u))^jacobian_power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierSpec {
    pub kappa: f64,
    pub jacobian_power: f64,
}

impl MultiplierSpec {
    pub fn new(kappa: f64, jacobian_power: f64) -> Result<Self> {
        if !(kappa.is_finite() && jacobian_power.is_finite()) {
            return Err(Error::Domain("multiplier exponents must be finite".into()));
        }
        Ok(Self { kappa, jacobian_power })
    }

    pub fn bergman(lambda: f64) -> Self {
        Self { kappa: (lambda + 1.0) / 2.0, jacobian_power: 0.0 }
    }

    pub fn bergman_power(lambda: f64, nu: f64) -> Self {
        Self { kappa: nu * (lambda + 1.0) / 2.0, jacobian_power: 0.0 }
    }

    pub fn symmetric(lambda: f64) -> Self {
        Self { kappa: lambda / 2.0, jacobian_power: 0.0 }
    }

    pub fn det_curvature(lambda: f64, nu: f64) -> Self {
        Self { kappa: (lambda + 1.0) * (nu + 2.0), jacobian_power: 1.0 }
    }

    /// The multiplier each scalar family is quasi-invariant with; exponents add
    /// over products and scale under powers.
    pub fn for_kernel(spec: &KernelSpec) -> Option<Self> {
        match spec {
            KernelSpec::WeightedBergman { lambda } => Some(Self::bergman(*lambda)),
            KernelSpec::SymmetricC { lambda } => Some(Self::symmetric(*lambda)),
            KernelSpec::DetCurvature { lambda, nu } => Some(Self::det_curvature(*lambda, *nu)),
            KernelSpec::Power { base, nu } => {
                Self::for_kernel(base).map(|m| Self { kappa: nu * m.kappa, jacobian_power: nu * m.jacobian_power })
            }
            KernelSpec::Product(v) => v.iter().try_fold(Self { kappa: 0.0, jacobian_power: 0.0 }, |acc, k| {
                Self::for_kernel(k).map(|m| Self {
                    kappa: acc.kappa + m.kappa,
                    jacobian_power: acc.jacobian_power + m.jacobian_power,
                })
            }),
            KernelSpec::MatrixCurvature { .. } => None,
        }
    }

    /// `log J(g, u)` on the branch continued from the identity.
    pub fn log_multiplier(&self, g: &AutomorphismMap, u: &G2Point) -> Result<C64> {
        let (log_hat, log_det) = g.log_cocycle(u)?;
        Ok(self.kappa * log_hat + self.jacobian_power * log_det)
    }
}

/// Max over `sample` of `|K(u,v) - J(u) K(gu, gv) conj(J(v))| / |K(u,v)|`.
pub fn quasi_invariance_residual<K: ScalarKernel + ?Sized>(
    k: &K,
    mult: &MultiplierSpec,
    g: &AutomorphismMap,
    sample: &[(G2Point, G2Point)],
) -> Result<ResidualReport> {
    if sample.is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    let mut rep = ResidualReport::empty(0);
    for (u, v) in sample {
        rep.record(quasi_invariance_pair(k, mult, g, u, v)?, *u, *v);
    }
    Ok(rep)
}

fn quasi_invariance_pair<K: ScalarKernel + ?Sized>(
    k: &K,
    mult: &MultiplierSpec,
    g: &AutomorphismMap,
    u: &G2Point,
    v: &G2Point,
) -> Result<f64> {
    let lhs = k.eval(u, v)?;
    let moved = k.eval(&g.apply(u)?, &g.apply(v)?)?;
    let ju = mult.log_multiplier(g, u)?.exp();
    let jv = mult.log_multiplier(g, v)?.exp();
    Ok((lhs - ju * moved * jv.conj()).norm() / lhs.norm().max(FLOOR))
}

/// Sampling radii for random trials: automorphisms with `|alpha| <= 0.7`,
/// points from bidisc points of modulus at most `0.8`.
pub const ALPHA_RADIUS: f64 = 0.7;
pub const POINT_RADIUS: f64 = 0.8;

/// `trials` independent `(g, u, v)` draws from the given seed.
pub fn quasi_invariance_trials<K: ScalarKernel + ?Sized>(
    k: &K,
    mult: &MultiplierSpec,
    trials: usize,
    seed: u64,
) -> Result<ResidualReport> {
    let mut r = rng(seed);
    let mut rep = ResidualReport::empty(seed);
    for _ in 0..trials {
        let g = random_automorphism(&mut r, ALPHA_RADIUS);
        let u = random_g2(&mut r, POINT_RADIUS);
        let v = random_g2(&mut r, POINT_RADIUS);
        rep.record(quasi_invariance_pair(k, mult, &g, &u, &v)?, u, v);
    }
    Ok(rep)
}

/// Default base pair `((0, 0), (0.2, 0))` of the factorization test.
pub fn default_base_pair() -> (G2Point, G2Point) {
    (G2Point::real(0.0, 0.0), G2Point::real(0.2, 0.0))
}

/// Checks that `M(u, v) = K(u, v) / K(gu, gv)` factors as `f(u) conj(f(v))`
/// through the cross identity `M(u,v) M(u0,v0) = M(u,v0) M(u0,v)`.
pub fn factorization_test<K: ScalarKernel + ?Sized>(
    k: &K,
    g: &AutomorphismMap,
    sample: &[(G2Point, G2Point)],
    base: Option<(G2Point, G2Point)>,
) -> Result<ResidualReport> {
    if sample.is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    let ratio = |u: &G2Point, v: &G2Point| -> Result<C64> {
        let a = k.eval(u, v)?;
        let b = k.eval(&g.apply(u)?, &g.apply(v)?)?;
        if a.norm() < 1e-14 || b.norm() < 1e-14 {
            return Err(Error::Numeric("kernel vanishes at a sample point".into()));
        }
        Ok(a / b)
    };
    // rescue a degenerate base pair with the next sample pair
    let candidates = base.into_iter().chain(std::iter::once(default_base_pair())).chain(sample.iter().copied());
    let mut chosen = None;
    for (u0, v0) in candidates {
        if let Ok(m) = ratio(&u0, &v0) {
            chosen = Some((u0, v0, m));
            break;
        }
    }
    let (u0, v0, m00) = chosen.ok_or_else(|| Error::Numeric("no usable base pair".into()))?;
    let mut rep = ResidualReport::empty(0);
    for (u, v) in sample {
        let lhs = ratio(u, v)? * m00;
        let rhs = ratio(u, &v0)? * ratio(&u0, v)?;
        rep.record((lhs - rhs).norm() / lhs.norm().max(FLOOR), *u, *v);
    }
    Ok(rep)
}

/// Random pairs for [`factorization_test`] and similar sweeps.
pub fn random_pairs(n: usize, seed: u64) -> Vec<(G2Point, G2Point)> {
    let mut r = rng(seed);
    (0..n).map(|_| (random_g2(&mut r, POINT_RADIUS), random_g2(&mut r, POINT_RADIUS))).collect()
}

/// Random automorphism for a seed; a convenience for the CLI.
pub fn seeded_automorphism(seed: u64) -> AutomorphismMap {
    random_automorphism(&mut rng(seed), ALPHA_RADIUS)
}

/// Max over `r_grid` of both residuals of the fundamental-set identity.
pub fn curvature_criterion<F>(curvature_at: F, r_grid: &[f64]) -> Result<ResidualReport>
where
    F: Fn(f64) -> Result<Mat2>,
{
    let mut rep = ResidualReport::empty(0);
    for &r in r_grid {
        if !(0.0..=0.95).contains(&r) {
            return Err(Error::Domain(format!("r = {r} outside [0, 0.95]")));
        }
        let k = curvature_at(r)?;
        let (a, b) = fundamental_identity_residual(&k, r);
        let p = G2Point::fundamental(r);
        rep.record(a.max(b), p, p);
    }
    Ok(rep)
}

/// [`curvature_criterion`] for `B^(lambda)` with the closed forms.
pub fn curvature_criterion_closed(lambda: f64, r_grid: &[f64]) -> Result<ResidualReport> {
    curvature_criterion(|r| bergman_curvature_on_lambda(lambda, r), r_grid)
}

/// [`curvature_criterion`] with finite-difference curvature of any kernel.
pub fn curvature_criterion_numeric<K: ScalarKernel + ?Sized>(
    k: &K,
    r_grid: &[f64],
    fd: &FDOptions,
) -> Result<ResidualReport> {
    curvature_criterion(|r| Ok(curvature_numeric(k, &G2Point::fundamental(r), fd)?.entries), r_grid)
}

fn reconstruct_with<F>(k_on_lambda: &F, mult: &MultiplierSpec, r: f64, g: &AutomorphismMap) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let lj = mult.log_multiplier(g, &G2Point::fundamental(r))?;
    Ok(k_on_lambda(r)? * (-2.0 * lj.re).exp())
}

/// `K(u, u) = |J(g, (r, 0))|^{-2} K_Lambda(r)` with `u = g(r, 0)`; the value
/// is recomputed from the other root ordering and must agree to 1e-10.
pub fn reconstruct_from_fundamental<F>(k_on_lambda: F, mult: &MultiplierSpec, u: &G2Point) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let d = to_fundamental(u)?;
    let value = reconstruct_with(&k_on_lambda, mult, d.r, &d.g)?;
    let s = to_fundamental_swapped(u)?;
    let other = reconstruct_with(&k_on_lambda, mult, s.r, &s.g)?;
    let gap = (value - other).abs() / value.abs().max(FLOOR);
    if gap > 1e-10 {
        return Err(Error::Numeric(format!("reconstruction depends on the root ordering ({gap:.3e})")));
    }
    Ok(value)
}

/// Curvature at `u` transported from the fundamental set, with the largest
/// relative disagreement found when `g` is replaced by `g h` for `h` in the
/// stabilizer of `(r, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagated {
    pub matrix: CurvatureMatrix,
    pub stabilizer_gap: f64,
}

pub fn propagate_curvature<F>(k_on_lambda: F, u: &G2Point) -> Result<Propagated>
where
    F: Fn(f64) -> Result<Mat2>,
{
    let d = to_fundamental(u)?;
    let base = CurvatureMatrix::g2(k_on_lambda(d.r)?, G2Point::fundamental(d.r));
    let matrix = curvature_transport(&base, &d.g)?;
    let others: Vec<AutomorphismMap> = if d.r == 0.0 {
        [0.7, 2.0, 4.1].iter().map(|&t| AutomorphismMap::rotation(t)).collect()
    } else {
        vec![AutomorphismMap::involution(C64::new(d.r, 0.0))]
    };
    let mut gap: f64 = 0.0;
    for h in others {
        let alt = curvature_transport(&base, &d.g.compose(&h))?;
        gap = gap.max((alt.entries - matrix.entries).norm() / matrix.entries.norm().max(FLOOR));
    }
    Ok(Propagated { matrix: CurvatureMatrix { base_point: crate::curvature::BasePoint::G2(*u), ..matrix }, stabilizer_gap: gap })
}
