//! Curvature matrices `((d_i dbar_j log K))`: finite differences, closed forms on
//! the fundamental set, transport under automorphisms, and determinants.

use crate::automorphisms::{solve_preimage, to_fundamental, AutomorphismMap, Disc2Point, G2Point};
use crate::kernels::{bergman_diagonal, bergman_log_curvature, eval_h, ScalarKernel};
use crate::series::PowerSeries;
use crate::{Error, Mat2, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    G2,
    Bidisc,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasePoint {
    G2(G2Point),
    Bidisc(Disc2Point),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureMatrix {
    pub entries: Mat2,
    pub base_point: BasePoint,
    pub chart: Chart,
    /// Relative h vs h/2 discrepancy for finite-difference results.
    pub error_estimate: Option<f64>,
}

impl CurvatureMatrix {
    pub fn g2(entries: Mat2, u: G2Point) -> Self {
        Self { entries, base_point: BasePoint::G2(u), chart: Chart::G2, error_estimate: None }
    }

    pub fn det(&self) -> f64 {
        self.entries.determinant().re
    }

    /// `|K - K*| / |K|` in the Frobenius norm.
    pub fn hermitian_defect(&self) -> f64 {
        (self.entries - self.entries.adjoint()).norm() / self.entries.norm().max(1e-300)
    }

    /// Smallest eigenvalue of the Hermitian part relative to the trace.
    pub fn min_eig_over_trace(&self) -> f64 {
        let h = hermitian_part(&self.entries);
        let (a, d, b) = (h[(0, 0)].re, h[(1, 1)].re, h[(0, 1)].norm());
        let tr = a + d;
        let disc = ((a - d) * (a - d) / 4.0 + b * b).sqrt();
        (tr / 2.0 - disc) / tr.abs().max(1e-300)
    }

    pub fn g2_point(&self) -> Result<G2Point> {
        match self.base_point {
            BasePoint::G2(u) => Ok(u),
            BasePoint::Bidisc(_) => Err(Error::Domain("expected a matrix in the G2 chart".into())),
        }
    }
}

fn hermitian_part(m: &Mat2) -> Mat2 {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Finite-difference settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FDOptions {
    pub step: f64,
    pub richardson: bool,
}

impl Default for FDOptions {
    fn default() -> Self {
        Self { step: 1e-4, richardson: true }
    }
}

impl FDOptions {
    pub fn validate(&self) -> Result<()> {
        if (1e-7..=1e-2).contains(&self.step) {
            Ok(())
        } else {
            Err(Error::Domain(format!("fd step {} not in [1e-7, 1e-2]", self.step)))
        }
    }
}

fn shifted(u: &G2Point, i: usize, h: f64) -> G2Point {
    let mut p = *u;
    if i == 0 {
        p.u1 += h;
    } else {
        p.u2 += h;
    }
    p
}

fn mixed_difference<K: ScalarKernel + ?Sized>(k: &K, u: &G2Point, k0: C64, h: f64) -> Result<Mat2> {
    let log_ratio = |p: &G2Point, q: &G2Point| -> Result<C64> {
        let l = (k.eval(p, q)? / k0).ln();
        if l.im.abs() > std::f64::consts::FRAC_PI_2 {
            return Err(Error::Numeric("branch jump in the log-kernel stencil".into()));
        }
        Ok(l)
    };
    let mut m = Mat2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let (up, um) = (shifted(u, i, h), shifted(u, i, -h));
            let (vp, vm) = (shifted(u, j, h), shifted(u, j, -h));
            let s = log_ratio(&up, &vp)? - log_ratio(&up, &vm)? - log_ratio(&um, &vp)? + log_ratio(&um, &vm)?;
            m[(i, j)] = s / (4.0 * h * h);
        }
    }
    Ok(m)
}

/// Curvature of a scalar kernel at `u` by nested central differences on the
/// polarized log-kernel, one step in each argument.
pub fn curvature_numeric<K: ScalarKernel + ?Sized>(k: &K, u: &G2Point, opts: &FDOptions) -> Result<CurvatureMatrix> {
    opts.validate()?;
    let z = solve_preimage(u)?;
    let rho = z.z1.norm().max(z.z2.norm());
    let h = opts.step * (1.0 - rho * rho).min(1.0);
    let k0 = k.eval(u, u)?;
    let d1 = mixed_difference(k, u, k0, h)?;
    let (entries, err) = if opts.richardson {
        let d2 = mixed_difference(k, u, k0, h / 2.0)?;
        let r = (d2 * C64::new(4.0, 0.0) - d1) / C64::new(3.0, 0.0);
        (r, (d1 - d2).norm() / r.norm().max(1e-300))
    } else {
        (d1, f64::NAN)
    };
    if err > 1e-4 {
        return Err(Error::Numeric(format!("finite-difference discrepancy {err:.3e}")));
    }
    Ok(CurvatureMatrix {
        entries: hermitian_part(&entries),
        base_point: BasePoint::G2(*u),
        chart: Chart::G2,
        error_estimate: opts.richardson.then_some(err),
    })
}

/// Curvature of `B^(lambda)` at `u` from exact hyper-dual derivatives.
pub fn curvature_polarized(lambda: f64, u: &G2Point) -> Result<CurvatureMatrix> {
    let m = bergman_log_curvature(lambda, u, u)?;
    Ok(CurvatureMatrix::g2(hermitian_part(&m), *u))
}

const SERIES_ORDER: usize = 64;

/// Radius of convergence in `x` of the expansions below, bounded by the
/// nearest non-zero root of `(1 - x)^a = 1`.
fn series_radius(a: f64) -> f64 {
    if a <= 2.0 {
        1.0
    } else {
        (2.0 * (std::f64::consts::PI / a).sin()).min(1.0)
    }
}

fn use_series(x: f64, a: f64) -> bool {
    x < (0.4 * series_radius(a)).min(0.25)
}

/// Entries `(b11, b12, b22)` of the bidisc curvature at `(z, 0)` and the
/// differences `(b12 - b11) / x`, `(b11 - 2 b12 + b22) / x`, all at `x = |z|^2`.
struct ClosedEntries {
    b11: f64,
    b12: f64,
    b22: f64,
    e12: f64,
    e22: f64,
}

fn closed_entries(lambda: f64, x: f64) -> ClosedEntries {
    if use_series(x, lambda) {
        let n = SERIES_ORDER;
        let one = PowerSeries::constant(1.0, n);
        let a = PowerSeries::one_minus_x_pow(lambda, n);
        let g = one.sub(&a).shift_down(1);
        let mut lin = PowerSeries::constant(1.0, n);
        lin.0[1] = lambda;
        let n11 = one.sub(&a.mul(&lin)).shift_down(2);
        let mut m = PowerSeries::constant(-1.0, n);
        m.0[1] = lambda + 1.0;
        let n12 = m.add(&PowerSeries::one_minus_x_pow(lambda + 1.0, n)).shift_down(2);
        let g2 = g.mul(&g);
        let om = PowerSeries::one_minus_x_pow(1.0, n);
        let om2 = PowerSeries::one_minus_x_pow(2.0, n);
        let b11 = n11.div(&om2.mul(&g2)).scale(lambda);
        let b12 = a.mul(&n12).div(&om.mul(&g2)).scale(lambda);
        let b22 = om2.mul(&b11);
        let e12 = b12.sub(&b11).shift_down(1);
        let e22 = b11.sub(&b12.scale(2.0)).add(&b22).shift_down(1);
        return ClosedEntries { b11: b11.eval(x), b12: b12.eval(x), b22: b22.eval(x), e12: e12.eval(x), e22: e22.eval(x) };
    }
    let y = 1.0 - x;
    let yl = y.powf(lambda);
    let g = 1.0 - yl;
    let b11 = lambda * (1.0 - yl * (1.0 + lambda * x)) / (y * y * g * g);
    let b12 = lambda * yl * (lambda * x - y + y.powf(lambda + 1.0)) / (y * g * g);
    let b22 = y * y * b11;
    ClosedEntries { b11, b12, b22, e12: (b12 - b11) / x, e22: (b11 - 2.0 * b12 + b22) / x }
}

/// Curvature of `B^(lambda)` at `(r, 0)` for `r` in `[0, 1)` from the closed
/// forms; near `r = 0` the same expressions are summed as power series in
/// `r^2`, which gives the limit at the origin.
pub fn bergman_curvature_on_lambda(lambda: f64, r: f64) -> Result<Mat2> {
    if !(0.0..1.0).contains(&r) || lambda <= 0.0 {
        return Err(Error::Domain(format!("need 0 <= r < 1 and lambda > 0, got r = {r}, lambda = {lambda}")));
    }
    let e = closed_entries(lambda, r * r);
    let c = |x: f64| C64::new(x, 0.0);
    Ok(Mat2::new(c(e.b11), c(r * e.e12), c(r * e.e12), c(e.e22)))
}

/// The bidisc matrix `b` at `(r, 0)` and the G2 matrix at `(r, 0)`.
pub fn curvature_fundamental_closed(lambda: f64, r: f64) -> Result<(CurvatureMatrix, CurvatureMatrix)> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!("r = {r} not in (0, 1)")));
    }
    let e = closed_entries(lambda, r * r);
    let c = |x: f64| C64::new(x, 0.0);
    let z = Disc2Point { z1: c(r), z2: c(0.0) };
    let b = CurvatureMatrix {
        entries: Mat2::new(c(e.b11), c(e.b12), c(e.b12), c(e.b22)),
        base_point: BasePoint::Bidisc(z),
        chart: Chart::Bidisc,
        error_estimate: None,
    };
    let bb = CurvatureMatrix::g2(bergman_curvature_on_lambda(lambda, r)?, G2Point::fundamental(r));
    Ok((b, bb))
}

/// `(D g^T)^{-1} K conj(D g)^{-1}`, the curvature at `g(u)` given the curvature at `u`.
pub fn curvature_transport(k: &CurvatureMatrix, g: &AutomorphismMap) -> Result<CurvatureMatrix> {
    let u = k.g2_point()?;
    let dg = g.jacobian(&u)?.matrix;
    let inv_t = dg.transpose().try_inverse().ok_or_else(|| Error::SingularJacobian("Dg".into()))?;
    let inv_c = dg.conjugate().try_inverse().ok_or_else(|| Error::SingularJacobian("Dg".into()))?;
    Ok(CurvatureMatrix::g2(inv_t * k.entries * inv_c, g.apply(&u)?))
}

/// Jacobian `Ds = [[1, 1], [z2, z1]]` of the symmetrization map.
pub fn symmetrization_jacobian(z: &Disc2Point) -> Mat2 {
    Mat2::new(C64::new(1.0, 0.0), C64::new(1.0, 0.0), z.z2, z.z1)
}

fn check_off_royal(z: &Disc2Point) -> Result<()> {
    if (z.z1 - z.z2).norm() < crate::automorphisms::CONFLUENT {
        return Err(Error::SingularJacobian("det Ds = z1 - z2 vanishes on the royal variety".into()));
    }
    Ok(())
}

/// Pull a G2 matrix back to the bidisc at the canonical preimage: `Ds^T K conj(Ds)`.
pub fn to_bidisc(k: &CurvatureMatrix) -> Result<CurvatureMatrix> {
    let z = solve_preimage(&k.g2_point()?)?;
    check_off_royal(&z)?;
    let ds = symmetrization_jacobian(&z);
    Ok(CurvatureMatrix {
        entries: ds.transpose() * k.entries * ds.conjugate(),
        base_point: BasePoint::Bidisc(z),
        chart: Chart::Bidisc,
        error_estimate: k.error_estimate,
    })
}

/// Inverse of [`to_bidisc`].
pub fn from_bidisc(b: &CurvatureMatrix) -> Result<CurvatureMatrix> {
    let BasePoint::Bidisc(z) = b.base_point else {
        return Err(Error::Domain("expected a matrix in the bidisc chart".into()));
    };
    check_off_royal(&z)?;
    let ds = symmetrization_jacobian(&z);
    let inv_t = ds.transpose().try_inverse().ok_or_else(|| Error::SingularJacobian("Ds".into()))?;
    let inv_c = ds.conjugate().try_inverse().ok_or_else(|| Error::SingularJacobian("Ds".into()))?;
    Ok(CurvatureMatrix {
        entries: inv_t * b.entries * inv_c,
        base_point: BasePoint::G2(crate::automorphisms::symmetrize(&z)),
        chart: Chart::G2,
        error_estimate: b.error_estimate,
    })
}

/// Residuals of the two identities every homogeneous curvature satisfies at
/// `(r, 0)`: `K12 = K21` and `r (r^2 - 2) K11 = 2 K12 + r K22`, relative to `|K|`.
pub fn fundamental_identity_residual(k: &Mat2, r: f64) -> (f64, f64) {
    let scale = k.norm().max(1e-30);
    let sym = (k[(0, 1)] - k[(1, 0)]).norm() / scale;
    let lin = (k[(0, 0)] * r * (r * r - 2.0) - 2.0 * k[(0, 1)] - k[(1, 1)] * r).norm() / scale;
    (sym, lin)
}

/// `|K - Dh^T K conj(Dh)| / |K|` for `h = phi~_r`, the non-trivial stabilizer element.
pub fn stabilizer_residual(k: &Mat2, r: f64) -> Result<f64> {
    let h = AutomorphismMap::involution(C64::new(r, 0.0));
    let d = h.jacobian(&G2Point::fundamental(r))?.matrix;
    Ok((k - d.transpose() * k * d.conjugate()).norm() / k.norm().max(1e-30))
}

/// How [`det_curvature`] evaluates the determinant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetMethod {
    /// Closed forms on the fundamental set, moved to `u` by the group.
    Oracle,
    /// The published closed formula for the determinant on the fundamental
    /// set, moved to `u` the same way.
    Paper,
}

/// `det B(u) = det B(r, 0) / |det Dg(r, 0)|^2` with `u = g(r, 0)`.
pub fn det_curvature(lambda: f64, u: &G2Point, method: DetMethod) -> Result<f64> {
    let d = to_fundamental(u)?;
    let on_lambda = match method {
        DetMethod::Oracle => bergman_curvature_on_lambda(lambda, d.r)?.determinant().re,
        DetMethod::Paper => det_fundamental_published(lambda, d.r)?,
    };
    let jac = d.g.jacobian(&G2Point::fundamental(d.r))?.det;
    Ok(on_lambda / jac.norm_sqr())
}

/// Determinant of the finite-difference curvature; a coarse cross-check only.
pub fn det_curvature_numeric<K: ScalarKernel + ?Sized>(k: &K, u: &G2Point, opts: &FDOptions) -> Result<f64> {
    Ok(curvature_numeric(k, u, opts)?.det())
}

/// `B^(a)((z,0),(z,0)) = ((1 - x)^(-a) - 1) / (2x)` as a series in `x`.
fn b0_series(a: f64, n: usize) -> PowerSeries {
    PowerSeries::one_minus_x_pow(-a, n).sub(&PowerSeries::constant(1.0, n)).shift_down(1).scale(0.5)
}

fn b0(a: f64, x: f64) -> f64 {
    ((1.0 - x).powf(-a) - 1.0) / (2.0 * x)
}

/// The published formula for `det B^(lambda)` at `(r, 0)`:
/// `lambda^2 / (2 x^2 B0_l^2 (1-x)^(l+1)) [(1-x)^(l+1) B0_l B0_(2l+2) / B0_(l+1) - lambda]`
/// with `B0_a(x) = B^(a)((z,0),(z,0))` and `x = r^2`.
pub fn det_fundamental_published(lambda: f64, r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain(format!("r = {r} not in [0, 1)")));
    }
    let x = r * r;
    let l = lambda;
    if x < 0.1 {
        let n = SERIES_ORDER;
        let bl = b0_series(l, n);
        let bracket = PowerSeries::one_minus_x_pow(l + 1.0, n)
            .mul(&bl)
            .mul(&b0_series(2.0 * l + 2.0, n))
            .div(&b0_series(l + 1.0, n))
            .sub(&PowerSeries::constant(l, n))
            .shift_down(2);
        let blx = bl.eval(x);
        return Ok(l * l * bracket.eval(x) / (2.0 * blx * blx * (1.0 - x).powf(l + 1.0)));
    }
    let y = 1.0 - x;
    let bl = b0(l, x);
    let bracket = y.powf(l + 1.0) * bl * b0(2.0 * l + 2.0, x) / b0(l + 1.0, x) - l;
    Ok(l * l / (2.0 * x * x * bl * bl * y.powf(l + 1.0)) * bracket)
}

/// Which printed version of the bidisc determinant formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LemmaVariant {
    /// Numerator `B^(lambda+2)` and `|1 - conj(z1) z2|^(2 lambda + 2)`; claims to give
    /// `det B` at `s(z)`.
    AsStated,
    /// Numerator `B^(lambda+1)` and `|1 - conj(z1) z2|^(2 lambda - 4)`; claims to give
    /// `det B` at `(|phi_{z1}(z2)|, 0)`.
    Shifted,
}

/// Evaluate one printed version of the determinant formula at `z` in the bidisc.
pub fn det_curvature_lemma(lambda: f64, z: &Disc2Point, variant: LemmaVariant) -> Result<f64> {
    let l = lambda;
    let x1 = 1.0 - z.z1.norm_sqr();
    let x2 = 1.0 - z.z2.norm_sqr();
    let c = (C64::new(1.0, 0.0) - z.z1.conj() * z.z2).norm();
    let b = bergman_diagonal(l, z)?;
    let h = eval_h(l, z)?;
    let common = 2.0 * b.powi(3) * (x1 * x2).powf(l + 1.0);
    Ok(match variant {
        LemmaVariant::AsStated => l * l * bergman_diagonal(l + 2.0, z)? * h / (common * c.powf(2.0 * l + 2.0)),
        LemmaVariant::Shifted => l * l * bergman_diagonal(l + 1.0, z)? * h / (common * c.powf(2.0 * l - 4.0)),
    })
}

/// `det` of the kernel `(B^(lambda))^(nu+2) B-curvature` on the royal variety at
/// `|z|^2 = x`, as printed: `(l/2)^(2(nu+2)) (l+1)(l+2)(2l+1)/6 (1-x)^(-4[(nu+2)(l+1)+2])`.
pub fn royal_det_kernel_published(lambda: f64, nu: f64, x: f64) -> f64 {
    let l = lambda;
    (l / 2.0).powf(2.0 * (nu + 2.0)) * (l + 1.0) * (l + 2.0) * (2.0 * l + 1.0) / 6.0
        * (1.0 - x).powf(-4.0 * ((nu + 2.0) * (l + 1.0) + 2.0))
}

/// The same quantity from the diagonal value of `B^(lambda)` and the oracle
/// determinant: `(l/2)^(2(nu+2)) (l+1)^2 (2l+1)/6 (1-x)^(-4(nu+2)(l+1)-6)`.
pub fn royal_det_kernel_oracle(lambda: f64, nu: f64, x: f64) -> f64 {
    let l = lambda;
    let det0 = bergman_curvature_on_lambda(l, 0.0).map(|m| m.determinant().re).unwrap_or(f64::NAN);
    (l / 2.0).powf(2.0 * (nu + 2.0)) * det0 * (1.0 - x).powf(-4.0 * (nu + 2.0) * (l + 1.0) - 6.0)
}
