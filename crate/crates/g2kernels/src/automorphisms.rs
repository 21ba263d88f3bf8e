//! Disc automorphisms, the symmetrization map and the automorphism group of G2.

use std::f64::consts::PI;

use crate::{Error, Mat2, Result, C64};

const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Roots closer than this are treated as a double root.
pub const CONFLUENT: f64 = 1e-9;

/// A point of the open unit disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscPoint(C64);

impl DiscPoint {
    pub fn new(z: C64) -> Result<Self> {
        check_disc(z)?;
        Ok(Self(z))
    }

    pub fn value(self) -> C64 {
        self.0
    }
}

fn check_disc(z: C64) -> Result<()> {
    let m = z.norm();
    if m < 1.0 && m.is_finite() {
        Ok(())
    } else {
        Err(Error::OutsideDisc(m))
    }
}

/// A point of the bidisc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc2Point {
    pub z1: C64,
    pub z2: C64,
}

impl Disc2Point {
    pub fn new(z1: C64, z2: C64) -> Result<Self> {
        check_disc(z1)?;
        check_disc(z2)?;
        Ok(Self { z1, z2 })
    }

    pub fn swapped(self) -> Self {
        Self { z1: self.z2, z2: self.z1 }
    }
}

/// A point `(u1, u2)` of the symmetrized bidisc.
///
/// The fields are public so that finite-difference stencils can build
/// nearby points cheaply; anything that needs membership goes through
/// [`solve_preimage`], which rejects points outside G2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G2Point {
    pub u1: C64,
    pub u2: C64,
}

impl G2Point {
    /// Checked constructor.
    pub fn new(u1: C64, u2: C64) -> Result<Self> {
        let p = Self { u1, u2 };
        solve_preimage(&p)?;
        Ok(p)
    }

    pub const fn raw(u1: C64, u2: C64) -> Self {
        Self { u1, u2 }
    }

    pub fn real(u1: f64, u2: f64) -> Self {
        Self::raw(C64::new(u1, 0.0), C64::new(u2, 0.0))
    }

    /// The point `(r, 0)` of the fundamental set.
    pub fn fundamental(r: f64) -> Self {
        Self::real(r, 0.0)
    }

    /// The royal point `(2z, z^2)`.
    pub fn royal(z: C64) -> Self {
        Self::raw(2.0 * z, z * z)
    }

    pub fn is_in_g2(&self) -> bool {
        solve_preimage(self).is_ok()
    }

    /// True when the point is exactly of the form `(r, 0)` with `r >= 0`.
    pub fn is_fundamental(&self) -> bool {
        self.u2 == ZERO && self.u1.im == 0.0 && self.u1.re >= 0.0
    }

    pub fn dist(&self, other: &G2Point) -> f64 {
        ((self.u1 - other.u1).norm_sqr() + (self.u2 - other.u2).norm_sqr()).sqrt()
    }
}

/// `s(z1, z2) = (z1 + z2, z1 z2)`.
pub fn symmetrize(z: &Disc2Point) -> G2Point {
    G2Point::raw(z.z1 + z.z2, z.z1 * z.z2)
}

/// Roots of `t^2 - u1 t + u2`, ordered lexicographically by (re, im),
/// larger first. Fails unless both roots lie in the open disc.
pub fn solve_preimage(u: &G2Point) -> Result<Disc2Point> {
    solve_preimage_with_margin(u, 0.0)
}

/// As [`solve_preimage`], but requires `|root| < 1 - margin`.
pub fn solve_preimage_with_margin(u: &G2Point, margin: f64) -> Result<Disc2Point> {
    let (a, b) = quadratic_roots(u.u1, u.u2);
    let m = a.norm().max(b.norm());
    if m.is_nan() || m >= 1.0 - margin {
        return Err(Error::NotInG2(m));
    }
    let (z1, z2) = if lex_greater(b, a) { (b, a) } else { (a, b) };
    Ok(Disc2Point { z1, z2 })
}

fn lex_greater(a: C64, b: C64) -> bool {
    a.re > b.re || (a.re == b.re && a.im > b.im)
}

fn quadratic_roots(u1: C64, u2: C64) -> (C64, C64) {
    let mut s = (u1 * u1 - 4.0 * u2).sqrt();
    // pick the sign that avoids cancellation in u1 + s
    if (u1.conj() * s).re < 0.0 {
        s = -s;
    }
    let a = 0.5 * (u1 + s);
    if a == ZERO {
        return (ZERO, ZERO);
    }
    (a, u2 / a)
}

/// `phi_{t,alpha}(z) = t (alpha - z) / (1 - conj(alpha) z)` with `|t| = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusMap {
    pub t: C64,
    pub alpha: C64,
}

impl MoebiusMap {
    pub fn new(t: C64, alpha: C64) -> Result<Self> {
        if (t.norm() - 1.0).abs() > 1e-14 {
            return Err(Error::Domain(format!("|t| = {} is not 1", t.norm())));
        }
        check_disc(alpha)?;
        Ok(Self { t, alpha })
    }

    /// The involution `phi_alpha` exchanging 0 and alpha.
    pub fn involution(alpha: C64) -> Self {
        Self { t: ONE, alpha }
    }

    /// The rotation `z -> e^{i theta} z`.
    pub fn rotation(theta: f64) -> Self {
        Self { t: -C64::from_polar(1.0, theta), alpha: ZERO }
    }

    pub fn identity() -> Self {
        Self { t: -ONE, alpha: ZERO }
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.t * (self.alpha - z) / (ONE - self.alpha.conj() * z)
    }

    pub fn derivative_at(&self, z: C64) -> C64 {
        let d = ONE - self.alpha.conj() * z;
        self.t * (self.alpha.norm_sqr() - 1.0) / (d * d)
    }

    /// `(phi(a) - phi(b)) / (a - b)` in closed form; equals `phi'(a)` when `a = b`.
    pub fn divided_difference(&self, a: C64, b: C64) -> C64 {
        let ac = self.alpha.conj();
        self.t * (self.alpha.norm_sqr() - 1.0) / ((ONE - ac * a) * (ONE - ac * b))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MoebiusMap) -> MoebiusMap {
        let alpha = other.inverse().eval(self.alpha);
        let h0 = self.derivative_at(other.eval(ZERO)) * other.derivative_at(ZERO);
        let t = h0 / (alpha.norm_sqr() - 1.0);
        MoebiusMap { t: t / t.norm(), alpha }
    }

    pub fn inverse(&self) -> MoebiusMap {
        MoebiusMap { t: self.t.conj(), alpha: self.t * self.alpha }
    }
}

pub fn mobius_apply(phi: &MoebiusMap, z: C64) -> Result<C64> {
    check_disc(z)?;
    Ok(phi.eval(z))
}

pub fn mobius_derivative(phi: &MoebiusMap, z: C64) -> Result<C64> {
    check_disc(z)?;
    Ok(phi.derivative_at(z))
}

/// The automorphism `s(z1, z2) -> s(phi(z1), phi(z2))` of G2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutomorphismMap {
    pub base: MoebiusMap,
}

/// Value of the cocycle `phi'(z1) phi'(z2)` together with `det Dphi~`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CocycleValue {
    pub value: C64,
    pub det_jacobian: C64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian {
    pub matrix: Mat2,
    pub det: C64,
}

impl AutomorphismMap {
    pub fn new(base: MoebiusMap) -> Self {
        Self { base }
    }

    pub fn identity() -> Self {
        Self::new(MoebiusMap::identity())
    }

    pub fn involution(alpha: C64) -> Self {
        Self::new(MoebiusMap::involution(alpha))
    }

    pub fn rotation(theta: f64) -> Self {
        Self::new(MoebiusMap::rotation(theta))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AutomorphismMap) -> Self {
        Self::new(self.base.compose(&other.base))
    }

    pub fn inverse(&self) -> Self {
        Self::new(self.base.inverse())
    }

    pub fn apply(&self, u: &G2Point) -> Result<G2Point> {
        let z = solve_preimage(u)?;
        Ok(self.apply_preimage(&z))
    }

    pub fn apply_preimage(&self, z: &Disc2Point) -> G2Point {
        symmetrize(&Disc2Point { z1: self.base.eval(z.z1), z2: self.base.eval(z.z2) })
    }

    /// Jacobian matrix `d(phi~)_i / d u_j` at `u`.
    pub fn jacobian(&self, u: &G2Point) -> Result<Jacobian> {
        let z = solve_preimage(u)?;
        let (t, a) = (self.base.t, self.base.alpha);
        let ac = a.conj();
        let d = ONE - ac * u.u1 + ac * ac * u.u2;
        let n1 = t * (2.0 * a - (1.0 + a.norm_sqr()) * u.u1 + 2.0 * ac * u.u2);
        let n2 = t * t * (a * a - a * u.u1 + u.u2);
        let (d_1, d_2) = (-ac, ac * ac);
        let (n1_1, n1_2) = (-t * (1.0 + a.norm_sqr()), 2.0 * t * ac);
        let (n2_1, n2_2) = (-t * t * a, t * t);
        let d2 = d * d;
        let matrix = Mat2::new(
            (n1_1 * d - n1 * d_1) / d2,
            (n1_2 * d - n1 * d_2) / d2,
            (n2_1 * d - n2 * d_1) / d2,
            (n2_2 * d - n2 * d_2) / d2,
        );
        Ok(Jacobian { matrix, det: self.det_jacobian_preimage(&z) })
    }

    /// Chain-rule determinant `[(phi(z2) - phi(z1)) / (z2 - z1)] phi'(z1) phi'(z2)`.
    pub fn det_jacobian_preimage(&self, z: &Disc2Point) -> C64 {
        self.base.divided_difference(z.z1, z.z2) * self.cocycle_preimage(z)
    }

    pub fn cocycle_preimage(&self, z: &Disc2Point) -> C64 {
        self.base.derivative_at(z.z1) * self.base.derivative_at(z.z2)
    }

    pub fn cocycle(&self, u: &G2Point) -> Result<CocycleValue> {
        let z = solve_preimage(u)?;
        Ok(CocycleValue { value: self.cocycle_preimage(&z), det_jacobian: self.det_jacobian_preimage(&z) })
    }

    /// A holomorphic logarithm of the cocycle and of the Jacobian determinant.
    ///
    /// Both are continued from the identity: `1 - s conj(alpha) z` stays in
    /// the right half plane for `s in [0, 1]`, so principal logs of the two
    /// factors are continuous in the group parameter and in the point.
    pub fn log_cocycle(&self, u: &G2Point) -> Result<(C64, C64)> {
        let z = solve_preimage(u)?;
        let ac = self.base.alpha.conj();
        let l = (ONE - ac * z.z1).ln() + (ONE - ac * z.z2).ln();
        let arg_t = C64::new(0.0, self.base.t.arg());
        let m = (1.0 - self.base.alpha.norm_sqr()).ln();
        let log_hat = 2.0 * arg_t + 2.0 * m - 2.0 * l;
        let log_det = C64::new(0.0, PI) + 3.0 * arg_t + 3.0 * m - 3.0 * l;
        Ok((log_hat, log_det))
    }
}

pub fn aut_apply(g: &AutomorphismMap, u: &G2Point) -> Result<G2Point> {
    g.apply(u)
}

pub fn aut_jacobian(g: &AutomorphismMap, u: &G2Point) -> Result<Jacobian> {
    g.jacobian(u)
}

pub fn cocycle_j(g: &AutomorphismMap, u: &G2Point) -> Result<CocycleValue> {
    g.cocycle(u)
}

/// Stabilizer of `(r, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Stabilizer {
    /// `{id, phi~_r}` for `r > 0`.
    Finite(Vec<AutomorphismMap>),
    /// All rotations `z -> e^{i theta} z`, for `r = 0`.
    Rotations,
}

impl Stabilizer {
    /// Elements of the stabilizer; rotations are sampled at `n` equally spaced angles.
    pub fn sample(&self, n: usize) -> Vec<AutomorphismMap> {
        match self {
            Stabilizer::Finite(v) => v.clone(),
            Stabilizer::Rotations => {
                (0..n).map(|k| AutomorphismMap::rotation(2.0 * PI * k as f64 / n as f64)).collect()
            }
        }
    }
}

pub fn stabilizer(r: f64) -> Result<Stabilizer> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain(format!("r = {r} not in [0, 1)")));
    }
    if r == 0.0 {
        Ok(Stabilizer::Rotations)
    } else {
        Ok(Stabilizer::Finite(vec![
            AutomorphismMap::identity(),
            AutomorphismMap::involution(C64::new(r, 0.0)),
        ]))
    }
}

/// `u = g(r, 0)` with `r = |phi_{z1}(z2)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalDecomposition {
    pub r: f64,
    pub theta: f64,
    pub g: AutomorphismMap,
    pub preimage: Disc2Point,
}

pub fn to_fundamental(u: &G2Point) -> Result<FundamentalDecomposition> {
    let z = solve_preimage(u)?;
    if u.is_fundamental() {
        return Ok(FundamentalDecomposition { r: u.u1.re, theta: 0.0, g: AutomorphismMap::identity(), preimage: z });
    }
    Ok(decompose_ordered(z))
}

/// Decomposition built from the opposite root ordering; it differs from
/// [`to_fundamental`] by an element of the stabilizer of `(r, 0)`.
pub fn to_fundamental_swapped(u: &G2Point) -> Result<FundamentalDecomposition> {
    let z = solve_preimage(u)?;
    Ok(decompose_ordered(z.swapped()))
}

fn decompose_ordered(z: Disc2Point) -> FundamentalDecomposition {
    if (z.z1 - z.z2).norm() < CONFLUENT {
        // royal variety: the roots differ only by rounding
        let m = 0.5 * (z.z1 + z.z2);
        return FundamentalDecomposition { r: 0.0, theta: 0.0, g: AutomorphismMap::involution(m), preimage: z };
    }
    let w = MoebiusMap::involution(z.z1).eval(z.z2);
    let r = w.norm();
    let theta = if r == 0.0 { 0.0 } else { w.arg().rem_euclid(2.0 * PI) };
    let g = AutomorphismMap::involution(z.z1).compose(&AutomorphismMap::rotation(theta));
    FundamentalDecomposition { r, theta, g, preimage: z }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn mobius_examples() {
        let phi0 = MoebiusMap::involution(c(0.0, 0.0));
        assert!(close(mobius_apply(&phi0, c(0.5, 0.0)).unwrap(), c(-0.5, 0.0), 1e-15));
        let phi = MoebiusMap::involution(c(0.5, 0.0));
        assert!(close(phi.eval(c(0.5, 0.0)), c(0.0, 0.0), 1e-15));
        assert!(close(phi.eval(c(0.0, 0.0)), c(0.5, 0.0), 1e-15));
        assert!(mobius_apply(&phi, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn derivative_matches_central_difference() {
        let phi = MoebiusMap::involution(c(0.5, 0.0));
        let fd = |z: C64| {
            let h = 1e-5;
            (phi.eval(z + h) - phi.eval(z - h)) / (2.0 * h)
        };
        // values frozen from the difference quotient
        assert_relative_eq!(fd(c(0.0, 0.0)).re, -0.75, epsilon = 1e-9);
        assert_relative_eq!(fd(c(0.5, 0.0)).re, -4.0 / 3.0, epsilon = 1e-9);
        assert!(close(mobius_derivative(&phi, c(0.0, 0.0)).unwrap(), c(-0.75, 0.0), 1e-15));
        assert!(close(phi.derivative_at(c(0.5, 0.0)), c(-4.0 / 3.0, 0.0), 1e-15));
        assert!(close(phi0_derivative(c(0.3, 0.4)), c(-1.0, 0.0), 1e-15));
    }

    fn phi0_derivative(z: C64) -> C64 {
        MoebiusMap::involution(c(0.0, 0.0)).derivative_at(z)
    }

    #[test]
    fn symmetrize_and_preimage() {
        let u = symmetrize(&Disc2Point::new(c(0.3, 0.0), c(0.2, 0.0)).unwrap());
        assert!(close(u.u1, c(0.5, 0.0), 1e-15) && close(u.u2, c(0.06, 0.0), 1e-15));
        let r = symmetrize(&Disc2Point::new(c(0.4, 0.0), c(0.4, 0.0)).unwrap());
        assert!(close(r.u1, c(0.8, 0.0), 1e-15) && close(r.u2, c(0.16, 0.0), 1e-15));

        let z = solve_preimage(&G2Point::real(0.5, 0.06)).unwrap();
        assert!(close(z.z1, c(0.3, 0.0), 1e-14) && close(z.z2, c(0.2, 0.0), 1e-14));
        let z = solve_preimage(&G2Point::real(1.0, 0.25)).unwrap();
        assert!(close(z.z1, c(0.5, 0.0), 1e-7) && close(z.z2, c(0.5, 0.0), 1e-7));
        assert!(matches!(solve_preimage(&G2Point::real(2.0, 0.0)), Err(Error::NotInG2(_))));
    }

    #[test]
    fn aut_apply_examples() {
        let u = G2Point::real(0.8, 0.15);
        let v = AutomorphismMap::identity().apply(&u).unwrap();
        assert!(close(v.u1, u.u1, 1e-15) && close(v.u2, u.u2, 1e-15));

        let fixed = AutomorphismMap::involution(c(0.5, 0.0)).apply(&G2Point::real(0.5, 0.0)).unwrap();
        assert!(close(fixed.u1, c(0.5, 0.0), 1e-15) && fixed.u2.norm() < 1e-15);

        let neg = AutomorphismMap::involution(c(0.0, 0.0)).apply(&G2Point::real(0.5, 0.06)).unwrap();
        assert!(close(neg.u1, c(-0.5, 0.0), 1e-15) && close(neg.u2, c(0.06, 0.0), 1e-15));
    }

    #[test]
    fn jacobian_on_fundamental_set() {
        let j = AutomorphismMap::involution(c(0.5, 0.0)).jacobian(&G2Point::real(0.5, 0.0)).unwrap();
        let expect = [[-4.0 / 3.0, 7.0 / 6.0], [-2.0 / 3.0, 4.0 / 3.0]];
        for i in 0..2 {
            for k in 0..2 {
                assert!(close(j.matrix[(i, k)], c(expect[i][k], 0.0), 1e-14));
            }
        }
        assert!(close(j.det, c(-1.0, 0.0), 1e-14));
        assert!(close(j.matrix.determinant(), j.det, 1e-14));

        let id = AutomorphismMap::identity().jacobian(&G2Point::real(0.3, 0.02)).unwrap();
        assert!((id.matrix - Mat2::identity()).norm() < 1e-15);
        assert!(close(id.det, c(1.0, 0.0), 1e-15));
    }

    #[test]
    fn jacobian_matches_difference_quotients() {
        let g = AutomorphismMap::new(MoebiusMap::new(C64::from_polar(1.0, 0.7), c(0.2, -0.3)).unwrap());
        let u = G2Point::raw(c(0.3, 0.1), c(0.05, -0.02));
        let j = g.jacobian(&u).unwrap();
        let h = 1e-6;
        for col in 0..2 {
            let mut up = u;
            let mut dn = u;
            if col == 0 {
                up.u1 += h;
                dn.u1 -= h;
            } else {
                up.u2 += h;
                dn.u2 -= h;
            }
            let (a, b) = (g.apply(&up).unwrap(), g.apply(&dn).unwrap());
            assert!(close(j.matrix[(0, col)], (a.u1 - b.u1) / (2.0 * h), 1e-8));
            assert!(close(j.matrix[(1, col)], (a.u2 - b.u2) / (2.0 * h), 1e-8));
        }
    }

    #[test]
    fn det_at_involution_image() {
        let (z1, z2) = (c(0.3, 0.2), c(-0.1, 0.4));
        let w = MoebiusMap::involution(z1).eval(z2);
        let det = AutomorphismMap::involution(z1).jacobian(&G2Point::raw(w, c(0.0, 0.0))).unwrap().det;
        let expect = -(ONE - z1.conj() * z2).powi(3);
        assert!(close(det, expect, 1e-14));
    }

    #[test]
    fn cocycle_examples() {
        let u = G2Point::raw(c(0.2, 0.1), c(-0.05, 0.02));
        assert!(close(AutomorphismMap::identity().cocycle(&u).unwrap().value, ONE, 1e-15));
        let t = C64::from_polar(1.0, 0.9);
        let rot = AutomorphismMap::new(MoebiusMap { t: -t, alpha: c(0.0, 0.0) });
        assert!(close(rot.cocycle(&u).unwrap().value, t * t, 1e-15));
        let v = AutomorphismMap::involution(c(0.5, 0.0)).cocycle(&G2Point::real(0.5, 0.0)).unwrap();
        assert!(close(v.value, ONE, 1e-14));
    }

    #[test]
    fn log_cocycle_exponentiates() {
        let g = AutomorphismMap::new(MoebiusMap::new(C64::from_polar(1.0, -2.1), c(0.4, 0.35)).unwrap());
        let u = G2Point::raw(c(0.1, -0.6), c(-0.2, 0.1));
        let cv = g.cocycle(&u).unwrap();
        let (lh, ld) = g.log_cocycle(&u).unwrap();
        assert!(close(lh.exp(), cv.value, 1e-13));
        assert!(close(ld.exp(), cv.det_jacobian, 1e-13));
    }

    #[test]
    fn stabilizer_examples() {
        let p = G2Point::real(0.5, 0.0);
        let Stabilizer::Finite(els) = stabilizer(0.5).unwrap() else { panic!() };
        assert_eq!(els.len(), 2);
        for g in &els {
            let q = g.apply(&p).unwrap();
            assert!(q.dist(&p) < 1e-14);
        }
        for g in stabilizer(0.0).unwrap().sample(7) {
            assert!(g.apply(&G2Point::real(0.0, 0.0)).unwrap().dist(&G2Point::real(0.0, 0.0)) < 1e-15);
        }
        let moved = AutomorphismMap::rotation(0.3).apply(&p).unwrap();
        assert!(moved.dist(&p) > 1e-2);
        assert!(stabilizer(1.0).is_err());
    }

    #[test]
    fn fundamental_examples() {
        let d = to_fundamental(&G2Point::real(0.5, 0.06)).unwrap();
        assert_relative_eq!(d.r, 0.1 / 0.94, epsilon = 1e-15);
        assert_eq!(d.theta, 0.0);
        assert!(d.g.apply(&G2Point::fundamental(d.r)).unwrap().dist(&G2Point::real(0.5, 0.06)) < 1e-12);

        let z = c(0.3, -0.2);
        let royal = G2Point::royal(z);
        let d = to_fundamental(&royal).unwrap();
        assert!(d.r < 1e-7);
        assert_eq!(d.theta, 0.0);
        assert!(d.g.apply(&G2Point::real(0.0, 0.0)).unwrap().dist(&royal) < 1e-7);

        let d = to_fundamental(&G2Point::fundamental(0.4)).unwrap();
        assert_eq!(d.r, 0.4);
        assert_eq!(d.g, AutomorphismMap::identity());
    }

    #[test]
    fn swapped_decomposition_differs_by_stabilizer() {
        let u = G2Point::raw(c(0.3, 0.4), c(0.1, -0.05));
        let a = to_fundamental(&u).unwrap();
        let b = to_fundamental_swapped(&u).unwrap();
        assert_relative_eq!(a.r, b.r, epsilon = 1e-14);
        let p = G2Point::fundamental(a.r);
        assert!(b.g.apply(&p).unwrap().dist(&u) < 1e-12);
        let h = a.g.inverse().compose(&b.g);
        assert!(h.apply(&p).unwrap().dist(&p) < 1e-12);
    }
}
