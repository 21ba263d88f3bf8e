use std::f64::consts::PI;

use g2kernels::automorphisms::{
    symmetrize, to_fundamental, AutomorphismMap, Disc2Point, G2Point, MoebiusMap,
};
use g2kernels::curvature::{
    bergman_curvature_on_lambda, curvature_polarized, curvature_transport, from_bidisc, stabilizer_residual,
    to_bidisc,
};
use g2kernels::homogeneity::{factorization_test, quasi_invariance_residual, reconstruct_from_fundamental, MultiplierSpec};
use g2kernels::invariants::{classify, cross_family_quadratic, Equivalence, ModuleSpec};
use g2kernels::kernels::{
    bergman_diagonal, eval_bergman, eval_bergman_bidisc, eval_bergman_raw, eval_bergman_series, eval_h, eval_scalar,
    EvalOptions, KernelSpec,
};
use g2kernels::psd::{gram, psd_check, SampleSet, Scheme};
use g2kernels::C64;
use proptest::prelude::*;

const ONE: C64 = C64::new(1.0, 0.0);

fn disc(radius: f64) -> impl Strategy<Value = C64> {
    (0.0..radius, 0.0..2.0 * PI).prop_map(|(m, a)| C64::from_polar(m, a))
}

fn bidisc(radius: f64) -> impl Strategy<Value = Disc2Point> {
    (disc(radius), disc(radius)).prop_map(|(z1, z2)| Disc2Point { z1, z2 })
}

fn g2(radius: f64) -> impl Strategy<Value = G2Point> {
    bidisc(radius).prop_map(|z| symmetrize(&z))
}

fn moebius() -> impl Strategy<Value = MoebiusMap> {
    (0.0..2.0 * PI, disc(0.7)).prop_map(|(a, alpha)| MoebiusMap { t: C64::from_polar(1.0, a), alpha })
}

fn automorphism() -> impl Strategy<Value = AutomorphismMap> {
    moebius().prop_map(AutomorphismMap::new)
}

fn lambda() -> impl Strategy<Value = f64> {
    0.3..4.0f64
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

fn close_points(a: &G2Point, b: &G2Point, tol: f64) -> bool {
    (a.u1 - b.u1).norm() <= tol && (a.u2 - b.u2).norm() <= tol
}

fn scalar_families() -> impl Strategy<Value = KernelSpec> {
    (lambda(), 0.5..3.0f64, 0usize..4).prop_map(|(l, nu, k)| match k {
        0 => KernelSpec::bergman(l),
        1 => KernelSpec::power(KernelSpec::bergman(l), nu),
        2 => KernelSpec::SymmetricC { lambda: l.ceil() },
        _ => KernelSpec::DetCurvature { lambda: l, nu: nu - 0.5 },
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernels_are_hermitian(spec in scalar_families(), u in g2(0.85), v in g2(0.85)) {
        let o = EvalOptions::default();
        let a = eval_scalar(&spec, &u, &v, &o).unwrap();
        let b = eval_scalar(&spec, &v, &u, &o).unwrap();
        prop_assert!(rel(a, b.conj()) <= 1e-10, "{spec}: {a} vs {b}");
    }

    #[test]
    fn lambda_one_product_form(z in bidisc(0.95), w in bidisc(0.95)) {
        let f = |a: C64, b: C64| ONE - a * b.conj();
        let v = eval_bergman(1.0, &symmetrize(&z), &symmetrize(&w), &EvalOptions::default()).unwrap();
        let p = 2.0 * v * f(z.z1, w.z1) * f(z.z1, w.z2) * f(z.z2, w.z1) * f(z.z2, w.z2);
        prop_assert!((p - ONE).norm() <= 1e-10, "{p}");
    }

    #[test]
    fn raw_and_series_agree_in_the_overlap(l in lambda(), z in bidisc(0.8), w in bidisc(0.8)) {
        let x = (z.z1 - z.z2) * (w.z1 - w.z2).conj();
        let y = (ONE - z.z1 * w.z1.conj()) * (ONE - z.z2 * w.z2.conj());
        prop_assume!((x / y).norm() < 0.3 && x.norm() > 1e-2);
        let o = EvalOptions { series_threshold: 1.0, ..EvalOptions::default() };
        let raw = eval_bergman_raw(l, &z, &w, &EvalOptions::default()).unwrap();
        let series = eval_bergman_series(l, &z, &w, &o).unwrap();
        prop_assert!(rel(raw, series) <= 1e-10, "{raw} vs {series}");
    }

    #[test]
    fn bidisc_evaluation_is_symmetric_in_the_roots(l in lambda(), z in bidisc(0.9), w in bidisc(0.9)) {
        let o = EvalOptions::default();
        let a = eval_bergman_bidisc(l, &z, &w, &o).unwrap();
        let b = eval_bergman_bidisc(l, &z.swapped(), &w, &o).unwrap();
        prop_assert!(rel(a, b) <= 1e-10);
    }

    #[test]
    fn moebius_composition_and_inverse(a in moebius(), b in moebius(), z in disc(0.95)) {
        let ab = a.compose(&b);
        prop_assert!((ab.eval(z) - a.eval(b.eval(z))).norm() <= 1e-12);
        prop_assert!((a.inverse().eval(a.eval(z)) - z).norm() <= 1e-10);
        let chain = ab.derivative_at(z) - a.derivative_at(b.eval(z)) * b.derivative_at(z);
        prop_assert!(chain.norm() <= 1e-10 * ab.derivative_at(z).norm());
    }

    #[test]
    fn automorphisms_act_through_the_preimage(g in automorphism(), h in automorphism(), z in bidisc(0.9)) {
        let u = symmetrize(&z);
        prop_assert!(close_points(&g.apply(&u).unwrap(), &g.apply_preimage(&z), 1e-12));
        let lhs = g.compose(&h).apply(&u).unwrap();
        let rhs = g.apply(&h.apply(&u).unwrap()).unwrap();
        prop_assert!(close_points(&lhs, &rhs, 1e-10));
        prop_assert!(close_points(&g.inverse().apply(&g.apply(&u).unwrap()).unwrap(), &u, 1e-9));
    }

    #[test]
    fn fundamental_decomposition_round_trip(u in g2(0.95)) {
        let d = to_fundamental(&u).unwrap();
        prop_assert!((0.0..1.0).contains(&d.r));
        let back = d.g.apply(&G2Point::fundamental(d.r)).unwrap();
        prop_assert!(close_points(&back, &u, 1e-9), "{back:?} vs {u:?}");
    }

    #[test]
    fn cocycle_identity(g1 in automorphism(), g2m in automorphism(), u in g2(0.9)) {
        let lhs = g1.compose(&g2m).cocycle(&u).unwrap().value;
        let rhs = g1.cocycle(&g2m.apply(&u).unwrap()).unwrap().value * g2m.cocycle(&u).unwrap().value;
        prop_assert!(rel(lhs, rhs) <= 1e-10);
    }

    #[test]
    fn log_cocycle_exponentiates_to_the_cocycle(g in automorphism(), u in g2(0.9)) {
        let (log_hat, log_det) = g.log_cocycle(&u).unwrap();
        let c = g.cocycle(&u).unwrap();
        prop_assert!(rel(log_hat.exp(), c.value) <= 1e-12);
        prop_assert!(rel(log_det.exp(), g.jacobian(&u).unwrap().matrix.determinant()) <= 1e-12);
    }

    #[test]
    fn families_are_quasi_invariant(spec in scalar_families(), g in automorphism(), u in g2(0.8), v in g2(0.8)) {
        let mult = MultiplierSpec::for_kernel(&spec).unwrap();
        let rep = quasi_invariance_residual(&spec, &mult, &g, &[(u, v)]).unwrap();
        prop_assert!(rep.max_relative_residual <= 1e-8, "{spec}: {}", rep.max_relative_residual);
    }

    #[test]
    fn bergman_ratio_factors(l in lambda(), g in automorphism(), u in g2(0.8), v in g2(0.8)) {
        let k = KernelSpec::bergman(l);
        let rep = factorization_test(&k, &g, &[(u, v)], None).unwrap();
        prop_assert!(rep.max_relative_residual <= 1e-9);
    }

    #[test]
    fn diagonal_reconstructed_from_the_fundamental_set(l in lambda(), u in g2(0.9)) {
        let o = EvalOptions::default();
        let on_lambda = |r: f64| {
            let p = G2Point::fundamental(r);
            eval_bergman(l, &p, &p, &o).map(|v| v.re)
        };
        let value = reconstruct_from_fundamental(on_lambda, &MultiplierSpec::bergman(l), &u).unwrap();
        let direct = eval_bergman(l, &u, &u, &o).unwrap().re;
        prop_assert!((value - direct).abs() <= 1e-9 * direct, "{value} vs {direct}");
    }

    #[test]
    fn curvature_on_lambda_is_stabilizer_invariant(l in lambda(), r in 0.0..0.97f64) {
        let k = bergman_curvature_on_lambda(l, r).unwrap();
        prop_assert!(stabilizer_residual(&k, r).unwrap() <= 1e-10);
    }

    #[test]
    fn curvature_transports_along_the_group(l in lambda(), g in automorphism(), u in g2(0.8)) {
        let k = curvature_polarized(l, &u).unwrap();
        let moved = curvature_transport(&k, &g).unwrap();
        let direct = curvature_polarized(l, &g.apply(&u).unwrap()).unwrap();
        let gap = (moved.entries - direct.entries).norm() / direct.entries.norm();
        prop_assert!(gap <= 1e-9, "{gap}");
    }

    #[test]
    fn bidisc_chart_round_trip(l in lambda(), z in bidisc(0.85)) {
        prop_assume!((z.z1 - z.z2).norm() > 1e-2);
        let k = curvature_polarized(l, &symmetrize(&z)).unwrap();
        let back = from_bidisc(&to_bidisc(&k).unwrap()).unwrap();
        prop_assert!((back.entries - k.entries).norm() <= 1e-9 * k.entries.norm());
    }

    #[test]
    fn square_is_the_second_power(l in lambda(), u in g2(0.85), v in g2(0.85)) {
        let o = EvalOptions::default();
        let b = eval_bergman(l, &u, &v, &o).unwrap();
        let sq = eval_scalar(&KernelSpec::power(KernelSpec::bergman(l), 2.0), &u, &v, &o).unwrap();
        prop_assert!(rel(sq, b * b) <= 1e-10);
    }

    #[test]
    fn h_at_lambda_one_is_the_product(z in bidisc(0.97)) {
        let closed = 0.5 / ((1.0 - z.z1.norm_sqr()) * (1.0 - z.z2.norm_sqr()) * (ONE - z.z1.conj() * z.z2).norm_sqr());
        let h = eval_h(1.0, &z).unwrap();
        prop_assert!((h - closed).abs() <= 1e-12 * closed, "{h} vs {closed}");
    }

    #[test]
    fn bergman_diagonal_is_positive(l in lambda(), z in bidisc(0.95)) {
        prop_assert!(bergman_diagonal(l, &z).unwrap() > 0.0);
    }

    #[test]
    fn quadratic_has_no_positive_root(nu in 0.0..50.0f64) {
        prop_assert!(!cross_family_quadratic(nu).has_positive_root);
    }

    #[test]
    fn classification_is_reflexive_and_symmetric(
        a in (0.2..4.0f64, 0.0..3.0f64, any::<bool>()),
        b in (0.2..4.0f64, 0.0..3.0f64, any::<bool>()),
    ) {
        let make = |(l, nu, det): (f64, f64, bool)| {
            if det { ModuleSpec::det_curvature(l, nu).unwrap() } else { ModuleSpec::weighted_power(l, nu + 0.1).unwrap() }
        };
        let (ma, mb) = (make(a), make(b));
        prop_assert_eq!(classify(&ma, &ma).verdict, Equivalence::Equivalent);
        prop_assert_eq!(classify(&ma, &mb).verdict, classify(&mb, &ma).verdict);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn psd_verdict_ignores_relabeling(l in 0.5..3.0f64, seed in any::<u64>(), shift in 1usize..9) {
        let s = SampleSet::random(10, seed).unwrap();
        let mut pts = s.points.clone();
        pts.rotate_left(shift);
        pts.reverse();
        let t = SampleSet::new(pts, seed, Scheme::Random).unwrap();
        let o = EvalOptions::default();
        let k = KernelSpec::bergman(l);
        let a = psd_check(&gram(&k, &s, &o).unwrap(), 1e-9).unwrap();
        let b = psd_check(&gram(&k, &t, &o).unwrap(), 1e-9).unwrap();
        prop_assert_eq!(a.verdict, b.verdict);
        prop_assert!((a.max_eig - b.max_eig).abs() <= 1e-10 * a.max_eig);
        prop_assert!((a.min_eig - b.min_eig).abs() <= 1e-10 * a.max_eig);
    }
}
