//! Seeded random points and automorphisms.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::automorphisms::{symmetrize, AutomorphismMap, Disc2Point, G2Point, MoebiusMap};
use crate::C64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Area-uniform point of the disc of the given radius.
pub fn random_disc<R: Rng>(rng: &mut R, radius: f64) -> C64 {
    let r = radius * rng.gen::<f64>().sqrt();
    C64::from_polar(r, 2.0 * PI * rng.gen::<f64>())
}

pub fn random_bidisc<R: Rng>(rng: &mut R, radius: f64) -> Disc2Point {
    Disc2Point { z1: random_disc(rng, radius), z2: random_disc(rng, radius) }
}

/// Image under the symmetrization map of a random bidisc point.
pub fn random_g2<R: Rng>(rng: &mut R, radius: f64) -> G2Point {
    symmetrize(&random_bidisc(rng, radius))
}

/// `phi_{t, alpha}` with `t` uniform on the circle and `|alpha| <= alpha_radius`.
pub fn random_automorphism<R: Rng>(rng: &mut R, alpha_radius: f64) -> AutomorphismMap {
    let t = C64::from_polar(1.0, 2.0 * PI * rng.gen::<f64>());
    AutomorphismMap::new(MoebiusMap { t, alpha: random_disc(rng, alpha_radius) })
}
