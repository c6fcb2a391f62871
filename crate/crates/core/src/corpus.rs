//! Seeded random corpus of maps `h = exp(p)`, `g = exp(q)`.
//!
//! `p` and `q` are degree-4 polynomials with coefficients in the disk of
//! radius 0.3, so `h` and `g` never vanish. Each draw is rescaled,
//! `p(z) -> p(t z)` with `t` the radius of its evaluation grid, which keeps
//! the coefficients in the same disk and moves the nearest singularity of
//! `w` outside the unit disk. Draws with `t < MIN_SCALE` are dropped. The
//! rescaled map is kept when the last two terms of `h`, `g` and `w` are below
//! `MAX_TAIL` on its evaluation grid (the ratio-based trust radius misses
//! nearby poles when coefficients oscillate) and `|w| <= MAX_DILATATION` on
//! both its evaluation grid and the default criteria grid.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::criteria::GridSpec;
use crate::map::LogharmonicMap;
use crate::series::{TaylorSeries, DEFAULT_ORDER};

pub const CORPUS_SIZE: usize = 20;
pub const COEFF_RADIUS: f64 = 0.3;
pub const POLY_DEGREE: usize = 4;
pub const MAX_DILATATION: f64 = 0.95;
pub const MIN_SCALE: f64 = 0.2;
pub const MAX_TAIL: f64 = 1e-11;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample from the closed disk of the given radius.
pub fn disk_point<R: Rng>(rng: &mut R, radius: f64) -> Complex64 {
    let r = radius * rng.gen::<f64>().sqrt();
    let t = rng.gen_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(r, t)
}

/// Uniform sample from the unit circle.
pub fn unimodular<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))
}

fn random_poly<R: Rng>(rng: &mut R) -> Vec<Complex64> {
    (0..=POLY_DEGREE).map(|_| disk_point(rng, COEFF_RADIUS)).collect()
}

fn map_from(p: &[Complex64], q: &[Complex64], order: usize) -> Option<LogharmonicMap> {
    let exp_poly = |c: &[Complex64]| {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); order + 1];
        coeffs[..c.len()].copy_from_slice(c);
        TaylorSeries::new(Complex64::new(0.0, 0.0), coeffs).and_then(|s| s.exp())
    };
    LogharmonicMap::new(exp_poly(p).ok()?, exp_poly(q).ok()?).ok()
}

/// `p(t z)`.
fn rescaled(p: &[Complex64], t: f64) -> Vec<Complex64> {
    p.iter().zip(0..).map(|(c, k)| c * t.powi(k)).collect()
}

/// `|c_{N-1}| r^{N-1} + |c_N| r^N`.
fn tail(s: &TaylorSeries, r: f64) -> f64 {
    let n = s.order();
    (n.saturating_sub(1)..=n)
        .map(|k| s.coeff(k).norm() * r.powi(k as i32))
        .sum()
}

fn grid_radius(f: &LogharmonicMap) -> f64 {
    0.8 * f.trust_radius().min(1.0)
}

fn admissible(f: &LogharmonicMap) -> bool {
    let r = grid_radius(f);
    let within = |z: Complex64| f.dilatation_at(z).norm() <= MAX_DILATATION;
    [f.h(), f.g(), f.dilatation()]
        .iter()
        .all(|s| tail(s, r) <= MAX_TAIL)
        && f.eval_grid().into_iter().all(within)
        && GridSpec::default().points().into_iter().all(within)
}

/// Draws one admissible map, rejecting candidates until one passes.
pub fn random_map<R: Rng>(rng: &mut R, order: usize) -> LogharmonicMap {
    loop {
        let p = random_poly(rng);
        let q = random_poly(rng);
        let Some(f) = map_from(&p, &q, order) else {
            continue;
        };
        let t = grid_radius(&f);
        if t < MIN_SCALE {
            continue;
        }
        if let Some(f) = map_from(&rescaled(&p, t), &rescaled(&q, t), order).filter(admissible) {
            return f;
        }
    }
}

/// The standard corpus: `CORPUS_SIZE` maps at order 32 from `seed`.
pub fn corpus(seed: u64) -> Vec<LogharmonicMap> {
    let mut rng = rng(seed);
    (0..CORPUS_SIZE)
        .map(|_| random_map(&mut rng, DEFAULT_ORDER))
        .collect()
}

/// Uniform random points inside the map's evaluation disk.
pub fn sample_points<R: Rng>(rng: &mut R, f: &LogharmonicMap, n: usize) -> Vec<Complex64> {
    let radius = grid_radius(f);
    (0..n).map(|_| f.center() + disk_point(rng, radius)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic_and_admissible() {
        let a = corpus(0);
        let b = corpus(0);
        assert_eq!(a.len(), CORPUS_SIZE);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.h().coeffs(), y.h().coeffs());
            assert!(admissible(x));
        }
    }

    #[test]
    fn sense_preserving_on_grid() {
        for f in corpus(0) {
            for z in f.eval_grid() {
                assert!(f.jacobian(z) > 0.0);
            }
        }
    }
}
