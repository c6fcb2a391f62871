//! Numerical oracles that do not go through the series machinery: central
//! finite differences for Wirtinger derivatives, closed-form inversion of the
//! affine approximation, least-squares quadratic jets and a brute-force
//! injectivity scan.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::criteria::GridSpec;
use crate::error::{Error, Result};
use crate::map::LogharmonicMap;
use crate::transforms::{AffineApprox, JetCoefficients};

/// Central-difference step. 1e-5 keeps truncation near 1e-10 while
/// cancellation stays around 1e-11 for O(1) fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdConfig {
    pub step: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { step: 1e-5 }
    }
}

impl FdConfig {
    pub fn new(step: f64) -> Result<Self> {
        if step > 0.0 && step < 1e-2 {
            Ok(Self { step })
        } else {
            Err(Error::Config(format!("finite-difference step {step} not in (0, 1e-2)")))
        }
    }
}

/// `(d/dz, d/dzbar)` of `field` at `z` by central differences along the axes.
pub fn fd_wirtinger<F>(field: F, z: Complex64, cfg: FdConfig) -> Result<(Complex64, Complex64)>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let h = cfg.step;
    let dx = (field(z + h)? - field(z - h)?) / (2.0 * h);
    let iy = Complex64::new(0.0, h);
    let dy = (field(z + iy)? - field(z - iy)?) / (2.0 * h);
    let i = Complex64::i();
    Ok(((dx - i * dy) * 0.5, (dx + i * dy) * 0.5))
}

/// Forward tolerance for [`invert_affine_t`].
pub const INVERSION_TOLERANCE: f64 = 1e-8;

/// Solves `T(z) = w` through the logarithmic lift
/// `log T = l + c conj(l)`, `l = k log(a z + b)`:
///
/// ```text
/// l = (log w - c conj(log w)) / (1 - |c|^2),   z = (exp(l / k) - b) / a
/// ```
///
/// The logarithm of `w` is taken relative to `T(origin)` so the branch
/// matches the one `T` was built on; the result is checked by re-evaluating
/// `T` and reported as [`Error::BranchMiss`] when it does not reproduce `w`.
pub fn invert_affine_t(t: &AffineApprox, w: Complex64) -> Result<Complex64> {
    if w.norm() == 0.0 {
        return Err(Error::ZeroArgument);
    }
    let c = t.c;
    let d_log = (w / t.value_at_origin()).ln();
    let d_l = (d_log - c * d_log.conj()) / (1.0 - c.norm_sqr());
    let z = t.origin + t.b / t.a * expm1(d_l / t.k);
    let residual = (t.eval(z) - w).norm();
    if residual.is_finite() && residual <= INVERSION_TOLERANCE * w.norm().max(1.0) {
        Ok(z)
    } else {
        Err(Error::BranchMiss { residual })
    }
}

/// `exp(x) - 1` without cancellation for small `x`.
pub(crate) fn expm1(x: Complex64) -> Complex64 {
    let s = (0.5 * x.im).sin();
    let re = x.re.exp_m1() * x.im.cos() - 2.0 * s * s;
    let im = x.re.exp() * x.im.sin();
    Complex64::new(re, im)
}

/// Ring sampling for [`fit_quadratic`]: `points_per_ring` points at `radius`
/// and as many at `radius / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitConfig {
    pub radius: f64,
    pub points_per_ring: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            radius: 1e-3,
            points_per_ring: 16,
        }
    }
}

/// `c00 + c10 u + c01 conj(u) + c20 u^2 + c11 u conj(u) + c02 conj(u)^2`
/// in the offset `u = z - center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticFit {
    #[serde(with = "crate::report::complex")]
    pub c00: Complex64,
    #[serde(with = "crate::report::complex")]
    pub c10: Complex64,
    #[serde(with = "crate::report::complex")]
    pub c01: Complex64,
    #[serde(with = "crate::report::complex")]
    pub c20: Complex64,
    #[serde(with = "crate::report::complex")]
    pub c11: Complex64,
    #[serde(with = "crate::report::complex")]
    pub c02: Complex64,
    /// Largest absolute misfit over the samples.
    pub residual: f64,
}

impl QuadraticFit {
    pub fn jet(&self) -> JetCoefficients {
        JetCoefficients {
            c20: self.c20,
            c02: self.c02,
            c11: self.c11,
        }
    }
}

fn basis(s: Complex64) -> [Complex64; 6] {
    let sb = s.conj();
    [Complex64::new(1.0, 0.0), s, sb, s * s, s * sb, sb * sb]
}

pub fn fit_quadratic<F>(field: F, center: Complex64, cfg: FitConfig) -> Result<QuadraticFit>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let n = cfg.points_per_ring;
    let mut offsets = Vec::with_capacity(2 * n);
    for scale in [1.0, 0.5] {
        for j in 0..n {
            let t = std::f64::consts::TAU * j as f64 / n as f64;
            offsets.push(Complex64::from_polar(scale, t));
        }
    }
    let rows = offsets.len();
    // fit in the scaled offset s = u / radius so the basis is O(1)
    let a = DMatrix::from_fn(rows, 6, |i, j| basis(offsets[i])[j]);
    let values: Vec<Complex64> = offsets
        .iter()
        .map(|s| field(center + s * cfg.radius))
        .collect::<Result<_>>()?;
    let rhs = DVector::from_vec(values.clone());
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let sigma_max = sv.max();
    let sigma_min = sv.min();
    if rows < 6 || sigma_min <= 1e-12 * sigma_max {
        return Err(Error::SingularFit { sigma_min });
    }
    let x = svd
        .solve(&rhs, 0.0)
        .map_err(|_| Error::SingularFit { sigma_min })?;
    let residual = (&a * &x - &rhs).iter().map(|r| r.norm()).fold(0.0, f64::max);
    let r = cfg.radius;
    Ok(QuadraticFit {
        c00: x[0],
        c10: x[1] / r,
        c01: x[2] / r,
        c20: x[3] / (r * r),
        c11: x[4] / (r * r),
        c02: x[5] / (r * r),
        residual,
    })
}

/// Thresholds for [`grid_injectivity`]: two samples collide when their
/// images are closer than `relative_collision * max|f|` while the samples
/// themselves are more than `separation` apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InjectivityConfig {
    pub relative_collision: f64,
    pub separation: f64,
}

impl Default for InjectivityConfig {
    fn default() -> Self {
        Self {
            relative_collision: 1e-9,
            separation: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Collision {
    #[serde(with = "crate::report::complex")]
    pub z1: Complex64,
    #[serde(with = "crate::report::complex")]
    pub z2: Complex64,
    pub image_distance: f64,
}

/// Brute-force search for pairs of grid points with (numerically) equal
/// images. Buckets of side `1e3 * delta` on the image plane keep the search
/// near-linear. An empty result is not a proof of univalence.
pub fn grid_injectivity(
    f: &LogharmonicMap,
    grid: &GridSpec,
    cfg: InjectivityConfig,
) -> Vec<Collision> {
    let pts = grid.points();
    let images: Vec<Complex64> = pts.par_iter().map(|&z| f.eval(z)).collect();
    let scale = images.iter().map(|w| w.norm()).fold(0.0, f64::max);
    if !(scale > 0.0 && scale.is_finite()) {
        return Vec::new();
    }
    let delta = cfg.relative_collision * scale;
    let bucket = delta * 1e3;
    let key = |w: Complex64| ((w.re / bucket).floor() as i64, (w.im / bucket).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut out = Vec::new();
    for (i, &w) in images.iter().enumerate() {
        let (kx, ky) = key(w);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(members) = buckets.get(&(kx + dx, ky + dy)) else {
                    continue;
                };
                for &j in members {
                    let d = (images[j] - w).norm();
                    if d < delta && (pts[j] - pts[i]).norm() > cfg.separation {
                        out.push(Collision {
                            z1: pts[j],
                            z2: pts[i],
                            image_distance: d,
                        });
                    }
                }
            }
        }
        buckets.entry((kx, ky)).or_default().push(i);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::compile_str;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn fd_basic_fields() {
        let cfg = FdConfig::default();
        let z0 = c(0.3, -0.4);
        let (dz, dzb) = fd_wirtinger(Ok, z0, cfg).unwrap();
        assert!((dz - 1.0).norm() < 1e-10 && dzb.norm() < 1e-10);
        let (dz, dzb) = fd_wirtinger(|z| Ok(z.conj()), z0, cfg).unwrap();
        assert!(dz.norm() < 1e-10 && (dzb - 1.0).norm() < 1e-10);
        let (dz, dzb) = fd_wirtinger(|z| Ok(z * z.conj()), c(1.0, 1.0), cfg).unwrap();
        assert!((dz - c(1.0, -1.0)).norm() < 1e-9);
        assert!((dzb - c(1.0, 1.0)).norm() < 1e-9);
        assert!(FdConfig::new(0.1).is_err());
    }

    #[test]
    fn fd_of_analytic_series_has_no_dbar() {
        let s = compile_str("exp(z + 0.3*z^2)/(2-z)", c(0.0, 0.0), 32).unwrap();
        let (_, dzb) = fd_wirtinger(|z| Ok(s.eval(z)), c(0.2, 0.1), FdConfig::default()).unwrap();
        assert!(dzb.norm() < 1e-7);
    }

    #[test]
    fn expm1_is_accurate_near_zero() {
        let x = c(1e-12, -2e-12);
        assert!((expm1(x) - x).norm() < 1e-23);
        let y = c(0.7, 2.0);
        assert!((expm1(y) - (y.exp() - 1.0)).norm() < 1e-15);
    }

    #[test]
    fn fit_recovers_planted_jets() {
        let cfg = FitConfig::default();
        let fit = fit_quadratic(|z| Ok(z * z), c(0.0, 0.0), cfg).unwrap();
        assert!((fit.c20 - 1.0).norm() < 1e-10);
        for v in [fit.c00, fit.c10, fit.c01, fit.c11, fit.c02] {
            assert!(v.norm() < 1e-10);
        }
        let fit = fit_quadratic(|z| Ok(z.conj() * z.conj()), c(0.0, 0.0), cfg).unwrap();
        assert!((fit.c02 - 1.0).norm() < 1e-10);
        let p = |u: Complex64| {
            c(1.0, 2.0) + c(0.5, -1.0) * u + c(0.0, 3.0) * u.conj() + c(-2.0, 0.5) * u * u
                + c(0.25, 0.25) * u * u.conj()
                + c(4.0, -4.0) * u.conj() * u.conj()
        };
        let z0 = c(0.2, 0.3);
        // an O(1) constant term swamps a 1e-6 quadratic signal at the default radius
        let wide = FitConfig { radius: 0.1, ..cfg };
        let fit = fit_quadratic(|z| Ok(p(z - z0)), z0, wide).unwrap();
        assert!((fit.c00 - c(1.0, 2.0)).norm() < 1e-10);
        assert!((fit.c10 - c(0.5, -1.0)).norm() < 1e-10);
        assert!((fit.c01 - c(0.0, 3.0)).norm() < 1e-10);
        assert!((fit.c20 - c(-2.0, 0.5)).norm() < 1e-10);
        assert!((fit.c11 - c(0.25, 0.25)).norm() < 1e-10);
        assert!((fit.c02 - c(4.0, -4.0)).norm() < 1e-10);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn degenerate_ring_is_singular() {
        let cfg = FitConfig {
            radius: 1e-3,
            points_per_ring: 2,
        };
        assert!(matches!(
            fit_quadratic(Ok, c(0.0, 0.0), cfg),
            Err(Error::SingularFit { .. })
        ));
    }

    fn map(h: &str) -> LogharmonicMap {
        // e^{z^2} is not locally univalent at 0, so skip the constructor checks
        let o = c(0.0, 0.0);
        LogharmonicMap::from_parts(compile_str(h, o, 32).unwrap(), compile_str("1", o, 32).unwrap())
    }

    #[test]
    fn injectivity_scan() {
        let grid = GridSpec::default();
        assert!(grid_injectivity(&map("exp(z)"), &grid, InjectivityConfig::default()).is_empty());
        let hits = grid_injectivity(&map("exp(z^2)"), &grid, InjectivityConfig::default());
        assert!(!hits.is_empty());
        assert!(hits.iter().any(|h| (h.z1 + h.z2).norm() < 1e-12));
    }
}
