//! Grid-supremum checks of Becker and Ahlfors type univalence criteria.
//!
//! Every criterion is evaluated in normalized form, i.e. multiplied through
//! by `1 - |z|^2`, so the compared quantity stays bounded up to the boundary.
//! A point where a hypothesis fails (critical point, zero of `h`, `|w| >= 1`)
//! is counted in `excluded_points` and fails the report.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{polar_points, HarmonicLift, LogharmonicMap};
use crate::preschwarzian::{ps_analytic, ps_harmonic, ps_logharmonic, DEGENERACY_MARGIN};
use crate::series::{TaylorSeries, EPS_ZERO};

/// Slack on the `<= 1` comparison.
pub const PASS_TOLERANCE: f64 = 1e-12;

/// Number of outermost radii reported in `boundary_trend`.
pub const TREND_RADII: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r_max: f64,
    pub n_radii: usize,
    pub n_angles: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            r_max: 0.99,
            n_radii: 64,
            n_angles: 128,
        }
    }
}

impl GridSpec {
    pub fn new(r_max: f64, n_radii: usize, n_angles: usize) -> Result<Self> {
        let grid = Self {
            r_max,
            n_radii,
            n_angles,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_max > 0.0 && self.r_max < 1.0) {
            return Err(Error::Config(format!(
                "r_max must lie in (0, 1), got {}",
                self.r_max
            )));
        }
        if self.n_radii == 0 || self.n_angles == 0 {
            return Err(Error::Config(
                "grid needs at least one radius and one angle".into(),
            ));
        }
        Ok(())
    }

    /// Grid points in radius-major order, centered at the origin.
    pub fn points(&self) -> Vec<Complex64> {
        polar_points(Complex64::new(0.0, 0.0), self.r_max, self.n_radii, self.n_angles)
    }

    /// Radius index of each entry of [`GridSpec::points`].
    fn radius_index(&self, i: usize) -> usize {
        if self.n_radii == 1 || i == 0 {
            0
        } else {
            1 + (i - 1) / self.n_angles
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub passed: bool,
    pub sup_lhs: f64,
    #[serde(with = "crate::report::complex")]
    pub worst_point: Complex64,
    pub grid: GridSpec,
    pub excluded_points: usize,
    /// Grid points outside the trust radius of the series involved.
    pub outside_trust: usize,
    /// Largest value on each of the outermost radii, innermost first.
    pub boundary_trend: Vec<f64>,
}

/// One grid point: the normalized quantity, or the reason it was excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSample {
    pub z: Complex64,
    pub lhs: Result<f64>,
    pub outside_trust: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridEvaluation {
    pub report: CriterionReport,
    pub samples: Vec<PointSample>,
}

/// Evaluates `quantity` on every grid point and reduces to a report.
///
/// Points are evaluated in parallel; the reduction is sequential in
/// radius-major order so that ties keep the first (smallest radius, then
/// smallest angle) point.
pub fn evaluate<Q>(grid: &GridSpec, trust_radius: f64, quantity: Q) -> GridEvaluation
where
    Q: Fn(Complex64) -> Result<f64> + Sync,
{
    let pts = grid.points();
    let samples: Vec<PointSample> = pts
        .par_iter()
        .map(|&z| {
            let lhs = quantity(z).and_then(|v| {
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFinite { op: "criterion" })
                }
            });
            PointSample {
                z,
                lhs,
                outside_trust: z.norm() > trust_radius,
            }
        })
        .collect();

    let mut sup = 0.0;
    let mut worst = Complex64::new(0.0, 0.0);
    let mut excluded = 0;
    let mut outside = 0;
    let first_trend = grid.n_radii.saturating_sub(TREND_RADII);
    let mut trend = vec![0.0f64; grid.n_radii - first_trend];
    let mut seen_any = false;
    for (i, s) in samples.iter().enumerate() {
        outside += usize::from(s.outside_trust);
        match s.lhs {
            Ok(v) => {
                if !seen_any || v > sup {
                    sup = v;
                    worst = s.z;
                    seen_any = true;
                }
                let ri = grid.radius_index(i);
                if ri >= first_trend {
                    let t = &mut trend[ri - first_trend];
                    *t = t.max(v);
                }
            }
            Err(_) => excluded += 1,
        }
    }
    GridEvaluation {
        report: CriterionReport {
            passed: excluded == 0 && sup <= 1.0 + PASS_TOLERANCE,
            sup_lhs: sup,
            worst_point: worst,
            grid: *grid,
            excluded_points: excluded,
            outside_trust: outside,
            boundary_trend: trend,
        },
        samples,
    }
}

fn weight(z: Complex64) -> f64 {
    1.0 - z.norm_sqr()
}

fn dilatation_gap(w: Complex64, z: Complex64) -> Result<f64> {
    let gap = 1.0 - w.norm_sqr();
    if gap < DEGENERACY_MARGIN {
        return Err(Error::DegenerateDilatation {
            z,
            modulus: w.norm(),
        });
    }
    Ok(gap)
}

fn log_derivative(f: &LogharmonicMap, z: Complex64) -> Result<Complex64> {
    let hz = f.h().eval(z);
    if hz.norm() <= EPS_ZERO {
        return Err(Error::Vanishing { z });
    }
    Ok(f.dh().eval(z) / hz)
}

fn check_constant(c: Complex64, strict: bool) -> Result<()> {
    let bad = !c.is_finite()
        || (c + 1.0).norm() <= EPS_ZERO
        || if strict { c.norm() >= 1.0 } else { c.norm() > 1.0 };
    if bad {
        Err(Error::BadConstant { c })
    } else {
        Ok(())
    }
}

/// `|z P phi(z)| (1 - |z|^2)`.
pub fn becker_analytic_lhs(phi: &TaylorSeries, z: Complex64) -> Result<f64> {
    Ok((z * ps_analytic(phi, z)?).norm() * weight(z))
}

/// `|z P phi(z) (1 - |z|^2) + c |z|^2|`.
pub fn ahlfors_analytic_lhs(phi: &TaylorSeries, c: Complex64, z: Complex64) -> Result<f64> {
    Ok((z * ps_analytic(phi, z)? * weight(z) + c * z.norm_sqr()).norm())
}

/// `(1 - |z|^2) (|z P_F| + |z w_F'| / (1 - |w_F|^2))`.
pub fn becker_harmonic_lhs(lift: &HarmonicLift, z: Complex64) -> Result<f64> {
    let p = ps_harmonic(lift, z)?;
    let gap = dilatation_gap(lift.dilatation_at(z), z)?;
    let dw = lift.ddilatation_at(z);
    Ok(weight(z) * ((z * p).norm() + (z * dw).norm() / gap))
}

/// `(1 - |z|^2) (|z P_f| + (1 + |w|) |z h'/h| + |z w'| / (1 - |w|^2))`.
pub fn becker_logharmonic_lhs(f: &LogharmonicMap, z: Complex64) -> Result<f64> {
    let p = ps_logharmonic(f, z)?.value;
    let w = f.dilatation_at(z);
    let gap = dilatation_gap(w, z)?;
    let lh = log_derivative(f, z)?;
    let dw = f.ddilatation_at(z);
    Ok(weight(z) * ((z * p).norm() + (1.0 + w.norm()) * (z * lh).norm() + (z * dw).norm() / gap))
}

/// `|(1-|z|^2) z P_f + c |z|^2| + (1+|w|) |(1-|z|^2) z h'/h| + |z w'| (1-|z|^2) / (1-|w|^2)`.
pub fn ahlfors_logharmonic_lhs(f: &LogharmonicMap, c: Complex64, z: Complex64) -> Result<f64> {
    let p = ps_logharmonic(f, z)?.value;
    let w = f.dilatation_at(z);
    let gap = dilatation_gap(w, z)?;
    let lh = log_derivative(f, z)?;
    let dw = f.ddilatation_at(z);
    let s = weight(z);
    Ok((s * z * p + c * z.norm_sqr()).norm()
        + (1.0 + w.norm()) * (s * z * lh).norm()
        + (z * dw).norm() * s / gap)
}

/// `(1 - |z|^2) (|P_f| + |w'| / (1 - |w|^2))`.
pub fn companion_hypothesis_lhs(f: &LogharmonicMap, z: Complex64) -> Result<f64> {
    let p = ps_logharmonic(f, z)?.value;
    let w = f.dilatation_at(z);
    let gap = dilatation_gap(w, z)?;
    let dw = f.ddilatation_at(z);
    Ok(weight(z) * (p.norm() + dw.norm() / gap))
}

pub(crate) fn lift_trust(lift: &HarmonicLift) -> f64 {
    lift.analytic()
        .radius_hint()
        .min(lift.co_analytic().radius_hint())
}

pub fn c_becker_analytic(phi: &TaylorSeries, grid: &GridSpec) -> CriterionReport {
    evaluate(grid, phi.radius_hint(), |z| becker_analytic_lhs(phi, z)).report
}

/// Requires `|c| < 1`.
pub fn c_ahlfors_analytic(phi: &TaylorSeries, c: Complex64, grid: &GridSpec) -> Result<CriterionReport> {
    check_constant(c, true)?;
    Ok(evaluate(grid, phi.radius_hint(), |z| ahlfors_analytic_lhs(phi, c, z)).report)
}

pub fn c_becker_harmonic(lift: &HarmonicLift, grid: &GridSpec) -> CriterionReport {
    evaluate(grid, lift_trust(lift), |z| becker_harmonic_lhs(lift, z)).report
}

pub fn c_becker_logharmonic(f: &LogharmonicMap, grid: &GridSpec) -> CriterionReport {
    evaluate(grid, f.trust_radius(), |z| becker_logharmonic_lhs(f, z)).report
}

/// Accepts `|c| <= 1` with `c != -1`.
pub fn c_ahlfors_logharmonic(f: &LogharmonicMap, c: Complex64, grid: &GridSpec) -> Result<CriterionReport> {
    check_constant(c, false)?;
    Ok(evaluate(grid, f.trust_radius(), |z| ahlfors_logharmonic_lhs(f, c, z)).report)
}

/// The analytic companion `phi` with `phi' = h' g` and `phi(center) = 0`.
pub fn companion(f: &LogharmonicMap) -> Result<TaylorSeries> {
    Ok(f.dh().mul(f.g())?.antiderivative(Complex64::new(0.0, 0.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompanionReport {
    pub hypothesis: CriterionReport,
    pub conclusion: CriterionReport,
}

impl CompanionReport {
    /// False only for a counterexample: hypothesis passed, conclusion failed.
    pub fn implication_holds(&self) -> bool {
        !self.hypothesis.passed || self.conclusion.passed
    }
}

pub fn c_companion_becker(f: &LogharmonicMap, grid: &GridSpec) -> Result<CompanionReport> {
    let hypothesis = evaluate(grid, f.trust_radius(), |z| companion_hypothesis_lhs(f, z)).report;
    let phi = companion(f)?;
    Ok(CompanionReport {
        hypothesis,
        conclusion: c_becker_analytic(&phi, grid),
    })
}

/// Becker sups for the family `h conj(g^lambda)`, next to the Becker sups of
/// the harmonic lifts `log h + conj(lambda log g)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationFamily {
    pub logharmonic_sups: Vec<f64>,
    pub lift_sups: Vec<f64>,
}

impl RotationFamily {
    pub fn logharmonic_spread(&self) -> f64 {
        spread(&self.logharmonic_sups)
    }

    pub fn lift_spread(&self) -> f64 {
        spread(&self.lift_sups)
    }
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    if v.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

pub fn c_rotation_family(f: &LogharmonicMap, lambdas: &[Complex64], grid: &GridSpec) -> Result<RotationFamily> {
    let mut logharmonic_sups = Vec::with_capacity(lambdas.len());
    let mut lift_sups = Vec::with_capacity(lambdas.len());
    let big_h = f.h().log()?;
    let big_g = f.g().log()?;
    for &lambda in lambdas {
        let rotated = f.rotate_dilatation(lambda)?;
        logharmonic_sups.push(c_becker_logharmonic(&rotated, grid).sup_lhs);
        let lift = HarmonicLift::new(big_h.clone(), big_g.scale(lambda)?);
        lift_sups.push(c_becker_harmonic(&lift, grid).sup_lhs);
    }
    Ok(RotationFamily {
        logharmonic_sups,
        lift_sups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::compile_str;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn series(e: &str) -> TaylorSeries {
        compile_str(e, c(0.0, 0.0), 32).unwrap()
    }

    fn map(h: &str, g: &str) -> LogharmonicMap {
        LogharmonicMap::new(series(h), series(g)).unwrap()
    }

    #[test]
    fn grid_layout() {
        let g = GridSpec::new(0.5, 3, 4).unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 9);
        assert_eq!(pts[0], c(0.0, 0.0));
        assert!((pts[8].norm() - 0.5).abs() < 1e-15);
        assert!(GridSpec::new(1.0, 3, 4).is_err());
        assert!(GridSpec::new(0.5, 0, 4).is_err());
    }

    #[test]
    fn analytic_references() {
        let grid = GridSpec::default();
        let id = TaylorSeries::variable(c(0.0, 0.0), 8);
        let r = c_becker_analytic(&id, &grid);
        assert!(r.passed && r.sup_lhs == 0.0);
        let r = c_becker_analytic(&series("exp(z)"), &grid);
        assert!(r.passed);
        assert!((r.sup_lhs - 2.0 / (3.0 * 3f64.sqrt())).abs() < 1e-4);
        let koebe = series("z/(1-z)^2");
        assert!(!c_becker_analytic(&koebe, &grid).passed);
    }

    #[test]
    fn ahlfors_analytic_constants() {
        let grid = GridSpec::new(0.9, 16, 32).unwrap();
        let id = TaylorSeries::variable(c(0.0, 0.0), 8);
        let r = c_ahlfors_analytic(&id, c(0.5, 0.0), &grid).unwrap();
        assert!(r.passed && (r.sup_lhs - 0.5 * 0.81).abs() < 1e-12);
        assert!(c_ahlfors_analytic(&id, c(1.0, 0.0), &grid).is_err());
        assert!(c_ahlfors_analytic(&id, c(-1.0, 0.0), &grid).is_err());
        let phi = series("exp(z)");
        assert!(c_ahlfors_analytic(&phi, c(0.5, 0.0), &grid).unwrap().passed);
        let a = c_ahlfors_analytic(&phi, c(0.0, 0.0), &grid).unwrap();
        assert_eq!(a.sup_lhs, c_becker_analytic(&phi, &grid).sup_lhs);
    }

    #[test]
    fn harmonic_references() {
        let grid = GridSpec::default();
        let lift = map("exp(0.2*z)", "exp(0.05*z)").log_lift().unwrap();
        let r = c_becker_harmonic(&lift, &grid);
        assert!(r.passed && r.sup_lhs < 1e-12);
        let r = c_becker_harmonic(&HarmonicLift::new(series("exp(4*z)"), series("0")), &grid);
        assert!(!r.passed);
    }

    #[test]
    fn logharmonic_references() {
        let grid = GridSpec::default();
        let r = c_becker_logharmonic(&map("exp(z)", "1"), &grid);
        assert!(r.passed);
        assert!((r.sup_lhs - 4.0 / (3.0 * 3f64.sqrt())).abs() < 1e-4);
        assert_eq!(r.boundary_trend.len(), TREND_RADII);
        let r = c_becker_logharmonic(&map("exp(4*z)", "1"), &grid);
        assert!(!r.passed);
        assert!((r.sup_lhs - 16.0 / (3.0 * 3f64.sqrt())).abs() < 1e-3);
        let f = map("exp(0.2*z)", "1");
        assert!(c_ahlfors_logharmonic(&f, c(0.5, 0.0), &grid).unwrap().passed);
        assert!(c_ahlfors_logharmonic(&f, c(1.0, 0.0), &grid).is_ok());
        assert!(matches!(
            c_ahlfors_logharmonic(&f, c(-1.0, 0.0), &grid),
            Err(Error::BadConstant { .. })
        ));
    }

    #[test]
    fn degenerate_points_are_excluded() {
        // w = 2z leaves the unit disk at |z| = 1/2
        let f = LogharmonicMap::new(series("exp(z)"), series("exp(z^2)")).unwrap();
        let r = c_becker_logharmonic(&f, &GridSpec::default());
        assert!(r.excluded_points > 0 && !r.passed);
    }

    #[test]
    fn companion_constants() {
        let grid = GridSpec::default();
        let r = c_companion_becker(&map("exp(0.2*z)", "1"), &grid).unwrap();
        assert!((r.hypothesis.sup_lhs - 0.2).abs() < 1e-12);
        assert!(r.hypothesis.passed && r.conclusion.passed && r.implication_holds());
    }

    #[test]
    fn worst_point_is_deterministic() {
        let grid = GridSpec::new(0.9, 8, 16).unwrap();
        let id = TaylorSeries::variable(c(0.0, 0.0), 8);
        // constant zero quantity: the first point wins
        let r = c_becker_analytic(&id, &grid);
        assert_eq!(r.worst_point, c(0.0, 0.0));
    }
}
