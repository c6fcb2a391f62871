//! Pre-Schwarzian derivatives of analytic, harmonic and logharmonic maps.
//!
//! For `f = h * conj(g)` with dilatation `w`:
//!
//! ```text
//! P_f = h''/h' + w h'/h - w' conj(w) / (1 - |w|^2)
//! ```
//!
//! which equals `d/dz log J_f`. `P_f` is not analytic (it depends on
//! `conj(w)`), so it is only ever evaluated pointwise from the series of
//! `h` and `w`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::map::{HarmonicLift, LogharmonicMap};
use crate::series::{TaylorSeries, EPS_ZERO};

/// Below this value of `1 - |w|^2` a point is treated as outside the
/// sense-preserving hypothesis.
pub const DEGENERACY_MARGIN: f64 = 1e-9;

/// `P_f(z)` together with its three summands:
/// `value = analytic_part + mixing_part - dilatation_part`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PreSchwarzianValue {
    #[serde(with = "crate::report::complex")]
    pub value: Complex64,
    #[serde(with = "crate::report::complex")]
    pub analytic_part: Complex64,
    #[serde(with = "crate::report::complex")]
    pub mixing_part: Complex64,
    #[serde(with = "crate::report::complex")]
    pub dilatation_part: Complex64,
    pub outside_trust: bool,
}

pub(crate) fn derivative_ratio(
    d1: &TaylorSeries,
    d2: &TaylorSeries,
    z: Complex64,
) -> Result<Complex64> {
    let first = d1.eval(z);
    if first.norm() <= EPS_ZERO {
        return Err(Error::CriticalPoint { z });
    }
    Ok(d2.eval(z) / first)
}

/// `w' conj(w) / (1 - |w|^2)`, failing on near-degenerate dilatation.
pub(crate) fn dilatation_term(w: Complex64, dw: Complex64, z: Complex64) -> Result<Complex64> {
    let gap = 1.0 - w.norm_sqr();
    if gap < DEGENERACY_MARGIN {
        return Err(Error::DegenerateDilatation {
            z,
            modulus: w.norm(),
        });
    }
    Ok(dw * w.conj() / gap)
}

/// `phi''(z) / phi'(z)`.
pub fn ps_analytic(phi: &TaylorSeries, z: Complex64) -> Result<Complex64> {
    let d1 = phi.derivative();
    derivative_ratio(&d1, &d1.derivative(), z)
}

/// `H''/H' - w_F' conj(w_F) / (1 - |w_F|^2)` with `w_F = G'/H'`.
pub fn ps_harmonic(lift: &HarmonicLift, z: Complex64) -> Result<Complex64> {
    let analytic = derivative_ratio(lift.dh(), lift.d2h(), z)?;
    let dil = dilatation_term(lift.dilatation_at(z), lift.ddilatation_at(z), z)?;
    Ok(analytic - dil)
}

pub fn ps_logharmonic(f: &LogharmonicMap, z: Complex64) -> Result<PreSchwarzianValue> {
    let hz = f.h().eval(z);
    if hz.norm() <= EPS_ZERO {
        return Err(Error::Vanishing { z });
    }
    let analytic_part = derivative_ratio(f.dh(), f.d2h(), z)?;
    let w = f.dilatation_at(z);
    let dilatation_part = dilatation_term(w, f.ddilatation_at(z), z)?;
    let mixing_part = w * f.dh().eval(z) / hz;
    Ok(PreSchwarzianValue {
        value: analytic_part + mixing_part - dilatation_part,
        analytic_part,
        mixing_part,
        dilatation_part,
        outside_trust: f.outside_trust(z),
    })
}

/// `|w'|^2 / (1 - |w|^2)^2`.
///
/// This is the modulus of the antiholomorphic derivative of `P_f`; with the
/// sign convention above, `d/dzbar P_f = -ps_dbar(f, z)`.
pub fn ps_dbar(f: &LogharmonicMap, z: Complex64) -> Result<f64> {
    let w = f.dilatation_at(z);
    let gap = 1.0 - w.norm_sqr();
    if gap < DEGENERACY_MARGIN {
        return Err(Error::DegenerateDilatation {
            z,
            modulus: w.norm(),
        });
    }
    Ok(f.ddilatation_at(z).norm_sqr() / (gap * gap))
}

/// Exponents `a`, `b` and the analytic pre-Schwarzian of `h^a g^b` at `z0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerReduction {
    #[serde(with = "crate::report::complex")]
    pub a: Complex64,
    #[serde(with = "crate::report::complex")]
    pub b: Complex64,
    #[serde(with = "crate::report::complex")]
    pub value: Complex64,
}

/// Reduces `P_f(z0)` to the analytic pre-Schwarzian of `phi = h^a g^b` with
/// `a = (1 + w0) / (1 - |w0|^2)` and `b = -conj(w0) a`, `w0 = w(z0)`.
///
/// The powers are expanded at `z0` (the map is re-expanded there first), so
/// the branch choice only changes `phi` by a constant factor.
pub fn ps_power_reduction(f: &LogharmonicMap, z0: Complex64) -> Result<PowerReduction> {
    let w0 = f.dilatation_at(z0);
    let gap = 1.0 - w0.norm_sqr();
    if gap < DEGENERACY_MARGIN {
        return Err(Error::DegenerateDilatation {
            z: z0,
            modulus: w0.norm(),
        });
    }
    let a = (1.0 + w0) / gap;
    let b = -w0.conj() * a;
    let local;
    let f = if (z0 - f.center()).norm() == 0.0 {
        f
    } else {
        local = f.recentered(z0)?;
        &local
    };
    let phi = f.h().pow(a)?.mul(&f.g().pow(b)?)?;
    let value = ps_analytic(&phi, z0)?;
    Ok(PowerReduction { a, b, value })
}

/// `d/dz log(h' g) - w' conj(w) / (1 - |w|^2)`, the same quantity as
/// [`ps_logharmonic`] written through the product `h' g`.
pub fn ps_hg_form(f: &LogharmonicMap, z: Complex64) -> Result<Complex64> {
    let dh = f.dh().eval(z);
    let gz = f.g().eval(z);
    let prod = dh * gz;
    if prod.norm() <= EPS_ZERO {
        return Err(Error::CriticalPoint { z });
    }
    let dprod = f.d2h().eval(z) * gz + dh * f.dg().eval(z);
    let w = f.dilatation_at(z);
    Ok(dprod / prod - dilatation_term(w, f.ddilatation_at(z), z)?)
}

/// Residuals of the two candidate relations between the lift and the map,
/// `P_F = P_f - (1 + w) h'/h` and `P_F = P_f - (1 - w) h'/h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiftRelation {
    pub plus_residual: f64,
    pub minus_residual: f64,
}

pub fn lift_relation(f: &LogharmonicMap, lift: &HarmonicLift, z: Complex64) -> Result<LiftRelation> {
    let pf = ps_logharmonic(f, z)?.value;
    let pl = ps_harmonic(lift, z)?;
    let w = f.dilatation_at(z);
    let log_dh = f.dh().eval(z) / f.h().eval(z);
    Ok(LiftRelation {
        plus_residual: (pl - (pf - (1.0 + w) * log_dh)).norm(),
        minus_residual: (pl - (pf - (1.0 - w) * log_dh)).norm(),
    })
}
