//! Transformation laws for the logharmonic pre-Schwarzian.
//!
//! - pre-composition with a locally univalent analytic map (chain rule),
//! - post-composition with `L(w) = w^a conj(w^b)`,
//! - the best affine logharmonic approximation `T` and the jet of `T^{-1} o f`,
//! - the partner map with rotated dilatation and the same pre-Schwarzian.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::map::LogharmonicMap;
use crate::oracle::{self, FitConfig, QuadraticFit};
use crate::preschwarzian::{ps_analytic, ps_logharmonic, DEGENERACY_MARGIN};
use crate::series::{same_point, TaylorSeries, EPS_ZERO};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `f o phi = (h o phi) * conj(g o phi)`.
///
/// When `phi(center)` differs from the center of `f`, the factors of `f` are
/// re-expanded there first.
pub fn t_precompose(f: &LogharmonicMap, phi: &TaylorSeries) -> Result<LogharmonicMap> {
    if phi.coeff(1).norm() <= EPS_ZERO {
        return Err(Error::CriticalPoint { z: phi.center() });
    }
    let pivot = phi.coeff(0);
    let local;
    let f = if same_point(pivot, f.center()) {
        f
    } else {
        local = f.recentered(pivot)?;
        &local
    };
    // recentering may land a hair off the exact pivot
    let h = TaylorSeries::new(pivot, f.h().coeffs().to_vec())?;
    let g = TaylorSeries::new(pivot, f.g().coeffs().to_vec())?;
    LogharmonicMap::new(h.compose(phi)?, g.compose(phi)?)
}

/// Right side of the chain rule, `P_f(phi(z)) phi'(z) + P phi(z)`.
pub fn chain_rule_rhs(f: &LogharmonicMap, phi: &TaylorSeries, z: Complex64) -> Result<Complex64> {
    let dphi = phi.derivative().eval(z);
    Ok(ps_logharmonic(f, phi.eval(z))?.value * dphi + ps_analytic(phi, z)?)
}

/// `L o f` for `L(w) = w^a conj(w^b)`, i.e. `H conj(G)` with
/// `H = h^a g^conj(b)` and `G = g^conj(a) h^b`.
///
/// Fails with [`Error::DegenerateDilatation`] when the new dilatation leaves
/// the unit disk somewhere on the evaluation grid of `f`.
pub fn t_power_postcompose(f: &LogharmonicMap, a: Complex64, b: Complex64) -> Result<LogharmonicMap> {
    if a.norm() <= EPS_ZERO {
        return Err(Error::ZeroExponent);
    }
    let h = f.h();
    let g = f.g();
    let big_h = h.pow(a)?.mul(&g.pow(b.conj())?)?;
    let big_g = g.pow(a.conj())?.mul(&h.pow(b)?)?;
    let out = LogharmonicMap::new(big_h, big_g)?;
    for z in f.eval_grid() {
        let w = out.dilatation_at(z);
        if 1.0 - w.norm_sqr() < DEGENERACY_MARGIN {
            return Err(Error::DegenerateDilatation { z, modulus: w.norm() });
        }
    }
    Ok(out)
}

/// Dilatation of `L o f` in closed form:
/// `W = (conj(a)/a) (w + e) / (1 + conj(e) w)` with `e = b / conj(a)`.
pub fn postcompose_dilatation(f: &LogharmonicMap, a: Complex64, b: Complex64) -> Result<TaylorSeries> {
    if a.norm() <= EPS_ZERO {
        return Err(Error::ZeroExponent);
    }
    let eps = b / a.conj();
    let w = f.dilatation();
    let num = w.shift(eps);
    let den = w.scale(eps.conj())?.shift(ONE);
    num.div(&den)?.scale(a.conj() / a)
}

/// `(a+b-1) h'/h + conj(a+b-1) g'/g + P_f(z)`, the pre-Schwarzian of `L o f`.
pub fn t_ps_shift_law(f: &LogharmonicMap, a: Complex64, b: Complex64, z: Complex64) -> Result<Complex64> {
    let s = a + b - 1.0;
    let pf = ps_logharmonic(f, z)?.value;
    let log_dh = f.dh().eval(z) / f.h().eval(z);
    let log_dg = f.dg().eval(z) / f.g().eval(z);
    Ok(s * log_dh + s.conj() * log_dg + pf)
}

/// Best affine logharmonic approximation
/// `T(z) = L(z) conj(L(z)^((1-k)/k))`, `L(z) = (a u + b)^k`, `u = z - origin`.
///
/// `T` is evaluated through its logarithm `l + c conj(l)` with
/// `l = k (log_b + Log(1 + a u / b))`, where `log_b` is the branch of
/// `log b` fixed by matching `T(origin) = f(origin)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineApprox {
    #[serde(with = "crate::report::complex")]
    pub a: Complex64,
    #[serde(with = "crate::report::complex")]
    pub b: Complex64,
    #[serde(with = "crate::report::complex")]
    pub k: Complex64,
    /// `conj((1 - k) / k)`.
    #[serde(with = "crate::report::complex")]
    pub c: Complex64,
    #[serde(with = "crate::report::complex")]
    pub log_b: Complex64,
    #[serde(with = "crate::report::complex")]
    pub origin: Complex64,
}

impl AffineApprox {
    fn ell(&self, z: Complex64) -> Complex64 {
        self.k * (self.log_b + (ONE + self.a / self.b * (z - self.origin)).ln())
    }

    /// `l'(z) = k a / (a u + b)`.
    fn dell(&self, z: Complex64) -> Complex64 {
        self.k * self.a / (self.b + self.a * (z - self.origin))
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let l = self.ell(z);
        (l + self.c * l.conj()).exp()
    }

    pub fn value_at_origin(&self) -> Complex64 {
        let l = self.k * self.log_b;
        (l + self.c * l.conj()).exp()
    }

    /// Closed-form `(T_z, T_zbar)`.
    pub fn wirtinger(&self, z: Complex64) -> (Complex64, Complex64) {
        let t = self.eval(z);
        let d = self.dell(z);
        (t * d, t * self.c * d.conj())
    }

    /// Dilatation `(1 - k) / k` of `T`, a constant.
    pub fn dilatation(&self) -> Complex64 {
        (ONE - self.k) / self.k
    }
}

/// Builds `T` matching `f`, `f_z` and `f_zbar` at the center of `f`.
///
/// `k = 1/(1 + w0)` makes the constant dilatation of `T` equal `w0`;
/// `a / b = k^-1 h'/h` at the center; and `log b` solves the real-linear
/// equation `k x + conj((1-k) x) = log h0 + conj(log g0)`, which is uniquely
/// solvable because `|k|^2 - |1-k|^2 = 2 Re k - 1 > 0`.
pub fn t_affine_approx(f: &LogharmonicMap) -> Result<AffineApprox> {
    let origin = f.center();
    let h0 = f.h().coeff(0);
    let h1 = f.h().coeff(1);
    let g0 = f.g().coeff(0);
    let w0 = f.dilatation().coeff(0);
    if 1.0 - w0.norm_sqr() < DEGENERACY_MARGIN {
        return Err(Error::DegenerateDilatation {
            z: origin,
            modulus: w0.norm(),
        });
    }
    let k = ONE / (ONE + w0);
    let target = h0.ln() + g0.ln().conj();
    let other = (ONE - k).conj();
    let log_b = (k.conj() * target - other * target.conj()) / (k.norm_sqr() - other.norm_sqr());
    let b = log_b.exp();
    let a = b * (h1 / h0) / k;
    Ok(AffineApprox {
        a,
        b,
        k,
        c: w0.conj(),
        log_b,
        origin,
    })
}

/// `(T_zz, T_zzbar, T_zbarzbar)` at the origin expressed through `f`:
/// `-w0 f_z^2 / f`, `f_z f_zbar / f`, `-conj(f_z) f_zbar / conj(f)`.
pub fn affine_second_derivatives(f: &LogharmonicMap) -> (Complex64, Complex64, Complex64) {
    let z0 = f.center();
    let fv = f.eval(z0);
    let d = f.wirtinger(z0);
    let w0 = f.dilatation().coeff(0);
    (
        -w0 * d.dz * d.dz / fv,
        d.dz * d.dzbar / fv,
        -d.dz.conj() * d.dzbar / fv.conj(),
    )
}

/// Second-order Taylor coefficients of `F = T^{-1} o f` at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JetCoefficients {
    #[serde(with = "crate::report::complex")]
    pub c20: Complex64,
    #[serde(with = "crate::report::complex")]
    pub c02: Complex64,
    #[serde(with = "crate::report::complex")]
    pub c11: Complex64,
}

/// Closed-form second derivatives `(F_zz, F_zzbar, F_zbarzbar)` of
/// `F = T^{-1} o f` at the origin, from the second derivatives of `f` and `T`:
///
/// ```text
/// F_zz = ((f_zz - T_zz) conj(f_z) - conj(f_zbarzbar - T_zbarzbar) f_zbar) / J_f
/// ```
///
/// and the analogous expressions for the mixed and antiholomorphic terms.
pub fn inverse_second_derivatives(f: &LogharmonicMap) -> (Complex64, Complex64, Complex64) {
    let z0 = f.center();
    let d = f.wirtinger(z0);
    let (fz, fzb) = (d.dz, d.dzbar);
    let gz = f.g().eval(z0);
    let hz = f.h().eval(z0);
    let f_zz = f.d2h().eval(z0) * gz.conj();
    let f_zzb = f.dh().eval(z0) * f.dg().eval(z0).conj();
    let f_zbzb = hz * f.dg().derivative().eval(z0).conj();
    let (t_zz, t_zzb, t_zbzb) = affine_second_derivatives(f);
    let jac = f.jacobian(z0);
    let combine = |p: Complex64, q: Complex64| (p * fz.conj() - q.conj() * fzb) / jac;
    (
        combine(f_zz - t_zz, f_zbzb - t_zbzb),
        combine(f_zzb - t_zzb, f_zzb - t_zzb),
        combine(f_zbzb - t_zbzb, f_zz - t_zz),
    )
}

/// Jet of `F = T^{-1} o f`: the closed-form antiholomorphic coefficient, the
/// fitted quadratic, and the two candidate readings of the `z^2` term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondOrderJet {
    pub approx: AffineApprox,
    /// `e^{i theta} = h(0) conj(h'(0)) / (h'(0) conj(h(0)))`.
    #[serde(with = "crate::report::complex")]
    pub rotation: Complex64,
    /// `e^{i theta} conj(w'(0)) / (1 - |w(0)|^2)`.
    #[serde(with = "crate::report::complex")]
    pub c02_formula: Complex64,
    /// `P_f(0)`.
    #[serde(with = "crate::report::complex")]
    pub ps_at_origin: Complex64,
    pub fitted: QuadraticFit,
}

impl SecondOrderJet {
    /// Candidate values for the fitted `z^2` coefficient: `P_f(0)` and `P_f(0)/2`.
    pub fn c20_candidates(&self) -> [Complex64; 2] {
        [self.ps_at_origin, self.ps_at_origin * 0.5]
    }
}

pub fn t_second_order_jet(f: &LogharmonicMap) -> Result<SecondOrderJet> {
    t_second_order_jet_with(f, FitConfig::default())
}

pub fn t_second_order_jet_with(f: &LogharmonicMap, cfg: FitConfig) -> Result<SecondOrderJet> {
    let approx = t_affine_approx(f)?;
    let z0 = f.center();
    let h0 = f.h().coeff(0);
    let h1 = f.h().coeff(1);
    let w0 = f.dilatation().coeff(0);
    let dw0 = f.ddilatation().coeff(0);
    let rotation = h0 * h1.conj() / (h1 * h0.conj());
    let c02_formula = rotation * dw0.conj() / (1.0 - w0.norm_sqr());
    let ps_at_origin = ps_logharmonic(f, z0)?.value;
    let fitted = oracle::fit_quadratic(
        |z| Ok(oracle::invert_affine_t(&approx, f.eval(z))? - z0),
        z0,
        cfg,
    )?;
    Ok(SecondOrderJet {
        approx,
        rotation,
        c02_formula,
        ps_at_origin,
        fitted,
    })
}

/// Partner `F = H conj(G)` with `H' G = h' g` and dilatation `lambda w`, so
/// that `P_F = P_f`.
///
/// `H` solves `H''/H' + lambda w H'/H = (h'g)'/(h'g)` order by order with
/// `H(0) = h(0)`, `H'(0) = h'(0)`; then `G = h' g / H'`.
pub fn t_rotation_partner(f: &LogharmonicMap, lambda: Complex64) -> Result<LogharmonicMap> {
    if (lambda.norm() - 1.0).abs() > EPS_ZERO {
        return Err(Error::NotUnimodular { lambda });
    }
    let n = f.order();
    let w = f.dilatation().coeffs();
    let hg = f.dh().mul(f.g())?;
    let q = hg.derivative().div(&hg)?;
    let q = q.coeffs();
    let h0 = f.h().coeff(0);
    if h0.norm() <= EPS_ZERO {
        return Err(Error::RecursionBreakdown { order: 0 });
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut big_h = vec![zero; n + 1];
    big_h[0] = h0;
    big_h[1] = f.h().coeff(1);
    let at = |v: &[Complex64], i: usize| v.get(i).copied().unwrap_or(zero);
    let conv = |a: &[Complex64], b: &[Complex64], m: usize| -> Complex64 {
        (0..=m).map(|j| at(a, j) * at(b, m - j)).sum()
    };
    // H'' H + lambda w H'^2 - Q H' H = 0, coefficient m fixes H_{m+2}
    for m in 0..=n.saturating_sub(2) {
        let dh: Vec<Complex64> = (0..=m).map(|j| big_h[j + 1] * (j + 1) as f64).collect();
        let d2h: Vec<Complex64> = (0..m)
            .map(|j| big_h[j + 2] * ((j + 1) * (j + 2)) as f64)
            .collect();
        let dh_sq: Vec<Complex64> = (0..=m).map(|i| conv(&dh, &dh, i)).collect();
        let dh_h: Vec<Complex64> = (0..=m).map(|i| conv(&dh, &big_h, i)).collect();
        let known = conv(&d2h, &big_h, m) + lambda * conv(w, &dh_sq, m) - conv(q, &dh_h, m);
        let next = -known / (h0 * ((m + 1) * (m + 2)) as f64);
        if !next.is_finite() {
            return Err(Error::RecursionBreakdown { order: m + 2 });
        }
        big_h[m + 2] = next;
    }
    let big_h = TaylorSeries::new(f.center(), big_h)?;
    let big_g = hg.div(&big_h.derivative())?;
    LogharmonicMap::new(big_h, big_g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::compile_str;
    use crate::oracle::invert_affine_t;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn map(h: &str, g: &str) -> LogharmonicMap {
        let o = c(0.0, 0.0);
        LogharmonicMap::new(compile_str(h, o, 32).unwrap(), compile_str(g, o, 32).unwrap()).unwrap()
    }

    fn sample() -> LogharmonicMap {
        map("exp(0.2 + 0.9*z + 0.2*z^2)", "exp(0.1i + 0.2*z - 0.1i*z^2 + 0.05*z^3)")
    }

    #[test]
    fn identity_precomposition() {
        let f = sample();
        let id = TaylorSeries::variable(c(0.0, 0.0), 32);
        let g = t_precompose(&f, &id).unwrap();
        let z = c(0.2, 0.1);
        let a = ps_logharmonic(&f, z).unwrap().value;
        let b = ps_logharmonic(&g, z).unwrap().value;
        assert!((a - b).norm() < 1e-13);
    }

    #[test]
    fn scaled_precomposition() {
        let f = sample();
        let r = c(0.6, 0.3);
        let phi = TaylorSeries::variable(c(0.0, 0.0), 32).scale(r).unwrap();
        let g = t_precompose(&f, &phi).unwrap();
        let z = c(0.3, -0.2);
        let want = r * ps_logharmonic(&f, r * z).unwrap().value;
        assert!((ps_logharmonic(&g, z).unwrap().value - want).norm() < 1e-11);
    }

    #[test]
    fn postcompose_identity_and_errors() {
        let f = sample();
        let same = t_power_postcompose(&f, ONE, c(0.0, 0.0)).unwrap();
        assert!(same.h().max_coeff_diff(f.h()) < 1e-13);
        assert!(same.g().max_coeff_diff(f.g()) < 1e-13);
        assert!(matches!(
            t_power_postcompose(&f, c(0.0, 0.0), ONE),
            Err(Error::ZeroExponent)
        ));
        // |b/a| > 1 flips orientation
        assert!(t_power_postcompose(&f, c(0.5, 0.0), c(2.0, 0.0)).is_err());
    }

    #[test]
    fn shift_law_reductions() {
        let f = sample();
        let z = c(0.1, 0.25);
        let pf = ps_logharmonic(&f, z).unwrap().value;
        let a = c(0.7, 0.2);
        assert!((t_ps_shift_law(&f, a, ONE - a, z).unwrap() - pf).norm() < 1e-14);
        let g1 = map("exp(z+0.2*z^2)", "1");
        let a = c(1.5, 0.0);
        let want = (a - 1.0) * g1.dh().eval(z) / g1.h().eval(z) + ps_logharmonic(&g1, z).unwrap().value;
        assert!((t_ps_shift_law(&g1, a, c(0.0, 0.0), z).unwrap() - want).norm() < 1e-14);
    }

    #[test]
    fn affine_approx_of_analytic_map() {
        let f = map("exp(z)", "1");
        let t = t_affine_approx(&f).unwrap();
        assert!((t.k - 1.0).norm() < 1e-15);
        assert!((t.b - 1.0).norm() < 1e-15);
        assert!((t.a - 1.0).norm() < 1e-15);
        assert_eq!(t.c, c(0.0, 0.0));
        let z = c(0.3, 0.2);
        assert!((t.eval(z) - (1.0 + z)).norm() < 1e-15);
        assert!((invert_affine_t(&t, c(2.0, 0.5)).unwrap() - c(1.0, 0.5)).norm() < 1e-14);
    }

    #[test]
    fn affine_approx_matches_first_order() {
        let f = sample();
        let t = t_affine_approx(&f).unwrap();
        let o = c(0.0, 0.0);
        let d = f.wirtinger(o);
        let (tz, tzb) = t.wirtinger(o);
        assert!((t.eval(o) - f.eval(o)).norm() < 1e-14);
        assert!((tz - d.dz).norm() < 1e-14);
        assert!((tzb - d.dzbar).norm() < 1e-14);
        assert!((t.dilatation() - f.dilatation().coeff(0)).norm() < 1e-15);
        assert!(t.k.re > 0.5 && t.c.norm() < 1.0);
    }

    #[test]
    fn constant_dilatation_has_no_conjugate_jet() {
        let f = map("exp(0.8*z + 0.1*z^2)", "exp(0.2*z + 0.025*z^2)");
        let jet = t_second_order_jet(&f).unwrap();
        assert!(jet.c02_formula.norm() < 1e-14);
        assert!(jet.fitted.c02.norm() < 1e-6);
    }

    #[test]
    fn partner_fixed_point_for_trivial_rotation() {
        let f = sample();
        let p = t_rotation_partner(&f, ONE).unwrap();
        assert!(p.h().max_coeff_diff(f.h()) < 1e-12);
        assert!(p.g().max_coeff_diff(f.g()) < 1e-12);
    }

    #[test]
    fn partner_for_constant_dilatation() {
        // w = 0.25; with lambda = i the partner solves H''/H' + 0.25i H'/H = 1.25
        let f = map("exp(z)", "exp(0.25*z)");
        let lambda = c(0.0, 1.0);
        let p = t_rotation_partner(&f, lambda).unwrap();
        for z in [c(0.0, 0.0), c(0.3, 0.1), c(-0.2, 0.4)] {
            let hz = p.h().eval(z);
            let d1 = p.dh().eval(z);
            let d2 = p.d2h().eval(z);
            let residual = d2 / d1 + lambda * 0.25 * d1 / hz - 1.25;
            assert!(residual.norm() < 1e-11, "{residual}");
            assert!((p.dilatation_at(z) - c(0.0, 0.25)).norm() < 1e-11);
        }
        assert!(matches!(
            t_rotation_partner(&f, c(0.5, 0.0)),
            Err(Error::NotUnimodular { .. })
        ));
    }
}
