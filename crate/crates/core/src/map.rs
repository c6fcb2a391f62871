//! Logharmonic maps `f = h * conj(g)` with `h`, `g` analytic and nonvanishing.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::{same_point, TaylorSeries, EPS_ZERO};

/// Default number of radii and angles of [`LogharmonicMap::eval_grid`].
pub const EVAL_GRID_RADII: usize = 32;
pub const EVAL_GRID_ANGLES: usize = 64;

#[derive(Debug, Default)]
struct Derived {
    dh: OnceLock<TaylorSeries>,
    d2h: OnceLock<TaylorSeries>,
    dg: OnceLock<TaylorSeries>,
    d2g: OnceLock<TaylorSeries>,
    omega: OnceLock<TaylorSeries>,
    domega: OnceLock<TaylorSeries>,
}

/// `f = h * conj(g)`. Derivative and dilatation series are computed lazily
/// and cached; the map itself never changes after construction.
#[derive(Debug)]
pub struct LogharmonicMap {
    h: TaylorSeries,
    g: TaylorSeries,
    cache: Derived,
}

impl Clone for LogharmonicMap {
    fn clone(&self) -> Self {
        Self::from_parts(self.h.clone(), self.g.clone())
    }
}

/// Both Wirtinger derivatives of a map at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wirtinger {
    pub dz: Complex64,
    pub dzbar: Complex64,
}

impl LogharmonicMap {
    /// Validates the representation at the center: `h`, `g` nonvanishing,
    /// `h'` nonvanishing and `|w| < 1`. Orders are truncated to the smaller one.
    pub fn new(h: TaylorSeries, g: TaylorSeries) -> Result<Self> {
        if !same_point(h.center(), g.center()) {
            return Err(Error::CenterMismatch {
                left: h.center(),
                right: g.center(),
            });
        }
        let order = h.order().min(g.order());
        if order < 2 {
            return Err(Error::InvalidOrder {
                order,
                min: 2,
                max: usize::MAX,
            });
        }
        let map = Self::from_parts(h.truncate(order), g.truncate(order));
        let c = map.center();
        for s in [&map.h, &map.g] {
            if s.coeff(0).norm() <= EPS_ZERO {
                return Err(Error::ZeroConstantTerm {
                    modulus: s.coeff(0).norm(),
                    span: None,
                });
            }
        }
        if map.h.coeff(1).norm() <= EPS_ZERO {
            return Err(Error::CriticalPoint { z: c });
        }
        let w0 = map.dilatation().coeff(0).norm();
        if w0 >= 1.0 {
            return Err(Error::DegenerateDilatation { z: c, modulus: w0 });
        }
        Ok(map)
    }

    pub(crate) fn from_parts(h: TaylorSeries, g: TaylorSeries) -> Self {
        Self {
            h,
            g,
            cache: Derived::default(),
        }
    }

    pub fn h(&self) -> &TaylorSeries {
        &self.h
    }

    pub fn g(&self) -> &TaylorSeries {
        &self.g
    }

    pub fn center(&self) -> Complex64 {
        self.h.center()
    }

    pub fn order(&self) -> usize {
        self.h.order()
    }

    pub fn dh(&self) -> &TaylorSeries {
        self.cache.dh.get_or_init(|| self.h.derivative())
    }

    pub fn d2h(&self) -> &TaylorSeries {
        self.cache.d2h.get_or_init(|| self.dh().derivative())
    }

    pub fn dg(&self) -> &TaylorSeries {
        self.cache.dg.get_or_init(|| self.g.derivative())
    }

    pub fn d2g(&self) -> &TaylorSeries {
        self.cache.d2g.get_or_init(|| self.dg().derivative())
    }

    /// Second complex dilatation `w = g' h / (g h')` as a series of order N-1.
    ///
    /// Construction guarantees `h'(center) != 0` and `g(center) != 0`, so the
    /// division cannot fail for a validated map.
    pub fn dilatation(&self) -> &TaylorSeries {
        self.cache.omega.get_or_init(|| {
            let num = self.dg().mul(&self.h).expect("same center");
            let den = self.g.mul(self.dh()).expect("same center");
            num.div(&den)
                .unwrap_or_else(|_| TaylorSeries::constant(Complex64::new(f64::NAN, 0.0), self.center(), 0))
        })
    }

    pub fn ddilatation(&self) -> &TaylorSeries {
        self.cache.domega.get_or_init(|| self.dilatation().derivative())
    }

    /// Trust radius of the map: the smallest hint among `h`, `g` and `w`.
    pub fn trust_radius(&self) -> f64 {
        self.h
            .radius_hint()
            .min(self.g.radius_hint())
            .min(self.dilatation().radius_hint())
    }

    /// True when `z` lies outside the trust radius (evaluation still happens).
    pub fn outside_trust(&self, z: Complex64) -> bool {
        (z - self.center()).norm() > self.trust_radius()
    }

    /// Polar grid centered at the map's center: `n_radii` radii uniform in
    /// `[0, 0.8 * min(trust radius, 1)]` times `n_angles` angles. The origin
    /// appears once.
    pub fn eval_grid_with(&self, n_radii: usize, n_angles: usize) -> Vec<Complex64> {
        let r_max = 0.8 * self.trust_radius().min(1.0);
        polar_points(self.center(), r_max, n_radii, n_angles)
    }

    pub fn eval_grid(&self) -> Vec<Complex64> {
        self.eval_grid_with(EVAL_GRID_RADII, EVAL_GRID_ANGLES)
    }

    /// `f(z) = h(z) * conj(g(z))`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.h.eval(z) * self.g.eval(z).conj()
    }

    /// `w(z)` evaluated as the quotient `g'(z) h(z) / (g(z) h'(z))`.
    ///
    /// The quotient only needs `h` and `g` to be resolved at `z`, while the
    /// series of `w` also feels the zeros of `h'` and of `g`.
    pub fn dilatation_at(&self, z: Complex64) -> Complex64 {
        self.dg().eval(z) * self.h.eval(z) / (self.g.eval(z) * self.dh().eval(z))
    }

    /// `w'(z)` by the quotient rule on `g' h / (g h')`.
    pub fn ddilatation_at(&self, z: Complex64) -> Complex64 {
        let (h, dh, d2h) = (self.h.eval(z), self.dh().eval(z), self.d2h().eval(z));
        let (g, dg, d2g) = (self.g.eval(z), self.dg().eval(z), self.d2g().eval(z));
        let num = dg * h;
        let den = g * dh;
        let dnum = d2g * h + dg * dh;
        let dden = dg * dh + g * d2h;
        (dnum * den - num * dden) / (den * den)
    }

    /// `f_z = h' conj(g)` and `f_zbar = h conj(g')`.
    pub fn wirtinger(&self, z: Complex64) -> Wirtinger {
        Wirtinger {
            dz: self.dh().eval(z) * self.g.eval(z).conj(),
            dzbar: self.h.eval(z) * self.dg().eval(z).conj(),
        }
    }

    /// `J_f = |f_z|^2 (1 - |w|^2)`.
    pub fn jacobian(&self, z: Complex64) -> f64 {
        let fz = self.wirtinger(z).dz;
        fz.norm_sqr() * (1.0 - self.dilatation_at(z).norm_sqr())
    }

    /// `|conj(f_zbar) - w conj(f)/f f_z|`, the residual of the defining equation.
    pub fn pde_residual(&self, z: Complex64) -> f64 {
        let d = self.wirtinger(z);
        let f = self.eval(z);
        let w = self.dilatation_at(z);
        (d.dzbar.conj() - w * (f.conj() / f) * d.dz).norm()
    }

    /// `h * conj(g^lambda)`; its dilatation is `lambda * w`.
    pub fn rotate_dilatation(&self, lambda: Complex64) -> Result<Self> {
        if (lambda.norm() - 1.0).abs() > EPS_ZERO {
            return Err(Error::NotUnimodular { lambda });
        }
        Self::new(self.h.clone(), self.g.pow(lambda)?)
    }

    /// `log f = log h + conj(log g)`, a harmonic map.
    pub fn log_lift(&self) -> Result<HarmonicLift> {
        Ok(HarmonicLift::new(self.h.log()?, self.g.log()?))
    }

    /// The same map re-expanded around `new_center`.
    pub fn recentered(&self, new_center: Complex64) -> Result<Self> {
        Self::new(self.h.recenter(new_center)?, self.g.recenter(new_center)?)
    }
}

/// Harmonic map `F = H + conj(G)`, typically the logarithm of a logharmonic map.
#[derive(Debug, Clone)]
pub struct HarmonicLift {
    big_h: TaylorSeries,
    big_g: TaylorSeries,
    dh: TaylorSeries,
    d2h: TaylorSeries,
    dg: TaylorSeries,
    d2g: TaylorSeries,
    omega: OnceLock<Result<TaylorSeries>>,
}

impl HarmonicLift {
    pub fn new(big_h: TaylorSeries, big_g: TaylorSeries) -> Self {
        let dh = big_h.derivative();
        let d2h = dh.derivative();
        let dg = big_g.derivative();
        let d2g = dg.derivative();
        Self {
            big_h,
            big_g,
            dh,
            d2h,
            dg,
            d2g,
            omega: OnceLock::new(),
        }
    }

    pub fn analytic(&self) -> &TaylorSeries {
        &self.big_h
    }

    pub fn co_analytic(&self) -> &TaylorSeries {
        &self.big_g
    }

    pub(crate) fn dh(&self) -> &TaylorSeries {
        &self.dh
    }

    pub(crate) fn d2h(&self) -> &TaylorSeries {
        &self.d2h
    }

    /// `w_F = G' / H'`.
    pub fn dilatation(&self) -> Result<&TaylorSeries> {
        self.omega
            .get_or_init(|| self.dg.div(&self.dh))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `G'(z) / H'(z)`.
    pub fn dilatation_at(&self, z: Complex64) -> Complex64 {
        self.dg.eval(z) / self.dh.eval(z)
    }

    /// `(G'' H' - G' H'') / H'^2` at `z`.
    pub fn ddilatation_at(&self, z: Complex64) -> Complex64 {
        let dh = self.dh.eval(z);
        (self.d2g.eval(z) * dh - self.dg.eval(z) * self.d2h.eval(z)) / (dh * dh)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.big_h.eval(z) + self.big_g.eval(z).conj()
    }

    /// `exp(H) * conj(exp(G))`.
    pub fn exp_eval(&self, z: Complex64) -> Complex64 {
        self.big_h.eval(z).exp() * self.big_g.eval(z).exp().conj()
    }
}

/// Polar grid around `center`; radius `r_max * i / (n_radii - 1)`, the
/// origin once, then angles `2 pi j / n_angles` on every positive radius.
pub(crate) fn polar_points(
    center: Complex64,
    r_max: f64,
    n_radii: usize,
    n_angles: usize,
) -> Vec<Complex64> {
    let mut pts = Vec::with_capacity(n_radii * n_angles);
    if n_radii == 0 || n_angles == 0 {
        return pts;
    }
    if n_radii == 1 {
        for j in 0..n_angles {
            pts.push(center + Complex64::from_polar(r_max, angle(j, n_angles)));
        }
        return pts;
    }
    pts.push(center);
    for i in 1..n_radii {
        let r = r_max * i as f64 / (n_radii - 1) as f64;
        for j in 0..n_angles {
            pts.push(center + Complex64::from_polar(r, angle(j, n_angles)));
        }
    }
    pts
}

fn angle(j: usize, n: usize) -> f64 {
    2.0 * std::f64::consts::PI * j as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::compile_str;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn map(h: &str, g: &str, center: Complex64) -> LogharmonicMap {
        LogharmonicMap::new(
            compile_str(h, center, 32).unwrap(),
            compile_str(g, center, 32).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let f = map("1+z", "1", c(0.0, 0.0));
        assert!((f.eval(c(0.0, 1.0)) - c(1.0, 1.0)).norm() < 1e-15);
        let f = map("exp(z)", "exp(0.3*z)", c(0.0, 0.0));
        let v = f.eval(c(1.0, 0.0));
        assert!((v - c(1.3f64.exp(), 0.0)).norm() < 1e-12);
        let f = map("z^2", "z^0.5", c(1.0, 0.0));
        assert!((f.eval(c(1.0, 0.0)) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn dilatation_examples() {
        let f = map("exp(z)", "exp(0.3*z)", c(0.0, 0.0));
        let w = f.dilatation();
        assert!((w.coeff(0) - c(0.3, 0.0)).norm() < 1e-15);
        assert!(w.coeffs()[1..].iter().all(|x| x.norm() < 1e-14));
        let f = map("(1+z)^0.8", "(1+z)^0.2", c(0.0, 0.0));
        let w = f.dilatation();
        assert!((w.coeff(0) - c(0.25, 0.0)).norm() < 1e-14);
        assert!(w.coeffs()[1..].iter().all(|x| x.norm() < 1e-12));
        let f = map("1+z", "1", c(0.0, 0.0));
        assert!(f.dilatation().coeffs().iter().all(|x| *x == c(0.0, 0.0)));
    }

    #[test]
    fn wirtinger_and_jacobian() {
        let f = map("1+z", "1", c(0.0, 0.0));
        let d = f.wirtinger(c(0.0, 0.0));
        assert_eq!((d.dz, d.dzbar), (c(1.0, 0.0), c(0.0, 0.0)));
        assert_eq!(f.jacobian(c(0.0, 0.0)), 1.0);
        let f = map("exp(z)", "exp(0.3*z)", c(0.0, 0.0));
        assert!((f.jacobian(c(0.0, 0.0)) - 0.91).abs() < 1e-14);
    }

    #[test]
    fn constructor_rejects_bad_representations() {
        let o = c(0.0, 0.0);
        let s = |t: &str| compile_str(t, o, 8).unwrap();
        assert!(matches!(LogharmonicMap::new(s("z"), s("1")), Err(Error::ZeroConstantTerm { .. })));
        assert!(matches!(LogharmonicMap::new(s("1+z^2"), s("1")), Err(Error::CriticalPoint { .. })));
        assert!(matches!(
            LogharmonicMap::new(s("exp(z)"), s("exp(2*z)")),
            Err(Error::DegenerateDilatation { .. })
        ));
        let shifted = compile_str("1", c(1.0, 0.0), 8).unwrap();
        assert!(matches!(LogharmonicMap::new(s("exp(z)"), shifted), Err(Error::CenterMismatch { .. })));
    }

    #[test]
    fn rotation_scales_dilatation() {
        let f = map("exp(z)", "exp(0.3*z)", c(0.0, 0.0));
        let r = f.rotate_dilatation(c(0.0, 1.0)).unwrap();
        assert!((r.dilatation().coeff(0) - c(0.0, 0.3)).norm() < 1e-14);
        let same = f.rotate_dilatation(c(1.0, 0.0)).unwrap();
        assert!(same.g().max_coeff_diff(f.g()) < 1e-14);
        assert!(matches!(
            f.rotate_dilatation(c(1.1, 0.0)),
            Err(Error::NotUnimodular { .. })
        ));
    }

    #[test]
    fn lift_of_exponential() {
        let f = map("exp(z)", "1", c(0.0, 0.0));
        let lift = f.log_lift().unwrap();
        assert!((lift.analytic().coeff(1) - c(1.0, 0.0)).norm() < 1e-15);
        assert!(lift.analytic().coeff(0).norm() < 1e-15);
        assert!(lift.co_analytic().coeffs().iter().all(|x| x.norm() < 1e-15));
    }

    #[test]
    fn grid_shape() {
        let pts = polar_points(c(0.0, 0.0), 0.5, 4, 8);
        assert_eq!(pts.len(), 1 + 3 * 8);
        assert!((pts.last().unwrap().norm() - 0.5).abs() < 1e-15);
    }
}
