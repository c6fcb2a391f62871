//! Property suites. Each [`Check`] records the largest residual of one law
//! over a set of maps and sample points, next to a fixed tolerance.
//!
//! Series-side quantities are always compared against something computed by
//! a different route: finite differences, closed forms, or least-squares fits.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::{disk_point, sample_points};
use crate::criteria::{c_becker_logharmonic, c_rotation_family, GridSpec};
use crate::error::{Error, Result};
use crate::map::LogharmonicMap;
use crate::oracle::{fd_wirtinger, grid_injectivity, FdConfig, InjectivityConfig};
use crate::preschwarzian::{lift_relation, ps_dbar, ps_hg_form, ps_logharmonic, ps_power_reduction};
use crate::series::{TaylorSeries, DEFAULT_ORDER};
use crate::transforms::{
    affine_second_derivatives, chain_rule_rhs, inverse_second_derivatives, postcompose_dilatation,
    t_affine_approx, t_power_postcompose, t_precompose, t_ps_shift_law, t_rotation_partner,
    t_second_order_jet,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub law: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Informational checks are reported but do not decide the suite result.
    pub informational: bool,
    pub samples: usize,
    /// Samples whose evaluation raised an error; any error fails the check.
    pub errors: usize,
    pub note: Option<String>,
}

impl Check {
    fn informational(mut self) -> Self {
        self.informational = true;
        self
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// One-line summary used by test harnesses.
    pub fn line(&self) -> String {
        format!(
            "{} {}: max residual {:.3e} (tolerance {:.1e}, {} samples, {} errors){}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.max_residual,
            self.tolerance,
            self.samples,
            self.errors,
            self.note.as_deref().map(|n| format!(" [{n}]")).unwrap_or_default(),
        )
    }
}

/// Running maximum of residuals; the first error is kept for the note.
#[derive(Debug, Default)]
struct Acc {
    max: f64,
    samples: usize,
    errors: usize,
    first_error: Option<String>,
}

impl Acc {
    fn push(&mut self, r: Result<f64>) {
        self.samples += 1;
        match r {
            Ok(v) if v.is_finite() => self.max = self.max.max(v),
            Ok(_) => self.record_error("non-finite residual".into()),
            Err(e) => self.record_error(e.to_string()),
        }
    }

    fn record_error(&mut self, msg: String) {
        self.errors += 1;
        self.first_error.get_or_insert(msg);
    }

    fn finish(self, name: &str, law: &str, tolerance: f64) -> Check {
        Check {
            name: name.into(),
            law: law.into(),
            max_residual: self.max,
            tolerance,
            pass: self.errors == 0 && self.max < tolerance,
            informational: false,
            samples: self.samples,
            errors: self.errors,
            note: self.first_error,
        }
    }
}

/// `d/dz log J_f` by central differences.
pub fn fd_log_jacobian_dz(f: &LogharmonicMap, z: Complex64) -> Result<Complex64> {
    let field = |u: Complex64| Ok(Complex64::new(f.jacobian(u).ln(), 0.0));
    Ok(fd_wirtinger(field, z, FdConfig::default())?.0)
}

/// `d/dzbar P_f` by central differences.
pub fn fd_ps_dzbar(f: &LogharmonicMap, z: Complex64) -> Result<Complex64> {
    let field = |u: Complex64| Ok(ps_logharmonic(f, u)?.value);
    Ok(fd_wirtinger(field, z, FdConfig::default())?.1)
}

pub fn jacobian_log(maps: &[LogharmonicMap], rng: &mut ChaCha8Rng, points: usize) -> Check {
    let mut acc = Acc::default();
    for f in maps {
        for z in sample_points(rng, f, points) {
            acc.push((|| Ok((ps_logharmonic(f, z)?.value - fd_log_jacobian_dz(f, z)?).norm()))());
        }
    }
    acc.finish("jacobian_log", "P_f = d/dz log J_f", 1e-5)
}

/// The antiholomorphic derivative of `P_f` against `|w'|^2/(1-|w|^2)^2`
/// with a plus sign (`stated`) and with a minus sign (`signed`).
pub fn dbar_identity(maps: &[LogharmonicMap], rng: &mut ChaCha8Rng, points: usize) -> [Check; 2] {
    let mut plus = Acc::default();
    let mut minus = Acc::default();
    for f in maps {
        for z in sample_points(rng, f, points) {
            match fd_ps_dzbar(f, z).and_then(|d| Ok((d, ps_dbar(f, z)?))) {
                Ok((d, q)) => {
                    plus.push(Ok((d - q).norm()));
                    minus.push(Ok((d + q).norm()));
                }
                Err(e) => {
                    plus.push(Err(e.clone()));
                    minus.push(Err(e));
                }
            }
        }
    }
    [
        plus.finish("dbar_stated", "d/dzbar P_f = +|w'|^2/(1-|w|^2)^2", 1e-5),
        minus.finish("dbar_signed", "d/dzbar P_f = -|w'|^2/(1-|w|^2)^2", 1e-5),
    ]
}

pub fn hg_form(maps: &[LogharmonicMap], rng: &mut ChaCha8Rng, points: usize) -> Check {
    let mut acc = Acc::default();
    for f in maps {
        for z in sample_points(rng, f, points) {
            acc.push((|| Ok((ps_hg_form(f, z)? - ps_logharmonic(f, z)?.value).norm()))());
        }
    }
    acc.finish(
        "hg_form",
        "P_f = (h''g + h'g')/(h'g) - w' conj(w)/(1-|w|^2)",
        1e-10,
    )
}

/// Closed-form Wirtinger derivatives against finite differences, plus the
/// residual of the defining equation `conj(f_zbar) = w conj(f)/f f_z`.
pub fn wirtinger_fd(maps: &[LogharmonicMap], rng: &mut ChaCha8Rng, points: usize) -> [Check; 2] {
    let mut fd = Acc::default();
    let mut pde = Acc::default();
    for f in maps {
        for z in sample_points(rng, f, points) {
            fd.push((|| {
                let (dz, dzbar) = fd_wirtinger(|u| Ok(f.eval(u)), z, FdConfig::default())?;
                let w = f.wirtinger(z);
                Ok((dz - w.dz).norm().max((dzbar - w.dzbar).norm()))
            })());
            pde.push(Ok(f.pde_residual(z)));
        }
    }
    [
        fd.finish("wirtinger_fd", "f_z = h' conj(g), f_zbar = h conj(g')", 1e-5),
        pde.finish("defining_equation", "conj(f_zbar) = w conj(f)/f f_z", 1e-10),
    ]
}

pub fn power_reduction(maps: &[LogharmonicMap], rng: &mut ChaCha8Rng, per_map: usize) -> Check {
    let mut acc = Acc::default();
    for f in maps {
        for z in sample_points(rng, f, per_map) {
            acc.push((|| Ok((ps_power_reduction(f, z)?.value - ps_logharmonic(f, z)?.value).norm()))());
        }
    }
    acc.finish(
        "power_reduction",
        "P_f(z0) = P(h^a g^b)(z0), a = (1+w0)/(1-|w0|^2), b = -conj(w0) a",
        1e-10,
    )
}

pub fn lift_relation_check(maps: &[LogharmonicMap], rng: &mut ChaCha8Rng, points: usize) -> [Check; 2] {
    let mut plus = Acc::default();
    let mut minus = Acc::default();
    for f in maps {
        let lift = match f.log_lift() {
            Ok(l) => l,
            Err(e) => {
                plus.push(Err(e.clone()));
                minus.push(Err(e));
                continue;
            }
        };
        for z in sample_points(rng, f, points) {
            match lift_relation(f, &lift, z) {
                Ok(r) => {
                    plus.push(Ok(r.plus_residual));
                    minus.push(Ok(r.minus_residual));
                }
                Err(e) => {
                    plus.push(Err(e.clone()));
                    minus.push(Err(e));
                }
            }
        }
    }
    [
        plus.finish("log_lift_plus", "P_(log f) = P_f - (1+w) h'/h", 1e-10),
        minus
            .finish("log_lift_minus", "P_(log f) = P_f - (1-w) h'/h", 1e-10)
            .informational(),
    ]
}

/// `f = z^a conj(z^b)` expanded at 1 has `P_f = (a+b-1)/z`.
pub fn power_example(rng: &mut ChaCha8Rng, pairs: usize, points: usize) -> Check {
    let center = ONE;
    let mut acc = Acc::default();
    for _ in 0..pairs {
        let a = Complex64::new(rng.gen_range(0.5..1.5), rng.gen_range(-0.5..0.5));
        let b = a * disk_point(rng, 0.9);
        let z = TaylorSeries::variable(center, DEFAULT_ORDER);
        let f = z.pow(a).and_then(|h| LogharmonicMap::new(h, z.pow(b)?));
        let f = match f {
            Ok(f) => f,
            Err(e) => {
                acc.push(Err(e));
                continue;
            }
        };
        let mut taken = 0;
        while taken < points {
            // annulus 0.7 < |z| < 1.3, kept near 1 where the expansion converges fast
            let p = center + disk_point(rng, 0.3);
            if !(0.7..1.3).contains(&p.norm()) {
                continue;
            }
            taken += 1;
            acc.push((|| Ok((ps_logharmonic(&f, p)?.value - (a + b - 1.0) / p).norm()))());
        }
    }
    acc.finish("power_example", "f = z^a conj(z^b): P_f = (a+b-1)/z", 1e-10)
}

/// `h = (1+z)^k`, `g = (1+z)^(1-k)` has `P_f = 0`.
pub fn affine_family(rng: &mut ChaCha8Rng, count: usize) -> Check {
    let mut acc = Acc::default();
    for _ in 0..count {
        let k = Complex64::new(rng.gen_range(0.6..1.5), rng.gen_range(-0.5..0.5));
        let base = TaylorSeries::variable(ZERO, DEFAULT_ORDER).shift(ONE);
        let f = base
            .pow(k)
            .and_then(|h| LogharmonicMap::new(h, base.pow(ONE - k)?));
        match f {
            Ok(f) => {
                for z in f.eval_grid() {
                    acc.push(ps_logharmonic(&f, z).map(|p| p.value.norm()));
                }
            }
            Err(e) => acc.push(Err(e)),
        }
    }
    acc.finish("affine_family", "h = (1+z)^k, g = (1+z)^(1-k): P_f = 0", 1e-9)
}

fn random_phi(rng: &mut ChaCha8Rng) -> TaylorSeries {
    let mut coeffs = vec![ZERO; DEFAULT_ORDER + 1];
    coeffs[0] = disk_point(rng, 0.05);
    coeffs[1] = Complex64::from_polar(rng.gen_range(0.5..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
    coeffs[2] = disk_point(rng, 0.2);
    coeffs[3] = disk_point(rng, 0.1);
    TaylorSeries::new(ZERO, coeffs).expect("finite coefficients")
}

pub fn chain_rule(maps: &[LogharmonicMap], rng: &mut ChaCha8Rng, per_map: usize, points: usize) -> Check {
    let mut acc = Acc::default();
    for f in maps {
        for _ in 0..per_map {
            let phi = random_phi(rng);
            let composed = match t_precompose(f, &phi) {
                Ok(c) => c,
                Err(e) => {
                    acc.push(Err(e));
                    continue;
                }
            };
            for _ in 0..points {
                let z = disk_point(rng, 0.2);
                acc.push((|| Ok((ps_logharmonic(&composed, z)?.value - chain_rule_rhs(f, &phi, z)?).norm()))());
            }
        }
    }
    acc.finish("chain_rule", "P_(f o phi) = (P_f o phi) phi' + P phi", 1e-9)
}

fn random_exponent(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(0.6..1.5), rng.gen_range(-0.4..0.4))
}

/// Post-composition with `w^a conj(w^b)`: invariance on `a + b = 1`, the shift
/// law off that line, and the closed-form dilatation.
pub fn postcomposition(maps: &[LogharmonicMap], rng: &mut ChaCha8Rng, count: usize) -> [Check; 3] {
    let mut invariance = Acc::default();
    let mut shift = Acc::default();
    let mut dilatation = Acc::default();
    for i in 0..count {
        let f = &maps[i % maps.len()];
        let a = random_exponent(rng);
        let on_line = ONE - a;
        let off_line = disk_point(rng, 0.3);
        for (b, acc) in [(on_line, &mut invariance), (off_line, &mut shift)] {
            let lf = match t_power_postcompose(f, a, b) {
                Ok(m) => m,
                Err(e) => {
                    acc.push(Err(e));
                    continue;
                }
            };
            for z in f.eval_grid() {
                acc.push((|| Ok((ps_logharmonic(&lf, z)?.value - t_ps_shift_law(f, a, b, z)?).norm()))());
            }
            dilatation.push(postcompose_dilatation(f, a, b).map(|w| {
                let n = w.order().min(lf.order());
                w.truncate(n).max_coeff_diff(&lf.dilatation().truncate(n))
            }));
        }
    }
    [
        invariance.finish("postcompose_invariance", "a + b = 1: P_(L o f) = P_f", 1e-9),
        shift.finish(
            "postcompose_shift",
            "P_(L o f) = (a+b-1) h'/h + conj(a+b-1) g'/g + P_f",
            1e-9,
        ),
        dilatation.finish(
            "postcompose_dilatation",
            "w_(L o f) = (conj(a)/a)(w + e)/(1 + conj(e) w), e = b/conj(a)",
            1e-10,
        ),
    ]
}

/// Rotation partners: dilatation `lambda w` coefficientwise and the same
/// pre-Schwarzian on the evaluation grid.
pub fn rotation_partner(maps: &[LogharmonicMap], lambdas: &[Complex64]) -> [Check; 2] {
    let mut dil = Acc::default();
    let mut ps = Acc::default();
    for f in maps {
        for &lambda in lambdas {
            let p = match t_rotation_partner(f, lambda) {
                Ok(p) => p,
                Err(e) => {
                    dil.push(Err(e.clone()));
                    ps.push(Err(e));
                    continue;
                }
            };
            let n = p.order().min(f.order());
            let want = f.dilatation().truncate(n).scale(lambda);
            dil.push(want.map(|w| w.max_coeff_diff(&p.dilatation().truncate(n))));
            for z in f.eval_grid() {
                ps.push((|| Ok((ps_logharmonic(&p, z)?.value - ps_logharmonic(f, z)?.value).norm()))());
            }
        }
    }
    [
        dil.finish("partner_dilatation", "w_F = lambda w_f", 1e-9),
        ps.finish("partner_preschwarzian", "P_F = P_f", 1e-8),
    ]
}

/// `T` matches `f`, `f_z`, `f_zbar` at the center.
pub fn affine_first_order(maps: &[LogharmonicMap]) -> Check {
    let mut acc = Acc::default();
    for f in maps {
        acc.push((|| {
            let t = t_affine_approx(f)?;
            let z0 = f.center();
            let d = f.wirtinger(z0);
            let (tz, tzb) = t.wirtinger(z0);
            Ok([t.eval(z0) - f.eval(z0), tz - d.dz, tzb - d.dzbar]
                .iter()
                .map(|e| e.norm())
                .fold(0.0, f64::max))
        })());
    }
    acc.finish("affine_first_order", "T = f, T_z = f_z, T_zbar = f_zbar at the center", 1e-10)
}

/// Second derivatives of `T` at the center by finite differences of its
/// closed-form Wirtinger derivatives.
pub fn affine_second_order(maps: &[LogharmonicMap]) -> Check {
    let mut acc = Acc::default();
    for f in maps {
        acc.push((|| {
            let t = t_affine_approx(f)?;
            let z0 = f.center();
            let (tzz, tzzb) = fd_wirtinger(|u| Ok(t.wirtinger(u).0), z0, FdConfig::default())?;
            let (_, tzbzb) = fd_wirtinger(|u| Ok(t.wirtinger(u).1), z0, FdConfig::default())?;
            let (a, b, c) = affine_second_derivatives(f);
            Ok((tzz - a).norm().max((tzzb - b).norm()).max((tzbzb - c).norm()))
        })());
    }
    acc.finish(
        "affine_second_order",
        "T_zz = -w0 f_z^2/f, T_zzbar = f_z f_zbar/f, T_zbarzbar = -conj(f_z) f_zbar/conj(f)",
        1e-5,
    )
}

/// Jet of `F = T^{-1} o f` fitted on two small rings.
///
/// The fitted `z^2` coefficient is compared with `P_f(0)` and `P_f(0)/2`;
/// whichever matches fixes the scale (1 or 1/2) with which the closed-form
/// `conj(z)^2` coefficient is compared. The unscaled comparison is reported
/// separately as informational.
pub fn jets(maps: &[LogharmonicMap]) -> [Check; 6] {
    let mut linear = Acc::default();
    let mut c02 = Acc::default();
    let mut c02_literal = Acc::default();
    let mut c11 = Acc::default();
    let mut second = Acc::default();
    let mut c20 = Acc::default();
    let mut votes = [0usize; 2];
    for f in maps {
        let jet = match t_second_order_jet(f) {
            Ok(j) => j,
            Err(e) => {
                for acc in [&mut linear, &mut c02, &mut c02_literal, &mut c11, &mut second, &mut c20] {
                    acc.push(Err(e.clone()));
                }
                continue;
            }
        };
        let fit = jet.fitted;
        let dist = jet.c20_candidates().map(|c| (fit.c20 - c).norm());
        let best = usize::from(dist[1] < dist[0]);
        let scale = [1.0, 0.5][best];
        votes[best] += 1;
        c20.push(Ok(dist[best]));
        linear.push(Ok((fit.c10 - 1.0).norm().max(fit.c01.norm())));
        c02.push(Ok((fit.c02 - jet.c02_formula * scale).norm()));
        c02_literal.push(Ok((fit.c02 - jet.c02_formula).norm()));
        c11.push(Ok(fit.c11.norm()));
        let (fzz, fzzb, fzbzb) = inverse_second_derivatives(f);
        second.push(Ok((2.0 * fit.c20 - fzz)
            .norm()
            .max((fit.c11 - fzzb).norm())
            .max((2.0 * fit.c02 - fzbzb).norm())));
    }
    let convention = match votes {
        [n, 0] if n > 0 => "c20 = P_f(0) on every map".to_string(),
        [0, n] if n > 0 => "c20 = P_f(0)/2 on every map".to_string(),
        [p, q] => format!("c20 = P_f(0) on {p} maps, P_f(0)/2 on {q} maps"),
    };
    [
        linear.finish("jet_linear", "F = z + O(|z|^2): c10 = 1, c01 = 0", 1e-7),
        c20.finish("jet_c20", "c20 in {P_f(0), P_f(0)/2}", 1e-6)
            .informational()
            .with_note(convention),
        c02.finish(
            "jet_c02",
            "c02 = s e^{i theta} conj(w'(0)) / (1 - |w(0)|^2), s = c20 / P_f(0)",
            1e-6,
        ),
        c02_literal
            .finish(
                "jet_c02_unscaled",
                "c02 = e^{i theta} conj(w'(0)) / (1 - |w(0)|^2)",
                1e-6,
            )
            .informational(),
        c11.finish("jet_c11", "c11 = 0", 1e-6),
        second.finish(
            "jet_second_derivatives",
            "(F_zz, F_zzbar, F_zbarzbar) = fitted (2 c20, c11, 2 c02)",
            1e-5,
        ),
    ]
}

/// Becker sups over the family `h conj(g^lambda)`, and over the harmonic
/// lifts of that family, for the 8th roots of unity.
pub fn lambda_stability(maps: &[LogharmonicMap], grid: &GridSpec) -> [Check; 2] {
    let lambdas: Vec<Complex64> = (0..8)
        .map(|j| Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / 8.0))
        .collect();
    let mut direct = Acc::default();
    let mut lifted = Acc::default();
    for f in maps {
        match c_rotation_family(f, &lambdas, grid) {
            Ok(r) => {
                direct.push(Ok(r.logharmonic_spread()));
                lifted.push(Ok(r.lift_spread()));
            }
            Err(e) => {
                direct.push(Err(e.clone()));
                lifted.push(Err(e));
            }
        }
    }
    [
        direct.finish(
            "lambda_stability",
            "Becker sup of h conj(g^lambda) independent of |lambda| = 1",
            1e-12,
        ),
        lifted
            .finish(
                "lambda_stability_lift",
                "Becker sup of log h + conj(lambda log g) independent of |lambda| = 1",
                1e-12,
            )
            .informational(),
    ]
}

/// Collisions found on `scan` for every map whose Becker check passes on `grid`.
pub fn soundness(maps: &[LogharmonicMap], grid: &GridSpec, scan: &GridSpec) -> Check {
    let mut acc = Acc::default();
    let mut passing = 0;
    for f in maps {
        if c_becker_logharmonic(f, grid).passed {
            passing += 1;
            let hits = grid_injectivity(f, scan, InjectivityConfig::default());
            acc.push(Ok(hits.len() as f64));
        }
    }
    acc.finish("soundness", "Becker check passes => no grid collisions", 0.5)
        .with_note(format!("{passing} of {} maps pass the Becker check", maps.len()))
}

/// Runs every check of `suite` over `maps`.
pub fn run_suite(suite: Suite, maps: &[LogharmonicMap], rng: &mut ChaCha8Rng) -> Vec<Check> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Identities | Suite::All) {
        out.push(jacobian_log(maps, rng, 10));
        let [stated, signed] = dbar_identity(maps, rng, 10);
        out.push(signed);
        out.push(stated.informational());
        out.push(hg_form(maps, rng, 10));
        out.extend(wirtinger_fd(maps, rng, 10));
        out.push(power_reduction(maps, rng, 5));
        out.extend(lift_relation_check(maps, rng, 10));
    }
    if matches!(suite, Suite::Transforms | Suite::All) {
        out.push(power_example(rng, 5, 10));
        out.push(affine_family(rng, 5));
        out.push(chain_rule(maps, rng, 2, 5));
        out.extend(postcomposition(maps, rng, maps.len().max(10)));
        let i = Complex64::i();
        out.extend(rotation_partner(maps, &[i, -ONE, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]));
    }
    if matches!(suite, Suite::Jets | Suite::All) {
        out.push(affine_first_order(maps));
        out.push(affine_second_order(maps));
        out.extend(jets(maps));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Identities,
    Transforms,
    Jets,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identities" => Ok(Self::Identities),
            "transforms" => Ok(Self::Transforms),
            "jets" => Ok(Self::Jets),
            "all" => Ok(Self::All),
            other => Err(Error::Config(format!("unknown suite {other:?}"))),
        }
    }
}
