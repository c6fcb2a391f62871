//! Truncated complex Taylor series.
//!
//! A [`TaylorSeries`] stores the coefficients of `sum c_n (z - center)^n` for
//! `n = 0..=order`. Everything downstream (maps, dilatations, pre-Schwarzians,
//! partner constructions) is evaluated through this type.
//!
//! Binary operations require matching centers and truncate to the smaller
//! order. Logarithms and non-integer powers use the principal branch at the
//! center; the expansion then follows that branch continuously through its
//! disk, which may differ from the pointwise principal value once the
//! argument crosses the negative real axis.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 32;

/// Threshold below which a constant term counts as vanishing.
pub const EPS_ZERO: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub(crate) fn same_point(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= EPS_ZERO * a.norm().max(b.norm()).max(1.0)
}

#[derive(Clone, PartialEq)]
pub struct TaylorSeries {
    center: Complex64,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for TaylorSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TaylorSeries")
            .field("center", &self.center)
            .field("order", &self.order())
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl TaylorSeries {
    /// Builds a series from explicit coefficients; `coeffs[n]` multiplies
    /// `(z - center)^n`. Rejects empty or non-finite input.
    pub fn new(center: Complex64, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Config("series needs at least one coefficient".into()));
        }
        if !center.is_finite() {
            return Err(Error::NonFinite { op: "new" });
        }
        Self::checked(center, coeffs, "new")
    }

    fn checked(center: Complex64, coeffs: Vec<Complex64>, op: &'static str) -> Result<Self> {
        if coeffs.iter().all(|c| c.is_finite()) {
            Ok(Self { center, coeffs })
        } else {
            Err(Error::NonFinite { op })
        }
    }

    pub fn constant(value: Complex64, center: Complex64, order: usize) -> Self {
        let mut coeffs = vec![ZERO; order + 1];
        coeffs[0] = value;
        Self { center, coeffs }
    }

    pub fn zero(center: Complex64, order: usize) -> Self {
        Self::constant(ZERO, center, order)
    }

    /// The identity function `z` expanded at `center`.
    pub fn variable(center: Complex64, order: usize) -> Self {
        let mut s = Self::constant(center, center, order);
        if order >= 1 {
            s.coeffs[1] = ONE;
        }
        s
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `(z - center)^n`, zero beyond the order.
    pub fn coeff(&self, n: usize) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or(ZERO)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let keep = order.min(self.order()) + 1;
        Self {
            center: self.center,
            coeffs: self.coeffs[..keep].to_vec(),
        }
    }

    fn check_center(&self, other: &Self) -> Result<()> {
        if same_point(self.center, other.center) {
            Ok(())
        } else {
            Err(Error::CenterMismatch {
                left: self.center,
                right: other.center,
            })
        }
    }

    fn require_nonzero_constant(&self) -> Result<Complex64> {
        let c0 = self.coeffs[0];
        if c0.norm() > EPS_ZERO {
            Ok(c0)
        } else {
            Err(Error::ZeroConstantTerm {
                modulus: c0.norm(),
                span: None,
            })
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_center(other)?;
        let n = self.order().min(other.order());
        let coeffs = (0..=n).map(|i| self.coeffs[i] + other.coeffs[i]).collect();
        Self::checked(self.center, coeffs, "add")
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_center(other)?;
        let n = self.order().min(other.order());
        let coeffs = (0..=n).map(|i| self.coeffs[i] - other.coeffs[i]).collect();
        Self::checked(self.center, coeffs, "sub")
    }

    pub fn neg(&self) -> Self {
        Self {
            center: self.center,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn scale(&self, k: Complex64) -> Result<Self> {
        Self::checked(
            self.center,
            self.coeffs.iter().map(|c| c * k).collect(),
            "scale",
        )
    }

    /// Adds a constant to the zeroth coefficient.
    pub fn shift(&self, k: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += k;
        out
    }

    /// Cauchy product truncated to the smaller order.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_center(other)?;
        let n = self.order().min(other.order());
        let coeffs = (0..=n)
            .map(|k| (0..=k).map(|j| self.coeffs[j] * other.coeffs[k - j]).sum())
            .collect();
        Self::checked(self.center, coeffs, "mul")
    }

    pub fn div(&self, divisor: &Self) -> Result<Self> {
        self.check_center(divisor)?;
        let b0 = divisor.require_nonzero_constant()?;
        let n = self.order().min(divisor.order());
        let mut q: Vec<Complex64> = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let acc: Complex64 = (1..=k).map(|j| divisor.coeffs[j] * q[k - j]).sum();
            q.push((self.coeffs[k] - acc) / b0);
        }
        Self::checked(self.center, q, "div")
    }

    pub fn recip(&self) -> Result<Self> {
        Self::constant(ONE, self.center, self.order()).div(self)
    }

    /// Term-wise derivative. The order drops by one; an order-0 series maps
    /// to the zero series of order 0.
    pub fn derivative(&self) -> Self {
        if self.order() == 0 {
            return Self::zero(self.center, 0);
        }
        let coeffs = (1..=self.order())
            .map(|n| self.coeffs[n] * n as f64)
            .collect();
        Self {
            center: self.center,
            coeffs,
        }
    }

    /// Antiderivative with value `constant` at the center; the order grows by one.
    pub fn antiderivative(&self, constant: Complex64) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(constant);
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(n, c)| c / (n as f64 + 1.0)),
        );
        Self {
            center: self.center,
            coeffs,
        }
    }

    /// `outer(inner(z))`. The inner series' value at its own center must
    /// equal the outer center; the result is centered where `inner` is.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        let pivot = inner.coeffs[0];
        if !same_point(pivot, self.center) {
            return Err(Error::CenterMismatch {
                left: self.center,
                right: pivot,
            });
        }
        let order = self.order().min(inner.order());
        let mut delta = inner.truncate(order);
        delta.coeffs[0] = ZERO;
        let mut acc = Self::constant(self.coeffs[order], inner.center, order);
        for n in (0..order).rev() {
            acc = acc.mul(&delta)?.shift(self.coeffs[n]);
        }
        Self::checked(acc.center, acc.coeffs, "compose")
    }

    pub fn exp(&self) -> Result<Self> {
        let n = self.order();
        let mut e = Vec::with_capacity(n + 1);
        e.push(self.coeffs[0].exp());
        for k in 1..=n {
            let acc: Complex64 = (1..=k)
                .map(|j| self.coeffs[j] * e[k - j] * j as f64)
                .sum();
            e.push(acc / k as f64);
        }
        Self::checked(self.center, e, "exp")
    }

    /// Principal-branch logarithm at the center.
    pub fn log(&self) -> Result<Self> {
        let a0 = self.require_nonzero_constant()?;
        let n = self.order();
        let mut l = Vec::with_capacity(n + 1);
        l.push(a0.ln());
        for k in 1..=n {
            let acc: Complex64 = (1..k)
                .map(|j| l[j] * self.coeffs[k - j] * j as f64)
                .sum();
            l.push((self.coeffs[k] * k as f64 - acc) / (a0 * k as f64));
        }
        Self::checked(self.center, l, "log")
    }

    /// `exp(k * log(self))` on the principal branch.
    pub fn pow(&self, k: Complex64) -> Result<Self> {
        self.log()?.scale(k)?.exp()
    }

    /// Integer power by repeated squaring; negative exponents go through
    /// the reciprocal and therefore need a nonvanishing constant term.
    pub fn powi(&self, n: i32) -> Result<Self> {
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Self::constant(ONE, self.center, self.order());
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq)?;
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul(&sq)?;
            }
        }
        Ok(acc)
    }

    /// Horner evaluation at `z`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let t = z - self.center;
        self.coeffs.iter().rev().fold(ZERO, |acc, c| acc * t + c)
    }

    /// Re-expands the series around `new_center`, keeping the order.
    pub fn recenter(&self, new_center: Complex64) -> Result<Self> {
        let delta = new_center - self.center;
        let radius = self.radius_hint();
        if delta.norm() >= radius {
            return Err(Error::OutsideRadius {
                z: new_center,
                center: self.center,
                radius,
            });
        }
        let mut b = self.coeffs.clone();
        let n = self.order();
        // repeated synthetic division by (t - delta)
        for i in 0..n {
            for j in (i..n).rev() {
                let next = b[j + 1];
                b[j] += delta * next;
            }
        }
        Self::checked(new_center, b, "recenter")
    }

    /// Heuristic radius inside which evaluation is trusted:
    /// `0.5 * |c_{N-1}| / |c_N|` when both are nonzero. Otherwise the last two
    /// nonzero coefficients `c_i`, `c_j` (`i < j`) give the gap-adjusted ratio
    /// `0.5 * (|c_i| / |c_j|)^(1/(j-i))`, unless the trailing run of zeros is
    /// at least as long as that gap, in which case the series is treated as a
    /// polynomial and the radius is `+inf`.
    pub fn radius_hint(&self) -> f64 {
        let n = self.order();
        if n == 0 {
            return f64::INFINITY;
        }
        let last = self.coeffs[n].norm();
        let prev = self.coeffs[n - 1].norm();
        if prev > 0.0 && last > 0.0 {
            return 0.5 * prev / last;
        }
        let mut nz = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(i, c)| (i, c.norm()));
        match (nz.next(), nz.next()) {
            (Some((j, cj)), Some((i, ci))) if n - j < j - i => 0.5 * (ci / cj).powf(1.0 / (j - i) as f64),
            _ => f64::INFINITY,
        }
    }

    /// Largest coefficientwise distance to another series over the common order.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}
