//! Truncated Taylor jets in one or two real variables with complex values.
//!
//! A jet stores Taylor coefficients (mixed partial divided by i!*j!) around a
//! base point. Arithmetic on jets is exact truncated series arithmetic, so
//! every derivative extracted downstream is exact up to f64 roundoff.
//!
//! Bivariate jets are capped at order 4 (the bitension field consumes exactly
//! four derivative orders of the immersion); univariate jets go up to order 5
//! because a lift built from a curve and its first derivative needs one order
//! more of the curve than of the patch.

use num_complex::Complex64;

use crate::error::{QbhError, Result};
use crate::linalg::{ComplexVec, Signature};

pub const MAX_ORDER_BIVARIATE: usize = 4;
pub const MAX_ORDER_UNIVARIATE: usize = 5;

const FACT: [f64; 6] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0];

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    vars: usize,
    order: usize,
    coeffs: Vec<Complex64>,
}

fn coeff_count(vars: usize, order: usize) -> usize {
    match vars {
        1 => order + 1,
        2 => (order + 1) * (order + 2) / 2,
        _ => panic!("jets support 1 or 2 variables"),
    }
}

#[inline]
fn tri_idx(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

impl Jet {
    fn check_order(vars: usize, order: usize) {
        let max = if vars == 1 { MAX_ORDER_UNIVARIATE } else { MAX_ORDER_BIVARIATE };
        assert!(order <= max, "order {order} exceeds cap {max} for {vars} variable(s)");
    }

    pub fn constant(c: Complex64, vars: usize, order: usize) -> Self {
        Self::check_order(vars, order);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); coeff_count(vars, order)];
        coeffs[0] = c;
        Jet { vars, order, coeffs }
    }

    pub fn constant_re(c: f64, vars: usize, order: usize) -> Self {
        Self::constant(Complex64::new(c, 0.0), vars, order)
    }

    /// The coordinate function `x - base` shifted so that value() = base.
    pub fn variable(base: f64, axis: usize, vars: usize, order: usize) -> Self {
        Self::check_order(vars, order);
        assert!(axis < vars);
        let mut jet = Self::constant(Complex64::new(base, 0.0), vars, order);
        if order >= 1 {
            let idx = if vars == 1 { 1 } else { tri_idx(1 - axis, axis) };
            jet.coeffs[idx] = Complex64::new(1.0, 0.0);
        }
        jet
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn coeff(&self, i: usize, j: usize) -> Complex64 {
        if self.vars == 1 {
            debug_assert_eq!(j, 0);
            self.coeffs[i]
        } else {
            self.coeffs[tri_idx(i, j)]
        }
    }

    pub fn set_coeff(&mut self, i: usize, j: usize, c: Complex64) {
        if self.vars == 1 {
            debug_assert_eq!(j, 0);
            self.coeffs[i] = c;
        } else {
            self.coeffs[tri_idx(i, j)] = c;
        }
    }

    /// Value at the base point (the (0,0) coefficient).
    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Mixed partial derivative d^{i+j} f / dx^i dy^j at the base point.
    pub fn partial(&self, i: usize, j: usize) -> Complex64 {
        self.coeff(i, j) * FACT[i] * FACT[j]
    }

    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order);
        let mut out = Jet::constant(Complex64::new(0.0, 0.0), self.vars, order);
        for (i, j) in index_set(self.vars, order) {
            out.set_coeff(i, j, self.coeff(i, j));
        }
        out
    }

    fn align(&self, other: &Jet) -> (Jet, Jet) {
        assert_eq!(self.vars, other.vars, "jet variable-count mismatch");
        let order = self.order.min(other.order);
        (self.truncate(order), other.truncate(order))
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let (mut a, b) = self.align(other);
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            *x += y;
        }
        a
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        let (mut a, b) = self.align(other);
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            *x -= y;
        }
        a
    }

    pub fn neg(&self) -> Jet {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c = -*c;
        }
        out
    }

    pub fn scale(&self, t: f64) -> Jet {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c *= t;
        }
        out
    }

    pub fn scale_c(&self, t: Complex64) -> Jet {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c *= t;
        }
        out
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let (a, b) = self.align(other);
        let order = a.order;
        let mut out = Jet::constant(Complex64::new(0.0, 0.0), a.vars, order);
        if a.vars == 1 {
            for p in 0..=order {
                if a.coeffs[p].norm_sqr() == 0.0 {
                    continue;
                }
                for q in 0..=(order - p) {
                    out.coeffs[p + q] += a.coeffs[p] * b.coeffs[q];
                }
            }
        } else {
            for (p, q) in index_set(2, order) {
                let ac = a.coeff(p, q);
                if ac.norm_sqr() == 0.0 {
                    continue;
                }
                for (r, t) in index_set(2, order - p - q) {
                    let idx = tri_idx(p + r, q + t);
                    out.coeffs[idx] += ac * b.coeff(r, t);
                }
            }
        }
        out
    }

    /// Compose an analytic scalar function with this jet. `derivs[k]` must be
    /// the k-th derivative of the function at `self.value()`, for k = 0..=order.
    pub fn compose(&self, derivs: &[Complex64]) -> Jet {
        assert!(derivs.len() > self.order);
        let nil = self.sub(&Jet::constant(self.value(), self.vars, self.order));
        let mut acc = Jet::constant(derivs[self.order] / FACT[self.order], self.vars, self.order);
        for k in (0..self.order).rev() {
            acc = acc.mul(&nil).add(&Jet::constant(derivs[k] / FACT[k], self.vars, self.order));
        }
        acc
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.order + 1])
    }

    pub fn cos(&self) -> Jet {
        let (c, s) = (self.value().cos(), self.value().sin());
        let cycle = [c, -s, -c, s];
        let derivs: Vec<_> = (0..=self.order).map(|k| cycle[k % 4]).collect();
        self.compose(&derivs)
    }

    pub fn sin(&self) -> Jet {
        let (c, s) = (self.value().cos(), self.value().sin());
        let cycle = [s, c, -s, -c];
        let derivs: Vec<_> = (0..=self.order).map(|k| cycle[k % 4]).collect();
        self.compose(&derivs)
    }

    pub fn cosh(&self) -> Jet {
        let (ch, sh) = (self.value().cosh(), self.value().sinh());
        let derivs: Vec<_> = (0..=self.order).map(|k| if k % 2 == 0 { ch } else { sh }).collect();
        self.compose(&derivs)
    }

    pub fn sinh(&self) -> Jet {
        let (ch, sh) = (self.value().cosh(), self.value().sinh());
        let derivs: Vec<_> = (0..=self.order).map(|k| if k % 2 == 0 { sh } else { ch }).collect();
        self.compose(&derivs)
    }

    /// Reciprocal; fails when the base value is (numerically) a pole.
    pub fn recip_named(&self, factor: &str) -> Result<Jet> {
        let u0 = self.value();
        if u0.norm() < 1e-300 {
            return Err(QbhError::Singularity { factor: factor.to_string() });
        }
        let inv = Complex64::new(1.0, 0.0) / u0;
        let mut derivs = Vec::with_capacity(self.order + 1);
        let mut d = inv;
        derivs.push(d);
        for k in 1..=self.order {
            d = -d * inv * (k as f64);
            derivs.push(d);
        }
        Ok(self.compose(&derivs))
    }

    pub fn recip(&self) -> Result<Jet> {
        self.recip_named("reciprocal")
    }

    pub fn div(&self, other: &Jet, factor: &str) -> Result<Jet> {
        Ok(self.mul(&other.recip_named(factor)?))
    }

    /// Principal square root; fails at a branch-point base value.
    pub fn sqrt(&self) -> Result<Jet> {
        let u0 = self.value();
        if u0.norm() < 1e-300 {
            return Err(QbhError::Singularity { factor: "sqrt".to_string() });
        }
        let r0 = u0.sqrt();
        let mut derivs = Vec::with_capacity(self.order + 1);
        let mut d = r0;
        derivs.push(d);
        let mut expo = 0.5;
        for _ in 1..=self.order {
            d = d * expo / u0;
            derivs.push(d);
            expo -= 1.0;
        }
        Ok(self.compose(&derivs))
    }

    pub fn powi(&self, k: u32) -> Jet {
        let mut out = Jet::constant(Complex64::new(1.0, 0.0), self.vars, self.order);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative as a jet of one order less.
    pub fn deriv(&self, axis: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        assert!(axis < self.vars);
        let order = self.order - 1;
        let mut out = Jet::constant(Complex64::new(0.0, 0.0), self.vars, order);
        for (i, j) in index_set(self.vars, order) {
            let c = if axis == 0 {
                self.coeff(i + 1, j) * ((i + 1) as f64)
            } else {
                self.coeff(i, j + 1) * ((j + 1) as f64)
            };
            out.set_coeff(i, j, c);
        }
        out
    }

    /// Complex conjugate. Valid as a function identity because the jet
    /// variables are real.
    pub fn conj(&self) -> Jet {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c = c.conj();
        }
        out
    }

    /// Real part of the function represented by this jet.
    pub fn re(&self) -> Jet {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c = Complex64::new(c.re, 0.0);
        }
        out
    }

    pub fn im(&self) -> Jet {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c = Complex64::new(c.im, 0.0);
        }
        out
    }

    /// Lift a univariate jet in `t` to a bivariate jet depending only on the
    /// given axis.
    pub fn lift_to_bivariate(&self, axis: usize, order: usize) -> Jet {
        assert_eq!(self.vars, 1);
        assert!(order <= self.order);
        let mut out = Jet::constant(Complex64::new(0.0, 0.0), 2, order);
        for k in 0..=order {
            if axis == 0 {
                out.set_coeff(k, 0, self.coeffs[k]);
            } else {
                out.set_coeff(0, k, self.coeffs[k]);
            }
        }
        out
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// All multi-indices (i, j) with i + j <= order (j = 0 for univariate).
pub fn index_set(vars: usize, order: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(coeff_count(vars, order));
    if vars == 1 {
        for i in 0..=order {
            out.push((i, 0));
        }
    } else {
        for d in 0..=order {
            for j in 0..=d {
                out.push((d - j, j));
            }
        }
    }
    out
}

/// A C^n_s-valued jet: one scalar jet per complex coordinate.
#[derive(Clone, Debug)]
pub struct VecJet {
    pub comps: Vec<Jet>,
    pub sig: Signature,
}

impl VecJet {
    pub fn new(comps: Vec<Jet>, sig: Signature) -> Self {
        assert_eq!(comps.len(), sig.n);
        VecJet { comps, sig }
    }

    pub fn zeros(sig: Signature, vars: usize, order: usize) -> Self {
        VecJet {
            comps: (0..sig.n).map(|_| Jet::constant(Complex64::new(0.0, 0.0), vars, order)).collect(),
            sig,
        }
    }

    pub fn order(&self) -> usize {
        self.comps.iter().map(|c| c.order()).min().unwrap()
    }

    pub fn vars(&self) -> usize {
        self.comps[0].vars()
    }

    pub fn value(&self) -> ComplexVec {
        ComplexVec::new(self.comps.iter().map(|c| c.value()).collect(), self.sig)
    }

    pub fn truncate(&self, order: usize) -> VecJet {
        VecJet::new(self.comps.iter().map(|c| c.truncate(order)).collect(), self.sig)
    }

    pub fn add(&self, other: &VecJet) -> VecJet {
        assert_eq!(self.sig, other.sig);
        VecJet::new(
            self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(b)).collect(),
            self.sig,
        )
    }

    pub fn sub(&self, other: &VecJet) -> VecJet {
        assert_eq!(self.sig, other.sig);
        VecJet::new(
            self.comps.iter().zip(&other.comps).map(|(a, b)| a.sub(b)).collect(),
            self.sig,
        )
    }

    pub fn neg(&self) -> VecJet {
        VecJet::new(self.comps.iter().map(|c| c.neg()).collect(), self.sig)
    }

    pub fn scale(&self, t: f64) -> VecJet {
        VecJet::new(self.comps.iter().map(|c| c.scale(t)).collect(), self.sig)
    }

    pub fn scale_jet(&self, t: &Jet) -> VecJet {
        VecJet::new(self.comps.iter().map(|c| c.mul(t)).collect(), self.sig)
    }

    /// Ambient complex structure: multiply every coordinate by i.
    pub fn j_mul(&self) -> VecJet {
        let i = Complex64::new(0.0, 1.0);
        VecJet::new(self.comps.iter().map(|c| c.scale_c(i)).collect(), self.sig)
    }

    pub fn deriv(&self, axis: usize) -> VecJet {
        VecJet::new(self.comps.iter().map(|c| c.deriv(axis)).collect(), self.sig)
    }

    /// The indefinite inner product as a real-coefficient jet field.
    pub fn inner(&self, other: &VecJet) -> Jet {
        assert_eq!(self.sig, other.sig);
        let order = self.order().min(other.order());
        let vars = self.vars();
        let mut acc = Jet::constant(Complex64::new(0.0, 0.0), vars, order);
        for k in 0..self.sig.n {
            let term = self.comps[k].mul(&other.comps[k].conj());
            if self.sig.weight(k) < 0.0 {
                acc = acc.sub(&term);
            } else {
                acc = acc.add(&term);
            }
        }
        acc.re()
    }

    /// Max over components of the max coefficient magnitude.
    pub fn max_coeff_norm(&self) -> f64 {
        self.comps.iter().map(|c| c.max_coeff_norm()).fold(0.0, f64::max)
    }

    pub fn partial(&self, i: usize, j: usize) -> ComplexVec {
        ComplexVec::new(self.comps.iter().map(|c| c.partial(i, j)).collect(), self.sig)
    }

    /// Lift a univariate curve jet to a bivariate jet in the given axis.
    pub fn lift_to_bivariate(&self, axis: usize, order: usize) -> VecJet {
        VecJet::new(
            self.comps.iter().map(|c| c.lift_to_bivariate(axis, order)).collect(),
            self.sig,
        )
    }
}

/// Evaluate a jet expression of one variable at `base` with the given order.
pub fn jet_eval_1<F>(expr: F, base: f64, order: usize) -> Result<Jet>
where
    F: Fn(&Jet) -> Result<Jet>,
{
    expr(&Jet::variable(base, 0, 1, order))
}

/// Evaluate a jet expression of two variables at `(x, y)` with the given order.
pub fn jet_eval_2<F>(expr: F, x: f64, y: f64, order: usize) -> Result<Jet>
where
    F: Fn(&Jet, &Jet) -> Result<Jet>,
{
    expr(&Jet::variable(x, 0, 2, order), &Jet::variable(y, 1, 2, order))
}
