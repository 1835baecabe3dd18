//! Complex pseudo-Euclidean linear algebra for C^n_s.
//!
//! The metric is `<u,v> = Re(-sum_{j<=s} u_j conj(v_j) + sum_{i>s} u_i conj(v_i))`:
//! the first `s` complex coordinates are negative definite.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{QbhError, Result};

/// Signature of C^n_s: `n` complex dimensions, the first `s` negative definite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub n: usize,
    pub s: usize,
}

impl Signature {
    pub fn new(n: usize, s: usize) -> Self {
        assert!(n >= 1 && s <= n, "need n >= 1 and 0 <= s <= n");
        Signature { n, s }
    }

    /// +1 or -1 metric weight of complex coordinate `k`.
    #[inline]
    pub fn weight(&self, k: usize) -> f64 {
        if k < self.s {
            -1.0
        } else {
            1.0
        }
    }
}

/// A point or vector of C^n_s.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVec {
    pub coords: Vec<Complex64>,
    pub sig: Signature,
}

impl ComplexVec {
    pub fn new(coords: Vec<Complex64>, sig: Signature) -> Self {
        assert_eq!(coords.len(), sig.n);
        ComplexVec { coords, sig }
    }

    pub fn zeros(sig: Signature) -> Self {
        ComplexVec { coords: vec![Complex64::new(0.0, 0.0); sig.n], sig }
    }

    pub fn from_reals(re: &[f64], sig: Signature) -> Self {
        ComplexVec::new(re.iter().map(|&r| Complex64::new(r, 0.0)).collect(), sig)
    }

    /// Multiplication of every coordinate by the imaginary unit (the ambient J).
    pub fn j_mul(&self) -> Self {
        ComplexVec {
            coords: self.coords.iter().map(|c| Complex64::new(0.0, 1.0) * c).collect(),
            sig: self.sig,
        }
    }

    pub fn scale(&self, t: f64) -> Self {
        ComplexVec { coords: self.coords.iter().map(|c| c * t).collect(), sig: self.sig }
    }

    pub fn scale_complex(&self, t: Complex64) -> Self {
        ComplexVec { coords: self.coords.iter().map(|c| c * t).collect(), sig: self.sig }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.sig, other.sig);
        ComplexVec {
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect(),
            sig: self.sig,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.sig, other.sig);
        ComplexVec {
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect(),
            sig: self.sig,
        }
    }

    /// Max coordinate magnitude. Not the metric norm; used for zero tests and
    /// residual gauges where the indefinite metric is useless.
    pub fn coord_norm(&self) -> f64 {
        self.coords.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// The indefinite inner product of C^n_s.
pub fn inner(u: &ComplexVec, v: &ComplexVec) -> Result<f64> {
    if u.sig != v.sig {
        return Err(QbhError::DimensionMismatch {
            n1: u.sig.n,
            s1: u.sig.s,
            n2: v.sig.n,
            s2: v.sig.s,
        });
    }
    let mut acc = 0.0;
    for k in 0..u.sig.n {
        acc += u.sig.weight(k) * (u.coords[k] * v.coords[k].conj()).re;
    }
    Ok(acc)
}

/// Causal character of a vector under the indefinite metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalCharacter {
    Spacelike,
    Timelike,
    Lightlike,
    Zero,
}

/// Classify `v` with zero threshold `tol` (total function: never fails).
pub fn causal_character(v: &ComplexVec, tol: f64) -> CausalCharacter {
    assert!(tol > 0.0, "tol must be positive");
    if v.coord_norm() <= tol {
        return CausalCharacter::Zero;
    }
    let q = inner(v, v).expect("self inner product");
    if q > tol {
        CausalCharacter::Spacelike
    } else if q < -tol {
        CausalCharacter::Timelike
    } else {
        CausalCharacter::Lightlike
    }
}

/// Which of the three ambient space forms a surface lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AmbientKind {
    /// The flat Lorentzian complex plane C^2_1.
    FlatC21,
    /// CP^2_1(4), represented by horizontal lifts into S^5_2(1) in C^3_1.
    SphereLiftCP,
    /// CH^2_1(-4), represented by horizontal lifts into H^5_3(-1) in C^3_2.
    HyperbolicLiftCH,
}

/// Ambient specification: kind, holomorphic sectional curvature sign, and the
/// complex pseudo-Euclidean space holding the surface (or its lift).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AmbientSpec {
    pub kind: AmbientKind,
}

impl AmbientSpec {
    pub fn flat() -> Self {
        AmbientSpec { kind: AmbientKind::FlatC21 }
    }

    pub fn cp() -> Self {
        AmbientSpec { kind: AmbientKind::SphereLiftCP }
    }

    pub fn ch() -> Self {
        AmbientSpec { kind: AmbientKind::HyperbolicLiftCH }
    }

    pub fn epsilon(&self) -> f64 {
        match self.kind {
            AmbientKind::FlatC21 => 0.0,
            AmbientKind::SphereLiftCP => 1.0,
            AmbientKind::HyperbolicLiftCH => -1.0,
        }
    }

    /// Signature of the embedding space C^n_s.
    pub fn sig(&self) -> Signature {
        match self.kind {
            AmbientKind::FlatC21 => Signature::new(2, 1),
            AmbientKind::SphereLiftCP => Signature::new(3, 1),
            AmbientKind::HyperbolicLiftCH => Signature::new(3, 2),
        }
    }

    pub fn is_lift(&self) -> bool {
        self.kind != AmbientKind::FlatC21
    }

    /// Required value of <L,L> for lift ambients (1/epsilon), None for flat.
    pub fn lift_norm_target(&self) -> Option<f64> {
        match self.kind {
            AmbientKind::FlatC21 => None,
            AmbientKind::SphereLiftCP => Some(1.0),
            AmbientKind::HyperbolicLiftCH => Some(-1.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            AmbientKind::FlatC21 => "C2_1",
            AmbientKind::SphereLiftCP => "CP2_1(4)",
            AmbientKind::HyperbolicLiftCH => "CH2_1(-4)",
        }
    }
}
