//! Curves in the light cone: null/Legendre predicates, squared Legendre
//! curvature and Legendre torsion, and constrained integration of the
//! third-order curve equation behind the corrected nonflat family.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{QbhError, Result};
use crate::jet::{Jet, VecJet};
use crate::linalg::{inner, ComplexVec, Signature};

/// A curve given as a univariate jet evaluator. `evaluator(t, order)` returns
/// the jet of z at t; `max_order` is the highest supported order.
pub struct CurveSpec {
    pub evaluator: Box<dyn Fn(f64, usize) -> Result<VecJet> + Send + Sync>,
    pub sig: Signature,
    /// sigma: +1 spacelike unit speed, -1 timelike unit speed, 0 null.
    pub declared_speed: f64,
    pub range: (f64, f64),
    pub max_order: usize,
}

impl CurveSpec {
    pub fn eval(&self, t: f64, order: usize) -> Result<VecJet> {
        if order > self.max_order {
            return Err(QbhError::OrderError { requested: order, available: self.max_order });
        }
        (self.evaluator)(t, order)
    }
}

/// Raw residuals and invariants of a curve at a sample parameter.
#[derive(Clone, Debug, Serialize)]
pub struct LegendreReport {
    pub t: f64,
    pub residual_cone: f64,
    pub residual_speed: f64,
    pub residual_legendre: f64,
    pub residual_special: f64,
    pub kappa_sq: f64,
    pub tau_hat: f64,
    pub pairing: f64,
}

/// Evaluate all light-cone curve invariants from the order-3 jet at `t`.
/// Residuals are reported raw, without thresholding.
pub fn legendre_report(curve: &CurveSpec, t: f64) -> Result<LegendreReport> {
    let jet = curve.eval(t, 3)?;
    let z = jet.partial(0, 0);
    let dz = jet.partial(1, 0);
    let d2z = jet.partial(2, 0);
    let d3z = jet.partial(3, 0);
    let speed = inner(&dz, &dz)?;
    Ok(LegendreReport {
        t,
        residual_cone: inner(&z, &z)?.abs(),
        residual_speed: (speed - curve.declared_speed).abs(),
        residual_legendre: inner(&dz, &z.j_mul())?.abs(),
        residual_special: inner(&dz.j_mul(), &d2z)?.abs(),
        kappa_sq: speed * inner(&d2z, &d2z)?,
        tau_hat: speed * inner(&d2z, &d3z.j_mul())?,
        pairing: inner(&z, &dz.j_mul())?,
    })
}

/// The null Legendre curve z(x) = (e^{ikx}, e^{-ikx}) in C^2_1 with
/// k = 1/(2 mu); it lies on the light cone, is null, and has
/// <z, iz'> = 1/mu everywhere.
pub fn make_flat_null_legendre(mu: f64) -> Result<CurveSpec> {
    if mu == 0.0 {
        return Err(QbhError::ParameterError("mu must be nonzero".into()));
    }
    let k = 1.0 / (2.0 * mu);
    let sig = Signature::new(2, 1);
    let evaluator = move |t: f64, order: usize| -> Result<VecJet> {
        let x = Jet::variable(t, 0, 1, order);
        let up = x.scale_c(Complex64::new(0.0, k)).exp();
        let dn = x.scale_c(Complex64::new(0.0, -k)).exp();
        Ok(VecJet::new(vec![up, dn], sig))
    };
    Ok(CurveSpec {
        evaluator: Box::new(evaluator),
        sig,
        declared_speed: 0.0,
        range: (f64::NEG_INFINITY, f64::INFINITY),
        max_order: 5,
    })
}

/// A smooth real-valued coefficient function, supplied as a univariate jet
/// evaluator (so that its derivatives are available to the integrator).
pub type ScalarFn = Box<dyn Fn(f64, usize) -> Jet + Send + Sync>;

pub fn const_fn(c: f64) -> ScalarFn {
    Box::new(move |_t, order| Jet::constant_re(c, 1, order))
}

pub fn linear_fn(c0: f64, c1: f64) -> ScalarFn {
    Box::new(move |t, order| {
        Jet::variable(t, 0, 1, order).scale(c1).add(&Jet::constant_re(c0, 1, order))
    })
}

/// Initial data (z, z', z'') for the third-order curve equation.
#[derive(Clone, Debug)]
pub struct CurveInit {
    pub z: ComplexVec,
    pub dz: ComplexVec,
    pub d2z: ComplexVec,
}

fn sig31() -> Signature {
    Signature::new(3, 1)
}

/// Algebraic constraints a unit-speed spacelike Legendre seed must satisfy.
/// The last entry (<z', iz''> = -2 sqrt2 f) follows from the others along
/// the flow but must hold at t = 0 for unit speed to be conserved.
pub fn curve_constraint_residuals(init: &CurveInit, f0: f64) -> Vec<(&'static str, f64)> {
    let z = &init.z;
    let dz = &init.dz;
    let d2z = &init.d2z;
    let ip = |u: &ComplexVec, v: &ComplexVec| inner(u, v).expect("consistent signatures");
    vec![
        ("cone <z,z>=0", ip(z, z).abs()),
        ("speed <z',z'>=1", (ip(dz, dz) - 1.0).abs()),
        ("<z,z'>=0", ip(z, dz).abs()),
        ("legendre <z,iz'>=0", ip(z, &dz.j_mul()).abs()),
        ("<z,z''>=-1", (ip(z, d2z) + 1.0).abs()),
        ("<z',z''>=0", ip(dz, d2z).abs()),
        ("<z'',iz>=0", ip(d2z, &z.j_mul()).abs()),
        ("<z'',z''>=6f^2", (ip(d2z, d2z) - 6.0 * f0 * f0).abs()),
        ("<z',iz''>=-2sqrt2 f", (ip(dz, &d2z.j_mul()) + 2.0 * std::f64::consts::SQRT_2 * f0).abs()),
    ]
}

/// Closed-form consistent initial data for the curve equation with f(0) = f0.
pub fn seed_remark12_initial_data(f0: f64, _f0_prime: f64) -> Result<CurveInit> {
    let sig = sig31();
    let z = ComplexVec::new(
        vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        sig,
    );
    let dz = ComplexVec::new(
        vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        sig,
    );
    let p = (1.0 + 2.0 * f0 * f0) / 2.0;
    let d2z = ComplexVec::new(
        vec![
            Complex64::new(p, 0.0),
            Complex64::new(p - 1.0, 0.0),
            Complex64::new(0.0, 2.0 * std::f64::consts::SQRT_2 * f0),
        ],
        sig,
    );
    let init = CurveInit { z, dz, d2z };
    for (name, r) in curve_constraint_residuals(&init, f0) {
        if r > 1e-11 {
            return Err(QbhError::ConstraintViolation { name: name.into(), residual: r });
        }
    }
    Ok(init)
}

type State = [ComplexVec; 3];

/// z''' = 2 sqrt2 i f z'' + 2 (f^2 + sqrt2 i f') z' + (sqrt2 i (f'' + 2 delta) + 2 f f') z
fn rhs_coeffs(fj: &Jet, dj: &Jet) -> [Complex64; 3] {
    let s2 = std::f64::consts::SQRT_2;
    let f = fj.partial(0, 0).re;
    let fp = fj.partial(1, 0).re;
    let fpp = fj.partial(2, 0).re;
    let d = dj.partial(0, 0).re;
    [
        Complex64::new(2.0 * f * fp, s2 * (fpp + 2.0 * d)),
        Complex64::new(2.0 * f * f, 2.0 * s2 * fp),
        Complex64::new(0.0, 2.0 * s2 * f),
    ]
}

fn state_deriv(t: f64, st: &State, f: &ScalarFn, delta: &ScalarFn) -> State {
    let c = rhs_coeffs(&f(t, 2), &delta(t, 2));
    let d3 = st[0]
        .scale_complex(c[0])
        .add(&st[1].scale_complex(c[1]))
        .add(&st[2].scale_complex(c[2]));
    [st[1].clone(), st[2].clone(), d3]
}

fn rk4_step(t: f64, st: &State, h: f64, f: &ScalarFn, delta: &ScalarFn) -> State {
    let add_scaled = |a: &State, b: &State, s: f64| -> State {
        [a[0].add(&b[0].scale(s)), a[1].add(&b[1].scale(s)), a[2].add(&b[2].scale(s))]
    };
    let k1 = state_deriv(t, st, f, delta);
    let k2 = state_deriv(t + h / 2.0, &add_scaled(st, &k1, h / 2.0), f, delta);
    let k3 = state_deriv(t + h / 2.0, &add_scaled(st, &k2, h / 2.0), f, delta);
    let k4 = state_deriv(t + h, &add_scaled(st, &k3, h), f, delta);
    let mut out = st.clone();
    for i in 0..3 {
        out[i] = out[i].add(
            &k1[i]
                .add(&k2[i].scale(2.0))
                .add(&k3[i].scale(2.0))
                .add(&k4[i].scale(1.0))
                .scale(h / 6.0),
        );
    }
    out
}

/// Extend a state (z, z', z'') at time t to a univariate jet of the requested
/// order using the curve equation as a Taylor-coefficient recurrence.
fn state_to_jet(t: f64, st: &State, order: usize, f: &ScalarFn, delta: &ScalarFn) -> VecJet {
    let sig = st[0].sig;
    let mut z = VecJet::zeros(sig, 1, order);
    for (k, vec) in st.iter().enumerate().take(order + 1) {
        let fact = [1.0, 1.0, 2.0][k];
        for (comp, c) in z.comps.iter_mut().zip(&vec.coords) {
            comp.set_coeff(k, 0, c / fact);
        }
    }
    if order <= 2 {
        return z;
    }
    let fj = f(t, order);
    let dj = delta(t, order);
    let s2 = std::f64::consts::SQRT_2;
    let i = Complex64::new(0.0, 1.0);
    let c2 = fj.scale_c(i * 2.0 * s2);
    let c1 = fj.mul(&fj).scale(2.0).add(&fj.deriv(0).scale_c(i * 2.0 * s2));
    // c0 has one order less than c1/c2 (second derivative of f); that is
    // enough because it multiplies z, whose series is known furthest.
    let c0 = fj
        .deriv(0)
        .deriv(0)
        .add(&dj.truncate(order.saturating_sub(2)).scale(2.0))
        .scale_c(i * s2)
        .add(&fj.mul(&fj.deriv(0)).scale(2.0).truncate(order - 2));
    for k in 3..=order {
        let d1 = z.deriv(0);
        let d2 = d1.deriv(0);
        let rhs = d2
            .scale_jet(&c2.truncate(order - 2))
            .add(&d1.truncate(order - 2).scale_jet(&c1.truncate(order - 2)))
            .add(&z.truncate(order - 2).scale_jet(&c0.truncate(order - 2)));
        let denom = (k * (k - 1) * (k - 2)) as f64;
        for (comp, rc) in z.comps.iter_mut().zip(&rhs.comps) {
            comp.set_coeff(k, 0, rc.coeff(k - 3, 0) / denom);
        }
    }
    z
}

/// Constraint drift observed along an integrated curve.
#[derive(Clone, Debug, Serialize)]
pub struct DriftReport {
    pub max_cone: f64,
    pub max_speed: f64,
    pub max_legendre: f64,
}

impl DriftReport {
    pub fn max(&self) -> f64 {
        self.max_cone.max(self.max_speed).max(self.max_legendre)
    }
}

/// An integrated curve with dense jet queries. Jets between nodes come from a
/// single partial integration step off the nearest node followed by the
/// Taylor recurrence of the curve equation.
pub struct SampledCurve {
    nodes: Vec<State>,
    t0: f64,
    h: f64,
    f: ScalarFn,
    delta: ScalarFn,
}

impl SampledCurve {
    pub fn t_end(&self) -> f64 {
        self.t0 + self.h * (self.nodes.len() - 1) as f64
    }

    pub fn state_at(&self, t: f64) -> State {
        let n = self.nodes.len() - 1;
        let pos = ((t - self.t0) / self.h).round().clamp(0.0, n as f64) as usize;
        let tn = self.t0 + pos as f64 * self.h;
        let dt = t - tn;
        if dt.abs() < 1e-15 {
            self.nodes[pos].clone()
        } else {
            rk4_step(tn, &self.nodes[pos], dt, &self.f, &self.delta)
        }
    }

    pub fn jet_at(&self, t: f64, order: usize) -> VecJet {
        state_to_jet(t, &self.state_at(t), order, &self.f, &self.delta)
    }

    pub fn node_times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.nodes.len()).map(move |i| self.t0 + i as f64 * self.h)
    }

    pub fn into_curve_spec(self: std::sync::Arc<Self>, range: (f64, f64)) -> CurveSpec {
        let sig = self.nodes[0][0].sig;
        let me = self.clone();
        CurveSpec {
            evaluator: Box::new(move |t, order| Ok(me.jet_at(t, order))),
            sig,
            declared_speed: 1.0,
            range,
            max_order: 5,
        }
    }

    /// CSV dump: t, Re/Im of each coordinate of z, z', z''.
    pub fn to_csv(&self) -> String {
        let n = self.nodes[0][0].sig.n;
        let mut out = String::from("t");
        for level in ["z", "dz", "d2z"] {
            for k in 0..n {
                out.push_str(&format!(",re_{level}{k},im_{level}{k}"));
            }
        }
        out.push('\n');
        for (i, st) in self.nodes.iter().enumerate() {
            out.push_str(&format!("{}", self.t0 + i as f64 * self.h));
            for vec in st {
                for c in &vec.coords {
                    out.push_str(&format!(",{},{}", c.re, c.im));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Integrate the third-order curve equation with classical RK4 on (z, z', z'').
/// No re-projection onto the constraint set is performed: drift is monitored
/// and reported so that a mistranscribed equation shows up instead of being
/// masked.
pub fn integrate_remark12_curve(
    f: ScalarFn,
    delta: ScalarFn,
    init: CurveInit,
    t_end: f64,
    h: f64,
) -> Result<(SampledCurve, DriftReport)> {
    if h <= 0.0 {
        return Err(QbhError::ParameterError("step h must be positive".into()));
    }
    let f0 = f(0.0, 0).partial(0, 0).re;
    for (name, r) in curve_constraint_residuals(&init, f0) {
        if r > 1e-10 {
            return Err(QbhError::ConstraintViolation { name: name.into(), residual: r });
        }
    }
    let n_steps = (t_end / h).ceil() as usize;
    let h = t_end / n_steps as f64;
    let mut nodes = Vec::with_capacity(n_steps + 1);
    let mut st = [init.z, init.dz, init.d2z];
    nodes.push(st.clone());
    for k in 0..n_steps {
        st = rk4_step(k as f64 * h, &st, h, &f, &delta);
        nodes.push(st.clone());
    }
    let mut drift = DriftReport { max_cone: 0.0, max_speed: 0.0, max_legendre: 0.0 };
    for node in &nodes {
        let ip = |u: &ComplexVec, v: &ComplexVec| inner(u, v).expect("consistent signatures");
        drift.max_cone = drift.max_cone.max(ip(&node[0], &node[0]).abs());
        drift.max_speed = drift.max_speed.max((ip(&node[1], &node[1]) - 1.0).abs());
        drift.max_legendre = drift.max_legendre.max(ip(&node[1], &node[0].j_mul()).abs());
    }
    Ok((SampledCurve { nodes, t0: 0.0, h, f, delta }, drift))
}
