//! The immersion engine: first and second fundamental forms, mean curvature,
//! Gauss curvature and the bitension field of Lagrangian surfaces in C^2_1 or
//! of horizontal lifts into S^5_2(1) / H^5_3(-1).
//!
//! Everything is evaluated in truncated jet arithmetic so that the iterated
//! covariant derivatives entering the bitension field are exact in f64.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{QbhError, Result};
use crate::fd::fd_vec_jet_2;
use crate::jet::{Jet, VecJet};
use crate::linalg::{causal_character, AmbientSpec, CausalCharacter, ComplexVec};

/// Rectangular parameter window.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Window {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Window { x0, x1, y0, y1 }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    /// nx-by-ny grid of interior-inclusive sample points.
    pub fn grid(&self, nx: usize, ny: usize) -> Vec<(f64, f64)> {
        let mut pts = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            let fx = if nx == 1 { 0.5 } else { i as f64 / (nx - 1) as f64 };
            for j in 0..ny {
                let fy = if ny == 1 { 0.5 } else { j as f64 / (ny - 1) as f64 };
                pts.push((self.x0 + fx * (self.x1 - self.x0), self.y0 + fy * (self.y1 - self.y0)));
            }
        }
        pts
    }
}

type MapFn = Arc<dyn Fn(f64, f64, usize) -> Result<VecJet> + Send + Sync>;
type SingularFn = Arc<dyn Fn(f64, f64) -> bool + Send + Sync>;

/// A surface immersion (or horizontal lift) with ambient spec, parameter
/// window and singular-locus predicate.
#[derive(Clone)]
pub struct ImmersionPatch {
    pub ambient: AmbientSpec,
    map: MapFn,
    pub window: Window,
    singular: SingularFn,
}

impl ImmersionPatch {
    pub fn new(
        ambient: AmbientSpec,
        map: impl Fn(f64, f64, usize) -> Result<VecJet> + Send + Sync + 'static,
        window: Window,
        singular: impl Fn(f64, f64) -> bool + Send + Sync + 'static,
    ) -> Self {
        ImmersionPatch { ambient, map: Arc::new(map), window, singular: Arc::new(singular) }
    }

    pub fn is_singular(&self, x: f64, y: f64) -> bool {
        (self.singular)(x, y)
    }

    pub fn eval(&self, x: f64, y: f64, order: usize) -> Result<VecJet> {
        (self.map)(x, y, order)
    }

    /// Evaluate only the point value (order-0 jet), as a black box.
    pub fn eval_point(&self, x: f64, y: f64) -> Result<ComplexVec> {
        Ok((self.map)(x, y, 0)?.value())
    }

    /// Same surface with jets reconstructed by finite differences from point
    /// values only.
    pub fn with_fd_backend(&self, h: f64) -> ImmersionPatch {
        let inner_map = self.map.clone();
        ImmersionPatch {
            ambient: self.ambient,
            map: Arc::new(move |x, y, order| {
                let value_map =
                    |px: f64, py: f64| -> Result<ComplexVec> { Ok(inner_map(px, py, 0)?.value()) };
                let (jet, _err) = fd_vec_jet_2(&value_map, x, y, order, h)?;
                Ok(jet)
            }),
            window: self.window,
            singular: self.singular.clone(),
        }
    }
}

/// Index into the symmetric pair set {(0,0), (0,1), (1,1)}.
#[inline]
fn sym(i: usize, j: usize) -> usize {
    i + j
}

/// A pseudo-orthonormal tangent frame with jet-valued coefficients:
/// e_k = a[k] d/dx + b[k] d/dy, <e_0,e_0> = 1, <e_1,e_1> = -1.
#[derive(Clone)]
pub struct TangentFrame {
    pub a: [Jet; 2],
    pub b: [Jet; 2],
    pub e: [VecJet; 2],
}

impl TangentFrame {
    pub const SIGN: [f64; 2] = [1.0, -1.0];
}

/// All per-point geometric data shared by the downstream operations.
pub struct PointState {
    pub x: f64,
    pub y: f64,
    pub ambient: AmbientSpec,
    pub eps: f64,
    /// Immersion (or lift) jet, order 4.
    pub phi: VecJet,
    pub dx: VecJet,
    pub dy: VecJet,
    /// g11, g12, g22 as real jets.
    pub g: [Jet; 3],
    pub det_g: Jet,
    /// g^11, g^12, g^22.
    pub ginv: [Jet; 3],
    /// gamma[k][sym(i,j)] = Gamma^k_{ij}.
    pub gamma: [[Jet; 3]; 2],
    /// h(di, dj) for (i,j) in {(x,x),(x,y),(y,y)}.
    pub h: [VecJet; 3],
    /// Mean curvature vector field H.
    pub mean: VecJet,
    pub lagrangian_residual: f64,
    pub horizontality_residual: f64,
    pub lift_norm_residual: f64,
    /// 1 + max coordinate norm of first/second derivatives; scales zero tests.
    pub gauge: f64,
}

impl PointState {
    pub fn compute(patch: &ImmersionPatch, x: f64, y: f64) -> Result<PointState> {
        if !patch.window.contains(x, y) || patch.is_singular(x, y) {
            return Err(QbhError::ExcludedPoint { x, y });
        }
        let ambient = patch.ambient;
        let eps = ambient.epsilon();
        let phi = patch.eval(x, y, 4)?;
        let dx = phi.deriv(0);
        let dy = phi.deriv(1);

        let g11 = dx.inner(&dx);
        let g12 = dx.inner(&dy);
        let g22 = dy.inner(&dy);
        let det_g = g11.mul(&g22).sub(&g12.mul(&g12));

        let scale: f64 = [&g11, &g12, &g22]
            .iter()
            .map(|j| j.value().re.abs())
            .fold(0.0, f64::max)
            .max(1e-30);
        let det0 = det_g.value().re;
        if det0.abs() <= 1e-10 * scale * scale || det0 >= 0.0 {
            return Err(QbhError::DegenerateMetric { x, y, det: det0 });
        }
        let inv_det = det_g.recip_named("det g")?;
        let ginv = [g22.mul(&inv_det), g12.mul(&inv_det).neg(), g11.mul(&inv_det)];
        let g = [g11, g12, g22];

        // Levi-Civita: Gamma^k_{ij} = (1/2) g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
        let dg = |i: usize, j: usize, axis: usize| g[sym(i, j)].deriv(axis);
        let gi = |k: usize, l: usize| &ginv[sym(k, l)];
        let zero = Jet::constant_re(0.0, 2, 2);
        let mut gamma: [[Jet; 3]; 2] = [
            [zero.clone(), zero.clone(), zero.clone()],
            [zero.clone(), zero.clone(), zero],
        ];
        for k in 0..2 {
            for i in 0..2 {
                for j in i..2 {
                    let mut acc = Jet::constant_re(0.0, 2, 2);
                    for l in 0..2 {
                        let t = dg(j, l, i).add(&dg(i, l, j)).sub(&dg(i, j, l));
                        acc = acc.add(&gi(k, l).mul(&t));
                    }
                    gamma[k][sym(i, j)] = acc.scale(0.5);
                }
            }
        }

        let mut state = PointState {
            x,
            y,
            ambient,
            eps,
            phi,
            dx,
            dy,
            g,
            det_g,
            ginv,
            gamma,
            h: [
                VecJet::zeros(ambient.sig(), 2, 2),
                VecJet::zeros(ambient.sig(), 2, 2),
                VecJet::zeros(ambient.sig(), 2, 2),
            ],
            mean: VecJet::zeros(ambient.sig(), 2, 2),
            lagrangian_residual: 0.0,
            horizontality_residual: 0.0,
            lift_norm_residual: 0.0,
            gauge: 1.0,
        };

        // Second fundamental form: ambient second derivative minus its
        // tangential Christoffel part. Not re-projected to the normal space;
        // normality is a genuine downstream check.
        for i in 0..2 {
            for j in i..2 {
                let second = state.project(&state.phi.deriv(i).deriv(j));
                let tang = state
                    .tangent_field(&state.gamma[0][sym(i, j)], &state.gamma[1][sym(i, j)]);
                state.h[sym(i, j)] = second.sub(&tang);
            }
        }
        state.mean = state.h[0]
            .scale_jet(&state.ginv[0])
            .add(&state.h[1].scale_jet(&state.ginv[1].scale(2.0)))
            .add(&state.h[2].scale_jet(&state.ginv[2]))
            .scale(0.5);

        let tangents = [&state.dx, &state.dy];
        let mut lagr: f64 = 0.0;
        for u in tangents {
            for v in tangents {
                lagr = lagr.max(u.j_mul().inner(v).value().re.abs());
            }
        }
        state.lagrangian_residual = lagr;

        if let Some(target) = ambient.lift_norm_target() {
            state.lift_norm_residual = (state.phi.inner(&state.phi).value().re - target).abs();
            let il = state.phi.j_mul();
            state.horizontality_residual = tangents
                .iter()
                .map(|t| t.inner(&il).value().re.abs())
                .fold(0.0, f64::max);
        }

        let second_norm = (0..3).map(|k| state.h[k].value().coord_norm()).fold(0.0, f64::max);
        state.gauge = 1.0
            + state.dx.value().coord_norm().max(state.dy.value().coord_norm()).max(second_norm);
        Ok(state)
    }

    /// Projection realizing the space-form connection on lifts:
    /// P(W) = W - eps<W,L>L - eps<W,iL>iL. Identity for the flat ambient.
    pub fn project(&self, w: &VecJet) -> VecJet {
        if !self.ambient.is_lift() {
            return w.clone();
        }
        let order = w.order();
        let l = self.phi.truncate(order);
        let il = l.j_mul();
        let c1 = w.inner(&l).scale(self.eps);
        let c2 = w.inner(&il).scale(self.eps);
        w.sub(&l.scale_jet(&c1)).sub(&il.scale_jet(&c2))
    }

    /// Space-form covariant derivative of an ambient field along a coordinate
    /// direction.
    pub fn cov_axis(&self, v: &VecJet, axis: usize) -> VecJet {
        self.project(&v.deriv(axis))
    }

    /// Space-form covariant derivative along the tangent direction a dx + b dy.
    pub fn cov_dir(&self, v: &VecJet, a: &Jet, b: &Jet) -> VecJet {
        self.project(&v.deriv(0).scale_jet(a).add(&v.deriv(1).scale_jet(b)))
    }

    /// The ambient field a dx + b dy.
    pub fn tangent_field(&self, a: &Jet, b: &Jet) -> VecJet {
        self.dx.scale_jet(a).add(&self.dy.scale_jet(b))
    }

    /// Coefficients of the tangential part of an ambient field.
    pub fn tangential_coeffs(&self, w: &VecJet) -> (Jet, Jet) {
        let px = w.inner(&self.dx);
        let py = w.inner(&self.dy);
        let t1 = self.ginv[0].mul(&px).add(&self.ginv[1].mul(&py));
        let t2 = self.ginv[1].mul(&px).add(&self.ginv[2].mul(&py));
        (t1, t2)
    }

    pub fn normal_part(&self, w: &VecJet) -> VecJet {
        let (t1, t2) = self.tangential_coeffs(w);
        w.sub(&self.tangent_field(&t1, &t2))
    }

    /// Normal-connection derivative D along a tangent direction.
    pub fn normal_conn_dir(&self, xi: &VecJet, a: &Jet, b: &Jet) -> VecJet {
        self.normal_part(&self.cov_dir(xi, a, b))
    }

    /// Build a pseudo-orthonormal tangent frame (e1 spacelike, e2 timelike)
    /// by Gram-Schmidt from the coordinate tangents; null coordinate systems
    /// fall back to the rotated pair ((dx-dy)/sqrt2, -(dx+dy)/sqrt2). An
    /// optional constant boost parameter produces an alternative frame for
    /// frame-independence checks.
    pub fn frame(&self, boost: f64) -> Result<TangentFrame> {
        let g0 = [self.g[0].value().re, self.g[1].value().re, self.g[2].value().re];
        let scale = g0.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // candidate seed bases (coefficient pairs for X1, X2)
        let candidates: [[(f64, f64); 2]; 3] = [
            [(1.0, 0.0), (0.0, 1.0)],
            [(s, -s), (-s, -s)],
            [(s, s), (s, -s)],
        ];
        let q_of = |(cx, cy): (f64, f64)| {
            g0[0] * cx * cx + 2.0 * g0[1] * cx * cy + g0[2] * cy * cy
        };
        let chosen = candidates
            .iter()
            .find(|cand| q_of(cand[0]).abs() > 1e-6 * scale)
            .ok_or(QbhError::DegenerateMetric { x: self.x, y: self.y, det: g0[0] * g0[2] - g0[1] * g0[1] })?;

        let cjet = |c: f64| Jet::constant_re(c, 2, 3);
        let quad = |ax: &Jet, ay: &Jet, bx: &Jet, by: &Jet| -> Jet {
            // <a1 dx + a2 dy, b1 dx + b2 dy> via the metric jets
            self.g[0]
                .mul(&ax.mul(bx))
                .add(&self.g[1].mul(&ax.mul(by).add(&ay.mul(bx))))
                .add(&self.g[2].mul(&ay.mul(by)))
        };

        let (x1a, x1b) = (cjet(chosen[0].0), cjet(chosen[0].1));
        let (x2a, x2b) = (cjet(chosen[1].0), cjet(chosen[1].1));

        let q1 = quad(&x1a, &x1b, &x1a, &x1b);
        let s1 = q1.value().re.signum();
        let n1 = q1.scale(s1).sqrt()?;
        let inv_n1 = n1.recip_named("frame normalization")?;
        let e1a = x1a.mul(&inv_n1);
        let e1b = x1b.mul(&inv_n1);

        let proj = quad(&x2a, &x2b, &e1a, &e1b).scale(s1);
        let ya = x2a.sub(&proj.mul(&e1a));
        let yb = x2b.sub(&proj.mul(&e1b));
        let q2 = quad(&ya, &yb, &ya, &yb);
        let s2 = q2.value().re.signum();
        if s1 * s2 >= 0.0 {
            return Err(QbhError::DegenerateMetric {
                x: self.x,
                y: self.y,
                det: self.det_g.value().re,
            });
        }
        let n2 = q2.scale(s2).sqrt()?;
        let inv_n2 = n2.recip_named("frame normalization")?;
        let e2a = ya.mul(&inv_n2);
        let e2b = yb.mul(&inv_n2);

        // order: spacelike first
        let (mut sa, mut sb, mut ta, mut tb) = if s1 > 0.0 {
            (e1a, e1b, e2a, e2b)
        } else {
            (e2a, e2b, e1a, e1b)
        };
        if boost != 0.0 {
            let (ch, sh) = (boost.cosh(), boost.sinh());
            let na = sa.scale(ch).add(&ta.scale(sh));
            let nb = sb.scale(ch).add(&tb.scale(sh));
            let ma = sa.scale(sh).add(&ta.scale(ch));
            let mb = sb.scale(sh).add(&tb.scale(ch));
            (sa, sb, ta, tb) = (na, nb, ma, mb);
        }
        let e0 = self.tangent_field(&sa, &sb);
        let e1 = self.tangent_field(&ta, &tb);
        Ok(TangentFrame { a: [sa, ta], b: [sb, tb], e: [e0, e1] })
    }

    /// Coefficients of the induced connection nabla_{e_i} e_j.
    pub fn induced_conn(&self, frame: &TangentFrame, i: usize, j: usize) -> (Jet, Jet) {
        let w = self.cov_dir(&frame.e[j], &frame.a[i], &frame.b[i]);
        self.tangential_coeffs(&w)
    }

    /// The rough second derivative (nabla_e nabla_e - nabla_{nabla_e e}) F
    /// along frame direction i, with nabla the space-form connection.
    fn rough_second(&self, frame: &TangentFrame, field: &VecJet, i: usize) -> VecJet {
        let first = self.cov_dir(field, &frame.a[i], &frame.b[i]);
        let second = self.cov_dir(&first, &frame.a[i], &frame.b[i]);
        let (c1, c2) = self.induced_conn(frame, i, i);
        second.sub(&self.cov_dir(field, &c1, &c2))
    }

    /// Tension field computed as the trace of the second fundamental form of
    /// the map (equals 2H for an isometric immersion).
    pub fn tension_trace(&self, frame: &TangentFrame) -> ComplexVec {
        let mut acc = ComplexVec::zeros(self.ambient.sig());
        for i in 0..2 {
            let de = self.cov_dir(&frame.e[i], &frame.a[i], &frame.b[i]);
            let (c1, c2) = self.induced_conn(frame, i, i);
            let term = de.sub(&self.tangent_field(&c1, &c2));
            acc = acc.add(&term.value().scale(TangentFrame::SIGN[i]));
        }
        acc
    }

    /// Curvature tensor of the ambient space form applied to value vectors.
    pub fn ambient_curvature(&self, x: &ComplexVec, y: &ComplexVec, z: &ComplexVec) -> ComplexVec {
        ambient_curvature(x, y, z, self.eps)
    }

    /// Bitension field from its definition: trace of the rough Hessian of the
    /// tension field plus the ambient curvature term.
    pub fn bitension_direct_with(&self, frame: &TangentFrame) -> ComplexVec {
        let tau = self.mean.scale(2.0);
        let tau_val = tau.value();
        let mut acc = ComplexVec::zeros(self.ambient.sig());
        for i in 0..2 {
            let hess = self.rough_second(frame, &tau, i).value();
            let e_val = frame.e[i].value();
            let curv = self.ambient_curvature(&tau_val, &e_val, &e_val);
            acc = acc.add(&hess.add(&curv).scale(TangentFrame::SIGN[i]));
        }
        acc
    }

    /// The (geometer's sign) Laplacian of an ambient field along the surface.
    pub fn laplacian(&self, frame: &TangentFrame, field: &VecJet) -> ComplexVec {
        let mut acc = ComplexVec::zeros(self.ambient.sig());
        for i in 0..2 {
            acc = acc.add(&self.rough_second(frame, field, i).value().scale(TangentFrame::SIGN[i]));
        }
        acc.scale(-1.0)
    }

    /// Bitension field via tau2 = -2 Delta H + 10 eps H.
    pub fn bitension_via_laplacian_with(&self, frame: &TangentFrame) -> ComplexVec {
        let dh = self.laplacian(frame, &self.mean);
        dh.scale(-2.0).add(&self.mean.value().scale(10.0 * self.eps))
    }

    /// Normal-connection Laplacian of H.
    pub fn normal_laplacian_h(&self, frame: &TangentFrame) -> ComplexVec {
        let mut acc = ComplexVec::zeros(self.ambient.sig());
        for i in 0..2 {
            let first = self.normal_conn_dir(&self.mean, &frame.a[i], &frame.b[i]);
            let second = self.normal_part(&self.cov_dir(&first, &frame.a[i], &frame.b[i]));
            let (c1, c2) = self.induced_conn(frame, i, i);
            let conn = self.normal_conn_dir(&self.mean, &c1, &c2);
            acc = acc.add(&second.sub(&conn).value().scale(TangentFrame::SIGN[i]));
        }
        acc.scale(-1.0)
    }

    /// Intrinsic curvature operator R(d1,d2)dk in tangent coefficients.
    fn intrinsic_curv_op(&self, k: usize) -> (Jet, Jet) {
        // R^m = d1 Gamma^m_{2k} - d2 Gamma^m_{1k}
        //       + Gamma^l_{2k} Gamma^m_{1l} - Gamma^l_{1k} Gamma^m_{2l}
        let mut out: Vec<Jet> = Vec::with_capacity(2);
        for m in 0..2 {
            let mut acc = self.gamma[m][sym(1, k)].deriv(0).sub(&self.gamma[m][sym(0, k)].deriv(1));
            for l in 0..2 {
                acc = acc.add(&self.gamma[l][sym(1, k)].mul(&self.gamma[m][sym(0, l)]));
                acc = acc.sub(&self.gamma[l][sym(0, k)].mul(&self.gamma[m][sym(1, l)]));
            }
            out.push(acc);
        }
        let b = out.pop().unwrap();
        let a = out.pop().unwrap();
        (a, b)
    }

    /// Gauss curvature from the induced metric alone.
    pub fn gauss_curvature(&self) -> f64 {
        let (r1, r2) = self.intrinsic_curv_op(1); // R(d1,d2)d2
        // <R(d1,d2)d2, d1> via the metric
        let q = self.g[0].mul(&r1).add(&self.g[1].mul(&r2)).value().re;
        // sectional curvature: q over the (negative) area element squared,
        // i.e. <X,X><Y,Y> - <X,Y>^2 = det g for the coordinate pair
        q / self.det_g.value().re
    }

    /// Metric pairing of tangent coefficient vectors.
    fn g_pair(&self, u: (f64, f64), v: (f64, f64)) -> f64 {
        let g0 = [self.g[0].value().re, self.g[1].value().re, self.g[2].value().re];
        g0[0] * u.0 * v.0 + g0[1] * (u.0 * v.1 + u.1 * v.0) + g0[2] * u.1 * v.1
    }

    /// Shape operator A_{J Z} as a 2x2 matrix on tangent coefficients, for a
    /// tangent vector Z given by constant coefficients.
    fn shape_matrix(&self, z: (f64, f64)) -> [[f64; 2]; 2] {
        let jz = self.tangent_field(&Jet::constant_re(z.0, 2, 2), &Jet::constant_re(z.1, 2, 2)).j_mul();
        // column m: coefficients of A_{JZ} d_m
        let mut mat = [[0.0; 2]; 2];
        for m in 0..2 {
            let hm = [&self.h[sym(m, 0)], &self.h[sym(m, 1)]];
            let p = [hm[0].inner(&jz).value().re, hm[1].inner(&jz).value().re];
            let gi = [self.ginv[0].value().re, self.ginv[1].value().re, self.ginv[2].value().re];
            mat[0][m] = gi[0] * p[0] + gi[1] * p[1];
            mat[1][m] = gi[1] * p[0] + gi[2] * p[1];
        }
        mat
    }

    /// Residuals of the Gauss and Codazzi structure equations.
    pub fn structural_residuals(&self) -> StructuralResiduals {
        // Gauss: <R(X,Y)Z,W> = eps(<X,W><Y,Z> - <X,Z><Y,W>) + <[A_JZ, A_JW]X, Y>
        // with X = d1, Y = d2 and a fixed set of (Z, W) combinations.
        let mut gauss: f64 = 0.0;
        let combos = [((1.0, 0.0), (0.0, 1.0)), ((0.3, 0.7), (-0.4, 1.1)), ((1.0, 1.0), (1.0, -1.0))];
        let x = (1.0, 0.0);
        let y = (0.0, 1.0);
        for (z, w) in combos {
            let (r1, r2) = self.intrinsic_curv_op(0);
            let (s1, s2) = self.intrinsic_curv_op(1);
            // R(d1,d2)Z
            let rz = (r1.value().re * z.0 + s1.value().re * z.1, r2.value().re * z.0 + s2.value().re * z.1);
            let lhs = self.g_pair(rz, w);
            let az = self.shape_matrix(z);
            let aw = self.shape_matrix(w);
            let commut = mat_sub(&mat_mul(&az, &aw), &mat_mul(&aw, &az));
            let cx = (commut[0][0] * x.0 + commut[0][1] * x.1, commut[1][0] * x.0 + commut[1][1] * x.1);
            let rhs = self.eps
                * (self.g_pair(x, w) * self.g_pair(y, z) - self.g_pair(x, z) * self.g_pair(y, w))
                + self.g_pair(cx, y);
            gauss = gauss.max((lhs - rhs).abs());
        }

        // Codazzi: (bar-nabla_{d1} h)(d2, dk) = (bar-nabla_{d2} h)(d1, dk)
        let cod_term = |i: usize, j: usize, k: usize| -> ComplexVec {
            let d = self.normal_part(&self.cov_axis(&self.h[sym(j, k)], i)).value();
            let mut acc = d;
            for m in 0..2 {
                let gij = self.gamma[m][sym(i, j)].value().re;
                let gik = self.gamma[m][sym(i, k)].value().re;
                acc = acc.sub(&self.h[sym(m, k)].value().scale(gij));
                acc = acc.sub(&self.h[sym(j, m)].value().scale(gik));
            }
            acc
        };
        let mut codazzi: f64 = 0.0;
        for k in 0..2 {
            codazzi = codazzi.max(cod_term(0, 1, k).sub(&cod_term(1, 0, k)).coord_norm());
        }
        StructuralResiduals { gauss, codazzi }
    }

    /// Difference between the curvature of the iterated projection connection
    /// and the constant-holomorphic-curvature formula, on ambient fields.
    pub fn connection_curvature_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for field in [&self.dx.truncate(2), &self.dy.j_mul().truncate(2)] {
            let numeric = self
                .cov_axis(&self.cov_axis(field, 1), 0)
                .sub(&self.cov_axis(&self.cov_axis(field, 0), 1))
                .value();
            let formula =
                self.ambient_curvature(&self.dx.value(), &self.dy.value(), &field.value());
            let scale = 1.0 + formula.coord_norm();
            worst = worst.max(numeric.sub(&formula).coord_norm() / scale);
        }
        worst
    }

    /// Full bitension bundle with the two analytic routes.
    pub fn bitension(&self) -> Result<BitensionResult> {
        let frame = self.frame(0.0)?;
        let tau = self.mean.value().scale(2.0);
        let tau2_direct = self.bitension_direct_with(&frame);
        let laplacian_h = self.laplacian(&frame, &self.mean);
        let tau2_laplacian = laplacian_h.scale(-2.0).add(&self.mean.value().scale(10.0 * self.eps));
        let route_discrepancy = tau2_direct.sub(&tau2_laplacian).coord_norm();
        Ok(BitensionResult {
            tau: tau.clone(),
            tau2_direct: tau2_direct.clone(),
            tau2_laplacian,
            laplacian_h,
            route_discrepancy,
            tau_character: causal_character(&tau, 1e-10 * self.gauge),
            tau2_character: causal_character(&tau2_direct, 1e-8 * self.gauge),
        })
    }

    /// Residual-based point classification.
    pub fn classify(&self, tol: f64) -> Result<ClassificationReport> {
        let bt = self.bitension()?;
        let g = self.gauss_curvature();
        let gauge = self.gauge;
        let h_val = self.mean.value();
        let h_norm = h_val.coord_norm();
        let h_sq = crate::linalg::inner(&h_val, &h_val)?;
        let t2 = &bt.tau2_direct;
        let t2_norm = t2.coord_norm();
        let t2_sq = crate::linalg::inner(t2, t2)?;

        let near = |v: f64, cut: f64| v.abs() <= cut;
        let band = |v: f64, cut: f64| v.abs() > cut && v.abs() <= 10.0 * cut;

        let minimal = near(h_norm, tol * gauge);
        let marginally_trapped = !minimal && near(h_sq, tol * gauge * gauge);
        let biharmonic = near(t2_norm, tol * gauge);
        let quasi_biharmonic = !biharmonic && near(t2_sq, tol * gauge * gauge);
        let indeterminate = band(h_norm, tol * gauge)
            || band(h_sq, tol * gauge * gauge)
            || band(t2_norm, tol * gauge)
            || band(t2_sq, tol * gauge * gauge);

        Ok(ClassificationReport {
            lagrangian: self.lagrangian_residual <= tol * gauge,
            horizontal: !self.ambient.is_lift() || self.horizontality_residual <= tol * gauge,
            minimal,
            marginally_trapped,
            biharmonic,
            quasi_biharmonic,
            indeterminate,
            gauss_curvature: g,
            g_minus_eps: (g - self.eps).abs(),
            h_norm,
            h_null_residual: h_sq.abs(),
            tau2_norm: t2_norm,
            tau2_null_residual: t2_sq.abs(),
            lagrangian_residual: self.lagrangian_residual,
            horizontality_residual: self.horizontality_residual,
        })
    }
}

fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn mat_sub(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][j] - b[i][j];
        }
    }
    out
}

/// Constant-holomorphic-sectional-curvature tensor R(X,Y)Z of the ambient.
pub fn ambient_curvature(x: &ComplexVec, y: &ComplexVec, z: &ComplexVec, eps: f64) -> ComplexVec {
    if eps == 0.0 {
        return ComplexVec::zeros(x.sig);
    }
    let ip = |u: &ComplexVec, v: &ComplexVec| crate::linalg::inner(u, v).expect("signature");
    let jx = x.j_mul();
    let jy = y.j_mul();
    let jz = z.j_mul();
    x.scale(ip(y, z))
        .sub(&y.scale(ip(x, z)))
        .add(&jx.scale(ip(z, &jy)))
        .sub(&jy.scale(ip(z, &jx)))
        .add(&jz.scale(2.0 * ip(x, &jy)))
        .scale(eps)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct StructuralResiduals {
    pub gauss: f64,
    pub codazzi: f64,
}

/// The bitension field computed by the two analytic routes.
#[derive(Clone, Debug)]
pub struct BitensionResult {
    pub tau: ComplexVec,
    pub tau2_direct: ComplexVec,
    pub tau2_laplacian: ComplexVec,
    pub laplacian_h: ComplexVec,
    pub route_discrepancy: f64,
    pub tau_character: CausalCharacter,
    pub tau2_character: CausalCharacter,
}

/// Flags and residuals for one surface point.
#[derive(Clone, Debug, Serialize)]
pub struct ClassificationReport {
    pub lagrangian: bool,
    pub horizontal: bool,
    pub minimal: bool,
    pub marginally_trapped: bool,
    pub biharmonic: bool,
    pub quasi_biharmonic: bool,
    pub indeterminate: bool,
    pub gauss_curvature: f64,
    pub g_minus_eps: f64,
    pub h_norm: f64,
    pub h_null_residual: f64,
    pub tau2_norm: f64,
    pub tau2_null_residual: f64,
    pub lagrangian_residual: f64,
    pub horizontality_residual: f64,
}
