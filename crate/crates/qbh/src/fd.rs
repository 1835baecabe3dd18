//! Central finite differences with Richardson extrapolation: a fallback jet
//! backend for black-box point evaluators without analytic jet support.

use num_complex::Complex64;

use crate::error::{QbhError, Result};
use crate::jet::{index_set, VecJet};
use crate::linalg::{ComplexVec, Signature};

const FACT: [f64; 6] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0];

/// Second-order central stencil weights for derivative order k on offsets -2..=2.
const STENCILS: [[f64; 5]; 5] = [
    [0.0, 0.0, 1.0, 0.0, 0.0],
    [0.0, -0.5, 0.0, 0.5, 0.0],
    [0.0, 1.0, -2.0, 1.0, 0.0],
    [-0.5, 1.0, 0.0, -1.0, 0.5],
    [1.0, -4.0, 6.0, -4.0, 1.0],
];

struct EvalTable {
    // values[p][q], offsets p,q in -2..=2 relative to base
    values: Vec<Vec<ComplexVec>>,
}

fn eval_table_2(
    map: &dyn Fn(f64, f64) -> Result<ComplexVec>,
    x: f64,
    y: f64,
    h: f64,
) -> Result<EvalTable> {
    let mut values = Vec::with_capacity(5);
    for p in -2i32..=2 {
        let mut row = Vec::with_capacity(5);
        for q in -2i32..=2 {
            let v = map(x + p as f64 * h, y + q as f64 * h)?;
            if !v.is_finite() {
                return Err(QbhError::StencilError { dx: p as f64 * h, dy: q as f64 * h });
            }
            row.push(v);
        }
        values.push(row);
    }
    Ok(EvalTable { values })
}

fn partial_2(table: &EvalTable, i: usize, j: usize, h: f64, sig: Signature) -> ComplexVec {
    let scale = 1.0 / h.powi((i + j) as i32);
    let mut acc = vec![Complex64::new(0.0, 0.0); sig.n];
    for p in 0..5 {
        let wi = STENCILS[i][p];
        if wi == 0.0 {
            continue;
        }
        for q in 0..5 {
            let wj = STENCILS[j][q];
            if wj == 0.0 {
                continue;
            }
            for (k, a) in acc.iter_mut().enumerate() {
                *a += table.values[p][q].coords[k] * (wi * wj);
            }
        }
    }
    ComplexVec::new(acc.into_iter().map(|c| c * scale).collect(), sig)
}

/// Finite-difference bivariate jet of a black-box map, with an error estimate
/// from step halving. Coefficients of derivative order >= 1 come from a
/// Richardson-extrapolated pair of central-difference evaluations.
pub fn fd_vec_jet_2(
    map: &dyn Fn(f64, f64) -> Result<ComplexVec>,
    x: f64,
    y: f64,
    order: usize,
    h: f64,
) -> Result<(VecJet, f64)> {
    assert!(h > 0.0);
    assert!(order <= 4);
    let center = map(x, y)?;
    let sig = center.sig;
    let coarse = eval_table_2(map, x, y, h)?;
    let fine = eval_table_2(map, x, y, h / 2.0)?;

    let fscale = {
        let mut m: f64 = 0.0;
        for row in &coarse.values {
            for v in row {
                m = m.max(v.coord_norm());
            }
        }
        m
    };

    let mut jet = VecJet::zeros(sig, 2, order);
    let mut worst = 0.0f64;
    for (i, j) in index_set(2, order) {
        let k = i + j;
        let (val, err) = if k == 0 {
            (center.clone(), 0.0)
        } else {
            let d_h = partial_2(&coarse, i, j, h, sig);
            let d_h2 = partial_2(&fine, i, j, h / 2.0, sig);
            // both stencils are O(h^2): Richardson gives O(h^4)
            let extrap = d_h2.scale(4.0 / 3.0).sub(&d_h.scale(1.0 / 3.0));
            let trunc = d_h.sub(&d_h2).coord_norm();
            let abs_weight: f64 =
                STENCILS[i].iter().map(|w| w.abs()).sum::<f64>() * STENCILS[j].iter().map(|w| w.abs()).sum::<f64>();
            let roundoff = 4.0 * f64::EPSILON * fscale * abs_weight / (h / 2.0).powi(k as i32);
            (extrap, trunc + roundoff)
        };
        let cerr = err / (FACT[i] * FACT[j]);
        worst = worst.max(cerr);
        for (comp, c) in jet.comps.iter_mut().zip(&val.coords) {
            comp.set_coeff(i, j, c / (FACT[i] * FACT[j]));
        }
    }
    Ok((jet, worst))
}

/// Univariate analogue of [`fd_vec_jet_2`].
pub fn fd_vec_jet_1(
    map: &dyn Fn(f64) -> Result<ComplexVec>,
    t: f64,
    order: usize,
    h: f64,
) -> Result<(VecJet, f64)> {
    assert!(h > 0.0);
    assert!(order <= 4);
    let map2 = |x: f64, _y: f64| map(x);
    let (jet2, err) = fd_vec_jet_2(&map2, t, 0.0, order, h)?;
    let sig = jet2.sig;
    let mut jet = VecJet::zeros(sig, 1, order);
    for i in 0..=order {
        for (dst, src) in jet.comps.iter_mut().zip(&jet2.comps) {
            dst.set_coeff(i, 0, src.coeff(i, 0));
        }
    }
    Ok((jet, err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::jet_eval_1;

    fn sig1() -> Signature {
        Signature::new(1, 0)
    }

    #[test]
    fn exp_ikx_second_coefficient() {
        let k = 1.0;
        let map = |t: f64| {
            Ok(ComplexVec::new(vec![Complex64::new(0.0, k * t).exp()], sig1()))
        };
        let (jet, err) = fd_vec_jet_1(&map, 0.0, 2, 1e-2).unwrap();
        let c2 = jet.comps[0].coeff(2, 0);
        assert!((c2.re - (-0.5)).abs() <= 1e-6, "c2 = {c2}, err = {err}");
        // must agree with the analytic jet within the estimate
        let exact = jet_eval_1(|x| Ok(x.scale_c(Complex64::new(0.0, k)).exp()), 0.0, 2).unwrap();
        assert!((c2 - exact.coeff(2, 0)).norm() <= err);
    }

    #[test]
    fn constant_map_exact_zeros() {
        let map = |_t: f64| Ok(ComplexVec::new(vec![Complex64::new(3.25, -1.5)], sig1()));
        let (jet, _) = fd_vec_jet_1(&map, 0.4, 4, 1e-2).unwrap();
        for i in 1..=4 {
            assert_eq!(jet.comps[0].coeff(i, 0).norm(), 0.0);
        }
    }

    #[test]
    fn quartic_top_coefficient() {
        let map = |t: f64| Ok(ComplexVec::new(vec![Complex64::new(t.powi(4), 0.0)], sig1()));
        let (jet, err) = fd_vec_jet_1(&map, 0.0, 4, 1e-2).unwrap();
        let c4 = jet.comps[0].coeff(4, 0).re;
        assert!((c4 - 1.0).abs() <= err.max(1e-10), "c4 = {c4}, err = {err}");
    }

    #[test]
    fn convergence_order_at_least_two() {
        // raw (non-extrapolated) convergence is order 2; the extrapolated
        // values must improve by at least a factor 4 when h halves.
        let map = |t: f64| Ok(ComplexVec::new(vec![Complex64::new(0.0, 1.3 * t).exp()], sig1()));
        let exact = jet_eval_1(
            |x| Ok(x.scale_c(Complex64::new(0.0, 1.3)).exp()),
            0.2,
            3,
        )
        .unwrap();
        let mut errs = Vec::new();
        for &h in &[0.08, 0.04, 0.02] {
            let (jet, _) = fd_vec_jet_1(&map, 0.2, 3, h).unwrap();
            let e = (0..=3)
                .map(|i| (jet.comps[0].coeff(i, 0) - exact.coeff(i, 0)).norm())
                .fold(0.0f64, f64::max);
            errs.push(e);
        }
        assert!(errs[0] / errs[1] >= 4.0, "errors: {errs:?}");
        assert!(errs[1] / errs[2] >= 4.0, "errors: {errs:?}");
    }

    #[test]
    fn nonfinite_inside_stencil() {
        let map = |t: f64| {
            Ok(ComplexVec::new(vec![Complex64::new(1.0 / (t - 0.01), 0.0)], sig1()))
        };
        let r = fd_vec_jet_1(&map, 0.0, 2, 0.01);
        assert!(matches!(r, Err(QbhError::StencilError { .. })));
    }
}
