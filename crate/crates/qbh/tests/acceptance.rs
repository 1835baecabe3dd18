//! Acceptance gate: one test (and one printed pass/fail line) per criterion.
//!
//! Criteria cover cross-route bitension agreement, the quasi-biharmonic and
//! biharmonic classifications of the built-in families, the adapted-frame
//! identity suite, the structure equations, proof-route invariants, the
//! light-cone curve suite, regression snapshots for the corrected/mirrored
//! families, and the finite-difference fallback.

use std::collections::BTreeMap;

use rayon::prelude::*;

use qbh::families::{build_family, Family, FamilyName, FamilyParams, Provenance};
use qbh::frame::{
    bitension_adapted_frame, build_adapted_frame, frame_identity_residuals, lemma_residuals,
};
use qbh::geometry::PointState;
use qbh::lightcone::{
    const_fn, integrate_remark12_curve, legendre_report, make_flat_null_legendre,
    seed_remark12_initial_data,
};
use qbh::report::{run_convergence, run_verification, Backend, VerifyJob};

fn family(name: FamilyName) -> Family {
    build_family(name, &FamilyParams::default()).expect("family builds")
}

fn verdict(criterion: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {criterion}: {detail}");
    assert!(pass, "{criterion}: {detail}");
}

/// Worst residual of a per-point function over the regular 21x21 grid.
fn grid_worst<F>(fam: &Family, nx: usize, ny: usize, f: F) -> f64
where
    F: Fn(&PointState) -> f64 + Sync,
{
    fam.grid(nx, ny)
        .par_iter()
        .map(|&(x, y)| {
            let st = PointState::compute(&fam.patch, x, y).expect("regular point");
            f(&st)
        })
        .reduce(|| 0.0, f64::max)
}

#[test]
fn criterion_1_route_agreement() {
    let names = [
        FamilyName::Thm9I,
        FamilyName::Thm10I,
        FamilyName::Thm7FlatQbh,
        FamilyName::Thm6FlatBiharmonic,
    ];
    let mut worst = 0.0f64;
    for name in names {
        let fam = family(name);
        let w = grid_worst(&fam, 21, 21, |st| {
            let bt = st.bitension().unwrap();
            let scale = 1.0 + bt.tau2_direct.coord_norm();
            let mut routes = vec![bt.tau2_direct.clone(), bt.tau2_laplacian.clone()];
            for gauge in [1.0, 2.0] {
                let fr = build_adapted_frame(st, gauge).unwrap();
                routes.push(bitension_adapted_frame(&fr, st.eps));
            }
            let mut d = 0.0f64;
            for i in 0..routes.len() {
                for j in i + 1..routes.len() {
                    d = d.max(routes[i].sub(&routes[j]).coord_norm());
                }
            }
            d / scale
        });
        worst = worst.max(w);
    }
    verdict(
        "criterion 1 route agreement",
        worst <= 1e-7,
        &format!("max pairwise route discrepancy {worst:.3e} (tol 1e-7, four families, 21x21)"),
    );
}

#[test]
fn criterion_2_quasi_biharmonic_families() {
    let cases = [
        (FamilyName::Thm9I, 1.0),
        (FamilyName::Thm10I, -1.0),
        (FamilyName::Thm7FlatQbh, 0.0),
    ];
    let mut detail = String::new();
    let mut pass = true;
    for (name, g_expect) in cases {
        let fam = family(name);
        let w = grid_worst(&fam, 21, 21, |st| {
            let rep = st.classify(1e-8).unwrap();
            let mut bad = 0.0f64;
            bad = bad.max(rep.tau2_null_residual / 1e-8);
            bad = bad.max((1e-3 - rep.tau2_norm).max(0.0) / 1e-3);
            bad = bad.max(rep.h_null_residual / 1e-10);
            bad = bad.max(if rep.h_norm > 1e-3 { 0.0 } else { 1.0 });
            bad = bad.max((rep.gauss_curvature - g_expect).abs() / 1e-8);
            bad
        });
        pass &= w <= 1.0;
        detail.push_str(&format!("{name} worst normalized residual {w:.3e}; "));
    }
    verdict("criterion 2 quasi-biharmonic verification", pass, detail.trim_end());
}

#[test]
fn criterion_3_biharmonic_family() {
    let fam = family(FamilyName::Thm6FlatBiharmonic);
    let w = grid_worst(&fam, 21, 21, |st| {
        let rep = st.classify(1e-8).unwrap();
        let mut bad = rep.tau2_norm / 1e-8;
        if !rep.marginally_trapped {
            bad = bad.max(1.0);
        }
        bad
    });
    verdict(
        "criterion 3 biharmonic verification",
        w <= 1.0,
        &format!("worst normalized residual {w:.3e} over 21x21 grid"),
    );
}

#[test]
fn criterion_4_frame_identities_and_lemmas() {
    // every built-in family with nonvanishing lightlike mean curvature; the
    // hyperbolic-trigonometric and zero-curvature curve families come out
    // minimal (their snapshots record this) so the adapted frame does not
    // exist there
    let mt_families = [
        FamilyName::Thm6FlatBiharmonic,
        FamilyName::Thm7FlatQbh,
        FamilyName::Thm9I,
        FamilyName::Thm9Ii,
        FamilyName::Thm9Corrected,
        FamilyName::Thm10I,
        FamilyName::Thm10Ii,
    ];
    let mut worst = 0.0f64;
    for name in mt_families {
        let fam = family(name);
        let w = grid_worst(&fam, 5, 5, |st| {
            let fr = build_adapted_frame(st, 1.0).unwrap();
            let id = frame_identity_residuals(&fr, st.gauss_curvature(), st.eps).worst();
            let lm = lemma_residuals(st, &fr).unwrap().worst();
            // pack both into one scalar, each normalized by its tolerance
            (id / 1e-8).max(lm / 1e-7)
        });
        worst = worst.max(w);
    }
    verdict(
        "criterion 4 frame identities and lemmas",
        worst <= 1.0,
        &format!("worst identity/lemma residual {worst:.3e} x tolerance over 7 families"),
    );
}

#[test]
fn criterion_5_structure_equations() {
    let mut worst = 0.0f64;
    for name in FamilyName::all() {
        let fam = family(name);
        let w = grid_worst(&fam, 5, 5, |st| {
            let sr = st.structural_residuals();
            sr.gauss.max(sr.codazzi)
        });
        worst = worst.max(w);
    }
    // projection-connection curvature against the constant-holomorphic-
    // curvature tensor, one lift family per sign of epsilon
    let mut worst_conn = 0.0f64;
    for name in [FamilyName::Thm9I, FamilyName::Thm10I] {
        let fam = family(name);
        let w = grid_worst(&fam, 5, 5, |st| st.connection_curvature_residual());
        worst_conn = worst_conn.max(w);
    }
    verdict(
        "criterion 5 structure equations",
        worst <= 1e-7 && worst_conn <= 1e-7,
        &format!("Gauss/Codazzi worst {worst:.3e}, connection curvature worst {worst_conn:.3e} (tol 1e-7)"),
    );
}

#[test]
fn criterion_6_proof_route_invariants() {
    let fam7 = family(FamilyName::Thm7FlatQbh);
    let worst_bc = grid_worst(&fam7, 9, 9, |st| {
        let fr = build_adapted_frame(st, 1.0).unwrap();
        (fr.b.value().re - fr.c.value().re).abs()
    });
    let min_margin = fam7
        .grid(9, 9)
        .par_iter()
        .map(|&(x, y)| {
            let st = PointState::compute(&fam7.patch, x, y).unwrap();
            let fr = build_adapted_frame(&st, 1.0).unwrap();
            let (a, b, c) = (fr.a.value().re, fr.b.value().re, fr.c.value().re);
            (a - 2.0 * b - c).abs()
        })
        .reduce(|| f64::INFINITY, f64::min);
    let mut worst_abc = 0.0f64;
    for name in [FamilyName::Thm9I, FamilyName::Thm10I] {
        let fam = family(name);
        worst_abc = worst_abc.max(grid_worst(&fam, 9, 9, |st| {
            let fr = build_adapted_frame(st, 1.0).unwrap();
            let (a, b, c) = (fr.a.value().re, fr.b.value().re, fr.c.value().re);
            (a - 2.0 * b - c).abs()
        }));
    }
    verdict(
        "criterion 6 proof-route invariants",
        worst_bc <= 1e-9 && min_margin >= 1e-3 && worst_abc <= 1e-8,
        &format!(
            "flat family |b-c| <= {worst_bc:.3e}, |a-2b-c| >= {min_margin:.3e}; nonflat |a-2b-c| <= {worst_abc:.3e}"
        ),
    );
}

#[test]
fn criterion_7_curve_suite() {
    // closed-form null curve residuals
    let curve = make_flat_null_legendre(1.0).unwrap();
    let mut worst_null = 0.0f64;
    for k in 0..50 {
        let t = 2.0 * k as f64 / 49.0;
        let rep = legendre_report(&curve, t).unwrap();
        worst_null = worst_null
            .max(rep.residual_cone)
            .max(rep.residual_speed)
            .max(rep.kappa_sq.abs())
            .max((rep.pairing - 1.0).abs());
    }

    // integrated curve invariants over [0, 0.5]
    let init = seed_remark12_initial_data(1.0, 0.0).unwrap();
    let (sampled, drift) =
        integrate_remark12_curve(const_fn(1.0), const_fn(0.0), init, 0.5, 1e-3).unwrap();
    let spec = std::sync::Arc::new(sampled).into_curve_spec((0.0, 0.5));
    let mut worst_kappa = 0.0f64;
    let mut worst_tau = 0.0f64;
    for k in 0..=10 {
        let t = 0.5 * k as f64 / 10.0;
        let rep = legendre_report(&spec, t).unwrap();
        worst_kappa = worst_kappa.max((rep.kappa_sq - 6.0).abs());
        worst_tau = worst_tau.max((rep.tau_hat + 8.0 * std::f64::consts::SQRT_2).abs());
    }

    // step-halving convergence order of the integrator
    let end_state = |h: f64| {
        let init = seed_remark12_initial_data(1.0, 0.0).unwrap();
        let (s, _) =
            integrate_remark12_curve(const_fn(1.0), const_fn(0.0), init, 0.5, h).unwrap();
        s.state_at(0.5)
    };
    let (s1, s2, s3) = (end_state(0.05), end_state(0.025), end_state(0.0125));
    let d1 = s1[0].sub(&s2[0]).coord_norm();
    let d2 = s2[0].sub(&s3[0]).coord_norm();
    let order = (d1 / d2).log2();

    let pass = worst_null <= 1e-13
        && worst_kappa <= 1e-6
        && worst_tau <= 1e-5
        && drift.max() <= 1e-8
        && order >= 3.9;
    verdict(
        "criterion 7 curve suite",
        pass,
        &format!(
            "null residuals {worst_null:.2e}, kappa^2 err {worst_kappa:.2e}, tau err {worst_tau:.2e}, drift {:.2e}, RK order {order:.2}",
            drift.max()
        ),
    );
}

#[test]
fn criterion_8_regression_snapshots() {
    let names = [
        FamilyName::Thm9Ii,
        FamilyName::Thm9Iii,
        FamilyName::Thm9Iv,
        FamilyName::Thm10Ii,
        FamilyName::Thm10Iii,
        FamilyName::Thm10Iv,
    ];
    let update = std::env::var("QBH_UPDATE_SNAPSHOTS").is_ok();
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/snapshots");
    let mut detail = String::new();
    let mut pass = true;
    for name in names {
        let fam = family(name);
        assert!(matches!(
            fam.expected.provenance,
            Provenance::PaperCorrected | Provenance::Empirical
        ));
        let job = VerifyJob {
            family: name,
            params: BTreeMap::new(),
            nx: 5,
            ny: 5,
            window: None,
            backend: Backend::Jet,
            fd_step: 2e-2,
            tol: 1e-8,
        };
        let (report, _) = run_verification(&job, &fam).unwrap();
        // internal consistency: every always-enforced check passes
        for check in report.checks.iter().filter(|c| c.asserted) {
            pass &= check.pass;
            if !check.pass {
                detail.push_str(&format!("{name}: {} residual {:.3e}; ", check.name, check.max_abs_residual));
            }
        }
        let snap = serde_json::json!({
            "family": report.family,
            "provenance": report.expected.provenance,
            "points": report.classification.points,
            "minimal": report.classification.minimal,
            "marginally_trapped": report.classification.marginally_trapped,
            "biharmonic": report.classification.biharmonic,
            "quasi_biharmonic": report.classification.quasi_biharmonic,
            "indeterminate": report.classification.indeterminate,
        });
        let body = serde_json::to_string_pretty(&snap).unwrap() + "\n";
        let path = dir.join(format!("{name}.json"));
        if update {
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(&path, &body).unwrap();
        } else {
            let stored = std::fs::read_to_string(&path)
                .unwrap_or_else(|_| panic!("missing snapshot {}", path.display()));
            if stored != body {
                pass = false;
                detail.push_str(&format!("{name}: snapshot drift; "));
            }
        }
    }
    if detail.is_empty() {
        detail = "six families internally consistent, snapshots unchanged".into();
    }
    verdict("criterion 8 regression snapshots", pass, detail.trim_end());
}

#[test]
fn criterion_9_fd_fallback_convergence() {
    let fam = family(FamilyName::Thm9I);
    let rep = run_convergence(&fam, 2e-2).unwrap();
    verdict(
        "criterion 9 fd fallback",
        rep.pass,
        &format!(
            "observed order: metric {:.2}, mean curvature {:.2} (need >= 2)",
            rep.min_metric_order, rep.min_mean_order
        ),
    );
}
