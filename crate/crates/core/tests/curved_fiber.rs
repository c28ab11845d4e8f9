//! Cones over curved two-dimensional Norden fibers.
//!
//! A parallel J on a 2-dimensional Norden fiber makes g' the real part of a
//! holomorphic quadratic differential f(z)dz², and f dz² = dw² in the
//! coordinate w = ∫√f dz, so the fiber is flat. The conformally flat fiber
//! carries curvature k' but J is not parallel there.

use accr_core::analysis::{check_f5, verify_cone_suite, ConeConstants, Membership, SampleSet};
use accr_core::tolerance::Tolerances;
use accr_core::{load_manifold, AccRStructure, ConstantBindings, Execution};

fn cone(g_uu: &str, g_uv: &str, k: f64) -> AccRStructure {
    let src = format!(
        r#"{{
  "n": 1,
  "coordinates": ["t", "u", "v"],
  "domain": {{ "t": [0.5, 5.0], "u": [-0.5, 0.5], "v": [-0.5, 0.5] }},
  "constants": ["c", "ct", "kprime"],
  "g": [["1", "0", "0"], ["0", "t^2*({g_uu})", "t^2*({g_uv})"], ["0", "t^2*({g_uv})", "-t^2*({g_uu})"]],
  "phi": [["0", "0", "0"], ["0", "0", "-1"], ["0", "1", "0"]],
  "xi": ["1", "0", "0"],
  "eta": ["1", "0", "0"]
}}"#
    );
    load_manifold(src.as_bytes())
        .unwrap()
        .bind(&ConstantBindings::new().with("kprime", k).with("c", 1.0).with("ct", 1.0))
        .unwrap()
}

fn conformal(k: f64) -> AccRStructure {
    cone("1/(1 + kprime/4*(u^2 - v^2))^2", "0", k)
}

/// g' = Re(f dz²), f = (1 + k z²/4)⁻².
fn holomorphic(k: f64) -> AccRStructure {
    let a = "(1 + kprime/4*(u^2 - v^2))";
    let b = "(kprime/2*u*v)";
    let d = format!("(({a})^2 + ({b})^2)^2");
    cone(&format!("(({a})^2 - ({b})^2)/{d}"), &format!("2*{a}*{b}/{d}"), k)
}

fn suite(s: &AccRStructure, k: f64) -> Vec<accr_core::report::CheckRecord> {
    let consts = ConeConstants {
        c: 1.0,
        c_tilde: 1.0,
        k_prime: k,
    };
    let points = s.chart.latin_hypercube(16, 42);
    verify_cone_suite(s, consts, &points, Execution::Parallel, &Tolerances::default()).unwrap()
}

fn verdict(records: &[accr_core::report::CheckRecord], name: &str) -> bool {
    !records.iter().find(|r| r.name == name).unwrap().failed()
}

#[test]
fn conformal_fiber_has_curvature_but_is_not_f5() {
    for k in [0.7, -0.4] {
        let s = conformal(k);
        let r = suite(&s, k);
        assert!(verdict(&r, "curvature.R1212"), "k = {k}");
        assert!(verdict(&r, "curvature.tau"));
        assert!(verdict(&r, "soliton.g.lambda"));
        assert!(!verdict(&r, "class.F5_holds"));
    }
}

#[test]
fn holomorphic_fiber_is_f5_and_flat() {
    for k in [0.7, -0.4] {
        let s = holomorphic(k);
        let set = SampleSet::compute(&s, &s.chart.latin_hypercube(16, 7), Execution::Parallel).unwrap();
        let (f5, f5_0, _) = check_f5(&set, &Tolerances::default());
        assert_eq!(f5.status, Membership::Holds);
        assert_eq!(f5_0.status, Membership::Holds);
        // Fiber curvature drops out: the k' = 0 numbers hold for any k.
        let r = suite(&s, 0.0);
        assert!(r.iter().all(|c| !c.failed()), "k = {k}");
        assert!(!verdict(&suite(&s, k), "curvature.R1212"));
    }
}
