//! A structure with no special symmetry: the constant model
//! g0 = diag(1,-1,1), φ0e₁ = e₂, φ0e₂ = −e₁, ξ0 = e₃ pushed through the
//! frame P = (I+N)D, N strictly upper triangular, D diagonal. F is generic
//! and ω = F(ξ,ξ,·) does not vanish.

use accr_core::analysis::{
    classify, geometry_records, omega_convention_sensitive, validation_records, Membership, SampleSet,
};
use accr_core::expr::{BinOp, Node};
use accr_core::jets::Func;
use accr_core::report::Verdict;
use accr_core::tolerance::Tolerances;
use accr_core::{load_manifold, AccRStructure, Execution, Expression};

fn num(x: f64) -> Node {
    Node::Num(x)
}

fn is_num(n: &Node, x: f64) -> bool {
    matches!(n, Node::Num(v) if *v == x)
}

fn add(a: Node, b: Node) -> Node {
    if is_num(&a, 0.0) {
        b
    } else if is_num(&b, 0.0) {
        a
    } else {
        Node::bin(BinOp::Add, a, b)
    }
}

fn mul(a: Node, b: Node) -> Node {
    if is_num(&a, 0.0) || is_num(&b, 0.0) {
        num(0.0)
    } else if is_num(&a, 1.0) {
        b
    } else if is_num(&b, 1.0) {
        a
    } else {
        Node::bin(BinOp::Mul, a, b)
    }
}

fn neg(a: Node) -> Node {
    if is_num(&a, 0.0) {
        a
    } else {
        Node::Neg(Box::new(a))
    }
}

type M = Vec<Vec<Node>>;

fn matmul(a: &M, b: &M) -> M {
    (0..3)
        .map(|i| {
            (0..3)
                .map(|j| (0..3).fold(num(0.0), |acc, k| add(acc, mul(a[i][k].clone(), b[k][j].clone()))))
                .collect()
        })
        .collect()
}

fn t() -> Node {
    Node::Coord(0)
}
fn u() -> Node {
    Node::Coord(1)
}
fn v() -> Node {
    Node::Coord(2)
}

fn generic_source() -> String {
    let coords: Vec<String> = ["t", "u", "v"].iter().map(|s| s.to_string()).collect();
    let n01 = mul(num(0.3), v());
    let n02 = mul(num(0.2), mul(t(), u()));
    let n12 = mul(num(0.25), Node::Call(Func::Sin, Box::new(t())));
    let d = [num(1.0), t(), Node::Call(Func::Exp, Box::new(mul(num(0.3), u())))];
    let dinv = [
        num(1.0),
        Node::bin(BinOp::Div, num(1.0), t()),
        Node::Call(Func::Exp, Box::new(mul(num(-0.3), u()))),
    ];
    let one_plus_n: M = vec![
        vec![num(1.0), n01.clone(), n02.clone()],
        vec![num(0.0), num(1.0), n12.clone()],
        vec![num(0.0), num(0.0), num(1.0)],
    ];
    // (I+N)⁻¹ = I − N + N², N² = N01·N12 in the corner.
    let inv_one_plus_n: M = vec![
        vec![num(1.0), neg(n01.clone()), add(neg(n02), mul(n01, n12.clone()))],
        vec![num(0.0), num(1.0), neg(n12)],
        vec![num(0.0), num(0.0), num(1.0)],
    ];
    let diag = |e: &[Node; 3]| -> M {
        (0..3)
            .map(|i| (0..3).map(|j| if i == j { e[i].clone() } else { num(0.0) }).collect())
            .collect()
    };
    let p = matmul(&one_plus_n, &diag(&d));
    let q = matmul(&diag(&dinv), &inv_one_plus_n);
    let g0 = [1.0, -1.0, 1.0];
    let phi0: M = vec![
        vec![num(0.0), num(-1.0), num(0.0)],
        vec![num(1.0), num(0.0), num(0.0)],
        vec![num(0.0), num(0.0), num(0.0)],
    ];
    let phi = matmul(&matmul(&p, &phi0), &q);
    let mut g: M = vec![vec![num(0.0); 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let e = (0..3).fold(num(0.0), |acc, a| {
                add(acc, mul(num(g0[a]), mul(q[a][i].clone(), q[a][j].clone())))
            });
            g[i][j] = e.clone();
            g[j][i] = e;
        }
    }
    let s = |n: &Node| Expression::from_node(n.clone(), coords.clone()).to_string();
    let rows = |m: &M| -> Vec<Vec<String>> { m.iter().map(|r| r.iter().map(s).collect()).collect() };
    serde_json::json!({
        "name": "generic-frame",
        "n": 1,
        "coordinates": ["t", "u", "v"],
        "domain": { "t": [0.5, 3.0], "u": [-1.0, 1.0], "v": [-1.0, 1.0] },
        "g": rows(&g),
        "phi": rows(&phi),
        "xi": (0..3).map(|i| s(&p[i][2])).collect::<Vec<_>>(),
        "eta": (0..3).map(|j| s(&q[2][j])).collect::<Vec<_>>(),
    })
    .to_string()
}

fn generic() -> AccRStructure {
    load_manifold(generic_source().as_bytes()).unwrap()
}

#[test]
fn structure_identities_hold() {
    let s = generic();
    let points = s.chart.latin_hypercube(16, 5);
    let report = s.validate_structure(&points).unwrap();
    for r in validation_records(&report) {
        assert_eq!(r.verdict, Verdict::Pass, "{} {}", r.name, r.residual);
    }
}

#[test]
fn omega_is_nonzero_and_flagged() {
    let s = generic();
    let set = SampleSet::compute(&s, &s.chart.latin_hypercube(8, 5), Execution::Parallel).unwrap();
    assert!(omega_convention_sensitive(&set));
    let m = classify(&set, &Tolerances::default());
    assert_eq!(m.f0.status, Membership::Fails);
    assert_eq!(m.f5.status, Membership::Fails);
    assert_eq!(m.sasaki_like.status, Membership::Fails);
}

#[test]
fn identity_suites_and_cross_routes_hold_with_nonzero_omega() {
    let s = generic();
    let set = SampleSet::compute(&s, &s.chart.latin_hypercube(16, 11), Execution::Parallel).unwrap();
    let records = geometry_records(&s, &set, &Tolerances::default()).unwrap();
    assert!(records.iter().any(|r| r.name == "omega.convention_sensitive"));
    for r in &records {
        assert!(!r.failed(), "{} residual {:e}", r.name, r.residual);
    }
    for name in [
        "cross.nabla_tilde",
        "cross.F_tilde",
        "g.F_xi",
        "gtilde.curvature_symmetries",
    ] {
        assert_eq!(
            records.iter().find(|r| r.name == name).unwrap().verdict,
            Verdict::Pass,
            "{name}"
        );
    }
}
