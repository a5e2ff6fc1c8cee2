use std::time::Instant;

use vgeo::geometry::point;
use vgeo::paths::verify_eps_path;
use vgeo::regularity::*;
use vgeo::sets::{catalog, sawtooth, ProjectionConfig};
use vgeo::Point;

fn origin() -> Point {
    point(&[0.0, 0.0])
}

#[test]
fn parabola_pair_witness_matches_hand_values() {
    let c = catalog("parabola-pair").unwrap();
    let v = check_super_regularity(&c, &origin(), 1.0 / 3.0, 0.5, 32, 42).unwrap();
    let w = v.witness.expect("violation");
    // Independent re-evaluation of <v, x'-x> and eps |v| |x'-x|.
    let (x, xp, n) = (&w.points[0], &w.points[1], &w.vectors[0]);
    let d = [xp[0] - x[0], xp[1] - x[1]];
    let lhs = n[0] * d[0] + n[1] * d[1];
    let rhs = (1.0 / 3.0) * n[0].hypot(n[1]) * d[0].hypot(d[1]);
    assert!((lhs - 2.0 / 9.0).abs() < 1e-12);
    assert!((rhs - 2.0 * 13f64.sqrt() / 81.0).abs() < 1e-12);
    assert!(is_strict(lhs, rhs));
}

#[test]
fn convex_sets_pass_super_regularity() {
    for (name, p) in [("unit-ball", point(&[1.0, 0.0])), ("halfplane", origin())] {
        let c = catalog(name).unwrap();
        let v = check_super_regularity(&c, &p, 1e-3, 0.5, 24, 42).unwrap();
        assert!(!v.violated(), "{name}: {:?}", v.witness);
    }
}

#[test]
fn uag_holds_on_sawtooth_and_convex() {
    let t0 = Instant::now();
    let c = catalog("sawtooth-graph").unwrap();
    let v = check_uag(&c, &origin(), 0.3, 1.0 / 16.0, 8, 42, None).unwrap();
    assert!(!v.violated(), "{:?}", v.witness);
    assert!(v.min_margin > 0.0);
    let ball = catalog("unit-ball").unwrap();
    let v = check_uag(&ball, &point(&[0.5, 0.0]), 0.05, 0.25, 6, 42, None).unwrap();
    assert!(!v.violated(), "{:?}", v.witness);
    eprintln!("uag: {:?}", t0.elapsed());
}

#[test]
fn uag_fails_on_quartic_cross() {
    let c = catalog("quartic-cross").unwrap();
    let v = check_uag(&c, &origin(), 0.3, 0.25, 4, 42, None).unwrap();
    assert!(v.violated());
    assert_eq!(v.confidence, Confidence::Lower);
    let w = v.witness.unwrap();
    assert!(w.is_strict());
}

#[test]
fn intrinsic_convexity_verdicts() {
    let pp = catalog("parabola-pair").unwrap();
    let v = check_intrinsic_approx_convexity(&pp, &origin(), 0.5, 0.25, 16, 42).unwrap();
    assert!(v.violated());
    let w = v.witness.unwrap();
    // The midpoint (a, 0) of a mirror pair is about a^2 from the set.
    let z = point(&w.points[2]);
    assert!((pp.distance(&z) - w.lhs).abs() < 1e-12);

    let epi = catalog("sawtooth-epigraph").unwrap();
    let v = check_intrinsic_approx_convexity(&epi, &origin(), 0.3, 1.0 / 16.0, 32, 42).unwrap();
    assert!(!v.violated(), "{:?}", v.witness);

    let ball = catalog("unit-ball").unwrap();
    let v = check_intrinsic_approx_convexity(&ball, &point(&[0.5, 0.0]), 0.0, 0.4, 32, 42).unwrap();
    assert!(!v.violated());
}

#[test]
fn function_convexity_verdicts() {
    let v = check_function_approx_convexity("sawtooth", |x: &Point| Ok(sawtooth(x[0])), &point(&[0.0]), 0.25, 1.0 / 16.0, 64, 42).unwrap();
    assert!(!v.violated(), "{:?}", v.witness);
    let v = check_function_approx_convexity("x^2", |x: &Point| Ok(x[0] * x[0]), &point(&[0.3]), 0.0, 1.0, 64, 42).unwrap();
    assert!(!v.violated());
    let v = check_function_approx_convexity("-|x|", |x: &Point| Ok(-x[0].abs()), &point(&[0.0]), 1.0, 0.5, 8, 42).unwrap();
    let w = v.witness.unwrap();
    assert!(w.lhs > w.rhs);
}

#[test]
fn prox_probe_verdicts() {
    let t0 = Instant::now();
    let pw = catalog("power32-graph").unwrap();
    let v = probe_prox_regularity(&pw, &origin(), 0.1, 9, 42).unwrap();
    assert!(v.violated());
    let w = v.witness.unwrap();
    assert_eq!(w.points[0][0], 0.0);
    assert!(w.points.len() >= 3);

    let band = catalog("parabola-band").unwrap();
    let v = probe_prox_regularity(&band, &origin(), 0.1, 9, 42).unwrap();
    assert!(!v.violated(), "{:?}", v.witness);

    let ball = catalog("unit-ball").unwrap();
    let v = probe_prox_regularity(&ball, &point(&[1.0, 0.0]), 0.2, 9, 42).unwrap();
    assert!(!v.violated(), "{:?}", v.witness);
    eprintln!("prox: {:?}", t0.elapsed());
}

#[test]
fn power32_witness_matches_brute_force() {
    let t = 0.1;
    let g = |x: f64| x * x + (t - x.powf(1.5)).powi(2);
    let best = (1..=2_000_000)
        .map(|i| i as f64 * 1e-7)
        .min_by(|a, b| g(*a).total_cmp(&g(*b)))
        .unwrap();
    let c = catalog("power32-graph").unwrap();
    let near = c.project(&point(&[0.0, t]), &ProjectionConfig::default()).unwrap();
    assert_eq!(near.len(), 2);
    for p in near {
        assert!((p[0].abs() - best).abs() < 1e-6);
    }
}

#[test]
fn clarke_catalog_verdicts() {
    let v = clarke_verdict_catalog("parabola-pair", &point(&[0.3, 0.09])).unwrap();
    assert_eq!(v.verdict, Verdict::NoViolationFound);
    for k in 0..4 {
        let s = f64::powi(2.0, -(k + 2));
        let apex = point(&[3.0 * s, sawtooth(3.0 * s)]);
        let v = clarke_verdict_catalog("sawtooth-graph", &apex).unwrap();
        assert_eq!(v.verdict, Verdict::Violated, "apex {k}");
    }
    let v = clarke_verdict_catalog("halfplane", &origin()).unwrap();
    assert_eq!(v.verdict, Verdict::NoViolationFound);
}

#[test]
fn eps_path_search_verdicts() {
    let t0 = Instant::now();
    let saw = catalog("sawtooth-graph").unwrap();
    let pairs: Vec<(Point, Point)> = (4..=6).map(|k| (origin(), point(&[f64::powi(2.0, -k), 0.0]))).collect();
    let v = search_eps_path_violation(&saw, &origin(), 0.5, &pairs, 1.0 / 1024.0).unwrap();
    assert!(v.violated());
    assert!(v.min_margin < 0.0);

    let circle = catalog("unit-circle").unwrap();
    let th: f64 = 0.05;
    let pairs = vec![(point(&[1.0, 0.0]), point(&[th.cos(), th.sin()]))];
    let v = search_eps_path_violation(&circle, &point(&[1.0, 0.0]), 0.05, &pairs, 1e-3).unwrap();
    assert!(!v.violated(), "{:?}", v.witness);

    let ball = catalog("unit-ball").unwrap();
    let pairs = vec![(point(&[0.1, 0.2]), point(&[-0.3, 0.4]))];
    let v = search_eps_path_violation(&ball, &origin(), 1e-6, &pairs, 1e-2).unwrap();
    assert!(!v.violated());
    let cands = eps_path_candidates(&ball, &pairs[0].0, &pairs[0].1, 1e-6, 1e-2);
    assert_eq!(cands[0].0, "chord");
    assert_eq!(cands[0].1.achieved, 0.0);
    eprintln!("eps-path search: {:?}", t0.elapsed());
}

#[test]
fn graph_curve_is_smooth_without_corners() {
    let c = catalog("parabola-graph").unwrap();
    let f = match &c.kind {
        vgeo::sets::OracleKind::Graph(f) => f.clone(),
        _ => return,
    };
    let (x, xp) = (point(&[0.1, 0.01]), point(&[0.2, 0.04]));
    let g = graph_curve(&f, &x, &xp, 64).unwrap();
    let r = verify_eps_path(&g, &c, &x, &xp, 0.2);
    assert!(r.passes, "{r:?}");
}

#[test]
fn verdicts_are_deterministic() {
    let c = catalog("unit-circle").unwrap();
    let a = check_super_regularity(&c, &point(&[1.0, 0.0]), 0.1, 0.05, 16, 7).unwrap();
    let b = check_super_regularity(&c, &point(&[1.0, 0.0]), 0.1, 0.05, 16, 7).unwrap();
    assert_eq!(a, b);
}
