use vgeo::geometry::point;
use vgeo::optimality::*;
use vgeo::sets::{catalog, MEMBER_TOL};
use vgeo::Error;

#[test]
fn first_order_holds_on_convex_and_circle() {
    let epi = catalog("abs-epigraph").unwrap();
    let f = Objective::parse(2, "x2").unwrap();
    let r = check_first_order(&f, &epi, &point(&[0.0, 0.0]), 1e-6, 64).unwrap();
    assert!(r.holds, "{r:?}");

    let circle = catalog("unit-circle").unwrap();
    let f = Objective::parse(2, "x1^2 + x2^2").unwrap();
    let r = check_first_order(&f, &circle, &point(&[1.0, 0.0]), 1e-6, 64).unwrap();
    assert!(r.holds, "{r:?}");
}

#[test]
fn first_order_holds_at_ball_minimizer() {
    let ball = catalog("unit-ball").unwrap();
    let f = Objective::parse(2, "x1 + x2").unwrap();
    let s = -(0.5f64).sqrt();
    let r = check_first_order(&f, &ball, &point(&[s, s]), 1e-6, 64).unwrap();
    assert!(r.holds, "{r:?}");
}

#[test]
fn power32_descent_path() {
    let c = catalog("power32-graph").unwrap();
    let f = Objective::parse(2, "x1").unwrap();
    let x = point(&[0.0, 0.0]);
    let rep = descent_path(&f, &c, &x, None, 1e-6).unwrap();
    assert!(rep.slope <= -0.5, "{}", rep.slope);
    assert!(rep.slope <= rep.slope_bound + 1e-6);
    assert!(rep.t_star > 0.0);
    for (i, p) in rep.curve.points().iter().enumerate() {
        assert!(c.contains(p, 1e-8), "node {i} infeasible");
        if rep.curve.grid()[i] > 0.0 && rep.curve.grid()[i] <= rep.t_star {
            assert!(rep.values[i] < rep.values[i - 1]);
        }
    }
    let (t, p, v) = armijo_step(&f, &rep, ARMIJO_C).unwrap();
    assert!(t > 0.0 && v < 0.0 && c.contains(&p, MEMBER_TOL.max(1e-8)));
}

#[test]
fn parabola_epigraph_slope_matches_boundary_derivative() {
    let c = catalog("parabola-epigraph").unwrap();
    let f = Objective::parse(2, "x2").unwrap();
    let v = point(&[-1.0, -2.0]) / 5f64.sqrt();
    let rep = descent_path(&f, &c, &point(&[1.0, 1.0]), Some(v), 1e-6).unwrap();
    assert!((rep.slope + 2.0 / 5f64.sqrt()).abs() < 1e-3, "{}", rep.slope);

    // The worst sampled direction is the same boundary tangent.
    let fo = check_first_order(&f, &c, &point(&[1.0, 1.0]), 1e-6, 64).unwrap();
    assert!(!fo.holds);
    assert!((fo.worst_value + 2.0 / 5f64.sqrt()).abs() < 1e-3, "{fo:?}");
}

#[test]
fn descent_refuses_without_descent_direction() {
    let epi = catalog("abs-epigraph").unwrap();
    let f = Objective::parse(2, "x2").unwrap();
    assert!(matches!(
        descent_path(&f, &epi, &point(&[0.0, 0.0]), None, 1e-6),
        Err(Error::NoDescentDirection)
    ));
}
