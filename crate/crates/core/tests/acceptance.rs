//! Acceptance suite: one PASS/FAIL line per criterion with its runtime.
//!
//! Failing criteria are reported, not hidden. The process exits nonzero on a
//! failure only when `VGEO_ACCEPT_STRICT=1` is set.

use std::time::{Duration, Instant};

use vgeo::cones::AmenableRep;
use vgeo::geodesics::{averaging_map, fit_sigma, intrinsic_distance_grid, DEFAULT_LEVELS};
use vgeo::geometry::point;
use vgeo::optimality::{descent_path, Objective};
use vgeo::paths::{build_eps_path, certified_radius, verify_eps_path};
use vgeo::regularity::*;
use vgeo::report::{write_curve_csv, write_descent_csv, write_verdicts_csv};
use vgeo::sets::catalog::amenable_names;
use vgeo::sets::{catalog, sawtooth, ProjectionConfig};
use vgeo::{Point, Result};

type Outcome = Result<(bool, String)>;
/// Name, time limit in seconds, runner.
type Criterion = (&'static str, u64, fn() -> Outcome);

fn origin() -> Point {
    point(&[0.0, 0.0])
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Golden-section refinement of a 1-D minimizer bracketed by a coarse scan.
fn brute_force_min(g: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let n = 200_000;
    let h = (hi - lo) / n as f64;
    let i = (0..=n).min_by(|a, b| g(lo + *a as f64 * h).total_cmp(&g(lo + *b as f64 * h))).unwrap();
    let (mut a, mut b) = (lo + (i as f64 - 1.0).max(0.0) * h, lo + (i as f64 + 1.0) * h);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let (c, d) = (b - phi * (b - a), a + phi * (b - a));
        if g(c) < g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

fn c1_parabola_witness() -> Outcome {
    let c = catalog("parabola-pair")?;
    let v = check_super_regularity(&c, &origin(), 1.0 / 3.0, 0.5, 32, 42)?;
    let Some(w) = v.witness else {
        return Ok((false, "no violation found".into()));
    };
    let (x, xp, n) = (&w.points[0], &w.points[1], &w.vectors[0]);
    let d = [xp[0] - x[0], xp[1] - x[1]];
    let lhs = n[0] * d[0] + n[1] * d[1];
    let rhs = n[0].hypot(n[1]) * d[0].hypot(d[1]) / 3.0;
    let (l0, r0) = (2.0 / 9.0, 2.0 * 13f64.sqrt() / 81.0);
    let ok = close(lhs, l0, 1e-12) && close(rhs, r0, 1e-12) && close(w.lhs, l0, 1e-12) && close(w.rhs, r0, 1e-12);
    Ok((ok, format!("k={:?} lhs={lhs:.15} (2/9) rhs={rhs:.15} (2*sqrt13/81)", w.param)))
}

fn c2_power32_prox() -> Outcome {
    let c = catalog("power32-graph")?;
    let v = probe_prox_regularity(&c, &origin(), 0.1, 9, 42)?;
    let t = 0.1;
    let s = brute_force_min(|x| x * x + (t - x.powf(1.5)).powi(2), 0.0, 0.5);
    let near = c.project(&point(&[0.0, t]), &ProjectionConfig::default())?;
    let err = near.iter().map(|p| (p[0].abs() - s).abs()).fold(0.0, f64::max);
    let ok = v.violated() && near.len() >= 2 && err <= 1e-6 && near.iter().any(|p| p[0] > 0.0) && near.iter().any(|p| p[0] < 0.0);
    Ok((ok, format!("verdict={} nearest={} brute={s:.9} max err={err:.2e}", v.verdict, near.len())))
}

/// Achieved deviations for pairs whose distance halves `halvings` times.
fn dyadic_achieved(rep: &AmenableRep, c: &vgeo::sets::SetOracle, rho: f64, eps: f64, halvings: usize) -> Result<Vec<f64>> {
    let base = &rep.base;
    let pts = c.sample_members(base, 0.5 * rho, 2, 42);
    let (p0, q0) = (pts[0].clone(), pts[1].clone());
    let cfg = ProjectionConfig::default();
    let mut out = Vec::new();
    for j in 0..=halvings {
        let s = 0.5f64.powi(j as i32);
        let x = c.nearest(&(base + (&p0 - base) * s), &cfg)?;
        let xp = c.nearest(&(base + (&q0 - base) * s), &cfg)?;
        let (_, r) = build_eps_path(rep, &x, &xp, eps)?;
        if !r.passes {
            return Err(vgeo::Error::NonConvergent(format!("path at scale 2^-{j} failed: {r:?}")));
        }
        out.push(r.achieved);
    }
    Ok(out)
}

fn c3_amenable_sac() -> Outcome {
    let mut ok = true;
    let mut worst = String::new();
    for name in amenable_names() {
        let c = catalog(name)?;
        let rep = AmenableRep::from_oracle(&c, &c.base_point)?;
        for eps in [0.5, 0.1, 0.02] {
            let rho = certified_radius(&rep, eps, 4, 42)?;
            let a = match dyadic_achieved(&rep, &c, rho, eps, 4) {
                Ok(a) => a,
                Err(e) => {
                    ok = false;
                    worst = format!("{name} eps={eps}: {e}");
                    continue;
                }
            };
            let monotone = a.windows(2).all(|w| w[1] <= 1.1 * w[0] + 1e-12);
            let trending = a[a.len() - 1] <= 1e-12 || a[a.len() - 1] < a[0];
            if !(monotone && trending) {
                ok = false;
                worst = format!("{name} eps={eps}: achieved {a:?}");
            }
        }
    }
    let detail = if ok {
        format!("{} sets x 3 eps, 5 dyadic scales each", amenable_names().len())
    } else {
        worst
    };
    Ok((ok, detail))
}

fn c4_circle_averaging() -> Outcome {
    let c = catalog("unit-circle")?;
    let cfg = ProjectionConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for chord in [0.2, 0.1, 0.05] {
        let theta = 2.0 * (chord / 2.0f64).asin();
        let (x, xp) = (point(&[1.0, 0.0]), point(&[theta.cos(), theta.sin()]));
        let (g, _) = averaging_map(&c, &x, &xp, DEFAULT_LEVELS, &cfg)?;
        let r = verify_eps_path(&g, &c, &x, &xp, 0.05);
        let len_err = (g.length() - theta).abs();
        ok &= r.passes && len_err <= 1e-4;
        parts.push(format!("c={chord}: achieved={:.4} pass={} len err={len_err:.1e}", r.achieved, r.passes));
    }
    Ok((ok, parts.join("; ")))
}

fn c5_sigma() -> Outcome {
    let circle = catalog("unit-circle")?;
    let s = fit_sigma(&circle, &point(&[1.0, 0.0]), 0.2, 24, 42)?.sigma;
    let ball = catalog("unit-ball")?;
    let s0 = fit_sigma(&ball, &origin(), 0.2, 24, 42)?.sigma;
    let (lo, hi) = (0.8 / 24.0, 1.2 / 24.0);
    Ok((s >= lo && s <= hi && s0 <= 1e-6, format!("circle sigma={s:.5} in [{lo:.5}, {hi:.5}], ball sigma={s0:.1e}")))
}

fn c6_refinement() -> Outcome {
    let c = catalog("unit-circle")?;
    let (_, tr) = averaging_map(&c, &point(&[1.0, 0.0]), &point(&[0.0, 1.0]), DEFAULT_LEVELS, &ProjectionConfig::default())?;
    let d = tr.displacements();
    let l = tr.lengths();
    let top = 12.min(d.len() - 1);
    let ratio = (4..top).map(|i| d[i + 1] / d[i]).fold(0.0, f64::max);
    let conv = (l[l.len() - 1] - l[l.len() - 2]).abs();
    let ok = top == 12 && ratio <= 0.8 && tr.lengths_nondecreasing(0.0) && conv <= 1e-8;
    Ok((ok, format!("max ratio (levels 4-12)={ratio:.4} last length step={conv:.1e} length={:.10}", l[l.len() - 1])))
}

fn c7_quartic_cross() -> Outcome {
    let c = catalog("quartic-cross")?;
    let ratio = |t: f64| -> Result<f64> {
        let (p, q) = (point(&[t * t, t]), point(&[-t * t, t]));
        Ok(intrinsic_distance_grid(&c, &p, &q, 1.0 / 400.0)?.estimate / (p - q).norm())
    };
    let (r1, r2) = (ratio(0.5)?, ratio(0.25)?);
    let ok = r1 >= 2.0 && r2 >= 1.5 * r1;
    Ok((ok, format!("ratio(t=0.5)={r1:.4} (quadrature 2.2956) ratio(t=0.25)={r2:.4} growth={:.3}", r2 / r1)))
}

fn c8_sawtooth() -> Outcome {
    let saw = catalog("sawtooth-graph")?;
    let uag = check_uag(&saw, &origin(), 0.3, 1.0 / 16.0, 8, 42, None)?;
    let mut all_exceed = true;
    for k in 4..=6 {
        let xp = point(&[0.5f64.powi(k), 0.0]);
        let cands = eps_path_candidates(&saw, &origin(), &xp, 0.5, 1.0 / 1024.0);
        all_exceed &= !cands.is_empty() && cands.iter().all(|(_, r)| r.achieved > 0.5);
    }
    let epi = catalog("sawtooth-epigraph")?;
    let iac = check_intrinsic_approx_convexity(&epi, &origin(), 0.3, 1.0 / 16.0, 32, 42)?;
    let mut apexes = true;
    for k in 0..4 {
        let s = 0.5f64.powi(k + 2);
        let v = clarke_verdict_catalog("sawtooth-graph", &point(&[3.0 * s, sawtooth(3.0 * s)]))?;
        apexes &= v.violated();
    }
    let ok = !uag.violated() && all_exceed && !iac.violated() && apexes;
    Ok((
        ok,
        format!("uag={} eps-path all exceed={all_exceed} iac={} apexes not Clarke={apexes}", uag.verdict, iac.verdict),
    ))
}

fn c9_descent() -> Outcome {
    let c = catalog("power32-graph")?;
    let f = Objective::parse(2, "x1")?;
    let r = descent_path(&f, &c, &origin(), None, 1e-6)?;
    let g = r.curve.grid();
    let feasible = r.curve.points().iter().all(|p| c.contains(p, 1e-8));
    let decreasing = (1..g.len()).filter(|&i| g[i] <= r.t_star).all(|i| r.values[i] < r.values[i - 1]);
    let ok = r.slope <= -0.5 && feasible && decreasing && r.t_star > 0.0;
    Ok((ok, format!("slope={:.4} t*={:.4} feasible={feasible} decreasing={decreasing}", r.slope, r.t_star)))
}

/// CSV bytes of a small fixed-seed suite.
fn suite_csv() -> Result<Vec<u8>> {
    let mut verdicts = Vec::new();
    let pp = catalog("parabola-pair")?;
    verdicts.push(check_super_regularity(&pp, &origin(), 1.0 / 3.0, 0.5, 16, 42)?);
    verdicts.push(check_intrinsic_approx_convexity(&pp, &origin(), 0.5, 0.25, 16, 42)?);
    let pw = catalog("power32-graph")?;
    verdicts.push(probe_prox_regularity(&pw, &origin(), 0.1, 9, 42)?);
    let circle = catalog("unit-circle")?;
    verdicts.push(check_uag(&circle, &point(&[1.0, 0.0]), 0.1, 0.1, 6, 42, None)?);
    let mut out = Vec::new();
    write_verdicts_csv(&verdicts, &mut out)?;
    let (g, _) = averaging_map(&circle, &point(&[1.0, 0.0]), &point(&[0.0, 1.0]), 8, &ProjectionConfig::default())?;
    write_curve_csv(&g, &mut out)?;
    let f = Objective::parse(2, "x1")?;
    write_descent_csv(&descent_path(&f, &pw, &origin(), None, 1e-6)?, &mut out)?;
    Ok(out)
}

fn c10_determinism() -> Outcome {
    let (a, b) = (suite_csv()?, suite_csv()?);
    Ok((a == b, format!("{} bytes, identical={}", a.len(), a == b)))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1 parabola-pair super-regularity witness", 1, c1_parabola_witness),
        ("2 power32 prox-regularity witness", 5, c2_power32_prox),
        ("3 amenable sets admit eps-paths", 60, c3_amenable_sac),
        ("4 circle averaging map is an eps-path", 10, c4_circle_averaging),
        ("5 finite extrinsic curvature fit", 30, c5_sigma),
        ("6 midpoint refinement decay", 10, c6_refinement),
        ("7 quartic-cross intrinsic distance ratio", 60, c7_quartic_cross),
        ("8 sawtooth suite", 120, c8_sawtooth),
        ("9 power32 descent path", 5, c9_descent),
        ("10 byte-identical CSV on rerun", 120, c10_determinism),
    ];
    let mut failures = 0;
    for (name, limit, run) in criteria {
        let t0 = Instant::now();
        let outcome = run();
        let dt = t0.elapsed();
        let in_time = dt <= Duration::from_secs(limit);
        let (ok, detail) = match outcome {
            Ok((ok, detail)) => (ok && in_time, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failures += 1;
        }
        let status = if ok { "PASS" } else { "FAIL" };
        println!("[{status}] {name}: {detail} ({:.2} s, limit {limit} s)", dt.as_secs_f64());
    }
    println!("acceptance: {} failed", failures);
    if failures > 0 && std::env::var("VGEO_ACCEPT_STRICT").as_deref() == Ok("1") {
        std::process::exit(1);
    }
}
