//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines always reach the console; exits nonzero if
//! any criterion fails.

use std::f64::consts::SQRT_2;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use netbell_core::covariance::{self, DykstraOptions, Embedding};
use netbell_core::entropic;
use netbell_core::inequalities::{self as iq, BOUND_TOL};
use netbell_core::inflation::{test_compatibility, CompatibilityOptions, InflationSpec};
use netbell_core::localfit::{self, bilocal_correlator_fit, CorrelatorFitOptions, FitOptions};
use netbell_core::lp;
use netbell_core::model::no_signaling_check;
use netbell_core::quantum::{born, presets, random_strategy};
use netbell_core::scan::{self, TriangleTest};
use netbell_core::{zoo, Distribution, LocalModel, Network, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn criterion_1() -> Outcome {
    let sc = Scenario::new(vec![(2, 2), (2, 2)]);
    let mut count = 0;
    let mut best = f64::MIN;
    for d in iq::deterministic_strategies(&sc) {
        count += 1;
        best = best.max(iq::chsh(&d).map_err(err)?.value);
    }
    ensure(count == 16, format!("{count} deterministic strategies"))?;
    ensure(best == 2.0, format!("local maximum {best}"))?;
    let q = iq::chsh(&born(&presets::chsh(1.0).map_err(err)?).map_err(err)?).map_err(err)?.value;
    ensure((q - 2.0 * SQRT_2).abs() < 1e-9, format!("quantum value {q}"))?;
    let pr = iq::chsh(&zoo::pr_box()).map_err(err)?.value;
    ensure(pr == 4.0, format!("PR box {pr}"))?;
    Ok(format!("local {best}, quantum {q:.12}, PR box {pr}"))
}

fn brgp_value(v: f64) -> Result<f64, String> {
    Ok(iq::brgp(&born(&presets::bilocal_bsm(v).map_err(err)?).map_err(err)?).map_err(err)?.value)
}

fn criterion_2() -> Outcome {
    let s = brgp_value(1.0)?;
    ensure((s - SQRT_2).abs() < 1e-9, format!("S = {s}"))?;
    let onset = |v: f64| brgp_value(v).map(|s| s > 1.0 + BOUND_TOL);
    let grid = scan::grid(0.5, 1.0, 1e-3).map_err(err)?;
    let mut swept = None;
    for &v in &grid {
        if onset(v)? {
            swept = Some(v);
            break;
        }
    }
    let swept = swept.ok_or("no violation in the sweep")?;
    let bis = scan::bisect(|v| onset(v).map_err(|e| netbell_core::Error::Numerical(e)), 0.5, 1.0, 1e-7)
        .map_err(err)?
        .ok_or("bisection found no onset")?;
    let target = 1.0 / SQRT_2;
    ensure((swept - target).abs() < 1e-3, format!("sweep onset {swept}"))?;
    ensure((bis - target).abs() < 1e-3, format!("bisection onset {bis}"))?;
    Ok(format!("S = {s:.12}, onset sweep {swept:.3}, bisection {bis:.6}"))
}

fn tgb_result(v: f64) -> Result<iq::InequalityResult, String> {
    iq::tgb(&born(&presets::bilocal_ejm(v).map_err(err)?).map_err(err)?).map_err(err)
}

fn criterion_3() -> Outcome {
    let r = tgb_result(1.0)?;
    ensure((r.value - 4.0).abs() < 1e-9, format!("S = {}", r.value))?;
    let aux = r.auxiliary["max_aux"];
    ensure(aux < 1e-9, format!("auxiliary expectations up to {aux}"))?;
    let onset = |v: f64| -> netbell_core::Result<bool> {
        let r = tgb_result(v).map_err(netbell_core::Error::Numerical)?;
        Ok(r.value > r.bound + BOUND_TOL)
    };
    let v = scan::bisect(onset, 0.5, 1.0, 1e-7).map_err(err)?.ok_or("no onset")?;
    let target = (37f64.sqrt() - 1.0) / 6.0;
    ensure((v - target).abs() < 1e-3, format!("onset {v}, expected {target}"))?;
    Ok(format!("S = {:.12}, max aux {aux:.1e}, onset {v:.6} (target {target:.6})", r.value))
}

fn criterion_4() -> Outcome {
    let m = 3;
    let q = iq::star(&born(&presets::star(m, 1.0).map_err(err)?).map_err(err)?, m).map_err(err)?;
    ensure((q.value - 2.0 * SQRT_2).abs() < 1e-9, format!("quantum value {}", q.value))?;
    ensure(q.bound == 2.0, format!("bound {}", q.bound))?;
    let sc = Scenario::new(vec![(2, 2), (1, 8), (2, 2), (2, 2)]);
    let mut count = 0;
    let mut best = f64::MIN;
    for d in iq::deterministic_strategies(&sc) {
        count += 1;
        best = best.max(iq::star(&d, m).map_err(err)?.value);
    }
    ensure(best <= 2.0 + 1e-12, format!("deterministic maximum {best}"))?;
    Ok(format!("quantum {:.12}, {count} deterministic strategies, maximum {best:.6} <= 2", q.value))
}

fn random_product<R: Rng>(rng: &mut R) -> Distribution {
    let parts: Vec<Distribution> = (0..3)
        .map(|_| {
            let a: f64 = rng.gen_range(0.05..0.95);
            Distribution::new(Scenario::no_input(&[2]), vec![a, 1.0 - a]).unwrap()
        })
        .collect();
    Distribution::product(&parts)
}

fn criterion_5() -> Outcome {
    let net = Network::triangle(2);
    let cut = InflationSpec::preset("cut", &net).map_err(err)?;
    let web = InflationSpec::preset("web", &net).map_err(err)?;
    let exact = CompatibilityOptions { exact: true, symmetrize: true };
    let float = CompatibilityOptions { exact: false, symmetrize: true };
    let g = test_compatibility(&zoo::ghz(), &net, &cut, exact).map_err(err)?;
    ensure(!g.feasible, "GHZ feasible on the cut inflation")?;
    let (ep, er) = (g.exact_problem.as_ref().ok_or("no exact problem")?, g.exact.as_ref().ok_or("no exact result")?);
    let cert = er.certificate().ok_or("exact solve did not return a certificate")?;
    ensure(lp::check_farkas(ep, cert), "rational certificate does not re-verify")?;
    let w = test_compatibility(&zoo::w(), &net, &web, float).map_err(err)?;
    ensure(!w.feasible, "W feasible on the web inflation")?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut products = vec![zoo::uniform(&[2, 2, 2])];
    products.extend((0..4).map(|_| random_product(&mut rng)));
    for (k, d) in products.iter().enumerate() {
        for (name, spec) in [("cut", &cut), ("web", &web)] {
            let r = test_compatibility(d, &net, spec, float).map_err(err)?;
            ensure(r.feasible, format!("product #{k} infeasible on {name}"))?;
        }
    }
    Ok(format!(
        "GHZ/cut infeasible (certificate with {} + {} multipliers verified exactly), W/web infeasible, {} products feasible",
        cert.y_eq.len(),
        cert.y_ub.len(),
        products.len()
    ))
}

fn criterion_6() -> Outcome {
    let g = entropic::check_triangle_entropy(&zoo::ghz()).map_err(err)?;
    ensure((g.value - 1.0).abs() < 1e-9 && !g.satisfied, format!("GHZ value {}", g.value))?;
    let w = entropic::check_triangle_entropy(&zoo::w()).map_err(err)?;
    ensure(w.satisfied, format!("W value {}", w.value))?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = f64::MIN;
    for k in 0..1000 {
        let n = 2 + k % 3;
        let outputs: Vec<usize> = (0..n).map(|_| rng.gen_range(2..4)).collect();
        let size: usize = outputs.iter().product();
        let mut probs: Vec<f64> = (0..size).map(|_| -rng.gen::<f64>().ln()).collect();
        // make some distributions sparse so boundary cases are hit too
        if k % 4 == 0 {
            probs.iter_mut().for_each(|p| {
                if rng.gen_bool(0.5) {
                    *p = 0.0
                }
            });
            probs[0] += 1.0;
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        let ev = entropic::entropy_vector_of_joint(&outputs, &probs).map_err(err)?;
        worst = worst.max(entropic::elemental_violation(&ev.h, n));
    }
    ensure(worst <= 1e-9, format!("elemental violation {worst}"))?;
    Ok(format!("GHZ +{:.12} bit, W {:.6}, worst elemental violation {worst:.1e} over 1000", g.value, w.value))
}

fn criterion_7() -> Outcome {
    let g = iq::finner_triangle(&zoo::ghz()).map_err(err)?;
    let expected = 0.5 / 0.125f64.sqrt();
    ensure((g.value - expected).abs() < 1e-6 && g.value > 1.0, format!("GHZ ratio {}", g.value))?;
    let net = Network::triangle(2);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = f64::MIN;
    for _ in 0..100 {
        let cards: Vec<usize> = (0..3).map(|_| rng.gen_range(1..5)).collect();
        let m = LocalModel::random(&net, &cards, rng.gen_bool(0.5), &mut rng);
        let r = iq::finner_triangle(&m.evaluate(&net).map_err(err)?).map_err(err)?;
        ensure(r.satisfied, format!("local model violates with ratio {}", r.value))?;
        worst = worst.max(r.value);
    }
    Ok(format!("GHZ ratio {:.6}, largest ratio over 100 local models {worst:.6}", g.value))
}

/// `q` boundaries of the no-signaling test at each `p` of the 0.01 grid:
/// the first violated grid point and the bisection value.
fn ns_boundaries() -> Result<Vec<(f64, Option<f64>, Option<f64>)>, String> {
    scan::grid(0.0, 1.0, 0.01)
        .map_err(err)?
        .into_iter()
        .map(|p| {
            let g = scan::ppq_grid_boundary(TriangleTest::NoSignaling, p, 0.01).map_err(err)?;
            let b = scan::ppq_boundary(TriangleTest::NoSignaling, p, 1e-7).map_err(err)?;
            Ok((p, g, b))
        })
        .collect()
}

fn criterion_8() -> Outcome {
    let g = iq::ns_triangle(&zoo::ghz()).map_err(err)?;
    ensure((g.value - 6.0).abs() < 1e-9 && !g.satisfied, format!("GHZ LHS - RHS = {}", g.value))?;
    let u = iq::ns_triangle(&zoo::uniform(&[2, 2, 2])).map_err(err)?;
    ensure(u.satisfied, format!("uniform LHS - RHS = {}", u.value))?;
    let rows = ns_boundaries()?;
    let mut prev = f64::INFINITY;
    let mut region = 0;
    for &(p, grid_q, bis_q) in &rows {
        match (grid_q, bis_q) {
            (Some(a), Some(b)) => {
                ensure(a >= b - 1e-9 && a - b <= 0.01 + 1e-9, format!("p={p}: grid {a} vs bisection {b}"))?;
                ensure(b <= prev + 1e-6, format!("boundary not monotone at p={p}"))?;
                prev = b;
                region += 1;
            }
            // the grid can miss a region thinner than its step
            (None, Some(b)) => ensure(1.0 - p - b < 0.01, format!("p={p}: grid missed boundary {b}"))?,
            (Some(a), None) => return Err(format!("p={p}: grid violation {a} without bisection boundary")),
            (None, None) => {}
        }
    }
    ensure(region > 0, "no violation region found")?;
    let at = |p: f64| rows.iter().find(|r| (r.0 - p).abs() < 1e-9).and_then(|r| r.2);
    let summary = format!(
        "GHZ {:.1}, region at {region} grid columns, boundary q(0.01)={:?} q(0.1)={:?} q(0.5)={:?}",
        g.value,
        at(0.01).map(|q| (q * 1e4).round() / 1e4),
        at(0.1).map(|q| (q * 1e4).round() / 1e4),
        at(0.5).map(|q| (q * 1e4).round() / 1e4)
    );
    match at(0.0) {
        Some(q) if (0.25..=0.55).contains(&q) => Ok(format!("{summary}, q(0)={q:.4}")),
        Some(q) => Err(format!("{summary}; boundary q at p=0 is {q:.4}, outside [0.25, 0.55]")),
        None => Err(format!("{summary}; no violation at p=0 for any q, expected a boundary in [0.25, 0.55]")),
    }
}

fn criterion_9() -> Outcome {
    let net = Network::triangle(2);
    let e = Embedding::pm1(&[2, 2, 2]).map_err(err)?;
    let opts = DykstraOptions { tol: 1e-8, max_iter: 50_000 };
    let ind = covariance::test_distribution(&zoo::uniform(&[2, 2, 2]), &net, &e, opts).map_err(err)?;
    ensure(ind.feasible && ind.residual < 1e-8, format!("independent bits residual {}", ind.residual))?;
    let g = covariance::test_distribution(&zoo::ghz(), &net, &e, opts).map_err(err)?;
    ensure(g.residual > 1e-3, format!("GHZ residual {}", g.residual))?;
    // the covariance boundary must lie inside the no-signaling violation
    // region at every column of the 0.01 grid where either test certifies
    let mut inside = 0;
    let mut closest = f64::INFINITY;
    for p in scan::grid(0.0, 1.0, 0.01).map_err(err)? {
        let c = scan::ppq_boundary(TriangleTest::Covariance, p, 1e-3).map_err(err)?;
        let n = scan::ppq_boundary(TriangleTest::NoSignaling, p, 1e-7).map_err(err)?;
        match (c, n) {
            (None, None) => {}
            (Some(c), Some(n)) => {
                ensure(c > n, format!("p={p}: covariance boundary {c} not inside the no-signaling region (boundary {n})"))?;
                ensure(TriangleTest::NoSignaling.violated(p, c).map_err(err)?, format!("({p}, {c}) does not violate"))?;
                closest = closest.min(c - n);
                inside += 1;
            }
            (Some(c), None) => return Err(format!("p={p}: covariance boundary {c} outside any no-signaling violation")),
            (None, Some(_)) => {}
        }
    }
    ensure(inside > 0, "empty covariance region")?;
    Ok(format!(
        "independent residual {:.1e}, GHZ residual {:.3e}, covariance boundary strictly inside at {inside} columns (smallest gap {closest:.4})",
        ind.residual, g.residual
    ))
}

fn criterion_10() -> Outcome {
    let (d, model) = zoo::bsm_triangle().map_err(err)?;
    let net4 = Network::triangle(4);
    let direct = model.evaluate(&net4).map_err(err)?.tv_distance(&d);
    ensure(direct < 1e-9, format!("footnote model off by {direct}"))?;
    let f = localfit::fit(&d, &net4, &FitOptions::new(vec![4, 4, 4])).map_err(err)?;
    ensure(f.distance < 1e-6, format!("bsm triangle fit distance {}", f.distance))?;
    let b = born(&presets::bilocal_bsm(0.7).map_err(err)?).map_err(err)?;
    let c = bilocal_correlator_fit(&b, &CorrelatorFitOptions::default()).map_err(err)?;
    ensure(c.distance < 1e-4, format!("BRGP v=0.7 correlator fit distance {}", c.distance))?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let nets = [Network::triangle(2), Network::bilocal((2, 2), (1, 4), (2, 2))];
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for net in &nets {
        for _ in 0..5 {
            let cards: Vec<usize> = (0..net.sources.len()).map(|_| rng.gen_range(1..4)).collect();
            let m = LocalModel::random(net, &cards, false, &mut rng);
            let d = m.evaluate(net).map_err(err)?;
            let r = localfit::fit(&d, net, &FitOptions::new(cards.clone())).map_err(err)?;
            ensure(r.distance < 1e-9, format!("evaluate output with cards {cards:?} fit to {}", r.distance))?;
            worst = worst.max(r.distance);
            count += 1;
        }
    }
    Ok(format!(
        "bsm triangle {:.1e}, BRGP v=0.7 {:.1e}, {count} evaluate round trips up to {worst:.1e}",
        f.distance, c.distance
    ))
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let classes: Vec<(&str, Network)> = vec![
        ("bell", Network::bell(2, 2, 2)),
        ("bilocal", Network::bilocal((2, 2), (1, 4), (2, 2))),
        ("triangle-2", Network::triangle(2)),
        ("triangle-4", Network::triangle(4)),
        ("star-3", Network::star(3, 2, 2, 8)),
    ];
    let mut checks = 0;
    for (name, net) in &classes {
        for k in 0..50 {
            let s = random_strategy(net, 2, &mut rng).map_err(err)?;
            let d = born(&s).map_err(err)?;
            let ns = no_signaling_check(&d, 1e-9);
            ensure(ns.passed, format!("{name} #{k}: signaling {}", ns.max_deviation))?;
            checks += 1;
            if net.has_inputs() {
                continue;
            }
            let f = iq::finner_triangle(&d).map_err(err)?;
            ensure(f.satisfied, format!("{name} #{k}: Finner ratio {}", f.value))?;
            let e = entropic::check_triangle_entropy(&d).map_err(err)?;
            ensure(e.satisfied, format!("{name} #{k}: entropy value {}", e.value))?;
            let emb = Embedding::one_hot(&d.scenario.outputs());
            let c = covariance::test_distribution(&d, net, &emb, DykstraOptions::default()).map_err(err)?;
            ensure(c.feasible, format!("{name} #{k}: covariance residual {}", c.residual))?;
            checks += 3;
        }
    }
    Ok(format!("{checks} checks over {} network classes x 50 strategies", classes.len()))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 CHSH", criterion_1),
        ("2 BRGP", criterion_2),
        ("3 TGB", criterion_3),
        ("4 star m=3", criterion_4),
        ("5 inflation", criterion_5),
        ("6 entropic", criterion_6),
        ("7 Finner triangle", criterion_7),
        ("8 no-signaling triangle", criterion_8),
        ("9 covariance", criterion_9),
        ("10 local fit", criterion_10),
        ("11 property suite", criterion_11),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|w| name.contains(w.as_str())) {
            continue;
        }
        let t = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match out {
            Ok(msg) => println!("PASS criterion {name} ({secs:.1}s): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.1}s): {msg}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
