//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fail.

mod common;

use std::time::{Duration, Instant};

use common::*;
use leontief::config::linspace;
use leontief::mech::{make_ratio_dependent, non_wasteful_reduction, utility, GridMechanism, Mechanism, Mesh, RawGridMechanism};
use leontief::solve::{oracle_best_threshold, pointwise_bound, posted_price_search, solve_condition_b, solve_posted_price, threshold_improvement};
use leontief::verify::{check_characterization, check_direct, check_ic_direct, column_virtual_surplus, expected_revenue, virtual_surplus, Check};
use leontief::virtual_value::{classify, phi_zero, revenue_curve, ConditionGrid};
use leontief::{Distribution, Numerics};

type Outcome = std::result::Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

type Base = (&'static str, fn(f64) -> f64);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn num() -> Numerics {
    Numerics::default()
}

fn zero_grid() -> Vec<f64> {
    linspace(KF, 1.0, 100)
}

fn c1_zero_curve_example1() -> Outcome {
    let d = Distribution::example1(KF);
    let n = num();
    let mut worst: f64 = 0.0;
    for k in zero_grid() {
        let z = phi_zero(&d, k, &n).map_err(|e| e.to_string())?;
        worst = worst.max((z - example1_zero(k)).abs());
    }
    ensure(worst <= 1e-8, format!("max |error| = {worst:.3e}"))
}

fn c2_zero_curve_example2() -> Outcome {
    let d = Distribution::example2(KF);
    let n = num();
    let mut worst: f64 = 0.0;
    for k in zero_grid() {
        let z = phi_zero(&d, k, &n).map_err(|e| e.to_string())?;
        worst = worst.max((z - example2_zero(k)).abs());
    }
    ensure(worst <= 1e-8, format!("max |error| = {worst:.3e}"))
}

fn c3_posted_price_example2() -> Outcome {
    let d = Distribution::example2(KF);
    let Mechanism::PostedPrice { price } = solve_posted_price(&d, &num()) else {
        return Err("not a posted price".into());
    };
    let want = (13f64.sqrt() - 2.0) / 3.0;
    let err = (price - want).abs();
    ensure(err <= 1e-8, format!("price = {price:.12}, |error| = {err:.3e}"))
}

fn c4_classification() -> Outcome {
    let n = num();
    let verdicts = |d: &Distribution| -> std::result::Result<(bool, bool, bool), String> {
        let c = classify(d, &ConditionGrid::for_distribution(d, &n), &n).map_err(|e| e.to_string())?;
        Ok((c.a.holds, c.b_holds(), c.b_prime_holds()))
    };
    let u = verdicts(&Distribution::uniform(KF))?;
    let e1 = verdicts(&Distribution::example1(KF))?;
    let e2 = verdicts(&Distribution::example2(KF))?;
    let detail = format!("uniform (A,B,B')={u:?}, example1={e1:?}, example2={e2:?}");
    ensure(u.1 && e1.1 && e2 == (true, false, true), detail)
}

fn c5_ic_ir_optima() -> Outcome {
    let n = num();
    let mesh = Mesh::uniform(50, 50, KF).unwrap();
    let rd = solve_condition_b(&Distribution::example1(KF), &n).map_err(|e| e.to_string())?;
    let pp = solve_posted_price(&Distribution::example2(KF), &n);
    let mut detail = Vec::new();
    let mut ok = true;
    for (name, m) in [("example1 ratio-dependent", &rd), ("example2 posted price", &pp)] {
        let start = Instant::now();
        let r = check_direct(m, &mesh, 1e-10);
        let secs = start.elapsed().as_secs_f64();
        let ic = r.max_violation(Check::PairwiseIc);
        let ir = r.max_violation(Check::Ir);
        ok &= r.pass && secs < 30.0;
        detail.push(format!("{name}: max gain {ic:.3e}, IR violation {ir:.3e}, {secs:.2}s"));
    }
    ensure(ok, detail.join("; "))
}

/// Direct and characterization verdicts on the sampled mechanism, with the
/// worst characterization family if the verdicts differ.
struct Agreement {
    direct_pass: bool,
    agree: bool,
    localized: bool,
    magnitude: f64,
}

fn compare(psi: &leontief::ThresholdCurve, mesh: &Mesh) -> Agreement {
    let m = Mechanism::RatioDependent { psi: psi.clone() };
    let g = GridMechanism::sample(&m, mesh).unwrap();
    let direct = check_ic_direct(&Mechanism::Grid(g.clone()), mesh, 1e-9);
    let chr = check_characterization(&g, 1e-9);
    if direct.pass == chr.pass {
        return Agreement { direct_pass: direct.pass, agree: true, localized: true, magnitude: 0.0 };
    }
    let h = mesh.v_step();
    let report = if chr.pass { &direct } else { &chr };
    let worst = report.worst().unwrap();
    let near = |t: Option<leontief::TypePoint>| t.is_none_or(|t| (t.v - psi.eval(t.k)).abs() <= 2.0 * h);
    Agreement {
        direct_pass: direct.pass,
        agree: false,
        localized: near(worst.witness) || near(worst.witness2),
        magnitude: worst.max_violation,
    }
}

fn c6_characterization_equivalence() -> Outcome {
    let mesh = Mesh::uniform(30, 30, KF).unwrap();
    let h = mesh.v_step();
    let bases: [Base; 2] = [("uniform", |_| 0.5), ("example1", example1_zero)];
    let mut total = 0;
    let mut disagree = 0;
    let mut bad = 0;
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for (bi, (name, base)) in bases.iter().enumerate() {
        let mut r = rng(600 + bi as u64);
        let (mut dv, mut di) = (0, 0);
        let (mut valid_ic, mut invalid_ic) = (0, 0);
        for i in 0..400 {
            let valid = i < 200;
            let psi = if valid { random_valid_curve(&mut r, base) } else { random_invalid_curve(&mut r, base) };
            let a = compare(&psi, &mesh);
            total += 1;
            if a.direct_pass {
                if valid {
                    valid_ic += 1;
                } else {
                    invalid_ic += 1;
                }
            }
            if !a.agree {
                disagree += 1;
                if valid {
                    dv += 1;
                } else {
                    di += 1;
                }
                worst = worst.max(a.magnitude);
                if !a.localized || a.magnitude > 2.0 * h {
                    bad += 1;
                }
            }
        }
        lines.push(format!(
            "{name}: {dv}/200 valid and {di}/200 invalid disagree, direct IC holds for {valid_ic} valid and {invalid_ic} invalid"
        ));
    }
    let rate = 1.0 - disagree as f64 / total as f64;
    let detail = format!(
        "agreement {:.2}% over {total}; {}; worst disagreement magnitude {worst:.3e} (2h = {:.3e}), {bad} not localized",
        100.0 * rate,
        lines.join(", "),
        2.0 * h
    );
    ensure(rate >= 0.99 && bad == 0, detail)
}

fn c7_revenue_equivalence() -> Outcome {
    let n = num();
    let cases = [
        ("uniform", Distribution::uniform(KF), true),
        ("example1", Distribution::example1(KF), true),
        ("example2", Distribution::example2(KF), false),
    ];
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (name, d, ratio) in cases {
        let m = if ratio { solve_condition_b(&d, &n).map_err(|e| e.to_string())? } else { solve_posted_price(&d, &n) };
        let (r, s) = (expected_revenue(&m, &d, &n), virtual_surplus(&m, &d, &n));
        worst = worst.max((r - s).abs());
        detail.push(format!("{name}: {r:.10} vs {s:.10}"));
    }
    ensure(worst <= 1e-4, format!("{}; max gap {worst:.3e}", detail.join(", ")))
}

fn c8_bound_attainment() -> Outcome {
    let n = num();
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (name, d) in [("uniform", Distribution::uniform(KF)), ("example1", Distribution::example1(KF))] {
        let m = solve_condition_b(&d, &n).map_err(|e| e.to_string())?;
        let (r, b) = (expected_revenue(&m, &d, &n), pointwise_bound(&d, &n));
        worst = worst.max((r - b).abs());
        detail.push(format!("{name}: revenue {r:.10}, bound {b:.10}"));
    }
    ensure(worst <= 1e-4, format!("{}; max gap {worst:.3e}", detail.join(", ")))
}

fn c9_oracle_example2() -> Outcome {
    let n = num();
    let d = Distribution::example2(KF);
    let start = Instant::now();
    let o = oracle_best_threshold(&d, 5, 31, &n).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let pp = expected_revenue(&solve_posted_price(&d, &n), &d, &n);
    let price = posted_price_search(&d, &n).price;
    let detail = format!(
        "oracle {:.10} (rho {:?}, {} vectors) vs posted price {pp:.10} at {price:.6}; {secs:.2}s",
        o.revenue, o.rho, o.evaluated
    );
    ensure(o.revenue <= pp + 5e-3 && secs < 60.0, detail)
}

fn c10_reduction() -> Outcome {
    let mesh = Mesh::uniform(20, 20, KF).unwrap();
    let mut r = rng(1000);
    let mut exact = true;
    let mut original_ic = 0;
    let mut implication = true;
    for i in 0..100 {
        let base: fn(f64) -> f64 = if i % 2 == 0 { |_| 0.5 } else { example1_zero };
        let psi = random_valid_curve(&mut r, &base);
        let m = make_ratio_dependent(psi).unwrap();
        let raw = add_waste(&mut r, &RawGridMechanism::sample(&m, &mesh).unwrap(), i % 4 < 2);
        let red = non_wasteful_reduction(&raw);
        let nv = mesh.nv();
        for idx in 0..mesh.len() {
            let t = mesh.point(idx);
            let o = raw.outcome_node(idx);
            let (i, j) = (idx % nv, idx / nv);
            exact &= utility(t, &o) == red.truthful_utility(i, j);
            exact &= raw.payments()[idx] == red.payments()[idx];
            exact &= (o.a1 / t.k).min(o.a2) == red.allocation().at(i, j);
        }
        let before = check_ic_direct(&Mechanism::RawGrid(raw), &mesh, 1e-9).pass;
        let after = check_ic_direct(&Mechanism::Grid(red), &mesh, 1e-9).pass;
        if before {
            original_ic += 1;
            implication &= after;
        }
    }
    let detail = format!("exact preservation: {exact}; {original_ic}/100 wasteful originals IC, all reductions IC: {implication}");
    ensure(exact && implication, detail)
}

fn c11_threshold_transform() -> Outcome {
    let n = num();
    let mesh = Mesh::uniform(41, 8, KF).unwrap();
    let mut worst_gain = f64::INFINITY;
    let mut monotone = true;
    let mut cases = 0;
    for (seed, d) in [(1100, Distribution::uniform(KF)), (1101, Distribution::example1(KF))] {
        let mut r = rng(seed);
        for _ in 0..50 {
            let a = random_monotone_allocation(&mut r, &mesh);
            let before = check_characterization(&GridMechanism::from_allocation(a.clone(), 0.0).unwrap(), 1e-9);
            if before.max_violation(Check::C1) > 1e-9 || before.max_violation(Check::C2) > 1e-9 {
                return Err("generator produced an infeasible allocation".into());
            }
            let out = threshold_improvement(&a, &d, &n).map_err(|e| e.to_string())?;
            let rho = out.spec.rho.values();
            monotone &= rho.windows(2).all(|w| w[0] <= w[1]);
            for (j, &k) in mesh.k().iter().enumerate() {
                let gain = revenue_curve(&d, rho[j], k) - column_virtual_surplus(&a, j, &d);
                worst_gain = worst_gain.min(gain);
            }
            cases += 1;
        }
    }
    let detail = format!("{cases} allocations; thresholds nondecreasing: {monotone}; smallest column gain {worst_gain:.3e}");
    ensure(monotone && worst_gain >= -1e-9, detail)
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "zero curve, example 1", budget: Some(Duration::from_secs(1)), run: c1_zero_curve_example1 },
        Criterion { id: 2, name: "zero curve, example 2", budget: Some(Duration::from_secs(1)), run: c2_zero_curve_example2 },
        Criterion { id: 3, name: "posted price, example 2", budget: Some(Duration::from_secs(1)), run: c3_posted_price_example2 },
        Criterion { id: 4, name: "condition classification", budget: None, run: c4_classification },
        Criterion { id: 5, name: "IC/IR of constructed optima", budget: Some(Duration::from_secs(60)), run: c5_ic_ir_optima },
        Criterion { id: 6, name: "characterization equivalence", budget: None, run: c6_characterization_equivalence },
        Criterion { id: 7, name: "revenue equivalence", budget: None, run: c7_revenue_equivalence },
        Criterion { id: 8, name: "bound attainment", budget: None, run: c8_bound_attainment },
        Criterion { id: 9, name: "oracle vs posted price", budget: Some(Duration::from_secs(60)), run: c9_oracle_example2 },
        Criterion { id: 10, name: "non-wasteful reduction", budget: None, run: c10_reduction },
        Criterion { id: 11, name: "threshold transform", budget: None, run: c11_threshold_transform },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let mut res = (c.run)();
        let took = start.elapsed();
        if let (Ok(d), Some(b)) = (&res, c.budget) {
            if took > b {
                res = Err(format!("{d}; over time budget {b:?}"));
            }
        }
        let (tag, detail) = match &res {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} criterion {:>2} {} [{:.2}s]: {detail}", c.id, c.name, took.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
