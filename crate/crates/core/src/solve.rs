//! Optimal mechanisms, the revenue-improving transforms behind them, and
//! optimality certificates.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{linspace, Numerics};
use crate::curve::ThresholdCurve;
use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::mech::{make_ratio_dependent_with_tol, GridAllocation, Mechanism};
use crate::quad::simpson_piecewise;
use crate::verify::{column_virtual_surplus, expected_revenue, integrate_k, k_breaks, v_breaks};
use crate::virtual_value::{
    check_condition_a, classify, phi_density, phi_zero, revenue_curve, Classification, ConditionGrid, ZeroCurve,
};

const COLUMN_TOL: f64 = 1e-9;

/// Ratio-dependent price at the zero curve of the virtual value.
///
/// Requires the zero curve to satisfy both ratio-dependent price
/// conditions on the condition grid.
pub fn solve_condition_b(d: &Distribution, num: &Numerics) -> Result<Mechanism> {
    let grid = ConditionGrid::for_distribution(d, num);
    let c = classify(d, &grid, num)?;
    ratio_dependent_from(&c, num)
}

fn ratio_dependent_from(c: &Classification, num: &Numerics) -> Result<Mechanism> {
    if !c.a.holds {
        return Err(c.a.precondition_error());
    }
    let b = c.b.as_ref().expect("b verdict present when A holds");
    if !b.holds {
        return Err(b.precondition_error());
    }
    let curve = c.zero_curve.as_ref().expect("zero curve present when A holds").curve().clone();
    make_ratio_dependent_with_tol(curve, num.root_tol)
}

/// Result of maximizing `p (1 - G_v(p))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceSearch {
    pub price: f64,
    pub revenue: f64,
    /// Other local maximizers whose revenue is within `near_optimal_tol`.
    pub near_optimal: Vec<f64>,
}

fn price_revenue(d: &Distribution, p: f64) -> f64 {
    p * (1.0 - d.value_cdf(p))
}

fn price_slope(d: &Distribution, p: f64) -> f64 {
    1.0 - d.value_cdf(p) - p * d.value_pdf(p)
}

fn refine_price(d: &Distribution, lo: f64, hi: f64, num: &Numerics) -> f64 {
    let r = |p: f64| price_revenue(d, p);
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut e = a + inv_phi * (b - a);
    let (mut rc, mut re) = (r(c), r(e));
    while b - a > num.price_tol {
        if rc >= re {
            b = e;
            e = c;
            re = rc;
            c = b - inv_phi * (b - a);
            rc = r(c);
        } else {
            a = c;
            c = e;
            rc = re;
            e = a + inv_phi * (b - a);
            re = r(e);
        }
    }
    let golden = 0.5 * (a + b);

    // near the top the revenue is flat to rounding, so finish on its slope
    if !(price_slope(d, lo) > 0.0 && price_slope(d, hi) < 0.0) {
        return golden;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if price_slope(d, m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Global scan, then golden-section refinement around each local maximum.
pub fn posted_price_search(d: &Distribution, num: &Numerics) -> PriceSearch {
    let grid = linspace(0.0, 1.0, num.price_scan_nodes + 1);
    let rev: Vec<f64> = grid.par_iter().map(|&p| price_revenue(d, p)).collect();
    let n = grid.len();
    let mut candidates = Vec::new();
    for i in 0..n {
        let left = if i == 0 { f64::NEG_INFINITY } else { rev[i - 1] };
        let right = if i + 1 == n { f64::NEG_INFINITY } else { rev[i + 1] };
        if rev[i] >= left && rev[i] >= right {
            let (lo, hi) = (grid[i.saturating_sub(1)], grid[(i + 1).min(n - 1)]);
            let p = refine_price(d, lo, hi, num);
            let (p, r) = if price_revenue(d, p) >= rev[i] { (p, price_revenue(d, p)) } else { (grid[i], rev[i]) };
            candidates.push((p, r));
        }
    }
    let (price, revenue) = candidates
        .iter()
        .copied()
        .fold((0.0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
    let mut near_optimal: Vec<f64> = candidates
        .iter()
        .filter(|c| c.1 >= revenue - num.near_optimal_tol && (c.0 - price).abs() > 1e-6)
        .map(|c| c.0)
        .collect();
    near_optimal.dedup_by(|a, b| (*a - *b).abs() <= 1e-6);
    PriceSearch { price, revenue, near_optimal }
}

pub fn solve_posted_price(d: &Distribution, num: &Numerics) -> Mechanism {
    Mechanism::PostedPrice { price: posted_price_search(d, num).price }
}

/// Step allocation `f2 = 1{v > rho(k)}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdSpec {
    pub rho: ThresholdCurve,
}

impl ThresholdSpec {
    /// The step mechanism charging the threshold to buyers.
    pub fn mechanism(&self) -> Mechanism {
        Mechanism::RatioDependent { psi: self.rho.clone() }
    }
}

/// Step replacement of a grid allocation and its per-column surpluses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdImprovement {
    pub spec: ThresholdSpec,
    pub surplus_before: Vec<f64>,
    pub surplus_after: Vec<f64>,
}

fn monotone_cross_ratio_violation(a: &GridAllocation, tol: f64) -> Option<(f64, f64, f64)> {
    let mesh = a.mesh();
    for j in 0..mesh.nk() {
        for jp in j + 1..mesh.nk() {
            for i in 0..mesh.nv() {
                if a.cumulative_node(i, jp) > a.cumulative_node(i, j) + tol {
                    return Some((mesh.v()[i], mesh.k()[j], mesh.k()[jp]));
                }
            }
        }
    }
    None
}

/// Replaces each column by the step at `1 - ∫_0^1 f2(t,k) dt`, which keeps
/// the allocation monotone in both directions and, when the revenue curve
/// is concave, does not lower any column's virtual surplus.
pub fn threshold_improvement(a: &GridAllocation, d: &Distribution, num: &Numerics) -> Result<ThresholdImprovement> {
    let grid = ConditionGrid::for_distribution(d, num);
    let verdict = check_condition_a(d, &grid, num);
    if !verdict.holds {
        return Err(verdict.precondition_error());
    }
    if let Some((i, j, gap)) = a.monotonicity_violation(num.ic_tol) {
        return Err(Error::Precondition {
            condition: "C1",
            detail: format!("f2 falls by {gap} at v = {}, k = {}", a.mesh().v()[i], a.mesh().k()[j]),
        });
    }
    if let Some((v, k, kp)) = monotone_cross_ratio_violation(a, num.ic_tol) {
        return Err(Error::Precondition {
            condition: "C2",
            detail: format!("cumulative allocation rises from k = {k} to k' = {kp} at v = {v}"),
        });
    }
    let mesh = a.mesh();
    let rho: Vec<f64> = (0..mesh.nk()).map(|j| (1.0 - a.total(j)).clamp(0.0, 1.0)).collect();
    let before: Vec<f64> = (0..mesh.nk()).map(|j| column_virtual_surplus(a, j, d)).collect();
    let after: Vec<f64> = rho.iter().zip(mesh.k()).map(|(&r, &k)| revenue_curve(d, r, k)).collect();
    for (j, (b, f)) in before.iter().zip(&after).enumerate() {
        if *f < b - COLUMN_TOL {
            return Err(Error::Precondition {
                condition: "A",
                detail: format!("step lowers column surplus at k = {} from {b} to {f}", mesh.k()[j]),
            });
        }
    }
    // nondecreasing by the cross-ratio condition at v = 1; clear rounding
    let mut rho = rho;
    for j in 1..rho.len() {
        rho[j] = rho[j].max(rho[j - 1]);
    }
    let spec = ThresholdSpec { rho: ThresholdCurve::new(mesh.k().to_vec(), rho)? };
    Ok(ThresholdImprovement { spec, surplus_before: before, surplus_after: after })
}

/// Which side of the zero curve a nondecreasing threshold lies on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "case")]
pub enum FlatCase {
    /// Below the zero curve at `k = 1`: price `rho(1)`.
    Below,
    /// Crosses the zero curve at `k_star`: price `rho(k_star)`.
    Crossing { k_star: f64 },
    /// Above the zero curve at the ratio floor: price `rho(k_floor)`.
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatPriceImprovement {
    pub case: FlatCase,
    pub price: f64,
}

impl FlatPriceImprovement {
    pub fn mechanism(&self) -> Mechanism {
        Mechanism::PostedPrice { price: self.price }
    }
}

/// Replaces a nondecreasing threshold by one flat price, column by column
/// weakly better, when the zero curve falls in `k`.
pub fn posted_price_improvement(spec: &ThresholdSpec, d: &Distribution, num: &Numerics) -> Result<FlatPriceImprovement> {
    let grid = ConditionGrid::for_distribution(d, num);
    let c = classify(d, &grid, num)?;
    if !c.a.holds {
        return Err(c.a.precondition_error());
    }
    let bp = c.b_prime.as_ref().expect("b' verdict present when A holds");
    if !bp.holds {
        return Err(bp.precondition_error());
    }
    if !spec.rho.is_nondecreasing(num.curve_tol) {
        return Err(Error::Precondition { condition: "rho nondecreasing", detail: "threshold falls in k".into() });
    }
    let rho = |k: f64| spec.rho.eval(k);
    let kf = d.k_floor();
    let (case, price) = if rho(1.0) <= phi_zero(d, 1.0, num)? {
        (FlatCase::Below, rho(1.0))
    } else if rho(kf) >= phi_zero(d, kf, num)? {
        (FlatCase::Above, rho(kf))
    } else {
        let gap = |k: f64| -> Result<f64> { Ok(rho(k) - phi_zero(d, k, num)?) };
        let (mut lo, mut hi) = (kf, 1.0);
        while hi - lo > num.root_tol {
            let m = 0.5 * (lo + hi);
            if gap(m)? >= -num.root_tol {
                hi = m;
            } else {
                lo = m;
            }
        }
        (FlatCase::Crossing { k_star: hi }, rho(hi))
    };
    for &k in &grid.k {
        let (new, old) = (revenue_curve(d, price, k), revenue_curve(d, rho(k), k));
        if new < old - COLUMN_TOL {
            return Err(Error::Precondition {
                condition: "B'",
                detail: format!("flat price {price} lowers column revenue at k = {k} from {old} to {new}"),
            });
        }
    }
    Ok(FlatPriceImprovement { case, price })
}

/// `∫∫ max(phi, 0) g(v|k) g_k(k) dv dk`: revenue of the relaxed program
/// without incentive constraints.
pub fn pointwise_bound(d: &Distribution, num: &Numerics) -> f64 {
    let vb = v_breaks(d, 0.0, &[]);
    integrate_k(d, &[], num.quad_nodes_2d, |k| {
        simpson_piecewise(|v| phi_density(d, v, k).max(0.0), &vb, num.quad_nodes)
    })
}

pub const ORACLE_MAX_K_NODES: usize = 6;
pub const ORACLE_MAX_RHO_NODES: usize = 40;

/// Best nondecreasing piecewise-constant threshold found by exhaustive
/// search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub revenue: f64,
    /// Threshold on each ratio cell.
    pub rho: Vec<f64>,
    /// Cells `[k_lo, k_hi)`; the last one is closed at 1.
    pub cells: Vec<[f64; 2]>,
    /// Best per-cell thresholds without the monotonicity constraint.
    pub cell_bound: f64,
    pub evaluated: u64,
}

/// `table[j][i] = ∫_{cell j} R(rho_i | k) g_k(k) dk`.
pub fn oracle_revenue_table(d: &Distribution, cells: &[[f64; 2]], rho: &[f64], num: &Numerics) -> Vec<Vec<f64>> {
    let inner = k_breaks(d, &[]);
    cells
        .iter()
        .map(|&[lo, hi]| {
            let mut breaks = vec![lo, hi];
            breaks.extend(inner.iter().copied().filter(|&k| k > lo && k < hi));
            breaks.sort_by(f64::total_cmp);
            rho.iter()
                .map(|&r| simpson_piecewise(|k| revenue_curve(d, r, k) * d.ratio_pdf(k), &breaks, num.quad_nodes_2d))
                .collect()
        })
        .collect()
}

fn search(table: &[Vec<f64>], j: usize, from: usize, acc: f64, path: &mut Vec<usize>, best: &mut (f64, Vec<usize>), count: &mut u64) {
    if j == table.len() {
        *count += 1;
        if acc > best.0 {
            *best = (acc, path.clone());
        }
        return;
    }
    for i in from..table[j].len() {
        path.push(i);
        search(table, j + 1, i, acc + table[j][i], path, best, count);
        path.pop();
    }
}

pub fn oracle_best_threshold(d: &Distribution, k_nodes: usize, rho_nodes: usize, num: &Numerics) -> Result<OracleResult> {
    if k_nodes == 0 || k_nodes > ORACLE_MAX_K_NODES {
        return Err(Error::SizeLimit { what: "kNodes", value: k_nodes, limit: ORACLE_MAX_K_NODES });
    }
    if !(2..=ORACLE_MAX_RHO_NODES).contains(&rho_nodes) {
        return Err(Error::SizeLimit { what: "rhoNodes", value: rho_nodes, limit: ORACLE_MAX_RHO_NODES });
    }
    let (k_lo, _) = d.k_support();
    let edges = linspace(k_lo, 1.0, k_nodes + 1);
    let cells: Vec<[f64; 2]> = edges.windows(2).map(|w| [w[0], w[1]]).collect();
    let rho = linspace(0.0, 1.0, rho_nodes);
    let table = oracle_revenue_table(d, &cells, &rho, num);

    let per_first: Vec<(f64, Vec<usize>, u64)> = (0..rho_nodes)
        .into_par_iter()
        .map(|i0| {
            let mut best = (f64::NEG_INFINITY, Vec::new());
            let mut count = 0;
            let mut path = vec![i0];
            search(&table, 1, i0, table[0][i0], &mut path, &mut best, &mut count);
            (best.0, best.1, count)
        })
        .collect();
    let evaluated = per_first.iter().map(|r| r.2).sum();
    let (revenue, idx, _) = per_first
        .into_iter()
        .fold((f64::NEG_INFINITY, Vec::new(), 0), |a, b| if b.0 > a.0 { b } else { a });
    let cell_bound = table.iter().map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max)).sum();
    Ok(OracleResult { revenue, rho: idx.iter().map(|&i| rho[i]).collect(), cells, cell_bound, evaluated })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifyOptions {
    pub k_nodes: usize,
    pub rho_nodes: usize,
    pub bound_tol: f64,
    pub oracle_tol: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { k_nodes: 5, rho_nodes: 31, bound_tol: 1e-4, oracle_tol: 5e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gaps {
    pub bound_minus_candidate: f64,
    pub oracle_minus_candidate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateGrid {
    pub k_nodes: usize,
    pub rho_nodes: usize,
    pub quad_nodes: usize,
    pub quad_nodes_2d: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityCertificate {
    pub candidate_revenue: f64,
    pub pointwise_bound: f64,
    pub oracle_best: f64,
    pub oracle_rho: Vec<f64>,
    pub oracle_cell_bound: f64,
    pub gaps: Gaps,
    pub grid: CertificateGrid,
    pub bound_tol: f64,
    pub oracle_tol: f64,
    /// Candidate revenue reaches the pointwise bound within `bound_tol`.
    pub attains_bound: bool,
    /// Below the bound and not beaten by the oracle, within tolerance.
    pub pass: bool,
}

pub fn certify(d: &Distribution, candidate: &Mechanism, opts: &CertifyOptions, num: &Numerics) -> Result<OptimalityCertificate> {
    let candidate_revenue = expected_revenue(candidate, d, num);
    let bound = pointwise_bound(d, num);
    let oracle = oracle_best_threshold(d, opts.k_nodes, opts.rho_nodes, num)?;
    let gaps = Gaps {
        bound_minus_candidate: bound - candidate_revenue,
        oracle_minus_candidate: oracle.revenue - candidate_revenue,
    };
    let pass = gaps.bound_minus_candidate >= -opts.bound_tol && gaps.oracle_minus_candidate <= opts.oracle_tol;
    Ok(OptimalityCertificate {
        candidate_revenue,
        pointwise_bound: bound,
        oracle_best: oracle.revenue,
        oracle_rho: oracle.rho,
        oracle_cell_bound: oracle.cell_bound,
        attains_bound: gaps.bound_minus_candidate.abs() <= opts.bound_tol,
        gaps,
        grid: CertificateGrid {
            k_nodes: opts.k_nodes,
            rho_nodes: opts.rho_nodes,
            quad_nodes: num.quad_nodes,
            quad_nodes_2d: num.quad_nodes_2d,
        },
        bound_tol: opts.bound_tol,
        oracle_tol: opts.oracle_tol,
        pass,
    })
}

/// How `solve` picked its mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolvePath {
    /// Zero curve nondecreasing with `z(k)/k` nonincreasing.
    RatioDependent,
    /// Zero curve strictly decreasing.
    FlatDecreasing,
    /// Value and ratio independent.
    FlatIndependent,
}

#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    pub path: SolvePath,
    pub mechanism: Mechanism,
    pub classification: Classification,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub price_search: Option<PriceSearch>,
}

impl Solution {
    pub fn zero_curve(&self) -> Option<&ZeroCurve> {
        self.classification.zero_curve.as_ref()
    }
}

/// Chooses the optimal mechanism from the condition verdicts.
pub fn solve(d: &Distribution, num: &Numerics) -> Result<Solution> {
    let grid = ConditionGrid::for_distribution(d, num);
    let classification = classify(d, &grid, num)?;
    let (path, mechanism, price_search) = if classification.b_holds() {
        (SolvePath::RatioDependent, ratio_dependent_from(&classification, num)?, None)
    } else if classification.b_prime_holds() || d.is_independent() {
        let path = if classification.b_prime_holds() { SolvePath::FlatDecreasing } else { SolvePath::FlatIndependent };
        let s = posted_price_search(d, num);
        (path, Mechanism::PostedPrice { price: s.price }, Some(s))
    } else {
        let failed = if classification.a.holds { &classification.b } else { &None };
        let detail = match failed {
            Some(_) => "zero curve is neither ratio-monotone nor decreasing and the distribution is not a product".into(),
            None => "condition A fails and the distribution is not a product".into(),
        };
        return Err(Error::Precondition { condition: if classification.a.holds { "B" } else { "A" }, detail });
    };
    Ok(Solution { path, mechanism, classification, price_search })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mech::Mesh;

    const KF: f64 = 1e-3;

    fn num() -> Numerics {
        Numerics::default()
    }

    #[test]
    fn ratio_dependent_examples() {
        let m = solve_condition_b(&Distribution::example1(KF), &num()).unwrap();
        let Mechanism::RatioDependent { psi } = &m else { panic!("{m:?}") };
        for (&k, &v) in psi.ks().iter().zip(psi.values()) {
            assert!((v - (1.0 / (k + 2.0)).powf(1.0 / (k + 1.0))).abs() < 1e-8);
        }
        let m = solve_condition_b(&Distribution::uniform(KF), &num()).unwrap();
        assert!((m.threshold(0.3).unwrap() - 0.5).abs() < 1e-9);
        match solve_condition_b(&Distribution::example2(KF), &num()) {
            Err(Error::Precondition { condition, .. }) => assert_eq!(condition, "B"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn posted_price_examples() {
        let s = posted_price_search(&Distribution::example2(KF), &num());
        assert!((s.price - (13f64.sqrt() - 2.0) / 3.0).abs() < 1e-8, "{}", s.price);
        assert!((s.revenue - 0.2931399155810336).abs() < 1e-12);
        let s = posted_price_search(&Distribution::uniform(KF), &num());
        assert!((s.price - 0.5).abs() < 1e-9);
        assert!((s.revenue - 0.25).abs() < 1e-15);
        assert!(s.near_optimal.is_empty());
    }

    #[test]
    fn threshold_improvement_examples() {
        let d = Distribution::uniform(KF);
        let mesh = Mesh::uniform(21, 4, 0.1).unwrap();
        let full = GridAllocation::from_fn(mesh.clone(), |_, _| 1.0).unwrap();
        let out = threshold_improvement(&full, &d, &num()).unwrap();
        assert!(out.spec.rho.values().iter().all(|&r| r == 0.0));
        let none = GridAllocation::from_fn(mesh.clone(), |_, _| 0.0).unwrap();
        let out = threshold_improvement(&none, &d, &num()).unwrap();
        assert!(out.spec.rho.values().iter().all(|&r| r == 1.0));
        let lin = GridAllocation::from_fn(mesh, |v, _| v).unwrap();
        let out = threshold_improvement(&lin, &d, &num()).unwrap();
        for ((&r, &b), &a) in out.spec.rho.values().iter().zip(&out.surplus_before).zip(&out.surplus_after) {
            assert!((r - 0.5).abs() < 1e-15);
            assert!((b - 1.0 / 6.0).abs() < 1e-12);
            assert!((a - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn threshold_improvement_rejects_falling_columns() {
        let mesh = Mesh::uniform(11, 3, 0.2).unwrap();
        let a = GridAllocation::from_fn(mesh, |v, _| 1.0 - v).unwrap();
        match threshold_improvement(&a, &Distribution::uniform(KF), &num()) {
            Err(Error::Precondition { condition, .. }) => assert_eq!(condition, "C1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flat_price_cases() {
        let d = Distribution::example2(KF);
        let ks = num().k_grid();
        let spec = |f: &dyn Fn(f64) -> f64| ThresholdSpec { rho: ThresholdCurve::sample(&ks, f).unwrap() };
        let out = posted_price_improvement(&spec(&|_| 0.2), &d, &num()).unwrap();
        assert_eq!((out.case, out.price), (FlatCase::Below, 0.2));
        let out = posted_price_improvement(&spec(&|_| 0.9), &d, &num()).unwrap();
        assert_eq!((out.case, out.price), (FlatCase::Above, 0.9));
        let out = posted_price_improvement(&spec(&|k| 0.45 + 0.2 * k), &d, &num()).unwrap();
        let FlatCase::Crossing { k_star } = out.case else { panic!("{out:?}") };
        assert!((k_star - 0.43873321228112333).abs() < 1e-8);
        assert!((out.price - 0.5377466424562247).abs() < 1e-8);
    }

    #[test]
    fn flat_price_requires_decreasing_zero_curve() {
        let spec = ThresholdSpec { rho: ThresholdCurve::constant(&[0.5, 1.0], 0.3).unwrap() };
        assert!(matches!(
            posted_price_improvement(&spec, &Distribution::example1(KF), &num()),
            Err(Error::Precondition { condition: "B'", .. })
        ));
    }

    #[test]
    fn pointwise_bound_examples() {
        assert!((pointwise_bound(&Distribution::uniform(KF), &num()) - 0.25).abs() < 1e-12);
        let d = Distribution::example1(KF);
        let m = solve_condition_b(&d, &num()).unwrap();
        let (b, r) = (pointwise_bound(&d, &num()), expected_revenue(&m, &d, &num()));
        assert!((b - r).abs() < 1e-5, "{b} {r}");
    }

    #[test]
    fn oracle_matches_dynamic_program() {
        let d = Distribution::example2(KF);
        let (nk, nr) = (4, 11);
        let res = oracle_best_threshold(&d, nk, nr, &num()).unwrap();
        let table = oracle_revenue_table(&d, &res.cells, &linspace(0.0, 1.0, nr), &num());
        let mut best = table[0].clone();
        for row in &table[1..] {
            let mut run = f64::NEG_INFINITY;
            best = row
                .iter()
                .zip(&best)
                .map(|(c, b)| {
                    run = run.max(*b);
                    run + c
                })
                .collect();
        }
        let dp = best.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((dp - res.revenue).abs() < 1e-14);
        assert_eq!(res.evaluated, 1001); // C(11+4-1, 4)
        assert!(res.rho.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn oracle_size_limits() {
        let d = Distribution::uniform(KF);
        assert!(matches!(oracle_best_threshold(&d, 7, 10, &num()), Err(Error::SizeLimit { .. })));
        assert!(matches!(oracle_best_threshold(&d, 3, 41, &num()), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn oracle_uniform() {
        let res = oracle_best_threshold(&Distribution::uniform(KF), 4, 21, &num()).unwrap();
        assert!((res.revenue - 0.25).abs() < 1e-12);
        assert!(res.rho.iter().all(|&r| (r - 0.5).abs() < 1e-12));
    }

    #[test]
    fn solve_paths() {
        assert_eq!(solve(&Distribution::example1(KF), &num()).unwrap().path, SolvePath::RatioDependent);
        let s = solve(&Distribution::example2(KF), &num()).unwrap();
        assert_eq!(s.path, SolvePath::FlatDecreasing);
        assert!(s.price_search.is_some());
    }
}
