//! Incentive checks, two ways, and the two revenue functionals.
//!
//! The direct checks compare every grid type against every distinct menu
//! entry. The characterization checks test the monotonicity and
//! integral conditions on the cached cumulative allocations of a grid
//! mechanism, plus the payment identity.

use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::config::Numerics;
use crate::dist::{Distribution, TypePoint};
use crate::error::Result;
use crate::fmt::sig12;
use crate::mech::{Bundle, GridAllocation, GridMechanism, Mechanism, Mesh};
use crate::quad::simpson_piecewise;
use crate::virtual_value::{phi_density, revenue_curve, revenue_curve_integral};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Direct,
    Characterization,
}

/// A family of constraints checked by a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    PairwiseIc,
    Ir,
    C1,
    C2,
    C3,
    PaymentIdentity,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::PairwiseIc => "pairwise_ic",
            Check::Ir => "ir",
            Check::C1 => "c1",
            Check::C2 => "c2",
            Check::C3 => "c3",
            Check::PaymentIdentity => "payment_identity",
        }
    }
}

/// Worst violation of one family. `witness` is the type the constraint is
/// about; `witness2` is the report (or second type) it is compared with.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    #[serde(skip)]
    pub check: Check,
    pub max_violation: f64,
    pub witness: Option<TypePoint>,
    pub witness2: Option<TypePoint>,
    pub checked: usize,
}

impl CheckResult {
    fn new(check: Check) -> Self {
        Self { check, max_violation: 0.0, witness: None, witness2: None, checked: 0 }
    }

    fn see(&mut self, violation: f64, a: TypePoint, b: Option<TypePoint>) {
        self.checked += 1;
        if violation > self.max_violation {
            self.max_violation = violation;
            self.witness = Some(a);
            self.witness2 = b;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub mode: Mode,
    pub tol: f64,
    #[serde(serialize_with = "checks_as_map")]
    pub checks: Vec<CheckResult>,
    /// `p(0,1)` and whether it is nonpositive, the IR shortcut for IC
    /// mechanisms.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_payment: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_payment_nonpositive: Option<bool>,
    pub pass: bool,
}

fn checks_as_map<S: Serializer>(checks: &[CheckResult], s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut map = s.serialize_map(Some(checks.len()))?;
    for c in checks {
        map.serialize_entry(c.check.name(), c)?;
    }
    map.end()
}

impl VerificationReport {
    fn finish(mode: Mode, tol: f64, checks: Vec<CheckResult>) -> Self {
        let pass = checks.iter().all(|c| c.max_violation <= tol);
        Self { mode, tol, checks, base_payment: None, base_payment_nonpositive: None, pass }
    }

    pub fn get(&self, check: Check) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.check == check)
    }

    pub fn max_violation(&self, check: Check) -> f64 {
        self.get(check).map_or(0.0, |c| c.max_violation)
    }

    /// Family with the largest violation.
    pub fn worst(&self) -> Option<&CheckResult> {
        self.checks.iter().fold(None, |best: Option<&CheckResult>, c| match best {
            Some(b) if b.max_violation >= c.max_violation => Some(b),
            _ => Some(c),
        })
    }

    /// Combines two reports of the same mode.
    pub fn merge(mut self, other: VerificationReport) -> Self {
        self.checks.extend(other.checks);
        self.tol = self.tol.max(other.tol);
        self.base_payment = self.base_payment.or(other.base_payment);
        self.base_payment_nonpositive = self.base_payment_nonpositive.or(other.base_payment_nonpositive);
        self.pass = self.pass && other.pass;
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Rows `family,max_violation,witness_v,witness_k,witness_v2,witness_k2`.
    pub fn write_csv<W: Write>(&self, out: W, header: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if header {
            w.write_record(["family", "max_violation", "witness_v", "witness_k", "witness_v2", "witness_k2"])?;
        }
        let coords = |t: Option<TypePoint>| match t {
            Some(t) => (sig12(t.v), sig12(t.k)),
            None => (String::new(), String::new()),
        };
        for c in &self.checks {
            let (v, k) = coords(c.witness);
            let (v2, k2) = coords(c.witness2);
            w.write_record([c.check.name().to_string(), sig12(c.max_violation), v, k, v2, k2])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Plain-text table for terminals.
    pub fn table(&self) -> String {
        let mut s = format!("{:<18} {:>20}  witness\n", "family", "max_violation");
        for c in &self.checks {
            let wit = match (c.witness, c.witness2) {
                (Some(a), Some(b)) => format!("({}, {}) vs ({}, {})", sig12(a.v), sig12(a.k), sig12(b.v), sig12(b.k)),
                (Some(a), None) => format!("({}, {})", sig12(a.v), sig12(a.k)),
                _ => "-".into(),
            };
            let flag = if c.max_violation <= self.tol { "ok" } else { "FAIL" };
            s.push_str(&format!("{:<18} {:>20}  {wit}  {flag}\n", c.check.name(), sig12(c.max_violation)));
        }
        s
    }
}

/// Gain of type `t` from reporting `report` instead of the truth.
pub fn deviation_gain(m: &Mechanism, t: TypePoint, report: TypePoint) -> f64 {
    let (own, p) = m.bundle_at(t);
    let (alt, q) = m.bundle_at(report);
    (t.v * alt.consumption(t.k) - q) - (t.v * own.consumption(t.k) - p)
}

fn menu_key(b: &Bundle, p: f64) -> (u8, u64, u64, u64) {
    match *b {
        Bundle::Proportional { ratio, units } => (0, ratio.to_bits(), units.to_bits(), p.to_bits()),
        Bundle::Raw { a1, a2 } => (1, a1.to_bits(), a2.to_bits(), p.to_bits()),
    }
}

/// Pairwise deviation check over all grid types and reports.
pub fn check_ic_direct(m: &Mechanism, mesh: &Mesh, tol: f64) -> VerificationReport {
    let points: Vec<TypePoint> = mesh.points().collect();
    let outcomes: Vec<(Bundle, f64)> = points.iter().map(|&t| m.bundle_at(t)).collect();
    let mut seen = HashSet::new();
    let menu: Vec<(Bundle, f64, usize)> = outcomes
        .iter()
        .enumerate()
        .filter(|(_, (b, p))| seen.insert(menu_key(b, *p)))
        .map(|(j, &(b, p))| (b, p, j))
        .collect();

    let (gain, i, j) = points
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let (own, p) = outcomes[i];
            let truthful = t.v * own.consumption(t.k) - p;
            let mut best = (0.0, usize::MAX);
            for &(b, q, j) in &menu {
                let gain = t.v * b.consumption(t.k) - q - truthful;
                if gain > best.0 {
                    best = (gain, j);
                }
            }
            (best.0, i, best.1)
        })
        .reduce(
            || (0.0, usize::MAX, usize::MAX),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );

    let mut ic = CheckResult::new(Check::PairwiseIc);
    ic.checked = points.len() * menu.len();
    if gain > 0.0 {
        ic.max_violation = gain;
        ic.witness = Some(points[i]);
        ic.witness2 = Some(points[j]);
    }
    VerificationReport::finish(Mode::Direct, tol, vec![ic])
}

/// Truthful utility at every grid type, plus the `p(0,1) <= 0` shortcut.
pub fn check_ir(m: &Mechanism, mesh: &Mesh, tol: f64) -> VerificationReport {
    let mut ir = CheckResult::new(Check::Ir);
    for t in mesh.points() {
        ir.see(-m.truthful_utility(t), t, None);
    }
    let mut report = VerificationReport::finish(Mode::Direct, tol, vec![ir]);
    let p00 = m.bundle_at(TypePoint { v: 0.0, k: 1.0 }).1;
    report.base_payment = Some(p00);
    report.base_payment_nonpositive = Some(p00 <= 0.0);
    report
}

/// Direct IC and IR in one report.
pub fn check_direct(m: &Mechanism, mesh: &Mesh, tol: f64) -> VerificationReport {
    check_ic_direct(m, mesh, tol).merge(check_ir(m, mesh, tol))
}

/// Monotonicity in `v`, the two cross-ratio integral conditions, and the
/// payment identity, on the mechanism's own mesh.
///
/// Between adjacent nodes the identity is checked in its discrete form:
/// IC between `v_i` and `v_{i+1}` allows the payment step to deviate from
/// the trapezoid identity by up to half a cell of allocation increase.
///
/// The cross-ratio conditions are evaluated on the running integral as the
/// identity realizes it, `∫_0^v f2 = p(0,1) + v f2 - p`. At the fractional
/// limit `v k/k'` the running integral of column `k` is read off the
/// column's menu, `max_i (w f2_i - p_i) + p(0,1)`, which is what a type
/// there could actually obtain.
pub fn check_characterization(g: &GridMechanism, tol: f64) -> VerificationReport {
    let a = g.allocation();
    let mesh = g.mesh();
    let (vs, ks) = (mesh.v(), mesh.k());
    let nv = vs.len();
    let tp = |v: f64, k: f64| TypePoint { v, k };

    let mut c1 = CheckResult::new(Check::C1);
    for (j, &k) in ks.iter().enumerate() {
        for i in 0..nv - 1 {
            c1.see(a.at(i, j) - a.at(i + 1, j), tp(vs[i + 1], k), Some(tp(vs[i], k)));
        }
    }

    // rents v f2 - p; the common p(0,1) cancels from every comparison
    let rent: Vec<f64> = (0..mesh.len()).map(|idx| mesh.point(idx).v * a.values()[idx] - g.payments()[idx]).collect();
    let envelope = |j: usize, w: f64| -> (f64, usize) {
        (0..nv).fold((f64::NEG_INFINITY, 0), |best, i| {
            let idx = mesh.index(i, j);
            let u = w * a.values()[idx] - g.payments()[idx];
            if u > best.0 {
                (u, i)
            } else {
                best
            }
        })
    };

    let mut c2 = CheckResult::new(Check::C2);
    let mut c3 = CheckResult::new(Check::C3);
    for j in 0..ks.len() {
        for jp in j + 1..ks.len() {
            let scale = ks[j] / ks[jp];
            for (i, &v) in vs.iter().enumerate() {
                let hi = rent[mesh.index(i, jp)];
                c2.see(hi - rent[mesh.index(i, j)], tp(v, ks[j]), Some(tp(v, ks[jp])));
                let (u, at) = envelope(j, v * scale);
                c3.see(u - hi, tp(v, ks[jp]), Some(tp(vs[at], ks[j])));
            }
        }
    }

    let mut pay = CheckResult::new(Check::PaymentIdentity);
    let p00 = g.base_payment();
    for (j, &k) in ks.iter().enumerate() {
        let resid = |i: usize| g.payment(i, j) - (p00 + vs[i] * a.at(i, j) - a.cumulative_node(i, j));
        let mut prev = resid(0);
        pay.see(prev.abs(), tp(0.0, k), Some(tp(0.0, 1.0)));
        for i in 1..vs.len() {
            let r = resid(i);
            let slack = 0.5 * (vs[i] - vs[i - 1]) * (a.at(i, j) - a.at(i - 1, j)).max(0.0);
            pay.see((r - prev).abs() - slack, tp(vs[i], k), Some(tp(vs[i - 1], k)));
            prev = r;
        }
    }

    VerificationReport::finish(Mode::Characterization, tol, vec![c1, c2, c3, pay])
}

/// Whether the direct and characterization verdicts agree on a mechanism's
/// own mesh.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equivalence {
    pub direct: VerificationReport,
    pub characterization: VerificationReport,
    pub agree: bool,
}

pub fn equivalence_check(g: &GridMechanism, tol: f64) -> Equivalence {
    let direct = check_ic_direct(&Mechanism::Grid(g.clone()), g.mesh(), tol);
    let characterization = check_characterization(g, tol);
    let agree = direct.pass == characterization.pass;
    Equivalence { direct, characterization, agree }
}

pub(crate) fn k_breaks(d: &Distribution, extra: &[f64]) -> Vec<f64> {
    let (lo, hi) = d.k_support();
    let mut b = vec![lo, hi];
    b.extend(d.k_breaks().unwrap_or(&[]).iter().copied());
    b.extend(extra.iter().copied().filter(|&k| k > lo && k < hi));
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

pub(crate) fn v_breaks(d: &Distribution, a: f64, extra: &[f64]) -> Vec<f64> {
    let mut b = vec![a, 1.0];
    b.extend(d.v_breaks().unwrap_or(&[]).iter().copied().filter(|&v| v > a && v < 1.0));
    b.extend(extra.iter().copied().filter(|&v| v > a && v < 1.0));
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// `∫ h(k) g_k(k) dk` over the ratio support.
pub(crate) fn integrate_k<F: Fn(f64) -> f64 + Sync>(d: &Distribution, extra: &[f64], nodes: usize, h: F) -> f64 {
    simpson_piecewise(|k| h(k) * d.ratio_pdf(k), &k_breaks(d, extra), nodes)
}

fn mechanism_k_breaks(m: &Mechanism) -> Vec<f64> {
    match m {
        Mechanism::PostedPrice { .. } => Vec::new(),
        Mechanism::RatioDependent { psi } => psi.ks().to_vec(),
        Mechanism::Grid(g) => g.mesh().k().to_vec(),
        Mechanism::RawGrid(g) => g.mesh().k().to_vec(),
    }
}

/// `∫∫ p(v,k) g(v,k) dv dk`.
pub fn expected_revenue(m: &Mechanism, d: &Distribution, num: &Numerics) -> f64 {
    let extra = mechanism_k_breaks(m);
    match m {
        Mechanism::PostedPrice { .. } | Mechanism::RatioDependent { .. } => {
            integrate_k(d, &extra, num.quad_nodes_2d, |k| {
                let psi = m.threshold(k).expect("threshold mechanism");
                revenue_curve(d, psi, k)
            })
        }
        Mechanism::Grid(_) | Mechanism::RawGrid(_) => {
            let vb = v_breaks(d, 0.0, m.mesh().expect("grid").v());
            integrate_k(d, &extra, num.quad_nodes_2d, |k| {
                let ke = k.max(f64::MIN_POSITIVE);
                simpson_piecewise(
                    |v| m.bundle_at(TypePoint { v, k: ke }).1 * d.cond_pdf(v, k),
                    &vb,
                    num.quad_nodes,
                )
            })
        }
    }
}

/// `∫∫ phi(v,k) f2(v,k) g(v|k) g_k(k) dv dk` for the good-2 allocation a
/// truthful type consumes.
pub fn virtual_surplus(m: &Mechanism, d: &Distribution, num: &Numerics) -> f64 {
    let extra = mechanism_k_breaks(m);
    match m {
        Mechanism::PostedPrice { .. } | Mechanism::RatioDependent { .. } => {
            integrate_k(d, &extra, num.quad_nodes_2d, |k| {
                let psi = m.threshold(k).expect("threshold mechanism");
                simpson_piecewise(|v| phi_density(d, v, k), &v_breaks(d, psi, &[]), num.quad_nodes)
            })
        }
        Mechanism::Grid(_) | Mechanism::RawGrid(_) => {
            let vb = v_breaks(d, 0.0, m.mesh().expect("grid").v());
            integrate_k(d, &extra, num.quad_nodes_2d, |k| {
                let ke = k.max(f64::MIN_POSITIVE);
                simpson_piecewise(
                    |v| m.bundle_at(TypePoint { v, k: ke }).0.consumption(ke) * phi_density(d, v, k),
                    &vb,
                    num.quad_nodes,
                )
            })
        }
    }
}

/// Virtual surplus of a grid allocation, columns applied by floor lookup.
pub fn allocation_virtual_surplus(a: &GridAllocation, d: &Distribution, num: &Numerics) -> f64 {
    let vb = v_breaks(d, 0.0, a.mesh().v());
    integrate_k(d, a.mesh().k(), num.quad_nodes_2d, |k| {
        let j = a.mesh().column_of(k);
        simpson_piecewise(|v| a.value_at(j, v) * phi_density(d, v, k), &vb, num.quad_nodes)
    })
}

/// `∫_0^1 phi(v,k) f2(v,k) g(v|k) dv` for column `j` at its own ratio `k_j`.
///
/// With `phi g = -R'` for the revenue curve `R(v) = v (1 - G(v|k))` and
/// `R(0) = R(1) = 0`, this equals `∫ R f2' dv`, exact for a piecewise
/// linear column.
pub fn column_virtual_surplus(a: &GridAllocation, j: usize, d: &Distribution) -> f64 {
    let vs = a.mesh().v();
    let k = a.mesh().k()[j];
    let col = a.column(j);
    (0..vs.len() - 1)
        .map(|i| {
            let slope = (col[i + 1] - col[i]) / (vs[i + 1] - vs[i]);
            slope * revenue_curve_integral(d, vs[i], vs[i + 1], k)
        })
        .sum()
}
