//! Conditional virtual values `phi(v,k) = v - (1 - G(v|k)) / g(v|k)`, their
//! zeros in `v`, and the distribution conditions built on them.
//!
//! Most sweeps work with `phi(v,k) g(v|k) = v g(v|k) - (1 - G(v|k))`, which
//! has the sign of `phi`, stays finite where the density vanishes, and is
//! minus the slope of the revenue curve `v (1 - G(v|k))`.

use std::io::Write;

use serde::Serialize;

use crate::config::{linspace, Numerics};
use crate::curve::ThresholdCurve;
use crate::dist::{Distribution, Family, TypePoint};
use crate::error::{Error, Result};

const MAX_WITNESSES: usize = 64;

pub fn phi(d: &Distribution, t: TypePoint) -> Result<f64> {
    let g = d.conditional_density(t.v, t.k)?;
    let tail = 1.0 - d.cond_cdf(t.v, t.k);
    if !(g > 0.0) {
        if matches!(d.family(), Family::Tabulated(_)) || !(tail > 0.0) {
            return Err(Error::DegenerateDensity { v: t.v, k: t.k });
        }
        // built-in densities vanish only on the null edge v = 0
        return Ok(f64::NEG_INFINITY);
    }
    Ok(t.v - tail / g)
}

/// `phi(v,k) g(v|k)`.
pub fn phi_density(d: &Distribution, v: f64, k: f64) -> f64 {
    v * d.cond_pdf(v, k) - (1.0 - d.cond_cdf(v, k))
}

/// Per-ratio revenue curve `v (1 - G(v|k))`.
pub fn revenue_curve(d: &Distribution, v: f64, k: f64) -> f64 {
    v * (1.0 - d.cond_cdf(v, k))
}

/// `∫_a^b v (1 - G(v|k)) dv`, in closed form through `∫ t G(t|k) dt`.
pub fn revenue_curve_integral(d: &Distribution, a: f64, b: f64, k: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    0.5 * (b * b - a * a) - (d.cdf_moment(b, k) - d.cdf_moment(a, k))
}

/// The unique `v` in `(0,1)` with `phi(v,k) = 0`.
///
/// A sign scan at `num.sign_scan_step` certifies uniqueness, then bisection
/// narrows the bracket to `num.root_tol`.
pub fn phi_zero(d: &Distribution, k: f64, num: &Numerics) -> Result<f64> {
    d.conditional_density(0.5, k)?;
    let n = (1.0 / num.sign_scan_step).round().max(2.0) as usize;
    let f = |v: f64| phi_density(d, v, k);
    let mut prev = f(0.0);
    let mut changes = 0;
    let mut bracket = None;
    for i in 1..=n {
        let v = i as f64 / n as f64;
        let cur = f(v);
        if !cur.is_finite() {
            return Err(Error::DegenerateDensity { v, k });
        }
        if (prev < 0.0) != (cur < 0.0) {
            changes += 1;
            if bracket.is_none() {
                bracket = Some(((i - 1) as f64 / n as f64, v));
            }
        }
        prev = cur;
    }
    if changes > 1 {
        return Err(Error::NonUniqueRoot { k, changes });
    }
    let (mut lo, mut hi) = match bracket {
        Some(b) if f(0.0) < 0.0 => b,
        _ => return Err(Error::NoRoot { k }),
    };
    while hi - lo > num.root_tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `k -> phi_k^{-1}(0)` sampled on a ratio grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroCurve(ThresholdCurve);

impl ZeroCurve {
    pub fn compute(d: &Distribution, ks: &[f64], num: &Numerics) -> Result<Self> {
        let values = ks
            .iter()
            .map(|&k| phi_zero(d, k, num))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self(ThresholdCurve::new(ks.to_vec(), values)?))
    }

    pub fn curve(&self) -> &ThresholdCurve {
        &self.0
    }

    pub fn into_curve(self) -> ThresholdCurve {
        self.0
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.0.write_csv(out, "phi_inv_zero")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Condition {
    A,
    B,
    #[serde(rename = "B'")]
    BPrime,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Condition::A => "A",
            Condition::B => "B",
            Condition::BPrime => "B'",
        })
    }
}

/// Where a condition fails and by how much.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub k: f64,
    /// Second ratio of a pairwise condition.
    pub k_prime: Option<f64>,
    /// Value coordinate of a per-ratio condition.
    pub v: Option<f64>,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionVerdict {
    pub condition: Condition,
    pub holds: bool,
    /// First violations found, capped; `violations` counts all of them.
    pub witnesses: Vec<Witness>,
    pub violations: usize,
    /// Smallest slack observed; negative when the condition fails.
    pub margin: f64,
}

impl ConditionVerdict {
    fn new(condition: Condition) -> Self {
        Self {
            condition,
            holds: true,
            witnesses: Vec::new(),
            violations: 0,
            margin: f64::INFINITY,
        }
    }

    fn record(&mut self, w: Witness) {
        self.holds = false;
        self.violations += 1;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(w);
        }
    }

    pub(crate) fn precondition_error(&self) -> Error {
        let detail = match self.witnesses.first() {
            Some(w) => format!(
                "{} violations, first at k = {}{}{} (magnitude {})",
                self.violations,
                w.k,
                w.k_prime.map(|x| format!(", k' = {x}")).unwrap_or_default(),
                w.v.map(|x| format!(", v = {x}")).unwrap_or_default(),
                w.magnitude
            ),
            None => "no witness".into(),
        };
        Error::Precondition {
            condition: match self.condition {
                Condition::A => "A",
                Condition::B => "B",
                Condition::BPrime => "B'",
            },
            detail,
        }
    }
}

/// Grid used by the condition sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionGrid {
    pub k: Vec<f64>,
    pub v_nodes: usize,
}

impl ConditionGrid {
    /// `condition_k_nodes` ratios on `[k_floor, 1]` of `d`, and
    /// `condition_v_nodes` values.
    pub fn for_distribution(d: &Distribution, num: &Numerics) -> Self {
        Self {
            k: linspace(d.k_floor(), 1.0, num.condition_k_nodes),
            v_nodes: num.condition_v_nodes,
        }
    }
}

/// Condition A, checked as strict increase of `phi g` in `v` on the grid.
pub fn check_condition_a(d: &Distribution, grid: &ConditionGrid, num: &Numerics) -> ConditionVerdict {
    let vs = linspace(0.0, 1.0, grid.v_nodes);
    let mut verdict = ConditionVerdict::new(Condition::A);
    for &k in &grid.k {
        let values: Vec<f64> = vs.iter().map(|&v| phi_density(d, v, k)).collect();
        for (i, w) in values.windows(2).enumerate() {
            let rise = w[1] - w[0];
            let slack = if rise.is_nan() { f64::NEG_INFINITY } else { rise - num.strict_eps };
            verdict.margin = verdict.margin.min(rise);
            if !(slack > 0.0) {
                verdict.record(Witness {
                    k,
                    k_prime: None,
                    v: Some(vs[i]),
                    magnitude: -slack,
                });
            }
        }
    }
    verdict
}

fn require_a(d: &Distribution, grid: &ConditionGrid, num: &Numerics) -> Result<ZeroCurve> {
    let a = check_condition_a(d, grid, num);
    if !a.holds {
        return Err(a.precondition_error());
    }
    ZeroCurve::compute(d, &grid.k, num)
}

fn condition_b_on(curve: &ZeroCurve, num: &Numerics) -> ConditionVerdict {
    // the zero curve is only known to within the bisection width
    let slack = num.root_tol;
    let ks = curve.curve().ks();
    let zs = curve.curve().values();
    let mut verdict = ConditionVerdict::new(Condition::B);
    for i in 0..ks.len() {
        for j in i + 1..ks.len() {
            let upper = zs[j] - zs[i];
            let lower = zs[i] - ks[i] / ks[j] * zs[j];
            let m = upper.min(lower);
            verdict.margin = verdict.margin.min(m);
            if m < -slack {
                verdict.record(Witness {
                    k: ks[i],
                    k_prime: Some(ks[j]),
                    v: None,
                    magnitude: -m,
                });
            }
        }
    }
    verdict
}

fn condition_b_prime_on(curve: &ZeroCurve, num: &Numerics) -> ConditionVerdict {
    let ks = curve.curve().ks();
    let zs = curve.curve().values();
    let mut verdict = ConditionVerdict::new(Condition::BPrime);
    for i in 0..ks.len() {
        for j in i + 1..ks.len() {
            let drop = zs[i] - zs[j];
            verdict.margin = verdict.margin.min(drop);
            if !(drop > num.strict_eps) {
                verdict.record(Witness {
                    k: ks[i],
                    k_prime: Some(ks[j]),
                    v: None,
                    magnitude: num.strict_eps - drop,
                });
            }
        }
    }
    verdict
}

/// Condition B on all ordered grid pairs. Fails with a precondition error
/// when Condition A does not hold.
pub fn check_condition_b(d: &Distribution, grid: &ConditionGrid, num: &Numerics) -> Result<ConditionVerdict> {
    Ok(condition_b_on(&require_a(d, grid, num)?, num))
}

/// Condition B' (strictly decreasing zero curve) on all ordered grid pairs.
pub fn check_condition_b_prime(
    d: &Distribution,
    grid: &ConditionGrid,
    num: &Numerics,
) -> Result<ConditionVerdict> {
    Ok(condition_b_prime_on(&require_a(d, grid, num)?, num))
}

/// All three verdicts, sharing one zero-curve computation.
#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub a: ConditionVerdict,
    pub b: Option<ConditionVerdict>,
    pub b_prime: Option<ConditionVerdict>,
    #[serde(skip)]
    pub zero_curve: Option<ZeroCurve>,
}

impl Classification {
    pub fn b_holds(&self) -> bool {
        self.b.as_ref().is_some_and(|v| v.holds)
    }

    pub fn b_prime_holds(&self) -> bool {
        self.b_prime.as_ref().is_some_and(|v| v.holds)
    }
}

pub fn classify(d: &Distribution, grid: &ConditionGrid, num: &Numerics) -> Result<Classification> {
    let a = check_condition_a(d, grid, num);
    if !a.holds {
        return Ok(Classification {
            a,
            b: None,
            b_prime: None,
            zero_curve: None,
        });
    }
    let curve = ZeroCurve::compute(d, &grid.k, num)?;
    Ok(Classification {
        a,
        b: Some(condition_b_on(&curve, num)),
        b_prime: Some(condition_b_prime_on(&curve, num)),
        zero_curve: Some(curve),
    })
}
