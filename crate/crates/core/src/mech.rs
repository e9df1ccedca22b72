//! Direct mechanisms: allocations of the two goods plus a payment, as
//! functions of the reported type.
//!
//! Grid-backed mechanisms are stored on a [`Mesh`]. Within a ratio column,
//! allocations and payments are piecewise linear in `v`; across ratios a
//! report uses the nearest column at or below it.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::linspace;
use crate::curve::ThresholdCurve;
use crate::dist::TypePoint;
use crate::error::{Error, Result};
use crate::fmt::sig12;
use crate::quad::{cumulative_trapezoid, locate};

/// A consumption bundle `(a1, a2, t)`: quantities of the two goods and the
/// transfer paid by the agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub a1: f64,
    pub a2: f64,
    pub t: f64,
}

impl Outcome {
    pub const NULL: Outcome = Outcome { a1: 0.0, a2: 0.0, t: 0.0 };
}

/// Leontief utility `v min(a1/k, a2) - t`.
pub fn utility(t: TypePoint, o: &Outcome) -> f64 {
    t.v * (o.a1 / t.k).min(o.a2) - o.t
}

/// The goods part of an outcome, kept in the form that produced it so that
/// consumption under a truthful report is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bundle {
    /// `a1 = ratio * units`, `a2 = units`.
    Proportional { ratio: f64, units: f64 },
    Raw { a1: f64, a2: f64 },
}

impl Bundle {
    pub const NULL: Bundle = Bundle::Proportional { ratio: 1.0, units: 0.0 };

    /// Units of the final good an agent with ratio `k` can make.
    pub fn consumption(&self, k: f64) -> f64 {
        match *self {
            Bundle::Proportional { ratio, units } => units * (ratio / k).min(1.0),
            Bundle::Raw { a1, a2 } => (a1 / k).min(a2),
        }
    }

    pub fn quantities(&self) -> (f64, f64) {
        match *self {
            Bundle::Proportional { ratio, units } => (ratio * units, units),
            Bundle::Raw { a1, a2 } => (a1, a2),
        }
    }
}

/// A rectangular mesh of types: `v` from 0 to 1 and `k` from a positive
/// floor up to 1, both strictly ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeshRepr")]
pub struct Mesh {
    v: Vec<f64>,
    k: Vec<f64>,
}

#[derive(Deserialize)]
struct MeshRepr {
    v: Vec<f64>,
    k: Vec<f64>,
}

impl TryFrom<MeshRepr> for Mesh {
    type Error = Error;
    fn try_from(r: MeshRepr) -> Result<Self> {
        Mesh::new(r.v, r.k)
    }
}

impl Mesh {
    pub fn new(v: Vec<f64>, k: Vec<f64>) -> Result<Self> {
        if v.len() < 2 || k.is_empty() {
            return Err(Error::Mesh("need at least two v nodes and one k node".into()));
        }
        if v[0] != 0.0 || v[v.len() - 1] != 1.0 {
            return Err(Error::Mesh("v nodes must run from 0 to 1".into()));
        }
        if !(k[0] > 0.0) || k[k.len() - 1] != 1.0 {
            return Err(Error::Mesh("k nodes must run from a positive floor to 1".into()));
        }
        if v.windows(2).any(|w| !(w[1] > w[0])) || k.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Mesh("nodes must be strictly ascending".into()));
        }
        Ok(Self { v, k })
    }

    /// `nv` equally spaced values on `[0,1]`, `nk` ratios on `[k_floor,1]`.
    pub fn uniform(nv: usize, nk: usize, k_floor: f64) -> Result<Self> {
        let k = if nk == 1 { vec![1.0] } else { linspace(k_floor, 1.0, nk) };
        Self::new(linspace(0.0, 1.0, nv), k)
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn nv(&self) -> usize {
        self.v.len()
    }

    pub fn nk(&self) -> usize {
        self.k.len()
    }

    pub fn len(&self) -> usize {
        self.v.len() * self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index of node `(i, j)`; storage is column by column in `k`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.v.len() + i
    }

    pub fn point(&self, idx: usize) -> TypePoint {
        let nv = self.v.len();
        TypePoint { v: self.v[idx % nv], k: self.k[idx / nv] }
    }

    pub fn points(&self) -> impl Iterator<Item = TypePoint> + '_ {
        (0..self.len()).map(|idx| self.point(idx))
    }

    /// Column in use for a report `k`: the last node at or below it.
    pub(crate) fn column_of(&self, k: f64) -> usize {
        self.k.partition_point(|&x| x <= k).saturating_sub(1)
    }

    /// Mesh spacing along `v` (largest cell).
    pub fn v_step(&self) -> f64 {
        self.v.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

fn lerp(a: f64, b: f64, w: f64) -> f64 {
    if w == 0.0 {
        a
    } else if w == 1.0 {
        b
    } else {
        a + w * (b - a)
    }
}

fn columns(mesh: &Mesh, flat: &[f64]) -> Vec<Vec<f64>> {
    flat.chunks(mesh.nv()).map(|c| c.to_vec()).collect()
}

fn flatten(mesh: &Mesh, cols: Vec<Vec<f64>>, what: &str) -> Result<Vec<f64>> {
    if cols.len() != mesh.nk() || cols.iter().any(|c| c.len() != mesh.nv()) {
        return Err(Error::Mesh(format!("{what} must have {} columns of {} values", mesh.nk(), mesh.nv())));
    }
    let flat: Vec<f64> = cols.into_iter().flatten().collect();
    if flat.iter().any(|x| !x.is_finite()) {
        return Err(Error::Invalid(format!("{what} holds non-finite values")));
    }
    Ok(flat)
}

fn check_unit(values: &[f64], what: &str) -> Result<()> {
    if values.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::Invalid(format!("{what} must lie in [0,1]")));
    }
    Ok(())
}

/// Allocation of good 2 on a mesh, piecewise linear in `v` per column, with
/// cached running integrals `∫_0^v f2(t,k) dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AllocationRepr", into = "AllocationRepr")]
pub struct GridAllocation {
    mesh: Mesh,
    f2: Vec<f64>,
    cum: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AllocationRepr {
    mesh: Mesh,
    f2: Vec<Vec<f64>>,
}

impl TryFrom<AllocationRepr> for GridAllocation {
    type Error = Error;
    fn try_from(r: AllocationRepr) -> Result<Self> {
        let f2 = flatten(&r.mesh, r.f2, "f2")?;
        GridAllocation::new(r.mesh, f2)
    }
}

impl From<GridAllocation> for AllocationRepr {
    fn from(a: GridAllocation) -> Self {
        AllocationRepr { f2: columns(&a.mesh, &a.f2), mesh: a.mesh }
    }
}

impl GridAllocation {
    /// `f2[mesh.index(i, j)]` is the allocation at `(v_i, k_j)`.
    pub fn new(mesh: Mesh, f2: Vec<f64>) -> Result<Self> {
        if f2.len() != mesh.len() {
            return Err(Error::Mesh(format!("expected {} allocations, got {}", mesh.len(), f2.len())));
        }
        check_unit(&f2, "f2")?;
        let nv = mesh.nv();
        let mut cum = Vec::with_capacity(f2.len());
        for col in f2.chunks(nv) {
            cum.extend(cumulative_trapezoid(mesh.v(), col));
        }
        Ok(Self { mesh, f2, cum })
    }

    pub fn from_fn<F: FnMut(f64, f64) -> f64>(mesh: Mesh, mut f: F) -> Result<Self> {
        let f2 = mesh.points().map(|t| f(t.v, t.k)).collect();
        Self::new(mesh, f2)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.f2
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let nv = self.mesh.nv();
        &self.f2[j * nv..(j + 1) * nv]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.f2[self.mesh.index(i, j)]
    }

    /// `∫_0^{v_i} f2(t, k_j) dt`.
    pub fn cumulative_node(&self, i: usize, j: usize) -> f64 {
        self.cum[self.mesh.index(i, j)]
    }

    pub fn value_at(&self, j: usize, v: f64) -> f64 {
        let col = self.column(j);
        let (i, w) = locate(self.mesh.v(), v);
        lerp(col[i], col[i + 1], w)
    }

    /// `∫_0^x f2(t, k_j) dt`, exact for the piecewise-linear column.
    pub fn cumulative_at(&self, j: usize, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let (i, w) = locate(self.mesh.v(), x);
        if w == 0.0 {
            return self.cumulative_node(i, j);
        }
        if w == 1.0 {
            return self.cumulative_node(i + 1, j);
        }
        let col = self.column(j);
        let fx = lerp(col[i], col[i + 1], w);
        self.cumulative_node(i, j) + 0.5 * (x - self.mesh.v()[i]) * (col[i] + fx)
    }

    /// `∫_0^1 f2(t, k_j) dt`.
    pub fn total(&self, j: usize) -> f64 {
        self.cumulative_node(self.mesh.nv() - 1, j)
    }

    /// First `(v, k)` where a column decreases by more than `tol`.
    pub fn monotonicity_violation(&self, tol: f64) -> Option<(usize, usize, f64)> {
        for j in 0..self.mesh.nk() {
            for (i, w) in self.column(j).windows(2).enumerate() {
                if w[1] < w[0] - tol {
                    return Some((i, j, w[0] - w[1]));
                }
            }
        }
        None
    }
}

/// Payments `p(0,1) + v f2(v,k) - ∫_0^v f2(t,k) dt` at every node.
pub fn payment_from_allocation(alloc: &GridAllocation, p00: f64, tol: f64) -> Result<Vec<f64>> {
    if let Some((i, j, _)) = alloc.monotonicity_violation(tol) {
        return Err(Error::NotMonotone { v: alloc.mesh.v()[i], k: alloc.mesh.k()[j] });
    }
    let mesh = alloc.mesh();
    Ok((0..mesh.len())
        .map(|idx| {
            let t = mesh.point(idx);
            p00 + t.v * alloc.f2[idx] - alloc.cum[idx]
        })
        .collect())
}

/// A non-wasteful grid mechanism: good 1 is always `k` times good 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GridMechanism {
    alloc: GridAllocation,
    payment: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRepr {
    mesh: Mesh,
    f2: Vec<Vec<f64>>,
    payment: Vec<Vec<f64>>,
}

impl TryFrom<GridRepr> for GridMechanism {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        let f2 = flatten(&r.mesh, r.f2, "f2")?;
        let payment = flatten(&r.mesh, r.payment, "payment")?;
        GridMechanism::new(GridAllocation::new(r.mesh, f2)?, payment)
    }
}

impl From<GridMechanism> for GridRepr {
    fn from(g: GridMechanism) -> Self {
        let mesh = g.alloc.mesh.clone();
        GridRepr {
            f2: columns(&mesh, &g.alloc.f2),
            payment: columns(&mesh, &g.payment),
            mesh,
        }
    }
}

impl GridMechanism {
    pub fn new(alloc: GridAllocation, payment: Vec<f64>) -> Result<Self> {
        if payment.len() != alloc.mesh.len() {
            return Err(Error::Mesh("payment length does not match the mesh".into()));
        }
        if payment.iter().any(|p| !p.is_finite()) {
            return Err(Error::Invalid("payments must be finite".into()));
        }
        Ok(Self { alloc, payment })
    }

    /// Payments derived from the allocation with `p(0,1) = p00`.
    pub fn from_allocation(alloc: GridAllocation, p00: f64) -> Result<Self> {
        let payment = payment_from_allocation(&alloc, p00, 1e-12)?;
        Self::new(alloc, payment)
    }

    /// Samples a non-wasteful mechanism at the nodes of `mesh`.
    pub fn sample(m: &Mechanism, mesh: &Mesh) -> Result<Self> {
        let mut f2 = Vec::with_capacity(mesh.len());
        let mut payment = Vec::with_capacity(mesh.len());
        for t in mesh.points() {
            let (bundle, p) = m.bundle_at(t);
            let units = match bundle {
                Bundle::Proportional { units, .. } => units,
                Bundle::Raw { a1, a2 } if a1 == t.k * a2 => a2,
                Bundle::Raw { .. } => {
                    return Err(Error::Invalid("mechanism is wasteful; reduce it first".into()));
                }
            };
            f2.push(units);
            payment.push(p);
        }
        Self::new(GridAllocation::new(mesh.clone(), f2)?, payment)
    }

    pub fn allocation(&self) -> &GridAllocation {
        &self.alloc
    }

    pub fn mesh(&self) -> &Mesh {
        &self.alloc.mesh
    }

    pub fn payments(&self) -> &[f64] {
        &self.payment
    }

    pub fn payment(&self, i: usize, j: usize) -> f64 {
        self.payment[self.alloc.mesh.index(i, j)]
    }

    /// `p(0,1)`.
    pub fn base_payment(&self) -> f64 {
        self.payment(0, self.mesh().nk() - 1)
    }

    /// Truthful utility at node `(i, j)`: `v f2 - p`.
    pub fn truthful_utility(&self, i: usize, j: usize) -> f64 {
        let idx = self.alloc.mesh.index(i, j);
        self.alloc.mesh.v()[i] * self.alloc.f2[idx] - self.payment[idx]
    }

    pub fn payment_at(&self, j: usize, v: f64) -> f64 {
        let nv = self.mesh().nv();
        let col = &self.payment[j * nv..(j + 1) * nv];
        let (i, w) = locate(self.mesh().v(), v);
        lerp(col[i], col[i + 1], w)
    }
}

/// A grid mechanism with independent allocations of the two goods,
/// possibly wasteful.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRepr", into = "RawRepr")]
pub struct RawGridMechanism {
    mesh: Mesh,
    f1: Vec<f64>,
    f2: Vec<f64>,
    payment: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRepr {
    mesh: Mesh,
    f1: Vec<Vec<f64>>,
    f2: Vec<Vec<f64>>,
    payment: Vec<Vec<f64>>,
}

impl TryFrom<RawRepr> for RawGridMechanism {
    type Error = Error;
    fn try_from(r: RawRepr) -> Result<Self> {
        let f1 = flatten(&r.mesh, r.f1, "f1")?;
        let f2 = flatten(&r.mesh, r.f2, "f2")?;
        let payment = flatten(&r.mesh, r.payment, "payment")?;
        RawGridMechanism::new(r.mesh, f1, f2, payment)
    }
}

impl From<RawGridMechanism> for RawRepr {
    fn from(g: RawGridMechanism) -> Self {
        RawRepr {
            f1: columns(&g.mesh, &g.f1),
            f2: columns(&g.mesh, &g.f2),
            payment: columns(&g.mesh, &g.payment),
            mesh: g.mesh,
        }
    }
}

impl RawGridMechanism {
    pub fn new(mesh: Mesh, f1: Vec<f64>, f2: Vec<f64>, payment: Vec<f64>) -> Result<Self> {
        if f1.len() != mesh.len() || f2.len() != mesh.len() || payment.len() != mesh.len() {
            return Err(Error::Mesh("array lengths do not match the mesh".into()));
        }
        check_unit(&f1, "f1")?;
        check_unit(&f2, "f2")?;
        if payment.iter().any(|p| !p.is_finite()) {
            return Err(Error::Invalid("payments must be finite".into()));
        }
        Ok(Self { mesh, f1, f2, payment })
    }

    /// Samples any mechanism at the nodes of `mesh`.
    pub fn sample(m: &Mechanism, mesh: &Mesh) -> Result<Self> {
        let mut f1 = Vec::with_capacity(mesh.len());
        let mut f2 = Vec::with_capacity(mesh.len());
        let mut payment = Vec::with_capacity(mesh.len());
        for t in mesh.points() {
            let (bundle, p) = m.bundle_at(t);
            let (a1, a2) = bundle.quantities();
            f1.push(a1.min(1.0));
            f2.push(a2);
            payment.push(p);
        }
        Self::new(mesh.clone(), f1, f2, payment)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn f1(&self) -> &[f64] {
        &self.f1
    }

    pub fn f2(&self) -> &[f64] {
        &self.f2
    }

    pub fn payments(&self) -> &[f64] {
        &self.payment
    }

    pub fn outcome_node(&self, idx: usize) -> Outcome {
        Outcome { a1: self.f1[idx], a2: self.f2[idx], t: self.payment[idx] }
    }
}

/// Replaces each allocation by its non-wasteful part, `(f1, f1/k)` when
/// `f1/k <= f2` and `(k f2, f2)` otherwise, keeping payments.
pub fn non_wasteful_reduction(m: &RawGridMechanism) -> GridMechanism {
    let f2: Vec<f64> = m
        .mesh
        .points()
        .zip(m.f1.iter().zip(&m.f2))
        .map(|(t, (&a1, &a2))| {
            let scaled = a1 / t.k;
            if scaled <= a2 {
                scaled
            } else {
                a2
            }
        })
        .collect();
    let alloc = GridAllocation::new(m.mesh.clone(), f2).expect("reduced allocation stays in [0,1]");
    GridMechanism::new(alloc, m.payment.clone()).expect("payments are finite")
}

/// A selling mechanism over the type space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mechanism {
    /// Types with `v > price` get `(k, 1)` and pay `price`.
    PostedPrice { price: f64 },
    /// Types with `v > psi(k)` get `(k, 1)` and pay `psi(k)`.
    RatioDependent { psi: ThresholdCurve },
    Grid(GridMechanism),
    RawGrid(RawGridMechanism),
}

/// Validates the two curve conditions (within `1e-12`) and wraps `psi`.
pub fn make_ratio_dependent(psi: ThresholdCurve) -> Result<Mechanism> {
    make_ratio_dependent_with_tol(psi, 1e-12)
}

pub fn make_ratio_dependent_with_tol(psi: ThresholdCurve, tol: f64) -> Result<Mechanism> {
    if let Some((k, k_prime, reason)) = psi.ratio_dependent_violation(tol) {
        return Err(Error::InvalidCurve { k, k_prime, reason });
    }
    Ok(Mechanism::RatioDependent { psi })
}

pub fn posted_price(price: f64) -> Result<Mechanism> {
    if !(0.0..=1.0).contains(&price) {
        return Err(Error::Invalid(format!("posted price {price} not in [0,1]")));
    }
    Ok(Mechanism::PostedPrice { price })
}

impl Mechanism {
    pub fn kind(&self) -> &'static str {
        match self {
            Mechanism::PostedPrice { .. } => "posted_price",
            Mechanism::RatioDependent { .. } => "ratio_dependent",
            Mechanism::Grid(_) => "grid",
            Mechanism::RawGrid(_) => "raw_grid",
        }
    }

    /// Threshold curve of a posted or ratio-dependent price.
    pub fn threshold(&self, k: f64) -> Option<f64> {
        match self {
            Mechanism::PostedPrice { price } => Some(*price),
            Mechanism::RatioDependent { psi } => Some(psi.eval(k)),
            _ => None,
        }
    }

    /// Bundle and payment for the report `t`. A value exactly at the
    /// threshold buys nothing.
    pub fn bundle_at(&self, t: TypePoint) -> (Bundle, f64) {
        match self {
            Mechanism::PostedPrice { .. } | Mechanism::RatioDependent { .. } => {
                let price = self.threshold(t.k).expect("threshold mechanism");
                if t.v <= price {
                    (Bundle::NULL, 0.0)
                } else {
                    (Bundle::Proportional { ratio: t.k, units: 1.0 }, price)
                }
            }
            Mechanism::Grid(g) => {
                let j = g.mesh().column_of(t.k);
                let units = g.alloc.value_at(j, t.v);
                (Bundle::Proportional { ratio: t.k, units }, g.payment_at(j, t.v))
            }
            Mechanism::RawGrid(g) => {
                let j = g.mesh.column_of(t.k);
                let (i, w) = locate(g.mesh.v(), t.v);
                let nv = g.mesh.nv();
                let at = |xs: &[f64]| lerp(xs[j * nv + i], xs[j * nv + i + 1], w);
                (Bundle::Raw { a1: at(&g.f1), a2: at(&g.f2) }, at(&g.payment))
            }
        }
    }

    pub fn outcome(&self, t: TypePoint) -> Outcome {
        let (bundle, p) = self.bundle_at(t);
        let (a1, a2) = bundle.quantities();
        Outcome { a1, a2, t: p }
    }

    /// Utility of type `t` when reporting truthfully.
    pub fn truthful_utility(&self, t: TypePoint) -> f64 {
        let (bundle, p) = self.bundle_at(t);
        t.v * bundle.consumption(t.k) - p
    }

    /// Nodes whose payment exceeds the value bound `|p| <= 1`.
    pub fn payment_warnings(&self) -> Vec<TypePoint> {
        let (mesh, pay) = match self {
            Mechanism::Grid(g) => (g.mesh(), g.payments()),
            Mechanism::RawGrid(g) => (g.mesh(), g.payments()),
            _ => return Vec::new(),
        };
        pay.iter()
            .enumerate()
            .filter(|(_, p)| p.abs() > 1.0)
            .map(|(idx, _)| mesh.point(idx))
            .collect()
    }

    /// Own mesh of grid-backed mechanisms.
    pub fn mesh(&self) -> Option<&Mesh> {
        match self {
            Mechanism::Grid(g) => Some(g.mesh()),
            Mechanism::RawGrid(g) => Some(g.mesh()),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Mechanism = serde_json::from_str(s)?;
        if let Mechanism::PostedPrice { price } = m {
            posted_price(price)?;
        }
        Ok(m)
    }

    /// Writes `v,k,f1,f2,p` rows for every node of `mesh`.
    pub fn write_grid_csv<W: Write>(&self, mesh: &Mesh, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["v", "k", "f1", "f2", "p"])?;
        for t in mesh.points() {
            let o = self.outcome(t);
            w.write_record([sig12(t.v), sig12(t.k), sig12(o.a1), sig12(o.a2), sig12(o.t)])?;
        }
        w.flush()?;
        Ok(())
    }
}
