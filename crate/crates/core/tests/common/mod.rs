#![allow(dead_code)]

use leontief::config::linspace;
use leontief::mech::{GridAllocation, Mesh, RawGridMechanism};
use leontief::ThresholdCurve;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const KF: f64 = 1e-3;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn example1_zero(k: f64) -> f64 {
    (1.0 / (k + 2.0)).powf(1.0 / (k + 1.0))
}

pub fn example2_zero(k: f64) -> f64 {
    (-4.0 * k + (16.0 * k * k + 12.0 * k + 3.0).sqrt()) / 3.0
}

/// Knots `k_0 < ... < k_n = 1` with `psi` nondecreasing and `psi / k`
/// nonincreasing, then mixed with `base` (itself valid).
pub fn random_valid_curve<R: Rng>(rng: &mut R, base: &dyn Fn(f64) -> f64) -> ThresholdCurve {
    let knots = rng.gen_range(3..=7);
    let ks = linspace(KF, 1.0, knots);
    let mut psi = vec![rng.gen_range(0.0..0.6)];
    for w in ks.windows(2) {
        let last = *psi.last().unwrap();
        let cap = (last * w[1] / w[0]).min(1.0);
        psi.push(if cap > last { rng.gen_range(last..=cap) } else { last });
    }
    let lambda: f64 = rng.gen_range(0.0..1.0);
    let values = ks.iter().zip(&psi).map(|(&k, &p)| lambda * p + (1.0 - lambda) * base(k)).collect();
    ThresholdCurve::new(ks, values).unwrap()
}

/// Breaks one of the two curve conditions by 0.1 to 0.3 at an interior
/// knot pair placed well inside the mesh.
pub fn random_invalid_curve<R: Rng>(rng: &mut R, base: &dyn Fn(f64) -> f64) -> ThresholdCurve {
    loop {
        let c = random_valid_curve(rng, base);
        let ks = c.ks().to_vec();
        let mut vals = c.values().to_vec();
        let j = rng.gen_range(1..ks.len());
        let delta = rng.gen_range(0.1..0.3);
        if rng.gen_bool(0.5) {
            // falls in k
            let to = vals[j - 1] - delta;
            for v in &mut vals[j..] {
                *v = v.min(to);
            }
        } else {
            // rises faster than proportionally
            let to = vals[j - 1] * ks[j] / ks[j - 1] + delta;
            vals[j] = vals[j].max(to);
            for i in j + 1..vals.len() {
                vals[i] = vals[i].max(vals[j]);
            }
        }
        for v in &mut vals {
            *v = v.clamp(0.0, 1.0);
        }
        let out = ThresholdCurve::new(ks, vals).unwrap();
        if out.ratio_dependent_violation(0.05).is_some() {
            return out;
        }
    }
}

/// A nondecreasing column built from a random mixture of ramps and steps.
fn random_column<R: Rng>(rng: &mut R, v: &[f64]) -> Vec<f64> {
    let scale: f64 = rng.gen_range(0.2..=1.0);
    let parts = rng.gen_range(1..=4);
    let pieces: Vec<(f64, f64, f64)> = (0..parts)
        .map(|_| {
            let a: f64 = rng.gen_range(0.0..1.0);
            let w: f64 = rng.gen_range(0.0..0.5);
            (a, w, rng.gen_range(0.1..1.0))
        })
        .collect();
    let total: f64 = pieces.iter().map(|p| p.2).sum();
    v.iter()
        .map(|&x| {
            let s: f64 = pieces
                .iter()
                .map(|&(a, w, m)| m * if w == 0.0 { f64::from(x > a) } else { ((x - a) / w).clamp(0.0, 1.0) })
                .sum();
            (scale * s / total).clamp(0.0, 1.0)
        })
        .collect()
}

/// Nondecreasing in `v`, pointwise nonincreasing in `k` (so the running
/// integrals fall with `k`).
pub fn random_monotone_allocation<R: Rng>(rng: &mut R, mesh: &Mesh) -> GridAllocation {
    let nv = mesh.nv();
    let mut cols = vec![random_column(rng, mesh.v())];
    for _ in 1..mesh.nk() {
        let prev = cols.last().unwrap().clone();
        let fresh = random_column(rng, mesh.v());
        let keep = rng.gen_bool(0.3);
        cols.push(if keep { prev } else { prev.iter().zip(&fresh).map(|(a, b)| a.max(*b)).collect() });
    }
    // built from k = 1 downwards
    cols.reverse();
    let flat: Vec<f64> = cols.into_iter().flatten().collect();
    assert_eq!(flat.len(), nv * mesh.nk());
    GridAllocation::new(mesh.clone(), flat).unwrap()
}

/// Adds disposable waste to a non-wasteful sampled mechanism. With
/// `null_only`, waste goes only to types that buy nothing, so no type can
/// gain from it.
pub fn add_waste<R: Rng>(rng: &mut R, m: &RawGridMechanism, null_only: bool) -> RawGridMechanism {
    let mut f1 = m.f1().to_vec();
    let mut f2 = m.f2().to_vec();
    for idx in 0..f1.len() {
        if !rng.gen_bool(0.4) || (null_only && f2[idx] > 0.0) {
            continue;
        }
        let w: f64 = rng.gen_range(0.0..1.0);
        if null_only {
            if rng.gen_bool(0.5) {
                f1[idx] = w;
            } else {
                f2[idx] = w;
            }
        } else if rng.gen_bool(0.5) {
            f1[idx] += w * (1.0 - f1[idx]);
        } else {
            f2[idx] += w * (1.0 - f2[idx]);
        }
    }
    RawGridMechanism::new(m.mesh().clone(), f1, f2, m.payments().to_vec()).unwrap()
}
