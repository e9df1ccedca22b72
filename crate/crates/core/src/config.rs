use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every numerical knob used by the library, with its default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    /// Smallest representable ratio; `K` is open at zero.
    pub k_floor: f64,
    /// Composite Simpson node count for 1-D integrals.
    pub quad_nodes: usize,
    /// Simpson node count along the ratio axis of 2-D integrals.
    pub quad_nodes_2d: usize,
    /// Absolute tolerance of the adaptive Simpson rule used by validation.
    pub adaptive_tol: f64,
    /// Bisection width for zeros of the virtual value.
    pub root_tol: f64,
    /// Resolution of the sign scan that certifies a unique zero.
    pub sign_scan_step: f64,
    /// Slack that separates "strictly" from "weakly" monotone.
    pub strict_eps: f64,
    /// Violations of the ratio-dependent curve conditions below this are ignored.
    pub curve_tol: f64,
    /// Deviation gains up to this count as no IC violation.
    pub ic_tol: f64,
    /// Allowed normalization error of joint and conditional densities.
    pub normalization_tol: f64,
    /// Allowed mismatch between marginals and 2-D quadrature.
    pub marginal_tol: f64,
    /// Ratio grid for condition checks and price curves.
    pub condition_k_nodes: usize,
    /// Value grid for the Condition A sweep.
    pub condition_v_nodes: usize,
    /// Coarse scan size of the posted-price search.
    pub price_scan_nodes: usize,
    /// Final bracket width of the posted-price search.
    pub price_tol: f64,
    /// Maximizers within this revenue of the best are reported.
    pub near_optimal_tol: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            k_floor: 1e-3,
            quad_nodes: 1001,
            quad_nodes_2d: 201,
            adaptive_tol: 1e-12,
            root_tol: 1e-10,
            sign_scan_step: 1e-3,
            strict_eps: 1e-9,
            curve_tol: 1e-12,
            ic_tol: 1e-9,
            normalization_tol: 1e-8,
            marginal_tol: 1e-6,
            condition_k_nodes: 101,
            condition_v_nodes: 1001,
            price_scan_nodes: 1000,
            price_tol: 1e-10,
            near_optimal_tol: 1e-8,
        }
    }
}

impl Numerics {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Invalid(format!("numerics.{key} out of range")))
            }
        };
        check(self.k_floor > 0.0 && self.k_floor <= 0.5, "k_floor")?;
        check(self.quad_nodes >= 3, "quad_nodes")?;
        check(self.quad_nodes_2d >= 3, "quad_nodes_2d")?;
        check(self.condition_k_nodes >= 3, "condition_k_nodes")?;
        check(self.condition_v_nodes >= 3, "condition_v_nodes")?;
        check(self.price_scan_nodes >= 3, "price_scan_nodes")?;
        for (key, v) in [
            ("adaptive_tol", self.adaptive_tol),
            ("root_tol", self.root_tol),
            ("sign_scan_step", self.sign_scan_step),
            ("strict_eps", self.strict_eps),
            ("curve_tol", self.curve_tol),
            ("ic_tol", self.ic_tol),
            ("normalization_tol", self.normalization_tol),
            ("marginal_tol", self.marginal_tol),
            ("price_tol", self.price_tol),
            ("near_optimal_tol", self.near_optimal_tol),
        ] {
            check(v > 0.0 && v.is_finite(), key)?;
        }
        Ok(())
    }

    /// The default ratio grid: `condition_k_nodes` equally spaced points on `[k_floor, 1]`.
    pub fn k_grid(&self) -> Vec<f64> {
        linspace(self.k_floor, 1.0, self.condition_k_nodes)
    }
}

/// `n` equally spaced points from `a` to `b`, endpoints exact.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / (n - 1) as f64;
            let mut out: Vec<f64> = (0..n).map(|i| a + step * i as f64).collect();
            out[n - 1] = b;
            out
        }
    }
}
