use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::locate;

/// A map `k -> threshold in [0,1]` given at ascending ratio nodes and
/// linearly interpolated between them (flat outside).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveTable", into = "CurveTable")]
pub struct ThresholdCurve {
    ks: Vec<f64>,
    values: Vec<f64>,
}

/// Wire form: a `(k, value)` table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveTable {
    points: Vec<[f64; 2]>,
}

impl TryFrom<CurveTable> for ThresholdCurve {
    type Error = Error;

    fn try_from(t: CurveTable) -> Result<Self> {
        let (ks, values) = t.points.into_iter().map(|[k, v]| (k, v)).unzip();
        ThresholdCurve::new(ks, values)
    }
}

impl From<ThresholdCurve> for CurveTable {
    fn from(c: ThresholdCurve) -> Self {
        CurveTable {
            points: c.ks.iter().zip(&c.values).map(|(&k, &v)| [k, v]).collect(),
        }
    }
}

impl ThresholdCurve {
    pub fn new(ks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if ks.is_empty() || ks.len() != values.len() {
            return Err(Error::Invalid("curve needs matching, non-empty k and value lists".into()));
        }
        if ks.iter().any(|&k| !(k > 0.0 && k <= 1.0)) {
            return Err(Error::Invalid("curve ratios must lie in (0,1]".into()));
        }
        if ks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("curve ratios must be strictly ascending".into()));
        }
        if values.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::Invalid("curve values must lie in [0,1]".into()));
        }
        Ok(Self { ks, values })
    }

    pub fn sample<F: FnMut(f64) -> f64>(ks: &[f64], mut f: F) -> Result<Self> {
        let values = ks.iter().map(|&k| f(k)).collect();
        Self::new(ks.to_vec(), values)
    }

    pub fn constant(ks: &[f64], value: f64) -> Result<Self> {
        Self::new(ks.to_vec(), vec![value; ks.len()])
    }

    pub fn ks(&self) -> &[f64] {
        &self.ks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.ks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ks.is_empty()
    }

    pub fn eval(&self, k: f64) -> f64 {
        if self.ks.len() == 1 {
            return self.values[0];
        }
        let (i, w) = locate(&self.ks, k);
        if w == 0.0 {
            return self.values[i];
        }
        if w == 1.0 {
            return self.values[i + 1];
        }
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }

    /// The first node pair `(k, k')`, `k < k'`, breaking either
    /// `psi(k) <= psi(k')` or `(k/k') psi(k') <= psi(k)` by more than `tol`.
    pub fn ratio_dependent_violation(&self, tol: f64) -> Option<(f64, f64, &'static str)> {
        let n = self.ks.len();
        for i in 0..n {
            for j in i + 1..n {
                let (k, kp) = (self.ks[i], self.ks[j]);
                let (p, pp) = (self.values[i], self.values[j]);
                if p > pp + tol {
                    return Some((k, kp, "threshold decreases in k"));
                }
                if k / kp * pp > p + tol {
                    return Some((k, kp, "threshold over ratio increases in k"));
                }
            }
        }
        None
    }

    pub fn is_nondecreasing(&self, tol: f64) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0] - tol)
    }

    /// Writes `k,<value_name>` CSV rows.
    pub fn write_csv<W: Write>(&self, out: W, value_name: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", value_name])?;
        for (k, v) in self.ks.iter().zip(&self.values) {
            w.write_record([crate::fmt::sig12(*k), crate::fmt::sig12(*v)])?;
        }
        w.flush()?;
        Ok(())
    }
}
