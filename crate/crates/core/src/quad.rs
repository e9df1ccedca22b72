//! Deterministic quadrature rules.
//!
//! Composite Simpson is the workhorse for smooth integrands. The adaptive
//! variant is used where an integrand has an endpoint singularity in a
//! derivative (e.g. `v^k` for small `k`), which defeats a fixed mesh.

/// Composite Simpson on `[a, b]` with `nodes` points. An even node count is
/// bumped to the next odd one.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, nodes: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let nodes = nodes.max(3) | 1;
    let panels = nodes - 1;
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let x = a + h * i as f64;
        acc += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    acc * h / 3.0
}

/// Composite Simpson over consecutive intervals delimited by `breaks`, with
/// roughly `nodes` points in total and at least three per interval.
pub fn simpson_piecewise<F: Fn(f64) -> f64>(f: F, breaks: &[f64], nodes: usize) -> f64 {
    if breaks.len() < 2 {
        return 0.0;
    }
    let span = breaks[breaks.len() - 1] - breaks[0];
    if span <= 0.0 {
        return 0.0;
    }
    breaks
        .windows(2)
        .map(|w| {
            let share = ((w[1] - w[0]) / span * nodes as f64).ceil() as usize;
            simpson(&f, w[0], w[1], share.max(3))
        })
        .sum()
}

/// Adaptive Simpson with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    // a first split keeps symmetric integrands from fooling the error estimate
    let left = adapt(&f, a, m, fa, f(0.5 * (a + m)), fm, tol * 0.5, 48);
    let right = adapt(&f, m, b, fm, f(0.5 * (m + b)), fb, tol * 0.5, 48);
    left + right
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adapt(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1)
        + adapt(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1)
}

/// Trapezoid rule on tabulated data.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Running trapezoid integral; `out[0] = 0`.
pub fn cumulative_trapezoid(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for (xs, ys) in x.windows(2).zip(y.windows(2)) {
        acc += 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]);
        out.push(acc);
    }
    out.truncate(x.len());
    out
}

/// Index `i` of the interval `[xs[i], xs[i+1]]` holding `x`, clamped to the
/// table, and the fractional position inside it.
pub(crate) fn locate(xs: &[f64], x: f64) -> (usize, f64) {
    let n = xs.len();
    debug_assert!(n >= 2);
    if x <= xs[0] {
        return (0, 0.0);
    }
    if x >= xs[n - 1] {
        return (n - 2, 1.0);
    }
    let i = xs.partition_point(|&t| t <= x) - 1;
    let i = i.min(n - 2);
    let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    (i, w)
}
