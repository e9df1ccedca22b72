//! One function per subcommand. Each prints a human-readable summary and
//! writes its machine-readable artifacts into the output directory.

use std::fs;
use std::path::PathBuf;

use leontief::fmt::sig12;
use leontief::mech::{GridMechanism, Mesh};
use leontief::solve::{certify, solve, CertifyOptions, Solution};
use leontief::verify::{check_characterization, check_direct, expected_revenue, virtual_surplus};
use leontief::virtual_value::{classify, ConditionGrid, ConditionVerdict, ZeroCurve};
use leontief::{Distribution, Error, Mechanism, Numerics, ThresholdCurve, VerificationReport};
use serde::Serialize;

use crate::config::{ConfigError, RunConfig};

/// Why a command stopped.
#[derive(Debug)]
pub enum Failure {
    /// Ran to completion with a negative verdict.
    Verdict(String),
    Config(ConfigError),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

/// Library errors about the distribution or mechanism are verdicts; the
/// rest are input problems.
fn lib_failure(e: Error) -> Failure {
    match e {
        Error::Precondition { .. } | Error::NoRoot { .. } | Error::NonUniqueRoot { .. } | Error::DegenerateDensity { .. } => {
            Failure::Verdict(e.to_string())
        }
        other => Failure::Config(ConfigError::new("input", other.to_string())),
    }
}

type Outcome = Result<String, Failure>;

struct Run<'a> {
    cfg: &'a RunConfig,
    num: Numerics,
    dist: Distribution,
    lines: Vec<String>,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self, Failure> {
        cfg.validate()?;
        let dist = cfg.distribution()?;
        fs::create_dir_all(&cfg.out)
            .map_err(|e| ConfigError::new("out", format!("cannot create {}: {e}", cfg.out.display())))?;
        let run = Self { cfg, num: cfg.effective_numerics(), dist, lines: Vec::new() };
        run.write("run.json", &json(cfg)?)?;
        Ok(run)
    }

    fn say(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }

    fn path(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let p = self.path(name);
        fs::write(&p, bytes).map_err(|e| ConfigError::new("out", format!("cannot write {}: {e}", p.display())).into())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        self.write(name, &json(value)?)?;
        self.say(format!("wrote {}", self.path(name).display()));
        Ok(())
    }

    fn write_csv(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> leontief::Result<()>) -> Result<(), Failure> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(lib_failure)?;
        self.write(name, &buf)?;
        self.say(format!("wrote {}", self.path(name).display()));
        Ok(())
    }

    fn mechanism(&self) -> Result<Option<Mechanism>, Failure> {
        let Some(path) = &self.cfg.mechanism else { return Ok(None) };
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError::new("mechanism", format!("cannot read {}: {e}", path.display())))?;
        Mechanism::from_json(&text)
            .map(Some)
            .map_err(|e| ConfigError::new("mechanism", format!("{}: {e}", path.display())).into())
    }

    fn finish(self, pass: bool, verdict: &str) -> Outcome {
        let text = self.lines.join("\n");
        if pass {
            Ok(text)
        } else {
            Err(Failure::Verdict(format!("{text}\n{verdict}")))
        }
    }
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| ConfigError::new("out", e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn verdict_line(v: &ConditionVerdict) -> String {
    if v.holds {
        return format!("{}: holds (margin {})", v.condition, sig12(v.margin));
    }
    let w = &v.witnesses[0];
    let mut at = format!("k = {}", sig12(w.k));
    if let Some(kp) = w.k_prime {
        at.push_str(&format!(", k' = {}", sig12(kp)));
    }
    if let Some(x) = w.v {
        at.push_str(&format!(", v = {}", sig12(x)));
    }
    format!("{}: fails ({} violations; first at {at}, magnitude {})", v.condition, v.violations, sig12(w.magnitude))
}

pub fn validate(cfg: &RunConfig) -> Outcome {
    let mut run = Run::new(cfg)?;
    let r = leontief::dist::validate(&run.dist, &run.num);
    run.say(format!("family: {}", r.family));
    run.say(format!("joint normalization error: {}", sig12(r.joint_normalization_error)));
    run.say(format!(
        "conditional normalization error: {} (k = {})",
        sig12(r.conditional_normalization_error),
        sig12(r.conditional_worst_k)
    ));
    run.say(format!("ratio marginal error: {}", sig12(r.ratio_marginal_error)));
    run.say(format!("value marginal error: {}", sig12(r.value_marginal_error)));
    run.say(format!("positivity failures: {}", r.positivity_failures.len()));
    run.say(format!("cdf failures: {}", r.cdf_failures));
    run.write_json("validation.json", &r)?;
    let pass = r.pass;
    run.say(format!("pass: {pass}"));
    run.finish(pass, "distribution failed validation")
}

fn write_zero_curve(run: &mut Run, curve: &ZeroCurve) -> Result<(), Failure> {
    run.write_csv("zero_curve.csv", |buf| curve.write_csv(buf))
}

pub fn conditions(cfg: &RunConfig) -> Outcome {
    let mut run = Run::new(cfg)?;
    let grid = ConditionGrid::for_distribution(&run.dist, &run.num);
    let c = classify(&run.dist, &grid, &run.num).map_err(lib_failure)?;
    run.say(verdict_line(&c.a));
    for v in [&c.b, &c.b_prime].into_iter().flatten() {
        run.say(verdict_line(v));
    }
    if !c.a.holds {
        run.say("B, B': not evaluated (zero curve needs A)");
    }
    run.write_json("conditions.json", &c)?;
    if let Some(z) = &c.zero_curve {
        write_zero_curve(&mut run, z)?;
    }
    let solvable = c.b_holds() || c.b_prime_holds() || run.dist.is_independent();
    run.finish(solvable, "no optimal mechanism is known for these verdicts")
}

fn psi_curve(sol: &Solution, num: &Numerics) -> leontief::Result<ThresholdCurve> {
    match &sol.mechanism {
        Mechanism::RatioDependent { psi } => Ok(psi.clone()),
        Mechanism::PostedPrice { price } => ThresholdCurve::constant(&num.k_grid(), *price),
        _ => unreachable!("solve returns threshold mechanisms"),
    }
}

fn solved(run: &Run) -> Result<Solution, Failure> {
    solve(&run.dist, &run.num).map_err(lib_failure)
}

pub fn solve_cmd(cfg: &RunConfig) -> Outcome {
    let mut run = Run::new(cfg)?;
    let sol = solved(&run)?;
    let psi = psi_curve(&sol, &run.num).map_err(lib_failure)?;
    run.say(format!("path: {}", serde_json::to_value(sol.path).unwrap().as_str().unwrap()));
    match &sol.mechanism {
        Mechanism::PostedPrice { price } => run.say(format!("posted price: {}", sig12(*price))),
        _ => {
            let (ks, vs) = (psi.ks(), psi.values());
            run.say(format!(
                "ratio-dependent price: psi({}) = {}, psi(1) = {}",
                sig12(ks[0]),
                sig12(vs[0]),
                sig12(vs[vs.len() - 1])
            ));
        }
    }
    if let Some(s) = &sol.price_search {
        run.say(format!("posted-price revenue: {}", sig12(s.revenue)));
    }
    let mech = sol.mechanism.to_json().map_err(lib_failure)?;
    run.write("mechanism.json", format!("{mech}\n").as_bytes())?;
    run.say(format!("wrote {}", run.path("mechanism.json").display()));
    run.write_json("solution.json", &sol)?;
    run.write_csv("psi.csv", |buf| psi.write_csv(buf, "psi"))?;
    let mesh = Mesh::uniform(cfg.grid, cfg.grid, cfg.k_floor).map_err(lib_failure)?;
    run.write_csv("mechanism_grid.csv", |buf| sol.mechanism.write_grid_csv(&mesh, buf))?;
    if let Some(z) = sol.zero_curve() {
        write_zero_curve(&mut run, z)?;
    }
    run.finish(true, "")
}

#[derive(Serialize)]
struct VerifyArtifact<'a> {
    mechanism: &'a str,
    mesh: MeshSpec,
    direct: &'a VerificationReport,
    characterization: Option<&'a VerificationReport>,
    characterization_note: Option<&'a str>,
    payment_warnings: usize,
    pass: bool,
}

#[derive(Serialize)]
struct MeshSpec {
    v_nodes: usize,
    k_nodes: usize,
}

fn required_mechanism(run: &Run) -> Result<Mechanism, Failure> {
    run.mechanism()?.ok_or_else(|| ConfigError::new("mechanism", "no mechanism file given").into())
}

pub fn verify(cfg: &RunConfig) -> Outcome {
    let mut run = Run::new(cfg)?;
    let m = required_mechanism(&run)?;
    let mesh = match m.mesh() {
        Some(mesh) => mesh.clone(),
        None => Mesh::uniform(cfg.grid, cfg.grid, cfg.k_floor).map_err(lib_failure)?,
    };
    let direct = check_direct(&m, &mesh, cfg.tol);
    let (chr, note) = match &m {
        Mechanism::Grid(g) => (Some(check_characterization(g, cfg.tol)), None),
        other => match GridMechanism::sample(other, &mesh) {
            Ok(g) => (Some(check_characterization(&g, cfg.tol)), None),
            Err(_) => (None, Some("wasteful allocation; characterization applies to its reduction")),
        },
    };
    let warnings = m.payment_warnings();
    run.say(format!("mechanism: {} on a {} x {} mesh", m.kind(), mesh.nv(), mesh.nk()));
    run.say("direct checks:".to_string());
    run.say(direct.table().trim_end().to_string());
    if let Some(c) = &chr {
        run.say("characterization:".to_string());
        run.say(c.table().trim_end().to_string());
    }
    if let Some(n) = note {
        run.say(format!("characterization skipped: {n}"));
    }
    if !warnings.is_empty() {
        run.say(format!("warning: {} payments exceed 1 in absolute value", warnings.len()));
    }
    let pass = direct.pass && chr.as_ref().is_none_or(|c| c.pass);
    let artifact = VerifyArtifact {
        mechanism: m.kind(),
        mesh: MeshSpec { v_nodes: mesh.nv(), k_nodes: mesh.nk() },
        direct: &direct,
        characterization: chr.as_ref(),
        characterization_note: note,
        payment_warnings: warnings.len(),
        pass,
    };
    run.write_json("verify.json", &artifact)?;
    run.write_csv("verify.csv", |buf| {
        direct.write_csv(&mut *buf, true)?;
        if let Some(c) = &chr {
            c.write_csv(&mut *buf, false)?;
        }
        Ok(())
    })?;
    run.say(format!("pass: {pass}"));
    run.finish(pass, "mechanism failed verification")
}

#[derive(Serialize)]
struct RevenueArtifact<'a> {
    mechanism: &'a str,
    expected_revenue: f64,
    virtual_surplus: f64,
    difference: f64,
}

pub fn revenue(cfg: &RunConfig) -> Outcome {
    let mut run = Run::new(cfg)?;
    let m = match run.mechanism()? {
        Some(m) => m,
        None => solved(&run)?.mechanism,
    };
    let r = expected_revenue(&m, &run.dist, &run.num);
    let s = virtual_surplus(&m, &run.dist, &run.num);
    run.say(format!("mechanism: {}", m.kind()));
    run.say(format!("expected revenue: {}", sig12(r)));
    run.say(format!("virtual surplus: {}", sig12(s)));
    run.say(format!("difference: {}", sig12(r - s)));
    run.write_json("revenue.json", &RevenueArtifact { mechanism: m.kind(), expected_revenue: r, virtual_surplus: s, difference: r - s })?;
    run.finish(true, "")
}

pub fn certify_cmd(cfg: &RunConfig) -> Outcome {
    let mut run = Run::new(cfg)?;
    let sol = solved(&run)?;
    let o = &cfg.oracle;
    let opts = CertifyOptions { k_nodes: o.k_nodes, rho_nodes: o.rho_nodes, bound_tol: o.bound_tol, oracle_tol: o.oracle_tol };
    let c = certify(&run.dist, &sol.mechanism, &opts, &run.num).map_err(lib_failure)?;
    run.say(format!("candidate: {}", sol.mechanism.kind()));
    run.say(format!("candidate revenue: {}", sig12(c.candidate_revenue)));
    run.say(format!("pointwise bound: {}", sig12(c.pointwise_bound)));
    run.say(format!("oracle best ({} x {}): {}", o.k_nodes, o.rho_nodes, sig12(c.oracle_best)));
    run.say(format!("bound - candidate: {}", sig12(c.gaps.bound_minus_candidate)));
    run.say(format!("oracle - candidate: {}", sig12(c.gaps.oracle_minus_candidate)));
    run.say(format!("attains bound: {}", c.attains_bound));
    run.write_json("certificate.json", &c)?;
    let pass = c.pass;
    run.say(format!("pass: {pass}"));
    run.finish(pass, "certificate failed")
}

pub fn sweep(cfg: &RunConfig) -> Outcome {
    let mut run = Run::new(cfg)?;
    let ks = run.num.k_grid();
    let z = ZeroCurve::compute(&run.dist, &ks, &run.num).map_err(lib_failure)?;
    write_zero_curve(&mut run, &z)?;
    let sol = solved(&run)?;
    let psi = psi_curve(&sol, &run.num).map_err(lib_failure)?;
    run.write_csv("psi.csv", |buf| psi.write_csv(buf, "psi"))?;
    run.say(format!("{} ratios from {} to 1", ks.len(), sig12(ks[0])));
    run.finish(true, "")
}
