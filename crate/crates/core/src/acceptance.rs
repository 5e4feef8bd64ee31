//! The acceptance suite: ten criteria, each made of named checks.
//!
//! Checks listed in [`KNOWN_RED`] are measured and reported like the
//! others but do not fail the suite.

use std::time::Instant;

use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audit::{run_audit, AuditOptions};
use crate::diophantine::{oracle, periodic_approximations, psi_table, ApproxOptions, ExactFrequency, PeriodicVector};
use crate::dynamics::{drift_demo, drift_report, integrate, DemoFamily, IntegrateOptions, StabilityFamily};
use crate::error::{Error, Result};
use crate::normalform::{
    average, linear_form, normal_form, sample_points, solve_homological, symplecticity_defect, map_distance,
    NormalFormOptions, QChoice, ThresholdMode,
};
use crate::splitting::{mu_sweep, thm_split_experiment, ManifoldOptions, ResonantModel, ScalingOptions};
use crate::stats::loglog_fit;
use crate::trigpoly::{random_poly, Caps};
use crate::TrigPoly;

/// Checks that are expected to fail; see the project notes for why.
pub const KNOWN_RED: &[&str] = &["5a", "5b", "9d"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(id: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            id: id.to_string(),
            passed,
            detail: detail.into(),
        }
    }

    pub fn known_red(&self) -> bool {
        KNOWN_RED.contains(&self.id.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub number: u32,
    pub title: String,
    pub checks: Vec<Check>,
    /// Set when the experiment itself failed to run.
    pub error: Option<String>,
    pub seconds: f64,
    /// Runtime budget for an optimized build.
    pub budget_seconds: f64,
}

/// `Pass`: every check passed. `KnownRed`: only known-red checks failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    KnownRed,
    Fail,
}

impl CriterionOutcome {
    pub fn verdict(&self) -> Verdict {
        if self.error.is_some() {
            return Verdict::Fail;
        }
        let failed: Vec<&Check> = self.checks.iter().filter(|c| !c.passed).collect();
        if failed.is_empty() {
            Verdict::Pass
        } else if failed.iter().all(|c| c.known_red()) {
            Verdict::KnownRed
        } else {
            Verdict::Fail
        }
    }

    /// One summary line, e.g. `criterion 3 PASS (1.2 s): ...`.
    pub fn line(&self) -> String {
        let status = match self.verdict() {
            Verdict::Pass => "PASS".to_string(),
            Verdict::Fail => "FAIL".to_string(),
            Verdict::KnownRed => {
                let ids: Vec<&str> = self
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.id.as_str())
                    .collect();
                format!("FAIL (known: {})", ids.join(", "))
            }
        };
        let mut parts: Vec<String> = self
            .checks
            .iter()
            .map(|c| format!("[{} {}] {}", c.id, if c.passed { "ok" } else { "red" }, c.detail))
            .collect();
        if let Some(e) = &self.error {
            parts.push(format!("error: {e}"));
        }
        format!(
            "criterion {:>2} {} ({:.1} s): {}: {}",
            self.number,
            status,
            self.seconds,
            self.title,
            parts.join("; ")
        )
    }
}

pub const TITLES: [&str; 10] = [
    "homological exactness",
    "psi against the enumeration oracle",
    "periodic approximation certificates",
    "normal-form structure",
    "remainder scaling",
    "symplecticity",
    "stability time shape",
    "drift-rate demonstration",
    "splitting",
    "inequality audit",
];

const BUDGETS: [f64; 10] = [10.0, 60.0, 60.0, 120.0, 300.0, 60.0, 600.0, 300.0, 900.0, 120.0];

/// Runs criterion `number` (1 to 10) on the default corpora.
pub fn run_criterion(number: u32) -> Result<CriterionOutcome> {
    run_criterion_seeded(number, 0)
}

/// Runs criterion `number`; `seed` shifts the seeds of the randomized
/// corpora (0 gives the defaults).
pub fn run_criterion_seeded(number: u32, seed: u64) -> Result<CriterionOutcome> {
    let run: fn(u64) -> Result<Vec<Check>> = match number {
        1 => homological_exactness,
        2 => oracle_equivalence,
        3 => approximation_certificates,
        4 => normal_form_structure,
        5 => remainder_scaling,
        6 => symplecticity,
        7 => stability_shape,
        8 => drift_rate,
        9 => splitting,
        10 => inequality_audit,
        _ => return Err(Error::rejected(format!("no acceptance criterion {number}"))),
    };
    let start = Instant::now();
    let (checks, error) = match run(seed) {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    Ok(CriterionOutcome {
        number,
        title: TITLES[number as usize - 1].to_string(),
        checks,
        error,
        seconds: start.elapsed().as_secs_f64(),
        budget_seconds: BUDGETS[number as usize - 1],
    })
}

fn homological_exactness(seed: u64) -> Result<Vec<Check>> {
    let v = PeriodicVector::from_rational(&[Ratio::from_integer(1), Ratio::new(3, 2)])?;
    let mut rng = ChaCha8Rng::seed_from_u64(1 + seed);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let u: TrigPoly = random_poly(&mut rng, 2, 1.0, Caps::new(8, 2), 12, 1.0);
        let gen = solve_homological(&u, &v);
        let residual = gen
            .chi
            .poisson_bracket(&linear_form(&u, &v.values()))?
            .sub(&u.sub(&average(&u, &v))?)?;
        worst = worst.max(residual.grid_sup(16, 1.0) / u.grid_sup(16, 1.0));
    }
    Ok(vec![Check::new(
        "1",
        worst < 1e-12,
        format!("max |{{chi, l_v}} - (u - [u]_v)| / |u| = {worst:.2e} (< 1e-12)"),
    )])
}

/// The ten frequencies the diophantine checks run on.
pub const FREQUENCY_CORPUS: [&str; 10] = [
    "1, phi",
    "1/2, 1/3",
    "1, phi, 0",
    "2, 1",
    "1, sqrt2",
    "1, cbrt2, cbrt4",
    "1, sqrt2, sqrt3",
    "1, phi, 1 + phi",
    "1/3, 1/5, 1/7",
    "sqrt2, sqrt2, 1",
];

fn oracle_equivalence(_seed: u64) -> Result<Vec<Check>> {
    let mut mismatches = Vec::new();
    let mut compared = 0;
    for spec in FREQUENCY_CORPUS {
        let w: ExactFrequency = spec.parse()?;
        let table = psi_table(&w, 50)?;
        let naive = oracle::psi_naive_all(&w, 50);
        for q in table.q_min..=50 {
            compared += 1;
            let fast = table.lookup(q as f64)?;
            match &naive[q as usize] {
                Some(slow) if slow.0 == fast.0 && slow.1 == fast.1 => {}
                other => mismatches.push(format!("{spec} at Q = {q}: {fast:?} vs {other:?}")),
            }
        }
    }
    Ok(vec![Check::new(
        "2",
        mismatches.is_empty(),
        format!(
            "{compared} (frequency, Q) pairs, {} mismatches{}",
            mismatches.len(),
            mismatches.first().map(|m| format!(", first {m}")).unwrap_or_default()
        ),
    )])
}

/// Exact determinant by fraction-free elimination.
fn integer_det(m: &[Vec<i64>]) -> i128 {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

fn approximation_certificates(_seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (tag, spec) in [("a", "1, phi"), ("b", "1, cbrt2, cbrt4")] {
        let w: ExactFrequency = spec.parse()?;
        let mut ok = true;
        let mut worst_c = 0.0f64;
        let mut worst_t = 0.0f64;
        for q in [5.0, 13.0, 34.0] {
            let r = periodic_approximations(&w, q, &ApproxOptions::default())?;
            let psi = r.psi.ok_or_else(|| Error::Numerical(format!("no psi for {spec}")))?;
            ok &= integer_det(&r.coords).abs() == 1 && r.det.abs() == 1;
            ok &= r.vectors.len() == r.span.dim;
            for (v, c) in r.vectors.iter().zip(&r.constants) {
                let dist = w
                    .values()
                    .iter()
                    .zip(v.values())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                let measured = dist * v.period_f64() * q;
                ok &= (measured - c).abs() <= 1e-9 * measured.max(1.0);
                worst_c = worst_c.max(measured);
                worst_t = worst_t.max(v.period_f64() / psi);
            }
        }
        ok &= worst_c <= 10.0 && worst_t <= 4.0;
        checks.push(Check::new(
            &format!("3{tag}"),
            ok,
            format!("{spec}: unimodular lifts, max C_j = {worst_c:.3} (<= 10), max T_j / psi = {worst_t:.3} (<= 4)"),
        ));
    }
    Ok(checks)
}

fn normal_form_structure(seed: u64) -> Result<Vec<Check>> {
    let record = |q: f64| NormalFormOptions {
        q: QChoice::Fixed(q),
        mode: ThresholdMode::Record,
        ..Default::default()
    };
    let freqs: [ExactFrequency; 3] = [
        ExactFrequency::golden(),
        "1, sqrt2, 1 + sqrt2".parse()?,
        ExactFrequency::integer(&[1, 2])?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(4 + seed);
    let (mut g1_zero, mut support_ok, mut runs) = (true, true, 0);
    for w in &freqs {
        let f: TrigPoly = random_poly(&mut rng, w.n(), 1.0, Caps::new(2, 1), 8, 1e-5);
        for kappa in [1, 2] {
            let r = normal_form(w, &f, 3, kappa, &record(5.0))?;
            runs += 1;
            if kappa == 1 {
                g1_zero &= r.resonant.is_zero();
            }
            support_ok &= r
                .resonant
                .modes()
                .chain(r.avg_f.modes())
                .all(|(k, _)| w.is_resonant_i32(k));
        }
    }
    // conservation of the projected actions under the truncated normal form
    let w = ExactFrequency::integer(&[1, 2])?;
    let c = Caps::new(4, 1);
    let f = TrigPoly::sin_mode(2, 1.0, c, &[1, 0], &[1, 0], 1e-3)
        .add(&TrigPoly::cos_mode(2, 1.0, c, &[2, -1], &[0, 1], 1e-3))?;
    let r = normal_form(&w, &f, 3, 1, &record(3.0))?;
    let n = r.truncated()?;
    let traj = integrate(&n, &[0.1, 0.3, 0.1, -0.1], 1e-3, 1e3, &IntegrateOptions {
        record_every: 1000,
        ..Default::default()
    })?;
    let drift = drift_report(&traj, &w, 1.0)?.max_drift;
    Ok(vec![
        Check::new("4a", g1_zero, format!("g_1 = 0 in all {} kappa = 1 runs", runs / 2)),
        Check::new("4b", support_ok, format!("support of g and [f] resonant in {runs} runs")),
        Check::new("4c", drift < 1e-10, format!("max |Pi_F (I - I_0)| = {drift:.2e} over t = 1e3 (< 1e-10)")),
    ])
}

fn remainder_scaling(_seed: u64) -> Result<Vec<Check>> {
    let w = ExactFrequency::golden();
    let c = Caps::new(4, 1);
    let eps = 1e-4;
    let f = TrigPoly::sin_mode(2, 1.0, c, &[1, 0], &[0, 0], eps)
        .add(&TrigPoly::cos_mode(2, 1.0, c, &[1, -1], &[0, 0], eps))?;
    let qs = [4.0, 8.0, 16.0, 32.0];
    let mut checks = Vec::new();
    let mut worst_map = 0.0f64;
    for (tag, kappa) in [("5a", 1u32), ("5b", 2)] {
        let mut norms = Vec::new();
        for q in qs {
            let opts = NormalFormOptions {
                q: QChoice::Fixed(q),
                mode: ThresholdMode::Record,
                caps: Some(Caps::new(8, 2)),
                ..Default::default()
            };
            let r = normal_form(&w, &f, 4, kappa, &opts)?;
            norms.push(r.ledger.final_norms.remainder);
            worst_map = worst_map.max(q * map_distance(&r, 0)?);
        }
        let slope = loglog_fit(&qs, &norms).slope;
        checks.push(Check::new(
            tag,
            (slope + kappa as f64).abs() <= 0.5,
            format!(
                "kappa = {kappa}: slope of log |f_kappa| vs log Q = {slope:.2} (want {} +- 0.5), norms {}",
                -(kappa as f64),
                norms.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" ")
            ),
        ));
    }
    checks.push(Check::new(
        "5c",
        worst_map <= 1.0,
        format!("max Q |Phi_kappa - Id| = {worst_map:.2e} (<= 1)"),
    ));
    Ok(checks)
}

fn symplecticity(seed: u64) -> Result<Vec<Check>> {
    let w = ExactFrequency::golden();
    let mut rng = ChaCha8Rng::seed_from_u64(11 + seed);
    let f: TrigPoly = random_poly(&mut rng, 2, 1.0, Caps::new(2, 1), 6, 1e-6);
    let opts = NormalFormOptions {
        q: QChoice::Fixed(13.0),
        caps: Some(Caps::new(6, 2)),
        ..Default::default()
    };
    let r = normal_form(&w, &f, 2, 1, &opts)?;
    let pts: Vec<Vec<f64>> = sample_points(2, r.final_radius(), 4).into_iter().step_by(2).take(100).collect();
    let defect = symplecticity_defect(&r.generators, &pts, 1e-5)?;
    Ok(vec![Check::new(
        "6",
        defect <= 1e-6 && pts.len() == 100,
        format!(
            "max |G^T J G - J| = {defect:.2e} at {} points, Lie order {}, {} threshold violations (<= 1e-6)",
            pts.len(),
            opts.order,
            r.ledger.violations()
        ),
    )])
}

/// Sweep of the stability experiment used by criterion 7.
pub const STABILITY_EPS: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];

fn stability_shape(_seed: u64) -> Result<Vec<Check>> {
    let w = ExactFrequency::golden();
    let k = 2;
    let eps_min = STABILITY_EPS[STABILITY_EPS.len() - 1];
    // half the saturation drift of the smallest eps, so every row exits
    let delta = 0.5 * DemoFamily::new(&w, k, eps_min, 1.0)?.predicted_max_drift();
    let rep = crate::dynamics::stability_experiment(
        &w,
        &StabilityFamily::Demo { radius: 1.0 },
        &STABILITY_EPS,
        k,
        delta,
        1e6,
    )?;
    let window = rep.rows.iter().map(|r| r.t_obs / r.t_pred).fold(f64::INFINITY, f64::min);
    let slope = rep.fit.map(|f| f.slope).unwrap_or(f64::NAN);
    Ok(vec![
        Check::new(
            "7a",
            window >= 0.1,
            format!("min T_obs / T_pred = {window:.3} (>= 0.1), delta = {delta:.2e}, k = {k}"),
        ),
        Check::new(
            "7b",
            (slope - rep.predicted_exponent).abs() <= 0.5,
            format!(
                "T_obs ~ eps^{slope:.3}, predicted {:.3} with tau = {:.3} (+- 0.5)",
                rep.predicted_exponent, rep.tau
            ),
        ),
    ])
}

fn drift_rate(_seed: u64) -> Result<Vec<Check>> {
    let w = ExactFrequency::golden();
    let mut checks = Vec::new();
    for k in [2, 3] {
        for eps in [1e-3, 1e-4] {
            let r = drift_demo(&w, k, eps)?;
            checks.push(Check::new(
                &format!("8{}", checks.len() + 1),
                r.ratio > 1.0 / 3.0 && r.ratio < 3.0,
                format!("k = {k}, eps = {eps:.0e}: measured / predicted speed = {:.3} (1/3 to 3)", r.ratio),
            ));
        }
    }
    Ok(checks)
}

/// Manifold resolution used by the splitting checks.
pub fn splitting_options() -> ManifoldOptions {
    ManifoldOptions {
        fibers: 48,
        phases: 32,
        fourier_degree: 8,
        cheb_order: 12,
        time_step: 4e-3,
        ..ManifoldOptions::default()
    }
}

fn splitting(_seed: u64) -> Result<Vec<Check>> {
    let opts = splitting_options();
    let base = ResonantModel::pendulum("1/4".parse()?, 1.0, 0.01, 0.0);
    let mus = [1e-5, 1e-4, 1e-3];
    let sweep = mu_sweep(&base, &mus, &opts)?;
    let unperturbed = sweep
        .unperturbed
        .matrix
        .iter()
        .flatten()
        .chain(&sweep.unperturbed.angles)
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let slope = sweep.tangential_fit.slope;
    let golden = ResonantModel::pendulum("(1+sqrt5)/2".parse()?, 1.0, 0.0, 0.0);
    let scaling = thm_split_experiment(
        &golden,
        &[0.05, 0.01, 0.002],
        &ScalingOptions {
            manifold: opts,
            ..ScalingOptions::default()
        },
    )?;
    let rows: Vec<String> = scaling
        .rows
        .iter()
        .map(|r| format!("eps {:.0e}: {:.2e} vs {:.2e}", r.eps, r.angle, r.bound))
        .collect();
    Ok(vec![
        Check::new("9a", unperturbed < 1e-8, format!("mu = 0: max |a_i|, |M_ij| = {unperturbed:.2e} (< 1e-8)")),
        Check::new(
            "9b",
            (slope - 1.0).abs() <= 0.2,
            format!("tangential angle ~ mu^{slope:.3} over mu in [1e-5, 1e-3] (1 +- 0.2)"),
        ),
        Check::new(
            "9c",
            sweep.constant_spread <= 2.0,
            format!("|tangential| / mu spread {:.4} over the sweep (<= 2)", sweep.constant_spread),
        ),
        Check::new(
            "9d",
            (scaling.fit.slope - 1.0).abs() <= 0.3,
            format!(
                "angle ~ bound^{:.2} with mu = lambda^(k-2), k = 3 (1 +- 0.3); {}",
                scaling.fit.slope,
                rows.join(", ")
            ),
        ),
    ])
}

fn inequality_audit(seed: u64) -> Result<Vec<Check>> {
    let defaults = AuditOptions::default();
    let report = run_audit(&AuditOptions {
        seed: defaults.seed + seed,
        ..defaults
    })?;
    let worst = report
        .rows
        .iter()
        .max_by(|a, b| a.constant.total_cmp(&b.constant))
        .map(|r| format!(" ({}, k = {})", r.inequality, r.order))
        .unwrap_or_default();
    Ok(vec![Check::new(
        "10",
        report.all_finite() && report.max_constant <= 1e4,
        format!("{} inequalities, largest constant {:.3e}{worst} (<= 1e4)", report.rows.len(), report.max_constant),
    )])
}
