use serde::{Deserialize, Serialize};

use super::{
    average, lie_transform, linear_form, periodic_step, LieGenerator, PeriodicStepRecord,
    StepOptions, ThresholdMode, DEFAULT_LIE_ORDER,
};
use crate::diophantine::{delta_star, periodic_approximations, ApproxOptions, ExactFrequency};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trigpoly::{Caps, NormMethod, TrigTaylorPoly};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QChoice {
    Fixed(f64),
    /// `Q = Delta*(c / eps)` with `eps = |f|_{C^k}`.
    Auto { c: f64 },
}

/// How the per-step smallness parameter `nu_j` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NuRule {
    /// `nu_j = max(|s_j|, |u_j|)`, measured.
    Measured,
    /// `nu_j = c / (T_j Q)`.
    Scale { c: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalFormOptions {
    pub q: QChoice,
    /// Smallest admissible `Q`.
    pub c1: f64,
    pub order: usize,
    /// Truncation caps; derived from `f` when absent.
    pub caps: Option<Caps>,
    pub theta_thresh: f64,
    pub mode: ThresholdMode,
    pub nu_rule: NuRule,
    pub approx: ApproxOptions,
    pub norm: NormMethod,
}

impl Default for NormalFormOptions {
    fn default() -> Self {
        NormalFormOptions {
            q: QChoice::Auto { c: 1.0 },
            c1: 1.0,
            order: DEFAULT_LIE_ORDER,
            caps: None,
            theta_thresh: 0.1,
            mode: ThresholdMode::Enforce,
            nu_rule: NuRule::Measured,
            approx: ApproxOptions::default(),
            norm: NormMethod::default(),
        }
    }
}

/// One `(kappa', j)` averaging step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Outer index, `1..=kappa`.
    pub kappa: usize,
    /// Inner index, `1..=d`.
    pub j: usize,
    pub lift: Vec<i64>,
    pub period: String,
    /// Radius the norms of this step are measured on.
    pub radius: f64,
    pub regularity: u32,
    #[serde(flatten)]
    pub step: PeriodicStepRecord,
    /// `|f^j|` after composing the previous remainder with this step.
    pub remainder_norm: f64,
    /// Mass dropped by caps in this step, both Lie series included.
    pub truncation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRecord {
    pub epsilon: f64,
    pub q: f64,
    pub q_auto: bool,
    pub c: Option<f64>,
    pub c1: f64,
    /// `Q >= c1`.
    pub q_admissible: bool,
    /// `d`, the number of effective frequencies.
    pub d: usize,
    /// Width lost per step, `R / (2 d (k - 1))`.
    pub delta: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FinalNorms {
    pub radius: f64,
    /// `|f_kappa|_{C^{k-kappa}}`, grid and coefficient bound.
    pub remainder: f64,
    pub remainder_bound: f64,
    /// `|g_kappa|_{C^{k-kappa+1}}`.
    pub resonant: f64,
    pub truncation: f64,
    /// `|Phi_kappa - Id|_{C^0}`, filled by [`super::map_distance`] on request.
    pub map_distance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormLedger {
    pub k: u32,
    pub kappa: u32,
    pub order: usize,
    pub caps: Caps,
    pub thresholds: ThresholdRecord,
    pub steps: Vec<StepRecord>,
    pub final_norms: FinalNorms,
}

impl NormLedger {
    pub fn violations(&self) -> usize {
        self.steps.iter().map(|s| s.step.violations.len()).sum()
    }
}

/// `l_omega + [f]_omega + g_kappa + f_kappa`, together with the generators of
/// `Phi_kappa = Theta_1 o ... o Theta_{kappa d}`.
#[derive(Clone, Debug)]
pub struct NormalFormResult<S> {
    pub omega: ExactFrequency,
    pub generators: Vec<LieGenerator<S>>,
    pub resonant: TrigTaylorPoly<S>,
    pub remainder: TrigTaylorPoly<S>,
    pub avg_f: TrigTaylorPoly<S>,
    pub ledger: NormLedger,
}

impl<S: Scalar> NormalFormResult<S> {
    /// `l_omega + [f]_omega + g_kappa`.
    pub fn truncated(&self) -> Result<TrigTaylorPoly<S>> {
        linear_form(&self.avg_f, self.omega.values())
            .add(&self.avg_f)?
            .add(&self.resonant)
    }

    /// The full transformed Hamiltonian `H o Phi_kappa`.
    pub fn hamiltonian(&self) -> Result<TrigTaylorPoly<S>> {
        self.truncated()?.add(&self.remainder)
    }

    /// Radius of the domain the final estimates refer to.
    pub fn final_radius(&self) -> f64 {
        self.ledger.final_norms.radius
    }
}

fn default_caps<S: Scalar>(f: &TrigTaylorPoly<S>) -> Caps {
    let ext = f.mode_extent().max(1);
    Caps::new((2 * ext).max(ext + 2), f.degree().max(1) + 1)
}

/// Resonant normal form of `l_omega + f` to order `kappa` for `f` of class
/// `C^k`, by `kappa` rounds of `d` periodic averaging steps.
pub fn normal_form<S: Scalar>(
    omega: &ExactFrequency,
    f: &TrigTaylorPoly<S>,
    k: u32,
    kappa: u32,
    opts: &NormalFormOptions,
) -> Result<NormalFormResult<S>> {
    if f.n() != omega.n() {
        return Err(Error::rejected(format!(
            "frequency has {} components but the Hamiltonian has n = {}",
            omega.n(),
            f.n()
        )));
    }
    if k == 0 || kappa >= k {
        return Err(Error::rejected(format!(
            "need 0 <= kappa <= k - 1, got k = {k}, kappa = {kappa}"
        )));
    }
    let caps = opts.caps.unwrap_or_else(|| default_caps(f));
    let f = f.clone().with_caps(caps);
    let radius = f.radius().to_f();
    let eps = f.ck_norm(k, opts.norm).to_f();
    let (q, c) = match opts.q {
        QChoice::Fixed(q) => (q, None),
        QChoice::Auto { c } => {
            if eps == 0.0 {
                return Err(Error::rejected("automatic Q needs a nonzero perturbation"));
            }
            (delta_star(omega, c / eps)?, Some(c))
        }
    };
    if q < 1.0 {
        return Err(Error::rejected(format!("Q = {q} must be at least 1")));
    }
    let span = crate::diophantine::rational_span(omega)?;
    let d = span.dim;
    let delta = radius / (2.0 * d as f64 * (k.max(2) - 1) as f64);
    let thresholds = ThresholdRecord {
        epsilon: eps,
        q,
        q_auto: c.is_some(),
        c,
        c1: opts.c1,
        q_admissible: q >= opts.c1,
        d,
        delta,
    };

    let avg_f = average(&f, omega);
    let mut fk = f.sub(&avg_f)?;
    let mut g = TrigTaylorPoly::zero(f.n(), f.radius(), caps);
    let mut generators = Vec::new();
    let mut steps = Vec::new();

    if kappa > 0 {
        let approx = periodic_approximations(omega, q, &opts.approx)?;
        let vs = approx.vectors;
        let l_omega = linear_form(&f, omega.values());
        for kk in 0..kappa as usize {
            let i = k - kk as u32;
            let eps_k = fk.ck_norm_on(i, opts.norm, f.radius()).to_f();
            let mut u = fk.clone();
            let mut fj = TrigTaylorPoly::zero(f.n(), f.radius(), caps);
            for (jj, v) in vs.iter().enumerate() {
                let r_j = radius - (kk * d + jj + 1) as f64 * delta;
                let rs = S::of(r_j);
                let s = l_omega
                    .sub(&linear_form(&f, &v.values()))?
                    .add(&avg_f)?
                    .add(&g)?;
                let nu = match opts.nu_rule {
                    NuRule::Measured => s
                        .ck_norm_on(i, opts.norm, rs)
                        .max(u.ck_norm_on(i, opts.norm, rs))
                        .to_f(),
                    NuRule::Scale { c } => c / (v.period_f64() * q),
                };
                let step_opts = StepOptions {
                    theta_thresh: opts.theta_thresh,
                    mode: opts.mode,
                    order: opts.order,
                    regularity: i,
                    radius: r_j,
                    norm: opts.norm,
                };
                let step = periodic_step(v, &s, &u, eps_k, nu, &step_opts).map_err(|e| {
                    with_context(e, kk + 1, jj + 1)
                })?;
                let (moved, lie) = lie_transform(&fj, &step.generator)
                    .map_err(|e| with_context(e, kk + 1, jj + 1))?;
                fj = step.u_prime.add(&moved)?;
                steps.push(StepRecord {
                    kappa: kk + 1,
                    j: jj + 1,
                    lift: v.lift().to_vec(),
                    period: v.period().to_string(),
                    radius: r_j,
                    regularity: i,
                    remainder_norm: fj.ck_norm_on(i - 1, opts.norm, rs).to_f(),
                    truncation: step.record.lie.dropped + lie.dropped,
                    step: step.record,
                });
                u = step.averaged;
                generators.push(step.generator);
            }
            // [f_kappa]_{v_1..v_d} must be [f_kappa]_omega when the lifts are a basis.
            if let Some((bad, _)) = u.modes().find(|(k, _)| !omega.is_resonant_i32(k)) {
                return Err(Error::Numerical(format!(
                    "successive averages kept the non-resonant mode {bad:?}"
                )));
            }
            g = g.add(&u)?;
            fk = fj;
        }
    }

    let kappa_us = kappa as usize;
    let r_final = radius - (kappa_us * d) as f64 * delta;
    let rf = S::of(r_final);
    let reg = k - kappa;
    let final_norms = FinalNorms {
        radius: r_final,
        remainder: fk.ck_norm_on(reg, opts.norm, rf).to_f(),
        remainder_bound: fk.ck_norm_on(reg, NormMethod::UpperBound, rf).to_f(),
        resonant: g.ck_norm_on(reg + 1, opts.norm, rf).to_f(),
        truncation: fk.truncation().to_f(),
        map_distance: None,
    };
    Ok(NormalFormResult {
        omega: omega.clone(),
        generators,
        resonant: g,
        remainder: fk,
        avg_f,
        ledger: NormLedger {
            k,
            kappa,
            order: opts.order,
            caps,
            thresholds,
            steps,
            final_norms,
        },
    })
}

fn with_context(e: Error, kappa: usize, j: usize) -> Error {
    match e {
        Error::Threshold {
            inequality,
            lhs,
            rhs,
        } => Error::Threshold {
            inequality: format!("{inequality} at step (kappa = {kappa}, j = {j})"),
            lhs,
            rhs,
        },
        other => other,
    }
}
