//! Averaging, the homological equation, Lie transforms, and the resonant
//! normal-form driver built from successive periodic averaging steps.

mod driver;
mod localize;
mod maps;

#[cfg(test)]
mod tests;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

pub use driver::{
    normal_form, FinalNorms, NormLedger, NormalFormOptions, NormalFormResult, NuRule, QChoice,
    StepRecord, ThresholdRecord,
};
pub use localize::{localize, Localized, LocalizeRecord};
pub use maps::{
    apply_generators, map_distance, map_distance_report, sample_points, symplecticity_defect,
    MapDistanceReport,
};

use crate::diophantine::{ExactFrequency, PeriodicVector};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trigpoly::{Caps, NormMethod, TrigTaylorPoly};

/// Anything that can decide exactly whether a Fourier mode is resonant.
pub trait Resonance {
    fn is_resonant(&self, k: &[i32]) -> bool;
}

impl Resonance for PeriodicVector {
    fn is_resonant(&self, k: &[i32]) -> bool {
        PeriodicVector::is_resonant(self, k)
    }
}

impl Resonance for ExactFrequency {
    fn is_resonant(&self, k: &[i32]) -> bool {
        self.is_resonant_i32(k)
    }
}

/// `[f]_w`: keeps exactly the resonant modes.
pub fn average<S: Scalar, R: Resonance + ?Sized>(f: &TrigTaylorPoly<S>, direction: &R) -> TrigTaylorPoly<S> {
    f.filter_modes(|k| direction.is_resonant(k))
}

/// `[...[f]_{v_1}...]_{v_m}`.
pub fn average_successive<S: Scalar>(f: &TrigTaylorPoly<S>, vs: &[PeriodicVector]) -> TrigTaylorPoly<S> {
    vs.iter().fold(f.clone(), |g, v| average(&g, v))
}

/// Generator of a Lie transform: the time-1 flow of `chi`.
#[derive(Clone, Debug, PartialEq)]
pub struct LieGenerator<S> {
    pub chi: TrigTaylorPoly<S>,
    /// Number of retained terms of the Lie series.
    pub order: usize,
    /// Periodic vector the generator averages along, if any.
    pub direction: Option<PeriodicVector>,
}

pub const DEFAULT_LIE_ORDER: usize = 6;

impl<S: Scalar> LieGenerator<S> {
    pub fn new(chi: TrigTaylorPoly<S>, order: usize) -> Self {
        LieGenerator {
            chi,
            order,
            direction: None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.chi.is_zero()
    }
}

/// Solves `{chi, l_v} = u - [u]_v` mode by mode.
pub fn solve_homological<S: Scalar>(u: &TrigTaylorPoly<S>, v: &PeriodicVector) -> LieGenerator<S> {
    let t = v.period_f64();
    // chi_k = u_k / (2 pi i k.v) = -i T / (2 pi (k.p))
    let chi = u.map_modes(|k| {
        let kp = v.lift_dot(k);
        if kp == 0 {
            Complex::new(S::zero(), S::zero())
        } else {
            Complex::new(S::zero(), -S::of(t / kp as f64) / S::two_pi())
        }
    });
    LieGenerator {
        chi,
        order: DEFAULT_LIE_ORDER,
        direction: Some(v.clone()),
    }
}

/// Diagnostics of a truncated Lie series.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LieReport {
    /// Coefficient mass of the last retained term.
    pub last_term: f64,
    /// Mass dropped by the caps while forming the series.
    pub dropped: f64,
    /// Number of nonzero terms after the zeroth.
    pub terms: usize,
}

/// Ratio of last term to `|H|` beyond which the series is declared divergent.
pub const DIVERGENCE_RATIO: f64 = 0.1;

/// `sum_{j<=L} ad_chi^j H / j!` with `ad_chi F = {F, chi}`, i.e. `H o X^1_chi`.
pub fn lie_transform<S: Scalar>(
    h: &TrigTaylorPoly<S>,
    gen: &LieGenerator<S>,
) -> Result<(TrigTaylorPoly<S>, LieReport)> {
    if gen.order < 2 {
        return Err(Error::rejected(format!(
            "Lie series order {} is below 2",
            gen.order
        )));
    }
    if gen.chi.is_zero() {
        return Ok((h.clone(), LieReport::default()));
    }
    let mut chi = gen.chi.clone();
    chi.set_truncation(S::zero());
    let mut term = h.clone();
    term.set_truncation(S::zero());
    let mut sum = term.clone();
    let mut report = LieReport::default();
    for j in 1..=gen.order {
        term = term.poisson_bracket(&chi)?.scale(S::one() / S::of_usize(j));
        if term.is_zero() && term.truncation() == S::zero() {
            break;
        }
        report.terms = j;
        report.last_term = term.coeff_mass().to_f();
        sum = sum.add(&term)?;
    }
    report.dropped = sum.truncation().to_f();
    let total = h.coeff_mass().to_f();
    if report.last_term > DIVERGENCE_RATIO * total && report.terms == gen.order {
        return Err(Error::Divergence {
            last: report.last_term,
            total,
        });
    }
    sum.set_truncation(h.truncation() + sum.truncation());
    Ok((sum, report))
}

/// What to do when a smallness condition of the periodic step fails.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    #[default]
    Enforce,
    /// Carry on and only note the violation in the record.
    Record,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOptions {
    /// Upper bound on `T nu`.
    pub theta_thresh: f64,
    pub mode: ThresholdMode,
    pub order: usize,
    /// Regularity index `i`: `u` is measured in `C^i`, `u'` in `C^{i-1}`
    /// (`C^0` when `i = 0`).
    pub regularity: u32,
    /// Radius of the domain the norms are measured on.
    pub radius: f64,
    pub norm: NormMethod,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            theta_thresh: 0.1,
            mode: ThresholdMode::Enforce,
            order: DEFAULT_LIE_ORDER,
            regularity: 0,
            radius: f64::NAN,
            norm: NormMethod::default(),
        }
    }
}

/// Measurements taken by one periodic step.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PeriodicStepRecord {
    pub period: f64,
    pub nu: f64,
    pub t_nu: f64,
    pub u_norm: f64,
    pub u_prime_norm: f64,
    /// `eps T nu`, the size `u'` is expected to scale with.
    pub u_prime_scale: f64,
    /// `|X_chi|_{C^{i-1}}`, which bounds `|Theta - Id|` up to a constant.
    pub field_norm: f64,
    pub lie: LieReport,
    pub violations: Vec<String>,
}

/// Output of [`periodic_step`].
#[derive(Clone, Debug)]
pub struct PeriodicStep<S> {
    pub generator: LieGenerator<S>,
    pub u_prime: TrigTaylorPoly<S>,
    pub averaged: TrigTaylorPoly<S>,
    pub record: PeriodicStepRecord,
}

/// `C^j` norm of the Hamiltonian vector field of `chi`.
pub fn field_norm<S: Scalar>(chi: &TrigTaylorPoly<S>, j: u32, method: NormMethod, r: S) -> S {
    let mut best = S::zero();
    for i in 0..chi.n() {
        best = best
            .max(chi.d_theta(i).ck_norm_on(j, method, r))
            .max(chi.d_action(i).ck_norm_on(j, method, r));
    }
    best
}

/// One averaging step along `v`: with `H = l_v + s + u`, finds `Theta` with
/// `H o Theta = l_v + s + [u]_v + u'`.
pub fn periodic_step<S: Scalar>(
    v: &PeriodicVector,
    s: &TrigTaylorPoly<S>,
    u: &TrigTaylorPoly<S>,
    eps: f64,
    nu: f64,
    opts: &StepOptions,
) -> Result<PeriodicStep<S>> {
    let t = v.period_f64();
    let r = if opts.radius.is_finite() {
        S::of(opts.radius)
    } else {
        u.radius()
    };
    let i = opts.regularity;
    let u_norm = u.ck_norm_on(i, opts.norm, r).to_f();
    let mut record = PeriodicStepRecord {
        period: t,
        nu,
        t_nu: t * nu,
        u_norm,
        u_prime_scale: eps * t * nu,
        ..Default::default()
    };
    let checks = [
        (
            format!("T nu <= {}", opts.theta_thresh),
            t * nu,
            opts.theta_thresh,
        ),
        ("|u| <= nu".to_string(), u_norm, nu),
    ];
    for (name, lhs, rhs) in checks {
        if lhs > rhs * (1.0 + 1e-12) {
            if opts.mode == ThresholdMode::Enforce {
                return Err(Error::threshold(name, lhs, rhs));
            }
            record.violations.push(format!("{name}: {lhs:.3e} > {rhs:.3e}"));
        }
    }

    let mut generator = solve_homological(u, v);
    generator.order = opts.order;
    let averaged = average(u, v);
    if generator.is_zero() {
        let zero = TrigTaylorPoly::zero(u.n(), u.radius(), u.caps());
        return Ok(PeriodicStep {
            generator,
            u_prime: zero,
            averaged,
            record,
        });
    }
    let lv = linear_form(u, &v.values());
    let h = lv.add(s)?.add(u)?;
    let (image, lie) = lie_transform(&h, &generator)?;
    let u_prime = image.sub(&lv)?.sub(s)?.sub(&averaged)?;
    record.lie = lie;
    record.u_prime_norm = u_prime.ck_norm_on(i.saturating_sub(1), opts.norm, r).to_f();
    record.field_norm = field_norm(&generator.chi, i.saturating_sub(1), opts.norm, r).to_f();
    Ok(PeriodicStep {
        generator,
        u_prime,
        averaged,
        record,
    })
}

/// `l_w(I) = w . I` on the same domain and caps as `like`.
pub fn linear_form<S: Scalar>(like: &TrigTaylorPoly<S>, w: &[f64]) -> TrigTaylorPoly<S> {
    let w: Vec<S> = w.iter().map(|&x| S::of(x)).collect();
    TrigTaylorPoly::linear(like.radius(), like.caps().max(Caps::new(0, 1)), &w)
}
