//! Symplectic integration and the action-drift experiments.

pub mod integrator;

#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};

pub use integrator::{flow_map, Scheme, Stepper};

use crate::diophantine::{self, ExactFrequency};
use crate::error::{Error, Result};
use crate::normalform::field_norm;
use crate::stats::{loglog_fit, PowerFit};
use crate::trigpoly::{Caps, CompiledHamiltonian, NormMethod, TrigTaylorPoly};

/// Largest admissible step, `1e-2 min(1, 1 / |X_H|_{C^0})`.
pub fn max_step(h: &TrigTaylorPoly<f64>) -> f64 {
    let x = field_norm(h, 0, NormMethod::default(), h.radius());
    1e-2 * if x > 1.0 { 1.0 / x } else { 1.0 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub scheme: Scheme,
    /// Keep every `record_every`-th state.
    pub record_every: usize,
    /// Stop once `|I|_inf` exceeds this (defaults to `R`).
    pub exit_radius: Option<f64>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            scheme: Scheme::ImplicitMidpoint,
            record_every: 1,
            exit_radius: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub n: usize,
    pub step: f64,
    pub scheme: Scheme,
    pub times: Vec<f64>,
    /// `(theta, I)` flattened, angles not reduced.
    pub states: Vec<Vec<f64>>,
    pub energy: Vec<f64>,
    /// `max |H(x_t) - H(x_0)|` over recorded states.
    pub energy_drift: f64,
    /// First time the actions left the exit box, if they did.
    pub exit_time: Option<f64>,
    /// Set when a stop condition ended the run early.
    pub stopped_at: Option<f64>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Fixed-step integration of `H` from `x0` over `[0, t_end]`, stopping early
/// when `stop(t, x)` returns true.
pub fn integrate_until(
    h: &TrigTaylorPoly<f64>,
    x0: &[f64],
    step: f64,
    t_end: f64,
    opts: &IntegrateOptions,
    mut stop: impl FnMut(f64, &[f64]) -> bool,
) -> Result<Trajectory> {
    let n = h.n();
    if x0.len() != 2 * n {
        return Err(Error::rejected(format!(
            "initial state has {} entries, expected {}",
            x0.len(),
            2 * n
        )));
    }
    let limit = max_step(h);
    if !(step > 0.0) || step > limit * (1.0 + 1e-12) {
        return Err(Error::rejected(format!(
            "step {step:e} outside (0, {limit:e}]"
        )));
    }
    let exit_r = opts.exit_radius.unwrap_or(h.radius());
    if x0[n..].iter().any(|x| x.abs() > exit_r) {
        return Err(Error::Domain {
            norm: x0[n..].iter().fold(0.0, |m: f64, x| m.max(x.abs())),
            radius: exit_r,
        });
    }
    let compiled = CompiledHamiltonian::new(h);
    let mut stepper = Stepper::new(&compiled, opts.scheme);
    let e0 = compiled.value(&x0[..n], &x0[n..]);
    let mut traj = Trajectory {
        n,
        step,
        scheme: opts.scheme,
        times: vec![0.0],
        states: vec![x0.to_vec()],
        energy: vec![e0],
        energy_drift: 0.0,
        exit_time: None,
        stopped_at: None,
    };
    let steps = (t_end / step).round() as usize;
    let every = opts.record_every.max(1);
    let mut z = x0.to_vec();
    for s in 1..=steps {
        stepper.step(&mut z, step)?;
        let t = s as f64 * step;
        let escaped = z[n..].iter().any(|x| x.abs() > exit_r);
        let halt = escaped || stop(t, &z);
        if s % every == 0 || s == steps || halt {
            let e = compiled.value(&z[..n], &z[n..]);
            traj.energy_drift = traj.energy_drift.max((e - e0).abs());
            traj.times.push(t);
            traj.states.push(z.clone());
            traj.energy.push(e);
        }
        if escaped {
            traj.exit_time = Some(t);
            break;
        }
        if halt {
            traj.stopped_at = Some(t);
            break;
        }
    }
    Ok(traj)
}

pub fn integrate(
    h: &TrigTaylorPoly<f64>,
    x0: &[f64],
    step: f64,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    integrate_until(h, x0, step, t_end, opts, |_, _| false)
}

/// Orthogonal projector onto `F`, the smallest rational subspace containing
/// the frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projector {
    pub basis: Vec<Vec<f64>>,
}

impl Projector {
    pub fn new(omega: &ExactFrequency) -> Result<Self> {
        Ok(Projector {
            basis: diophantine::rational_span(omega)?.orthonormal(),
        })
    }

    /// `|Pi_F x|_2`.
    pub fn norm(&self, x: &[f64]) -> f64 {
        self.basis
            .iter()
            .map(|b| b.iter().zip(x).map(|(p, q)| p * q).sum::<f64>().powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub projector: Projector,
    pub times: Vec<f64>,
    /// `sup_{s <= t} |Pi_F (I(s) - I_0)|`.
    pub drift: Vec<f64>,
    /// First time outside `D_{R/4}`; infinite if never within the run.
    pub exit_time: f64,
    pub max_drift: f64,
}

/// Running sup of the projected action drift, with `R` the radius of the
/// Hamiltonian the trajectory came from.
pub fn drift_report(traj: &Trajectory, omega: &ExactFrequency, radius: f64) -> Result<DriftReport> {
    let n = traj.n;
    let projector = Projector::new(omega)?;
    let i0 = traj.states[0][n..].to_vec();
    let mut running = 0.0f64;
    let mut drift = Vec::with_capacity(traj.states.len());
    let mut exit_time = f64::INFINITY;
    for (t, z) in traj.times.iter().zip(&traj.states) {
        let d: Vec<f64> = z[n..].iter().zip(&i0).map(|(a, b)| a - b).collect();
        running = running.max(projector.norm(&d));
        drift.push(running);
        if exit_time.is_infinite() && z[n..].iter().any(|x| x.abs() > radius / 4.0) {
            exit_time = *t;
        }
    }
    Ok(DriftReport {
        projector,
        times: traj.times.clone(),
        drift,
        exit_time,
        max_drift: running,
    })
}

/// Single-resonance family `a sin(2 pi K.theta)` with `|f|_{C^k}` near `eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoFamily {
    pub q: f64,
    pub psi: f64,
    pub wavevector: Vec<i64>,
    pub amplitude: f64,
    /// `|K . omega|`.
    pub small_divisor: f64,
    pub radius: f64,
}

impl DemoFamily {
    pub fn new(omega: &ExactFrequency, k: u32, eps: f64, radius: f64) -> Result<Self> {
        let q = diophantine::delta_star(omega, 1.0 / eps)?;
        let (psi, wavevector) = diophantine::psi(omega, q)?;
        let kinf = diophantine::sup_norm(&wavevector) as f64;
        let amplitude = eps * (std::f64::consts::TAU * kinf).powi(-(k as i32));
        Ok(DemoFamily {
            q,
            psi,
            small_divisor: omega.dot_f64(&wavevector).abs(),
            wavevector,
            amplitude,
            radius,
        })
    }

    pub fn perturbation(&self) -> TrigTaylorPoly<f64> {
        let n = self.wavevector.len();
        let kinf = diophantine::sup_norm(&self.wavevector) as u32;
        let k: Vec<i32> = self.wavevector.iter().map(|&x| x as i32).collect();
        TrigTaylorPoly::sin_mode(
            n,
            self.radius,
            Caps::new(kinf, 1),
            &k,
            &vec![0; n],
            self.amplitude,
        )
    }

    pub fn hamiltonian(&self, omega: &ExactFrequency) -> Result<TrigTaylorPoly<f64>> {
        let f = self.perturbation();
        TrigTaylorPoly::linear(self.radius, f.caps(), omega.values()).add(&f)
    }

    /// Initial drift speed `2 pi a |K|_2` at `K.theta_0 = 0`.
    pub fn predicted_speed(&self) -> f64 {
        let k2 = self.wavevector.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
        std::f64::consts::TAU * self.amplitude * k2
    }

    /// Largest projected drift, `a |K|_2 / |K . omega|`.
    pub fn predicted_max_drift(&self) -> f64 {
        self.predicted_speed() / (std::f64::consts::TAU * self.small_divisor)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoReport {
    pub k: u32,
    pub eps: f64,
    pub family: DemoFamily,
    pub speed_measured: f64,
    pub speed_predicted: f64,
    pub ratio: f64,
    /// `Psi(Q) = 1 / |K . omega|`, the scale of the resonant window.
    pub window_predicted: f64,
    /// Time at which the projected drift peaked over one window.
    pub window_measured: f64,
    pub max_drift: f64,
    pub energy_drift: f64,
}

/// Initial drift speed of `l_omega + a sin(2 pi K.theta)` from `theta_0 = 0`.
pub fn drift_demo(omega: &ExactFrequency, k: u32, eps: f64) -> Result<DemoReport> {
    let family = DemoFamily::new(omega, k, eps, 1.0)?;
    let h = family.hamiltonian(omega)?;
    let n = omega.n();
    let projector = Projector::new(omega)?;
    let window = 1.0 / family.small_divisor;
    // The drift phase 2 pi (K.omega) t stays below 0.1 up to t_short.
    let t_short = 0.1 / (std::f64::consts::TAU * family.small_divisor);
    let step = max_step(&h).min(t_short / 200.0);
    let x0 = vec![0.0; 2 * n];
    let t_end = 0.5 * window;
    let every = ((t_end / step) / 2000.0).max(1.0) as usize;
    let traj = integrate(&h, &x0, step, t_end, &IntegrateOptions {
        record_every: every,
        ..Default::default()
    })?;
    let short = integrate(&h, &x0, step, t_short, &IntegrateOptions::default())?;
    let speed_measured = projector.norm(&short.last()[n..]) / t_short;
    let report = drift_report(&traj, omega, h.radius())?;
    let mut peak = (0.0, 0.0f64);
    for (t, z) in traj.times.iter().zip(&traj.states) {
        let d = projector.norm(&z[n..]);
        if d > peak.1 {
            peak = (*t, d);
        }
    }
    let speed_predicted = family.predicted_speed();
    Ok(DemoReport {
        k,
        eps,
        speed_measured,
        speed_predicted,
        ratio: speed_measured / speed_predicted,
        window_predicted: family.psi,
        window_measured: peak.0,
        max_drift: report.max_drift,
        energy_drift: traj.energy_drift.max(short.energy_drift),
        family,
    })
}

/// Perturbations the stability experiment can run.
#[derive(Clone, Debug, PartialEq)]
pub enum StabilityFamily {
    /// The drift-demo family, rebuilt for every `eps`.
    Demo { radius: f64 },
    /// `f = 0`.
    Unperturbed { radius: f64 },
    /// A fixed perturbation scaled to `|f|_{C^k} = eps`.
    Scaled(TrigTaylorPoly<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub eps: f64,
    pub q: f64,
    /// First time with projected drift above `delta`; infinite if never.
    pub t_obs: f64,
    /// `delta eps^{-1} Q^{k-2}`.
    pub t_pred: f64,
    pub step: f64,
    pub max_drift: f64,
    pub energy_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub k: u32,
    pub delta: f64,
    pub horizon: f64,
    pub rows: Vec<StabilityRow>,
    /// Fit of `T_obs` against `eps` over the rows with finite `T_obs`.
    pub fit: Option<PowerFit>,
    pub tau: f64,
    /// `-1 - (k - 2) / (1 + tau)`.
    pub predicted_exponent: f64,
    /// Set when no row exited within the horizon.
    pub unbounded: bool,
}

/// `T_obs(eps)`: integrate `l_omega + f_eps` from the origin until the
/// projected drift exceeds `delta` or `horizon` passes.
pub fn stability_experiment(
    omega: &ExactFrequency,
    family: &StabilityFamily,
    eps_list: &[f64],
    k: u32,
    delta: f64,
    horizon: f64,
) -> Result<StabilityReport> {
    Ok(stability_runs(omega, family, eps_list, k, delta, horizon)?.0)
}

/// [`stability_experiment`] together with the recorded trajectory of each
/// row (about 1000 samples each).
pub fn stability_runs(
    omega: &ExactFrequency,
    family: &StabilityFamily,
    eps_list: &[f64],
    k: u32,
    delta: f64,
    horizon: f64,
) -> Result<(StabilityReport, Vec<Trajectory>)> {
    if k < 2 {
        return Err(Error::rejected("stability predictions need k >= 2"));
    }
    let n = omega.n();
    let projector = Projector::new(omega)?;
    let table = diophantine::psi_table(omega, 256)?;
    let (tau, _) = table.fit_exponent();
    let mut rows = Vec::new();
    let mut traces = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let q = diophantine::delta_star(omega, 1.0 / eps)?;
        let (h, speed) = match family {
            StabilityFamily::Demo { radius } => {
                let fam = DemoFamily::new(omega, k, eps, *radius)?;
                (fam.hamiltonian(omega)?, fam.predicted_speed())
            }
            StabilityFamily::Unperturbed { radius } => (
                TrigTaylorPoly::linear(*radius, Caps::new(0, 1), omega.values()),
                0.0,
            ),
            StabilityFamily::Scaled(f) => {
                let norm = f.ck_norm(k, NormMethod::default());
                if norm == 0.0 {
                    return Err(Error::rejected("perturbation is zero"));
                }
                let g = f.scale(eps / norm);
                let speed = field_norm(&g, 0, NormMethod::default(), g.radius());
                (
                    TrigTaylorPoly::linear(g.radius(), g.caps(), omega.values()).add(&g)?,
                    speed,
                )
            }
        };
        // Resolve the expected exit time with about 1000 steps.
        let mut step = max_step(&h);
        if speed > 0.0 {
            step = step.min(delta / speed / 1000.0);
        }
        let every = ((horizon / step) / 1000.0).max(1.0) as usize;
        let x0 = vec![0.0; 2 * n];
        let traj = integrate_until(
            &h,
            &x0,
            step,
            horizon,
            &IntegrateOptions {
                record_every: every,
                ..Default::default()
            },
            |_, z| projector.norm(&z[n..]) > delta,
        )?;
        let max_drift = traj
            .states
            .iter()
            .map(|z| projector.norm(&z[n..]))
            .fold(0.0, f64::max);
        rows.push(StabilityRow {
            eps,
            q,
            t_obs: traj.stopped_at.unwrap_or(f64::INFINITY),
            t_pred: delta / eps * q.powi(k as i32 - 2),
            step,
            max_drift,
            energy_drift: traj.energy_drift,
        });
        traces.push(traj);
    }
    let finite: Vec<&StabilityRow> = rows.iter().filter(|r| r.t_obs.is_finite()).collect();
    let fit = (finite.len() >= 2).then(|| {
        let xs: Vec<f64> = finite.iter().map(|r| r.eps).collect();
        let ys: Vec<f64> = finite.iter().map(|r| r.t_obs).collect();
        loglog_fit(&xs, &ys)
    });
    if finite.is_empty() {
        log::warn!("no trajectory left the drift ball within the horizon");
    }
    let report = StabilityReport {
        k,
        delta,
        horizon,
        unbounded: finite.is_empty(),
        rows,
        fit,
        tau,
        predicted_exponent: -1.0 - (k as f64 - 2.0) / (1.0 + tau),
    };
    Ok((report, traces))
}
