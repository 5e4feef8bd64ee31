use serde::{Deserialize, Serialize};

use super::manifold::{manifold_pair, GeneratingFunction, ManifoldOptions};
use super::{splitting_matrix, ResonantModel, SplittingReport};
use crate::diophantine::delta_star;
use crate::error::{Error, Result};
use crate::stats::{loglog_fit, PowerFit};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MuSweepRow {
    pub mu: f64,
    pub report: SplittingReport,
    /// `max |grad S_mu - grad S_0|` over both sides and the whole band.
    pub closeness: f64,
    /// `|tangential| / mu`.
    pub constant: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MuSweepReport {
    pub lambda: f64,
    pub unperturbed: SplittingReport,
    pub rows: Vec<MuSweepRow>,
    pub tangential_fit: PowerFit,
    pub closeness_fit: PowerFit,
    /// Largest over smallest `|tangential| / mu`.
    pub constant_spread: f64,
}

fn field_gap(a: &GeneratingFunction, b: &GeneratingFunction) -> f64 {
    let d1 = a.action1.sub(&b.action1).max_abs();
    let d2 = a.action2.sub(&b.action2).max_abs();
    d1.max(d2)
}

/// Splitting at fixed `lambda` for each `mu`, against the `mu = 0` manifolds.
pub fn mu_sweep(base: &ResonantModel, mus: &[f64], opts: &ManifoldOptions) -> Result<MuSweepReport> {
    let flat = base.clone().with_coupling(base.lambda, 0.0);
    let (u0, s0) = manifold_pair(&flat, opts)?;
    let unperturbed = splitting_matrix(&u0, &s0, &flat)?;
    let mut rows = Vec::with_capacity(mus.len());
    for &mu in mus {
        let model = base.clone().with_coupling(base.lambda, mu);
        let (u, s) = manifold_pair(&model, opts)?;
        let report = splitting_matrix(&u, &s, &model)?;
        log::debug!("mu = {mu:.3e}: tangential {:.4e}", report.tangential);
        rows.push(MuSweepRow {
            mu,
            closeness: field_gap(&u, &u0).max(field_gap(&s, &s0)),
            constant: report.tangential.abs() / mu,
            report,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.mu).collect();
    let tang: Vec<f64> = rows.iter().map(|r| r.report.tangential.abs()).collect();
    let close: Vec<f64> = rows.iter().map(|r| r.closeness).collect();
    let cs: Vec<f64> = rows.iter().map(|r| r.constant).collect();
    let spread = cs.iter().cloned().fold(0.0, f64::max) / cs.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(MuSweepReport {
        lambda: base.lambda,
        unperturbed,
        tangential_fit: loglog_fit(&xs, &tang),
        closeness_fit: loglog_fit(&xs, &close),
        constant_spread: spread,
        rows,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingOptions {
    /// Regularity of the original Hamiltonian; at least 3.
    pub k: u32,
    /// Constant inside `Delta*(c / sqrt(eps))`.
    pub c: f64,
    /// Radius of the original action domain.
    pub radius: f64,
    pub manifold: ManifoldOptions,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        ScalingOptions {
            k: 3,
            c: 1.0,
            radius: 1.0,
            manifold: ManifoldOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingRow {
    pub eps: f64,
    pub r: f64,
    pub lambda: f64,
    pub mu: f64,
    pub fast_frequency: f64,
    pub report: SplittingReport,
    /// Tangential angle in the original coordinates, `r |tangential|`.
    pub angle: f64,
    /// `sqrt(eps) (1 + lambda) lambda^(k-2)`.
    pub bound: f64,
    /// `|a_1| / |a_2|` for the sorted eigenvalues.
    pub eigen_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingReport {
    pub k: u32,
    pub rows: Vec<ScalingRow>,
    /// `log angle` against `log bound`.
    pub fit: PowerFit,
}

/// Couplings for a given `eps`: `lambda = 1 / Delta*(c / sqrt(eps))`,
/// `mu = lambda^(k-2)`, after the localization and coupling thresholds.
pub fn scaling_couplings(base: &ResonantModel, eps: f64, opts: &ScalingOptions) -> Result<(f64, f64)> {
    if opts.k < 3 {
        return Err(Error::rejected(format!("k = {} but the scaling needs k >= 3", opts.k)));
    }
    let r = 2.0 * eps.sqrt();
    if r > opts.radius {
        return Err(Error::threshold("sqrt(eps) <= r <= R with r = 2 sqrt(eps)", r, opts.radius));
    }
    let lambda = 1.0 / delta_star(&base.varpi, opts.c / eps.sqrt())?;
    if lambda > base.lambda_max {
        return Err(Error::threshold(
            "1 / Delta*(c / sqrt(eps)) <= lambda_max",
            lambda,
            base.lambda_max,
        ));
    }
    Ok((lambda, lambda.powi(opts.k as i32 - 2)))
}

/// Tangential splitting against `sqrt(eps) (1 + lambda) lambda^(k-2)` over
/// a list of `eps`.
pub fn thm_split_experiment(base: &ResonantModel, eps_list: &[f64], opts: &ScalingOptions) -> Result<ScalingReport> {
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let (lambda, mu) = scaling_couplings(base, eps, opts)?;
        let mut model = base.clone().with_coupling(lambda, mu);
        model.eps = eps;
        let (u, s) = manifold_pair(&model, &opts.manifold)?;
        let report = splitting_matrix(&u, &s, &model)?;
        let r = 2.0 * eps.sqrt();
        let bound = eps.sqrt() * (1.0 + lambda) * lambda.powi(opts.k as i32 - 2);
        rows.push(ScalingRow {
            eps,
            r,
            lambda,
            mu,
            fast_frequency: model.fast_frequency(),
            angle: r * report.tangential.abs(),
            bound,
            eigen_ratio: report.angles[0].abs() / report.angles[1].abs(),
            report,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.bound).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.angle).collect();
    Ok(ScalingReport {
        k: opts.k,
        fit: loglog_fit(&xs, &ys),
        rows,
    })
}
