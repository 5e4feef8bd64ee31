use serde::{Deserialize, Serialize};

use crate::diophantine::ExactFrequency;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trigpoly::{NormMethod, TrigTaylorPoly};

use super::linear_form;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizeRecord {
    pub r: f64,
    pub k: u32,
    /// `|f|_{C^k}` on `D_R`.
    pub epsilon: f64,
    pub eps_over_r: f64,
    /// `|H~ - l_omega|_{C^k}` on `D_1`.
    pub perturbation_norm: f64,
    /// The part coming from the nonlinearity of `h` alone.
    pub nonlinear_norm: f64,
}

impl LocalizeRecord {
    /// Factor turning a `C^k` estimate of a derivative with `action_order`
    /// action derivatives on `D_1` into one for the unscaled function on `D_r`.
    pub fn weight(&self, action_order: u32) -> f64 {
        self.r.powi(1 - action_order as i32)
    }
}

/// `h(0) + r H~(theta, I / r) = h(I) + f(theta, I)`.
#[derive(Clone, Debug)]
pub struct Localized<S> {
    /// `H~ - l_omega` on `D_1`.
    pub perturbation: TrigTaylorPoly<S>,
    pub h0: S,
    pub record: LocalizeRecord,
}

impl<S: Scalar> Localized<S> {
    pub fn r(&self) -> f64 {
        self.record.r
    }

    /// Energy in original units of a value of the rescaled Hamiltonian.
    pub fn unscaled_energy(&self, value: S) -> S {
        self.h0 + S::of(self.record.r) * value
    }
}

/// Rescale an `r`-neighbourhood of the torus `I = 0` of `h + f` to the unit
/// ball, leaving `l_omega` plus a perturbation of size about `r + eps / r`.
pub fn localize<S: Scalar>(
    h: &TrigTaylorPoly<S>,
    f: &TrigTaylorPoly<S>,
    omega: &ExactFrequency,
    r: f64,
    k: u32,
    norm: NormMethod,
) -> Result<Localized<S>> {
    let n = h.n();
    if f.n() != n || omega.n() != n {
        return Err(Error::rejected("dimension mismatch in localization"));
    }
    if h.modes().any(|(kv, _)| kv.iter().any(|&x| x != 0)) {
        return Err(Error::rejected("integrable part must not depend on the angles"));
    }
    let mean = h.coeff(&vec![0; n]).cloned().unwrap_or_default();
    for (i, &w) in omega.values().iter().enumerate() {
        let mut alpha = vec![0u32; n];
        alpha[i] = 1;
        let gi = mean.get(&alpha).re.to_f();
        if (gi - w).abs() > 1e-12 * w.abs().max(1.0) {
            return Err(Error::rejected(format!(
                "grad h(0) differs from omega in component {i}: {gi} vs {w}"
            )));
        }
    }
    let eps = f.ck_norm(k, norm).to_f();
    let big_r = h.radius().to_f();
    if r < eps.sqrt() {
        return Err(Error::threshold("sqrt(eps) <= r (localization)", eps.sqrt(), r));
    }
    if r > big_r {
        return Err(Error::threshold("r <= R (localization)", r, big_r));
    }
    let rs = S::of(r);
    let inv = S::one() / rs;
    let h0 = mean.get(&vec![0u32; n]).re;
    let hs = h
        .rescale_actions(rs, S::one())
        .sub(&TrigTaylorPoly::constant(n, S::one(), h.caps(), h0))?
        .scale(inv);
    let lw = linear_form(&hs, omega.values());
    let nonlinear = hs.sub(&lw)?;
    let fs = f.rescale_actions(rs, S::one()).scale(inv);
    let perturbation = nonlinear.add(&fs)?;
    let record = LocalizeRecord {
        r,
        k,
        epsilon: eps,
        eps_over_r: eps / r,
        perturbation_norm: perturbation.ck_norm(k, norm).to_f(),
        nonlinear_norm: nonlinear.ck_norm(k, norm).to_f(),
    };
    Ok(Localized {
        perturbation,
        h0,
        record,
    })
}
