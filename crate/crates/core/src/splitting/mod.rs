//! Splitting of the stable and unstable manifolds of the hyperbolic torus in
//! the resonant pendulum model
//!
//! `H = w/sqrt(eps) I1 + A I1^2 + B I2^2 + V(theta2) + lambda R(theta2, I) + mu F(theta, I)`
//!
//! on `T^2 x B_1` (one fast angle, one pendulum). Everything here is `f64`.
//!
//! The manifolds are traced in the energy level of the torus with the fast
//! angle as time, fitted as graphs `I = grad S` over a band of the pendulum
//! angle, and compared through the Hessian of `S+ - S-` at a homoclinic
//! point.

mod manifold;
pub mod spectral;
mod sweep;


use serde::{Deserialize, Serialize};

use crate::diophantine::ExactFrequency;
use crate::error::{Error, Result};
use crate::trigpoly::{Caps, CompiledHamiltonian, Gradient};
use crate::TrigPoly;

pub use manifold::{
    manifold_pair, manifolds, manifolds_on, torus, GeneratingFunction, ManifoldOptions, MeshPoint, Side,
    Torus,
};
pub use spectral::{TensorField, TensorGrid};
pub use sweep::{
    mu_sweep, scaling_couplings, thm_split_experiment, MuSweepReport, MuSweepRow, ScalingOptions, ScalingReport, ScalingRow,
};

/// Largest coupling `lambda` accepted by default.
pub const LAMBDA_MAX: f64 = 0.5;

/// The resonant model with one fast angle and one pendulum degree of freedom.
#[derive(Clone, Debug)]
pub struct ResonantModel {
    /// Slow frequency of the fast angle before the `1/sqrt(eps)` blow-up.
    pub varpi: ExactFrequency,
    pub a: f64,
    pub b: f64,
    /// Potential on the pendulum circle (`n = 1`, no action dependence).
    pub potential: TrigPoly,
    /// Fast-angle independent coupling (`n = 2`).
    pub coupling: TrigPoly,
    /// Generic perturbation (`n = 2`).
    pub forcing: TrigPoly,
    pub lambda: f64,
    pub mu: f64,
    pub eps: f64,
    pub lambda_max: f64,
}

impl ResonantModel {
    /// Standard pendulum family: `B = 1/2`, `V = cos(2 pi theta2)/(2 pi)^2`,
    /// `A = 1/2`, `R = sin(2 pi theta2) I2`,
    /// `F = cos(2 pi theta1) cos(2 pi theta2)/(2 pi)^2`.
    pub fn pendulum(varpi: ExactFrequency, eps: f64, lambda: f64, mu: f64) -> Self {
        let tp2 = (2.0 * std::f64::consts::PI).powi(2);
        let caps = Caps::new(4, 2);
        let potential = TrigPoly::cos_mode(1, 1.0, caps, &[1], &[0], 1.0 / tp2);
        let coupling = TrigPoly::sin_mode(2, 1.0, caps, &[0, 1], &[0, 1], 1.0);
        let forcing = TrigPoly::cos_mode(2, 1.0, caps, &[1, 1], &[0, 0], 0.5 / tp2)
            .add(&TrigPoly::cos_mode(2, 1.0, caps, &[1, -1], &[0, 0], 0.5 / tp2))
            .expect("same dimension");
        ResonantModel {
            varpi,
            a: 0.5,
            b: 0.5,
            potential,
            coupling,
            forcing,
            lambda,
            mu,
            eps,
            lambda_max: LAMBDA_MAX,
        }
    }

    pub fn with_coupling(mut self, lambda: f64, mu: f64) -> Self {
        self.lambda = lambda;
        self.mu = mu;
        self
    }

    /// Frequency of the fast angle, `w / sqrt(eps)`.
    pub fn fast_frequency(&self) -> f64 {
        self.varpi.values()[0] / self.eps.sqrt()
    }

    /// Checks the structural assumptions: dimensions, definite `B`,
    /// nondegenerate extremum of `V` at the origin matching the sign of `B`,
    /// `R` independent of the fast angle, and the coupling range.
    pub fn validate(&self) -> Result<()> {
        if self.varpi.n() != 1 {
            return Err(Error::rejected(format!(
                "only one fast angle is supported, got {} frequencies",
                self.varpi.n()
            )));
        }
        if self.potential.n() != 1 || self.coupling.n() != 2 || self.forcing.n() != 2 {
            return Err(Error::rejected(
                "potential must live on T^1 and coupling/forcing on T^2 x B^2",
            ));
        }
        if self.potential.degree() != 0 {
            return Err(Error::rejected("potential depends on the action"));
        }
        if !(self.eps > 0.0) || self.varpi.values()[0] == 0.0 {
            return Err(Error::rejected("need eps > 0 and a nonzero fast frequency"));
        }
        if self.b == 0.0 || !self.b.is_finite() {
            return Err(Error::rejected("B must be definite"));
        }
        let v1 = self.potential.d_theta(0).evaluate(&[0.0], &[0.0])?;
        let v2 = self.potential.d_theta(0).d_theta(0).evaluate(&[0.0], &[0.0])?;
        if v1.abs() > 1e-12 {
            return Err(Error::rejected(format!("V'(0) = {v1:.3e}: origin is not critical")));
        }
        if v2 * self.b >= 0.0 {
            return Err(Error::rejected(format!(
                "V''(0) = {v2:.3e} with B = {}: no hyperbolic equilibrium at the origin",
                self.b
            )));
        }
        if self.coupling.modes().any(|(k, _)| k[0] != 0) {
            return Err(Error::rejected("coupling R depends on the fast angle"));
        }
        if !(0.0..=self.lambda_max).contains(&self.lambda) {
            return Err(Error::threshold("0 <= lambda <= lambda_max", self.lambda, self.lambda_max));
        }
        if self.mu < 0.0 {
            return Err(Error::rejected("mu must be nonnegative"));
        }
        Ok(())
    }

    fn embedded_potential(&self) -> TrigPoly {
        let caps = self.potential.caps().max(Caps::new(0, 2));
        let terms = self
            .potential
            .terms()
            .map(|(k, _, c)| ([0, k[0]][..].into(), [0u32, 0][..].into(), *c));
        TrigPoly::from_terms(2, 1.0, caps, terms).expect("dimension two")
    }

    /// `H` with the given `mu` (the stored one is ignored).
    pub fn hamiltonian_with(&self, mu: f64) -> Result<TrigPoly> {
        let caps = self
            .potential
            .caps()
            .max(self.coupling.caps())
            .max(self.forcing.caps())
            .max(Caps::new(1, 2));
        let w1 = self.fast_frequency();
        let integrable = TrigPoly::linear(1.0, caps, &[w1, 0.0])
            .add(&TrigPoly::monomial(2, 1.0, caps, &[2, 0], self.a))?
            .add(&TrigPoly::monomial(2, 1.0, caps, &[0, 2], self.b))?;
        let mut h = integrable
            .add(&self.embedded_potential().with_caps(caps))?
            .add(&self.coupling.clone().with_radius(1.0).with_caps(caps).scale(self.lambda))?;
        if mu != 0.0 {
            h = h.add(&self.forcing.clone().with_radius(1.0).with_caps(caps).scale(mu))?;
        }
        Ok(h)
    }

    pub fn hamiltonian(&self) -> Result<TrigPoly> {
        self.hamiltonian_with(self.mu)
    }
}

/// Hyperbolic equilibrium of the pendulum part at `I1 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub theta2: f64,
    pub action2: f64,
    /// Linearization eigenvalues are `+-exponent`.
    pub exponent: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Newton iteration for the equilibrium of `B I2^2 + V + lambda R` at
/// `I1 = 0`, started at the origin. `mu` plays no role.
pub fn fixed_point(model: &ResonantModel) -> Result<FixedPoint> {
    model.validate()?;
    let h = model.hamiltonian_with(0.0)?;
    let d = |lt: [u32; 2], la: [u32; 2]| -> Result<CompiledHamiltonian<f64>> {
        Ok(CompiledHamiltonian::new(&h.derivative(&lt, &la)?))
    };
    let (h_tt, h_ta, h_aa) = (d([0, 2], [0, 0])?, d([0, 1], [0, 1])?, d([0, 0], [0, 2])?);
    let compiled = CompiledHamiltonian::new(&h);
    let mut g = Gradient::default();
    let (mut x, mut p) = (0.0f64, 0.0f64);
    let jac = |x: f64, p: f64| {
        let (th, ac) = ([0.0, x], [0.0, p]);
        let tt = h_tt.value(&th, &ac);
        let ta = h_ta.value(&th, &ac);
        let aa = h_aa.value(&th, &ac);
        // d/d(theta2, I2) of (H_I2, -H_theta2)
        [[ta, aa], [-tt, -ta]]
    };
    for it in 0..50 {
        compiled.gradient(&[0.0, x], &[0.0, p], &mut g);
        let f = [g.d_action[1], -g.d_theta[1]];
        let res = f[0].abs().max(f[1].abs());
        if res <= 1e-13 {
            let j = jac(x, p);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if -det <= 0.0 {
                return Err(Error::Numerical(format!(
                    "equilibrium ({x:.3e}, {p:.3e}) is not hyperbolic (det = {det:.3e})"
                )));
            }
            return Ok(FixedPoint {
                theta2: x,
                action2: p,
                exponent: (-det).sqrt(),
                iterations: it,
                residual: res,
            });
        }
        let j = jac(x, p);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Numerical("singular Jacobian in equilibrium search".into()));
        }
        let dx = (f[0] * j[1][1] - f[1] * j[0][1]) / det;
        let dp = (j[0][0] * f[1] - j[1][0] * f[0]) / det;
        x -= dx;
        p -= dp;
        if x.abs() > 0.25 || p.abs() > 0.5 {
            return Err(Error::Numerical(format!(
                "equilibrium search diverged to ({x:.3e}, {p:.3e})"
            )));
        }
    }
    Err(Error::Numerical("equilibrium search did not converge in 50 steps".into()))
}

/// Splitting matrix and derived quantities at a homoclinic point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplittingReport {
    pub theta_star: [f64; 2],
    pub action_star: [f64; 2],
    /// Hessian of `S+ - S-` at `theta_star`.
    pub matrix: [[f64; 2]; 2],
    /// Eigenvalues sorted by modulus.
    pub angles: Vec<f64>,
    /// Torus-direction block of the matrix (the fast-angle entry).
    pub tangential: f64,
    /// Quadratic form along the direction orthogonal to the flow.
    pub transverse: f64,
    /// `|M v| / |v|` for the flow direction `v = dH/dI`; zero for an exact
    /// homoclinic orbit.
    pub flow_defect: f64,
    /// `|grad S+ - grad S-|` at `theta_star`.
    pub gradient_mismatch: f64,
    /// `|d1 (I2+ - I2-) - d2 (I1+ - I1-)|` at `theta_star`.
    pub symmetry_defect: f64,
    /// Largest gap between the spectral Hessian and central differences of
    /// the spectral gradient, over five points.
    pub fd_agreement: f64,
    /// The gradient gap on the section was below the resolution, so the
    /// manifolds coincide numerically and `theta_star` is a nominal point.
    pub degenerate: bool,
    /// Largest graph-fit residual of the two sides.
    pub resolution: f64,
}

const DEGENERATE_GAP: f64 = 1e-10;

fn sym_eigen(m: [[f64; 2]; 2]) -> [f64; 2] {
    let mid = 0.5 * (m[0][0] + m[1][1]);
    let rad = (0.25 * (m[0][0] - m[1][1]).powi(2) + m[0][1] * m[0][1]).sqrt();
    let mut e = [mid - rad, mid + rad];
    e.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    e
}

/// Locates a homoclinic point on the section `theta2 = ` centre of the
/// overlap and returns the splitting matrix there.
///
/// Zeros of the gradient gap come in curves (homoclinic orbits), so the
/// root is sought in the fast angle on a transverse section; among the
/// sign changes the most transverse one is kept.
pub fn splitting_matrix(
    plus: &GeneratingFunction,
    minus: &GeneratingFunction,
    model: &ResonantModel,
) -> Result<SplittingReport> {
    let lo = plus.grid.lo.max(minus.grid.lo);
    let hi = plus.grid.hi.min(minus.grid.hi);
    if lo >= hi {
        return Err(Error::rejected(format!(
            "patches do not overlap: [{}, {}] and [{}, {}]",
            plus.grid.lo, plus.grid.hi, minus.grid.lo, minus.grid.hi
        )));
    }
    let section = 0.5 * (lo + hi);
    let gap = |t1: f64, t2: f64| -> [f64; 2] {
        let (a, b) = (plus.gradient(t1, t2), minus.gradient(t1, t2));
        [a[0] - b[0], a[1] - b[1]]
    };
    let hess_gap = |t1: f64, t2: f64| -> [[f64; 2]; 2] {
        let (a, b) = (plus.hessian(t1, t2), minus.hessian(t1, t2));
        [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
    };

    let scan = 256;
    let vals: Vec<f64> = (0..scan)
        .map(|i| gap(i as f64 / scan as f64, section)[1])
        .collect();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let resolution = plus.fit_residual.max(minus.fit_residual);
    let (theta1, degenerate) = if scale < DEGENERATE_GAP.max(resolution) {
        (0.0, true)
    } else {
        let mut best: Option<(f64, f64)> = None;
        for i in 0..scan {
            let (f0, f1) = (vals[i], vals[(i + 1) % scan]);
            if f0 == 0.0 || f0 * f1 < 0.0 {
                let (mut a, mut b) = (i as f64 / scan as f64, (i + 1) as f64 / scan as f64);
                let (mut fa, _) = (f0, f1);
                // bisection then Newton polish
                for _ in 0..40 {
                    let m = 0.5 * (a + b);
                    let fm = gap(m, section)[1];
                    if fa * fm <= 0.0 {
                        b = m;
                    } else {
                        a = m;
                        fa = fm;
                    }
                }
                let mut t = 0.5 * (a + b);
                for _ in 0..3 {
                    let slope = hess_gap(t, section)[1][0];
                    if slope == 0.0 {
                        break;
                    }
                    t -= gap(t, section)[1] / slope;
                }
                let slope = hess_gap(t, section)[1][0].abs();
                if best.is_none_or(|(_, s)| slope > s) {
                    best = Some((t.rem_euclid(1.0), slope));
                }
            }
        }
        match best {
            Some((t, _)) => (t, false),
            None => {
                return Err(Error::HomoclinicNotFound(format!(
                    "gradient gap on theta2 = {section} keeps one sign (max {scale:.3e})"
                )))
            }
        }
    };

    let theta_star = [theta1, section];
    let g = gap(theta1, section);
    let m = hess_gap(theta1, section);
    let action = plus.gradient(theta1, section);

    // flow direction at the homoclinic point
    let h = CompiledHamiltonian::new(&model.hamiltonian()?);
    let mut grad = Gradient::default();
    h.gradient(&theta_star, &action, &mut grad);
    let v = [grad.d_action[0], grad.d_action[1]];
    let vn = (v[0] * v[0] + v[1] * v[1]).sqrt();
    let mv = [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
    let flow_defect = (mv[0] * mv[0] + mv[1] * mv[1]).sqrt() / vn;
    let w = [-v[1] / vn, v[0] / vn];
    let transverse = w[0] * (m[0][0] * w[0] + m[0][1] * w[1]) + w[1] * (m[1][0] * w[0] + m[1][1] * w[1]);

    let symmetry_defect = (plus.action_field_cross(theta1, section) - minus.action_field_cross(theta1, section)).abs();

    let fd_h = 1e-4;
    let probes = [
        theta_star,
        [theta1 + 0.1, section],
        [theta1 - 0.2, section],
        [theta1 + 0.3, lo + 0.25 * (hi - lo)],
        [theta1 - 0.4, lo + 0.75 * (hi - lo)],
    ];
    let mut fd_agreement = 0.0f64;
    for p in probes {
        let hs = hess_gap(p[0], p[1]);
        for (j, e) in [[fd_h, 0.0], [0.0, fd_h]].iter().enumerate() {
            let gp = gap(p[0] + e[0], p[1] + e[1]);
            let gm = gap(p[0] - e[0], p[1] - e[1]);
            for i in 0..2 {
                let fd = (gp[i] - gm[i]) / (2.0 * fd_h);
                fd_agreement = fd_agreement.max((fd - hs[i][j]).abs());
            }
        }
    }

    Ok(SplittingReport {
        theta_star,
        action_star: action,
        matrix: m,
        angles: sym_eigen(m).to_vec(),
        tangential: m[0][0],
        transverse,
        flow_defect,
        gradient_mismatch: (g[0] * g[0] + g[1] * g[1]).sqrt(),
        symmetry_defect,
        fd_agreement,
        degenerate,
        resolution,
    })
}
