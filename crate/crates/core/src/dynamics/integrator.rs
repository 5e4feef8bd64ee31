//! One-step schemes for `z' = (dH/dI, -dH/dtheta)`, `z = (theta, I)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trigpoly::{CompiledHamiltonian, Gradient};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Symplectic, second order.
    ImplicitMidpoint,
    /// Two-stage Gauss-Legendre: symplectic, fourth order.
    Gauss4,
    /// Classical explicit Runge-Kutta, not symplectic.
    Rk4,
}

/// Fixed-point tolerance for the implicit schemes.
pub const FIXED_POINT_TOL: f64 = 1e-13;
const MAX_ITER: usize = 200;

/// Scratch space reused across steps.
pub struct Stepper<'a, S: Scalar> {
    h: &'a CompiledHamiltonian<S>,
    scheme: Scheme,
    grad: Gradient<S>,
}

impl<'a, S: Scalar> Stepper<'a, S> {
    pub fn new(h: &'a CompiledHamiltonian<S>, scheme: Scheme) -> Self {
        Stepper {
            h,
            scheme,
            grad: Gradient::default(),
        }
    }

    pub fn field(&mut self, z: &[S], out: &mut [S]) {
        let n = self.h.n();
        self.h.gradient(&z[..n], &z[n..], &mut self.grad);
        for i in 0..n {
            out[i] = self.grad.d_action[i];
            out[n + i] = -self.grad.d_theta[i];
        }
    }

    /// Advance `z` by `dt` in place.
    pub fn step(&mut self, z: &mut [S], dt: S) -> Result<()> {
        match self.scheme {
            Scheme::ImplicitMidpoint => self.midpoint(z, dt),
            Scheme::Gauss4 => self.gauss4(z, dt),
            Scheme::Rk4 => {
                self.rk4(z, dt);
                Ok(())
            }
        }
    }

    fn midpoint(&mut self, z: &mut [S], dt: S) -> Result<()> {
        let m = z.len();
        let half = S::of(0.5);
        let mut f = vec![S::zero(); m];
        self.field(z, &mut f);
        let mut z1: Vec<S> = (0..m).map(|i| z[i] + dt * f[i]).collect();
        let mut mid = vec![S::zero(); m];
        let tol = S::of(FIXED_POINT_TOL);
        for _ in 0..MAX_ITER {
            for i in 0..m {
                mid[i] = half * (z[i] + z1[i]);
            }
            self.field(&mid, &mut f);
            let mut change = S::zero();
            for i in 0..m {
                let next = z[i] + dt * f[i];
                change = change.max((next - z1[i]).abs() / (S::one() + next.abs()));
                z1[i] = next;
            }
            if change <= tol {
                z.copy_from_slice(&z1);
                return Ok(());
            }
        }
        Err(Error::StepSize {
            step: dt.to_f(),
            residual: f64::NAN,
        })
    }

    fn gauss4(&mut self, z: &mut [S], dt: S) -> Result<()> {
        let m = z.len();
        let r3 = S::of(3f64.sqrt() / 6.0);
        let q = S::of(0.25);
        let a = [[q, q - r3], [q + r3, q]];
        let mut k1 = vec![S::zero(); m];
        self.field(z, &mut k1);
        let mut k2 = k1.clone();
        let mut y = vec![S::zero(); m];
        let mut n1 = vec![S::zero(); m];
        let mut n2 = vec![S::zero(); m];
        let tol = S::of(FIXED_POINT_TOL);
        for _ in 0..MAX_ITER {
            for i in 0..m {
                y[i] = z[i] + dt * (a[0][0] * k1[i] + a[0][1] * k2[i]);
            }
            self.field(&y, &mut n1);
            for i in 0..m {
                y[i] = z[i] + dt * (a[1][0] * k1[i] + a[1][1] * k2[i]);
            }
            self.field(&y, &mut n2);
            let mut change = S::zero();
            for i in 0..m {
                change = change
                    .max((dt * (n1[i] - k1[i])).abs() / (S::one() + z[i].abs()))
                    .max((dt * (n2[i] - k2[i])).abs() / (S::one() + z[i].abs()));
            }
            std::mem::swap(&mut k1, &mut n1);
            std::mem::swap(&mut k2, &mut n2);
            if change <= tol {
                let half = S::of(0.5);
                for i in 0..m {
                    z[i] += dt * half * (k1[i] + k2[i]);
                }
                return Ok(());
            }
        }
        Err(Error::StepSize {
            step: dt.to_f(),
            residual: f64::NAN,
        })
    }

    fn rk4(&mut self, z: &mut [S], dt: S) {
        let m = z.len();
        let half = S::of(0.5);
        let mut k1 = vec![S::zero(); m];
        let mut k2 = vec![S::zero(); m];
        let mut k3 = vec![S::zero(); m];
        let mut k4 = vec![S::zero(); m];
        let mut y = vec![S::zero(); m];
        self.field(z, &mut k1);
        for i in 0..m {
            y[i] = z[i] + half * dt * k1[i];
        }
        self.field(&y, &mut k2);
        for i in 0..m {
            y[i] = z[i] + half * dt * k2[i];
        }
        self.field(&y, &mut k3);
        for i in 0..m {
            y[i] = z[i] + dt * k3[i];
        }
        self.field(&y, &mut k4);
        let six = S::of(6.0);
        let two = S::of(2.0);
        for i in 0..m {
            z[i] += dt / six * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
    }
}

/// Time-`t` map of `h` by `steps` Gauss steps; fails if the actions leave
/// `B_R` on the way.
pub fn flow_map<S: Scalar>(
    h: &CompiledHamiltonian<S>,
    z: &[S],
    t: S,
    steps: usize,
) -> Result<Vec<S>> {
    let n = h.n();
    let mut st = Stepper::new(h, Scheme::Gauss4);
    let mut y = z.to_vec();
    let dt = t / S::of_usize(steps.max(1));
    for s in 0..steps.max(1) {
        st.step(&mut y, dt)?;
        if !h.in_domain(&y[n..]) {
            return Err(Error::FlowEscape {
                time: (dt * S::of_usize(s + 1)).to_f(),
            });
        }
    }
    Ok(y)
}
