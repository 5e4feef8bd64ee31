use num_complex::Complex;

use super::{is_half_space, TrigTaylorPoly};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

impl<S: Scalar> TrigTaylorPoly<S> {
    fn check_domain(&self, action: &[S]) -> Result<()> {
        let norm = action.iter().fold(S::zero(), |m, x| m.max(x.abs()));
        if norm > self.radius() * S::of(1.0 + 1e-12) {
            return Err(Error::Domain {
                norm: norm.to_f(),
                radius: self.radius().to_f(),
            });
        }
        Ok(())
    }

    /// Full complex Fourier-Taylor sum. Its imaginary part is round-off.
    pub fn evaluate_complex(&self, theta: &[S], action: &[S]) -> Result<Complex<S>> {
        if theta.len() != self.n() || action.len() != self.n() {
            return Err(Error::rejected("evaluation point has wrong dimension"));
        }
        self.check_domain(action)?;
        let mut acc = Complex::new(S::zero(), S::zero());
        for (k, cp) in self.modes() {
            let phase: S = k
                .iter()
                .zip(theta)
                .map(|(&ki, &t)| S::of(ki as f64) * t)
                .sum::<S>()
                * S::two_pi();
            acc += cp.eval(action) * Complex::new(phase.cos(), phase.sin());
        }
        Ok(acc)
    }

    pub fn evaluate(&self, theta: &[S], action: &[S]) -> Result<S> {
        Ok(self.evaluate_complex(theta, action)?.re)
    }
}

/// Flattened evaluator for value and gradient, used inside integrators.
///
/// Only one representative of each `+-k` pair is kept, with weight 2, so the
/// real part is summed directly.
#[derive(Clone, Debug)]
pub struct CompiledHamiltonian<S> {
    n: usize,
    kmax: usize,
    dmax: usize,
    radius: S,
    ks: Vec<i32>,
    alphas: Vec<u32>,
    coeffs: Vec<Complex<S>>,
}

/// Value and gradient at one point.
#[derive(Clone, Debug, Default)]
pub struct Gradient<S> {
    pub value: S,
    pub d_theta: Vec<S>,
    pub d_action: Vec<S>,
}

impl<S: Scalar> CompiledHamiltonian<S> {
    pub fn new(f: &TrigTaylorPoly<S>) -> Self {
        let n = f.n();
        let mut ks = Vec::new();
        let mut alphas = Vec::new();
        let mut coeffs = Vec::new();
        for (k, a, c) in f.terms() {
            if !is_half_space(k) {
                continue;
            }
            let w = if k.iter().all(|&x| x == 0) { 1.0 } else { 2.0 };
            ks.extend_from_slice(k);
            alphas.extend_from_slice(a);
            coeffs.push(c * S::of(w));
        }
        CompiledHamiltonian {
            n,
            kmax: f.mode_extent() as usize,
            dmax: f.degree() as usize,
            radius: f.radius(),
            ks,
            alphas,
            coeffs,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> S {
        self.radius
    }

    pub fn in_domain(&self, action: &[S]) -> bool {
        action.iter().all(|x| x.abs() <= self.radius)
    }

    fn tables(&self, theta: &[S], action: &[S]) -> (Vec<Complex<S>>, Vec<S>) {
        let (n, kw, dw) = (self.n, 2 * self.kmax + 1, self.dmax + 1);
        let mut e = vec![Complex::new(S::one(), S::zero()); n * kw];
        for i in 0..n {
            for j in 0..kw {
                let k = j as f64 - self.kmax as f64;
                let ph = S::two_pi() * S::of(k) * theta[i];
                e[i * kw + j] = Complex::new(ph.cos(), ph.sin());
            }
        }
        let mut p = vec![S::one(); n * dw];
        for i in 0..n {
            for d in 1..dw {
                p[i * dw + d] = p[i * dw + d - 1] * action[i];
            }
        }
        (e, p)
    }

    pub fn value(&self, theta: &[S], action: &[S]) -> S {
        let (e, p) = self.tables(theta, action);
        let (n, kw, dw) = (self.n, 2 * self.kmax + 1, self.dmax + 1);
        let mut acc = S::zero();
        for (t, c) in self.coeffs.iter().enumerate() {
            let mut z = *c;
            let mut mono = S::one();
            for i in 0..n {
                let k = self.ks[t * n + i];
                z *= e[i * kw + (k + self.kmax as i32) as usize];
                mono *= p[i * dw + self.alphas[t * n + i] as usize];
            }
            acc += z.re * mono;
        }
        acc
    }

    /// Value and full gradient.
    pub fn gradient(&self, theta: &[S], action: &[S], out: &mut Gradient<S>) {
        let (e, p) = self.tables(theta, action);
        let (n, kw, dw) = (self.n, 2 * self.kmax + 1, self.dmax + 1);
        out.value = S::zero();
        out.d_theta.clear();
        out.d_theta.resize(n, S::zero());
        out.d_action.clear();
        out.d_action.resize(n, S::zero());
        let tp = S::two_pi();
        for (t, c) in self.coeffs.iter().enumerate() {
            let mut z = *c;
            for i in 0..n {
                let k = self.ks[t * n + i];
                z *= e[i * kw + (k + self.kmax as i32) as usize];
            }
            let alpha = &self.alphas[t * n..(t + 1) * n];
            let mut mono = S::one();
            for i in 0..n {
                mono *= p[i * dw + alpha[i] as usize];
            }
            out.value += z.re * mono;
            // d/dtheta_i of Re(z e^{..}) = Re(2 pi i k_i z) = -2 pi k_i Im z
            for i in 0..n {
                let k = self.ks[t * n + i];
                if k != 0 {
                    out.d_theta[i] -= tp * S::of(k as f64) * z.im * mono;
                }
            }
            for i in 0..n {
                if alpha[i] == 0 {
                    continue;
                }
                let mut m = S::of(alpha[i] as f64);
                for j in 0..n {
                    let e = if j == i { alpha[j] - 1 } else { alpha[j] };
                    m *= p[j * dw + e as usize];
                }
                out.d_action[i] += z.re * m;
            }
        }
    }

    /// Hamiltonian vector field `(dH/dI, -dH/dtheta)`.
    pub fn vector_field(&self, theta: &[S], action: &[S], dtheta: &mut [S], daction: &mut [S]) {
        let mut g = Gradient::default();
        self.gradient(theta, action, &mut g);
        for i in 0..self.n {
            dtheta[i] = g.d_action[i];
            daction[i] = -g.d_theta[i];
        }
    }
}
