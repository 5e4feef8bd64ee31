//! Sparse Fourier-Taylor polynomials on `T^n x B_R`.
//!
//! A function is stored as `sum_k c_k(I) e^{2 pi i k.theta}` where each
//! `c_k` is a complex polynomial in the actions. Angles live in `R^n / Z^n`,
//! so every factor of `2 pi` appears in derivatives, never in coefficients.

mod eval;
mod io;
mod norm;

use std::collections::BTreeMap;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use eval::{CompiledHamiltonian, Gradient};
pub use norm::{multi_indices, NormMethod};

/// Integer Fourier mode `k`.
pub type Wavevector = SmallVec<[i32; 4]>;
/// Monomial exponent `alpha` of `I^alpha`.
pub type Exponent = SmallVec<[u32; 4]>;

/// Coefficients smaller than this fraction of the largest one are dropped.
pub const CANONICAL_REL_TOL: f64 = 1e-15;

/// Hard truncation limits: `|k|_inf <= modes` and `|alpha| <= degree`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub modes: u32,
    pub degree: u32,
}

impl Caps {
    pub fn new(modes: u32, degree: u32) -> Self {
        Caps { modes, degree }
    }

    pub fn max(self, other: Caps) -> Caps {
        Caps {
            modes: self.modes.max(other.modes),
            degree: self.degree.max(other.degree),
        }
    }
}

pub fn sup_norm_i(k: &[i32]) -> u32 {
    k.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0)
}

fn degree(alpha: &[u32]) -> u32 {
    alpha.iter().sum()
}

/// First nonzero entry positive (or `k = 0`).
pub fn is_half_space(k: &[i32]) -> bool {
    k.iter().find(|&&x| x != 0).is_none_or(|&x| x > 0)
}

/// Complex polynomial in the actions.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffPoly<S> {
    terms: BTreeMap<Exponent, Complex<S>>,
}

impl<S: Scalar> Default for CoeffPoly<S> {
    fn default() -> Self {
        CoeffPoly {
            terms: BTreeMap::new(),
        }
    }
}

impl<S: Scalar> CoeffPoly<S> {
    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Complex<S>)> {
        self.terms.iter()
    }

    pub fn get(&self, alpha: &[u32]) -> Complex<S> {
        self.terms.get(alpha).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|a| degree(a)).max().unwrap_or(0)
    }

    fn add_term(&mut self, alpha: Exponent, c: Complex<S>) {
        *self.terms.entry(alpha).or_default() += c;
    }

    /// Evaluate at a real action point.
    pub fn eval(&self, action: &[S]) -> Complex<S> {
        let mut acc = Complex::new(S::zero(), S::zero());
        for (alpha, c) in &self.terms {
            let mut mono = S::one();
            for (x, &e) in action.iter().zip(alpha.iter()) {
                mono *= x.powi(e as i32);
            }
            acc += c * mono;
        }
        acc
    }

    /// `sum |c| R^{|alpha|}`, an upper bound of the sup over `B_R`.
    pub fn mass(&self, radius: S) -> S {
        self.terms
            .iter()
            .map(|(a, c)| c.norm() * radius.powi(degree(a) as i32))
            .sum()
    }
}

/// Real-valued function on `T^n x B_R` in sparse Fourier-Taylor form.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigTaylorPoly<S> {
    n: usize,
    radius: S,
    caps: Caps,
    modes: BTreeMap<Wavevector, CoeffPoly<S>>,
    truncation: S,
}

/// Single stored coefficient `(k, alpha, c)`.
pub type Term<S> = (Wavevector, Exponent, Complex<S>);

impl<S: Scalar> TrigTaylorPoly<S> {
    pub fn zero(n: usize, radius: S, caps: Caps) -> Self {
        TrigTaylorPoly {
            n,
            radius,
            caps,
            modes: BTreeMap::new(),
            truncation: S::zero(),
        }
    }

    /// Build from raw terms. Terms outside the caps are dropped and their
    /// mass is recorded; duplicate keys are summed.
    pub fn from_terms<I>(n: usize, radius: S, caps: Caps, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = Term<S>>,
    {
        let mut p = Self::zero(n, radius, caps);
        for (k, alpha, c) in terms {
            if k.len() != n || alpha.len() != n {
                return Err(Error::rejected(format!(
                    "term has dimension ({}, {}), polynomial has n = {n}",
                    k.len(),
                    alpha.len()
                )));
            }
            p.push(k, alpha, c);
        }
        p.canonicalize();
        Ok(p)
    }

    pub fn constant(n: usize, radius: S, caps: Caps, value: S) -> Self {
        let mut p = Self::zero(n, radius, caps);
        p.push(zeros_i(n), zeros_u(n), Complex::new(value, S::zero()));
        p.canonicalize();
        p
    }

    /// `c * I^alpha`.
    pub fn monomial(n: usize, radius: S, caps: Caps, alpha: &[u32], c: S) -> Self {
        let mut p = Self::zero(n, radius, caps);
        p.push(zeros_i(n), alpha.into(), Complex::new(c, S::zero()));
        p.canonicalize();
        p
    }

    /// `w . I`, the linear integrable Hamiltonian with frequency `w`.
    pub fn linear(radius: S, caps: Caps, w: &[S]) -> Self {
        let n = w.len();
        let mut p = Self::zero(n, radius, caps);
        for (i, &wi) in w.iter().enumerate() {
            let mut alpha = zeros_u(n);
            alpha[i] = 1;
            p.push(zeros_i(n), alpha, Complex::new(wi, S::zero()));
        }
        p.canonicalize();
        p
    }

    /// `amp * cos(2 pi k.theta) * I^alpha`.
    pub fn cos_mode(n: usize, radius: S, caps: Caps, k: &[i32], alpha: &[u32], amp: S) -> Self {
        let half = amp / S::of(2.0);
        Self::pair(n, radius, caps, k, alpha, Complex::new(half, S::zero()))
    }

    /// `amp * sin(2 pi k.theta) * I^alpha`.
    pub fn sin_mode(n: usize, radius: S, caps: Caps, k: &[i32], alpha: &[u32], amp: S) -> Self {
        let half = amp / S::of(2.0);
        Self::pair(n, radius, caps, k, alpha, Complex::new(S::zero(), -half))
    }

    /// `c e^{2 pi i k.theta} + conj(c) e^{-2 pi i k.theta}` times `I^alpha`.
    fn pair(n: usize, radius: S, caps: Caps, k: &[i32], alpha: &[u32], c: Complex<S>) -> Self {
        let mut p = Self::zero(n, radius, caps);
        let kv: Wavevector = k.into();
        if kv.iter().all(|&x| x == 0) {
            p.push(kv, alpha.into(), Complex::new(S::of(2.0) * c.re, S::zero()));
        } else {
            let neg: Wavevector = kv.iter().map(|x| -x).collect();
            p.push(kv, alpha.into(), c);
            p.push(neg, alpha.into(), c.conj());
        }
        p.canonicalize();
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> S {
        self.radius
    }

    pub fn caps(&self) -> Caps {
        self.caps
    }

    /// Dropped coefficient mass accumulated while building this value.
    pub fn truncation(&self) -> S {
        self.truncation
    }

    pub fn with_radius(mut self, radius: S) -> Self {
        self.radius = radius;
        self
    }

    /// Re-truncate to smaller caps, or raise the caps for later operations.
    pub fn with_caps(mut self, caps: Caps) -> Self {
        self.caps = caps;
        let modes = std::mem::take(&mut self.modes);
        for (k, cp) in modes {
            for (alpha, c) in cp.terms {
                self.push(k.clone(), alpha, c);
            }
        }
        self.canonicalize();
        self
    }

    pub fn modes(&self) -> impl Iterator<Item = (&Wavevector, &CoeffPoly<S>)> {
        self.modes.iter()
    }

    pub fn coeff(&self, k: &[i32]) -> Option<&CoeffPoly<S>> {
        self.modes.get(k)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Wavevector, &Exponent, &Complex<S>)> {
        self.modes
            .iter()
            .flat_map(|(k, cp)| cp.terms.iter().map(move |(a, c)| (k, a, c)))
    }

    pub fn num_terms(&self) -> usize {
        self.modes.values().map(CoeffPoly::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    /// Largest `|k|_inf` actually present.
    pub fn mode_extent(&self) -> u32 {
        self.modes.keys().map(|k| sup_norm_i(k)).max().unwrap_or(0)
    }

    /// Largest `|alpha|` actually present.
    pub fn degree(&self) -> u32 {
        self.modes.values().map(CoeffPoly::degree).max().unwrap_or(0)
    }

    /// `sum |c| R^{|alpha|}`: bounds the sup norm on the domain.
    pub fn coeff_mass(&self) -> S {
        self.modes.values().map(|cp| cp.mass(self.radius)).sum()
    }

    pub fn max_coeff(&self) -> S {
        self.terms().map(|(_, _, c)| c.norm()).fold(S::zero(), S::max)
    }

    /// Largest deviation from `c_{-k} = conj(c_k)`.
    pub fn hermitian_defect(&self) -> S {
        let mut worst = S::zero();
        for (k, a, c) in self.terms() {
            let neg: Wavevector = k.iter().map(|x| -x).collect();
            let other = self.modes.get(&neg).map(|cp| cp.get(a)).unwrap_or_default();
            worst = worst.max((c - other.conj()).norm());
        }
        worst
    }

    /// Add a term, dropping it (with mass recorded) when outside the caps.
    fn push(&mut self, k: Wavevector, alpha: Exponent, c: Complex<S>) {
        if sup_norm_i(&k) > self.caps.modes || degree(&alpha) > self.caps.degree {
            self.truncation += c.norm() * self.radius.powi(degree(&alpha) as i32);
            return;
        }
        self.modes.entry(k).or_default().add_term(alpha, c);
    }

    /// Drop negligible coefficients and empty modes.
    fn canonicalize(&mut self) {
        let cut = self.max_coeff() * S::of(CANONICAL_REL_TOL);
        let radius = self.radius;
        let mut dropped = S::zero();
        self.modes.retain(|_, cp| {
            cp.terms.retain(|a, c| {
                let keep = c.norm() > cut && c.norm() > S::zero();
                if !keep {
                    dropped += c.norm() * radius.powi(degree(a) as i32);
                }
                keep
            });
            !cp.terms.is_empty()
        });
        self.truncation += dropped;
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::rejected(format!(
                "dimension mismatch: {} vs {}",
                self.n, other.n
            )));
        }
        let scale = self.radius.abs().max(other.radius.abs());
        if (self.radius - other.radius).abs() > scale * S::of(1e-12) {
            return Err(Error::rejected(format!(
                "radius mismatch: {} vs {}",
                self.radius, other.radius
            )));
        }
        Ok(())
    }

    fn empty_like(&self, other: &Self) -> Self {
        Self::zero(self.n, self.radius, self.caps.max(other.caps))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.empty_like(other);
        for (k, a, c) in self.terms().chain(other.terms()) {
            out.push(k.clone(), a.clone(), *c);
        }
        out.truncation += self.truncation + other.truncation;
        out.canonicalize();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-S::one()))
    }

    pub fn scale(&self, s: S) -> Self {
        let mut out = self.clone();
        for cp in out.modes.values_mut() {
            for c in cp.terms.values_mut() {
                *c *= s;
            }
        }
        out.truncation = self.truncation * s.abs();
        if s == S::zero() {
            out.modes.clear();
        }
        out
    }

    /// Pointwise product truncated to the combined caps.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.empty_like(other);
        let caps = out.caps;
        let radius = self.radius;
        for (k1, p1) in &self.modes {
            for (k2, p2) in &other.modes {
                let k: Wavevector = k1.iter().zip(k2.iter()).map(|(a, b)| a + b).collect();
                if sup_norm_i(&k) > caps.modes {
                    out.truncation += p1.mass(radius) * p2.mass(radius);
                    continue;
                }
                for (a1, c1) in &p1.terms {
                    for (a2, c2) in &p2.terms {
                        let a: Exponent = a1.iter().zip(a2.iter()).map(|(x, y)| x + y).collect();
                        out.push(k.clone(), a, c1 * c2);
                    }
                }
            }
        }
        out.truncation += self.truncation + other.truncation;
        out.canonicalize();
        Ok(out)
    }

    /// `{f, g} = d_theta f . d_I g - d_I f . d_theta g`.
    pub fn poisson_bracket(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.empty_like(other);
        let caps = out.caps;
        let radius = self.radius;
        let n = self.n;
        let two_pi_i = Complex::new(S::zero(), S::two_pi());
        for (k1, p1) in &self.modes {
            for (k2, p2) in &other.modes {
                let k: Wavevector = k1.iter().zip(k2.iter()).map(|(a, b)| a + b).collect();
                if sup_norm_i(&k) > caps.modes {
                    // Bound of the bracket contribution from this mode pair.
                    let mut bound = S::zero();
                    for (a1, c1) in &p1.terms {
                        for (a2, c2) in &p2.terms {
                            let mut w = S::zero();
                            for i in 0..n {
                                let t = k1[i] as f64 * a2[i] as f64 - a1[i] as f64 * k2[i] as f64;
                                w += S::of(t.abs());
                            }
                            let deg = (degree(a1) + degree(a2)).saturating_sub(1);
                            bound += S::two_pi() * w * c1.norm() * c2.norm() * radius.powi(deg as i32);
                        }
                    }
                    out.truncation += bound;
                    continue;
                }
                for (a1, c1) in &p1.terms {
                    for (a2, c2) in &p2.terms {
                        let base = two_pi_i * c1 * c2;
                        for i in 0..n {
                            let w = k1[i] as i64 * a2[i] as i64 - a1[i] as i64 * k2[i] as i64;
                            if w == 0 {
                                continue;
                            }
                            let mut a: Exponent =
                                a1.iter().zip(a2.iter()).map(|(x, y)| x + y).collect();
                            a[i] -= 1;
                            out.push(k.clone(), a, base * S::of(w as f64));
                        }
                    }
                }
            }
        }
        out.truncation += self.truncation + other.truncation;
        out.canonicalize();
        Ok(out)
    }

    /// `d_theta^{l1} d_I^{l2} f`, exact term by term.
    pub fn derivative(&self, l_theta: &[u32], l_action: &[u32]) -> Result<Self> {
        if l_theta.len() != self.n || l_action.len() != self.n {
            return Err(Error::rejected("derivative order has wrong dimension"));
        }
        let mut out = Self::zero(self.n, self.radius, self.caps);
        let two_pi_i = Complex::new(S::zero(), S::two_pi());
        for (k, cp) in &self.modes {
            let mut fk = Complex::new(S::one(), S::zero());
            for (&ki, &li) in k.iter().zip(l_theta) {
                fk *= (two_pi_i * S::of(ki as f64)).powu(li);
            }
            if fk.norm() == S::zero() {
                continue;
            }
            for (a, c) in &cp.terms {
                let mut fa = 1.0f64;
                let mut na: Exponent = a.clone();
                let mut vanish = false;
                for i in 0..self.n {
                    if l_action[i] > a[i] {
                        vanish = true;
                        break;
                    }
                    for j in 0..l_action[i] {
                        fa *= (a[i] - j) as f64;
                    }
                    na[i] = a[i] - l_action[i];
                }
                if !vanish {
                    out.push(k.clone(), na, c * fk * S::of(fa));
                }
            }
        }
        out.canonicalize();
        out.truncation = self.truncation;
        Ok(out)
    }

    pub fn d_theta(&self, i: usize) -> Self {
        let mut l = vec![0u32; self.n];
        l[i] = 1;
        self.derivative(&l, &vec![0; self.n]).expect("dimension matches")
    }

    pub fn d_action(&self, i: usize) -> Self {
        let mut l = vec![0u32; self.n];
        l[i] = 1;
        self.derivative(&vec![0; self.n], &l).expect("dimension matches")
    }

    /// Keep only modes accepted by `pred`.
    pub fn filter_modes(&self, mut pred: impl FnMut(&[i32]) -> bool) -> Self {
        let mut out = self.clone();
        out.modes.retain(|k, _| pred(k));
        out
    }

    /// Mode-wise map `c_k(I) -> factor(k) c_k(I)`; modes mapped to zero vanish.
    pub fn map_modes(&self, mut factor: impl FnMut(&[i32]) -> Complex<S>) -> Self {
        let mut out = Self::zero(self.n, self.radius, self.caps);
        for (k, cp) in &self.modes {
            let f = factor(k);
            if f.norm() == S::zero() {
                continue;
            }
            for (a, c) in &cp.terms {
                out.push(k.clone(), a.clone(), c * f);
            }
        }
        out.canonicalize();
        out.truncation = self.truncation;
        out
    }

    /// Substitute `I -> r I` (coefficients scaled by `r^{|alpha|}`) and
    /// change the domain radius.
    pub fn rescale_actions(&self, r: S, new_radius: S) -> Self {
        let mut out = Self::zero(self.n, new_radius, self.caps);
        for (k, a, c) in self.terms() {
            out.push(k.clone(), a.clone(), c * r.powi(degree(a) as i32));
        }
        out.canonicalize();
        out
    }

    pub(crate) fn set_truncation(&mut self, t: S) {
        self.truncation = t;
    }

    /// The part independent of `theta`.
    pub fn mean(&self) -> Self {
        self.filter_modes(|k| k.iter().all(|&x| x == 0))
    }

    /// Convert the scalar type (lossy when narrowing).
    pub fn cast<T: Scalar>(&self) -> TrigTaylorPoly<T> {
        let mut out = TrigTaylorPoly::<T>::zero(self.n, T::of(self.radius.to_f()), self.caps);
        for (k, a, c) in self.terms() {
            out.push(
                k.clone(),
                a.clone(),
                Complex::new(T::of(c.re.to_f()), T::of(c.im.to_f())),
            );
        }
        out.truncation = T::of(self.truncation.to_f());
        out
    }
}

pub(crate) fn zeros_i(n: usize) -> Wavevector {
    smallvec::smallvec![0; n]
}

pub(crate) fn zeros_u(n: usize) -> Exponent {
    smallvec::smallvec![0; n]
}

#[cfg(test)]
mod tests;

/// Random real trig polynomial with `terms` conjugate pairs, coefficients
/// uniform in `[-amp, amp]`, `|k|_inf <= caps.modes`, `|alpha| <= caps.degree`.
pub fn random_poly<S: Scalar, R: rand::Rng>(
    rng: &mut R,
    n: usize,
    radius: S,
    caps: Caps,
    terms: usize,
    amp: f64,
) -> TrigTaylorPoly<S> {
    let kc = caps.modes as i32;
    let mut raw = Vec::with_capacity(2 * terms);
    for _ in 0..terms {
        let k: Wavevector = (0..n).map(|_| rng.gen_range(-kc..=kc)).collect();
        let mut alpha = zeros_u(n);
        let deg = rng.gen_range(0..=caps.degree);
        for _ in 0..deg {
            alpha[rng.gen_range(0..n)] += 1;
        }
        let re = S::of(rng.gen_range(-amp..=amp));
        let im = S::of(rng.gen_range(-amp..=amp));
        if k.iter().all(|&x| x == 0) {
            raw.push((k, alpha, Complex::new(re, S::zero())));
        } else {
            let neg: Wavevector = k.iter().map(|x| -x).collect();
            raw.push((k, alpha.clone(), Complex::new(re, im)));
            raw.push((neg, alpha, Complex::new(re, -im)));
        }
    }
    TrigTaylorPoly::from_terms(n, radius, caps, raw).expect("dimensions are consistent")
}
