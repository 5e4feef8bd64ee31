//! Exact frequency analysis: the rational subspace `F` spanned by a
//! frequency, small-divisor tables `Psi(Q)`, the inverse `Delta*`, and
//! periodic approximations whose lifts form a basis of `Z^n ∩ F`.

mod approx;
mod frequency;
pub mod lattice;
pub mod oracle;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use approx::{periodic_approximations, ApproxOptions, ApproxReport, PeriodicVector};
pub use frequency::{Constant, ExactFrequency, CONSTANTS};

/// `dim F` and an HNF Z-basis of `Z^n ∩ F`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalSpan {
    pub dim: usize,
    pub basis: Vec<Vec<i64>>,
}

impl RationalSpan {
    pub fn basis_i128(&self) -> Vec<Vec<i128>> {
        self.basis
            .iter()
            .map(|r| r.iter().map(|&x| x as i128).collect())
            .collect()
    }

    /// Orthonormal basis of `F` (Gram-Schmidt on the lattice basis).
    pub fn orthonormal(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for b in &self.basis {
            let mut v: Vec<f64> = b.iter().map(|&x| x as f64).collect();
            for _ in 0..2 {
                for q in &out {
                    let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                    for (x, y) in v.iter_mut().zip(q) {
                        *x -= d * y;
                    }
                }
            }
            let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            out.push(v.into_iter().map(|x| x / nrm).collect());
        }
        out
    }
}

/// Integer matrix of the constraints `k . omega = 0` (one row per
/// declared constant with a nonzero column).
fn constraint_rows(w: &ExactFrequency) -> Vec<Vec<i128>> {
    let n = w.n();
    let nc = CONSTANTS.len();
    let mut rows = Vec::new();
    for j in 0..nc {
        let col: Vec<_> = (0..n).map(|i| w.entries()[i][j].clone()).collect();
        if col.iter().all(Zero::is_zero) {
            continue;
        }
        let lcm = col
            .iter()
            .fold(BigInt::from(1), |l, x| l.lcm(x.denom()));
        rows.push(
            col.iter()
                .map(|x| {
                    (x.numer() * (&lcm / x.denom()))
                        .to_i128()
                        .expect("frequency entries have modest size")
                })
                .collect(),
        );
    }
    rows
}

/// `dim F` and a Z-basis of `Z^n ∩ F` by exact integer reduction.
pub fn rational_span(w: &ExactFrequency) -> Result<RationalSpan> {
    let n = w.n();
    // vectors orthogonal to F
    let perp = lattice::kernel(&constraint_rows(w), n)?;
    let basis = if perp.is_empty() {
        (0..n)
            .map(|i| (0..n).map(|j| i128::from(i == j)).collect())
            .collect()
    } else {
        lattice::hermite_rows(&lattice::kernel(&perp, n)?)?
    };
    let basis = basis
        .into_iter()
        .map(|r| r.into_iter().map(|x| x as i64).collect())
        .collect::<Vec<Vec<i64>>>();
    Ok(RationalSpan {
        dim: basis.len(),
        basis,
    })
}

/// First nonzero entry positive.
pub fn sign_normalized(k: &[i64]) -> Vec<i64> {
    match k.iter().find(|&&x| x != 0) {
        Some(&x) if x < 0 => k.iter().map(|y| -y).collect(),
        _ => k.to_vec(),
    }
}

pub fn sup_norm(k: &[i64]) -> u64 {
    k.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0)
}

/// One step of the `Psi` staircase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub q: u32,
    pub psi: f64,
    pub witness: Vec<i64>,
}

/// `Psi(Q) = max{ |k.omega|^{-1} : k in Z^n ∩ F, 0 < |k| <= Q }` for
/// integer `Q <= q_max`, stored as its breakpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiTable {
    pub breakpoints: Vec<Breakpoint>,
    pub q_min: u32,
    pub q_max: u32,
}

/// Candidate comparison: smaller `|k.omega|` wins, exact ties go to the
/// lexicographically smallest sign-normalized vector.
fn better(w: &ExactFrequency, k: &[i64], incumbent: &[i64]) -> bool {
    match w.cmp_abs_dot(k, incumbent) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => k < incumbent,
    }
}

/// Best witness at each exact level `|k| = q` for `q <= q_max`.
fn level_winners(
    w: &ExactFrequency,
    span: &RationalSpan,
    q_max: u32,
) -> Result<Vec<Option<Vec<i64>>>> {
    let n = w.n();
    let d = span.dim;
    // Bound lattice coordinates through the pseudo-inverse of the basis.
    let b: Vec<Vec<f64>> = span
        .basis
        .iter()
        .map(|r| r.iter().map(|&x| x as f64).collect())
        .collect();
    let pinv = pseudo_inverse_rows(&b);
    let bound: Vec<i64> = pinv
        .iter()
        .map(|row| (row.iter().map(|x| x.abs()).sum::<f64>() * q_max as f64 + 1e-9).floor() as i64)
        .collect();
    let mut winners: Vec<Option<Vec<i64>>> = vec![None; q_max as usize + 1];
    let mut c: Vec<i64> = bound.iter().map(|&x| -x).collect();
    let mut k = vec![0i64; n];
    loop {
        for (i, slot) in k.iter_mut().enumerate() {
            *slot = (0..d).map(|j| c[j] * span.basis[j][i]).sum();
        }
        let q = sup_norm(&k);
        if q > 0 && q <= q_max as u64 && sign_normalized(&k) == k {
            let slot = &mut winners[q as usize];
            let replace = match slot {
                None => true,
                Some(inc) => better(w, &k, inc),
            };
            if replace {
                *slot = Some(k.clone());
            }
        }
        // odometer over the coordinate box
        let mut i = 0;
        loop {
            if i == d {
                return Ok(winners);
            }
            c[i] += 1;
            if c[i] <= bound[i] {
                break;
            }
            c[i] = -bound[i];
            i += 1;
        }
    }
}

/// Rows of `(B^T)^+` so that lattice coordinates are `c = pinv . k`.
fn pseudo_inverse_rows(b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    // c = (B B^T)^{-1} B k
    let d = b.len();
    let mut g = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            g[i][j] = b[i].iter().zip(&b[j]).map(|(x, y)| x * y).sum();
        }
    }
    let ginv = invert(&g);
    let n = b[0].len();
    (0..d)
        .map(|i| {
            (0..n)
                .map(|col| (0..d).map(|j| ginv[i][j] * b[j][col]).sum())
                .collect()
        })
        .collect()
}

pub(crate) fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| f64::from(u8::from(i == j))));
            row
        })
        .collect();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .expect("nonempty");
        m.swap(col, p);
        let pv = m[col][col];
        for x in m[col].iter_mut() {
            *x /= pv;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                let src = m[col].clone();
                for (x, y) in m[r].iter_mut().zip(src) {
                    *x -= f * y;
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Build the `Psi` staircase up to `q_max` by full lattice enumeration.
pub fn psi_table(w: &ExactFrequency, q_max: u32) -> Result<PsiTable> {
    let span = rational_span(w)?;
    psi_table_with_span(w, &span, q_max)
}

pub fn psi_table_with_span(w: &ExactFrequency, span: &RationalSpan, q_max: u32) -> Result<PsiTable> {
    let winners = level_winners(w, span, q_max)?;
    let q_min = winners
        .iter()
        .position(Option::is_some)
        .ok_or_else(|| Error::rejected(format!("no lattice vector with |k| <= {q_max}")))?
        as u32;
    let mut breakpoints: Vec<Breakpoint> = Vec::new();
    for (q, win) in winners.iter().enumerate() {
        let Some(k) = win else { continue };
        let improves = match breakpoints.last() {
            None => true,
            Some(bp) => w.cmp_abs_dot(k, &bp.witness) == std::cmp::Ordering::Less,
        };
        if improves {
            breakpoints.push(Breakpoint {
                q: q as u32,
                psi: 1.0 / w.abs_dot(k),
                witness: k.clone(),
            });
        }
    }
    Ok(PsiTable {
        breakpoints,
        q_min,
        q_max,
    })
}

/// `Psi(Q)` and its witness.
pub fn psi(w: &ExactFrequency, q: f64) -> Result<(f64, Vec<i64>)> {
    let span = rational_span(w)?;
    let q_int = q.floor().max(1.0) as u32;
    match psi_table_with_span(w, &span, q_int) {
        Ok(table) => table.lookup(q),
        Err(Error::Rejected(_)) => Err(Error::BelowQmin {
            q,
            q_min: q_min(w)? as f64,
        }),
        Err(e) => Err(e),
    }
}

/// Smallest `|k|` over nonzero `k in Z^n ∩ F`.
pub fn q_min(w: &ExactFrequency) -> Result<u32> {
    let span = rational_span(w)?;
    Ok(span
        .basis
        .iter()
        .map(|b| sup_norm(b) as u32)
        .min()
        .map(|bound| {
            let winners = level_winners(w, &span, bound).expect("bounded enumeration");
            winners.iter().position(Option::is_some).unwrap_or(bound as usize) as u32
        })
        .expect("F is nonzero"))
}

impl PsiTable {
    /// Step containing `Q`.
    pub fn lookup(&self, q: f64) -> Result<(f64, Vec<i64>)> {
        if q < self.q_min as f64 {
            return Err(Error::BelowQmin {
                q,
                q_min: self.q_min as f64,
            });
        }
        if q >= self.q_max as f64 + 1.0 {
            return Err(Error::TableExhausted { q_max: self.q_max });
        }
        let bp = self
            .breakpoints
            .iter()
            .rev()
            .find(|bp| bp.q as f64 <= q)
            .expect("q >= q_min has a step");
        Ok((bp.psi, bp.witness.clone()))
    }

    pub fn psi(&self, q: f64) -> Result<f64> {
        self.lookup(q).map(|x| x.0)
    }

    /// `Delta(Q) = Q Psi(Q)`.
    pub fn delta(&self, q: f64) -> Result<f64> {
        Ok(q * self.psi(q)?)
    }

    /// `Delta*(x) = sup{Q : Delta(Q) <= x}`.
    pub fn delta_star(&self, x: f64) -> Result<f64> {
        let first = &self.breakpoints[0];
        let min = first.q as f64 * first.psi;
        if x < min {
            return Err(Error::BelowRange { x, min });
        }
        let i = self
            .breakpoints
            .iter()
            .rposition(|bp| bp.q as f64 * bp.psi <= x)
            .expect("first breakpoint qualifies");
        let cand = x / self.breakpoints[i].psi;
        match self.breakpoints.get(i + 1) {
            Some(next) => Ok(cand.min(next.q as f64)),
            None if cand <= self.q_max as f64 + 1.0 => Ok(cand),
            None => Err(Error::TableExhausted { q_max: self.q_max }),
        }
    }

    /// Least-squares `log Psi = tau log Q - log gamma` over breakpoints.
    pub fn fit_exponent(&self) -> (f64, f64) {
        let pts: Vec<(f64, f64)> = self
            .breakpoints
            .iter()
            .map(|bp| ((bp.q as f64).ln(), bp.psi.ln()))
            .collect();
        let (tau, intercept) = crate::stats::linear_fit(&pts);
        (tau, (-intercept).exp())
    }
}

/// `Delta*(x)` with a table grown until it covers the answer.
pub fn delta_star(w: &ExactFrequency, x: f64) -> Result<f64> {
    let span = rational_span(w)?;
    let mut q_max = 16u32;
    loop {
        let t = psi_table_with_span(w, &span, q_max)?;
        match t.delta_star(x) {
            Err(Error::TableExhausted { .. }) if q_max < 4096 => q_max *= 2,
            r => return r,
        }
    }
}

/// Outcome of testing `Psi(Q) <= Q^tau / gamma` on all breakpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophReport {
    pub gamma: f64,
    pub tau: f64,
    pub q_max: u32,
    pub holds: bool,
    pub violation: Option<Breakpoint>,
    /// Largest gamma for which the bound holds at the given `tau`.
    pub tight_gamma: f64,
    pub fitted_tau: f64,
    pub fitted_gamma: f64,
}

pub fn dioph_check(w: &ExactFrequency, gamma: f64, tau: f64, q_max: u32) -> Result<DiophReport> {
    let t = psi_table(w, q_max)?;
    // Psi is constant between breakpoints while Q^tau grows, so
    // breakpoints are the only places the bound can first fail.
    let violation = t
        .breakpoints
        .iter()
        .find(|bp| bp.psi > (bp.q as f64).powf(tau) / gamma)
        .cloned();
    let tight_gamma = t
        .breakpoints
        .iter()
        .map(|bp| (bp.q as f64).powf(tau) / bp.psi)
        .fold(f64::INFINITY, f64::min);
    let (fitted_tau, _) = t.fit_exponent();
    let fitted_gamma = t
        .breakpoints
        .iter()
        .map(|bp| (bp.q as f64).powf(fitted_tau) / bp.psi)
        .fold(f64::INFINITY, f64::min);
    Ok(DiophReport {
        gamma,
        tau,
        q_max,
        holds: violation.is_none(),
        violation,
        tight_gamma,
        fitted_tau,
        fitted_gamma,
    })
}

#[cfg(test)]
mod tests;
