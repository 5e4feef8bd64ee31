use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{degree, sup_norm_i, TrigTaylorPoly};
use crate::scalar::Scalar;

/// How `|f|_{C^j}` is estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormMethod {
    /// Rigorous coefficient bound.
    UpperBound,
    /// Sampled sup on a uniform angle grid times an action grid that
    /// includes the box corners; `m >= 8` points per axis.
    Grid { m: usize },
}

impl Default for NormMethod {
    fn default() -> Self {
        NormMethod::Grid { m: 16 }
    }
}

/// All `l in N^dim` with `|l| <= j`, in graded lexicographic order.
pub fn multi_indices(dim: usize, j: u32) -> Vec<Vec<u32>> {
    fn rec(dim: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == dim {
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur.push(v);
            rec(dim, left - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, j, &mut Vec::with_capacity(dim), &mut out);
    out.sort_by_key(|l| l.iter().sum::<u32>());
    out
}

impl<S: Scalar> TrigTaylorPoly<S> {
    /// `|f|_{C^j}` on the polynomial's own domain.
    pub fn ck_norm(&self, j: u32, method: NormMethod) -> S {
        self.ck_norm_on(j, method, self.radius())
    }

    /// `|f|_{C^j}` on `T^n x B_r`; `r` may be smaller than the radius.
    pub fn ck_norm_on(&self, j: u32, method: NormMethod, r: S) -> S {
        self.ck_norms_on(j, method, r)[j as usize]
    }

    /// `[|f|_{C^0}, ..., |f|_{C^j}]` on `T^n x B_r` in one pass.
    pub fn ck_norms_on(&self, j: u32, method: NormMethod, r: S) -> Vec<S> {
        let n = self.n();
        let mut by_order = vec![S::zero(); j as usize + 1];
        for l in multi_indices(2 * n, j) {
            let (lt, la) = l.split_at(n);
            if la.iter().sum::<u32>() > self.degree() {
                continue;
            }
            let v = match method {
                NormMethod::UpperBound => self.derivative_bound(lt, la, r),
                NormMethod::Grid { m } => {
                    assert!(m >= 8, "grid norm needs at least 8 points per axis");
                    let d = self.derivative(lt, la).expect("dimension matches");
                    d.grid_sup(m, r)
                }
            };
            let o = l.iter().sum::<u32>() as usize;
            by_order[o] = by_order[o].max(v);
        }
        for o in 1..by_order.len() {
            by_order[o] = by_order[o].max(by_order[o - 1]);
        }
        by_order
    }

    /// Coefficient bound on `sup |d^l f|` over `T^n x B_r`.
    fn derivative_bound(&self, lt: &[u32], la: &[u32], r: S) -> S {
        let order_t: u32 = lt.iter().sum();
        let order_a: u32 = la.iter().sum();
        let mut acc = S::zero();
        for (k, a, c) in self.terms() {
            if lt.iter().zip(k.iter()).any(|(&l, &ki)| l > 0 && ki == 0) {
                continue;
            }
            if la.iter().zip(a.iter()).any(|(&l, &ai)| l > ai) {
                continue;
            }
            let mut ff = 1.0f64;
            for (&l, &ai) in la.iter().zip(a.iter()) {
                for t in 0..l {
                    ff *= (ai - t) as f64;
                }
            }
            let kf = S::two_pi() * S::of(sup_norm_i(k) as f64);
            acc += c.norm()
                * kf.powi(order_t as i32)
                * S::of(ff)
                * r.powi((degree(a) - order_a) as i32);
        }
        acc
    }

    /// Sampled `sup |f|` over `T^n x [-r, r]^n`: `m` angles per axis times
    /// `min(m, 2 d_i + 3)` equispaced actions on axis `i` (corners included),
    /// `d_i` the degree in `I_i`.
    ///
    /// On a uniform angle grid `e^{2 pi i k g / m}` depends on `k mod m`, so
    /// modes are folded into a dense `m^n` array per action point and
    /// summed with a separable DFT.
    pub fn grid_sup(&self, m: usize, r: S) -> S {
        let n = self.n();
        if self.is_zero() {
            return S::zero();
        }
        let size = m.pow(n as u32);
        let folded: Vec<(usize, &[u32], Complex<S>)> = self
            .terms()
            .map(|(k, a, c)| {
                let mut idx = 0usize;
                for &ki in k.iter() {
                    idx = idx * m + ki.rem_euclid(m as i32) as usize;
                }
                (idx, a.as_slice(), *c)
            })
            .collect();
        let twiddle: Vec<Complex<S>> = (0..m)
            .map(|t| {
                let ph = S::two_pi() * S::of(t as f64) / S::of(m as f64);
                Complex::new(ph.cos(), ph.sin())
            })
            .collect();
        // Per action axis: one point if the variable is absent, else
        // min(m, 2 d_i + 3) equispaced points including +-r.
        let mut axis_deg = vec![0usize; n];
        for (_, a, _) in &folded {
            for i in 0..n {
                axis_deg[i] = axis_deg[i].max(a[i] as usize);
            }
        }
        let powers: Vec<Vec<Vec<S>>> = axis_deg
            .iter()
            .map(|&d| {
                let vals: Vec<S> = if d == 0 {
                    vec![S::zero()]
                } else {
                    let na = m.min(2 * d + 3);
                    (0..na)
                        .map(|i| -r + S::of(2.0) * r * S::of(i as f64) / S::of((na - 1) as f64))
                        .collect()
                };
                vals.iter()
                    .map(|&x| (0..=d).map(|e| x.powi(e as i32)).collect())
                    .collect()
            })
            .collect();
        let mut grid = vec![Complex::new(S::zero(), S::zero()); size];
        let mut line = vec![Complex::new(S::zero(), S::zero()); m];
        let mut best = S::zero();
        let mut ai = vec![0usize; n];
        let total_action: usize = powers.iter().map(|p| p.len()).product();
        for flat in 0..total_action {
            let mut rem = flat;
            for (i, slot) in ai.iter_mut().enumerate().rev() {
                *slot = rem % powers[i].len();
                rem /= powers[i].len();
            }
            grid.iter_mut().for_each(|z| *z = Complex::new(S::zero(), S::zero()));
            for (idx, a, c) in &folded {
                let mut mono = S::one();
                for i in 0..n {
                    mono *= powers[i][ai[i]][a[i] as usize];
                }
                grid[*idx] += c * mono;
            }
            // Separable inverse DFT along each axis.
            let mut stride = 1usize;
            for _axis in 0..n {
                let block = stride * m;
                for base in (0..size).step_by(block) {
                    for off in 0..stride {
                        for g in 0..m {
                            let mut s = Complex::new(S::zero(), S::zero());
                            for t in 0..m {
                                s += grid[base + off + t * stride] * twiddle[(t * g) % m];
                            }
                            line[g] = s;
                        }
                        for g in 0..m {
                            grid[base + off + g * stride] = line[g];
                        }
                    }
                }
                stride = block;
            }
            for z in &grid {
                best = best.max(z.re.abs());
            }
        }
        best
    }
}
