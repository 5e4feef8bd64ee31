//! Brute-force reference for `Psi`: full box enumeration in ambient
//! coordinates with membership in `F` decided by a rational nullspace.
//! Shares no code with the lattice path.

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::{sign_normalized, ExactFrequency, CONSTANTS};

/// Rational basis of `{x : x . omega = 0}` via reduced row echelon form.
pub fn orthogonal_complement(w: &ExactFrequency) -> Vec<Vec<BigRational>> {
    let n = w.n();
    let mut m: Vec<Vec<BigRational>> = (0..CONSTANTS.len())
        .map(|j| (0..n).map(|i| w.entries()[i][j].clone()).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                let row = m[r].clone();
                for (x, y) in m[i].iter_mut().zip(row) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (0..n)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![BigRational::zero(); n];
            v[free] = BigRational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[row][free].clone();
            }
            v
        })
        .collect()
}

/// Complement vectors scaled to integers.
fn integer_complement(w: &ExactFrequency) -> Vec<Vec<i128>> {
    orthogonal_complement(w)
        .into_iter()
        .map(|v| {
            let l = v
                .iter()
                .fold(num_bigint::BigInt::from(1), |l, x| num_integer::Integer::lcm(&l, x.denom()));
            v.iter()
                .map(|x| (x.numer() * (&l / x.denom())).to_i128().expect("small entries"))
                .collect()
        })
        .collect()
}

fn in_span(perp: &[Vec<i128>], k: &[i64]) -> bool {
    perp.iter()
        .all(|v| v.iter().zip(k).map(|(a, &b)| a * b as i128).sum::<i128>() == 0)
}

/// `(Psi(Q), witness)` by enumerating `[-Q, Q]^n`, or `None` when no
/// nonzero lattice vector fits.
pub fn psi_naive(w: &ExactFrequency, q: u32) -> Option<(f64, Vec<i64>)> {
    psi_naive_all(w, q).pop().flatten()
}

/// `Psi(Q)` for every integer `Q = 0..=q_max` from one box enumeration.
/// Selection compares plain float dot products; the reported value is
/// `1 / |k . omega|` of the winner at full precision.
pub fn psi_naive_all(w: &ExactFrequency, q_max: u32) -> Vec<Option<(f64, Vec<i64>)>> {
    let n = w.n();
    let perp = integer_complement(w);
    let omega = w.values();
    let q = q_max as i64;
    // smallest |k.omega| at each exact sup-norm level
    let mut level: Vec<Option<(f64, Vec<i64>)>> = vec![None; q_max as usize + 1];
    let mut k = vec![-q; n];
    'outer: loop {
        if k.iter().any(|&x| x != 0) && sign_normalized(&k) == k && in_span(&perp, &k) {
            let dot: f64 = k.iter().zip(omega).map(|(&a, b)| a as f64 * b).sum();
            let val = dot.abs();
            let lv = k.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0) as usize;
            let take = match &level[lv] {
                None => true,
                Some((b, wk)) => val < *b || (val == *b && k < *wk),
            };
            if take {
                level[lv] = Some((val, k.clone()));
            }
        }
        let mut i = 0;
        loop {
            if i == n {
                break 'outer;
            }
            k[i] += 1;
            if k[i] <= q {
                break;
            }
            k[i] = -q;
            i += 1;
        }
    }
    let mut out = Vec::with_capacity(level.len());
    let mut best: Option<(f64, Vec<i64>)> = None;
    for cand in level {
        if let Some((v, kk)) = cand {
            let take = match &best {
                None => true,
                Some((b, wk)) => v < *b || (v == *b && kk < *wk),
            };
            if take {
                best = Some((v, kk));
            }
        }
        out.push(best.as_ref().map(|(_, kk)| (1.0 / w.abs_dot(kk), kk.clone())));
    }
    out
}
