//! Randomized measurement of the constants in the product, bracket,
//! composition and flow estimates that the normal-form bounds rely on.
//!
//! Each row reports the largest observed `lhs / rhs` over a seeded corpus.

use rand::SeedableRng;
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::integrator::flow_map;
use crate::error::{Error, Result};
use crate::normalform::sample_points;
use crate::trigpoly::{multi_indices, random_poly, Caps, CompiledHamiltonian, NormMethod};
use crate::TrigPoly;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditOptions {
    pub seed: u64,
    /// Random pairs for the product and bracket estimates.
    pub pairs: usize,
    /// Random (function, map) pairs for the composition estimate.
    pub maps: usize,
    /// Random generators for the flow estimate.
    pub flows: usize,
    /// Highest order checked for products and brackets.
    pub max_order: u32,
    /// Angle points per axis of the grid norm.
    pub grid: usize,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            seed: 7,
            pairs: 50,
            maps: 20,
            flows: 10,
            max_order: 4,
            grid: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityRow {
    /// `lhs <= C rhs` in words.
    pub inequality: String,
    pub order: u32,
    pub samples: usize,
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub rows: Vec<InequalityRow>,
    pub max_constant: f64,
}

impl AuditReport {
    pub fn all_finite(&self) -> bool {
        self.rows.iter().all(|r| r.constant.is_finite())
    }
}

/// Largest `|d^l F_c(z)|` over components `c`, sample points and
/// `|l| <= j`, by nested central differences of step `h`.
pub fn sampled_ck<F>(map: &F, points: &[Vec<f64>], j: u32, h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    fn rec<F: Fn(&[f64]) -> Result<Vec<f64>>>(map: &F, z: &mut [f64], l: &mut [u32], h: f64) -> Result<Vec<f64>> {
        let Some(i) = l.iter().position(|&x| x > 0) else {
            return map(z);
        };
        l[i] -= 1;
        let x = z[i];
        z[i] = x + h;
        let plus = rec(map, z, l, h)?;
        z[i] = x - h;
        let minus = rec(map, z, l, h)?;
        z[i] = x;
        l[i] += 1;
        Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    }
    let mut best = 0.0f64;
    for p in points {
        for mut l in multi_indices(p.len(), j) {
            let mut z = p.clone();
            for v in rec(map, &mut z, &mut l, h)? {
                best = best.max(v.abs());
            }
        }
    }
    Ok(best)
}

fn ratio(lhs: f64, rhs: f64) -> Option<f64> {
    (rhs > 0.0).then(|| lhs / rhs)
}

fn row(inequality: &str, order: u32, ratios: &[f64]) -> InequalityRow {
    InequalityRow {
        inequality: inequality.to_string(),
        order,
        samples: ratios.len(),
        constant: ratios.iter().cloned().fold(0.0, f64::max),
    }
}

/// `|f g|_{C^k} <= C |f|_{C^k} |g|_{C^k}` for `k = 0..=max_order` and
/// `|{f, g}|_{C^(k-1)} <= C |f|_{C^k} |g|_{C^k}` for `k = 1..=max_order`,
/// on the same random pairs, n = 2.
pub fn product_and_bracket_constants(opts: &AuditOptions) -> Result<Vec<InequalityRow>> {
    if opts.max_order == 0 {
        return Err(Error::rejected("audit max_order must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let norm = NormMethod::Grid { m: opts.grid };
    let caps = Caps::new(3, 2);
    let pairs: Vec<(TrigPoly, TrigPoly)> = (0..opts.pairs)
        .map(|_| {
            let f = random_poly(&mut rng, 2, 1.0, caps, 4, 1.0);
            (f, random_poly(&mut rng, 2, 1.0, caps, 4, 1.0))
        })
        .collect();
    let kmax = opts.max_order;
    let measured: Vec<(Vec<f64>, Vec<f64>)> = pairs
        .par_iter()
        .map(|(f, g)| -> Result<_> {
            let [nf, ng, nfg] = [f, g, &f.mul(g)?].map(|p| p.ck_norms_on(kmax, norm, 1.0));
            let nb = f.poisson_bracket(g)?.ck_norms_on(kmax - 1, norm, 1.0);
            let k = 0..=kmax as usize;
            let prod = k.clone().map(|k| nfg[k] / (nf[k] * ng[k])).collect();
            let bracket = k.skip(1).map(|k| nb[k - 1] / (nf[k] * ng[k])).collect();
            Ok((prod, bracket))
        })
        .collect::<Result<_>>()?;
    let column = |k: usize, bracket: bool| -> Vec<f64> {
        measured
            .iter()
            .map(|(p, b)| if bracket { b[k - 1] } else { p[k] })
            .filter(|c| c.is_finite())
            .collect()
    };
    let mut rows: Vec<InequalityRow> = (0..=kmax)
        .map(|k| row("|fg|_k <= C |f|_k |g|_k", k, &column(k as usize, false)))
        .collect();
    rows.extend((1..=kmax).map(|k| row("|{f,g}|_(k-1) <= C |f|_k |g|_k", k, &column(k as usize, true))));
    Ok(rows)
}

/// `|F o G|_{C^k} <= C |F|_{C^k} |G|_{C^k}^k` for `k = 0..=3`, n = 1, with
/// `G = Id + g` and `|G|_{C^k}` taken as `1 + |g|_{C^k}`.
pub fn composition_constants(opts: &AuditOptions) -> Result<Vec<InequalityRow>> {
    const ORDERS: u32 = 3;
    const R_SAMPLE: f64 = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(2));
    let norm = NormMethod::Grid { m: opts.grid };
    let points = sample_points(1, R_SAMPLE, 6);
    let mut ratios = vec![Vec::new(); ORDERS as usize + 1];
    for _ in 0..opts.maps {
        let f: TrigPoly = random_poly(&mut rng, 1, 1.0, Caps::new(3, 2), 4, 1.0);
        let g: [TrigPoly; 2] = [
            random_poly(&mut rng, 1, 1.0, Caps::new(2, 1), 3, 0.05),
            random_poly(&mut rng, 1, 1.0, Caps::new(2, 1), 3, 0.05),
        ];
        let fc = CompiledHamiltonian::new(&f);
        let gc = [CompiledHamiltonian::new(&g[0]), CompiledHamiltonian::new(&g[1])];
        let composed = |z: &[f64]| -> Result<Vec<f64>> {
            let theta = z[0] + gc[0].value(&z[..1], &z[1..]);
            let action = z[1] + gc[1].value(&z[..1], &z[1..]);
            if action.abs() > 1.0 {
                return Err(Error::Domain { norm: action.abs(), radius: 1.0 });
            }
            Ok(vec![fc.value(&[theta], &[action])])
        };
        for k in 0..=ORDERS {
            let lhs = sampled_ck(&composed, &points, k, 5e-3)?;
            let gk = 1.0 + g[0].ck_norm_on(k, norm, R_SAMPLE).max(g[1].ck_norm_on(k, norm, R_SAMPLE));
            if let Some(c) = ratio(lhs, f.ck_norm(k, norm) * gk.powi(k as i32)) {
                ratios[k as usize].push(c);
            }
        }
    }
    Ok((0..=ORDERS)
        .map(|k| row("|F o G|_k <= C |F|_k |G|_k^k", k, &ratios[k as usize]))
        .collect())
}

/// `|X^1_f - Id|_{C^j} <= C |X_f|_{C^j}` for `j = 0..=2`, n = 1.
pub fn flow_constants(opts: &AuditOptions) -> Result<Vec<InequalityRow>> {
    const ORDERS: u32 = 2;
    const R_SAMPLE: f64 = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(3));
    let norm = NormMethod::Grid { m: opts.grid };
    let points = sample_points(1, R_SAMPLE, 5);
    let mut ratios = vec![Vec::new(); ORDERS as usize + 1];
    for _ in 0..opts.flows {
        let f: TrigPoly = random_poly(&mut rng, 1, 1.0, Caps::new(3, 2), 4, 0.01);
        let h = CompiledHamiltonian::new(&f);
        let displacement = |z: &[f64]| -> Result<Vec<f64>> {
            let y = flow_map(&h, z, 1.0, 8)?;
            Ok(y.iter().zip(z).map(|(a, b)| a - b).collect())
        };
        let fields = [f.d_theta(0), f.d_action(0)];
        for j in 0..=ORDERS {
            let lhs = sampled_ck(&displacement, &points, j, 1e-3)?;
            let field = fields
                .iter()
                .map(|d| d.ck_norm_on(j, norm, R_SAMPLE))
                .fold(0.0, f64::max);
            if let Some(c) = ratio(lhs, field) {
                ratios[j as usize].push(c);
            }
        }
    }
    Ok((0..=ORDERS)
        .map(|j| row("|X^1_f - Id|_j <= C |X_f|_j", j, &ratios[j as usize]))
        .collect())
}

/// Every check above on the corpus described by `opts`.
pub fn run_audit(opts: &AuditOptions) -> Result<AuditReport> {
    if opts.grid < 8 {
        return Err(Error::rejected("audit grid needs at least 8 points per axis"));
    }
    let mut rows = product_and_bracket_constants(opts)?;
    rows.extend(composition_constants(opts)?);
    rows.extend(flow_constants(opts)?);
    for r in &rows {
        log::debug!("{} (k = {}): C = {:.3e}", r.inequality, r.order, r.constant);
    }
    let max_constant = rows.iter().map(|r| r.constant).fold(0.0, f64::max);
    Ok(AuditReport { rows, max_constant })
}
