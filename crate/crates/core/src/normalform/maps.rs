//! Pointwise evaluation of `Phi = Theta_1 o ... o Theta_N` by integrating
//! each generator flow, and the measurements built on it.

use serde::{Deserialize, Serialize};

use super::{LieGenerator, NormalFormResult};
use crate::dynamics::integrator::flow_map;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trigpoly::{CompiledHamiltonian, Gradient};

/// Gauss steps per unit time for generator flows.
pub const GENERATOR_STEPS: usize = 8;

struct Composed<S> {
    flows: Vec<CompiledHamiltonian<S>>,
}

impl<S: Scalar> Composed<S> {
    fn new(gens: &[LieGenerator<S>]) -> Self {
        Composed {
            flows: gens
                .iter()
                .filter(|g| !g.is_zero())
                .map(|g| CompiledHamiltonian::new(&g.chi))
                .collect(),
        }
    }

    fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut y: Vec<S> = z.iter().map(|&x| S::of(x)).collect();
        for h in self.flows.iter().rev() {
            y = flow_map(h, &y, S::one(), GENERATOR_STEPS)?;
        }
        Ok(y.iter().map(|x| x.to_f()).collect())
    }
}

/// `Phi(z)` for `z = (theta, I)`; angles are not reduced mod 1.
pub fn apply_generators<S: Scalar>(gens: &[LieGenerator<S>], z: &[f64]) -> Result<Vec<f64>> {
    Composed::new(gens).apply(z)
}

/// Tensor grid on `T^n x B_r`: `m` uniform angles per axis (offset from
/// zero) and `m` Chebyshev actions per axis, strictly inside the box.
pub fn sample_points(n: usize, r: f64, m: usize) -> Vec<Vec<f64>> {
    let m = m.max(1);
    let thetas: Vec<f64> = (0..m).map(|i| (i as f64 + 0.37) / m as f64).collect();
    let actions: Vec<f64> = (0..m)
        .map(|i| r * (std::f64::consts::PI * (2 * i + 1) as f64 / (2 * m) as f64).cos())
        .collect();
    let total = m.pow(2 * n as u32);
    (0..total)
        .map(|mut idx| {
            let mut z = Vec::with_capacity(2 * n);
            for axis in 0..2 * n {
                let c = idx % m;
                idx /= m;
                z.push(if axis < n { thetas[c] } else { actions[c] });
            }
            z
        })
        .collect()
}

fn default_per_axis(n: usize) -> usize {
    match n {
        0..=2 => 4,
        3 => 3,
        _ => 2,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapDistanceReport {
    pub j: u32,
    /// Sampled `|Phi - Id|_{C^j}`.
    pub distance: f64,
    pub samples: usize,
    /// Per generator, `sup |X^1_chi - Id| / sup |X_chi|` over the samples.
    pub flow_ratios: Vec<f64>,
    /// Largest of `flow_ratios`: the measured constant in `|X^1 - Id| <= C |X_chi|`.
    pub flow_constant: f64,
}

/// All derivatives up to order `j` of `Phi - Id` at `z` by nested central
/// differences; returns the largest entry.
fn derivative_sup<S: Scalar>(map: &Composed<S>, z: &mut Vec<f64>, l: &mut [u32], h: f64) -> Result<f64> {
    fn rec<S: Scalar>(map: &Composed<S>, z: &mut Vec<f64>, l: &mut [u32], h: f64) -> Result<Vec<f64>> {
        let Some(i) = l.iter().position(|&x| x > 0) else {
            let y = map.apply(z)?;
            return Ok(y.iter().zip(z.iter()).map(|(a, b)| a - b).collect());
        };
        l[i] -= 1;
        let x = z[i];
        z[i] = x + h;
        let plus = rec(map, z, l, h)?;
        z[i] = x - h;
        let minus = rec(map, z, l, h)?;
        z[i] = x;
        l[i] += 1;
        Ok(plus
            .iter()
            .zip(&minus)
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect())
    }
    Ok(rec(map, z, l, h)?.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

/// Sampled `C^j` distance of `Phi_kappa` to the identity on the final
/// domain, plus the flow-versus-field constant of each generator.
pub fn map_distance_report<S: Scalar>(
    result: &NormalFormResult<S>,
    j: u32,
) -> Result<MapDistanceReport> {
    let ledger = &result.ledger;
    if j > ledger.k - ledger.kappa {
        return Err(Error::rejected(format!(
            "C^{j} distance requested but the map is only C^{}",
            ledger.k - ledger.kappa
        )));
    }
    if j > 2 {
        return Err(Error::rejected(
            "sampled map distances are available up to C^2",
        ));
    }
    let n = result.remainder.n();
    let points = sample_points(n, result.final_radius(), default_per_axis(n));
    let map = Composed::new(&result.generators);
    let h = if j <= 1 { 1e-4 } else { 1e-3 };
    let mut distance = 0.0f64;
    for p in &points {
        for l in crate::trigpoly::multi_indices(2 * n, j) {
            let mut l = l;
            let mut z = p.clone();
            distance = distance.max(derivative_sup(&map, &mut z, &mut l, h)?);
        }
    }
    let mut flow_ratios = Vec::new();
    for g in result.generators.iter().filter(|g| !g.is_zero()) {
        let single = Composed::<S>::new(std::slice::from_ref(g));
        let mut grad = Gradient::default();
        let (mut moved, mut field) = (0.0f64, 0.0f64);
        for p in &points {
            let y = single.apply(p)?;
            moved = y.iter().zip(p).fold(moved, |m, (a, b)| m.max((a - b).abs()));
            let ps: Vec<S> = p.iter().map(|&x| S::of(x)).collect();
            single.flows[0].gradient(&ps[..n], &ps[n..], &mut grad);
            for i in 0..n {
                field = field
                    .max(grad.d_theta[i].to_f().abs())
                    .max(grad.d_action[i].to_f().abs());
            }
        }
        if field > 0.0 {
            flow_ratios.push(moved / field);
        }
    }
    let flow_constant = flow_ratios.iter().cloned().fold(0.0, f64::max);
    Ok(MapDistanceReport {
        j,
        distance,
        samples: points.len(),
        flow_ratios,
        flow_constant,
    })
}

pub fn map_distance<S: Scalar>(result: &NormalFormResult<S>, j: u32) -> Result<f64> {
    Ok(map_distance_report(result, j)?.distance)
}

/// `max |G^T J G - J|` over `points`, with `G` the central-difference
/// Jacobian of `Phi` at step `h`.
pub fn symplecticity_defect<S: Scalar>(
    gens: &[LieGenerator<S>],
    points: &[Vec<f64>],
    h: f64,
) -> Result<f64> {
    let map = Composed::new(gens);
    let mut worst = 0.0f64;
    for p in points {
        let m = p.len();
        let n = m / 2;
        let mut g = vec![vec![0.0; m]; m];
        let mut z = p.clone();
        for c in 0..m {
            let x = z[c];
            z[c] = x + h;
            let plus = map.apply(&z)?;
            z[c] = x - h;
            let minus = map.apply(&z)?;
            z[c] = x;
            for r in 0..m {
                g[r][c] = (plus[r] - minus[r]) / (2.0 * h);
            }
        }
        // J = [[0, I], [-I, 0]]; (J G)[r][c] = G[r+n][c] for r < n, -G[r-n][c] otherwise.
        for a in 0..m {
            for b in 0..m {
                let mut acc = 0.0;
                for r in 0..m {
                    let jg = if r < n { g[r + n][b] } else { -g[r - n][b] };
                    acc += g[r][a] * jg;
                }
                let j_ab = if a < n && b == a + n {
                    1.0
                } else if a >= n && b + n == a {
                    -1.0
                } else {
                    0.0
                };
                worst = worst.max((acc - j_ab).abs());
            }
        }
    }
    Ok(worst)
}
