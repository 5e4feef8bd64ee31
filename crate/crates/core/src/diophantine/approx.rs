//! Periodic approximations `v_1..v_d` of a frequency whose integer lifts
//! form a Z-basis of `Z^n ∩ F`.

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::frequency::ratio_to_f64;
use super::{lattice, psi_table_with_span, rational_span, ExactFrequency, RationalSpan};
use crate::error::{Error, Result};

/// `v = p / T` with `p` primitive, so `T` is the minimal period.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicVector {
    lift: Vec<i64>,
    period: Ratio<i64>,
}

impl PeriodicVector {
    pub fn new(lift: Vec<i64>, period: Ratio<i64>) -> Result<Self> {
        if !period.is_positive() {
            return Err(Error::rejected("period must be positive"));
        }
        let g = lift.iter().fold(0i64, |g, x| g.gcd(x));
        if g != 1 {
            return Err(Error::rejected(format!(
                "lift {lift:?} is not primitive, so the period is not minimal"
            )));
        }
        Ok(PeriodicVector { lift, period })
    }

    /// Minimal-period form of a rational vector.
    pub fn from_rational(v: &[Ratio<i64>]) -> Result<Self> {
        let l = v.iter().fold(1i64, |l, x| l.lcm(x.denom()));
        let w: Vec<i64> = v.iter().map(|x| x.numer() * (l / x.denom())).collect();
        let g = w.iter().fold(0i64, |g, x| g.gcd(x));
        if g == 0 {
            return Err(Error::rejected("periodic vector must be nonzero"));
        }
        Self::new(w.iter().map(|x| x / g).collect(), Ratio::new(l, g))
    }

    pub fn lift(&self) -> &[i64] {
        &self.lift
    }

    pub fn period(&self) -> Ratio<i64> {
        self.period
    }

    pub fn period_f64(&self) -> f64 {
        *self.period.numer() as f64 / *self.period.denom() as f64
    }

    pub fn components(&self) -> Vec<Ratio<i64>> {
        self.lift
            .iter()
            .map(|&p| Ratio::from_integer(p) / self.period)
            .collect()
    }

    pub fn values(&self) -> Vec<f64> {
        let t = self.period_f64();
        self.lift.iter().map(|&p| p as f64 / t).collect()
    }

    /// Exact test `k . v = 0`.
    pub fn is_resonant(&self, k: &[i32]) -> bool {
        self.lift_dot(k) == 0
    }

    /// `k . p = T (k . v)`, an integer.
    pub fn lift_dot(&self, k: &[i32]) -> i64 {
        k.iter().zip(&self.lift).map(|(&a, &b)| a as i64 * b).sum()
    }

    /// `k . v`.
    pub fn dot(&self, k: &[i32]) -> f64 {
        self.lift_dot(k) as f64 / self.period_f64()
    }

    pub fn as_frequency(&self) -> ExactFrequency {
        ExactFrequency::rational(&self.components()).expect("nonzero")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApproxOptions {
    /// Candidate periods run up to `ceil(search_factor * Psi(Q))`.
    pub search_factor: f64,
    /// Initial cap on `C_j = |omega - v_j| T_j Q`; doubled on failure.
    pub acceptance: f64,
    pub max_acceptance: f64,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        ApproxOptions {
            search_factor: 4.0,
            acceptance: 1.5,
            max_acceptance: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxReport {
    pub q: f64,
    pub vectors: Vec<PeriodicVector>,
    /// `C_j = |omega - v_j|_inf T_j Q`.
    pub constants: Vec<f64>,
    /// `Psi(Q)`; absent for rational frequencies.
    pub psi: Option<f64>,
    pub budget: u64,
    pub span: RationalSpan,
    /// Lifts in coordinates of the span basis.
    pub coords: Vec<Vec<i64>>,
    pub det: i64,
}

#[derive(Clone, Debug)]
struct Candidate {
    lift: Vec<i128>,
    coords: Vec<i128>,
    period: Ratio<i64>,
    c: f64,
}

/// `d` periodic vectors approximating `omega` at scale `Q` whose lifts
/// are a certified Z-basis of `Z^n ∩ F`.
pub fn periodic_approximations(
    w: &ExactFrequency,
    q: f64,
    opts: &ApproxOptions,
) -> Result<ApproxReport> {
    if q < 1.0 {
        return Err(Error::rejected(format!("Q = {q} must be at least 1")));
    }
    let span = rational_span(w)?;
    let basis = span.basis_i128();
    if let Some(r) = w.rational_entries() {
        let v: Vec<Ratio<i64>> = r
            .iter()
            .map(|x| {
                Ratio::new(
                    x.numer().to_i64().expect("small rational"),
                    x.denom().to_i64().expect("small rational"),
                )
            })
            .collect();
        let pv = PeriodicVector::from_rational(&v)?;
        let lift: Vec<i128> = pv.lift.iter().map(|&x| x as i128).collect();
        let coords = lattice::coords_in_basis(&basis, &lift)?
            .ok_or_else(|| Error::Numerical("rational lift outside its own span".into()))?;
        return certify(q, vec![(pv, 0.0, coords)], None, 0, span);
    }

    let table = psi_table_with_span(w, &span, q.floor() as u32)?;
    let psi = table.psi(q)?;
    let budget = (opts.search_factor * psi).ceil() as u64;
    let cands = candidates(w, &span, q, budget)?;
    let d = span.dim;

    let mut acc = opts.acceptance;
    loop {
        let mut chosen: Vec<&Candidate> = Vec::new();
        for c in &cands {
            if c.c > acc {
                continue;
            }
            let mut rows: Vec<Vec<i128>> = chosen.iter().map(|x| x.coords.clone()).collect();
            rows.push(c.coords.clone());
            if lattice::gcd_of_minors(&rows)? == 1 {
                chosen.push(c);
                if chosen.len() == d {
                    break;
                }
            }
        }
        if chosen.len() == d {
            let picked = chosen
                .into_iter()
                .map(|c| {
                    let pv = PeriodicVector::new(
                        c.lift.iter().map(|&x| x as i64).collect(),
                        c.period,
                    )?;
                    Ok((pv, c.c, c.coords.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            return certify(q, picked, Some(psi), budget, span);
        }
        if acc >= opts.max_acceptance {
            let mut best: Vec<&Candidate> = cands.iter().collect();
            best.sort_by(|a, b| a.c.total_cmp(&b.c));
            let diag = best
                .iter()
                .take(5)
                .map(|c| format!("p={:?} T={} C={:.3}", c.lift, c.period, c.c))
                .collect::<Vec<_>>()
                .join("; ");
            return Err(Error::NoUnimodularBasis {
                budget,
                diagnostics: format!("best candidates: {diag}"),
            });
        }
        acc = (acc * 2.0).min(opts.max_acceptance);
    }
}

/// Primitive lifts of nearest lattice points to `t omega`, `t = 1..budget`,
/// sorted by period.
fn candidates(w: &ExactFrequency, span: &RationalSpan, q: f64, budget: u64) -> Result<Vec<Candidate>> {
    let d = span.dim;
    let n = w.n();
    let omega = w.values();
    let b: Vec<Vec<f64>> = span
        .basis
        .iter()
        .map(|r| r.iter().map(|&x| x as f64).collect())
        .collect();
    let pinv = super::pseudo_inverse_rows(&b);
    let mut out: Vec<Candidate> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for t in 1..=budget {
        let target: Vec<f64> = omega.iter().map(|x| x * t as f64).collect();
        let c: Vec<f64> = pinv
            .iter()
            .map(|row| row.iter().zip(&target).map(|(a, b)| a * b).sum())
            .collect();
        let mut best: Option<(f64, Vec<i128>)> = None;
        for mask in 0..(1u32 << d) {
            let coords: Vec<i128> = (0..d)
                .map(|i| {
                    if mask >> i & 1 == 1 {
                        c[i].ceil() as i128
                    } else {
                        c[i].floor() as i128
                    }
                })
                .collect();
            let err = (0..n)
                .map(|j| {
                    let pj: f64 = (0..d).map(|i| coords[i] as f64 * b[i][j]).sum();
                    (target[j] - pj).abs()
                })
                .fold(0.0, f64::max);
            if best.as_ref().is_none_or(|(e, _)| err < *e) {
                best = Some((err, coords));
            }
        }
        let (_, coords) = best.expect("at least one rounding");
        let g = lattice::gcd_all(&coords);
        if g == 0 {
            continue;
        }
        let coords: Vec<i128> = coords.iter().map(|x| x / g).collect();
        if !seen.insert(coords.clone()) {
            continue;
        }
        let lift: Vec<i128> = (0..n)
            .map(|j| (0..d).map(|i| coords[i] * span.basis[i][j] as i128).sum())
            .collect();
        let period = Ratio::new(t as i64, g as i64);
        if !period.is_positive() {
            continue;
        }
        let tf = ratio_to_f64(&num_rational::BigRational::new(
            (*period.numer()).into(),
            (*period.denom()).into(),
        ));
        let err = (0..n)
            .map(|j| (omega[j] * tf - lift[j] as f64).abs())
            .fold(0.0, f64::max);
        out.push(Candidate {
            lift,
            coords,
            period,
            c: err * q,
        });
    }
    out.sort_by_key(|a| a.period);
    Ok(out)
}

fn certify(
    q: f64,
    mut picked: Vec<(PeriodicVector, f64, Vec<i128>)>,
    psi: Option<f64>,
    budget: u64,
    span: RationalSpan,
) -> Result<ApproxReport> {
    picked.sort_by(|a, b| a.1.total_cmp(&b.1));
    let coords: Vec<Vec<i128>> = picked.iter().map(|x| x.2.clone()).collect();
    let det = lattice::det(&coords)?;
    if det.abs() != 1 {
        return Err(Error::Numerical(format!(
            "lift change-of-basis determinant is {det}, not unimodular"
        )));
    }
    Ok(ApproxReport {
        q,
        constants: picked.iter().map(|x| x.1).collect(),
        coords: coords
            .iter()
            .map(|r| r.iter().map(|&x| x as i64).collect())
            .collect(),
        vectors: picked.into_iter().map(|x| x.0).collect(),
        psi,
        budget,
        span,
        det: det as i64,
    })
}
