//! Tensor grids on `T^1 x [lo, hi]`: equispaced in the angle, Chebyshev-Lobatto
//! in the interval. Derivatives and interpolation are spectral.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Grid layout shared by every field on a patch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorGrid {
    /// Number of equispaced angle points on `[0, 1)`.
    pub n1: usize,
    /// Chebyshev order; there are `n2 + 1` Lobatto nodes.
    pub n2: usize,
    pub lo: f64,
    pub hi: f64,
}

impl TensorGrid {
    pub fn new(n1: usize, n2: usize, lo: f64, hi: f64) -> Self {
        TensorGrid { n1, n2, lo, hi }
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.n1).map(|i| i as f64 / self.n1 as f64).collect()
    }

    /// Lobatto nodes mapped to `[lo, hi]`, in decreasing order.
    pub fn nodes(&self) -> Vec<f64> {
        let (c, h) = self.center_half();
        (0..=self.n2)
            .map(|j| c + h * (PI * j as f64 / self.n2 as f64).cos())
            .collect()
    }

    pub fn center_half(&self) -> (f64, f64) {
        (0.5 * (self.lo + self.hi), 0.5 * (self.hi - self.lo))
    }

    pub fn len(&self) -> usize {
        self.n1 * (self.n2 + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, theta2: f64) -> bool {
        theta2 >= self.lo - 1e-12 && theta2 <= self.hi + 1e-12
    }

    /// Chebyshev differentiation matrix on the mapped nodes.
    fn diff_matrix(&self) -> Vec<f64> {
        let n = self.n2;
        let m = n + 1;
        let x: Vec<f64> = (0..m).map(|j| (PI * j as f64 / n as f64).cos()).collect();
        let c = |j: usize| {
            let base = if j == 0 || j == n { 2.0 } else { 1.0 };
            if j.is_multiple_of(2) {
                base
            } else {
                -base
            }
        };
        let mut d = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    d[i * m + j] = c(i) / c(j) / (x[i] - x[j]);
                }
            }
        }
        // negative-sum trick for the diagonal
        for i in 0..m {
            let s: f64 = (0..m).filter(|&j| j != i).map(|j| d[i * m + j]).sum();
            d[i * m + i] = -s;
        }
        let (_, h) = self.center_half();
        d.iter_mut().for_each(|v| *v /= h);
        d
    }
}

/// Scalar field sampled on a [`TensorGrid`], stored row-major `[i1][i2]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorField {
    pub grid: TensorGrid,
    pub values: Vec<f64>,
}

impl TensorField {
    pub fn new(grid: TensorGrid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len());
        TensorField { grid, values }
    }

    pub fn from_fn(grid: &TensorGrid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let (a, b) = (grid.angles(), grid.nodes());
        let mut values = Vec::with_capacity(grid.len());
        for &t1 in &a {
            for &t2 in &b {
                values.push(f(t1, t2));
            }
        }
        TensorField::new(grid.clone(), values)
    }

    fn m(&self) -> usize {
        self.grid.n2 + 1
    }

    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.m() + i2]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &TensorField) -> TensorField {
        assert_eq!(self.grid, other.grid);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        TensorField::new(self.grid.clone(), values)
    }

    fn column(&self, i2: usize) -> Vec<f64> {
        (0..self.grid.n1).map(|i1| self.at(i1, i2)).collect()
    }

    /// Fourier coefficients of every column, `c[i2][k]` for `k` in
    /// `-(n1/2 - 1)..=(n1/2 - 1)` (Nyquist dropped).
    fn column_coeffs(&self) -> Vec<Vec<Complex64>> {
        (0..self.m()).map(|i2| dft(&self.column(i2))).collect()
    }

    fn from_columns(grid: &TensorGrid, cols: &[Vec<f64>]) -> TensorField {
        let m = grid.n2 + 1;
        let mut values = vec![0.0; grid.len()];
        for (i2, col) in cols.iter().enumerate() {
            for (i1, v) in col.iter().enumerate() {
                values[i1 * m + i2] = *v;
            }
        }
        TensorField::new(grid.clone(), values)
    }

    pub fn d_angle(&self) -> TensorField {
        let n1 = self.grid.n1;
        let cols: Vec<Vec<f64>> = self
            .column_coeffs()
            .into_iter()
            .map(|c| {
                let dc: Vec<Complex64> = c
                    .iter()
                    .enumerate()
                    .map(|(idx, z)| z * Complex64::new(0.0, 2.0 * PI * wavenumber(idx, n1)))
                    .collect();
                idft(&dc, n1)
            })
            .collect();
        Self::from_columns(&self.grid, &cols)
    }

    pub fn d_interval(&self) -> TensorField {
        let m = self.m();
        let d = self.grid.diff_matrix();
        let mut values = vec![0.0; self.grid.len()];
        for i1 in 0..self.grid.n1 {
            let row = &self.values[i1 * m..(i1 + 1) * m];
            for i in 0..m {
                values[i1 * m + i] = (0..m).map(|j| d[i * m + j] * row[j]).sum();
            }
        }
        TensorField::new(self.grid.clone(), values)
    }

    /// `int_{center}^{theta2} f(theta1, t) dt` on every row.
    pub fn integrate_interval(&self) -> TensorField {
        let m = self.m();
        let (_, h) = self.grid.center_half();
        let mut values = vec![0.0; self.grid.len()];
        for i1 in 0..self.grid.n1 {
            let row = &self.values[i1 * m..(i1 + 1) * m];
            let c = cheb_coeffs(row);
            let ic = cheb_integrate(&c);
            let at_center = cheb_eval(&ic, 0.0);
            for j in 0..m {
                let x = (PI * j as f64 / self.grid.n2 as f64).cos();
                values[i1 * m + j] = h * (cheb_eval(&ic, x) - at_center);
            }
        }
        TensorField::new(self.grid.clone(), values)
    }

    /// Mean over the angle and periodic antiderivative of the deviation, for
    /// the single interval node `i2`.
    pub fn angle_primitive(&self, i2: usize) -> (f64, Vec<f64>) {
        let n1 = self.grid.n1;
        let c = dft(&self.column(i2));
        let mean = c[n1 / 2 - 1].re;
        let ic: Vec<Complex64> = c
            .iter()
            .enumerate()
            .map(|(idx, z)| {
                let k = wavenumber(idx, n1);
                if k == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    z / Complex64::new(0.0, 2.0 * PI * k)
                }
            })
            .collect();
        (mean, idft(&ic, n1))
    }

    /// Spectral interpolant at an arbitrary point of the patch.
    pub fn eval(&self, theta1: f64, theta2: f64) -> f64 {
        self.interpolant().eval(theta1, theta2)
    }

    pub fn interpolant(&self) -> Interpolant {
        Interpolant {
            grid: self.grid.clone(),
            coeffs: self.column_coeffs(),
        }
    }
}

/// Field with its column transforms precomputed, for repeated evaluation.
#[derive(Clone, Debug)]
pub struct Interpolant {
    grid: TensorGrid,
    coeffs: Vec<Vec<Complex64>>,
}

impl Interpolant {
    pub fn eval(&self, theta1: f64, theta2: f64) -> f64 {
        let n1 = self.grid.n1;
        let kmax = n1 / 2 - 1;
        let base = Complex64::from_polar(1.0, 2.0 * PI * theta1);
        let mut phases = vec![Complex64::new(1.0, 0.0); 2 * kmax + 1];
        let mut z = Complex64::new(1.0, 0.0);
        for k in 1..=kmax {
            z *= base;
            phases[kmax + k] = z;
            phases[kmax - k] = z.conj();
        }
        let col_vals: Vec<f64> = self
            .coeffs
            .iter()
            .map(|c| c.iter().zip(&phases).map(|(a, p)| (a * p).re).sum())
            .collect();
        let (c, h) = self.grid.center_half();
        barycentric_lobatto(&col_vals, (theta2 - c) / h)
    }
}

/// Wavenumber for coefficient slot `idx` of an `n`-point transform.
fn wavenumber(idx: usize, n: usize) -> f64 {
    idx as f64 - (n / 2 - 1) as f64
}

/// Coefficients `c_k = (1/n) sum f_j e^{-2 pi i k j / n}`, `|k| < n/2`.
pub(crate) fn dft(f: &[f64]) -> Vec<Complex64> {
    let n = f.len();
    let kmax = n / 2 - 1;
    (0..=2 * kmax)
        .map(|idx| {
            let k = idx as f64 - kmax as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, v) in f.iter().enumerate() {
                let ph = -2.0 * PI * k * j as f64 / n as f64;
                acc += Complex64::new(ph.cos(), ph.sin()) * *v;
            }
            acc / n as f64
        })
        .collect()
}

fn idft(c: &[Complex64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            c.iter()
                .enumerate()
                .map(|(idx, z)| {
                    let ph = 2.0 * PI * wavenumber(idx, n) * j as f64 / n as f64;
                    (z * Complex64::new(ph.cos(), ph.sin())).re
                })
                .sum()
        })
        .collect()
}

/// Chebyshev coefficients from values at Lobatto nodes `cos(pi j / N)`.
fn cheb_coeffs(v: &[f64]) -> Vec<f64> {
    let n = v.len() - 1;
    (0..=n)
        .map(|k| {
            let mut s = 0.0;
            for (j, vj) in v.iter().enumerate() {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                s += w * vj * (PI * (k * j) as f64 / n as f64).cos();
            }
            let scale = if k == 0 || k == n { 1.0 } else { 2.0 };
            scale * s / n as f64
        })
        .collect()
}

/// Coefficients of an antiderivative (constant term left at zero).
fn cheb_integrate(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        let next = if k + 1 < n { c[k + 1] } else { 0.0 };
        let prev = if k == 1 { 2.0 * c[0] } else { c[k - 1] };
        out[k] = (prev - next) / (2.0 * k as f64);
    }
    out
}

fn cheb_eval(c: &[f64], x: f64) -> f64 {
    // Clenshaw
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + c[0]
}

/// Barycentric interpolation on Lobatto nodes `cos(pi j / N)`.
pub(crate) fn barycentric_lobatto(v: &[f64], x: f64) -> f64 {
    let n = v.len() - 1;
    let (mut num, mut den) = (0.0, 0.0);
    for (j, vj) in v.iter().enumerate() {
        let xj = (PI * j as f64 / n as f64).cos();
        let diff = x - xj;
        if diff.abs() < 1e-15 {
            return *vj;
        }
        let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == n {
            w *= 0.5;
        }
        num += w * vj / diff;
        den += w / diff;
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TensorGrid {
        TensorGrid::new(16, 12, 0.375, 0.625)
    }

    fn f(t1: f64, t2: f64) -> f64 {
        (2.0 * PI * t1).sin() * (3.0 * t2).exp() + (4.0 * PI * t1).cos() * t2 * t2
    }

    #[test]
    fn derivatives_match_closed_form() {
        let g = grid();
        let field = TensorField::from_fn(&g, f);
        let d1 = field.d_angle();
        let d2 = field.d_interval();
        let e1 = TensorField::from_fn(&g, |a, b| {
            2.0 * PI * (2.0 * PI * a).cos() * (3.0 * b).exp() - 4.0 * PI * (4.0 * PI * a).sin() * b * b
        });
        let e2 = TensorField::from_fn(&g, |a, b| {
            3.0 * (2.0 * PI * a).sin() * (3.0 * b).exp() + 2.0 * (4.0 * PI * a).cos() * b
        });
        assert!(d1.sub(&e1).max_abs() < 1e-11);
        assert!(d2.sub(&e2).max_abs() < 1e-10);
    }

    #[test]
    fn mixed_derivatives_commute_exactly() {
        let field = TensorField::from_fn(&grid(), f);
        let a = field.d_angle().d_interval();
        let b = field.d_interval().d_angle();
        assert!(a.sub(&b).max_abs() < 1e-10);
    }

    #[test]
    fn interval_primitive_and_interpolation() {
        let g = grid();
        let field = TensorField::from_fn(&g, |_, t| (5.0 * t).cos());
        let prim = field.integrate_interval();
        let exact = TensorField::from_fn(&g, |_, t| ((5.0 * t).sin() - (2.5f64).sin()) / 5.0);
        assert!(prim.sub(&exact).max_abs() < 1e-13);
        let v = TensorField::from_fn(&g, f).eval(0.123, 0.41);
        assert!((v - f(0.123, 0.41)).abs() < 1e-11);
    }

    #[test]
    fn angle_primitive_splits_off_the_mean() {
        let g = grid();
        let field = TensorField::from_fn(&g, |a, _| 0.7 + (2.0 * PI * a).cos());
        let (mean, prim) = field.angle_primitive(3);
        assert!((mean - 0.7).abs() < 1e-14);
        for (i, p) in prim.iter().enumerate() {
            let a = i as f64 / 16.0;
            assert!((p - (2.0 * PI * a).sin() / (2.0 * PI)).abs() < 1e-14);
        }
    }
}
