use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spectral::{Interpolant, TensorField, TensorGrid};
use super::{fixed_point, ResonantModel};
use crate::error::{Error, Result};
use crate::trigpoly::{CompiledHamiltonian, Gradient};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Stable,
    Unstable,
}

/// Resolution and patch of a manifold computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifoldOptions {
    /// Initial conditions per fundamental domain of the unstable fiber.
    pub fibers: usize,
    /// Equispaced fast-angle phases of the output grid.
    pub phases: usize,
    /// Fourier degree of the per-node fit in the fast angle.
    pub fourier_degree: usize,
    /// Chebyshev order in the pendulum angle (even).
    pub cheb_order: usize,
    /// Band of the pendulum angle, inside `(0, 1)`.
    pub patch: [f64; 2],
    /// Distance of the first fiber point from the torus (lowered to
    /// `1e-4 / multiplier` when larger).
    pub offset: f64,
    /// Physical time step of the traced orbits.
    pub time_step: f64,
    pub max_time: f64,
    pub fit_tol: f64,
}

impl Default for ManifoldOptions {
    fn default() -> Self {
        ManifoldOptions {
            fibers: 200,
            phases: 64,
            fourier_degree: 16,
            cheb_order: 16,
            patch: [0.375, 0.625],
            offset: 1e-6,
            time_step: 2e-3,
            max_time: 100.0,
            fit_tol: 1e-6,
        }
    }
}

impl ManifoldOptions {
    fn validate(&self) -> Result<()> {
        let [lo, hi] = self.patch;
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(Error::rejected(format!("patch [{lo}, {hi}] must lie inside (0, 1)")));
        }
        if self.cheb_order < 2 || !self.cheb_order.is_multiple_of(2) {
            return Err(Error::rejected("cheb_order must be even and at least 2"));
        }
        if self.phases < 4 || !self.phases.is_multiple_of(2) || 2 * self.fourier_degree + 2 > self.phases {
            return Err(Error::rejected("phases must be even and exceed twice the Fourier degree"));
        }
        if self.fibers < 2 * self.fourier_degree + 1 {
            return Err(Error::Resolution(format!(
                "{} fibers cannot determine a degree-{} fit",
                self.fibers, self.fourier_degree
            )));
        }
        if !(self.offset > 0.0 && self.time_step > 0.0 && self.max_time > 0.0) {
            return Err(Error::rejected("offset, time_step and max_time must be positive"));
        }
        Ok(())
    }
}

/// Flow on the energy level with the fast angle `s` as time; the state is
/// `(theta2, I1, I2)`.
struct SectionFlow {
    h: CompiledHamiltonian<f64>,
    ds: f64,
}

type State = [f64; 3];

impl SectionFlow {
    fn new(model: &ResonantModel, opts: &ManifoldOptions) -> Result<Self> {
        let h = CompiledHamiltonian::new(&model.hamiltonian()?);
        let w = model.fast_frequency().abs();
        let ds = (opts.time_step * w).min(1.0 / 64.0);
        Ok(SectionFlow { h, ds })
    }

    fn rhs(&self, s: f64, y: &State) -> Result<State> {
        let mut g = Gradient::default();
        self.h.gradient(&[s, y[0]], &[y[1], y[2]], &mut g);
        let speed = g.d_action[0];
        if !(speed > 0.0) {
            return Err(Error::Numerical(format!(
                "fast angle stalls (dH/dI1 = {speed:.3e}) at theta2 = {:.4}",
                y[0]
            )));
        }
        Ok([g.d_action[1] / speed, -g.d_theta[0] / speed, -g.d_theta[1] / speed])
    }

    fn rk4(&self, s: f64, y: &State, h: f64) -> Result<State> {
        let add = |a: &State, k: &State, c: f64| [a[0] + c * k[0], a[1] + c * k[1], a[2] + c * k[2]];
        let k1 = self.rhs(s, y)?;
        let k2 = self.rhs(s + 0.5 * h, &add(y, &k1, 0.5 * h))?;
        let k3 = self.rhs(s + 0.5 * h, &add(y, &k2, 0.5 * h))?;
        let k4 = self.rhs(s + h, &add(y, &k3, h))?;
        Ok([
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            y[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
        ])
    }

    /// `I1` on the level `H = energy` at `s = 0`.
    fn action1(&self, theta2: f64, action2: f64, energy: f64, guess: f64) -> Result<f64> {
        let mut g = Gradient::default();
        let mut a = guess;
        for _ in 0..50 {
            self.h.gradient(&[0.0, theta2], &[a, action2], &mut g);
            let step = (g.value - energy) / g.d_action[0];
            a -= step;
            if step.abs() < 1e-16 {
                return Ok(a);
            }
        }
        Err(Error::Numerical("energy level solve for I1 did not converge".into()))
    }

    /// Return map of the section `s = 0` on the energy level, in `(theta2, I2)`;
    /// `dir = -1` runs it backwards.
    fn period_map(&self, x: [f64; 2], energy: f64, dir: f64) -> Result<[f64; 2]> {
        let a = self.action1(x[0], x[1], energy, 0.0)?;
        let steps = (1.0 / self.ds).ceil() as usize;
        let h = dir / steps as f64;
        let mut y = [x[0], a, x[1]];
        for i in 0..steps {
            y = self.rk4(i as f64 * h, &y, h)?;
        }
        Ok([y[0], y[2]])
    }
}

/// Hyperbolic periodic orbit of the section flow: the invariant torus.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Torus {
    pub energy: f64,
    /// `(theta2, I1, I2)` on the section `theta1 = 0`.
    pub point: [f64; 3],
    /// Unstable multiplier of the return map.
    pub multiplier: f64,
    pub unstable: [f64; 2],
    pub stable: [f64; 2],
    pub residual: f64,
}

fn jacobian(flow: &SectionFlow, x: [f64; 2], energy: f64, h: f64, dir: f64) -> Result<[[f64; 2]; 2]> {
    let mut j = [[0.0; 2]; 2];
    for c in 0..2 {
        let mut xp = x;
        let mut xm = x;
        xp[c] += h;
        xm[c] -= h;
        let (fp, fm) = (flow.period_map(xp, energy, dir)?, flow.period_map(xm, energy, dir)?);
        for r in 0..2 {
            j[r][c] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    Ok(j)
}

fn eigvec(j: [[f64; 2]; 2], ev: f64) -> [f64; 2] {
    let a = [j[0][1], ev - j[0][0]];
    let b = [ev - j[1][1], j[1][0]];
    let v = if a[0].hypot(a[1]) > b[0].hypot(b[1]) { a } else { b };
    let n = v[0].hypot(v[1]);
    // upper branch: positive I2 component
    let s = if v[1] < 0.0 { -1.0 } else { 1.0 };
    [s * v[0] / n, s * v[1] / n]
}

/// The torus on the energy level of the unperturbed equilibrium.
pub fn torus(model: &ResonantModel, opts: &ManifoldOptions) -> Result<Torus> {
    opts.validate()?;
    let fp = fixed_point(model)?;
    let energy = CompiledHamiltonian::new(&model.hamiltonian_with(0.0)?).value(&[0.0, fp.theta2], &[0.0, fp.action2]);
    let flow = SectionFlow::new(model, opts)?;
    let mut x = [fp.theta2, fp.action2];
    let mut residual = f64::INFINITY;
    for _ in 0..30 {
        let px = flow.period_map(x, energy, 1.0)?;
        let g = [px[0] - x[0], px[1] - x[1]];
        residual = g[0].abs().max(g[1].abs());
        if residual < 1e-13 {
            break;
        }
        let mut j = jacobian(&flow, x, energy, 1e-7, 1.0)?;
        j[0][0] -= 1.0;
        j[1][1] -= 1.0;
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let dx = (g[0] * j[1][1] - g[1] * j[0][1]) / det;
        let dp = (j[0][0] * g[1] - j[1][0] * g[0]) / det;
        x = [x[0] - dx, x[1] - dp];
        if !(x[0].abs() < 0.25 && x[1].abs() < 0.5) {
            return Err(Error::Numerical("torus search left the saddle neighbourhood".into()));
        }
    }
    if residual > 1e-11 {
        return Err(Error::Numerical(format!("torus search stalled at residual {residual:.3e}")));
    }
    // the return map is area preserving: multipliers big and 1/big; each
    // eigendirection is taken as the dominant one of the forward or backward map
    let fwd = jacobian(&flow, x, energy, 1e-6, 1.0)?;
    let bwd = jacobian(&flow, x, energy, 1e-6, -1.0)?;
    let tr = fwd[0][0] + fwd[1][1];
    if tr.abs() <= 2.0 {
        return Err(Error::Numerical(format!(
            "return map of the torus is not hyperbolic (trace {tr:.4e})"
        )));
    }
    if tr < 0.0 {
        return Err(Error::Numerical("torus multipliers are negative".into()));
    }
    let big = 0.5 * (tr + (tr * tr - 4.0).sqrt());
    let tr_b = bwd[0][0] + bwd[1][1];
    let big_b = 0.5 * (tr_b + (tr_b * tr_b - 4.0).max(0.0).sqrt());
    let a1 = flow.action1(x[0], x[1], energy, 0.0)?;
    Ok(Torus {
        energy,
        point: [x[0], a1, x[1]],
        multiplier: big,
        unstable: eigvec(fwd, big),
        stable: eigvec(bwd, big_b),
        residual,
    })
}

/// One traced point of the manifold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshPoint {
    pub theta1: f64,
    pub theta2: f64,
    pub action1: f64,
    pub action2: f64,
}

/// `S` on a band `T^1 x [lo, hi]`, stored as `winding * theta1 + periodic`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratingFunction {
    pub side: Side,
    pub grid: TensorGrid,
    pub energy: f64,
    /// Mean of `I1`; `S` grows by this amount per turn of the fast angle.
    pub winding: f64,
    /// Periodic part of `S`, normalized to vanish at `(0, centre)`.
    pub potential: TensorField,
    /// Fitted actions on the grid.
    pub action1: TensorField,
    pub action2: TensorField,
    pub fit_residual: f64,
    /// `max |d1 S - I1|`: failure of `I dtheta` to be closed.
    pub exactness_residual: f64,
    /// `max |grad S - I|` over the traced mesh points.
    pub graph_residual: f64,
    pub mesh: Vec<MeshPoint>,
    pub torus: Torus,
    #[serde(skip)]
    derived: Option<Box<Derived>>,
}

#[derive(Clone, Debug)]
struct Derived {
    d1: Interpolant,
    d2: Interpolant,
    d11: Interpolant,
    d12: Interpolant,
    d22: Interpolant,
    s: Interpolant,
    cross: Interpolant,
}

impl GeneratingFunction {
    fn derived(&self) -> std::borrow::Cow<'_, Derived> {
        match &self.derived {
            Some(d) => std::borrow::Cow::Borrowed(d),
            None => std::borrow::Cow::Owned(Self::derive(&self.potential, &self.action1, &self.action2)),
        }
    }

    fn derive(potential: &TensorField, a1: &TensorField, a2: &TensorField) -> Derived {
        let d1 = potential.d_angle();
        let d2 = potential.d_interval();
        let cross = a2.d_angle().sub(&a1.d_interval());
        Derived {
            d11: d1.d_angle().interpolant(),
            d12: d1.d_interval().interpolant(),
            d22: d2.d_interval().interpolant(),
            d1: d1.interpolant(),
            d2: d2.interpolant(),
            s: potential.interpolant(),
            cross: cross.interpolant(),
        }
    }

    /// Rebuilds the interpolation caches, e.g. after deserializing.
    pub fn refresh(&mut self) {
        self.derived = Some(Box::new(Self::derive(&self.potential, &self.action1, &self.action2)));
    }

    pub fn value(&self, theta1: f64, theta2: f64) -> f64 {
        self.winding * theta1 + self.derived().s.eval(theta1, theta2)
    }

    pub fn gradient(&self, theta1: f64, theta2: f64) -> [f64; 2] {
        let d = self.derived();
        [self.winding + d.d1.eval(theta1, theta2), d.d2.eval(theta1, theta2)]
    }

    /// Symmetric by construction: one mixed derivative is used twice.
    pub fn hessian(&self, theta1: f64, theta2: f64) -> [[f64; 2]; 2] {
        let d = self.derived();
        let off = d.d12.eval(theta1, theta2);
        [[d.d11.eval(theta1, theta2), off], [off, d.d22.eval(theta1, theta2)]]
    }

    /// `d1 I2 - d2 I1` from the fitted action fields.
    pub(crate) fn action_field_cross(&self, theta1: f64, theta2: f64) -> f64 {
        self.derived().cross.eval(theta1, theta2)
    }
}

#[derive(Clone, Copy, Debug)]
struct Crossing {
    s: f64,
    action1: f64,
    action2: f64,
}

fn trace_fiber(
    flow: &SectionFlow,
    torus: &Torus,
    side: Side,
    nodes: &[f64],
    u: f64,
    opts: &ManifoldOptions,
    s_max: f64,
) -> Result<Vec<Crossing>> {
    let (dir, shift, vec) = match side {
        Side::Unstable => (1.0, 0.0, torus.unstable),
        Side::Stable => (-1.0, 1.0, torus.stable),
    };
    // the whole fundamental domain stays in the linear regime
    let eta = opts.offset.min(1e-4 / torus.multiplier) * torus.multiplier.powf(u);
    let th = torus.point[0] + shift + eta * vec[0];
    let a2 = torus.point[2] + eta * vec[1];
    let a1 = flow.action1(th, a2, torus.energy, torus.point[1])?;
    let mut y = [th, a1, a2];
    let h = dir * flow.ds;
    // unstable orbits climb through the band, stable ones descend (backwards)
    let order: Vec<usize> = match side {
        Side::Unstable => (0..nodes.len()).rev().collect(),
        Side::Stable => (0..nodes.len()).collect(),
    };
    let ahead = |a: f64, b: f64| if dir > 0.0 { b > a } else { b < a };
    let mut out = vec![None; nodes.len()];
    let mut next = 0;
    let mut s = 0.0f64;
    while next < order.len() {
        if s.abs() > s_max {
            return Err(Error::Numerical(format!(
                "{side:?} orbit from fiber {u:.3} never crossed theta2 = {:.4}",
                nodes[order[next]]
            )));
        }
        let z = flow.rk4(s, &y, h)?;
        if next > 0 && !ahead(y[0], z[0]) {
            return Err(Error::PatchTooLarge(format!(
                "{side:?} manifold turns back at theta2 = {:.4}",
                y[0]
            )));
        }
        while next < order.len() {
            let target = nodes[order[next]];
            let crossed = if dir > 0.0 {
                y[0] < target && z[0] >= target
            } else {
                y[0] > target && z[0] <= target
            };
            if !crossed {
                break;
            }
            let mut d = h * (target - y[0]) / (z[0] - y[0]);
            let mut p = flow.rk4(s, &y, d)?;
            for _ in 0..8 {
                let miss = p[0] - target;
                if miss.abs() < 1e-15 {
                    break;
                }
                d -= miss / flow.rhs(s + d, &p)?[0];
                p = flow.rk4(s, &y, d)?;
            }
            out[order[next]] = Some(Crossing {
                s: s + d,
                action1: p[1],
                action2: p[2],
            });
            next += 1;
        }
        y = z;
        s += h;
    }
    Ok(out.into_iter().map(|c| c.expect("all nodes crossed")).collect())
}

/// Least-squares trigonometric fit `sum_{|k| <= deg}` on scattered phases;
/// returns the fitted function on `grid` and the max residual.
fn fourier_fit(phases: &[f64], values: &[f64], deg: usize, grid: &[f64]) -> Result<(Vec<f64>, f64)> {
    let nb = 2 * deg + 1;
    let basis = |t: f64| -> Vec<f64> {
        let mut b = Vec::with_capacity(nb);
        b.push(1.0);
        for k in 1..=deg {
            let a = 2.0 * std::f64::consts::PI * k as f64 * t;
            b.push(a.cos());
            b.push(a.sin());
        }
        b
    };
    let mut ata = vec![0.0; nb * nb];
    let mut atb = vec![0.0; nb];
    for (t, v) in phases.iter().zip(values) {
        let b = basis(*t);
        for i in 0..nb {
            atb[i] += b[i] * v;
            for j in 0..nb {
                ata[i * nb + j] += b[i] * b[j];
            }
        }
    }
    let c = solve_spd(ata, atb).ok_or_else(|| {
        Error::Resolution("fiber phases do not determine the Fourier fit".into())
    })?;
    let eval = |t: f64| basis(t).iter().zip(&c).map(|(a, b)| a * b).sum::<f64>();
    let residual = phases
        .iter()
        .zip(values)
        .map(|(t, v)| (eval(*t) - v).abs())
        .fold(0.0, f64::max);
    Ok((grid.iter().map(|t| eval(*t)).collect(), residual))
}

/// Cholesky solve; `None` if the matrix is not numerically positive definite.
fn solve_spd(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 1e-12 * a[j * n + j].abs().max(1.0) {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Some(b)
}

/// Stable or unstable manifold of the torus as a generating function over
/// the configured band.
pub fn manifolds(model: &ResonantModel, side: Side, opts: &ManifoldOptions) -> Result<GeneratingFunction> {
    let t = torus(model, opts)?;
    manifolds_on(model, &t, side, opts)
}

/// Both sides, sharing one torus computation: `(unstable, stable)`.
pub fn manifold_pair(
    model: &ResonantModel,
    opts: &ManifoldOptions,
) -> Result<(GeneratingFunction, GeneratingFunction)> {
    let t = torus(model, opts)?;
    Ok((
        manifolds_on(model, &t, Side::Unstable, opts)?,
        manifolds_on(model, &t, Side::Stable, opts)?,
    ))
}

pub fn manifolds_on(
    model: &ResonantModel,
    torus: &Torus,
    side: Side,
    opts: &ManifoldOptions,
) -> Result<GeneratingFunction> {
    opts.validate()?;
    let flow = SectionFlow::new(model, opts)?;
    let grid = TensorGrid::new(opts.phases, opts.cheb_order, opts.patch[0], opts.patch[1]);
    let nodes = grid.nodes();
    let s_max = opts.max_time * model.fast_frequency().abs();
    let fibers: Vec<Vec<Crossing>> = (0..opts.fibers)
        .into_par_iter()
        .map(|j| {
            let u = j as f64 / opts.fibers as f64;
            trace_fiber(&flow, torus, side, &nodes, u, opts, s_max)
        })
        .collect::<Result<_>>()?;

    // one fundamental domain of fibers must wrap the fast angle exactly once,
    // monotonically; otherwise two mesh points share theta with different I
    let dir = if side == Side::Unstable { 1.0 } else { -1.0 };
    for (i2, &t2) in nodes.iter().enumerate() {
        let mut times: Vec<f64> = fibers.iter().map(|f| f[i2].s).collect();
        times.push(times[0] - dir);
        if times.windows(2).any(|w| dir * (w[1] - w[0]) >= 0.0) {
            return Err(Error::PatchTooLarge(format!(
                "{side:?} manifold is not a graph over theta1 at theta2 = {t2:.4}"
            )));
        }
    }

    let angles = grid.angles();
    let m = nodes.len();
    let mut a1 = vec![0.0; grid.len()];
    let mut a2 = vec![0.0; grid.len()];
    let mut fit_residual = 0.0f64;
    let mut mesh = Vec::with_capacity(opts.fibers * m);
    for (i2, &t2) in nodes.iter().enumerate() {
        let phases: Vec<f64> = fibers.iter().map(|f| f[i2].s.rem_euclid(1.0)).collect();
        let v1: Vec<f64> = fibers.iter().map(|f| f[i2].action1).collect();
        let v2: Vec<f64> = fibers.iter().map(|f| f[i2].action2).collect();
        let (g1, r1) = fourier_fit(&phases, &v1, opts.fourier_degree, &angles)?;
        let (g2, r2) = fourier_fit(&phases, &v2, opts.fourier_degree, &angles)?;
        fit_residual = fit_residual.max(r1).max(r2);
        for i1 in 0..angles.len() {
            a1[i1 * m + i2] = g1[i1];
            a2[i1 * m + i2] = g2[i1];
        }
        for j in 0..phases.len() {
            mesh.push(MeshPoint {
                theta1: phases[j],
                theta2: t2,
                action1: v1[j],
                action2: v2[j],
            });
        }
    }
    if fit_residual > opts.fit_tol {
        return Err(Error::Resolution(format!(
            "{side:?} graph fit residual {fit_residual:.3e} exceeds {:.1e}",
            opts.fit_tol
        )));
    }
    let action1 = TensorField::new(grid.clone(), a1);
    let action2 = TensorField::new(grid.clone(), a2);

    // S = sigma(theta1) + int_centre^theta2 I2, with sigma' = I1(., centre)
    let centre = opts.cheb_order / 2;
    let (winding, sigma) = action1.angle_primitive(centre);
    let along = action2.integrate_interval();
    let mut values = along.values.clone();
    for i1 in 0..grid.n1 {
        for i2 in 0..m {
            values[i1 * m + i2] += sigma[i1] - sigma[0];
        }
    }
    let potential = TensorField::new(grid.clone(), values);
    let d1 = potential.d_angle();
    let exactness_residual = d1
        .values
        .iter()
        .zip(&action1.values)
        .map(|(d, a)| (winding + d - a).abs())
        .fold(0.0, f64::max);

    let mut gf = GeneratingFunction {
        side,
        grid,
        energy: torus.energy,
        winding,
        potential,
        action1,
        action2,
        fit_residual,
        exactness_residual,
        graph_residual: 0.0,
        mesh,
        torus: torus.clone(),
        derived: None,
    };
    gf.refresh();
    gf.graph_residual = gf
        .mesh
        .iter()
        .map(|p| {
            let g = gf.gradient(p.theta1, p.theta2);
            (g[0] - p.action1).abs().max((g[1] - p.action2).abs())
        })
        .fold(0.0, f64::max);
    Ok(gf)
}
