//! Finite-difference solver for the density of the surviving particles,
//!
//! ```text
//! dV/dt = 1/2 V_xx + alpha Ldot V_x,    1/2 V_x(t,0) = (kappa/2 - alpha Ldot) V(t,0),
//! ```
//!
//! with loss rate `Ldot = (kappa/2) V(t,0)`. Each step applies an explicit
//! upwind drift with the lagged loss rate, then backward-Euler diffusion with
//! a ghost-point Robin row at `x = 0` and homogeneous Neumann at `x_max`.
//!
//! The Stefan form uses `L = alpha Lambda`, `beta = 2/alpha`,
//! `eps = beta/kappa` and `u(t,x) = V(t, x - L_t)`, for which
//! `u(t, L_t) = eps Ldot_t` and `(beta - 2u) Ldot = u_x` on the front.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::paths::{LossCurve, TimeGrid};
use crate::quad::integrate_pieces;
use crate::sampling::{InitialLaw, ModelParams};

/// Densities below this are a scheme violation.
pub const NEGATIVITY_TOL: f64 = -1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeGrid {
    pub x_max: f64,
    pub nx: usize,
    pub dt: f64,
    pub t_end: f64,
}

impl PdeGrid {
    pub fn validate(&self) -> Result<()> {
        let ok = self.x_max > 0.0
            && self.x_max.is_finite()
            && self.nx >= 4
            && self.dt > 0.0
            && self.t_end > 0.0
            && self.t_end.is_finite();
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid PDE grid {self:?}")))
        }
    }

    pub fn dx(&self) -> f64 {
        self.x_max / self.nx as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..=self.nx).map(|j| j as f64 * self.dx()).collect()
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Same grid with `dx` and `dt` halved.
    pub fn refined(&self) -> Self {
        Self { nx: 2 * self.nx, dt: 0.5 * self.dt, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityState {
    pub v: Vec<f64>,
    /// Accumulated loss from the boundary flux.
    pub loss: f64,
    pub time: f64,
    /// Lagged loss rate `(kappa/2) V(t,0)` used by the next drift step.
    pub loss_rate: f64,
    /// Net mass that left through `x_max` (negative for inflow).
    pub outflow: f64,
}

impl DensityState {
    pub fn new(v: Vec<f64>, kappa: f64) -> Self {
        let loss_rate = 0.5 * kappa * v[0];
        Self { v, loss: 0.0, time: 0.0, loss_rate, outflow: 0.0 }
    }

    pub fn mass(&self, dx: f64) -> f64 {
        trapezoid(&self.v, dx)
    }

    /// `|mass + loss + outflow - 1|`.
    pub fn mass_defect(&self, dx: f64) -> f64 {
        (self.mass(dx) + self.loss + self.outflow - 1.0).abs()
    }
}

pub fn trapezoid(v: &[f64], dx: f64) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    dx * (v[1..n - 1].iter().sum::<f64>() + 0.5 * (v[0] + v[n - 1]))
}

fn check_coefficients(params: &ModelParams) -> Result<()> {
    let ok = params.alpha >= 0.0 && params.alpha.is_finite() && params.kappa >= 0.0 && params.kappa.is_finite();
    if ok {
        Ok(())
    } else {
        Err(invalid(format!("need alpha, kappa >= 0, got {}, {}", params.alpha, params.kappa)))
    }
}

/// Tridiagonal solve in place; `sub[i]` and `sup[i]` are the entries left and
/// right of `diag[i]`.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = diag[0];
    c[0] = sup[0] / d;
    rhs[0] /= d;
    for i in 1..n {
        d = diag[i] - sub[i] * c[i - 1];
        if i < n - 1 {
            c[i] = sup[i] / d;
        }
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / d;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// One drift-then-diffusion step.
pub fn pde_step(state: &DensityState, params: &ModelParams, grid: &PdeGrid) -> Result<DensityState> {
    check_coefficients(params)?;
    grid.validate()?;
    let nx = grid.nx;
    if state.v.len() != nx + 1 {
        return Err(Error::GridMismatch(format!("state has {} values, grid {}", state.v.len(), nx + 1)));
    }
    let (dt, dx) = (grid.dt, grid.dx());
    let speed = params.alpha * state.loss_rate;
    let courant = speed * dt / dx;
    if courant > 1.0 {
        return Err(Error::SchemeViolation {
            time: state.time,
            reason: format!("drift Courant number {courant:.3} exceeds 1"),
        });
    }

    // leftward transport, upwinded from the right; Neumann copy beyond x_max
    let v = &state.v;
    let mut rhs: Vec<f64> = (0..=nx)
        .map(|j| {
            let right = if j < nx { v[j + 1] } else { v[nx] };
            v[j] + courant * (right - v[j])
        })
        .collect();
    let inflow = dt * speed * v[nx];

    let g = params.kappa - 2.0 * speed;
    let r = dt / (dx * dx);
    let mut sub = vec![-0.5 * r; nx + 1];
    let mut sup = vec![-0.5 * r; nx + 1];
    let mut diag = vec![1.0 + r; nx + 1];
    // ghost value V_{-1} = V_1 - 2 dx g V_0
    diag[0] = 1.0 + r * (1.0 + dx * g);
    sup[0] = -r;
    sub[0] = 0.0;
    // ghost value V_{nx+1} = V_{nx-1}
    sub[nx] = -r;
    sup[nx] = 0.0;
    thomas(&sub, &diag, &sup, &mut rhs);

    let time = state.time + dt;
    if let Some((j, &x)) = rhs.iter().enumerate().find(|(_, &x)| x < NEGATIVITY_TOL || !x.is_finite()) {
        return Err(Error::SchemeViolation { time, reason: format!("density {x:e} at node {j}") });
    }
    let loss_rate = 0.5 * params.kappa * rhs[0];
    Ok(DensityState {
        loss: state.loss + 0.5 * dt * (state.loss_rate + loss_rate),
        time,
        loss_rate,
        outflow: state.outflow - inflow,
        v: rhs,
    })
}

/// Initial density on the PDE nodes: the law convolved with a Gaussian of
/// standard deviation `width` and folded at zero, renormalized to unit
/// trapezoidal mass. `width = 0` samples the law's density directly.
pub fn initial_density(law: &InitialLaw, grid: &PdeGrid, width: f64) -> Result<Vec<f64>> {
    law.validate()?;
    grid.validate()?;
    if !(width >= 0.0) || !width.is_finite() {
        return Err(invalid(format!("mollification width must be >= 0, got {width}")));
    }
    let xs = grid.xs();
    let v: Vec<f64> = if width == 0.0 {
        if !law.has_density() {
            return Err(invalid("a point mass needs a positive mollification width"));
        }
        xs.iter().map(|&x| law.pdf(x).expect("law has a density")).collect()
    } else {
        let kernel = |z: f64| (-0.5 * (z / width).powi(2)).exp() / (width * (2.0 * std::f64::consts::PI).sqrt());
        let folded = |x: f64, y: f64| kernel(x - y) + kernel(x + y);
        match *law {
            InitialLaw::PointMass { x0 } => xs.iter().map(|&x| folded(x, x0)).collect(),
            InitialLaw::Uniform { a, b } => {
                let tail = |z: f64| 0.5 * erfc(z / (width * std::f64::consts::SQRT_2));
                let conv = |x: f64| (tail(a - x) - tail(b - x)) / (b - a);
                xs.iter().map(|&x| conv(x) + conv(-x)).collect()
            }
            _ => {
                let hi = law.upper_cutoff();
                xs.iter()
                    .map(|&x| {
                        let f = |y: f64| folded(x, y) * law.pdf(y).expect("law has a density");
                        let lo = (x - 10.0 * width).clamp(0.0, hi);
                        let up = (x + 10.0 * width).clamp(0.0, hi);
                        integrate_pieces(f, &[lo, up], 1e-12).value
                    })
                    .collect()
            }
        }
    };
    let mass = trapezoid(&v, grid.dx());
    if !(mass > 0.0) {
        return Err(invalid("initial density has no mass on the PDE grid"));
    }
    Ok(v.into_iter().map(|x| x / mass).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeOptions {
    /// Model-grid nodes at which the full density is kept.
    pub snapshot_nodes: Vec<usize>,
    /// Mass allowed in the outer 5% of the domain before the truncation
    /// warning is raised.
    pub truncation_tol: f64,
}

impl PdeOptions {
    /// About ten evenly spaced snapshots including both ends.
    pub fn every_tenth(grid: &TimeGrid) -> Self {
        let stride = (grid.n_steps / 10).max(1);
        let mut snapshot_nodes: Vec<usize> = (0..=grid.n_steps).step_by(stride).collect();
        if snapshot_nodes.last() != Some(&grid.n_steps) {
            snapshot_nodes.push(grid.n_steps);
        }
        Self { snapshot_nodes, truncation_tol: 1e-6 }
    }
}

/// Kinetic-undercooling diagnostics at one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StefanCheck {
    pub time: f64,
    pub front: f64,
    pub front_speed: f64,
    /// `u(t, L_t)`.
    pub boundary_value: f64,
    /// `eps * Ldot_t`.
    pub undercooling: f64,
    /// `|u(t, L_t) - eps Ldot_t|`.
    pub undercooling_residual: f64,
    /// `|(beta - 2u) Ldot - u_x|` on the front.
    pub flux_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeSolution {
    pub grid: PdeGrid,
    pub snapshots: Vec<DensityState>,
    pub loss_curve: LossCurve,
    /// `1 - mass - outflow` after every step, starting at time 0.
    pub mass_loss: Vec<f64>,
    pub max_mass_defect: f64,
    pub max_tail_mass: f64,
    pub truncation_warning: bool,
    pub stefan: Vec<StefanCheck>,
}

pub fn pde_solve(params: &ModelParams, grid: &PdeGrid, initial: &[f64]) -> Result<PdeSolution> {
    pde_solve_with(params, grid, initial, &PdeOptions::every_tenth(&params.grid))
}

pub fn pde_solve_with(params: &ModelParams, grid: &PdeGrid, initial: &[f64], opts: &PdeOptions) -> Result<PdeSolution> {
    check_coefficients(params)?;
    grid.validate()?;
    let model = params.grid;
    if (grid.t_end - model.t_end).abs() > 1e-9 * model.t_end {
        return Err(Error::GridMismatch(format!("PDE t_end {} vs model {}", grid.t_end, model.t_end)));
    }
    let per_node = (model.dt() / grid.dt).round() as usize;
    if per_node == 0 || (per_node as f64 * grid.dt - model.dt()).abs() > 1e-9 * model.dt() {
        return Err(Error::GridMismatch(format!(
            "model step {} is not a multiple of PDE step {}",
            model.dt(),
            grid.dt
        )));
    }
    if initial.len() != grid.nx + 1 {
        return Err(Error::GridMismatch(format!("initial density has {} values, grid {}", initial.len(), grid.nx + 1)));
    }
    let dx = grid.dx();
    if initial.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(invalid("initial density must be finite and nonnegative"));
    }
    let mass0 = trapezoid(initial, dx);
    if (mass0 - 1.0).abs() > 1e-8 {
        return Err(invalid(format!("initial density has mass {mass0}, expected 1")));
    }

    let tail_start = ((0.95 * grid.nx as f64).floor() as usize).min(grid.nx - 1);
    let tail_mass = |v: &[f64]| trapezoid(&v[tail_start..], dx);

    let mut state = DensityState::new(initial.to_vec(), params.kappa);
    let mut losses = vec![0.0];
    let mut mass_loss = vec![1.0 - mass0];
    let mut snapshots = Vec::new();
    let mut snapshot_steps = Vec::new();
    let mut max_defect = state.mass_defect(dx);
    let mut max_tail = tail_mass(&state.v);
    if opts.snapshot_nodes.contains(&0) {
        snapshots.push(state.clone());
        snapshot_steps.push(0);
    }
    for k in 1..=model.n_steps {
        for _ in 0..per_node {
            state = pde_step(&state, params, grid)?;
            mass_loss.push(1.0 - state.mass(dx) - state.outflow);
            max_defect = max_defect.max(state.mass_defect(dx));
            max_tail = max_tail.max(tail_mass(&state.v));
        }
        losses.push(state.loss.min(1.0));
        if opts.snapshot_nodes.contains(&k) {
            snapshots.push(state.clone());
            snapshot_steps.push(k * per_node);
        }
    }

    let stefan = snapshots
        .iter()
        .zip(&snapshot_steps)
        .filter(|&(_, &n)| n > 0 && n + 1 < mass_loss.len())
        .map(|(s, &n)| {
            let rate = (mass_loss[n + 1] - mass_loss[n - 1]) / (2.0 * grid.dt);
            stefan_check(s, params.alpha, params.kappa, dx, rate)
        })
        .collect();

    Ok(PdeSolution {
        grid: *grid,
        snapshots,
        loss_curve: LossCurve::new(model, losses)?,
        mass_loss,
        max_mass_defect: max_defect,
        max_tail_mass: max_tail,
        truncation_warning: max_tail > opts.truncation_tol,
        stefan,
    })
}

/// The density in Stefan coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct StefanProfile {
    pub time: f64,
    pub beta: f64,
    pub epsilon: f64,
    /// Front position `L_t = alpha Lambda_t`.
    pub front: f64,
    /// Positions `x + L_t` at which `u` is sampled.
    pub xs: Vec<f64>,
    pub u: Vec<f64>,
}

pub fn stefan_transform(state: &DensityState, alpha: f64, kappa: f64, dx: f64) -> Result<StefanProfile> {
    if !(alpha > 0.0) || !(kappa > 0.0) {
        return Err(invalid("the Stefan form needs alpha > 0 and kappa > 0"));
    }
    let beta = 2.0 / alpha;
    let front = alpha * state.loss;
    Ok(StefanProfile {
        time: state.time,
        beta,
        epsilon: beta / kappa,
        front,
        xs: (0..state.v.len()).map(|j| front + j as f64 * dx).collect(),
        u: state.v.clone(),
    })
}

/// Check the front conditions with `Ldot` from the given loss rate, which
/// should come from the mass balance rather than the boundary flux.
fn stefan_check(state: &DensityState, alpha: f64, kappa: f64, dx: f64, loss_rate: f64) -> StefanCheck {
    let beta = 2.0 / alpha;
    let epsilon = beta / kappa;
    let front_speed = alpha * loss_rate;
    let u = &state.v;
    let ux = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx);
    let undercooling = epsilon * front_speed;
    StefanCheck {
        time: state.time,
        front: alpha * state.loss,
        front_speed,
        boundary_value: u[0],
        undercooling,
        undercooling_residual: (u[0] - undercooling).abs(),
        flux_residual: ((beta - 2.0 * u[0]) * front_speed - ux).abs(),
    }
}
