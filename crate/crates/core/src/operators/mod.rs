//! Matrix-free actions of the stage operators.
//!
//! Velocity-space vectors are flat `[x..., y..., z...]` blocks of length `3N`;
//! pressure-space vectors have length `N`, with `N` the scalar dof count.
//! With collocated quadrature the density-weighted mass `A`, the energy mass
//! `D`, the gravity coupling `M_g` and the gravity vector `f_g` are diagonal,
//! and `(A + R)^{-1}` is a pointwise 2×2 rotation applied after `A^{-1}`.

pub mod dense;
pub(crate) mod kernels;
mod rhs;
mod tendency;

pub use rhs::{energy_history, energy_rhs, explicit_density, momentum_rhs};
pub use tendency::Tendency;

use crate::discretization::DgSpace;
use crate::error::{Error, Result};
use crate::imex::ButcherPair;
use crate::thermo::GasConstants;
use kernels::{add_advection, add_gradient, add_residual, traces, FaceVelocity, WallFlux};

/// Coefficients of one implicit stage `l` (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct StageContext {
    pub stage: usize,
    pub dt: f64,
    /// Implicit diagonal weight `ã_ll`.
    pub a_diag: f64,
    /// Explicit weights `a_lm`, `m < l`.
    pub explicit: Vec<f64>,
    /// Implicit weights `ã_lm`, `m < l`.
    pub implicit: Vec<f64>,
    /// `ã_ll Δt f`.
    pub beta: f64,
}

impl StageContext {
    pub fn new(tableau: &ButcherPair, stage: usize, dt: f64, coriolis: f64) -> Self {
        assert!((1..=3).contains(&stage), "stage index {stage} out of range");
        let l = stage - 1;
        let a_diag = tableau.implicit[l][l];
        StageContext {
            stage,
            dt,
            a_diag,
            explicit: tableau.explicit[l][..l].to_vec(),
            implicit: tableau.implicit[l][..l].to_vec(),
            beta: a_diag * dt * coriolis,
        }
    }

    /// A context with no history, for exercising the linear operators alone.
    pub fn synthetic(a_diag: f64, dt: f64, coriolis: f64) -> Self {
        StageContext {
            stage: 2,
            dt,
            a_diag,
            explicit: Vec::new(),
            implicit: Vec::new(),
            beta: a_diag * dt * coriolis,
        }
    }

    /// `ã_ll Δt`.
    pub fn implicit_scale(&self) -> f64 {
        self.a_diag * self.dt
    }
}

/// A linear map on dof vectors.
pub trait OperatorAction {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows()];
        self.apply(x, &mut y);
        y
    }
}

impl OperatorAction for nalgebra::DMatrix<f64> {
    fn rows(&self) -> usize {
        self.nrows()
    }

    fn cols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = (0..self.ncols()).map(|c| self[(r, c)] * x[c]).sum();
        }
    }
}

/// A closure viewed as a square operator.
pub struct FnOperator<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnOperator<F> {
    pub fn new(n: usize, f: F) -> Self {
        FnOperator { n, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> OperatorAction for FnOperator<F> {
    fn rows(&self) -> usize {
        self.n
    }

    fn cols(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

/// The matrix-free operator set on one discrete space.
#[derive(Debug, Clone, Copy)]
pub struct DgOperators<'a> {
    pub space: &'a DgSpace,
    pub gas: &'a GasConstants,
}

impl<'a> DgOperators<'a> {
    pub fn new(space: &'a DgSpace, gas: &'a GasConstants) -> Self {
        DgOperators { space, gas }
    }

    fn n(&self) -> usize {
        self.space.n_dofs()
    }

    /// `A u`: density-weighted mass applied per velocity component.
    pub fn mass_rho(&self, u: &[f64], rho: &[f64]) -> Result<Vec<f64>> {
        self.space.check_len(u, 3)?;
        self.space.check_len(rho, 1)?;
        let n = self.n();
        let w = self.space.mass();
        let mut out = vec![0.0; 3 * n];
        for c in 0..3 {
            for k in 0..n {
                out[c * n + k] = w[k] * rho[k] * u[c * n + k];
            }
        }
        Ok(out)
    }

    /// `A^{-1} v`.
    pub fn inv_mass_rho(&self, v: &[f64], rho: &[f64]) -> Result<Vec<f64>> {
        self.space.check_len(v, 3)?;
        self.space.check_len(rho, 1)?;
        check_positive(rho)?;
        let n = self.n();
        let mut out = vec![0.0; 3 * n];
        self.inv_mass_rho_into(v, rho, &mut out);
        Ok(out)
    }

    pub(crate) fn inv_mass_rho_into(&self, v: &[f64], rho: &[f64], out: &mut [f64]) {
        let n = self.n();
        let w = self.space.mass();
        for k in 0..n {
            let inv = 1.0 / (w[k] * rho[k]);
            out[k] = v[k] * inv;
            out[n + k] = v[n + k] * inv;
            out[2 * n + k] = v[2 * n + k] * inv;
        }
    }

    /// `R u = β A J u` with `J u = k × u`.
    pub fn coriolis(&self, u: &[f64], rho: &[f64], ctx: &StageContext) -> Result<Vec<f64>> {
        self.space.check_len(u, 3)?;
        self.space.check_len(rho, 1)?;
        let n = self.n();
        let w = self.space.mass();
        let mut out = vec![0.0; 3 * n];
        for k in 0..n {
            let a = ctx.beta * w[k] * rho[k];
            out[k] = -a * u[n + k];
            out[n + k] = a * u[k];
        }
        Ok(out)
    }

    /// `(A + R)^{-1} v = (I + βJ)^{-1} A^{-1} v`.
    pub fn inv_mass_coriolis(&self, v: &[f64], rho: &[f64], ctx: &StageContext) -> Result<Vec<f64>> {
        self.space.check_len(v, 3)?;
        self.space.check_len(rho, 1)?;
        check_positive(rho)?;
        let mut out = vec![0.0; v.len()];
        self.inv_mass_coriolis_into(v, rho, ctx.beta, &mut out);
        Ok(out)
    }

    pub(crate) fn inv_mass_coriolis_into(&self, v: &[f64], rho: &[f64], beta: f64, out: &mut [f64]) {
        self.inv_mass_rho_into(v, rho, out);
        rotate_horizontal(out, self.n(), beta);
    }

    /// `B p`: weak pressure gradient with centered face averages, scaled by `ã_ll Δt`.
    pub fn pressure_gradient(&self, p: &[f64], ctx: &StageContext) -> Result<Vec<f64>> {
        self.space.check_len(p, 1)?;
        let mut out = vec![0.0; 3 * self.n()];
        self.pressure_gradient_into(p, ctx.implicit_scale(), &mut out);
        Ok(out)
    }

    pub(crate) fn pressure_gradient_into(&self, p: &[f64], scale: f64, out: &mut [f64]) {
        let n = self.n();
        out.iter_mut().for_each(|v| *v = 0.0);
        let (ox, rest) = out.split_at_mut(n);
        let oz = &mut rest[n..];
        add_gradient(self.space, p, &traces(self.space, p), -scale, ox, oz);
    }

    /// `C u`: weak divergence of `hρ u` with centered averages and no wall
    /// flux, scaled by `ã_ll Δt`. `h_rho` holds nodal `h ρ` of the iterate.
    pub fn enthalpy_divergence(&self, u: &[f64], h_rho: &[f64], ctx: &StageContext) -> Result<Vec<f64>> {
        self.space.check_len(u, 3)?;
        self.space.check_len(h_rho, 1)?;
        let mut out = vec![0.0; self.n()];
        self.enthalpy_divergence_into(u, h_rho, ctx.implicit_scale(), &mut out);
        Ok(out)
    }

    pub(crate) fn enthalpy_divergence_into(&self, u: &[f64], h_rho: &[f64], scale: f64, out: &mut [f64]) {
        let h_tr = traces(self.space, h_rho);
        self.enthalpy_divergence_traced(u, h_rho, &h_tr, scale, out);
    }

    /// As [`Self::enthalpy_divergence_into`] with precomputed traces of `hρ`.
    pub(crate) fn enthalpy_divergence_traced(
        &self,
        u: &[f64],
        h_rho: &[f64],
        h_tr: &[f64],
        scale: f64,
        out: &mut [f64],
    ) {
        let fv = FaceVelocity::traces_only(self.space, u);
        out.iter_mut().for_each(|v| *v = 0.0);
        add_advection(self.space, h_rho, h_tr, u, (&fv.ut, &fv.wt), None, WallFlux::Zero, -scale, out);
    }

    /// `D p = M p / (γ − 1)`.
    pub fn energy_mass(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.space.check_len(p, 1)?;
        let s = 1.0 / (self.gas.gamma - 1.0);
        Ok(p.iter().zip(self.space.mass()).map(|(p, w)| s * w * p).collect())
    }

    /// `M_g u = g ã_ll Δt ∫ ρ (k·u) ψ_i`.
    pub fn gravity_coupling(&self, u: &[f64], rho: &[f64], ctx: &StageContext) -> Result<Vec<f64>> {
        self.space.check_len(u, 3)?;
        self.space.check_len(rho, 1)?;
        let n = self.n();
        let c = self.gas.g * ctx.implicit_scale();
        let w = self.space.mass();
        Ok((0..n).map(|k| c * w[k] * rho[k] * u[2 * n + k]).collect())
    }

    /// `f_g`: vertical component `g ã_ll Δt ∫ ρ ψ_i`.
    pub fn gravity_vector(&self, rho: &[f64], ctx: &StageContext) -> Result<Vec<f64>> {
        self.space.check_len(rho, 1)?;
        let n = self.n();
        let c = self.gas.g * ctx.implicit_scale();
        let w = self.space.mass();
        let mut out = vec![0.0; 3 * n];
        for k in 0..n {
            out[2 * n + k] = c * w[k] * rho[k];
        }
        Ok(out)
    }

    /// `k_i = ∫ ρ |u|²/2 ψ_i`.
    pub fn kinetic_vector(&self, u: &[f64], rho: &[f64]) -> Result<Vec<f64>> {
        self.space.check_len(u, 3)?;
        self.space.check_len(rho, 1)?;
        let n = self.n();
        let w = self.space.mass();
        Ok((0..n)
            .map(|k| {
                let (a, b, c) = (u[k], u[n + k], u[2 * n + k]);
                0.5 * w[k] * rho[k] * (a * a + b * b + c * c)
            })
            .collect())
    }

    /// Rusanov jump penalty `−∫ λ/2 [[q]]·[[ψ_i]]` on a scalar nodal field,
    /// with `λ` from the given velocity. Zero on walls.
    pub fn jump_penalty(&self, q: &[f64], velocity: &[f64]) -> Result<Vec<f64>> {
        self.space.check_len(q, 1)?;
        self.space.check_len(velocity, 3)?;
        let fv = FaceVelocity::new(self.space, velocity);
        let mut out = vec![0.0; self.n()];
        add_residual(self.space, None, None, Some((q, &fv.lambda)), WallFlux::Zero, 1.0, &mut out);
        Ok(out)
    }
}

fn check_positive(rho: &[f64]) -> Result<()> {
    if let Some(k) = rho.iter().position(|r| !(*r > 0.0)) {
        return Err(Error::InvalidState {
            dof: Some(k),
            reason: format!("non-positive density {:e}", rho[k]),
        });
    }
    Ok(())
}

/// Pointwise `(I + βJ)^{-1}` on the horizontal pair.
pub(crate) fn rotate_horizontal(v: &mut [f64], n: usize, beta: f64) {
    if beta == 0.0 {
        return;
    }
    let s = 1.0 / (1.0 + beta * beta);
    let (x, rest) = v.split_at_mut(n);
    let y = &mut rest[..n];
    for k in 0..n {
        let (a, b) = (x[k], y[k]);
        x[k] = s * (a + beta * b);
        y[k] = s * (-beta * a + b);
    }
}
