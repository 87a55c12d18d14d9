//! Error norms, convergence orders, Courant numbers, balance residuals and
//! sampling of DG fields onto uniform grids.

use std::str::FromStr;

use nalgebra::DMatrix;

use crate::discretization::DgSpace;
use crate::error::{Error, Result};
use crate::scenarios::Background;
use crate::thermo::{ConservedField, GasConstants};

/// Uniform grid of cell centres covering the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleGrid {
    pub nx: usize,
    pub nz: usize,
    pub lx: f64,
    pub lz: f64,
}

impl SampleGrid {
    pub fn new(nx: usize, nz: usize, lx: f64, lz: f64) -> Result<Self> {
        if nx == 0 || nz == 0 {
            return Err(Error::param("grid", "sample counts must be at least 1"));
        }
        if !(lx > 0.0 && lz > 0.0) {
            return Err(Error::param("grid", "extents must be positive"));
        }
        Ok(SampleGrid { nx, nz, lx, lz })
    }

    /// `per` samples per element in each direction.
    pub fn per_element(space: &DgSpace, per: usize) -> Result<Self> {
        let m = space.mesh();
        Self::new(m.nx() * per, m.nz() * per, m.lx(), m.lz())
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.lx / self.nx as f64
    }

    pub fn z(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.lz / self.nz as f64
    }
}

/// Derived quantities that can be sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// Vertical velocity.
    W,
    /// Horizontal velocity (the background is at rest, so `u' = u`).
    U,
    /// Transverse velocity.
    V,
    /// Temperature perturbation `T − T₀`.
    TempPert,
    /// Pressure perturbation `p − p₀(z)`.
    PressPert,
    Rho,
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "w" => Quantity::W,
            "u" => Quantity::U,
            "v" => Quantity::V,
            "Tp" => Quantity::TempPert,
            "pp" => Quantity::PressPert,
            "rho" => Quantity::Rho,
            other => return Err(Error::UnknownQuantity(other.to_string())),
        })
    }
}

/// Nodal values of a derived quantity.
pub fn nodal_quantity(
    space: &DgSpace,
    gas: &GasConstants,
    state: &ConservedField,
    quantity: Quantity,
    background: &Background,
) -> Result<Vec<f64>> {
    space.check_len(&state.rho, 1)?;
    let n = state.len();
    Ok(match quantity {
        Quantity::Rho => state.rho.clone(),
        Quantity::U => (0..n).map(|k| state.mx[k] / state.rho[k]).collect(),
        Quantity::V => (0..n).map(|k| state.my[k] / state.rho[k]).collect(),
        Quantity::W => (0..n).map(|k| state.mz[k] / state.rho[k]).collect(),
        Quantity::PressPert => {
            let p = state.pressure(gas);
            (0..n).map(|k| p[k] - background.pressure(space.node_z()[k])).collect()
        }
        Quantity::TempPert => {
            let p = state.pressure(gas);
            (0..n)
                .map(|k| p[k] / (state.rho[k] * gas.r_gas) - background.t0)
                .collect()
        }
    })
}

/// Point evaluation of a nodal field on every grid point; rows are z, columns x.
pub fn sample_nodal(space: &DgSpace, field: &[f64], grid: &SampleGrid) -> Result<DMatrix<f64>> {
    space.check_len(field, 1)?;
    let mut out = DMatrix::zeros(grid.nz, grid.nx);
    // Reference coordinates repeat column by column; cache the basis values.
    let xs: Vec<_> = (0..grid.nx)
        .map(|i| {
            let (e, xi, _) = space.locate(grid.x(i), 0.0);
            (space.mesh().element_coords(e).0, space.basis().lagrange_values(xi))
        })
        .collect();
    for j in 0..grid.nz {
        let (e0, _, eta) = space.locate(0.0, grid.z(j));
        let ez = space.mesh().element_coords(e0).1;
        let lz = space.basis().lagrange_values(eta);
        for (i, (ex, lx)) in xs.iter().enumerate() {
            let e = space.mesh().element_index(*ex, ez);
            out[(j, i)] = space.contract(field, e, lx, &lz);
        }
    }
    Ok(out)
}

/// Samples a derived quantity of the state on a grid.
pub fn sample_field(
    space: &DgSpace,
    gas: &GasConstants,
    state: &ConservedField,
    quantity: Quantity,
    grid: &SampleGrid,
    background: &Background,
) -> Result<DMatrix<f64>> {
    let nodal = nodal_quantity(space, gas, state, quantity, background)?;
    sample_nodal(space, &nodal, grid)
}

/// Discrete `l²` (root mean square) and `l∞` norms of `a − b`.
pub fn error_norms(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(f64, f64)> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    if a.is_empty() {
        return Ok((0.0, 0.0));
    }
    let mut sq = 0.0;
    let mut mx: f64 = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = x - y;
        sq += d * d;
        mx = mx.max(d.abs());
    }
    Ok(((sq / a.len() as f64).sqrt(), mx))
}

/// Pairwise orders `log(e₂/e₁) / log(Δx₂/Δx₁)` for strictly decreasing `Δx`.
pub fn eoc(errors: &[f64], resolutions: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != resolutions.len() || errors.len() < 2 {
        return Err(Error::ShapeMismatch(format!(
            "need at least two matching entries, got {} errors and {} resolutions",
            errors.len(),
            resolutions.len()
        )));
    }
    if resolutions.windows(2).any(|w| !(w[1] < w[0])) || resolutions.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::param("resolutions", "must be positive and strictly decreasing"));
    }
    Ok(errors
        .windows(2)
        .zip(resolutions.windows(2))
        .map(|(e, h)| (e[1] / e[0]).ln() / (h[1] / h[0]).ln())
        .collect())
}

/// Acoustic and advective Courant numbers `r c Δt √d / 𝓗` with `d = 2`,
/// `c` the largest nodal sound speed and `𝓗` the minimum element diameter.
pub fn courant_numbers(
    space: &DgSpace,
    gas: &GasConstants,
    state: &ConservedField,
    dt: f64,
    u_ref: f64,
) -> Result<(f64, f64)> {
    if !(u_ref > 0.0) {
        return Err(Error::param("u_ref", format!("must be positive, got {u_ref}")));
    }
    let p = state.pressure(gas);
    let c = (0..state.len())
        .map(|k| gas.sound_speed(state.rho[k], p[k]))
        .fold(0.0, f64::max);
    Ok(courant_from_speed(space, c, dt, u_ref))
}

/// Courant numbers for a given sound speed.
pub fn courant_from_speed(space: &DgSpace, c: f64, dt: f64, u_ref: f64) -> (f64, f64) {
    let r = space.basis().degree() as f64;
    let scale = r * dt * std::f64::consts::SQRT_2 / space.mesh().min_diameter();
    (scale * c, scale * u_ref)
}

/// Domain mean of `|∂ₓp / ρ − f v|` by the midpoint rule on `grid`, with
/// `∂ₓp` the exact derivative of the local pressure polynomial.
pub fn geostrophic_error(space: &DgSpace, gas: &GasConstants, state: &ConservedField, grid: &SampleGrid) -> Result<f64> {
    space.check_len(&state.rho, 1)?;
    let p = state.pressure(gas);
    let dpdx = space.x_derivative(&p);
    let v: Vec<f64> = state.my.iter().zip(&state.rho).map(|(m, r)| m / r).collect();
    let d = sample_nodal(space, &dpdx, grid)?;
    let rho = sample_nodal(space, &state.rho, grid)?;
    let vs = sample_nodal(space, &v, grid)?;
    let mut sum = 0.0;
    for k in 0..d.len() {
        sum += (d[k] / rho[k] - gas.f * vs[k]).abs();
    }
    Ok(sum / d.len() as f64)
}

/// Quadrature-weighted totals of mass and energy.
pub fn conservation_totals(space: &DgSpace, state: &ConservedField) -> Result<(f64, f64)> {
    space.check_len(&state.rho, 1)?;
    let w = space.mass();
    let mass = w.iter().zip(&state.rho).map(|(w, r)| w * r).sum();
    let energy = w.iter().zip(&state.energy).map(|(w, e)| w * e).sum();
    Ok((mass, energy))
}

/// Largest absolute nodal value.
pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
