//! Initial states for the inertia-gravity-wave channel benchmarks.

use crate::discretization::DgSpace;
use crate::error::{Error, Result};
use crate::thermo::{conserved_from_primitive, ConservedField, GasConstants};

/// Parameters of the inertia-gravity-wave test in a hydrostatic, isothermal
/// background.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaldaufParams {
    pub lx: f64,
    /// Channel height `H`.
    pub lz: f64,
    /// Background temperature, K.
    pub t0: f64,
    /// Surface pressure, Pa.
    pub p_s: f64,
    /// Perturbation amplitude, K.
    pub delta_t: f64,
    /// Gaussian half-width, m.
    pub a: f64,
    pub xc: f64,
    /// Coriolis parameter, s^-1.
    pub f: f64,
    pub tf: f64,
    pub dt: f64,
    pub nx: usize,
    pub nz: usize,
    pub degree: usize,
}

impl BaldaufParams {
    /// Inverse scale height `δ = g / (R T₀)`.
    pub fn delta(&self, gas: &GasConstants) -> f64 {
        gas.g / (gas.r_gas * self.t0)
    }

    /// Surface density `ρ_s = p_s δ / g`.
    pub fn rho_s(&self, gas: &GasConstants) -> f64 {
        self.p_s / (gas.r_gas * self.t0)
    }

    pub fn background(&self, gas: &GasConstants) -> Background {
        Background {
            p_s: self.p_s,
            t0: self.t0,
            delta: self.delta(gas),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("Lx", self.lx),
            ("Lz", self.lz),
            ("T0", self.t0),
            ("p_s", self.p_s),
            ("a", self.a),
            ("dt", self.dt),
            ("tf", self.tf),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !self.delta_t.is_finite() || !self.xc.is_finite() || !self.f.is_finite() {
            return Err(Error::param("dT/xc/f", "must be finite"));
        }
        if self.nx == 0 || self.nz == 0 {
            return Err(Error::param("nx/nz", "element counts must be positive"));
        }
        if self.delta_t.abs() >= self.t0 {
            return Err(Error::param("dT", "perturbation must be smaller than T0"));
        }
        Ok(())
    }

    /// Number of steps to reach `tf` (rounded to the nearest integer).
    pub fn steps(&self) -> usize {
        (self.tf / self.dt).round() as usize
    }

    pub fn space(&self) -> Result<DgSpace> {
        DgSpace::build(self.nx, self.nz, self.lx, self.lz, self.degree)
    }
}

/// Isothermal hydrostatic background `p₀ = p_s e^{−δz}`, `T = T₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Background {
    pub p_s: f64,
    pub t0: f64,
    pub delta: f64,
}

impl Background {
    pub fn pressure(&self, z: f64) -> f64 {
        self.p_s * (-self.delta * z).exp()
    }
}

/// 6000 km × 10 km channel, 300 × 20 elements of degree 4.
pub fn standard_baldauf_config() -> BaldaufParams {
    BaldaufParams {
        lx: 6.0e6,
        lz: 1.0e4,
        t0: 250.0,
        p_s: 1.0e5,
        delta_t: 0.01,
        a: 1.0e5,
        xc: 3.0e6,
        f: 1.03126e-4,
        tf: 28_800.0,
        dt: 0.5,
        nx: 300,
        nz: 20,
        degree: 4,
    }
}

/// Horizontally stretched variant: ten times longer channel and bubble.
pub fn planetary_config() -> BaldaufParams {
    BaldaufParams {
        lx: 6.0e7,
        a: 1.0e6,
        xc: 3.0e7,
        dt: 10.0,
        tf: 345_600.0,
        ..standard_baldauf_config()
    }
}

/// Reduced channel for desk-scale runs: 600 km × 10 km, 60 × 10 elements of
/// degree 2, 30 minutes.
pub fn desk_baldauf_config() -> BaldaufParams {
    BaldaufParams {
        lx: 6.0e5,
        a: 1.0e4,
        xc: 3.0e5,
        dt: 2.0,
        tf: 1800.0,
        nx: 60,
        nz: 10,
        degree: 2,
        ..standard_baldauf_config()
    }
}

/// Reduced rotating run: 6000 km × 10 km, 150 × 10 elements of degree 2, 12 h.
pub fn desk_planetary_config() -> BaldaufParams {
    BaldaufParams {
        dt: 20.0,
        tf: 43_200.0,
        nx: 150,
        nz: 10,
        degree: 2,
        ..standard_baldauf_config()
    }
}

/// Temperature perturbation `T_b = ΔT e^{−(x−x_c)²/a²} sin(πz/H)`.
pub fn bubble(params: &BaldaufParams, x: f64, z: f64) -> f64 {
    let s = (x - params.xc) / params.a;
    params.delta_t * (-s * s).exp() * (std::f64::consts::PI * z / params.lz).sin()
}

/// Nodal initial state: hydrostatic pressure, `T = T₀ + e^{δz/2} T_b`,
/// `ρ = p / (R T)`, at rest.
pub fn baldauf_initial_state(params: &BaldaufParams, space: &DgSpace, gas: &GasConstants) -> Result<ConservedField> {
    params.validate()?;
    let mesh = space.mesh();
    if (mesh.lx() - params.lx).abs() > 1e-9 * params.lx || (mesh.lz() - params.lz).abs() > 1e-9 * params.lz {
        return Err(Error::param(
            "mesh",
            format!(
                "spans {} x {} but the scenario needs {} x {}",
                mesh.lx(),
                mesh.lz(),
                params.lx,
                params.lz
            ),
        ));
    }
    let delta = params.delta(gas);
    let n = space.n_dofs();
    let mut q = ConservedField::zeros(n);
    for k in 0..n {
        let (x, z) = (space.node_x()[k], space.node_z()[k]);
        let p = params.p_s * (-delta * z).exp();
        let t = params.t0 + (0.5 * delta * z).exp() * bubble(params, x, z);
        let rho = p / (gas.r_gas * t);
        q.set(k, conserved_from_primitive(rho, 0.0, 0.0, 0.0, p, gas)?);
    }
    Ok(q)
}

/// The unperturbed hydrostatic background.
pub fn rest_state(params: &BaldaufParams, space: &DgSpace, gas: &GasConstants) -> Result<ConservedField> {
    let calm = BaldaufParams {
        delta_t: 0.0,
        ..*params
    };
    baldauf_initial_state(&calm, space, gas)
}

/// A spatially uniform state at rest.
pub fn uniform_state(space: &DgSpace, gas: &GasConstants, rho: f64, p: f64) -> Result<ConservedField> {
    let q0 = conserved_from_primitive(rho, 0.0, 0.0, 0.0, p, gas)?;
    let mut q = ConservedField::zeros(space.n_dofs());
    for k in 0..q.len() {
        q.set(k, q0);
    }
    Ok(q)
}
