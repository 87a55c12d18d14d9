//! Conserved-variable storage and ideal-gas closures.

use crate::error::{Error, Result};

/// Physical constants of a calorically perfect ideal gas on an f-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasConstants {
    /// Ratio of specific heats.
    pub gamma: f64,
    /// Specific gas constant, J kg^-1 K^-1.
    pub r_gas: f64,
    /// Gravitational acceleration, m s^-2.
    pub g: f64,
    /// Coriolis parameter, s^-1.
    pub f: f64,
}

impl GasConstants {
    pub fn new(gamma: f64, r_gas: f64, g: f64, f: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::param("gamma", format!("must exceed 1, got {gamma}")));
        }
        if !(r_gas > 0.0) || !r_gas.is_finite() {
            return Err(Error::param("R", format!("must be positive, got {r_gas}")));
        }
        if !g.is_finite() || !f.is_finite() {
            return Err(Error::param("g/f", "must be finite"));
        }
        Ok(GasConstants { gamma, r_gas, g, f })
    }

    /// Dry air with `gamma = 1.4`, `R = 287`, `g = 9.81` and no rotation.
    pub fn dry_air() -> Self {
        GasConstants {
            gamma: 1.4,
            r_gas: 287.0,
            g: 9.81,
            f: 0.0,
        }
    }

    pub fn with_coriolis(mut self, f: f64) -> Self {
        self.f = f;
        self
    }

    pub fn with_gravity(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn cp(&self) -> f64 {
        self.gamma * self.r_gas / (self.gamma - 1.0)
    }

    pub fn cv(&self) -> f64 {
        self.r_gas / (self.gamma - 1.0)
    }

    pub fn sound_speed(&self, rho: f64, p: f64) -> f64 {
        (self.gamma * p / rho).sqrt()
    }
}

/// Point values of the primitive and derived thermodynamic quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitiveSample {
    pub rho: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub p: f64,
    pub t: f64,
    /// Specific internal energy.
    pub e: f64,
    /// Specific enthalpy `e + p / rho`.
    pub h: f64,
    /// Specific kinetic energy `|u|^2 / 2`.
    pub k: f64,
    /// Sound speed.
    pub c: f64,
}

/// Closure from `(rho, rho u, rho v, rho w, rho E)`.
pub fn primitives_from_conserved(q: [f64; 5], gas: &GasConstants) -> Result<PrimitiveSample> {
    primitives_at(q, gas, None)
}

fn primitives_at(q: [f64; 5], gas: &GasConstants, dof: Option<usize>) -> Result<PrimitiveSample> {
    let [rho, mx, my, mz, energy] = q;
    if !(rho > 0.0) {
        return Err(Error::InvalidState {
            dof,
            reason: format!("non-positive density {rho:e}"),
        });
    }
    let (u, v, w) = (mx / rho, my / rho, mz / rho);
    let k = 0.5 * (u * u + v * v + w * w);
    let rho_e = energy - rho * k;
    if !(rho_e > 0.0) {
        return Err(Error::InvalidState {
            dof,
            reason: format!("non-positive internal energy {rho_e:e}"),
        });
    }
    let e = rho_e / rho;
    let p = (gas.gamma - 1.0) * rho_e;
    Ok(PrimitiveSample {
        rho,
        u,
        v,
        w,
        p,
        t: p / (rho * gas.r_gas),
        e,
        h: e + p / rho,
        k,
        c: gas.sound_speed(rho, p),
    })
}

/// Inverse closure; returns `(rho, rho u, rho v, rho w, rho E)`.
pub fn conserved_from_primitive(
    rho: f64,
    u: f64,
    v: f64,
    w: f64,
    p: f64,
    gas: &GasConstants,
) -> Result<[f64; 5]> {
    if !(rho > 0.0) {
        return Err(Error::param("rho", format!("must be positive, got {rho}")));
    }
    if !(p > 0.0) {
        return Err(Error::param("p", format!("must be positive, got {p}")));
    }
    let k = 0.5 * (u * u + v * v + w * w);
    Ok([rho, rho * u, rho * v, rho * w, p / (gas.gamma - 1.0) + rho * k])
}

/// `k x u` for the fixed vertical axis `k = (0, 0, 1)`.
#[inline]
pub fn vertical_cross(u: [f64; 3]) -> [f64; 3] {
    [-u[1], u[0], 0.0]
}

/// Nodal values of `(rho, rho u, rho v, rho w, rho E)` in structure-of-arrays form.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservedField {
    pub rho: Vec<f64>,
    pub mx: Vec<f64>,
    pub my: Vec<f64>,
    pub mz: Vec<f64>,
    pub energy: Vec<f64>,
}

impl ConservedField {
    pub fn zeros(n: usize) -> Self {
        ConservedField {
            rho: vec![0.0; n],
            mx: vec![0.0; n],
            my: vec![0.0; n],
            mz: vec![0.0; n],
            energy: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn get(&self, k: usize) -> [f64; 5] {
        [self.rho[k], self.mx[k], self.my[k], self.mz[k], self.energy[k]]
    }

    pub fn set(&mut self, k: usize, q: [f64; 5]) {
        self.rho[k] = q[0];
        self.mx[k] = q[1];
        self.my[k] = q[2];
        self.mz[k] = q[3];
        self.energy[k] = q[4];
    }

    pub fn primitive(&self, k: usize, gas: &GasConstants) -> Result<PrimitiveSample> {
        primitives_at(self.get(k), gas, Some(k))
    }

    /// Fails at the first dof with non-positive density or internal energy.
    pub fn check_admissible(&self, gas: &GasConstants) -> Result<()> {
        for k in 0..self.len() {
            self.primitive(k, gas)?;
        }
        Ok(())
    }

    /// Velocity as a flat `[u..., v..., w...]` vector.
    pub fn velocity(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; 3 * n];
        for k in 0..n {
            let inv = 1.0 / self.rho[k];
            out[k] = self.mx[k] * inv;
            out[n + k] = self.my[k] * inv;
            out[2 * n + k] = self.mz[k] * inv;
        }
        out
    }

    pub fn pressure(&self, gas: &GasConstants) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let kin = 0.5
                    * (self.mx[k] * self.mx[k] + self.my[k] * self.my[k] + self.mz[k] * self.mz[k])
                    / self.rho[k];
                (gas.gamma - 1.0) * (self.energy[k] - kin)
            })
            .collect()
    }

    /// Rebuilds the conserved state from density, flat velocity and pressure.
    pub fn from_velocity_pressure(rho: &[f64], velocity: &[f64], p: &[f64], gas: &GasConstants) -> Self {
        let n = rho.len();
        let mut q = ConservedField::zeros(n);
        for k in 0..n {
            let (u, v, w) = (velocity[k], velocity[n + k], velocity[2 * n + k]);
            q.rho[k] = rho[k];
            q.mx[k] = rho[k] * u;
            q.my[k] = rho[k] * v;
            q.mz[k] = rho[k] * w;
            q.energy[k] = p[k] / (gas.gamma - 1.0) + 0.5 * rho[k] * (u * u + v * v + w * w);
        }
        q
    }

    /// Momentum as a flat `[mx..., my..., mz...]` vector.
    pub fn momentum(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(3 * self.len());
        out.extend_from_slice(&self.mx);
        out.extend_from_slice(&self.my);
        out.extend_from_slice(&self.mz);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constants() {
        let gas = GasConstants::dry_air();
        assert!(((gas.cp() - gas.cv()) - gas.r_gas).abs() <= 1e-12 * gas.r_gas);
        assert!(GasConstants::new(1.0, 287.0, 9.81, 0.0).is_err());
        assert!(GasConstants::new(1.4, 0.0, 9.81, 0.0).is_err());
    }

    #[test]
    fn pressure_at_rest() {
        let gas = GasConstants::dry_air();
        let s = primitives_from_conserved([1.0, 0.0, 0.0, 0.0, 2.5e5], &gas).unwrap();
        assert!((s.p - 1.0e5).abs() < 1e-9);
    }

    #[test]
    fn kinetic_energy_subtracted() {
        let gas = GasConstants::dry_air();
        let s = primitives_from_conserved([1.0, 1.0, 0.0, 0.0, 2.5e5], &gas).unwrap();
        assert_eq!(s.k, 0.5);
        assert!((s.p - 0.4 * (2.5e5 - 0.5)).abs() < 1e-9);
        assert!(((s.h - s.e) - s.p / s.rho).abs() <= 1e-12 * s.h);
    }

    #[test]
    fn sound_speed_at_250k() {
        let gas = GasConstants::dry_air();
        let rho = 1.0;
        let p = rho * gas.r_gas * 250.0;
        let q = conserved_from_primitive(rho, 0.0, 0.0, 0.0, p, &gas).unwrap();
        let s = primitives_from_conserved(q, &gas).unwrap();
        assert!((s.t - 250.0).abs() < 1e-10);
        assert!((s.c - 316.94).abs() < 5e-3);
    }

    #[test]
    fn rest_state_energy() {
        let gas = GasConstants::dry_air();
        let q = conserved_from_primitive(1.0, 0.0, 0.0, 0.0, 1e5, &gas).unwrap();
        assert!((q[4] - 2.5e5).abs() < 1e-9);
    }

    #[test]
    fn invalid_states_rejected() {
        let gas = GasConstants::dry_air();
        assert!(primitives_from_conserved([0.0, 0.0, 0.0, 0.0, 1.0], &gas).is_err());
        assert!(primitives_from_conserved([1.0, 10.0, 0.0, 0.0, 10.0], &gas).is_err());
        assert!(conserved_from_primitive(-1.0, 0.0, 0.0, 0.0, 1.0, &gas).is_err());
        assert!(conserved_from_primitive(1.0, 0.0, 0.0, 0.0, 0.0, &gas).is_err());

        let mut field = ConservedField::zeros(3);
        for k in 0..3 {
            field.set(k, [1.0, 0.0, 0.0, 0.0, 1.0]);
        }
        field.rho[2] = -1.0;
        match field.check_admissible(&gas) {
            Err(Error::InvalidState { dof: Some(2), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn coriolis_does_no_work() {
        for u in [[1.0, 2.0, 3.0], [-0.3, 7.1, 0.0], [1e3, -1e-3, 5.0]] {
            let c = vertical_cross(u);
            assert_eq!(c[0] * u[0] + c[1] * u[1] + c[2] * u[2], 0.0);
        }
    }

    proptest! {
        #[test]
        fn round_trip(rho in 0.01f64..10.0, u in -50.0f64..50.0, v in -50.0f64..50.0,
                      w in -50.0f64..50.0, p in 1e2f64..2e5) {
            let gas = GasConstants::dry_air();
            let q = conserved_from_primitive(rho, u, v, w, p, &gas).unwrap();
            let s = primitives_from_conserved(q, &gas).unwrap();
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
            prop_assert!(rel(s.rho, rho) < 1e-13);
            prop_assert!((s.u - u).abs() <= 1e-13 * u.abs().max(1.0));
            prop_assert!((s.v - v).abs() <= 1e-13 * v.abs().max(1.0));
            prop_assert!((s.w - w).abs() <= 1e-13 * w.abs().max(1.0));
            prop_assert!(rel(s.p, p) < 1e-13);
            let q2 = conserved_from_primitive(s.rho, s.u, s.v, s.w, s.p, &gas).unwrap();
            for i in 0..5 {
                prop_assert!((q2[i] - q[i]).abs() <= 1e-13 * q[i].abs().max(1e-12));
            }
        }
    }
}
