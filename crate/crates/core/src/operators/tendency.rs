use super::kernels::{add_advection, add_gradient, add_residual, traces, FaceVelocity, WallFlux};
use super::DgOperators;
use crate::thermo::ConservedField;

/// Weak-form tendencies (mass-matrix weighted) of density, momentum (flat `3N`)
/// and total energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Tendency {
    pub rho: Vec<f64>,
    pub momentum: Vec<f64>,
    pub energy: Vec<f64>,
}

impl Tendency {
    pub fn zeros(n: usize) -> Self {
        Tendency {
            rho: vec![0.0; n],
            momentum: vec![0.0; 3 * n],
            energy: vec![0.0; n],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.rho
            .iter()
            .chain(&self.momentum)
            .chain(&self.energy)
            .all(|v| *v == 0.0)
    }
}

impl DgOperators<'_> {
    /// Non-stiff part: advective fluxes of mass, momentum and kinetic energy
    /// with Rusanov stabilization `λ = max |u·n|`. Face states are built from
    /// traces of the nodal density and velocity.
    pub fn explicit_tendency(&self, q: &ConservedField) -> Tendency {
        let space = self.space;
        let n = space.n_dofs();
        let vel = q.velocity();
        let fv = FaceVelocity::new(space, &vel);
        let rho_tr = traces(space, &q.rho);
        let vt = traces(space, &vel[n..2 * n]);
        let mut out = Tendency::zeros(n);

        add_advection(space, &q.rho, &rho_tr, &vel, (&fv.ut, &fv.wt), Some(&fv.lambda), WallFlux::Zero, 1.0, &mut out.rho);

        for (c, m) in [&q.mx, &q.my, &q.mz].into_iter().enumerate() {
            let comp_tr = match c {
                0 => &fv.ut,
                1 => &vt,
                _ => &fv.wt,
            };
            let m_tr: Vec<f64> = rho_tr.iter().zip(comp_tr).map(|(r, u)| r * u).collect();
            let wall = if c == 2 { WallFlux::Reflect } else { WallFlux::Zero };
            add_advection(
                space,
                m,
                &m_tr,
                &vel,
                (&fv.ut, &fv.wt),
                Some(&fv.lambda),
                wall,
                1.0,
                &mut out.momentum[c * n..(c + 1) * n],
            );
        }

        let rho_kin: Vec<f64> = (0..n)
            .map(|k| 0.5 * (q.mx[k] * q.mx[k] + q.my[k] * q.my[k] + q.mz[k] * q.mz[k]) / q.rho[k])
            .collect();
        let kin_tr: Vec<f64> = (0..rho_tr.len())
            .map(|i| 0.5 * rho_tr[i] * (fv.ut[i] * fv.ut[i] + vt[i] * vt[i] + fv.wt[i] * fv.wt[i]))
            .collect();
        add_advection(space, &rho_kin, &kin_tr, &vel, (&fv.ut, &fv.wt), Some(&fv.lambda), WallFlux::Zero, 1.0, &mut out.energy);
        out
    }

    /// Stiff part: pressure gradient, gravity, Coriolis, enthalpy flux with a
    /// Rusanov penalty on `ρe`, and gravity work.
    pub fn stiff_tendency(&self, q: &ConservedField) -> Tendency {
        let space = self.space;
        let gas = self.gas;
        let n = space.n_dofs();
        let w8 = space.mass();
        let p = q.pressure(gas);
        let vel = q.velocity();
        let fv = FaceVelocity::new(space, &vel);
        let mut out = Tendency::zeros(n);

        {
            let (mx, rest) = out.momentum.split_at_mut(n);
            let (my, mz) = rest.split_at_mut(n);
            add_gradient(space, &p, &traces(space, &p), 1.0, mx, mz);
            for k in 0..n {
                mx[k] += gas.f * w8[k] * q.my[k];
                my[k] -= gas.f * w8[k] * q.mx[k];
                mz[k] -= gas.g * w8[k] * q.rho[k];
            }
        }

        let gm1 = gas.gamma - 1.0;
        let h_rho: Vec<f64> = p.iter().map(|p| gas.gamma / gm1 * p).collect();
        let h_tr = traces(space, &h_rho);
        add_advection(space, &h_rho, &h_tr, &vel, (&fv.ut, &fv.wt), None, WallFlux::Zero, 1.0, &mut out.energy);
        let rho_e: Vec<f64> = p.iter().map(|p| p / gm1).collect();
        add_residual(space, None, None, Some((&rho_e, &fv.lambda)), WallFlux::Zero, 1.0, &mut out.energy);
        for k in 0..n {
            out.energy[k] -= gas.g * w8[k] * q.mz[k];
        }
        out
    }
}
