//! Dense quadrature-loop assembly used as a test oracle.
//!
//! Everything here is written independently of the sum-factorized kernels:
//! Lagrange polynomials are evaluated by the product formula, fields are
//! interpolated to every quadrature point, and face integrals are taken
//! element by element with an explicit ghost state (mirror of the normal
//! velocity) on walls. Only small problems are accepted.

use nalgebra::DMatrix;

use super::{StageContext, Tendency};
use crate::discretization::{DgSpace, FaceSide, LocalFace};
use crate::error::{Error, Result};
use crate::imex::StageHistory;
use crate::thermo::{ConservedField, GasConstants};

pub const MAX_ELEMENTS: usize = 16;
pub const MAX_DEGREE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorTag {
    A,
    R,
    B,
    C,
    D,
    Mg,
}

fn guard(space: &DgSpace) -> Result<()> {
    let elements = space.mesh().n_elements();
    let degree = space.basis().degree();
    if elements > MAX_ELEMENTS || degree > MAX_DEGREE {
        return Err(Error::SizeGuard { elements, degree });
    }
    Ok(())
}

/// Primitive state `(ρ, u, v, w, p)` at a point.
type Prim = [f64; 5];

struct Quadrature<'a> {
    space: &'a DgSpace,
    x: Vec<f64>,
    w: Vec<f64>,
}

impl<'a> Quadrature<'a> {
    fn new(space: &'a DgSpace) -> Self {
        Quadrature {
            space,
            x: space.basis().nodes().to_vec(),
            w: space.basis().weights().to_vec(),
        }
    }

    fn n1(&self) -> usize {
        self.x.len()
    }

    fn lag(&self, j: usize, t: f64) -> f64 {
        let mut v = 1.0;
        for (k, xk) in self.x.iter().enumerate() {
            if k != j {
                v *= (t - xk) / (self.x[j] - xk);
            }
        }
        v
    }

    fn dlag(&self, j: usize, t: f64) -> f64 {
        let mut s = 0.0;
        for m in 0..self.n1() {
            if m == j {
                continue;
            }
            let mut v = 1.0 / (self.x[j] - self.x[m]);
            for k in 0..self.n1() {
                if k != j && k != m {
                    v *= (t - self.x[k]) / (self.x[j] - self.x[k]);
                }
            }
            s += v;
        }
        s
    }

    fn index(&self, e: usize, a: usize, b: usize) -> usize {
        (e * self.n1() + b) * self.n1() + a
    }

    fn eval(&self, f: &[f64], e: usize, xi: f64, eta: f64) -> f64 {
        let mut s = 0.0;
        for b in 0..self.n1() {
            let lb = self.lag(b, eta);
            for a in 0..self.n1() {
                s += f[self.index(e, a, b)] * self.lag(a, xi) * lb;
            }
        }
        s
    }

    /// Reference points of one local face and the arc-length factor.
    fn face_points(&self, local: LocalFace) -> (Vec<(f64, f64)>, f64) {
        let mesh = self.space.mesh();
        let pts = self
            .x
            .iter()
            .map(|&t| match local {
                LocalFace::Left => (-1.0, t),
                LocalFace::Right => (1.0, t),
                LocalFace::Bottom => (t, -1.0),
                LocalFace::Top => (t, 1.0),
            })
            .collect();
        let len = if local.is_vertical() { mesh.hz() } else { mesh.hx() };
        (pts, 0.5 * len)
    }

    /// `r_i = ∫ F·∇ψ_i − ∮ F̂ ψ_i + ∫ s ψ_i` for every test function.
    fn residual(
        &self,
        vol: impl Fn(usize, f64, f64) -> [f64; 2],
        face: impl Fn(usize, LocalFace, f64, f64) -> f64,
        source: impl Fn(usize, f64, f64) -> f64,
    ) -> Vec<f64> {
        let n1 = self.n1();
        let mesh = self.space.mesh();
        let (hx, hz) = (mesh.hx(), mesh.hz());
        let jac = mesh.jacobian();
        let mut out = vec![0.0; self.space.n_dofs()];
        for e in 0..mesh.n_elements() {
            let mut vq = Vec::with_capacity(n1 * n1);
            for q2 in 0..n1 {
                for q1 in 0..n1 {
                    let (xi, eta) = (self.x[q1], self.x[q2]);
                    vq.push((xi, eta, self.w[q1] * self.w[q2] * jac, vol(e, xi, eta), source(e, xi, eta)));
                }
            }
            let mut fq = Vec::new();
            for local in LocalFace::ALL {
                let (pts, half) = self.face_points(local);
                for (k, (xi, eta)) in pts.into_iter().enumerate() {
                    fq.push((xi, eta, self.w[k] * half, face(e, local, xi, eta)));
                }
            }
            for b in 0..n1 {
                for a in 0..n1 {
                    let mut r = 0.0;
                    for &(xi, eta, wt, f, s) in &vq {
                        let gx = self.dlag(a, xi) * self.lag(b, eta) * 2.0 / hx;
                        let gz = self.lag(a, xi) * self.dlag(b, eta) * 2.0 / hz;
                        let psi = self.lag(a, xi) * self.lag(b, eta);
                        r += wt * (f[0] * gx + f[1] * gz + s * psi);
                    }
                    for &(xi, eta, wt, fl) in &fq {
                        r -= wt * fl * self.lag(a, xi) * self.lag(b, eta);
                    }
                    out[self.index(e, a, b)] += r;
                }
            }
        }
        out
    }

    /// `M_ij = ∫ c ψ_i ψ_j` as a dense `N × N` matrix.
    fn weighted_mass(&self, coef: impl Fn(usize, f64, f64) -> f64) -> DMatrix<f64> {
        let n1 = self.n1();
        let n = self.space.n_dofs();
        let jac = self.space.mesh().jacobian();
        let mut m = DMatrix::zeros(n, n);
        for e in 0..self.space.mesh().n_elements() {
            for q2 in 0..n1 {
                for q1 in 0..n1 {
                    let (xi, eta) = (self.x[q1], self.x[q2]);
                    let wt = self.w[q1] * self.w[q2] * jac * coef(e, xi, eta);
                    for bi in 0..n1 {
                        for ai in 0..n1 {
                            let pi = self.lag(ai, xi) * self.lag(bi, eta);
                            for bj in 0..n1 {
                                for aj in 0..n1 {
                                    let pj = self.lag(aj, xi) * self.lag(bj, eta);
                                    m[(self.index(e, ai, bi), self.index(e, aj, bj))] += wt * pi * pj;
                                }
                            }
                        }
                    }
                }
            }
        }
        m
    }

    fn prim(&self, fields: &[Vec<f64>; 5], e: usize, xi: f64, eta: f64) -> Prim {
        let mut s = [0.0; 5];
        for (v, f) in s.iter_mut().zip(fields) {
            *v = self.eval(f, e, xi, eta);
        }
        s
    }

    /// Own and outer state at a face point; walls see the mirror state.
    fn sides(&self, fields: &[Vec<f64>; 5], e: usize, local: LocalFace, xi: f64, eta: f64) -> (Prim, Prim) {
        let own = self.prim(fields, e, xi, eta);
        let outer = match self.space.mesh().neighbor(FaceSide { element: e, local }) {
            Some(nb) => {
                let (x2, z2) = if local.is_vertical() { (-xi, eta) } else { (xi, -eta) };
                self.prim(fields, nb.element, x2, z2)
            }
            None => {
                let mut g = own;
                g[3] = -g[3];
                g
            }
        };
        (own, outer)
    }
}

fn primitive_fields(q: &ConservedField, gas: &GasConstants) -> [Vec<f64>; 5] {
    let n = q.len();
    let vel = q.velocity();
    [
        q.rho.clone(),
        vel[..n].to_vec(),
        vel[n..2 * n].to_vec(),
        vel[2 * n..].to_vec(),
        q.pressure(gas),
    ]
}

fn normal_velocity(s: &Prim, nrm: [f64; 2]) -> f64 {
    s[1] * nrm[0] + s[3] * nrm[1]
}

/// Dense matrix of one stage operator at the density and pressure of `state`.
pub fn dense_assemble(
    space: &DgSpace,
    gas: &GasConstants,
    tag: OperatorTag,
    state: &ConservedField,
    ctx: &StageContext,
) -> Result<DMatrix<f64>> {
    guard(space)?;
    space.check_len(&state.rho, 1)?;
    let quad = Quadrature::new(space);
    let n = space.n_dofs();
    let rho = &state.rho;
    let scale = ctx.implicit_scale();
    let rho_mass = || quad.weighted_mass(|e, x, z| quad.eval(rho, e, x, z));

    let m = match tag {
        OperatorTag::A => {
            let blk = rho_mass();
            let mut m = DMatrix::zeros(3 * n, 3 * n);
            for c in 0..3 {
                m.view_mut((c * n, c * n), (n, n)).copy_from(&blk);
            }
            m
        }
        OperatorTag::R => {
            let blk = rho_mass() * ctx.beta;
            let mut m = DMatrix::zeros(3 * n, 3 * n);
            m.view_mut((0, n), (n, n)).copy_from(&(-&blk));
            m.view_mut((n, 0), (n, n)).copy_from(&blk);
            m
        }
        OperatorTag::D => quad.weighted_mass(|_, _, _| 1.0) / (gas.gamma - 1.0),
        OperatorTag::Mg => {
            let blk = rho_mass() * (gas.g * scale);
            let mut m = DMatrix::zeros(n, 3 * n);
            m.view_mut((0, 2 * n), (n, n)).copy_from(&blk);
            m
        }
        OperatorTag::B => {
            let mut m = DMatrix::zeros(3 * n, n);
            for j in 0..n {
                let mut p = vec![0.0; n];
                p[j] = 1.0;
                for (c, row0) in [(0usize, 0usize), (1, 2 * n)] {
                    let r = quad.residual(
                        |e, x, z| {
                            let v = quad.eval(&p, e, x, z);
                            if c == 0 {
                                [v, 0.0]
                            } else {
                                [0.0, v]
                            }
                        },
                        |e, local, x, z| {
                            let own = quad.eval(&p, e, x, z);
                            let outer = match space.mesh().neighbor(FaceSide { element: e, local }) {
                                Some(nb) => {
                                    let (x2, z2) = if local.is_vertical() { (-x, z) } else { (x, -z) };
                                    quad.eval(&p, nb.element, x2, z2)
                                }
                                None => own,
                            };
                            0.5 * (own + outer) * local.normal()[c]
                        },
                        |_, _, _| 0.0,
                    );
                    for i in 0..n {
                        m[(row0 + i, j)] = -scale * r[i];
                    }
                }
            }
            m
        }
        OperatorTag::C => {
            let p = state.pressure(gas);
            let h_rho: Vec<f64> = p.iter().map(|p| gas.gamma / (gas.gamma - 1.0) * p).collect();
            let mut m = DMatrix::zeros(n, 3 * n);
            for col in 0..3 * n {
                let mut u = vec![0.0; 3 * n];
                u[col] = 1.0;
                let fields = [
                    h_rho.clone(),
                    u[..n].to_vec(),
                    u[n..2 * n].to_vec(),
                    u[2 * n..].to_vec(),
                    vec![0.0; n],
                ];
                let r = quad.residual(
                    |e, x, z| {
                        let s = quad.prim(&fields, e, x, z);
                        [s[0] * s[1], s[0] * s[3]]
                    },
                    |e, local, x, z| {
                        let (a, b) = quad.sides(&fields, e, local, x, z);
                        let nrm = local.normal();
                        0.5 * (a[0] * normal_velocity(&a, nrm) + b[0] * normal_velocity(&b, nrm))
                    },
                    |_, _, _| 0.0,
                );
                for i in 0..n {
                    m[(i, col)] = -scale * r[i];
                }
            }
            m
        }
    };
    Ok(m)
}

/// Reference non-stiff tendency by quadrature loops.
pub fn reference_explicit_tendency(space: &DgSpace, gas: &GasConstants, q: &ConservedField) -> Result<Tendency> {
    guard(space)?;
    let quad = Quadrature::new(space);
    let fields = primitive_fields(q, gas);
    let n = space.n_dofs();
    // Advected quantity per equation: ρ, ρu, ρv, ρw, ρ|u|²/2.
    let advected = |eq: usize, s: &Prim| match eq {
        0 => s[0],
        1..=3 => s[0] * s[eq],
        _ => 0.5 * s[0] * (s[1] * s[1] + s[2] * s[2] + s[3] * s[3]),
    };
    let mut out = Tendency::zeros(n);
    for eq in 0..5 {
        let r = quad.residual(
            |e, x, z| {
                let s = quad.prim(&fields, e, x, z);
                let a = advected(eq, &s);
                [a * s[1], a * s[3]]
            },
            |e, local, x, z| {
                let (a, b) = quad.sides(&fields, e, local, x, z);
                let nrm = local.normal();
                let (una, unb) = (normal_velocity(&a, nrm), normal_velocity(&b, nrm));
                let lambda = una.abs().max(unb.abs());
                let (qa, qb) = (advected(eq, &a), advected(eq, &b));
                0.5 * (qa * una + qb * unb) + 0.5 * lambda * (qa - qb)
            },
            |_, _, _| 0.0,
        );
        match eq {
            0 => out.rho = r,
            1..=3 => out.momentum[(eq - 1) * n..eq * n].copy_from_slice(&r),
            _ => out.energy = r,
        }
    }
    Ok(out)
}

/// Reference stiff tendency by quadrature loops.
pub fn reference_stiff_tendency(space: &DgSpace, gas: &GasConstants, q: &ConservedField) -> Result<Tendency> {
    guard(space)?;
    let quad = Quadrature::new(space);
    let fields = primitive_fields(q, gas);
    let n = space.n_dofs();
    let (g, f, gm1) = (gas.g, gas.f, gas.gamma - 1.0);
    let mut out = Tendency::zeros(n);

    for c in 0..3 {
        let r = quad.residual(
            |e, x, z| {
                let p = quad.eval(&fields[4], e, x, z);
                match c {
                    0 => [p, 0.0],
                    2 => [0.0, p],
                    _ => [0.0, 0.0],
                }
            },
            |e, local, x, z| {
                if c == 1 {
                    return 0.0;
                }
                let (a, b) = quad.sides(&fields, e, local, x, z);
                let k = if c == 0 { 0 } else { 1 };
                0.5 * (a[4] + b[4]) * local.normal()[k]
            },
            |e, x, z| {
                let s = quad.prim(&fields, e, x, z);
                match c {
                    0 => f * s[0] * s[2],
                    1 => -f * s[0] * s[1],
                    _ => -g * s[0],
                }
            },
        );
        out.momentum[c * n..(c + 1) * n].copy_from_slice(&r);
    }

    let h_rho = |s: &Prim| (gm1 + 1.0) / gm1 * s[4];
    out.energy = quad.residual(
        |e, x, z| {
            let s = quad.prim(&fields, e, x, z);
            [h_rho(&s) * s[1], h_rho(&s) * s[3]]
        },
        |e, local, x, z| {
            let (a, b) = quad.sides(&fields, e, local, x, z);
            let nrm = local.normal();
            let (una, unb) = (normal_velocity(&a, nrm), normal_velocity(&b, nrm));
            let lambda = una.abs().max(unb.abs());
            0.5 * (h_rho(&a) * una + h_rho(&b) * unb) + 0.5 * lambda * (a[4] - b[4]) / gm1
        },
        |e, x, z| {
            let s = quad.prim(&fields, e, x, z);
            -g * s[0] * s[3]
        },
    );
    Ok(out)
}

/// Reference Rusanov penalty on `ρe = p/(γ−1)` with speeds from `velocity`.
fn reference_penalty(space: &DgSpace, gas: &GasConstants, p: &[f64], velocity: &[f64]) -> Vec<f64> {
    let quad = Quadrature::new(space);
    let n = space.n_dofs();
    let fields = [
        vec![1.0; n],
        velocity[..n].to_vec(),
        velocity[n..2 * n].to_vec(),
        velocity[2 * n..].to_vec(),
        p.to_vec(),
    ];
    let gm1 = gas.gamma - 1.0;
    quad.residual(
        |_, _, _| [0.0, 0.0],
        |e, local, x, z| {
            let (a, b) = quad.sides(&fields, e, local, x, z);
            let nrm = local.normal();
            let lambda = normal_velocity(&a, nrm).abs().max(normal_velocity(&b, nrm).abs());
            0.5 * lambda * (a[4] - b[4]) / gm1
        },
        |_, _, _| 0.0,
    )
}

fn reference_mass(space: &DgSpace) -> Vec<f64> {
    let quad = Quadrature::new(space);
    let m = quad.weighted_mass(|_, _, _| 1.0);
    (0..space.n_dofs()).map(|i| m.row(i).sum()).collect()
}

/// Reference momentum vector `f` from the stored stage states.
pub fn reference_momentum_rhs(
    space: &DgSpace,
    gas: &GasConstants,
    history: &StageHistory,
    ctx: &StageContext,
) -> Result<Vec<f64>> {
    guard(space)?;
    let n = space.n_dofs();
    let w = reference_mass(space);
    let base = history.base.momentum();
    let mut f: Vec<f64> = (0..3 * n).map(|k| w[k % n] * base[k]).collect();
    for m in 0..ctx.explicit.len() {
        let y = &history.states[m];
        let ne = reference_explicit_tendency(space, gas, y)?;
        let st = reference_stiff_tendency(space, gas, y)?;
        for k in 0..3 * n {
            f[k] += ctx.dt * (ctx.explicit[m] * ne.momentum[k] + ctx.implicit[m] * st.momentum[k]);
        }
    }
    Ok(f)
}

/// Reference energy vector `g` including the stage penalty at `(velocity, p)`.
pub fn reference_energy_rhs(
    space: &DgSpace,
    gas: &GasConstants,
    history: &StageHistory,
    velocity: &[f64],
    p: &[f64],
    ctx: &StageContext,
) -> Result<Vec<f64>> {
    guard(space)?;
    let w = reference_mass(space);
    let mut g: Vec<f64> = history.base.energy.iter().zip(&w).map(|(e, w)| e * w).collect();
    for m in 0..ctx.explicit.len() {
        let y = &history.states[m];
        let ne = reference_explicit_tendency(space, gas, y)?;
        let st = reference_stiff_tendency(space, gas, y)?;
        for k in 0..g.len() {
            g[k] += ctx.dt * (ctx.explicit[m] * ne.energy[k] + ctx.implicit[m] * st.energy[k]);
        }
    }
    let pen = reference_penalty(space, gas, p, velocity);
    for (gk, pk) in g.iter_mut().zip(pen) {
        *gk += ctx.implicit_scale() * pk;
    }
    Ok(g)
}

/// Reference `f_g`.
pub fn reference_gravity_vector(space: &DgSpace, gas: &GasConstants, rho: &[f64], ctx: &StageContext) -> Result<Vec<f64>> {
    guard(space)?;
    let quad = Quadrature::new(space);
    let n = space.n_dofs();
    let m = quad.weighted_mass(|e, x, z| quad.eval(rho, e, x, z));
    let mut out = vec![0.0; 3 * n];
    for i in 0..n {
        out[2 * n + i] = gas.g * ctx.implicit_scale() * m.row(i).sum();
    }
    Ok(out)
}
