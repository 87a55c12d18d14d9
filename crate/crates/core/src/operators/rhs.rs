//! Explicit right-hand sides of the stage system assembled from stage history.

use super::{DgOperators, StageContext};
use crate::discretization::DgSpace;
use crate::imex::StageHistory;

/// `ρ^(n,l) = ρ^n + Δt Σ_m a_lm N_ρ(y^(n,m)) / M`.
pub fn explicit_density(space: &DgSpace, history: &StageHistory, ctx: &StageContext) -> Vec<f64> {
    let w = space.mass();
    let mut rho = history.base.rho.clone();
    for (m, a) in ctx.explicit.iter().enumerate() {
        if *a == 0.0 {
            continue;
        }
        let c = a * ctx.dt;
        let t = &history.explicit[m].rho;
        for k in 0..rho.len() {
            rho[k] += c * t[k] / w[k];
        }
    }
    rho
}

/// Momentum vector `f`: mass of `ρ^n u^n` plus the weighted explicit and
/// implicit history of every earlier stage.
pub fn momentum_rhs(space: &DgSpace, history: &StageHistory, ctx: &StageContext) -> Vec<f64> {
    let n = space.n_dofs();
    let w = space.mass();
    let base = &history.base;
    let mut f = vec![0.0; 3 * n];
    for k in 0..n {
        f[k] = w[k] * base.mx[k];
        f[n + k] = w[k] * base.my[k];
        f[2 * n + k] = w[k] * base.mz[k];
    }
    for m in 0..ctx.explicit.len() {
        let (a, at) = (ctx.explicit[m] * ctx.dt, ctx.implicit[m] * ctx.dt);
        let (ne, st) = (&history.explicit[m].momentum, &history.implicit[m].momentum);
        for k in 0..3 * n {
            f[k] += a * ne[k] + at * st[k];
        }
    }
    f
}

/// History part of the energy vector `g` (without the stage-`l` penalty).
pub fn energy_history(space: &DgSpace, history: &StageHistory, ctx: &StageContext) -> Vec<f64> {
    let w = space.mass();
    let mut g: Vec<f64> = history.base.energy.iter().zip(w).map(|(e, w)| w * e).collect();
    for m in 0..ctx.explicit.len() {
        let (a, at) = (ctx.explicit[m] * ctx.dt, ctx.implicit[m] * ctx.dt);
        let (ne, st) = (&history.explicit[m].energy, &history.implicit[m].energy);
        for k in 0..g.len() {
            g[k] += a * ne[k] + at * st[k];
        }
    }
    g
}

/// Energy vector `g` at a Picard iterate: history plus the stage-`l` Rusanov
/// penalty on `ρe = p/(γ−1)` lagged at the iterate `(velocity, p)`.
pub fn energy_rhs(
    ops: &DgOperators,
    history: &StageHistory,
    velocity: &[f64],
    p: &[f64],
    ctx: &StageContext,
) -> crate::Result<Vec<f64>> {
    let mut g = energy_history(ops.space, history, ctx);
    let rho_e: Vec<f64> = p.iter().map(|p| p / (ops.gas.gamma - 1.0)).collect();
    let pen = ops.jump_penalty(&rho_e, velocity)?;
    let s = ctx.implicit_scale();
    for k in 0..g.len() {
        g[k] += s * pen[k];
    }
    Ok(g)
}
