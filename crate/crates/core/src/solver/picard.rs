use std::cell::RefCell;
use std::fmt;
use std::str::FromStr;

use super::gmres::{gmres, GmresConfig};
use crate::error::{Error, Result};
use crate::operators::kernels::traces;
use crate::operators::{rotate_horizontal, DgOperators, FnOperator, StageContext};

/// Which couplings are lagged at the previous Picard iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Coriolis and gravity work lagged on the right-hand side.
    R1,
    /// Coriolis and gravity work kept in the Schur operator through `(A + R)^{-1}`.
    R2,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::R1 => "R1",
            Strategy::R2 => "R2",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "R1" | "r1" => Ok(Strategy::R1),
            "R2" | "r2" => Ok(Strategy::R2),
            other => Err(Error::param("strategy", format!("expected R1 or R2, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    pub strategy: Strategy,
    pub max_iterations: usize,
    /// Relative variation between consecutive iterates.
    pub tolerance: f64,
    pub gmres: GmresConfig,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            strategy: Strategy::R1,
            max_iterations: 10,
            tolerance: 1e-10,
            gmres: GmresConfig::default(),
        }
    }
}

impl PicardConfig {
    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::param("picard_tol", format!("must lie in (0, 1), got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::param("picard_max_iter", "must be at least 1"));
        }
        self.gmres.validate()
    }
}

/// Inputs of one implicit stage: stage density and the assembled explicit
/// vectors `f` and the history part of `g`.
#[derive(Debug, Clone, Copy)]
pub struct StageProblem<'a> {
    pub ops: DgOperators<'a>,
    pub ctx: &'a StageContext,
    pub rho: &'a [f64],
    pub f: &'a [f64],
    pub g_history: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageSolution {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    pub picard_iterations: usize,
    /// GMRES iterations of every Picard iteration.
    pub gmres_iterations: Vec<usize>,
    pub variation: f64,
    pub variation_history: Vec<f64>,
}

fn h_rho_of(p: &[f64], gamma: f64) -> Vec<f64> {
    let c = gamma / (gamma - 1.0);
    p.iter().map(|p| c * p).collect()
}

/// The Schur operator of the given strategy at the iterate enthalpy `h_rho`:
/// `D − C A^{-1} B` (R1) or `D − (C + M_g)(A + R)^{-1} B` (R2).
pub fn schur_operator<'a>(
    problem: &'a StageProblem<'a>,
    strategy: Strategy,
    h_rho: &'a [f64],
) -> FnOperator<impl Fn(&[f64], &mut [f64]) + 'a> {
    let ops = problem.ops;
    let n = ops.space.n_dofs();
    let scale = problem.ctx.implicit_scale();
    let beta = problem.ctx.beta;
    let gm1 = ops.gas.gamma - 1.0;
    let gravity = ops.gas.g * scale;
    let h_tr = traces(ops.space, h_rho);
    let w = ops.space.mass();
    let inv_w_rho: Vec<f64> = w.iter().zip(problem.rho).map(|(w, r)| 1.0 / (w * r)).collect();
    let scratch = RefCell::new((vec![0.0; 3 * n], vec![0.0; 3 * n]));
    FnOperator::new(n, move |x: &[f64], y: &mut [f64]| {
        let mut guard = scratch.borrow_mut();
        let (b, t) = &mut *guard;
        ops.pressure_gradient_into(x, scale, b);
        for c in 0..3 {
            for k in 0..n {
                t[c * n + k] = b[c * n + k] * inv_w_rho[k];
            }
        }
        if strategy == Strategy::R2 {
            rotate_horizontal(t, n, beta);
        }
        ops.enthalpy_divergence_traced(t, h_rho, &h_tr, scale, y);
        for k in 0..n {
            let mut c = y[k];
            if strategy == Strategy::R2 {
                c += gravity * w[k] * problem.rho[k] * t[2 * n + k];
            }
            y[k] = w[k] * x[k] / gm1 - c;
        }
    })
}

/// Energy vector `g` with the stage penalty lagged at `(u, p)`.
fn energy_vector(problem: &StageProblem, u: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    let ops = problem.ops;
    let gm1 = ops.gas.gamma - 1.0;
    let rho_e: Vec<f64> = p.iter().map(|p| p / gm1).collect();
    let pen = ops.jump_penalty(&rho_e, u)?;
    let s = problem.ctx.implicit_scale();
    Ok(problem.g_history.iter().zip(pen).map(|(g, q)| g + s * q).collect())
}

fn joint_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().chain(b).map(|v| v * v).sum::<f64>().sqrt()
}

/// Picard iteration from the initial iterate `(u0, p0)` with the configured strategy.
pub fn solve_stage(problem: &StageProblem, u0: &[f64], p0: &[f64], cfg: &PicardConfig) -> Result<StageSolution> {
    cfg.validate()?;
    let ops = problem.ops;
    let space = ops.space;
    let ctx = problem.ctx;
    let n = space.n_dofs();
    space.check_len(u0, 3)?;
    space.check_len(p0, 1)?;
    space.check_len(problem.rho, 1)?;
    space.check_len(problem.f, 3)?;
    space.check_len(problem.g_history, 1)?;

    let fg = ops.gravity_vector(problem.rho, ctx)?;
    let base: Vec<f64> = problem.f.iter().zip(&fg).map(|(f, g)| f - g).collect();
    let scale = ctx.implicit_scale();

    let mut u = u0.to_vec();
    let mut p = p0.to_vec();
    let mut gmres_counts = Vec::new();
    let mut variations = Vec::new();

    for _ in 0..cfg.max_iterations {
        let h_rho = h_rho_of(&p, ops.gas.gamma);
        let g = energy_vector(problem, &u, &p)?;
        let kin = ops.kinetic_vector(&u, problem.rho)?;

        let mut v = base.clone();
        let mut t = vec![0.0; 3 * n];
        let mut ct = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        match cfg.strategy {
            Strategy::R1 => {
                let ru = ops.coriolis(&u, problem.rho, ctx)?;
                for (vk, rk) in v.iter_mut().zip(&ru) {
                    *vk -= rk;
                }
                ops.inv_mass_rho_into(&v, problem.rho, &mut t);
                ops.enthalpy_divergence_into(&t, &h_rho, scale, &mut ct);
                let mg = ops.gravity_coupling(&u, problem.rho, ctx)?;
                for k in 0..n {
                    rhs[k] = g[k] - mg[k] - kin[k] - ct[k];
                }
            }
            Strategy::R2 => {
                ops.inv_mass_coriolis_into(&v, problem.rho, ctx.beta, &mut t);
                ops.enthalpy_divergence_into(&t, &h_rho, scale, &mut ct);
                let mg = ops.gravity_coupling(&t, problem.rho, ctx)?;
                for k in 0..n {
                    rhs[k] = g[k] - kin[k] - ct[k] - mg[k];
                }
            }
        }

        let schur = schur_operator(problem, cfg.strategy, &h_rho);
        let (p_new, stats) = gmres(&schur, &rhs, &p, &cfg.gmres)?;
        gmres_counts.push(stats.iterations);

        let mut bp = vec![0.0; 3 * n];
        ops.pressure_gradient_into(&p_new, scale, &mut bp);
        for (vk, bk) in v.iter_mut().zip(&bp) {
            *vk -= bk;
        }
        let mut u_new = vec![0.0; 3 * n];
        match cfg.strategy {
            Strategy::R1 => ops.inv_mass_rho_into(&v, problem.rho, &mut u_new),
            Strategy::R2 => ops.inv_mass_coriolis_into(&v, problem.rho, ctx.beta, &mut u_new),
        }

        let du: Vec<f64> = u_new.iter().zip(&u).map(|(a, b)| a - b).collect();
        let dp: Vec<f64> = p_new.iter().zip(&p).map(|(a, b)| a - b).collect();
        let variation = joint_norm(&du, &dp) / joint_norm(&u, &p).max(1e-30);
        variations.push(variation);
        u = u_new;
        p = p_new;
        if !variation.is_finite() {
            break;
        }
        if variation < cfg.tolerance {
            return Ok(StageSolution {
                velocity: u,
                pressure: p,
                picard_iterations: variations.len(),
                gmres_iterations: gmres_counts,
                variation,
                variation_history: variations,
            });
        }
    }
    Err(Error::PicardNotConverged {
        iterations: variations.len(),
        variation: *variations.last().unwrap_or(&f64::NAN),
        history: variations,
    })
}

pub fn solve_stage_r1(problem: &StageProblem, u0: &[f64], p0: &[f64], cfg: &PicardConfig) -> Result<StageSolution> {
    solve_stage(problem, u0, p0, &cfg.with_strategy(Strategy::R1))
}

pub fn solve_stage_r2(problem: &StageProblem, u0: &[f64], p0: &[f64], cfg: &PicardConfig) -> Result<StageSolution> {
    solve_stage(problem, u0, p0, &cfg.with_strategy(Strategy::R2))
}

/// Relative residual of the unlagged coupled stage system at `(u, p)`:
/// `(A + R)u + B p − (f − f_g)` and `D p + (C + M_g)u + k − g`, with every
/// nonlinear term evaluated at `(u, p)` itself.
pub fn coupled_residual(problem: &StageProblem, u: &[f64], p: &[f64]) -> Result<f64> {
    let ops = problem.ops;
    let ctx = problem.ctx;
    let rho = problem.rho;
    let fg = ops.gravity_vector(rho, ctx)?;
    let au = ops.mass_rho(u, rho)?;
    let ru = ops.coriolis(u, rho, ctx)?;
    let bp = ops.pressure_gradient(p, ctx)?;
    let mut r_u = Vec::with_capacity(u.len());
    let mut ref_u = Vec::with_capacity(u.len());
    for k in 0..u.len() {
        let target = problem.f[k] - fg[k];
        r_u.push(au[k] + ru[k] + bp[k] - target);
        ref_u.push(target);
    }
    let g = energy_vector(problem, u, p)?;
    let dp = ops.energy_mass(p)?;
    let cu = ops.enthalpy_divergence(u, &h_rho_of(p, ops.gas.gamma), ctx)?;
    let mg = ops.gravity_coupling(u, rho, ctx)?;
    let kin = ops.kinetic_vector(u, rho)?;
    let r_p: Vec<f64> = (0..p.len()).map(|k| dp[k] + cu[k] + mg[k] + kin[k] - g[k]).collect();
    Ok(joint_norm(&r_u, &r_p) / joint_norm(&ref_u, &g).max(1e-300))
}
