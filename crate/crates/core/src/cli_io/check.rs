//! Fast built-in invariant checks behind the `check` subcommand.

use crate::diagnostics::conservation_totals;
use crate::discretization::DgSpace;
use crate::imex::{tableau, ImexStepper};
use crate::operators::dense::{dense_assemble, OperatorTag};
use crate::operators::{DgOperators, OperatorAction, StageContext};
use crate::scenarios::{baldauf_initial_state, desk_baldauf_config, BaldaufParams};
use crate::solver::{gmres, GmresConfig, PicardConfig};
use crate::thermo::GasConstants;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

/// Small perturbed state on a 2 × 2 mesh.
fn small_problem() -> crate::Result<(DgSpace, GasConstants, crate::thermo::ConservedField)> {
    let params = BaldaufParams {
        nx: 2,
        nz: 2,
        lx: 2.0e4,
        xc: 1.0e4,
        a: 5.0e3,
        delta_t: 1.0,
        degree: 2,
        ..desk_baldauf_config()
    };
    let gas = GasConstants::dry_air().with_coriolis(1e-4);
    let space = params.space()?;
    let mut q = baldauf_initial_state(&params, &space, &gas)?;
    for k in 0..q.len() {
        let s = (k as f64 * 0.7).sin();
        q.mx[k] += 0.5 * s * q.rho[k];
        q.my[k] -= 0.2 * s * q.rho[k];
        q.mz[k] += 0.1 * (k as f64).cos() * q.rho[k];
        q.energy[k] += 0.5 * (q.mx[k].powi(2) + q.my[k].powi(2) + q.mz[k].powi(2)) / q.rho[k];
    }
    Ok((space, gas, q))
}

pub fn run_checks() -> crate::Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();

    let t = tableau();
    let bc: f64 = t.b.iter().zip(&t.c).map(|(b, c)| b * c).sum();
    out.push(outcome(
        "tableau order conditions",
        t.b.iter().sum::<f64>() == 1.0 && (bc - 0.5).abs() <= 1e-15 && t.b == t.implicit[2],
        format!("sum b = {}, b.c = {bc}", t.b.iter().sum::<f64>()),
    ));

    let (space, gas, q) = small_problem()?;
    let ops = DgOperators::new(&space, &gas);
    let ctx = StageContext::synthetic(0.3, 2.0, gas.f);
    let n = space.n_dofs();
    let u = q.velocity();
    let p = q.pressure(&gas);
    let h_rho: Vec<f64> = p.iter().map(|p| 3.5 * p).collect();
    let mut worst: f64 = 0.0;
    let pairs: [(OperatorTag, Vec<f64>, Vec<f64>); 4] = [
        (OperatorTag::A, u.clone(), ops.mass_rho(&u, &q.rho)?),
        (OperatorTag::B, p.clone(), ops.pressure_gradient(&p, &ctx)?),
        (OperatorTag::C, u.clone(), ops.enthalpy_divergence(&u, &h_rho, &ctx)?),
        (OperatorTag::Mg, u.clone(), ops.gravity_coupling(&u, &q.rho, &ctx)?),
    ];
    for (tag, x, y) in pairs {
        let m = dense_assemble(&space, &gas, tag, &q, &ctx)?;
        worst = worst.max(rel_diff(&y, &m.apply_vec(&x)));
    }
    out.push(outcome("operator oracle", worst <= 1e-12, format!("max relative difference {worst:.3e}")));

    let mut worst: f64 = 0.0;
    for beta in [0.0, 0.01, 0.5, 1.0, 3.0] {
        let c = StageContext::synthetic(0.3, 1.0, beta / 0.3);
        let x: Vec<f64> = (0..3 * n).map(|k| (k as f64 * 1.3).cos()).collect();
        let mut ax = ops.mass_rho(&x, &q.rho)?;
        for (a, r) in ax.iter_mut().zip(ops.coriolis(&x, &q.rho, &c)?) {
            *a += r;
        }
        worst = worst.max(rel_diff(&ops.inv_mass_coriolis(&ax, &q.rho, &c)?, &x));
    }
    out.push(outcome("rotation inverse", worst <= 1e-12, format!("max relative error {worst:.3e}")));

    let (m0, _) = conservation_totals(&space, &q)?;
    let mut stepper = ImexStepper::new(&space, gas, PicardConfig::default());
    let mut state = q.clone();
    let mut drift: f64 = 0.0;
    for _ in 0..3 {
        state = stepper.step(&state, 5.0)?.0;
        let (m, _) = conservation_totals(&space, &state)?;
        drift = drift.max((m - m0).abs() / m0);
    }
    out.push(outcome("mass conservation", drift <= 1e-12, format!("max relative drift {drift:.3e}")));

    let size = 30;
    let a = nalgebra::DMatrix::from_fn(size, size, |i, j| {
        if i == j {
            4.0 + (i as f64).sin()
        } else {
            0.3 * ((i * size + j) as f64).cos() / size as f64
        }
    });
    let b: Vec<f64> = (0..size).map(|i| (i as f64).cos()).collect();
    let cfg = GmresConfig {
        tolerance: 1e-10,
        ..GmresConfig::default()
    };
    let (x, _) = gmres(&a, &b, &vec![0.0; size], &cfg)?;
    let res = rel_diff(&a.apply_vec(&x), &b);
    out.push(outcome("gmres residual", res <= 1e-10, format!("relative residual {res:.3e}")));

    Ok(out)
}
