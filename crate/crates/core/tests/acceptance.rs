use std::io::Write;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use imexdg::cli_io::{convergence_samples, refined, RunConfig, Scenario, Simulation};
use imexdg::diagnostics::{conservation_totals, courant_numbers, eoc, error_norms, max_abs, nodal_quantity, Quantity};
use imexdg::discretization::DgSpace;
use imexdg::imex::{tableau, StageHistory};
use imexdg::operators::dense::{
    dense_assemble, reference_energy_rhs, reference_gravity_vector, reference_momentum_rhs, OperatorTag,
};
use imexdg::operators::{energy_rhs, momentum_rhs, DgOperators, OperatorAction, StageContext};
use imexdg::scenarios::{
    baldauf_initial_state, desk_baldauf_config, desk_planetary_config, standard_baldauf_config,
};
use imexdg::solver::{gmres, GmresConfig, Strategy};
use imexdg::thermo::{ConservedField, GasConstants};

/// Writes the verdict line straight to stdout so it survives output capture.
fn report(criterion: usize, passed: bool, detail: String) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    let line = format!("criterion {criterion:>2}: {verdict} {detail}\n");
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(passed, "criterion {criterion} failed: {detail}");
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

#[test]
fn criterion_01_tableau() {
    let t = tableau();
    let sum_b: f64 = t.b.iter().sum();
    let bc: f64 = t.b.iter().zip(&t.c).map(|(b, c)| b * c).sum();
    let mut rows = 0.0_f64;
    for i in 0..3 {
        let se: f64 = t.explicit[i].iter().sum();
        let si: f64 = t.implicit[i].iter().sum();
        rows = rows.max((se - t.c[i]).abs()).max((si - t.c[i]).abs());
    }
    let stiffly = t.b == t.implicit[2];
    let passed = sum_b == 1.0 && (bc - 0.5).abs() <= 1e-15 && stiffly && rows <= 1e-15;
    report(
        1,
        passed,
        format!("sum b = {sum_b}, |b.c - 1/2| = {:.1e}, b = last implicit row: {stiffly}, row sums vs c {rows:.1e}", (bc - 0.5).abs()),
    );
}

fn random_state(space: &DgSpace, gas: &GasConstants, rng: &mut ChaCha8Rng) -> ConservedField {
    let n = space.n_dofs();
    let rho: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let vel: Vec<f64> = (0..3 * n).map(|_| rng.gen_range(-20.0..20.0)).collect();
    let p: Vec<f64> = (0..n).map(|_| rng.gen_range(5e4..1.2e5)).collect();
    ConservedField::from_velocity_pressure(&rho, &vel, &p, gas)
}

#[test]
fn criterion_02_operator_oracles() {
    let gas = GasConstants::dry_air().with_coriolis(1.03126e-4);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let t = tableau();
    let spaces = [
        DgSpace::build(1, 1, 800.0, 500.0, 1).unwrap(),
        DgSpace::build(2, 1, 1000.0, 300.0, 2).unwrap(),
        DgSpace::build(2, 2, 2000.0, 1000.0, 3).unwrap(),
    ];
    let mut worst = 0.0_f64;
    let mut worst_op = "";
    let mut track = |name: &'static str, e: f64| {
        if e > worst {
            worst = e;
            worst_op = name;
        }
    };
    for space in &spaces {
        let ops = DgOperators::new(space, &gas);
        let n = space.n_dofs();
        for _ in 0..20 {
            let q = random_state(space, &gas, &mut rng);
            let ctx = StageContext::synthetic(rng.gen_range(0.1..0.5), rng.gen_range(0.5..20.0), gas.f * 1e3);
            let u: Vec<f64> = (0..3 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let h_rho: Vec<f64> = q.pressure(&gas).iter().map(|p| 3.5 * p).collect();
            let dense = |tag| dense_assemble(space, &gas, tag, &q, &ctx).unwrap();

            let a = dense(OperatorTag::A);
            let r = dense(OperatorTag::R);
            track("A", rel(&ops.mass_rho(&u, &q.rho).unwrap(), &a.apply_vec(&u)));
            track("R", rel(&ops.coriolis(&u, &q.rho, &ctx).unwrap(), &r.apply_vec(&u)));
            track("A^-1", rel(&ops.inv_mass_rho(&a.apply_vec(&u), &q.rho).unwrap(), &u));
            let ar = &a + &r;
            track("(A+R)^-1", rel(&ops.inv_mass_coriolis(&ar.apply_vec(&u), &q.rho, &ctx).unwrap(), &u));
            track("B", rel(&ops.pressure_gradient(&p, &ctx).unwrap(), &dense(OperatorTag::B).apply_vec(&p)));
            track(
                "C",
                rel(&ops.enthalpy_divergence(&u, &h_rho, &ctx).unwrap(), &dense(OperatorTag::C).apply_vec(&u)),
            );
            track("D", rel(&ops.energy_mass(&p).unwrap(), &dense(OperatorTag::D).apply_vec(&p)));
            track(
                "Mg",
                rel(&ops.gravity_coupling(&u, &q.rho, &ctx).unwrap(), &dense(OperatorTag::Mg).apply_vec(&u)),
            );
            track(
                "f_g",
                rel(
                    &ops.gravity_vector(&q.rho, &ctx).unwrap(),
                    &reference_gravity_vector(space, &gas, &q.rho, &ctx).unwrap(),
                ),
            );

            let mut history = StageHistory::new(q.clone());
            for _ in 0..2 {
                let y = random_state(space, &gas, &mut rng);
                let (ne, st) = (ops.explicit_tendency(&y), ops.stiff_tendency(&y));
                history.push(y, ne, st);
            }
            let stage = StageContext::new(&t, 3, 3.0, gas.f);
            track(
                "f",
                rel(
                    &momentum_rhs(space, &history, &stage),
                    &reference_momentum_rhs(space, &gas, &history, &stage).unwrap(),
                ),
            );
            let it = random_state(space, &gas, &mut rng);
            let (vel, pit) = (it.velocity(), it.pressure(&gas));
            track(
                "g",
                rel(
                    &energy_rhs(&ops, &history, &vel, &pit, &stage).unwrap(),
                    &reference_energy_rhs(space, &gas, &history, &vel, &pit, &stage).unwrap(),
                ),
            );
        }
    }
    report(2, worst <= 1e-12, format!("worst relative error {worst:.2e} ({worst_op})"));
}

#[test]
fn criterion_03_rotation_factorization() {
    let space = DgSpace::build(3, 2, 3000.0, 1000.0, 2).unwrap();
    let n = space.n_dofs();
    let gas = GasConstants::dry_air().with_coriolis(1.0);
    let ops = DgOperators::new(&space, &gas);
    let rho: Vec<f64> = (0..n).map(|k| 1.0 + 0.2 * (0.37 * k as f64).sin()).collect();
    let u: Vec<f64> = (0..3 * n).map(|k| 5.0 * (1.3 * k as f64 + 0.4).sin()).collect();
    let mut worst = 0.0_f64;
    for beta in [0.0, 0.01, 0.5, 1.0, 3.0] {
        let ctx = StageContext::synthetic(0.5, 2.0 * beta, 1.0);
        let au = ops.mass_rho(&u, &rho).unwrap();
        let ru = ops.coriolis(&u, &rho, &ctx).unwrap();
        let v: Vec<f64> = au.iter().zip(&ru).map(|(a, r)| a + r).collect();
        worst = worst.max(rel(&ops.inv_mass_coriolis(&v, &rho, &ctx).unwrap(), &u));
    }

    // (A+R)^-1 A restricted to the horizontal components of one node.
    let ctx = StageContext::synthetic(0.5, 2.0, 1.0);
    let k = n / 2;
    let mut block = [[0.0; 2]; 2];
    for (col, offset) in [0, n].into_iter().enumerate() {
        let mut e = vec![0.0; 3 * n];
        e[offset + k] = 1.0;
        let y = ops.inv_mass_coriolis(&ops.mass_rho(&e, &rho).unwrap(), &rho, &ctx).unwrap();
        block[0][col] = y[k];
        block[1][col] = y[n + k];
    }
    let expect = [[0.5, 0.5], [-0.5, 0.5]];
    let block_err = (0..4).map(|i| (block[i / 2][i % 2] - expect[i / 2][i % 2]).abs()).fold(0.0, f64::max);
    report(
        3,
        worst <= 1e-12 && block_err <= 1e-15,
        format!("round trip {worst:.2e}, beta = 1 block {block:?}"),
    );
}

struct Level {
    config: RunConfig,
    samples: Vec<(&'static str, DMatrix<f64>)>,
    mass: Vec<f64>,
    max_w: f64,
}

fn desk_config() -> RunConfig {
    let mut cfg = RunConfig::for_scenario(Scenario::Baldauf);
    cfg.params = desk_baldauf_config();
    cfg
}

fn run_level(cfg: RunConfig) -> Result<Level, String> {
    let mut sim = Simulation::new(&cfg).map_err(|e| e.to_string())?;
    let bg = sim.background();
    let mut mass = vec![conservation_totals(&sim.space, &sim.state).unwrap().0];
    let mut max_w = 0.0_f64;
    for _ in 0..sim.total_steps() {
        sim.advance(1).map_err(|e| e.to_string())?;
        mass.push(conservation_totals(&sim.space, &sim.state).unwrap().0);
        let w = nodal_quantity(&sim.space, &sim.gas, &sim.state, Quantity::W, &bg).unwrap();
        max_w = max_w.max(max_abs(&w));
    }
    Ok(Level {
        samples: convergence_samples(&sim).map_err(|e| e.to_string())?,
        config: cfg,
        mass,
        max_w,
    })
}

/// The desk Baldauf run at three hyperbolically refined levels.
fn desk_study() -> &'static [Result<Level, String>] {
    static STUDY: OnceLock<Vec<Result<Level, String>>> = OnceLock::new();
    STUDY.get_or_init(|| (0..3).map(|l| run_level(refined(&desk_config(), l))).collect())
}

fn w_sample(level: &Level) -> &DMatrix<f64> {
    &level.samples.iter().find(|(name, _)| *name == "w").unwrap().1
}

#[test]
fn criterion_04_mass_conservation() {
    let coarse = desk_study()[0].as_ref().expect("desk run failed");
    let m0 = coarse.mass[0];
    let steps = 200;
    let worst = coarse.mass[..=steps]
        .windows(2)
        .map(|m| (m[1] - m[0]).abs() / m0)
        .fold(0.0, f64::max);
    report(4, worst <= 1e-12, format!("largest per-step relative mass change over {steps} steps {worst:.2e}"));
}

#[test]
fn criterion_05_self_convergence() {
    let study = desk_study();
    let levels: Vec<&Level> = study.iter().map(|l| l.as_ref().expect("refined run failed")).collect();
    let reference = w_sample(levels[2]);
    let errors: Vec<f64> = levels[..2].iter().map(|l| error_norms(w_sample(l), reference).unwrap().0).collect();
    let dx: Vec<f64> = levels[..2].iter().map(|l| l.config.params.lx / l.config.params.nx as f64).collect();
    let order = eoc(&errors, &dx).unwrap()[0];
    report(
        5,
        (1.7..=2.5).contains(&order),
        format!("w l2 errors {:.3e}, {:.3e}; EOC {order:.3}", errors[0], errors[1]),
    );
}

#[test]
fn criterion_06_r1_r2_equivalence() {
    let mut cfg = refined(&desk_config(), 1);
    cfg.solver = cfg.solver.with_strategy(Strategy::R2);
    let r2 = run_level(cfg).expect("R2 run failed");
    let study = desk_study();
    let r1 = study[1].as_ref().expect("R1 run failed");
    let finest = study[2].as_ref().expect("reference run failed");
    let diff = error_norms(w_sample(&r2), w_sample(r1)).unwrap().0;
    let self_err = error_norms(w_sample(r1), w_sample(finest)).unwrap().0;
    report(
        6,
        diff <= 0.01 * self_err,
        format!("|w_R1 - w_R2| = {diff:.3e}, self-convergence error {self_err:.3e}"),
    );
}

#[test]
fn criterion_07_geostrophic_balance() {
    let mut cfg = RunConfig::for_scenario(Scenario::Planetary);
    cfg.params = desk_planetary_config();
    let mut sim = Simulation::new(&cfg).unwrap();
    let half = sim.total_steps() / 2;
    let mut history = Vec::new();
    let mut failure = None;
    while sim.step < sim.total_steps() {
        if let Err(e) = sim.advance(180) {
            failure = Some(e.to_string());
            break;
        }
        history.push((sim.step, sim.diagnostics().unwrap().egeo));
    }
    if let Some(e) = failure {
        report(7, false, format!("run failed: {e}"));
        return;
    }
    let at = |step: usize| history.iter().find(|(s, _)| *s == step).unwrap().1;
    let (e6, e12) = (at(half), at(sim.total_steps()));
    let peak = history.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    report(
        7,
        e12 <= 3.0 * e6 && peak < 1e-6,
        format!("E_geo(6 h) = {e6:.3e}, E_geo(12 h) = {e12:.3e}, max {peak:.3e}"),
    );
}

#[test]
fn criterion_08_courant_number() {
    let params = standard_baldauf_config();
    let gas = GasConstants::dry_air().with_coriolis(params.f);
    let space = params.space().unwrap();
    let q = baldauf_initial_state(&params, &space, &gas).unwrap();
    let (c, _) = courant_numbers(&space, &gas, &q, params.dt, 0.016).unwrap();
    report(8, (0.043..=0.046).contains(&c), format!("C = {c:.5} at T0 = {} K", params.t0));
}

#[test]
fn criterion_09_stability() {
    let coarse = desk_study()[0].as_ref();
    match coarse {
        Ok(level) => report(9, level.max_w <= 0.1, format!("max |w| over the run {:.3e} m/s", level.max_w)),
        Err(e) => report(9, false, format!("run failed: {e}")),
    }
}

#[test]
fn criterion_10_gmres() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let n = 50;
    let random = |rng: &mut ChaCha8Rng| DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let m = random(&mut rng);
    let spd = &m * m.transpose() + DMatrix::identity(n, n) * n as f64;
    let nonsym = random(&mut rng) + DMatrix::identity(n, n) * 8.0;
    let cfg = GmresConfig {
        tolerance: 1e-12,
        restart: n,
        max_iterations: 500,
    };
    let mut worst_res = 0.0_f64;
    let mut worst_sol = 0.0_f64;
    for a in [spd, nonsym] {
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (x, _) = gmres(&a, &b, &vec![0.0; n], &cfg).unwrap();
        let bv = DVector::from_vec(b);
        let direct = a.clone().lu().solve(&bv).unwrap();
        let r = &bv - &a * DVector::from_column_slice(&x);
        worst_res = worst_res.max(r.norm() / bv.norm());
        worst_sol = worst_sol.max(rel(&x, direct.as_slice()));
    }
    report(
        10,
        worst_res <= 1e-10 && worst_sol <= 1e-10,
        format!("relative residual {worst_res:.2e}, distance to direct solve {worst_sol:.2e}"),
    );
}
