use imexdg::discretization::DgSpace;
use imexdg::imex::{tableau, StageHistory};
use imexdg::operators::dense::{
    dense_assemble, reference_energy_rhs, reference_explicit_tendency, reference_gravity_vector,
    reference_momentum_rhs, reference_stiff_tendency, OperatorTag,
};
use imexdg::operators::{energy_rhs, explicit_density, momentum_rhs, DgOperators, OperatorAction, StageContext};
use imexdg::thermo::{ConservedField, GasConstants};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

fn random_state(space: &DgSpace, gas: &GasConstants, rng: &mut ChaCha8Rng) -> ConservedField {
    let n = space.n_dofs();
    let rho: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let vel: Vec<f64> = (0..3 * n).map(|_| rng.gen_range(-20.0..20.0)).collect();
    let p: Vec<f64> = (0..n).map(|_| rng.gen_range(5e4..1.2e5)).collect();
    ConservedField::from_velocity_pressure(&rho, &vel, &p, gas)
}

fn spaces() -> Vec<DgSpace> {
    vec![
        DgSpace::build(1, 1, 800.0, 500.0, 1).unwrap(),
        DgSpace::build(2, 1, 1000.0, 300.0, 2).unwrap(),
        DgSpace::build(1, 2, 700.0, 900.0, 3).unwrap(),
        DgSpace::build(2, 2, 2000.0, 1000.0, 3).unwrap(),
        DgSpace::build(2, 2, 1500.0, 600.0, 2).unwrap(),
    ]
}

const TOL: f64 = 1e-12;

#[test]
fn linear_actions_match_dense_assembly() {
    let gas = GasConstants::dry_air().with_coriolis(1.03126e-4);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for space in spaces() {
        let ops = DgOperators::new(&space, &gas);
        let n = space.n_dofs();
        for trial in 0..20 {
            let q = random_state(&space, &gas, &mut rng);
            let ctx = StageContext::synthetic(rng.gen_range(0.1..0.5), rng.gen_range(0.5..20.0), gas.f * 1e3);
            let u: Vec<f64> = (0..3 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let pressure = q.pressure(&gas);
            let h_rho: Vec<f64> = pressure.iter().map(|p| 3.5 * p).collect();

            let check = |tag: OperatorTag, x: &[f64], y: Vec<f64>| {
                let m = dense_assemble(&space, &gas, tag, &q, &ctx).unwrap();
                let e = rel(&y, &m.apply_vec(x));
                assert!(e <= TOL, "{tag:?} trial {trial}: {e:e}");
            };
            check(OperatorTag::A, &u, ops.mass_rho(&u, &q.rho).unwrap());
            check(OperatorTag::R, &u, ops.coriolis(&u, &q.rho, &ctx).unwrap());
            check(OperatorTag::B, &p, ops.pressure_gradient(&p, &ctx).unwrap());
            check(OperatorTag::C, &u, ops.enthalpy_divergence(&u, &h_rho, &ctx).unwrap());
            check(OperatorTag::D, &p, ops.energy_mass(&p).unwrap());
            check(OperatorTag::Mg, &u, ops.gravity_coupling(&u, &q.rho, &ctx).unwrap());

            let a = dense_assemble(&space, &gas, OperatorTag::A, &q, &ctx).unwrap();
            let ainv = ops.inv_mass_rho(&a.apply_vec(&u), &q.rho).unwrap();
            assert!(rel(&ainv, &u) <= TOL);
            let r = dense_assemble(&space, &gas, OperatorTag::R, &q, &ctx).unwrap();
            let ar = &a + &r;
            let back = ops.inv_mass_coriolis(&ar.apply_vec(&u), &q.rho, &ctx).unwrap();
            assert!(rel(&back, &u) <= TOL);

            let fg = ops.gravity_vector(&q.rho, &ctx).unwrap();
            let fg_ref = reference_gravity_vector(&space, &gas, &q.rho, &ctx).unwrap();
            assert!(rel(&fg, &fg_ref) <= TOL);
        }
    }
}

#[test]
fn tendencies_match_quadrature_loops() {
    let gas = GasConstants::dry_air().with_coriolis(1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for space in spaces() {
        let ops = DgOperators::new(&space, &gas);
        for _ in 0..5 {
            let q = random_state(&space, &gas, &mut rng);
            let a = ops.explicit_tendency(&q);
            let b = reference_explicit_tendency(&space, &gas, &q).unwrap();
            assert!(rel(&a.rho, &b.rho) <= TOL, "{:e}", rel(&a.rho, &b.rho));
            assert!(rel(&a.momentum, &b.momentum) <= TOL, "{:e}", rel(&a.momentum, &b.momentum));
            assert!(rel(&a.energy, &b.energy) <= TOL, "{:e}", rel(&a.energy, &b.energy));
            let a = ops.stiff_tendency(&q);
            let b = reference_stiff_tendency(&space, &gas, &q).unwrap();
            assert!(rel(&a.momentum, &b.momentum) <= TOL, "{:e}", rel(&a.momentum, &b.momentum));
            assert!(rel(&a.energy, &b.energy) <= TOL, "{:e}", rel(&a.energy, &b.energy));
            assert!(a.rho.iter().all(|v| *v == 0.0));
        }
    }
}

#[test]
fn stage_vectors_match_reference_on_random_history() {
    let gas = GasConstants::dry_air().with_coriolis(1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = tableau();
    for space in spaces() {
        let ops = DgOperators::new(&space, &gas);
        for _ in 0..4 {
            let mut history = StageHistory::new(random_state(&space, &gas, &mut rng));
            for _ in 0..2 {
                let y = random_state(&space, &gas, &mut rng);
                let (ne, st) = (ops.explicit_tendency(&y), ops.stiff_tendency(&y));
                history.push(y, ne, st);
            }
            let ctx = StageContext::new(&t, 3, 3.0, gas.f);
            let f = momentum_rhs(&space, &history, &ctx);
            let f_ref = reference_momentum_rhs(&space, &gas, &history, &ctx).unwrap();
            assert!(rel(&f, &f_ref) <= TOL);

            let it = random_state(&space, &gas, &mut rng);
            let (vel, p) = (it.velocity(), it.pressure(&gas));
            let g = energy_rhs(&ops, &history, &vel, &p, &ctx).unwrap();
            let g_ref = reference_energy_rhs(&space, &gas, &history, &vel, &p, &ctx).unwrap();
            assert!(rel(&g, &g_ref) <= TOL);

            let rho = explicit_density(&space, &history, &ctx);
            let w = space.mass();
            let m0: f64 = history.base.rho.iter().zip(w).map(|(r, w)| r * w).sum();
            let m1: f64 = rho.iter().zip(w).map(|(r, w)| r * w).sum();
            assert!((m1 - m0).abs() <= 1e-12 * m0);
        }
    }
}

#[test]
fn dense_size_guard() {
    let gas = GasConstants::dry_air();
    let space = DgSpace::build(5, 4, 1.0, 1.0, 1).unwrap();
    let q = ConservedField::from_velocity_pressure(
        &vec![1.0; space.n_dofs()],
        &vec![0.0; 3 * space.n_dofs()],
        &vec![1.0; space.n_dofs()],
        &gas,
    );
    let ctx = StageContext::synthetic(0.3, 1.0, 0.0);
    assert!(dense_assemble(&space, &gas, OperatorTag::A, &q, &ctx).is_err());
    let space = DgSpace::build(1, 1, 1.0, 1.0, 4).unwrap();
    assert!(dense_assemble(&space, &gas, OperatorTag::A, &q, &ctx).is_err());
}
