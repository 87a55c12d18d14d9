//! TR-BDF2 additive Runge–Kutta pair and the three-stage time step.

use crate::discretization::DgSpace;
use crate::error::{Error, Result};
use crate::operators::{energy_history, explicit_density, momentum_rhs, DgOperators, StageContext, Tendency};
use crate::solver::{solve_stage, PicardConfig, StageProblem};
use crate::thermo::{ConservedField, GasConstants};

/// Explicit and implicit tableaux sharing weights `b` and nodes `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherPair {
    pub chi: f64,
    pub explicit: [[f64; 3]; 3],
    pub implicit: [[f64; 3]; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
}

pub fn tableau() -> ButcherPair {
    let chi = 2.0 - std::f64::consts::SQRT_2;
    let a32 = 0.5;
    let d = chi / 2.0;
    let w = 0.5 - chi / 4.0;
    ButcherPair {
        chi,
        explicit: [[0.0, 0.0, 0.0], [chi, 0.0, 0.0], [1.0 - a32, a32, 0.0]],
        implicit: [[0.0, 0.0, 0.0], [d, d, 0.0], [w, w, d]],
        b: [w, w, d],
        c: [0.0, chi, 1.0],
    }
}

/// Which parts of the right-hand side are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitMode {
    #[default]
    Full,
    /// Stiff part disabled: the scheme reduces to its explicit tableau.
    AdvectionOnly,
}

/// Stage states and their cached tendencies, in stage order.
#[derive(Debug, Clone)]
pub struct StageHistory {
    pub base: ConservedField,
    pub states: Vec<ConservedField>,
    pub explicit: Vec<Tendency>,
    pub implicit: Vec<Tendency>,
}

impl StageHistory {
    pub fn new(base: ConservedField) -> Self {
        StageHistory {
            base,
            states: Vec::new(),
            explicit: Vec::new(),
            implicit: Vec::new(),
        }
    }

    pub fn push(&mut self, state: ConservedField, explicit: Tendency, implicit: Tendency) {
        self.states.push(state);
        self.explicit.push(explicit);
        self.implicit.push(implicit);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageStats {
    pub stage: usize,
    pub picard_iterations: usize,
    pub gmres_iterations: Vec<usize>,
    pub variation: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepStats {
    /// Stages 2 and 3 (empty in advection-only mode).
    pub stages: Vec<StageStats>,
}

impl StepStats {
    pub fn picard_total(&self) -> usize {
        self.stages.iter().map(|s| s.picard_iterations).sum()
    }

    pub fn gmres_total(&self) -> usize {
        self.stages.iter().flat_map(|s| s.gmres_iterations.iter()).sum()
    }
}

/// `q^{n+1} = q^n + Δt Σ_l b_l (N_l + S_l) / M`.
pub fn final_update(space: &DgSpace, history: &StageHistory, b: &[f64; 3], dt: f64) -> ConservedField {
    let n = space.n_dofs();
    let w = space.mass();
    let mut q = history.base.clone();
    for (l, bl) in b.iter().enumerate().take(history.len()) {
        let (ne, st) = (&history.explicit[l], &history.implicit[l]);
        for k in 0..n {
            let c = dt * bl / w[k];
            q.rho[k] += c * (ne.rho[k] + st.rho[k]);
            q.mx[k] += c * (ne.momentum[k] + st.momentum[k]);
            q.my[k] += c * (ne.momentum[n + k] + st.momentum[n + k]);
            q.mz[k] += c * (ne.momentum[2 * n + k] + st.momentum[2 * n + k]);
            q.energy[k] += c * (ne.energy[k] + st.energy[k]);
        }
    }
    q
}

/// Mass-weighted implicit increment `Δt Σ_l b_l S_l` (flat `[ρ, m, E]`).
pub fn implicit_increment(history: &StageHistory, b: &[f64; 3], dt: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for (l, bl) in b.iter().enumerate().take(history.len()) {
        let s = &history.implicit[l];
        let flat = s.rho.iter().chain(&s.momentum).chain(&s.energy);
        if out.is_empty() {
            out = flat.map(|v| dt * bl * v).collect();
        } else {
            for (o, v) in out.iter_mut().zip(flat) {
                *o += dt * bl * v;
            }
        }
    }
    out
}

/// The same increment recovered from the stage-3 state:
/// `M (y^{(n,3)} − q^n) − Δt Σ_m a_3m N_m`.
pub fn implicit_increment_from_last_stage(
    space: &DgSpace,
    history: &StageHistory,
    tableau: &ButcherPair,
    dt: f64,
) -> Vec<f64> {
    let n = space.n_dofs();
    let w = space.mass();
    let y = &history.states[2];
    let q = &history.base;
    let mut out = vec![0.0; 5 * n];
    for k in 0..n {
        out[k] = w[k] * (y.rho[k] - q.rho[k]);
        out[n + k] = w[k] * (y.mx[k] - q.mx[k]);
        out[2 * n + k] = w[k] * (y.my[k] - q.my[k]);
        out[3 * n + k] = w[k] * (y.mz[k] - q.mz[k]);
        out[4 * n + k] = w[k] * (y.energy[k] - q.energy[k]);
    }
    for m in 0..2 {
        let a = dt * tableau.explicit[2][m];
        let t = &history.explicit[m];
        for (o, v) in out.iter_mut().zip(t.rho.iter().chain(&t.momentum).chain(&t.energy)) {
            *o -= a * v;
        }
    }
    out
}

/// Advances a conserved state by TR-BDF2 IMEX steps.
#[derive(Debug, Clone)]
pub struct ImexStepper<'a> {
    pub space: &'a DgSpace,
    pub gas: GasConstants,
    pub tableau: ButcherPair,
    pub config: PicardConfig,
    pub mode: SplitMode,
    implicit_solves: usize,
    steps: usize,
}

impl<'a> ImexStepper<'a> {
    pub fn new(space: &'a DgSpace, gas: GasConstants, config: PicardConfig) -> Self {
        ImexStepper {
            space,
            gas,
            tableau: tableau(),
            config,
            mode: SplitMode::Full,
            implicit_solves: 0,
            steps: 0,
        }
    }

    pub fn with_mode(mut self, mode: SplitMode) -> Self {
        self.mode = mode;
        self
    }

    /// Number of implicit stage solves performed so far.
    pub fn implicit_solves(&self) -> usize {
        self.implicit_solves
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    fn ops(&self) -> DgOperators<'_> {
        DgOperators::new(self.space, &self.gas)
    }

    fn stiff(&self, y: &ConservedField) -> Tendency {
        match self.mode {
            SplitMode::Full => self.ops().stiff_tendency(y),
            SplitMode::AdvectionOnly => Tendency::zeros(y.len()),
        }
    }

    /// Runs the three stages and returns the stage history.
    pub fn stages(&mut self, q: &ConservedField, dt: f64) -> Result<(StageHistory, StepStats)> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        self.space.check_len(&q.rho, 1)?;
        q.check_admissible(&self.gas)?;
        let n = self.space.n_dofs();
        let w = self.space.mass();
        let gas = self.gas;

        let mut history = StageHistory::new(q.clone());
        let ne = self.ops().explicit_tendency(q);
        let st = self.stiff(q);
        history.push(q.clone(), ne, st);

        let mut stats = StepStats::default();
        for stage in 2..=3 {
            let ctx = StageContext::new(&self.tableau, stage, dt, gas.f);
            let rho = explicit_density(self.space, &history, &ctx);
            let f = momentum_rhs(self.space, &history, &ctx);
            let g_hist = energy_history(self.space, &history, &ctx);

            let y = match self.mode {
                SplitMode::AdvectionOnly => {
                    let mut y = ConservedField::zeros(n);
                    for k in 0..n {
                        y.rho[k] = rho[k];
                        y.mx[k] = f[k] / w[k];
                        y.my[k] = f[n + k] / w[k];
                        y.mz[k] = f[2 * n + k] / w[k];
                        y.energy[k] = g_hist[k] / w[k];
                    }
                    y
                }
                SplitMode::Full => {
                    if let Some(k) = rho.iter().position(|r| !(*r > 0.0)) {
                        return Err(Error::StageFailed {
                            stage,
                            source: Box::new(Error::InvalidState {
                                dof: Some(k),
                                reason: format!("non-positive density {:e}", rho[k]),
                            }),
                        });
                    }
                    let prev = history.states.last().expect("stage history is non-empty");
                    let u0 = prev.velocity();
                    let p0 = prev.pressure(&gas);
                    let ops = DgOperators::new(self.space, &gas);
                    let problem = StageProblem {
                        ops,
                        ctx: &ctx,
                        rho: &rho,
                        f: &f,
                        g_history: &g_hist,
                    };
                    self.implicit_solves += 1;
                    let sol = solve_stage(&problem, &u0, &p0, &self.config).map_err(|e| Error::StageFailed {
                        stage,
                        source: Box::new(e),
                    })?;
                    stats.stages.push(StageStats {
                        stage,
                        picard_iterations: sol.picard_iterations,
                        gmres_iterations: sol.gmres_iterations.clone(),
                        variation: sol.variation,
                    });
                    ConservedField::from_velocity_pressure(&rho, &sol.velocity, &sol.pressure, &gas)
                }
            };
            y.check_admissible(&gas).map_err(|e| Error::StageFailed {
                stage,
                source: Box::new(e),
            })?;
            let ne = self.ops().explicit_tendency(&y);
            let st = self.stiff(&y);
            history.push(y, ne, st);
        }
        Ok((history, stats))
    }

    /// One full time step.
    pub fn step(&mut self, q: &ConservedField, dt: f64) -> Result<(ConservedField, StepStats)> {
        let step = self.steps + 1;
        let (history, stats) = self.stages(q, dt).map_err(|e| match e {
            e @ Error::InvalidParameter { .. } => e,
            e => Error::StepFailed {
                step,
                source: Box::new(e),
            },
        })?;
        let next = final_update(self.space, &history, &self.tableau.b, dt);
        next.check_admissible(&self.gas).map_err(|e| Error::StepFailed {
            step,
            source: Box::new(e),
        })?;
        self.steps = step;
        Ok((next, stats))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tableau_values() {
        let t = tableau();
        assert!((t.chi - 0.585_786_437_6).abs() < 1e-10);
        assert!((t.b[0] - 0.353_553_390_6).abs() < 1e-10);
        assert!((t.b[2] - 0.292_893_218_8).abs() < 1e-10);
        assert_eq!(t.b.iter().sum::<f64>(), 1.0);
        let bc: f64 = t.b.iter().zip(&t.c).map(|(b, c)| b * c).sum();
        assert!((bc - 0.5).abs() <= 1e-15);
        assert_eq!(t.b, t.implicit[2]);
        for l in 0..3 {
            let se: f64 = t.explicit[l].iter().sum();
            let si: f64 = t.implicit[l].iter().sum();
            assert!((se - t.c[l]).abs() < 1e-15);
            assert!((si - t.c[l]).abs() < 1e-15);
            for m in l..3 {
                assert_eq!(t.explicit[l][m], 0.0);
            }
        }
    }

    /// The pair on `y' = λ_S y + λ_N y`, with the stiff part implicit.
    fn scalar_step(y: f64, dt: f64, ls: f64, ln: f64) -> f64 {
        let t = tableau();
        let mut ys = [0.0; 3];
        ys[0] = y;
        for l in 1..3 {
            let mut rhs = y;
            for m in 0..l {
                rhs += dt * (t.explicit[l][m] * ln * ys[m] + t.implicit[l][m] * ls * ys[m]);
            }
            ys[l] = rhs / (1.0 - dt * t.implicit[l][l] * ls);
        }
        y + dt * (0..3).map(|l| t.b[l] * (ln + ls) * ys[l]).sum::<f64>()
    }

    #[test]
    fn second_order_on_split_scalar_ode() {
        let (ls, ln) = (-100.0, -1.0);
        let tf = 0.16;
        let err = |dt: f64| {
            let steps = (tf / dt).round() as usize;
            let mut y = 1.0;
            for _ in 0..steps {
                y = scalar_step(y, dt, ls, ln);
            }
            (y - ((ls + ln) * tf).exp()).abs()
        };
        let (e1, e2, e3) = (err(0.01), err(0.005), err(0.0025));
        let p1 = (e1 / e2).log2();
        let p2 = (e2 / e3).log2();
        assert!((p2 - 2.0).abs() < 0.25, "orders {p1} {p2}");
    }

    use crate::scenarios::{baldauf_initial_state, desk_baldauf_config, uniform_state, BaldaufParams};

    fn small_baldauf() -> (DgSpace, GasConstants, ConservedField) {
        let params = BaldaufParams {
            nx: 12,
            nz: 4,
            ..desk_baldauf_config()
        };
        let gas = GasConstants::dry_air().with_coriolis(params.f);
        let space = params.space().unwrap();
        let q = baldauf_initial_state(&params, &space, &gas).unwrap();
        (space, gas, q)
    }

    fn total(space: &DgSpace, v: &[f64]) -> f64 {
        v.iter().zip(space.mass()).map(|(a, w)| a * w).sum()
    }

    #[test]
    fn uniform_rest_is_stationary_without_forces() {
        let gas = GasConstants::dry_air().with_gravity(0.0).with_coriolis(0.0);
        let space = DgSpace::build(3, 2, 3000.0, 1000.0, 2).unwrap();
        let q = uniform_state(&space, &gas, 1.1, 9.0e4).unwrap();
        let mut stepper = ImexStepper::new(&space, gas, PicardConfig::default());
        let (next, stats) = stepper.step(&q, 10.0).unwrap();
        assert_eq!(stats.stages.len(), 2);
        for k in 0..q.len() {
            let (a, b) = (next.get(k), q.get(k));
            assert!((a[0] - b[0]).abs() <= 1e-12 * b[0]);
            assert!((a[4] - b[4]).abs() <= 1e-12 * b[4]);
            for c in 1..4 {
                assert!(a[c].abs() <= 1e-9, "{k}/{c}: {:e}", a[c]);
            }
        }
    }

    #[test]
    fn mass_is_conserved_step_by_step() {
        let (space, gas, mut q) = small_baldauf();
        let mut stepper = ImexStepper::new(&space, gas, PicardConfig::default());
        let m0 = total(&space, &q.rho);
        for _ in 0..5 {
            let m_prev = total(&space, &q.rho);
            q = stepper.step(&q, 10.0).unwrap().0;
            assert!((total(&space, &q.rho) - m_prev).abs() <= 1e-12 * m0);
        }
        assert_eq!(stepper.steps_taken(), 5);
        assert_eq!(stepper.implicit_solves(), 10);
    }

    #[test]
    fn advection_only_mode_is_the_explicit_runge_kutta_method() {
        let gas = GasConstants::dry_air().with_gravity(0.0).with_coriolis(0.0);
        let space = DgSpace::build(4, 2, 4000.0, 1000.0, 2).unwrap();
        let n = space.n_dofs();
        let tau = 2.0 * std::f64::consts::PI;
        let rho = space.interpolate(|x, z| 1.0 + 0.1 * (tau * x / 4000.0).sin() * (z / 1000.0));
        let mut vel = space.interpolate(|x, _| 10.0 + 5.0 * (tau * x / 4000.0).cos());
        vel.extend(space.interpolate(|_, z| z / 500.0));
        vel.extend(space.interpolate(|x, z| (tau * x / 4000.0).sin() * (std::f64::consts::PI * z / 1000.0).sin()));
        let p = vec![1.0e5; n];
        let q = ConservedField::from_velocity_pressure(&rho, &vel, &p, &gas);
        let dt = 1.0;

        let mut stepper = ImexStepper::new(&space, gas, PicardConfig::default()).with_mode(SplitMode::AdvectionOnly);
        let (next, _) = stepper.step(&q, dt).unwrap();
        assert_eq!(stepper.implicit_solves(), 0);

        // Independent three-stage explicit update.
        let ops = DgOperators::new(&space, &gas);
        let t = tableau();
        let w = space.mass();
        let flat = |f: &ConservedField| -> Vec<f64> {
            f.rho.iter().chain(&f.mx).chain(&f.my).chain(&f.mz).chain(&f.energy).copied().collect()
        };
        let tend = |f: &ConservedField| -> Vec<f64> {
            let d = ops.explicit_tendency(f);
            d.rho.iter().chain(&d.momentum).chain(&d.energy).copied().collect()
        };
        let unflat = |v: &[f64]| -> ConservedField {
            let mut f = ConservedField::zeros(n);
            for k in 0..n {
                f.set(k, [v[k], v[n + k], v[2 * n + k], v[3 * n + k], v[4 * n + k]]);
            }
            f
        };
        let q0 = flat(&q);
        let combine = |coeffs: &[f64], ks: &[Vec<f64>]| -> Vec<f64> {
            (0..5 * n)
                .map(|i| q0[i] + dt * coeffs.iter().zip(ks).map(|(c, k)| c * k[i]).sum::<f64>() / w[i % n])
                .collect()
        };
        let k1 = tend(&q);
        let k2 = tend(&unflat(&combine(&t.explicit[1][..1], &[k1.clone()])));
        let k3 = tend(&unflat(&combine(&t.explicit[2][..2], &[k1.clone(), k2.clone()])));
        let expect = combine(&t.b, &[k1, k2, k3]);
        let got = flat(&next);
        for i in 0..5 * n {
            assert!((got[i] - expect[i]).abs() <= 1e-12 * expect[i].abs().max(1.0), "{i}");
        }
    }

    #[test]
    fn implicit_increment_is_recoverable_from_the_last_stage() {
        let (space, gas, q) = small_baldauf();
        let t = tableau();
        let dt = 10.0;
        let mut stepper = ImexStepper::new(&space, gas, PicardConfig::default());
        let (history, _) = stepper.stages(&q, dt).unwrap();
        let direct = implicit_increment(&history, &t.b, dt);
        let recovered = implicit_increment_from_last_stage(&space, &history, &t, dt);
        let n = space.n_dofs();
        // Each block against its increment scale, floored by the roundoff of
        // the mass-weighted states the recovery differences.
        let w = space.mass();
        let state_scale = |f: &dyn Fn(usize) -> f64| (0..n).fold(0.0_f64, |m, k| m.max((w[k] * f(k)).abs()));
        let floors = [
            state_scale(&|k| q.rho[k]),
            state_scale(&|k| q.rho[k] * 320.0),
            state_scale(&|k| q.energy[k]),
        ];
        for ((lo, hi), floor) in [(0, n), (n, 4 * n), (4 * n, 5 * n)].into_iter().zip(floors) {
            let inc = direct[lo..hi].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let bound = 1e-6 * inc + 1e-12 * floor;
            let err = direct[lo..hi]
                .iter()
                .zip(&recovered[lo..hi])
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err <= bound, "block {lo}: {err:e} vs {bound:e}");
        }
    }

    #[test]
    fn rejects_bad_step_size() {
        let (space, gas, q) = small_baldauf();
        let mut stepper = ImexStepper::new(&space, gas, PicardConfig::default());
        assert!(matches!(stepper.step(&q, -1.0), Err(Error::InvalidParameter { .. })));
        assert!(stepper.step(&q, f64::NAN).is_err());
    }
}
