//! Time integration driver, CSV output and convergence studies.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use super::config::{RunConfig, Scenario};
use crate::diagnostics::{
    conservation_totals, courant_numbers, eoc, error_norms, geostrophic_error, max_abs, nodal_quantity,
    sample_nodal, Quantity, SampleGrid,
};
use crate::discretization::DgSpace;
use crate::error::{Error, Result};
use crate::imex::{ImexStepper, StepStats};
use crate::scenarios::{baldauf_initial_state, rest_state, Background};
use crate::thermo::{ConservedField, GasConstants};

/// A scenario being integrated in time, without any I/O.
#[derive(Debug)]
pub struct Simulation {
    pub config: RunConfig,
    pub space: DgSpace,
    pub gas: GasConstants,
    pub state: ConservedField,
    pub step: usize,
    pub last_stats: StepStats,
}

impl Simulation {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let space = config.params.space()?;
        let gas = config.gas();
        let state = match config.scenario {
            Scenario::Rest => rest_state(&config.params, &space, &gas)?,
            Scenario::Baldauf | Scenario::Planetary => baldauf_initial_state(&config.params, &space, &gas)?,
        };
        Ok(Simulation {
            config: config.clone(),
            space,
            gas,
            state,
            step: 0,
            last_stats: StepStats::default(),
        })
    }

    pub fn total_steps(&self) -> usize {
        self.config.params.steps()
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.config.params.dt
    }

    pub fn background(&self) -> Background {
        self.config.params.background(&self.gas)
    }

    /// Advances by `count` steps.
    pub fn advance(&mut self, count: usize) -> Result<()> {
        let mut stepper = ImexStepper::new(&self.space, self.gas, self.config.solver);
        for _ in 0..count {
            let (next, stats) = stepper.step(&self.state, self.config.params.dt).map_err(|e| match e {
                Error::StepFailed { source, .. } => Error::StepFailed {
                    step: self.step + 1,
                    source,
                },
                other => other,
            })?;
            self.state = next;
            self.step += 1;
            self.last_stats = stats;
        }
        Ok(())
    }

    pub fn run_to_end(&mut self) -> Result<()> {
        let remaining = self.total_steps().saturating_sub(self.step);
        self.advance(remaining)
    }

    pub fn sample_grid(&self) -> Result<SampleGrid> {
        let p = &self.config.params;
        SampleGrid::new(self.config.sample_nx, self.config.sample_nz, p.lx, p.lz)
    }

    pub fn sample(&self, quantity: Quantity, grid: &SampleGrid) -> Result<DMatrix<f64>> {
        let nodal = nodal_quantity(&self.space, &self.gas, &self.state, quantity, &self.background())?;
        sample_nodal(&self.space, &nodal, grid)
    }

    /// One diagnostics row for the current state.
    pub fn diagnostics(&self) -> Result<DiagnosticsRow> {
        let (mass, energy) = conservation_totals(&self.space, &self.state)?;
        let bg = self.background();
        let w = nodal_quantity(&self.space, &self.gas, &self.state, Quantity::W, &bg)?;
        let u = nodal_quantity(&self.space, &self.gas, &self.state, Quantity::U, &bg)?;
        let geo_grid = SampleGrid::per_element(&self.space, 4)?;
        let egeo = geostrophic_error(&self.space, &self.gas, &self.state, &geo_grid)?;
        let (c, c_adv) = courant_numbers(
            &self.space,
            &self.gas,
            &self.state,
            self.config.params.dt,
            self.config.u_ref,
        )?;
        let stage = |s: usize| self.last_stats.stages.iter().find(|st| st.stage == s);
        Ok(DiagnosticsRow {
            step: self.step,
            time: self.time(),
            mass,
            energy,
            max_w: max_abs(&w),
            max_u: max_abs(&u),
            egeo,
            picard: [2, 3].map(|s| stage(s).map_or(0, |st| st.picard_iterations)),
            gmres: [2, 3].map(|s| stage(s).map_or(0, |st| st.gmres_iterations.iter().sum())),
            courant: c,
            courant_adv: c_adv,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
    pub max_w: f64,
    pub max_u: f64,
    pub egeo: f64,
    /// Picard iterations of stages 2 and 3 in the most recent step.
    pub picard: [usize; 2],
    /// GMRES iterations (summed over Picard iterations) of stages 2 and 3.
    pub gmres: [usize; 2],
    pub courant: f64,
    pub courant_adv: f64,
}

pub const DIAGNOSTICS_HEADER: &str =
    "step,time,mass,energy,max_w,max_u,egeo,picard_s2,picard_s3,gmres_s2,gmres_s3,courant,courant_adv";

impl DiagnosticsRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{},{},{},{:.12e},{:.12e}",
            self.step,
            self.time,
            self.mass,
            self.energy,
            self.max_w,
            self.max_u,
            self.egeo,
            self.picard[0],
            self.picard[1],
            self.gmres[0],
            self.gmres[1],
            self.courant,
            self.courant_adv
        )
    }
}

/// CSV of the sampled fields `x,z,w,u,v,Tp,pp`.
pub fn field_csv(sim: &Simulation, grid: &SampleGrid) -> Result<String> {
    let fields = [Quantity::W, Quantity::U, Quantity::V, Quantity::TempPert, Quantity::PressPert]
        .into_iter()
        .map(|q| sim.sample(q, grid))
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::from("x,z,w,u,v,Tp,pp\n");
    for j in 0..grid.nz {
        for i in 0..grid.nx {
            let _ = write!(out, "{:.12e},{:.12e}", grid.x(i), grid.z(j));
            for f in &fields {
                let _ = write!(out, ",{:.12e}", f[(j, i)]);
            }
            out.push('\n');
        }
    }
    Ok(out)
}

/// Summary of a completed run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub rows: Vec<DiagnosticsRow>,
    pub snapshots: Vec<std::path::PathBuf>,
}

fn write_snapshot(sim: &Simulation, grid: &SampleGrid, dir: &Path, paths: &mut Vec<std::path::PathBuf>) -> Result<()> {
    let path = dir.join(format!("field_{}.csv", sim.time()));
    fs::write(&path, field_csv(sim, grid)?)?;
    paths.push(path);
    Ok(())
}

/// Runs a configuration to its final time, writing `config.resolved`,
/// `diagnostics.csv` and `field_<t>.csv` snapshots into the output directory.
/// On a solver failure the error is also written to `failure.txt`.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let mut sim = Simulation::new(config)?;
    let dir = config.output_dir.clone();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.resolved"), config.resolved())?;
    let grid = sim.sample_grid()?;

    let mut csv = String::from(DIAGNOSTICS_HEADER);
    csv.push('\n');
    let mut rows = Vec::new();
    let mut snapshots = Vec::new();

    let row = sim.diagnostics()?;
    csv.push_str(&row.csv());
    csv.push('\n');
    rows.push(row);
    write_snapshot(&sim, &grid, &dir, &mut snapshots)?;

    let total = sim.total_steps();
    let cadence = if config.snapshot_every == 0 { total.max(1) } else { config.snapshot_every };
    while sim.step < total {
        let chunk = cadence.min(total - sim.step);
        if let Err(e) = sim.advance(chunk) {
            fs::write(dir.join("diagnostics.csv"), &csv)?;
            fs::write(dir.join("failure.txt"), format!("{e}\n"))?;
            return Err(e);
        }
        let row = sim.diagnostics()?;
        csv.push_str(&row.csv());
        csv.push('\n');
        rows.push(row);
        write_snapshot(&sim, &grid, &dir, &mut snapshots)?;
    }
    fs::write(dir.join("diagnostics.csv"), &csv)?;
    Ok(RunReport { rows, snapshots })
}

/// Configuration of refinement level `level`: element counts doubled and the
/// time step halved `level` times.
pub fn refined(config: &RunConfig, level: usize) -> RunConfig {
    let mut c = config.clone();
    let k = 1usize << level;
    c.params.nx *= k;
    c.params.nz *= k;
    c.params.dt /= k as f64;
    c
}

/// Errors of one variable at every non-reference level and the orders
/// between consecutive levels.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableErrors {
    pub name: &'static str,
    pub l2: Vec<f64>,
    pub linf: Vec<f64>,
    pub eoc_l2: Vec<f64>,
    pub eoc_linf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    /// Element width `Δx` of each non-reference level.
    pub dx: Vec<f64>,
    pub dt: Vec<f64>,
    pub variables: Vec<VariableErrors>,
}

impl ConvergenceTable {
    pub fn variable(&self, name: &str) -> Option<&VariableErrors> {
        self.variables.iter().find(|v| v.name == name)
    }

    /// One row per level; orders are empty on the first row.
    pub fn csv(&self) -> String {
        let mut out = String::from("level,dx,dt");
        for v in &self.variables {
            let _ = write!(out, ",{0}_l2,{0}_eoc_l2,{0}_linf,{0}_eoc_linf", v.name);
        }
        out.push('\n');
        for i in 0..self.dx.len() {
            let _ = write!(out, "{},{:.12e},{:.12e}", i, self.dx[i], self.dt[i]);
            for v in &self.variables {
                let o = |e: &Vec<f64>| if i == 0 { String::new() } else { format!("{:.12e}", e[i - 1]) };
                let _ = write!(out, ",{:.12e},{},{:.12e},{}", v.l2[i], o(&v.eoc_l2), v.linf[i], o(&v.eoc_linf));
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the table from final states sampled on a common grid; the last
/// entry of `samples` is the reference.
pub fn convergence_table(
    dx: &[f64],
    dt: &[f64],
    samples: &[Vec<(&'static str, DMatrix<f64>)>],
) -> Result<ConvergenceTable> {
    let levels = samples.len();
    if levels < 2 || dx.len() != levels || dt.len() != levels {
        return Err(Error::ShapeMismatch("need at least two levels with matching resolutions".into()));
    }
    let reference = &samples[levels - 1];
    let mut variables = Vec::new();
    for (v, (name, ref_field)) in reference.iter().enumerate() {
        let mut l2 = Vec::new();
        let mut linf = Vec::new();
        for level in &samples[..levels - 1] {
            let (a, b) = error_norms(&level[v].1, ref_field)?;
            l2.push(a);
            linf.push(b);
        }
        let coarse = &dx[..levels - 1];
        let (eoc_l2, eoc_linf) = if coarse.len() >= 2 {
            (eoc(&l2, coarse)?, eoc(&linf, coarse)?)
        } else {
            (Vec::new(), Vec::new())
        };
        variables.push(VariableErrors {
            name,
            l2,
            linf,
            eoc_l2,
            eoc_linf,
        });
    }
    Ok(ConvergenceTable {
        dx: dx[..levels - 1].to_vec(),
        dt: dt[..levels - 1].to_vec(),
        variables,
    })
}

/// Samples `w`, `p'` and `T'` of a finished simulation.
pub fn convergence_samples(sim: &Simulation) -> Result<Vec<(&'static str, DMatrix<f64>)>> {
    let grid = sim.sample_grid()?;
    Ok(vec![
        ("w", sim.sample(Quantity::W, &grid)?),
        ("pp", sim.sample(Quantity::PressPert, &grid)?),
        ("Tp", sim.sample(Quantity::TempPert, &grid)?),
    ])
}

/// Runs `levels` hyperbolically refined copies of `base` (the finest is the
/// reference) and writes `convergence.csv` into the output directory.
pub fn convergence_study(base: &RunConfig, levels: usize) -> Result<ConvergenceTable> {
    if levels < 3 {
        return Err(Error::param("levels", format!("need at least 3, got {levels}")));
    }
    let mut samples = Vec::new();
    let mut dx = Vec::new();
    let mut dt = Vec::new();
    for level in 0..levels {
        let cfg = refined(base, level);
        let mut sim = Simulation::new(&cfg)?;
        sim.run_to_end()?;
        samples.push(convergence_samples(&sim)?);
        dx.push(cfg.params.lx / cfg.params.nx as f64);
        dt.push(cfg.params.dt);
    }
    let table = convergence_table(&dx, &dt, &samples)?;
    fs::create_dir_all(&base.output_dir)?;
    fs::write(base.output_dir.join("convergence.csv"), table.csv())?;
    Ok(table)
}
