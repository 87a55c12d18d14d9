//! Line-based `key=value` run configuration.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scenarios::{planetary_config, standard_baldauf_config, BaldaufParams};
use crate::solver::{GmresConfig, PicardConfig};
use crate::thermo::GasConstants;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Baldauf,
    Planetary,
    /// Unperturbed hydrostatic background.
    Rest,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Baldauf => "baldauf",
            Scenario::Planetary => "planetary",
            Scenario::Rest => "rest",
        }
    }

    fn defaults(self) -> BaldaufParams {
        match self {
            Scenario::Planetary => planetary_config(),
            _ => standard_baldauf_config(),
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baldauf" => Ok(Scenario::Baldauf),
            "planetary" => Ok(Scenario::Planetary),
            "rest" => Ok(Scenario::Rest),
            other => Err(Error::param(
                "scenario",
                format!("expected baldauf, planetary or rest, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub params: BaldaufParams,
    pub g: f64,
    pub solver: PicardConfig,
    pub output_dir: PathBuf,
    /// Steps between snapshots; 0 writes only the initial and final state.
    pub snapshot_every: usize,
    pub sample_nx: usize,
    pub sample_nz: usize,
    /// Reference speed for the advective Courant number.
    pub u_ref: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::for_scenario(Scenario::Baldauf)
    }
}

const KEYS: &[&str] = &[
    "scenario",
    "nx",
    "nz",
    "degree",
    "dt",
    "tf",
    "Lx",
    "Lz",
    "a",
    "xc",
    "f",
    "g",
    "T0",
    "dT",
    "p_s",
    "strategy",
    "picard_tol",
    "picard_max_iter",
    "gmres_tol",
    "gmres_restart",
    "gmres_max_iter",
    "output_dir",
    "snapshot_every",
    "sample_nx",
    "sample_nz",
    "u_ref",
];

impl RunConfig {
    pub fn for_scenario(scenario: Scenario) -> Self {
        RunConfig {
            scenario,
            params: scenario.defaults(),
            g: GasConstants::dry_air().g,
            solver: PicardConfig::default(),
            output_dir: PathBuf::from("output"),
            snapshot_every: 0,
            sample_nx: 1200,
            sample_nz: 80,
            u_ref: 0.016,
        }
    }

    pub fn gas(&self) -> GasConstants {
        GasConstants::dry_air().with_gravity(self.g).with_coriolis(self.params.f)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(1..=crate::discretization::MAX_DEGREE).contains(&self.params.degree) {
            return Err(Error::param("degree", format!("must lie in 1..=8, got {}", self.params.degree)));
        }
        if !self.g.is_finite() || self.g < 0.0 {
            return Err(Error::param("g", format!("must be non-negative, got {}", self.g)));
        }
        if self.sample_nx == 0 || self.sample_nz == 0 {
            return Err(Error::param("sample_nx/sample_nz", "must be at least 1"));
        }
        if !(self.u_ref > 0.0) {
            return Err(Error::param("u_ref", format!("must be positive, got {}", self.u_ref)));
        }
        self.solver.validate()
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse::<T>()
                .map_err(|_| Error::param(key, format!("cannot parse `{v}`")))
        }
        let p = &mut self.params;
        match key {
            "scenario" => self.scenario = value.parse()?,
            "nx" => p.nx = num(key, value)?,
            "nz" => p.nz = num(key, value)?,
            "degree" => p.degree = num(key, value)?,
            "dt" => p.dt = num(key, value)?,
            "tf" => p.tf = num(key, value)?,
            "Lx" => p.lx = num(key, value)?,
            "Lz" => p.lz = num(key, value)?,
            "a" => p.a = num(key, value)?,
            "xc" => p.xc = num(key, value)?,
            "f" => p.f = num(key, value)?,
            "g" => self.g = num(key, value)?,
            "T0" => p.t0 = num(key, value)?,
            "dT" => p.delta_t = num(key, value)?,
            "p_s" => p.p_s = num(key, value)?,
            "strategy" => self.solver.strategy = value.parse()?,
            "picard_tol" => self.solver.tolerance = num(key, value)?,
            "picard_max_iter" => self.solver.max_iterations = num(key, value)?,
            "gmres_tol" => self.solver.gmres.tolerance = num(key, value)?,
            "gmres_restart" => self.solver.gmres.restart = num(key, value)?,
            "gmres_max_iter" => self.solver.gmres.max_iterations = num(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "snapshot_every" => self.snapshot_every = num(key, value)?,
            "sample_nx" => self.sample_nx = num(key, value)?,
            "sample_nz" => self.sample_nz = num(key, value)?,
            "u_ref" => self.u_ref = num(key, value)?,
            _ => return Err(Error::param(key, "unknown key")),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        let p = &self.params;
        match key {
            "scenario" => self.scenario.name().to_string(),
            "nx" => p.nx.to_string(),
            "nz" => p.nz.to_string(),
            "degree" => p.degree.to_string(),
            "dt" => p.dt.to_string(),
            "tf" => p.tf.to_string(),
            "Lx" => p.lx.to_string(),
            "Lz" => p.lz.to_string(),
            "a" => p.a.to_string(),
            "xc" => p.xc.to_string(),
            "f" => p.f.to_string(),
            "g" => self.g.to_string(),
            "T0" => p.t0.to_string(),
            "dT" => p.delta_t.to_string(),
            "p_s" => p.p_s.to_string(),
            "strategy" => self.solver.strategy.to_string(),
            "picard_tol" => self.solver.tolerance.to_string(),
            "picard_max_iter" => self.solver.max_iterations.to_string(),
            "gmres_tol" => self.solver.gmres.tolerance.to_string(),
            "gmres_restart" => self.solver.gmres.restart.to_string(),
            "gmres_max_iter" => self.solver.gmres.max_iterations.to_string(),
            "output_dir" => self.output_dir.display().to_string(),
            "snapshot_every" => self.snapshot_every.to_string(),
            "sample_nx" => self.sample_nx.to_string(),
            "sample_nz" => self.sample_nz.to_string(),
            "u_ref" => self.u_ref.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Every key with its resolved value, one `key=value` per line.
    pub fn resolved(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key}={}", self.get(key));
        }
        out
    }

    pub fn gmres(&self) -> GmresConfig {
        self.solver.gmres
    }
}

/// Parses a configuration document. Blank lines and `#` comments are
/// ignored; `scenario` selects the defaults before other keys apply.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
            line: line_no,
            message: format!("expected key=value, got `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::Config {
                line: line_no,
                message: format!("unknown key `{key}`"),
            });
        }
        if entries.iter().any(|(_, k, _)| *k == key) {
            return Err(Error::Config {
                line: line_no,
                message: format!("duplicate key `{key}`"),
            });
        }
        entries.push((line_no, key, value));
    }

    let scenario = match entries.iter().find(|(_, k, _)| *k == "scenario") {
        Some((line, _, v)) => v.parse::<Scenario>().map_err(|e| Error::Config {
            line: *line,
            message: e.to_string(),
        })?,
        None => Scenario::Baldauf,
    };
    let mut cfg = RunConfig::for_scenario(scenario);
    for (line, key, value) in &entries {
        cfg.set(key, value).map_err(|e| Error::Config {
            line: *line,
            message: e.to_string(),
        })?;
    }
    // Attribute validation failures to the line that set the offending key.
    cfg.validate().map_err(|e| match &e {
        Error::InvalidParameter { name, .. } => match entries.iter().find(|(_, k, _)| name.split('/').any(|n| n == *k)) {
            Some((line, _, _)) => Error::Config {
                line: *line,
                message: e.to_string(),
            },
            None => e,
        },
        _ => e,
    })?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Strategy;

    #[test]
    fn empty_gives_standard_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.params, standard_baldauf_config());
        assert_eq!(cfg.solver.strategy, Strategy::R1);
    }

    #[test]
    fn single_override() {
        let cfg = parse_config("strategy=R2\n").unwrap();
        let mut expect = RunConfig::default();
        expect.solver.strategy = Strategy::R2;
        assert_eq!(cfg, expect);
    }

    #[test]
    fn negative_dt_names_dt() {
        let err = parse_config("# comment\ndt=-1\n").unwrap_err();
        match err {
            Error::Config { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("dt"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_and_malformed_lines() {
        assert!(matches!(parse_config("bogus=1"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(parse_config("\nnx"), Err(Error::Config { line: 2, .. })));
        assert!(matches!(parse_config("nx=abc"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(parse_config("nx=2\nnx=3"), Err(Error::Config { line: 2, .. })));
        assert!(parse_config("strategy=R3").is_err());
    }

    #[test]
    fn scenario_sets_defaults_regardless_of_order() {
        let cfg = parse_config("dt=5\nscenario=planetary").unwrap();
        assert_eq!(cfg.params.lx, 6.0e7);
        assert_eq!(cfg.params.dt, 5.0);
    }

    #[test]
    fn resolved_round_trips() {
        let text = "scenario=rest\nnx=7\ndt=0.25\nf=0\nstrategy=R2\npicard_tol=1e-9\noutput_dir=/tmp/x y\nu_ref=0.3\n";
        let cfg = parse_config(text).unwrap();
        let again = parse_config(&cfg.resolved()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(again.resolved(), cfg.resolved());
    }
}
