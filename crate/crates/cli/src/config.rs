//! Experiment configuration: one JSON document per run.

use serde::{Deserialize, Serialize};

use instab_core::dynamics::{seed_family, Seed, SEQ_SEED_SUPPORT};
use instab_core::maps::{c00_grid, l2_grid, shift_mult_truncation, DynamicalMap, MapSpec};
use instab_core::spaces::{GridFunction1D, PlanarPoint, SeqVector, State};
use instab_core::verify::{ConeParams, ConservationParams, Harness, SandwichParams};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub experiments: Vec<Experiment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub name: String,
    /// `fail` marks a negative test: the run succeeds when the verdict is FAIL.
    #[serde(default)]
    pub expect: Expect,
    pub task: Task,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    #[default]
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    Simulate(SimulateTask),
    VerifyBound(Harness),
    CertifyInstability(CertifyInstabilityTask),
    CertifyStability(CertifyStabilityTask),
    RemainderProfile(RemainderTask),
    Cone(ConeParams),
    Sandwich(SandwichParams),
    Charsolver(ConservationParams),
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::Simulate(_) => "simulate",
            Task::VerifyBound(_) => "verify_bound",
            Task::CertifyInstability(_) => "certify_instability",
            Task::CertifyStability(_) => "certify_stability",
            Task::RemainderProfile(_) => "remainder_profile",
            Task::Cone(_) => "cone",
            Task::Sandwich(_) => "sandwich",
            Task::Charsolver(_) => "charsolver",
        }
    }
}

/// Initial state of a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    Scalar { value: f64 },
    Planar { v: f64, w: f64 },
    /// Leading entries; zero padding is added for the planned steps.
    Sequence { values: Vec<f64> },
    Grid { lo: f64, hi: f64, values: Vec<f64> },
    /// Member of the default seed family, scaled to `norm`.
    Seed { label: String, norm: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateTask {
    pub map: MapSpec,
    pub initial: Initial,
    pub steps: usize,
    #[serde(default)]
    pub floor: f64,
    pub ceiling: Option<f64>,
    /// Iterate the linearization instead of the map.
    #[serde(default)]
    pub linearized: bool,
    /// Inclusive index window for the growth-rate fit.
    pub growth_window: Option<(usize, usize)>,
}

fn default_max_steps() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyInstabilityTask {
    pub map: MapSpec,
    pub eps: f64,
    pub c: f64,
    pub rho: f64,
    pub deltas: Vec<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Restricts the seed family to these labels.
    pub seeds: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyStabilityTask {
    pub map: MapSpec,
    pub eps: f64,
    pub deltas: Vec<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemainderTask {
    pub map: MapSpec,
    pub radii: Vec<f64>,
    /// Optional upper bound on the profile at every radius.
    pub max_alpha: Option<f64>,
}

/// Default template state of a map, sized for `steps` iterations.
pub fn template(map: &MapSpec, steps: usize) -> Result<State, instab_core::Error> {
    Ok(match map.expected_state() {
        "planar" => State::Planar(PlanarPoint { v: 0.0, w: 0.0 }),
        "sequence" => State::Seq(SeqVector::zeros(shift_mult_truncation(steps) + SEQ_SEED_SUPPORT)?),
        "scalar" => State::Scalar(0.0),
        _ if matches!(map, MapSpec::ContractSupport {}) => State::Grid(c00_grid()),
        _ => State::Grid(l2_grid()),
    })
}

/// Unit-norm seed family of a map.
pub fn seeds_for(map: &MapSpec, steps: usize) -> Result<Vec<Seed>, instab_core::Error> {
    seed_family(&template(map, steps)?, map.norm_kind())
}

impl Initial {
    pub fn build(&self, map: &MapSpec, steps: usize) -> Result<State, instab_core::Error> {
        Ok(match self {
            Initial::Scalar { value } => State::Scalar(*value),
            Initial::Planar { v, w } => State::Planar(PlanarPoint::new(*v, *w)?),
            Initial::Sequence { values } => {
                let mut v = values.clone();
                v.resize(values.len() + shift_mult_truncation(steps), 0.0);
                State::Seq(SeqVector::new(v)?)
            }
            Initial::Grid { lo, hi, values } => State::Grid(GridFunction1D::new(*lo, *hi, values.clone())?),
            Initial::Seed { label, norm } => {
                let seed = seeds_for(map, steps)?
                    .into_iter()
                    .find(|s| &s.label == label)
                    .ok_or_else(|| instab_core::Error::InvalidParameter(format!("no seed labelled {label:?}")))?;
                seed.state.scale(*norm)
            }
        })
    }
}

fn positive(xs: &[f64], what: &str) -> Result<(), String> {
    if xs.is_empty() || xs.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(format!("{what} must be a nonempty list of positive finite numbers"));
    }
    Ok(())
}

impl Task {
    /// Checks map tags and parameter ranges without running anything.
    pub fn validate(&self) -> Result<(), String> {
        let map_ok = |m: &MapSpec| m.validate().map_err(|e| e.to_string());
        match self {
            Task::Simulate(t) => {
                map_ok(&t.map)?;
                if t.steps == 0 {
                    return Err("steps must be at least 1".into());
                }
                if let Some((lo, hi)) = t.growth_window {
                    if lo >= hi {
                        return Err("growth_window must satisfy lo < hi".into());
                    }
                }
                t.initial.build(&t.map, t.steps).map(|_| ()).map_err(|e| e.to_string())
            }
            Task::CertifyInstability(t) => {
                map_ok(&t.map)?;
                positive(&t.deltas, "deltas")?;
                if !(t.eps > 0.0 && t.c > 0.0 && t.rho > 1.0) {
                    return Err("need eps > 0, c > 0 and rho > 1".into());
                }
                if t.deltas.iter().any(|&d| d > t.eps) {
                    return Err("every delta must be at most eps".into());
                }
                Ok(())
            }
            Task::CertifyStability(t) => {
                map_ok(&t.map)?;
                positive(&t.deltas, "deltas")?;
                if t.eps.is_nan() || t.eps <= 0.0 {
                    return Err("eps must be positive".into());
                }
                Ok(())
            }
            Task::RemainderProfile(t) => {
                map_ok(&t.map)?;
                positive(&t.radii, "radii")
            }
            Task::Sandwich(p) => {
                positive(&p.deltas, "deltas")?;
                p.alpha.validate().map_err(|e| e.to_string())
            }
            Task::Cone(p) => p.alpha.validate().map_err(|e| e.to_string()),
            Task::Charsolver(p) => positive(&p.times, "times"),
            Task::VerifyBound(_) => Ok(()),
        }
    }
}

/// 1-based line of the first occurrence of `needle` in `text`.
fn line_of(text: &str, needle: &str) -> usize {
    text.find(needle).map_or(1, |i| text[..i].matches('\n').count() + 1)
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')) && name != "." && name != ".."
}

impl Config {
    /// Parses and validates; errors carry the line of the offending entry.
    pub fn parse(path: &str, text: &str) -> Result<Config, CliError> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| CliError::Config {
            path: path.into(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let mut seen = std::collections::BTreeSet::new();
        for exp in &cfg.experiments {
            let line = line_of(text, &format!("\"{}\"", exp.name));
            let fail = |message: String| CliError::Config { path: path.into(), line, column: 0, message };
            if !valid_name(&exp.name) {
                return Err(fail(format!("experiment name {:?} must use only letters, digits, '-', '_' and '.'", exp.name)));
            }
            if !seen.insert(exp.name.clone()) {
                return Err(fail(format!("duplicate experiment name {:?}", exp.name)));
            }
            exp.task.validate().map_err(|m| fail(format!("experiment {:?}: {m}", exp.name)))?;
        }
        Ok(cfg)
    }
}
