//! Executes a parsed configuration and writes its outputs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use instab_core::dynamics::{certify_exponential_instability, certify_stability_empirical, growth_rate_fit, iterate, IterateOptions, StopReason};
use instab_core::maps::{l2_grid, Linearized, MapSpec};
use instab_core::report::{BoundReport, Verdict};
use instab_core::theory::{integral_alpha_over_s, remainder_profile, translate_directions};
use instab_core::verify::{conservation, cone, sandwich, Verification};
use instab_core::Exec;

use crate::config::{seeds_for, Config, Expect, Experiment, Task};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub kind: String,
    pub expect: Expect,
    pub verdict: Option<Verdict>,
    pub satisfied: bool,
    pub n_checks: usize,
    pub n_failed: usize,
    pub worst_margin: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiments: Vec<ExperimentSummary>,
    pub exit_code: i32,
}

impl Summary {
    fn new(experiments: Vec<ExperimentSummary>) -> Self {
        let exit_code = if experiments.iter().any(|e| e.error.is_some()) {
            1
        } else if experiments.iter().all(|e| e.satisfied) {
            0
        } else {
            2
        };
        Summary { experiments, exit_code }
    }
}

#[derive(Serialize)]
struct ReportFile<'a> {
    experiment: &'a str,
    kind: &'a str,
    expect: Expect,
    satisfied: bool,
    report: &'a BoundReport,
}

fn simulate(t: &crate::config::SimulateTask) -> instab_core::Result<Verification> {
    let u0 = t.initial.build(&t.map, t.steps)?;
    let mut opts = IterateOptions::steps(t.steps).floor(t.floor).keep(0);
    if let Some(c) = t.ceiling {
        opts = opts.ceiling(c);
    }
    let traj = if t.linearized { iterate(&Linearized(t.map.clone()), &u0, &opts)? } else { iterate(&t.map, &u0, &opts)? };
    let mut report = BoundReport::new(format!("simulation of {}", traj.map)).evidence_only();
    report.require("no_map_error", traj.last_index() as f64, !matches!(traj.stop_reason, StopReason::MapError { .. }));
    report.note(format!("stop reason: {}", serde_json::to_string(&traj.stop_reason)?));
    report.note(format!("steps taken: {}, max norm: {}", traj.last_index(), traj.max_norm()));
    if let Some((lo, hi)) = t.growth_window {
        let hi = hi.min(traj.last_index());
        let fit = growth_rate_fit(&traj.norms, lo, hi)?;
        report.note(format!("growth rate over [{lo}, {hi}]: {} (r2 = {})", fit.rho_hat, fit.r2));
    }
    Ok(Verification { report, table: traj.norms_table(), extra: vec![] })
}

fn certify_instability(t: &crate::config::CertifyInstabilityTask, exec: Exec) -> instab_core::Result<Verification> {
    let mut seeds = seeds_for(&t.map, t.max_steps)?;
    if let Some(keep) = &t.seeds {
        seeds.retain(|s| keep.contains(&s.label));
    }
    let cert = certify_exponential_instability(&t.map, &seeds, t.eps, t.c, t.rho, &t.deltas, t.max_steps, exec)?;
    let mut report = BoundReport::new(format!("exponential instability of {} at rate {}", t.map.tag(), t.rho));
    for d in &cert.per_delta {
        report.require("witness", d.delta, d.witness.is_some());
        if let Some(w) = &d.witness {
            report.require("witness_revalidates", d.delta, w.revalidate(&t.map)?);
        }
    }
    Ok(Verification { report, table: cert.table(), extra: vec![] })
}

fn certify_stability(t: &crate::config::CertifyStabilityTask, exec: Exec) -> instab_core::Result<Verification> {
    let seeds = seeds_for(&t.map, t.max_steps)?;
    let sweep = certify_stability_empirical(&t.map, t.eps, &t.deltas, &seeds, t.max_steps, exec)?;
    Ok(Verification { report: sweep.report, table: sweep.table, extra: vec![] })
}

fn profile(t: &crate::config::RemainderTask, exec: Exec) -> instab_core::Result<Verification> {
    let base = seeds_for(&t.map, 1)?;
    let grid = l2_grid();
    let directions = |r: f64| -> instab_core::Result<Vec<instab_core::dynamics::Seed>> {
        let mut d = base.clone();
        if let MapSpec::TranslateMult { bump, shift } | MapSpec::TranslateMultDilate { bump, shift } = &t.map {
            d.extend(translate_directions(bump, shift, &grid, r));
        }
        Ok(d)
    };
    let prof = remainder_profile(&t.map, &t.radii, directions, exec)?;
    let mut report = BoundReport::new(format!("remainder profile of {}", t.map.tag())).evidence_only();
    if let Some(m) = t.max_alpha {
        for (&r, &a) in prof.radii.iter().zip(&prof.envelope) {
            report.upper_labeled("max_alpha", r, a, m);
        }
    }
    report.note(format!("bounded remainder constant b_hat = {}", prof.b_hat));
    if let Some(p) = prof.p_hat {
        report.note(format!("power-law exponent p_hat = {p}"));
    }
    if let Some(tab) = prof.as_alpha_profile() {
        let verdict = match integral_alpha_over_s(&tab, tab.radius()) {
            Ok(r) => format!("{:?} (value {})", r.status, r.value),
            Err(e) => e.to_string(),
        };
        report.note(format!("integrability of the envelope under power-law extrapolation below the smallest radius: {verdict}"));
    }
    Ok(Verification { report, table: prof.table(), extra: vec![] })
}

fn execute(task: &Task, exec: Exec) -> instab_core::Result<Verification> {
    match task {
        Task::Simulate(t) => simulate(t),
        Task::VerifyBound(h) => h.run(exec),
        Task::CertifyInstability(t) => certify_instability(t, exec),
        Task::CertifyStability(t) => certify_stability(t, exec),
        Task::RemainderProfile(t) => profile(t, exec),
        Task::Cone(p) => cone(p, exec),
        Task::Sandwich(p) => sandwich(p),
        Task::Charsolver(p) => conservation(p, exec),
    }
}

fn write_outputs(dir: &Path, exp: &Experiment, v: &Verification, satisfied: bool) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    v.table.write_csv(fs::File::create(dir.join("data.csv"))?)?;
    for (name, t) in &v.extra {
        t.write_csv(fs::File::create(dir.join(format!("{name}.csv")))?)?;
    }
    let file = ReportFile { experiment: &exp.name, kind: exp.task.kind(), expect: exp.expect, satisfied, report: &v.report };
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(&file)? + "\n")?;
    Ok(())
}

fn run_one(exp: &Experiment, out: &Path, exec: Exec) -> ExperimentSummary {
    let mut summary = ExperimentSummary {
        name: exp.name.clone(),
        kind: exp.task.kind().into(),
        expect: exp.expect,
        verdict: None,
        satisfied: false,
        n_checks: 0,
        n_failed: 0,
        worst_margin: None,
        error: None,
    };
    match execute(&exp.task, exec) {
        Ok(v) => {
            let failed = v.report.verdict == Verdict::Fail;
            summary.satisfied = failed == (exp.expect == Expect::Fail);
            summary.verdict = Some(v.report.verdict);
            summary.n_checks = v.report.n_checks;
            summary.n_failed = v.report.n_failed;
            summary.worst_margin = v.report.worst_margin.is_finite().then_some(v.report.worst_margin);
            if let Err(e) = write_outputs(&out.join(&exp.name), exp, &v, summary.satisfied) {
                summary.error = Some(e.to_string());
                summary.satisfied = false;
            }
        }
        Err(e) => summary.error = Some(e.to_string()),
    }
    summary
}

/// Runs every experiment, `jobs` at a time, then writes `summary.json`.
pub fn run(cfg: &Config, out: &Path, jobs: Option<usize>) -> Result<Summary, CliError> {
    fs::create_dir_all(out)?;
    let exec = Exec::default();
    let summaries = run_all(&cfg.experiments, out, jobs, exec)?;
    let summary = Summary::new(summaries);
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(summary)
}

#[cfg(feature = "parallel")]
fn run_all(exps: &[Experiment], out: &Path, jobs: Option<usize>, exec: Exec) -> Result<Vec<ExperimentSummary>, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(pool.install(|| Exec::Parallel.map(exps, |e| run_one(e, out, exec))))
}

#[cfg(not(feature = "parallel"))]
fn run_all(exps: &[Experiment], out: &Path, _jobs: Option<usize>, exec: Exec) -> Result<Vec<ExperimentSummary>, CliError> {
    Ok(exps.iter().map(|e| run_one(e, out, exec)).collect())
}
