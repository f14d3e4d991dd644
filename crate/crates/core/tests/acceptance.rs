//! Acceptance suite: one PASS/FAIL line per criterion.

use std::time::{Duration, Instant};

use instab_core::maps::BumpFn;
use instab_core::report::BoundReport;
use instab_core::verify::{self, Verification};
use instab_core::{Exec, Result};

struct Outcome {
    ok: bool,
    detail: String,
    notes: Vec<String>,
}

fn judge(reports: &[&BoundReport]) -> Outcome {
    let checks: usize = reports.iter().map(|r| r.n_checks).sum();
    let notes = reports.iter().flat_map(|r| r.notes.iter().cloned()).collect();
    match reports.iter().find(|r| !r.passed()) {
        None => Outcome { ok: true, detail: format!("{checks} checks"), notes },
        Some(r) => Outcome {
            ok: false,
            detail: format!("{}: {} of {} checks failed, first {:?}", r.experiment, r.n_failed, r.n_checks, r.first_failure()),
            notes,
        },
    }
}

fn single(v: Result<Verification>) -> Outcome {
    match v {
        Ok(v) => judge(&[&v.report]),
        Err(e) => Outcome { ok: false, detail: format!("error: {e}"), notes: vec![] },
    }
}

fn criterion(id: usize, name: &str, f: impl FnOnce() -> Outcome, budget: Option<Duration>) -> bool {
    let start = Instant::now();
    let mut out = f();
    let took = start.elapsed();
    if let Some(b) = budget {
        if took > b {
            out.ok = false;
            out.detail = format!("{}; runtime {:.2?} exceeds {:.0?}", out.detail, took, b);
        }
    }
    let tag = if out.ok { "PASS" } else { "FAIL" };
    println!("{tag} {id:>2} {name}: {} ({:.2?})", out.detail, took);
    for n in &out.notes {
        println!("        {n}");
    }
    out.ok
}

fn main() {
    let exec = Exec::default();
    let results = [
        criterion(1, "Jordan block bounds", || single(verify::jordan(&Default::default(), exec)), Some(Duration::from_secs(10))),
        criterion(2, "weighted shift growth and stability", || single(verify::weighted_shift(&Default::default(), exec)), None),
        criterion(
            3,
            "translation map bounds",
            || {
                let base = verify::translate(&Default::default(), exec);
                let wide = verify::translate(&verify::TranslateParams { bump: BumpFn { a: 0.5, b: 1.5 }, ..Default::default() }, exec);
                match (base, wide) {
                    (Ok(a), Ok(b)) => judge(&[&a.report, &b.report]),
                    (Err(e), _) | (_, Err(e)) => Outcome { ok: false, detail: format!("error: {e}"), notes: vec![] },
                }
            },
            None,
        ),
        criterion(4, "support contraction", || single(verify::contract(&Default::default(), exec)), None),
        criterion(5, "conservation law", || single(verify::conservation(&Default::default(), exec)), None),
        criterion(6, "discontinuous planar map", || single(verify::discont(&Default::default(), exec)), None),
        criterion(7, "scalar sharpness", || single(verify::scalar_sharpness(&Default::default(), exec)), None),
        criterion(8, "normal-case sandwich", || single(verify::sandwich(&Default::default())), None),
        criterion(9, "invariant cone", || single(verify::cone(&Default::default(), exec)), None),
        criterion(10, "differentiability dichotomy", || single(verify::dichotomy(&Default::default(), exec)), None),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
