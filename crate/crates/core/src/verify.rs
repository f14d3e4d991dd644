//! One harness per bound family: each runs the relevant experiment and checks
//! the stated inequalities step by step, returning a report and data tables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alpha::AlphaProfile;
use crate::charsolver::{
    characteristic_position, characteristic_rk4, decay_bound_check, gateaux_limit_experiment, linearized_at_time,
    MonotoneInitialData, RK4_REL_TOL,
};
use crate::dynamics::{
    certify_exponential_instability, certify_stability_empirical, iterate, seed_family, IterateOptions, SEED, SEQ_SEED_SUPPORT,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::io::Table;
use crate::maps::{
    big_set_bound, big_set_cardinality, c00_grid, contract_grid_resolution, contract_support_orbit, l2_grid,
    shift_mult_truncation, BumpFn, DynamicalMap, MapSpec, ShiftFn,
};
use crate::operators::{DiagonalOperator, WeightSeq, WeightedShift};
use crate::report::{BoundReport, Check, CheckKind, FLOAT_SLACK};
use crate::spaces::{GridFunction1D, NormKind, PlanarPoint, SeqVector, State};
use crate::theory::{
    beta_build, budget, cone_simulate, fit_sigma, random_cone_seeds, remainder_profile, sandwich_check,
    scalar_closed_form, translate_directions, verify_hineq, xb_check, ProductSystem,
};

/// Report plus data: `table` is the primary dataset, `extra` holds named
/// secondary ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub report: BoundReport,
    pub table: Table,
    pub extra: Vec<(String, Table)>,
}

/// Keeps the check with the smallest slack-adjusted margin, so long runs
/// store one representative check per bound.
struct Worst(Option<Check>);

impl Worst {
    fn new() -> Self {
        Worst(None)
    }

    fn offer(&mut self, label: &str, kind: CheckKind, at: f64, observed: f64, bound: f64) {
        let margin = match kind {
            CheckKind::Upper => bound - observed,
            CheckKind::Lower => observed - bound,
        };
        let score = margin + FLOAT_SLACK * bound.abs();
        let better = match &self.0 {
            None => true,
            Some(w) => score < w.margin + FLOAT_SLACK * w.bound.abs() || margin.is_nan(),
        };
        if better && !self.0.as_ref().is_some_and(|w| w.margin.is_nan()) {
            self.0 = Some(Check { at, observed, bound, margin, kind, label: Some(label.into()) });
        }
    }

    fn into_report(self, rep: &mut BoundReport) {
        if let Some(c) = self.0 {
            rep.push(c);
        }
    }
}

fn geometric(lo_exp: i32, hi_exp: i32) -> Vec<f64> {
    (lo_exp..=hi_exp).map(|k| 10f64.powi(-k)).collect()
}

// ---------------------------------------------------------------- Jordan

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JordanParams {
    pub grid: usize,
    pub steps: usize,
    pub v_max: f64,
    pub w_max: f64,
}

impl Default for JordanParams {
    fn default() -> Self {
        JordanParams { grid: 21, steps: 100_000, v_max: 0.5, w_max: 0.125 }
    }
}

/// `|v_n| ≤ max(|v₀|, |w₀|^{1/3})`, `|w_n| ≤ |w₀|` and
/// `|w_n| ≤ |w₀|/√(1 + 2w₀²n)` on a grid of starts.
pub fn jordan(p: &JordanParams, exec: Exec) -> Result<Verification> {
    if p.grid < 2 || !(p.v_max <= 0.5 && p.w_max <= 0.125) {
        return Err(Error::InvalidParameter("need grid ≥ 2, |v₀| ≤ 1/2 and |w₀| ≤ 1/8".into()));
    }
    let spec = MapSpec::Jordan2d {};
    let coord = |i: usize, m: f64| -m + 2.0 * m * i as f64 / (p.grid - 1) as f64;
    let starts: Vec<(f64, f64)> =
        (0..p.grid).flat_map(|i| (0..p.grid).map(move |j| (coord(i, p.v_max), coord(j, p.w_max)))).collect();
    let runs = exec.map(&starts, |&(v0, w0)| -> Result<([Worst; 3], Vec<f64>)> {
        let mut worst = [Worst::new(), Worst::new(), Worst::new()];
        let v_bound = v0.abs().max(w0.abs().cbrt());
        let mut u = State::Planar(PlanarPoint { v: v0, w: w0 });
        let (mut max_v, mut max_w) = (0.0f64, 0.0f64);
        for n in 1..=p.steps {
            u = spec.apply(&u)?;
            let State::Planar(PlanarPoint { v, w }) = u else { unreachable!() };
            max_v = max_v.max(v.abs());
            max_w = max_w.max(w.abs());
            worst[0].offer("v_bound", CheckKind::Upper, n as f64, v.abs(), v_bound);
            worst[1].offer("w_bound", CheckKind::Upper, n as f64, w.abs(), w0.abs());
            let cmp = w0.abs() / (1.0 + 2.0 * w0 * w0 * n as f64).sqrt();
            worst[2].offer("w_comparison", CheckKind::Upper, n as f64, w.abs(), cmp);
        }
        let State::Planar(PlanarPoint { v, w }) = u else { unreachable!() };
        Ok((worst, vec![v0, w0, max_v, max_w, v, w]))
    });
    let mut report = BoundReport::new("planar Jordan block");
    let mut table = Table::new(["v0", "w0", "max_abs_v", "max_abs_w", "final_v", "final_w"]);
    for run in runs {
        let (worst, row) = run?;
        for w in worst {
            w.into_report(&mut report);
        }
        table.push(row);
    }
    report.note(format!("{} starts, {} steps each; one worst check per start and bound", starts.len(), p.steps));
    Ok(Verification { report, table, extra: vec![] })
}

// -------------------------------------------------------- weighted shift

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightedShiftParams {
    pub weights: WeightSeq,
    pub n_max: usize,
    pub p: f64,
    pub delta: f64,
    pub steps: usize,
}

impl Default for WeightedShiftParams {
    fn default() -> Self {
        WeightedShiftParams { weights: WeightSeq::LogSpecial, n_max: 1000, p: 1.0, delta: 1e-3, steps: 10_000 }
    }
}

/// Smallest `ε` on the grid `k/1000` admitting `N(ε)`, the first `N` with
/// `m_N(1 - (ε/2)^p) < 1`, such that `δ·∏_{n≤N} m_n < ε/2`.
pub fn shift_stability_eps(weights: &WeightSeq, p: f64, delta: f64) -> Option<(f64, usize)> {
    (1..1000).find_map(|k| {
        let eps = k as f64 / 1000.0;
        let f = 1.0 - (eps / 2.0).powf(p);
        let n = (1..=100_000).find(|&n| weights.m(n) * f < 1.0)?;
        (delta * weights.log_product(n).exp() < eps / 2.0).then_some((eps, n))
    })
}

/// Exact growth `|(MS)ⁿe₀| = ∏ m_k`, its explicit lower bound for the
/// logarithmic weights, and empirical stability of the nonlinear map.
pub fn weighted_shift(p: &WeightedShiftParams, exec: Exec) -> Result<Verification> {
    let op = WeightedShift::new(p.weights.clone())?;
    let mut report = BoundReport::new("weighted shift");
    let mut table = Table::new(["n", "power_norm", "product", "lower_bound"]);
    let mut u = SeqVector::basis(p.n_max + 8, 0)?;
    let mut product = 1.0f64;
    let log_special = p.weights == WeightSeq::LogSpecial;
    for n in 1..=p.n_max {
        u = op.apply(&u)?;
        product *= p.weights.m(n);
        let norm = u.l2();
        report.upper_labeled("power_norm", n as f64, (norm - product).abs() / product, 1e-12);
        let lower = if log_special && n >= 2 {
            let m = (n + 3) as f64;
            let b = (m / (2.0 * m.ln()) - 3.0 / (2.0 * 3f64.ln())).exp();
            report.lower_labeled("linear_lower", n as f64, norm, b);
            b
        } else {
            f64::NAN
        };
        table.push(vec![n as f64, norm, product, lower]);
    }
    let (eps, n_eps) = shift_stability_eps(&p.weights, p.p, p.delta)
        .ok_or_else(|| Error::InvalidParameter(format!("no eps in (0, 1) satisfies the stability budget for delta = {}", p.delta)))?;
    let spec = MapSpec::ShiftMult { p: p.p, weights: p.weights.clone() };
    // the seed family occupies up to `SEQ_SEED_SUPPORT` leading entries
    let template = State::Seq(SeqVector::zeros(shift_mult_truncation(p.steps) + SEQ_SEED_SUPPORT)?);
    let seeds = seed_family(&template, NormKind::SeqL2)?;
    let sweep = certify_stability_empirical(&spec, eps, &[p.delta], &seeds, p.steps, exec)?;
    report.note(format!("stability threshold eps = {eps} with N(eps) = {n_eps}"));
    report.absorb(sweep.report);
    Ok(Verification { report, table, extra: vec![("stability".into(), sweep.table)] })
}

// ------------------------------------------------- translation-multiplication

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TranslateParams {
    pub bump: BumpFn,
    pub shift: ShiftFn,
    pub deltas: Vec<f64>,
    pub eps: f64,
    pub steps: usize,
    pub decay_tol: f64,
}

impl Default for TranslateParams {
    fn default() -> Self {
        TranslateParams {
            bump: BumpFn::default(),
            shift: ShiftFn::default(),
            deltas: geometric(2, 4),
            eps: 1e-2,
            steps: 1000,
            decay_tol: 1e-8,
        }
    }
}

/// `max_n |u_n| ≤ δ·b^{2a/h(δ)+1}`, the big-set cardinality bound and decay
/// below `decay_tol` within `steps`.
pub fn translate(p: &TranslateParams, exec: Exec) -> Result<Verification> {
    let spec = MapSpec::TranslateMult { bump: p.bump, shift: p.shift.clone() };
    spec.validate()?;
    let seeds = seed_family(&State::Grid(l2_grid()), NormKind::L2)?;
    let jobs: Vec<(f64, usize)> = p.deltas.iter().flat_map(|&d| (0..seeds.len()).map(move |i| (d, i))).collect();
    let runs = exec.map(&jobs, |&(delta, i)| -> Result<Vec<f64>> {
        let u0 = seeds[i].state.scale(delta);
        let traj = iterate(&spec, &u0, &IterateOptions::steps(p.steps).keep(0))?;
        if let crate::dynamics::StopReason::MapError { message } = traj.stop_reason {
            return Err(Error::Internal(message));
        }
        let at_end = traj.norms.get(p.steps).copied().unwrap_or(*traj.norms.last().unwrap());
        Ok(vec![delta, i as f64, traj.max_norm(), big_set_cardinality(&traj.norms, p.eps) as f64, at_end])
    });
    let mut report = BoundReport::new(format!("translation map, a = {}, b = {}", p.bump.a, p.bump.b));
    let mut table = Table::new(["delta", "seed", "max_norm", "max_bound", "big_set", "big_set_bound", "final_norm"]);
    let card_bound = big_set_bound(&p.bump, &p.shift, p.eps);
    for run in runs {
        let row = run?;
        let (delta, i) = (row[0], row[1] as usize);
        let bound = delta * p.bump.b.powf(2.0 * p.bump.a / p.shift.eval(delta) + 1.0);
        let label = &seeds[i].label;
        report.upper_labeled(&format!("max_norm/{label}"), delta, row[2], bound);
        report.upper_labeled(&format!("big_set/{label}"), delta, row[3], card_bound);
        report.upper_labeled(&format!("decay/{label}"), delta, row[4], p.decay_tol);
        table.push(vec![delta, row[1], row[2], bound, row[3], card_bound, row[4]]);
    }
    Ok(Verification { report, table, extra: vec![] })
}

// ---------------------------------------------------- support contraction

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractParams {
    pub n_max: usize,
    pub alphas: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

impl Default for ContractParams {
    fn default() -> Self {
        ContractParams { n_max: 64, alphas: vec![0.0, 0.25, 1.0 / 3.0, 1.0], amplitudes: vec![1e-3, 0.1, 1.0, 4.0] }
    }
}

fn interp_bound(n: usize, alpha: f64, sup0: f64) -> f64 {
    2f64.powf(1.5 * (1.0 - alpha)) * 2f64.powf(n as f64 * (3.0 * alpha - 1.0) / 2.0) * sup0.powf(alpha)
}

/// Sup-norm decay, the interpolated bounds and support shrinkage, on the
/// exact orbit for every step and on the grid map while it resolves.
pub fn contract(p: &ContractParams, exec: Exec) -> Result<Verification> {
    let grid = c00_grid();
    let seeds = seed_family(&State::Grid(grid.clone()), NormKind::Sup)?;
    let n_res = contract_grid_resolution(&grid);
    let jobs: Vec<(usize, f64)> = (0..seeds.len()).flat_map(|i| p.amplitudes.iter().map(move |&a| (i, a))).collect();
    let spec = MapSpec::ContractSupport {};
    let runs = exec.map(&jobs, |&(i, amp)| -> Result<(BoundReport, Vec<Vec<f64>>)> {
        let State::Grid(g) = seeds[i].state.scale(amp) else { unreachable!() };
        let sup0 = g.sup();
        let orbit = contract_support_orbit(&g, p.n_max)?;
        let mut rep = BoundReport::new("seed");
        let mut rows = Vec::new();
        for n in 1..=p.n_max {
            let s = orbit.sup[n];
            rep.upper_labeled("sup_decay", n as f64, s, 2f64.powf(-(n as f64 - 3.0) / 2.0));
            for &a in &p.alphas {
                rep.upper_labeled(&format!("interp_{a:.4}"), n as f64, s, interp_bound(n, a, sup0));
            }
            if let Some(lo) = orbit.support_lo[n] {
                rep.lower_labeled("support", n as f64, lo, -(2f64.powi(-(n as i32))));
            }
            rows.push(vec![i as f64, amp, n as f64, s, orbit.support_lo[n].unwrap_or(f64::NAN)]);
        }
        let mut u = State::Grid(g);
        for n in 1..=n_res.min(p.n_max) {
            u = spec.apply(&u)?;
            let s = u.norm(NormKind::Sup)?;
            rep.upper_labeled("grid_sup_decay", n as f64, s, 2f64.powf(-(n as f64 - 3.0) / 2.0));
            for &a in &p.alphas {
                rep.upper_labeled(&format!("grid_interp_{a:.4}"), n as f64, s, interp_bound(n, a, sup0));
            }
        }
        Ok((rep, rows))
    });
    let mut report = BoundReport::new("support contraction");
    let mut table = Table::new(["seed", "amplitude", "n", "sup", "support_lo"]);
    for run in runs {
        let (rep, rows) = run?;
        report.absorb(rep);
        for r in rows {
            table.push(r);
        }
    }
    report.note(format!("grid map checked for n ≤ {n_res}; exact orbit for n ≤ {}", p.n_max));
    Ok(Verification { report, table, extra: vec![] })
}

// ------------------------------------------------------- conservation law

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConservationParams {
    pub samples: usize,
    pub times: Vec<f64>,
    pub alphas: Vec<f64>,
    pub rk4_steps: usize,
    pub gateaux_time: f64,
    pub gateaux_lambdas: Vec<f64>,
    pub slope_range: (f64, f64),
}

impl Default for ConservationParams {
    fn default() -> Self {
        ConservationParams {
            samples: 2049,
            times: (1..=10).map(f64::from).collect(),
            alphas: vec![0.0, 0.25, 1.0],
            rk4_steps: 20_000,
            gateaux_time: 1.0,
            gateaux_lambdas: (3..=10).map(|k| 0.5f64.powi(k)).collect(),
            slope_range: (1.8, 2.2),
        }
    }
}

/// Nondecreasing initial data vanishing at `-1`; the first is the ramp used
/// for the differentiability experiment.
pub fn cone_initial_data(samples: usize) -> Result<Vec<(&'static str, MonotoneInitialData)>> {
    let pi = std::f64::consts::PI;
    Ok(vec![
        ("half_ramp", MonotoneInitialData::from_fn(samples, |x| (1.0 + x) / 2.0)?),
        ("quadratic", MonotoneInitialData::from_fn(samples, |x| (1.0 + x).powi(2))?),
        ("root", MonotoneInitialData::from_fn(samples, |x| 0.3 * (1.0 + x).sqrt())?),
        ("sine", MonotoneInitialData::from_fn(samples, |x| 0.8 * (pi * (1.0 + x) / 2.0).sin())?),
        ("tall_ramp", MonotoneInitialData::from_fn(samples, |x| 3.0 * (1.0 + x))?),
    ])
}

/// Sup-norm decay bound, characteristics against RK4, exact linear growth
/// and the Gâteaux convergence rate.
pub fn conservation(p: &ConservationParams, exec: Exec) -> Result<Verification> {
    let xs = GridFunction1D::zeros(-1.0, 0.0, p.samples)?;
    let data = cone_initial_data(p.samples)?;
    let mut report = BoundReport::new("conservation law on the monotone cone");
    let mut table = Table::new(["data", "t", "sup_u", "sup_linearized", "linear_growth"]);
    for (d, (name, u0)) in data.iter().enumerate() {
        for &a in &p.alphas {
            let mut rep = decay_bound_check(u0, &p.times, a, &xs, exec)?;
            for c in &mut rep.checks {
                c.label = Some(format!("decay_{a}/{name}"));
            }
            if let Some(w) = &mut rep.worst {
                w.label = Some(format!("decay_{a}/{name}"));
            }
            report.absorb(rep);
        }
        for &t in &p.times {
            for k in 0..=10 {
                let x0 = -1.0 + k as f64 / 10.0;
                let exact = characteristic_position(x0, t, u0)?.x;
                let rk = characteristic_rk4(x0, t, u0, p.rk4_steps)?;
                report.upper_labeled(&format!("rk4/{name}"), t, (rk - exact).abs(), RK4_REL_TOL * exact.abs().max(1.0));
            }
            let lin = linearized_at_time(u0, t, &xs)?.sup();
            let growth = t.exp() * u0.sup();
            report.upper_labeled(&format!("linear_growth/{name}"), t, lin, growth);
            report.lower_labeled(&format!("linear_growth/{name}"), t, lin, growth);
            let sup_u = crate::charsolver::solve_at_time(u0, t, &xs, exec)?.sup();
            table.push(vec![d as f64, t, sup_u, lin, growth]);
        }
    }
    let g = gateaux_limit_experiment(&data[0].1, p.gateaux_time, &p.gateaux_lambdas, &xs, exec)?;
    let slope = g.slope()?;
    report.lower_labeled("gateaux_slope", p.gateaux_time, slope, p.slope_range.0);
    report.upper_labeled("gateaux_slope", p.gateaux_time, slope, p.slope_range.1);
    report.note(format!("Gateaux error slope {slope}"));
    let mut gt = Table::new(["lambda", "error"]);
    for (l, e) in g.lambdas.iter().zip(&g.errors) {
        gt.push(vec![*l, *e]);
    }
    Ok(Verification { report, table, extra: vec![("gateaux".into(), gt)] })
}

// -------------------------------------------------- discontinuous planar

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscontParams {
    pub count: usize,
    pub steps: usize,
    pub box_half_width: f64,
}

impl Default for DiscontParams {
    fn default() -> Self {
        DiscontParams { count: 1000, steps: 200, box_half_width: 1.0 }
    }
}

/// `v_n² + |w_n| ≤ 4(3/4)^{n-1}(v₀² + |w₀|)` from seeded random starts.
pub fn discont(p: &DiscontParams, exec: Exec) -> Result<Verification> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let b = p.box_half_width;
    let starts: Vec<(f64, f64)> = (0..p.count).map(|_| (rng.gen_range(-b..b), rng.gen_range(-b..b))).collect();
    let spec = MapSpec::Discont2d {};
    let runs = exec.map(&starts, |&(v0, w0)| -> Result<(BoundReport, f64)> {
        let m0 = v0 * v0 + w0.abs();
        let mut u = State::Planar(PlanarPoint { v: v0, w: w0 });
        let mut rep = BoundReport::new("seed");
        let mut worst_ratio = 0.0f64;
        for n in 1..=p.steps {
            u = spec.apply(&u)?;
            let m = u.norm(NormKind::PlanarMix)?;
            let bound = 4.0 * 0.75f64.powi(n as i32 - 1) * m0;
            rep.upper(n as f64, m, bound);
            if bound > 0.0 {
                worst_ratio = worst_ratio.max(m / bound);
            }
        }
        Ok((rep, worst_ratio))
    });
    let mut report = BoundReport::new("discontinuous planar map");
    let mut table = Table::new(["seed", "v0", "w0", "worst_ratio"]);
    for (i, (run, (v0, w0))) in runs.into_iter().zip(&starts).enumerate() {
        let (rep, ratio) = run?;
        report.absorb(rep);
        table.push(vec![i as f64, *v0, *w0, ratio]);
    }
    Ok(Verification { report, table, extra: vec![] })
}

// ------------------------------------------------------ scalar sharpness

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalarSharpnessParams {
    pub rho: f64,
    pub c: f64,
    pub fast_gamma: f64,
    pub fast_deltas: Vec<f64>,
    pub slow_eps: f64,
    pub slow_deltas: Vec<f64>,
    /// Reduced rate as a fraction of `ρ` for the borderline profile.
    pub slow_rate_factor: f64,
    pub max_steps: usize,
}

impl Default for ScalarSharpnessParams {
    fn default() -> Self {
        ScalarSharpnessParams {
            rho: 2.0,
            c: 0.5,
            fast_gamma: 2.0,
            fast_deltas: geometric(4, 10),
            slow_eps: 1e-2,
            slow_deltas: geometric(2, 40),
            slow_rate_factor: 0.9,
            max_steps: 10_000,
        }
    }
}

/// Borderline profile `α(s) = |ln s|⁻¹` saturated at `s = e⁻¹`.
pub fn borderline_alpha() -> AlphaProfile {
    AlphaProfile::Log { gamma: 1.0, a: (-1f64).exp() }
}

/// Instability at the linear rate for an integrable profile, failure of the
/// linear rate for the borderline profile below a measured `δ` threshold,
/// instability at a reduced rate there, and the product representation.
pub fn scalar_sharpness(p: &ScalarSharpnessParams, exec: Exec) -> Result<Verification> {
    let mut report = BoundReport::new("scalar sharpness");
    let mut table = Table::new(["case", "rate", "delta", "found", "best_margin", "n_star"]);
    let fast = AlphaProfile::log(p.fast_gamma);
    let fast_map = MapSpec::ScalarAlpha { rho: p.rho, alpha: fast.clone() };
    let eps = budget(&fast, p.rho, fast.radius())?.eps();
    let seeds = seed_family(&State::Scalar(1.0), NormKind::L2)?;
    let push_cert = |case: f64, cert: &crate::dynamics::Certification, table: &mut Table| {
        for d in &cert.per_delta {
            table.push(vec![
                case,
                cert.rho,
                d.delta,
                if d.witness.is_some() { 1.0 } else { 0.0 },
                d.best_margin,
                d.witness.as_ref().map_or(f64::NAN, |w| w.n_star as f64),
            ]);
        }
    };
    let cert = certify_exponential_instability(&fast_map, &seeds, eps, p.c, p.rho, &p.fast_deltas, p.max_steps, exec)?;
    for d in &cert.per_delta {
        report.require("witness_integrable", d.delta, d.witness.is_some());
        if let Some(w) = &d.witness {
            report.require("witness_revalidates", d.delta, w.revalidate(&fast_map)?);
        }
    }
    push_cert(0.0, &cert, &mut table);

    let slow = borderline_alpha();
    let slow_map = MapSpec::ScalarAlpha { rho: p.rho, alpha: slow.clone() };
    let full = certify_exponential_instability(&slow_map, &seeds, p.slow_eps, p.c, p.rho, &p.slow_deltas, p.max_steps, exec)?;
    push_cert(1.0, &full, &mut table);
    let failing = full.failing_deltas();
    report.require("borderline_linear_rate_fails", p.rho, !failing.is_empty());
    if let Some(threshold) = failing.iter().copied().reduce(f64::max) {
        for d in &full.per_delta {
            if d.delta <= threshold {
                report.require("borderline_fails_below_threshold", d.delta, d.witness.is_none());
            }
        }
        report.note(format!("borderline profile: linear-rate certification fails for delta <= {threshold}"));
    }
    let reduced = p.slow_rate_factor * p.rho;
    let part = certify_exponential_instability(&slow_map, &seeds, p.slow_eps, p.c, reduced, &p.slow_deltas, p.max_steps, exec)?;
    for d in &part.per_delta {
        report.require("borderline_reduced_rate", d.delta, d.witness.is_some());
    }
    push_cert(2.0, &part, &mut table);

    let mut cf = Table::new(["gamma", "delta", "n", "iterate", "closed_form"]);
    for (gamma, al) in [(p.fast_gamma, fast.clone()), (1.0, slow.clone())] {
        let map = MapSpec::ScalarAlpha { rho: p.rho, alpha: al.clone() };
        for delta in [1e-6, 1e-10] {
            let traj = iterate(&map, &State::Scalar(delta), &IterateOptions::steps(p.max_steps).ceiling(p.slow_eps).keep(0))?;
            let closed = scalar_closed_form(p.rho, &al, &traj.norms);
            for (n, (a, b)) in traj.norms.iter().zip(&closed).enumerate() {
                report.upper_labeled("closed_form", n as f64, (a - b).abs(), 1e-12 * a.abs());
                cf.push(vec![gamma, delta, n as f64, *a, *b]);
            }
            if gamma == 1.0 {
                let below: Vec<f64> = traj.norms.iter().copied().filter(|&u| u <= p.slow_eps).collect();
                report.note(format!("borderline profile, delta = {delta}: fitted sigma = {}", fit_sigma(&below, p.rho)));
            }
        }
    }
    Ok(Verification { report, table, extra: vec![("closed_form".into(), cf)] })
}

// --------------------------------------------------------------- sandwich

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SandwichParams {
    pub weights: usize,
    pub lo: f64,
    pub hi: f64,
    pub alpha: AlphaProfile,
    pub deltas: Vec<f64>,
    /// Overrides the computed `η`; needed for non-integrable profiles.
    pub eta: Option<f64>,
}

impl Default for SandwichParams {
    fn default() -> Self {
        SandwichParams { weights: 1000, lo: 0.0, hi: 2.0, alpha: AlphaProfile::log(2.0), deltas: vec![1e-4, 1e-6], eta: None }
    }
}

/// Two-sided growth bounds for a diagonal operator with the stabilizing
/// nonlinearity, for every `δ`.
pub fn sandwich(p: &SandwichParams) -> Result<Verification> {
    let op = DiagonalOperator::linspace(p.lo, p.hi, p.weights)?;
    let mut report = BoundReport::new("normal-case growth sandwich");
    let mut table = Table::new(["delta", "n", "norm", "lower", "upper"]);
    for &delta in &p.deltas {
        let res = sandwich_check(&op, &p.alpha, delta, p.eta)?;
        report.absorb(res.report);
        for row in res.table.rows {
            let mut r = vec![delta];
            r.extend(row);
            table.push(r);
        }
    }
    Ok(Verification { report, table, extra: vec![] })
}

// ------------------------------------------------------------------- cone

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConeParams {
    pub rho: f64,
    pub c: f64,
    pub alpha: AlphaProfile,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    pub thetas: Vec<f64>,
    pub hineq_samples: usize,
    pub seeds: usize,
    pub max_steps: usize,
}

impl Default for ConeParams {
    fn default() -> Self {
        ConeParams {
            rho: 2.0,
            c: 1.0,
            alpha: AlphaProfile::power(1.0, 0.5),
            l1: vec![2.0, 2.5],
            l2: vec![2.0, 1.0, 0.0],
            thetas: vec![0.0, 0.5, 1.0],
            hineq_samples: 10_000,
            seeds: 500,
            max_steps: 1000,
        }
    }
}

/// `β` against its closed form, the functional inequality, invariance of
/// `D` with growth, and the absence of `β` for the borderline profile.
pub fn cone(p: &ConeParams, exec: Exec) -> Result<Verification> {
    let beta = beta_build(&p.alpha, p.rho, p.c)?;
    let mut report = BoundReport::new("invariant cone");
    let mut table = Table::new(["r", "beta", "beta_closed_form"]);
    let mut prev = 0.0f64;
    let mut samples = crate::theory::geometric_samples(beta.r0, p.hineq_samples);
    samples.reverse();
    for &r in &samples {
        let b = beta.eval(r);
        let closed = p.alpha.analytic_integral(r).map_or(f64::NAN, |i| p.c * r * i);
        if closed.is_finite() {
            report.upper_labeled("beta_closed_form", r, (b - closed).abs(), 1e-12 * closed.abs());
        }
        report.lower_labeled("beta_monotone", r, b, prev);
        report.upper_labeled("beta_below_identity", r, b, r);
        prev = b;
        table.push(vec![r, b, closed]);
    }
    report.absorb(verify_hineq(&beta, p.rho, p.hineq_samples)?);
    let mut cone_table = Table::new(["theta", "seed", "n", "v_norm", "w_norm", "beta"]);
    for &theta in &p.thetas {
        let sys = ProductSystem::new(DiagonalOperator::new(p.l1.clone())?, DiagonalOperator::new(p.l2.clone())?, p.rho, p.alpha.clone(), theta)?;
        let seeds = random_cone_seeds(&sys, &beta, p.seeds)?;
        let res = cone_simulate(&sys, &beta, &seeds, p.max_steps, exec)?;
        report.require("seeds_inside_region", theta, res.precondition_violations.is_empty());
        report.absorb(res.report);
        for row in res.table.rows {
            let mut r = vec![theta];
            r.extend(row);
            cone_table.push(r);
        }
    }
    let necessity = beta_build(&crate::verify::borderline_alpha(), p.rho, p.c);
    report.require("borderline_has_no_beta", 1.0, necessity == Err(Error::NoSolution));
    report.note(format!("r0 = {}", beta.r0));
    Ok(Verification { report, table, extra: vec![("cone".into(), cone_table)] })
}

// ------------------------------------------------- differentiability

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DichotomyParams {
    pub bump: BumpFn,
    /// Shift used for the smooth/rough contrast.
    pub shift: ShiftFn,
    pub radii: Vec<f64>,
    pub smooth_tol: f64,
    pub rough_floor: f64,
    /// Shift used for the two-norm remainder estimate.
    pub xb_shift: ShiftFn,
    pub scalar_alpha: AlphaProfile,
}

impl Default for DichotomyParams {
    fn default() -> Self {
        DichotomyParams {
            bump: BumpFn::default(),
            shift: ShiftFn::Power { q: 1.0 },
            radii: geometric(2, 4),
            smooth_tol: 1e-2,
            rough_floor: 1e-1,
            xb_shift: ShiftFn::default(),
            scalar_alpha: AlphaProfile::log(2.0),
        }
    }
}

/// Smooth directions see a vanishing remainder while the sawtooth keeps it
/// bounded below; the scalar map reproduces its profile.
pub fn dichotomy(p: &DichotomyParams, exec: Exec) -> Result<Verification> {
    let grid = l2_grid();
    let spec = MapSpec::TranslateMult { bump: p.bump, shift: p.shift.clone() };
    let prof = remainder_profile(&spec, &p.radii, |r| Ok(translate_directions(&p.bump, &p.shift, &grid, r)), exec)?;
    let mut report = BoundReport::new("differentiability dichotomy");
    let r_min = p.radii.iter().copied().fold(f64::INFINITY, f64::min);
    for (i, &r) in p.radii.iter().enumerate() {
        if r == r_min {
            report.upper_labeled("smooth", r, prof.max_for(i, "smooth"), p.smooth_tol);
        }
        if r <= 1e-2 {
            report.lower_labeled("sawtooth", r, prof.max_for(i, "sawtooth"), p.rough_floor);
        }
    }
    let xb = xb_check(&MapSpec::TranslateMult { bump: p.bump, shift: p.xb_shift.clone() }, &p.radii, &grid)?;
    report.absorb(xb.report);

    let scalar = MapSpec::ScalarAlpha { rho: 2.0, alpha: p.scalar_alpha.clone() };
    let radii: Vec<f64> = geometric(1, 12);
    let sp = remainder_profile(
        &scalar,
        &radii,
        |_| Ok(vec![crate::dynamics::Seed { label: "unit".into(), state: State::Scalar(1.0) }]),
        exec,
    )?;
    for (i, &r) in radii.iter().enumerate() {
        let a = p.scalar_alpha.eval(r);
        report.upper_labeled("scalar_profile", r, (sp.envelope[i] - a).abs(), 1e-12 * a);
    }
    Ok(Verification { report, table: prof.table(), extra: vec![("xb".into(), xb.table), ("scalar_profile".into(), sp.table())] })
}

// --------------------------------------------------------------- dispatch

/// Every harness with its parameters, tagged by `bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "bound", rename_all = "snake_case")]
pub enum Harness {
    Jordan(JordanParams),
    WeightedShift(WeightedShiftParams),
    Translate(TranslateParams),
    Contract(ContractParams),
    Conservation(ConservationParams),
    Discont(DiscontParams),
    ScalarSharpness(ScalarSharpnessParams),
    Sandwich(SandwichParams),
    Cone(ConeParams),
    Dichotomy(DichotomyParams),
}

impl Harness {
    pub fn run(&self, exec: Exec) -> Result<Verification> {
        match self {
            Harness::Jordan(p) => jordan(p, exec),
            Harness::WeightedShift(p) => weighted_shift(p, exec),
            Harness::Translate(p) => translate(p, exec),
            Harness::Contract(p) => contract(p, exec),
            Harness::Conservation(p) => conservation(p, exec),
            Harness::Discont(p) => discont(p, exec),
            Harness::ScalarSharpness(p) => scalar_sharpness(p, exec),
            Harness::Sandwich(p) => sandwich(p),
            Harness::Cone(p) => cone(p, exec),
            Harness::Dichotomy(p) => dichotomy(p, exec),
        }
    }
}
