//! Trajectories, growth-rate fits and the empirical certifications of
//! Lyapunov and exponential instability.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alpha::least_squares;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::io::Table;
use crate::maps::{BumpFn, DynamicalMap};
use crate::report::{BoundReport, FLOAT_SLACK};
use crate::spaces::{GridFunction1D, NormKind, PlanarPoint, SeqVector, State};

/// Seed of every pseudo-random state family.
pub const SEED: u64 = 0x5EED;
/// Full states kept at the head of a trajectory; later steps keep norms only.
pub const KEEP_STATES: usize = 64;

/// Largest number of leading nonzero entries in a sequence seed.
pub const SEQ_SEED_SUPPORT: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StopReason {
    MaxSteps,
    NormBelow { floor: f64 },
    NormAbove { ceiling: f64 },
    MapError { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateOptions {
    pub max_steps: usize,
    /// Stop once `|u_n| ≤ floor`.
    pub floor: f64,
    /// Stop once `|u_n| > ceiling`.
    pub ceiling: f64,
    pub keep_states: usize,
    /// Overrides the map's own norm.
    pub norm: Option<NormKind>,
}

impl IterateOptions {
    pub fn steps(max_steps: usize) -> Self {
        IterateOptions { max_steps, floor: 0.0, ceiling: f64::INFINITY, keep_states: KEEP_STATES, norm: None }
    }

    pub fn floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn ceiling(mut self, ceiling: f64) -> Self {
        self.ceiling = ceiling;
        self
    }

    pub fn keep(mut self, keep_states: usize) -> Self {
        self.keep_states = keep_states;
        self
    }

    pub fn norm(mut self, kind: NormKind) -> Self {
        self.norm = Some(kind);
        self
    }
}

/// `u₀, u₁, …` under a map, with `norms[n] = |u_n|` for every step and the
/// first `keep_states` states retained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub map: String,
    pub states: Vec<State>,
    pub norms: Vec<f64>,
    pub stop_reason: StopReason,
}

impl Trajectory {
    /// Index of the last iterate.
    pub fn last_index(&self) -> usize {
        self.norms.len() - 1
    }

    pub fn max_norm(&self) -> f64 {
        self.norms.iter().fold(0.0, |m, &r| m.max(r))
    }

    /// `n, norm` table.
    pub fn norms_table(&self) -> Table {
        let mut t = Table::new(["n", "norm"]);
        for (n, &r) in self.norms.iter().enumerate() {
            t.push(vec![n as f64, r]);
        }
        t
    }
}

pub fn iterate<M: DynamicalMap + ?Sized>(map: &M, u0: &State, opts: &IterateOptions) -> Result<Trajectory> {
    if opts.max_steps == 0 {
        return Err(Error::InvalidParameter("max_steps must be at least 1".into()));
    }
    if !(opts.floor < opts.ceiling) {
        return Err(Error::InvalidParameter(format!("floor {} must be below ceiling {}", opts.floor, opts.ceiling)));
    }
    let kind = opts.norm.unwrap_or_else(|| map.norm_kind());
    let mut u = u0.clone();
    let mut norms = vec![u.norm(kind)?];
    let mut states = Vec::new();
    if opts.keep_states > 0 {
        states.push(u.clone());
    }
    let stop = |r: f64| -> Option<StopReason> {
        if r <= opts.floor {
            Some(StopReason::NormBelow { floor: opts.floor })
        } else if r > opts.ceiling {
            Some(StopReason::NormAbove { ceiling: opts.ceiling })
        } else {
            None
        }
    };
    if let Some(reason) = stop(norms[0]) {
        return Ok(Trajectory { map: map.name(), states, norms, stop_reason: reason });
    }
    for _ in 0..opts.max_steps {
        u = match map.apply(&u) {
            Ok(next) => next,
            Err(e) => {
                return Ok(Trajectory { map: map.name(), states, norms, stop_reason: StopReason::MapError { message: e.to_string() } })
            }
        };
        let r = u.norm(kind)?;
        norms.push(r);
        if states.len() < opts.keep_states {
            states.push(u.clone());
        }
        if let Some(reason) = stop(r) {
            return Ok(Trajectory { map: map.name(), states, norms, stop_reason: reason });
        }
    }
    Ok(Trajectory { map: map.name(), states, norms, stop_reason: StopReason::MaxSteps })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub rho_hat: f64,
    pub r2: f64,
}

/// Least-squares fit of `ln|u_n|` against `n` over `lo..=hi`.
pub fn growth_rate_fit(norms: &[f64], lo: usize, hi: usize) -> Result<GrowthFit> {
    if hi <= lo || hi >= norms.len() {
        return Err(Error::InvalidParameter(format!("window [{lo}, {hi}] invalid for {} norms", norms.len())));
    }
    let mut pts = Vec::with_capacity(hi - lo + 1);
    for (n, &r) in norms.iter().enumerate().take(hi + 1).skip(lo) {
        if !(r > 0.0) {
            return Err(Error::ZeroNorm(n));
        }
        pts.push((n as f64, r.ln()));
    }
    let (slope, intercept) = least_squares(&pts);
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    let r2 = if ss_tot == 0.0 || ss_res <= 1e-24 * ss_tot.max(1.0) { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(GrowthFit { rho_hat: slope.exp(), r2 })
}

/// Chain `|u_n| ≥ C·ρⁿ·|u₀|` checked for every `n` with
/// `max(|u₀|, …, |u_n|) ≤ ε`; the first exit above `ε` closes the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstabilityWitness {
    pub seed: String,
    pub u0: State,
    pub delta: f64,
    pub eps: f64,
    pub c: f64,
    pub rho: f64,
    /// Last `n` with `max(|u₀|, …, |u_n|) ≤ ε`.
    pub n_star: usize,
    /// `min_n |u_n|/(Cρⁿ|u₀|) - 1`.
    pub margin: f64,
    pub max_steps: usize,
}

/// Outcome of the chain check on one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    pub margin: f64,
    pub n_star: usize,
    pub first_violation: Option<usize>,
    /// The trajectory left the `ε`-ball, so the chain is complete.
    pub exited: bool,
}

impl ChainCheck {
    pub fn holds(&self) -> bool {
        self.exited && self.first_violation.is_none()
    }
}

fn chain_check(norms: &[f64], eps: f64, c: f64, rho: f64) -> ChainCheck {
    let ln_base = c.ln() + norms[0].ln();
    let ln_rho = rho.ln();
    let mut margin = f64::INFINITY;
    let mut first_violation = None;
    let mut n_star = 0;
    let mut exited = false;
    for (n, &r) in norms.iter().enumerate() {
        if r > eps {
            exited = true;
            break;
        }
        n_star = n;
        let m = (r.ln() - ln_base - n as f64 * ln_rho).exp_m1();
        if m < margin {
            margin = m;
        }
        if m < -FLOAT_SLACK && first_violation.is_none() {
            first_violation = Some(n);
        }
    }
    ChainCheck { margin, n_star, first_violation, exited }
}

impl InstabilityWitness {
    /// Recomputes the trajectory and re-checks every inequality of the chain
    /// with direct powers of `ρ`.
    pub fn revalidate<M: DynamicalMap + ?Sized>(&self, map: &M) -> Result<bool> {
        let traj = iterate(map, &self.u0, &IterateOptions::steps(self.max_steps).ceiling(self.eps).keep(0))?;
        let r0 = traj.norms[0];
        if !(r0 > 0.0 && r0 <= self.delta * (1.0 + FLOAT_SLACK)) {
            return Ok(false);
        }
        let mut exited = false;
        for (n, &r) in traj.norms.iter().enumerate() {
            if r > self.eps {
                exited = true;
                break;
            }
            let bound = self.c * self.rho.powi(n as i32) * r0;
            if r < bound * (1.0 - FLOAT_SLACK) {
                return Ok(false);
            }
            if n > self.n_star {
                return Ok(false);
            }
        }
        Ok(exited)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaResult {
    pub delta: f64,
    pub witness: Option<InstabilityWitness>,
    /// Best chain margin over the seeds.
    pub best_margin: f64,
    /// For the best seed: first `n` violating the chain, if any.
    pub violation_n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub rho: f64,
    pub c: f64,
    pub eps: f64,
    pub per_delta: Vec<DeltaResult>,
}

impl Certification {
    pub fn found_all(&self) -> bool {
        self.per_delta.iter().all(|d| d.witness.is_some())
    }

    /// Largest probed `δ` without a witness.
    pub fn failing_deltas(&self) -> Vec<f64> {
        self.per_delta.iter().filter(|d| d.witness.is_none()).map(|d| d.delta).collect()
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(["delta", "found", "best_margin", "n_star", "violation_n"]);
        for d in &self.per_delta {
            t.push(vec![
                d.delta,
                if d.witness.is_some() { 1.0 } else { 0.0 },
                d.best_margin,
                d.witness.as_ref().map_or(f64::NAN, |w| w.n_star as f64),
                d.violation_n.map_or(f64::NAN, |n| n as f64),
            ]);
        }
        t
    }
}

#[derive(Debug, Clone)]
pub struct Seed {
    pub label: String,
    pub state: State,
}

/// Scales each seed to norm `δ`, iterates until the `ε`-ball is left, and
/// checks the exponential-instability chain. Seeds run under `exec`.
#[allow(clippy::too_many_arguments)]
pub fn certify_exponential_instability<M: DynamicalMap + ?Sized>(
    map: &M,
    seeds: &[Seed],
    eps: f64,
    c: f64,
    rho: f64,
    deltas: &[f64],
    max_steps: usize,
    exec: Exec,
) -> Result<Certification> {
    if !(rho > 1.0 && c > 0.0 && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("need rho > 1, C > 0, eps > 0; got {rho}, {c}, {eps}")));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("seed family is empty".into()));
    }
    let kind = map.norm_kind();
    let mut per_delta = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        if !(delta > 0.0 && delta <= eps) {
            return Err(Error::InvalidParameter(format!("delta must lie in (0, eps], got {delta}")));
        }
        let runs = exec.map(seeds, |seed| -> Result<Option<(ChainCheck, State)>> {
            let r = seed.state.norm(kind)?;
            if r == 0.0 {
                return Ok(None);
            }
            let u0 = seed.state.scale(delta / r);
            let traj = iterate(map, &u0, &IterateOptions::steps(max_steps).ceiling(eps).keep(0))?;
            Ok(Some((chain_check(&traj.norms, eps, c, rho), u0)))
        });
        let mut best: Option<(usize, ChainCheck, State)> = None;
        for (i, run) in runs.into_iter().enumerate() {
            let Some((chk, u0)) = run? else { continue };
            let better = match &best {
                None => true,
                Some((_, b, _)) => (chk.holds(), chk.margin) > (b.holds(), b.margin),
            };
            if better {
                best = Some((i, chk, u0));
            }
        }
        let (i, chk, u0) = best.ok_or_else(|| Error::InvalidParameter("every seed has zero norm".into()))?;
        let witness = chk.holds().then(|| InstabilityWitness {
            seed: seeds[i].label.clone(),
            u0,
            delta,
            eps,
            c,
            rho,
            n_star: chk.n_star,
            margin: chk.margin,
            max_steps,
        });
        per_delta.push(DeltaResult { delta, witness, best_margin: chk.margin, violation_n: chk.first_violation });
    }
    Ok(Certification { rho, c, eps, per_delta })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySweep {
    pub report: BoundReport,
    pub table: Table,
    /// Largest probed `δ` such that every probed `δ' ≤ δ` stayed below `ε`.
    pub threshold: Option<f64>,
}

/// For each `δ`, the maximum over seeds and steps of `|u_n|` from seeds of
/// norm `δ`, compared with `ε`. The verdict is evidence, never proof.
pub fn certify_stability_empirical<M: DynamicalMap + ?Sized>(
    map: &M,
    eps: f64,
    deltas: &[f64],
    seeds: &[Seed],
    max_steps: usize,
    exec: Exec,
) -> Result<StabilitySweep> {
    let kind = map.norm_kind();
    let jobs: Vec<(f64, usize)> = deltas.iter().flat_map(|&d| (0..seeds.len()).map(move |i| (d, i))).collect();
    let maxima = exec.map(&jobs, |&(delta, i)| -> Result<f64> {
        let r = seeds[i].state.norm(kind)?;
        if r == 0.0 {
            return Ok(0.0);
        }
        let traj = iterate(map, &seeds[i].state.scale(delta / r), &IterateOptions::steps(max_steps).ceiling(eps).keep(0))?;
        if let StopReason::MapError { message } = &traj.stop_reason {
            return Err(Error::Internal(format!("map error from seed {}: {message}", seeds[i].label)));
        }
        Ok(traj.max_norm())
    });
    let mut report = BoundReport::new(format!("empirical stability of {}", map.name())).evidence_only();
    let mut table = Table::new(["delta", "seed", "max_norm", "eps"]);
    let mut per_delta_ok: Vec<(f64, bool)> = Vec::new();
    for ((delta, i), m) in jobs.iter().zip(maxima) {
        let m = m?;
        table.push(vec![*delta, *i as f64, m, eps]);
        report.upper_labeled(&seeds[*i].label, *delta, m, eps);
        let ok = m <= eps;
        match per_delta_ok.iter_mut().find(|p| p.0 == *delta) {
            Some(p) => p.1 &= ok,
            None => per_delta_ok.push((*delta, ok)),
        }
    }
    per_delta_ok.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut threshold = None;
    for (d, ok) in per_delta_ok {
        if !ok {
            break;
        }
        threshold = Some(d);
    }
    report.note("empirical evidence over a finite seed family and finite horizon, not a proof");
    if let Some(t) = threshold {
        report.note(format!("stable below measured delta threshold {t}"));
    }
    Ok(StabilitySweep { report, table, threshold })
}

fn normalize(s: State, kind: NormKind) -> Result<State> {
    let r = s.norm(kind)?;
    Ok(s.scale(1.0 / r))
}

/// Triangle wave of half-period `half` and unit height on `[-1, 1]`,
/// enveloped by the bump `χ`.
pub fn sawtooth(like: &GridFunction1D, half: f64, bump: &BumpFn) -> GridFunction1D {
    like.with_values(
        (0..like.n())
            .map(|k| {
                let x = like.x(k);
                let phase = ((x / half).rem_euclid(2.0) - 1.0).abs();
                bump.eval(x) * (1.0 - 2.0 * phase)
            })
            .collect(),
    )
    .expect("same grid")
}

/// Unit-norm seeds: basis states, a bump, a sawtooth and 16 seeded random
/// states shaped like `template`.
pub fn seed_family(template: &State, kind: NormKind) -> Result<Vec<Seed>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut out: Vec<(String, State)> = Vec::new();
    match template {
        State::Scalar(_) => {
            out.push(("plus".into(), State::Scalar(1.0)));
            out.push(("minus".into(), State::Scalar(-1.0)));
        }
        State::Planar(_) => {
            out.push(("e_v".into(), State::Planar(PlanarPoint { v: 1.0, w: 0.0 })));
            out.push(("e_w".into(), State::Planar(PlanarPoint { v: 0.0, w: 1.0 })));
            out.push(("diagonal".into(), State::Planar(PlanarPoint { v: 1.0, w: 1.0 })));
            for i in 0..16 {
                let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                out.push((format!("random_{i}"), State::Planar(PlanarPoint { v: th.cos(), w: th.sin() })));
            }
        }
        State::Seq(s) => {
            let n = s.len();
            let active = (n / 2).clamp(1, SEQ_SEED_SUPPORT);
            for k in 0..4.min(n - 1) {
                out.push((format!("e_{k}"), State::Seq(SeqVector::basis(n, k)?)));
            }
            let mut v = vec![0.0; n];
            for (k, x) in v.iter_mut().enumerate().take(active) {
                *x = (-(k as f64)).exp();
            }
            out.push(("decaying".into(), State::Seq(SeqVector::new(v)?)));
            let mut v = vec![0.0; n];
            for (k, x) in v.iter_mut().enumerate().take(active) {
                *x = if k % 2 == 0 { 1.0 } else { -1.0 };
            }
            out.push(("sawtooth".into(), State::Seq(SeqVector::new(v)?)));
            for i in 0..16 {
                let mut v = vec![0.0; n];
                for x in v.iter_mut().take(active) {
                    *x = rng.gen_range(-1.0..1.0);
                }
                out.push((format!("random_{i}"), State::Seq(SeqVector::new(v)?)));
            }
        }
        State::Grid(g) if g.lo() == -1.0 && g.hi() == 0.0 => {
            let n = g.n();
            for frac in [0.25, 0.5, 0.75] {
                let k = ((n - 1) as f64 * frac).round() as usize;
                let mut v = vec![0.0; n];
                v[k] = 1.0;
                out.push((format!("spike_{frac}"), State::Grid(g.with_values(v)?)));
            }
            let mut v = vec![0.0; n];
            v[n - 1] = 1.0;
            out.push(("spike_right".into(), State::Grid(g.with_values(v)?)));
            let bump = BumpFn { a: 0.5, b: 2.0 };
            out.push(("bump".into(), State::Grid(g.with_values((0..n).map(|k| bump.eval(g.x(k) + 0.5)).collect())?)));
            let half = 8.0 * g.dx();
            out.push((
                "sawtooth".into(),
                State::Grid(g.with_values((0..n).map(|k| ((g.x(k) + 1.0) / half).rem_euclid(2.0) - 1.0).map(|p| 1.0 - p.abs()).collect())?),
            ));
            for i in 0..16 {
                let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                v[0] = 0.0;
                out.push((format!("random_{i}"), State::Grid(g.with_values(v)?)));
            }
        }
        State::Grid(g) => {
            let bump = BumpFn::default();
            for x in [-0.5, 0.0, 0.5] {
                let k = ((x - g.lo()) / g.dx()).round() as usize;
                let mut v = vec![0.0; g.n()];
                v[k] = 1.0;
                out.push((format!("spike_{x}"), State::Grid(g.with_values(v)?)));
            }
            out.push(("bump".into(), State::Grid(bump.sample(g))));
            out.push(("sawtooth".into(), State::Grid(sawtooth(g, 4.0 * g.dx(), &bump))));
            for i in 0..16 {
                let v: Vec<f64> = (0..g.n())
                    .map(|k| {
                        let x = g.x(k);
                        let r: f64 = rng.gen_range(-1.0..1.0);
                        if x.abs() < 1.0 { r } else { 0.0 }
                    })
                    .collect();
                out.push((format!("random_{i}"), State::Grid(g.with_values(v)?)));
            }
        }
    }
    out.into_iter().map(|(label, s)| Ok(Seed { label, state: normalize(s, kind)? })).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::AlphaProfile;
    use crate::maps::{l2_grid, Linearized, MapSpec, ShiftFn};
    use crate::operators::WeightSeq;

    #[test]
    fn zero_state_stops_below_floor() {
        let t = iterate(&MapSpec::Jordan2d {}, &State::Planar(PlanarPoint { v: 0.0, w: 0.0 }), &IterateOptions::steps(10)).unwrap();
        assert_eq!(t.stop_reason, StopReason::NormBelow { floor: 0.0 });
        let t = iterate(&MapSpec::Jordan2d {}, &State::Planar(PlanarPoint { v: 0.0, w: 0.0 }), &IterateOptions::steps(10).floor(-1.0)).unwrap();
        assert_eq!(t.stop_reason, StopReason::MaxSteps);
        assert!(t.norms.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn linear_doubling_until_ceiling() {
        let spec = MapSpec::ScalarAlpha { rho: 2.0, alpha: AlphaProfile::zero() };
        let t = iterate(&spec, &State::Scalar(1e-6), &IterateOptions::steps(100).ceiling(1.0)).unwrap();
        assert_eq!(t.stop_reason, StopReason::NormAbove { ceiling: 1.0 });
        for w in t.norms.windows(2) {
            assert_eq!(w[1], 2.0 * w[0]);
        }
        assert_eq!(t.last_index(), 20);
    }

    #[test]
    fn jordan_decays() {
        let t = iterate(&MapSpec::Jordan2d {}, &State::Planar(PlanarPoint { v: 0.5, w: 0.125 }), &IterateOptions::steps(100_000)).unwrap();
        assert_eq!(t.states.len(), KEEP_STATES);
        assert_eq!(t.norms.len(), 100_001);
        // algebraic decay: |w_n| ~ n^{-1/2}, |v_n| ~ |w_n|^{1/3}
        assert!(t.norms[100_000] < t.norms[10_000] && t.norms[10_000] < t.norms[1000] && t.norms[1000] < t.norms[0]);
    }

    #[test]
    fn fit_examples() {
        let geo: Vec<f64> = (0..50).map(|n| 1.3f64.powi(n)).collect();
        let f = growth_rate_fit(&geo, 0, 49).unwrap();
        assert!((f.rho_hat - 1.3).abs() < 1e-10 && f.r2 == 1.0);
        let f = growth_rate_fit(&[0.5; 10], 0, 9).unwrap();
        assert_eq!((f.rho_hat, f.r2), (1.0, 1.0));
        assert_eq!(growth_rate_fit(&[1.0, 0.0, 1.0], 0, 2), Err(Error::ZeroNorm(1)));
    }

    #[test]
    fn shift_linear_growth_fit_drifts_down() {
        let spec = Linearized(MapSpec::ShiftMult { p: 1.0, weights: WeightSeq::LogSpecial });
        let u0 = State::Seq(SeqVector::basis(4008, 0).unwrap());
        let t = iterate(&spec, &u0, &IterateOptions::steps(4000).keep(0)).unwrap();
        let early = growth_rate_fit(&t.norms, 2, 1000).unwrap();
        let late = growth_rate_fit(&t.norms, 2000, 4000).unwrap();
        // frozen value of the early window; the local rate keeps falling
        assert!((early.rho_hat - 1.16605).abs() < 5e-5, "{}", early.rho_hat);
        assert!(late.rho_hat < early.rho_hat && late.rho_hat > 1.0);
    }

    #[test]
    fn linear_fit_recovers_rate() {
        let spec = Linearized(MapSpec::ScalarAlpha { rho: 1.7, alpha: AlphaProfile::log(2.0) });
        let t = iterate(&spec, &State::Scalar(1e-30), &IterateOptions::steps(200)).unwrap();
        assert!((growth_rate_fit(&t.norms, 0, 200).unwrap().rho_hat - 1.7).abs() < 1e-6);
    }

    #[test]
    fn linear_map_has_exact_witness() {
        let spec = MapSpec::ScalarAlpha { rho: 2.0, alpha: AlphaProfile::zero() };
        let seeds = seed_family(&State::Scalar(0.0), NormKind::L2).unwrap();
        let cert = certify_exponential_instability(&spec, &seeds, 0.1, 1.0, 2.0, &[1e-3, 1e-6, 1e-9], 200, Exec::Parallel).unwrap();
        assert!(cert.found_all());
        for d in &cert.per_delta {
            let w = d.witness.as_ref().unwrap();
            assert!(w.margin.abs() < 1e-12);
            assert!(w.revalidate(&spec).unwrap());
        }
    }

    #[test]
    fn log_alpha_witness_with_half_constant() {
        let spec = MapSpec::ScalarAlpha { rho: 2.0, alpha: AlphaProfile::log(2.0) };
        let seeds = seed_family(&State::Scalar(0.0), NormKind::L2).unwrap();
        let cert = certify_exponential_instability(&spec, &seeds, 1e-2, 0.5, 2.0, &[1e-6], 500, Exec::Sequential).unwrap();
        assert!(cert.found_all());
        assert!(cert.per_delta[0].witness.as_ref().unwrap().revalidate(&spec).unwrap());
    }

    #[test]
    fn translate_mult_has_no_witness() {
        let spec = MapSpec::TranslateMult { bump: BumpFn::default(), shift: ShiftFn::Log { c: 2.0 } };
        let seeds: Vec<Seed> = seed_family(&State::Grid(l2_grid()), NormKind::L2).unwrap().into_iter().take(5).collect();
        let cert = certify_exponential_instability(&spec, &seeds, 0.1, 0.5, 1.1, &[1e-4], 200, Exec::Parallel).unwrap();
        assert!(!cert.found_all());
        assert!(cert.per_delta[0].violation_n.is_some());
    }

    #[test]
    fn zero_map_is_stable() {
        let spec = MapSpec::ScalarAlpha { rho: 0.0, alpha: AlphaProfile::zero() };
        let seeds = seed_family(&State::Scalar(0.0), NormKind::L2).unwrap();
        let s = certify_stability_empirical(&spec, 0.1, &[1e-3, 1e-2], &seeds, 50, Exec::Parallel).unwrap();
        assert_eq!(s.report.verdict, crate::report::Verdict::EvidenceOnly);
        assert_eq!(s.threshold, Some(1e-2));
    }

    #[test]
    fn determinism() {
        let spec = MapSpec::translate_mult();
        let seeds = seed_family(&State::Grid(l2_grid()), NormKind::L2).unwrap();
        let run = |s: &Seed| iterate(&spec, &s.state.scale(1e-2), &IterateOptions::steps(20)).unwrap().norms;
        let a: Vec<_> = seeds.iter().take(6).map(run).collect();
        let b: Vec<_> = Exec::Parallel.map(&seeds[..6], run);
        assert_eq!(a, b);
    }

    #[test]
    fn seed_families_are_unit_norm() {
        for (template, kind) in [
            (State::Scalar(0.0), NormKind::L2),
            (State::Planar(PlanarPoint { v: 0.0, w: 0.0 }), NormKind::L2),
            (State::Seq(SeqVector::zeros(40).unwrap()), NormKind::SeqL2),
            (State::Grid(l2_grid()), NormKind::L2),
            (State::Grid(crate::maps::c00_grid()), NormKind::Sup),
        ] {
            for s in seed_family(&template, kind).unwrap() {
                assert!((s.state.norm(kind).unwrap() - 1.0).abs() < 1e-12, "{}", s.label);
            }
        }
    }
}
