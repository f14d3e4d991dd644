//! Integrability machinery for normal linearizations: the `η/N` budget, the
//! two-sided growth sandwich, the `β` invariant cone of product systems, and
//! remainder and differentiability profiling of the example maps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use crate::alpha::{integral_alpha_over_s, AlphaProfile, IntegralResult, IntegralStatus};
use crate::alpha::least_squares;
use crate::dynamics::{Seed, SEED};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::io::Table;
use crate::maps::{BumpFn, DynamicalMap, MapSpec, ShiftFn};
use crate::operators::{approx_eigenvector, DiagonalOperator};
use crate::report::BoundReport;
use crate::spaces::{GridFunction1D, SeqVector, State};

/// `η`, and through it `N(δ)`, `ν` and `ε`, for a growth rate `r > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstabilityBudget {
    pub eta: f64,
    pub r: f64,
}

impl InstabilityBudget {
    /// The unique `N ≥ 1` with `2rᴺδ ≤ η < 2r^{N+1}δ`.
    pub fn n_of_delta(&self, delta: f64) -> Result<usize> {
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        let r = self.r;
        let mut n = ((self.eta / (2.0 * delta)).ln() / r.ln()).floor() as i64;
        let lhs = |n: i64| 2.0 * r.powi(n as i32) * delta;
        while n > i64::MIN / 2 && lhs(n) > self.eta {
            n -= 1;
        }
        while self.eta >= lhs(n + 1) {
            n += 1;
        }
        if n < 1 {
            return Err(Error::InvalidParameter(format!(
                "delta = {delta} is too large: 2r·delta exceeds eta = {}",
                self.eta
            )));
        }
        Ok(n as usize)
    }

    /// `ν = r/(4N)`.
    pub fn nu(&self, n: usize) -> f64 {
        self.r / (4.0 * n as f64)
    }

    /// `ε = η/(4r)`.
    pub fn eps(&self) -> f64 {
        self.eta / (4.0 * self.r)
    }

    /// `(2/(r ln r))·∫₀^η α(s)/s ds`.
    pub fn condition(alpha: &AlphaProfile, r: f64, eta: f64) -> Result<f64> {
        Ok(2.0 / (r * r.ln()) * alpha.integral(eta)?)
    }
}

/// Largest `η ∈ (0, a]` with `(2/(r ln r))·∫₀^η α(s)/s ds ≤ 1/4`, by
/// bisection in `ln η`.
pub fn budget(alpha: &AlphaProfile, r: f64, a: f64) -> Result<InstabilityBudget> {
    if !(r > 1.0) {
        return Err(Error::InvalidParameter(format!("growth rate must exceed 1, got {r}")));
    }
    let total = integral_alpha_over_s(alpha, a)?;
    if total.status == IntegralStatus::Divergent {
        return Err(Error::Divergent);
    }
    let ok = |eta: f64| -> Result<bool> { Ok(InstabilityBudget::condition(alpha, r, eta)? <= 0.25) };
    if ok(a)? {
        return Ok(InstabilityBudget { eta: a, r });
    }
    let (mut lo, mut hi) = (a.ln() - 740.0, a.ln());
    if !ok(lo.exp())? {
        return Err(Error::InvalidParameter("no eta above the f64 range satisfies the budget condition".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid.exp())? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(InstabilityBudget { eta: lo.exp(), r })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichResult {
    pub report: BoundReport,
    pub table: Table,
    pub n: usize,
    pub budget: InstabilityBudget,
}

/// Iterates `u ↦ Lu - α(|u|)u` from `δ·e_k`, `e_k` an approximate
/// eigenvector for `ν = r/(4N)`, and checks `½rⁿδ ≤ |u_n| ≤ 2rⁿδ` for
/// `1 ≤ n ≤ N(δ)` and `|u_N| ≥ η/(4r)`. `eta` overrides the budget, which
/// is required when `∫ α(s)/s ds` diverges.
pub fn sandwich_check(op: &DiagonalOperator, alpha: &AlphaProfile, delta: f64, eta: Option<f64>) -> Result<SandwichResult> {
    let r = op.spectral_radius().value;
    if !(r > 1.0) {
        return Err(Error::InvalidParameter(format!("spectral radius {r} must exceed 1")));
    }
    let budget = match eta {
        Some(eta) => InstabilityBudget { eta, r },
        None => budget(alpha, r, alpha.radius())?,
    };
    let n_max = budget.n_of_delta(delta)?;
    let eig = approx_eigenvector(op, budget.nu(n_max))?;
    let mut u = SeqVector::basis(op.dim(), eig.index)?.scale(delta);
    let mut report = BoundReport::new(format!("sandwich, delta = {delta}"));
    let mut table = Table::new(["n", "norm", "lower", "upper"]);
    table.push(vec![0.0, u.l2(), 0.5 * delta, 2.0 * delta]);
    let mut rn = 1.0;
    for n in 1..=n_max {
        let a = alpha.eval(u.l2());
        u = op.apply(&u)?.sub(&u.scale(a))?;
        rn *= r;
        let norm = u.l2();
        report.upper_labeled("upper", n as f64, norm, 2.0 * rn * delta);
        report.lower_labeled("lower", n as f64, norm, 0.5 * rn * delta);
        table.push(vec![n as f64, norm, 0.5 * rn * delta, 2.0 * rn * delta]);
    }
    report.lower_labeled("exit", n_max as f64, u.l2(), budget.eps());
    report.note(format!("eta = {}, N = {n_max}, nu = {}", budget.eta, budget.nu(n_max)));
    Ok(SandwichResult { report, table, n: n_max, budget })
}

/// `β(r) = C·r·∫₀^r α(s)/s ds` on `[0, r0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaFn {
    pub c: f64,
    pub r0: f64,
    pub alpha: AlphaProfile,
}

impl BetaFn {
    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 || self.alpha.is_zero() {
            return 0.0;
        }
        self.c * r * self.alpha.integral(r).expect("integral converges for a built beta")
    }

    pub fn with_r0(&self, r0: f64) -> BetaFn {
        BetaFn { r0, ..self.clone() }
    }

    /// `r, beta` on `samples` geometric points in `(0, r0]`.
    pub fn table(&self, samples: usize) -> Table {
        let mut t = Table::new(["r", "beta"]);
        for r in geometric_samples(self.r0, samples) {
            t.push(vec![r, self.eval(r)]);
        }
        t
    }
}

/// `samples` points from `hi` down to `hi·10⁻¹²`, geometrically spaced.
pub fn geometric_samples(hi: f64, samples: usize) -> Vec<f64> {
    let decades = 12.0;
    (0..samples).map(|i| hi * 10f64.powf(-decades * i as f64 / (samples.max(2) - 1) as f64)).collect()
}

/// Builds `β` and shrinks `r0` (by halving from `a/ρ`) until `β(r0) ≤ r0`,
/// `ρ - α(r0) > 1` and the functional inequality holds on a probe set.
pub fn beta_build(alpha: &AlphaProfile, rho: f64, c: f64) -> Result<BetaFn> {
    alpha.validate()?;
    if !(rho > 1.0) {
        return Err(Error::InvalidParameter(format!("rho must exceed 1, got {rho}")));
    }
    if integral_alpha_over_s(alpha, alpha.radius())?.status == IntegralStatus::Divergent {
        return Err(Error::NoSolution);
    }
    if !(c > 1.0 / (rho * rho.ln())) {
        return Err(Error::InvalidParameter(format!("C = {c} must exceed 1/(rho ln rho) = {}", 1.0 / (rho * rho.ln()))));
    }
    let mut r0 = alpha.radius() / rho;
    for _ in 0..200 {
        let beta = BetaFn { c, r0, alpha: alpha.clone() };
        let ok = beta.eval(r0) <= r0
            && rho - alpha.eval(r0) > 1.0
            && verify_hineq(&beta, rho, 200).map(|r| r.passed()).unwrap_or(false);
        if ok {
            return Ok(beta);
        }
        r0 *= 0.5;
    }
    Err(Error::Internal("no admissible r0 found".into()))
}

/// Checks `ρβ(r) + rα(r) ≤ β(ρr - rα(r))` on geometric samples in `(0, r0]`.
pub fn verify_hineq(beta: &BetaFn, rho: f64, samples: usize) -> Result<BoundReport> {
    let mut rep = BoundReport::new(format!("functional inequality on (0, {}]", beta.r0));
    for r in geometric_samples(beta.r0, samples) {
        let a = beta.alpha.eval(r);
        rep.upper(r, rho * beta.eval(r) + r * a, beta.eval(rho * r - r * a));
    }
    Ok(rep)
}

/// `v' = L₁v + N₁(v, w)`, `w' = L₂w + N₂(v, w)` with diagonal `L₁`, `L₂`
/// and the nonlinearity `N₁ = -θα(|v|)v`, `N₂ = (1 - θ)α(|v|)|v|·ŵ`, so that
/// `|N₁| + |N₂| = α(|v|)|v|` everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductSystem {
    pub l1: DiagonalOperator,
    pub l2: DiagonalOperator,
    pub rho: f64,
    pub alpha: AlphaProfile,
    pub theta: f64,
}

impl ProductSystem {
    pub fn new(l1: DiagonalOperator, l2: DiagonalOperator, rho: f64, alpha: AlphaProfile, theta: f64) -> Result<Self> {
        if !(rho > 1.0) {
            return Err(Error::InvalidParameter(format!("rho must exceed 1, got {rho}")));
        }
        if l1.weights().iter().any(|w| w.abs() < rho) {
            return Err(Error::InvalidParameter("L1 has a weight below rho".into()));
        }
        if l2.weights().iter().any(|w| w.abs() > rho) {
            return Err(Error::InvalidParameter("L2 has a weight above rho".into()));
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidParameter(format!("theta must lie in [0, 1], got {theta}")));
        }
        Ok(ProductSystem { l1, l2, rho, alpha, theta })
    }

    pub fn step(&self, v: &SeqVector, w: &SeqVector) -> Result<(SeqVector, SeqVector)> {
        let nv = v.l2();
        let a = self.alpha.eval(nv);
        let v1 = self.l1.apply(v)?.sub(&v.scale(self.theta * a))?;
        let nw = w.l2();
        let dir = if nw > 0.0 { w.scale(1.0 / nw) } else { SeqVector::basis(w.len(), 0)? };
        let push = (1.0 - self.theta) * a * nv;
        let w1 = self.l2.apply(w)?.sub(&dir.scale(-push))?;
        Ok((v1, w1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeResult {
    pub report: BoundReport,
    pub table: Table,
    /// Seeds rejected because they do not lie in `D`.
    pub precondition_violations: Vec<usize>,
}

/// Iterates each seed while `|v_n| ≤ r0`, requiring `(v_n, w_n) ∈ D` and
/// `|v_n| ≥ (ρ - α(r0))ⁿ|v₀|`.
pub fn cone_simulate(
    sys: &ProductSystem,
    beta: &BetaFn,
    seeds: &[(SeqVector, SeqVector)],
    max_steps: usize,
    exec: Exec,
) -> Result<ConeResult> {
    let r0 = beta.r0;
    let rate = sys.rho - sys.alpha.eval(r0);
    let runs = exec.map(seeds, |(v0, w0)| -> Result<Option<(BoundReport, Vec<Vec<f64>>)>> {
        let nv0 = v0.l2();
        if !(nv0 > 0.0 && nv0 <= r0 && w0.l2() <= beta.eval(nv0)) {
            return Ok(None);
        }
        let mut rep = BoundReport::new("seed");
        let mut rows = Vec::new();
        let (mut v, mut w) = (v0.clone(), w0.clone());
        let mut growth = 1.0;
        for n in 1..=max_steps {
            (v, w) = sys.step(&v, &w)?;
            growth *= rate;
            let (nv, nw) = (v.l2(), w.l2());
            rep.lower_labeled("growth", n as f64, nv, growth * nv0);
            rows.push(vec![n as f64, nv, nw, beta.eval(nv.min(r0))]);
            if nv > r0 {
                break;
            }
            rep.upper_labeled("cone", n as f64, nw, beta.eval(nv));
        }
        Ok(Some((rep, rows)))
    });
    let mut report = BoundReport::new(format!("invariant cone, r0 = {r0}"));
    let mut table = Table::new(["seed", "n", "v_norm", "w_norm", "beta"]);
    let mut precondition_violations = Vec::new();
    for (i, run) in runs.into_iter().enumerate() {
        match run? {
            None => precondition_violations.push(i),
            Some((rep, rows)) => {
                report.absorb(rep);
                for row in rows {
                    let mut r = vec![i as f64];
                    r.extend(row);
                    table.push(r);
                }
            }
        }
    }
    if !precondition_violations.is_empty() {
        report.note(format!("{} seeds outside D rejected before iteration", precondition_violations.len()));
    }
    Ok(ConeResult { report, table, precondition_violations })
}

/// `count` seeded random starts in `D` with `|v₀| ∈ r0·[10⁻⁶, 10⁻¹]`.
pub fn random_cone_seeds(sys: &ProductSystem, beta: &BetaFn, count: usize) -> Result<Vec<(SeqVector, SeqVector)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let unit = |rng: &mut ChaCha8Rng, n: usize| -> Result<SeqVector> {
        loop {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = SeqVector::new(v)?;
            let r = s.l2();
            if r > 1e-3 {
                return Ok(s.scale(1.0 / r));
            }
        }
    };
    (0..count)
        .map(|_| {
            let nv = beta.r0 * 10f64.powf(-rng.gen_range(1.0..6.0));
            let nw = rng.gen_range(0.0..1.0) * beta.eval(nv);
            let v = unit(&mut rng, sys.l1.dim())?.scale(nv);
            let w = unit(&mut rng, sys.l2.dim())?.scale(nw);
            Ok((v, w))
        })
        .collect()
}

/// Normalized remainder `α̂_d(r) = |F(r·d) - L(r·d)|/r` over radii and
/// directions, with the envelope `max_d α̂_d(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderProfile {
    pub radii: Vec<f64>,
    pub labels: Vec<Vec<String>>,
    pub alpha_hat: Vec<Vec<f64>>,
    pub envelope: Vec<f64>,
    /// `max_r envelope(r)`, the constant of a bounded remainder.
    pub b_hat: f64,
    /// Exponent of a power-law fit `envelope ≈ K·r^p`, when every value is
    /// positive.
    pub p_hat: Option<f64>,
}

impl RemainderProfile {
    pub fn table(&self) -> Table {
        let mut t = Table::new(["r", "direction", "alpha_hat"]);
        for (i, &r) in self.radii.iter().enumerate() {
            for (j, &a) in self.alpha_hat[i].iter().enumerate() {
                t.push(vec![r, j as f64, a]);
            }
        }
        t
    }

    /// Largest `α̂` at radius index `i` among directions whose label starts
    /// with `prefix`.
    pub fn max_for(&self, i: usize, prefix: &str) -> f64 {
        self.labels[i]
            .iter()
            .zip(&self.alpha_hat[i])
            .filter(|(l, _)| l.starts_with(prefix))
            .fold(0.0, |m, (_, &a)| m.max(a))
    }

    /// Monotone tabulation of the envelope for the integrability classifier.
    pub fn as_alpha_profile(&self) -> Option<AlphaProfile> {
        let mut pts: Vec<(f64, f64)> = self.radii.iter().copied().zip(self.envelope.iter().copied()).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut running = 0.0f64;
        for p in &mut pts {
            running = running.max(p.1);
            p.1 = running;
        }
        pts.dedup_by(|a, b| a.0 == b.0);
        let a = pts.last()?.0;
        (pts.len() >= 2).then_some(AlphaProfile::Table { points: pts, a })
    }
}

pub fn remainder_profile<M, D>(map: &M, radii: &[f64], directions: D, exec: Exec) -> Result<RemainderProfile>
where
    M: DynamicalMap + ?Sized,
    D: Fn(f64) -> Result<Vec<Seed>> + Sync,
{
    let kind = map.norm_kind();
    let rows = exec.map(radii, |&r| -> Result<(Vec<String>, Vec<f64>)> {
        let dirs = directions(r)?;
        let mut labels = Vec::with_capacity(dirs.len());
        let mut vals = Vec::with_capacity(dirs.len());
        for d in dirs {
            let u = d.state.scale(r / d.state.norm(kind)?);
            let rem = map.apply(&u)?.sub(&map.linearized_apply(&u)?)?;
            labels.push(d.label);
            vals.push(rem.norm(kind)? / r);
        }
        Ok((labels, vals))
    });
    let mut labels = Vec::new();
    let mut alpha_hat = Vec::new();
    for row in rows {
        let (l, v) = row?;
        labels.push(l);
        alpha_hat.push(v);
    }
    let envelope: Vec<f64> = alpha_hat.iter().map(|v| v.iter().fold(0.0f64, |m, &a| m.max(a))).collect();
    let b_hat = envelope.iter().fold(0.0f64, |m, &a| m.max(a));
    let p_hat = (envelope.len() >= 2 && envelope.iter().all(|&a| a > 0.0))
        .then(|| least_squares(&radii.iter().zip(&envelope).map(|(r, a)| (r.ln(), a.ln())).collect::<Vec<_>>()).0);
    Ok(RemainderProfile { radii: radii.to_vec(), labels, alpha_hat, envelope, b_hat, p_hat })
}

/// Half-period of the adversarial sawtooth at radius `r`: the shift `h(r)`
/// rounded to whole cells, at least one cell.
pub fn sawtooth_half_period(shift: &ShiftFn, r: f64, dx: f64) -> f64 {
    ((shift.eval(r) / dx).round() * dx).max(dx)
}

/// Smooth directions (the bump and a wide Gaussian inside its support) and
/// the adversarial sawtooth tuned to the shift at radius `r`.
pub fn translate_directions(bump: &BumpFn, shift: &ShiftFn, grid: &GridFunction1D, r: f64) -> Vec<Seed> {
    let smooth_bump = bump.sample(grid);
    let gauss = grid
        .with_values((0..grid.n()).map(|k| {
            let x = grid.x(k);
            if x.abs() < bump.a { (-(x / (0.3 * bump.a)).powi(2)).exp() * bump.eval(x) } else { 0.0 }
        }).collect())
        .expect("same grid");
    let half = sawtooth_half_period(shift, r, grid.dx());
    vec![
        Seed { label: "smooth_bump".into(), state: State::Grid(smooth_bump) },
        Seed { label: "smooth_gauss".into(), state: State::Grid(gauss) },
        Seed { label: "sawtooth".into(), state: State::Grid(crate::dynamics::sawtooth(grid, half, bump)) },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XbResult {
    pub report: BoundReport,
    /// `max |F(u) - Lu|·|ln|u||/|u|_{H¹}` over the probes.
    pub c_hat: f64,
    pub table: Table,
}

/// Two-norm remainder estimate for the translation map: every probe must
/// satisfy `|F(u) - Lu|₂ ≤ b·h(|u|₂)·|u|_{H¹}` (a discrete Minkowski bound),
/// and the fitted constant of `|F(u) - Lu| ≤ Ĉ|ln|u||⁻¹|u|_{H¹}` is reported.
pub fn xb_check(spec: &MapSpec, radii: &[f64], grid: &GridFunction1D) -> Result<XbResult> {
    let (bump, shift) = match spec {
        MapSpec::TranslateMult { bump, shift } => (bump, shift),
        other => return Err(Error::WrongMap { expected: "translate_mult", got: other.tag().into() }),
    };
    let mut report = BoundReport::new("two-norm remainder estimate");
    let mut table = Table::new(["r", "direction", "remainder", "h1_semi", "ratio"]);
    let mut c_hat = 0.0f64;
    for &r in radii {
        for (j, d) in translate_directions(bump, shift, grid, r).into_iter().enumerate() {
            let State::Grid(g) = &d.state else { unreachable!() };
            let u = g.scale(r / g.l2());
            let su = State::Grid(u.clone());
            let rem = spec.apply(&su)?.sub(&spec.linearized_apply(&su)?)?.norm(crate::spaces::NormKind::L2)?;
            let h1 = u.h1_semi();
            let ratio = rem * r.ln().abs() / h1;
            c_hat = c_hat.max(ratio);
            report.upper_labeled(&d.label, r, rem, bump.b * shift.eval(r) * h1);
            table.push(vec![r, j as f64, rem, h1, ratio]);
        }
    }
    report.note(format!("fitted constant C_hat = {c_hat}"));
    Ok(XbResult { report, c_hat, table })
}

/// `|λ⁻¹F(λu) - Lu|` for each `λ`.
pub fn gateaux_quotient<M: DynamicalMap + ?Sized>(map: &M, u: &State, lambdas: &[f64]) -> Result<Vec<f64>> {
    if u.is_zero() {
        return Err(Error::InvalidParameter("direction must be nonzero".into()));
    }
    let kind = map.norm_kind();
    let lu = map.linearized_apply(u)?;
    lambdas
        .iter()
        .map(|&l| map.apply(&u.scale(l))?.scale(1.0 / l).sub(&lu)?.norm(kind))
        .collect()
}

/// `u_n = ρⁿu₀·∏_{k<n}(1 - α(|u_k|)/ρ)` evaluated along the given iterates.
pub fn scalar_closed_form(rho: f64, alpha: &AlphaProfile, iterates: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(iterates.len());
    let mut prod = iterates[0];
    out.push(prod);
    for &u in &iterates[..iterates.len() - 1] {
        prod *= rho * (1.0 - alpha.eval(u.abs()) / rho);
        out.push(prod);
    }
    out
}

/// Smallest `σ` with `u_n/|ln u_n|^σ ≥ ρⁿu₀/|ln u₀|^σ` along the iterates
/// `u_0 < u_1 < … < 1`.
pub fn fit_sigma(iterates: &[f64], rho: f64) -> f64 {
    let u0 = iterates[0];
    let l0 = u0.ln().abs().ln();
    iterates
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &u)| u > u0 && u < 1.0)
        .map(|(n, &u)| (n as f64 * rho.ln() + u0.ln() - u.ln()) / (l0 - u.ln().abs().ln()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{l2_grid, Linearized};
    use crate::spaces::NormKind;

    fn weights_0_2() -> DiagonalOperator {
        DiagonalOperator::linspace(0.0, 2.0, 1000).unwrap()
    }

    #[test]
    fn budget_zero_alpha() {
        let b = budget(&AlphaProfile::zero(), 2.0, 0.5).unwrap();
        assert_eq!(b.eta, 0.5);
        let delta = 1e-5;
        assert_eq!(b.n_of_delta(delta).unwrap(), (0.5f64 / (2.0 * delta)).log2().floor() as usize);
    }

    #[test]
    fn budget_log_two() {
        let b = budget(&AlphaProfile::log(2.0), 2.0, (-1f64).exp()).unwrap();
        let expected = (-4.0 / 2f64.ln()).exp();
        assert!((b.eta - expected).abs() < 1e-12 * expected, "{} vs {expected}", b.eta);
        assert_eq!(b.n_of_delta(b.eta / 4.0).unwrap(), 1);
        assert_eq!(b.n_of_delta(1e-4).unwrap(), 3);
        assert_eq!(b.n_of_delta(1e-6).unwrap(), 10);
        assert!(b.n_of_delta(b.eta).is_err());
    }

    #[test]
    fn budget_rejects_divergent() {
        assert_eq!(budget(&AlphaProfile::log(1.0), 2.0, 0.3), Err(Error::Divergent));
    }

    #[test]
    fn n_of_delta_brackets() {
        let b = InstabilityBudget { eta: 0.01, r: 1.7 };
        for k in 3..40 {
            let delta = 10f64.powf(-(k as f64) / 3.0);
            if let Ok(n) = b.n_of_delta(delta) {
                assert!(2.0 * 1.7f64.powi(n as i32) * delta <= 0.01);
                assert!(0.01 < 2.0 * 1.7f64.powi(n as i32 + 1) * delta);
            }
        }
    }

    #[test]
    fn sandwich_linear_is_exact() {
        let res = sandwich_check(&weights_0_2(), &AlphaProfile::zero(), 1e-6, None).unwrap();
        assert!(res.report.passed());
        for row in &res.table.rows {
            let n = row[0] as i32;
            assert_eq!(row[1], 2f64.powi(n) * 1e-6);
        }
    }

    #[test]
    fn sandwich_log_two_passes() {
        for delta in [1e-4, 1e-6] {
            let res = sandwich_check(&weights_0_2(), &AlphaProfile::log(2.0), delta, None).unwrap();
            assert!(res.report.passed(), "{:?}", res.report.first_failure());
        }
    }

    #[test]
    fn sandwich_log_one_fails_for_small_delta() {
        let eta = Some((-4.0 / 2f64.ln()).exp());
        let al = AlphaProfile::Log { gamma: 1.0, a: (-1f64).exp() };
        let big = sandwich_check(&weights_0_2(), &al, 1e-4, eta).unwrap();
        assert!(big.report.passed());
        let small = sandwich_check(&weights_0_2(), &al, 1e-12, eta).unwrap();
        assert!(!small.report.passed());
        assert_eq!(small.report.first_failure().unwrap().label.as_deref(), Some("lower"));
    }

    #[test]
    fn beta_examples() {
        let b = beta_build(&AlphaProfile::zero(), 2.0, 1.0).unwrap();
        assert_eq!(b.eval(0.3), 0.0);
        let b = beta_build(&AlphaProfile::power(1.0, 0.5), 2.0, 1.0).unwrap();
        for r in [1e-6, 1e-3, b.r0] {
            assert!((b.eval(r) - 2.0 * r.powf(1.5)).abs() <= 1e-14 * r);
        }
        assert!(b.r0 <= 0.0249 && b.eval(b.r0) <= b.r0);
        assert_eq!(beta_build(&AlphaProfile::log(1.0), 2.0, 1.0), Err(Error::NoSolution));
        assert!(beta_build(&AlphaProfile::power(1.0, 0.5), 2.0, 0.5).is_err());
    }

    #[test]
    fn hineq_examples() {
        let b = beta_build(&AlphaProfile::power(1.0, 0.5), 2.0, 1.0).unwrap();
        assert!(verify_hineq(&b, 2.0, 10_000).unwrap().passed());
        assert!(!verify_hineq(&b.with_r0(10.0 * b.r0), 2.0, 10_000).unwrap().passed());
        let z = beta_build(&AlphaProfile::zero(), 2.0, 1.0).unwrap();
        let rep = verify_hineq(&z, 2.0, 1000).unwrap();
        assert!(rep.passed() && rep.worst_margin == 0.0);
        for g in [1.5, 2.0, 3.0] {
            let b = beta_build(&AlphaProfile::log(g), 2.0, 1.0).unwrap();
            assert!(verify_hineq(&b, 2.0, 2000).unwrap().passed());
        }
    }

    #[test]
    fn cone_examples() {
        let one = |x: f64| DiagonalOperator::new(vec![x]).unwrap();
        let sys = ProductSystem::new(one(2.0), one(0.5), 2.0, AlphaProfile::zero(), 0.5).unwrap();
        let beta = beta_build(&AlphaProfile::zero(), 2.0, 1.0).unwrap().with_r0(0.5);
        let seeds = vec![(SeqVector::new(vec![1e-5]).unwrap(), SeqVector::new(vec![0.0]).unwrap())];
        let res = cone_simulate(&sys, &beta, &seeds, 100, Exec::Sequential).unwrap();
        assert!(res.report.passed());

        let al = AlphaProfile::power(1.0, 0.5);
        let beta = beta_build(&al, 2.0, 1.0).unwrap();
        for theta in [0.0, 0.5, 1.0] {
            let sys = ProductSystem::new(one(2.0), one(2.0), 2.0, al.clone(), theta).unwrap();
            let seeds = random_cone_seeds(&sys, &beta, 500).unwrap();
            let res = cone_simulate(&sys, &beta, &seeds, 1000, Exec::Parallel).unwrap();
            assert!(res.report.passed(), "theta {theta}: {:?}", res.report.first_failure());
            assert!(res.precondition_violations.is_empty());
        }
        let sys = ProductSystem::new(one(2.0), one(2.0), 2.0, al.clone(), 0.5).unwrap();
        let outside = vec![(SeqVector::new(vec![1e-4]).unwrap(), SeqVector::new(vec![1e-3]).unwrap())];
        let res = cone_simulate(&sys, &beta, &outside, 10, Exec::Sequential).unwrap();
        assert_eq!(res.precondition_violations, vec![0]);
        assert_eq!(res.report.n_checks, 0);
    }

    #[test]
    fn scalar_profile_reproduces_alpha() {
        let al = AlphaProfile::log(2.0);
        let spec = MapSpec::ScalarAlpha { rho: 2.0, alpha: al.clone() };
        let radii = [1e-1, 1e-3, 1e-6];
        let dirs = |_r: f64| Ok(vec![Seed { label: "plus".into(), state: State::Scalar(1.0) }]);
        let p = remainder_profile(&spec, &radii, dirs, Exec::Sequential).unwrap();
        for (i, &r) in radii.iter().enumerate() {
            assert!((p.envelope[i] - al.eval(r)).abs() <= 1e-15 * al.eval(r).max(1.0));
        }
        let lin = remainder_profile(&Linearized(spec), &radii, dirs, Exec::Sequential).unwrap();
        assert!(lin.envelope.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn translate_gateaux_quotient_decays() {
        let bump = BumpFn::default();
        let chi = bump.sample(&l2_grid());
        let u = State::Grid(chi.scale(1.0 / chi.l2()));
        let lambdas: Vec<f64> = (1..=12).map(|k| 0.5f64.powi(k)).collect();
        let spec = MapSpec::TranslateMult { bump, shift: ShiftFn::Power { q: 1.0 } };
        let q = gateaux_quotient(&spec, &u, &lambdas).unwrap();
        assert!(q.windows(2).all(|w| w[1] <= w[0]), "{q:?}");
        assert!(q[11] < 1e-3);
    }

    #[test]
    fn contract_gateaux_quotient_decays() {
        let hat = GridFunction1D::from_fn(-1.0, 0.0, 4097, |x| 1.0 - (2.0 * x + 1.0).abs()).unwrap();
        let lambdas: Vec<f64> = (1..=12).map(|k| 0.5f64.powi(k)).collect();
        let q = gateaux_quotient(&MapSpec::ContractSupport {}, &State::Grid(hat), &lambdas).unwrap();
        assert!(q.windows(2).all(|w| w[1] <= w[0]));
        assert!(q[11] < 1e-3);
        assert_eq!(
            gateaux_quotient(&Linearized(MapSpec::Jordan2d {}), &State::Planar(crate::spaces::PlanarPoint { v: 1.0, w: 0.3 }), &lambdas).unwrap(),
            vec![0.0; 12]
        );
    }

    #[test]
    fn closed_form_matches_iteration() {
        let al = AlphaProfile::log(1.0);
        let spec = MapSpec::ScalarAlpha { rho: 2.0, alpha: al.clone() };
        let t = crate::dynamics::iterate(&spec, &State::Scalar(1e-9), &crate::dynamics::IterateOptions::steps(60).ceiling(0.3)).unwrap();
        let iterates: Vec<f64> = t.norms.clone();
        let closed = scalar_closed_form(2.0, &al, &iterates);
        for (a, b) in iterates.iter().zip(&closed) {
            assert!((a - b).abs() <= 1e-12 * a);
        }
        let sigma = fit_sigma(&iterates, 2.0);
        assert!(sigma > 0.0 && sigma < 2.0, "{sigma}");
    }

    #[test]
    fn xb_bounds_hold() {
        let spec = MapSpec::translate_mult();
        let res = xb_check(&spec, &[1e-2, 1e-3, 1e-4], &l2_grid()).unwrap();
        assert!(res.report.passed(), "{:?}", res.report.first_failure());
        assert!(res.c_hat <= 2.0 * 2.0);
        let _ = NormKind::L2;
    }
}
