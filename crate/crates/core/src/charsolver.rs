//! Exact solver for `u_t + ((-x + u²)u)_x = 0` on `[-1, 0]` with
//! nondecreasing data vanishing at `-1`, by the method of characteristics.
//!
//! Along `X(t) = e^{-t}(x₀ + u₀(x₀)²(e^{3t} - 1))` the solution is
//! `e^t·u₀(x₀)`; the foot `x₀` of the characteristic through `x` is found by
//! bisection on the strictly increasing map `x₀ ↦ X(t)`.

use serde::{Deserialize, Serialize};

use crate::alpha::least_squares;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::maps::DynamicalMap;
use crate::report::BoundReport;
use crate::spaces::{GridFunction1D, NormKind, State};

/// Agreement required between the closed-form characteristic and RK4.
pub const RK4_REL_TOL: f64 = 1e-8;

/// Nondecreasing grid function on `[-1, 0]` with `u₀(-1) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFunction1D", into = "GridFunction1D")]
pub struct MonotoneInitialData {
    f: GridFunction1D,
}

impl TryFrom<GridFunction1D> for MonotoneInitialData {
    type Error = Error;

    fn try_from(f: GridFunction1D) -> Result<Self> {
        MonotoneInitialData::new(f)
    }
}

impl From<MonotoneInitialData> for GridFunction1D {
    fn from(m: MonotoneInitialData) -> Self {
        m.f
    }
}

impl MonotoneInitialData {
    pub fn new(f: GridFunction1D) -> Result<Self> {
        if f.lo() != -1.0 || f.hi() != 0.0 {
            return Err(Error::NotMonotone(format!("grid must be [-1, 0], got [{}, {}]", f.lo(), f.hi())));
        }
        if f.values()[0] != 0.0 {
            return Err(Error::NotMonotone(format!("u0(-1) = {} must vanish", f.values()[0])));
        }
        if let Some(k) = f.values().windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::NotMonotone(format!("samples decrease at index {}", k + 1)));
        }
        Ok(MonotoneInitialData { f })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(GridFunction1D::from_fn(-1.0, 0.0, n, f)?)
    }

    pub fn grid(&self) -> &GridFunction1D {
        &self.f
    }

    /// Piecewise-linear interpolant.
    pub fn eval(&self, x: f64) -> f64 {
        self.f.eval(x)
    }

    /// `|u₀|∞ = u₀(0)`.
    pub fn sup(&self) -> f64 {
        self.f.values()[self.f.n() - 1]
    }

    /// `λu₀` for `λ ≥ 0`, still in the cone.
    pub fn scale(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!("cone scaling needs λ ≥ 0, got {lambda}")));
        }
        Ok(MonotoneInitialData { f: self.f.scale(lambda) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicRecord {
    pub x0: f64,
    pub t: f64,
    #[serde(rename = "X")]
    pub x: f64,
    pub u_along: f64,
}

fn foot_to_position(x0: f64, u0x0: f64, t: f64) -> f64 {
    (-t).exp() * (x0 + u0x0 * u0x0 * (3.0 * t).exp_m1())
}

pub fn characteristic_position(x0: f64, t: f64, u0: &MonotoneInitialData) -> Result<CharacteristicRecord> {
    if !(-1.0..=0.0).contains(&x0) {
        return Err(Error::OutOfRange(x0));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time must be nonnegative, got {t}")));
    }
    let v = u0.eval(x0);
    Ok(CharacteristicRecord { x0, t, x: foot_to_position(x0, v, t), u_along: t.exp() * v })
}

/// RK4 integration of `X' = -X + 3u(X, t)²` with `u(X(t), t) = e^t·u₀(x₀)`.
pub fn characteristic_rk4(x0: f64, t: f64, u0: &MonotoneInitialData, steps: usize) -> Result<f64> {
    if !(-1.0..=0.0).contains(&x0) {
        return Err(Error::OutOfRange(x0));
    }
    let c = u0.eval(x0).powi(2);
    let rhs = |s: f64, x: f64| -x + 3.0 * c * (2.0 * s).exp();
    let h = t / steps as f64;
    let mut x = x0;
    for i in 0..steps {
        let s = i as f64 * h;
        let k1 = rhs(s, x);
        let k2 = rhs(s + h / 2.0, x + h / 2.0 * k1);
        let k3 = rhs(s + h / 2.0, x + h / 2.0 * k2);
        let k4 = rhs(s + h, x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    Ok(x)
}

/// Foot `x₀ ∈ [-1, 0]` of the characteristic reaching `x ∈ [-e^{-t}, 0]` at
/// time `t`, bisected until the bracket cannot shrink further.
pub fn characteristic_foot(x: f64, t: f64, u0: &MonotoneInitialData) -> Result<f64> {
    let g = |x0: f64| foot_to_position(x0, u0.eval(x0), t) - x;
    let (mut lo, mut hi) = (-1.0f64, 0.0f64);
    if g(lo) > 0.0 || g(hi) < 0.0 {
        return Err(Error::Internal(format!("bisection does not bracket x = {x} at t = {t}")));
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if g(lo).abs() <= g(hi).abs() { lo } else { hi })
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time must be positive, got {t}")));
    }
    Ok(())
}

/// `u(·, t)` sampled on the nodes of `xs` (a grid over `[-1, 0]`).
pub fn solve_at_time(u0: &MonotoneInitialData, t: f64, xs: &GridFunction1D, exec: Exec) -> Result<GridFunction1D> {
    check_time(t)?;
    let edge = -(-t).exp();
    let et = t.exp();
    let vals = exec.map_range(xs.n(), |k| {
        let x = xs.x(k);
        if x < edge {
            return Ok(0.0);
        }
        let x0 = characteristic_foot(x, t, u0)?;
        Ok(et * u0.eval(x0))
    });
    xs.with_values(vals.into_iter().collect::<Result<Vec<_>>>()?)
}

/// `ũ(x, t) = e^t·u₀(e^t x)` on `[-e^{-t}, 0]`, zero to the left.
pub fn linearized_at_time(u0: &MonotoneInitialData, t: f64, xs: &GridFunction1D) -> Result<GridFunction1D> {
    check_time(t)?;
    let et = t.exp();
    let edge = -(-t).exp();
    xs.with_values((0..xs.n()).map(|k| {
        let x = xs.x(k);
        if x < edge { 0.0 } else { et * u0.eval((et * x).max(-1.0)) }
    }).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateauxTable {
    pub lambdas: Vec<f64>,
    /// `sup|λ⁻¹u[λu₀](·, t) - ũ(·, t)|` for each λ.
    pub errors: Vec<f64>,
}

impl GateauxTable {
    /// Least-squares slope of `ln error` against `ln λ`.
    pub fn slope(&self) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self
            .lambdas
            .iter()
            .zip(&self.errors)
            .filter(|(_, e)| **e > 0.0)
            .map(|(l, e)| (l.ln(), e.ln()))
            .collect();
        if pts.len() < 2 {
            return Err(Error::InvalidParameter("slope fit needs two positive errors".into()));
        }
        Ok(least_squares(&pts).0)
    }
}

pub fn gateaux_limit_experiment(
    u0: &MonotoneInitialData,
    t: f64,
    lambdas: &[f64],
    xs: &GridFunction1D,
    exec: Exec,
) -> Result<GateauxTable> {
    let lin = linearized_at_time(u0, t, xs)?;
    let mut errors = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        if !(l > 0.0 && l <= 1.0) {
            return Err(Error::InvalidParameter(format!("λ must lie in (0, 1], got {l}")));
        }
        let u = solve_at_time(&u0.scale(l)?, t, xs, exec)?.scale(1.0 / l);
        errors.push(u.sub(&lin)?.sup());
    }
    Ok(GateauxTable { lambdas: lambdas.to_vec(), errors })
}

/// `(1 - e^{-3})^{-1/2}`.
pub fn decay_constant() -> f64 {
    1.0 / (-(-3f64).exp_m1()).sqrt()
}

/// `C^{1-α}·e^{(3α-1)t/2}·|u₀|∞^α`.
pub fn decay_bound(sup0: f64, t: f64, alpha: f64) -> f64 {
    decay_constant().powf(1.0 - alpha) * ((3.0 * alpha - 1.0) * t / 2.0).exp() * sup0.powf(alpha)
}

pub fn decay_bound_check(u0: &MonotoneInitialData, ts: &[f64], alpha: f64, xs: &GridFunction1D, exec: Exec) -> Result<BoundReport> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("interpolation exponent must lie in [0, 1], got {alpha}")));
    }
    let mut rep = BoundReport::new(format!("decay bound, alpha = {alpha}"));
    for &t in ts {
        if t < 1.0 {
            return Err(Error::InvalidParameter(format!("decay bound needs t ≥ 1, got {t}")));
        }
        let u = solve_at_time(u0, t, xs, exec)?;
        rep.upper(t, u.sup(), decay_bound(u0.sup(), t, alpha));
    }
    Ok(rep)
}

/// Time-one map `u ↦ u(·, 1)` on the cone, iterable like any other map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeOneMap {
    pub exec: Exec,
}

impl Default for TimeOneMap {
    fn default() -> Self {
        TimeOneMap { exec: Exec::Sequential }
    }
}

impl TimeOneMap {
    fn data(u: &State) -> Result<MonotoneInitialData> {
        match u {
            State::Grid(g) => MonotoneInitialData::new(g.clone()),
            other => Err(Error::StateMismatch { expected: "grid", got: other.kind_name() }),
        }
    }
}

impl DynamicalMap for TimeOneMap {
    fn name(&self) -> String {
        "conservation_law_time_one".into()
    }

    fn apply(&self, u: &State) -> Result<State> {
        let d = Self::data(u)?;
        Ok(State::Grid(solve_at_time(&d, 1.0, d.grid(), self.exec)?))
    }

    fn linearized_apply(&self, u: &State) -> Result<State> {
        let d = Self::data(u)?;
        Ok(State::Grid(linearized_at_time(&d, 1.0, d.grid())?))
    }

    fn norm_kind(&self) -> NormKind {
        NormKind::Sup
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: usize = 2049;

    fn half_ramp() -> MonotoneInitialData {
        MonotoneInitialData::from_fn(N, |x| (1.0 + x) / 2.0).unwrap()
    }

    fn xs() -> GridFunction1D {
        GridFunction1D::zeros(-1.0, 0.0, N).unwrap()
    }

    #[test]
    fn rejects_non_monotone() {
        assert!(MonotoneInitialData::from_fn(N, |x| (3.0 * x).sin().abs() * (1.0 + x)).is_err());
        assert!(MonotoneInitialData::from_fn(N, |x| 2.0 + x).is_err());
    }

    #[test]
    fn characteristic_examples() {
        let zero = MonotoneInitialData::from_fn(N, |_| 0.0).unwrap();
        let r = characteristic_position(-0.5, 2.0, &zero).unwrap();
        assert_eq!(r.x, (-2f64).exp() * -0.5);
        let u0 = half_ramp();
        let r = characteristic_position(-1.0, 3.0, &u0).unwrap();
        assert_eq!(r.x, -(-3f64).exp());
        let z = MonotoneInitialData::from_fn(N, |_| 0.0).unwrap();
        assert_eq!(characteristic_position(0.0, 5.0, &z).unwrap().x, 0.0);
        assert!(matches!(characteristic_position(0.1, 1.0, &u0), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn rk4_agrees_with_closed_form() {
        let u0 = half_ramp();
        for &x0 in &[-1.0, -0.75, -0.3, 0.0] {
            for &t in &[0.5, 1.0, 5.0, 10.0] {
                let exact = characteristic_position(x0, t, &u0).unwrap().x;
                let rk = characteristic_rk4(x0, t, &u0, 20_000).unwrap();
                assert!((rk - exact).abs() <= RK4_REL_TOL * exact.abs().max(1.0), "x0={x0} t={t}: {rk} vs {exact}");
            }
        }
    }

    #[test]
    fn regression_value_at_origin() {
        // independent bisection of x0 + ((1+x0)/2)²(e³-1) = 0
        let k = 3f64.exp() - 1.0;
        let (mut a, mut b) = (-1.0f64, 0.0f64);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m + ((1.0 + m) / 2.0).powi(2) * k < 0.0 { a = m } else { b = m }
        }
        let expected = 1f64.exp() * (1.0 + a) / 2.0;
        let u = solve_at_time(&half_ramp(), 1.0, &xs(), Exec::Sequential).unwrap();
        assert!((u.values()[N - 1] - expected).abs() < 1e-12, "{} vs {expected}", u.values()[N - 1]);
    }

    #[test]
    fn solution_properties() {
        let u0 = half_ramp();
        for t in [0.3, 1.0, 4.0] {
            let u = solve_at_time(&u0, t, &xs(), Exec::Parallel).unwrap();
            let edge = -(-t).exp();
            for k in 0..N {
                let x = u.x(k);
                if x < edge {
                    assert_eq!(u.values()[k], 0.0);
                } else {
                    // re-substitute along the characteristic
                    let x0 = characteristic_foot(x, t, &u0).unwrap();
                    let rec = characteristic_position(x0, t, &u0).unwrap();
                    assert!((rec.u_along - u.values()[k]).abs() <= 1e-10);
                }
            }
            assert!(u.values().windows(2).all(|w| w[1] >= w[0]));
            assert_eq!(u.values()[0], 0.0);
        }
        let zero = MonotoneInitialData::from_fn(N, |_| 0.0).unwrap();
        assert!(solve_at_time(&zero, 2.0, &xs(), Exec::Sequential).unwrap().is_zero());
    }

    #[test]
    fn modes_agree_bitwise() {
        let u0 = half_ramp();
        let a = solve_at_time(&u0, 1.5, &xs(), Exec::Sequential).unwrap();
        let b = solve_at_time(&u0, 1.5, &xs(), Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn linearized_examples() {
        let u0 = MonotoneInitialData::from_fn(N, |x| 1.0 + x).unwrap();
        let t = 2f64.ln();
        let u = linearized_at_time(&u0, t, &xs()).unwrap();
        for k in 0..N {
            let x = u.x(k);
            let expected = if x < -0.5 { 0.0 } else { 2.0 * (1.0 + 2.0 * x) };
            assert!((u.values()[k] - expected).abs() < 1e-12);
        }
        for t in [0.5, 1.0, 3.0] {
            let u = linearized_at_time(&half_ramp(), t, &xs()).unwrap();
            assert_eq!(u.sup(), t.exp() * half_ramp().sup());
        }
    }

    #[test]
    fn gateaux_slope_near_two() {
        let lambdas: Vec<f64> = (3..=10).map(|k| 0.5f64.powi(k)).collect();
        let tab = gateaux_limit_experiment(&half_ramp(), 1.0, &lambdas, &xs(), Exec::Parallel).unwrap();
        assert!(tab.errors.windows(2).all(|w| w[1] <= w[0]));
        let slope = tab.slope().unwrap();
        assert!((1.8..=2.2).contains(&slope), "{slope}");
        let zero = MonotoneInitialData::from_fn(N, |_| 0.0).unwrap();
        let tab = gateaux_limit_experiment(&zero, 1.0, &[1.0], &xs(), Exec::Sequential).unwrap();
        assert_eq!(tab.errors, vec![0.0]);
    }

    #[test]
    fn decay_bound_examples() {
        let c = decay_constant();
        assert_eq!(decay_bound(0.7, 3.0, 1.0), 3f64.exp() * 0.7);
        assert!((decay_bound(0.7, 3.0, 0.0) - c * (-1.5f64).exp()).abs() < 1e-15);
        let ts: Vec<f64> = (1..=10).map(f64::from).collect();
        let rep = decay_bound_check(&half_ramp(), &ts, 0.25, &xs(), Exec::Parallel).unwrap();
        assert!(rep.passed(), "{:?}", rep.worst);
    }
}
