//! The example maps behind one interface: `apply(u)` and the linearization
//! `linearized_apply(u)` at the fixed point `0`.

use serde::{Deserialize, Serialize};

use crate::alpha::AlphaProfile;
use crate::error::{Error, Result};
use crate::operators::{WeightSeq, WeightedShift};
use crate::spaces::{GridFunction1D, NormKind, PlanarPoint, State};

/// Window and resolution of `L²(ℝ)` states.
pub const L2_WINDOW: (f64, f64, usize) = (-4.0, 8.0, 12001);
/// Resolution of `C⁰₀([-1, 0])` states.
pub const C00_SAMPLES: usize = 4097;

pub fn l2_grid() -> GridFunction1D {
    GridFunction1D::zeros(L2_WINDOW.0, L2_WINDOW.1, L2_WINDOW.2).expect("valid window")
}

pub fn c00_grid() -> GridFunction1D {
    GridFunction1D::zeros(-1.0, 0.0, C00_SAMPLES).expect("valid window")
}

/// Truncation length for a shift-map run of `n_max` steps; support grows by
/// one index per step.
pub fn shift_mult_truncation(n_max: usize) -> usize {
    n_max + 8
}

fn default_bump_a() -> f64 {
    1.0
}

fn default_bump_b() -> f64 {
    2.0
}

/// `χ(x) = b·exp(1 - 1/(1 - (x/a)²))` on `|x| < a`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpFn {
    #[serde(default = "default_bump_a")]
    pub a: f64,
    #[serde(default = "default_bump_b")]
    pub b: f64,
}

impl Default for BumpFn {
    fn default() -> Self {
        BumpFn { a: 1.0, b: 2.0 }
    }
}

impl BumpFn {
    pub fn eval(&self, x: f64) -> f64 {
        let y = x / self.a;
        if y.abs() >= 1.0 {
            0.0
        } else {
            self.b * (1.0 - 1.0 / (1.0 - y * y)).exp()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidParameter(format!("bump half-width must be positive, got {}", self.a)));
        }
        if !(self.b > 1.0 && self.b.is_finite()) {
            return Err(Error::InvalidParameter(format!("bump height must exceed 1, got {}", self.b)));
        }
        Ok(())
    }

    pub fn sample(&self, like: &GridFunction1D) -> GridFunction1D {
        like.with_values((0..like.n()).map(|k| self.eval(like.x(k))).collect()).expect("same grid")
    }
}

/// Increasing shift `h` with `h(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShiftFn {
    /// `C/|ln s|` for `0 < s < 1`.
    Log { c: f64 },
    /// `s^q`.
    Power { q: f64 },
    /// Points `(s_i, h_i)` with increasing `s_i > 0`; linear between them
    /// and through `(0, 0)`, extended linearly past the last point.
    Table { points: Vec<(f64, f64)> },
}

impl Default for ShiftFn {
    fn default() -> Self {
        ShiftFn::Log { c: 2.0 }
    }
}

impl ShiftFn {
    /// `+inf` where undefined (`s ≥ 1` for the log kind).
    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self {
            ShiftFn::Log { c } => {
                if s >= 1.0 {
                    f64::INFINITY
                } else {
                    c / s.ln().abs()
                }
            }
            ShiftFn::Power { q } => s.powf(*q),
            ShiftFn::Table { points } => {
                let i = points.partition_point(|p| p.0 <= s);
                let ((x0, y0), (x1, y1)) = match i {
                    0 => ((0.0, 0.0), points[0]),
                    i if i == points.len() => (points[i.saturating_sub(2).min(i - 1)], points[i - 1]),
                    i => (points[i - 1], points[i]),
                };
                if x1 == x0 {
                    return y1;
                }
                y0 + (y1 - y0) * (s - x0) / (x1 - x0)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ShiftFn::Log { c } if !(*c > 0.0 && c.is_finite()) => {
                Err(Error::InvalidParameter(format!("log shift constant must be positive, got {c}")))
            }
            ShiftFn::Power { q } if !(*q > 0.0 && q.is_finite()) => {
                Err(Error::InvalidParameter(format!("power shift exponent must be positive, got {q}")))
            }
            ShiftFn::Table { points } => {
                if points.is_empty() {
                    return Err(Error::InvalidParameter("shift table is empty".into()));
                }
                let mut prev = (0.0, 0.0);
                for &p in points {
                    if !(p.0 > prev.0 && p.1 > prev.1 && p.1.is_finite()) {
                        return Err(Error::InvalidParameter("shift table must be strictly increasing from (0, 0)".into()));
                    }
                    prev = p;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Tagged description of every example map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    /// `(v, w) ↦ (v + w - v³, w - w³)`.
    Jordan2d {},
    /// `u ↦ (1 - |u|^p)·MSu` on truncated sequences.
    ShiftMult { p: f64, weights: WeightSeq },
    /// `u ↦ χ(x)·u(x - h(|u|₂))`.
    TranslateMult {
        #[serde(default)]
        bump: BumpFn,
        #[serde(default)]
        shift: ShiftFn,
    },
    /// `u ↦ χ(x)·u(2x - h(|u|₂))`.
    TranslateMultDilate {
        #[serde(default)]
        bump: BumpFn,
        #[serde(default)]
        shift: ShiftFn,
    },
    /// `u ↦ 2·(Eu)(2x - |u|∞²)` on `C⁰₀([-1, 0])`.
    ContractSupport {},
    /// `(v, w) ↦ (2v·1_{Dᶜ}, w/2 + v²/4)`, `D = {0 < |w| < v²}`.
    Discont2d {},
    /// `u ↦ ρu - α(|u|)u` on scalars.
    ScalarAlpha { rho: f64, alpha: AlphaProfile },
}

/// A map with a fixed point at `0` and its linearization there.
pub trait DynamicalMap: Send + Sync {
    fn name(&self) -> String;
    fn apply(&self, u: &State) -> Result<State>;
    fn linearized_apply(&self, u: &State) -> Result<State>;
    /// Norm of the state space the map acts on.
    fn norm_kind(&self) -> NormKind;
}

/// Iterates the linearization of `M` as a map in its own right.
#[derive(Debug, Clone)]
pub struct Linearized<M>(pub M);

impl<M: DynamicalMap> DynamicalMap for Linearized<M> {
    fn name(&self) -> String {
        format!("linearized {}", self.0.name())
    }

    fn apply(&self, u: &State) -> Result<State> {
        self.0.linearized_apply(u)
    }

    fn linearized_apply(&self, u: &State) -> Result<State> {
        self.0.linearized_apply(u)
    }

    fn norm_kind(&self) -> NormKind {
        self.0.norm_kind()
    }
}

impl<M: DynamicalMap + ?Sized> DynamicalMap for &M {
    fn name(&self) -> String {
        (**self).name()
    }

    fn apply(&self, u: &State) -> Result<State> {
        (**self).apply(u)
    }

    fn linearized_apply(&self, u: &State) -> Result<State> {
        (**self).linearized_apply(u)
    }

    fn norm_kind(&self) -> NormKind {
        (**self).norm_kind()
    }
}

fn discont_in_d(p: PlanarPoint) -> bool {
    0.0 < p.w.abs() && p.w.abs() < p.v * p.v
}

impl MapSpec {
    pub fn tag(&self) -> &'static str {
        match self {
            MapSpec::Jordan2d {} => "jordan2d",
            MapSpec::ShiftMult { .. } => "shift_mult",
            MapSpec::TranslateMult { .. } => "translate_mult",
            MapSpec::TranslateMultDilate { .. } => "translate_mult_dilate",
            MapSpec::ContractSupport {} => "contract_support",
            MapSpec::Discont2d {} => "discont2d",
            MapSpec::ScalarAlpha { .. } => "scalar_alpha",
        }
    }

    pub fn translate_mult() -> Self {
        MapSpec::TranslateMult { bump: BumpFn::default(), shift: ShiftFn::default() }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MapSpec::ShiftMult { p, weights } => {
                if !(*p > 0.0 && p.is_finite()) {
                    return Err(Error::InvalidParameter(format!("shift_mult exponent must be positive, got {p}")));
                }
                weights.validate(64)
            }
            MapSpec::TranslateMult { bump, shift } | MapSpec::TranslateMultDilate { bump, shift } => {
                bump.validate()?;
                shift.validate()
            }
            MapSpec::ScalarAlpha { rho, alpha } => {
                if !rho.is_finite() {
                    return Err(Error::InvalidParameter(format!("rho must be finite, got {rho}")));
                }
                alpha.validate()
            }
            _ => Ok(()),
        }
    }

    /// Shape of the states the map acts on.
    pub fn expected_state(&self) -> &'static str {
        match self {
            MapSpec::Jordan2d {} | MapSpec::Discont2d {} => "planar",
            MapSpec::ShiftMult { .. } => "sequence",
            MapSpec::TranslateMult { .. } | MapSpec::TranslateMultDilate { .. } | MapSpec::ContractSupport {} => "grid",
            MapSpec::ScalarAlpha { .. } => "scalar",
        }
    }

    fn mismatch(&self, u: &State) -> Error {
        Error::StateMismatch { expected: self.expected_state(), got: u.kind_name() }
    }

    fn c00(&self, u: &State) -> Result<GridFunction1D> {
        match u {
            State::Grid(g) if g.lo() == -1.0 && g.hi() == 0.0 => Ok(g.clone()),
            State::Grid(_) => Err(Error::InvalidParameter("contract_support acts on grids over [-1, 0]".into())),
            _ => Err(self.mismatch(u)),
        }
    }

    /// Shift `h(|u|₂)` used by the translation maps; errors where `h` is
    /// undefined.
    fn shift_amount(shift: &ShiftFn, g: &GridFunction1D) -> Result<f64> {
        let s = shift.eval(g.l2());
        if !s.is_finite() {
            return Err(Error::InvalidParameter(format!("shift undefined at |u| = {}", g.l2())));
        }
        Ok(s)
    }
}

impl DynamicalMap for MapSpec {
    fn name(&self) -> String {
        self.tag().to_string()
    }

    fn norm_kind(&self) -> NormKind {
        match self {
            MapSpec::ShiftMult { .. } => NormKind::SeqL2,
            MapSpec::ContractSupport {} => NormKind::Sup,
            _ => NormKind::L2,
        }
    }

    fn apply(&self, u: &State) -> Result<State> {
        match (self, u) {
            (MapSpec::Jordan2d {}, State::Planar(p)) => {
                let (v, w) = (p.v, p.w);
                Ok(State::Planar(PlanarPoint::new(v + w - v * v * v, w - w * w * w)?))
            }
            (MapSpec::ShiftMult { p, weights }, State::Seq(s)) => {
                let op = WeightedShift { weights: weights.clone() };
                let factor = 1.0 - s.l2().powf(*p);
                Ok(State::Seq(op.apply(s)?.scale(factor)))
            }
            (MapSpec::TranslateMult { bump, shift }, State::Grid(g)) => {
                g.ensure_interior_support()?;
                let h = Self::shift_amount(shift, g)?;
                Ok(State::Grid(g.translate(h).multiply_by(|x| bump.eval(x))))
            }
            (MapSpec::TranslateMultDilate { bump, shift }, State::Grid(g)) => {
                g.ensure_interior_support()?;
                let h = Self::shift_amount(shift, g)?;
                Ok(State::Grid(g.dilate_translate(2.0, h)?.multiply_by(|x| bump.eval(x))))
            }
            (MapSpec::ContractSupport {}, _) => {
                let g = self.c00(u)?;
                let s = g.sup() * g.sup();
                Ok(State::Grid(g.dilate_translate(2.0, s)?.scale(2.0)))
            }
            (MapSpec::Discont2d {}, State::Planar(p)) => {
                let v = if discont_in_d(*p) { 0.0 } else { 2.0 * p.v };
                Ok(State::Planar(PlanarPoint::new(v, p.w / 2.0 + p.v * p.v / 4.0)?))
            }
            (MapSpec::ScalarAlpha { rho, alpha }, State::Scalar(x)) => Ok(State::Scalar(rho * x - alpha.eval(x.abs()) * x)),
            _ => Err(self.mismatch(u)),
        }
    }

    fn linearized_apply(&self, u: &State) -> Result<State> {
        match (self, u) {
            (MapSpec::Jordan2d {}, State::Planar(p)) => Ok(State::Planar(PlanarPoint::new(p.v + p.w, p.w)?)),
            (MapSpec::ShiftMult { weights, .. }, State::Seq(s)) => {
                Ok(State::Seq(WeightedShift { weights: weights.clone() }.apply(s)?))
            }
            (MapSpec::TranslateMult { bump, .. }, State::Grid(g)) => {
                g.ensure_interior_support()?;
                Ok(State::Grid(g.multiply_by(|x| bump.eval(x))))
            }
            (MapSpec::TranslateMultDilate { bump, .. }, State::Grid(g)) => {
                g.ensure_interior_support()?;
                Ok(State::Grid(g.dilate_translate(2.0, 0.0)?.multiply_by(|x| bump.eval(x))))
            }
            (MapSpec::ContractSupport {}, _) => {
                let g = self.c00(u)?;
                Ok(State::Grid(g.dilate_translate(2.0, 0.0)?.scale(2.0)))
            }
            (MapSpec::Discont2d {}, State::Planar(p)) => Ok(State::Planar(PlanarPoint::new(2.0 * p.v, p.w / 2.0)?)),
            (MapSpec::ScalarAlpha { rho, .. }, State::Scalar(x)) => Ok(State::Scalar(rho * x)),
            _ => Err(self.mismatch(u)),
        }
    }
}

/// Prefix sums `P_n = Σ_{ℓ<n} h(|u_ℓ|)` of a translation-map trajectory, so
/// that `S_j^n = P_n - P_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSums {
    prefix: Vec<f64>,
}

impl ShiftSums {
    /// Number of iterates covered: `S_j^n` is defined for `j ≤ n ≤ len()`.
    pub fn len(&self) -> usize {
        self.prefix.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `S_j^n = Σ_{j≤ℓ<n} h(|u_ℓ|)`, zero for `j ≥ n`.
    pub fn s(&self, j: usize, n: usize) -> f64 {
        if j >= n {
            0.0
        } else {
            self.prefix[n] - self.prefix[j]
        }
    }
}

/// Shift sums for a translation map from the trajectory norms `|u_0|, |u_1|, …`.
pub fn gallun_shift_sums(spec: &MapSpec, norms: &[f64]) -> Result<ShiftSums> {
    let shift = match spec {
        MapSpec::TranslateMult { shift, .. } => shift,
        other => return Err(Error::WrongMap { expected: "translate_mult", got: other.tag().into() }),
    };
    let mut prefix = Vec::with_capacity(norms.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &r in norms {
        acc += shift.eval(r);
        prefix.push(acc);
    }
    Ok(ShiftSums { prefix })
}

/// `card{n ≥ 1 : |u_n| ≥ ε}` over the norms `|u_0|, |u_1|, …`.
pub fn big_set_cardinality(norms: &[f64], eps: f64) -> usize {
    norms.iter().skip(1).filter(|&&r| r >= eps).count()
}

/// Bound `2a/h(ε) + 1` on the big-set cardinality for bump half-width `a`.
pub fn big_set_bound(bump: &BumpFn, shift: &ShiftFn, eps: f64) -> f64 {
    2.0 * bump.a / shift.eval(eps) + 1.0
}

/// Exact orbit of the support-contracting map, from the composition
/// identity `u_n(x) = 2ⁿ·(Eu₀)(2ⁿx - σ_n)` with `σ_{n+1} = σ_n + 2ⁿ|u_n|∞²`.
/// It is free of the grid's resolution limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractOrbit {
    pub sigma: Vec<f64>,
    pub sup: Vec<f64>,
    /// Left end of `supp u_n`; `None` once `u_n ≡ 0`.
    pub support_lo: Vec<Option<f64>>,
}

/// Steps of the grid map that stay faithful: beyond `log₂(1/dx)` the image
/// support is narrower than one cell.
pub fn contract_grid_resolution(g: &GridFunction1D) -> usize {
    (1.0 / g.dx()).log2().floor() as usize
}

pub fn contract_support_orbit(u0: &GridFunction1D, n_max: usize) -> Result<ContractOrbit> {
    if !u0.is_c00() {
        return Err(Error::InvalidParameter("initial state must lie in C⁰₀([-1, 0])".into()));
    }
    // max |u₀| on [-1, c] for the piecewise-linear interpolant
    let max_left_of = |c: f64| -> f64 {
        if c < -1.0 {
            return 0.0;
        }
        let mut m = u0.eval(c).abs();
        for k in 0..u0.n() {
            if u0.x(k) > c {
                break;
            }
            m = m.max(u0.values()[k].abs());
        }
        m
    };
    // leftmost point of supp u₀ in the piecewise-linear sense
    let first_nz = u0.values().iter().position(|&v| v != 0.0);
    let supp_lo0 = first_nz.map(|k| u0.x(k.saturating_sub(1)));
    let mut sigma = vec![0.0];
    let mut sup = vec![u0.sup()];
    let mut support_lo = vec![supp_lo0];
    let mut scale = 1.0f64; // 2ⁿ
    for n in 0..n_max {
        let s_n = sup[n] * sup[n];
        let next_sigma = sigma[n] + scale * s_n;
        scale *= 2.0;
        let m = max_left_of(-next_sigma);
        let next_sup = scale * m;
        let lo = match supp_lo0 {
            Some(y) if m > 0.0 => Some(((y + next_sigma) / scale).max(-1.0)),
            _ => None,
        };
        sigma.push(next_sigma);
        sup.push(next_sup);
        support_lo.push(lo);
    }
    Ok(ContractOrbit { sigma, sup, support_lo })
}
