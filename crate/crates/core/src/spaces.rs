//! State spaces: planar points, truncated sequences and sampled functions on a
//! uniform grid, with their norms and the elementary transforms the maps are
//! built from.
//!
//! Grid functions are interpreted as the piecewise-linear interpolant of their
//! samples, extended by zero outside `[lo, hi]`. Under that reading translation
//! and dilation are exact compositions followed by resampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Positions within this many grid cells of an integer are snapped to it, so
/// grid-aligned shifts reproduce samples exactly.
const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// Trapezoidal L² norm of a grid function; Euclidean norm of a planar point.
    L2,
    /// Maximum absolute value.
    Sup,
    /// L² norm of forward difference quotients.
    H1Semi,
    /// Euclidean norm of a sequence.
    SeqL2,
    /// `v² + |w|` for planar points. Not homogeneous.
    PlanarMix,
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

/// Overflow-safe Euclidean norm of a slice.
fn scaled_l2(values: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    // items are (value, weight)
    let m = values.clone().fold(0.0_f64, |m, (v, _)| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = values.map(|(v, w)| w * (v / m) * (v / m)).sum();
    m * s.sqrt()
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// GridFunction1D
// ---------------------------------------------------------------------------

/// Real function sampled at `lo + k·dx`, `k = 0..n`, with `dx = (hi - lo)/(n - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GridFunction1D {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRepr {
    lo: f64,
    hi: f64,
    n: usize,
    values: Vec<f64>,
}

impl TryFrom<GridRepr> for GridFunction1D {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        if r.n != r.values.len() {
            return Err(Error::InvalidParameter(format!(
                "n = {} but {} values given",
                r.n,
                r.values.len()
            )));
        }
        GridFunction1D::new(r.lo, r.hi, r.values)
    }
}

impl From<GridFunction1D> for GridRepr {
    fn from(g: GridFunction1D) -> Self {
        GridRepr { lo: g.lo, hi: g.hi, n: g.values.len(), values: g.values }
    }
}

impl GridFunction1D {
    pub fn new(lo: f64, hi: f64, values: Vec<f64>) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidParameter(format!("grid needs lo < hi, got [{lo}, {hi}]")));
        }
        if values.len() < 2 {
            return Err(Error::InvalidParameter("grid needs at least 2 samples".into()));
        }
        check_finite(&values)?;
        Ok(GridFunction1D { lo, hi, values })
    }

    pub fn zeros(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(lo, hi, vec![0.0; n])
    }

    /// Samples `f` at every grid node.
    pub fn from_fn(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let probe = Self::zeros(lo, hi, n)?;
        let values = (0..n).map(|k| f(probe.x(k))).collect();
        Self::new(lo, hi, values)
    }

    /// Same grid, new samples.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::InvalidParameter("sample count mismatch".into()));
        }
        Self::new(self.lo, self.hi, values)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn dx(&self) -> f64 {
        (self.hi - self.lo) / (self.values.len() - 1) as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Node coordinate; the endpoints are returned exactly.
    pub fn x(&self, k: usize) -> f64 {
        if k + 1 == self.values.len() {
            self.hi
        } else {
            self.lo + k as f64 * self.dx()
        }
    }

    pub fn same_grid(&self, other: &GridFunction1D) -> bool {
        self.lo == other.lo && self.hi == other.hi && self.n() == other.n()
    }

    /// True for a state of `C⁰₀([-1, 0])`: the grid is `[-1, 0]` and the left
    /// sample vanishes.
    pub fn is_c00(&self) -> bool {
        self.lo == -1.0 && self.hi == 0.0 && self.values[0] == 0.0
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scale(&self, c: f64) -> GridFunction1D {
        GridFunction1D { lo: self.lo, hi: self.hi, values: self.values.iter().map(|v| c * v).collect() }
    }

    /// Pointwise product with `g` sampled at the nodes.
    pub fn multiply_by(&self, g: impl Fn(f64) -> f64) -> GridFunction1D {
        let values = (0..self.n()).map(|k| g(self.x(k)) * self.values[k]).collect();
        GridFunction1D { lo: self.lo, hi: self.hi, values }
    }

    pub fn sub(&self, other: &GridFunction1D) -> Result<GridFunction1D> {
        if !self.same_grid(other) {
            return Err(Error::InvalidParameter("grid mismatch".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(GridFunction1D { lo: self.lo, hi: self.hi, values })
    }

    /// Evaluates the interpolant at fractional node position `p`.
    fn at_position(&self, p: f64) -> f64 {
        let last = (self.n() - 1) as f64;
        let rounded = p.round();
        let p = if (p - rounded).abs() <= SNAP { rounded } else { p };
        if !(0.0..=last).contains(&p) {
            return 0.0;
        }
        let j = p.floor() as usize;
        let t = p - j as f64;
        if t == 0.0 {
            self.values[j]
        } else {
            (1.0 - t) * self.values[j] + t * self.values[j + 1]
        }
    }

    /// Value of the zero-extended piecewise-linear interpolant at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.at_position((x - self.lo) / self.dx())
    }

    pub fn l2(&self) -> f64 {
        let n = self.n();
        let dx = self.dx();
        let it = self
            .values
            .iter()
            .enumerate()
            .map(move |(k, &v)| (v, if k == 0 || k + 1 == n { 0.5 * dx } else { dx }));
        scaled_l2(it)
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn h1_semi(&self) -> f64 {
        let inv = 1.0 / self.dx();
        let it = self.values.windows(2).map(move |w| (w[1] - w[0], inv));
        scaled_l2(it)
    }

    pub fn norm(&self, kind: NormKind) -> Result<f64> {
        match kind {
            NormKind::L2 => Ok(self.l2()),
            NormKind::Sup => Ok(self.sup()),
            NormKind::H1Semi => Ok(self.h1_semi()),
            _ => Err(Error::IncompatibleNorm { kind, state: "grid" }),
        }
    }

    /// `g(x) = f(x - s)`, zero where `x - s` leaves `[lo, hi]`.
    pub fn translate(&self, s: f64) -> GridFunction1D {
        if s == 0.0 {
            return self.clone();
        }
        let shift = s / self.dx();
        let values = (0..self.n()).map(|i| self.at_position(i as f64 - shift)).collect();
        GridFunction1D { lo: self.lo, hi: self.hi, values }
    }

    /// `g(x) = (Ef)(a·x - s)` with `E` the extension by zero. Requires `a > 0`.
    pub fn dilate_translate(&self, a: f64, s: f64) -> Result<GridFunction1D> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!("dilation factor must be positive, got {a}")));
        }
        if a == 1.0 {
            return Ok(self.translate(s));
        }
        let dx = self.dx();
        // a·x_i - s - lo = (a - 1)·lo - s + a·i·dx
        let base = ((a - 1.0) * self.lo - s) / dx;
        let values = (0..self.n()).map(|i| self.at_position(base + a * i as f64)).collect();
        Ok(GridFunction1D { lo: self.lo, hi: self.hi, values })
    }

    /// Smallest node-aligned interval holding every sample with `|value| > tol`.
    pub fn support_interval(&self, tol: f64) -> Option<Interval> {
        let first = self.values.iter().position(|v| v.abs() > tol)?;
        let last = self.values.iter().rposition(|v| v.abs() > tol)?;
        Some(Interval { lo: self.x(first), hi: self.x(last) })
    }

    /// Errors unless the first and last samples vanish, i.e. the zero
    /// extension outside the window agrees with the represented function.
    pub fn ensure_interior_support(&self) -> Result<()> {
        let n = self.n();
        if self.values[0] != 0.0 || self.values[n - 1] != 0.0 {
            let s = self.support_interval(0.0).expect("nonzero sample exists");
            return Err(Error::WindowBoundary { lo: s.lo, hi: s.hi, window_lo: self.lo, window_hi: self.hi });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// SeqVector
// ---------------------------------------------------------------------------

/// Truncation of an `ℓ²(ℕ)` sequence; entries past the end are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SeqRepr", into = "SeqRepr")]
pub struct SeqVector {
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeqRepr {
    #[serde(rename = "N")]
    n: usize,
    values: Vec<f64>,
}

impl TryFrom<SeqRepr> for SeqVector {
    type Error = Error;

    fn try_from(r: SeqRepr) -> Result<Self> {
        if r.n != r.values.len() {
            return Err(Error::InvalidParameter(format!("N = {} but {} values given", r.n, r.values.len())));
        }
        SeqVector::new(r.values)
    }
}

impl From<SeqVector> for SeqRepr {
    fn from(s: SeqVector) -> Self {
        SeqRepr { n: s.values.len(), values: s.values }
    }
}

impl SeqVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("sequence truncation length must be positive".into()));
        }
        check_finite(&values)?;
        Ok(SeqVector { values })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    /// Unit vector `e_k` in a length-`n` truncation.
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::InvalidParameter(format!("basis index {k} outside length {n}")));
        }
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        Self::new(v)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn l2(&self) -> f64 {
        scaled_l2(self.values.iter().map(|&v| (v, 1.0)))
    }

    pub fn norm(&self, kind: NormKind) -> Result<f64> {
        match kind {
            NormKind::SeqL2 | NormKind::L2 => Ok(self.l2()),
            NormKind::Sup => Ok(self.values.iter().fold(0.0, |m, v| m.max(v.abs()))),
            _ => Err(Error::IncompatibleNorm { kind, state: "sequence" }),
        }
    }

    pub fn scale(&self, c: f64) -> SeqVector {
        SeqVector { values: self.values.iter().map(|v| c * v).collect() }
    }

    pub fn sub(&self, other: &SeqVector) -> Result<SeqVector> {
        if self.len() != other.len() {
            return Err(Error::InvalidParameter("sequence length mismatch".into()));
        }
        Ok(SeqVector { values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect() })
    }

    /// Number of leading exact zeros.
    pub fn leading_zeros(&self) -> usize {
        self.values.iter().take_while(|&&v| v == 0.0).count()
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> SeqVector {
        SeqVector { values }
    }
}

// ---------------------------------------------------------------------------
// PlanarPoint
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub v: f64,
    pub w: f64,
}

impl PlanarPoint {
    pub fn new(v: f64, w: f64) -> Result<Self> {
        if !v.is_finite() {
            return Err(Error::NonFinite(0));
        }
        if !w.is_finite() {
            return Err(Error::NonFinite(1));
        }
        Ok(PlanarPoint { v, w })
    }

    pub fn norm(&self, kind: NormKind) -> Result<f64> {
        match kind {
            NormKind::L2 => Ok(self.v.hypot(self.w)),
            NormKind::Sup => Ok(self.v.abs().max(self.w.abs())),
            NormKind::PlanarMix => Ok(self.v * self.v + self.w.abs()),
            _ => Err(Error::IncompatibleNorm { kind, state: "planar" }),
        }
    }
}

// ---------------------------------------------------------------------------
// State
// ---------------------------------------------------------------------------

/// Any state a map in this crate acts on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum State {
    Scalar(f64),
    Planar(PlanarPoint),
    Seq(SeqVector),
    Grid(GridFunction1D),
}

impl State {
    pub fn kind_name(&self) -> &'static str {
        match self {
            State::Scalar(_) => "scalar",
            State::Planar(_) => "planar",
            State::Seq(_) => "sequence",
            State::Grid(_) => "grid",
        }
    }

    pub fn norm(&self, kind: NormKind) -> Result<f64> {
        match self {
            State::Scalar(u) => match kind {
                NormKind::L2 | NormKind::Sup | NormKind::SeqL2 => Ok(u.abs()),
                _ => Err(Error::IncompatibleNorm { kind, state: "scalar" }),
            },
            State::Planar(p) => p.norm(kind),
            State::Seq(s) => s.norm(kind),
            State::Grid(g) => g.norm(kind),
        }
    }

    pub fn scale(&self, c: f64) -> State {
        match self {
            State::Scalar(u) => State::Scalar(c * u),
            State::Planar(p) => State::Planar(PlanarPoint { v: c * p.v, w: c * p.w }),
            State::Seq(s) => State::Seq(s.scale(c)),
            State::Grid(g) => State::Grid(g.scale(c)),
        }
    }

    pub fn sub(&self, other: &State) -> Result<State> {
        match (self, other) {
            (State::Scalar(a), State::Scalar(b)) => Ok(State::Scalar(a - b)),
            (State::Planar(a), State::Planar(b)) => Ok(State::Planar(PlanarPoint { v: a.v - b.v, w: a.w - b.w })),
            (State::Seq(a), State::Seq(b)) => Ok(State::Seq(a.sub(b)?)),
            (State::Grid(a), State::Grid(b)) => Ok(State::Grid(a.sub(b)?)),
            _ => Err(Error::StateMismatch { expected: self.kind_name(), got: other.kind_name() }),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            State::Scalar(u) => *u == 0.0,
            State::Planar(p) => p.v == 0.0 && p.w == 0.0,
            State::Seq(s) => s.is_zero(),
            State::Grid(g) => g.is_zero(),
        }
    }

    /// The zero state with the same shape.
    pub fn zero_like(&self) -> State {
        self.scale(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hat(lo: f64, hi: f64, n: usize, a: f64, b: f64, peak: f64) -> GridFunction1D {
        GridFunction1D::from_fn(lo, hi, n, |x| {
            if x <= a || x >= b {
                0.0
            } else if x <= peak {
                (x - a) / (peak - a)
            } else {
                (b - x) / (b - peak)
            }
        })
        .unwrap()
    }

    #[test]
    fn zero_state_has_zero_norm() {
        let g = GridFunction1D::zeros(-1.0, 1.0, 11).unwrap();
        for k in [NormKind::L2, NormKind::Sup, NormKind::H1Semi] {
            assert_eq!(g.norm(k).unwrap(), 0.0);
        }
    }

    #[test]
    fn indicator_l2_close_to_one() {
        // dx = 1e-3 on [-1, 2]
        let g = GridFunction1D::from_fn(-1.0, 2.0, 3001, |x| if (0.0..=1.0 + 1e-12).contains(&x) { 1.0 } else { 0.0 })
            .unwrap();
        assert!((g.l2() - 1.0).abs() < 1e-3, "{}", g.l2());
    }

    #[test]
    fn planar_mix_arithmetic() {
        let p = PlanarPoint::new(0.5, 0.125).unwrap();
        assert_eq!(p.norm(NormKind::PlanarMix).unwrap(), 0.375);
    }

    #[test]
    fn incompatible_norms_are_rejected() {
        let p = PlanarPoint::new(1.0, 0.0).unwrap();
        assert!(p.norm(NormKind::H1Semi).is_err());
        let g = GridFunction1D::zeros(0.0, 1.0, 3).unwrap();
        assert!(matches!(g.norm(NormKind::PlanarMix), Err(Error::IncompatibleNorm { .. })));
        assert!(SeqVector::zeros(3).unwrap().norm(NormKind::H1Semi).is_err());
    }

    #[test]
    fn constructors_validate() {
        assert!(GridFunction1D::new(0.0, 0.0, vec![0.0, 0.0]).is_err());
        assert!(GridFunction1D::new(0.0, 1.0, vec![0.0]).is_err());
        assert_eq!(GridFunction1D::new(0.0, 1.0, vec![0.0, f64::NAN]), Err(Error::NonFinite(1)));
        assert!(SeqVector::new(vec![]).is_err());
        assert!(PlanarPoint::new(f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn translate_identity_and_escape() {
        let f = hat(-1.0, 1.0, 201, -0.5, 0.5, 0.0);
        assert_eq!(f.translate(0.0), f);
        assert!(f.translate(2.0).is_zero());
        assert!(f.translate(-2.5).is_zero());
    }

    #[test]
    fn grid_aligned_translate_shifts_indices() {
        let f = hat(-1.0, 1.0, 201, -0.5, 0.5, 0.0);
        let k = 7;
        let g = f.translate(k as f64 * f.dx());
        for i in 0..f.n() {
            let expect = if i >= k { f.values()[i - k] } else { 0.0 };
            assert_eq!(g.values()[i], expect, "index {i}");
        }
    }

    #[test]
    fn dilation_examples() {
        let f = GridFunction1D::from_fn(-1.0, 0.0, 1025, |x| x + 1.0).unwrap();
        assert_eq!(f.dilate_translate(1.0, 0.0).unwrap(), f);
        let g = f.dilate_translate(2.0, 0.0).unwrap();
        for k in 0..g.n() {
            let x = g.x(k);
            let expect = if x < -0.5 { 0.0 } else { 2.0 * x + 1.0 };
            assert!((g.values()[k] - expect).abs() < 1e-14, "x = {x}");
        }
        assert!(f.dilate_translate(0.0, 0.0).is_err());
    }

    #[test]
    fn dilation_halves_support() {
        let f = hat(-1.0, 0.0, 1025, -1.0, 0.0, -0.5);
        let s0 = f.support_interval(0.0).unwrap();
        let s1 = f.dilate_translate(2.0, 0.0).unwrap().support_interval(0.0).unwrap();
        assert!((s1.len() - s0.len() / 2.0).abs() <= f.dx());
    }

    #[test]
    fn support_examples() {
        let z = GridFunction1D::zeros(-1.0, 0.0, 5).unwrap();
        assert_eq!(z.support_interval(0.0), None);
        let mut v = vec![0.0; 5];
        v[3] = 0.7; // x = -0.25
        let s = GridFunction1D::new(-1.0, 0.0, v).unwrap().support_interval(0.0).unwrap();
        assert_eq!(s, Interval { lo: -0.25, hi: -0.25 });
        // hat vanishing at -0.5 and 0 but positive inside
        let h = GridFunction1D::from_fn(-1.0, 0.0, 5, |x| if x == -0.25 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(h.support_interval(0.0).unwrap(), Interval { lo: -0.25, hi: -0.25 });
        let wide = hat(-1.0, 0.0, 9, -0.625, 0.125, -0.25);
        assert_eq!(wide.support_interval(0.0).unwrap(), Interval { lo: -0.5, hi: 0.0 });
    }

    #[test]
    fn interior_support_check() {
        let f = hat(-1.0, 1.0, 21, -0.5, 0.5, 0.0);
        assert!(f.ensure_interior_support().is_ok());
        let g = GridFunction1D::from_fn(-1.0, 1.0, 21, |x| x + 1.0).unwrap();
        assert!(matches!(g.ensure_interior_support(), Err(Error::WindowBoundary { .. })));
    }

    #[test]
    fn json_round_trip_shape() {
        let s = SeqVector::new(vec![0.1, 0.2, 1e-300]).unwrap();
        let js = serde_json::to_string(&s).unwrap();
        assert_eq!(js, r#"{"N":3,"values":[0.1,0.2,1e-300]}"#);
        let back: SeqVector = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
        let bad: std::result::Result<GridFunction1D, _> =
            serde_json::from_str(r#"{"lo":0,"hi":1,"n":3,"values":[0,1]}"#);
        assert!(bad.is_err());
    }
}
