//! Remainder profiles `α(s)` and the integral `∫₀^a α(s)/s ds`.
//!
//! The integral is evaluated on dyadic blocks `[a·2^{-k-1}, a·2^{-k}]` with
//! Gauss–Legendre quadrature in `ln s`. Power and logarithmic profiles have
//! closed forms that decide the verdict; the quadrature must not contradict
//! them. Tabulated profiles rely on the block classifier alone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thresholds of the dyadic-block classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub depth: usize,
    /// Geometric decay is accepted when every block ratio in the window is
    /// below this value.
    pub converge_ratio: f64,
    /// Divergence is declared when every block ratio in the window is at
    /// least this value.
    pub diverge_ratio: f64,
    pub window: usize,
    /// Algebraic tails `c_k ~ |ln s_k|^{-γ}` converge when the fitted `γ`
    /// exceeds `1 + pseries_margin`.
    pub pseries_margin: f64,
    /// Fitted `γ ≤ 1 + pseries_tie` counts as divergent.
    pub pseries_tie: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            depth: 200,
            converge_ratio: 0.999,
            diverge_ratio: 1.0 - 1e-6,
            window: 50,
            pseries_margin: 0.05,
            pseries_tie: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralStatus {
    Convergent,
    Divergent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    /// `+inf` when divergent.
    pub value: f64,
    pub status: IntegralStatus,
}

fn default_log_radius() -> f64 {
    (-1f64).exp()
}

fn default_radius() -> f64 {
    1.0
}

/// `α : (0, a] → [0, ∞)`, nondecreasing with `α(0⁺) = 0`. Beyond the
/// validity radius `a` the profile saturates at `α(a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphaProfile {
    /// `b·s^p`.
    Power {
        b: f64,
        p: f64,
        #[serde(default = "default_radius")]
        a: f64,
    },
    /// `|ln s|^{-γ}`, requires `a < 1`.
    Log {
        gamma: f64,
        #[serde(default = "default_log_radius")]
        a: f64,
    },
    /// Points `(s_i, α_i)` with increasing `s_i`, linearly interpolated.
    /// Below `s_0` the power law through the first two points is extended
    /// (exponent clamped at 0); above the last point the value is constant.
    Table {
        points: Vec<(f64, f64)>,
        #[serde(default = "default_radius")]
        a: f64,
    },
}

const GL_NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

impl AlphaProfile {
    pub fn zero() -> Self {
        AlphaProfile::Power { b: 0.0, p: 1.0, a: 1.0 }
    }

    pub fn power(b: f64, p: f64) -> Self {
        AlphaProfile::Power { b, p, a: 1.0 }
    }

    pub fn log(gamma: f64) -> Self {
        AlphaProfile::Log { gamma, a: default_log_radius() }
    }

    pub fn radius(&self) -> f64 {
        match self {
            AlphaProfile::Power { a, .. } | AlphaProfile::Log { a, .. } | AlphaProfile::Table { a, .. } => *a,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            AlphaProfile::Power { b, .. } => *b == 0.0,
            AlphaProfile::Table { points, .. } => points.iter().all(|p| p.1 == 0.0),
            AlphaProfile::Log { .. } => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.radius();
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParameter(format!("validity radius must be positive, got {a}")));
        }
        match self {
            AlphaProfile::Power { b, p, .. } => {
                if !(b.is_finite() && *b >= 0.0) {
                    return Err(Error::InvalidParameter(format!("power profile needs b ≥ 0, got {b}")));
                }
                if *b > 0.0 && !(p.is_finite() && *p > 0.0) {
                    return Err(Error::InvalidParameter(format!("power profile needs p > 0, got {p}")));
                }
            }
            AlphaProfile::Log { gamma, .. } => {
                if !(gamma.is_finite() && *gamma > 0.0) {
                    return Err(Error::InvalidParameter(format!("log profile needs gamma > 0, got {gamma}")));
                }
                if a >= 1.0 {
                    return Err(Error::InvalidParameter(format!("log profile needs a < 1, got {a}")));
                }
            }
            AlphaProfile::Table { points, .. } => {
                if points.len() < 2 {
                    return Err(Error::InvalidParameter("table profile needs at least two points".into()));
                }
                for w in points.windows(2) {
                    if !(w[0].0 > 0.0 && w[1].0 > w[0].0) {
                        return Err(Error::InvalidParameter("table abscissae must be positive and increasing".into()));
                    }
                    if !(w[0].1 >= 0.0 && w[1].1 >= w[0].1 && w[1].1.is_finite()) {
                        return Err(Error::InvalidParameter("table values must be nonnegative and nondecreasing".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// `α(s)`; zero for `s ≤ 0`.
    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let s = s.min(self.radius());
        match self {
            AlphaProfile::Power { b, p, .. } => {
                if *b == 0.0 {
                    0.0
                } else {
                    b * s.powf(*p)
                }
            }
            AlphaProfile::Log { gamma, .. } => (-s.ln()).powf(-gamma),
            AlphaProfile::Table { points, .. } => table_eval(points, s),
        }
    }

    /// Closed form of `∫₀^r α(s)/s ds` for power and log profiles, `None`
    /// for tables. Divergent integrals give `+inf`.
    pub fn analytic_integral(&self, r: f64) -> Option<f64> {
        match self {
            AlphaProfile::Power { b, p, .. } => Some(if *b == 0.0 { 0.0 } else { b * r.powf(*p) / p }),
            AlphaProfile::Log { gamma, .. } => Some(if *gamma > 1.0 {
                (-r.ln()).powf(1.0 - gamma) / (gamma - 1.0)
            } else {
                f64::INFINITY
            }),
            AlphaProfile::Table { .. } => None,
        }
    }

    /// Closed form of `∫_lo^hi α(s)/s ds` for power and log profiles.
    fn analytic_partial(&self, lo: f64, hi: f64) -> Option<f64> {
        match self {
            AlphaProfile::Power { b, p, .. } => Some(if *b == 0.0 { 0.0 } else { b * (hi.powf(*p) - lo.powf(*p)) / p }),
            AlphaProfile::Log { gamma, .. } => {
                let (l_hi, l_lo) = (-lo.ln(), -hi.ln());
                Some(if *gamma == 1.0 {
                    (l_hi / l_lo).ln()
                } else {
                    (l_lo.powf(1.0 - gamma) - l_hi.powf(1.0 - gamma)) / (gamma - 1.0)
                })
            }
            AlphaProfile::Table { .. } => None,
        }
    }

    fn analytic_status(&self) -> Option<IntegralStatus> {
        match self {
            AlphaProfile::Power { .. } => Some(IntegralStatus::Convergent),
            AlphaProfile::Log { gamma, .. } => Some(if *gamma > 1.0 { IntegralStatus::Convergent } else { IntegralStatus::Divergent }),
            AlphaProfile::Table { .. } => None,
        }
    }

    /// `∫₀^r α(s)/s ds` without re-running the consistency check: closed form
    /// when available, otherwise dyadic quadrature plus tail estimate.
    pub fn integral(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Ok(0.0);
        }
        if let Some(v) = self.analytic_integral(r) {
            return if v.is_finite() { Ok(v) } else { Err(Error::Divergent) };
        }
        let q = dyadic_quadrature(self, r, &QuadratureConfig::default());
        match q.verdict {
            BlockVerdict::Convergent { tail } => Ok(q.partial + tail),
            BlockVerdict::Divergent => Err(Error::Divergent),
            BlockVerdict::Ambiguous { ratio } => Err(Error::Ambiguous { depth: q.blocks.len(), ratio }),
        }
    }
}

fn table_eval(points: &[(f64, f64)], s: f64) -> f64 {
    let (s0, a0) = points[0];
    if s < s0 {
        let (s1, a1) = points[1];
        if a0 == 0.0 {
            return 0.0;
        }
        let q = ((a1 / a0).ln() / (s1 / s0).ln()).max(0.0);
        return a0 * (s / s0).powf(q);
    }
    let last = points[points.len() - 1];
    if s >= last.0 {
        return last.1;
    }
    let i = points.partition_point(|p| p.0 <= s) - 1;
    let (x0, y0) = points[i];
    let (x1, y1) = points[i + 1];
    y0 + (y1 - y0) * (s - x0) / (x1 - x0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockVerdict {
    Convergent { tail: f64 },
    Divergent,
    Ambiguous { ratio: f64 },
}

/// Block contributions `c_k = ∫ α(s)/s ds` over `[r·2^{-k-1}, r·2^{-k}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicQuadrature {
    pub blocks: Vec<f64>,
    pub partial: f64,
    pub verdict: BlockVerdict,
}

fn block_integral(alpha: &AlphaProfile, t_lo: f64, t_hi: f64) -> f64 {
    // two Gauss–Legendre panels in t = ln s, integrand α(e^t)
    let mut sum = 0.0;
    let h = (t_hi - t_lo) / 2.0;
    for panel in 0..2 {
        let c = t_lo + h * (panel as f64 + 0.5);
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            sum += w * (alpha.eval((c + x * h / 2.0).exp()) + alpha.eval((c - x * h / 2.0).exp()));
        }
    }
    sum * h / 2.0
}

pub fn dyadic_quadrature(alpha: &AlphaProfile, r: f64, cfg: &QuadratureConfig) -> DyadicQuadrature {
    let ln2 = std::f64::consts::LN_2;
    let t0 = r.ln();
    let blocks: Vec<f64> = (0..cfg.depth)
        .map(|k| block_integral(alpha, t0 - (k + 1) as f64 * ln2, t0 - k as f64 * ln2))
        .collect();
    let partial = blocks.iter().rev().sum();
    let verdict = classify_blocks(&blocks, t0, cfg);
    DyadicQuadrature { blocks, partial, verdict }
}

fn classify_blocks(blocks: &[f64], t0: f64, cfg: &QuadratureConfig) -> BlockVerdict {
    let ln2 = std::f64::consts::LN_2;
    let n = blocks.len();
    let last = blocks[n - 1];
    if last == 0.0 {
        return BlockVerdict::Convergent { tail: 0.0 };
    }
    let start = n - cfg.window - 1;
    let ratios: Vec<f64> = (start..n - 1).map(|k| blocks[k + 1] / blocks[k]).collect();
    let r_start = ratios[0];
    let r_end = ratios[ratios.len() - 1];
    if ratios.iter().all(|&q| q >= cfg.diverge_ratio) {
        return BlockVerdict::Divergent;
    }
    // a steady ratio means geometric decay; a ratio creeping toward 1 means
    // an algebraic tail in |ln s|
    if (1.0 - r_end) / (1.0 - r_start) >= 0.9 {
        return if ratios.iter().all(|&q| q < cfg.converge_ratio) {
            BlockVerdict::Convergent { tail: last * r_end / (1.0 - r_end) }
        } else {
            BlockVerdict::Ambiguous { ratio: r_end }
        };
    }
    // algebraic tail in L = |ln s|: fit ln c_k = const − γ ln L_k
    let pts: Vec<(f64, f64)> = (start..n)
        .map(|k| ((-(t0 - (k as f64 + 0.5) * ln2)).abs().ln(), blocks[k].ln()))
        .collect();
    let (slope, _) = least_squares(&pts);
    let gamma = -slope;
    if gamma > 1.0 + cfg.pseries_margin {
        let l_last = (t0 - (n as f64 - 0.5) * ln2).abs();
        BlockVerdict::Convergent { tail: last * l_last / ((gamma - 1.0) * ln2) }
    } else if gamma <= 1.0 + cfg.pseries_tie {
        BlockVerdict::Divergent
    } else {
        BlockVerdict::Ambiguous { ratio: r_end }
    }
}

/// Least-squares line through `(x, y)` points: `(slope, intercept)`.
pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Relative agreement required between quadrature and closed forms.
pub const ANALYTIC_REL_TOL: f64 = 1e-6;

/// `∫₀^a α(s)/s ds` with a convergence verdict. For power and log profiles
/// the closed form decides; the quadrature's partial sum must match it and
/// its block verdict must not contradict it.
pub fn integral_alpha_over_s(alpha: &AlphaProfile, a: f64) -> Result<IntegralResult> {
    alpha.validate()?;
    if !(a > 0.0) || a > alpha.radius() * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!("integration radius {a} outside (0, {}]", alpha.radius())));
    }
    let cfg = QuadratureConfig::default();
    let q = dyadic_quadrature(alpha, a, &cfg);
    if let (Some(status), Some(exact_partial)) = (alpha.analytic_status(), alpha.analytic_partial(a * 0.5f64.powi(cfg.depth as i32), a)) {
        if (q.partial - exact_partial).abs() > ANALYTIC_REL_TOL * exact_partial.abs().max(1e-300) {
            return Err(Error::Internal(format!("quadrature {} disagrees with closed form {exact_partial}", q.partial)));
        }
        let contradicts = matches!(
            (status, q.verdict),
            (IntegralStatus::Convergent, BlockVerdict::Divergent) | (IntegralStatus::Divergent, BlockVerdict::Convergent { .. })
        );
        if contradicts {
            return Err(Error::Internal(format!("block classifier verdict {:?} contradicts closed form {status:?}", q.verdict)));
        }
        let value = alpha.analytic_integral(a).expect("closed form");
        return Ok(IntegralResult { value, status });
    }
    match q.verdict {
        BlockVerdict::Convergent { tail } => Ok(IntegralResult { value: q.partial + tail, status: IntegralStatus::Convergent }),
        BlockVerdict::Divergent => Ok(IntegralResult { value: f64::INFINITY, status: IntegralStatus::Divergent }),
        BlockVerdict::Ambiguous { ratio } => Err(Error::Ambiguous { depth: cfg.depth, ratio }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_one_on_unit_interval() {
        let r = integral_alpha_over_s(&AlphaProfile::power(1.0, 1.0), 1.0).unwrap();
        assert_eq!(r.status, IntegralStatus::Convergent);
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_two_at_inverse_e() {
        let r = integral_alpha_over_s(&AlphaProfile::log(2.0), (-1f64).exp()).unwrap();
        assert_eq!(r.status, IntegralStatus::Convergent);
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_one_diverges() {
        for a in [0.5, 0.1, 1e-3] {
            let al = AlphaProfile::Log { gamma: 1.0, a };
            let r = integral_alpha_over_s(&al, a).unwrap();
            assert_eq!(r.status, IntegralStatus::Divergent);
            assert!(r.value.is_infinite());
            assert_eq!(al.integral(a), Err(Error::Divergent));
        }
    }

    #[test]
    fn block_classifier_alone_matches_closed_forms() {
        let cfg = QuadratureConfig::default();
        let cases = [
            (AlphaProfile::power(1.0, 1.0), true),
            (AlphaProfile::power(2.0, 0.5), true),
            (AlphaProfile::log(1.5), true),
            (AlphaProfile::log(2.0), true),
            (AlphaProfile::log(3.0), true),
            (AlphaProfile::log(1.0), false),
            (AlphaProfile::log(0.5), false),
        ];
        for (al, convergent) in cases {
            let q = dyadic_quadrature(&al, al.radius(), &cfg);
            match q.verdict {
                BlockVerdict::Convergent { .. } => assert!(convergent, "{al:?}"),
                BlockVerdict::Divergent => assert!(!convergent, "{al:?}"),
                BlockVerdict::Ambiguous { .. } => panic!("{al:?} ambiguous"),
            }
        }
    }

    #[test]
    fn quadrature_matches_closed_form_partials() {
        for al in [AlphaProfile::power(1.0, 0.5), AlphaProfile::power(3.0, 2.0), AlphaProfile::log(1.5), AlphaProfile::log(1.0)] {
            for r in [al.radius(), 0.1, 1e-3] {
                let q = dyadic_quadrature(&al, r, &QuadratureConfig::default());
                let exact = al.analytic_partial(r * 0.5f64.powi(200), r).unwrap();
                assert!((q.partial - exact).abs() <= 1e-6 * exact, "{al:?} r={r}: {} vs {exact}", q.partial);
            }
        }
    }

    #[test]
    fn table_profiles() {
        // samples of s^{1/2}: power-law extension, geometric blocks
        let pts: Vec<(f64, f64)> = (0..20).map(|k| {
            let s = 2f64.powi(-k);
            (s, s.sqrt())
        }).rev().collect();
        let al = AlphaProfile::Table { points: pts, a: 1.0 };
        al.validate().unwrap();
        let r = integral_alpha_over_s(&al, 1.0).unwrap();
        assert_eq!(r.status, IntegralStatus::Convergent);
        // chords lie below the concave s^{1/2}, so the value sits just under 2
        assert!(r.value < 2.0 && r.value > 1.97, "{}", r.value);

        // flat below the first point: divergent
        let flat = AlphaProfile::Table { points: vec![(0.1, 0.2), (0.5, 0.2)], a: 0.5 };
        assert_eq!(integral_alpha_over_s(&flat, 0.5).unwrap().status, IntegralStatus::Divergent);

        // vanishing below the first point: convergent with finite value
        let cut = AlphaProfile::Table { points: vec![(0.1, 0.0), (0.5, 0.4)], a: 0.5 };
        assert_eq!(integral_alpha_over_s(&cut, 0.5).unwrap().status, IntegralStatus::Convergent);

        // a very slow power law is neither settled nor divergent
        let slow = AlphaProfile::Table { points: vec![(0.5, 0.5), (1.0, 0.5 * 2f64.powf(3e-4))], a: 1.0 };
        assert!(matches!(integral_alpha_over_s(&slow, 1.0), Err(Error::Ambiguous { .. })));
    }

    #[test]
    fn validation() {
        assert!(AlphaProfile::Log { gamma: 2.0, a: 1.0 }.validate().is_err());
        assert!(AlphaProfile::power(1.0, 0.0).validate().is_err());
        assert!(AlphaProfile::zero().validate().is_ok());
        assert!(AlphaProfile::Table { points: vec![(0.1, 0.5), (0.2, 0.1)], a: 1.0 }.validate().is_err());
        assert!(integral_alpha_over_s(&AlphaProfile::log(2.0), 0.5).is_err());
    }

    #[test]
    fn zero_profile_integral() {
        let r = integral_alpha_over_s(&AlphaProfile::zero(), 1.0).unwrap();
        assert_eq!((r.value, r.status), (0.0, IntegralStatus::Convergent));
    }

    #[test]
    fn json_keys() {
        let al: AlphaProfile = serde_json::from_str(r#"{"kind":"log","gamma":2}"#).unwrap();
        assert_eq!(al, AlphaProfile::log(2.0));
        let al: AlphaProfile = serde_json::from_str(r#"{"kind":"power","b":1,"p":0.5}"#).unwrap();
        assert_eq!(al, AlphaProfile::power(1.0, 0.5));
        assert!(serde_json::from_str::<AlphaProfile>(r#"{"kind":"log","gamma":2,"extra":1}"#).is_err());
    }
}
