//! Linear operators that appear as linearizations: weighted right shifts on
//! sequences and diagonal (multiplication) operators, with their spectral
//! radii, approximate eigenvectors and threshold spectral splittings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{GridFunction1D, SeqVector};

/// Relative agreement required between the two evaluations of `|(MS)ⁿe₀|`.
pub const POWER_NORM_REL_TOL: f64 = 1e-12;

/// Weights `m_k` of the multiplication operator `M` in `L = MS`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSeq {
    /// `m_k = 1 + 1/ln(k + 2)`.
    LogSpecial,
    Constant { c: f64 },
    /// `m_0, m_1, ...`; the last entry repeats forever.
    Table { values: Vec<f64> },
}

impl WeightSeq {
    pub fn m(&self, k: usize) -> f64 {
        match self {
            WeightSeq::LogSpecial => 1.0 + 1.0 / ((k + 2) as f64).ln(),
            WeightSeq::Constant { c } => *c,
            WeightSeq::Table { values } => values[k.min(values.len() - 1)],
        }
    }

    /// `Σ_{1≤k≤n} ln m_k`.
    pub fn log_product(&self, n: usize) -> f64 {
        (1..=n).map(|k| self.m(k).ln()).sum()
    }

    /// Checks the structural assumptions on the first `probe` weights:
    /// positive, finite, nonincreasing from `k = 1` on, and `m_1 ≤ 2`.
    pub fn validate(&self, probe: usize) -> Result<()> {
        if let WeightSeq::Table { values } = self {
            if values.is_empty() {
                return Err(Error::InvalidParameter("weight table is empty".into()));
            }
        }
        for k in 0..=probe.max(2) {
            let m = self.m(k);
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::InvalidParameter(format!("weight m_{k} = {m} must be positive and finite")));
            }
            if k >= 2 && m > self.m(k - 1) {
                return Err(Error::InvalidParameter(format!("weights must be nonincreasing: m_{k} > m_{}", k - 1)));
            }
        }
        if self.m(1) > 2.0 {
            return Err(Error::InvalidParameter(format!("m_1 = {} exceeds 2", self.m(1))));
        }
        Ok(())
    }
}

/// `L = M S`: right shift followed by multiplication with `(m_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedShift {
    pub weights: WeightSeq,
}

impl WeightedShift {
    pub fn new(weights: WeightSeq) -> Result<Self> {
        weights.validate(64)?;
        Ok(WeightedShift { weights })
    }

    /// `result[k] = m_k · u[k-1]`, `result[0] = 0`.
    pub fn apply(&self, u: &SeqVector) -> Result<SeqVector> {
        let n = u.len();
        let vals = u.values();
        if vals[n - 1] != 0.0 {
            return Err(Error::Overflow { index: n - 1, len: n });
        }
        let mut out = vec![0.0; n];
        let Some(first) = vals.iter().position(|&x| x != 0.0) else {
            return Ok(SeqVector::from_raw(out));
        };
        let last = vals.iter().rposition(|&x| x != 0.0).unwrap_or(first);
        for k in first + 1..=last + 1 {
            let prev = vals[k - 1];
            if prev != 0.0 {
                out[k] = self.weights.m(k) * prev;
            }
        }
        Ok(SeqVector::from_raw(out))
    }

    /// `ln |(MS)ⁿ e₀|` by iterating the operator on `e₀` with per-step
    /// renormalization, cross-checked against `Σ ln m_k`.
    pub fn log_power_norm_on_e0(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Ok(0.0);
        }
        let mut u = SeqVector::basis(n + 2, 0)?;
        let mut log_scale = 0.0;
        for _ in 0..n {
            u = self.apply(&u)?;
            let s = u.l2();
            log_scale += s.ln();
            u = u.scale(1.0 / s);
        }
        let direct = self.weights.log_product(n);
        // |e^a - e^b| / e^b ≈ |a - b|
        if (log_scale - direct).abs() > POWER_NORM_REL_TOL * direct.abs().max(1.0) {
            return Err(Error::Internal(format!(
                "iterated and product evaluations of |(MS)^{n} e0| disagree: ln {log_scale} vs ln {direct}"
            )));
        }
        Ok(direct)
    }

    /// `|(MS)ⁿ e₀| = ∏_{1≤k≤n} m_k`, computed both by iteration and as a
    /// direct product. May be `inf` when the product exceeds the `f64` range.
    pub fn power_norm_on_e0(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Ok(1.0);
        }
        let log = self.log_power_norm_on_e0(n)?;
        let product: f64 = (1..=n).map(|k| self.weights.m(k)).product();
        if product.is_finite() && (product - log.exp()).abs() > 1e-10 * product {
            return Err(Error::Internal(format!("product {product} vs exp(log) {}", log.exp())));
        }
        Ok(product)
    }

    /// Gelfand estimate `|(MS)ⁿ e₀|^{1/n}`.
    pub fn spectral_radius_estimate(&self, n: usize) -> Result<RadiusEstimate> {
        if n == 0 {
            return Err(Error::InvalidParameter("Gelfand estimate needs n ≥ 1".into()));
        }
        let log = self.log_power_norm_on_e0(n)?;
        Ok(RadiusEstimate { value: (log / n as f64).exp(), status: RadiusStatus::Estimate })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusStatus {
    Exact,
    Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusEstimate {
    pub value: f64,
    pub status: RadiusStatus,
}

/// Multiplication operator `u ↦ (λ_k u_k)`. Complex spectra are stored by
/// modulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalOperator {
    weights: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("diagonal operator needs at least one weight".into()));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(DiagonalOperator { weights })
    }

    /// `n` equispaced samples of `[lo, hi]`, endpoints included.
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Self::new(vec![hi; n]);
        }
        let w = (0..n)
            .map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
            .collect();
        Self::new(w)
    }

    /// Samples a multiplier function at the nodes of a grid.
    pub fn sample(g: &GridFunction1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..g.n()).map(|k| f(g.x(k))).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn apply(&self, u: &SeqVector) -> Result<SeqVector> {
        if u.len() != self.dim() {
            return Err(Error::InvalidParameter(format!(
                "operator of dimension {} applied to length-{} state",
                self.dim(),
                u.len()
            )));
        }
        Ok(SeqVector::from_raw(u.values().iter().zip(&self.weights).map(|(x, l)| l * x).collect()))
    }

    /// Pointwise multiplication of a grid function by the sampled weights.
    pub fn apply_grid(&self, u: &GridFunction1D) -> Result<GridFunction1D> {
        if u.n() != self.dim() {
            return Err(Error::InvalidParameter("grid size does not match operator dimension".into()));
        }
        u.with_values(u.values().iter().zip(&self.weights).map(|(x, l)| l * x).collect())
    }

    /// `max_k |λ_k|`, exact for multiplication operators.
    pub fn spectral_radius(&self) -> RadiusEstimate {
        RadiusEstimate {
            value: self.weights.iter().fold(0.0, |m, w| m.max(w.abs())),
            status: RadiusStatus::Exact,
        }
    }

    /// Index of the first weight of maximal modulus.
    pub fn argmax(&self) -> usize {
        let r = self.spectral_radius().value;
        self.weights.iter().position(|w| w.abs() == r).expect("nonempty")
    }

    pub fn restrict(&self, indices: &[usize]) -> Result<DiagonalOperator> {
        Self::new(indices.iter().map(|&i| self.weights[i]).collect())
    }
}

/// Basis index realizing the spectral radius; `e_k` is an exact eigenvector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxEigen {
    pub index: usize,
    pub lambda: f64,
    pub nu: f64,
    /// `|(L - λ)e_k|`, zero for diagonal operators.
    pub defect: f64,
}

pub fn approx_eigenvector(op: &DiagonalOperator, nu: f64) -> Result<ApproxEigen> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter(format!("nu must be positive, got {nu}")));
    }
    let index = op.argmax();
    let lambda = op.weights[index];
    let e = SeqVector::basis(op.dim(), index)?;
    let defect = op.apply(&e)?.sub(&e.scale(lambda))?.l2();
    Ok(ApproxEigen { index, lambda, nu, defect })
}

/// Unit vector spread uniformly over every index with `|λ_j - λ| ≤ ν`, where
/// `λ` is a weight of maximal modulus. Its defect `|(L - λ)v|` is at most `ν`
/// and is generally nonzero.
pub fn spread_approx_eigenvector(op: &DiagonalOperator, nu: f64) -> Result<(SeqVector, f64)> {
    let ApproxEigen { lambda, .. } = approx_eigenvector(op, nu)?;
    let support: Vec<usize> = (0..op.dim()).filter(|&j| (op.weights[j] - lambda).abs() <= nu).collect();
    let c = 1.0 / (support.len() as f64).sqrt();
    let mut v = vec![0.0; op.dim()];
    for &j in &support {
        v[j] = c;
    }
    Ok((SeqVector::new(v)?, lambda))
}

/// Worst slack of `|(Lⁿ - λⁿ)v| ≤ ν·n·r(L)^{n-1}` over `1 ≤ n ≤ n_max`,
/// together with the `n` at which it occurs.
pub fn factorization_slack(op: &DiagonalOperator, v: &SeqVector, lambda: f64, nu: f64, n_max: usize) -> Result<(f64, usize)> {
    let r = op.spectral_radius().value;
    let mut ln_v = v.clone();
    let mut lambda_n = 1.0;
    let mut r_pow = 1.0; // r^{n-1}
    let mut worst = (f64::INFINITY, 0);
    for n in 1..=n_max {
        ln_v = op.apply(&ln_v)?;
        lambda_n *= lambda;
        let lhs = ln_v.sub(&v.scale(lambda_n))?.l2();
        let rhs = nu * n as f64 * r_pow;
        let slack = rhs - lhs;
        if slack < worst.0 {
            worst = (slack, n);
        }
        r_pow *= r;
    }
    Ok(worst)
}

/// Partition of the diagonal indices by `|λ_k| ≥ ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSplit {
    pub rho: f64,
    pub hi_indices: Vec<usize>,
    pub lo_indices: Vec<usize>,
}

pub fn spectral_split(op: &DiagonalOperator, rho: f64) -> Result<SpectralSplit> {
    if !(rho > 1.0) {
        return Err(Error::InvalidParameter(format!("split threshold must exceed 1, got {rho}")));
    }
    let (hi, lo): (Vec<usize>, Vec<usize>) = (0..op.dim()).partition(|&k| op.weights[k].abs() >= rho);
    if hi.is_empty() {
        return Err(Error::EmptyUnstable { rho, radius: op.spectral_radius().value });
    }
    Ok(SpectralSplit { rho, hi_indices: hi, lo_indices: lo })
}

impl SpectralSplit {
    /// Restrictions `(L₁, L₂)` of `op` to the two index sets. `L₂` is `None`
    /// when every index is unstable.
    pub fn restrictions(&self, op: &DiagonalOperator) -> Result<(DiagonalOperator, Option<DiagonalOperator>)> {
        let l1 = op.restrict(&self.hi_indices)?;
        let l2 = if self.lo_indices.is_empty() { None } else { Some(op.restrict(&self.lo_indices)?) };
        Ok((l1, l2))
    }

    /// Orthogonal projections `(P₁u, P₂u)` in the coordinates of each block.
    pub fn project(&self, u: &SeqVector) -> (Vec<f64>, Vec<f64>) {
        let v = self.hi_indices.iter().map(|&i| u.values()[i]).collect();
        let w = self.lo_indices.iter().map(|&i| u.values()[i]).collect();
        (v, w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn log_shift() -> WeightedShift {
        WeightedShift::new(WeightSeq::LogSpecial).unwrap()
    }

    #[test]
    fn shift_of_e0() {
        let op = log_shift();
        let e0 = SeqVector::basis(4, 0).unwrap();
        let out = op.apply(&e0).unwrap();
        assert_eq!(out.values(), &[0.0, 1.0 + 1.0 / 3f64.ln(), 0.0, 0.0]);
        assert!(op.apply(&SeqVector::zeros(4).unwrap()).unwrap().is_zero());
    }

    #[test]
    fn shift_overflow_is_an_error() {
        let u = SeqVector::basis(3, 2).unwrap();
        assert_eq!(log_shift().apply(&u), Err(Error::Overflow { index: 2, len: 3 }));
    }

    #[test]
    fn power_norm_small_n() {
        let op = log_shift();
        assert_eq!(op.power_norm_on_e0(0).unwrap(), 1.0);
        let m1 = 1.0 + 1.0 / 3f64.ln();
        assert!((op.power_norm_on_e0(1).unwrap() - m1).abs() < 1e-15);
        assert!((m1 - 1.910_239_226_626_837).abs() < 1e-12);
    }

    #[test]
    fn power_norm_dominates_closed_form_lower_bound() {
        let op = log_shift();
        let n = 1000usize;
        let lower = ((n + 3) as f64 / (2.0 * ((n + 3) as f64).ln()) - 3.0 / (2.0 * 3f64.ln())).exp();
        assert!(op.power_norm_on_e0(n).unwrap() >= lower);
    }

    #[test]
    fn gelfand_estimate_at_ten_thousand() {
        // ∏ m_k over k ≤ 10⁴ decays to 1 only logarithmically; the value is
        // frozen here, and the estimate must keep shrinking with n.
        let op = log_shift();
        let e = op.spectral_radius_estimate(10_000).unwrap();
        assert_eq!(e.status, RadiusStatus::Estimate);
        assert!((e.value - 1.124_212_870_1).abs() < 1e-9, "{}", e.value);
        assert!(op.spectral_radius_estimate(20_000).unwrap().value < e.value);
        assert!(op.power_norm_on_e0(10_000).unwrap().is_infinite());
    }

    #[test]
    fn weight_validation() {
        assert!(WeightSeq::Constant { c: 2.5 }.validate(8).is_err());
        assert!(WeightSeq::Table { values: vec![2.0, 1.5, 1.7] }.validate(8).is_err());
        assert!(WeightSeq::Table { values: vec![] }.validate(8).is_err());
        assert!(WeightSeq::LogSpecial.validate(10_000).is_ok());
        assert!(WeightSeq::Constant { c: 1.0 }.validate(8).is_ok());
    }

    #[test]
    fn log_special_weights_decrease_toward_one() {
        let w = WeightSeq::LogSpecial;
        let gaps: Vec<f64> = [10, 100, 1000, 10_000, 100_000].iter().map(|&k| w.m(k) - 1.0).collect();
        assert!(gaps.windows(2).all(|p| p[1] < p[0] && p[1] > 0.0));
    }

    #[test]
    fn diagonal_radius_examples() {
        let chi = |x: f64| if x.abs() < 1.0 { 2.0 * (1.0 - 1.0 / (1.0 - x * x)).exp() } else { 0.0 };
        let g = GridFunction1D::zeros(-2.0, 2.0, 401).unwrap();
        let op = DiagonalOperator::sample(&g, chi).unwrap();
        assert_eq!(op.spectral_radius().value, 2.0);
        assert_eq!(op.spectral_radius().status, RadiusStatus::Exact);
        assert_eq!(DiagonalOperator::new(vec![0.0; 5]).unwrap().spectral_radius().value, 0.0);
    }

    #[test]
    fn approx_eigen_examples() {
        let op = DiagonalOperator::linspace(0.0, 2.0, 1001).unwrap();
        let e = approx_eigenvector(&op, 0.1).unwrap();
        assert_eq!((e.index, e.lambda, e.defect), (1000, 2.0, 0.0));
        let single = DiagonalOperator::new(vec![1.7]).unwrap();
        let e = approx_eigenvector(&single, 1e-3).unwrap();
        assert_eq!((e.index, e.lambda), (0, 1.7));
        assert!(approx_eigenvector(&op, 0.0).is_err());
    }

    #[test]
    fn factorization_bound_holds_for_spread_vectors() {
        let op = DiagonalOperator::linspace(0.0, 2.0, 1001).unwrap();
        for nu in [0.5, 0.05, 0.01] {
            let (v, lambda) = spread_approx_eigenvector(&op, nu).unwrap();
            let defect = op.apply(&v).unwrap().sub(&v.scale(lambda)).unwrap().l2();
            assert!(defect <= nu);
            assert!(defect > 0.0);
            let (slack, _) = factorization_slack(&op, &v, lambda, nu, 100).unwrap();
            assert!(slack >= 0.0, "nu = {nu}: slack {slack}");
        }
        let e = approx_eigenvector(&op, 0.01).unwrap();
        let v = SeqVector::basis(op.dim(), e.index).unwrap();
        assert!(factorization_slack(&op, &v, e.lambda, 0.01, 100).unwrap().0 >= 0.0);
    }

    #[test]
    fn split_examples() {
        let op = DiagonalOperator::new(vec![0.5, 1.5, 2.0]).unwrap();
        let s = spectral_split(&op, 1.2).unwrap();
        assert_eq!((s.hi_indices.clone(), s.lo_indices.clone()), (vec![1, 2], vec![0]));
        assert!(matches!(spectral_split(&op, 2.5), Err(Error::EmptyUnstable { .. })));
        let at_radius = spectral_split(&op, 2.0).unwrap();
        assert!(at_radius.hi_indices.contains(&op.argmax()));
        assert!(spectral_split(&op, 1.0).is_err());
    }

    #[test]
    fn split_restrictions_satisfy_threshold_bounds() {
        let op = DiagonalOperator::linspace(0.0, 2.0, 1000).unwrap();
        let s = spectral_split(&op, 1.5).unwrap();
        let (l1, l2) = s.restrictions(&op).unwrap();
        let l2 = l2.unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
        for _ in 0..1000 {
            let v = SeqVector::new((0..l1.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let w = SeqVector::new((0..l2.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            assert!(l1.apply(&v).unwrap().l2() >= 1.5 * v.l2());
            assert!(l2.apply(&w).unwrap().l2() <= 1.5 * w.l2());
        }
    }

    #[test]
    fn operator_norm_matches_radius() {
        let op = DiagonalOperator::linspace(-0.3, 2.0, 200).unwrap();
        let r = op.spectral_radius().value;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut best: f64 = 0.0;
        for _ in 0..1000 {
            let u = SeqVector::new((0..op.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            best = best.max(op.apply(&u).unwrap().l2() / u.l2());
        }
        assert!(best <= r + 1e-10);
        let e = SeqVector::basis(op.dim(), op.argmax()).unwrap();
        assert!((op.apply(&e).unwrap().l2() - r).abs() < 1e-6);
    }

    #[test]
    fn json_shape() {
        let op = DiagonalOperator::new(vec![0.5, 2.0]).unwrap();
        assert_eq!(serde_json::to_string(&op).unwrap(), r#"{"weights":[0.5,2.0]}"#);
        let w: WeightSeq = serde_json::from_str(r#"{"kind":"log_special"}"#).unwrap();
        assert_eq!(w, WeightSeq::LogSpecial);
        let w: WeightSeq = serde_json::from_str(r#"{"kind":"constant","c":1.5}"#).unwrap();
        assert_eq!(w, WeightSeq::Constant { c: 1.5 });
    }
}
