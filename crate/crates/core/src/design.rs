//! Optimal product design: orientation and intensity of attribute loadings.
//!
//! Loadings are measured in scaled coordinates `r̂_k = √γ_k r_k`, in which a design is
//! `r̂ = t d` with intensity `t ≥ 0` and unit orientation `d`. A design costs
//! `½ c t²`, so the scaled taste vector `b̂_k = b_k/√γ_k` and its squared norm
//! `B̂ = Σ b_k²/γ_k` drive every closed form below.

use nalgebra::{DVector, Matrix2, Vector2};

use crate::error::{ModelError, Result};
use crate::pricing::PriceEquilibrium;
use crate::scalar::{lit, to_f64, Real};
use crate::search::bisect;

/// A design together with its exact net profit.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSolution<T: Real> {
    /// Unit orientation in scaled coordinates (zero vector when `t = 0` and no tastes).
    pub orientation: DVector<T>,
    pub intensity: T,
    /// Raw loadings `r_k = t d_k / √γ_k`.
    pub loadings: DVector<T>,
    /// Distribution of the attribute bundle over goods, when relevant.
    pub allocation: Option<DVector<T>>,
    /// Gross profit minus attribute cost.
    pub net_profit: T,
}

fn check_common<T: Real>(b: &DVector<T>, gamma: &DVector<T>) -> Result<()> {
    if b.len() != gamma.len() {
        return Err(ModelError::Dimension {
            what: "attribute weights vs curvature weights",
            expected: b.len(),
            got: gamma.len(),
        });
    }
    if gamma.iter().any(|g| !(*g > T::zero())) {
        return Err(ModelError::invalid("gamma", "all weights must be positive"));
    }
    Ok(())
}

fn check_market<T: Real>(c: T, phi: T) -> Result<()> {
    if !(c > T::zero()) {
        return Err(ModelError::invalid("attr_cost", "c must be positive"));
    }
    if !(phi < T::zero()) {
        return Err(ModelError::invalid("price_sensitivity", "φ must be negative"));
    }
    Ok(())
}

/// `B̂ = Σ_k b_k²/γ_k`.
pub fn effective_taste<T: Real>(b: &DVector<T>, gamma: &DVector<T>) -> T {
    b.iter().zip(gamma.iter()).fold(T::zero(), |acc, (bk, gk)| acc + *bk * *bk / *gk)
}

/// `Γ^{-3/2} b` normalized, signed so that `b'd ≥ 0`.
pub fn orientation_rule<T: Real>(b: &DVector<T>, gamma: &DVector<T>) -> Result<DVector<T>> {
    check_common(b, gamma)?;
    let raw = DVector::from_iterator(b.len(), b.iter().zip(gamma.iter()).map(|(bk, gk)| *bk / (*gk * gk.sqrt())));
    let norm = raw.norm();
    if !(norm > T::zero()) {
        return Err(ModelError::invalid("b", "attribute weights must not all be zero"));
    }
    let d = raw / norm;
    Ok(if b.dot(&d) < T::zero() { -d } else { d })
}

/// Threshold cost `−B̂/(2φ)` at or above which no design is worthwhile.
pub fn viability_threshold<T: Real>(bhat_sq: T, phi: T) -> T {
    -bhat_sq / (phi + phi)
}

/// Monopoly intensity for a given effective taste `B̂`.
pub fn intensity_from_taste<T: Real>(bhat_sq: T, c: T, phi: T) -> T {
    if c >= viability_threshold(bhat_sq, phi) {
        return T::zero();
    }
    let u = (-bhat_sq / (lit::<T>(2.0) * c * phi)).sqrt() - T::one();
    u.max(T::zero()).sqrt()
}

/// Monopoly intensity `t* = √max{0, √(−B̂/(2cφ)) − 1}`.
pub fn monopoly_intensity<T: Real>(b: &DVector<T>, gamma: &DVector<T>, c: T, phi: T) -> Result<T> {
    check_common(b, gamma)?;
    check_market(c, phi)?;
    Ok(intensity_from_taste(effective_taste(b, gamma), c, phi))
}

/// Exact monopoly net profit of intensity `t` when the orientation achieves
/// `(b̂'d)² = aligned_sq`: `−(1/4φ) t² aligned_sq/(1+t²) − ½ c t²`.
pub fn monopoly_net_profit<T: Real>(t: T, aligned_sq: T, c: T, phi: T) -> T {
    let u = t * t;
    -u * aligned_sq / (lit::<T>(4.0) * phi * (T::one() + u)) - lit::<T>(0.5) * c * u
}

/// Optimal length of a single attribute column under cost `½ c ‖s‖²`:
/// `√((√(−b²/(2cφ)) − 1)/γ)`, zero when `c ≥ −b²/(2φ)`.
pub fn one_attribute_norm<T: Real>(b: T, gamma: T, c: T, phi: T) -> Result<T> {
    check_market(c, phi)?;
    if !(gamma > T::zero()) {
        return Err(ModelError::invalid("gamma", "must be positive"));
    }
    let b2 = b * b;
    if c >= viability_threshold(b2, phi) {
        return Ok(T::zero());
    }
    Ok((((-b2 / (lit::<T>(2.0) * c * phi)).sqrt() - T::one()) / gamma).max(T::zero()).sqrt())
}

/// Net profit of a single attribute column of squared length `u` (cost `½ c u`).
pub fn one_attribute_net_profit<T: Real>(u: T, b: T, gamma: T, c: T, phi: T) -> T {
    -b * b * u / (lit::<T>(4.0) * phi * (T::one() + gamma * u)) - lit::<T>(0.5) * c * u
}

/// Monopoly design: orientation rule, closed-form intensity, and the realized net profit.
pub fn monopoly_design<T: Real>(b: &DVector<T>, gamma: &DVector<T>, c: T, phi: T) -> Result<DesignSolution<T>> {
    let t = monopoly_intensity(b, gamma, c, phi)?;
    let d = orientation_rule(b, gamma)?;
    Ok(solution_from(b, gamma, d, t, c, phi))
}

fn solution_from<T: Real>(b: &DVector<T>, gamma: &DVector<T>, d: DVector<T>, t: T, c: T, phi: T) -> DesignSolution<T> {
    let loadings = DVector::from_iterator(d.len(), d.iter().zip(gamma.iter()).map(|(dk, gk)| t * *dk / gk.sqrt()));
    let aligned = b.dot(&loadings);
    let u = t * t;
    let gross = -aligned * aligned / (lit::<T>(4.0) * phi * (T::one() + u));
    DesignSolution {
        orientation: d,
        intensity: t,
        loadings,
        allocation: None,
        net_profit: gross - lit::<T>(0.5) * c * u,
    }
}

/// Reduced parallel-attribute monopoly profit `−(1/4φ)(b'r)²/(1 + r'Γr)`.
pub fn monopoly_aligned_profit<T: Real>(b: &DVector<T>, gamma: &DVector<T>, r: &DVector<T>, phi: T) -> Result<T> {
    check_common(b, gamma)?;
    if r.len() != b.len() {
        return Err(ModelError::Dimension {
            what: "loadings",
            expected: b.len(),
            got: r.len(),
        });
    }
    let br = b.dot(r);
    let quad = r.iter().zip(gamma.iter()).fold(T::zero(), |acc, (rk, gk)| acc + *gk * *rk * *rk);
    Ok(-br * br / (lit::<T>(4.0) * phi * (T::one() + quad)))
}

/// Geometry of one attribute pair: tastes, curvature weights, squared column norms
/// `d = ‖s_i‖²`, `f = ‖s_j‖²` and the inner product `s_i's_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributePair<T: Real> {
    pub b_i: T,
    pub b_j: T,
    pub gamma_i: T,
    pub gamma_j: T,
    pub d: T,
    pub f: T,
    pub inner: T,
}

impl<T: Real> AttributePair<T> {
    fn validate(&self) -> Result<()> {
        if !(self.gamma_i > T::zero() && self.gamma_j > T::zero()) {
            return Err(ModelError::invalid("gamma", "pair weights must be positive"));
        }
        if !(self.d >= T::zero() && self.f >= T::zero()) {
            return Err(ModelError::invalid("norms", "squared norms must be non-negative"));
        }
        let bound = (self.d * self.f).sqrt();
        let slack = lit::<T>(1e-12) * bound.max(T::one());
        if self.inner < T::zero() || self.inner > bound + slack {
            return Err(ModelError::CauchySchwarz {
                inner: to_f64(self.inner),
                bound: to_f64(bound),
            });
        }
        Ok(())
    }

    /// `A = Γ⁻¹ + S'S` restricted to the pair.
    pub fn block(&self) -> Matrix2<T> {
        Matrix2::new(
            T::one() / self.gamma_i + self.d,
            self.inner,
            self.inner,
            T::one() / self.gamma_j + self.f,
        )
    }

    pub fn with_inner(self, inner: T) -> Self {
        Self { inner, ..self }
    }

    /// `A⁻¹ Γ⁻¹ b` for the pair.
    fn weighted_solution(&self) -> (Vector2<T>, Vector2<T>) {
        let a = self.block();
        let det = a[(0, 0)] * a[(1, 1)] - self.inner * self.inner;
        let w = Vector2::new(self.b_i / self.gamma_i, self.b_j / self.gamma_j);
        let x = Vector2::new(
            (a[(1, 1)] * w[0] - self.inner * w[1]) / det,
            (a[(0, 0)] * w[1] - self.inner * w[0]) / det,
        );
        (w, x)
    }
}

/// Pair contribution to monopoly profit, `−(1/4φ)[b'Γ⁻¹b − w'A⁻¹w]` with `w = Γ⁻¹b`.
pub fn pairwise_profit<T: Real>(pair: &AttributePair<T>, phi: T) -> Result<T> {
    pair.validate()?;
    let (w, x) = pair.weighted_solution();
    let base = pair.b_i * w[0] + pair.b_j * w[1];
    Ok(-(base - w.dot(&x)) / (lit::<T>(4.0) * phi))
}

/// Analytic derivative of [`pairwise_profit`] with respect to `s_i's_j`:
/// `−(1/4φ) · 2 x_i x_j` with `x = A⁻¹Γ⁻¹b`.
pub fn alignment_gradient<T: Real>(pair: &AttributePair<T>, phi: T) -> Result<T> {
    pair.validate()?;
    let (_, x) = pair.weighted_solution();
    Ok(-lit::<T>(2.0) * x[0] * x[1] / (lit::<T>(4.0) * phi))
}

/// The typeset closed-form expansion of the pair profit, evaluated verbatim.
///
/// It does not agree with the block-inverse value; [`pairwise_diagnostic`] reports the gap.
pub fn typeset_pairwise_expression<T: Real>(pair: &AttributePair<T>) -> T {
    let AttributePair {
        b_i,
        b_j,
        gamma_i: gi,
        gamma_j: gj,
        d,
        f,
        inner,
    } = *pair;
    let one = T::one();
    let delta = (one / gi + d) * (one / gj + f) - inner * inner;
    let num = b_i * b_i * (f / gi + d * (one / gi + one))
        + b_j * b_j * (d / gj + f * (one / gj + one))
        + lit::<T>(2.0) * b_i * b_j * (one / gi + one / gj + one) * inner
        + (b_i * gj + b_j * gi) * inner * inner;
    num / delta
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseDiagnostic<T: Real> {
    pub block_form: T,
    pub typeset_form: T,
    pub deviation: T,
}

pub fn pairwise_diagnostic<T: Real>(pair: &AttributePair<T>, phi: T) -> Result<PairwiseDiagnostic<T>> {
    let block_form = pairwise_profit(pair, phi)?;
    let typeset_form = typeset_pairwise_expression(pair);
    Ok(PairwiseDiagnostic {
        block_form,
        typeset_form,
        deviation: (block_form - typeset_form).abs(),
    })
}

/// Assignment of each attribute to the single firm that loads on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExclusivityPartition {
    owner: Vec<usize>,
    n_firms: usize,
}

impl ExclusivityPartition {
    pub fn new(owner: Vec<usize>, n_firms: usize) -> Result<Self> {
        if n_firms == 0 {
            return Err(ModelError::invalid("n_firms", "need at least one firm"));
        }
        if let Some(&bad) = owner.iter().find(|&&o| o >= n_firms) {
            return Err(ModelError::invalid("owner", format!("firm index {bad} out of range for {n_firms} firms")));
        }
        Ok(Self { owner, n_firms })
    }

    /// Attribute `k` owned by firm `k` for `n` firms and `n` attributes.
    pub fn one_each(n: usize) -> Result<Self> {
        Self::new((0..n).collect(), n)
    }

    pub fn n_firms(&self) -> usize {
        self.n_firms
    }

    pub fn owner(&self) -> &[usize] {
        &self.owner
    }

    pub fn attributes_of(&self, firm: usize) -> Vec<usize> {
        (0..self.owner.len()).filter(|&k| self.owner[k] == firm).collect()
    }
}

/// Per-firm designs under attribute exclusivity and the induced price equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct ExclusivityOutcome<T: Real> {
    /// Designs over each firm's own attributes (orientation and loadings are length `|𝒜_n|`).
    pub designs: Vec<DesignSolution<T>>,
    pub prices: PriceEquilibrium<T>,
}

/// Exclusivity equilibrium: Σ is diagonal, so each firm solves its own monopoly
/// problem on the attributes it owns.
pub fn exclusivity_equilibrium<T: Real>(
    partition: &ExclusivityPartition,
    b: &DVector<T>,
    gamma: &DVector<T>,
    c: T,
    phi: T,
) -> Result<ExclusivityOutcome<T>> {
    check_common(b, gamma)?;
    check_market(c, phi)?;
    if partition.owner().len() != b.len() {
        return Err(ModelError::Dimension {
            what: "partition",
            expected: b.len(),
            got: partition.owner().len(),
        });
    }
    let n = partition.n_firms();
    let mut designs = Vec::with_capacity(n);
    let mut delta = DVector::zeros(n);
    let mut own = DVector::zeros(n);
    for firm in 0..n {
        let attrs = partition.attributes_of(firm);
        let bn = b.select_rows(&attrs);
        let gn = gamma.select_rows(&attrs);
        let t = intensity_from_taste(effective_taste(&bn, &gn), c, phi);
        let d = if attrs.is_empty() || bn.iter().all(|x| *x == T::zero()) {
            DVector::zeros(attrs.len())
        } else {
            orientation_rule(&bn, &gn)?
        };
        let sol = solution_from(&bn, &gn, d, t, c, phi);
        delta[firm] = bn.dot(&sol.loadings);
        own[firm] = t * t;
        designs.push(sol);
    }
    let prices = exclusivity_prices(&delta, &own, phi);
    Ok(ExclusivityOutcome { designs, prices })
}

/// Diagonal-Σ pricing: `q_n = δ_n / (2(1 + Σ_k γ_k r_nk²))`, `p_n = −δ_n/(2φ)`.
pub fn exclusivity_prices<T: Real>(delta: &DVector<T>, own_weight: &DVector<T>, phi: T) -> PriceEquilibrium<T> {
    let n = delta.len();
    let two = lit::<T>(2.0);
    let prices = delta / (-(two * phi));
    let quantities = DVector::from_iterator(n, (0..n).map(|i| delta[i] / (two * (T::one() + own_weight[i]))));
    let profits = prices.component_mul(&quantities);
    PriceEquilibrium {
        prices,
        quantities,
        profits,
        active: (0..n).collect(),
        flagged: Vec::new(),
        regime: crate::pricing::Regime::SingleProductClosedForm,
        sweeps: 0,
        unsettled: Vec::new(),
    }
}

/// `LHS(u) − ½` of the symmetric first-order condition in `u = t²`.
pub fn symmetric_foc_gap<T: Real>(u: T, bhat_sq: T, c: T, phi: T, n: usize) -> T {
    let nf = lit::<T>(n as f64);
    let m = nf - T::one();
    let num = lit::<T>(3.0) * m * u + lit::<T>(2.0) - nf * m * m * u * u * u;
    let a = T::one() + nf * u;
    let b = lit::<T>(2.0) + m * u;
    -bhat_sq / (c * phi) * num / (a * a * b * b * b) - lit::<T>(0.5)
}

/// Per-firm gross profit when all `n` firms load intensity `√u` along the optimal
/// orientation: `−(1/φ) · (1+(n−1)u)/(1+nu) · B̂u/(2+(n−1)u)²`.
pub fn symmetric_gross_profit<T: Real>(u: T, bhat_sq: T, phi: T, n: usize) -> T {
    let nf = lit::<T>(n as f64);
    let m = nf - T::one();
    let b = lit::<T>(2.0) + m * u;
    -(T::one() + m * u) / (T::one() + nf * u) * bhat_sq * u / (phi * b * b)
}

/// Intensity of the symmetric non-exclusive design with `n` single-product firms.
///
/// Returns 0 when `c ≥ −B̂/(2φ)`; otherwise the positive root of the first-order
/// condition in `u = t²`, bracketed from `[0, 1]` (upper end doubled until the gap is
/// negative) and bisected to an interval below `1e-12`.
pub fn symmetric_intensity<T: Real>(b: &DVector<T>, gamma: &DVector<T>, c: T, phi: T, n: usize) -> Result<T> {
    check_common(b, gamma)?;
    check_market(c, phi)?;
    if n == 0 {
        return Err(ModelError::invalid("n_firms", "need at least one firm"));
    }
    let bh = effective_taste(b, gamma);
    symmetric_u(bh, c, phi, n).map(|u| u.sqrt())
}

/// Root `u*` of the symmetric condition for a given `B̂`.
pub fn symmetric_u<T: Real>(bhat_sq: T, c: T, phi: T, n: usize) -> Result<T> {
    if c >= viability_threshold(bhat_sq, phi) {
        return Ok(T::zero());
    }
    let gap = |u: T| symmetric_foc_gap(u, bhat_sq, c, phi, n);
    let mut hi = T::one();
    let mut grown = 0;
    while gap(hi) > T::zero() {
        hi *= lit::<T>(2.0);
        grown += 1;
        if grown > 200 {
            return Err(ModelError::NoConvergence {
                solver: "symmetric intensity bracket",
                iterations: grown,
                residual: to_f64(gap(hi)),
            });
        }
    }
    // f32 cannot resolve a 1e-12 interval; stop at its own precision.
    let tol = lit::<T>(1e-12).max(T::default_epsilon() * hi * lit::<T>(4.0));
    bisect(gap, T::zero(), hi, tol, 400)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    const T_MONO: f64 = 1.111_785_940_502_842_3; // √(√5 − 1)

    fn pair(inner: f64) -> AttributePair<f64> {
        AttributePair {
            b_i: 1.0,
            b_j: 1.0,
            gamma_i: 1.0,
            gamma_j: 1.0,
            d: 1.0,
            f: 1.0,
            inner,
        }
    }

    #[test]
    fn orientation_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let d = orientation_rule(&dvector![1.0, 1.0], &dvector![1.0, 1.0]).unwrap();
        assert!((d - dvector![h, h]).amax() < 1e-15);
        let d = orientation_rule(&dvector![2.0, 1.0], &dvector![1.0, 8.0]).unwrap();
        let raw = dvector![2.0, 8f64.powf(-1.5)];
        assert!((&d - &raw / raw.norm()).amax() < 1e-15);
        assert!((d[0] - 0.99976).abs() < 1e-5 && (d[1] - 0.02209).abs() < 1e-5);
        assert_eq!(orientation_rule(&dvector![-3.0], &dvector![2.0]).unwrap(), dvector![-1.0]);
        assert!(orientation_rule(&dvector![0.0, 0.0], &dvector![1.0, 1.0]).is_err());
    }

    #[test]
    fn monopoly_intensity_examples() {
        let t = monopoly_intensity(&dvector![1.0], &dvector![1.0], 0.1, -1.0).unwrap();
        assert!((t - T_MONO).abs() < 1e-12);
        assert_eq!(monopoly_intensity(&dvector![1.0], &dvector![1.0], 0.5, -1.0).unwrap(), 0.0);
        let t = monopoly_intensity(&dvector![2.0], &dvector![1.0], 0.25, -1.0).unwrap();
        assert!((t - (8f64.sqrt() - 1.0).sqrt()).abs() < 1e-12);
        assert!((t - 1.35219).abs() < 1e-5);
    }

    #[test]
    fn one_attribute_examples() {
        assert!((one_attribute_norm(1.0, 1.0, 0.1, -1.0).unwrap() - T_MONO).abs() < 1e-12);
        assert_eq!(one_attribute_norm(1.0, 1.0, 0.6, -1.0).unwrap(), 0.0);
        let a: f64 = one_attribute_norm(1.0, 1.0, 0.1, -1.0).unwrap();
        let b = one_attribute_norm(1.0, 4.0, 0.1, -1.0).unwrap();
        assert!((b / a - 0.5).abs() < 1e-15);
    }

    #[test]
    fn aligned_profit_examples() {
        let p: f64 = monopoly_aligned_profit(&dvector![1.0], &dvector![1.0], &dvector![1.0], -1.0).unwrap();
        assert!((p - 0.125).abs() < 1e-15);
        assert_eq!(monopoly_aligned_profit(&dvector![1.0], &dvector![1.0], &dvector![0.0], -1.0).unwrap(), 0.0);
        let p: f64 = monopoly_aligned_profit(&dvector![1.0, 1.0], &dvector![1.0, 1.0], &dvector![1.0, 1.0], -1.0).unwrap();
        assert!((p - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pairwise_examples() {
        let zero = pairwise_profit(&pair(0.0), -1.0).unwrap();
        assert!((zero - 0.25).abs() < 1e-15);
        // parallel unit columns collapse to one factor with r = (1, 1)
        let par = pairwise_profit(&pair(1.0), -1.0).unwrap();
        let collapsed = monopoly_aligned_profit(&dvector![1.0, 1.0], &dvector![1.0, 1.0], &dvector![1.0, 1.0], -1.0).unwrap();
        assert!((par - collapsed).abs() < 1e-15);
        let mid = pairwise_profit(&pair(0.5), -1.0).unwrap();
        assert!(zero < mid && mid < par);
        assert!(matches!(pairwise_profit(&pair(1.5), -1.0), Err(ModelError::CauchySchwarz { .. })));
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let h = 1e-6;
        for inner in [0.0, 0.3, 0.7] {
            let p: AttributePair<f64> = AttributePair { b_i: 1.3, b_j: 0.7, gamma_i: 2.0, gamma_j: 0.5, d: 1.2, f: 0.9, inner };
            let g = alignment_gradient(&p, -1.5).unwrap();
            let lo = if inner == 0.0 { 0.0 } else { inner - h };
            let fd = (pairwise_profit(&p.with_inner(inner + h), -1.5).unwrap() - pairwise_profit(&p.with_inner(lo), -1.5).unwrap())
                / (inner + h - lo);
            let scale = g.abs().max(1e-12);
            assert!(((g - fd) / scale).abs() < if inner == 0.0 { 1e-5 } else { 1e-6 });
        }
        let p = AttributePair { b_j: 0.0, ..pair(0.0) };
        assert_eq!(alignment_gradient(&p, -1.0).unwrap(), 0.0);
    }

    #[test]
    fn typeset_form_differs_from_block_form() {
        let diag = pairwise_diagnostic(&pair(0.5), -1.0).unwrap();
        assert!(diag.deviation > 1e-3);
    }

    #[test]
    fn exclusivity_examples() {
        let part = ExclusivityPartition::one_each(2).unwrap();
        let out = exclusivity_equilibrium(&part, &dvector![1.0, 1.0], &dvector![1.0, 1.0], 0.1, -1.0).unwrap();
        for d in &out.designs {
            assert!((d.intensity - T_MONO).abs() < 1e-12);
        }
        let eq = exclusivity_prices(&dvector![1.0, 1.0], &dvector![1.0, 1.0], -1.0);
        assert!((&eq.quantities - dvector![0.25, 0.25]).amax() < 1e-15);
        assert!((&eq.prices - dvector![0.5, 0.5]).amax() < 1e-15);
        let out = exclusivity_equilibrium(&part, &dvector![1.0, 1.0], &dvector![1.0, 1.0], 0.6, -1.0).unwrap();
        assert!(out.designs.iter().all(|d| d.intensity == 0.0));
        assert!(ExclusivityPartition::new(vec![0, 2], 2).is_err());
    }

    #[test]
    fn exclusivity_firm_without_attributes() {
        let part = ExclusivityPartition::new(vec![0, 0], 2).unwrap();
        let out = exclusivity_equilibrium(&part, &dvector![1.0, 1.0], &dvector![1.0, 1.0], 0.1, -1.0).unwrap();
        assert_eq!(out.designs[1].intensity, 0.0);
        assert_eq!(out.prices.quantities[1], 0.0);
        let t: f64 = monopoly_intensity(&dvector![1.0, 1.0], &dvector![1.0, 1.0], 0.1, -1.0).unwrap();
        assert!((out.designs[0].intensity - t).abs() < 1e-15);
    }

    #[test]
    fn symmetric_examples() {
        let b = dvector![1.0];
        let g = dvector![1.0];
        let t1 = symmetric_intensity(&b, &g, 0.1, -1.0, 1).unwrap();
        assert!((t1 - T_MONO).abs() < 1e-9);
        let t3 = symmetric_intensity(&b, &g, 0.1, -1.0, 3).unwrap();
        assert!((t3 * t3 - 0.3196).abs() < 5e-4);
        assert!((t3 - 0.565).abs() < 1e-3);
        for n in 1..6 {
            assert_eq!(symmetric_intensity(&b, &g, 0.5, -1.0, n).unwrap(), 0.0);
        }
    }

    #[test]
    fn symmetric_root_is_stationary_point_of_symmetric_profit() {
        let (bh, c, phi, n) = (1.0, 0.1, -1.0, 3);
        let u = symmetric_u(bh, c, phi, n).unwrap();
        let net = |v: f64| symmetric_gross_profit(v, bh, phi, n) - 0.5 * c * v;
        let h = 1e-6;
        assert!(((net(u + h) - net(u - h)) / (2.0 * h)).abs() < 1e-8);
        // single-product closed form at u = 1, N = 3
        assert!((symmetric_gross_profit(1.0f64, 1.0, -1.0, 3) - 3.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn f32_instantiation() {
        let t = monopoly_intensity(&dvector![1.0f32], &dvector![1.0f32], 0.1, -1.0).unwrap();
        assert!((t - T_MONO as f32).abs() < 1e-5);
        let t = symmetric_intensity(&dvector![1.0f32], &dvector![1.0f32], 0.1, -1.0, 3).unwrap();
        assert!((t - 0.5653).abs() < 1e-3);
    }
}
