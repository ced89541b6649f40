//! Two representative consumers sharing attribute loadings but differing in tastes
//! and curvature weights.
//!
//! Market demand is the μ-weighted sum of the two consumers' linear demands, so a
//! good's aggregate intercept and slope are `a = μΣ₁⁻¹δ₁ + (1−μ)Σ₂⁻¹δ₂` and
//! `M = μΣ₁⁻¹ + (1−μ)Σ₂⁻¹`.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::demand::FactorStructure;
use crate::error::{ModelError, Result};
use crate::pricing::{bertrand_closed_form, iterative_bertrand_with, BertrandOptions, LinearDemand};
use crate::scalar::{lit, to_f64, Real};
use crate::search::scan_then_golden;

/// Two consumers with weight `μ` on the first.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsumerMix<T: Real> {
    pub mu: T,
    pub loadings: DMatrix<T>,
    pub gamma1: DVector<T>,
    pub gamma2: DVector<T>,
    pub b1: DVector<T>,
    pub b2: DVector<T>,
    pub price_sensitivity: T,
}

impl<T: Real> ConsumerMix<T> {
    pub fn new(
        mu: T,
        loadings: DMatrix<T>,
        (gamma1, gamma2): (DVector<T>, DVector<T>),
        (b1, b2): (DVector<T>, DVector<T>),
        price_sensitivity: T,
    ) -> Result<Self> {
        if !(mu >= T::zero() && mu <= T::one()) {
            return Err(ModelError::invalid("mu", "weight must lie in [0, 1]"));
        }
        if !(price_sensitivity < T::zero()) {
            return Err(ModelError::invalid("price_sensitivity", "φ must be negative"));
        }
        let k = loadings.ncols();
        for (what, v) in [("gamma1", &gamma1), ("gamma2", &gamma2), ("b1", &b1), ("b2", &b2)] {
            if v.len() != k {
                return Err(ModelError::Dimension { what, expected: k, got: v.len() });
            }
        }
        // validates positivity of both weight vectors
        FactorStructure::with_unit_baseline(loadings.clone(), gamma1.clone())?;
        FactorStructure::with_unit_baseline(loadings.clone(), gamma2.clone())?;
        Ok(Self {
            mu,
            loadings,
            gamma1,
            gamma2,
            b1,
            b2,
            price_sensitivity,
        })
    }

    pub fn n_goods(&self) -> usize {
        self.loadings.nrows()
    }

    /// The same mix with consumer labels exchanged (and `μ ↦ 1 − μ`).
    pub fn relabeled(&self) -> Self {
        Self {
            mu: T::one() - self.mu,
            loadings: self.loadings.clone(),
            gamma1: self.gamma2.clone(),
            gamma2: self.gamma1.clone(),
            b1: self.b2.clone(),
            b2: self.b1.clone(),
            price_sensitivity: self.price_sensitivity,
        }
    }

    fn consumer(&self, h: usize) -> (FactorStructure<T>, DVector<T>) {
        let (g, b) = if h == 0 { (&self.gamma1, &self.b1) } else { (&self.gamma2, &self.b2) };
        let fs = FactorStructure::with_unit_baseline(self.loadings.clone(), g.clone()).expect("validated at construction");
        let delta = &self.loadings * b;
        (fs, delta)
    }

    /// Interaction structures and mean utilities of both consumers.
    pub fn consumers(&self) -> [(FactorStructure<T>, DVector<T>); 2] {
        [self.consumer(0), self.consumer(1)]
    }

    /// Aggregate linear demand of the mix.
    pub fn market(&self) -> MixedMarket<T> {
        let [(fs1, d1), (fs2, d2)] = self.consumers();
        MixedMarket {
            mu: self.mu,
            structures: [fs1, fs2],
            deltas: [d1, d2],
            price_sensitivity: self.price_sensitivity,
        }
    }
}

/// `Σ = I + S diag(μγ₁ + (1−μ)γ₂) S'` and its inverse.
pub fn mixed_sigma<T: Real>(mix: &ConsumerMix<T>) -> (DMatrix<T>, DMatrix<T>) {
    let weights = if mix.gamma1 == mix.gamma2 {
        mix.gamma1.clone()
    } else {
        mix.gamma1.zip_map(&mix.gamma2, |g1, g2| mix.mu * g1 + (T::one() - mix.mu) * g2)
    };
    let fs = FactorStructure::with_unit_baseline(mix.loadings.clone(), weights).expect("positive mixed weights");
    (fs.sigma_dense(), fs.sigma_inverse())
}

/// Aggregate demand `q = a + φMp` of two consumers.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedMarket<T: Real> {
    pub mu: T,
    pub structures: [FactorStructure<T>; 2],
    pub deltas: [DVector<T>; 2],
    pub price_sensitivity: T,
}

impl<T: Real> LinearDemand<T> for MixedMarket<T> {
    fn n_goods(&self) -> usize {
        self.deltas[0].len()
    }

    fn price_sensitivity(&self) -> T {
        self.price_sensitivity
    }

    fn restricted(&self, goods: &[usize]) -> Result<(DVector<T>, DMatrix<T>)> {
        let w = [self.mu, T::one() - self.mu];
        let mut a = DVector::zeros(goods.len());
        let mut m = DMatrix::zeros(goods.len(), goods.len());
        for h in 0..2 {
            let sub = self.structures[h].restrict(goods)?;
            let d = self.deltas[h].select_rows(goods);
            a += sub.solve(&d) * w[h];
            m += sub.sigma_inverse() * w[h];
        }
        Ok((a, m))
    }
}

/// Multi-product monopoly profit facing the aggregate demand, `−(1/4φ) a'M⁻¹a`.
///
/// Reduces to `−(1/4φ)δ'Σ⁻¹δ` for identical consumers and to
/// `μΠ¹ + (1−μ)Π²` when the consumers share `δ`.
pub fn mixed_monopoly_profit<T: Real>(mix: &ConsumerMix<T>) -> Result<T> {
    let market = mix.market();
    let all: Vec<usize> = (0..market.n_goods()).collect();
    let (a, m) = market.restricted(&all)?;
    let x = solve_sym(m, &a)?;
    Ok(-a.dot(&x) / (lit::<T>(4.0) * mix.price_sensitivity))
}

/// Profit from pooling the consumers into averaged primitives,
/// `−(1/4φ) δ̄'(μΣ₁ + (1−μ)Σ₂)⁻¹ δ̄` with `δ̄ = μδ₁ + (1−μ)δ₂`.
///
/// This does not describe pricing against the two actual demands: it overstates the
/// value of alignment, and for the swapped-taste design study it peaks at `ρ = 1`
/// for every parameter value.
pub fn pooled_monopoly_profit<T: Real>(mix: &ConsumerMix<T>) -> T {
    let (sigma, _) = mixed_sigma(mix);
    let d = &mix.loadings * (&mix.b1 * mix.mu + &mix.b2 * (T::one() - mix.mu));
    let x = sigma.cholesky().expect("mixed Σ is positive definite").solve(&d);
    -d.dot(&x) / (lit::<T>(4.0) * mix.price_sensitivity)
}

fn solve_sym<T: Real>(m: DMatrix<T>, rhs: &DVector<T>) -> Result<DVector<T>> {
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.solve(rhs));
    }
    m.lu().solve(rhs).ok_or(ModelError::NotPositiveDefinite { min_eigenvalue: 0.0 })
}

/// The canonical two-good, two-attribute differentiation study: consumer 1 has tastes
/// `(b_H, b_L)` and weights `(γ_H, γ_L)`, consumer 2 has both swapped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwappedTastes<T: Real> {
    pub b_high: T,
    pub b_low: T,
    pub gamma_high: T,
    pub gamma_low: T,
    pub price_sensitivity: T,
    pub mu: T,
}

impl<T: Real> SwappedTastes<T> {
    pub fn new(b_high: T, b_low: T, gamma_high: T, gamma_low: T, price_sensitivity: T) -> Result<Self> {
        for (name, v) in [("b_high", b_high), ("b_low", b_low), ("gamma_high", gamma_high), ("gamma_low", gamma_low)] {
            if !(v > T::zero()) {
                return Err(ModelError::invalid(name, "must be positive"));
            }
        }
        if !(price_sensitivity < T::zero()) {
            return Err(ModelError::invalid("price_sensitivity", "φ must be negative"));
        }
        Ok(Self {
            b_high,
            b_low,
            gamma_high,
            gamma_low,
            price_sensitivity,
            mu: lit(0.5),
        })
    }

    pub fn with_mu(self, mu: T) -> Result<Self> {
        if !(mu >= T::zero() && mu <= T::one()) {
            return Err(ModelError::invalid("mu", "weight must lie in [0, 1]"));
        }
        Ok(Self { mu, ..self })
    }

    /// Consumer labels exchanged: `(b_L, b_H, γ_L, γ_H)` with `μ ↦ 1 − μ`.
    pub fn relabeled(self) -> Self {
        Self {
            b_high: self.b_low,
            b_low: self.b_high,
            gamma_high: self.gamma_low,
            gamma_low: self.gamma_high,
            mu: T::one() - self.mu,
            ..self
        }
    }

    /// General-purpose mix for loadings `s`.
    pub fn mix(&self, loadings: DMatrix<T>) -> Result<ConsumerMix<T>> {
        let b1 = DVector::from_vec(vec![self.b_high, self.b_low]);
        let b2 = DVector::from_vec(vec![self.b_low, self.b_high]);
        let g1 = DVector::from_vec(vec![self.gamma_high, self.gamma_low]);
        let g2 = DVector::from_vec(vec![self.gamma_low, self.gamma_high]);
        ConsumerMix::new(self.mu, loadings, (g1, g2), (b1, b2), self.price_sensitivity)
    }

    fn consumer_blocks(&self, s: &Matrix2<T>) -> [(Vector2<T>, Matrix2<T>); 2] {
        let build = |b: Vector2<T>, g: Vector2<T>| {
            let sigma = Matrix2::identity() + s * Matrix2::from_diagonal(&g) * s.transpose();
            let inv = inverse2(&sigma);
            (inv * (s * b), inv)
        };
        [
            build(Vector2::new(self.b_high, self.b_low), Vector2::new(self.gamma_high, self.gamma_low)),
            build(Vector2::new(self.b_low, self.b_high), Vector2::new(self.gamma_low, self.gamma_high)),
        ]
    }

    /// Aggregate intercept and slope for the 2×2 loadings `s` (rows are goods).
    pub fn aggregate(&self, s: &Matrix2<T>) -> (Vector2<T>, Matrix2<T>) {
        let [(a1, m1), (a2, m2)] = self.consumer_blocks(s);
        let (w1, w2) = (self.mu, T::one() - self.mu);
        (a1 * w1 + a2 * w2, m1 * w1 + m2 * w2)
    }

    /// Monopoly profit at column inner product `ρ` (mirror-symmetric unit columns).
    pub fn monopoly_profit_at(&self, rho: T) -> T {
        let (a, m) = self.aggregate(&mirror_loadings(rho));
        -a.dot(&(inverse2(&m) * a)) / (lit::<T>(4.0) * self.price_sensitivity)
    }

    /// Per-firm duopoly profits when firm `n` sells a good with unit loadings
    /// `(cos θ_n, sin θ_n)`.
    pub fn duopoly_profits(&self, theta: [T; 2]) -> Result<Vector2<T>> {
        let s = angle_loadings(theta);
        let (a, m) = self.aggregate(&s);
        let phi = self.price_sensitivity;
        let da = DVector::from_column_slice(a.as_slice());
        let dm = DMatrix::from_column_slice(2, 2, m.as_slice());
        let (p, q) = bertrand_closed_form(&da, &dm, phi)?;
        if q.iter().all(|x| *x > T::zero()) {
            return Ok(Vector2::new(p[0] * q[0], p[1] * q[1]));
        }
        // a dominated good: price with exit against the two consumers' own systems
        let market = self.mix(DMatrix::from_column_slice(2, 2, s.as_slice()))?.market();
        let eq = iterative_bertrand_with(&market, BertrandOptions::default())?;
        Ok(Vector2::new(eq.profits[0], eq.profits[1]))
    }
}

fn inverse2<T: Real>(m: &Matrix2<T>) -> Matrix2<T> {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det
}

/// `[[cos α, sin α], [sin α, cos α]]` with `sin 2α = ρ`: unit columns with inner product `ρ`.
pub fn mirror_loadings<T: Real>(rho: T) -> Matrix2<T> {
    let alpha = rho.asin() * lit::<T>(0.5);
    let (s, c) = alpha.sin_cos();
    Matrix2::new(c, s, s, c)
}

/// Rows `(cos θ_n, sin θ_n)`.
pub fn angle_loadings<T: Real>(theta: [T; 2]) -> Matrix2<T> {
    let (s0, c0) = theta[0].sin_cos();
    let (s1, c1) = theta[1].sin_cos();
    Matrix2::new(c0, s0, c1, s1)
}

/// Number of scan points on `[0, 1]` before golden refinement.
pub const RHO_SCAN_POINTS: usize = 401;
pub const RHO_TOLERANCE: f64 = 1e-6;

/// Profit-maximizing inner product of the monopolist's two attribute columns.
pub fn rho_star_monopoly<T: Real>(problem: &SwappedTastes<T>) -> T {
    let (rho, _) = scan_then_golden(
        |r| problem.monopoly_profit_at(r),
        T::zero(),
        T::one(),
        RHO_SCAN_POINTS,
        lit(RHO_TOLERANCE),
    );
    rho
}

/// Settings of the duopoly angle best-response iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuopolyOptions {
    pub scan_points: usize,
    pub angle_tolerance: f64,
    pub max_rounds: usize,
}

impl Default for DuopolyOptions {
    fn default() -> Self {
        Self {
            scan_points: RHO_SCAN_POINTS,
            angle_tolerance: 1e-7,
            max_rounds: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuopolyRho<T: Real> {
    /// `cos(θ₁ − θ₂)`, the inner product of the two goods' unit loadings.
    pub rho: T,
    pub angles: [T; 2],
    pub rounds: usize,
}

/// Equilibrium inner product for two single-product firms.
///
/// Firms alternate global best responses in their own angle on `[0, π/2]`, starting
/// from identical goods (`ρ₀ = 1`), until neither angle moves by more than the tolerance.
pub fn rho_star_duopoly<T: Real>(problem: &SwappedTastes<T>, opts: DuopolyOptions) -> Result<DuopolyRho<T>> {
    let quarter = T::frac_pi_4();
    let mut theta = [quarter, quarter];
    let tol = lit::<T>(opts.angle_tolerance);
    let mut failure = None;
    for round in 1..=opts.max_rounds {
        let mut moved = T::zero();
        for n in 0..2 {
            let (best, _) = scan_then_golden(
                |x| {
                    let mut t = theta;
                    t[n] = x;
                    match problem.duopoly_profits(t) {
                        Ok(p) => p[n],
                        Err(e) => {
                            failure.get_or_insert(e);
                            T::min_value().unwrap_or(-T::one() / T::default_epsilon())
                        }
                    }
                },
                T::zero(),
                T::frac_pi_2(),
                opts.scan_points,
                tol * lit(0.01),
            );
            moved = moved.max((best - theta[n]).abs());
            theta[n] = best;
        }
        if let Some(e) = failure {
            return Err(e);
        }
        if moved <= tol {
            return Ok(DuopolyRho {
                rho: (theta[0] - theta[1]).cos().min(T::one()),
                angles: theta,
                rounds: round,
            });
        }
    }
    Err(ModelError::NoConvergence {
        solver: "duopoly angle best response",
        iterations: opts.max_rounds,
        residual: to_f64((theta[0] - theta[1]).abs()),
    })
}

/// ρ* over a rectangular grid of taste ratios `b_H/b_L` (rows) and weight ratios
/// `γ_H/γ_L` (columns), with `b_L = γ_L = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoGrid<T: Real> {
    pub taste_ratios: Vec<T>,
    pub weight_ratios: Vec<T>,
    /// `cells[(i, j)]` belongs to `taste_ratios[i]`, `weight_ratios[j]`.
    pub cells: DMatrix<T>,
}

impl<T: Real> RhoGrid<T> {
    /// Evaluates `cell` at every grid point, row by row.
    pub fn compute<F>(taste_ratios: Vec<T>, weight_ratios: Vec<T>, phi: T, mut cell: F) -> Result<Self>
    where
        F: FnMut(&SwappedTastes<T>) -> Result<T>,
    {
        let mut cells = DMatrix::zeros(taste_ratios.len(), weight_ratios.len());
        for (i, &b) in taste_ratios.iter().enumerate() {
            for (j, &g) in weight_ratios.iter().enumerate() {
                cells[(i, j)] = cell(&SwappedTastes::new(b, T::one(), g, T::one(), phi)?)?;
            }
        }
        Ok(Self {
            taste_ratios,
            weight_ratios,
            cells,
        })
    }
}

/// `n` geometrically spaced points from `lo` to `hi` inclusive.
pub fn geometric_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (l, h) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        (l + (h - l) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}
