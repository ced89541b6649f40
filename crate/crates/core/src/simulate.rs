//! Best-response design dynamics for single-product firms.
//!
//! Each firm owns one row of the loading matrix `S` (its good's attribute loadings).
//! Rounds sweep firms in index order; a firm takes a few central-difference gradient
//! steps on its own row while rivals stay put, with prices re-solved by
//! [`iterative_bertrand_with`] at every evaluation. Firms left without sales exit for
//! good and their rows are frozen at zero.
//!
//! Design costs are quadratic in the scaled loadings `r̂_k = √γ_k s_k`:
//! firm `n` pays `½ Σ_k C_nk r̂_nk²`. A scalar cost `c` is `C_nk = c`, i.e. `½ c t²`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::demand::{check_len, FactorStructure};
use crate::design::{effective_taste, orientation_rule, symmetric_intensity};
use crate::error::{ModelError, Result};
use crate::pricing::{iterative_bertrand_with, single_product_closed_form, BertrandOptions, Market, PriceEquilibrium};
use crate::scalar::{lit, to_f64, Real};

/// Standard deviation of the random initial loadings.
pub const INIT_SCALE: f64 = 0.1;

/// Design cost weights.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignCost<T: Real> {
    Scalar(T),
    /// One weight per attribute, shared by all firms.
    PerAttribute(DVector<T>),
    /// `N × K`, row `n` holds firm `n`'s weights.
    PerFirm(DMatrix<T>),
}

impl<T: Real> DesignCost<T> {
    /// Firm `n`'s weights over the `k` attributes.
    pub fn row(&self, n: usize, k: usize) -> DVector<T> {
        match self {
            DesignCost::Scalar(c) => DVector::from_element(k, *c),
            DesignCost::PerAttribute(v) => v.clone(),
            DesignCost::PerFirm(m) => m.row(n).transpose(),
        }
    }

    fn validate(&self, n: usize, k: usize) -> Result<()> {
        let positive = |x: &T| *x > T::zero() && x.is_finite();
        let ok = match self {
            DesignCost::Scalar(c) => positive(c),
            DesignCost::PerAttribute(v) => {
                check_len("per-attribute cost", k, v.len())?;
                v.iter().all(positive)
            }
            DesignCost::PerFirm(m) => {
                if m.nrows() != n || m.ncols() != k {
                    return Err(ModelError::Dimension {
                        what: "per-firm cost matrix",
                        expected: n * k,
                        got: m.nrows() * m.ncols(),
                    });
                }
                m.iter().all(positive)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(ModelError::invalid("cost", "design costs must be positive (zero cost makes designs unbounded)"))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init<T: Real> {
    /// Entries drawn from `N(0, 0.1²)`, each row's sign chosen so that `b's_n ≥ 0`.
    RandomGaussian,
    /// Every firm at the symmetric first-order-condition design (scalar cost only).
    Symmetric,
    Custom(DMatrix<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T: Real> {
    pub n_firms: usize,
    pub n_attrs: usize,
    pub b: DVector<T>,
    pub gamma: DVector<T>,
    pub phi: T,
    pub cost: DesignCost<T>,
    pub fd_step: T,
    pub ascent_rate: T,
    pub ascent_steps: usize,
    pub max_rounds: usize,
    pub design_tol: T,
    pub seed: u64,
    pub init: Init<T>,
}

impl<T: Real> SimConfig<T> {
    /// Config with default algorithm settings and random initialization.
    pub fn new(n_firms: usize, b: DVector<T>, gamma: DVector<T>, phi: T, cost: DesignCost<T>) -> Self {
        Self {
            n_firms,
            n_attrs: b.len(),
            b,
            gamma,
            phi,
            cost,
            fd_step: lit(1e-5),
            ascent_rate: lit(1e-2),
            ascent_steps: 5,
            max_rounds: 10_000,
            design_tol: lit(1e-7),
            seed: 0,
            init: Init::RandomGaussian,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_init(mut self, init: Init<T>) -> Self {
        self.init = init;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (n, k) = (self.n_firms, self.n_attrs);
        if n == 0 || k == 0 {
            return Err(ModelError::invalid("dimensions", "need at least one firm and one attribute"));
        }
        check_len("taste weights b", k, self.b.len())?;
        check_len("attribute weights γ", k, self.gamma.len())?;
        if !self.gamma.iter().all(|g| *g > T::zero() && g.is_finite()) {
            return Err(ModelError::invalid("gamma", "attribute weights must be positive"));
        }
        if !self.b.iter().all(|x| x.is_finite()) {
            return Err(ModelError::invalid("b", "taste weights must be finite"));
        }
        if !(self.phi < T::zero()) {
            return Err(ModelError::invalid("phi", "φ must be negative"));
        }
        self.cost.validate(n, k)?;
        for (name, v) in [("fd_step", self.fd_step), ("ascent_rate", self.ascent_rate), ("design_tol", self.design_tol)] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(ModelError::invalid(name, "must be positive"));
            }
        }
        if self.ascent_steps == 0 || self.max_rounds == 0 {
            return Err(ModelError::invalid("ascent_steps/max_rounds", "must be at least 1"));
        }
        if let Init::Custom(s0) = &self.init {
            if s0.nrows() != n || s0.ncols() != k {
                return Err(ModelError::Dimension {
                    what: "initial design",
                    expected: n * k,
                    got: s0.nrows() * s0.ncols(),
                });
            }
        }
        Ok(())
    }

    /// Starting design matrix (`N × K`).
    pub fn initial_design(&self) -> Result<DMatrix<T>> {
        let (n, k) = (self.n_firms, self.n_attrs);
        match &self.init {
            Init::Custom(s0) => Ok(s0.clone()),
            Init::RandomGaussian => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let normal = Normal::new(0.0, INIT_SCALE).expect("valid normal");
                let mut s = DMatrix::from_fn(n, k, |_, _| lit::<T>(normal.sample(&mut rng)));
                for mut row in s.row_iter_mut() {
                    let dot = (0..k).fold(T::zero(), |acc, j| acc + row[j] * self.b[j]);
                    if dot < T::zero() {
                        row.neg_mut();
                    }
                }
                Ok(s)
            }
            Init::Symmetric => {
                let DesignCost::Scalar(c) = self.cost else {
                    return Err(ModelError::invalid("init", "symmetric start needs a scalar cost"));
                };
                let t = symmetric_intensity(&self.b, &self.gamma, c, self.phi, n)?;
                let d = orientation_rule(&self.b, &self.gamma)?;
                let row = DVector::from_fn(k, |j, _| t * d[j] / self.gamma[j].sqrt());
                Ok(DMatrix::from_fn(n, k, |_, j| row[j]))
            }
        }
    }

    fn design_cost(&self, s: &DMatrix<T>, n: usize) -> T {
        let w = self.cost.row(n, self.n_attrs);
        let half = lit::<T>(0.5);
        (0..self.n_attrs).fold(T::zero(), |acc, j| acc + half * w[j] * self.gamma[j] * s[(n, j)] * s[(n, j)])
    }
}

/// Pricing precision inside the simulator; finite differences divide it by `fd_step`.
fn pricing_options() -> BertrandOptions {
    BertrandOptions {
        tolerance: 1e-14,
        ..BertrandOptions::default()
    }
}

/// Price equilibrium (with shutdown) for designs `s`: `Σ = I + SΓS'`, `δ = Sb`.
pub fn market_outcome<T: Real>(s: &DMatrix<T>, b: &DVector<T>, gamma: &DVector<T>, phi: T) -> Result<PriceEquilibrium<T>> {
    check_len("taste weights b", s.ncols(), b.len())?;
    let fs = FactorStructure::with_unit_baseline(s.clone(), gamma.clone())?;
    let market = Market::from_delta(fs, s * b, phi)?;
    // When every good sells at the closed form it is the iteration's fixed point.
    if let Ok(eq) = single_product_closed_form(&market) {
        if eq.quantities.iter().all(|q| *q > T::zero()) {
            return Ok(eq);
        }
    }
    iterative_bertrand_with(&market, pricing_options())
}

/// Firm `n`'s equilibrium profit net of its design cost.
pub fn firm_objective<T: Real>(s: &DMatrix<T>, n: usize, config: &SimConfig<T>) -> Result<T> {
    if n >= s.nrows() {
        return Err(ModelError::invalid("firm", format!("index {n} out of range")));
    }
    let eq = market_outcome(s, &config.b, &config.gamma, config.phi)?;
    Ok(eq.profits[n] - config.design_cost(s, n))
}

/// State after a round (round 0 is the initial design).
#[derive(Debug, Clone, PartialEq)]
pub struct RoundSnapshot<T: Real> {
    pub round: usize,
    pub design: DMatrix<T>,
    /// Net objectives.
    pub profits: DVector<T>,
    pub active: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult<T: Real> {
    pub final_design: DMatrix<T>,
    pub trajectory: Vec<RoundSnapshot<T>>,
    /// Surviving firms, ascending.
    pub active: Vec<usize>,
    pub alignment: Vec<T>,
    pub intensities: Vec<T>,
    pub rounds: usize,
    pub converged: bool,
    /// Largest design change in the last round.
    pub last_delta: T,
}

fn snapshot<T: Real>(round: usize, s: &DMatrix<T>, active: &[bool], config: &SimConfig<T>) -> Result<RoundSnapshot<T>> {
    let eq = market_outcome(s, &config.b, &config.gamma, config.phi)?;
    let profits = DVector::from_fn(s.nrows(), |n, _| eq.profits[n] - config.design_cost(s, n));
    Ok(RoundSnapshot {
        round,
        design: s.clone(),
        profits,
        active: active.to_vec(),
    })
}

/// Runs the dynamics to convergence or `max_rounds`, whichever comes first.
pub fn simulate<T: Real>(config: &SimConfig<T>) -> Result<SimResult<T>> {
    config.validate()?;
    let (n, k) = (config.n_firms, config.n_attrs);
    let mut s = config.initial_design()?;
    let mut active = vec![true; n];
    let mut trajectory = vec![snapshot(0, &s, &active, config)?];
    let h = config.fd_step;
    let two_h = h + h;
    let mut last_delta = lit::<T>(f64::INFINITY);
    let mut rounds = 0;
    let mut converged = false;

    for round in 1..=config.max_rounds {
        rounds = round;
        let before = s.clone();
        for firm in 0..n {
            if !active[firm] {
                continue;
            }
            let mut rate = config.ascent_rate;
            let mut value = firm_objective(&s, firm, config)?;
            for _ in 0..config.ascent_steps {
                let mut grad = DVector::<T>::zeros(k);
                for j in 0..k {
                    let x = s[(firm, j)];
                    s[(firm, j)] = x + h;
                    let up = firm_objective(&s, firm, config)?;
                    s[(firm, j)] = x - h;
                    let down = firm_objective(&s, firm, config)?;
                    s[(firm, j)] = x;
                    grad[j] = (up - down) / two_h;
                }
                if grad.iter().all(|g| *g == T::zero()) {
                    break;
                }
                let row: DVector<T> = s.row(firm).transpose();
                // Backtrack until the step does not lower the objective.
                let mut accepted = false;
                for _ in 0..40 {
                    let trial = &row + &grad * rate;
                    s.set_row(firm, &trial.transpose());
                    let v = firm_objective(&s, firm, config)?;
                    if v >= value {
                        value = v;
                        accepted = true;
                        break;
                    }
                    rate *= lit(0.5);
                }
                if !accepted {
                    s.set_row(firm, &row.transpose());
                    break;
                }
            }
            let eq = market_outcome(&s, &config.b, &config.gamma, config.phi)?;
            if !eq.is_active(firm) {
                active[firm] = false;
                s.set_row(firm, &DVector::zeros(k).transpose());
            }
        }
        last_delta = (&s - &before).amax();
        trajectory.push(snapshot(round, &s, &active, config)?);
        if last_delta < config.design_tol {
            converged = true;
            break;
        }
    }

    let report = alignment_report(&s, &config.b, &config.gamma)?;
    Ok(SimResult {
        alignment: report.iter().map(|r| r.cosine).collect(),
        intensities: report.iter().map(|r| r.intensity).collect(),
        final_design: s,
        trajectory,
        active: (0..n).filter(|&i| active[i]).collect(),
        rounds,
        converged,
        last_delta,
    })
}

/// [`simulate`], failing if designs are still moving after `max_rounds`.
pub fn run_best_response<T: Real>(config: &SimConfig<T>) -> Result<SimResult<T>> {
    let result = simulate(config)?;
    if result.converged {
        Ok(result)
    } else {
        Err(ModelError::NoConvergence {
            solver: "best-response design dynamics",
            iterations: result.rounds,
            residual: to_f64(result.last_delta),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment<T: Real> {
    /// Cosine between `√γ∘s_n` and `Γ^{-3/2}b`; 0 for a zero row.
    pub cosine: T,
    /// `‖√γ∘s_n‖`.
    pub intensity: T,
}

fn cosine<T: Real>(x: &DVector<T>, y: &DVector<T>) -> T {
    let (nx, ny) = (x.norm(), y.norm());
    if nx == T::zero() || ny == T::zero() {
        return T::zero();
    }
    (x.dot(y) / (nx * ny)).max(-T::one()).min(T::one())
}

pub fn alignment_report<T: Real>(s: &DMatrix<T>, b: &DVector<T>, gamma: &DVector<T>) -> Result<Vec<Alignment<T>>> {
    check_len("taste weights b", s.ncols(), b.len())?;
    check_len("attribute weights γ", s.ncols(), gamma.len())?;
    let target = DVector::from_fn(b.len(), |j, _| b[j] / (gamma[j] * gamma[j].sqrt()));
    Ok(s
        .row_iter()
        .map(|row| {
            let scaled = DVector::from_fn(row.len(), |j, _| row[j] * gamma[j].sqrt());
            Alignment {
                cosine: cosine(&scaled, &target),
                intensity: scaled.norm(),
            }
        })
        .collect())
}

/// Mean cosine over firms with a non-zero design.
pub fn mean_alignment<T: Real>(report: &[Alignment<T>]) -> Option<T> {
    let live: Vec<T> = report.iter().filter(|a| a.intensity > T::zero()).map(|a| a.cosine).collect();
    if live.is_empty() {
        None
    } else {
        Some(live.iter().fold(T::zero(), |a, &c| a + c) / lit(live.len() as f64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationCheck<T: Real> {
    /// Angle in `[0, π]` between `√γ∘s_n` and `C_n⁻¹b̂`; `None` for a zero row.
    pub angle: Option<T>,
    /// One coordinate holds more than 95% of the norm and intensity is below half the
    /// homogeneous-cost symmetric intensity.
    pub single_attribute: bool,
}

/// Share of the norm above which a row counts as single-attribute.
pub const DOMINANCE_SHARE: f64 = 0.95;

/// Direction `C_n⁻¹b̂` in scaled-loading space for firm `n`.
pub fn adjusted_orientation<T: Real>(config: &SimConfig<T>, n: usize) -> DVector<T> {
    let w = config.cost.row(n, config.n_attrs);
    DVector::from_fn(config.n_attrs, |j, _| config.b[j] / config.gamma[j].sqrt() / w[j])
}

/// Compares each firm's final design with the cost-adjusted orientation rule.
pub fn heterogeneous_orientation_check<T: Real>(result: &SimResult<T>, config: &SimConfig<T>) -> Result<Vec<OrientationCheck<T>>> {
    config.validate()?;
    let k = config.n_attrs;
    let s = &result.final_design;
    check_len("designs", config.n_firms, s.nrows())?;
    let mut out = Vec::with_capacity(config.n_firms);
    for n in 0..config.n_firms {
        let scaled = DVector::from_fn(k, |j, _| s[(n, j)] * config.gamma[j].sqrt());
        let norm = scaled.norm();
        if norm == T::zero() {
            out.push(OrientationCheck {
                angle: None,
                single_attribute: false,
            });
            continue;
        }
        let target = adjusted_orientation(config, n);
        let angle = cosine(&scaled, &target).acos();
        let w = config.cost.row(n, k);
        let mean_cost = w.sum() / lit(k as f64);
        let reference = symmetric_intensity(&config.b, &config.gamma, mean_cost, config.phi, config.n_firms)?;
        let dominant = scaled.amax() > lit::<T>(DOMINANCE_SHARE) * norm;
        out.push(OrientationCheck {
            angle: Some(angle),
            single_attribute: dominant && norm < reference * lit(0.5),
        });
    }
    Ok(out)
}

/// `B̂ = Σ b_k²/γ_k` for a config; handy for comparisons with closed forms.
pub fn config_taste<T: Real>(config: &SimConfig<T>) -> T {
    effective_taste(&config.b, &config.gamma)
}
