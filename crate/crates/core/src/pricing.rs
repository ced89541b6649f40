//! Price equilibria on linear demand systems `q = a + φ M p`.
//!
//! A single representative consumer gives `a = Σ⁻¹δ` and `M = Σ⁻¹`; aggregating several
//! consumers sums their intercepts and slopes. Every solver here works on the
//! [`LinearDemand`] abstraction so that shutting goods down simply restricts the
//! choice set.

use nalgebra::{DMatrix, DVector};

use crate::demand::{check_len, delta, FactorStructure, Preferences};
use crate::error::{ModelError, Result};
use crate::scalar::{lit, to_f64, Real};

/// A linear demand system that can be restricted to any subset of goods.
pub trait LinearDemand<T: Real> {
    fn n_goods(&self) -> usize;

    /// Price sensitivity `φ < 0`.
    fn price_sensitivity(&self) -> T;

    /// Intercept `a` and slope `M` of demand when only `goods` are offered:
    /// `q = a + φ M p` on that subset.
    fn restricted(&self, goods: &[usize]) -> Result<(DVector<T>, DMatrix<T>)>;
}

/// Single representative consumer facing a factor-form interaction matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Market<T: Real> {
    pub structure: FactorStructure<T>,
    /// Mean utilities `δ`; may contain non-positive entries.
    pub delta: DVector<T>,
    pub price_sensitivity: T,
}

impl<T: Real> Market<T> {
    pub fn new(structure: FactorStructure<T>, prefs: &Preferences<T>) -> Result<Self> {
        let delta = delta(&structure, prefs)?.values;
        Ok(Self {
            structure,
            delta,
            price_sensitivity: prefs.price_sensitivity,
        })
    }

    /// Market with explicitly supplied mean utilities.
    pub fn from_delta(structure: FactorStructure<T>, delta: DVector<T>, price_sensitivity: T) -> Result<Self> {
        check_len("mean utilities", structure.n_goods(), delta.len())?;
        if !(price_sensitivity < T::zero()) {
            return Err(ModelError::invalid("price_sensitivity", "φ must be negative"));
        }
        Ok(Self {
            structure,
            delta,
            price_sensitivity,
        })
    }
}

impl<T: Real> LinearDemand<T> for Market<T> {
    fn n_goods(&self) -> usize {
        self.structure.n_goods()
    }

    fn price_sensitivity(&self) -> T {
        self.price_sensitivity
    }

    fn restricted(&self, goods: &[usize]) -> Result<(DVector<T>, DMatrix<T>)> {
        let sub = self.structure.restrict(goods)?;
        let d = self.delta.select_rows(goods);
        Ok((sub.solve(&d), sub.sigma_inverse()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Monopoly,
    SingleProductClosedForm,
    SingleProductIterative,
}

/// Equilibrium prices, quantities and gross profits.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceEquilibrium<T: Real> {
    pub prices: DVector<T>,
    pub quantities: DVector<T>,
    /// `p_n q_n`, gross of design costs.
    pub profits: DVector<T>,
    /// Goods still offered, ascending.
    pub active: Vec<usize>,
    /// Goods with a negative closed-form quantity (closed-form regimes only).
    pub flagged: Vec<usize>,
    pub regime: Regime,
    /// Price sweeps used by the iterative solver (0 for closed forms).
    pub sweeps: usize,
    /// Goods kept out after exiting again on readmission. Demand is kinked at such a
    /// good's entry point and no active set satisfies the shutdown rule exactly.
    pub unsettled: Vec<usize>,
}

impl<T: Real> PriceEquilibrium<T> {
    pub fn total_profit(&self) -> T {
        self.profits.sum()
    }

    pub fn is_active(&self, good: usize) -> bool {
        self.active.binary_search(&good).is_ok()
    }

    fn assemble(n: usize, active: Vec<usize>, p: &DVector<T>, q: &DVector<T>, regime: Regime) -> Self {
        let mut prices = DVector::zeros(n);
        let mut quantities = DVector::zeros(n);
        for (i, &g) in active.iter().enumerate() {
            prices[g] = p[i];
            quantities[g] = q[i];
        }
        let profits = prices.component_mul(&quantities);
        let flagged = active.iter().copied().filter(|&g| quantities[g] < T::zero()).collect();
        Self {
            prices,
            quantities,
            profits,
            active,
            flagged,
            regime,
            sweeps: 0,
            unsettled: Vec::new(),
        }
    }
}

fn require_positive_delta<T: Real>(market: &Market<T>) -> Result<()> {
    let bad: Vec<usize> = (0..market.delta.len())
        .filter(|&i| !(market.delta[i] > T::zero()))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(ModelError::NonPositiveUtility { goods: bad })
    }
}

/// Options for the multi-product monopolist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MonopolyOptions {
    /// Withdraw goods with negative closed-form quantity and re-solve on the rest.
    pub withdraw_unprofitable: bool,
}

/// Multi-product monopoly: `p* = −δ/(2φ)`, `q* = ½Σ⁻¹δ`.
///
/// Goods with `q*_n < 0` are listed in `flagged`; with `withdraw_unprofitable` they are
/// removed one at a time (most negative first) until every offered good sells.
pub fn monopoly_equilibrium<T: Real>(fs: &FactorStructure<T>, prefs: &Preferences<T>) -> Result<PriceEquilibrium<T>> {
    monopoly_equilibrium_with(&Market::new(fs.clone(), prefs)?, MonopolyOptions::default())
}

pub fn monopoly_equilibrium_with<T: Real>(market: &Market<T>, opts: MonopolyOptions) -> Result<PriceEquilibrium<T>> {
    require_positive_delta(market)?;
    let n = market.n_goods();
    let phi = market.price_sensitivity;
    let half = lit::<T>(0.5);
    let mut active: Vec<usize> = (0..n).collect();
    loop {
        let (a, _) = market.restricted(&active)?;
        let p = market.delta.select_rows(&active) / (-(phi + phi));
        let q = a * half;
        let eq = PriceEquilibrium::assemble(n, active.clone(), &p, &q, Regime::Monopoly);
        if !opts.withdraw_unprofitable || eq.flagged.is_empty() || active.len() == 1 {
            return Ok(eq);
        }
        let worst = eq
            .flagged
            .iter()
            .copied()
            .min_by(|&x, &y| eq.quantities[x].partial_cmp(&eq.quantities[y]).unwrap_or(std::cmp::Ordering::Equal))
            .expect("flagged is non-empty");
        active.retain(|&g| g != worst);
    }
}

/// Aggregate monopoly profit `−(1/4φ) δ'Σ⁻¹δ`.
pub fn monopoly_profit<T: Real>(market: &Market<T>) -> T {
    let x = market.structure.solve(&market.delta);
    -market.delta.dot(&x) / (lit::<T>(4.0) * market.price_sensitivity)
}

/// Closed-form single-product equilibrium on an intercept/slope pair:
/// `x = (D + M)⁻¹ a`, `p = −x/φ`, `q = D x` with `D = diag(M)`.
pub(crate) fn bertrand_closed_form<T: Real>(a: &DVector<T>, m: &DMatrix<T>, phi: T) -> Result<(DVector<T>, DVector<T>)> {
    let mut lhs = m.clone();
    for i in 0..m.nrows() {
        lhs[(i, i)] += m[(i, i)];
    }
    let x = solve_spd(lhs, a)?;
    let p = &x / (-phi);
    let q = m.diagonal().component_mul(&x);
    Ok((p, q))
}

fn solve_spd<T: Real>(m: DMatrix<T>, rhs: &DVector<T>) -> Result<DVector<T>> {
    if let Some(chol) = m.clone().cholesky() {
        return Ok(chol.solve(rhs));
    }
    m.lu().solve(rhs).ok_or(ModelError::NotPositiveDefinite { min_eigenvalue: 0.0 })
}

/// Single-product firms, closed form `p* = −(1/φ)(D + Σ⁻¹)⁻¹Σ⁻¹δ` with `D = diag(Σ⁻¹)`.
///
/// Each price satisfies the firm's own first-order condition `q_n = −φ D_nn p_n`.
/// Negative quantities are reported in `flagged`; use [`iterative_bertrand`] to shut
/// such goods down.
pub fn single_product_equilibrium<T: Real>(fs: &FactorStructure<T>, prefs: &Preferences<T>) -> Result<PriceEquilibrium<T>> {
    let market = Market::new(fs.clone(), prefs)?;
    require_positive_delta(&market)?;
    single_product_closed_form(&market)
}

/// Closed-form single-product equilibrium for any linear demand system (no shutdown).
pub fn single_product_closed_form<T: Real, D: LinearDemand<T>>(demand: &D) -> Result<PriceEquilibrium<T>> {
    let n = demand.n_goods();
    let all: Vec<usize> = (0..n).collect();
    let (a, m) = demand.restricted(&all)?;
    let (p, q) = bertrand_closed_form(&a, &m, demand.price_sensitivity())?;
    Ok(PriceEquilibrium::assemble(n, all, &p, &q, Regime::SingleProductClosedForm))
}

/// Settings for [`iterative_bertrand`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BertrandOptions {
    /// Stop when the largest price change in a sweep falls below this.
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// Weight on the new best response, in `(0, 1]`.
    pub damping: f64,
}

impl Default for BertrandOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_sweeps: 10_000,
            damping: 1.0,
        }
    }
}

/// Single-product price competition with the shutdown rule.
pub fn iterative_bertrand<T: Real>(fs: &FactorStructure<T>, prefs: &Preferences<T>) -> Result<PriceEquilibrium<T>> {
    iterative_bertrand_with(&Market::new(fs.clone(), prefs)?, BertrandOptions::default())
}

/// Gauss-Seidel best-response iteration over firms in index order.
///
/// On the current active set, firm `n` faces the intercept
/// `a_n + φ Σ_{m≠n} M_nm p_m` and best-responds with `p_n = −intercept / (2φ M_nn)`.
/// A firm whose intercept is non-positive is priced at zero for the rest of the
/// round. Once prices settle, every firm that cannot sell even at a zero price is
/// removed and the equilibrium is recomputed on the survivors. Removed firms whose
/// re-entry intercept turns positive against the survivors' prices are readmitted,
/// until the active set no longer changes. Linear demand can make exit and re-entry
/// alternate forever; a firm that exits again after being readmitted stays out.
pub fn iterative_bertrand_with<T: Real, D: LinearDemand<T>>(demand: &D, opts: BertrandOptions) -> Result<PriceEquilibrium<T>> {
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(ModelError::invalid("damping", "must lie in (0, 1]"));
    }
    let n = demand.n_goods();
    let phi = demand.price_sensitivity();
    let tol = lit::<T>(opts.tolerance);
    let lambda = lit::<T>(opts.damping);
    let mut active: Vec<usize> = (0..n).collect();
    let mut sweeps_total = 0;
    let mut prices_full = DVector::<T>::zeros(n);
    let mut readmitted = vec![false; n];
    let mut barred = vec![false; n];
    // Each outer pass removes or readmits firms. A readmitted firm that exits again
    // stays out, which bounds the number of passes.
    for _ in 0..(4 * n + 4) {
        let (a, m) = demand.restricted(&active)?;
        let k = active.len();
        let mut p = DVector::from_iterator(k, active.iter().map(|&g| prices_full[g].max(T::zero())));
        let mut converged = false;
        for _ in 0..opts.max_sweeps {
            sweeps_total += 1;
            let mut change = T::zero();
            for i in 0..k {
                let mut intercept = a[i];
                for j in 0..k {
                    if j != i {
                        intercept += phi * m[(i, j)] * p[j];
                    }
                }
                let br = if intercept > T::zero() {
                    -intercept / ((phi + phi) * m[(i, i)])
                } else {
                    T::zero()
                };
                let next = p[i] + lambda * (br - p[i]);
                change = change.max((next - p[i]).abs());
                p[i] = next;
            }
            if change < tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(ModelError::NoConvergence {
                solver: "iterative Bertrand",
                iterations: opts.max_sweeps,
                residual: to_f64(residual_of(&a, &m, &p, phi)),
            });
        }
        let q = &a + (&m * &p) * phi;
        for (i, &g) in active.iter().enumerate() {
            prices_full[g] = p[i];
        }
        let exiting: Vec<usize> = (0..k).filter(|&i| !(q[i] > T::zero())).map(|i| active[i]).collect();
        if !exiting.is_empty() && exiting.len() < k {
            for g in &exiting {
                prices_full[*g] = T::zero();
                barred[*g] = readmitted[*g];
            }
            active.retain(|g| !exiting.contains(g));
            continue;
        }
        if exiting.len() == k {
            // Nobody can sell: the market is empty.
            let eq = PriceEquilibrium::assemble(n, Vec::new(), &DVector::zeros(0), &DVector::zeros(0), Regime::SingleProductIterative);
            return Ok(PriceEquilibrium {
                sweeps: sweeps_total,
                unsettled: (0..n).filter(|&g| barred[g]).collect(),
                ..eq
            });
        }
        let reentrant = (0..n)
            .filter(|&g| !active.contains(&g) && !barred[g])
            .find(|&g| reentry_intercept(demand, &active, &p, g).map(|v| v > T::zero()).unwrap_or(false));
        match reentrant {
            Some(g) => {
                readmitted[g] = true;
                active.push(g);
                active.sort_unstable();
            }
            None => {
                let mut eq = PriceEquilibrium::assemble(n, active, &p, &q, Regime::SingleProductIterative);
                eq.sweeps = sweeps_total;
                eq.unsettled = (0..n).filter(|&g| barred[g]).collect();
                return Ok(eq);
            }
        }
    }
    Err(ModelError::NoConvergence {
        solver: "shutdown active-set loop",
        iterations: 4 * n + 4,
        residual: f64::NAN,
    })
}

fn residual_of<T: Real>(a: &DVector<T>, m: &DMatrix<T>, p: &DVector<T>, phi: T) -> T {
    let q = a + (m * p) * phi;
    let mut worst = T::zero();
    for i in 0..p.len() {
        if p[i] > T::zero() {
            worst = worst.max((q[i] + phi * m[(i, i)] * p[i]).abs());
        }
    }
    worst
}

/// Demand of `good` if it re-entered at a zero price against `active` priced at `prices`.
pub fn reentry_intercept<T: Real, D: LinearDemand<T>>(demand: &D, active: &[usize], prices: &DVector<T>, good: usize) -> Result<T> {
    check_len("active prices", active.len(), prices.len())?;
    let mut goods = active.to_vec();
    goods.push(good);
    let (a, m) = demand.restricted(&goods)?;
    let k = active.len();
    let phi = demand.price_sensitivity();
    let mut value = a[k];
    for j in 0..k {
        value += phi * m[(k, j)] * prices[j];
    }
    Ok(value)
}

/// Consumer surplus `½(δ + φp)'Σ⁻¹(δ + φp)`.
pub fn consumer_surplus<T: Real>(fs: &FactorStructure<T>, prefs: &Preferences<T>, prices: &DVector<T>) -> Result<T> {
    check_len("prices", fs.n_goods(), prices.len())?;
    let d = delta(fs, prefs)?.values;
    Ok(surplus_of(fs, &d, prefs.price_sensitivity, prices))
}

pub(crate) fn surplus_of<T: Real>(fs: &FactorStructure<T>, delta: &DVector<T>, phi: T, prices: &DVector<T>) -> T {
    let net = delta + prices * phi;
    net.dot(&fs.solve(&net)) * lit(0.5)
}
