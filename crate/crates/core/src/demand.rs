//! Factor form of the interaction matrix and the linear demand system it induces.
//!
//! The interaction matrix is `Σ = ρI + S Γ S'` with `S` the `N×K` attribute loadings,
//! `Γ = diag(γ)` and `ρ > 0`. Every inverse goes through the `K×K` capacitance matrix
//! `ρΓ⁻¹ + S'S`, so nothing `N×N` is ever factorized.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{ModelError, Result};
use crate::scalar::{lit, to_f64, Real};

/// Relative tolerance for numerical rank and eigenvalue clipping.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Interaction matrix `Σ = ρI + Σ_k γ_k s_k s_k'` held in factor form.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorStructure<T: Real> {
    loadings: DMatrix<T>,
    weights: DVector<T>,
    baseline: T,
}

impl<T: Real> FactorStructure<T> {
    /// Builds a factor structure, checking `γ_k > 0`, `ρ > 0` and dimensions.
    pub fn new(loadings: DMatrix<T>, weights: DVector<T>, baseline: T) -> Result<Self> {
        if loadings.ncols() != weights.len() {
            return Err(ModelError::Dimension {
                what: "attribute weights",
                expected: loadings.ncols(),
                got: weights.len(),
            });
        }
        if loadings.nrows() == 0 {
            return Err(ModelError::invalid("n_goods", "market needs at least one good"));
        }
        if !(baseline > T::zero()) {
            return Err(ModelError::invalid("baseline", format!("ρ must be positive, got {}", to_f64(baseline))));
        }
        if let Some(k) = weights.iter().position(|g| !(*g > T::zero())) {
            return Err(ModelError::invalid(
                "weights",
                format!("γ_{k} must be positive, got {}", to_f64(weights[k])),
            ));
        }
        if loadings.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::invalid("loadings", "non-finite entry"));
        }
        Ok(Self {
            loadings,
            weights,
            baseline,
        })
    }

    /// Factor structure with the conventional baseline `ρ = 1`.
    pub fn with_unit_baseline(loadings: DMatrix<T>, weights: DVector<T>) -> Result<Self> {
        Self::new(loadings, weights, T::one())
    }

    /// `Σ = ρI` with no attribute factors.
    pub fn isotropic(n_goods: usize, baseline: T) -> Result<Self> {
        Self::new(DMatrix::zeros(n_goods, 0), DVector::zeros(0), baseline)
    }

    pub fn n_goods(&self) -> usize {
        self.loadings.nrows()
    }

    pub fn n_attrs(&self) -> usize {
        self.loadings.ncols()
    }

    pub fn loadings(&self) -> &DMatrix<T> {
        &self.loadings
    }

    pub fn weights(&self) -> &DVector<T> {
        &self.weights
    }

    pub fn baseline(&self) -> T {
        self.baseline
    }

    /// Dense `ρI + S Γ S'`.
    pub fn sigma_dense(&self) -> DMatrix<T> {
        let n = self.n_goods();
        let mut sigma = DMatrix::identity(n, n) * self.baseline;
        for (k, s) in self.loadings.column_iter().enumerate() {
            sigma.ger(self.weights[k], &s, &s, T::one());
        }
        sigma
    }

    /// Exact `Σ⁻¹ = (1/ρ)[I − S(ρΓ⁻¹ + S'S)⁻¹S']`.
    pub fn sigma_inverse(&self) -> DMatrix<T> {
        let n = self.n_goods();
        let inv_rho = T::one() / self.baseline;
        let mut inv = DMatrix::identity(n, n) * inv_rho;
        if self.n_attrs() == 0 {
            return inv;
        }
        let st = self.loadings.transpose();
        let w = solve_capacitance(&self.capacitance(), st);
        // inv -= (1/ρ) S W, with W = C⁻¹S'
        inv.gemm(-inv_rho, &self.loadings, &w, T::one());
        symmetrize(&mut inv);
        inv
    }

    /// `Σ⁻¹ v` through the Woodbury identity.
    pub fn solve(&self, v: &DVector<T>) -> DVector<T> {
        let inv_rho = T::one() / self.baseline;
        if self.n_attrs() == 0 {
            return v * inv_rho;
        }
        let stv = self.loadings.tr_mul(v);
        let y = solve_capacitance(&self.capacitance(), DMatrix::from_column_slice(stv.len(), 1, stv.as_slice()));
        let correction = &self.loadings * y.column(0);
        (v - correction) * inv_rho
    }

    /// Sub-market containing only `goods` (in the given order).
    ///
    /// Removing goods from the choice set removes their rows from `S`; the factor
    /// form is preserved.
    pub fn restrict(&self, goods: &[usize]) -> Result<Self> {
        if let Some(&g) = goods.iter().find(|&&g| g >= self.n_goods()) {
            return Err(ModelError::Dimension {
                what: "good index",
                expected: self.n_goods(),
                got: g,
            });
        }
        Self::new(self.loadings.select_rows(goods), self.weights.clone(), self.baseline)
    }

    /// `K×K` capacitance matrix `ρΓ⁻¹ + S'S`.
    fn capacitance(&self) -> DMatrix<T> {
        let mut c = self.loadings.tr_mul(&self.loadings);
        for k in 0..self.n_attrs() {
            c[(k, k)] += self.baseline / self.weights[k];
        }
        c
    }
}

fn solve_capacitance<T: Real>(c: &DMatrix<T>, rhs: DMatrix<T>) -> DMatrix<T> {
    match Cholesky::new(c.clone()) {
        Some(chol) => chol.solve(&rhs),
        None => c
            .clone()
            .lu()
            .solve(&rhs)
            .expect("capacitance matrix is positive definite for positive weights"),
    }
}

pub(crate) fn symmetrize<T: Real>(m: &mut DMatrix<T>) {
    let half = lit::<T>(0.5);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            let avg = (m[(i, j)] + m[(j, i)]) * half;
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Consumer-side primitives.
#[derive(Debug, Clone, PartialEq)]
pub struct Preferences<T: Real> {
    /// Attribute taste weights `b`.
    pub attr_weights: DVector<T>,
    /// Price sensitivity `φ < 0`.
    pub price_sensitivity: T,
    /// Attribute cost scale `c > 0`.
    pub attr_cost: T,
    /// Latent utility component `v` (zero when absent).
    pub noise: Option<DVector<T>>,
}

impl<T: Real> Preferences<T> {
    pub fn new(attr_weights: DVector<T>, price_sensitivity: T, attr_cost: T) -> Result<Self> {
        if !(price_sensitivity < T::zero()) {
            return Err(ModelError::invalid(
                "price_sensitivity",
                format!("φ must be negative, got {}", to_f64(price_sensitivity)),
            ));
        }
        if !(attr_cost > T::zero()) {
            return Err(ModelError::invalid(
                "attr_cost",
                format!("c must be positive, got {}", to_f64(attr_cost)),
            ));
        }
        Ok(Self {
            attr_weights,
            price_sensitivity,
            attr_cost,
            noise: None,
        })
    }

    pub fn with_noise(mut self, noise: DVector<T>) -> Self {
        self.noise = Some(noise);
        self
    }

    /// `b̂_k = b_k / √γ_k`.
    pub fn scaled_weights(&self, gamma: &DVector<T>) -> DVector<T> {
        self.attr_weights.zip_map(gamma, |b, g| b / g.sqrt())
    }
}

/// Mean utilities `δ` together with the goods whose utility is not positive.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanUtility<T: Real> {
    pub values: DVector<T>,
    pub nonpositive: Vec<usize>,
}

impl<T: Real> MeanUtility<T> {
    pub fn is_positive(&self) -> bool {
        self.nonpositive.is_empty()
    }

    /// Fails when any entry is `≤ 0`.
    pub fn require_positive(self) -> Result<DVector<T>> {
        if self.nonpositive.is_empty() {
            Ok(self.values)
        } else {
            Err(ModelError::NonPositiveUtility { goods: self.nonpositive })
        }
    }
}

/// `δ = S b + v`.
pub fn delta<T: Real>(fs: &FactorStructure<T>, prefs: &Preferences<T>) -> Result<MeanUtility<T>> {
    if prefs.attr_weights.len() != fs.n_attrs() {
        return Err(ModelError::Dimension {
            what: "attribute weights b",
            expected: fs.n_attrs(),
            got: prefs.attr_weights.len(),
        });
    }
    let mut values = fs.loadings() * &prefs.attr_weights;
    if let Some(v) = &prefs.noise {
        if v.len() != fs.n_goods() {
            return Err(ModelError::Dimension {
                what: "noise v",
                expected: fs.n_goods(),
                got: v.len(),
            });
        }
        values += v;
    }
    let nonpositive = values
        .iter()
        .enumerate()
        .filter(|(_, d)| !(**d > T::zero()))
        .map(|(i, _)| i)
        .collect();
    Ok(MeanUtility { values, nonpositive })
}

/// Quantities `q = Σ⁻¹(δ + φp)`; entries may be negative.
pub fn demand<T: Real>(fs: &FactorStructure<T>, prefs: &Preferences<T>, prices: &DVector<T>) -> Result<DVector<T>> {
    check_len("prices", fs.n_goods(), prices.len())?;
    let d = delta(fs, prefs)?.values;
    Ok(fs.solve(&(d + prices * prefs.price_sensitivity)))
}

/// Price Jacobian `∂q/∂p = φΣ⁻¹`.
///
/// Entry `(a, b)` is the slope of good `a`'s demand in good `b`'s price; the log-log
/// elasticity additionally scales it by `p_b / q_a`.
pub fn demand_jacobian<T: Real>(fs: &FactorStructure<T>, prefs: &Preferences<T>) -> DMatrix<T> {
    fs.sigma_inverse() * prefs.price_sensitivity
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(ModelError::Dimension { what, expected, got })
    }
}

/// Raw product characteristics `X` (`N×K`, full column rank).
#[derive(Debug, Clone, PartialEq)]
pub struct Characteristics<T: Real>(pub DMatrix<T>);

/// Orthonormal attribute basis `Z` and triangular factor `R` with `X = Z R`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeBasis<T: Real> {
    pub z: DMatrix<T>,
    pub r: DMatrix<T>,
}

/// Thin QR of the characteristics with each column of `Z` signed so that its
/// largest-magnitude entry is positive.
pub fn attribute_basis<T: Real>(x: &Characteristics<T>) -> Result<AttributeBasis<T>> {
    let x = &x.0;
    let (n, k) = x.shape();
    if k == 0 || n < k {
        return Err(ModelError::RankDeficient { rank: n.min(k), columns: k });
    }
    let sv = x.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let tol = smax * lit(RANK_TOLERANCE);
    let rank = sv.iter().filter(|s| **s > tol).count();
    if rank < k {
        return Err(ModelError::RankDeficient { rank, columns: k });
    }
    let qr = x.clone().qr();
    let mut z = qr.q();
    let mut r = qr.r();
    for j in 0..k {
        if dominant_entry_negative(z.column(j).iter().copied()) {
            z.column_mut(j).neg_mut();
            r.row_mut(j).neg_mut();
        }
    }
    Ok(AttributeBasis { z, r })
}

/// Orthonormal attributes `Z` spanning the characteristics.
pub fn attributes_from_characteristics<T: Real>(x: &Characteristics<T>) -> Result<DMatrix<T>> {
    attribute_basis(x).map(|b| b.z)
}

/// True when the first largest-magnitude entry is negative.
pub(crate) fn dominant_entry_negative<T: Real>(entries: impl Iterator<Item = T>) -> bool {
    let mut best = T::zero();
    let mut best_abs = T::zero();
    for e in entries {
        if e.abs() > best_abs {
            best_abs = e.abs();
            best = e;
        }
    }
    best < T::zero()
}

/// Factor form of a known SPD `Σ` with baseline `ρ`.
///
/// Eigenpairs with `λ − ρ` above `RANK_TOLERANCE·λ_max` become factors with weight
/// `γ = λ − ρ`, ordered by decreasing eigenvalue; the rest are clipped to `ρ`, so the
/// reconstruction is exact only when every eigenvalue exceeds `ρ`.
pub fn spectral_factorization<T: Real>(sigma: &DMatrix<T>, baseline: T) -> Result<FactorStructure<T>> {
    let (n, m) = sigma.shape();
    check_len("square interaction matrix", n, m)?;
    let scale = sigma.amax().max(T::one());
    let mut asym = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((sigma[(i, j)] - sigma[(j, i)]).abs());
        }
    }
    if asym > scale * lit(1e-10) {
        return Err(ModelError::NotSymmetric { asymmetry: to_f64(asym) });
    }
    let eig = SymmetricEigen::new(sigma.clone());
    let min_eig = eig.eigenvalues.min();
    if !(min_eig > T::zero()) {
        return Err(ModelError::NotPositiveDefinite {
            min_eigenvalue: to_f64(min_eig),
        });
    }
    let max_eig = eig.eigenvalues.max();
    let tol = max_eig * lit(RANK_TOLERANCE);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| eig.eigenvalues[i] - baseline > tol)
        .collect();
    let mut loadings = DMatrix::zeros(n, kept.len());
    let mut weights = DVector::zeros(kept.len());
    for (k, &i) in kept.iter().enumerate() {
        let mut u = eig.eigenvectors.column(i).into_owned();
        if dominant_entry_negative(u.iter().copied()) {
            u.neg_mut();
        }
        loadings.set_column(k, &u);
        weights[k] = eig.eigenvalues[i] - baseline;
    }
    FactorStructure::new(loadings, weights, baseline)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn fs(s: DMatrix<f64>, g: DVector<f64>) -> FactorStructure<f64> {
        FactorStructure::with_unit_baseline(s, g).unwrap()
    }

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.amax()
    }

    #[test]
    fn sigma_dense_examples() {
        let a = fs(dmatrix![1.0; 0.0], dvector![1.0]);
        assert_eq!(a.sigma_dense(), dmatrix![2.0, 0.0; 0.0, 1.0]);
        let b = FactorStructure::<f64>::isotropic(3, 1.0).unwrap();
        assert_eq!(b.sigma_dense(), DMatrix::identity(3, 3));
        let c = fs(dmatrix![1.0; 1.0], dvector![1.0]);
        assert_eq!(c.sigma_dense(), dmatrix![2.0, 1.0; 1.0, 2.0]);
    }

    #[test]
    fn sigma_inverse_examples() {
        let a = fs(dmatrix![1.0; 0.0], dvector![1.0]);
        assert!(max_abs(&(a.sigma_inverse() - dmatrix![0.5, 0.0; 0.0, 1.0])) < 1e-15);
        let c = fs(dmatrix![1.0; 1.0], dvector![1.0]);
        let want = dmatrix![2.0, -1.0; -1.0, 2.0] / 3.0;
        assert!(max_abs(&(c.sigma_inverse() - want)) < 1e-15);
    }

    #[test]
    fn inverse_with_general_baseline() {
        let a = FactorStructure::new(dmatrix![1.0, 0.5; 2.0, -1.0; 0.0, 1.0], dvector![0.7, 3.0], 2.5).unwrap();
        let prod = a.sigma_inverse() * a.sigma_dense();
        assert!(max_abs(&(prod - DMatrix::identity(3, 3))) < 1e-13);
        let v = dvector![1.0, -2.0, 0.5];
        let x = a.solve(&v);
        assert!((a.sigma_dense() * x - v).amax() < 1e-13);
    }

    #[test]
    fn orthonormal_loadings_give_diagonal_shrinkage() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let a = FactorStructure::new(dmatrix![h, 0.0; h, 0.0; 0.0, 1.0], dvector![2.0, 5.0], 1.0).unwrap();
        let mut want = DMatrix::<f64>::identity(3, 3);
        for k in 0..2 {
            let s = a.loadings().column(k);
            let g = a.weights()[k];
            want -= s * s.transpose() * (g / (1.0 + g));
        }
        assert!(max_abs(&(a.sigma_inverse() - want)) < 1e-12);
    }

    #[test]
    fn rejects_bad_structure() {
        assert!(FactorStructure::new(dmatrix![1.0; 1.0], dvector![0.0], 1.0).is_err());
        assert!(FactorStructure::new(dmatrix![1.0; 1.0], dvector![1.0], 0.0).is_err());
        assert!(FactorStructure::new(dmatrix![1.0; 1.0], dvector![1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn delta_examples() {
        let p = |b: DVector<f64>| Preferences::new(b, -1.0, 0.1).unwrap();
        let a = fs(dmatrix![1.0; 1.0], dvector![1.0]);
        assert_eq!(delta(&a, &p(dvector![1.0])).unwrap().values, dvector![1.0, 1.0]);
        let i2 = fs(DMatrix::identity(2, 2), dvector![1.0, 1.0]);
        assert_eq!(delta(&i2, &p(dvector![2.0, 3.0])).unwrap().values, dvector![2.0, 3.0]);
        let noisy = p(dvector![1.0, 1.0]).with_noise(dvector![0.1, -0.1]);
        let d = delta(&i2, &noisy).unwrap();
        assert!((&d.values - dvector![1.1, 0.9]).amax() < 1e-15);
        assert!(d.is_positive());
    }

    #[test]
    fn delta_flags_nonpositive_entries() {
        let i2 = fs(DMatrix::identity(2, 2), dvector![1.0, 1.0]);
        let prefs = Preferences::new(dvector![1.0, -0.5], -1.0, 0.1).unwrap();
        let d = delta(&i2, &prefs).unwrap();
        assert_eq!(d.nonpositive, vec![1]);
        assert!(d.require_positive().is_err());
    }

    #[test]
    fn demand_examples() {
        let iso = FactorStructure::<f64>::new(DMatrix::identity(2, 2), dvector![1e-300, 1e-300], 1.0).unwrap();
        let prefs = Preferences::new(dvector![1.0, 1.0], -1.0, 0.1).unwrap();
        let q = demand(&iso, &prefs, &dvector![0.5, 0.5]).unwrap();
        assert!((q - dvector![0.5, 0.5]).amax() < 1e-15);
        let q = demand(&iso, &prefs, &dvector![1.0, 1.0]).unwrap();
        assert!(q.amax() < 1e-15);

        let c = fs(dmatrix![1.0; 1.0], dvector![1.0]);
        let q = demand(&c, &Preferences::new(dvector![1.0], -1.0, 0.1).unwrap(), &dvector![1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((q - dvector![2.0 / 9.0, 2.0 / 9.0]).amax() < 1e-15);
    }

    #[test]
    fn jacobian_examples() {
        let iso = FactorStructure::<f64>::isotropic(2, 1.0).unwrap();
        let prefs = Preferences::new(dvector![], -1.0, 0.1).unwrap();
        assert_eq!(demand_jacobian(&iso, &prefs), -DMatrix::<f64>::identity(2, 2));
        let d = fs(dmatrix![1.0; 0.0], dvector![1.0]);
        let prefs = Preferences::new(dvector![1.0], -2.0, 0.1).unwrap();
        assert!((demand_jacobian(&d, &prefs) - dmatrix![-1.0, 0.0; 0.0, -2.0]).amax() < 1e-15);
    }

    #[test]
    fn attributes_examples() {
        let x = Characteristics(dmatrix![1.0, 0.0; 0.0, -1.0; 0.0, 0.0]);
        let z = attributes_from_characteristics(&x).unwrap();
        assert!((z - dmatrix![1.0, 0.0; 0.0, 1.0; 0.0, 0.0]).amax() < 1e-15);
        let z = attributes_from_characteristics(&Characteristics(dmatrix![1.0; 1.0])).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((z - dmatrix![h; h]).amax() < 1e-15);
    }

    #[test]
    fn attributes_reject_rank_deficiency() {
        let x = Characteristics(dmatrix![1.0, 2.0; 2.0, 4.0; 3.0, 6.0]);
        assert!(matches!(
            attributes_from_characteristics(&x),
            Err(ModelError::RankDeficient { rank: 1, columns: 2 })
        ));
    }

    #[test]
    fn qr_factor_reconstructs_characteristics() {
        let x = Characteristics(dmatrix![1.0, 2.0; -3.0, 0.5; 0.2, 1.0; 4.0, -1.0]);
        let basis = attribute_basis(&x).unwrap();
        assert!((&basis.z * &basis.r - &x.0).amax() < 1e-13);
    }

    #[test]
    fn spectral_examples() {
        let f = spectral_factorization::<f64>(&dmatrix![2.0, 1.0; 1.0, 2.0], 1.0).unwrap();
        assert_eq!(f.n_attrs(), 1);
        assert!((f.weights()[0] - 2.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((f.loadings().column(0) - dvector![h, h]).amax() < 1e-14);
        assert!((f.sigma_dense() - dmatrix![2.0, 1.0; 1.0, 2.0]).amax() < 1e-14);

        let f = spectral_factorization(&DMatrix::<f64>::identity(3, 3), 1.0).unwrap();
        assert_eq!(f.n_attrs(), 0);

        let f = spectral_factorization::<f64>(&dmatrix![3.0, 0.0; 0.0, 0.6], 1.0).unwrap();
        assert_eq!(f.n_attrs(), 1);
        assert!((f.weights()[0] - 2.0).abs() < 1e-14);
        assert!((f.loadings().column(0) - dvector![1.0, 0.0]).amax() < 1e-14);
        let err = f.sigma_dense() - dmatrix![3.0, 0.0; 0.0, 0.6];
        let spectral_norm = err.svd(false, false).singular_values.max();
        assert!((spectral_norm - 0.4).abs() < 1e-14);
    }

    #[test]
    fn spectral_rejects_invalid_input() {
        assert!(matches!(
            spectral_factorization(&dmatrix![1.0, 0.5; 0.0, 1.0], 1.0),
            Err(ModelError::NotSymmetric { .. })
        ));
        assert!(matches!(
            spectral_factorization(&dmatrix![1.0, 2.0; 2.0, 1.0], 1.0),
            Err(ModelError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn restrict_keeps_factor_form() {
        let a = fs(dmatrix![1.0, 0.0; 0.5, 1.0; 0.2, 0.3], dvector![1.0, 2.0]);
        let sub = a.restrict(&[0, 2]).unwrap();
        let dense = a.sigma_dense().select_rows(&[0, 2]).select_columns(&[0, 2]);
        assert!((sub.sigma_dense() - dense).amax() < 1e-15);
    }

    #[test]
    fn single_precision_inverse() {
        let a = FactorStructure::<f32>::with_unit_baseline(dmatrix![1.0f32; 1.0], dvector![1.0f32]).unwrap();
        let prod = a.sigma_inverse() * a.sigma_dense();
        assert!((prod - DMatrix::<f32>::identity(2, 2)).amax() < 1e-6);
    }
}
