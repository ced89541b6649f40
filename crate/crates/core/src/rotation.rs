//! Givens parameterization of a latent attribute rotation and pairwise angle recovery.
//!
//! Indices are zero-based throughout.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::error::{ModelError, Result};
use crate::scalar::{lit, to_f64, Real};

/// Gram deviation above which loadings are rejected as non-orthonormal.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-8;

/// Rotation `G(i, j, θ)` in dimension `k`: identity except
/// `G_ii = G_jj = cos θ`, `G_ij = sin θ`, `G_ji = −sin θ`.
pub fn givens<T: Real>(i: usize, j: usize, theta: T, k: usize) -> Result<DMatrix<T>> {
    if !(i < j && j < k) {
        return Err(ModelError::RotationIndex { i, j, dim: k });
    }
    let mut g = DMatrix::identity(k, k);
    let (s, c) = theta.sin_cos();
    g[(i, i)] = c;
    g[(j, j)] = c;
    g[(i, j)] = s;
    g[(j, i)] = -s;
    Ok(g)
}

/// Ordered list of Givens angles.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationParams<T: Real> {
    dim: usize,
    angles: Vec<(usize, usize, T)>,
}

fn wrap_angle<T: Real>(theta: T) -> T {
    let two_pi = T::two_pi();
    let mut t = theta - two_pi * (theta / two_pi).round();
    if t <= -T::pi() {
        t += two_pi;
    }
    if t > T::pi() {
        t -= two_pi;
    }
    t
}

impl<T: Real> RotationParams<T> {
    /// Angles are wrapped into `(−π, π]` and sorted lexicographically by `(i, j)`;
    /// each pair may appear once.
    pub fn new(dim: usize, mut angles: Vec<(usize, usize, T)>) -> Result<Self> {
        for &(i, j, _) in &angles {
            if !(i < j && j < dim) {
                return Err(ModelError::RotationIndex { i, j, dim });
            }
        }
        angles.sort_by_key(|&(i, j, _)| (i, j));
        if angles.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(ModelError::invalid("angles", "each index pair may appear only once"));
        }
        for a in &mut angles {
            a.2 = wrap_angle(a.2);
        }
        Ok(Self { dim, angles })
    }

    /// Keeps the given order instead of sorting (to study order dependence).
    pub fn in_order(dim: usize, angles: Vec<(usize, usize, T)>) -> Result<Self> {
        for &(i, j, _) in &angles {
            if !(i < j && j < dim) {
                return Err(ModelError::RotationIndex { i, j, dim });
            }
        }
        let angles = angles.into_iter().map(|(i, j, t)| (i, j, wrap_angle(t))).collect();
        Ok(Self { dim, angles })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn angles(&self) -> &[(usize, usize, T)] {
        &self.angles
    }
}

/// `U(θ) = G₁ G₂ ⋯ G_m` in stored order.
pub fn compose_u<T: Real>(params: &RotationParams<T>) -> DMatrix<T> {
    let k = params.dim;
    let mut u = DMatrix::identity(k, k);
    for &(i, j, theta) in &params.angles {
        // right-multiplying by G only mixes columns i and j
        let (s, c) = theta.sin_cos();
        for r in 0..k {
            let (a, b) = (u[(r, i)], u[(r, j)]);
            u[(r, i)] = a * c - b * s;
            u[(r, j)] = a * s + b * c;
        }
    }
    u
}

/// `α_k = γ_k/(1+γ_k)` and `β_k = 1 − α_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkageWeights<T: Real> {
    pub alphas: DVector<T>,
    pub betas: DVector<T>,
}

impl<T: Real> ShrinkageWeights<T> {
    pub fn from_gamma(gamma: &DVector<T>) -> Result<Self> {
        if gamma.iter().any(|g| !(*g > T::zero())) {
            return Err(ModelError::invalid("gamma", "all weights must be positive"));
        }
        let alphas = gamma.map(|g| g / (T::one() + g));
        let betas = gamma.map(|g| T::one() / (T::one() + g));
        Ok(Self { alphas, betas })
    }

    /// `(β_s, β_d) = ((β_p+β_q)/2, (β_p−β_q)/2)`.
    pub fn pair(&self, p: usize, q: usize) -> (T, T) {
        pair_betas(self.betas[p], self.betas[q])
    }
}

pub fn pair_betas<T: Real>(beta_p: T, beta_q: T) -> (T, T) {
    let half = lit::<T>(0.5);
    ((beta_p + beta_q) * half, (beta_p - beta_q) * half)
}

/// Largest entry of `|S'S − I|`.
pub fn gram_deviation<T: Real>(s: &DMatrix<T>) -> T {
    let mut g = s.tr_mul(s);
    for i in 0..g.nrows() {
        g[(i, i)] -= T::one();
    }
    g.amax()
}

/// `h = v − Σ_k α_k (s_k'v) s_k` for orthonormal columns `s_k`.
pub fn minv_apply<T: Real>(alphas: &DVector<T>, s: &DMatrix<T>, v: &DVector<T>) -> Result<DVector<T>> {
    if alphas.len() != s.ncols() {
        return Err(ModelError::Dimension {
            what: "shrinkage weights",
            expected: s.ncols(),
            got: alphas.len(),
        });
    }
    if v.len() != s.nrows() {
        return Err(ModelError::Dimension {
            what: "vector",
            expected: s.nrows(),
            got: v.len(),
        });
    }
    let dev = gram_deviation(s);
    if dev > lit(ORTHONORMAL_TOLERANCE) {
        return Err(ModelError::NotOrthonormal { deviation: to_f64(dev) });
    }
    let coords = s.tr_mul(v).component_mul(alphas);
    Ok(v - s * coords)
}

/// `β_s I + β_d T(θ)` with `T(θ) = [[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]]`: the pair block
/// of `M(θ)⁻¹` after rotating the pair by `θ`.
pub fn pair_forward<T: Real>(beta_p: T, beta_q: T, theta: T) -> Matrix2<T> {
    let (bs, bd) = pair_betas(beta_p, beta_q);
    let (s2, c2) = (theta + theta).sin_cos();
    Matrix2::new(bs + bd * c2, bd * s2, bd * s2, bs - bd * c2)
}

/// Least-squares angle for one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleEstimate<T: Real> {
    /// Estimate in `(−π/2, π/2]`.
    pub theta: T,
    /// The other representative of the same `2θ` class shifted by `π/2`, in `(−π/2, π/2]`.
    pub alternate: T,
    /// `| ‖r‖ − |β_d| ‖v‖ |`.
    pub residual: T,
}

/// Recovers the pair angle from `h₂ = [β_s I + β_d T(θ)] v₂`.
///
/// `u = J(v)⁻¹ r / β_d` already carries the sign of `β_d`, so `θ̂ = ½ atan2(u₂, u₁)`
/// for either sign.
pub fn recover_angle<T: Real>(v: &Vector2<T>, h: &Vector2<T>, beta_p: T, beta_q: T) -> Result<AngleEstimate<T>> {
    let (bs, bd) = pair_betas(beta_p, beta_q);
    if bd == T::zero() {
        return Err(ModelError::DegeneratePair("β_p = β_q leaves the angle unidentified"));
    }
    let vv = v.norm_squared();
    if !(vv > T::zero()) {
        return Err(ModelError::DegeneratePair("zero pair vector makes J(v) singular"));
    }
    let r = h - v * bs;
    let u = Vector2::new(v[0] * r[0] - v[1] * r[1], v[1] * r[0] + v[0] * r[1]) / (vv * bd);
    if u[0] == T::zero() && u[1] == T::zero() {
        return Err(ModelError::DegeneratePair("h carries no information on the angle"));
    }
    let half = lit::<T>(0.5);
    let theta = normalize_half_open(u[1].atan2(u[0]) * half);
    let alternate = normalize_half_open(theta + T::frac_pi_2());
    let residual = (r.norm() - bd.abs() * vv.sqrt()).abs();
    Ok(AngleEstimate { theta, alternate, residual })
}

/// Maps an angle into `(−π/2, π/2]`.
fn normalize_half_open<T: Real>(theta: T) -> T {
    let pi = T::pi();
    let mut t = theta - pi * (theta / pi).round();
    if t <= -T::frac_pi_2() {
        t += pi;
    }
    if t > T::frac_pi_2() {
        t -= pi;
    }
    t
}

/// Residual `‖r − β_d J(v)[cos 2θ, sin 2θ]'‖` of a candidate angle.
pub fn pair_residual<T: Real>(v: &Vector2<T>, h: &Vector2<T>, beta_p: T, beta_q: T, theta: T) -> T {
    (h - pair_forward(beta_p, beta_q, theta) * v).norm()
}

/// Angle difference modulo `π`, in `[0, π/2]`.
pub fn angle_gap_mod_pi<T: Real>(a: T, b: T) -> T {
    normalize_half_open(a - b).abs()
}
