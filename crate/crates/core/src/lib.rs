//! Attribute-based linear demand markets.
//!
//! Goods are bundles of latent attributes. A representative consumer with quasi-linear
//! quadratic utility has linear demand `q = Σ⁻¹(δ + φp)` where the interaction matrix
//! has the factor form `Σ = ρI + SΓS'`. The crate covers pricing equilibria, optimal
//! design of attribute loadings, best-response design dynamics, two-consumer
//! differentiation maps and Givens-rotation utilities.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for `f32` and
//! `f64`); the `*F64` / `*F32` aliases below name the common instantiations.

pub mod demand;
pub mod design;
pub mod error;
pub mod hetero;
pub mod pricing;
pub mod rotation;
pub mod scalar;
pub mod search;
pub mod simulate;

pub use demand::{
    attribute_basis, attributes_from_characteristics, delta, demand, demand_jacobian, spectral_factorization,
    AttributeBasis, Characteristics, FactorStructure, MeanUtility, Preferences,
};
pub use design::{
    alignment_gradient, effective_taste, exclusivity_equilibrium, monopoly_aligned_profit, monopoly_design,
    monopoly_intensity, one_attribute_norm, orientation_rule, pairwise_diagnostic, pairwise_profit, symmetric_intensity,
    AttributePair, DesignSolution, ExclusivityOutcome, ExclusivityPartition,
};
pub use error::{ModelError, Result};
pub use hetero::{
    mixed_monopoly_profit, mixed_sigma, pooled_monopoly_profit, rho_star_duopoly, rho_star_monopoly, ConsumerMix,
    DuopolyOptions, DuopolyRho, MixedMarket, RhoGrid, SwappedTastes,
};
pub use pricing::{
    consumer_surplus, iterative_bertrand, iterative_bertrand_with, monopoly_equilibrium, monopoly_equilibrium_with,
    monopoly_profit, reentry_intercept, single_product_closed_form, single_product_equilibrium, BertrandOptions,
    LinearDemand, Market, MonopolyOptions, PriceEquilibrium, Regime,
};
pub use rotation::{
    compose_u, givens, minv_apply, recover_angle, AngleEstimate, RotationParams, ShrinkageWeights,
};
pub use scalar::{lit, Real};
pub use simulate::{
    alignment_report, firm_objective, heterogeneous_orientation_check, run_best_response, simulate, DesignCost, Init,
    SimConfig, SimResult,
};

pub type FactorStructureF64 = FactorStructure<f64>;
pub type FactorStructureF32 = FactorStructure<f32>;
pub type PreferencesF64 = Preferences<f64>;
pub type PreferencesF32 = Preferences<f32>;
pub type MarketF64 = Market<f64>;
pub type PriceEquilibriumF64 = PriceEquilibrium<f64>;
pub type PriceEquilibriumF32 = PriceEquilibrium<f32>;
pub type DesignSolutionF64 = DesignSolution<f64>;
pub type DesignSolutionF32 = DesignSolution<f32>;
pub type AttributePairF64 = AttributePair<f64>;
pub type RotationParamsF64 = RotationParams<f64>;
pub type ConsumerMixF64 = ConsumerMix<f64>;
pub type RhoGridF64 = RhoGrid<f64>;
pub type SimConfigF64 = SimConfig<f64>;
pub type SimResultF64 = SimResult<f64>;
