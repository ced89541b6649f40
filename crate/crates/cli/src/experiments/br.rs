//! Batches of best-response design simulations.

use attribmkt::design::symmetric_intensity;
use attribmkt::{simulate, DesignCost, Init, ModelError, SimConfig, SimResult};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::config::{BrSimParams, InitKind, DEFAULT_COST};

fn matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let ncols = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

pub fn sim_config(p: &BrSimParams, seed: u64) -> SimConfig<f64> {
    let cost = if let Some(w) = &p.cost_per_attribute {
        DesignCost::PerAttribute(DVector::from_column_slice(w))
    } else if let Some(m) = &p.cost_matrix {
        DesignCost::PerFirm(matrix(m))
    } else {
        DesignCost::Scalar(p.c.unwrap_or(DEFAULT_COST))
    };
    let init = match p.init {
        InitKind::Random => Init::RandomGaussian,
        InitKind::Symmetric => Init::Symmetric,
        InitKind::Custom => Init::Custom(matrix(p.init_design.as_deref().unwrap_or_default())),
    };
    let mut cfg = SimConfig::new(
        p.n_firms,
        DVector::from_column_slice(&p.b),
        DVector::from_column_slice(&p.gamma),
        p.phi,
        cost,
    )
    .with_seed(seed)
    .with_init(init);
    cfg.fd_step = p.fd_step;
    cfg.ascent_rate = p.ascent_rate;
    cfg.ascent_steps = p.ascent_steps;
    cfg.max_rounds = p.max_rounds;
    cfg.design_tol = p.design_tol;
    cfg
}

pub fn seeds(p: &BrSimParams, base: u64) -> Vec<u64> {
    (0..p.runs as u64).map(|r| base.wrapping_add(r)).collect()
}

/// Runs every seed on the current rayon pool; results are in seed order.
pub fn run_batch(p: &BrSimParams, base_seed: u64) -> Vec<(u64, Result<SimResult<f64>, ModelError>)> {
    seeds(p, base_seed)
        .into_par_iter()
        .map(|s| (s, simulate(&sim_config(p, s))))
        .collect()
}

/// Symmetric-competition intensity for the surviving firm count, when the cost is a
/// scalar.
pub fn reference_intensity(p: &BrSimParams, survivors: usize) -> Option<f64> {
    if p.cost_per_attribute.is_some() || p.cost_matrix.is_some() || survivors == 0 {
        return None;
    }
    let b = DVector::from_column_slice(&p.b);
    let g = DVector::from_column_slice(&p.gamma);
    symmetric_intensity(&b, &g, p.c.unwrap_or(DEFAULT_COST), p.phi, survivors).ok()
}
