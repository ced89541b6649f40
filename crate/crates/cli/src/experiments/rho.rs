//! ρ* maps over taste and weight ratios for the swapped-tastes two-consumer market.

use attribmkt::hetero::geometric_axis;
use attribmkt::{rho_star_duopoly, rho_star_monopoly, DuopolyOptions, ModelError, SwappedTastes};

use crate::config::RhoGridParams;
use crate::output::GridResult;

pub const AXES: [&str; 2] = ["taste_ratio", "weight_ratio"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    Monopoly,
    Duopoly,
}

impl Structure {
    pub fn name(self) -> &'static str {
        match self {
            Structure::Monopoly => "monopoly",
            Structure::Duopoly => "duopoly",
        }
    }
}

pub fn problem(p: &RhoGridParams, taste_ratio: f64, weight_ratio: f64) -> Result<SwappedTastes<f64>, ModelError> {
    SwappedTastes::new(taste_ratio, 1.0, weight_ratio, 1.0, p.phi)?.with_mu(p.mu)
}

pub fn rho_cell(p: &RhoGridParams, structure: Structure, taste_ratio: f64, weight_ratio: f64) -> Result<f64, ModelError> {
    let prob = problem(p, taste_ratio, weight_ratio)?;
    Ok(match structure {
        Structure::Monopoly => rho_star_monopoly(&prob),
        Structure::Duopoly => rho_star_duopoly(&prob, DuopolyOptions::default())?.rho,
    })
}

pub fn axes(p: &RhoGridParams) -> (Vec<f64>, Vec<f64>) {
    let [t0, t1] = p.taste_ratio_range;
    let [w0, w1] = p.weight_ratio_range;
    (geometric_axis(t0, t1, p.resolution), geometric_axis(w0, w1, p.resolution))
}

pub fn rho_grid(p: &RhoGridParams, structure: Structure) -> GridResult {
    let (a1, a2) = axes(p);
    GridResult::evaluate(AXES, a1, a2, &["rho_star"], |b, g| rho_cell(p, structure, b, g).map(|r| vec![r]))
}
