//! Consumer-surplus comparative statics in the reduced symmetric market.
//!
//! `N` goods share one attribute with loadings `t·y`, `y = 1/√N · 1`, so that
//! `Σ(t) = I + t² yy'` and `δ = t √B̂ y` with `B̂ = B/γ`. The monopolist and the `N`
//! single-product firms each pick their optimal `t`; surplus is evaluated at the
//! resulting equilibrium prices.

use attribmkt::design::{intensity_from_taste, symmetric_u};
use attribmkt::{
    consumer_surplus, monopoly_equilibrium, single_product_equilibrium, FactorStructure, ModelError, Preferences,
};
use nalgebra::{DMatrix, DVector};

use crate::config::{WelfareGridParams, WelfarePlane};
use crate::output::GridResult;

pub const OUTPUTS: [&str; 5] = ["t_monopoly", "t_competition", "cs_monopoly", "cs_competition", "delta_cs"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelfareCell {
    pub t_monopoly: f64,
    pub t_competition: f64,
    pub cs_monopoly: f64,
    pub cs_competition: f64,
}

impl WelfareCell {
    pub fn delta_cs(&self) -> f64 {
        self.cs_monopoly - self.cs_competition
    }

    pub fn to_row(self) -> Vec<f64> {
        vec![
            self.t_monopoly,
            self.t_competition,
            self.cs_monopoly,
            self.cs_competition,
            self.delta_cs(),
        ]
    }
}

#[derive(Clone, Copy)]
enum Regime {
    Monopoly,
    Competition,
}

/// The reduced market at intensity `t`: one attribute column `t·y` and taste `√B̂`.
pub fn reduced_market(t: f64, bhat: f64, c: f64, phi: f64, n: usize) -> Result<(FactorStructure<f64>, Preferences<f64>), ModelError> {
    let y = 1.0 / (n as f64).sqrt();
    let loadings = DMatrix::from_element(n, 1, t * y);
    let fs = FactorStructure::new(loadings, DVector::from_element(1, 1.0), 1.0)?;
    let prefs = Preferences::new(DVector::from_element(1, bhat.sqrt()), phi, c)?;
    Ok((fs, prefs))
}

fn surplus(regime: Regime, t: f64, bhat: f64, c: f64, phi: f64, n: usize) -> Result<f64, ModelError> {
    if t == 0.0 {
        // δ = 0: nothing is sold at any non-negative price.
        return Ok(0.0);
    }
    let (fs, prefs) = reduced_market(t, bhat, c, phi, n)?;
    let eq = match regime {
        Regime::Monopoly => monopoly_equilibrium(&fs, &prefs)?,
        Regime::Competition => single_product_equilibrium(&fs, &prefs)?,
    };
    consumer_surplus(&fs, &prefs, &eq.prices)
}

/// One grid cell for total taste `B`, common weight `γ`, cost `c`, sensitivity `φ`
/// and `n` goods. Everything is computed from `B̂ = B/γ`.
pub fn welfare_cell(b_total: f64, gamma: f64, c: f64, phi: f64, n: usize) -> Result<WelfareCell, ModelError> {
    let invalid = |name, reason: &str| ModelError::InvalidParameter {
        name,
        reason: reason.to_string(),
    };
    if !(b_total >= 0.0 && gamma > 0.0) {
        return Err(invalid("b_total", "need B ≥ 0 and γ > 0"));
    }
    if !(c > 0.0 && phi < 0.0) {
        return Err(invalid("attr_cost", "need c > 0 and φ < 0"));
    }
    if n == 0 {
        return Err(invalid("n_firms", "need at least one firm"));
    }
    let bhat = b_total / gamma;
    let t_monopoly = intensity_from_taste(bhat, c, phi);
    let t_competition = symmetric_u(bhat, c, phi, n)?.sqrt();
    Ok(WelfareCell {
        t_monopoly,
        t_competition,
        cs_monopoly: surplus(Regime::Monopoly, t_monopoly, bhat, c, phi, n)?,
        cs_competition: surplus(Regime::Competition, t_competition, bhat, c, phi, n)?,
    })
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linear_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

pub fn axes(p: &WelfareGridParams) -> ([&'static str; 2], Vec<f64>, Vec<f64>) {
    let n = p.resolution;
    match p.plane {
        WelfarePlane::CPhi => (
            ["c", "phi"],
            linear_axis(p.c_range[0], p.c_range[1], n),
            linear_axis(p.phi_range[0], p.phi_range[1], n),
        ),
        WelfarePlane::BGamma => (
            ["b_total", "gamma"],
            attribmkt::hetero::geometric_axis(p.b_range[0], p.b_range[1], n),
            attribmkt::hetero::geometric_axis(p.gamma_range[0], p.gamma_range[1], n),
        ),
    }
}

/// Evaluates the cell at grid coordinates `(x1, x2)` of the configured plane.
pub fn cell_at(p: &WelfareGridParams, x1: f64, x2: f64) -> Result<Vec<f64>, ModelError> {
    let cell = match p.plane {
        WelfarePlane::CPhi => welfare_cell(p.b_total, p.gamma, x1, x2, p.n_firms)?,
        WelfarePlane::BGamma => welfare_cell(x1, x2, p.c, p.phi, p.n_firms)?,
    };
    Ok(cell.to_row())
}

pub fn welfare_grid(p: &WelfareGridParams) -> GridResult {
    let (names, a1, a2) = axes(p);
    GridResult::evaluate(names, a1, a2, &OUTPUTS, |x1, x2| cell_at(p, x1, x2))
}
