//! Experiment configuration: a flat TOML document with four top-level keys and one
//! `[parameters]` table whose schema depends on the experiment.
//!
//! ```toml
//! experiment = "welfare-grid"
//! output_dir = "out/welfare"
//! emit_svg = true
//! seed = 7
//!
//! [parameters]
//! plane = "c-phi"
//! resolution = 60
//! ```
//!
//! Unknown keys at either level are rejected. Omitted keys take the defaults of the
//! corresponding parameter struct, and [`ExperimentConfig::to_toml`] writes every key
//! explicitly.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    PriceEq,
    DesignMonopoly,
    DesignCompetition,
    BrSim,
    WelfareGrid,
    RhoGrid,
    RotationDemo,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::PriceEq,
        Experiment::DesignMonopoly,
        Experiment::DesignCompetition,
        Experiment::BrSim,
        Experiment::WelfareGrid,
        Experiment::RhoGrid,
        Experiment::RotationDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::PriceEq => "price-eq",
            Experiment::DesignMonopoly => "design-monopoly",
            Experiment::DesignCompetition => "design-competition",
            Experiment::BrSim => "br-sim",
            Experiment::WelfareGrid => "welfare-grid",
            Experiment::RhoGrid => "rho-grid",
            Experiment::RotationDemo => "rotation-demo",
        }
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn unit_gamma() -> Vec<f64> {
    vec![1.0; 4]
}

fn default_tastes() -> Vec<f64> {
    vec![1.0, 0.8, 0.6, 0.4]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriceEqParams {
    /// Rows are goods, columns attributes.
    pub loadings: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub baseline: f64,
    pub b: Vec<f64>,
    pub phi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<Vec<f64>>,
}

impl Default for PriceEqParams {
    fn default() -> Self {
        Self {
            loadings: vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]],
            weights: vec![1.0, 1.0],
            baseline: 1.0,
            b: vec![1.0, 0.8],
            phi: -1.0,
            noise: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignMonopolyParams {
    pub b: Vec<f64>,
    pub gamma: Vec<f64>,
    pub c: f64,
    pub phi: f64,
}

impl Default for DesignMonopolyParams {
    fn default() -> Self {
        Self {
            b: default_tastes(),
            gamma: unit_gamma(),
            c: 0.1,
            phi: -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignCompetitionParams {
    pub b: Vec<f64>,
    pub gamma: Vec<f64>,
    pub c: f64,
    pub phi: f64,
    pub n_firms: usize,
    /// Owner firm of each attribute; enables the exclusivity regime.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub owners: Option<Vec<usize>>,
}

impl Default for DesignCompetitionParams {
    fn default() -> Self {
        Self {
            b: default_tastes(),
            gamma: unit_gamma(),
            c: 0.1,
            phi: -1.0,
            n_firms: 3,
            owners: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    Random,
    Symmetric,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BrSimParams {
    pub n_firms: usize,
    pub b: Vec<f64>,
    pub gamma: Vec<f64>,
    pub phi: f64,
    /// Exactly one of `c`, `cost_per_attribute`, `cost_matrix` may be given; `c = 0.1`
    /// when none is.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost_per_attribute: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost_matrix: Option<Vec<Vec<f64>>>,
    pub init: InitKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_design: Option<Vec<Vec<f64>>>,
    /// Independent runs, seeded `seed, seed + 1, …`.
    pub runs: usize,
    /// Keep every k-th round in the trajectory CSV (the first and last are always kept).
    pub trajectory_every: usize,
    pub fd_step: f64,
    pub ascent_rate: f64,
    pub ascent_steps: usize,
    pub max_rounds: usize,
    pub design_tol: f64,
}

impl Default for BrSimParams {
    fn default() -> Self {
        Self {
            n_firms: 6,
            b: default_tastes(),
            gamma: unit_gamma(),
            phi: -1.0,
            c: None,
            cost_per_attribute: None,
            cost_matrix: None,
            init: InitKind::Random,
            init_design: None,
            runs: 4,
            trajectory_every: 10,
            fd_step: 1e-5,
            ascent_rate: 1e-2,
            ascent_steps: 5,
            max_rounds: 10_000,
            design_tol: 1e-7,
        }
    }
}

pub const DEFAULT_COST: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WelfarePlane {
    /// Attribute cost against price sensitivity at fixed `B` and `γ`.
    CPhi,
    /// Total taste `B` against the common weight `γ` at fixed `c` and `φ`.
    BGamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WelfareGridParams {
    pub plane: WelfarePlane,
    pub n_firms: usize,
    pub resolution: usize,
    /// `B = Σ b_k²`.
    pub b_total: f64,
    pub gamma: f64,
    pub c: f64,
    pub phi: f64,
    pub c_range: [f64; 2],
    pub phi_range: [f64; 2],
    /// Geometric axes.
    pub b_range: [f64; 2],
    pub gamma_range: [f64; 2],
}

impl Default for WelfareGridParams {
    fn default() -> Self {
        Self {
            plane: WelfarePlane::CPhi,
            n_firms: 3,
            resolution: 60,
            b_total: 1.0,
            gamma: 1.0,
            c: 0.5,
            phi: -1.0,
            c_range: [0.02, 0.6],
            phi_range: [-2.0, -0.25],
            b_range: [0.2, 5.0],
            gamma_range: [0.2, 5.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoMarket {
    Monopoly,
    Duopoly,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RhoGridParams {
    pub market: RhoMarket,
    pub resolution: usize,
    /// Geometric axis of `b_H/b_L`.
    pub taste_ratio_range: [f64; 2],
    /// Geometric axis of `γ_H/γ_L`.
    pub weight_ratio_range: [f64; 2],
    pub phi: f64,
    /// Population share of the first consumer.
    pub mu: f64,
}

impl Default for RhoGridParams {
    fn default() -> Self {
        Self {
            market: RhoMarket::Both,
            resolution: 41,
            taste_ratio_range: [0.25, 4.0],
            weight_ratio_range: [1.0 / 16.0, 16.0],
            phi: -1.0,
            mu: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotationDemoParams {
    pub dim: usize,
    /// Curvature weights; drawn from `[gamma_range]` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    pub gamma_range: [f64; 2],
    /// Probe vectors per attribute pair.
    pub probes: usize,
}

impl Default for RotationDemoParams {
    fn default() -> Self {
        Self {
            dim: 4,
            gamma: None,
            gamma_range: [0.2, 5.0],
            probes: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Parameters {
    PriceEq(PriceEqParams),
    DesignMonopoly(DesignMonopolyParams),
    DesignCompetition(DesignCompetitionParams),
    BrSim(BrSimParams),
    WelfareGrid(WelfareGridParams),
    RhoGrid(RhoGridParams),
    RotationDemo(RotationDemoParams),
}

impl Parameters {
    pub fn default_for(exp: Experiment) -> Self {
        match exp {
            Experiment::PriceEq => Parameters::PriceEq(Default::default()),
            Experiment::DesignMonopoly => Parameters::DesignMonopoly(Default::default()),
            Experiment::DesignCompetition => Parameters::DesignCompetition(Default::default()),
            Experiment::BrSim => Parameters::BrSim(Default::default()),
            Experiment::WelfareGrid => Parameters::WelfareGrid(Default::default()),
            Experiment::RhoGrid => Parameters::RhoGrid(Default::default()),
            Experiment::RotationDemo => Parameters::RotationDemo(Default::default()),
        }
    }

    fn parse(exp: Experiment, table: toml::Table) -> Result<Self> {
        fn typed<P: serde::de::DeserializeOwned>(table: toml::Table) -> Result<P> {
            toml::Value::Table(table)
                .try_into()
                .map_err(|e: toml::de::Error| CliError::config(format!("[parameters]: {}", e.message())))
        }
        Ok(match exp {
            Experiment::PriceEq => Parameters::PriceEq(typed(table)?),
            Experiment::DesignMonopoly => Parameters::DesignMonopoly(typed(table)?),
            Experiment::DesignCompetition => Parameters::DesignCompetition(typed(table)?),
            Experiment::BrSim => Parameters::BrSim(typed(table)?),
            Experiment::WelfareGrid => Parameters::WelfareGrid(typed(table)?),
            Experiment::RhoGrid => Parameters::RhoGrid(typed(table)?),
            Experiment::RotationDemo => Parameters::RotationDemo(typed(table)?),
        })
    }

    pub fn experiment(&self) -> Experiment {
        match self {
            Parameters::PriceEq(_) => Experiment::PriceEq,
            Parameters::DesignMonopoly(_) => Experiment::DesignMonopoly,
            Parameters::DesignCompetition(_) => Experiment::DesignCompetition,
            Parameters::BrSim(_) => Experiment::BrSim,
            Parameters::WelfareGrid(_) => Experiment::WelfareGrid,
            Parameters::RhoGrid(_) => Experiment::RhoGrid,
            Parameters::RotationDemo(_) => Experiment::RotationDemo,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<Experiment>,
    output_dir: Option<PathBuf>,
    emit_svg: Option<bool>,
    seed: Option<u64>,
    #[serde(default)]
    parameters: toml::Table,
}

#[derive(Serialize)]
struct Echo<'a> {
    experiment: Experiment,
    output_dir: &'a str,
    emit_svg: bool,
    seed: u64,
    parameters: &'a Parameters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub output_dir: PathBuf,
    pub emit_svg: bool,
    pub seed: u64,
    pub parameters: Parameters,
}

impl ExperimentConfig {
    pub fn default_for(exp: Experiment) -> Self {
        Self {
            experiment: exp,
            output_dir: PathBuf::from("attribmkt-out").join(exp.name()),
            emit_svg: false,
            seed: 0,
            parameters: Parameters::default_for(exp),
        }
    }

    /// Parses a config document. `expected` is the experiment implied by the
    /// subcommand; the document may omit `experiment` but must not contradict it.
    pub fn parse(text: &str, expected: Option<Experiment>) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::config(e.message().to_string()))?;
        let experiment = match (raw.experiment, expected) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::config(format!(
                    "config is for experiment `{a}` but `{b}` was requested"
                )))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(CliError::config("missing key `experiment`")),
        };
        let defaults = Self::default_for(experiment);
        let cfg = Self {
            experiment,
            output_dir: raw.output_dir.unwrap_or(defaults.output_dir),
            emit_svg: raw.emit_svg.unwrap_or(false),
            seed: raw.seed.unwrap_or(0),
            parameters: Parameters::parse(experiment, raw.parameters)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serializes with every key explicit, so that parsing the result is a fixed point.
    pub fn to_toml(&self) -> String {
        let echo = Echo {
            experiment: self.experiment,
            output_dir: &self.output_dir.to_string_lossy(),
            emit_svg: self.emit_svg,
            seed: self.seed,
            parameters: &self.normalized_parameters(),
        };
        toml::to_string(&echo).expect("config is representable in TOML")
    }

    fn normalized_parameters(&self) -> Parameters {
        match &self.parameters {
            Parameters::BrSim(p) if p.c.is_none() && p.cost_per_attribute.is_none() && p.cost_matrix.is_none() => {
                Parameters::BrSim(BrSimParams {
                    c: Some(DEFAULT_COST),
                    ..p.clone()
                })
            }
            other => other.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.parameters.experiment() != self.experiment {
            return Err(CliError::config("parameters do not belong to the selected experiment"));
        }
        match &self.parameters {
            Parameters::PriceEq(p) => validate_price_eq(p),
            Parameters::DesignMonopoly(p) => validate_design(&p.b, &p.gamma, p.c, p.phi),
            Parameters::DesignCompetition(p) => validate_competition(p),
            Parameters::BrSim(p) => validate_br(p),
            Parameters::WelfareGrid(p) => validate_welfare(p),
            Parameters::RhoGrid(p) => validate_rho(p),
            Parameters::RotationDemo(p) => validate_rotation(p),
        }
    }
}

fn fail<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::config(msg))
}

fn finite(name: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        fail(format!("`{name}` must be finite"))
    }
}

fn negative_phi(phi: f64) -> Result<()> {
    if phi < 0.0 {
        Ok(())
    } else {
        fail(format!("`phi` must be negative, got {phi}"))
    }
}

fn positive(name: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| *x > 0.0 && x.is_finite()) {
        Ok(())
    } else {
        fail(format!("`{name}` must be positive"))
    }
}

fn rectangular(name: &str, rows: &[Vec<f64>], ncols: usize) -> Result<()> {
    if let Some(r) = rows.iter().find(|r| r.len() != ncols) {
        return fail(format!("`{name}` rows must have {ncols} entries, found one with {}", r.len()));
    }
    rows.iter().try_for_each(|r| finite(name, r))
}

fn validate_price_eq(p: &PriceEqParams) -> Result<()> {
    if p.loadings.is_empty() {
        return fail("`loadings` needs at least one good");
    }
    let k = p.weights.len();
    rectangular("loadings", &p.loadings, k)?;
    positive("weights", &p.weights)?;
    positive("baseline", &[p.baseline])?;
    if p.b.len() != k {
        return fail(format!("`b` has {} entries, expected {k}", p.b.len()));
    }
    finite("b", &p.b)?;
    negative_phi(p.phi)?;
    if let Some(v) = &p.noise {
        if v.len() != p.loadings.len() {
            return fail(format!("`noise` has {} entries, expected {}", v.len(), p.loadings.len()));
        }
        finite("noise", v)?;
    }
    Ok(())
}

fn validate_design(b: &[f64], gamma: &[f64], c: f64, phi: f64) -> Result<()> {
    if b.is_empty() {
        return fail("`b` needs at least one attribute");
    }
    if b.len() != gamma.len() {
        return fail(format!("`b` has {} entries but `gamma` has {}", b.len(), gamma.len()));
    }
    finite("b", b)?;
    if b.iter().all(|x| *x == 0.0) {
        return fail("`b` must not be all zero");
    }
    positive("gamma", gamma)?;
    positive("c", &[c])?;
    negative_phi(phi)
}

fn validate_competition(p: &DesignCompetitionParams) -> Result<()> {
    validate_design(&p.b, &p.gamma, p.c, p.phi)?;
    if p.n_firms == 0 {
        return fail("`n_firms` must be at least 1");
    }
    if let Some(owners) = &p.owners {
        if owners.len() != p.b.len() {
            return fail(format!("`owners` has {} entries, expected {}", owners.len(), p.b.len()));
        }
        if let Some(o) = owners.iter().find(|o| **o >= p.n_firms) {
            return fail(format!("`owners` entry {o} is not a firm index below {}", p.n_firms));
        }
    }
    Ok(())
}

fn validate_br(p: &BrSimParams) -> Result<()> {
    if p.n_firms == 0 {
        return fail("`n_firms` must be at least 1");
    }
    if p.b.len() != p.gamma.len() || p.b.is_empty() {
        return fail("`b` and `gamma` must be non-empty and of equal length");
    }
    finite("b", &p.b)?;
    positive("gamma", &p.gamma)?;
    negative_phi(p.phi)?;
    let given = [p.c.is_some(), p.cost_per_attribute.is_some(), p.cost_matrix.is_some()];
    if given.iter().filter(|g| **g).count() > 1 {
        return fail("give at most one of `c`, `cost_per_attribute`, `cost_matrix`");
    }
    if let Some(c) = p.c {
        positive("c", &[c])?;
    }
    if let Some(w) = &p.cost_per_attribute {
        if w.len() != p.b.len() {
            return fail("`cost_per_attribute` must have one entry per attribute");
        }
        positive("cost_per_attribute", w)?;
    }
    if let Some(m) = &p.cost_matrix {
        if m.len() != p.n_firms {
            return fail("`cost_matrix` must have one row per firm");
        }
        rectangular("cost_matrix", m, p.b.len())?;
        m.iter().try_for_each(|r| positive("cost_matrix", r))?;
    }
    match (p.init, &p.init_design) {
        (InitKind::Custom, None) => return fail("`init = \"custom\"` requires `init_design`"),
        (InitKind::Custom, Some(d)) => {
            if d.len() != p.n_firms {
                return fail("`init_design` must have one row per firm");
            }
            rectangular("init_design", d, p.b.len())?;
        }
        (_, Some(_)) => return fail("`init_design` is only used with `init = \"custom\"`"),
        (InitKind::Symmetric, None) if p.cost_per_attribute.is_some() || p.cost_matrix.is_some() => {
            return fail("`init = \"symmetric\"` requires a scalar cost `c`")
        }
        _ => {}
    }
    if p.runs == 0 || p.trajectory_every == 0 {
        return fail("`runs` and `trajectory_every` must be at least 1");
    }
    positive("fd_step", &[p.fd_step])?;
    positive("ascent_rate", &[p.ascent_rate])?;
    positive("design_tol", &[p.design_tol])?;
    if p.ascent_steps == 0 || p.max_rounds == 0 {
        return fail("`ascent_steps` and `max_rounds` must be at least 1");
    }
    Ok(())
}

fn ordered_range(name: &str, r: [f64; 2]) -> Result<()> {
    finite(name, &r)?;
    if r[0] <= r[1] {
        Ok(())
    } else {
        fail(format!("`{name}` must be ascending"))
    }
}

fn validate_welfare(p: &WelfareGridParams) -> Result<()> {
    if p.n_firms == 0 {
        return fail("`n_firms` must be at least 1");
    }
    for (name, r) in [("c_range", p.c_range), ("phi_range", p.phi_range), ("b_range", p.b_range), ("gamma_range", p.gamma_range)] {
        ordered_range(name, r)?;
    }
    match p.plane {
        WelfarePlane::CPhi => {
            positive("c_range", &p.c_range)?;
            if p.phi_range[1] >= 0.0 {
                return fail("`phi_range` must lie below zero");
            }
            positive("b_total", &[p.b_total])?;
            positive("gamma", &[p.gamma])?;
        }
        WelfarePlane::BGamma => {
            positive("b_range", &p.b_range)?;
            positive("gamma_range", &p.gamma_range)?;
            positive("c", &[p.c])?;
            negative_phi(p.phi)?;
        }
    }
    Ok(())
}

fn validate_rho(p: &RhoGridParams) -> Result<()> {
    ordered_range("taste_ratio_range", p.taste_ratio_range)?;
    ordered_range("weight_ratio_range", p.weight_ratio_range)?;
    positive("taste_ratio_range", &p.taste_ratio_range)?;
    positive("weight_ratio_range", &p.weight_ratio_range)?;
    negative_phi(p.phi)?;
    if !(0.0..=1.0).contains(&p.mu) {
        return fail("`mu` must lie in [0, 1]");
    }
    Ok(())
}

fn validate_rotation(p: &RotationDemoParams) -> Result<()> {
    if p.dim < 2 {
        return fail("`dim` must be at least 2");
    }
    ordered_range("gamma_range", p.gamma_range)?;
    positive("gamma_range", &p.gamma_range)?;
    if let Some(g) = &p.gamma {
        if g.len() != p.dim {
            return fail(format!("`gamma` must have {} entries", p.dim));
        }
        positive("gamma", g)?;
    }
    if p.probes == 0 {
        return fail("`probes` must be at least 1");
    }
    Ok(())
}
