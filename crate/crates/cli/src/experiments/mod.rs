//! Experiment runners. Each writes its CSV (and optionally SVG) files plus an echo of
//! the normalized configuration into the output directory.

pub mod br;
pub mod rho;
pub mod welfare;

use std::fs;
use std::path::{Path, PathBuf};

use attribmkt::design::{symmetric_gross_profit, viability_threshold};
use attribmkt::rotation::{angle_gap_mod_pi, gram_deviation, pair_forward, pair_residual};
use attribmkt::{
    compose_u, consumer_surplus, effective_taste, exclusivity_equilibrium, iterative_bertrand, monopoly_design,
    monopoly_equilibrium, monopoly_intensity, one_attribute_norm, orientation_rule, recover_angle,
    single_product_equilibrium, symmetric_intensity, ExclusivityPartition, FactorStructure, ModelError,
    Preferences, PriceEquilibrium, RotationParams, ShrinkageWeights,
};
use nalgebra::{DMatrix, DVector, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{
    BrSimParams, DesignCompetitionParams, DesignMonopolyParams, ExperimentConfig, Parameters, PriceEqParams,
    RhoGridParams, RhoMarket, RotationDemoParams, WelfareGridParams,
};
use crate::error::{CliError, Result};
use crate::output::{fmt_num, write_csv, write_text, GridResult};
use crate::svg::{tick_label, Heatmap};

pub const SPOT_CHECKS: usize = 10;
pub const SPOT_TOLERANCE: f64 = 1e-10;

/// Files written by a run, plus human-readable remarks.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

impl RunReport {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.output_dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        write_text(&p, body)
    }

    fn csv<I: IntoIterator<Item = Vec<String>>>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()> {
        let p = self.path(name);
        write_csv(&p, header, rows)
    }

    fn grid(&mut self, name: &str, grid: &GridResult) -> Result<()> {
        let p = self.path(name);
        grid.write_csv(&p)?;
        if grid.failures() > 0 {
            self.notes
                .push(format!("{name}: {} of {} cells failed (see the status column)", grid.failures(), grid.len()));
        }
        Ok(())
    }
}

/// Runs the configured experiment, creating the output directory if needed.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut rep = RunReport {
        output_dir: dir,
        ..Default::default()
    };
    rep.text("config.toml", &cfg.to_toml())?;
    match &cfg.parameters {
        Parameters::PriceEq(p) => price_eq(p, &mut rep)?,
        Parameters::DesignMonopoly(p) => design_monopoly(p, &mut rep)?,
        Parameters::DesignCompetition(p) => design_competition(p, &mut rep)?,
        Parameters::BrSim(p) => br_sim(p, cfg.seed, cfg.emit_svg, &mut rep)?,
        Parameters::WelfareGrid(p) => welfare_grid(p, cfg.seed, cfg.emit_svg, &mut rep)?,
        Parameters::RhoGrid(p) => rho_grids(p, cfg.seed, cfg.emit_svg, &mut rep)?,
        Parameters::RotationDemo(p) => rotation_demo(p, cfg.seed, &mut rep)?,
    }
    Ok(rep)
}

/// Recomputes `SPOT_CHECKS` randomly chosen successful cells serially and compares
/// them with the stored values.
pub fn spot_check<F>(grid: &GridResult, seed: u64, recompute: F) -> Result<()>
where
    F: Fn(f64, f64) -> std::result::Result<Vec<f64>, ModelError>,
{
    if grid.is_empty() {
        return Ok(());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..SPOT_CHECKS {
        let idx = rng.random_range(0..grid.len());
        if grid.status[idx] != "ok" {
            continue;
        }
        let (a, b) = grid.coords(idx);
        let fresh = recompute(a, b)?;
        for (stored, recomputed) in grid.cells[idx].iter().zip(fresh) {
            if !((stored - recomputed).abs() <= SPOT_TOLERANCE) {
                return Err(CliError::SpotCheck {
                    axis1: a,
                    axis2: b,
                    stored: *stored,
                    recomputed,
                });
            }
        }
    }
    Ok(())
}

fn grid_svg(rep: &mut RunReport, name: &str, title: &str, grid: &GridResult, output: &str) -> Result<()> {
    let values = grid.column(output).expect("known output column");
    let svg = Heatmap {
        title,
        x_label: &grid.axis_names[0],
        y_label: &grid.axis_names[1],
        x_ticks: grid.axis1.iter().map(|x| tick_label(*x)).collect(),
        y_ticks: grid.axis2.iter().map(|x| tick_label(*x)).collect(),
        values: &values,
    }
    .render();
    rep.text(name, &svg)
}

fn vector(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn bool_cell(b: bool) -> String {
    b.to_string()
}

fn price_eq(p: &PriceEqParams, rep: &mut RunReport) -> Result<()> {
    let n = p.loadings.len();
    let s = DMatrix::from_fn(n, p.weights.len(), |i, j| p.loadings[i][j]);
    let fs = FactorStructure::new(s, vector(&p.weights), p.baseline)?;
    // the attribute cost does not enter pricing
    let mut prefs = Preferences::new(vector(&p.b), p.phi, 1.0)?;
    if let Some(v) = &p.noise {
        prefs = prefs.with_noise(vector(v));
    }
    type Solver = fn(&FactorStructure<f64>, &Preferences<f64>) -> attribmkt::Result<PriceEquilibrium<f64>>;
    let solvers: [(&str, Solver); 3] = [
        ("monopoly", monopoly_equilibrium),
        ("single-product", single_product_equilibrium),
        ("iterative", iterative_bertrand),
    ];
    let mut price_rows = Vec::new();
    let mut summary_rows = Vec::new();
    for (name, solve) in solvers {
        let eq = match solve(&fs, &prefs) {
            Ok(eq) => eq,
            Err(e @ ModelError::NonPositiveUtility { .. }) => {
                rep.notes.push(format!("{name}: skipped ({e})"));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        for g in 0..n {
            price_rows.push(vec![
                name.to_string(),
                g.to_string(),
                fmt_num(eq.prices[g]),
                fmt_num(eq.quantities[g]),
                fmt_num(eq.profits[g]),
                bool_cell(eq.is_active(g)),
            ]);
        }
        let cs = consumer_surplus(&fs, &prefs, &eq.prices)?;
        summary_rows.push(vec![
            name.to_string(),
            fmt_num(eq.total_profit()),
            fmt_num(cs),
            eq.sweeps.to_string(),
            eq.flagged.len().to_string(),
            eq.unsettled.len().to_string(),
        ]);
    }
    rep.csv("prices.csv", &["regime", "good", "price", "quantity", "profit", "active"], price_rows)?;
    rep.csv(
        "summary.csv",
        &["regime", "total_profit", "consumer_surplus", "sweeps", "flagged", "unsettled"],
        summary_rows,
    )
}

fn key_values(rows: Vec<(&str, f64)>) -> Vec<Vec<String>> {
    rows.into_iter().map(|(k, v)| vec![k.to_string(), fmt_num(v)]).collect()
}

fn design_monopoly(p: &DesignMonopolyParams, rep: &mut RunReport) -> Result<()> {
    let (b, g) = (vector(&p.b), vector(&p.gamma));
    let sol = monopoly_design(&b, &g, p.c, p.phi)?;
    let mut rows = Vec::new();
    for k in 0..b.len() {
        rows.push(vec![
            k.to_string(),
            fmt_num(b[k]),
            fmt_num(g[k]),
            fmt_num(sol.orientation[k]),
            fmt_num(sol.loadings[k]),
            fmt_num(one_attribute_norm(b[k], g[k], p.c, p.phi)?),
        ]);
    }
    rep.csv(
        "design.csv",
        &["attr", "b", "gamma", "orientation", "loading", "one_attribute_norm"],
        rows,
    )?;
    let bh = effective_taste(&b, &g);
    rep.csv(
        "summary.csv",
        &["quantity", "value"],
        key_values(vec![
            ("effective_taste", bh),
            ("viability_threshold", viability_threshold(bh, p.phi)),
            ("intensity", sol.intensity),
            ("net_profit", sol.net_profit),
        ]),
    )
}

fn design_competition(p: &DesignCompetitionParams, rep: &mut RunReport) -> Result<()> {
    let (b, g) = (vector(&p.b), vector(&p.gamma));
    let bh = effective_taste(&b, &g);
    let t = symmetric_intensity(&b, &g, p.c, p.phi, p.n_firms)?;
    let u = t * t;
    let gross = symmetric_gross_profit(u, bh, p.phi, p.n_firms);
    rep.csv(
        "summary.csv",
        &["quantity", "value"],
        key_values(vec![
            ("n_firms", p.n_firms as f64),
            ("effective_taste", bh),
            ("symmetric_intensity", t),
            ("monopoly_intensity", monopoly_intensity(&b, &g, p.c, p.phi)?),
            ("gross_profit_per_firm", gross),
            ("net_profit_per_firm", gross - 0.5 * p.c * u),
        ]),
    )?;
    let d = orientation_rule(&b, &g)?;
    let rows = (0..b.len()).map(|k| vec![k.to_string(), fmt_num(d[k]), fmt_num(t * d[k] / g[k].sqrt())]);
    rep.csv("orientation.csv", &["attr", "orientation", "loading"], rows)?;

    if let Some(owners) = &p.owners {
        let part = ExclusivityPartition::new(owners.clone(), p.n_firms)?;
        let out = exclusivity_equilibrium(&part, &b, &g, p.c, p.phi)?;
        let rows = (0..p.n_firms).map(|f| {
            let attrs: Vec<String> = part.attributes_of(f).iter().map(usize::to_string).collect();
            vec![
                f.to_string(),
                attrs.join(";"),
                fmt_num(out.designs[f].intensity),
                fmt_num(out.prices.prices[f]),
                fmt_num(out.prices.quantities[f]),
                fmt_num(out.prices.profits[f]),
                fmt_num(out.designs[f].net_profit),
            ]
        });
        rep.csv(
            "exclusivity.csv",
            &["firm", "attributes", "intensity", "price", "quantity", "gross_profit", "net_profit"],
            rows,
        )?;
    }
    Ok(())
}

fn br_sim(p: &BrSimParams, seed: u64, svg: bool, rep: &mut RunReport) -> Result<()> {
    let results = br::run_batch(p, seed);
    let k = p.b.len();
    let mut summary = Vec::new();
    let mut failure: Option<ModelError> = None;
    for (s, res) in results {
        let r = match res {
            Ok(r) => r,
            Err(e) => {
                summary.push(vec![s.to_string(), "0".into(), "false".into(), "0".into(), "NaN".into(), "NaN".into(), "NaN".into()]);
                rep.notes.push(format!("seed {s}: {e}"));
                failure.get_or_insert(e);
                continue;
            }
        };
        let last = r.trajectory.len().saturating_sub(1);
        let mut traj = Vec::new();
        for (i, snap) in r.trajectory.iter().enumerate() {
            if i != 0 && i != last && snap.round % p.trajectory_every != 0 {
                continue;
            }
            for n in 0..p.n_firms {
                for a in 0..k {
                    traj.push(vec![
                        snap.round.to_string(),
                        n.to_string(),
                        a.to_string(),
                        fmt_num(snap.design[(n, a)]),
                        fmt_num(snap.profits[n]),
                        bool_cell(snap.active[n]),
                    ]);
                }
            }
        }
        rep.csv(
            &format!("trajectory_seed{s}.csv"),
            &["round", "firm", "attr", "value", "profit", "active"],
            traj,
        )?;

        let reference = br::reference_intensity(p, r.active.len()).unwrap_or(f64::NAN);
        let net = r.trajectory.last().map(|t| t.profits.clone());
        let mut header: Vec<String> = ["firm", "active", "alignment", "intensity", "reference_intensity", "net_profit"]
            .map(String::from)
            .to_vec();
        header.extend((0..k).map(|a| format!("s{a}")));
        let rows = (0..p.n_firms).map(|n| {
            let mut row = vec![
                n.to_string(),
                bool_cell(r.active.contains(&n)),
                fmt_num(r.alignment[n]),
                fmt_num(r.intensities[n]),
                fmt_num(reference),
                fmt_num(net.as_ref().map_or(f64::NAN, |v| v[n])),
            ];
            row.extend((0..k).map(|a| fmt_num(r.final_design[(n, a)])));
            row
        });
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        rep.csv(&format!("final_seed{s}.csv"), &header_refs, rows)?;

        let survivors: Vec<f64> = r.active.iter().map(|&n| r.alignment[n]).collect();
        let mean = survivors.iter().sum::<f64>() / survivors.len().max(1) as f64;
        let min = survivors.iter().copied().fold(f64::INFINITY, f64::min);
        summary.push(vec![
            s.to_string(),
            r.rounds.to_string(),
            bool_cell(r.converged),
            r.active.len().to_string(),
            fmt_num(if survivors.is_empty() { f64::NAN } else { mean }),
            fmt_num(if survivors.is_empty() { f64::NAN } else { min }),
            fmt_num(r.last_delta),
        ]);
        if !r.converged {
            rep.notes.push(format!("seed {s}: no convergence after {} rounds", r.rounds));
            failure.get_or_insert(ModelError::NoConvergence {
                solver: "best-response design",
                iterations: r.rounds,
                residual: r.last_delta,
            });
        }

        if svg {
            let values: Vec<f64> = (0..p.n_firms)
                .flat_map(|n| (0..k).map(move |a| (n, a)))
                .map(|(n, a)| r.final_design[(n, a)] * p.gamma[a].sqrt())
                .collect();
            let title = format!("Final scaled loadings, seed {s}");
            let map = Heatmap {
                title: &title,
                x_label: "firm",
                y_label: "attribute",
                x_ticks: (0..p.n_firms).map(|n| n.to_string()).collect(),
                y_ticks: (0..k).map(|a| a.to_string()).collect(),
                values: &values,
            };
            rep.text(&format!("design_seed{s}.svg"), &map.render())?;
        }
    }
    rep.csv(
        "summary.csv",
        &["seed", "rounds", "converged", "survivors", "mean_alignment", "min_alignment", "last_delta"],
        summary,
    )?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn welfare_grid(p: &WelfareGridParams, seed: u64, svg: bool, rep: &mut RunReport) -> Result<()> {
    let grid = welfare::welfare_grid(p);
    spot_check(&grid, seed, |a, b| welfare::cell_at(p, a, b))?;
    let plane = grid.axis_names.join("-");
    rep.grid(&format!("welfare_{plane}.csv"), &grid)?;
    if svg {
        grid_svg(rep, &format!("welfare_{plane}_delta_cs.svg"), "CS(monopoly) - CS(competition)", &grid, "delta_cs")?;
    }
    Ok(())
}

fn rho_grids(p: &RhoGridParams, seed: u64, svg: bool, rep: &mut RunReport) -> Result<()> {
    let structures: &[rho::Structure] = match p.market {
        RhoMarket::Monopoly => &[rho::Structure::Monopoly],
        RhoMarket::Duopoly => &[rho::Structure::Duopoly],
        RhoMarket::Both => &[rho::Structure::Monopoly, rho::Structure::Duopoly],
    };
    for &st in structures {
        let grid = rho::rho_grid(p, st);
        spot_check(&grid, seed, |a, b| rho::rho_cell(p, st, a, b).map(|r| vec![r]))?;
        rep.grid(&format!("rho_{}.csv", st.name()), &grid)?;
        if svg {
            let title = format!("Optimal inner product, {}", st.name());
            grid_svg(rep, &format!("rho_{}.svg", st.name()), &title, &grid, "rho_star")?;
        }
    }
    Ok(())
}

fn rotation_demo(p: &RotationDemoParams, seed: u64, rep: &mut RunReport) -> Result<()> {
    use std::f64::consts::FRAC_PI_2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = match &p.gamma {
        Some(g) => vector(g),
        None => DVector::from_fn(p.dim, |_, _| rng.random_range(p.gamma_range[0]..=p.gamma_range[1])),
    };
    let mut angles = Vec::new();
    for i in 0..p.dim {
        for j in i + 1..p.dim {
            angles.push((i, j, rng.random_range(-FRAC_PI_2..FRAC_PI_2)));
        }
    }
    let params = RotationParams::new(p.dim, angles)?;
    let u = compose_u(&params);
    let weights = ShrinkageWeights::from_gamma(&gamma)?;

    let mut rows = Vec::new();
    let mut worst_gap: f64 = 0.0;
    for &(i, j, theta) in params.angles() {
        let (bp, bq) = (weights.betas[i], weights.betas[j]);
        for probe in 0..p.probes {
            let v = Vector2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let h = pair_forward(bp, bq, theta) * v;
            let mut row = vec![i.to_string(), j.to_string(), probe.to_string(), fmt_num(theta)];
            match recover_angle(&v, &h, bp, bq) {
                Ok(est) => {
                    let gap = angle_gap_mod_pi(est.theta, theta);
                    worst_gap = worst_gap.max(gap);
                    row.extend([
                        fmt_num(est.theta),
                        fmt_num(gap),
                        fmt_num(pair_residual(&v, &h, bp, bq, est.theta)),
                        "ok".into(),
                    ]);
                }
                Err(e) => row.extend(["NaN".into(), "NaN".into(), "NaN".into(), e.to_string()]),
            }
            rows.push(row);
        }
    }
    rep.csv(
        "recovery.csv",
        &["p", "q", "probe", "theta", "theta_hat", "gap_mod_pi", "residual", "status"],
        rows,
    )?;
    let entries = (0..p.dim).flat_map(|r| (0..p.dim).map(move |c| (r, c)));
    rep.csv(
        "rotation.csv",
        &["row", "col", "value"],
        entries.map(|(r, c)| vec![r.to_string(), c.to_string(), fmt_num(u[(r, c)])]),
    )?;
    let gamma_rows = (0..p.dim).map(|k| vec![k.to_string(), fmt_num(gamma[k]), fmt_num(weights.betas[k])]);
    rep.csv("weights.csv", &["attr", "gamma", "beta"], gamma_rows)?;
    rep.csv(
        "summary.csv",
        &["quantity", "value"],
        key_values(vec![
            ("dim", p.dim as f64),
            ("orthogonality_deviation", gram_deviation(&u)),
            ("determinant", u.determinant()),
            ("max_gap_mod_pi", worst_gap),
        ]),
    )
}

/// Directory listing helper for callers that want a sorted view of a run's outputs.
pub fn list_outputs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    out.sort();
    Ok(out)
}
