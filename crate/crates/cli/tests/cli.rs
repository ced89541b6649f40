use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use attribmkt::design::symmetric_u;
use attribmkt::{
    consumer_surplus, monopoly_equilibrium, monopoly_intensity, rho_star_monopoly, single_product_equilibrium,
    symmetric_intensity, SwappedTastes,
};
use attribmkt_cli::experiments::welfare::reduced_market;
use attribmkt_cli::{Experiment, ExperimentConfig};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};

fn attribmkt(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_attribmkt"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn run_with_config(exp: &str, config: &str, extra: &[&str]) -> (tempfile::TempDir, Output) {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.toml"), config).unwrap();
    let mut args = vec![exp, "--config", "cfg.toml", "--out", "out"];
    args.extend_from_slice(extra);
    let out = attribmkt(&args, dir.path());
    (dir, out)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

fn num(r: &csv::StringRecord, i: usize) -> f64 {
    r[i].parse().unwrap()
}

#[test]
fn unknown_key_exits_with_validation_code() {
    let (_d, o) = run_with_config("rho-grid", "[parameters]\nresolutoin = 5\n", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("resolutoin"), "{}", stderr(&o));
}

#[test]
fn zero_cost_is_a_validation_error() {
    let (_d, o) = run_with_config("br-sim", "[parameters]\nc = 0.0\n", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`c` must be positive"), "{}", stderr(&o));
}

#[test]
fn unconverged_simulation_is_a_numerical_failure() {
    let (d, o) = run_with_config("br-sim", "[parameters]\nruns = 1\nmax_rounds = 2\n", &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    // results of the run are still written
    assert!(d.path().join("out/summary.csv").exists());
    assert!(d.path().join("out/config.toml").exists());
}

#[test]
fn usage_errors_and_thread_cap() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(attribmkt(&["no-such-experiment"], dir.path()).status.code(), Some(1));
    assert_eq!(attribmkt(&["--help"], dir.path()).status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_attribmkt"))
        .args(["design-monopoly", "--out", "x"])
        .env("ATTRIBMKT_THREADS", "0")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("ATTRIBMKT_THREADS"));
}

#[test]
fn echoed_config_reflects_overrides_and_round_trips() {
    let (d, o) = run_with_config(
        "welfare-grid",
        "experiment = \"welfare-grid\"\nseed = 3\n[parameters]\nresolution = 3\n",
        &["--seed", "42", "--svg"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let echo = fs::read_to_string(d.path().join("out/config.toml")).unwrap();
    let cfg = ExperimentConfig::parse(&echo, Some(Experiment::WelfareGrid)).unwrap();
    assert_eq!(cfg.seed, 42);
    assert!(cfg.emit_svg);
    assert_eq!(cfg.output_dir, Path::new("out"));
    assert_eq!(cfg.to_toml(), echo);
    assert!(d.path().join("out/welfare_c-phi_delta_cs.svg").exists());
}

#[test]
fn welfare_cells_reproduce_from_module_operations() {
    let (d, o) = run_with_config("welfare-grid", "[parameters]\nresolution = 12\n", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_rows(&d.path().join("out/welfare_c-phi.csv"));
    assert_eq!(rows.len(), 144);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let one = DVector::from_element(1, 1.0);
    for _ in 0..10 {
        let r = &rows[rng.random_range(0..rows.len())];
        let (c, phi) = (num(r, 0), num(r, 1));
        let tm = monopoly_intensity(&one, &one, c, phi).unwrap();
        let tc = symmetric_intensity(&one, &one, c, phi, 3).unwrap();
        assert!((tm - num(r, 2)).abs() < 1e-10);
        assert!((tc - num(r, 3)).abs() < 1e-10);
        assert!((symmetric_u(1.0, c, phi, 3).unwrap().sqrt() - tc).abs() < 1e-12);
        let cs = |t: f64, mono: bool| {
            if t == 0.0 {
                return 0.0;
            }
            let (fs, prefs) = reduced_market(t, 1.0, c, phi, 3).unwrap();
            let eq = if mono {
                monopoly_equilibrium(&fs, &prefs).unwrap()
            } else {
                single_product_equilibrium(&fs, &prefs).unwrap()
            };
            consumer_surplus(&fs, &prefs, &eq.prices).unwrap()
        };
        assert!((cs(tm, true) - num(r, 4)).abs() < 1e-10);
        assert!((cs(tc, false) - num(r, 5)).abs() < 1e-10);
        assert_eq!(&r[7], "ok");
    }
}

#[test]
fn rho_cells_reproduce_and_grid_is_axis1_major() {
    let (d, o) = run_with_config("rho-grid", "[parameters]\nmarket = \"monopoly\"\nresolution = 2\n", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_rows(&d.path().join("out/rho_monopoly.csv"));
    let coords: Vec<(f64, f64)> = rows.iter().map(|r| (num(r, 0), num(r, 1))).collect();
    assert_eq!(coords, vec![(0.25, 0.0625), (0.25, 16.0), (4.0, 0.0625), (4.0, 16.0)]);
    for r in &rows {
        let prob = SwappedTastes::new(num(r, 0), 1.0, num(r, 1), 1.0, -1.0).unwrap();
        assert!((rho_star_monopoly(&prob) - num(r, 2)).abs() < 1e-10);
    }
    assert!(!d.path().join("out/rho_duopoly.csv").exists());
}

#[test]
fn empty_grid_is_header_only() {
    let (d, o) = run_with_config("welfare-grid", "[parameters]\nresolution = 0\n", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(d.path().join("out/welfare_c-phi.csv")).unwrap();
    assert_eq!(
        text,
        "c,phi,t_monopoly,t_competition,cs_monopoly,cs_competition,delta_cs,status\r\n"
    );
}

#[test]
fn lone_firm_simulation_matches_monopoly_design() {
    let (d, o) = run_with_config("br-sim", "[parameters]\nn_firms = 1\nruns = 1\n", &["--svg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_rows(&d.path().join("out/final_seed0.csv"));
    let b = DVector::from_vec(vec![1.0, 0.8, 0.6, 0.4]);
    let t = monopoly_intensity(&b, &DVector::from_element(4, 1.0), 0.1, -1.0).unwrap();
    assert!((num(&rows[0], 3) - t).abs() < 1e-3);
    assert!(num(&rows[0], 2) > 0.999);
    let svg = fs::read_to_string(d.path().join("out/design_seed0.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    let traj = read_rows(&d.path().join("out/trajectory_seed0.csv"));
    assert_eq!(traj.len() % 4, 0);
}

#[test]
fn small_experiments_write_expected_tables() {
    for (exp, files) in [
        ("price-eq", &["prices.csv", "summary.csv"][..]),
        ("design-monopoly", &["design.csv", "summary.csv"][..]),
        ("rotation-demo", &["recovery.csv", "rotation.csv", "weights.csv", "summary.csv"][..]),
    ] {
        let (d, o) = run_with_config(exp, "", &[]);
        assert!(o.status.success(), "{exp}: {}", stderr(&o));
        for f in files {
            assert!(d.path().join("out").join(f).exists(), "{exp}: missing {f}");
        }
    }
    let (d, o) = run_with_config("design-competition", "[parameters]\nowners = [0, 0, 1, 2]\n", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_rows(&d.path().join("out/exclusivity.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[0][1], "0;1");
}

#[test]
fn price_eq_skips_closed_forms_for_non_viable_goods() {
    let cfg = "[parameters]\nloadings = [[1.0], [1.0]]\nweights = [1.0]\nb = [1.0]\nnoise = [0.0, -1.2]\n";
    let (d, o) = run_with_config("price-eq", cfg, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("monopoly: skipped"));
    let rows = read_rows(&d.path().join("out/prices.csv"));
    assert!(rows.iter().all(|r| &r[0] == "iterative"));
    assert_eq!(&rows[1][5], "false");
}
