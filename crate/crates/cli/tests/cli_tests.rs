//! End-to-end tests of the `fairgain` binary: exit codes, artifact
//! structure, flag/config interplay, and manifest-based reproduction.
//!
//! Exit-code contract: 0 = the run completed (any verdict lives in the
//! report files), 2 = flag/config problem, 3 = dataset problem,
//! 4 = internal failure.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fairgain::{load_csv, Schema};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fairgain")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary spawns")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

fn write(path: &Path, contents: &str) {
    std::fs::write(path, contents).unwrap();
}

/// Generates a synthetic dataset through the binary; returns the directory
/// holding data.csv and schema.toml.
fn gen_fixture(dir: &Path, n: usize, seed: u64) -> PathBuf {
    write(&dir.join("gen.toml"), &format!("n = {n}\nseed = {seed}\n"));
    let out = run_in(dir, &["gen-data", "--config", "gen.toml", "--out", "gen"]);
    assert_eq!(code(&out), 0, "gen-data failed: {}", stderr(&out));
    dir.join("gen")
}

/// A complete audit config over the generated fixture; `extra_top` lands in
/// the top-level key section (before the sub-tables).
fn audit_config(gen: &Path, extra_top: &str) -> String {
    format!(
        "data = \"{}\"\n\
         schema = \"{}\"\n\
         rounds = 7\n\
         draws = 300\n\
         seed = 3\n\
         {extra_top}\n\
         [status_quo]\n\
         kind = \"column-quantile\"\n\
         column = \"status_quo\"\n\
         tau = 0.75\n\n\
         [selection]\n\
         kind = \"ols-threshold\"\n\
         kappa = 0.25\n\n\
         [utility]\n\
         accuracy = \"calibration\"\n",
        gen.join("data.csv").display(),
        gen.join("schema.toml").display(),
    )
}

#[test]
fn missing_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["test", "--out", "o"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--config"), "stderr: {}", stderr(&out));
}

#[test]
fn missing_schema_file_exits_2_naming_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let gen = gen_fixture(dir, 150, 1);
    let cfg = audit_config(&gen, "").replace("schema.toml", "absent.toml");
    write(&dir.join("t.toml"), &cfg);
    let out = run_in(dir, &["test", "--config", "t.toml", "--out", "o"]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("schema"), "stderr: {}", stderr(&out));
}

#[test]
fn unknown_config_key_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let gen = gen_fixture(dir, 150, 1);
    write(&dir.join("t.toml"), &audit_config(&gen, "alpa = 0.05"));
    let out = run_in(dir, &["test", "--config", "t.toml", "--out", "o"]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("alpa"), "stderr: {}", stderr(&out));
}

#[test]
fn out_of_range_alpha_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let gen = gen_fixture(dir, 150, 1);
    write(&dir.join("t.toml"), &audit_config(&gen, "alpha = 1.5"));
    let out = run_in(dir, &["test", "--config", "t.toml", "--out", "o"]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("alpha"), "stderr: {}", stderr(&out));
}

#[test]
fn unknown_utility_name_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let gen = gen_fixture(dir, 150, 1);
    let cfg = audit_config(&gen, "").replace("\"calibration\"", "\"accurracy\"");
    write(&dir.join("t.toml"), &cfg);
    let out = run_in(dir, &["test", "--config", "t.toml", "--out", "o"]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("accurracy"), "stderr: {}", stderr(&out));
}

#[test]
fn malformed_data_csv_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write(&dir.join("bad.csv"), "g,y,x1,s\nr,1,0.5,2.0\nb,oops,0.3,1.0\n");
    write(
        &dir.join("s.toml"),
        "outcome = \"y\"\ngroup = \"g\"\nfeatures = [\"x1\"]\nscores = [\"s\"]\n",
    );
    write(
        &dir.join("t.toml"),
        "data = \"bad.csv\"\nschema = \"s.toml\"\ndraws = 50\n\n\
         [status_quo]\nkind = \"column-threshold\"\ncolumn = \"s\"\nthreshold = 1.5\n\n\
         [selection]\nkind = \"identity\"\n\n\
         [utility]\naccuracy = \"classification-rate\"\n",
    );
    let out = run_in(dir, &["test", "--config", "t.toml", "--out", "o"]);
    assert_eq!(code(&out), 3, "stderr: {}", stderr(&out));
}

#[test]
fn missing_data_file_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let gen = gen_fixture(dir, 150, 1);
    let cfg = audit_config(&gen, "").replace("data.csv", "nothere.csv");
    write(&dir.join("t.toml"), &cfg);
    let out = run_in(dir, &["test", "--config", "t.toml", "--out", "o"]);
    assert_eq!(code(&out), 3, "stderr: {}", stderr(&out));
}

#[test]
fn test_writes_the_documented_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let gen = gen_fixture(dir, 300, 4);
    write(&dir.join("t.toml"), &audit_config(&gen, ""));
    let out = run_in(dir, &["test", "--config", "t.toml", "--out", "o"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let csv = read(&dir.join("o/report.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "round,candidate,acc_r_candidate,acc_r_status_quo,p_r,acc_b_candidate,\
         acc_b_status_quo,p_b,unfairness_candidate,unfairness_status_quo,p_f,p",
        "report.csv column order is part of the output contract"
    );
    assert_eq!(lines.len(), 10, "header + 7 rounds + median + verdict");
    for (i, line) in lines[1..8].iter().enumerate() {
        assert!(line.starts_with(&format!("{},", i + 1)), "round row: {line}");
    }
    assert!(lines[8].starts_with("median,"));
    assert!(lines[9].starts_with("verdict,"));

    assert!(read(&dir.join("o/report.txt")).contains("median p-value"));

    let manifest = read(&dir.join("o/manifest.toml"));
    assert!(manifest.contains("command = \"test\""));
    assert!(manifest.contains("version = \"0.1.0\""));
    // The run stamp pins the resolved seed next to the config's own key.
    assert_eq!(manifest.matches("seed = 3").count(), 2, "{manifest}");
    // Fully resolved: the fairness functional is pinned even though the
    // config left it defaulted.
    assert!(manifest.contains("fairness = \"calibration\""));
}

#[test]
fn seed_flag_overrides_config_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let gen = gen_fixture(dir, 150, 1);
    write(&dir.join("t.toml"), &audit_config(&gen, ""));
    let out = run_in(
        dir,
        &["test", "--config", "t.toml", "--out", "o", "--seed", "99"],
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let manifest = read(&dir.join("o/manifest.toml"));
    assert_eq!(manifest.matches("seed = 99").count(), 2, "{manifest}");
    assert!(!manifest.contains("seed = 3"));
}

#[test]
fn rerun_from_manifest_reproduces_artifacts_bytewise() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let gen = gen_fixture(dir, 300, 4);
    write(&dir.join("t.toml"), &audit_config(&gen, ""));
    let first = run_in(dir, &["test", "--config", "t.toml", "--out", "a"]);
    assert_eq!(code(&first), 0, "stderr: {}", stderr(&first));
    let second = run_in(dir, &["test", "--config", "a/manifest.toml", "--out", "b"]);
    assert_eq!(code(&second), 0, "stderr: {}", stderr(&second));
    for name in ["report.csv", "report.txt", "manifest.toml"] {
        assert_eq!(
            std::fs::read(dir.join("a").join(name)).unwrap(),
            std::fs::read(dir.join("b").join(name)).unwrap(),
            "{name} must be byte-identical on rerun"
        );
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let gen = gen_fixture(dir, 300, 4);
    write(&dir.join("t.toml"), &audit_config(&gen, ""));
    let one = run_in(
        dir,
        &["test", "--config", "t.toml", "--out", "a", "--threads", "1"],
    );
    assert_eq!(code(&one), 0, "stderr: {}", stderr(&one));
    let two = run_in(
        dir,
        &["test", "--config", "t.toml", "--out", "b", "--threads", "2"],
    );
    assert_eq!(code(&two), 0, "stderr: {}", stderr(&two));
    assert_eq!(
        read(&dir.join("a/report.csv")),
        read(&dir.join("b/report.csv"))
    );
}

#[test]
fn sweep_1x1_grid_matches_test_median() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let gen = gen_fixture(dir, 300, 4);
    write(&dir.join("t.toml"), &audit_config(&gen, ""));
    write(
        &dir.join("s.toml"),
        &audit_config(&gen, "delta_a_grid = [0.0]\ndelta_f_grid = [0.0]"),
    );
    let t = run_in(dir, &["test", "--config", "t.toml", "--out", "t"]);
    assert_eq!(code(&t), 0, "stderr: {}", stderr(&t));
    let s = run_in(dir, &["sweep", "--config", "s.toml", "--out", "s"]);
    assert_eq!(code(&s), 0, "stderr: {}", stderr(&s));

    let report = read(&dir.join("t/report.csv"));
    let median = report
        .lines()
        .find(|l| l.starts_with("median,"))
        .and_then(|l| l.rsplit(',').next())
        .expect("median line")
        .to_string();

    let sweep = read(&dir.join("s/sweep.csv"));
    let lines: Vec<&str> = sweep.lines().collect();
    assert_eq!(lines[0], "delta_a,delta_f,p_med");
    assert_eq!(lines.len(), 2, "one grid cell: {sweep}");
    let cell_p = lines[1].rsplit(',').next().unwrap();
    assert_eq!(cell_p, median, "a 1x1 zero-margin sweep is the test itself");
}

#[test]
fn sweep_grid_is_long_format_sorted() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let gen = gen_fixture(dir, 300, 4);
    write(
        &dir.join("s.toml"),
        &audit_config(&gen, "delta_a_grid = [0.02, 0.0]\ndelta_f_grid = [0.5, 0.0, 0.25]"),
    );
    let s = run_in(dir, &["sweep", "--config", "s.toml", "--out", "s"]);
    assert_eq!(code(&s), 0, "stderr: {}", stderr(&s));
    let sweep = read(&dir.join("s/sweep.csv"));
    let axes: Vec<(&str, &str)> = sweep
        .lines()
        .skip(1)
        .map(|l| {
            let mut parts = l.split(',');
            (parts.next().unwrap(), parts.next().unwrap())
        })
        .collect();
    let expected = [
        ("0", "0"),
        ("0", "0.25"),
        ("0", "0.5"),
        ("0.02", "0"),
        ("0.02", "0.25"),
        ("0.02", "0.5"),
    ];
    assert_eq!(axes, expected, "odd grid order in {sweep}");
}

#[test]
fn gen_data_output_reloads_under_its_own_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let gen = gen_fixture(dir, 180, 9);
    let schema = Schema::load(&gen.join("schema.toml")).expect("schema parses");
    let data = load_csv(&gen.join("data.csv"), &schema).expect("csv loads under schema");
    assert_eq!(data.n(), 180);
    assert!(data.score("status_quo").is_some());
}

#[test]
fn milp_check_deviation_is_below_tolerance() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write(&dir.join("m.toml"), "instances = 8\nseed = 2\n");
    let out = run_in(dir, &["milp-check", "--config", "m.toml", "--out", "o"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let txt = read(&dir.join("o/milp_check.txt"));
    for line in txt.lines().filter(|l| l.contains("max |objective")) {
        let dev: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
        assert!(dev < 1e-6, "deviation too large in: {txt}");
    }
    assert!(txt.contains("feasibility disagreements: 0"), "{txt}");
    assert!(txt.contains("verdict: ok"), "{txt}");
}

#[test]
fn verify_bounds_reports_the_minimal_design_size() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = run_in(dir, &["verify-bounds", "--out", "o"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let txt = read(&dir.join("o/bounds.txt"));
    assert!(txt.contains("minimal k: 7"), "{txt}");
    assert!(txt.contains("satisfied at k = 7: true"), "{txt}");
    assert!(
        txt.contains("beat alpha: 6.6387"),
        "threshold should print in full precision: {txt}"
    );
}

#[test]
fn simulate_game_writes_curves_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write(&dir.join("g.toml"), "worlds = 20000\nmax_m = 6\nseed = 5\n");
    let out = run_in(dir, &["simulate-game", "--config", "g.toml", "--out", "o"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let csv = read(&dir.join("o/game.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "m,v1,se1,v2,se2");
    assert_eq!(lines.len(), 7, "header + one row per attempt count");
    let txt = read(&dir.join("o/game.txt"));
    assert!(txt.contains("more robust design:"), "{txt}");
    assert!(txt.contains("single-split design:"), "{txt}");
}

#[test]
fn simulate_power_writes_one_row_per_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write(
        &dir.join("p.toml"),
        "etas = [0.0, 1.0]\nells = [60]\nreps = 200\ndraws = 100\nseed = 8\n",
    );
    let out = run_in(dir, &["simulate-power", "--config", "p.toml", "--out", "o"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let csv = read(&dir.join("o/power.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "eta,ell,rejection_rate,mc_se");
    assert_eq!(lines.len(), 3, "header + 2 grid cells");
    for line in &lines[1..] {
        let rate: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&rate), "rate out of range: {line}");
    }
}

#[test]
fn no_subcommand_mutates_its_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let gen = gen_fixture(dir, 150, 1);
    write(&dir.join("t.toml"), &audit_config(&gen, ""));
    let before_data = std::fs::read(gen.join("data.csv")).unwrap();
    let before_schema = std::fs::read(gen.join("schema.toml")).unwrap();
    let before_cfg = std::fs::read(dir.join("t.toml")).unwrap();
    let out = run_in(dir, &["test", "--config", "t.toml", "--out", "o"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert_eq!(std::fs::read(gen.join("data.csv")).unwrap(), before_data);
    assert_eq!(std::fs::read(gen.join("schema.toml")).unwrap(), before_schema);
    assert_eq!(std::fs::read(dir.join("t.toml")).unwrap(), before_cfg);
}

#[test]
fn out_directory_is_created_when_missing() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = run_in(dir, &["verify-bounds", "--out", "deep/nested/dir"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(dir.join("deep/nested/dir/bounds.txt").exists());
}
