//! One function per subcommand: load the config, apply flag overrides, run
//! the library, write artifacts plus a rerunnable manifest.
//!
//! Fixed artifact sets (column orders are documented in docs/file-formats.md):
//!
//! * `test` — report.csv, report.txt, manifest.toml
//! * `sweep` — sweep.csv, manifest.toml
//! * `simulate-power` — power.csv, manifest.toml
//! * `simulate-game` — game.csv, game.txt, manifest.toml
//! * `verify-bounds` — bounds.txt, manifest.toml
//! * `gen-data` — data.csv, schema.toml, manifest.toml
//! * `milp-check` — milp_check.txt, manifest.toml

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use fairgain::milp_rules::{build_accuracy_milp, build_fairness_milp, BuiltMilp};
use fairgain::sim::{
    gen_synthetic, run_game, run_power_curve, verify_bounds as hoeffding_bounds, SimError,
    Strategy,
};
use fairgain::{
    delta_sweep, load_csv, render_report, render_sweep, run_procedure, schema_for, write_csv,
    DataError, Dataset, DatasetNames, DecisionRule, Group, ProcedureError, Schema, SelectionRule,
    SolveLimits, UtilitySpec,
};
use fairgain_milp::{enumerate_linear_classifiers, solve_milp, Status};

use crate::configs::{
    self, BoundsConfig, GameConfig, GenDataConfig, MilpCheckConfig, PowerConfig, RuleConfig,
    SelectionConfig, SweepConfig, TestConfig, UtilityConfig,
};
use crate::{CliError, CommonArgs};

fn data_err(e: DataError) -> CliError {
    CliError::Data(e.to_string())
}

fn sim_err(e: SimError) -> CliError {
    CliError::Config(e.to_string())
}

fn proc_err(e: ProcedureError) -> CliError {
    match e {
        ProcedureError::BadConfig(m) => CliError::Config(m),
        ProcedureError::Data(d) => CliError::Data(d.to_string()),
        other => CliError::Internal(other.to_string()),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

/// Shared input plumbing for `test` and `sweep`: schema, dataset, status
/// quo, selection rule, and utility pair. Schema problems are config
/// errors (the `schema` key points at the wrong thing); dataset problems
/// are data errors.
fn load_inputs(
    data_path: &Path,
    schema_path: &Path,
    status_quo: &RuleConfig,
    selection: &SelectionConfig,
    utility: &mut UtilityConfig,
) -> Result<(Dataset, DecisionRule, SelectionRule, UtilitySpec), CliError> {
    if !schema_path.exists() {
        return Err(CliError::Config(format!(
            "schema file {} does not exist (config key `schema`)",
            schema_path.display()
        )));
    }
    let schema =
        Schema::load(schema_path).map_err(|e| CliError::Config(format!("config key `schema`: {e}")))?;
    let data = load_csv(data_path, &schema).map_err(data_err)?;
    let a0 = status_quo.resolve(&data)?;
    let rule = selection.resolve()?;
    let spec = utility.resolve()?;
    Ok((data, a0, rule, spec))
}

pub fn test(args: &CommonArgs) -> Result<(), CliError> {
    let mut cfg: TestConfig = configs::required_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.data = configs::absolutize(&cfg.data)?;
    cfg.schema = configs::absolutize(&cfg.schema)?;
    let (data, a0, rule, spec) = load_inputs(
        &cfg.data,
        &cfg.schema,
        &cfg.status_quo,
        &cfg.selection,
        &mut cfg.utility,
    )?;
    let pcfg = cfg.procedure()?;
    let result = run_procedure(&data, &a0, &rule, &spec, &pcfg).map_err(proc_err)?;
    let report = render_report(&result);
    write_file(&args.out, "report.csv", &report.csv)?;
    write_file(&args.out, "report.txt", &report.text)?;
    cfg.run = configs::stamp("test", cfg.seed);
    configs::write_manifest(&cfg, &args.out)?;
    println!(
        "wrote report.csv, report.txt, manifest.toml to {}",
        args.out.display()
    );
    println!(
        "median p-value {:.4} at alpha/2 = {}: {}",
        result.p_med,
        result.alpha / 2.0,
        if result.reject {
            "reject (an improvement is detectable)"
        } else {
            "no rejection"
        }
    );
    Ok(())
}

pub fn sweep(args: &CommonArgs) -> Result<(), CliError> {
    let mut cfg: SweepConfig = configs::required_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.data = configs::absolutize(&cfg.data)?;
    cfg.schema = configs::absolutize(&cfg.schema)?;
    let (data, a0, rule, spec) = load_inputs(
        &cfg.data,
        &cfg.schema,
        &cfg.status_quo,
        &cfg.selection,
        &mut cfg.utility,
    )?;
    let pcfg = cfg.procedure();
    let grid = delta_sweep(
        &data,
        &a0,
        &rule,
        &spec,
        &pcfg,
        &cfg.delta_a_grid,
        &cfg.delta_f_grid,
    )
    .map_err(proc_err)?;
    write_file(&args.out, "sweep.csv", &render_sweep(&grid))?;
    cfg.run = configs::stamp("sweep", cfg.seed);
    configs::write_manifest(&cfg, &args.out)?;
    println!(
        "wrote sweep.csv ({} x {} grid), manifest.toml to {}",
        grid.delta_a.len(),
        grid.delta_f.len(),
        args.out.display()
    );
    Ok(())
}

pub fn simulate_power(args: &CommonArgs) -> Result<(), CliError> {
    let mut cfg: PowerConfig = configs::config_or_default(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let cells = run_power_curve(&cfg.to_sim()).map_err(sim_err)?;
    let mut csv = String::from("eta,ell,rejection_rate,mc_se\n");
    for c in &cells {
        writeln!(csv, "{},{},{},{}", c.eta, c.ell, c.rejection_rate, c.mc_se)
            .expect("string writes cannot fail");
    }
    write_file(&args.out, "power.csv", &csv)?;
    cfg.run = configs::stamp("simulate-power", cfg.seed);
    configs::write_manifest(&cfg, &args.out)?;
    println!(
        "wrote power.csv ({} cells), manifest.toml to {}",
        cells.len(),
        args.out.display()
    );
    Ok(())
}

pub fn simulate_game(args: &CommonArgs) -> Result<(), CliError> {
    let mut cfg: GameConfig = configs::config_or_default(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let res = run_game(&cfg.to_sim()).map_err(sim_err)?;
    let mut csv = String::from("m,v1,se1,v2,se2\n");
    for m in 1..=cfg.max_m {
        writeln!(
            csv,
            "{m},{},{},{},{}",
            res.v1[m - 1],
            res.se1[m - 1],
            res.v2[m - 1],
            res.se2[m - 1]
        )
        .expect("string writes cannot fail");
    }
    let mut txt = String::new();
    writeln!(txt, "worlds: {}", res.worlds).expect("string writes cannot fail");
    writeln!(
        txt,
        "single-split design: optimal attempts m* = {}, manipulation success {:.4}, \
         policymaker payoff {:.4}",
        res.m1_star,
        res.v1[res.m1_star - 1],
        res.u_p1
    )
    .expect("string writes cannot fail");
    writeln!(
        txt,
        "median-of-k design:  optimal attempts m* = {}, manipulation success {:.4}, \
         policymaker payoff {:.4}",
        res.m2_star,
        res.v2[res.m2_star - 1],
        res.u_p2
    )
    .expect("string writes cannot fail");
    writeln!(
        txt,
        "more robust design: {}",
        match res.more_robust {
            Some(Strategy::MedianOfK) => "median-of-k",
            Some(Strategy::SingleSplit) => "single-split",
            None => "tie",
        }
    )
    .expect("string writes cannot fail");
    write_file(&args.out, "game.csv", &csv)?;
    write_file(&args.out, "game.txt", &txt)?;
    cfg.run = configs::stamp("simulate-game", cfg.seed);
    configs::write_manifest(&cfg, &args.out)?;
    println!(
        "wrote game.csv, game.txt, manifest.toml to {}",
        args.out.display()
    );
    Ok(())
}

pub fn verify_bounds(args: &CommonArgs) -> Result<(), CliError> {
    let mut cfg: BoundsConfig = configs::config_or_default(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let rep = hoeffding_bounds(cfg.alpha, cfg.k).map_err(sim_err)?;
    let mut txt = String::new();
    writeln!(txt, "alpha: {}", cfg.alpha).expect("string writes cannot fail");
    writeln!(txt, "k: {}", cfg.k).expect("string writes cannot fail");
    writeln!(
        txt,
        "hoeffding bound on the median design's null rejection: {}",
        rep.hoeffding
    )
    .expect("string writes cannot fail");
    writeln!(txt, "k threshold for the bound to beat alpha: {}", rep.threshold)
        .expect("string writes cannot fail");
    writeln!(txt, "minimal k: {}", rep.minimal_k).expect("string writes cannot fail");
    writeln!(txt, "satisfied at k = {}: {}", cfg.k, rep.satisfied)
        .expect("string writes cannot fail");
    write_file(&args.out, "bounds.txt", &txt)?;
    cfg.run = configs::stamp("verify-bounds", cfg.seed);
    configs::write_manifest(&cfg, &args.out)?;
    print!("{txt}");
    println!("wrote bounds.txt, manifest.toml to {}", args.out.display());
    Ok(())
}

pub fn gen_data(args: &CommonArgs) -> Result<(), CliError> {
    let mut cfg: GenDataConfig = configs::config_or_default(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let data = gen_synthetic(cfg.n, cfg.seed, cfg.bias).map_err(sim_err)?;
    let csv_path = args.out.join("data.csv");
    write_csv(&data, &csv_path)
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", csv_path.display())))?;
    write_file(&args.out, "schema.toml", &schema_for(&data).to_toml())?;
    cfg.run = configs::stamp("gen-data", cfg.seed);
    configs::write_manifest(&cfg, &args.out)?;
    println!(
        "wrote data.csv ({} rows), schema.toml, manifest.toml to {}",
        data.n(),
        args.out.display()
    );
    Ok(())
}

/// Margins for `milp-check` instances, chosen so `baseline + iota` can
/// never land within solver tolerance of an attainable utility level
/// (utilities on these instances are rationals with denominator at most 10).
const CHECK_IOTAS: [f64; 2] = [0.013, 0.051];

pub fn milp_check(args: &CommonArgs) -> Result<(), CliError> {
    let mut cfg: MilpCheckConfig = configs::config_or_default(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if cfg.instances == 0 {
        return Err(CliError::Config("milp-check needs at least one instance".into()));
    }
    if !(cfg.box_bound.is_finite() && cfg.box_bound > 0.0) {
        return Err(CliError::Config(format!(
            "box_bound must be positive and finite, got {}",
            cfg.box_bound
        )));
    }

    let limits = SolveLimits::default();
    let mut max_dev_fair = 0.0f64;
    let mut max_dev_acc = 0.0f64;
    let mut disagreements = 0usize;
    for i in 0..cfg.instances {
        let seed = cfg.seed.wrapping_add(i as u64);
        let (data, a0) = random_check_instance(seed);
        let iota = CHECK_IOTAS[i % CHECK_IOTAS.len()];
        let rows: Vec<Vec<f64>> = (0..data.n()).map(|j| data.row(j).to_vec()).collect();
        let labelings = enumerate_linear_classifiers(&rows, cfg.box_bound)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        let base = baseline_accuracy(&data, &a0)?;

        let fairness_built = build_fairness_milp(&data, &a0, iota, cfg.box_bound)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        match (
            best_fair_gap(&labelings, &data, base, iota),
            milp_objective(&fairness_built, &limits)?,
        ) {
            (Some(oracle), Some(found)) => max_dev_fair = max_dev_fair.max((oracle - found).abs()),
            (None, None) => {}
            _ => disagreements += 1,
        }

        let target = if i % 2 == 0 { Group::R } else { Group::B };
        let accuracy_built = build_accuracy_milp(&data, &a0, iota, cfg.box_bound, target)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        match (
            best_target_accuracy(&labelings, &data, base, iota, target),
            milp_objective(&accuracy_built, &limits)?,
        ) {
            (Some(oracle), Some(found)) => max_dev_acc = max_dev_acc.max((oracle - found).abs()),
            (None, None) => {}
            _ => disagreements += 1,
        }
    }

    let ok = disagreements == 0 && max_dev_fair < 1e-6 && max_dev_acc < 1e-6;
    let mut txt = String::new();
    writeln!(txt, "instances: {}", cfg.instances).expect("string writes cannot fail");
    writeln!(txt, "fairness search max |objective - enumeration|: {max_dev_fair:e}")
        .expect("string writes cannot fail");
    writeln!(txt, "accuracy search max |objective - enumeration|: {max_dev_acc:e}")
        .expect("string writes cannot fail");
    writeln!(txt, "feasibility disagreements: {disagreements}")
        .expect("string writes cannot fail");
    writeln!(txt, "verdict: {}", if ok { "ok" } else { "MISMATCH" })
        .expect("string writes cannot fail");
    write_file(&args.out, "milp_check.txt", &txt)?;
    cfg.run = configs::stamp("milp-check", cfg.seed);
    configs::write_manifest(&cfg, &args.out)?;
    print!("{txt}");
    println!("wrote milp_check.txt, manifest.toml to {}", args.out.display());
    Ok(())
}

/// A small random binary-outcome instance: 6-10 rows, 2-3 features with an
/// intercept, both groups guaranteed, and a status quo that cycles through
/// select-all, select-none, and a fixed linear rule.
fn random_check_instance(seed: u64) -> (Dataset, DecisionRule) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x6d69_6c70);
    let m = 6 + (seed % 5) as usize;
    let d = 2 + (seed % 2) as usize;
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            let mut r = vec![1.0];
            for _ in 1..d {
                r.push(StandardNormal.sample(&mut rng));
            }
            r
        })
        .collect();
    let outcomes: Vec<f64> = (0..m)
        .map(|_| f64::from(u8::from(rng.gen_bool(0.5))))
        .collect();
    let groups: Vec<Group> = (0..m)
        .map(|i| match i {
            0 | 2 => Group::R,
            1 | 3 => Group::B,
            _ => {
                if rng.gen_bool(0.5) {
                    Group::R
                } else {
                    Group::B
                }
            }
        })
        .collect();
    let a0 = match seed % 3 {
        0 => DecisionRule::Constant { decision: 1 },
        1 => DecisionRule::Constant { decision: 0 },
        _ => DecisionRule::LinearClassifier {
            beta: vec![0.2, 1.0, 0.0][..d].to_vec(),
        },
    };
    let data = Dataset::assemble(rows, outcomes, groups, BTreeMap::new(), DatasetNames::generic(d))
        .expect("generated instances are structurally valid");
    (data, a0)
}

fn milp_objective(built: &BuiltMilp, limits: &SolveLimits) -> Result<Option<f64>, CliError> {
    let sol = solve_milp(&built.model, limits).map_err(|e| CliError::Internal(e.to_string()))?;
    match sol.status {
        Status::Optimal => Ok(Some(sol.objective)),
        Status::Infeasible => Ok(None),
        Status::TimeLimit => Err(CliError::Internal(
            "exact search hit its node limit on a check instance".into(),
        )),
    }
}

fn labeling_accuracy(labels: &[bool], data: &Dataset) -> [f64; 2] {
    let mut correct = [0.0f64; 2];
    let mut count = [0.0f64; 2];
    for i in 0..data.n() {
        let g = data.groups()[i].index();
        count[g] += 1.0;
        if data.outcomes()[i] == f64::from(u8::from(labels[i])) {
            correct[g] += 1.0;
        }
    }
    [correct[0] / count[0], correct[1] / count[1]]
}

fn baseline_accuracy(data: &Dataset, a0: &DecisionRule) -> Result<[f64; 2], CliError> {
    let decisions = a0.evaluate(data).map_err(data_err)?;
    let labels: Vec<bool> = decisions.iter().map(|&v| v == 1.0).collect();
    Ok(labeling_accuracy(&labels, data))
}

/// Smallest achievable accuracy gap subject to lifting both groups by
/// `iota`, by brute force over every labeling a box-bounded linear rule
/// can realize; `None` when no labeling qualifies.
fn best_fair_gap(
    labelings: &[(Vec<bool>, Vec<f64>)],
    data: &Dataset,
    base: [f64; 2],
    iota: f64,
) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (labels, _) in labelings {
        let u = labeling_accuracy(labels, data);
        if u[0] >= base[0] + iota && u[1] >= base[1] + iota {
            let gap = (u[0] - u[1]).abs();
            best = Some(best.map_or(gap, |b: f64| b.min(gap)));
        }
    }
    best
}

/// Largest achievable target-group accuracy subject to keeping the other
/// group `iota` above baseline and shrinking the gap by `iota`, by brute
/// force.
fn best_target_accuracy(
    labelings: &[(Vec<bool>, Vec<f64>)],
    data: &Dataset,
    base: [f64; 2],
    iota: f64,
    target: Group,
) -> Option<f64> {
    let gap0 = (base[0] - base[1]).abs();
    let (t_idx, o_idx) = match target {
        Group::R => (0usize, 1usize),
        Group::B => (1, 0),
    };
    let mut best: Option<f64> = None;
    for (labels, _) in labelings {
        let u = labeling_accuracy(labels, data);
        if u[o_idx] >= base[o_idx] + iota && (u[0] - u[1]).abs() <= gap0 - iota {
            best = Some(best.map_or(u[t_idx], |b: f64| b.max(u[t_idx])));
        }
    }
    best
}
