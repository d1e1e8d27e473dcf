//! Command-line front end.
//!
//! Subcommands mirror the library surface one-to-one: `bounds` scores every
//! IK solution for a target pose, `select` picks the robust one under an
//! epsilon filter, `sweep` runs Monte Carlo success-rate studies over task
//! clearances, and `validate` runs the self-check oracle suite against a
//! robot spec.
//!
//! Exit codes are a stable contract: 0 success, 1 input error, 2 target
//! unreachable (IK found nothing), 3 no robust solution within epsilon.
//!
//! Every flag can also come from a TOML config file given with `--config`;
//! explicit flags win over config values. Output files are CSV with a
//! header row and floats at 17 significant digits.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::ik_engine::IkRequest;
use crate::kinematics::Pose;
use crate::montecarlo::{self, Scenario};
use crate::numerics::{Mat, UnitQuaternion};
use crate::robot_model::{load_chain, save_chain, KinematicChain};
use crate::robust_select::{robust_ik, RobustIkOutcome, TaskMetric};
use crate::uncertainty::JointErrorModel;
use crate::validation;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT_ERROR: i32 = 1;
pub const EXIT_UNREACHABLE: i32 = 2;
pub const EXIT_NO_ROBUST_IK: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "robust-ik",
    version,
    about = "Task-specific robust inverse kinematics under bounded joint actuation error"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Score every IK solution for a target pose; write the bound table.
    Bounds(TaskArgs),
    /// Pick the robust IK solution: minimum combined bound within epsilon.
    Select(TaskArgs),
    /// Monte Carlo success-rate sweep over task clearances.
    Sweep(SweepArgs),
    /// Run the self-check oracle suite against a robot spec.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricModeArg {
    /// Worst-case position error anywhere in R^3.
    Full,
    /// Worst-case position error along --direction.
    Dir,
    /// Worst-case shadow area on the plane spanned by --plane-basis.
    Plane,
}

#[derive(Args, Debug, Clone)]
pub struct TaskArgs {
    /// Robot spec file (TOML).
    #[arg(long)]
    pub robot: Option<PathBuf>,
    /// Optional TOML config supplying defaults for any flag; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Target tool position, meters.
    #[arg(long, value_name = "X,Y,Z")]
    pub target_pos: Option<String>,
    /// Target tool orientation as a scalar-first unit quaternion.
    #[arg(long, value_name = "ETA,EX,EY,EZ")]
    pub target_quat: Option<String>,
    /// Per-joint error standard deviation, radians (default 0.0045).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Confidence multiplier for the error ball (default 2).
    #[arg(long)]
    pub k: Option<f64>,
    /// Rotation weight in the combined metric, meters per radian
    /// (default 0; the peg task uses the peg length).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Feasibility cutoff on the combined metric (default +inf).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Position error measure (default full).
    #[arg(long, value_enum)]
    pub metric: Option<MetricModeArg>,
    /// Unit direction for --metric dir.
    #[arg(long, value_name = "X,Y,Z")]
    pub direction: Option<String>,
    /// Two orthonormal columns for --metric plane.
    #[arg(long, value_name = "X1,Y1,Z1,X2,Y2,Z2")]
    pub plane_basis: Option<String>,
    /// Distinct IK solutions to request (default 30).
    #[arg(long)]
    pub ik_count: Option<usize>,
    /// RNG seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// IK position tolerance, meters (default 1e-6).
    #[arg(long)]
    pub pos_tol: Option<f64>,
    /// IK orientation tolerance, radians (default 1e-6).
    #[arg(long)]
    pub rot_tol: Option<f64>,
    /// Position-only task: leave the orientation free.
    #[arg(long)]
    pub pos_only: bool,
    /// Output CSV path (default: stdout for bounds/sweep; required for
    /// select so the report is always written somewhere).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    /// Pre-grasp positioning: directional clearance sweep over block widths.
    Grasp,
    /// Pre-insertion positioning: peg-in-hole sweep over peg diameters.
    Peg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolutionsArg {
    /// Sweep the best and the worst scored solutions (the usual study).
    BestWorst,
    Best,
    Worst,
    All,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub task: TaskArgs,
    #[arg(long, value_enum)]
    pub scenario: ScenarioArg,
    /// Gripper opening in millimeters (grasp scenario).
    #[arg(long, default_value_t = 72.0)]
    pub gripper_mm: f64,
    /// Block widths to sweep, millimeters (grasp scenario).
    #[arg(long, value_name = "W1,W2,...", default_value = "58,59,60,61,62,63,64,65")]
    pub block_widths_mm: String,
    /// Hole diameter in millimeters (peg scenario).
    #[arg(long, default_value_t = 24.0)]
    pub hole_mm: f64,
    /// Peg diameters to sweep, millimeters (peg scenario).
    #[arg(long, value_name = "D1,D2,...", default_value = "4,6,8,10,12,14,16,18")]
    pub peg_diameters_mm: String,
    /// Peg length in meters (peg scenario; also the default lambda).
    #[arg(long, default_value_t = 0.10)]
    pub peg_length: f64,
    /// Trials per table cell (default: 100 for grasp, 1000 for peg).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Which scored solutions to sweep.
    #[arg(long, value_enum, default_value_t = SolutionsArg::BestWorst)]
    pub solutions: SolutionsArg,
}

#[derive(Args, Debug, Clone)]
pub struct ValidateArgs {
    /// Robot spec file (TOML).
    #[arg(long)]
    pub robot: PathBuf,
    #[arg(long, default_value_t = 0.0045)]
    pub sigma: f64,
    #[arg(long, default_value_t = 2.0)]
    pub k: f64,
    /// Boundary samples per bound check.
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    /// Random configurations per check.
    #[arg(long, default_value_t = 25)]
    pub configs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// A failed command: message plus the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn input_error(message: impl Into<String>) -> Failure {
    fail(EXIT_INPUT_ERROR, message)
}

type CmdResult = Result<i32, Failure>;

/// Dispatches a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Bounds(args) => cmd_bounds(&args),
        Command::Select(args) => cmd_select(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Validate(args) => cmd_validate(&args),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

// Config-file counterpart of the flags. Unknown keys are rejected, like the
// robot spec format.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    robot: Option<PathBuf>,
    target_pos: Option<[f64; 3]>,
    target_quat: Option<[f64; 4]>,
    sigma: Option<f64>,
    k: Option<f64>,
    lambda: Option<f64>,
    epsilon: Option<f64>,
    metric: Option<String>,
    direction: Option<[f64; 3]>,
    plane_basis: Option<[[f64; 3]; 2]>,
    ik_count: Option<usize>,
    seed: Option<u64>,
    pos_tol: Option<f64>,
    rot_tol: Option<f64>,
    pos_only: Option<bool>,
    out: Option<PathBuf>,
    trials: Option<usize>,
}

/// Everything a task command needs, after merging flags over the config
/// file and applying defaults.
pub struct RunConfig {
    pub chain: KinematicChain,
    pub target: Pose,
    pub model: JointErrorModel,
    pub metric: TaskMetric,
    pub ik_count: usize,
    pub seed: u64,
    pub pos_tol: f64,
    pub rot_tol: f64,
    pub out: Option<PathBuf>,
    pub trials: Option<usize>,
}

fn parse_floats(text: &str, expected: usize, what: &str) -> Result<Vec<f64>, Failure> {
    let parts: Result<Vec<f64>, _> = text.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match parts {
        Ok(v) if v.len() == expected => Ok(v),
        Ok(v) => Err(input_error(format!(
            "{what}: expected {expected} comma-separated numbers, got {}",
            v.len()
        ))),
        Err(e) => Err(input_error(format!("{what}: {e}"))),
    }
}

fn read_to_string(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))
}

fn load_robot(path: &Path) -> Result<KinematicChain, Failure> {
    let text = read_to_string(path)?;
    load_chain(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn ingest_quaternion(q: [f64; 4]) -> Result<UnitQuaternion, Failure> {
    let norm = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    if (norm - 1.0).abs() > 1e-6 {
        eprintln!(
            "warning: target quaternion norm deviates from 1 by {:.3e}; normalizing",
            (norm - 1.0).abs()
        );
    }
    UnitQuaternion::new_normalize(q[0], [q[1], q[2], q[3]])
        .map_err(|e| input_error(format!("target quaternion: {e}")))
}

impl TaskArgs {
    /// Merges flags over the optional config file and applies defaults.
    pub fn resolve(&self) -> Result<RunConfig, Failure> {
        let file: ConfigFile = match &self.config {
            Some(path) => toml::from_str(&read_to_string(path)?)
                .map_err(|e| input_error(format!("{}: {e}", path.display())))?,
            None => ConfigFile::default(),
        };

        let robot_path = self
            .robot
            .clone()
            .or(file.robot)
            .ok_or_else(|| input_error("missing --robot (or `robot` in --config)"))?;
        let chain = load_robot(&robot_path)?;

        let pos = match &self.target_pos {
            Some(text) => {
                let v = parse_floats(text, 3, "--target-pos")?;
                [v[0], v[1], v[2]]
            }
            None => file
                .target_pos
                .ok_or_else(|| input_error("missing --target-pos (or `target_pos` in --config)"))?,
        };
        let quat = match &self.target_quat {
            Some(text) => {
                let v = parse_floats(text, 4, "--target-quat")?;
                [v[0], v[1], v[2], v[3]]
            }
            None => file.target_quat.unwrap_or([1.0, 0.0, 0.0, 0.0]),
        };
        let target = Pose { position: pos, orientation: ingest_quaternion(quat)? };

        let sigma = self.sigma.or(file.sigma).unwrap_or(0.0045);
        let k = self.k.or(file.k).unwrap_or(2.0);
        let model = JointErrorModel::new(sigma, k).map_err(|e| input_error(e.to_string()))?;

        let lambda = self.lambda.or(file.lambda).unwrap_or(0.0);
        let epsilon = self.epsilon.or(file.epsilon).unwrap_or(f64::INFINITY);
        let mode = self.metric.or(match file.metric.as_deref() {
            None => None,
            Some("full") => Some(MetricModeArg::Full),
            Some("dir") => Some(MetricModeArg::Dir),
            Some("plane") => Some(MetricModeArg::Plane),
            Some(other) => {
                return Err(input_error(format!(
                    "config metric {other:?} not one of full|dir|plane"
                )))
            }
        });
        let direction = match &self.direction {
            Some(text) => {
                let v = parse_floats(text, 3, "--direction")?;
                Some([v[0], v[1], v[2]])
            }
            None => file.direction,
        };
        let plane = match &self.plane_basis {
            Some(text) => {
                let v = parse_floats(text, 6, "--plane-basis")?;
                Some([[v[0], v[1], v[2]], [v[3], v[4], v[5]]])
            }
            None => file.plane_basis,
        };
        let metric = match mode.unwrap_or(MetricModeArg::Full) {
            MetricModeArg::Full => TaskMetric::full_r3(lambda, epsilon),
            MetricModeArg::Dir => {
                let v = direction
                    .ok_or_else(|| input_error("--metric dir requires --direction"))?;
                TaskMetric::direction(v, lambda, epsilon)
            }
            MetricModeArg::Plane => {
                let cols = plane
                    .ok_or_else(|| input_error("--metric plane requires --plane-basis"))?;
                let basis = Mat::from_fn(3, 2, |r, c| cols[c][r]);
                TaskMetric::plane(basis, lambda, epsilon)
            }
        }
        .map_err(|e| input_error(e.to_string()))?;

        let pos_only = self.pos_only || file.pos_only.unwrap_or(false);
        let rot_tol = if pos_only {
            f64::INFINITY
        } else {
            self.rot_tol.or(file.rot_tol).unwrap_or(1e-6)
        };

        Ok(RunConfig {
            chain,
            target,
            model,
            metric,
            ik_count: self.ik_count.or(file.ik_count).unwrap_or(30),
            seed: self.seed.or(file.seed).unwrap_or(0),
            pos_tol: self.pos_tol.or(file.pos_tol).unwrap_or(1e-6),
            rot_tol,
            out: self.out.clone().or(file.out),
            trials: file.trials,
        })
    }
}

impl RunConfig {
    fn ik_request(&self) -> IkRequest<'_> {
        IkRequest {
            chain: &self.chain,
            target: self.target,
            count: self.ik_count,
            seed: self.seed,
            pos_tol: self.pos_tol,
            rot_tol: self.rot_tol,
        }
    }

    fn run_robust_ik(&self) -> Result<RobustIkOutcome, Failure> {
        robust_ik(&self.ik_request(), &self.model, &self.metric).map_err(|e| match e {
            crate::robust_select::SelectError::EmptyIkSet => fail(EXIT_UNREACHABLE, e.to_string()),
            other => input_error(other.to_string()),
        })
    }
}

fn write_output(out: &Option<PathBuf>, contents: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, contents)
            .map_err(|e| input_error(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn cmd_bounds(args: &TaskArgs) -> CmdResult {
    let config = args.resolve()?;
    let outcome = config.run_robust_ik()?;
    let report = &outcome.report;
    write_output(&config.out, &report.to_csv())?;
    eprintln!(
        "scored {} solutions; best index {} (M = {:.6e}), worst index {} (M = {:.6e})",
        report.entries.len(),
        report.best_index,
        report.best().combined,
        report.worst_index,
        report.worst().combined,
    );
    Ok(EXIT_OK)
}

fn cmd_select(args: &TaskArgs) -> CmdResult {
    let config = args.resolve()?;
    if config.out.is_none() {
        return Err(input_error("select requires --out so the report is always written"));
    }
    let outcome = config.run_robust_ik()?;
    write_output(&config.out, &outcome.report.to_csv())?;
    match &outcome.best {
        Some(theta) => {
            let mut line = format!(
                "robust IK (index {}, M = {:.6e} <= epsilon {:.6e}): theta =",
                outcome.report.best_index,
                outcome.report.best().combined,
                config.metric.epsilon()
            );
            for v in theta.as_slice() {
                let _ = write!(line, " {v:.17}");
            }
            println!("{line}");
            Ok(EXIT_OK)
        }
        None => {
            println!(
                "no robust IK within epsilon {:.6e} (minimum M = {:.6e} at index {})",
                config.metric.epsilon(),
                outcome.report.best().combined,
                outcome.report.best_index,
            );
            Ok(EXIT_NO_ROBUST_IK)
        }
    }
}

fn parse_list_mm(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let v: Result<Vec<f64>, _> = text.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if !v.is_empty() => Ok(v),
        Ok(_) => Err(input_error(format!("{what}: empty list"))),
        Err(e) => Err(input_error(format!("{what}: {e}"))),
    }
}

fn cmd_sweep(args: &SweepArgs) -> CmdResult {
    // Scenario-appropriate metric defaults; explicit flags still win.
    let mut task = args.task.clone();
    match args.scenario {
        ScenarioArg::Grasp => {
            if task.metric.is_none() {
                task.metric = Some(MetricModeArg::Dir);
            }
            if task.direction.is_none() {
                task.direction = Some("0,1,0".to_string());
            }
        }
        ScenarioArg::Peg => {
            if task.metric.is_none() {
                task.metric = Some(MetricModeArg::Full);
            }
            if task.lambda.is_none() {
                task.lambda = Some(args.peg_length);
            }
        }
    }
    let config = task.resolve()?;
    let outcome = config.run_robust_ik()?;

    let scenarios: Vec<Scenario> = match args.scenario {
        ScenarioArg::Grasp => {
            let widths = parse_list_mm(&args.block_widths_mm, "--block-widths-mm")?;
            let direction = match config.metric.position_mode() {
                crate::robust_select::PositionMode::Direction(v) => *v,
                _ => [0.0, 1.0, 0.0],
            };
            widths
                .iter()
                .map(|w| {
                    let clearance = (args.gripper_mm - w) / 2.0 * 1e-3;
                    Scenario::directional(direction, clearance, config.target)
                        .map_err(|e| input_error(format!("block width {w} mm: {e}")))
                })
                .collect::<Result<_, _>>()?
        }
        ScenarioArg::Peg => {
            let diameters = parse_list_mm(&args.peg_diameters_mm, "--peg-diameters-mm")?;
            diameters
                .iter()
                .map(|d| {
                    Scenario::peg_in_hole(
                        args.peg_length,
                        args.hole_mm * 1e-3,
                        d * 1e-3,
                        config.target,
                    )
                    .map_err(|e| input_error(format!("peg diameter {d} mm: {e}")))
                })
                .collect::<Result<_, _>>()?
        }
    };

    // Pick which report rows to sweep; duplicates collapse (best may equal
    // worst when only one solution exists).
    let mut picked: Vec<usize> = match args.solutions {
        SolutionsArg::BestWorst => vec![outcome.report.best_index, outcome.report.worst_index],
        SolutionsArg::Best => vec![outcome.report.best_index],
        SolutionsArg::Worst => vec![outcome.report.worst_index],
        SolutionsArg::All => (0..outcome.solutions.len()).collect(),
    };
    picked.dedup();
    picked.sort_unstable();
    picked.dedup();

    let subset = crate::ik_engine::IkSolutionSet {
        solutions: picked.iter().map(|&i| outcome.solutions.solutions[i].clone()).collect(),
        achieved_poses: picked.iter().map(|&i| outcome.solutions.achieved_poses[i]).collect(),
        attempts: outcome.solutions.attempts,
        converged: outcome.solutions.converged,
    };
    for (sub_idx, report_idx) in picked.iter().enumerate() {
        eprintln!(
            "sweep solution_index {sub_idx} = report index {report_idx} (M = {:.6e}{})",
            outcome.report.entries[*report_idx].combined,
            if *report_idx == outcome.report.best_index {
                ", best"
            } else if *report_idx == outcome.report.worst_index {
                ", worst"
            } else {
                ""
            }
        );
    }

    let trials = args.trials.or(config.trials).unwrap_or(match args.scenario {
        ScenarioArg::Grasp => 100,
        ScenarioArg::Peg => 1000,
    });
    let rows = montecarlo::sweep(
        &config.chain,
        &subset,
        &scenarios,
        &config.model,
        trials,
        config.seed,
    );
    write_output(&config.out, &montecarlo::sweep_csv(&rows))?;
    Ok(EXIT_OK)
}

fn cmd_validate(args: &ValidateArgs) -> CmdResult {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    let chain = load_robot(&args.robot)?;
    let model =
        JointErrorModel::new(args.sigma, args.k).map_err(|e| input_error(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut all_pass = true;
    let mut check = |name: &str, pass: bool, detail: String| {
        println!("{} {name} ({detail})", if pass { "PASS" } else { "FAIL" });
        all_pass &= pass;
    };

    // Spec file round-trips through save/load.
    let reloaded = load_chain(&save_chain(&chain));
    check(
        "spec round-trip",
        matches!(&reloaded, Ok(c) if *c == chain),
        "save then load reproduces the chain".to_string(),
    );

    let random_theta = |rng: &mut ChaCha8Rng| {
        crate::robot_model::JointVector(
            chain.joints().iter().map(|j| rng.random_range(j.limits.0..j.limits.1)).collect(),
        )
    };

    // Jacobians against central finite differences.
    let mut worst_jp: f64 = 0.0;
    let mut worst_dq: f64 = 0.0;
    for _ in 0..args.configs {
        let theta = random_theta(&mut rng);
        let jp = crate::kinematics::position_jacobian(&chain, &theta).unwrap();
        let fd = validation::fd_position_jacobian(&chain, &theta, 1e-7);
        worst_jp = worst_jp.max(validation::max_abs_diff(&jp, &fd));
        let dq = crate::kinematics::quat_error_jacobian(&chain, &theta).unwrap();
        let fdq = validation::fd_quat_jacobian(&chain, &theta, 1e-7);
        worst_dq = worst_dq.max(validation::max_abs_diff(&dq, &fdq));
    }
    check(
        "position jacobian vs finite differences",
        worst_jp < 1e-6,
        format!("max entry error {worst_jp:.3e} over {} configs", args.configs),
    );
    check(
        "quaternion jacobian vs finite differences",
        worst_dq < 1e-6,
        format!("max entry error {worst_dq:.3e} over {} configs", args.configs),
    );

    // Bound soundness and tightness on boundary samples.
    let mut sound = true;
    let mut tight = true;
    let mut worst_ratio = f64::INFINITY;
    for i in 0..5u64 {
        let theta = random_theta(&mut rng);
        let jp = crate::kinematics::position_jacobian(&chain, &theta).unwrap();
        let set = crate::uncertainty::PositionErrorSet::new(&jp, &model);
        let bound = crate::uncertainty::position_bound_r3(&set);
        let r3 = validation::check_position_bound_r3(&jp, &model, bound, args.samples, args.seed ^ i);
        sound &= r3.sound();
        tight &= r3.tight(0.99);
        worst_ratio = worst_ratio.min(r3.best_ratio);

        let jr = crate::kinematics::rotation_jacobian(&chain, &theta).unwrap();
        let qd = crate::kinematics::fk_pose(&chain, &theta).unwrap().orientation;
        let rset = crate::uncertainty::RotationErrorSet::new(&jr, &qd, &model);
        let rbound = crate::uncertainty::rotation_bound(&rset);
        let rot = validation::check_rotation_bound(
            &jr,
            &qd,
            &model,
            rbound,
            args.samples,
            args.seed ^ (100 + i),
        );
        sound &= rot.sound();
        tight &= rot.tight(0.99);
        worst_ratio = worst_ratio.min(rot.best_ratio);
    }
    check(
        "bounds sound on boundary samples",
        sound,
        format!("{} samples per check, no exceedances allowed", args.samples),
    );
    check(
        "bounds attained by best sample",
        tight,
        format!("worst attainment ratio {worst_ratio:.6}"),
    );

    // Linearization audit: nonlinear directional error vs linear bound.
    let theta = random_theta(&mut rng);
    let audit = montecarlo::linearization_audit(
        &chain,
        &theta,
        [0.0, 1.0, 0.0],
        &model,
        args.samples.max(10_000),
        args.seed ^ 0xA0D17,
    );
    check(
        "linearization residual",
        audit.fraction() < 0.01,
        format!(
            "{} of {} in-ball trials exceeded the linear bound (fraction {:.5})",
            audit.exceedances,
            audit.in_ball,
            audit.fraction()
        ),
    );

    Ok(if all_pass { EXIT_OK } else { EXIT_INPUT_ERROR })
}
