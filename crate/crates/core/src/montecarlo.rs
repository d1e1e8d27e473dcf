//! Seeded Monte Carlo harness: does a configuration actually succeed as
//! often as its bounds promise?
//!
//! Each trial draws a Gaussian joint error (full tails, not truncated to
//! the confidence ball — the ball is a k-sigma set, so some draws land
//! outside it), runs the *nonlinear* forward kinematics on the perturbed
//! joints, and evaluates the scenario's success predicate on the realized
//! pose. Bounds, by contrast, come from the linearized map; the gap
//! between the two is exactly the linearization error the theory assumes
//! small, and [`linearization_audit`] measures it.
//!
//! Per-trial RNG streams are derived from (seed, solution index, scenario
//! index, trial index), so trials can run in any order — or in parallel —
//! and still produce bit-identical tables.

use rayon::prelude::*;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::ik_engine::IkSolutionSet;
use crate::kinematics::{fk_pose, position_jacobian, Pose};
use crate::numerics::{dot3, fmt_g17, norm3, sub3};
use crate::robot_model::{JointVector, KinematicChain};
use crate::uncertainty::{position_bound_direction, JointErrorModel, PositionErrorSet};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("clearance must be non-negative (got {0})")]
    NegativeClearance(f64),
    #[error("hole diameter {hole} must exceed peg diameter {peg}")]
    HoleSmallerThanPeg { hole: f64, peg: f64 },
    #[error("direction is not unit")]
    NonUnitDirection,
}

/// What counts as success for one task geometry.
#[derive(Debug, Clone)]
pub enum ScenarioKind {
    /// Pre-grasp clearance test: the realized tool position may deviate
    /// from the target by at most `clearance` along `direction`.
    DirectionalClearance { direction: [f64; 3], clearance: f64 },
    /// Pre-insertion test: the peg-tip error bound
    /// `‖p − p_d‖ + l_p·|θ_z|` must stay within `(d_hole − d_peg)/2`.
    PegInHole { peg_length: f64, hole_diameter: f64, peg_diameter: f64 },
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub target: Pose,
}

impl Scenario {
    pub fn directional(direction: [f64; 3], clearance: f64, target: Pose) -> Result<Self, ScenarioError> {
        if (norm3(direction) - 1.0).abs() > 1e-9 {
            return Err(ScenarioError::NonUnitDirection);
        }
        // Zero clearance is degenerate but legal; it is the natural harness
        // baseline (success becomes almost surely impossible).
        if clearance < 0.0 {
            return Err(ScenarioError::NegativeClearance(clearance));
        }
        Ok(Scenario { kind: ScenarioKind::DirectionalClearance { direction, clearance }, target })
    }

    pub fn peg_in_hole(
        peg_length: f64,
        hole_diameter: f64,
        peg_diameter: f64,
        target: Pose,
    ) -> Result<Self, ScenarioError> {
        if hole_diameter <= peg_diameter {
            return Err(ScenarioError::HoleSmallerThanPeg { hole: hole_diameter, peg: peg_diameter });
        }
        Ok(Scenario {
            kind: ScenarioKind::PegInHole { peg_length, hole_diameter, peg_diameter },
            target,
        })
    }

    /// The clearance the trial is judged against, meters.
    pub fn clearance(&self) -> f64 {
        match &self.kind {
            ScenarioKind::DirectionalClearance { clearance, .. } => *clearance,
            ScenarioKind::PegInHole { hole_diameter, peg_diameter, .. } => {
                (hole_diameter - peg_diameter) / 2.0
            }
        }
    }

    fn succeeds(&self, realized: &Pose) -> bool {
        match &self.kind {
            ScenarioKind::DirectionalClearance { direction, clearance } => {
                let dev = dot3(*direction, sub3(realized.position, self.target.position)).abs();
                dev <= *clearance
            }
            ScenarioKind::PegInHole { peg_length, .. } => {
                peg_tip_error_bound(realized, &self.target, *peg_length) <= self.clearance()
            }
        }
    }
}

/// Position error at the peg tip, `l_p` out along the tool z-axis from the
/// gripper frame.
pub fn peg_tip_error(realized: &Pose, desired: &Pose, peg_length: f64) -> f64 {
    let zr = realized.orientation.rotate([0.0, 0.0, 1.0]);
    let zd = desired.orientation.rotate([0.0, 0.0, 1.0]);
    let tip_r = [
        realized.position[0] + peg_length * zr[0],
        realized.position[1] + peg_length * zr[1],
        realized.position[2] + peg_length * zr[2],
    ];
    let tip_d = [
        desired.position[0] + peg_length * zd[0],
        desired.position[1] + peg_length * zd[1],
        desired.position[2] + peg_length * zd[2],
    ];
    norm3(sub3(tip_r, tip_d))
}

/// Triangle-inequality upper bound on [`peg_tip_error`]:
/// `‖p − p_d‖ + l_p·|θ_z|`, with θ_z the included angle between the
/// realized and desired tool z-axes. This is the success functional the
/// pre-insertion scenario is judged by.
pub fn peg_tip_error_bound(realized: &Pose, desired: &Pose, peg_length: f64) -> f64 {
    let zr = realized.orientation.rotate([0.0, 0.0, 1.0]);
    let zd = desired.orientation.rotate([0.0, 0.0, 1.0]);
    let theta_z = dot3(zr, zd).clamp(-1.0, 1.0).acos();
    norm3(sub3(realized.position, desired.position)) + peg_length * theta_z.abs()
}

/// Success tally over one batch of trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialResult {
    pub success_count: usize,
    pub trials: usize,
    pub rng_seed: u64,
}

impl TrialResult {
    pub fn rate(&self) -> f64 {
        self.success_count as f64 / self.trials as f64
    }
}

/// SplitMix64 step, the mixing primitive for seed derivation.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a base seed and an index path, so that
/// (seed, solution, scenario, trial) addresses one fixed RNG stream.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut state = splitmix64(base);
    for p in parts {
        state = splitmix64(state ^ p.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    }
    state
}

/// One draw of the joint error: independent zero-mean Gaussians with the
/// model's σ per joint. Not truncated to the confidence ball.
pub fn sample_joint_error(model: &JointErrorModel, n: usize, rng: &mut impl Rng) -> JointVector {
    JointVector(
        (0..n)
            .map(|_| model.sigma() * rng.sample::<f64, _>(StandardNormal))
            .collect(),
    )
}

/// Runs `trials` perturbed executions of `theta` and counts scenario
/// successes. Realized poses use the full nonlinear forward kinematics.
pub fn run_trials(
    chain: &KinematicChain,
    theta: &JointVector,
    scenario: &Scenario,
    model: &JointErrorModel,
    trials: usize,
    rng_seed: u64,
) -> TrialResult {
    assert!(trials >= 1, "need at least one trial");
    assert_eq!(theta.len(), chain.dof());
    let n = chain.dof();
    let success_count = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rng_seed, &[trial as u64]));
            let delta = sample_joint_error(model, n, &mut rng);
            let perturbed = JointVector(
                theta.as_slice().iter().zip(delta.as_slice()).map(|(t, d)| t + d).collect(),
            );
            let realized = fk_pose(chain, &perturbed).expect("lengths match");
            usize::from(scenario.succeeds(&realized))
        })
        .sum();
    TrialResult { success_count, trials, rng_seed }
}

/// One cell of the sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub solution_index: usize,
    pub scenario_index: usize,
    pub clearance: f64,
    pub result: TrialResult,
}

/// Full cross product of solutions × scenarios. Reproducible from the seed:
/// each cell's stream is derived from (seed, solution index, scenario
/// index), so the table is identical no matter how work is scheduled.
pub fn sweep(
    chain: &KinematicChain,
    solutions: &IkSolutionSet,
    scenarios: &[Scenario],
    model: &JointErrorModel,
    trials: usize,
    seed: u64,
) -> Vec<SweepRow> {
    assert!(!solutions.is_empty() && !scenarios.is_empty(), "sweep needs non-empty inputs");
    let mut rows = Vec::with_capacity(solutions.len() * scenarios.len());
    for (solution_index, theta) in solutions.solutions.iter().enumerate() {
        for (scenario_index, scenario) in scenarios.iter().enumerate() {
            let cell_seed = derive_seed(seed, &[solution_index as u64, scenario_index as u64]);
            let result = run_trials(chain, theta, scenario, model, trials, cell_seed);
            rows.push(SweepRow {
                solution_index,
                scenario_index,
                clearance: scenario.clearance(),
                result,
            });
        }
    }
    rows
}

/// Wilson score interval for a binomial proportion at `z` standard normal
/// quantiles.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    assert!(trials >= 1);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// z-quantile for the 95% Wilson columns in the CSV output.
const WILSON_Z95: f64 = 1.959963984540054;

/// Renders sweep rows as CSV with the schema
/// `solution_index,scenario_id,clearance_m,trials,successes,rate,wilson_lo,wilson_hi`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "solution_index,scenario_id,clearance_m,trials,successes,rate,wilson_lo,wilson_hi\n",
    );
    for row in rows {
        let (lo, hi) = wilson_interval(row.result.success_count, row.result.trials, WILSON_Z95);
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.solution_index,
            row.scenario_index,
            fmt_g17(row.clearance),
            row.result.trials,
            row.result.success_count,
            fmt_g17(row.result.rate()),
            fmt_g17(lo),
            fmt_g17(hi),
        ));
    }
    out
}

/// How often the linear model underestimates reality inside the ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearizationAudit {
    pub trials: usize,
    /// Draws that landed inside the confidence ball.
    pub in_ball: usize,
    /// In-ball draws whose *nonlinear* directional error exceeded the
    /// linear-map bound.
    pub exceedances: usize,
}

impl LinearizationAudit {
    /// Exceedance fraction among in-ball draws.
    pub fn fraction(&self) -> f64 {
        if self.in_ball == 0 {
            0.0
        } else {
            self.exceedances as f64 / self.in_ball as f64
        }
    }
}

/// Samples joint errors, keeps the draws inside the confidence ball, and
/// counts how many produce a nonlinear directional error beyond the
/// linearized bound. The fraction quantifies the linearization error the
/// bounds neglect.
pub fn linearization_audit(
    chain: &KinematicChain,
    theta: &JointVector,
    direction: [f64; 3],
    model: &JointErrorModel,
    trials: usize,
    seed: u64,
) -> LinearizationAudit {
    assert!(trials >= 1);
    let jp = position_jacobian(chain, theta).expect("lengths match");
    let set = PositionErrorSet::new(&jp, model);
    let bound = position_bound_direction(&set, direction).expect("direction validated by caller");
    let nominal = fk_pose(chain, theta).expect("lengths match").position;
    let n = chain.dof();
    let c = model.ball_radius_sq();

    let (in_ball, exceedances) = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[trial as u64]));
            let delta = sample_joint_error(model, n, &mut rng);
            let norm_sq: f64 = delta.as_slice().iter().map(|x| x * x).sum();
            if norm_sq > c {
                return (0usize, 0usize);
            }
            let perturbed = JointVector(
                theta.as_slice().iter().zip(delta.as_slice()).map(|(t, d)| t + d).collect(),
            );
            let realized = fk_pose(chain, &perturbed).expect("lengths match").position;
            let err = dot3(direction, sub3(realized, nominal)).abs();
            (1usize, usize::from(err > bound))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    LinearizationAudit { trials, in_ball, exceedances }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ik_engine::{solve_ik, IkRequest};
    use crate::numerics::UnitQuaternion;
    use crate::robots;

    fn paper_model() -> JointErrorModel {
        JointErrorModel::new(0.0045, 2.0).unwrap()
    }

    #[test]
    fn zero_sigma_draws_zero_vector() {
        let model = JointErrorModel::new(0.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = sample_joint_error(&model, 7, &mut rng);
        assert!(d.as_slice().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn empirical_sigma_matches_model() {
        let model = paper_model();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut sum_sq = 0.0;
        let n = 1_000_000usize;
        for _ in 0..n {
            let d = sample_joint_error(&model, 1, &mut rng);
            sum_sq += d.0[0] * d.0[0];
        }
        let sigma_hat = (sum_sq / n as f64).sqrt();
        assert!(
            (sigma_hat - 0.0045).abs() / 0.0045 < 0.01,
            "empirical sigma {sigma_hat}"
        );
    }

    /// Regularized lower incomplete gamma P(a, x), series form (x < a + 1).
    fn gamma_p(a: f64, x: f64) -> f64 {
        assert!(x < a + 1.0, "series form only");
        let ln_gamma_a = {
            // Γ(3.5) and friends via the recurrence down to Γ(1/2) = √π.
            let mut acc = 1.0f64;
            let mut t = a;
            while t > 1.0 {
                t -= 1.0;
                acc *= t;
            }
            assert!((t - 0.5).abs() < 1e-12, "test oracle expects half-integer a");
            (acc * std::f64::consts::PI.sqrt()).ln()
        };
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..500 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        (sum * (-x + a * x.ln() - ln_gamma_a).exp()).clamp(0.0, 1.0)
    }

    #[test]
    fn in_ball_mass_matches_chi_square() {
        // ‖δΘ‖² / σ² is χ² with 7 degrees of freedom; the k = 2 ball is the
        // event χ²₇ ≤ 4, whose mass the incomplete gamma gives analytically.
        let model = paper_model();
        let expected = gamma_p(3.5, 2.0);
        assert!((expected - 0.2202).abs() < 0.001, "oracle sanity: {expected}");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 1_000_000usize;
        let c = model.ball_radius_sq();
        let mut inside = 0usize;
        for _ in 0..n {
            let d = sample_joint_error(&model, 7, &mut rng);
            let sq: f64 = d.as_slice().iter().map(|x| x * x).sum();
            if sq <= c {
                inside += 1;
            }
        }
        let frac = inside as f64 / n as f64;
        assert!(
            (frac - expected).abs() / expected < 0.01,
            "in-ball fraction {frac} vs chi-square {expected}"
        );
    }

    #[test]
    fn zero_sigma_always_succeeds() {
        let chain = robots::planar3r();
        let theta = JointVector(vec![0.4, 0.9, -0.7]);
        let target = fk_pose(&chain, &theta).unwrap();
        let scenario = Scenario::directional([0.0, 1.0, 0.0], 0.001, target).unwrap();
        let model = JointErrorModel::new(0.0, 2.0).unwrap();
        let r = run_trials(&chain, &theta, &scenario, &model, 200, 5);
        assert_eq!(r.success_count, 200);
        assert_eq!(r.rate(), 1.0);
    }

    #[test]
    fn zero_clearance_almost_never_succeeds() {
        let chain = robots::planar3r();
        let theta = JointVector(vec![0.4, 0.9, -0.7]);
        let target = fk_pose(&chain, &theta).unwrap();
        let scenario = Scenario::directional([0.0, 1.0, 0.0], 0.0, target).unwrap();
        let r = run_trials(&chain, &theta, &scenario, &paper_model(), 500, 6);
        assert_eq!(r.success_count, 0);
    }

    #[test]
    fn scenario_validation() {
        let target = Pose { position: [0.0; 3], orientation: UnitQuaternion::IDENTITY };
        assert!(Scenario::directional([0.0, 2.0, 0.0], 0.001, target).is_err());
        assert!(Scenario::directional([0.0, 1.0, 0.0], -0.1, target).is_err());
        assert!(Scenario::peg_in_hole(0.1, 0.010, 0.012, target).is_err());
        let s = Scenario::peg_in_hole(0.1, 0.024, 0.010, target).unwrap();
        assert!((s.clearance() - 0.007).abs() < 1e-15);
    }

    #[test]
    fn peg_tip_error_never_exceeds_its_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let l_p = 0.10;
        for _ in 0..10_000 {
            let rand_pose = |rng: &mut ChaCha8Rng| Pose {
                position: [
                    rng.random_range(-0.1..0.1),
                    rng.random_range(-0.1..0.1),
                    rng.random_range(-0.1..0.1),
                ],
                orientation: UnitQuaternion::from_axis_angle(
                    [
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0f64) + 1.5,
                    ],
                    rng.random_range(-3.0..3.0),
                ),
            };
            let a = rand_pose(&mut rng);
            let b = rand_pose(&mut rng);
            let e = peg_tip_error(&a, &b, l_p);
            let bound = peg_tip_error_bound(&a, &b, l_p);
            assert!(e <= bound + 1e-12, "tip error {e} above bound {bound}");
        }
    }

    #[test]
    fn fixed_seed_reproduces_tables_exactly() {
        let chain = robots::planar3r();
        let target = Pose { position: [1.2, 0.8, 0.0], orientation: UnitQuaternion::IDENTITY };
        let mut req = IkRequest::position_only(&chain, target);
        req.count = 3;
        req.seed = 4;
        let set = solve_ik(&req);
        assert!(!set.is_empty());
        let scenarios: Vec<Scenario> = [0.002, 0.004]
            .iter()
            .map(|c| Scenario::directional([0.0, 1.0, 0.0], *c, target).unwrap())
            .collect();
        let a = sweep(&chain, &set, &scenarios, &paper_model(), 100, 99);
        let b = sweep(&chain, &set, &scenarios, &paper_model(), 100, 99);
        assert_eq!(a, b);
        assert_eq!(a.len(), set.len() * scenarios.len());
        assert_eq!(sweep_csv(&a), sweep_csv(&b));
    }

    #[test]
    fn identical_thetas_with_identical_cell_seeds_match() {
        let chain = robots::planar3r();
        let theta = JointVector(vec![0.4, 0.9, -0.7]);
        let target = fk_pose(&chain, &theta).unwrap();
        let scenario = Scenario::directional([0.0, 1.0, 0.0], 0.003, target).unwrap();
        let model = paper_model();
        let a = run_trials(&chain, &theta, &scenario, &model, 250, 1234);
        let b = run_trials(&chain, &theta.clone(), &scenario, &model, 250, 1234);
        assert_eq!(a, b);
    }

    #[test]
    fn wilson_interval_sane() {
        let (lo, hi) = wilson_interval(80, 100, 1.96);
        assert!(lo > 0.70 && lo < 0.80);
        assert!(hi > 0.80 && hi < 0.90);
        let (lo, hi) = wilson_interval(0, 10, 1.96);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0);
        let (lo, hi) = wilson_interval(10, 10, 1.96);
        assert!(lo < 1.0);
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn audit_counts_in_ball_draws() {
        let chain = robots::desk7();
        let theta = JointVector(vec![0.3, 0.7, -0.4, 1.2, 0.5, -0.8, 0.2]);
        let audit = linearization_audit(&chain, &theta, [0.0, 1.0, 0.0], &paper_model(), 20_000, 7);
        // About 22% of draws should land inside the 2-sigma ball for n = 7.
        let frac_in = audit.in_ball as f64 / audit.trials as f64;
        assert!(frac_in > 0.19 && frac_in < 0.25, "in-ball fraction {frac_in}");
        assert!(audit.fraction() < 0.01, "linearization exceedance {}", audit.fraction());
    }

    #[test]
    fn derive_seed_is_order_sensitive() {
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
        assert_ne!(derive_seed(1, &[2]), derive_seed(2, &[2]));
        assert_eq!(derive_seed(7, &[1, 2, 3]), derive_seed(7, &[1, 2, 3]));
    }
}
