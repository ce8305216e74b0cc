//! Sequential GEO: repeated geodesic runs with an annealed step-size lower
//! bound, locality-dependent restarts, a one-time switch to oscillatory
//! parameters and an early-stopping rule on repeated maxima.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{
    resample_out_of_bounds, run_geo, uniform_in_box, GeoConfig, GeoResult, REL_FLOOR,
};
use crate::objective::{CallCounts, ObjectiveHandle};
use crate::qn::QnSettings;
use crate::vector::{check_box, check_dims, min_edge};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgeoConfig {
    /// Number of GEO runs `N`.
    pub runs: usize,
    /// Annealing factor for the step-size lower bound.
    pub alpha: f64,
    /// Total step budget `N_T`; each run gets `floor(N_T / N)` steps per branch.
    pub total_steps: usize,
    /// Initial step-size lower bound; the first run already uses `alpha * dt_lb0`.
    pub dt_lb0: f64,
    pub qn_interval: usize,
    pub use_qn: bool,
    pub tol_f: f64,
    pub qn: QnSettings,
    /// Fixed steps per run, overriding `floor(N_T / N)`.
    pub steps_override: Option<usize>,
    /// Restart from the jump rules; when false every run starts from a fresh uniform sample.
    pub jump: bool,
    /// Allow the switch to oscillatory parameters.
    pub oscillation_check: bool,
}

/// Parameters adopted once an objective is classified as oscillatory.
pub const OSCILLATORY_RUNS: usize = 400;
pub const OSCILLATORY_ALPHA: f64 = 0.98;
pub const OSCILLATORY_TOTAL_STEPS: usize = 4000;

/// Default driver parameters for the box `[lower, upper]`.
pub fn default_config(lower: &[f64], upper: &[f64]) -> Result<SgeoConfig> {
    check_box(lower, upper)?;
    let lambda = min_edge(lower, upper);
    let d = lower.len() as f64;
    Ok(SgeoConfig {
        runs: 20,
        alpha: 0.7,
        total_steps: 500,
        dt_lb0: lambda * d.sqrt() / 100.0,
        qn_interval: 10,
        use_qn: true,
        tol_f: 0.05,
        qn: QnSettings::default(),
        steps_override: None,
        jump: true,
        oscillation_check: true,
    })
}

impl SgeoConfig {
    /// Steps per branch `T`.
    pub fn steps_per_run(&self) -> usize {
        self.steps_override
            .unwrap_or(self.total_steps / self.runs.max(1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidArgument("runs must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.steps_override.is_none() && self.total_steps < self.runs {
            return Err(Error::InvalidArgument(
                "total_steps must be at least the number of runs".into(),
            ));
        }
        if self.steps_per_run() == 0 {
            return Err(Error::InvalidArgument(
                "steps per run must be at least 1".into(),
            ));
        }
        if !(self.dt_lb0 > 0.0 && self.dt_lb0.is_finite()) {
            return Err(Error::InvalidArgument(
                "dt_lb0 must be positive and finite".into(),
            ));
        }
        if self.qn_interval == 0 || !(self.tol_f > 0.0) {
            return Err(Error::InvalidArgument(
                "qn_interval and tol_f must be positive".into(),
            ));
        }
        self.qn.validate()
    }

    fn switch_to_oscillatory(&mut self) {
        self.runs = OSCILLATORY_RUNS;
        self.alpha = OSCILLATORY_ALPHA;
        self.total_steps = OSCILLATORY_TOTAL_STEPS;
        self.use_qn = false;
    }
}

/// How the start of the following run was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpKind {
    /// `k = 0`: short jump `alpha^n * Lambda` along the jump direction.
    Local,
    /// `k = 1`: long jump `alpha * Lambda` along the jump direction.
    Far,
    /// `k = 2`: reflection of the previous start through the box midpoint.
    Reflect,
    /// Fresh uniform sample (jumping disabled, or after the oscillation switch).
    Uniform,
    /// Last run; no successor.
    None,
}

/// One line of the structured run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// 1-based run index within the current phase.
    pub n: usize,
    /// 0 before the oscillation switch, 1 after it.
    pub phase: u8,
    pub dt_lb: f64,
    pub steps: usize,
    pub k: u8,
    pub phi_star: f64,
    pub x_star: Vec<f64>,
    pub r_bar: f64,
    pub jump: JumpKind,
    pub oscillation_switch: bool,
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgeoResult {
    pub phi_star: f64,
    pub x_star: Vec<f64>,
    pub history: Vec<RunRecord>,
    /// GEO runs executed under the final parameter set.
    pub runs_executed: usize,
    pub oscillatory: bool,
    pub stopped_early: bool,
    pub calls: CallCounts,
    /// `N_th(D)` used by the stopping rule.
    pub stopping_threshold: usize,
}

/// True when the run looks like it sits on an oscillatory objective:
/// `D > 10`, `r_bar < 0.1 Lambda sqrt(D)`, within the first two runs, and QN enabled.
pub fn oscillation_check(r_bar: f64, d: usize, n: usize, use_qn: bool, lambda: f64) -> bool {
    d > 10 && r_bar < 0.1 * lambda * (d as f64).sqrt() && n <= 2 && use_qn
}

/// Number of tolerance-equal maxima that stops the driver: 5 below `D = 10`,
/// 10 below `D = 20`, 20 up to `D = 50`. Larger dimensions reuse 20.
pub fn stopping_threshold(d: usize) -> usize {
    match d {
        0..=9 => 5,
        10..=19 => 10,
        _ => {
            if d > 50 {
                log::warn!("stopping threshold undefined for D = {d} > 50; using 20");
            }
            20
        }
    }
}

/// Start point of the run following run `n`, chosen by the locality indicator
/// `k`, and resampled uniformly if it leaves the box.
#[allow(clippy::too_many_arguments)]
pub fn next_start<R: Rng + ?Sized>(
    k: u8,
    x_star: &[f64],
    x0_prev: &[f64],
    jump_unit: Option<&[f64]>,
    n: usize,
    alpha: f64,
    lambda: f64,
    lower: &[f64],
    upper: &[f64],
    rng: &mut R,
) -> (Vec<f64>, JumpKind) {
    let along = |len: f64| -> Vec<f64> {
        match jump_unit {
            Some(j) => x_star.iter().zip(j).map(|(x, u)| x + len * u).collect(),
            None => x_star.to_vec(),
        }
    };
    let decay = alpha.powi(n as i32) * lambda;
    let (x, kind) = match k {
        0 => (along(decay), JumpKind::Local),
        1 => (along(alpha * lambda), JumpKind::Far),
        _ => {
            let x = lower
                .iter()
                .zip(upper)
                .zip(x0_prev)
                .map(|((l, u), p)| {
                    let mid = 0.5 * (l + u);
                    mid + decay * (mid - p)
                })
                .collect();
            (x, JumpKind::Reflect)
        }
    };
    (resample_out_of_bounds(&x, lower, upper, rng), kind)
}

/// Runs the sequential driver.
pub fn run_sgeo<R: Rng + ?Sized>(
    objective: &ObjectiveHandle<'_>,
    lower: &[f64],
    upper: &[f64],
    config: &SgeoConfig,
    rng: &mut R,
) -> Result<SgeoResult> {
    run_sgeo_observed(objective, lower, upper, config, rng, |_, _| {})
}

/// [`run_sgeo`] calling `observe` after every GEO run with its log record and full result.
pub fn run_sgeo_observed<R, F>(
    objective: &ObjectiveHandle<'_>,
    lower: &[f64],
    upper: &[f64],
    config: &SgeoConfig,
    rng: &mut R,
    mut observe: F,
) -> Result<SgeoResult>
where
    R: Rng + ?Sized,
    F: FnMut(&RunRecord, &GeoResult),
{
    check_box(lower, upper)?;
    check_dims(objective.dim(), lower.len())?;
    config.validate()?;
    let start_counts = objective.counts();
    let d = lower.len();
    let lambda = min_edge(lower, upper);
    let n_th = stopping_threshold(d);

    let mut cfg = config.clone();
    let mut x0 = uniform_in_box(lower, upper, rng);
    let mut history: Vec<RunRecord> = Vec::new();
    let mut phase_start = 0;
    let mut phase = 0u8;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut stopped_early = false;
    let mut runs_executed = 0;
    let mut n = 1;

    while n <= cfg.runs {
        let dt_lb = cfg.dt_lb0 * cfg.alpha.powi(n as i32);
        let geo_cfg = GeoConfig {
            steps: cfg.steps_per_run(),
            qn_interval: cfg.qn_interval,
            use_qn: cfg.use_qn,
            dt_lb,
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            tol_f: cfg.tol_f,
            qn: cfg.qn,
        };
        let geo = run_geo(objective, &geo_cfg, &x0, rng)?;
        runs_executed += 1;

        if best.as_ref().is_none_or(|(b, _)| geo.phi_star > *b) {
            best = Some((geo.phi_star, geo.x_star.clone()));
        }

        let switch = phase == 0
            && cfg.oscillation_check
            && oscillation_check(geo.r_bar, d, n, cfg.use_qn, lambda);

        let mut record = RunRecord {
            n,
            phase,
            dt_lb,
            steps: geo_cfg.steps,
            k: geo.k,
            phi_star: geo.phi_star,
            x_star: geo.x_star.clone(),
            r_bar: geo.r_bar,
            jump: JumpKind::None,
            oscillation_switch: switch,
            x0: x0.clone(),
        };

        if switch {
            log::debug!("oscillation switch after run {n}: r_bar = {}", geo.r_bar);
            cfg.switch_to_oscillatory();
            phase = 1;
            record.jump = JumpKind::Uniform;
            observe(&record, &geo);
            history.push(record);
            phase_start = history.len();
            runs_executed = 0;
            x0 = uniform_in_box(lower, upper, rng);
            n = 1;
            continue;
        }

        let (phi_best, _) = best.as_ref().expect("at least one run");
        let band = cfg.tol_f * phi_best.abs().max(REL_FLOOR);
        let repeats = history[phase_start..]
            .iter()
            .map(|r| r.phi_star)
            .chain(std::iter::once(geo.phi_star))
            .filter(|p| (phi_best - p).abs() < band)
            .count();
        let stop = repeats >= n_th;

        if !stop && n < cfg.runs {
            let (next, kind) = if cfg.jump {
                next_start(
                    geo.k,
                    &geo.x_star,
                    &x0,
                    geo.jump_unit.as_deref(),
                    n,
                    cfg.alpha,
                    lambda,
                    lower,
                    upper,
                    rng,
                )
            } else {
                (uniform_in_box(lower, upper, rng), JumpKind::Uniform)
            };
            record.jump = kind;
            x0 = next;
        }
        observe(&record, &geo);
        history.push(record);

        if stop {
            stopped_early = true;
            break;
        }
        n += 1;
    }

    let (phi_star, x_star) = best.expect("at least one run");
    Ok(SgeoResult {
        phi_star,
        x_star,
        history,
        runs_executed,
        oscillatory: phase == 1,
        stopped_early,
        calls: objective.counts().since(start_counts),
        stopping_threshold: n_th,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::in_box;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_config_box_of_ten() {
        let c = default_config(&[0.0; 4], &[10.0; 4]).unwrap();
        assert!((c.dt_lb0 - 0.2).abs() < 1e-15);
        assert_eq!(c.steps_per_run(), 25);
        assert_eq!(
            (c.runs, c.alpha, c.total_steps, c.qn_interval),
            (20, 0.7, 500, 10)
        );
        assert!(c.use_qn);
        assert_eq!(c.tol_f, 0.05);
    }

    #[test]
    fn default_config_unit_interval() {
        let c = default_config(&[0.0], &[1.0]).unwrap();
        assert!((c.dt_lb0 - 0.01).abs() < 1e-15);
        // anneal reaches about a thousandth of the start after N runs
        let ratio = c.alpha.powi(c.runs as i32);
        assert!((ratio - 7.979e-4).abs() < 1e-6);
    }

    #[test]
    fn oscillation_gate() {
        assert!(oscillation_check(1.0, 12, 1, true, 10.0));
        assert!(!oscillation_check(1.0, 2, 1, true, 10.0));
        assert!(!oscillation_check(1.0, 12, 3, true, 10.0));
        assert!(!oscillation_check(1.0, 12, 1, false, 10.0));
        assert!(!oscillation_check(4.0, 12, 1, true, 10.0));
    }

    #[test]
    fn stopping_bands() {
        assert_eq!(stopping_threshold(2), 5);
        assert_eq!(stopping_threshold(9), 5);
        assert_eq!(stopping_threshold(10), 10);
        assert_eq!(stopping_threshold(19), 10);
        assert_eq!(stopping_threshold(20), 20);
        assert_eq!(stopping_threshold(50), 20);
        assert_eq!(stopping_threshold(80), 20);
    }

    #[test]
    fn next_start_reflection_leaves_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (l, u) = ([0.0, 0.0], [2.0, 2.0]);
        let (x, kind) = next_start(
            2,
            &[1.0, 1.0],
            &[0.0, 0.0],
            None,
            1,
            0.7,
            2.0,
            &l,
            &u,
            &mut rng,
        );
        assert_eq!(kind, JumpKind::Reflect);
        // (1,1) + 1.4 (1,1) = (2.4, 2.4) is outside, so a uniform draw replaces it
        assert_ne!(x, vec![2.4, 2.4]);
        assert!(in_box(&x, &l, &u));
    }

    #[test]
    fn next_start_local_jump() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (l, u) = ([0.0, 0.0], [2.0, 2.0]);
        let (x, kind) = next_start(
            0,
            &[1.0, 1.0],
            &[0.0, 0.0],
            Some(&[1.0, 0.0]),
            2,
            0.7,
            2.0,
            &l,
            &u,
            &mut rng,
        );
        assert_eq!(kind, JumpKind::Local);
        assert!((x[0] - 1.98).abs() < 1e-12 && x[1] == 1.0);
    }

    #[test]
    fn next_start_far_without_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (x, kind) = next_start(
            1,
            &[0.3, 0.4],
            &[0.0, 0.0],
            None,
            4,
            0.7,
            2.0,
            &[0.0; 2],
            &[2.0; 2],
            &mut rng,
        );
        assert_eq!(kind, JumpKind::Far);
        assert_eq!(x, vec![0.3, 0.4]);
    }

    #[test]
    fn validate_rejects_bad_alpha() {
        let mut c = default_config(&[0.0], &[1.0]).unwrap();
        c.alpha = 1.0;
        assert!(c.validate().is_err());
        c.alpha = 0.5;
        c.total_steps = 3;
        assert!(c.validate().is_err());
    }
}
