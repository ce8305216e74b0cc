//! Geodesic-guided optimization: trace a forward and a backward geodesic from
//! a start point, optionally refining with quasi-Newton every few steps, and
//! summarize the traces for the sequential driver.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conformal::{advance_with_gradient, GeodesicState};
use crate::error::{Error, Result};
use crate::objective::{CallCounts, ObjectiveHandle};
use crate::qn::{maximize_local, QnSettings};
use crate::vector::{check_box, check_dims, in_box, norm_inf, normalized};

/// Relative comparisons `|a - b| < tol * |m|` floor `|m|` at this value.
pub const REL_FLOOR: f64 = 1e-8;

const MAX_RESAMPLES_PER_STEP: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoConfig {
    /// Steps per branch.
    pub steps: usize,
    /// Steps between quasi-Newton calls.
    pub qn_interval: usize,
    pub use_qn: bool,
    /// Lower bound on the geodesic step size.
    pub dt_lb: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Relative tolerance for the locality indicator.
    pub tol_f: f64,
    pub qn: QnSettings,
}

impl GeoConfig {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, steps: usize, dt_lb: f64) -> Self {
        Self {
            steps,
            qn_interval: 10,
            use_qn: true,
            dt_lb,
            lower,
            upper,
            tol_f: 0.05,
            qn: QnSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_box(&self.lower, &self.upper)?;
        if self.steps == 0 || self.qn_interval == 0 {
            return Err(Error::InvalidArgument(
                "steps and qn_interval must be at least 1".into(),
            ));
        }
        if !(self.dt_lb > 0.0 && self.dt_lb.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "dt_lb must be positive and finite, got {}",
                self.dt_lb
            )));
        }
        if !(self.tol_f > 0.0) {
            return Err(Error::InvalidArgument("tol_f must be positive".into()));
        }
        self.qn.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Forward,
    Backward,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Forward => "forward",
            Branch::Backward => "backward",
        }
    }
}

/// One recorded geodesic step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub branch: Branch,
    pub t: usize,
    pub x: Vec<f64>,
    /// `phi(x_t)`, or the quasi-Newton value from `x_t` when that is larger.
    pub phi: f64,
    /// Where `phi` was attained: `x_t` or the quasi-Newton optimum.
    pub best_x: Vec<f64>,
    /// Step size taken from `x_t`.
    pub dt: f64,
    /// Whether `x_t` was drawn uniformly after the geodesic left the box.
    pub resampled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeoResult {
    pub phi_star: f64,
    pub x_star: Vec<f64>,
    /// Mean quasi-Newton displacement over both branches, 0 without QN calls.
    pub r_bar: f64,
    /// Unit jump direction, `None` when the traces carry no directional signal.
    pub jump_unit: Option<Vec<f64>>,
    /// Locality indicator in `{0, 1, 2}`.
    pub k: u8,
    pub forward: Vec<TracePoint>,
    pub backward: Vec<TracePoint>,
    pub qn_calls: usize,
    pub resamples: usize,
    pub calls: CallCounts,
}

impl GeoResult {
    pub fn trace(&self) -> impl Iterator<Item = &TracePoint> {
        self.forward.iter().chain(&self.backward)
    }
}

/// Returns `x` if it lies in `[lower, upper]`, otherwise a uniform sample of the box.
pub fn resample_out_of_bounds<R: Rng + ?Sized>(
    x: &[f64],
    lower: &[f64],
    upper: &[f64],
    rng: &mut R,
) -> Vec<f64> {
    if x.iter().all(|v| v.is_finite()) && in_box(x, lower, upper) {
        x.to_vec()
    } else {
        uniform_in_box(lower, upper, rng)
    }
}

pub fn uniform_in_box<R: Rng + ?Sized>(lower: &[f64], upper: &[f64], rng: &mut R) -> Vec<f64> {
    lower
        .iter()
        .zip(upper)
        .map(|(l, u)| rng.gen_range(*l..=*u))
        .collect()
}

/// Weighted mean of the trace positions minus their plain mean.
///
/// Weights are the values shifted by their minimum and normalized; a flat
/// trace gives the zero vector.
///
/// # Panics
/// If the lists are empty or differ in length.
pub fn jump_direction(positions: &[Vec<f64>], values: &[f64]) -> Vec<f64> {
    assert!(
        !positions.is_empty() && positions.len() == values.len(),
        "jump_direction needs equal-length, nonempty traces"
    );
    let d = positions[0].len();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = values.iter().map(|v| v - min).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 1e-300) || !total.is_finite() {
        return vec![0.0; d];
    }
    let inv_t = 1.0 / positions.len() as f64;
    let mut out = vec![0.0; d];
    for (x, w) in positions.iter().zip(&weights) {
        let w = w / total;
        for (o, xi) in out.iter_mut().zip(x) {
            *o += (w - inv_t) * xi;
        }
    }
    out
}

fn flat_within(values: &[f64], tol: f64) -> bool {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let band = tol * m.abs().max(REL_FLOOR);
    values.iter().all(|v| (m - v).abs() < band)
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `k = 0` when the forward values spread beyond `tol_f` of their maximum,
/// `k = 1` when the forward branch is flat, `k = 2` when the backward branch
/// is also flat and its maximum agrees with the forward maximum.
pub fn locality_indicator(forward: &[f64], backward: &[f64], tol_f: f64) -> u8 {
    assert!(!forward.is_empty(), "forward trace must be nonempty");
    if !flat_within(forward, tol_f) {
        return 0;
    }
    if backward.is_empty() {
        return 1;
    }
    let (mf, mb) = (max_of(forward), max_of(backward));
    if (mb - mf).abs() < tol_f * mb.abs().max(REL_FLOOR) && flat_within(backward, tol_f) {
        2
    } else {
        1
    }
}

/// Runs one forward and one backward geodesic of `config.steps` steps from `x0`.
pub fn run_geo<R: Rng + ?Sized>(
    objective: &ObjectiveHandle<'_>,
    config: &GeoConfig,
    x0: &[f64],
    rng: &mut R,
) -> Result<GeoResult> {
    config.validate()?;
    check_dims(config.lower.len(), x0.len())?;
    check_dims(objective.dim(), x0.len())?;
    if !in_box(x0, &config.lower, &config.upper) {
        return Err(Error::InvalidArgument(
            "start point lies outside the search box".into(),
        ));
    }
    let start = objective.counts();

    let mut tracer = BranchTracer {
        objective,
        config,
        qn_displacements: Vec::new(),
        resamples: 0,
    };
    let forward = tracer.trace(Branch::Forward, x0, rng)?;
    let backward = tracer.trace(Branch::Backward, x0, rng)?;

    let best = forward
        .iter()
        .chain(&backward)
        .fold(None::<&TracePoint>, |best, p| match best {
            Some(b) if b.phi >= p.phi => Some(b),
            _ => Some(p),
        })
        .expect("traces are nonempty");
    let (phi_star, x_star) = (best.phi, best.best_x.clone());

    let dir_of = |pts: &[TracePoint]| {
        let xs: Vec<Vec<f64>> = pts.iter().map(|p| p.x.clone()).collect();
        let vs: Vec<f64> = pts.iter().map(|p| p.phi).collect();
        jump_direction(&xs, &vs)
    };
    let (df, db) = (dir_of(&forward), dir_of(&backward));
    let dx: Vec<f64> = df.iter().zip(&db).map(|(a, b)| 0.5 * (a + b)).collect();
    let scale = forward
        .iter()
        .chain(&backward)
        .map(|p| norm_inf(&p.x))
        .fold(1.0, f64::max);
    let jump_unit = normalized(&dx, 1e-12 * scale);

    let fv: Vec<f64> = forward.iter().map(|p| p.phi).collect();
    let bv: Vec<f64> = backward.iter().map(|p| p.phi).collect();
    let k = locality_indicator(&fv, &bv, config.tol_f);

    let qn = &tracer.qn_displacements;
    let r_bar = if qn.is_empty() {
        0.0
    } else {
        qn.iter().sum::<f64>() / qn.len() as f64
    };

    Ok(GeoResult {
        phi_star,
        x_star,
        r_bar,
        jump_unit,
        k,
        qn_calls: qn.len(),
        resamples: tracer.resamples,
        forward,
        backward,
        calls: objective.counts().since(start),
    })
}

struct BranchTracer<'o, 'c> {
    objective: &'o ObjectiveHandle<'o>,
    config: &'c GeoConfig,
    qn_displacements: Vec<f64>,
    resamples: usize,
}

impl BranchTracer<'_, '_> {
    /// Initial tangent: `+grad` forward, `-grad` backward; a random direction
    /// when the gradient vanishes.
    fn initial_tangent<R: Rng + ?Sized>(
        &self,
        branch: Branch,
        grad: &[f64],
        rng: &mut R,
    ) -> Vec<f64> {
        let sign = match branch {
            Branch::Forward => 1.0,
            Branch::Backward => -1.0,
        };
        let dir: Vec<f64> = grad.iter().map(|g| sign * g).collect();
        normalized(&dir, 0.0).unwrap_or_else(|| random_unit(grad.len(), rng))
    }

    /// Draws points until both `phi` and its gradient are finite.
    fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(Vec<f64>, f64, Vec<f64>)> {
        let cfg = self.config;
        for _ in 0..MAX_RESAMPLES_PER_STEP {
            self.resamples += 1;
            let x = uniform_in_box(&cfg.lower, &cfg.upper, rng);
            let phi = self.objective.value(&x);
            if !phi.is_finite() {
                continue;
            }
            let grad = self.objective.gradient(&x);
            if grad.iter().all(|g| g.is_finite()) {
                return Ok((x, phi, grad));
            }
        }
        Err(Error::NumericalDegeneracy(
            "objective is not finite at any resampled point".into(),
        ))
    }

    fn trace<R: Rng + ?Sized>(
        &mut self,
        branch: Branch,
        x0: &[f64],
        rng: &mut R,
    ) -> Result<Vec<TracePoint>> {
        let cfg = self.config;
        let obj = self.objective;
        let flip = branch == Branch::Forward;

        let mut phi = obj.value(x0);
        if !phi.is_finite() {
            return Err(Error::NonFiniteStart);
        }
        let mut grad = obj.gradient(x0);
        if !grad.iter().all(|g| g.is_finite()) {
            return Err(Error::NonFiniteStart);
        }
        let v = self.initial_tangent(branch, &grad, rng);
        let mut state = GeodesicState {
            x: x0.to_vec(),
            v,
            t: 1,
        };
        let mut resampled = false;
        let mut points = Vec::with_capacity(cfg.steps);

        for t in 1..=cfg.steps {
            let (mut phi_t, mut best_x) = (phi, state.x.clone());
            if cfg.use_qn && t % cfg.qn_interval == 0 {
                let qn = maximize_local(obj, &state.x, &cfg.qn)?;
                self.qn_displacements.push(qn.displacement);
                if qn.phi_star > phi_t && in_box(&qn.x_star, &cfg.lower, &cfg.upper) {
                    phi_t = qn.phi_star;
                    best_x = qn.x_star;
                }
            }

            let step = advance_with_gradient(&state, &grad, cfg.dt_lb, flip);
            points.push(TracePoint {
                branch,
                t,
                x: state.x.clone(),
                phi: phi_t,
                best_x,
                dt: step.as_ref().map(|s| s.dt).unwrap_or(f64::NAN),
                resampled,
            });
            if t == cfg.steps {
                break;
            }

            let next = match step {
                Ok(s) if in_box(&s.next.x, &cfg.lower, &cfg.upper) => {
                    let p = obj.value(&s.next.x);
                    let g = if p.is_finite() {
                        obj.gradient(&s.next.x)
                    } else {
                        Vec::new()
                    };
                    if p.is_finite() && g.iter().all(|v| v.is_finite()) {
                        Some((s.next, p, g))
                    } else {
                        None
                    }
                }
                Ok(_) | Err(Error::NumericalOverflow(_)) => None,
                Err(e) => return Err(e),
            };
            match next {
                Some((s, p, g)) => {
                    state = s;
                    phi = p;
                    grad = g;
                    resampled = false;
                }
                None => {
                    let (x, p, g) = self.resample(rng)?;
                    let v = self.initial_tangent(branch, &g, rng);
                    state = GeodesicState { x, v, t: t + 1 };
                    phi = p;
                    grad = g;
                    resampled = true;
                }
            }
        }
        Ok(points)
    }
}

fn random_unit<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        if let Some(u) = normalized(&v, 1e-3) {
            return u;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::FnObjective;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn jump_direction_flat_is_zero() {
        let xs = vec![vec![0.3, 1.0], vec![2.0, -1.0], vec![5.0, 0.1]];
        assert_eq!(jump_direction(&xs, &[2.0, 2.0, 2.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn jump_direction_two_points() {
        let d = jump_direction(&[vec![0.0], vec![1.0]], &[0.0, 1.0]);
        assert_eq!(d, vec![0.5]);
    }

    #[test]
    fn jump_direction_points_to_neighbor() {
        // symmetric trace around the local max at 0, neighbor bump at 3
        let phi = |x: f64| (-x * x).exp() + 0.5 * (-(x - 3.0) * (x - 3.0)).exp();
        let xs: Vec<Vec<f64>> = (-10..=10).map(|i| vec![i as f64 * 0.1]).collect();
        let vs: Vec<f64> = xs.iter().map(|x| phi(x[0])).collect();
        assert!(jump_direction(&xs, &vs)[0] > 0.0);
    }

    #[test]
    fn locality_examples() {
        assert_eq!(locality_indicator(&[1.0, 1.0], &[1.0, 1.0], 0.05), 2);
        assert_eq!(locality_indicator(&[1.0, 0.2, 1.0], &[1.0], 0.05), 0);
        assert_eq!(locality_indicator(&[1.0, 1.0, 1.0], &[1.0, 2.0], 0.05), 1);
        // zero maximum uses the floor, not a vacuous band
        assert_eq!(locality_indicator(&[0.0, -0.5], &[], 0.05), 0);
    }

    #[test]
    fn resample_keeps_inside_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (l, u) = ([0.0, 0.0], [1.0, 2.0]);
        assert_eq!(
            resample_out_of_bounds(&[0.5, 1.5], &l, &u, &mut rng),
            vec![0.5, 1.5]
        );
        let r = resample_out_of_bounds(&[1.1, 1.5], &l, &u, &mut rng);
        assert!(in_box(&r, &l, &u));
        let r = resample_out_of_bounds(&[f64::NAN, 1.5], &l, &u, &mut rng);
        assert!(in_box(&r, &l, &u));
    }

    #[test]
    fn resample_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (l, u) = ([0.0, 0.0], [1.0, 1.0]);
        let n = 10_000;
        let mut mean = [0.0; 2];
        for _ in 0..n {
            let r = resample_out_of_bounds(&[2.0, 2.0], &l, &u, &mut rng);
            mean[0] += r[0] / n as f64;
            mean[1] += r[1] / n as f64;
        }
        assert!((mean[0] - 0.5).abs() < 0.02 && (mean[1] - 0.5).abs() < 0.02);
    }

    #[test]
    fn single_step_without_qn() {
        let f = FnObjective::new(2, |x: &[f64]| -(x[0] * x[0] + x[1] * x[1]));
        let h = ObjectiveHandle::new(&f);
        let mut cfg = GeoConfig::new(vec![-2.0; 2], vec![2.0; 2], 1, 0.01);
        cfg.use_qn = false;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = run_geo(&h, &cfg, &[0.5, 0.5], &mut rng).unwrap();
        assert_eq!(r.forward.len(), 1);
        assert_eq!(r.backward.len(), 1);
        assert_eq!(r.phi_star, -0.5);
        assert_eq!(r.r_bar, 0.0);
        assert_eq!(r.qn_calls, 0);
    }

    #[test]
    fn rejects_start_outside_box() {
        let f = FnObjective::new(1, |x: &[f64]| x[0]);
        let h = ObjectiveHandle::new(&f);
        let cfg = GeoConfig::new(vec![0.0], vec![1.0], 5, 0.01);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(run_geo(&h, &cfg, &[2.0], &mut rng).is_err());
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let f = FnObjective::new(1, |_: &[f64]| f64::INFINITY);
        let h = ObjectiveHandle::new(&f);
        let cfg = GeoConfig::new(vec![0.0], vec![1.0], 5, 0.01);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            run_geo(&h, &cfg, &[0.5], &mut rng),
            Err(Error::NonFiniteStart)
        );
    }
}
