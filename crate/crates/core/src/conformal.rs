//! Geodesic stepping on metrics conformally related to Euclidean space,
//! `g_ij = exp(2 phi) delta_ij`.
//!
//! For this family the Christoffel symbols have a closed form, so the geodesic
//! acceleration of a unit tangent `v` is `grad phi - 2 (v . grad phi) v`. The
//! stepper advances along the local quadratic `x + v dt + c dt^2` with
//! `c` half that acceleration.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::objective::ObjectiveHandle;
use crate::vector::{check_dims, check_finite, dot, norm, norm_inf};

/// Tolerance on `|v| = 1` for tangent inputs.
pub const UNIT_TOL: f64 = 1e-9;

/// Displacements shorter than this leave the tangent unchanged.
pub const MIN_DISPLACEMENT: f64 = 1e-14;

/// Position, unit tangent and 1-based step index along a geodesic.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub t: usize,
}

impl GeodesicState {
    /// Starts a geodesic at `x` heading along `direction` (normalized here).
    pub fn start(x: Vec<f64>, direction: &[f64]) -> Result<Self> {
        check_dims(x.len(), direction.len())?;
        check_finite("start position", &x)?;
        let n = norm(direction);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidArgument(
                "initial tangent must be finite and nonzero".into(),
            ));
        }
        Ok(Self {
            x,
            v: direction.iter().map(|d| d / n).collect(),
            t: 1,
        })
    }
}

/// One realized step of [`advance`].
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub next: GeodesicState,
    /// Step size actually used.
    pub dt: f64,
    /// Critical step `t_C` at the departure point (may be infinite).
    pub critical: f64,
    /// Whether the curvature term was negated by the first-step flip rule.
    pub flipped: bool,
}

/// Quadratic coefficient `c = (grad - 2 (v . grad) v) / 2` for a unit tangent `v`.
pub fn curvature_term(v: &[f64], grad: &[f64]) -> Result<Vec<f64>> {
    check_dims(v.len(), grad.len())?;
    check_finite("tangent", v)?;
    check_finite("gradient", grad)?;
    let nv = norm(v);
    if (nv - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidArgument(format!(
            "tangent must be a unit vector, |v| = {nv}"
        )));
    }
    let vg = dot(v, grad);
    let c: Vec<f64> = v
        .iter()
        .zip(grad)
        .map(|(vi, gi)| 0.5 * (gi - 2.0 * vg * vi))
        .collect();
    check_finite("curvature term", &c)
        .map_err(|_| Error::NumericalOverflow("curvature term overflowed".into()))?;
    Ok(c)
}

/// `t_C = min_i |v_i / c_i|` over components where `|c_i|` exceeds
/// `1e-12 * max(1, |v|_inf)`. Infinite when no component qualifies.
pub fn critical_step(v: &[f64], c: &[f64]) -> f64 {
    let eps = 1e-12 * norm_inf(v).max(1.0);
    v.iter()
        .zip(c)
        .filter(|(_, ci)| ci.abs() > eps)
        .map(|(vi, ci)| (vi / ci).abs())
        .fold(f64::INFINITY, f64::min)
}

/// `x + v dt + c dt^2`.
pub fn quadratic_step(x: &[f64], v: &[f64], c: &[f64], dt: f64) -> Result<Vec<f64>> {
    check_dims(x.len(), v.len())?;
    check_dims(x.len(), c.len())?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step size must be positive, got {dt}"
        )));
    }
    let out: Vec<f64> = x
        .iter()
        .zip(v.iter().zip(c))
        .map(|(xi, (vi, ci))| xi + vi * dt + ci * dt * dt)
        .collect();
    if out.iter().all(|o| o.is_finite()) {
        Ok(out)
    } else {
        Err(Error::NumericalOverflow(format!(
            "quadratic step with dt = {dt} left the representable range"
        )))
    }
}

/// Advances a geodesic by one step given the gradient at `state.x`.
///
/// The step size is `max(t_C / 2, dt_lb)`, falling back to `dt_lb` when `t_C`
/// is infinite. On the first step (`t == 1`) with `flip_first` set, the
/// curvature term is negated whenever the lower bound is the binding choice.
pub fn advance_with_gradient(
    state: &GeodesicState,
    grad: &[f64],
    dt_lb: f64,
    flip_first: bool,
) -> Result<Step> {
    if !(dt_lb > 0.0 && dt_lb.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step-size lower bound must be positive and finite, got {dt_lb}"
        )));
    }
    let mut c = curvature_term(&state.v, grad)?;
    let critical = critical_step(&state.v, &c);
    let half = 0.5 * critical;
    let dt = if half.is_finite() {
        half.max(dt_lb)
    } else {
        dt_lb
    };
    let flipped = flip_first && state.t == 1 && dt == dt_lb;
    if flipped {
        c.iter_mut().for_each(|ci| *ci = -*ci);
    }
    let x = quadratic_step(&state.x, &state.v, &c, dt)?;
    let disp: Vec<f64> = x.iter().zip(&state.x).map(|(a, b)| a - b).collect();
    let len = norm(&disp);
    let v = if len >= MIN_DISPLACEMENT {
        disp.iter().map(|d| d / len).collect()
    } else {
        state.v.clone()
    };
    Ok(Step {
        next: GeodesicState {
            x,
            v,
            t: state.t + 1,
        },
        dt,
        critical,
        flipped,
    })
}

/// [`advance_with_gradient`] with the gradient evaluated through `objective`.
pub fn advance(
    state: &GeodesicState,
    objective: &ObjectiveHandle<'_>,
    dt_lb: f64,
    flip_first: bool,
) -> Result<Step> {
    check_dims(objective.dim(), state.x.len())?;
    let grad = objective.gradient(&state.x);
    advance_with_gradient(state, &grad, dt_lb, flip_first)
}

/// Geodesic acceleration `-Gamma^i_jk v^j v^k` computed the long way: the
/// metric `exp(2 phi) I` is differentiated by central differences of spacing
/// `h`, inverted numerically, and contracted into Christoffel symbols.
///
/// This is a validation oracle for [`curvature_term`]; for unit `v` it should
/// agree with `2 * curvature_term(v, grad phi)`. It only evaluates `phi`, never
/// the gradient.
pub fn christoffel_oracle(
    objective: &ObjectiveHandle<'_>,
    x: &[f64],
    v: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    let d = x.len();
    check_dims(objective.dim(), d)?;
    check_dims(d, v.len())?;
    check_finite("position", x)?;
    check_finite("tangent", v)?;
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "spacing must be positive, got {h}"
        )));
    }

    let metric_at = |p: &[f64]| -> Result<DMatrix<f64>> {
        let s = (2.0 * objective.value(p)).exp();
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::NumericalDegeneracy(format!(
                "conformal factor exp(2 phi) = {s} is not a usable metric scale"
            )));
        }
        Ok(DMatrix::identity(d, d) * s)
    };

    let g = metric_at(x)?;
    let g_inv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NumericalDegeneracy("metric is numerically singular".into()))?;

    // dg[k] = d g / d x^k
    let mut dg = Vec::with_capacity(d);
    let mut p = x.to_vec();
    for k in 0..d {
        p[k] = x[k] + h;
        let plus = metric_at(&p)?;
        p[k] = x[k] - h;
        let minus = metric_at(&p)?;
        p[k] = x[k];
        dg.push((plus - minus) / (2.0 * h));
    }

    let mut acc = vec![0.0; d];
    for (i, acc_i) in acc.iter_mut().enumerate() {
        let mut sum = 0.0;
        for j in 0..d {
            for k in 0..d {
                let mut gamma = 0.0;
                for m in 0..d {
                    gamma += g_inv[(i, m)] * (dg[k][(m, j)] + dg[j][(m, k)] - dg[m][(j, k)]);
                }
                sum += 0.5 * gamma * v[j] * v[k];
            }
        }
        *acc_i = -sum;
    }
    if acc.iter().all(|a| a.is_finite()) {
        Ok(acc)
    } else {
        Err(Error::NumericalDegeneracy(
            "Christoffel contraction is not finite".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::FnObjective;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn curvature_flat() {
        assert_eq!(
            curvature_term(&[1.0, 0.0], &[0.0, 0.0]).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn curvature_perpendicular() {
        assert_eq!(
            curvature_term(&[1.0, 0.0], &[0.0, 2.0]).unwrap(),
            vec![0.0, 1.0]
        );
    }

    #[test]
    fn curvature_aligned() {
        assert_eq!(
            curvature_term(&[1.0, 0.0], &[3.0, 0.0]).unwrap(),
            vec![-1.5, 0.0]
        );
    }

    #[test]
    fn curvature_rejects_bad_input() {
        assert!(matches!(
            curvature_term(&[1.0, 0.0], &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            curvature_term(&[1.0, 0.0], &[f64::NAN, 0.0]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            curvature_term(&[2.0, 0.0], &[1.0, 0.0]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn critical_step_examples() {
        assert_eq!(critical_step(&[1.0, 0.5], &[0.5, 0.5]), 1.0);
        assert_eq!(critical_step(&[1.0, 0.0], &[0.0, 0.0]), f64::INFINITY);
        // unit v along grad with |grad| = 4: c = -grad/2, t_C = 2/4
        let g = [0.0, 4.0];
        let v = [0.0, 1.0];
        let c = curvature_term(&v, &g).unwrap();
        assert!((critical_step(&v, &c) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quadratic_step_flat_line() {
        let x = quadratic_step(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 0.0], 0.3).unwrap();
        assert_eq!(x, vec![0.3, 0.0]);
    }

    #[test]
    fn quadratic_step_binding_component() {
        // co-signed: |c_i| = |v_i| / t_C
        let (v, tc) = (0.6, 2.5);
        let c = v / tc;
        let x = quadratic_step(&[1.0], &[v], &[c], tc / 2.0).unwrap();
        assert!(((x[0] - 1.0).abs() - 0.75 * v * tc).abs() < 1e-12);
        // opposite-signed at dt = t_C returns to the start
        let x = quadratic_step(&[1.0], &[v], &[-c], tc).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_step_errors() {
        assert!(quadratic_step(&[0.0], &[1.0], &[0.0], 0.0).is_err());
        assert!(matches!(
            quadratic_step(&[0.0], &[1.0], &[1e300], 1e10),
            Err(Error::NumericalOverflow(_))
        ));
    }

    #[test]
    fn advance_first_step_hand_value() {
        // grad = (2, 0): c = (-1, 0), t_C = 1, dt = 1/2, dx = 1/2 - 1/4
        let s = GeodesicState::start(vec![0.0, 0.0], &[2.0, 0.0]).unwrap();
        let step = advance_with_gradient(&s, &[2.0, 0.0], 1e-9, true).unwrap();
        assert_eq!(step.dt, 0.5);
        assert!(!step.flipped);
        assert!(close(&step.next.x, &[0.25, 0.0], 1e-15));
        assert_eq!(step.next.t, 2);
    }

    #[test]
    fn advance_flip_moves_uphill() {
        let s = GeodesicState::start(vec![0.0, 0.0], &[2.0, 0.0]).unwrap();
        let step = advance_with_gradient(&s, &[2.0, 0.0], 10.0, true).unwrap();
        assert!(step.flipped);
        assert_eq!(step.dt, 10.0);
        assert!(step.next.x[0] > 0.0);
        // without the flip the dominant quadratic term moves downhill
        let step = advance_with_gradient(&s, &[2.0, 0.0], 10.0, false).unwrap();
        assert!(step.next.x[0] < 0.0);
    }

    #[test]
    fn advance_flat_space_uses_lower_bound() {
        let f = FnObjective::new(2, |_: &[f64]| 1.5);
        let h = ObjectiveHandle::new(&f);
        let mut s = GeodesicState::start(vec![0.0, 0.0], &[3.0, 4.0]).unwrap();
        for _ in 0..5 {
            let step = advance(&s, &h, 0.1, true).unwrap();
            assert_eq!(step.dt, 0.1);
            s = step.next;
        }
        assert!(close(&s.x, &[0.3, 0.4], 1e-12));
    }

    #[test]
    fn advance_keeps_tangent_on_tiny_displacement() {
        let s = GeodesicState {
            x: vec![0.0],
            v: vec![1.0],
            t: 3,
        };
        let step = advance_with_gradient(&s, &[0.0], 1e-16, false).unwrap();
        assert_eq!(step.next.v, vec![1.0]);
    }

    #[test]
    fn oracle_constant_phi_is_zero() {
        let f = FnObjective::new(3, |_: &[f64]| 0.7);
        let h = ObjectiveHandle::new(&f);
        let acc = christoffel_oracle(&h, &[0.1, 0.2, 0.3], &[0.0, 1.0, 0.0], 1e-5).unwrap();
        assert!(acc.iter().all(|a| a.abs() < 1e-9));
    }

    #[test]
    fn oracle_linear_phi_perpendicular_tangent() {
        // phi = a . x, v orthogonal to a: acceleration = a
        let a = [0.3, -0.2];
        let f = FnObjective::new(2, move |x: &[f64]| a[0] * x[0] + a[1] * x[1]);
        let h = ObjectiveHandle::new(&f);
        let v = [0.2 / 0.13f64.sqrt(), 0.3 / 0.13f64.sqrt()];
        let acc = christoffel_oracle(&h, &[0.5, 1.0], &v, 1e-5).unwrap();
        assert!(close(&acc, &a, 1e-8), "{acc:?}");
    }

    #[test]
    fn oracle_detects_degenerate_metric() {
        let f = FnObjective::new(1, |_: &[f64]| -1000.0);
        let h = ObjectiveHandle::new(&f);
        assert!(matches!(
            christoffel_oracle(&h, &[0.0], &[1.0], 1e-5),
            Err(Error::NumericalDegeneracy(_))
        ));
    }
}
