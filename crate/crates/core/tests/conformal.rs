use proptest::prelude::*;

use sgeo_core::conformal::{
    advance, advance_with_gradient, christoffel_oracle, critical_step, curvature_term,
    GeodesicState,
};
use sgeo_core::vector::{dot, norm};
use sgeo_core::{FnObjective, ObjectiveHandle};

fn unit(raw: &[f64]) -> Option<Vec<f64>> {
    let n = norm(raw);
    (n > 1e-3).then(|| raw.iter().map(|x| x / n).collect())
}

fn vectors(d: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-1.0f64..1.0, d),
        prop::collection::vec(-10.0f64..10.0, d),
    )
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn tangent_curvature_identity((v, g) in (1usize..8).prop_flat_map(vectors)) {
        let Some(v) = unit(&v) else { return Ok(()) };
        let c = curvature_term(&v, &g).unwrap();
        let lhs = dot(&v, &c);
        let rhs = -0.5 * dot(&v, &g);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + norm(&g)), "{lhs} vs {rhs}");
    }

    #[test]
    fn step_size_respects_lower_bound(
        (v, g) in (1usize..6).prop_flat_map(vectors),
        dt_lb in 1e-4f64..2.0,
    ) {
        let Some(v) = unit(&v) else { return Ok(()) };
        let state = GeodesicState { x: vec![0.0; v.len()], v: v.clone(), t: 2 };
        let step = advance_with_gradient(&state, &g, dt_lb, false).unwrap();
        prop_assert!(step.dt >= dt_lb);
        let c = curvature_term(&v, &g).unwrap();
        let tc = critical_step(&v, &c);
        prop_assert_eq!(step.critical, tc);
        if tc.is_finite() && 0.5 * tc >= dt_lb {
            prop_assert_eq!(step.dt, 0.5 * tc);
        } else {
            prop_assert_eq!(step.dt, dt_lb);
        }
        prop_assert!((norm(&step.next.v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_matches_closed_form(
        a in -1.0f64..1.0,
        b in prop::collection::vec(-1.0f64..1.0, 3),
        x in prop::collection::vec(-1.5f64..1.5, 3),
        v in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let Some(v) = unit(&v) else { return Ok(()) };
        let bb = b.clone();
        let f = FnObjective::new(3, move |p: &[f64]| a * (p[0] * p[1]).sin() + dot(&bb, p) - 0.1 * dot(p, p));
        let h = ObjectiveHandle::new(&f);
        let oracle = christoffel_oracle(&h, &x, &v, 1e-5).unwrap();
        let c = curvature_term(&v, &h.gradient(&x)).unwrap();
        let err: f64 = oracle.iter().zip(&c).map(|(o, ci)| (o - 2.0 * ci).powi(2)).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-4 * (1.0 + norm(&oracle)), "err {err}");
    }
}

#[test]
fn tangent_settles_from_the_diagonal_start() {
    let bowl = FnObjective::with_gradient(
        2,
        |x: &[f64]| -0.5 * dot(x, x),
        |x: &[f64], g: &mut [f64]| {
            g[0] = -x[0];
            g[1] = -x[1];
        },
    );
    let h = ObjectiveHandle::new(&bowl);
    // gradient at (1,1) points along (-1,-1); start 45 degrees off it
    let mut state = GeodesicState::start(vec![1.0, 1.0], &[-1.0, 0.0]).unwrap();
    let mut reached = None;
    for t in 1..=200 {
        let g = h.gradient(&state.x);
        let cos = (dot(&state.v, &g) / norm(&g)).abs().min(1.0);
        let angle = cos.acos();
        if angle.min(std::f64::consts::FRAC_PI_2 - angle) < 0.05 {
            reached = Some(t);
            break;
        }
        state = advance(&state, &h, 0.01, false).unwrap().next;
    }
    assert!(reached.is_some());
}

#[test]
fn flip_only_on_first_bound_limited_step() {
    let g = [0.0, 100.0];
    let first = GeodesicState::start(vec![0.0, 0.0], &[1.0, 1.0]).unwrap();
    let s = advance_with_gradient(&first, &g, 0.5, true).unwrap();
    assert!(s.flipped);
    let unflipped = advance_with_gradient(&first, &g, 0.5, false).unwrap();
    assert!(!unflipped.flipped);
    let later = GeodesicState { t: 2, ..first };
    assert!(
        !advance_with_gradient(&later, &g, 0.5, true)
            .unwrap()
            .flipped
    );
}
