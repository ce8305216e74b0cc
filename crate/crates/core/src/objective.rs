//! Objective functions and the call-counting handle the optimizers evaluate through.
//!
//! The objective `phi` is maximized. Geometrically it defines the conformal
//! factor `exp(phi)` of the search metric, which is never materialized.

use std::sync::atomic::{AtomicU64, Ordering};

/// A scalar field on `R^D` to be maximized.
///
/// Implementors that cannot provide an analytic gradient may rely on the
/// default, which is a central finite difference.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        central_difference(|p| self.value(p), x, grad);
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        (**self).gradient(x, grad)
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        (**self).gradient(x, grad)
    }
}

/// Central-difference gradient with spacing `1e-6 * (1 + |x_i|)`.
pub fn central_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], grad: &mut [f64]) {
    let mut p = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-6 * (1.0 + x[i].abs());
        p[i] = x[i] + h;
        let fp = f(&p);
        p[i] = x[i] - h;
        let fm = f(&p);
        p[i] = x[i];
        grad[i] = (fp - fm) / (2.0 * h);
    }
}

/// Objective assembled from closures. Without a gradient closure the
/// finite-difference fallback is used.
pub struct FnObjective<F, G = fn(&[f64], &mut [f64])> {
    dim: usize,
    value: F,
    gradient: Option<G>,
}

impl<F: Fn(&[f64]) -> f64> FnObjective<F> {
    pub fn new(dim: usize, value: F) -> Self {
        Self {
            dim,
            value,
            gradient: None,
        }
    }
}

impl<F, G> FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    pub fn with_gradient(dim: usize, value: F, gradient: G) -> Self {
        Self {
            dim,
            value,
            gradient: Some(gradient),
        }
    }
}

impl<F, G> Objective for FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        match &self.gradient {
            Some(g) => g(x, grad),
            None => central_difference(&self.value, x, grad),
        }
    }
}

/// Snapshot of the evaluation counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CallCounts {
    pub value_calls: u64,
    pub gradient_calls: u64,
}

impl CallCounts {
    pub fn total(&self) -> u64 {
        self.value_calls + self.gradient_calls
    }

    pub fn since(&self, earlier: CallCounts) -> CallCounts {
        CallCounts {
            value_calls: self.value_calls - earlier.value_calls,
            gradient_calls: self.gradient_calls - earlier.gradient_calls,
        }
    }
}

/// Routes every evaluation of an [`Objective`] through atomic call counters,
/// optionally enforcing a budget on the total number of evaluations.
///
/// A finite-difference gradient counts as one gradient call.
pub struct ObjectiveHandle<'a> {
    inner: &'a dyn Objective,
    value_calls: AtomicU64,
    gradient_calls: AtomicU64,
    budget: Option<u64>,
}

impl<'a> ObjectiveHandle<'a> {
    pub fn new(inner: &'a dyn Objective) -> Self {
        Self {
            inner,
            value_calls: AtomicU64::new(0),
            gradient_calls: AtomicU64::new(0),
            budget: None,
        }
    }

    /// Caps `value_calls + gradient_calls`. Optimizers poll [`exhausted`](Self::exhausted)
    /// and stop at the next opportunity; evaluations themselves are never refused.
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.value_calls.fetch_add(1, Ordering::Relaxed);
        self.inner.value(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.gradient_into(x, &mut g);
        g
    }

    pub fn gradient_into(&self, x: &[f64], grad: &mut [f64]) {
        self.gradient_calls.fetch_add(1, Ordering::Relaxed);
        self.inner.gradient(x, grad);
    }

    pub fn counts(&self) -> CallCounts {
        CallCounts {
            value_calls: self.value_calls.load(Ordering::Relaxed),
            gradient_calls: self.gradient_calls.load(Ordering::Relaxed),
        }
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    pub fn exhausted(&self) -> bool {
        self.budget.is_some_and(|b| self.counts().total() >= b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counters_track_calls() {
        let f = FnObjective::new(2, |x: &[f64]| x[0] * x[0] + 3.0 * x[1]);
        let h = ObjectiveHandle::new(&f);
        h.value(&[1.0, 2.0]);
        h.value(&[1.0, 2.0]);
        let g = h.gradient(&[1.0, 2.0]);
        assert_eq!(
            h.counts(),
            CallCounts {
                value_calls: 2,
                gradient_calls: 1
            }
        );
        assert!((g[0] - 2.0).abs() < 1e-6);
        assert!((g[1] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn budget_exhaustion() {
        let f = FnObjective::new(1, |x: &[f64]| x[0]);
        let h = ObjectiveHandle::new(&f).with_budget(3);
        h.value(&[0.0]);
        h.gradient(&[0.0]);
        assert!(!h.exhausted());
        h.value(&[0.0]);
        assert!(h.exhausted());
    }

    #[test]
    fn analytic_gradient_preferred() {
        let f = FnObjective::with_gradient(
            1,
            |x: &[f64]| x[0].sin(),
            |_: &[f64], g: &mut [f64]| g[0] = 42.0,
        );
        let h = ObjectiveHandle::new(&f);
        assert_eq!(h.gradient(&[0.3]), vec![42.0]);
    }
}
