//! Small dense-vector helpers over `&[f64]`.

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Returns `a / |a|`, or `None` when `|a|` is below `eps` or not finite.
pub fn normalized(a: &[f64], eps: f64) -> Option<Vec<f64>> {
    let n = norm(a);
    if n.is_finite() && n > eps {
        Some(scale(a, 1.0 / n))
    } else {
        None
    }
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

pub(crate) fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn check_finite(name: &str, a: &[f64]) -> Result<()> {
    if all_finite(a) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} has non-finite components"
        )))
    }
}

/// True when `lower <= x <= upper` componentwise.
pub fn in_box(x: &[f64], lower: &[f64], upper: &[f64]) -> bool {
    x.iter()
        .zip(lower.iter().zip(upper))
        .all(|(xi, (l, u))| *xi >= *l && *xi <= *u)
}

/// Validates a search box: equal lengths, at least one dimension, `L < U` and finite.
pub fn check_box(lower: &[f64], upper: &[f64]) -> Result<()> {
    if lower.is_empty() {
        return Err(Error::InvalidArgument(
            "search box has zero dimensions".into(),
        ));
    }
    check_dims(lower.len(), upper.len())?;
    check_finite("lower bound", lower)?;
    check_finite("upper bound", upper)?;
    if let Some(i) = lower.iter().zip(upper).position(|(l, u)| l >= u) {
        return Err(Error::InvalidArgument(format!(
            "degenerate search box in component {i}: lower {} >= upper {}",
            lower[i], upper[i]
        )));
    }
    Ok(())
}

/// Smallest edge of the box, `min(U - L)`.
pub fn min_edge(lower: &[f64], upper: &[f64]) -> f64 {
    lower
        .iter()
        .zip(upper)
        .map(|(l, u)| u - l)
        .fold(f64::INFINITY, f64::min)
}
