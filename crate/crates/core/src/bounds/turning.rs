use serde::Serialize;

use super::theorem::{theorem1_lower, theorem1_upper, BoundInput, LambdaSpec};
use crate::domain::MixtureWeights;
use crate::{Error, Result};

/// Smallest λ with `λ k_tj ≥ 1/t` for every task and weight:
/// `max_t 1/(t · min_j k_tj)`. Beyond it every `γ_t` equals `1/t` and the
/// upper bound stops changing.
pub fn turning_point(weights: &[MixtureWeights]) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::InvalidArgument("turning point needs at least one weight vector".into()));
    }
    Ok(weights
        .iter()
        .map(|w| {
            let min = w.weights().iter().copied().fold(f64::INFINITY, f64::min);
            1.0 / (w.task_index() as f64 * min)
        })
        .fold(0.0, f64::max))
}

/// `n` evenly spaced values covering `[lo, hi]`.
pub fn lambda_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(lo < hi) || !(lo >= 0.0) {
        return Err(Error::InvalidArgument(format!("bad λ grid [{lo}, {hi}] with {n} points")));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub upper: f64,
    pub lower: f64,
}

/// Upper and lower bounds at each fixed λ. Points with `γ_t(λ) = 0` are
/// skipped and returned separately.
pub fn bound_curve(base: &BoundInput, grid: &[f64]) -> Result<(Vec<CurvePoint>, Vec<f64>)> {
    let mut points = Vec::with_capacity(grid.len());
    let mut skipped = Vec::new();
    for &lambda in grid {
        let input = base.clone().with_lambdas(LambdaSpec::Fixed(lambda));
        match theorem1_upper(&input) {
            Ok(up) => points.push(CurvePoint {
                lambda,
                upper: up.value,
                lower: theorem1_lower(&input)?.value,
            }),
            Err(Error::ZeroGamma { .. }) => skipped.push(lambda),
            Err(e) => return Err(e),
        }
    }
    Ok((points, skipped))
}

/// First grid λ from which the upper bound stays within `tol` of its final
/// value. A grid-resolution cross-check of [`turning_point`].
pub fn sweep_turning_point(curve: &[CurvePoint], tol: f64) -> Option<f64> {
    let last = curve.last()?.upper;
    let mut idx = curve.len() - 1;
    while idx > 0 && (curve[idx - 1].upper - last).abs() <= tol {
        idx -= 1;
    }
    Some(curve[idx].lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1(tasks: usize) -> Vec<MixtureWeights> {
        (2..=tasks)
            .map(|t| {
                let w = if t == 2 {
                    vec![1.0]
                } else {
                    let mut v = vec![1.0 / t as f64; t - 1];
                    v[0] = 2.0 / t as f64;
                    v
                };
                MixtureWeights::new(t, w).unwrap()
            })
            .collect()
    }

    #[test]
    fn example_one_turns_at_one() {
        assert_eq!(turning_point(&example1(6)).unwrap(), 1.0);
    }

    #[test]
    fn grid_endpoints() {
        let g = lambda_grid(0.01, 20.0, 400).unwrap();
        assert_eq!(g.len(), 400);
        assert_eq!((g[0], g[399]), (0.01, 20.0));
        assert!(lambda_grid(1.0, 1.0, 3).is_err());
    }

    #[test]
    fn curve_flattens_after_turning_point() {
        let w = example1(5);
        let input = BoundInput::new(1, vec![1.0; 5], w.clone(), 1.0);
        let mut grid = vec![0.0];
        grid.extend(lambda_grid(0.01, 20.0, 400).unwrap());
        let (curve, skipped) = bound_curve(&input, &grid).unwrap();
        assert_eq!(skipped, vec![0.0]);
        for pair in curve.windows(2) {
            assert!(pair[1].upper <= pair[0].upper + 1e-12);
        }
        let star = turning_point(&w).unwrap();
        let found = sweep_turning_point(&curve, 1e-12).unwrap();
        assert!(found >= star && found - star <= 20.0 / 399.0 + 1e-12);
    }
}
