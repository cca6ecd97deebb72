#![allow(dead_code)]

use ccl_core::domain::{TableModel, TaskDistribution};
use rand::Rng;

/// Random point masses on `n` one-dimensional inputs, every class present.
pub fn random_dist<R: Rng>(rng: &mut R, n: usize, classes: usize) -> TaskDistribution {
    let points: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
    let labels: Vec<usize> = (0..n)
        .map(|i| if i < classes { i } else { rng.random_range(0..classes) })
        .collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mass = raw.iter().map(|m| m / total).collect();
    TaskDistribution::new(1, points, labels, mass).unwrap()
}

pub fn random_table<R: Rng>(rng: &mut R, dist: &TaskDistribution, dim: usize) -> TableModel {
    TableModel::random(dist.points(), dim, rng).unwrap()
}

/// Random unit vectors as plain rows.
pub fn random_units<R: Rng>(rng: &mut R, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| x / norm).collect()
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Log-sum-exp over `j ≠ i` of `z_iᵀz_j / τ`, written out directly.
fn log_denominator(z: &[Vec<f64>], i: usize, tau: f64) -> f64 {
    let terms: Vec<f64> = (0..z.len()).filter(|&j| j != i).map(|j| dot(&z[i], &z[j]) / tau).collect();
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Supervised contrastive loss summed over anchors.
pub fn supcon_reference(z: &[Vec<f64>], labels: &[usize], tau: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..z.len() {
        let lse = log_denominator(z, i, tau);
        let pos: Vec<usize> = (0..z.len()).filter(|&j| j != i && labels[j] == labels[i]).collect();
        let s: f64 = pos.iter().map(|&j| dot(&z[i], &z[j]) / tau - lse).sum();
        total -= s / pos.len() as f64;
    }
    total
}

/// Instance-wise relation distillation summed over anchors.
pub fn ird_reference(cur: &[Vec<f64>], past: &[Vec<f64>], tau: f64, tau_past: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..cur.len() {
        let lse_c = log_denominator(cur, i, tau);
        let lse_p = log_denominator(past, i, tau_past);
        for j in (0..cur.len()).filter(|&j| j != i) {
            let p = (dot(&past[i], &past[j]) / tau_past - lse_p).exp();
            total -= p * (dot(&cur[i], &cur[j]) / tau - lse_c);
        }
    }
    total
}
