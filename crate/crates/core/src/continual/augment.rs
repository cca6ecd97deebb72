use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Label-preserving random view of an input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Augmentation {
    /// Rotation of the first two coordinates by a uniform angle in
    /// `±max_degrees`, then Gaussian jitter on every coordinate.
    Planar { sigma: f64, max_degrees: f64 },
    /// Gaussian jitter only.
    Jitter { sigma: f64 },
    /// Row-major image: integer shift by up to `max_shift` pixels in each
    /// direction with zero fill, then Gaussian noise clamped to `[0, 1]`.
    Image {
        width: usize,
        height: usize,
        max_shift: usize,
        sigma: f64,
    },
}

impl Default for Augmentation {
    fn default() -> Self {
        Augmentation::Planar {
            sigma: 0.05,
            max_degrees: 15.0,
        }
    }
}

fn noise<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    sigma * rng.sample::<f64, _>(StandardNormal)
}

impl Augmentation {
    pub fn apply<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Vec<f64> {
        match *self {
            Augmentation::Planar { sigma, max_degrees } => {
                let mut out = x.to_vec();
                if x.len() >= 2 {
                    let angle = rng.random_range(-max_degrees..=max_degrees).to_radians();
                    let (s, c) = angle.sin_cos();
                    out[0] = c * x[0] - s * x[1];
                    out[1] = s * x[0] + c * x[1];
                }
                for v in &mut out {
                    *v += noise(rng, sigma);
                }
                out
            }
            Augmentation::Jitter { sigma } => x.iter().map(|v| v + noise(rng, sigma)).collect(),
            Augmentation::Image {
                width,
                height,
                max_shift,
                sigma,
            } => {
                let m = max_shift as i64;
                let dx = rng.random_range(-m..=m);
                let dy = rng.random_range(-m..=m);
                let mut out = vec![0.0; x.len()];
                for r in 0..height as i64 {
                    for c in 0..width as i64 {
                        let (sr, sc) = (r - dy, c - dx);
                        if (0..height as i64).contains(&sr) && (0..width as i64).contains(&sc) {
                            out[(r * width as i64 + c) as usize] = x[(sr * width as i64 + sc) as usize];
                        }
                    }
                }
                for v in &mut out {
                    *v = (*v + noise(rng, sigma)).clamp(0.0, 1.0);
                }
                out
            }
        }
    }
}
