/// `ℓ(v) = log(1 + Σ_i exp(−v_i))`, shifted by `max(0, max_i −v_i)` so no
/// exponent is positive.
pub fn logistic_link(v: &[f64]) -> f64 {
    let shift = v.iter().fold(0.0f64, |m, &x| m.max(-x));
    let s: f64 = (-shift).exp() + v.iter().map(|&x| (-x - shift).exp()).sum::<f64>();
    shift + s.ln()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|&x| (x - m).exp()).sum::<f64>().ln();
    logits.iter().map(|&x| x - lse).collect()
}

/// Similarity margins `v_i = f(x)ᵀ(f(x⁺) − f(x_i⁻))` of one tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Margins(Vec<f64>);

impl Margins {
    pub fn new(v: Vec<f64>) -> Self {
        Margins(v)
    }

    /// From the positive similarity and the negative similarities.
    pub fn from_similarities(positive: f64, negatives: &[f64]) -> Self {
        Margins(negatives.iter().map(|n| positive - n).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn loss(&self) -> f64 {
        logistic_link(&self.0)
    }

    /// Probability mass on the positive, `1 / (1 + Σ exp(−v_i))`.
    pub fn q(&self) -> f64 {
        (-self.loss()).exp()
    }

    /// Probability mass on each negative, `exp(−v_i) / (1 + Σ exp(−v_j))`.
    pub fn q_negatives(&self) -> Vec<f64> {
        let l = self.loss();
        self.0.iter().map(|v| (-v - l).exp()).collect()
    }
}
