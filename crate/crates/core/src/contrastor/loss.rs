//! NT-Xent contrastive loss over pooled representations.
//!
//! The document representation is the anchor, the reference summary the
//! positive, and perturbed summaries the negatives:
//!
//! ```text
//! loss = -log( exp(cos(a, p) / tau) / sum_{s in {p} ∪ N} exp(cos(a, s) / tau) )
//! ```

use serde::{Deserialize, Serialize};

use crate::error::LossError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RepresentationVector(pub Vec<f64>);

impl RepresentationVector {
    pub fn new(values: Vec<f64>) -> Result<Self, LossError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LossError::NonFinite);
        }
        Ok(RepresentationVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for RepresentationVector {
    fn from(v: Vec<f64>) -> Self {
        RepresentationVector(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub tau: f64,
    pub lambda: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { tau: 0.05, lambda: 5.0 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), LossError> {
        check_tau(self.tau)?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(LossError::InvalidLambda(self.lambda));
        }
        Ok(())
    }
}

fn check_tau(tau: f64) -> Result<(), LossError> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(LossError::InvalidTemperature(tau))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Column-wise mean of an `n x d` matrix of hidden states.
pub fn mean_pool(states: &[Vec<f64>]) -> Result<RepresentationVector, LossError> {
    let first = states.first().ok_or(LossError::EmptyStates)?;
    let d = first.len();
    let mut acc = vec![0.0; d];
    for (row, values) in states.iter().enumerate() {
        if values.len() != d {
            return Err(LossError::RaggedStates {
                row,
                expected: d,
                found: values.len(),
            });
        }
        for (a, v) in acc.iter_mut().zip(values) {
            *a += v;
        }
    }
    let n = states.len() as f64;
    RepresentationVector::new(acc.into_iter().map(|a| a / n).collect())
}

pub fn cosine_sim(a: &RepresentationVector, b: &RepresentationVector) -> Result<f64, LossError> {
    if a.dim() != b.dim() {
        return Err(LossError::DimensionMismatch(a.dim(), b.dim()));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(LossError::ZeroNorm);
    }
    Ok((dot(&a.0, &b.0) / (na * nb)).clamp(-1.0, 1.0))
}

/// Loss value plus its gradient with respect to every input vector.
#[derive(Debug, Clone, PartialEq)]
pub struct NtXent {
    pub loss: f64,
    pub grad_anchor: Vec<f64>,
    pub grad_positive: Vec<f64>,
    pub grad_negatives: Vec<Vec<f64>>,
}

/// d cos(a, b) / d a
fn cos_grad(a: &[f64], b: &[f64], na: f64, nb: f64, cos: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(x, y)| y / (na * nb) - cos * x / (na * na))
        .collect()
}

pub fn nt_xent(
    anchor: &RepresentationVector,
    positive: &RepresentationVector,
    negatives: &[RepresentationVector],
    tau: f64,
) -> Result<NtXent, LossError> {
    check_tau(tau)?;
    let candidates: Vec<&RepresentationVector> = std::iter::once(positive).chain(negatives).collect();
    for c in &candidates {
        if c.dim() != anchor.dim() {
            return Err(LossError::DimensionMismatch(anchor.dim(), c.dim()));
        }
    }
    let na = anchor.norm();
    if na == 0.0 {
        return Err(LossError::ZeroNorm);
    }
    let norms: Vec<f64> = candidates.iter().map(|c| c.norm()).collect();
    if norms.contains(&0.0) {
        return Err(LossError::ZeroNorm);
    }
    // Unclamped cosine keeps the gradient exact.
    let cos: Vec<f64> = candidates
        .iter()
        .zip(&norms)
        .map(|(c, nc)| dot(&anchor.0, &c.0) / (na * nc))
        .collect();
    let logits: Vec<f64> = cos.iter().map(|c| c / tau).collect();

    // loss = (max - l0) + ln(1 + sum_{j != argmax} exp(l_j - max))
    let (argmax, max) = logits
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, l)| if l > best.1 { (i, l) } else { best });
    let rest: f64 = logits
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != argmax)
        .map(|(_, l)| (l - max).exp())
        .sum();
    let loss = (max - logits[0]) + rest.ln_1p();

    let denom = 1.0 + rest;
    let probs: Vec<f64> = logits.iter().map(|l| (l - max).exp() / denom).collect();

    let d = anchor.dim();
    let mut grad_anchor = vec![0.0; d];
    let mut grads = Vec::with_capacity(candidates.len());
    for (j, c) in candidates.iter().enumerate() {
        let upstream = (probs[j] - if j == 0 { 1.0 } else { 0.0 }) / tau;
        for (g, v) in grad_anchor.iter_mut().zip(cos_grad(&anchor.0, &c.0, na, norms[j], cos[j])) {
            *g += upstream * v;
        }
        grads.push(
            cos_grad(&c.0, &anchor.0, norms[j], na, cos[j])
                .into_iter()
                .map(|v| upstream * v)
                .collect::<Vec<_>>(),
        );
    }
    let grad_positive = grads.remove(0);
    Ok(NtXent {
        loss,
        grad_anchor,
        grad_positive,
        grad_negatives: grads,
    })
}

pub fn nt_xent_loss(
    anchor: &RepresentationVector,
    positive: &RepresentationVector,
    negatives: &[RepresentationVector],
    tau: f64,
) -> Result<f64, LossError> {
    nt_xent(anchor, positive, negatives, tau).map(|r| r.loss)
}

/// Cross-entropy plus the weighted contrastive term.
pub fn combined_loss(ce: f64, cl: f64, lambda: f64) -> f64 {
    ce + lambda * cl
}

/// Norm-relative discrepancy between the analytic gradient and central finite
/// differences with step `h`, measured over the stacked gradient of all input
/// vectors.
pub fn max_gradient_error(
    anchor: &RepresentationVector,
    positive: &RepresentationVector,
    negatives: &[RepresentationVector],
    tau: f64,
    h: f64,
) -> Result<f64, LossError> {
    let analytic = nt_xent(anchor, positive, negatives, tau)?;
    let mut inputs: Vec<RepresentationVector> = vec![anchor.clone(), positive.clone()];
    inputs.extend(negatives.iter().cloned());
    let grads: Vec<&Vec<f64>> = [&analytic.grad_anchor, &analytic.grad_positive]
        .into_iter()
        .chain(analytic.grad_negatives.iter())
        .collect();

    let eval = |vs: &[RepresentationVector]| nt_xent_loss(&vs[0], &vs[1], &vs[2..], tau);
    let mut diff_sq = 0.0;
    let mut fd_sq = 0.0;
    let mut an_sq = 0.0;
    for (k, grad) in grads.iter().enumerate() {
        for i in 0..inputs[k].dim() {
            let orig = inputs[k].0[i];
            inputs[k].0[i] = orig + h;
            let up = eval(&inputs)?;
            inputs[k].0[i] = orig - h;
            let down = eval(&inputs)?;
            inputs[k].0[i] = orig;
            let fd = (up - down) / (2.0 * h);
            diff_sq += (fd - grad[i]).powi(2);
            fd_sq += fd * fd;
        }
        an_sq += dot(grad, grad);
    }
    let scale = an_sq.sqrt().max(fd_sq.sqrt()).max(f64::MIN_POSITIVE);
    Ok(diff_sq.sqrt() / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> RepresentationVector {
        RepresentationVector(x.to_vec())
    }

    #[test]
    fn pooling() {
        assert_eq!(mean_pool(&[vec![1.0, 2.0]]).unwrap(), v(&[1.0, 2.0]));
        assert_eq!(mean_pool(&[vec![1.0, -2.0], vec![-1.0, 2.0]]).unwrap(), v(&[0.0, 0.0]));
        assert_eq!(mean_pool(&[vec![1.0, 3.0], vec![3.0, 5.0]]).unwrap(), v(&[2.0, 4.0]));
        assert_eq!(mean_pool(&[]), Err(LossError::EmptyStates));
        assert!(matches!(mean_pool(&[vec![1.0], vec![1.0, 2.0]]), Err(LossError::RaggedStates { .. })));
    }

    #[test]
    fn cosine() {
        let a = v(&[1.0, 2.0, 3.0]);
        assert!((cosine_sim(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_sim(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert!((cosine_sim(&a, &v(&[2.0, 4.0, 6.0])).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_sim(&a, &v(&[0.0, 0.0, 0.0])), Err(LossError::ZeroNorm));
        assert_eq!(cosine_sim(&a, &v(&[1.0])), Err(LossError::DimensionMismatch(3, 1)));
    }

    #[test]
    fn degenerate_and_symmetric_cases() {
        let a = v(&[1.0, 0.0]);
        let p = v(&[0.6, 0.8]);
        assert_eq!(nt_xent_loss(&a, &p, &[], 0.05).unwrap(), 0.0);
        let n = v(&[0.6, -0.8]);
        let loss = nt_xent_loss(&a, &p, &[n], 0.05).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn saturated_case_keeps_precision() {
        // cos = 1 for the positive, -1 for the negative, tau = 0.05
        let loss = nt_xent_loss(&v(&[1.0, 0.0]), &v(&[2.0, 0.0]), &[v(&[-1.0, 0.0])], 0.05).unwrap();
        let expected = (-40.0f64).exp().ln_1p();
        assert!((loss - expected).abs() <= 1e-30, "{loss:e}");
        assert!((loss - 4.248354255291589e-18).abs() < 1e-30);
    }

    #[test]
    fn errors() {
        let a = v(&[1.0, 0.0]);
        assert_eq!(nt_xent_loss(&a, &a, &[v(&[1.0])], 0.1), Err(LossError::DimensionMismatch(2, 1)));
        assert_eq!(nt_xent_loss(&a, &a, &[], 0.0), Err(LossError::InvalidTemperature(0.0)));
        assert_eq!(nt_xent_loss(&v(&[0.0, 0.0]), &a, &[], 0.1), Err(LossError::ZeroNorm));
    }

    #[test]
    fn combined() {
        assert_eq!(combined_loss(2.0, 0.5, 5.0), 4.5);
        assert_eq!(combined_loss(2.0, 0.5, 0.0), 2.0);
        assert_eq!(combined_loss(2.0, 0.0, 5.0), 2.0);
        assert_eq!(LossConfig::default(), LossConfig { tau: 0.05, lambda: 5.0 });
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let a = v(&[0.3, -1.2, 0.5, 0.9]);
        let p = v(&[0.1, -0.8, 0.7, 1.1]);
        let negs = [v(&[-0.4, 0.2, 0.3, 0.8]), v(&[1.0, 0.1, -0.3, 0.2])];
        let err = max_gradient_error(&a, &p, &negs, 0.5, 1e-5).unwrap();
        assert!(err < 1e-6, "{err}");
    }
}
