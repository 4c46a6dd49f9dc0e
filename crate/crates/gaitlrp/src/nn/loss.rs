//! Softmax cross-entropy with max-subtraction for overflow stability.

use crate::error::{Error, Result};

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Loss `-log softmax(logits)[label]` and its gradient
/// `softmax(logits) - one_hot(label)`.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= logits.len() {
        return Err(Error::InvalidConfig(format!(
            "label {label} out of range for {} classes",
            logits.len()
        )));
    }
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_z = logits.iter().map(|&v| (v - m).exp()).sum::<f64>().ln() + m;
    let loss = log_z - logits[label];
    let mut grad = softmax(logits);
    grad[label] -= 1.0;
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln3() {
        let (loss, _) = softmax_cross_entropy(&[0.0, 0.0, 0.0], 1).unwrap();
        assert!((loss - 3.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let (loss, grad) = softmax_cross_entropy(&[1000.0, 0.0, 0.0], 0).unwrap();
        assert!(loss.is_finite());
        assert!(loss.abs() < 1e-12);
        assert!(grad.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let logits = [0.3, -1.2, 0.7];
        let label = 2;
        let (_, grad) = softmax_cross_entropy(&logits, label).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let mut plus = logits;
            plus[i] += h;
            let mut minus = logits;
            minus[i] -= h;
            let (lp, _) = softmax_cross_entropy(&plus, label).unwrap();
            let (lm, _) = softmax_cross_entropy(&minus, label).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            assert!(
                (grad[i] - fd).abs() / fd.abs().max(1e-3) < 1e-6,
                "component {i}: {} vs {}",
                grad[i],
                fd
            );
        }
    }

    #[test]
    fn rejects_out_of_range_label() {
        assert!(softmax_cross_entropy(&[0.0, 0.0, 0.0], 3).is_err());
    }
}
