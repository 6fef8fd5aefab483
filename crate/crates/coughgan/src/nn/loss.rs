//! Loss functions. Each returns the scalar loss together with the gradient
//! with respect to the predictions.

use crate::error::{Error, Result};

use super::tensor::Tensor;

const PROB_CLAMP: f64 = 1e-7;

/// Mean binary cross-entropy of `predictions` in (0,1) against `targets` in
/// [0,1]. Predictions are clamped to [1e-7, 1-1e-7] before the logs; at the
/// clamp boundary the gradient is zero (the clamp is flat there).
pub fn bce_loss(predictions: &Tensor, targets: &Tensor) -> Result<(f64, Tensor)> {
    if predictions.shape() != targets.shape() {
        return Err(Error::Shape {
            expected: targets.shape().to_vec(),
            got: predictions.shape().to_vec(),
            context: "bce_loss".into(),
        });
    }
    let n = predictions.len() as f64;
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(predictions.shape());
    for (i, (&p_raw, &t)) in predictions.data().iter().zip(targets.data()).enumerate() {
        let p = p_raw.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        loss -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
        if p_raw > PROB_CLAMP && p_raw < 1.0 - PROB_CLAMP {
            grad.data_mut()[i] = (-t / p + (1.0 - t) / (1.0 - p)) / n;
        }
    }
    Ok((loss / n, grad))
}

/// Mean categorical cross-entropy: rows of `probabilities` are distributions
/// (they must sum to 1 within 1e-6), `one_hot_targets` selects one class per
/// row. Loss per row is -ln p[target].
pub fn categorical_ce_loss(
    probabilities: &Tensor,
    one_hot_targets: &Tensor,
) -> Result<(f64, Tensor)> {
    if probabilities.shape() != one_hot_targets.shape() {
        return Err(Error::Shape {
            expected: one_hot_targets.shape().to_vec(),
            got: probabilities.shape().to_vec(),
            context: "categorical_ce_loss".into(),
        });
    }
    let (rows, cols) = probabilities.dims2("categorical_ce_loss")?;
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(probabilities.shape());
    for r in 0..rows {
        let p_row = &probabilities.data()[r * cols..(r + 1) * cols];
        let t_row = &one_hot_targets.data()[r * cols..(r + 1) * cols];
        let row_sum: f64 = p_row.iter().sum();
        if (row_sum - 1.0).abs() > 1e-6 {
            return Err(Error::Domain(format!(
                "row {r} of probabilities sums to {row_sum}, not 1"
            )));
        }
        let target = t_row.iter().position(|&t| t == 1.0).ok_or_else(|| {
            Error::Domain(format!("row {r} of targets is not one-hot"))
        })?;
        if t_row.iter().enumerate().any(|(i, &t)| i != target && t != 0.0) {
            return Err(Error::Domain(format!("row {r} of targets is not one-hot")));
        }
        let p_raw = p_row[target];
        let p = p_raw.clamp(PROB_CLAMP, 1.0);
        loss -= p.ln();
        if p_raw > PROB_CLAMP {
            grad.data_mut()[r * cols + target] = -1.0 / p / rows as f64;
        }
    }
    Ok((loss / rows as f64, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bce_at_half_is_ln2() {
        let p = Tensor::scalar(0.5);
        let t = Tensor::scalar(1.0);
        let (loss, _) = bce_loss(&p, &t).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn bce_matched_prediction() {
        // direct formula oracle: -[0.9 ln 0.9 + 0.1 ln 0.1]
        let expected = -(0.9 * 0.9_f64.ln() + 0.1 * 0.1_f64.ln());
        let p = Tensor::scalar(0.9);
        let t = Tensor::scalar(0.9);
        let (loss, _) = bce_loss(&p, &t).unwrap();
        assert!((loss - expected).abs() < 1e-12);
        assert!((loss - 0.325083).abs() < 1e-6);
    }

    #[test]
    fn bce_gradient_matches_central_differences() {
        let p = Tensor::from_vec(&[4], vec![0.2, 0.5, 0.7, 0.9]).unwrap();
        let t = Tensor::from_vec(&[4], vec![1.0, 0.0, 0.3, 1.0]).unwrap();
        let (_, grad) = bce_loss(&p, &t).unwrap();
        let eps = 1e-6;
        for i in 0..4 {
            let mut plus = p.clone();
            plus.data_mut()[i] += eps;
            let mut minus = p.clone();
            minus.data_mut()[i] -= eps;
            let (lp, _) = bce_loss(&plus, &t).unwrap();
            let (lm, _) = bce_loss(&minus, &t).unwrap();
            let fd = (lp - lm) / (2.0 * eps);
            assert!(
                (fd - grad.data()[i]).abs() < 1e-6,
                "coord {i}: fd {fd} vs analytic {}",
                grad.data()[i]
            );
        }
    }

    #[test]
    fn categorical_uniform_is_ln3() {
        let third = 1.0 / 3.0;
        let p = Tensor::from_vec(&[1, 3], vec![third, third, third]).unwrap();
        let t = Tensor::from_vec(&[1, 3], vec![0.0, 1.0, 0.0]).unwrap();
        let (loss, _) = categorical_ce_loss(&p, &t).unwrap();
        assert!((loss - 3.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn categorical_perfect_prediction_is_clamped_near_zero() {
        let p = Tensor::from_vec(&[1, 3], vec![0.0, 1.0, 0.0]).unwrap();
        let t = Tensor::from_vec(&[1, 3], vec![0.0, 1.0, 0.0]).unwrap();
        let (loss, _) = categorical_ce_loss(&p, &t).unwrap();
        assert!(loss.abs() <= 1e-6);
    }

    #[test]
    fn categorical_rejects_bad_distribution() {
        let p = Tensor::from_vec(&[1, 3], vec![0.5, 0.1, 0.1]).unwrap();
        let t = Tensor::from_vec(&[1, 3], vec![1.0, 0.0, 0.0]).unwrap();
        assert!(categorical_ce_loss(&p, &t).is_err());
    }

    #[test]
    fn categorical_gradient_matches_central_differences() {
        let p = Tensor::from_vec(&[2, 3], vec![0.2, 0.5, 0.3, 0.6, 0.25, 0.15]).unwrap();
        let t = Tensor::from_vec(&[2, 3], vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let (_, grad) = categorical_ce_loss(&p, &t).unwrap();
        let eps = 1e-7;
        for i in 0..6 {
            // perturb the target-class entry only; other entries have zero grad
            // and perturbing them would break the row-sum precondition anyway
            let mut plus = p.clone();
            plus.data_mut()[i] += eps;
            let mut minus = p.clone();
            minus.data_mut()[i] -= eps;
            let lp = raw_ce(&plus, &t);
            let lm = raw_ce(&minus, &t);
            let fd = (lp - lm) / (2.0 * eps);
            assert!(
                (fd - grad.data()[i]).abs() < 1e-6,
                "coord {i}: fd {fd} vs analytic {}",
                grad.data()[i]
            );
        }
    }

    // Same formula without the row-sum precondition, for FD probing.
    fn raw_ce(p: &Tensor, t: &Tensor) -> f64 {
        let (rows, cols) = p.dims2("raw_ce").unwrap();
        let mut loss = 0.0;
        for r in 0..rows {
            for c in 0..cols {
                if t.data()[r * cols + c] == 1.0 {
                    loss -= p.data()[r * cols + c].max(1e-7).ln();
                }
            }
        }
        loss / rows as f64
    }
}
