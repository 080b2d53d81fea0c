//! Regression quality metrics.

use crate::error::{Error, Result};

/// Mean squared error between `y_true` and `y_pred`.
pub fn mse(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let sum: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (t - p) * (t - p))
        .sum();
    Ok(sum / y_true.len() as f64)
}

/// Coefficient of determination `1 - SSE/SST`.
///
/// Undefined (and an error) when the true values have zero variance.
pub fn r2(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.len() < 2 {
        return Err(Error::EmptyDataset);
    }
    let n = y_true.len() as f64;
    let mean = y_true.iter().sum::<f64>() / n;
    let sst: f64 = y_true.iter().map(|t| (t - mean) * (t - mean)).sum();
    if sst == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let sse: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (t - p) * (t - p))
        .sum();
    Ok(1.0 - sse / sst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_of_identical_vectors_is_zero() {
        assert_eq!(mse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn mse_unit_offset() {
        assert_eq!(mse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn mse_hand_computed() {
        let got = mse(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap();
        assert!((got - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mse_length_mismatch_errors() {
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mse(&[], &[]).is_err());
    }

    #[test]
    fn r2_perfect_prediction() {
        assert_eq!(r2(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
    }

    #[test]
    fn r2_mean_prediction_is_zero() {
        let got = r2(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap();
        assert!(got.abs() < 1e-15);
    }

    #[test]
    fn r2_hand_computed() {
        let got = r2(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0]).unwrap();
        assert!((got - 0.5).abs() < 1e-15);
    }

    #[test]
    fn r2_zero_variance_errors() {
        assert!(matches!(
            r2(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(Error::ZeroVariance)
        ));
    }

    proptest::proptest! {
        #[test]
        fn mse_non_negative_and_r2_at_most_one(
            pairs in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 2..50)
        ) {
            let truth: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let pred: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            proptest::prop_assert!(mse(&truth, &pred).unwrap() >= 0.0);
            if let Ok(r) = r2(&truth, &pred) {
                proptest::prop_assert!(r <= 1.0);
            }
        }
    }
}
