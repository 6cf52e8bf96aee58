use crate::error::{Error, Result};
use crate::numerics::{Gradients, ParamSet};

/// Compares analytic gradients against central differences.
///
/// `loss_fn` returns the loss and its analytic gradient at the given
/// parameters. Every scalar coordinate is perturbed by `±epsilon`; the
/// returned value is the largest `|analytic - numeric| / max(1, |analytic|, |numeric|)`.
pub fn finite_diff_check<F>(mut loss_fn: F, params: &ParamSet, epsilon: f32) -> Result<f32>
where
    F: FnMut(&ParamSet) -> Result<(f32, Gradients)>,
{
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be > 0, got {epsilon}")));
    }
    let (loss, analytic) = loss_fn(params)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite("finite_diff_check base loss".into()));
    }
    params.check_layout(&analytic)?;

    let mut probe = params.clone();
    let mut worst = 0.0f32;
    let keys: Vec<String> = params.keys().cloned().collect();
    for key in &keys {
        let n = params.get(key)?.len();
        for i in 0..n {
            let x = params.get(key)?.data()[i];
            let hi = x + epsilon;
            let lo = x - epsilon;
            probe.get_mut(key)?.data_mut()[i] = hi;
            let (f_hi, _) = loss_fn(&probe)?;
            probe.get_mut(key)?.data_mut()[i] = lo;
            let (f_lo, _) = loss_fn(&probe)?;
            probe.get_mut(key)?.data_mut()[i] = x;
            if !f_hi.is_finite() || !f_lo.is_finite() {
                return Err(Error::NonFinite(format!("finite_diff_check at {key}[{i}]")));
            }
            let numeric = (f_hi as f64 - f_lo as f64) / (hi as f64 - lo as f64);
            let a = analytic.get(key)?.data()[i] as f64;
            let denom = 1.0f64.max(a.abs()).max(numeric.abs());
            let err = ((a - numeric).abs() / denom) as f32;
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tensor;

    fn quad(scale: f32) -> impl FnMut(&ParamSet) -> Result<(f32, Gradients)> {
        move |p: &ParamSet| {
            let x = p.get("x")?.data()[0];
            let g: ParamSet = [("x".to_string(), Tensor::from_vec(vec![scale * x])?)]
                .into_iter()
                .collect();
            Ok((0.5 * x * x, g))
        }
    }

    fn at(x: f32) -> ParamSet {
        [("x".to_string(), Tensor::from_vec(vec![x]).unwrap())]
            .into_iter()
            .collect()
    }

    #[test]
    fn quadratic_passes() {
        let err = finite_diff_check(quad(1.0), &at(3.0), 1e-3).unwrap();
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn doubled_gradient_fails() {
        let err = finite_diff_check(quad(2.0), &at(3.0), 1e-3).unwrap();
        assert!((err - 0.5).abs() < 1e-3, "{err}");
    }

    #[test]
    fn rejects_bad_epsilon_and_nan() {
        assert!(finite_diff_check(quad(1.0), &at(3.0), 0.0).is_err());
        assert!(finite_diff_check(quad(1.0), &at(f32::NAN), 1e-3).is_err());
    }
}
