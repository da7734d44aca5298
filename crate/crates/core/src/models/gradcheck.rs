//! Central finite-difference gradient checking.

use super::Parameterized;

/// Components where both gradients are below this are treated as agreeing.
pub const GRAD_FLOOR: f64 = 1e-9;

/// Largest relative error `|a - n| / max(|a|, |n|)` between `analytic` and
/// central differences of `loss` with step `h`, over every parameter.
pub fn max_relative_error<M, F>(model: &mut M, analytic: &[Vec<f64>], h: f64, loss: F) -> f64
where
    M: Parameterized,
    F: Fn(&M) -> f64,
{
    let shapes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
    assert_eq!(shapes.len(), analytic.len(), "one gradient per tensor");
    let mut worst = 0.0f64;
    for (t, &len) in shapes.iter().enumerate() {
        assert_eq!(len, analytic[t].len(), "gradient shape for tensor {t}");
        for k in 0..len {
            let orig = model.tensors()[t][k];
            model.tensors_mut()[t][k] = orig + h;
            let plus = loss(model);
            model.tensors_mut()[t][k] = orig - h;
            let minus = loss(model);
            model.tensors_mut()[t][k] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[t][k];
            let scale = a.abs().max(numeric.abs());
            if scale < GRAD_FLOOR {
                continue;
            }
            worst = worst.max((a - numeric).abs() / scale);
        }
    }
    worst
}
