/// Central-difference gradient verification.
///
/// Evaluates `f` at `params +- h e_i` for every coordinate, compares the
/// finite-difference slope against `analytic[i]`, and returns the largest
/// relative error, with the denominator floored at `1e-8` so exact zeros
/// compare cleanly.
pub fn grad_check<F>(mut f: F, params: &[f64], analytic: &[f64], h: f64) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(params.len(), analytic.len(), "one analytic gradient per parameter");
    assert!(h > 0.0 && h.is_finite(), "step size must be positive");
    let mut work = params.to_vec();
    let mut worst = 0.0f64;
    for i in 0..params.len() {
        let orig = work[i];
        work[i] = orig + h;
        let up = f(&work);
        work[i] = orig - h;
        let down = f(&work);
        work[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let denom = (analytic[i].abs() + numeric.abs()).max(1e-8);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_linear_functions() {
        let coeff = [2.0, -3.5, 0.0, 7.25];
        let f = |p: &[f64]| p.iter().zip(&coeff).map(|(a, b)| a * b).sum::<f64>();
        let err = grad_check(f, &[1.0, 2.0, 3.0, 4.0], &coeff, 1e-5);
        assert!(err < 1e-8, "max relative error {err}");
    }

    #[test]
    fn flags_a_wrong_gradient() {
        let f = |p: &[f64]| p[0] * p[0];
        let err = grad_check(f, &[3.0], &[6.0], 1e-5);
        assert!(err < 1e-8);
        let err = grad_check(f, &[3.0], &[5.0], 1e-5);
        assert!(err > 0.05, "wrong gradient slipped through: {err}");
    }

    #[test]
    fn handles_zero_gradients_without_dividing_by_zero() {
        let f = |_: &[f64]| 1.0;
        let err = grad_check(f, &[0.5, -0.5], &[0.0, 0.0], 1e-5);
        assert_eq!(err, 0.0);
    }
}
