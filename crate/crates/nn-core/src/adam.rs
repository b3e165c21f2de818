use crate::NnError;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Adam optimizer state over one flat parameter vector.
#[derive(Clone, PartialEq, Debug)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    lr: f64,
}

impl AdamState {
    pub fn new(param_count: usize, lr: f64) -> Result<Self, NnError> {
        if !lr.is_finite() || lr <= 0.0 {
            return Err(NnError::NonFinite { what: "learning rate" });
        }
        Ok(AdamState { m: vec![0.0; param_count], v: vec![0.0; param_count], t: 0, lr })
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// One bias-corrected update; writes `lr * m_hat / (sqrt(v_hat) + eps)`
    /// into `delta` (to be subtracted from the parameters). Any non-finite
    /// gradient aborts the step with the state untouched.
    pub fn step(&mut self, grads: &[f64], delta: &mut [f64]) -> Result<(), NnError> {
        if grads.len() != self.m.len() {
            return Err(NnError::ShapeMismatch {
                expected: self.m.len(),
                got: grads.len(),
                what: "adam gradient vector",
            });
        }
        if delta.len() != self.m.len() {
            return Err(NnError::ShapeMismatch {
                expected: self.m.len(),
                got: delta.len(),
                what: "adam update vector",
            });
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(NnError::NanGradient);
        }
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t as i32);
        let bc2 = 1.0 - BETA2.powi(self.t as i32);
        for i in 0..grads.len() {
            let g = grads[i];
            self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * g;
            self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            delta[i] = self.lr * m_hat / (v_hat.sqrt() + EPS);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_learning_rates() {
        assert!(AdamState::new(3, 0.0).is_err());
        assert!(AdamState::new(3, -1.0).is_err());
        assert!(AdamState::new(3, f64::NAN).is_err());
    }

    #[test]
    fn first_step_moves_by_nearly_lr_times_sign() {
        let mut adam = AdamState::new(3, 1e-3).unwrap();
        let mut delta = vec![0.0; 3];
        adam.step(&[4.0, -0.25, 1e-3], &mut delta).unwrap();
        // Bias correction makes m_hat = g and v_hat = g^2 at t = 1, so the
        // update is lr * g / (|g| + eps) = lr * sign(g) up to eps.
        assert!((delta[0] - 1e-3).abs() < 1e-8);
        assert!((delta[1] + 1e-3).abs() < 1e-8);
        assert!((delta[2] - 1e-3).abs() < 1e-8);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut adam = AdamState::new(2, 0.1).unwrap();
        let mut delta = vec![7.0; 2];
        adam.step(&[0.0, 0.0], &mut delta).unwrap();
        assert_eq!(delta, vec![0.0, 0.0]);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn nan_gradient_is_an_error_and_state_is_untouched() {
        let mut adam = AdamState::new(2, 0.1).unwrap();
        let mut delta = vec![0.0; 2];
        adam.step(&[1.0, 1.0], &mut delta).unwrap();
        let snapshot = adam.clone();
        assert!(matches!(adam.step(&[f64::NAN, 1.0], &mut delta), Err(NnError::NanGradient)));
        assert!(matches!(
            adam.step(&[1.0, f64::INFINITY], &mut delta),
            Err(NnError::NanGradient)
        ));
        assert_eq!(adam, snapshot);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut adam = AdamState::new(2, 0.1).unwrap();
        let mut delta = vec![0.0; 2];
        assert!(adam.step(&[1.0], &mut delta).is_err());
        let mut short = vec![0.0; 1];
        assert!(adam.step(&[1.0, 1.0], &mut short).is_err());
    }

    #[test]
    fn drives_a_quadratic_to_its_minimum() {
        // f(p) = sum (p_i - target_i)^2, gradient 2 (p - target).
        let target = [3.0, -2.0, 0.5, 10.0];
        let mut p = vec![0.0; 4];
        let mut adam = AdamState::new(4, 0.05).unwrap();
        let mut delta = vec![0.0; 4];
        let f = |p: &[f64]| -> f64 {
            p.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum()
        };
        let mut prev = f(&p);
        for step in 0..2_000 {
            let grads: Vec<f64> = p.iter().zip(&target).map(|(a, b)| 2.0 * (a - b)).collect();
            adam.step(&grads, &mut delta).unwrap();
            for (pi, d) in p.iter_mut().zip(&delta) {
                *pi -= d;
            }
            let now = f(&p);
            if (5..100).contains(&step) {
                assert!(now < prev, "loss rose at step {step}: {prev} -> {now}");
            }
            prev = now;
        }
        for (a, b) in p.iter().zip(&target) {
            assert!((a - b).abs() < 1e-3, "converged to {p:?}");
        }
    }
}
