/// First/second moment accumulators of the Adam optimizer.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam update for minimization; returns the parameter delta
/// `-lr m_hat / (sqrt(v_hat) + eps)`.
pub fn adam_step(state: &mut AdamState, gradient: &[f64], lr: f64) -> Vec<f64> {
    assert_eq!(gradient.len(), state.m.len(), "gradient length");
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    gradient
        .iter()
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
        .map(|(&g, (m, v))| {
            *m = state.beta1 * *m + (1.0 - state.beta1) * g;
            *v = state.beta2 * *v + (1.0 - state.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            -lr * m_hat / (v_hat.sqrt() + state.eps)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_has_magnitude_lr() {
        let mut state = AdamState::new(3);
        let delta = adam_step(&mut state, &[2.0, -0.5, 1e-3], 0.01);
        assert!((delta[0] + 0.01).abs() < 1e-9);
        assert!((delta[1] - 0.01).abs() < 1e-9);
        assert!((delta[2] + 0.01 * 1e-3 / (1e-3 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_never_moves() {
        let mut state = AdamState::new(2);
        for _ in 0..50 {
            assert_eq!(adam_step(&mut state, &[0.0, 0.0], 0.1), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn constant_gradient_limit() {
        let mut state = AdamState::new(1);
        let mut last = 0.0;
        for _ in 0..1000 {
            last = adam_step(&mut state, &[0.3], 0.05)[0];
        }
        // m_hat -> g and v_hat -> g^2, so |delta| -> lr * g / (g + eps)
        assert!((last.abs() - 0.05 * 0.3 / (0.3 + 1e-8)).abs() < 1e-12);
    }
}
