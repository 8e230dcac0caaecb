use super::TrainConfig;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            step_count: 0,
        }
    }
}

/// One bias-corrected Adam step, in place. Nonzero `weight_decay` is added
/// to the gradient as an L2 term.
pub fn adam_update(state: &mut AdamState, weights: &mut [f64], gradient: &[f64], config: &TrainConfig) {
    assert_eq!(weights.len(), gradient.len());
    assert_eq!(weights.len(), state.first_moment.len());
    state.step_count += 1;
    let t = state.step_count as i32;
    let bc1 = 1.0 - BETA1.powi(t);
    let bc2 = 1.0 - BETA2.powi(t);
    for (i, w) in weights.iter_mut().enumerate() {
        let g = gradient[i] + config.weight_decay * *w;
        let m = &mut state.first_moment[i];
        let v = &mut state.second_moment[i];
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *w -= config.learning_rate * m_hat / (v_hat.sqrt() + EPSILON);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_is_signed_learning_rate() {
        let cfg = TrainConfig::default();
        let mut state = AdamState::new(3);
        let mut w = vec![0.5, 0.5, 0.5];
        let g = [2.0, -0.3, 1e-3];
        adam_update(&mut state, &mut w, &g, &cfg);
        for (wi, gi) in w.iter().zip(g) {
            let expect = 0.5 - 1e-4 * gi / (gi.abs() + EPSILON);
            assert!((wi - expect).abs() < 1e-15, "{wi} vs {expect}");
            assert!((wi - (0.5 - 1e-4 * gi.signum())).abs() < 1e-8);
        }
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn zero_gradient_is_null_update() {
        let cfg = TrainConfig::default();
        let mut state = AdamState::new(2);
        let mut w = vec![0.25, -1.0];
        adam_update(&mut state, &mut w, &[0.0, 0.0], &cfg);
        assert_eq!(w, vec![0.25, -1.0]);
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn deterministic() {
        let cfg = TrainConfig::default();
        let run = || {
            let mut s = AdamState::new(2);
            let mut w = vec![0.1, 0.2];
            for k in 0..10 {
                adam_update(&mut s, &mut w, &[k as f64 * 0.1, -0.5], &cfg);
            }
            (s, w)
        };
        assert_eq!(run(), run());
    }
}
