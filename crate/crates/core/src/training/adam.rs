use super::TrainConfig;
use crate::error::{Error, Result};
use crate::numerics::ParamSet;

/// Adam moment estimates, shaped like the parameters they track.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<P> {
    pub m: P,
    pub v: P,
    pub t: u64,
}

impl<P: ParamSet> AdamState<P> {
    pub fn new(params: &P) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step<P: ParamSet>(
    params: &mut P,
    grads: &P,
    state: &mut AdamState<P>,
    cfg: &TrainConfig,
) -> Result<()> {
    if !params.same_layout(grads) || !params.same_layout(&state.m) || !params.same_layout(&state.v)
    {
        return Err(Error::invalid(
            "parameters, gradients and Adam state have different layouts",
        ));
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let mut theta = params.to_flat();
    let g = grads.to_flat();
    let mut m = state.m.to_flat();
    let mut v = state.v.to_flat();
    for k in 0..theta.len() {
        m[k] = b1 * m[k] + (1.0 - b1) * g[k];
        v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
        let m_hat = m[k] / c1;
        let v_hat = v[k] / c2;
        theta[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    params.set_flat(&theta)?;
    state.m.set_flat(&m)?;
    state.v.set_flat(&v)?;
    Ok(())
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`; returns
/// the norm before clipping.
pub fn clip_grad_norm<P: ParamSet>(grads: &mut P, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm {
        grads.scale_inplace(max_norm / norm);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Matrix, Rng};
    use proptest::prelude::*;

    fn scalar(v: f64) -> Matrix {
        Matrix::filled(1, 1, v)
    }

    #[test]
    fn quadratic_converges_like_reference_recurrence() {
        // f(θ) = ½(θ − 3)², θ₀ = 0, lr 0.1; reference from running the same
        // recurrence in plain Python floats.
        let cfg = TrainConfig {
            learning_rate: 0.1,
            ..TrainConfig::default()
        };
        let mut theta = scalar(0.0);
        let mut state = AdamState::new(&theta);
        for _ in 0..100 {
            let g = scalar(theta[(0, 0)] - 3.0);
            adam_step(&mut theta, &g, &mut state, &cfg).unwrap();
        }
        assert_eq!(state.t, 100);
        assert!((theta[(0, 0)] - 2.980655437447948).abs() < 1e-12);
        assert!((theta[(0, 0)] - 3.0).abs() < 0.05);
    }

    #[test]
    fn first_step_is_a_sign_step() {
        let cfg = TrainConfig::default();
        let mut theta = Matrix::new(1, 3, vec![1.0, -2.0, 0.5]).unwrap();
        let g = Matrix::new(1, 3, vec![0.3, -40.0, 1e-3]).unwrap();
        let mut state = AdamState::new(&theta);
        let before = theta.clone();
        adam_step(&mut theta, &g, &mut state, &cfg).unwrap();
        for k in 0..3 {
            let step = theta.as_slice()[k] - before.as_slice()[k];
            let expected = -cfg.learning_rate * g.as_slice()[k].signum();
            assert!((step - expected).abs() < 1e-7, "{step} vs {expected}");
        }
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let cfg = TrainConfig::default();
        let mut rng = Rng::new(2);
        let mut theta = Matrix::from_fn(3, 4, |_, _| rng.normal());
        let before = theta.clone();
        let mut state = AdamState::new(&theta);
        for _ in 0..20 {
            adam_step(&mut theta, &Matrix::zeros(3, 4), &mut state, &cfg).unwrap();
        }
        assert_eq!(theta, before);
    }

    #[test]
    fn layout_mismatch_is_rejected() {
        let mut theta = Matrix::zeros(2, 2);
        let mut state = AdamState::new(&theta);
        let g = Matrix::zeros(4, 1);
        assert!(adam_step(&mut theta, &g, &mut state, &TrainConfig::default()).is_err());
    }

    proptest! {
        #[test]
        fn clipped_norm_is_bounded(
            values in proptest::collection::vec(-1e3f64..1e3, 1..40),
            max in 0.01f64..10.0,
        ) {
            let n = values.len();
            let mut g = Matrix::new(1, n, values).unwrap();
            let before = g.clone();
            let norm = clip_grad_norm(&mut g, max);
            prop_assert!(g.frobenius_norm() <= max + 1e-9);
            if norm <= max {
                prop_assert_eq!(&g, &before);
            }
        }
    }
}
