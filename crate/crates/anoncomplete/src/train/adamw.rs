use crate::tensor::params::{ParamSet, Tensor};
use crate::tensor::scalar::Scalar;

/// AdamW with decoupled weight decay:
///
/// m <- b1*m + (1-b1)*g          v <- b2*v + (1-b2)*g^2
/// p <- p - lr * mhat/(sqrt(vhat) + eps) - lr * wd * p
#[derive(Debug, Clone)]
pub struct AdamW<S> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: u64,
    m: Vec<Tensor<S>>,
    v: Vec<Tensor<S>>,
}

impl<S: Scalar> AdamW<S> {
    pub fn new(params: &ParamSet<S>, weight_decay: f64) -> Self {
        let m = (0..params.len())
            .map(|i| {
                let t = params.tensor(i);
                Tensor::zeros(t.rows, t.cols)
            })
            .collect::<Vec<_>>();
        let v = m.clone();
        AdamW {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step: 0,
            m,
            v,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Rescales gradients in place to cap their global L2 norm.
    pub fn clip_global_norm(grads: &mut [Vec<S>], max_norm: f64) -> f64 {
        let norm = grads
            .iter()
            .flat_map(|g| g.iter())
            .map(|x| x.to_f64() * x.to_f64())
            .sum::<f64>()
            .sqrt();
        if norm > max_norm && norm > 0.0 {
            let scale = S::from_f64(max_norm / norm);
            for g in grads.iter_mut() {
                for x in g.iter_mut() {
                    *x = *x * scale;
                }
            }
        }
        norm
    }

    /// One optimizer step. `grads` is aligned with the parameter set; an
    /// empty gradient vector means zero gradient for that tensor (the decay
    /// term still applies).
    pub fn step(&mut self, params: &mut ParamSet<S>, grads: &[Vec<S>], lr: f64) {
        assert_eq!(grads.len(), params.len(), "gradient/parameter mismatch");
        self.step += 1;
        let b1 = S::from_f64(self.beta1);
        let b2 = S::from_f64(self.beta2);
        let one_m_b1 = S::from_f64(1.0 - self.beta1);
        let one_m_b2 = S::from_f64(1.0 - self.beta2);
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let lr_s = S::from_f64(lr);
        let eps = S::from_f64(self.eps);
        let decay = S::from_f64(lr * self.weight_decay);
        let inv_bc1 = S::from_f64(1.0 / bc1);
        let inv_bc2 = S::from_f64(1.0 / bc2);

        for i in 0..params.len() {
            let t = params.tensor_mut(i);
            let m = &mut self.m[i].data;
            let v = &mut self.v[i].data;
            debug_assert!(grads[i].is_empty() || grads[i].len() == t.data.len());
            for (k, p) in t.data.iter_mut().enumerate() {
                let g = grads[i].get(k).copied().unwrap_or(S::ZERO);
                m[k] = b1 * m[k] + one_m_b1 * g;
                v[k] = b2 * v[k] + one_m_b2 * g * g;
                let mhat = m[k] * inv_bc1;
                let vhat = v[k] * inv_bc2;
                *p = *p - lr_s * (mhat / (vhat.sqrt() + eps)) - decay * *p;
            }
        }
    }
}

/// Learning rate for a 0-indexed epoch: lr0 * decay^epoch.
pub fn epoch_lr(lr0: f64, decay: f64, epoch: usize) -> f64 {
    lr0 * decay.powi(epoch as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_params(x: f64) -> ParamSet<f64> {
        let mut p = ParamSet::new();
        p.push(
            "p",
            Tensor {
                rows: 1,
                cols: 1,
                data: vec![x],
            },
        );
        p
    }

    #[test]
    fn single_step_hand_computed() {
        // p=1, g=1, lr=1e-3, wd=0.01: with bias correction mhat=vhat=1,
        // p' = 1 - 1e-3/(1+1e-8) - 1e-3*0.01*1.
        let mut params = scalar_params(1.0);
        let mut opt = AdamW::new(&params, 0.01);
        opt.step(&mut params, &[vec![1.0]], 1e-3);
        let expect = 1.0 - 1e-3 / (1.0 + 1e-8) - 1e-5;
        let got = params.tensor(0).data[0];
        assert!((got - expect).abs() < 1e-12, "got {got}, expect {expect}");
        assert!((got - 0.99899).abs() < 1e-7);
    }

    #[test]
    fn zero_gradient_changes_only_by_decay() {
        let mut params = scalar_params(2.0);
        let mut opt = AdamW::new(&params, 0.01);
        opt.step(&mut params, &[vec![0.0]], 1e-3);
        let expect = 2.0 - 1e-3 * 0.01 * 2.0;
        assert!((params.tensor(0).data[0] - expect).abs() < 1e-15);

        // Same with the empty-gradient shorthand.
        let mut params2 = scalar_params(2.0);
        let mut opt2 = AdamW::new(&params2, 0.01);
        opt2.step(&mut params2, &[vec![]], 1e-3);
        assert_eq!(params2.tensor(0).data[0], params.tensor(0).data[0]);
    }

    #[test]
    fn clipping_rescales_to_max_norm() {
        let mut grads = vec![vec![3.0f64], vec![4.0f64]];
        let norm = AdamW::<f64>::clip_global_norm(&mut grads, 2.5);
        assert!((norm - 5.0).abs() < 1e-12);
        let new_norm = (grads[0][0].powi(2) + grads[1][0].powi(2)).sqrt();
        assert!((new_norm - 2.5).abs() < 1e-12);
        // Below the threshold nothing changes.
        let mut small = vec![vec![0.3f64]];
        AdamW::<f64>::clip_global_norm(&mut small, 2.5);
        assert_eq!(small[0][0], 0.3);
    }

    #[test]
    fn lr_schedule_is_exact() {
        assert_eq!(epoch_lr(0.001, 0.6, 0), 0.001);
        assert_eq!(epoch_lr(0.001, 0.6, 1), 0.001 * 0.6);
        assert_eq!(epoch_lr(0.001, 0.6, 5), 0.001 * 0.6f64.powi(5));
    }
}
