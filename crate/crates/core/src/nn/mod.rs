//! Differentiable kernel for 1D segmentation networks: tensors, conv1d,
//! max pooling, nearest upsampling, channel concatenation, pointwise
//! nonlinearities, Dice loss and Adam. Every backward op is the exact
//! adjoint of its forward and is checked against finite differences in the
//! test suite.

pub mod adam;
pub mod conv;
pub mod dice;
pub mod ops;
pub mod pool;
pub mod tensor;

pub use adam::AdamState;
pub use conv::{conv1d_backward, conv1d_forward, Conv1d, Conv1dGrads};
pub use dice::{dice_loss, dice_value, DiceAccumulator, DICE_EPS};
pub use ops::{relu, relu_backward, sigmoid, sigmoid_backward};
pub use pool::{
    concat_channels, maxpool1d, maxpool1d_backward, split_channels, upsample1d_backward,
    upsample1d_nearest,
};
pub use tensor::Tensor3;

#[cfg(test)]
mod grad_tests {
    //! Finite-difference checks for each backward op on random small
    //! tensors (shapes up to (2, 3, 16)).

    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn rand_tensor(rng: &mut ChaCha8Rng, b: usize, c: usize, l: usize) -> Tensor3 {
        Tensor3::from_vec(b, c, l, (0..b * c * l).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap()
    }

    /// Central finite difference of scalar_fn at x[i].
    fn fd_at(x: &Tensor3, i: usize, h: f64, scalar_fn: &dyn Fn(&Tensor3) -> f64) -> f64 {
        let mut up = x.clone();
        up.data[i] += h;
        let mut dn = x.clone();
        dn.data[i] -= h;
        (scalar_fn(&up) - scalar_fn(&dn)) / (2.0 * h)
    }

    fn assert_close(analytic: f64, fd: f64, tol: f64, what: &str) {
        let denom = analytic.abs().max(fd.abs()).max(1.0);
        assert!(
            ((analytic - fd) / denom).abs() <= tol,
            "{what}: analytic {analytic}, fd {fd}"
        );
    }

    #[test]
    fn conv_backward_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for trial in 0..30 {
            let (b, ci, co, l, k) = (
                rng.random_range(1..=2),
                rng.random_range(1..=3),
                rng.random_range(1..=3),
                rng.random_range(5..=16),
                [1, 3, 5][rng.random_range(0..3)],
            );
            let x = rand_tensor(&mut rng, b, ci, l);
            let mut p = Conv1d::init(co, ci, k, &mut rng).unwrap();
            for bias in p.bias.iter_mut() {
                *bias = rng.random_range(-0.5..0.5);
            }
            // weighted sum of outputs as the scalar objective
            let w = rand_tensor(&mut rng, b, co, l);
            let loss = |x: &Tensor3, p: &Conv1d| -> f64 {
                let y = conv1d_forward(x, p).unwrap();
                y.data.iter().zip(&w.data).map(|(a, b)| a * b).sum()
            };
            let (gx, gp) = conv1d_backward(&x, &p, &w).unwrap();
            let h = 1e-6;
            for i in 0..x.numel() {
                let fd = fd_at(&x, i, h, &|t| loss(t, &p));
                assert_close(gx.data[i], fd, 1e-6, &format!("conv dx trial {trial}"));
            }
            for wi in 0..p.weights.len() {
                let mut pp = p.clone();
                pp.weights[wi] += h;
                let up = loss(&x, &pp);
                pp.weights[wi] = p.weights[wi] - h;
                let dn = loss(&x, &pp);
                assert_close(gp.weights[wi], (up - dn) / (2.0 * h), 1e-6, "conv dw");
            }
            for bi in 0..p.bias.len() {
                let mut pp = p.clone();
                pp.bias[bi] += h;
                let up = loss(&x, &pp);
                pp.bias[bi] = p.bias[bi] - h;
                let dn = loss(&x, &pp);
                assert_close(gp.bias[bi], (up - dn) / (2.0 * h), 1e-6, "conv db");
            }
        }
    }

    #[test]
    fn maxpool_backward_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for _ in 0..50 {
            let (b, c, f) = (rng.random_range(1..=2), rng.random_range(1..=3), rng.random_range(1..=4));
            let l = f * rng.random_range(1..=4);
            let x = rand_tensor(&mut rng, b, c, l);
            let w = rand_tensor(&mut rng, b, c, l / f);
            let loss = |x: &Tensor3| -> f64 {
                let (y, _) = maxpool1d(x, f).unwrap();
                y.data.iter().zip(&w.data).map(|(a, b)| a * b).sum()
            };
            let (_, idx) = maxpool1d(&x, f).unwrap();
            let gi = maxpool1d_backward(&w, &idx, l).unwrap();
            // h small enough not to flip any argmax
            let h = 1e-7;
            for i in 0..x.numel() {
                let fd = fd_at(&x, i, h, &loss);
                assert_close(gi.data[i], fd, 1e-4, "maxpool dx");
            }
        }
    }

    #[test]
    fn upsample_backward_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        for _ in 0..50 {
            let (b, c, l, f) = (
                rng.random_range(1..=2),
                rng.random_range(1..=3),
                rng.random_range(1..=8),
                rng.random_range(1..=4),
            );
            let x = rand_tensor(&mut rng, b, c, l);
            let w = rand_tensor(&mut rng, b, c, l * f);
            let loss = |x: &Tensor3| -> f64 {
                let y = upsample1d_nearest(x, f).unwrap();
                y.data.iter().zip(&w.data).map(|(a, b)| a * b).sum()
            };
            let gi = upsample1d_backward(&w, f).unwrap();
            for i in 0..x.numel() {
                let fd = fd_at(&x, i, 1e-6, &loss);
                assert_close(gi.data[i], fd, 1e-6, "upsample dx");
            }
        }
    }

    #[test]
    fn concat_backward_splits_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        for _ in 0..50 {
            let (b, ca, cb, l) = (
                rng.random_range(1..=2),
                rng.random_range(0..=3),
                rng.random_range(1..=3),
                rng.random_range(1..=16),
            );
            let x = rand_tensor(&mut rng, b, ca, l);
            let y = rand_tensor(&mut rng, b, cb, l);
            let cat = concat_channels(&x, &y).unwrap();
            let (gx, gy) = split_channels(&cat, ca).unwrap();
            assert_eq!(gx, x);
            assert_eq!(gy, y);
        }
    }

    #[test]
    fn relu_backward_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(104);
        for _ in 0..50 {
            let x = rand_tensor(&mut rng, 2, 3, 16);
            let w = rand_tensor(&mut rng, 2, 3, 16);
            let loss = |x: &Tensor3| -> f64 {
                relu(x).unwrap().data.iter().zip(&w.data).map(|(a, b)| a * b).sum()
            };
            let gi = relu_backward(&x, &w);
            for i in 0..x.numel() {
                if x.data[i].abs() < 1e-5 {
                    continue; // kink
                }
                let fd = fd_at(&x, i, 1e-7, &loss);
                assert_close(gi.data[i], fd, 1e-4, "relu dx");
            }
        }
    }

    #[test]
    fn sigmoid_backward_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(105);
        for _ in 0..50 {
            let x = rand_tensor(&mut rng, 2, 3, 16);
            let w = rand_tensor(&mut rng, 2, 3, 16);
            let loss = |x: &Tensor3| -> f64 {
                sigmoid(x).unwrap().data.iter().zip(&w.data).map(|(a, b)| a * b).sum()
            };
            let s = sigmoid(&x).unwrap();
            let gi = sigmoid_backward(&s, &w);
            for i in 0..x.numel() {
                let fd = fd_at(&x, i, 1e-6, &loss);
                assert_close(gi.data[i], fd, 1e-4, "sigmoid dx");
            }
        }
    }
}
