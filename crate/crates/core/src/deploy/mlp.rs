//! Small fully connected network with tanh hidden layers, a linear output
//! layer and hand-written backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Parameters are stored flat; layer `l` holds its `out × in` weights
/// (row-major) followed by its `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    pub params: Vec<f64>,
}

/// Activations saved by a forward pass: the input, then every layer output.
#[derive(Debug, Clone)]
pub struct Tape {
    acts: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("tape has the input at least")
    }
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need input and output sizes");
        let mut params = Vec::new();
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Mlp {
            sizes: sizes.to_vec(),
            params,
        }
    }

    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.sizes.last().expect("non-empty sizes")
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Sets the output-layer bias (all outputs).
    pub fn set_output_bias(&mut self, value: f64) {
        let out = self.output_size();
        let n = self.params.len();
        self.params[n - out..].iter_mut().for_each(|b| *b = value);
    }

    pub fn forward(&self, input: &[f64]) -> Tape {
        assert_eq!(input.len(), self.sizes[0], "input width");
        let layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(layers + 1);
        acts.push(input.to_vec());
        let mut offset = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            let x = &acts[l];
            let mut y: Vec<f64> = (0..n_out)
                .map(|o| b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>())
                .collect();
            if l + 1 < layers {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(y);
            offset += n_in * n_out + n_out;
        }
        Tape { acts }
    }

    pub fn eval(&self, input: &[f64]) -> Vec<f64> {
        self.forward(input).acts.pop().expect("output layer")
    }

    /// Adds `d(loss)/d(params)` to `grad`, given `d(loss)/d(output)`.
    pub fn backward(&self, tape: &Tape, d_out: &[f64], grad: &mut [f64]) {
        let layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut offset = 0;
        for l in 0..layers {
            offsets.push(offset);
            offset += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        let mut delta = d_out.to_vec();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let x = &tape.acts[l];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = off + o * n_in;
                for i in 0..n_in {
                    grad[row + i] += d * x[i];
                }
                grad[off + n_in * n_out + o] += d;
            }
            if l > 0 {
                // Through the weights, then through tanh of the previous layer.
                let w = &self.params[off..off + n_in * n_out];
                delta = (0..n_in)
                    .map(|i| {
                        let s: f64 = (0..n_out).map(|o| w[o * n_in + i] * delta[o]).sum();
                        s * (1.0 - x[i] * x[i])
                    })
                    .collect();
            }
        }
    }
}

/// Adam optimizer state for one parameter vector (minimizes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(num_params: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Mlp::new(&[4, 7, 5, 2], &mut rng);
        let x = [0.3, -1.2, 0.8, 0.05];
        // loss = 0.7 y0 - 1.3 y1
        let d_out = [0.7, -1.3];
        let loss = |n: &Mlp| {
            let y = n.eval(&x);
            0.7 * y[0] - 1.3 * y[1]
        };
        let mut grad = vec![0.0; net.num_params()];
        net.backward(&net.forward(&x), &d_out, &mut grad);
        let h = 1e-6;
        for i in 0..net.num_params() {
            let mut plus = net.clone();
            plus.params[i] += h;
            let mut minus = net.clone();
            minus.params[i] -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            assert!((fd - grad[i]).abs() < 1e-7 * (1.0 + fd.abs()), "param {i}: {fd} vs {}", grad[i]);
        }
    }

    #[test]
    fn adam_fits_a_line() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net = Mlp::new(&[1, 8, 1], &mut rng);
        let mut opt = Adam::new(net.num_params(), 1e-2);
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 10.0 - 1.0).collect();
        let mse = |n: &Mlp| xs.iter().map(|&x| (n.eval(&[x])[0] - 0.5 * x).powi(2)).sum::<f64>() / 20.0;
        let before = mse(&net);
        for _ in 0..500 {
            let mut grad = vec![0.0; net.num_params()];
            for &x in &xs {
                let tape = net.forward(&[x]);
                let err = tape.output()[0] - 0.5 * x;
                net.backward(&tape, &[err / 20.0], &mut grad);
            }
            opt.step(&mut net.params, &grad);
        }
        assert!(mse(&net) < 1e-3 * before.max(1.0), "{} -> {}", before, mse(&net));
    }
}
