//! Context encoders with hand-written backward passes.
//!
//! Every encoder maps a sequence of token vectors (nearest-to-mention first)
//! to a `D`-wide representation. Recurrent encoders consume the sequence
//! farthest-first so that the final state sits next to the mention.

use num_traits::Float;
use rand::Rng;

use crate::linalg::{axpy, dot, Matrix};
use crate::scalar::{softmax, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EncoderKind {
    Averaging,
    Rnn,
    Attentive,
}

impl EncoderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EncoderKind::Averaging => "averaging",
            EncoderKind::Rnn => "rnn",
            EncoderKind::Attentive => "attentive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "averaging" | "avg" => Some(EncoderKind::Averaging),
            "rnn" => Some(EncoderKind::Rnn),
            "attentive" | "attention" => Some(EncoderKind::Attentive),
            _ => None,
        }
    }
}

/// Copies `v` into a zero vector of width `width`.
pub fn pad<S: Scalar>(v: &[S], width: usize) -> Vec<S> {
    debug_assert!(v.len() <= width);
    let mut out = vec![S::zero(); width];
    out[..v.len()].copy_from_slice(v);
    out
}

/// Component-wise mean; the empty sequence maps to the zero vector of width `dim`.
pub fn mean<S: Scalar>(xs: &[Vec<S>], dim: usize) -> Vec<S> {
    let mut out = vec![S::zero(); dim];
    if xs.is_empty() {
        return out;
    }
    for x in xs {
        axpy(S::one(), x, &mut out);
    }
    let n = S::from_usize_lossy(xs.len());
    out.iter_mut().for_each(|v| *v /= n);
    out
}

/// Single-layer Elman cell: `h_t = tanh(W_x x_t + W_h h_{t-1} + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnCell<S> {
    pub w_x: Matrix<S>,
    pub w_h: Matrix<S>,
    /// 1 × H
    pub b: Matrix<S>,
}

impl<S: Scalar> RnnCell<S> {
    pub fn new<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            w_x: Matrix::xavier(hidden, input, rng),
            w_h: Matrix::xavier(hidden, hidden, rng),
            b: Matrix::zeros(1, hidden),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            w_x: Matrix::zeros(self.w_x.rows(), self.w_x.cols()),
            w_h: Matrix::zeros(self.w_h.rows(), self.w_h.cols()),
            b: Matrix::zeros(1, self.b.cols()),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_h.rows()
    }

    pub fn step(&self, x: &[S], h_prev: &[S]) -> Vec<S> {
        let mut a = self.w_x.matvec(x);
        axpy(S::one(), &self.w_h.matvec(h_prev), &mut a);
        axpy(S::one(), self.b.row(0), &mut a);
        a.into_iter().map(Float::tanh).collect()
    }

    /// All hidden states `h_1..h_T` for inputs consumed in slice order.
    pub fn run(&self, xs: &[Vec<S>]) -> Vec<Vec<S>> {
        let mut states = Vec::with_capacity(xs.len());
        let mut h = vec![S::zero(); self.hidden()];
        for x in xs {
            h = self.step(x, &h);
            states.push(h.clone());
        }
        states
    }

    /// Backpropagation through time. `d_states[t]` is the outside gradient on
    /// `h_t`; returns the gradient for each input.
    pub fn backward(&self, xs: &[Vec<S>], states: &[Vec<S>], d_states: &[Vec<S>], grad: &mut RnnCell<S>) -> Vec<Vec<S>> {
        let hdim = self.hidden();
        let mut dxs = vec![Vec::new(); xs.len()];
        let mut carry = vec![S::zero(); hdim];
        let zero = vec![S::zero(); hdim];
        for t in (0..xs.len()).rev() {
            let mut dh = d_states[t].clone();
            axpy(S::one(), &carry, &mut dh);
            let da: Vec<S> = dh
                .iter()
                .zip(&states[t])
                .map(|(&g, &h)| g * (S::one() - h * h))
                .collect();
            let h_prev = if t > 0 { &states[t - 1] } else { &zero };
            grad.w_x.add_outer(S::one(), &da, &xs[t]);
            grad.w_h.add_outer(S::one(), &da, h_prev);
            axpy(S::one(), &da, grad.b.row_mut(0));
            dxs[t] = self.w_x.matvec_t(&da);
            carry = self.w_h.matvec_t(&da);
        }
        dxs
    }
}

/// Bidirectional Elman encoder with self-attention over projected states.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentiveEncoder<S> {
    pub fwd: RnnCell<S>,
    pub bwd: RnnCell<S>,
    /// D × 2H, maps concatenated directional states to width D.
    pub proj: Matrix<S>,
    /// A × D
    pub w_att: Matrix<S>,
    /// 1 × A
    pub u_att: Matrix<S>,
}

/// Forward intermediates kept for the backward pass.
#[derive(Debug, Clone)]
pub struct AttentiveCache<S> {
    fwd_states: Vec<Vec<S>>,
    bwd_states: Vec<Vec<S>>,
    concat: Vec<Vec<S>>,
    states: Vec<Vec<S>>,
    hidden_att: Vec<Vec<S>>,
    weights: Vec<S>,
}

impl<S: Scalar> AttentiveEncoder<S> {
    pub fn new<R: Rng>(input: usize, hidden: usize, attn: usize, out: usize, rng: &mut R) -> Self {
        Self {
            fwd: RnnCell::new(input, hidden, rng),
            bwd: RnnCell::new(input, hidden, rng),
            proj: Matrix::xavier(out, 2 * hidden, rng),
            w_att: Matrix::xavier(attn, out, rng),
            u_att: Matrix::xavier(1, attn, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            fwd: self.fwd.zeros_like(),
            bwd: self.bwd.zeros_like(),
            proj: Matrix::zeros(self.proj.rows(), self.proj.cols()),
            w_att: Matrix::zeros(self.w_att.rows(), self.w_att.cols()),
            u_att: Matrix::zeros(1, self.u_att.cols()),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.proj.rows()
    }

    /// Projected bi-RNN states, one per input position.
    pub fn states(&self, xs: &[Vec<S>]) -> Vec<Vec<S>> {
        self.forward(xs).1.states
    }

    pub fn logits(&self, states: &[Vec<S>]) -> Vec<S> {
        states
            .iter()
            .map(|s| {
                let g: Vec<S> = self.w_att.matvec(s).into_iter().map(Float::tanh).collect();
                dot(self.u_att.row(0), &g)
            })
            .collect()
    }

    pub fn forward(&self, xs: &[Vec<S>]) -> (Vec<S>, AttentiveCache<S>) {
        let n = xs.len();
        let fwd_states = self.fwd.run(xs);
        let rev: Vec<Vec<S>> = xs.iter().rev().cloned().collect();
        let mut bwd_states = self.bwd.run(&rev);
        bwd_states.reverse();
        let concat: Vec<Vec<S>> = (0..n)
            .map(|t| {
                let mut c = fwd_states[t].clone();
                c.extend_from_slice(&bwd_states[t]);
                c
            })
            .collect();
        let states: Vec<Vec<S>> = concat.iter().map(|c| self.proj.matvec(c)).collect();
        let hidden_att: Vec<Vec<S>> = states
            .iter()
            .map(|s| self.w_att.matvec(s).into_iter().map(Float::tanh).collect())
            .collect();
        let logits: Vec<S> = hidden_att.iter().map(|g| dot(self.u_att.row(0), g)).collect();
        let weights = softmax(&logits);
        let out = attend(&states, &weights, self.out_dim());
        (
            out,
            AttentiveCache {
                fwd_states,
                bwd_states,
                concat,
                states,
                hidden_att,
                weights,
            },
        )
    }

    pub fn backward(&self, xs: &[Vec<S>], cache: &AttentiveCache<S>, dv: &[S], grad: &mut AttentiveEncoder<S>) -> Vec<Vec<S>> {
        let n = xs.len();
        let hdim = self.fwd.hidden();
        let mut ds: Vec<Vec<S>> = cache.weights.iter().map(|&a| dv.iter().map(|&g| g * a).collect()).collect();
        let dalpha: Vec<S> = cache.states.iter().map(|s| dot(dv, s)).collect();
        let expected: S = cache.weights.iter().zip(&dalpha).map(|(&a, &d)| a * d).sum();
        for t in 0..n {
            let dlogit = cache.weights[t] * (dalpha[t] - expected);
            let g = &cache.hidden_att[t];
            axpy(dlogit, g, grad.u_att.row_mut(0));
            let dpre: Vec<S> = self
                .u_att
                .row(0)
                .iter()
                .zip(g)
                .map(|(&u, &gv)| dlogit * u * (S::one() - gv * gv))
                .collect();
            grad.w_att.add_outer(S::one(), &dpre, &cache.states[t]);
            axpy(S::one(), &self.w_att.matvec_t(&dpre), &mut ds[t]);
        }
        let mut d_fwd = Vec::with_capacity(n);
        let mut d_bwd = Vec::with_capacity(n);
        for t in 0..n {
            grad.proj.add_outer(S::one(), &ds[t], &cache.concat[t]);
            let dc = self.proj.matvec_t(&ds[t]);
            d_fwd.push(dc[..hdim].to_vec());
            d_bwd.push(dc[hdim..].to_vec());
        }
        let mut dxs = self.fwd.backward(xs, &cache.fwd_states, &d_fwd, &mut grad.fwd);
        let rev_x: Vec<Vec<S>> = xs.iter().rev().cloned().collect();
        let rev_states: Vec<Vec<S>> = cache.bwd_states.iter().rev().cloned().collect();
        let rev_d: Vec<Vec<S>> = d_bwd.into_iter().rev().collect();
        let dx_rev = self.bwd.backward(&rev_x, &rev_states, &rev_d, &mut grad.bwd);
        for (t, dx) in dx_rev.into_iter().rev().enumerate() {
            axpy(S::one(), &dx, &mut dxs[t]);
        }
        dxs
    }
}

/// `Σ_t weights[t] · states[t]`; zero vector of `dim` for an empty sequence.
pub fn attend<S: Scalar>(states: &[Vec<S>], weights: &[S], dim: usize) -> Vec<S> {
    let mut out = vec![S::zero(); dim];
    for (s, &a) in states.iter().zip(weights) {
        axpy(a, s, &mut out);
    }
    out
}

/// One left or right context encoder.
#[derive(Debug, Clone, PartialEq)]
pub enum ContextEncoder<S> {
    Averaging,
    Rnn(RnnCell<S>),
    Attentive(AttentiveEncoder<S>),
}

#[derive(Debug, Clone)]
pub enum EncoderCache<S> {
    Averaging { n: usize },
    Rnn { ordered: Vec<Vec<S>>, states: Vec<Vec<S>> },
    Attentive(AttentiveCache<S>),
}

impl<S: Scalar> ContextEncoder<S> {
    pub fn new<R: Rng>(kind: EncoderKind, input: usize, hidden: usize, out: usize, rng: &mut R) -> Self {
        match kind {
            EncoderKind::Averaging => ContextEncoder::Averaging,
            EncoderKind::Rnn => ContextEncoder::Rnn(RnnCell::new(input, hidden, rng)),
            EncoderKind::Attentive => ContextEncoder::Attentive(AttentiveEncoder::new(input, hidden, hidden, out, rng)),
        }
    }

    pub fn kind(&self) -> EncoderKind {
        match self {
            ContextEncoder::Averaging => EncoderKind::Averaging,
            ContextEncoder::Rnn(_) => EncoderKind::Rnn,
            ContextEncoder::Attentive(_) => EncoderKind::Attentive,
        }
    }

    pub fn zeros_like(&self) -> Self {
        match self {
            ContextEncoder::Averaging => ContextEncoder::Averaging,
            ContextEncoder::Rnn(c) => ContextEncoder::Rnn(c.zeros_like()),
            ContextEncoder::Attentive(a) => ContextEncoder::Attentive(a.zeros_like()),
        }
    }

    pub fn tensors(&self) -> Vec<(&'static str, &Matrix<S>)> {
        match self {
            ContextEncoder::Averaging => vec![],
            ContextEncoder::Rnn(c) => vec![("w_x", &c.w_x), ("w_h", &c.w_h), ("b", &c.b)],
            ContextEncoder::Attentive(a) => vec![
                ("fwd_w_x", &a.fwd.w_x),
                ("fwd_w_h", &a.fwd.w_h),
                ("fwd_b", &a.fwd.b),
                ("bwd_w_x", &a.bwd.w_x),
                ("bwd_w_h", &a.bwd.w_h),
                ("bwd_b", &a.bwd.b),
                ("proj", &a.proj),
                ("w_att", &a.w_att),
                ("u_att", &a.u_att),
            ],
        }
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix<S>> {
        match self {
            ContextEncoder::Averaging => vec![],
            ContextEncoder::Rnn(c) => vec![&mut c.w_x, &mut c.w_h, &mut c.b],
            ContextEncoder::Attentive(a) => vec![
                &mut a.fwd.w_x,
                &mut a.fwd.w_h,
                &mut a.fwd.b,
                &mut a.bwd.w_x,
                &mut a.bwd.w_h,
                &mut a.bwd.b,
                &mut a.proj,
                &mut a.w_att,
                &mut a.u_att,
            ],
        }
    }

    /// Encodes a nearest-first context into a `width`-vector.
    pub fn forward(&self, xs: &[Vec<S>], input_dim: usize, width: usize) -> (Vec<S>, EncoderCache<S>) {
        match self {
            ContextEncoder::Averaging => (pad(&mean(xs, input_dim), width), EncoderCache::Averaging { n: xs.len() }),
            ContextEncoder::Rnn(cell) => {
                let ordered: Vec<Vec<S>> = xs.iter().rev().cloned().collect();
                let states = cell.run(&ordered);
                let last = states.last().cloned().unwrap_or_else(|| vec![S::zero(); cell.hidden()]);
                (pad(&last, width), EncoderCache::Rnn { ordered, states })
            }
            ContextEncoder::Attentive(att) => {
                let (v, cache) = att.forward(xs);
                (v, EncoderCache::Attentive(cache))
            }
        }
    }

    /// Gradients w.r.t. each input vector (nearest-first, like the input).
    pub fn backward(
        &self,
        xs: &[Vec<S>],
        cache: &EncoderCache<S>,
        dv: &[S],
        input_dim: usize,
        grad: &mut ContextEncoder<S>,
    ) -> Vec<Vec<S>> {
        match (self, cache, grad) {
            (ContextEncoder::Averaging, EncoderCache::Averaging { n }, _) => {
                if *n == 0 {
                    return Vec::new();
                }
                let scale = S::one() / S::from_usize_lossy(*n);
                let dx: Vec<S> = dv[..input_dim].iter().map(|&g| g * scale).collect();
                vec![dx; *n]
            }
            (ContextEncoder::Rnn(cell), EncoderCache::Rnn { ordered, states }, ContextEncoder::Rnn(g)) => {
                if ordered.is_empty() {
                    return Vec::new();
                }
                let h = cell.hidden();
                let mut d_states = vec![vec![S::zero(); h]; ordered.len()];
                d_states[ordered.len() - 1] = dv[..h].to_vec();
                let mut dxs = cell.backward(ordered, states, &d_states, g);
                dxs.reverse();
                dxs
            }
            (ContextEncoder::Attentive(att), EncoderCache::Attentive(c), ContextEncoder::Attentive(g)) => {
                att.backward(xs, c, dv, g)
            }
            _ => panic!("encoder, cache and gradient kinds disagree"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn averaging_degenerate_cases() {
        let enc = ContextEncoder::<f64>::Averaging;
        let (v, _) = enc.forward(&[], 2, 4);
        assert_eq!(v, vec![0.0; 4]);
        let e = vec![0.3, -0.7];
        for k in 1..5 {
            let (v, _) = enc.forward(&vec![e.clone(); k], 2, 2);
            assert!((v[0] - 0.3).abs() < 1e-15 && (v[1] + 0.7).abs() < 1e-15);
        }
        let (v, _) = enc.forward(&[vec![1.0, 0.0], vec![0.0, 1.0]], 2, 2);
        assert_eq!(v, vec![0.5, 0.5]);
    }

    #[test]
    fn rnn_single_step_matches_hand_computation() {
        // scalar cell: h = tanh(0.5·x + 0.3·0 + 0.1)
        let cell = RnnCell {
            w_x: Matrix::from_vec(1, 1, vec![0.5f64]),
            w_h: Matrix::from_vec(1, 1, vec![0.3]),
            b: Matrix::from_vec(1, 1, vec![0.1]),
        };
        let enc = ContextEncoder::Rnn(cell);
        let (v, _) = enc.forward(&[vec![2.0]], 1, 1);
        assert!((v[0] - (1.1f64).tanh()).abs() < 1e-15);
        let (v, _) = enc.forward(&[], 1, 3);
        assert_eq!(v, vec![0.0; 3]);
    }

    #[test]
    fn rnn_zero_weights_give_zero_state() {
        let cell = RnnCell::<f64> {
            w_x: Matrix::zeros(3, 2),
            w_h: Matrix::zeros(3, 3),
            b: Matrix::zeros(1, 3),
        };
        let xs = vec![vec![5.0, -2.0], vec![1.0, 9.0]];
        assert_eq!(ContextEncoder::Rnn(cell).forward(&xs, 2, 3).0, vec![0.0; 3]);
    }

    #[test]
    fn attention_arithmetic() {
        let s1 = vec![1.0f64, 2.0];
        let s2 = vec![-3.0, 4.0];
        let w = softmax(&[3.0f64.ln(), 0.0]);
        let v = attend(&[s1.clone(), s2.clone()], &w, 2);
        assert!((v[0] - (0.75 * 1.0 + 0.25 * -3.0)).abs() < 1e-15);
        assert!((v[1] - (0.75 * 2.0 + 0.25 * 4.0)).abs() < 1e-15);
        let w = softmax(&[0.4f64, 0.4]);
        let v = attend(&[s1, s2], &w, 2);
        assert!((v[0] + 1.0).abs() < 1e-15 && (v[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn attentive_single_token_is_its_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let enc = AttentiveEncoder::<f64>::new(4, 3, 3, 5, &mut rng);
        let xs = vec![vec![0.1, -0.2, 0.3, 0.05]];
        let states = enc.states(&xs);
        let (v, _) = enc.forward(&xs);
        assert_eq!(v, states[0]);
    }
}
