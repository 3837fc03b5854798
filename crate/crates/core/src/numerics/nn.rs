//! Layer building blocks composed from tape operations.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use super::{Array, NumericsError, Real, Result, Tape, Var};

/// Uniform fan-in initialization `U(−1/√fan_in, 1/√fan_in)` for a `[out, in]` weight.
pub fn kaiming_uniform<T: Real, R: Rng + ?Sized>(out_dim: usize, in_dim: usize, rng: &mut R) -> Array<T> {
    let bound = 1.0 / (in_dim as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
    let data = (0..out_dim * in_dim).map(|_| T::lit(dist.sample(rng))).collect();
    Array::new(vec![out_dim, in_dim], data).expect("consistent shape")
}

pub fn normal_init<T: Real, R: Rng + ?Sized>(shape: &[usize], std: f64, rng: &mut R) -> Array<T> {
    let dist = Normal::new(0.0, std).expect("positive std");
    let n = shape.iter().product();
    let data = (0..n).map(|_| T::lit(dist.sample(rng))).collect();
    Array::new(shape.to_vec(), data).expect("consistent shape")
}

/// Inverted dropout mask: each entry is 0 with probability `p`, else `1/(1−p)`.
pub fn dropout_mask<T: Real, R: Rng + ?Sized>(len: usize, p: f64, rng: &mut R) -> Vec<T> {
    let keep = T::lit(1.0 / (1.0 - p));
    (0..len).map(|_| if rng.random::<f64>() < p { T::zero() } else { keep }).collect()
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..1.0).contains(&p) {
        Ok(())
    } else {
        Err(NumericsError::InvalidArgument(format!("dropout probability {p} not in [0, 1)")))
    }
}

/// Dropout on a plain array. Identity when `training` is false or `p == 0`.
pub fn dropout<T: Real, R: Rng + ?Sized>(x: &Array<T>, p: f64, training: bool, rng: &mut R) -> Result<Array<T>> {
    check_p(p)?;
    if !training || p == 0.0 {
        return Ok(x.clone());
    }
    let mask = dropout_mask::<T, R>(x.len(), p, rng);
    let data = x.data().iter().zip(&mask).map(|(&a, &m)| a * m).collect();
    Array::new(x.shape().to_vec(), data)
}

/// Dropout recorded on the tape. Returns `x` unchanged (no node) in eval mode.
pub fn dropout_var<T: Real, R: Rng + ?Sized>(
    tape: &mut Tape<T>,
    x: Var,
    p: f64,
    training: bool,
    rng: &mut R,
) -> Result<Var> {
    check_p(p)?;
    if !training || p == 0.0 {
        return Ok(x);
    }
    let mask = dropout_mask(tape.value(x).len(), p, rng);
    tape.mask(x, mask)
}

/// Handles to the weights of one self-attention block.
///
/// Keys carry no bias: a key bias adds the same constant to every score in a
/// row, which the softmax cancels, so it would be an untrainable parameter.
#[derive(Debug, Clone, Copy)]
pub struct AttentionVars {
    pub wq: Var,
    pub bq: Var,
    pub wk: Var,
    pub wv: Var,
    pub bv: Var,
    pub wo: Var,
    pub bo: Var,
}

pub struct AttentionOutput {
    pub output: Var,
    /// Row-stochastic attention weights, one `[M, M]` node per head.
    pub weights: Vec<Var>,
}

/// Multi-head scaled dot-product self-attention over the rows of `x: [M, d]`,
/// followed by the output projection. No masking.
pub fn attention<T: Real>(tape: &mut Tape<T>, x: Var, p: &AttentionVars, heads: usize) -> Result<AttentionOutput> {
    let d = tape.value(x).cols();
    if heads == 0 || d % heads != 0 {
        return Err(NumericsError::Shape(format!("width {d} not divisible by {heads} heads")));
    }
    let dh = d / heads;
    let q = tape.affine(x, p.wq, Some(p.bq))?;
    let k = tape.affine(x, p.wk, None)?;
    let v = tape.affine(x, p.wv, Some(p.bv))?;
    let scale = T::lit(1.0 / (dh as f64).sqrt());
    let mut outs = Vec::with_capacity(heads);
    let mut weights = Vec::with_capacity(heads);
    for h in 0..heads {
        let (qh, kh, vh) = if heads == 1 {
            (q, k, v)
        } else {
            (tape.slice_cols(q, h * dh, dh)?, tape.slice_cols(k, h * dh, dh)?, tape.slice_cols(v, h * dh, dh)?)
        };
        let scores = tape.matmul_nt(qh, kh)?;
        let scores = tape.scale(scores, scale);
        let attn = tape.softmax_rows(scores);
        weights.push(attn);
        outs.push(tape.matmul(attn, vh)?);
    }
    let merged = if heads == 1 { outs[0] } else { tape.concat_cols(&outs)? };
    let output = tape.affine(merged, p.wo, Some(p.bo))?;
    Ok(AttentionOutput { output, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::grad_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(tape: &mut Tape<f64>, d: usize, rng: &mut ChaCha8Rng) -> AttentionVars {
        let mut w = |tape: &mut Tape<f64>| tape.param(kaiming_uniform(d, d, rng));
        let wq = w(tape);
        let wk = w(tape);
        let wv = w(tape);
        let wo = w(tape);
        let b = |tape: &mut Tape<f64>| tape.param(Array::full(&[d], 0.05));
        AttentionVars { wq, bq: b(tape), wk, wv, bv: b(tape), wo, bo: b(tape) }
    }

    #[test]
    fn single_token_attends_to_itself() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut t = Tape::new();
        let p = params(&mut t, 4, &mut rng);
        let x = t.constant(normal_init(&[1, 4], 1.0, &mut rng));
        let out = attention(&mut t, x, &p, 1).unwrap();
        assert_eq!(t.value(out.weights[0]).data(), &[1.0]);
        let v = t.affine(x, p.wv, Some(p.bv)).unwrap();
        let expected = t.affine(v, p.wo, Some(p.bo)).unwrap();
        assert_eq!(t.value(out.output), t.value(expected));
    }

    #[test]
    fn identical_tokens_attend_uniformly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut t = Tape::new();
        let p = params(&mut t, 4, &mut rng);
        let row: Vec<f64> = vec![0.3, -1.0, 2.0, 0.5];
        let x = t.constant(Array::from_rows(&vec![row; 5]).unwrap());
        let out = attention(&mut t, x, &p, 2).unwrap();
        for w in &out.weights {
            for v in t.value(*w).data() {
                assert!((v - 0.2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rows_are_stochastic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut t = Tape::new();
        let p = params(&mut t, 8, &mut rng);
        let x = t.constant(normal_init(&[6, 8], 2.0, &mut rng));
        let out = attention(&mut t, x, &p, 2).unwrap();
        for w in &out.weights {
            for i in 0..6 {
                let s: f64 = t.value(*w).row(i).iter().sum();
                assert!((s - 1.0).abs() < 1e-6);
            }
        }
        assert!(attention(&mut t, x, &p, 3).is_err());
    }

    #[test]
    fn attention_gradient_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x0 = normal_init::<f64, _>(&[3, 4], 1.0, &mut rng);
        let ws: Vec<Array<f64>> = (0..4).map(|_| kaiming_uniform(4, 4, &mut rng)).collect();
        let cot = normal_init::<f64, _>(&[3, 4], 1.0, &mut rng);
        let f = |flat: &[f64]| {
            let mut t = Tape::new();
            let x = t.param(Array::new(vec![3, 4], flat[..12].to_vec()).unwrap());
            let mut off = 12;
            let mut take = |t: &mut Tape<f64>, shape: &[usize]| {
                let n: usize = shape.iter().product();
                let v = t.param(Array::new(shape.to_vec(), flat[off..off + n].to_vec()).unwrap());
                off += n;
                v
            };
            let (wq, bq) = (take(&mut t, &[4, 4]), take(&mut t, &[4]));
            let wk = take(&mut t, &[4, 4]);
            let (wv, bv) = (take(&mut t, &[4, 4]), take(&mut t, &[4]));
            let (wo, bo) = (take(&mut t, &[4, 4]), take(&mut t, &[4]));
            let p = AttentionVars { wq, bq, wk, wv, bv, wo, bo };
            let out = attention(&mut t, x, &p, 1).unwrap().output;
            let c = t.constant(cot.clone());
            let prod = t.mul(out, c).unwrap();
            let s = t.sum_all(prod);
            let g = t.backward(s).unwrap();
            let mut grad = Vec::new();
            for i in 0..8 {
                let v = Var(i);
                grad.extend_from_slice(g.get_or_zeros(v, t.value(v)).data());
            }
            (t.value(s).item(), grad)
        };
        let mut point = x0.data().to_vec();
        for (j, w) in ws.iter().enumerate() {
            point.extend_from_slice(w.data());
            if j != 1 {
                point.extend(std::iter::repeat(0.1).take(4));
            }
        }
        let err = grad_check(f, &point, 1e-5);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn dropout_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = normal_init::<f64, _>(&[10, 10], 1.0, &mut rng);
        assert_eq!(dropout(&x, 0.0, true, &mut rng).unwrap(), x);
        assert_eq!(dropout(&x, 0.5, false, &mut rng).unwrap(), x);
        assert!(dropout(&x, 1.0, true, &mut rng).is_err());

        let ones = Array::<f64>::full(&[100_000], 1.0);
        let out = dropout(&ones, 0.1, true, &mut rng).unwrap();
        let kept = out.data().iter().filter(|&&v| v != 0.0).count() as f64 / 1e5;
        assert!((kept - 0.9).abs() < 0.01, "{kept}");
        assert!(out.data().iter().all(|&v| v == 0.0 || (v - 1.0 / 0.9).abs() < 1e-12));

        let a = dropout(&ones, 0.3, true, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = dropout(&ones, 0.3, true, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }
}
