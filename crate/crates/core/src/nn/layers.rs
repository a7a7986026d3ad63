//! Forward and backward kernels on `[channels × length]` activations.

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

/// Valid (unpadded) 1-D cross-correlation.
///
/// `kernel` is `[out × in × k]` flattened row-major, so
/// `out[o, t] = bias[o] + Σ_{i,j} kernel[o, i, j] · input[i, t + j]`.
pub fn conv1d_forward(
    input: &Matrix,
    kernel: &[f64],
    bias: &[f64],
    out_channels: usize,
    width: usize,
) -> Result<Matrix> {
    let in_channels = input.rows();
    let len = input.cols();
    if width == 0 || len < width {
        return Err(Error::Shape(format!(
            "convolution of width {width} over a sequence of length {len}"
        )));
    }
    if kernel.len() != out_channels * in_channels * width || bias.len() != out_channels {
        return Err(Error::Shape(format!(
            "kernel has {} values and bias {}, expected {}x{}x{} and {}",
            kernel.len(),
            bias.len(),
            out_channels,
            in_channels,
            width,
            out_channels
        )));
    }
    let out_len = len - width + 1;
    let patches = im2col(input, width);
    let span = in_channels * width;
    let mut out = Matrix::zeros(out_channels, out_len);
    for o in 0..out_channels {
        let taps = &kernel[o * span..(o + 1) * span];
        let row = out.row_mut(o);
        for (t, r) in row.iter_mut().enumerate() {
            *r = bias[o] + dot(taps, &patches[t * span..(t + 1) * span]);
        }
    }
    Ok(out)
}

/// Row `t` holds the receptive field of output position `t`, laid out like a
/// kernel slice: `[x[0, t..t+k], x[1, t..t+k], …]`.
fn im2col(input: &Matrix, width: usize) -> Vec<f64> {
    let (in_channels, len) = (input.rows(), input.cols());
    let out_len = len + 1 - width;
    let span = in_channels * width;
    let mut patches = vec![0.0; out_len * span];
    for t in 0..out_len {
        let dst = &mut patches[t * span..(t + 1) * span];
        for i in 0..in_channels {
            dst[i * width..(i + 1) * width].copy_from_slice(&input.row(i)[t..t + width]);
        }
    }
    patches
}

pub struct Conv1dGrads {
    pub kernel: Vec<f64>,
    pub bias: Vec<f64>,
    pub input: Matrix,
}

/// Gradients of a valid convolution given the upstream gradient `grad_out`
/// (`[out × (len − k + 1)]`, already masked by any activation derivative).
pub fn conv1d_backward(
    input: &Matrix,
    kernel: &[f64],
    grad_out: &Matrix,
    width: usize,
) -> Conv1dGrads {
    let in_channels = input.rows();
    let out_channels = grad_out.rows();
    let out_len = grad_out.cols();
    let mut grads = Conv1dGrads {
        kernel: vec![0.0; kernel.len()],
        bias: vec![0.0; out_channels],
        input: Matrix::zeros(in_channels, input.cols()),
    };
    accumulate_conv1d_backward(input, kernel, grad_out, width, &mut grads.kernel, &mut grads.bias, Some(&mut grads.input));
    debug_assert_eq!(out_len + width - 1, input.cols());
    grads
}

pub(crate) fn accumulate_conv1d_backward(
    input: &Matrix,
    kernel: &[f64],
    grad_out: &Matrix,
    width: usize,
    grad_kernel: &mut [f64],
    grad_bias: &mut [f64],
    grad_input: Option<&mut Matrix>,
) {
    let in_channels = input.rows();
    let out_len = grad_out.cols();
    let span = in_channels * width;
    let patches = im2col(input, width);
    let mut grad_patches = grad_input.as_ref().map(|_| vec![0.0; out_len * span]);
    for o in 0..grad_out.rows() {
        let g = grad_out.row(o);
        grad_bias[o] += g.iter().sum::<f64>();
        let gk = &mut grad_kernel[o * span..(o + 1) * span];
        let taps = &kernel[o * span..(o + 1) * span];
        for (t, &gv) in g.iter().enumerate() {
            if gv == 0.0 {
                continue;
            }
            axpy(gv, &patches[t * span..(t + 1) * span], gk);
            if let Some(gp) = grad_patches.as_mut() {
                axpy(gv, taps, &mut gp[t * span..(t + 1) * span]);
            }
        }
    }
    if let (Some(gi), Some(gp)) = (grad_input, grad_patches) {
        for t in 0..out_len {
            let src = &gp[t * span..(t + 1) * span];
            for i in 0..in_channels {
                for (dst, v) in gi.row_mut(i)[t..t + width].iter_mut().zip(&src[i * width..(i + 1) * width]) {
                    *dst += v;
                }
            }
        }
    }
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yv, xv) in y.iter_mut().zip(x) {
        *yv += a * xv;
    }
}

/// Non-overlapping max-pool with stride equal to `width`; a trailing partial
/// window is dropped. Returns pooled values and the source column of each.
pub(crate) fn maxpool_forward(input: &Matrix, width: usize) -> (Matrix, Vec<usize>) {
    let out_len = input.cols() / width;
    let mut out = Matrix::zeros(input.rows(), out_len);
    let mut argmax = vec![0; input.rows() * out_len];
    for c in 0..input.rows() {
        let x = input.row(c);
        for t in 0..out_len {
            let (best, val) = argmax_of(&x[t * width..(t + 1) * width]);
            out[(c, t)] = val;
            argmax[c * out_len + t] = t * width + best;
        }
    }
    (out, argmax)
}

/// Max over the whole length of each channel, as a `[channels × 1]` matrix.
pub(crate) fn global_maxpool_forward(input: &Matrix) -> (Matrix, Vec<usize>) {
    let mut out = Matrix::zeros(input.rows(), 1);
    let mut argmax = vec![0; input.rows()];
    for c in 0..input.rows() {
        let (best, val) = argmax_of(input.row(c));
        out[(c, 0)] = val;
        argmax[c] = best;
    }
    (out, argmax)
}

/// Routes pooled gradients back to their source columns.
pub(crate) fn pool_backward(grad_out: &Matrix, argmax: &[usize], input_len: usize) -> Matrix {
    let mut g = Matrix::zeros(grad_out.rows(), input_len);
    let out_len = grad_out.cols();
    for c in 0..grad_out.rows() {
        for t in 0..out_len {
            g[(c, argmax[c * out_len + t])] += grad_out[(c, t)];
        }
    }
    g
}

/// First index of the maximum (ties resolve to the earliest position).
fn argmax_of(xs: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, v) in xs.iter().enumerate().skip(1) {
        if *v > xs[best] {
            best = i;
        }
    }
    (best, xs[best])
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
