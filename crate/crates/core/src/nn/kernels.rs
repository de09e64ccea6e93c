//! Inner loops shared by the public layer ops and [`super::Sequential`].
//!
//! Activations here are time-major (`buf[t * channels + c]`) so that the
//! innermost loop always runs over contiguous filter/channel indices.
//!
//! The forward conv accumulates each output cell over `(i, j)` in
//! lexicographic order starting from zero (or the bias), the same order as
//! the naive triple loop, so results agree bit for bit. Zero inputs are
//! skipped: adding `±0.0` to a sum that started at `+0.0` never changes it.

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yv, xv) in y.iter_mut().zip(x) {
        *yv += a * xv;
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// `out[t][k] = b[k] + sum_i sum_j x[t + j][i] * w[i][j][k]`, with `x` read as
/// zero past the end of the sequence.
pub(crate) fn conv_forward(
    x: &[f64],
    in_ch: usize,
    len: usize,
    w: &[f64],
    width: usize,
    filters: usize,
    bias: Option<&[f64]>,
) -> Vec<f64> {
    let mut out = match bias {
        Some(b) => {
            let mut o = Vec::with_capacity(len * filters);
            for _ in 0..len {
                o.extend_from_slice(b);
            }
            o
        }
        None => vec![0.0; len * filters],
    };
    for i in 0..in_ch {
        for j in 0..width {
            let wrow = &w[(i * width + j) * filters..][..filters];
            for t in 0..len.saturating_sub(j) {
                let xv = x[(t + j) * in_ch + i];
                if xv == 0.0 {
                    continue;
                }
                axpy(&mut out[t * filters..][..filters], xv, wrow);
            }
        }
    }
    out
}

/// Accumulates filter gradients into `dw` and returns the input gradient.
///
/// With `gated_input`, the input came out of a ReLU (possibly through a max
/// pool), so a zero input cell has a closed gate upstream and its gradient
/// is left at zero without being computed.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_backward(
    x: &[f64],
    in_ch: usize,
    len: usize,
    w: &[f64],
    width: usize,
    filters: usize,
    dout: &[f64],
    dw: &mut [f64],
    db: Option<&mut [f64]>,
    gated_input: bool,
) -> Vec<f64> {
    let mut dx = vec![0.0; len * in_ch];
    for i in 0..in_ch {
        for j in 0..width {
            let row = (i * width + j) * filters;
            let wrow = &w[row..][..filters];
            let dwrow = &mut dw[row..][..filters];
            for t in 0..len.saturating_sub(j) {
                let xv = x[(t + j) * in_ch + i];
                if xv == 0.0 && gated_input {
                    continue;
                }
                let g = &dout[t * filters..][..filters];
                dx[(t + j) * in_ch + i] += dot(wrow, g);
                if xv != 0.0 {
                    axpy(dwrow, xv, g);
                }
            }
        }
    }
    if let Some(db) = db {
        for t in 0..len {
            for (b, g) in db.iter_mut().zip(&dout[t * filters..][..filters]) {
                *b += g;
            }
        }
    }
    dx
}

/// Returns `(output, mask)` where `mask[n]` is whether the input was positive.
pub(crate) fn relu_forward(x: &[f64]) -> (Vec<f64>, Vec<bool>) {
    let mask: Vec<bool> = x.iter().map(|v| *v > 0.0).collect();
    let out = x.iter().map(|v| if *v > 0.0 { *v } else { 0.0 }).collect();
    (out, mask)
}

pub(crate) fn relu_backward(dout: &[f64], mask: &[bool]) -> Vec<f64> {
    dout.iter()
        .zip(mask)
        .map(|(g, m)| if *m { *g } else { 0.0 })
        .collect()
}

pub(crate) fn pooled_len(len: usize, size: usize) -> usize {
    len.div_ceil(size)
}

/// Max over non-overlapping windows of `size` frames; the last window may be
/// partial. Returns the output and, per output cell, the winning input frame.
/// Ties go to the earliest frame.
pub(crate) fn maxpool_forward(
    x: &[f64],
    channels: usize,
    len: usize,
    size: usize,
) -> (Vec<f64>, Vec<usize>) {
    let out_len = pooled_len(len, size);
    let mut out = vec![0.0; out_len * channels];
    let mut arg = vec![0usize; out_len * channels];
    for p in 0..out_len {
        let start = p * size;
        let end = (start + size).min(len);
        let orow = &mut out[p * channels..][..channels];
        let arow = &mut arg[p * channels..][..channels];
        orow.copy_from_slice(&x[start * channels..][..channels]);
        arow.fill(start);
        for t in start + 1..end {
            let row = &x[t * channels..][..channels];
            for c in 0..channels {
                if row[c] > orow[c] {
                    orow[c] = row[c];
                    arow[c] = t;
                }
            }
        }
    }
    (out, arg)
}

pub(crate) fn maxpool_backward(
    dout: &[f64],
    argmax: &[usize],
    channels: usize,
    in_len: usize,
) -> Vec<f64> {
    let mut dx = vec![0.0; in_len * channels];
    for (cell, (g, t)) in dout.iter().zip(argmax).enumerate() {
        let c = cell % channels;
        dx[t * channels + c] += g;
    }
    dx
}

/// `y[o] = b[o] + sum_i x[i] * w[i][o]`.
pub(crate) fn dense_forward(
    x: &[f64],
    w: &[f64],
    outputs: usize,
    bias: Option<&[f64]>,
) -> Vec<f64> {
    let mut y = match bias {
        Some(b) => b.to_vec(),
        None => vec![0.0; outputs],
    };
    for (i, xv) in x.iter().enumerate() {
        if *xv == 0.0 {
            continue;
        }
        axpy(&mut y, *xv, &w[i * outputs..][..outputs]);
    }
    y
}

pub(crate) fn dense_backward(
    x: &[f64],
    w: &[f64],
    outputs: usize,
    dy: &[f64],
    dw: &mut [f64],
    db: Option<&mut [f64]>,
) -> Vec<f64> {
    let mut dx = vec![0.0; x.len()];
    for (i, xv) in x.iter().enumerate() {
        let row = &w[i * outputs..][..outputs];
        dx[i] = dot(row, dy);
        if *xv != 0.0 {
            axpy(&mut dw[i * outputs..][..outputs], *xv, dy);
        }
    }
    if let Some(db) = db {
        for (b, g) in db.iter_mut().zip(dy) {
            *b += g;
        }
    }
    dx
}

/// Numerically stable softmax (max-subtracted).
pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
