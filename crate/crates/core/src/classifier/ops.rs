//! Single-sample kernels in channel-major (C, H, W) layout.

/// Copy `(c, h, w)` into a zero-bordered `(c, h + 2, w + 2)` buffer.
fn pad(input: &[f64], c: usize, h: usize, w: usize, buf: &mut Vec<f64>) {
    let (ph, pw) = (h + 2, w + 2);
    buf.clear();
    buf.resize(c * ph * pw, 0.0);
    for ch in 0..c {
        for y in 0..h {
            buf[(ch * ph + y + 1) * pw + 1..][..w].copy_from_slice(&input[(ch * h + y) * w..][..w]);
        }
    }
}

/// Runs `f` compiled with AVX2 enabled when the CPU supports it. No FMA
/// contraction happens either way, so both paths give identical bits.
#[inline(always)]
fn dispatch<R>(f: impl FnOnce() -> R) -> R {
    #[cfg(target_arch = "x86_64")]
    {
        #[target_feature(enable = "avx2")]
        unsafe fn wide<R>(f: impl FnOnce() -> R) -> R {
            f()
        }
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the feature was detected at runtime.
            return unsafe { wide(f) };
        }
    }
    f()
}

#[inline(always)]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline(always)]
fn mul_acc(a: &[f64], b: &[f64], acc: &mut [f64]) {
    for ((s, x), y) in acc.iter_mut().zip(a).zip(b) {
        *s += x * y;
    }
}

/// 3×3 convolution, stride 1, zero padding 1. `weight` is
/// `(c_out, c_in, 3, 3)`; `buf` is scratch.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv3x3_forward(
    input: &[f64],
    c_in: usize,
    h: usize,
    w: usize,
    weight: &[f64],
    bias: &[f64],
    c_out: usize,
    out: &mut [f64],
    buf: &mut Vec<f64>,
) {
    pad(input, c_in, h, w, buf);
    let (ph, pw) = (h + 2, w + 2);
    let padded = &buf[..];
    dispatch(|| {
        for o in 0..c_out {
            for y in 0..h {
                let acc = &mut out[(o * h + y) * w..][..w];
                acc.fill(bias[o]);
                for c in 0..c_in {
                    let wk = &weight[(o * c_in + c) * 9..][..9];
                    for ky in 0..3 {
                        let row = &padded[(c * ph + y + ky) * pw..][..pw];
                        for kx in 0..3 {
                            axpy(wk[ky * 3 + kx], &row[kx..kx + w], acc);
                        }
                    }
                }
            }
        }
    })
}

/// Accumulate weight and bias gradients for a 3×3 convolution and, when
/// `dinput` is given, overwrite it with the input gradient.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv3x3_backward(
    input: &[f64],
    c_in: usize,
    h: usize,
    w: usize,
    weight: &[f64],
    c_out: usize,
    dout: &[f64],
    dweight: &mut [f64],
    dbias: &mut [f64],
    dinput: Option<&mut [f64]>,
    buf: &mut Vec<f64>,
) {
    let (ph, pw) = (h + 2, w + 2);
    let hw = h * w;
    for (o, db) in dbias.iter_mut().enumerate().take(c_out) {
        *db += dout[o * hw..(o + 1) * hw].iter().sum::<f64>();
    }
    pad(input, c_in, h, w, buf);
    let padded = &buf[..];
    dispatch(|| {
        let mut acc = vec![0.0; 9 * w];
        for o in 0..c_out {
            for c in 0..c_in {
                acc.fill(0.0);
                for y in 0..h {
                    let g = &dout[(o * h + y) * w..][..w];
                    for ky in 0..3 {
                        let row = &padded[(c * ph + y + ky) * pw..][..pw];
                        for kx in 0..3 {
                            mul_acc(g, &row[kx..kx + w], &mut acc[(ky * 3 + kx) * w..][..w]);
                        }
                    }
                }
                for k in 0..9 {
                    dweight[(o * c_in + c) * 9 + k] += acc[k * w..(k + 1) * w].iter().sum::<f64>();
                }
            }
        }
    });
    let Some(dinput) = dinput else {
        return;
    };
    let mut dpad = vec![0.0; c_in * ph * pw];
    dispatch(|| {
        for c in 0..c_in {
            for o in 0..c_out {
                let wk = &weight[(o * c_in + c) * 9..][..9];
                for y in 0..h {
                    let g = &dout[(o * h + y) * w..][..w];
                    for ky in 0..3 {
                        let row = &mut dpad[(c * ph + y + ky) * pw..][..pw];
                        for kx in 0..3 {
                            axpy(wk[ky * 3 + kx], g, &mut row[kx..kx + w]);
                        }
                    }
                }
            }
        }
    });
    for c in 0..c_in {
        for y in 0..h {
            dinput[(c * h + y) * w..][..w].copy_from_slice(&dpad[(c * ph + y + 1) * pw + 1..][..w]);
        }
    }
}

pub(crate) fn relu_in_place(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = x.max(0.0));
}

/// Zero gradient entries where the ReLU output was not positive.
pub(crate) fn relu_backward(output: &[f64], grad: &mut [f64]) {
    grad.iter_mut()
        .zip(output)
        .for_each(|(g, &y)| if y <= 0.0 { *g = 0.0 });
}

/// 2×2 max-pool with stride 2. `argmax` records the winning input index;
/// the first maximum in row-major window order wins ties.
pub(crate) fn maxpool2_forward(
    input: &[f64],
    c: usize,
    h: usize,
    w: usize,
    out: &mut [f64],
    argmax: &mut [u32],
) {
    let (oh, ow) = (h / 2, w / 2);
    for ch in 0..c {
        for y in 0..oh {
            for x in 0..ow {
                let base = ch * h * w + 2 * y * w + 2 * x;
                let mut best = base;
                for idx in [base + 1, base + w, base + w + 1] {
                    if input[idx] > input[best] {
                        best = idx;
                    }
                }
                let o = ch * oh * ow + y * ow + x;
                out[o] = input[best];
                argmax[o] = best as u32;
            }
        }
    }
}

pub(crate) fn maxpool2_backward(dout: &[f64], argmax: &[u32], dinput: &mut [f64]) {
    dinput.fill(0.0);
    for (g, &i) in dout.iter().zip(argmax) {
        dinput[i as usize] += g;
    }
}

/// `out = W·x + b` for `W` of shape `(n_out, n_in)`.
pub(crate) fn dense_forward(x: &[f64], weight: &[f64], bias: &[f64], out: &mut [f64]) {
    let n_in = x.len();
    for (o, y) in out.iter_mut().enumerate() {
        let row = &weight[o * n_in..(o + 1) * n_in];
        *y = bias[o] + dot(row, x);
    }
}

pub(crate) fn dense_backward(
    x: &[f64],
    weight: &[f64],
    dout: &[f64],
    dweight: &mut [f64],
    dbias: &mut [f64],
    dx: &mut [f64],
) {
    let n_in = x.len();
    dx.fill(0.0);
    for (o, &g) in dout.iter().enumerate() {
        dbias[o] += g;
        let row = &weight[o * n_in..(o + 1) * n_in];
        let drow = &mut dweight[o * n_in..(o + 1) * n_in];
        for i in 0..n_in {
            drow[i] += g * x[i];
            dx[i] += g * row[i];
        }
    }
}

/// Dot product with four independent accumulators.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * i + l] * b[4 * i + l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}
