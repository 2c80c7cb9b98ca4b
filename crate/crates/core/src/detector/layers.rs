//! Forward and backward kernels. Activations are flat `Vec<f64>` in
//! `[plane][row][col]` order; weight matrices are row-major.

use super::spec::{LayerPlan, KERNEL};

pub(crate) fn elu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        z.exp_m1()
    }
}

/// dELU/dz written in terms of z.
pub(crate) fn elu_grad(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        z.exp()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Zero-pads each `h x w` plane by the plan's padding.
pub(crate) fn pad(x: &[f64], planes: usize, plan: &LayerPlan) -> Vec<f64> {
    let (h, w) = (plan.in_h, plan.in_w);
    let (hp, wp) = (h + 2 * plan.pad_h, w + 2 * plan.pad_w);
    if plan.pad_h == 0 && plan.pad_w == 0 {
        return x.to_vec();
    }
    let mut out = vec![0.0; planes * hp * wp];
    for p in 0..planes {
        for r in 0..h {
            let src = &x[(p * h + r) * w..(p * h + r + 1) * w];
            let dst = (p * hp + r + plan.pad_h) * wp + plan.pad_w;
            out[dst..dst + w].copy_from_slice(src);
        }
    }
    out
}

/// 3x3 convolution (cross-correlation) of a padded input.
/// `weights` is `[out][in][3][3]`; output is `[out][conv_h][conv_w]`.
pub(crate) fn conv_forward(
    padded: &[f64],
    cin: usize,
    cout: usize,
    plan: &LayerPlan,
    weights: &[f64],
    bias: &[f64],
) -> Vec<f64> {
    let wp = plan.in_w + 2 * plan.pad_w;
    let hp = plan.in_h + 2 * plan.pad_h;
    let (oh, ow) = (plan.conv_h, plan.conv_w);
    let mut out = vec![0.0; cout * oh * ow];
    for o in 0..cout {
        let plane = &mut out[o * oh * ow..(o + 1) * oh * ow];
        plane.fill(bias[o]);
        for i in 0..cin {
            let src = &padded[i * hp * wp..(i + 1) * hp * wp];
            let kern = &weights[(o * cin + i) * KERNEL * KERNEL..(o * cin + i + 1) * KERNEL * KERNEL];
            for ky in 0..KERNEL {
                for kx in 0..KERNEL {
                    let k = kern[ky * KERNEL + kx];
                    for y in 0..oh {
                        let row = &src[(y + ky) * wp + kx..(y + ky) * wp + kx + ow];
                        let dst = &mut plane[y * ow..(y + 1) * ow];
                        for (d, s) in dst.iter_mut().zip(row) {
                            *d += k * s;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Accumulates weight/bias gradients and, when `dpadded` is given, the
/// gradient with respect to the padded input.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_backward(
    padded: &[f64],
    cin: usize,
    cout: usize,
    plan: &LayerPlan,
    weights: &[f64],
    dz: &[f64],
    dweights: &mut [f64],
    dbias: &mut [f64],
    mut dpadded: Option<&mut [f64]>,
) {
    let wp = plan.in_w + 2 * plan.pad_w;
    let hp = plan.in_h + 2 * plan.pad_h;
    let (oh, ow) = (plan.conv_h, plan.conv_w);
    for o in 0..cout {
        let g = &dz[o * oh * ow..(o + 1) * oh * ow];
        dbias[o] += g.iter().sum::<f64>();
        for i in 0..cin {
            let src = &padded[i * hp * wp..(i + 1) * hp * wp];
            let base = (o * cin + i) * KERNEL * KERNEL;
            for ky in 0..KERNEL {
                for kx in 0..KERNEL {
                    let mut acc = 0.0;
                    for y in 0..oh {
                        let row = &src[(y + ky) * wp + kx..(y + ky) * wp + kx + ow];
                        acc += g[y * ow..(y + 1) * ow].iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
                    }
                    dweights[base + ky * KERNEL + kx] += acc;
                    if let Some(dx) = dpadded.as_deref_mut() {
                        let k = weights[base + ky * KERNEL + kx];
                        let dst = &mut dx[i * hp * wp..(i + 1) * hp * wp];
                        for y in 0..oh {
                            let d = &mut dst[(y + ky) * wp + kx..(y + ky) * wp + kx + ow];
                            for (dd, gg) in d.iter_mut().zip(&g[y * ow..(y + 1) * ow]) {
                                *dd += k * gg;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Strips the padding from a padded-input gradient.
pub(crate) fn unpad(dpadded: &[f64], planes: usize, plan: &LayerPlan) -> Vec<f64> {
    let (h, w) = (plan.in_h, plan.in_w);
    let (hp, wp) = (h + 2 * plan.pad_h, w + 2 * plan.pad_w);
    if plan.pad_h == 0 && plan.pad_w == 0 {
        return dpadded.to_vec();
    }
    let mut out = vec![0.0; planes * h * w];
    for p in 0..planes {
        for r in 0..h {
            let src = (p * hp + r + plan.pad_h) * wp + plan.pad_w;
            out[(p * h + r) * w..(p * h + r + 1) * w].copy_from_slice(&dpadded[src..src + w]);
        }
    }
    out
}

/// Max pooling with per-axis window sizes and floor semantics. Returns the
/// pooled planes and, for each output, the flat index of the winning input.
pub(crate) fn maxpool_forward(x: &[f64], planes: usize, plan: &LayerPlan) -> (Vec<f64>, Vec<usize>) {
    let (h, w) = (plan.conv_h, plan.conv_w);
    let (oh, ow) = (plan.out_h, plan.out_w);
    let mut out = Vec::with_capacity(planes * oh * ow);
    let mut arg = Vec::with_capacity(planes * oh * ow);
    for p in 0..planes {
        for y in 0..oh {
            for xo in 0..ow {
                let mut best = f64::NEG_INFINITY;
                let mut best_i = 0;
                for dy in 0..plan.pool_h {
                    for dx in 0..plan.pool_w {
                        let i = (p * h + y * plan.pool_h + dy) * w + xo * plan.pool_w + dx;
                        if x[i] > best || (dy == 0 && dx == 0) {
                            best = x[i];
                            best_i = i;
                        }
                    }
                }
                out.push(best);
                arg.push(best_i);
            }
        }
    }
    (out, arg)
}

pub(crate) fn maxpool_backward(dout: &[f64], arg: &[usize], input_len: usize) -> Vec<f64> {
    let mut dx = vec![0.0; input_len];
    for (g, &i) in dout.iter().zip(arg) {
        dx[i] += g;
    }
    dx
}

/// `y = W x + b` with `W` of shape `[rows][x.len()]`.
pub(crate) fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    b.iter()
        .enumerate()
        .map(|(r, bias)| bias + w[r * n..(r + 1) * n].iter().zip(x).map(|(a, c)| a * c).sum::<f64>())
        .collect()
}

/// Accumulates `dW += dy x^T`, `db += dy` and returns `W^T dy`.
pub(crate) fn affine_backward(w: &[f64], x: &[f64], dy: &[f64], dw: &mut [f64], db: &mut [f64]) -> Vec<f64> {
    let n = x.len();
    let mut dx = vec![0.0; n];
    for (r, &g) in dy.iter().enumerate() {
        db[r] += g;
        if g == 0.0 {
            continue;
        }
        let row = &w[r * n..(r + 1) * n];
        let drow = &mut dw[r * n..(r + 1) * n];
        for j in 0..n {
            drow[j] += g * x[j];
            dx[j] += g * row[j];
        }
    }
    dx
}

/// Gate activations and states of one LSTM direction, stored in processing order.
pub(crate) struct LstmCache {
    /// Input time index for each processing step.
    pub order: Vec<usize>,
    pub i: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
    pub o: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
}

pub(crate) struct LstmParams<'a> {
    /// `[4H][in]`, gate order i, f, g, o.
    pub wx: &'a [f64],
    /// `[4H][H]`.
    pub wh: &'a [f64],
    /// `[4H]`.
    pub b: &'a [f64],
    pub hidden: usize,
}

pub(crate) fn lstm_forward(p: &LstmParams, xs: &[Vec<f64>], reverse: bool) -> LstmCache {
    let hsz = p.hidden;
    let order: Vec<usize> = if reverse {
        (0..xs.len()).rev().collect()
    } else {
        (0..xs.len()).collect()
    };
    let mut cache = LstmCache {
        order: order.clone(),
        i: Vec::new(),
        f: Vec::new(),
        g: Vec::new(),
        o: Vec::new(),
        c: Vec::new(),
        h: Vec::new(),
    };
    let mut h_prev = vec![0.0; hsz];
    let mut c_prev = vec![0.0; hsz];
    for &t in &order {
        let mut pre = affine(p.wx, p.b, &xs[t]);
        let rec = affine(p.wh, &vec![0.0; 4 * hsz], &h_prev);
        for (a, r) in pre.iter_mut().zip(rec) {
            *a += r;
        }
        let i: Vec<f64> = pre[..hsz].iter().map(|&z| sigmoid(z)).collect();
        let f: Vec<f64> = pre[hsz..2 * hsz].iter().map(|&z| sigmoid(z)).collect();
        let g: Vec<f64> = pre[2 * hsz..3 * hsz].iter().map(|&z| z.tanh()).collect();
        let o: Vec<f64> = pre[3 * hsz..].iter().map(|&z| sigmoid(z)).collect();
        let c: Vec<f64> = (0..hsz).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
        let h: Vec<f64> = (0..hsz).map(|k| o[k] * c[k].tanh()).collect();
        h_prev.clone_from(&h);
        c_prev.clone_from(&c);
        cache.i.push(i);
        cache.f.push(f);
        cache.g.push(g);
        cache.o.push(o);
        cache.c.push(c);
        cache.h.push(h);
    }
    cache
}

/// Backpropagation through time. `dh` is indexed by input time; gradients
/// with respect to the inputs are added into `dxs`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn lstm_backward(
    p: &LstmParams,
    xs: &[Vec<f64>],
    cache: &LstmCache,
    dh: &[Vec<f64>],
    dwx: &mut [f64],
    dwh: &mut [f64],
    db: &mut [f64],
    dxs: &mut [Vec<f64>],
) {
    let hsz = p.hidden;
    let steps = cache.order.len();
    let mut dh_next = vec![0.0; hsz];
    let mut dc_next = vec![0.0; hsz];
    let zeros = vec![0.0; hsz];
    for s in (0..steps).rev() {
        let t = cache.order[s];
        let c_prev = if s > 0 { &cache.c[s - 1] } else { &zeros };
        let h_prev = if s > 0 { &cache.h[s - 1] } else { &zeros };
        let (i, f, g, o, c) = (&cache.i[s], &cache.f[s], &cache.g[s], &cache.o[s], &cache.c[s]);
        let mut dpre = vec![0.0; 4 * hsz];
        for k in 0..hsz {
            let dhk = dh[t][k] + dh_next[k];
            let tc = c[k].tanh();
            let dc = dhk * o[k] * (1.0 - tc * tc) + dc_next[k];
            dpre[k] = dc * g[k] * i[k] * (1.0 - i[k]);
            dpre[hsz + k] = dc * c_prev[k] * f[k] * (1.0 - f[k]);
            dpre[2 * hsz + k] = dc * i[k] * (1.0 - g[k] * g[k]);
            dpre[3 * hsz + k] = dhk * tc * o[k] * (1.0 - o[k]);
            dc_next[k] = dc * f[k];
        }
        let dx = affine_backward(p.wx, &xs[t], &dpre, dwx, db);
        for (a, b) in dxs[t].iter_mut().zip(dx) {
            *a += b;
        }
        let mut scratch = vec![0.0; 4 * hsz];
        dh_next = affine_backward(p.wh, h_prev, &dpre, dwh, &mut scratch);
    }
}
