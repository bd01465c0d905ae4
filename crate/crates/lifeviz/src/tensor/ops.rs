//! Differentiable operations. Image tensors are `[batch, channels, height,
//! width]`; losses reduce to shape `[1]`.
//!
//! Convolutions use circular padding so the receptive field wraps at the
//! grid edges, matching the toroidal Game of Life boundary.

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

const BCE_EPS: f64 = 1e-7;

/// `out[x] += w * src[(x + offset) % W]` with `offset` already reduced mod W.
#[inline]
fn shifted_row_axpy<S: Scalar>(out: &mut [S], src: &[S], w: S, offset: usize) {
    let width = out.len();
    let split = width - offset;
    for (o, s) in out[..split].iter_mut().zip(&src[offset..]) {
        *o = *o + w * *s;
    }
    for (o, s) in out[split..].iter_mut().zip(&src[..offset]) {
        *o = *o + w * *s;
    }
}

/// `sum_x a[x] * src[(x + offset) % W]` with `offset` already reduced mod W.
#[inline]
fn shifted_row_dot<S: Scalar>(a: &[S], src: &[S], offset: usize) -> S {
    let width = a.len();
    let split = width - offset;
    let mut acc = S::zero();
    for (x, s) in a[..split].iter().zip(&src[offset..]) {
        acc = acc + *x * *s;
    }
    for (x, s) in a[split..].iter().zip(&src[..offset]) {
        acc = acc + *x * *s;
    }
    acc
}

fn check_image(t: &Tensor<impl Scalar>, what: &str) -> Result<(usize, usize, usize, usize)> {
    let s = t.shape();
    if s.len() != 4 {
        return Err(Error::shape(format!("{what} of rank 4 [B,C,H,W]"), format!("{s:?}")));
    }
    Ok((s[0], s[1], s[2], s[3]))
}

/// 2-D cross-correlation with circular padding. `input` is `[B,Cin,H,W]`,
/// `kernel` `[Cout,Cin,k,k]` with odd `k`, `bias` `[Cout]`. Spatial size is
/// preserved. Differentiable with respect to all three inputs.
pub fn conv2d_circular<S: Scalar>(
    input: &Tensor<S>,
    kernel: &Tensor<S>,
    bias: &Tensor<S>,
) -> Result<Tensor<S>> {
    let (batch, cin, height, width) = check_image(input, "input")?;
    let ks = kernel.shape();
    if ks.len() != 4 || ks[2] != ks[3] {
        return Err(Error::shape("kernel [Cout,Cin,k,k]", format!("{ks:?}")));
    }
    let (cout, kcin, k) = (ks[0], ks[1], ks[2]);
    if kcin != cin {
        return Err(Error::shape(format!("kernel Cin {cin}"), format!("{kcin}")));
    }
    if k % 2 == 0 {
        return Err(Error::invalid(format!("kernel size must be odd, got {k}")));
    }
    if k > height || k > width {
        return Err(Error::invalid("kernel larger than the image"));
    }
    if bias.shape() != [cout] {
        return Err(Error::shape(format!("bias [{cout}]"), format!("{:?}", bias.shape())));
    }

    let plane = height * width;
    let out_data = {
        let x = input.data();
        let w = kernel.data();
        let b = bias.data();
        conv_forward(&x, &w, &b, batch, cin, cout, height, width, k)
    };

    let in_t = input.clone();
    let ker_t = kernel.clone();
    let need = [
        input.0.needs_grad,
        kernel.0.needs_grad,
        bias.0.needs_grad,
    ];
    let op = move |gout: &[S]| -> Vec<Vec<S>> {
        let x = in_t.data();
        let w = ker_t.data();
        let p = k / 2;
        let mut din = Vec::new();
        let mut dker = Vec::new();
        let mut dbias = Vec::new();
        if need[0] {
            din = vec![S::zero(); batch * cin * plane];
            for b in 0..batch {
                for ci in 0..cin {
                    let dst = &mut din[(b * cin + ci) * plane..(b * cin + ci + 1) * plane];
                    for co in 0..cout {
                        let gsrc = &gout[(b * cout + co) * plane..(b * cout + co + 1) * plane];
                        let wbase = (co * cin + ci) * k * k;
                        for ky in 0..k {
                            for kx in 0..k {
                                let wv = w[wbase + ky * k + kx];
                                if wv == S::zero() {
                                    continue;
                                }
                                let dy = (p as isize - ky as isize).rem_euclid(height as isize)
                                    as usize;
                                let dx = (p as isize - kx as isize).rem_euclid(width as isize)
                                    as usize;
                                for y in 0..height {
                                    let sy = (y + dy) % height;
                                    shifted_row_axpy(
                                        &mut dst[y * width..(y + 1) * width],
                                        &gsrc[sy * width..(sy + 1) * width],
                                        wv,
                                        dx,
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
        if need[1] {
            dker = vec![S::zero(); cout * cin * k * k];
            for b in 0..batch {
                for co in 0..cout {
                    let gsrc = &gout[(b * cout + co) * plane..(b * cout + co + 1) * plane];
                    for ci in 0..cin {
                        let xsrc = &x[(b * cin + ci) * plane..(b * cin + ci + 1) * plane];
                        let wbase = (co * cin + ci) * k * k;
                        for ky in 0..k {
                            let dy = (ky as isize - p as isize).rem_euclid(height as isize) as usize;
                            for kx in 0..k {
                                let dx =
                                    (kx as isize - p as isize).rem_euclid(width as isize) as usize;
                                let mut acc = S::zero();
                                for y in 0..height {
                                    let sy = (y + dy) % height;
                                    acc = acc
                                        + shifted_row_dot(
                                            &gsrc[y * width..(y + 1) * width],
                                            &xsrc[sy * width..(sy + 1) * width],
                                            dx,
                                        );
                                }
                                dker[wbase + ky * k + kx] = dker[wbase + ky * k + kx] + acc;
                            }
                        }
                    }
                }
            }
        }
        if need[2] {
            dbias = vec![S::zero(); cout];
            for b in 0..batch {
                for co in 0..cout {
                    let gsrc = &gout[(b * cout + co) * plane..(b * cout + co + 1) * plane];
                    let mut acc = S::zero();
                    for g in gsrc {
                        acc = acc + *g;
                    }
                    dbias[co] = dbias[co] + acc;
                }
            }
        }
        vec![din, dker, dbias]
    };

    Ok(Tensor::from_op(
        vec![batch, cout, height, width],
        out_data,
        vec![input.clone(), kernel.clone(), bias.clone()],
        Box::new(op),
    ))
}

#[allow(clippy::too_many_arguments)]
fn conv_forward<S: Scalar>(
    x: &[S],
    w: &[S],
    b: &[S],
    batch: usize,
    cin: usize,
    cout: usize,
    height: usize,
    width: usize,
    k: usize,
) -> Vec<S> {
    let plane = height * width;
    let p = k / 2;
    let mut out = vec![S::zero(); batch * cout * plane];
    for bi in 0..batch {
        for co in 0..cout {
            let dst = &mut out[(bi * cout + co) * plane..(bi * cout + co + 1) * plane];
            let bv = b[co];
            if bv != S::zero() {
                for o in dst.iter_mut() {
                    *o = bv;
                }
            }
            for ci in 0..cin {
                let src = &x[(bi * cin + ci) * plane..(bi * cin + ci + 1) * plane];
                let wbase = (co * cin + ci) * k * k;
                for ky in 0..k {
                    let dy = (ky as isize - p as isize).rem_euclid(height as isize) as usize;
                    for kx in 0..k {
                        let wv = w[wbase + ky * k + kx];
                        if wv == S::zero() {
                            continue;
                        }
                        let dx = (kx as isize - p as isize).rem_euclid(width as isize) as usize;
                        for y in 0..height {
                            let sy = (y + dy) % height;
                            shifted_row_axpy(
                                &mut dst[y * width..(y + 1) * width],
                                &src[sy * width..(sy + 1) * width],
                                wv,
                                dx,
                            );
                        }
                    }
                }
            }
        }
    }
    out
}

/// Elementwise `max(0, x)`; the subgradient at 0 is taken as 0.
pub fn relu<S: Scalar>(x: &Tensor<S>) -> Result<Tensor<S>> {
    let data: Vec<S> = x.data().iter().map(|&v| v.max(S::zero())).collect();
    let xt = x.clone();
    let op = move |g: &[S]| -> Vec<Vec<S>> {
        let xd = xt.data();
        vec![g
            .iter()
            .zip(xd.iter())
            .map(|(&gv, &xv)| if xv > S::zero() { gv } else { S::zero() })
            .collect()]
    };
    Ok(Tensor::from_op(
        x.shape().to_vec(),
        data,
        vec![x.clone()],
        Box::new(op),
    ))
}

/// Elementwise logistic function.
pub fn sigmoid<S: Scalar>(x: &Tensor<S>) -> Result<Tensor<S>> {
    let data: Vec<S> = x
        .data()
        .iter()
        .map(|&v| S::one() / (S::one() + (-v).exp()))
        .collect();
    let saved = data.clone();
    let op = move |g: &[S]| -> Vec<Vec<S>> {
        vec![g
            .iter()
            .zip(saved.iter())
            .map(|(&gv, &s)| gv * s * (S::one() - s))
            .collect()]
    };
    Ok(Tensor::from_op(
        x.shape().to_vec(),
        data,
        vec![x.clone()],
        Box::new(op),
    ))
}

fn check_same_shape<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(format!("{:?}", a.shape()), format!("{:?}", b.shape())));
    }
    Ok(())
}

/// Mean squared error over all elements.
pub fn mse_loss<S: Scalar>(pred: &Tensor<S>, target: &Tensor<S>) -> Result<Tensor<S>> {
    check_same_shape(pred, target)?;
    let n = S::from_f64(pred.numel() as f64);
    let loss = {
        let p = pred.data();
        let t = target.data();
        let mut acc = S::zero();
        for (&pv, &tv) in p.iter().zip(t.iter()) {
            let d = pv - tv;
            acc = acc + d * d;
        }
        acc / n
    };
    let pt = pred.clone();
    let tt = target.clone();
    let need = [pred.0.needs_grad, target.0.needs_grad];
    let op = move |g: &[S]| -> Vec<Vec<S>> {
        let g0 = g[0];
        let p = pt.data();
        let t = tt.data();
        let two = S::from_f64(2.0);
        let mk = |sign: S| -> Vec<S> {
            p.iter()
                .zip(t.iter())
                .map(|(&pv, &tv)| sign * two * (pv - tv) / n * g0)
                .collect()
        };
        vec![
            if need[0] { mk(S::one()) } else { Vec::new() },
            if need[1] { mk(-S::one()) } else { Vec::new() },
        ]
    };
    Ok(Tensor::from_op(
        vec![1],
        vec![loss],
        vec![pred.clone(), target.clone()],
        Box::new(op),
    ))
}

/// Mean binary cross-entropy. Probabilities are clamped to
/// `[1e-7, 1 - 1e-7]`; the gradient is zero where the clamp is active.
pub fn bce_loss<S: Scalar>(prob: &Tensor<S>, label: &Tensor<S>) -> Result<Tensor<S>> {
    check_same_shape(prob, label)?;
    let n = S::from_f64(prob.numel() as f64);
    let eps = S::from_f64(BCE_EPS);
    let one = S::one();
    let clamp = move |v: S| v.max(eps).min(one - eps);
    let loss = {
        let p = prob.data();
        let y = label.data();
        let mut acc = S::zero();
        for (&pv, &yv) in p.iter().zip(y.iter()) {
            let pc = clamp(pv);
            acc = acc - (yv * pc.ln() + (one - yv) * (one - pc).ln());
        }
        acc / n
    };
    let pt = prob.clone();
    let yt = label.clone();
    let need = [prob.0.needs_grad, label.0.needs_grad];
    let op = move |g: &[S]| -> Vec<Vec<S>> {
        let g0 = g[0];
        let p = pt.data();
        let y = yt.data();
        let dprob = if need[0] {
            p.iter()
                .zip(y.iter())
                .map(|(&pv, &yv)| {
                    if pv <= eps || pv >= one - eps {
                        S::zero()
                    } else {
                        g0 * (pv - yv) / (pv * (one - pv) * n)
                    }
                })
                .collect()
        } else {
            Vec::new()
        };
        let dlabel = if need[1] {
            p.iter()
                .zip(y.iter())
                .map(|(&pv, _)| {
                    let pc = clamp(pv);
                    g0 * ((one - pc).ln() - pc.ln()) / n
                })
                .collect()
        } else {
            Vec::new()
        };
        vec![dprob, dlabel]
    };
    Ok(Tensor::from_op(
        vec![1],
        vec![loss],
        vec![prob.clone(), label.clone()],
        Box::new(op),
    ))
}

/// Fully connected layer: `input [B,F] x weight [O,F] + bias [O] -> [B,O]`.
pub fn dense<S: Scalar>(
    input: &Tensor<S>,
    weight: &Tensor<S>,
    bias: &Tensor<S>,
) -> Result<Tensor<S>> {
    let is = input.shape();
    let ws = weight.shape();
    if is.len() != 2 || ws.len() != 2 || is[1] != ws[1] {
        return Err(Error::shape("input [B,F] and weight [O,F]", format!("{is:?} x {ws:?}")));
    }
    let (b, f, o) = (is[0], is[1], ws[0]);
    if bias.shape() != [o] {
        return Err(Error::shape(format!("bias [{o}]"), format!("{:?}", bias.shape())));
    }
    let out = {
        let x = input.data();
        let w = weight.data();
        let bv = bias.data();
        let mut out = vec![S::zero(); b * o];
        for bi in 0..b {
            for oi in 0..o {
                let mut acc = bv[oi];
                for fi in 0..f {
                    acc = acc + x[bi * f + fi] * w[oi * f + fi];
                }
                out[bi * o + oi] = acc;
            }
        }
        out
    };
    let xt = input.clone();
    let wt = weight.clone();
    let need = [input.0.needs_grad, weight.0.needs_grad, bias.0.needs_grad];
    let op = move |g: &[S]| -> Vec<Vec<S>> {
        let x = xt.data();
        let w = wt.data();
        let din = if need[0] {
            let mut d = vec![S::zero(); b * f];
            for bi in 0..b {
                for oi in 0..o {
                    let gv = g[bi * o + oi];
                    for fi in 0..f {
                        d[bi * f + fi] = d[bi * f + fi] + gv * w[oi * f + fi];
                    }
                }
            }
            d
        } else {
            Vec::new()
        };
        let dw = if need[1] {
            let mut d = vec![S::zero(); o * f];
            for bi in 0..b {
                for oi in 0..o {
                    let gv = g[bi * o + oi];
                    for fi in 0..f {
                        d[oi * f + fi] = d[oi * f + fi] + gv * x[bi * f + fi];
                    }
                }
            }
            d
        } else {
            Vec::new()
        };
        let db = if need[2] {
            let mut d = vec![S::zero(); o];
            for bi in 0..b {
                for oi in 0..o {
                    d[oi] = d[oi] + g[bi * o + oi];
                }
            }
            d
        } else {
            Vec::new()
        };
        vec![din, dw, db]
    };
    Ok(Tensor::from_op(
        vec![b, o],
        out,
        vec![input.clone(), weight.clone(), bias.clone()],
        Box::new(op),
    ))
}

/// Spatial mean per channel: `[B,C,H,W] -> [B,C]`.
pub fn global_mean_pool<S: Scalar>(x: &Tensor<S>) -> Result<Tensor<S>> {
    let (b, c, h, w) = check_image(x, "input")?;
    let plane = h * w;
    let inv = S::from_f64(1.0 / plane as f64);
    let out = {
        let d = x.data();
        let mut out = vec![S::zero(); b * c];
        for i in 0..b * c {
            let mut acc = S::zero();
            for v in &d[i * plane..(i + 1) * plane] {
                acc = acc + *v;
            }
            out[i] = acc * inv;
        }
        out
    };
    let op = move |g: &[S]| -> Vec<Vec<S>> {
        let mut d = vec![S::zero(); b * c * plane];
        for i in 0..b * c {
            let gv = g[i] * inv;
            for v in &mut d[i * plane..(i + 1) * plane] {
                *v = gv;
            }
        }
        vec![d]
    };
    Ok(Tensor::from_op(
        vec![b, c],
        out,
        vec![x.clone()],
        Box::new(op),
    ))
}

/// Elementwise sum of two tensors of identical shape.
pub fn add<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>> {
    check_same_shape(a, b)?;
    let data: Vec<S> = a
        .data()
        .iter()
        .zip(b.data().iter())
        .map(|(&x, &y)| x + y)
        .collect();
    let need = [a.0.needs_grad, b.0.needs_grad];
    let op = move |g: &[S]| -> Vec<Vec<S>> {
        vec![
            if need[0] { g.to_vec() } else { Vec::new() },
            if need[1] { g.to_vec() } else { Vec::new() },
        ]
    };
    Ok(Tensor::from_op(
        a.shape().to_vec(),
        data,
        vec![a.clone(), b.clone()],
        Box::new(op),
    ))
}

/// Elementwise product of two same-shape tensors; gradients follow the
/// product rule for both inputs.
pub fn mul<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>> {
    check_same_shape(a, b)?;
    let data: Vec<S> = a
        .data()
        .iter()
        .zip(b.data().iter())
        .map(|(&x, &y)| x * y)
        .collect();
    let need = [a.0.needs_grad, b.0.needs_grad];
    let (av, bv) = (a.data().to_vec(), b.data().to_vec());
    let op = move |g: &[S]| -> Vec<Vec<S>> {
        vec![
            if need[0] {
                g.iter().zip(bv.iter()).map(|(&gv, &y)| gv * y).collect()
            } else {
                Vec::new()
            },
            if need[1] {
                g.iter().zip(av.iter()).map(|(&gv, &x)| gv * x).collect()
            } else {
                Vec::new()
            },
        ]
    };
    Ok(Tensor::from_op(
        a.shape().to_vec(),
        data,
        vec![a.clone(), b.clone()],
        Box::new(op),
    ))
}

/// Multiplies every element by a constant.
pub fn scale<S: Scalar>(x: &Tensor<S>, c: S) -> Result<Tensor<S>> {
    let data: Vec<S> = x.data().iter().map(|&v| v * c).collect();
    let op = move |g: &[S]| -> Vec<Vec<S>> { vec![g.iter().map(|&gv| gv * c).collect()] };
    Ok(Tensor::from_op(
        x.shape().to_vec(),
        data,
        vec![x.clone()],
        Box::new(op),
    ))
}

/// Mean over all elements, reducing to a scalar.
pub fn mean_all<S: Scalar>(x: &Tensor<S>) -> Result<Tensor<S>> {
    let n = S::from_f64(x.numel() as f64);
    let mut acc = S::zero();
    for v in x.data().iter() {
        acc = acc + *v;
    }
    let numel = x.numel();
    let op = move |g: &[S]| -> Vec<Vec<S>> { vec![vec![g[0] / n; numel]] };
    Ok(Tensor::from_op(
        vec![1],
        vec![acc / n],
        vec![x.clone()],
        Box::new(op),
    ))
}
