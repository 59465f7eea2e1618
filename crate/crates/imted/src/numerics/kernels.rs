//! Dense compute kernels shared by the tape's forward and backward passes.
//!
//! All kernels take flat row-major slices plus explicit dims. No SIMD, no
//! threading — sizes here are small and clarity wins.

use super::tensor::Elem;

/// C[m,n] += A[m,k] @ B[k,n]
pub fn matmul_acc<T: Elem>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        for p in 0..k {
            let a_ip = a[i * k + p];
            if a_ip == T::zero() {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += a_ip * brow[j];
            }
        }
    }
}

pub fn matmul<T: Elem>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); m * n];
    matmul_acc(a, b, &mut out, m, k, n);
    out
}

/// Transpose of a row-major [r, c] matrix.
pub fn transpose2d<T: Elem>(a: &[T], r: usize, c: usize) -> Vec<T> {
    let mut out = vec![T::zero(); r * c];
    for i in 0..r {
        for j in 0..c {
            out[j * r + i] = a[i * c + j];
        }
    }
    out
}

pub fn conv2d_out_hw(h: usize, w: usize, kh: usize, kw: usize, stride: usize, pad: usize) -> (usize, usize) {
    ((h + 2 * pad - kh) / stride + 1, (w + 2 * pad - kw) / stride + 1)
}

/// x: [C,H,W], w: [O,C,kh,kw], bias: [O] -> [O,Ho,Wo]
pub fn conv2d<T: Elem>(
    x: &[T],
    w: &[T],
    bias: Option<&[T]>,
    c: usize,
    h: usize,
    wd: usize,
    o: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
) -> Vec<T> {
    let (ho, wo) = conv2d_out_hw(h, wd, kh, kw, stride, pad);
    let mut out = vec![T::zero(); o * ho * wo];
    for oc in 0..o {
        let b = bias.map_or(T::zero(), |b| b[oc]);
        for oy in 0..ho {
            for ox in 0..wo {
                let mut acc = b;
                for ic in 0..c {
                    for ky in 0..kh {
                        let iy = (oy * stride + ky) as isize - pad as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..kw {
                            let ix = (ox * stride + kx) as isize - pad as isize;
                            if ix < 0 || ix >= wd as isize {
                                continue;
                            }
                            acc += x[(ic * h + iy as usize) * wd + ix as usize]
                                * w[((oc * c + ic) * kh + ky) * kw + kx];
                        }
                    }
                }
                out[(oc * ho + oy) * wo + ox] = acc;
            }
        }
    }
    out
}

/// Gradients of conv2d w.r.t. input, weight and bias.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_backward<T: Elem>(
    x: &[T],
    w: &[T],
    gout: &[T],
    c: usize,
    h: usize,
    wd: usize,
    o: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    want_bias: bool,
) -> (Vec<T>, Vec<T>, Option<Vec<T>>) {
    let (ho, wo) = conv2d_out_hw(h, wd, kh, kw, stride, pad);
    let mut gx = vec![T::zero(); c * h * wd];
    let mut gw = vec![T::zero(); o * c * kh * kw];
    let mut gb = if want_bias { Some(vec![T::zero(); o]) } else { None };
    for oc in 0..o {
        for oy in 0..ho {
            for ox in 0..wo {
                let g = gout[(oc * ho + oy) * wo + ox];
                if let Some(gb) = gb.as_mut() {
                    gb[oc] += g;
                }
                if g == T::zero() {
                    continue;
                }
                for ic in 0..c {
                    for ky in 0..kh {
                        let iy = (oy * stride + ky) as isize - pad as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..kw {
                            let ix = (ox * stride + kx) as isize - pad as isize;
                            if ix < 0 || ix >= wd as isize {
                                continue;
                            }
                            let xi = (ic * h + iy as usize) * wd + ix as usize;
                            let wi = ((oc * c + ic) * kh + ky) * kw + kx;
                            gx[xi] += g * w[wi];
                            gw[wi] += g * x[xi];
                        }
                    }
                }
            }
        }
    }
    (gx, gw, gb)
}

pub fn convt2d_out_hw(h: usize, w: usize, kh: usize, kw: usize, stride: usize, pad: usize) -> (usize, usize) {
    ((h - 1) * stride + kh - 2 * pad, (w - 1) * stride + kw - 2 * pad)
}

/// Transposed convolution. x: [C,H,W], w: [C,O,kh,kw] -> [O,Ho,Wo]
#[allow(clippy::too_many_arguments)]
pub fn conv_transpose2d<T: Elem>(
    x: &[T],
    w: &[T],
    bias: Option<&[T]>,
    c: usize,
    h: usize,
    wd: usize,
    o: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
) -> Vec<T> {
    let (ho, wo) = convt2d_out_hw(h, wd, kh, kw, stride, pad);
    let mut out = vec![T::zero(); o * ho * wo];
    if let Some(b) = bias {
        for oc in 0..o {
            for v in &mut out[oc * ho * wo..(oc + 1) * ho * wo] {
                *v = b[oc];
            }
        }
    }
    for ic in 0..c {
        for y in 0..h {
            for xx in 0..wd {
                let xv = x[(ic * h + y) * wd + xx];
                if xv == T::zero() {
                    continue;
                }
                for oc in 0..o {
                    for ky in 0..kh {
                        let oy = (y * stride + ky) as isize - pad as isize;
                        if oy < 0 || oy >= ho as isize {
                            continue;
                        }
                        for kx in 0..kw {
                            let ox = (xx * stride + kx) as isize - pad as isize;
                            if ox < 0 || ox >= wo as isize {
                                continue;
                            }
                            out[(oc * ho + oy as usize) * wo + ox as usize]
                                += xv * w[((ic * o + oc) * kh + ky) * kw + kx];
                        }
                    }
                }
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub fn conv_transpose2d_backward<T: Elem>(
    x: &[T],
    w: &[T],
    gout: &[T],
    c: usize,
    h: usize,
    wd: usize,
    o: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    want_bias: bool,
) -> (Vec<T>, Vec<T>, Option<Vec<T>>) {
    let (ho, wo) = convt2d_out_hw(h, wd, kh, kw, stride, pad);
    let mut gx = vec![T::zero(); c * h * wd];
    let mut gw = vec![T::zero(); c * o * kh * kw];
    let gb = if want_bias {
        let mut gb = vec![T::zero(); o];
        for oc in 0..o {
            gb[oc] = gout[oc * ho * wo..(oc + 1) * ho * wo].iter().copied().sum();
        }
        Some(gb)
    } else {
        None
    };
    for ic in 0..c {
        for y in 0..h {
            for xx in 0..wd {
                let xi = (ic * h + y) * wd + xx;
                let xv = x[xi];
                for oc in 0..o {
                    for ky in 0..kh {
                        let oy = (y * stride + ky) as isize - pad as isize;
                        if oy < 0 || oy >= ho as isize {
                            continue;
                        }
                        for kx in 0..kw {
                            let ox = (xx * stride + kx) as isize - pad as isize;
                            if ox < 0 || ox >= wo as isize {
                                continue;
                            }
                            let g = gout[(oc * ho + oy as usize) * wo + ox as usize];
                            let wi = ((ic * o + oc) * kh + ky) * kw + kx;
                            gx[xi] += g * w[wi];
                            gw[wi] += g * xv;
                        }
                    }
                }
            }
        }
    }
    (gx, gw, gb)
}

/// Nearest-neighbour 2x upsample of [C,H,W].
pub fn upsample_nearest_2x<T: Elem>(x: &[T], c: usize, h: usize, w: usize) -> Vec<T> {
    let mut out = vec![T::zero(); c * 4 * h * w];
    let (ho, wo) = (2 * h, 2 * w);
    for ic in 0..c {
        for y in 0..ho {
            for xx in 0..wo {
                out[(ic * ho + y) * wo + xx] = x[(ic * h + y / 2) * w + xx / 2];
            }
        }
    }
    out
}

pub fn upsample_nearest_2x_backward<T: Elem>(gout: &[T], c: usize, h: usize, w: usize) -> Vec<T> {
    let mut gx = vec![T::zero(); c * h * w];
    let (ho, wo) = (2 * h, 2 * w);
    for ic in 0..c {
        for y in 0..ho {
            for xx in 0..wo {
                gx[(ic * h + y / 2) * w + xx / 2] += gout[(ic * ho + y) * wo + xx];
            }
        }
    }
    gx
}

/// 2x2 stride-2 max pool (floor mode). Returns values and flat argmax
/// offsets into the input.
pub fn max_pool_2x<T: Elem>(x: &[T], c: usize, h: usize, w: usize) -> (Vec<T>, Vec<usize>) {
    let (ho, wo) = (h / 2, w / 2);
    let mut out = vec![T::zero(); c * ho * wo];
    let mut arg = vec![0usize; c * ho * wo];
    for ic in 0..c {
        for oy in 0..ho {
            for ox in 0..wo {
                let mut best = T::neg_infinity();
                let mut best_i = 0;
                for dy in 0..2 {
                    for dx in 0..2 {
                        let i = (ic * h + 2 * oy + dy) * w + 2 * ox + dx;
                        if x[i] > best {
                            best = x[i];
                            best_i = i;
                        }
                    }
                }
                let oi = (ic * ho + oy) * wo + ox;
                out[oi] = best;
                arg[oi] = best_i;
            }
        }
    }
    (out, arg)
}

/// Bilinear interpolation of `map` [C,H,W] at continuous (x, y) positions.
/// Integer coordinates hit cell centers; samples are clamped to the border.
/// Returns [C, P].
pub fn bilinear_sample<T: Elem>(map: &[T], c: usize, h: usize, w: usize, points: &[(f64, f64)]) -> Vec<T> {
    let p = points.len();
    let mut out = vec![T::zero(); c * p];
    for (k, &(px, py)) in points.iter().enumerate() {
        let (x0, x1, wx) = clamp_lerp(px, w);
        let (y0, y1, wy) = clamp_lerp(py, h);
        let (wx, wy) = (T::from_f64(wx), T::from_f64(wy));
        let one = T::one();
        for ic in 0..c {
            let base = ic * h * w;
            let v00 = map[base + y0 * w + x0];
            let v01 = map[base + y0 * w + x1];
            let v10 = map[base + y1 * w + x0];
            let v11 = map[base + y1 * w + x1];
            let top = v00 * (one - wx) + v01 * wx;
            let bot = v10 * (one - wx) + v11 * wx;
            out[ic * p + k] = top * (one - wy) + bot * wy;
        }
    }
    out
}

pub fn bilinear_sample_backward<T: Elem>(
    gout: &[T],
    c: usize,
    h: usize,
    w: usize,
    points: &[(f64, f64)],
) -> Vec<T> {
    let p = points.len();
    let mut gmap = vec![T::zero(); c * h * w];
    for (k, &(px, py)) in points.iter().enumerate() {
        let (x0, x1, wx) = clamp_lerp(px, w);
        let (y0, y1, wy) = clamp_lerp(py, h);
        let (wx, wy) = (T::from_f64(wx), T::from_f64(wy));
        let one = T::one();
        for ic in 0..c {
            let g = gout[ic * p + k];
            let base = ic * h * w;
            gmap[base + y0 * w + x0] += g * (one - wx) * (one - wy);
            gmap[base + y0 * w + x1] += g * wx * (one - wy);
            gmap[base + y1 * w + x0] += g * (one - wx) * wy;
            gmap[base + y1 * w + x1] += g * wx * wy;
        }
    }
    gmap
}

/// Clamped lerp endpoints for one axis of length `n`.
fn clamp_lerp(coord: f64, n: usize) -> (usize, usize, f64) {
    let c = coord.clamp(0.0, (n - 1) as f64);
    let lo = c.floor();
    let i0 = lo as usize;
    let i1 = (i0 + 1).min(n - 1);
    (i0, i1, c - lo)
}

/// Tanh-approximated GELU and its derivative.
pub fn gelu<T: Elem>(x: T) -> T {
    let c = T::from_f64(0.7978845608028654); // sqrt(2/pi)
    let a = T::from_f64(0.044715);
    let half = T::from_f64(0.5);
    half * x * (T::one() + (c * (x + a * x * x * x)).tanh())
}

pub fn gelu_grad<T: Elem>(x: T) -> T {
    let c = T::from_f64(0.7978845608028654);
    let a = T::from_f64(0.044715);
    let half = T::from_f64(0.5);
    let three = T::from_f64(3.0);
    let inner = c * (x + a * x * x * x);
    let t = inner.tanh();
    let sech2 = T::one() - t * t;
    half * (T::one() + t) + half * x * sech2 * c * (T::one() + three * a * x * x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_identity() {
        let eye = [1.0f64, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0];
        assert_eq!(matmul(&eye, &a, 3, 3, 3), a.to_vec());
    }

    #[test]
    fn conv_center_equals_neighbourhood_sum() {
        // 4x4 ramp, 3x3 ones kernel, pad 1: compare against a direct
        // nested-loop evaluation at every output position.
        let x: Vec<f64> = (0..16).map(|v| v as f64).collect();
        let w = vec![1.0f64; 9];
        let out = conv2d(&x, &w, None, 1, 4, 4, 1, 3, 3, 1, 1);
        for oy in 0..4usize {
            for ox in 0..4usize {
                let mut want = 0.0;
                for ky in 0..3usize {
                    for kx in 0..3usize {
                        let iy = oy as isize + ky as isize - 1;
                        let ix = ox as isize + kx as isize - 1;
                        if iy >= 0 && iy < 4 && ix >= 0 && ix < 4 {
                            want += x[(iy * 4 + ix) as usize];
                        }
                    }
                }
                assert_eq!(out[oy * 4 + ox], want, "at ({oy},{ox})");
            }
        }
        // center value is the full 3x3 neighbourhood sum
        assert_eq!(out[5], x[0] + x[1] + x[2] + x[4] + x[5] + x[6] + x[8] + x[9] + x[10]);
    }

    #[test]
    fn convt_inverts_shape_of_conv() {
        let (ho, wo) = convt2d_out_hw(4, 4, 2, 2, 2, 0);
        assert_eq!((ho, wo), (8, 8));
    }

    #[test]
    fn bilinear_center_of_four() {
        // 2x2 map, sample at (0.5, 0.5) -> mean of the four cells
        let map = [1.0f64, 2.0, 3.0, 4.0];
        let out = bilinear_sample(&map, 1, 2, 2, &[(0.5, 0.5)]);
        assert!((out[0] - 2.5).abs() < 1e-12);
        // integer coordinates hit cells exactly
        let out = bilinear_sample(&map, 1, 2, 2, &[(1.0, 0.0)]);
        assert_eq!(out[0], 2.0);
    }

    #[test]
    fn maxpool_keeps_corner_max() {
        let mut x = vec![0.0f64; 16];
        x[0] = 7.0;
        let (out, arg) = max_pool_2x(&x, 1, 4, 4);
        assert_eq!(out[0], 7.0);
        assert_eq!(arg[0], 0);
    }
}
