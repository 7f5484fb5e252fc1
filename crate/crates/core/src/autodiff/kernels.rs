//! Raw loops behind the tape operations. No shape validation happens here;
//! callers in `tape` check shapes before dispatching.

/// Spatial boundary handling for 2-D convolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// Zero padding (optionally longitude-wrapped) preserving H and W.
    Same,
    /// No padding; output shrinks by `k - 1` in each dimension.
    Valid,
}

pub(crate) struct ConvGeom {
    pub cin: usize,
    pub cout: usize,
    pub h: usize,
    pub w: usize,
    pub k: usize,
    pub pad: usize,
    pub wrap: bool,
}

impl ConvGeom {
    pub fn hp(&self) -> usize {
        self.h + 2 * self.pad
    }
    pub fn wp(&self) -> usize {
        self.w + 2 * self.pad
    }
    pub fn ho(&self) -> usize {
        self.hp() - self.k + 1
    }
    pub fn wo(&self) -> usize {
        self.wp() - self.k + 1
    }
}

/// Pads `[cin, h, w]` input. Rows are zero padded; columns are zero padded
/// or wrapped periodically when `wrap` is set.
pub(crate) fn pad_input(input: &[f64], g: &ConvGeom) -> Vec<f64> {
    let (h, w, p) = (g.h, g.w, g.pad);
    let (hp, wp) = (g.hp(), g.wp());
    let mut out = vec![0.0; g.cin * hp * wp];
    for c in 0..g.cin {
        for y in 0..h {
            let src = &input[c * h * w + y * w..c * h * w + (y + 1) * w];
            let row = c * hp * wp + (y + p) * wp;
            out[row + p..row + p + w].copy_from_slice(src);
            if g.wrap {
                for x in 0..p {
                    out[row + x] = src[(w + x - p % w) % w];
                    out[row + p + w + x] = src[x % w];
                }
            }
        }
    }
    out
}

/// Folds a padded gradient back onto the unpadded input layout.
pub(crate) fn unpad_grad(gpad: &[f64], g: &ConvGeom, out: &mut [f64]) {
    let (h, w, p) = (g.h, g.w, g.pad);
    let (hp, wp) = (g.hp(), g.wp());
    for c in 0..g.cin {
        for y in 0..h {
            let row = c * hp * wp + (y + p) * wp;
            let dst = &mut out[c * h * w + y * w..c * h * w + (y + 1) * w];
            for x in 0..w {
                dst[x] += gpad[row + p + x];
            }
            if g.wrap {
                for x in 0..p {
                    dst[(w + x - p % w) % w] += gpad[row + x];
                    dst[x % w] += gpad[row + p + w + x];
                }
            }
        }
    }
}

pub(crate) fn conv2d_forward(padded: &[f64], kernel: &[f64], bias: Option<&[f64]>, g: &ConvGeom) -> Vec<f64> {
    let (hp, wp, ho, wo, k) = (g.hp(), g.wp(), g.ho(), g.wo(), g.k);
    let mut out = vec![0.0; g.cout * ho * wo];
    for co in 0..g.cout {
        let oplane = &mut out[co * ho * wo..(co + 1) * ho * wo];
        if let Some(b) = bias {
            oplane.iter_mut().for_each(|v| *v = b[co]);
        }
        for ci in 0..g.cin {
            let iplane = &padded[ci * hp * wp..(ci + 1) * hp * wp];
            let kbase = (co * g.cin + ci) * k * k;
            for ky in 0..k {
                for kx in 0..k {
                    let wv = kernel[kbase + ky * k + kx];
                    for y in 0..ho {
                        let orow = &mut oplane[y * wo..(y + 1) * wo];
                        let irow = &iplane[(y + ky) * wp + kx..(y + ky) * wp + kx + wo];
                        for (o, i) in orow.iter_mut().zip(irow) {
                            *o += wv * i;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Returns (grad wrt padded input, grad wrt kernel, grad wrt bias).
pub(crate) fn conv2d_backward(
    padded: &[f64],
    kernel: &[f64],
    gout: &[f64],
    g: &ConvGeom,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (hp, wp, ho, wo, k) = (g.hp(), g.wp(), g.ho(), g.wo(), g.k);
    let mut gpad = vec![0.0; padded.len()];
    let mut gk = vec![0.0; kernel.len()];
    let mut gb = vec![0.0; g.cout];
    for co in 0..g.cout {
        let gplane = &gout[co * ho * wo..(co + 1) * ho * wo];
        gb[co] = gplane.iter().sum();
        for ci in 0..g.cin {
            let ioff = ci * hp * wp;
            let kbase = (co * g.cin + ci) * k * k;
            for ky in 0..k {
                for kx in 0..k {
                    let wv = kernel[kbase + ky * k + kx];
                    let mut acc = 0.0;
                    for y in 0..ho {
                        let grow = &gplane[y * wo..(y + 1) * wo];
                        let start = ioff + (y + ky) * wp + kx;
                        let irow = &padded[start..start + wo];
                        acc += grow.iter().zip(irow).map(|(a, b)| a * b).sum::<f64>();
                        let drow = &mut gpad[start..start + wo];
                        for (d, gv) in drow.iter_mut().zip(grow) {
                            *d += wv * gv;
                        }
                    }
                    gk[kbase + ky * k + kx] = acc;
                }
            }
        }
    }
    (gpad, gk, gb)
}

/// `op(a) · op(b)` where `op` optionally transposes; result is `[m, n]`.
///
/// `a` is `[m, k]` (or `[k, m]` when `ta`), `b` is `[k, n]` (or `[n, k]`
/// when `tb`).
pub(crate) fn gemm(a: &[f64], ta: bool, b: &[f64], tb: bool, m: usize, k: usize, n: usize) -> Vec<f64> {
    let a_rm: std::borrow::Cow<[f64]> = if ta {
        std::borrow::Cow::Owned(transpose(a, k, m))
    } else {
        std::borrow::Cow::Borrowed(a)
    };
    let b_rm: std::borrow::Cow<[f64]> = if tb {
        std::borrow::Cow::Owned(transpose(b, n, k))
    } else {
        std::borrow::Cow::Borrowed(b)
    };
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a_rm[i * k + p];
            let brow = &b_rm[p * n..(p + 1) * n];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

/// Transposes a row-major `[rows, cols]` matrix.
pub(crate) fn transpose(x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = x[r * cols + c];
        }
    }
    out
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
