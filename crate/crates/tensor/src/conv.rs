//! Raw 1-D convolution and matmul kernels.
//!
//! Convolutions are lowered to a single dgemm over an im2col buffer; the
//! buffer is rebuilt in the backward pass instead of being kept on the tape,
//! which keeps memory flat for deep Inception stacks.

/// C[m,n] = A[m,k] * B[k,n], all row-major.
pub(crate) fn gemm(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// C[m,n] = A^T[m,k] * B[k,n] where A is stored [k,m] row-major.
pub(crate) fn gemm_at(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    debug_assert_eq!(a.len(), k * m);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            1,
            m as isize,
            b.as_ptr(),
            n as isize,
            1,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// C[m,n] = A[m,k] * B^T[k,n] where B is stored [n,k] row-major.
pub(crate) fn gemm_bt(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    debug_assert_eq!(b.len(), n * k);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            1,
            k as isize,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Geometry of one conv1d application.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvGeom {
    pub batch: usize,
    pub c_in: usize,
    pub t_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad_left: usize,
    pub t_out: usize,
}

impl ConvGeom {
    pub fn cols_len(&self) -> usize {
        self.c_in * self.kernel * self.batch * self.t_out
    }
}

/// Gather input windows into `cols[(ci*L + tau), (n*T_out + t)]`, zero-padding
/// out-of-range samples.
pub(crate) fn im2col(x: &[f64], g: &ConvGeom, cols: &mut [f64]) {
    let nt = g.batch * g.t_out;
    debug_assert_eq!(cols.len(), g.c_in * g.kernel * nt);
    for ci in 0..g.c_in {
        for tau in 0..g.kernel {
            let row = &mut cols[(ci * g.kernel + tau) * nt..(ci * g.kernel + tau + 1) * nt];
            for n in 0..g.batch {
                let xx = &x[(n * g.c_in + ci) * g.t_in..(n * g.c_in + ci + 1) * g.t_in];
                let dst = &mut row[n * g.t_out..(n + 1) * g.t_out];
                for (t, d) in dst.iter_mut().enumerate() {
                    let src = (t * g.stride + tau) as isize - g.pad_left as isize;
                    *d = if src >= 0 && (src as usize) < g.t_in {
                        xx[src as usize]
                    } else {
                        0.0
                    };
                }
            }
        }
    }
}

/// Scatter-add of `dcols` (im2col layout) back onto the input gradient.
pub(crate) fn col2im_add(dcols: &[f64], g: &ConvGeom, dx: &mut [f64]) {
    let nt = g.batch * g.t_out;
    for ci in 0..g.c_in {
        for tau in 0..g.kernel {
            let row = &dcols[(ci * g.kernel + tau) * nt..(ci * g.kernel + tau + 1) * nt];
            for n in 0..g.batch {
                let dst = &mut dx[(n * g.c_in + ci) * g.t_in..(n * g.c_in + ci + 1) * g.t_in];
                let src = &row[n * g.t_out..(n + 1) * g.t_out];
                for (t, &v) in src.iter().enumerate() {
                    let pos = (t * g.stride + tau) as isize - g.pad_left as isize;
                    if pos >= 0 && (pos as usize) < g.t_in {
                        dst[pos as usize] += v;
                    }
                }
            }
        }
    }
}

/// out[n, co, t] = sum_{ci,tau} w[co, ci, tau] * x_pad[n, ci, t*stride + tau] + b[co]
pub(crate) fn conv1d_forward(x: &[f64], w: &[f64], bias: Option<&[f64]>, g: &ConvGeom) -> Vec<f64> {
    let nt = g.batch * g.t_out;
    let mut cols = vec![0.0; g.cols_len()];
    im2col(x, g, &mut cols);
    let mut out_mat = vec![0.0; g.c_out * nt];
    gemm(g.c_out, g.c_in * g.kernel, nt, w, &cols, &mut out_mat);
    // out_mat[co, n*T+t] -> out[n, co, t]
    let mut out = vec![0.0; g.batch * g.c_out * g.t_out];
    for n in 0..g.batch {
        for co in 0..g.c_out {
            let src = &out_mat[co * nt + n * g.t_out..co * nt + (n + 1) * g.t_out];
            let dst = &mut out[(n * g.c_out + co) * g.t_out..(n * g.c_out + co + 1) * g.t_out];
            if let Some(b) = bias {
                let bv = b[co];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = s + bv;
                }
            } else {
                dst.copy_from_slice(src);
            }
        }
    }
    out
}

pub(crate) struct ConvGrads {
    pub dx: Option<Vec<f64>>,
    pub dw: Vec<f64>,
    pub db: Option<Vec<f64>>,
}

pub(crate) fn conv1d_backward(
    x: &[f64],
    w: &[f64],
    dout: &[f64],
    g: &ConvGeom,
    need_dx: bool,
    need_db: bool,
) -> ConvGrads {
    let nt = g.batch * g.t_out;
    // dout[n, co, t] -> dout_mat[co, n*T+t]
    let mut dout_mat = vec![0.0; g.c_out * nt];
    for n in 0..g.batch {
        for co in 0..g.c_out {
            let src = &dout[(n * g.c_out + co) * g.t_out..(n * g.c_out + co + 1) * g.t_out];
            dout_mat[co * nt + n * g.t_out..co * nt + (n + 1) * g.t_out].copy_from_slice(src);
        }
    }
    let mut cols = vec![0.0; g.cols_len()];
    im2col(x, g, &mut cols);
    let mut dw = vec![0.0; g.c_out * g.c_in * g.kernel];
    gemm_bt(g.c_out, nt, g.c_in * g.kernel, &dout_mat, &cols, &mut dw);
    let db = need_db.then(|| {
        (0..g.c_out)
            .map(|co| dout_mat[co * nt..(co + 1) * nt].iter().sum())
            .collect()
    });
    let dx = need_dx.then(|| {
        let mut dcols = vec![0.0; g.cols_len()];
        gemm_at(g.c_in * g.kernel, g.c_out, nt, w, &dout_mat, &mut dcols);
        let mut dx = vec![0.0; g.batch * g.c_in * g.t_in];
        col2im_add(&dcols, g, &mut dx);
        dx
    });
    ConvGrads { dx, dw, db }
}
