//! Dense row-major kernels used by the networks.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Strided row-major matrix layout: element `(i, j)` lives at `i * rs + j * cs`.
#[derive(Debug, Clone, Copy)]
pub struct Strides {
    pub rows: usize,
    pub cols: usize,
    pub rs: usize,
    pub cs: usize,
}

impl Strides {
    pub fn dense(rows: usize, cols: usize) -> Self {
        Self { rows, cols, rs: cols, cs: 1 }
    }

    /// The transposed view of a dense `cols x rows` matrix.
    pub fn transposed(rows: usize, cols: usize) -> Self {
        Self { rows, cols, rs: 1, cs: rows }
    }

    fn fits(&self, len: usize) -> bool {
        self.rows == 0 || self.cols == 0 || (self.rows - 1) * self.rs + (self.cols - 1) * self.cs < len
    }
}

/// `c = alpha * a b + beta * c`.
pub fn gemm(alpha: f64, a: &[f64], sa: Strides, b: &[f64], sb: Strides, beta: f64, c: &mut [f64], sc: Strides) {
    assert!(sa.cols == sb.rows && sa.rows == sc.rows && sb.cols == sc.cols, "gemm shapes");
    assert!(sa.fits(a.len()) && sb.fits(b.len()) && sc.fits(c.len()), "gemm bounds");
    assert!(sc.rs != sc.cs || sc.rows <= 1 || sc.cols <= 1, "gemm output aliases");
    let (m, k, n) = (sa.rows, sa.cols, sb.cols);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for i in 0..m {
            for j in 0..n {
                let x = &mut c[i * sc.rs + j * sc.cs];
                *x = if beta == 0.0 { 0.0 } else { beta * *x };
            }
        }
        return;
    }
    // SAFETY: the bounds checks above keep every strided access inside the
    // slices, and `c` is exclusively borrowed with non-aliasing strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            sa.rs as isize,
            sa.cs as isize,
            b.as_ptr(),
            sb.rs as isize,
            sb.cs as isize,
            beta,
            c.as_mut_ptr(),
            sc.rs as isize,
            sc.cs as isize,
        );
    }
}

/// `out[r, c] = sum_i a[r, i] * b[c, i]` for `a: rows x inner`, `b: cols x inner`.
pub fn matmul_bt(a: &[f64], inner: usize, b: &[f64], out: &mut [f64]) {
    let rows = a.len() / inner;
    let cols = b.len() / inner;
    gemm(
        1.0,
        a,
        Strides::dense(rows, inner),
        b,
        Strides::transposed(inner, cols),
        0.0,
        out,
        Strides::dense(rows, cols),
    );
}

/// `grad_b[c, i] += sum_r d_out[r, c] * a[r, i]`
pub fn accumulate_weight_grad(d_out: &[f64], a: &[f64], inner: usize, grad_b: &mut [f64]) {
    let rows = a.len() / inner;
    let cols = grad_b.len() / inner;
    gemm(
        1.0,
        d_out,
        Strides::transposed(cols, rows),
        a,
        Strides::dense(rows, inner),
        1.0,
        grad_b,
        Strides::dense(cols, inner),
    );
}

/// `grad_a[r, i] += sum_c d_out[r, c] * b[c, i]`
pub fn accumulate_input_grad(d_out: &[f64], b: &[f64], inner: usize, grad_a: &mut [f64]) {
    let cols = b.len() / inner;
    let rows = grad_a.len() / inner;
    gemm(
        1.0,
        d_out,
        Strides::dense(rows, cols),
        b,
        Strides::dense(cols, inner),
        1.0,
        grad_a,
        Strides::dense(rows, inner),
    );
}

/// Column sums of a `rows x cols` matrix, accumulated into `out`.
pub fn accumulate_column_sums(m: &[f64], out: &mut [f64]) {
    for row in m.chunks_exact(out.len()) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// `tanh` through a single exponential; accurate to a few ulps in absolute
/// terms, which is all the networks need.
#[inline]
pub fn tanh(z: f64) -> f64 {
    let e = libm::exp(-2.0 * z.abs());
    let t = (1.0 - e) / (1.0 + e);
    if z < 0.0 { -t } else { t }
}
