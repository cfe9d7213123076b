//! Thin safe wrappers over `matrixmultiply::dgemm` for row-major buffers.

/// A strided view used for the per-head attention products.
#[derive(Clone, Copy)]
pub(crate) struct View {
    pub off: usize,
    pub rs: usize,
    pub cs: usize,
}

impl View {
    pub fn rows(off: usize, rs: usize) -> Self {
        View { off, rs, cs: 1 }
    }

    pub fn transposed(off: usize, rs: usize) -> Self {
        View { off, rs: 1, cs: rs }
    }
}

fn span(rows: usize, cols: usize, v: View) -> usize {
    if rows == 0 || cols == 0 {
        0
    } else {
        v.off + (rows - 1) * v.rs + (cols - 1) * v.cs + 1
    }
}

/// `c = alpha * a * b + beta * c` with `a` of shape m x k and `b` k x n.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    av: View,
    b: &[f64],
    bv: View,
    beta: f64,
    c: &mut [f64],
    cv: View,
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(span(m, k, av) <= a.len(), "gemm: lhs out of bounds");
    assert!(span(k, n, bv) <= b.len(), "gemm: rhs out of bounds");
    assert!(span(m, n, cv) <= c.len(), "gemm: output out of bounds");
    if k == 0 {
        for i in 0..m {
            for j in 0..n {
                let x = &mut c[cv.off + i * cv.rs + j * cv.cs];
                *x = if beta == 0.0 { 0.0 } else { beta * *x };
            }
        }
        return;
    }
    // SAFETY: every index touched by dgemm lies inside the spans asserted above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr().add(av.off),
            av.rs as isize,
            av.cs as isize,
            b.as_ptr().add(bv.off),
            bv.rs as isize,
            bv.cs as isize,
            beta,
            c.as_mut_ptr().add(cv.off),
            cv.rs as isize,
            cv.cs as isize,
        );
    }
}

/// `c = a * b` (or `c += a * b` when `acc`), a: m x k, b: k x n.
pub(crate) fn matmul(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize, acc: bool) {
    gemm(
        m,
        k,
        n,
        1.0,
        a,
        View::rows(0, k),
        b,
        View::rows(0, n),
        if acc { 1.0 } else { 0.0 },
        c,
        View::rows(0, n),
    );
}

/// `c += a^T * b`, a: k x m, b: k x n.
pub(crate) fn matmul_tn_acc(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    gemm(
        m,
        k,
        n,
        1.0,
        a,
        View::transposed(0, m),
        b,
        View::rows(0, n),
        1.0,
        c,
        View::rows(0, n),
    );
}

/// `c += a * b^T`, a: m x k, b: n x k.
pub(crate) fn matmul_nt_acc(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    gemm(
        m,
        k,
        n,
        1.0,
        a,
        View::rows(0, k),
        b,
        View::transposed(0, k),
        1.0,
        c,
        View::rows(0, n),
    );
}

/// Four independent partial sums so the compiler can vectorize.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut s = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for i in 0..4 {
            s[i] += x[i] * y[i];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (s[0] + s[1]) + (s[2] + s[3]) + tail
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `y += x * w` for a row vector x (len k) and w: k x n.
#[inline]
pub(crate) fn vecmat_acc(x: &[f64], w: &[f64], y: &mut [f64]) {
    let n = y.len();
    for (i, &xi) in x.iter().enumerate() {
        if xi != 0.0 {
            axpy(xi, &w[i * n..(i + 1) * n], y);
        }
    }
}

/// `y += w * x` for w: m x n (so y has len m and x len n).
#[inline]
pub(crate) fn matvec_acc(w: &[f64], x: &[f64], y: &mut [f64]) {
    let n = x.len();
    for (i, yi) in y.iter_mut().enumerate() {
        *yi += dot(&w[i * n..(i + 1) * n], x);
    }
}

/// Outer-product accumulation `w += x^T y` for row vectors x (len m), y (len n).
#[inline]
pub(crate) fn outer_acc(x: &[f64], y: &[f64], w: &mut [f64]) {
    let n = y.len();
    for (i, &xi) in x.iter().enumerate() {
        if xi != 0.0 {
            axpy(xi, y, &mut w[i * n..(i + 1) * n]);
        }
    }
}
