//! Thin safe wrapper over the `matrixmultiply` f64 GEMM kernel.
//!
//! All convolution and dense-layer arithmetic funnels through [`gemm`], which
//! computes `C = alpha * op(A) * op(B) + beta * C` single-threaded, so results
//! are bit-deterministic for fixed inputs.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trans {
    No,
    Yes,
}

/// `c` (m x n, row-major) = `alpha * op(a) * op(b) + beta * c`.
///
/// `a` holds an (m x k) matrix when `ta == Trans::No`, otherwise a (k x m)
/// matrix that is read transposed; `b` likewise with dimensions (k x n).
pub fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    ta: Trans,
    b: &[f64],
    tb: Trans,
    beta: f64,
    c: &mut [f64],
) {
    assert_eq!(a.len(), m * k, "gemm: A buffer size");
    assert_eq!(b.len(), k * n, "gemm: B buffer size");
    assert_eq!(c.len(), m * n, "gemm: C buffer size");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for x in c.iter_mut() {
            *x *= beta;
        }
        return;
    }
    let (rsa, csa) = match ta {
        Trans::No => (k as isize, 1),
        Trans::Yes => (1, m as isize),
    };
    let (rsb, csb) = match tb {
        Trans::No => (n as isize, 1),
        Trans::Yes => (1, k as isize),
    };
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
