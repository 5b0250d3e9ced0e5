//! Small complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub use num_complex::Complex64 as C64;

pub type CVec = DVector<C64>;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Draws one sample of CN(0, 1).
pub fn crandn<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `exp(j * arg(z))`; zero maps to 1.
pub fn unit_phase(z: C64) -> C64 {
    let r = z.norm();
    if r > 0.0 && r.is_finite() {
        z / r
    } else {
        ONE
    }
}

/// Plain (non-conjugating) product of a row vector stored as `CVec` with a
/// column vector: `sum_i row[i] * col[i]`.
pub fn row_dot(row: &CVec, col: &CVec) -> C64 {
    row.iter().zip(col.iter()).map(|(a, b)| a * b).sum()
}

/// `x^H A x` for Hermitian `A` (real part).
pub fn quad_form(a: &CMat, x: &CVec) -> f64 {
    x.dotc(&(a * x)).re
}

pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Eigendecomposition of the Hermitian part of `a`, eigenvalues ascending.
/// Eigenvectors are the columns of the returned matrix.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Singular values (descending, length `min(rows, cols)`) and the full
/// `cols x cols` unitary matrix of right singular vectors.
///
/// Wide inputs are padded with zero rows so the decomposition returns a
/// complete basis, including the null space.
pub fn svd_full_right(a: &CMat) -> (Vec<f64>, CMat) {
    let (rows, cols) = a.shape();
    if cols == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let padded = if rows < cols {
        let mut p = CMat::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut v = CMat::zeros(cols, cols);
    for (dst, &src) in order.iter().enumerate() {
        let col = v_t.row(src).adjoint();
        v.set_column(dst, &col);
    }
    let values = order
        .iter()
        .take(rows.min(cols))
        .map(|&i| svd.singular_values[i])
        .collect();
    (values, v)
}

/// Dominant right singular vector of `a` (unit norm) and its singular value.
pub fn dominant_right_singular(a: &CMat) -> (f64, CVec) {
    let (s, v) = svd_full_right(a);
    let sigma = s.first().copied().unwrap_or(0.0);
    (sigma, v.column(0).into_owned())
}

/// Lower Cholesky factor of a Hermitian matrix, or `None` unless it is
/// positive definite. Only the lower triangle is read.
pub fn cholesky_hpd(a: &CMat) -> Option<CMat> {
    let n = a.nrows();
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)].re;
        for k in 0..j {
            pivot -= l[(j, k)].norm_sqr();
        }
        if !(pivot > 0.0) || !pivot.is_finite() {
            return None;
        }
        let d = pivot.sqrt();
        l[(j, j)] = C64::from(d);
        for i in (j + 1)..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = v / d;
        }
    }
    Some(l)
}

/// `a^-1` from the lower Cholesky factor of `a`.
pub fn cholesky_inverse(l: &CMat) -> Option<CMat> {
    let n = l.nrows();
    let l_inv = l.solve_lower_triangular(&CMat::identity(n, n))?;
    Some(l_inv.adjoint() * l_inv)
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(rows, cols, |_, _| crandn(&mut rng))
    }

    #[test]
    fn cholesky_rejects_indefinite_and_inverts_definite() {
        let b = random_matrix(5, 5, 3);
        let a = &b * b.adjoint() + CMat::identity(5, 5);
        let l = cholesky_hpd(&a).unwrap();
        assert!((&l * l.adjoint() - &a).norm() < 1e-10);
        assert!((cholesky_inverse(&l).unwrap() * &a - CMat::identity(5, 5)).norm() < 1e-10);
        assert!(cholesky_hpd(&(-a)).is_none());
        let indefinite = CMat::from_diagonal(&CVec::from_vec(vec![C64::from(1.0), C64::from(-1e-3)]));
        assert!(cholesky_hpd(&indefinite).is_none());
    }

    #[test]
    fn eigh_reconstructs_and_sorts() {
        let b = random_matrix(6, 6, 1);
        let a = &b * b.adjoint();
        let (vals, vecs) = eigh(&a);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let lambda = CMat::from_diagonal(&CVec::from_iterator(6, vals.iter().map(|&v| C64::from(v))));
        let rec = &vecs * lambda * vecs.adjoint();
        assert!((rec - a).norm() < 1e-10);
    }

    #[test]
    fn full_right_basis_of_wide_matrix_contains_null_space() {
        let a = random_matrix(3, 7, 2);
        let (s, v) = svd_full_right(&a);
        assert_eq!(s.len(), 3);
        assert_eq!(v.shape(), (7, 7));
        assert!((v.adjoint() * &v - CMat::identity(7, 7)).norm() < 1e-12);
        let null = v.columns(3, 4);
        assert!((&a * null).norm() < 1e-12 * s[0]);
    }

    #[test]
    fn unit_phase_of_zero_is_one() {
        assert_eq!(unit_phase(ZERO), ONE);
        let z = unit_phase(C64::new(3.0, -4.0));
        assert!((z.norm() - 1.0).abs() < 1e-15);
    }
}
