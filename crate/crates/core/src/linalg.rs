//! Dense complex matrix primitives and the structure operators shared by the
//! bound solvers.
//!
//! [`ComplexMatrix`] is the validated boundary type (finite entries, immutable).
//! Internally the solvers work on plain [`CMatrix`] values; every function here
//! accepts `&CMatrix`, and a `&ComplexMatrix` coerces to it through `Deref`.

use std::ops::Deref;

use nalgebra::{Cholesky, DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Result, SsvError};
use crate::structure::Perturbation;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const EIG_MAX_ITERS: usize = 100_000;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense rectangular complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(CMatrix);

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(SsvError::Dimension(format!("empty matrix {rows}x{cols}")));
        }
        if entries.len() != rows * cols {
            return Err(SsvError::Dimension(format!(
                "expected {} entries for {rows}x{cols}, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(rows, cols, &entries))
    }

    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(SsvError::Dimension(format!(
                "empty matrix {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(SsvError::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(CMatrix::identity(n, n))
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(d[i], 0.0)
            } else {
                ZERO
            }
        }))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn entries_row_major(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// Wraps a solver-produced matrix. Solvers only produce finite values from
    /// finite inputs, so the check is a debug assertion.
    pub(crate) fn wrap(m: CMatrix) -> Self {
        debug_assert!(m.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        Self(m)
    }
}

impl Deref for ComplexMatrix {
    type Target = CMatrix;

    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

impl TryFrom<CMatrix> for ComplexMatrix {
    type Error = SsvError;

    fn try_from(m: CMatrix) -> Result<Self> {
        Self::from_matrix(m)
    }
}

/// `S ⊗ I_{m1}`: entry `(i·m1 + a, j·m1 + b)` is `S[i, j]` when `a == b`.
pub fn kron_identity(s: &CMatrix, m1: usize) -> Result<CMatrix> {
    if m1 == 0 {
        return Err(SsvError::Dimension("identity size must be positive".into()));
    }
    let (r, c) = s.shape();
    let mut out = CMatrix::zeros(r * m1, c * m1);
    for i in 0..r {
        for j in 0..c {
            let sij = s[(i, j)];
            if sij == ZERO {
                continue;
            }
            for a in 0..m1 {
                out[(i * m1 + a, j * m1 + a)] = sij;
            }
        }
    }
    Ok(out)
}

/// Block trace: entry `(i, j)` of the `v×v` result is the trace of the
/// `m1×m1` block `(i, j)` of `h`.
pub fn block_trace(h: &CMatrix, v: usize, m1: usize) -> Result<CMatrix> {
    if v == 0 || m1 == 0 || h.nrows() != v * m1 || h.ncols() != v * m1 {
        return Err(SsvError::Dimension(format!(
            "block_trace: {}x{} matrix is not {v}x{v} blocks of size {m1}",
            h.nrows(),
            h.ncols()
        )));
    }
    Ok(CMatrix::from_fn(v, v, |i, j| {
        (0..m1).map(|a| h[(i * m1 + a, j * m1 + a)]).sum()
    }))
}

/// Restacks a partitioned vector into a `width × (len/width)` matrix whose
/// column `j` is segment `j` of `y`. No conjugation is applied.
pub fn stack(y: &CVector, width: usize) -> Result<CMatrix> {
    if width == 0 || !y.len().is_multiple_of(width) || y.is_empty() {
        return Err(SsvError::Dimension(format!(
            "vector of length {} cannot be stacked with width {width}",
            y.len()
        )));
    }
    let cols = y.len() / width;
    Ok(CMatrix::from_fn(width, cols, |a, j| y[j * width + a]))
}

/// Inverse of [`stack`]: concatenates the columns.
pub fn unstack(m: &CMatrix) -> CVector {
    let (w, c) = m.shape();
    CVector::from_fn(w * c, |k, _| m[(k % w, k / w)])
}

/// Thin SVD `(U, σ, V)` with `m = U diag(σ) V^H`, in no particular order.
///
/// Backed by faer: nalgebra's complex SVD mispairs singular vectors on some
/// rank-deficient inputs, which the alignment factors hit constantly.
struct Svd {
    u: CMatrix,
    s: Vec<f64>,
    v: CMatrix,
}

fn to_faer(m: &CMatrix) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, Complex64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn svd_full(m: &CMatrix) -> Result<Svd> {
    let svd = to_faer(m).thin_svd().map_err(|_| SsvError::EigenFailure)?;
    let s = svd.S().column_vector().iter().map(|z| z.re).collect();
    Ok(Svd {
        u: from_faer(svd.U()),
        s,
        v: from_faer(svd.V()),
    })
}

fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    to_faer(m).singular_values().map_err(|_| SsvError::EigenFailure)
}

/// Default rank tolerance for [`q_factor`]: `max(p, q) · ε`.
pub fn default_rank_tol(g: &CMatrix) -> f64 {
    g.nrows().max(g.ncols()) as f64 * f64::EPSILON
}

/// Alignment factor `U1 V1^H` built from the singular triplets of `g` with
/// `σ_k > rank_tol · σ_max`.
pub fn q_factor(g: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    if g.iter().all(|z| *z == ZERO) {
        return Err(SsvError::ZeroAlignment);
    }
    let svd = svd_full(g)?;
    let smax = svd.s.iter().copied().fold(0.0, f64::max);
    if smax <= 0.0 || !smax.is_finite() {
        return Err(SsvError::ZeroAlignment);
    }
    let mut q = CMatrix::zeros(g.nrows(), g.ncols());
    for (k, s) in svd.s.iter().enumerate() {
        if *s > rank_tol * smax {
            q += svd.u.column(k) * svd.v.column(k).adjoint();
        }
    }
    Ok(q)
}

/// Largest singular value.
pub fn sigma_max(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m)
        .map(|s| s.into_iter().fold(0.0, f64::max))
        .unwrap_or(f64::NAN)
}

/// Smallest singular value (of the `min(rows, cols)` computed ones).
pub fn sigma_min(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m)
        .map(|s| s.into_iter().fold(f64::INFINITY, f64::min))
        .unwrap_or(f64::NAN)
}

/// Right singular vector of the largest singular value, unit norm.
pub fn dominant_right_singular_vector(m: &CMatrix) -> Result<CVector> {
    let svd = svd_full(m)?;
    let k = (0..svd.s.len())
        .max_by(|&i, &j| svd.s[i].total_cmp(&svd.s[j]))
        .ok_or(SsvError::EigenFailure)?;
    let v: CVector = svd.v.column(k).into_owned();
    let n = v.norm();
    if n == 0.0 {
        return Err(SsvError::EigenFailure);
    }
    Ok(v / Complex64::new(n, 0.0))
}

/// All eigenvalues of a square matrix, via the complex Schur form. Any 2×2
/// bump left on the quasi-triangular diagonal is resolved explicitly.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(SsvError::Dimension(format!(
            "eigenvalues need a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let schur =
        Schur::try_new(m.clone(), f64::EPSILON, EIG_MAX_ITERS).ok_or(SsvError::EigenFailure)?;
    let (_, t) = schur.unpack();
    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].norm() > f64::EPSILON * scale {
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let half_tr = (a + d) * 0.5;
            let disc = ((a - d) * 0.5 * ((a - d) * 0.5) + b * c).sqrt();
            out.push(half_tr + disc);
            out.push(half_tr - disc);
            i += 2;
        } else {
            out.push(t[(i, i)]);
            i += 1;
        }
    }
    Ok(out)
}

/// Eigenvalue of largest modulus.
pub fn dominant_eigenvalue(m: &CMatrix) -> Result<Complex64> {
    let eigs = eigenvalues(m)?;
    Ok(eigs
        .into_iter()
        .fold(ZERO, |best, z| if z.norm() > best.norm() { z } else { best }))
}

pub fn spectral_radius(m: &CMatrix) -> Result<f64> {
    Ok(dominant_eigenvalue(m)?.norm())
}

/// `σ_min(I − M·Δ)`. Zero exactly when `det(I − MΔ) = 0`.
pub fn singularity_residual(m: &CMatrix, delta: &Perturbation) -> Result<f64> {
    residual_of(m, &delta.assembled)
}

pub(crate) fn residual_of(m: &CMatrix, delta: &CMatrix) -> Result<f64> {
    if m.ncols() != delta.nrows() || delta.ncols() != m.nrows() {
        return Err(SsvError::Dimension(format!(
            "M is {}x{} but Δ is {}x{}",
            m.nrows(),
            m.ncols(),
            delta.nrows(),
            delta.ncols()
        )));
    }
    let n = m.nrows();
    let prod = CMatrix::identity(n, n) - m * delta;
    Ok(sigma_min(&prod))
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix (the input is Hermitized first).
pub fn hermitian_eigen(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let eig = SymmetricEigen::try_new(hermitian_part(h), f64::EPSILON, EIG_MAX_ITERS)
        .ok_or(SsvError::EigenFailure)?;
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

pub fn hermitian_max_eigenvalue(h: &CMatrix) -> Result<f64> {
    let (vals, _) = hermitian_eigen(h)?;
    Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// `(R^{1/2}, R^{-1/2})` for Hermitian positive definite `r`.
pub fn hermitian_sqrt_pair(r: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let (vals, vecs) = hermitian_eigen(r)?;
    if vals.iter().any(|&l| l <= 0.0 || !l.is_finite()) {
        return Err(SsvError::Infeasible { constraint: "R" });
    }
    let n = vals.len();
    let sq = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(vals[i].sqrt(), 0.0)
        } else {
            ZERO
        }
    });
    let isq = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(1.0 / vals[i].sqrt(), 0.0)
        } else {
            ZERO
        }
    });
    let vh = vecs.adjoint();
    Ok((&vecs * sq * &vh, &vecs * isq * &vh))
}

/// Cholesky factor of a Hermitian matrix, `None` unless positive definite.
pub fn cholesky(h: &CMatrix) -> Option<Cholesky<Complex64, nalgebra::Dyn>> {
    let chol = Cholesky::new(hermitian_part(h))?;
    let l = chol.l_dirty();
    // a negative pivot comes back as an (almost) imaginary square root
    let pivot_ok = |z: Complex64| z.re > 0.0 && z.re.is_finite() && z.im.abs() <= 1e-8 * z.re;
    if (0..l.nrows()).all(|i| pivot_ok(l[(i, i)])) {
        Some(chol)
    } else {
        None
    }
}

pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Inverse through LU with partial pivoting.
pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    m.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| SsvError::Dimension("matrix is singular".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
        CMatrix::from_row_slice(rows, cols, &data.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>())
    }

    fn pseudo_random(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        CMatrix::from_fn(rows, cols, |_, _| c(next(), next()))
    }

    #[test]
    fn construction_validates() {
        assert!(ComplexMatrix::new(2, 2, vec![ONE; 3]).is_err());
        assert!(ComplexMatrix::new(0, 2, vec![]).is_err());
        let err = ComplexMatrix::new(1, 2, vec![ONE, c(f64::NAN, 0.0)]).unwrap_err();
        assert_eq!(err, SsvError::NonFinite { row: 0, col: 1 });
        let m = ComplexMatrix::new(2, 2, vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)])
            .unwrap();
        assert_eq!(m[(0, 1)], c(2.0, 0.0));
        assert_eq!(m.entries_row_major()[2], c(3.0, 0.0));
    }

    #[test]
    fn kron_identity_cases() {
        let i2 = CMatrix::identity(2, 2);
        assert_eq!(kron_identity(&i2, 3).unwrap(), CMatrix::identity(6, 6));

        let s = real(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let expect = real(4, 4, &[
            2.0, 0.0, 0.0, 0.0, //
            0.0, 2.0, 0.0, 0.0, //
            0.0, 0.0, 3.0, 0.0, //
            0.0, 0.0, 0.0, 3.0,
        ]);
        assert_eq!(kron_identity(&s, 2).unwrap(), expect);

        let nil = real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(kron_identity(&nil, 1).unwrap(), nil);
    }

    #[test]
    fn kron_identity_mixed_product() {
        let s = pseudo_random(3, 3, 1);
        let t = pseudo_random(3, 3, 2);
        let lhs = kron_identity(&s, 2).unwrap() * kron_identity(&t, 2).unwrap();
        let rhs = kron_identity(&(&s * &t), 2).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn block_trace_cases() {
        let h = CMatrix::identity(4, 4);
        assert_eq!(block_trace(&h, 2, 2).unwrap(), real(2, 2, &[2.0, 0.0, 0.0, 2.0]));

        let h = pseudo_random(5, 5, 3);
        assert_eq!(block_trace(&h, 5, 1).unwrap(), h);

        let h = pseudo_random(6, 6, 4);
        let g = block_trace(&h, 3, 2).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let direct = h[(2 * i, 2 * j)] + h[(2 * i + 1, 2 * j + 1)];
                assert!((g[(i, j)] - direct).norm() < 1e-15);
            }
        }
        assert!(block_trace(&h, 4, 2).is_err());
    }

    #[test]
    fn block_trace_adjoint_identity() {
        // trace((E_ij ⊗ I)^T H) == trace(H_ij) for every basis matrix E_ij.
        let h = pseudo_random(6, 6, 5);
        let g = block_trace(&h, 3, 2).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut e = CMatrix::zeros(3, 3);
                e[(i, j)] = ONE;
                let lhs = (kron_identity(&e, 2).unwrap().transpose() * &h).trace();
                assert!((lhs - g[(i, j)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn stack_cases() {
        let y = CVector::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
        let s = stack(&y, 2).unwrap();
        assert_eq!(s, real(2, 2, &[1.0, 3.0, 2.0, 4.0]));
        assert_eq!(unstack(&s), y);

        let full = stack(&y, 4).unwrap();
        assert_eq!(full.shape(), (4, 1));
        assert_eq!(full.column(0).into_owned(), y);

        let yc = CVector::from_vec(vec![c(1.0, 2.0), c(-3.0, 0.5)]);
        let row = stack(&yc, 1).unwrap();
        assert_eq!(row, yc.transpose());

        assert!(stack(&y, 3).is_err());
    }

    #[test]
    fn q_factor_cases() {
        let theta = 0.3f64;
        let u = CMatrix::from_row_slice(2, 2, &[
            c(theta.cos(), 0.0),
            c(0.0, theta.sin()),
            c(0.0, theta.sin()),
            c(theta.cos(), 0.0),
        ]);
        let q = q_factor(&u, default_rank_tol(&u)).unwrap();
        assert!((q - &u).norm() < 1e-14);

        let a = CVector::from_vec(vec![c(1.0, 1.0), c(0.0, 2.0), c(-1.0, 0.5)]);
        let w = CVector::from_vec(vec![c(0.5, 0.0), c(1.0, -1.0), c(2.0, 0.0)]);
        let g = &a * w.adjoint();
        let q = q_factor(&g, default_rank_tol(&g)).unwrap();
        let expect = (&a / c(a.norm(), 0.0)) * (&w / c(w.norm(), 0.0)).adjoint();
        assert!((q - expect).norm() < 1e-14);

        let d = real(2, 2, &[3.0, 0.0, 0.0, 0.0]);
        let q = q_factor(&d, 1e-12).unwrap();
        assert!((q - real(2, 2, &[1.0, 0.0, 0.0, 0.0])).norm() < 1e-15);

        assert_eq!(q_factor(&CMatrix::zeros(2, 3), 1e-12), Err(SsvError::ZeroAlignment));
    }

    #[test]
    fn q_factor_rank_one_products() {
        // nalgebra 0.35 fails this for some complex rank-one inputs
        for n in 3..10 {
            for seed in 0..10 {
                let a = pseudo_random(n, 1, seed);
                let w = pseudo_random(n, 1, 100 + seed);
                let g = &a * w.adjoint();
                let q = q_factor(&g, default_rank_tol(&g)).unwrap();
                assert!((q - &g / c(g.norm(), 0.0)).norm() < 1e-12, "n = {n}, seed = {seed}");
            }
        }
    }

    #[test]
    fn q_factor_unit_norm() {
        for seed in 0..20 {
            let g = pseudo_random(3, 5, seed);
            let q = q_factor(&g, default_rank_tol(&g)).unwrap();
            assert!((sigma_max(&q) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn norms_and_radius() {
        let d = real(2, 2, &[3.0, 0.0, 0.0, 4.0]);
        assert!((sigma_max(&d) - 4.0).abs() < 1e-15);
        assert!((sigma_min(&d) - 3.0).abs() < 1e-15);
        assert!((spectral_radius(&d).unwrap() - 4.0).abs() < 1e-15);

        let nil = real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!((sigma_max(&nil) - 1.0).abs() < 1e-15);
        assert!(spectral_radius(&nil).unwrap() < 1e-15);
    }

    #[test]
    fn sigma_max_matches_gram_eigenvalue() {
        let m = pseudo_random(5, 5, 7);
        let gram = m.adjoint() * &m;
        let lmax = hermitian_max_eigenvalue(&gram).unwrap();
        assert!((sigma_max(&m).powi(2) - lmax).abs() < 1e-12 * lmax);
    }

    #[test]
    fn eigenvalues_of_triangular() {
        let t = CMatrix::from_row_slice(3, 3, &[
            c(1.0, 1.0),
            c(5.0, 0.0),
            c(2.0, 0.0),
            ZERO,
            c(-2.0, 0.0),
            c(1.0, 3.0),
            ZERO,
            ZERO,
            c(0.0, 0.5),
        ]);
        let mut mods: Vec<f64> = eigenvalues(&t).unwrap().iter().map(|z| z.norm()).collect();
        mods.sort_by(f64::total_cmp);
        assert!((mods[0] - 0.5).abs() < 1e-12);
        assert!((mods[1] - 2f64.sqrt()).abs() < 1e-12);
        assert!((mods[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_sqrt_roundtrip() {
        let a = pseudo_random(3, 3, 9);
        let r = a.adjoint() * &a + CMatrix::identity(3, 3);
        let (sq, isq) = hermitian_sqrt_pair(&r).unwrap();
        assert!((&sq * &sq - &r).norm() < 1e-12);
        assert!((&sq * &isq - CMatrix::identity(3, 3)).norm() < 1e-12);
        assert!(cholesky(&r).is_some());
        assert!(cholesky(&(-r)).is_none());
    }
}
