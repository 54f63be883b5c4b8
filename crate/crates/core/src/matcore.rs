//! Dense complex matrices and the transcendental kernels built on them.
//!
//! [`Mat`] is a square complex matrix. The exponential uses scaling and
//! squaring around a diagonal Padé approximant, the logarithm uses a Schur
//! decomposition followed by inverse scaling and squaring, and the unitary
//! polar factor comes from the singular value decomposition.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type C64 = Complex64;

/// Eigenvalues must satisfy `|arg λ| ≤ π − BRANCH_CUT_MARGIN` for [`Mat::log`].
pub const BRANCH_CUT_MARGIN: f64 = 1e-6;
/// Eigenvalue moduli accepted by [`Mat::log`] lie in `[MIN_MODULUS, MAX_MODULUS]`.
pub const MIN_MODULUS: f64 = 1e-6;
pub const MAX_MODULUS: f64 = 1e6;
/// Smallest singular value accepted by [`Mat::polar`].
pub const POLAR_SINGULAR_THRESHOLD: f64 = 1e-10;

/// Diagonal Padé degree for the exponential on the scaled argument.
const EXP_PADE_DEGREE: usize = 8;
/// Scaling threshold: the argument is halved until its Frobenius norm
/// (which dominates the operator norm) is at most this.
const EXP_SCALE_THRESHOLD: f64 = 0.5;
/// Square roots are taken until the Frobenius distance to `I` drops below this.
const LOG_SQRT_THRESHOLD: f64 = 0.25;
const LOG_MAX_SQRTS: usize = 64;
/// Relative size of the strictly upper Schur factor below which the input is
/// treated as normal.
const NORMALITY_TOL: f64 = 1e-13;
const SCHUR_MAX_ITER: usize = 5000;
const DB_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatError {
    #[error("matrix has dimension zero")]
    ZeroDimension,
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("expected {expected} entries, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix is singular (smallest singular value {sigma_min:e})")]
    Singular { sigma_min: f64 },
    #[error("eigenvalue {re:e}{im:+e}i is too close to the branch cut of the principal logarithm")]
    SpectrumNearCut { re: f64, im: f64 },
    #[error("eigenvalue modulus {modulus:e} outside the logarithm's accepted range")]
    SpectrumOutOfRange { modulus: f64 },
    #[error("decomposition failed to converge")]
    NoConvergence,
}

/// Square complex matrix.
#[derive(Clone, PartialEq)]
pub struct Mat(DMatrix<C64>);

impl Mat {
    /// Builds an `n × n` matrix from row-major entries.
    pub fn from_row_slice(n: usize, entries: &[C64]) -> Result<Self, MatError> {
        if n == 0 {
            return Err(MatError::ZeroDimension);
        }
        if entries.len() != n * n {
            return Err(MatError::WrongLength { expected: n * n, got: entries.len() });
        }
        let m = Mat(DMatrix::from_row_slice(n, n, entries));
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Mat(DMatrix::from_fn(n, n, f))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        Mat::from_fn(n, |i, j| if i == j { diag[i] } else { C64::new(0.0, 0.0) })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Mat::from_diagonal(&diag.iter().map(|&d| C64::new(d, 0.0)).collect::<Vec<_>>())
    }

    pub fn identity(n: usize) -> Self {
        Mat(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Mat(DMatrix::zeros(n, n))
    }

    /// Matrix unit `E_{ij}`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Mat::zeros(n);
        m.0[(i, j)] = C64::new(1.0, 0.0);
        m
    }

    pub fn from_nalgebra(m: DMatrix<C64>) -> Result<Self, MatError> {
        if m.nrows() != m.ncols() {
            return Err(MatError::DimensionMismatch { left: m.nrows(), right: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(MatError::ZeroDimension);
        }
        let m = Mat(m);
        m.check_finite()?;
        Ok(m)
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.0[(i, j)] = value;
    }

    fn check_finite(&self) -> Result<(), MatError> {
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let z = self.0[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(MatError::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.check_finite().is_ok()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Mat {
        Mat(self.0.adjoint())
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat(&self.0 * C64::new(s, 0.0))
    }

    pub fn scale_complex(&self, s: C64) -> Mat {
        Mat(&self.0 * s)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn determinant(&self) -> C64 {
        self.0.determinant()
    }

    /// Commutator `self·other − other·self`.
    pub fn bracket(&self, other: &Mat) -> Mat {
        &(self * other) - &(other * self)
    }

    /// Largest singular value.
    pub fn opnorm(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    /// Lie-compatible norm, `2·opnorm`, satisfying `‖[x,y]‖ ≤ ‖x‖·‖y‖`.
    pub fn lienorm(&self) -> f64 {
        2.0 * self.opnorm()
    }

    pub fn fronorm(&self) -> f64 {
        self.0.norm()
    }

    /// Maximum entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.0.clone().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn sigma_min(&self) -> f64 {
        self.singular_values().last().copied().unwrap_or(0.0)
    }

    pub fn inv(&self) -> Result<Mat, MatError> {
        match self.0.clone().try_inverse() {
            Some(m) if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => Ok(Mat(m)),
            _ => Err(MatError::Singular { sigma_min: self.sigma_min() }),
        }
    }

    /// Solves `self · X = rhs`.
    pub fn solve(&self, rhs: &Mat) -> Result<Mat, MatError> {
        let lu = self.0.clone().lu();
        lu.solve(&rhs.0)
            .filter(|m| m.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
            .map(Mat)
            .ok_or_else(|| MatError::Singular { sigma_min: self.sigma_min() })
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// Skew-Hermitian part `(x − x*)/2`.
    pub fn skew_hermitian_part(&self) -> Mat {
        (self - &self.adjoint()).scale(0.5)
    }

    /// Hermitian part `(x + x*)/2`.
    pub fn hermitian_part(&self) -> Mat {
        (self + &self.adjoint()).scale(0.5)
    }

    /// Matrix exponential.
    pub fn exp(&self) -> Result<Mat, MatError> {
        let n = self.dim();
        if n == 0 {
            return Err(MatError::ZeroDimension);
        }
        self.check_finite()?;
        if self.is_zero() {
            return Ok(Mat::identity(n));
        }
        let norm = self.fronorm();
        let mut squarings = 0u32;
        if norm > EXP_SCALE_THRESHOLD {
            squarings = (norm / EXP_SCALE_THRESHOLD).log2().ceil().max(0.0) as u32;
        }
        let scaled = self.scale(0.5f64.powi(squarings as i32));
        let mut result = pade_exp(&scaled)?;
        for _ in 0..squarings {
            result = &result * &result;
        }
        Ok(result)
    }

    /// Principal logarithm.
    ///
    /// Normal inputs are handled through their (diagonal) Schur form; other
    /// inputs go through repeated triangular square roots and a Gregory
    /// series.
    pub fn log(&self) -> Result<Mat, MatError> {
        let n = self.dim();
        if n == 0 {
            return Err(MatError::ZeroDimension);
        }
        self.check_finite()?;
        if *self == Mat::identity(n) {
            return Ok(Mat::zeros(n));
        }
        let id = DMatrix::<C64>::identity(n, n);
        if (&self.0 - &id).norm() <= LOG_SQRT_THRESHOLD {
            return Mat::from_nalgebra(scaled_log(self.0.clone(), denman_beavers_sqrt)?);
        }
        let Some(schur) = Schur::try_new(self.0.clone(), f64::EPSILON, SCHUR_MAX_ITER) else {
            return Mat::from_nalgebra(scaled_log(self.0.clone(), denman_beavers_sqrt)?);
        };
        let (q, t) = schur.unpack();
        let diag: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
        for &lambda in &diag {
            check_log_spectrum(lambda)?;
        }

        let strict_upper: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| t[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        let t_norm = t.norm().max(1.0);

        let log_t = if strict_upper <= NORMALITY_TOL * t_norm {
            let logs: Vec<C64> = diag.iter().map(|z| z.ln()).collect();
            DMatrix::from_fn(n, n, |i, j| if i == j { logs[i] } else { C64::new(0.0, 0.0) })
        } else {
            scaled_log(t, |m| Ok(triangular_sqrt(m)))?
        };
        let out = &q * log_t * q.adjoint();
        Mat::from_nalgebra(out)
    }

    /// Polar decomposition `self = q·p` with `q` unitary and `p` Hermitian
    /// positive definite.
    pub fn polar(&self) -> Result<(Mat, Mat), MatError> {
        let svd = self.0.clone().svd(true, true);
        let sigma_min = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
        if !(sigma_min > POLAR_SINGULAR_THRESHOLD) {
            return Err(MatError::Singular { sigma_min });
        }
        let u = svd.u.ok_or(MatError::NoConvergence)?;
        let v_t = svd.v_t.ok_or(MatError::NoConvergence)?;
        let q = &u * &v_t;
        let sigma = DMatrix::from_diagonal(&svd.singular_values.map(|s| C64::new(s, 0.0)));
        let p = v_t.adjoint() * sigma * &v_t;
        let p = Mat(p).hermitian_part();
        Ok((Mat(q), p))
    }

    /// Unitary polar factor: the nearest unitary in Frobenius norm.
    pub fn polar_unitary(&self) -> Result<Mat, MatError> {
        self.polar().map(|(q, _)| q)
    }
}

fn check_log_spectrum(lambda: C64) -> Result<(), MatError> {
    let modulus = lambda.norm();
    if modulus < MIN_MODULUS {
        return Err(MatError::Singular { sigma_min: modulus });
    }
    if modulus > MAX_MODULUS {
        return Err(MatError::SpectrumOutOfRange { modulus });
    }
    if lambda.arg().abs() > std::f64::consts::PI - BRANCH_CUT_MARGIN {
        return Err(MatError::SpectrumNearCut { re: lambda.re, im: lambda.im });
    }
    Ok(())
}

/// `[m/m]` Padé coefficients of `e^x`.
fn pade_coefficients(m: usize) -> Vec<f64> {
    let mut c = vec![1.0; m + 1];
    for k in 0..m {
        c[k + 1] = c[k] * (m - k) as f64 / ((k + 1) as f64 * (2 * m - k) as f64);
    }
    c
}

fn pade_exp(x: &Mat) -> Result<Mat, MatError> {
    let n = x.dim();
    let c = pade_coefficients(EXP_PADE_DEGREE);
    let mut power = Mat::identity(n);
    let mut numer = Mat::zeros(n);
    let mut denom = Mat::zeros(n);
    for (k, &ck) in c.iter().enumerate() {
        if k > 0 {
            power = &power * x;
        }
        let term = power.scale(ck);
        numer = &numer + &term;
        denom = if k % 2 == 0 { &denom + &term } else { &denom - &term };
    }
    denom.solve(&numer)
}

/// Principal square root of an upper triangular matrix whose diagonal avoids
/// the closed negative real axis.
fn triangular_sqrt(t: &DMatrix<C64>) -> DMatrix<C64> {
    let n = t.nrows();
    let mut r = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        r[(i, i)] = t[(i, i)].sqrt();
    }
    for d in 1..n {
        for i in 0..n - d {
            let j = i + d;
            let mut s = t[(i, j)];
            for k in i + 1..j {
                s -= r[(i, k)] * r[(k, j)];
            }
            r[(i, j)] = s / (r[(i, i)] + r[(j, j)]);
        }
    }
    r
}

/// Principal square root by the Denman–Beavers iteration, for inputs whose
/// Schur form is unavailable.
fn denman_beavers_sqrt(a: &DMatrix<C64>) -> Result<DMatrix<C64>, MatError> {
    let n = a.nrows();
    let half = C64::new(0.5, 0.0);
    let mut y = a.clone();
    let mut z = DMatrix::<C64>::identity(n, n);
    for _ in 0..DB_MAX_ITER {
        let y_inv = y.clone().try_inverse().ok_or(MatError::Singular { sigma_min: 0.0 })?;
        let z_inv = z.clone().try_inverse().ok_or(MatError::Singular { sigma_min: 0.0 })?;
        let y_next = (&y + z_inv) * half;
        z = (&z + y_inv) * half;
        let step = (&y_next - &y).norm();
        y = y_next;
        if step <= 1e-15 * y.norm() {
            return Ok(y);
        }
    }
    Err(MatError::NoConvergence)
}

/// Inverse scaling and squaring: take square roots until `‖T − I‖_F` is
/// small, then sum the Gregory series.
fn scaled_log(
    mut t: DMatrix<C64>,
    sqrt: impl Fn(&DMatrix<C64>) -> Result<DMatrix<C64>, MatError>,
) -> Result<DMatrix<C64>, MatError> {
    let n = t.nrows();
    let id = DMatrix::<C64>::identity(n, n);
    let mut roots = 0u32;
    while (&t - &id).norm() > LOG_SQRT_THRESHOLD {
        if roots as usize >= LOG_MAX_SQRTS {
            return Err(MatError::NoConvergence);
        }
        t = sqrt(&t)?;
        roots += 1;
    }
    // log(I + X) = 2·atanh(Z) with Z = X·(2I + X)⁻¹.
    let x = &t - &id;
    let two_plus_x = &x + &id * C64::new(2.0, 0.0);
    // X and 2I + X commute, so the left solve gives the same Z.
    let z = two_plus_x
        .lu()
        .solve(&x)
        .ok_or(MatError::Singular { sigma_min: 0.0 })?;
    let z2 = &z * &z;
    let mut term = z.clone();
    let mut sum = z.clone();
    let mut k = 1usize;
    loop {
        term = &term * &z2;
        let contrib = &term * C64::new(1.0 / (2 * k + 1) as f64, 0.0);
        let size = contrib.norm();
        sum += contrib;
        k += 1;
        if size <= 1e-18 * sum.norm().max(1e-300) || k > 200 {
            break;
        }
    }
    Ok(sum * C64::new(2.0 * 2f64.powi(roots as i32), 0.0))
}

/// Skew-Hermitian matrix with operator norm exactly `norm`: Gaussian entries,
/// skew-symmetrized, then rescaled.
pub fn rand_skew_hermitian<R: Rng + ?Sized>(n: usize, norm: f64, rng: &mut R) -> Mat {
    let mut entries = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        entries.push(C64::new(re, im));
    }
    let a = Mat(DMatrix::from_row_slice(n, n, &entries));
    let x = a.skew_hermitian_part();
    let current = x.opnorm();
    if norm == 0.0 || current == 0.0 {
        return Mat::zeros(n);
    }
    x.scale(norm / current)
}

/// Hermitian matrix with operator norm exactly `norm`.
pub fn rand_hermitian<R: Rng + ?Sized>(n: usize, norm: f64, rng: &mut R) -> Mat {
    rand_skew_hermitian(n, norm, rng).scale_complex(C64::new(0.0, 1.0))
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl<'a> $trait<&'a Mat> for &'a Mat {
            type Output = Mat;
            fn $method(self, rhs: &'a Mat) -> Mat {
                Mat(&self.0 $op &rhs.0)
            }
        }
        impl $trait<Mat> for Mat {
            type Output = Mat;
            fn $method(self, rhs: Mat) -> Mat {
                Mat(self.0 $op rhs.0)
            }
        }
    };
}

forward_binop!(Add, add, +);
forward_binop!(Sub, sub, -);
forward_binop!(Mul, mul, *);

impl Neg for &Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        Mat(-&self.0)
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mat{}", self.0)
    }
}

// JSON literal: array of rows, each row an array of [re, im] pairs.
impl Serialize for Mat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let n = self.dim();
        let rows: Vec<Vec<[f64; 2]>> = (0..n)
            .map(|i| (0..n).map(|j| [self.0[(i, j)].re, self.0[(i, j)].im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Mat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        let n = rows.len();
        if n == 0 {
            return Err(D::Error::custom("matrix literal has no rows"));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(D::Error::custom(format!(
                    "matrix literal row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            entries.extend(row.iter().map(|&[re, im]| C64::new(re, im)));
        }
        Mat::from_row_slice(n, &entries).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Truncated Taylor series, summed in order.
    fn taylor_exp(x: &Mat, terms: usize) -> Mat {
        let mut sum = Mat::identity(x.dim());
        let mut term = Mat::identity(x.dim());
        for k in 1..terms {
            term = (&term * x).scale(1.0 / k as f64);
            sum = &sum + &term;
        }
        sum
    }

    #[test]
    fn exp_of_zero_is_identity_exactly() {
        assert_eq!(Mat::zeros(2).exp().unwrap(), Mat::identity(2));
    }

    #[test]
    fn exp_of_imaginary_diagonal() {
        let x = Mat::from_diagonal(&[c(0.0, PI / 2.0), c(0.0, -PI / 2.0)]);
        let e = x.exp().unwrap();
        let want = Mat::from_diagonal(&[c(0.0, 1.0), c(0.0, -1.0)]);
        assert!((&e - &want).max_abs() < 1e-15);
    }

    #[test]
    fn exp_matches_taylor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=4 {
            let x = rand_skew_hermitian(n, 0.3, &mut rng);
            let diff = (&x.exp().unwrap() - &taylor_exp(&x, 60)).opnorm();
            assert!(diff <= 1e-13, "n={n} diff={diff:e}");
        }
    }

    #[test]
    fn exp_large_argument_relative_accuracy() {
        // Diagonalizable by construction: exp(V·D·V⁻¹) = V·exp(D)·V⁻¹.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v = &Mat::identity(3) + &rand_skew_hermitian(3, 0.4, &mut rng);
        let d = [c(2.0, 3.0), c(-4.0, 1.0), c(0.5, -7.0)];
        let x = &(&v * &Mat::from_diagonal(&d)) * &v.inv().unwrap();
        let want = &(&v * &Mat::from_diagonal(&d.map(|z| z.exp()))) * &v.inv().unwrap();
        let got = x.exp().unwrap();
        assert!((&got - &want).opnorm() <= 1e-12 * want.opnorm());
    }

    #[test]
    fn zero_dimension_rejected() {
        assert_eq!(Mat::from_row_slice(0, &[]).unwrap_err(), MatError::ZeroDimension);
    }

    #[test]
    fn log_identity_is_zero() {
        assert!(Mat::identity(3).log().unwrap().is_zero());
    }

    #[test]
    fn log_inverts_exp() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=4 {
            let x = rand_skew_hermitian(n, 0.5, &mut rng);
            let back = x.exp().unwrap().log().unwrap();
            assert!((&back - &x).opnorm() <= 1e-10);
        }
    }

    #[test]
    fn log_branch_cut_rejected() {
        let u = Mat::from_diagonal(&[c(-1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(u.log(), Err(MatError::SpectrumNearCut { .. })));
    }

    #[test]
    fn log_singular_rejected() {
        let u = Mat::from_real_diagonal(&[1e-9, 1.0]);
        assert!(matches!(u.log(), Err(MatError::Singular { .. })));
    }

    #[test]
    fn log_non_normal_round_trip() {
        // Jordan-type block goes through the triangular square-root path.
        let u = Mat::from_row_slice(3, &[
            c(2.0, 0.0), c(1.0, 0.5), c(0.3, 0.0),
            c(0.0, 0.0), c(0.5, 1.0), c(-0.7, 0.2),
            c(0.0, 0.0), c(0.0, 0.0), c(1.5, -0.4),
        ])
        .unwrap();
        let l = u.log().unwrap();
        assert!((&l.exp().unwrap() - &u).opnorm() <= 1e-10);
        let jordan = Mat::from_row_slice(2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let lj = jordan.log().unwrap();
        assert!((&lj - &Mat::unit(2, 0, 1)).max_abs() < 1e-12);
    }

    #[test]
    fn near_identity_logs_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let x = rand_skew_hermitian(4, 1e-3, &mut rng);
            let back = x.exp().unwrap().log().unwrap();
            assert!((&back - &x).opnorm() <= 1e-14);
        }
    }

    #[test]
    fn denman_beavers_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let a = &rand_skew_hermitian(3, 2.0, &mut rng).exp().unwrap() * &rand_hermitian(3, 0.5, &mut rng).exp().unwrap();
        let r = denman_beavers_sqrt(a.as_nalgebra()).unwrap();
        assert!((&r * &r - a.as_nalgebra()).norm() <= 1e-12);
        let via_dense = Mat::from_nalgebra(scaled_log(a.as_nalgebra().clone(), denman_beavers_sqrt).unwrap()).unwrap();
        assert!((&via_dense - &a.log().unwrap()).opnorm() <= 1e-10);
    }

    #[test]
    fn polar_of_unitary_is_itself() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = rand_skew_hermitian(3, 1.2, &mut rng).exp().unwrap();
        assert!((&q.polar_unitary().unwrap() - &q).opnorm() < 1e-12);
    }

    #[test]
    fn polar_recovers_unitary_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = rand_skew_hermitian(3, 2.0, &mut rng).exp().unwrap();
        let p = rand_hermitian(3, 0.2, &mut rng).exp().unwrap();
        let got = (&q * &p).polar_unitary().unwrap();
        assert!((&got - &q).opnorm() < 1e-12);
    }

    #[test]
    fn polar_of_positive_diagonal_is_identity() {
        let q = Mat::from_real_diagonal(&[2.0, 0.5]).polar_unitary().unwrap();
        assert!((&q - &Mat::identity(2)).opnorm() < 1e-14);
    }

    #[test]
    fn polar_rejects_singular() {
        let u = Mat::from_real_diagonal(&[1.0, 0.0]);
        assert!(matches!(u.polar_unitary(), Err(MatError::Singular { .. })));
    }

    #[test]
    fn norms_on_fixed_inputs() {
        assert!((Mat::identity(3).opnorm() - 1.0).abs() < 1e-15);
        assert!((Mat::from_real_diagonal(&[3.0, 4.0]).fronorm() - 5.0).abs() < 1e-15);
        assert!((Mat::from_real_diagonal(&[3.0, -4.0]).opnorm() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn inverse_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = &Mat::identity(4).scale(2.0) + &rand_hermitian(4, 1.0, &mut rng);
        let res = (&(&x * &x.inv().unwrap()) - &Mat::identity(4)).opnorm();
        let s = x.singular_values();
        assert!(res <= 1e-10 * s[0] / s[3]);
        assert!(matches!(Mat::zeros(2).inv(), Err(MatError::Singular { .. })));
    }

    #[test]
    fn rand_skew_hermitian_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(rand_skew_hermitian(3, 0.0, &mut rng).is_zero());
        let x = rand_skew_hermitian(3, 0.7, &mut rng);
        assert!((&x + &x.adjoint()).max_abs() <= 1e-15);
        assert!((x.opnorm() - 0.7).abs() < 1e-14);
        let a = rand_skew_hermitian(4, 1.0, &mut ChaCha8Rng::seed_from_u64(99));
        let b = rand_skew_hermitian(4, 1.0, &mut ChaCha8Rng::seed_from_u64(99));
        assert_eq!(a, b);
    }

    #[test]
    fn json_literal_round_trip() {
        let m = Mat::from_row_slice(2, &[c(1.0, 2.0), c(0.0, -1.5), c(3.25, 0.0), c(0.0, 0.0)]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[[[1.0,2.0],[0.0,-1.5]],[[3.25,0.0],[0.0,0.0]]]");
        let back: Mat = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<Mat>("[[[1,0],[0,0]]]").is_err());
    }
}
