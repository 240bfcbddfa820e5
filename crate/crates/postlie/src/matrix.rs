//! Dense square matrices over a [`Scalar`], regarded as elements of a matrix
//! Lie algebra, plus the `f64`-only linear algebra kernel (LU, norms,
//! balancing, eigenvalues) backing the numeric half of the crate.

use std::ops::{Add, Index, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_rational::BigRational;
use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::scalar::{rational_from_str, rational_to_string, Scalar};
use crate::Result;

/// Default floor on `|det|` below which a matrix is rejected as a group
/// element.
pub const DEFAULT_DET_FLOOR: f64 = 1e-12;

/// Square matrix with row-major storage.
#[derive(Clone, PartialEq)]
pub struct Matrix<S> {
    dim: usize,
    data: Vec<S>,
}

/// Numeric-mode matrix.
pub type NumMatrix = Matrix<f64>;
/// Exact-mode matrix.
pub type RatMatrix = Matrix<BigRational>;

impl<S: Scalar> Matrix<S> {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![S::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, S::one());
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Matrix { dim, data }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::dim(dim, row.len()));
            }
            data.extend(row);
        }
        Ok(Matrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.dim + j] = v;
    }

    pub fn entries(&self) -> impl Iterator<Item = &S> {
        self.data.iter()
    }

    pub fn rows(&self) -> Vec<Vec<S>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j).clone()).collect())
            .collect()
    }

    pub fn map(&self, f: impl Fn(&S) -> S) -> Self {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map(|v| v.mul(c))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).clone())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    /// Commutator `self·rhs − rhs·self`. Panics on dimension mismatch; the
    /// checked entry point is [`bracket`].
    pub fn comm(&self, rhs: &Self) -> Self {
        &(self * rhs) - &(rhs * self)
    }

    pub fn to_num(&self) -> NumMatrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v.to_f64()).collect(),
        }
    }

    fn check_same_dim(&self, rhs: &Self) -> Result<()> {
        if self.dim != rhs.dim {
            return Err(Error::dim(self.dim, rhs.dim));
        }
        Ok(())
    }
}

/// Lie bracket `[a, b] = ab − ba` with dimension checking.
pub fn bracket<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>) -> Result<Matrix<S>> {
    a.check_same_dim(b)?;
    Ok(a.comm(b))
}

impl<S: Scalar> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        self.get(i, j)
    }
}

impl<S: Scalar> Add for &Matrix<S> {
    type Output = Matrix<S>;
    fn add(self, rhs: Self) -> Matrix<S> {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        Matrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }
}

impl<S: Scalar> Sub for &Matrix<S> {
    type Output = Matrix<S>;
    fn sub(self, rhs: Self) -> Matrix<S> {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        Matrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }
}

impl<S: Scalar> Neg for &Matrix<S> {
    type Output = Matrix<S>;
    fn neg(self) -> Matrix<S> {
        self.map(|v| v.neg())
    }
}

impl<S: Scalar> Mul for &Matrix<S> {
    type Output = Matrix<S>;
    fn mul(self, rhs: Self) -> Matrix<S> {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let n = self.dim;
        let mut out = Matrix::<S>::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a_ik = self.get(i, k);
                if a_ik.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j).add(&a_ik.mul(rhs.get(k, j)));
                    out.set(i, j, v);
                }
            }
        }
        out
    }
}

impl<S: Scalar> std::fmt::Debug for Matrix<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Matrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                write!(f, "{:?} ", self.get(i, j))?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

// ---------------------------------------------------------------------------
// f64 kernel
// ---------------------------------------------------------------------------

impl NumMatrix {
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Entries i.i.d. uniform in [-1, 1].
    pub fn random_uniform(dim: usize, rng: &mut impl Rng) -> Self {
        Matrix {
            dim,
            data: (0..dim * dim).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
        }
    }

    pub fn lu(&self) -> Result<Lu> {
        Lu::new(self)
    }

    pub fn det(&self) -> f64 {
        match self.lu() {
            Ok(lu) => lu.det(),
            Err(_) => 0.0,
        }
    }

    pub fn inverse(&self) -> Result<NumMatrix> {
        self.lu()?.solve_matrix(&Matrix::identity(self.dim))
    }

    /// Parlett–Reinsch balancing by powers of two (similarity transform, so
    /// the spectrum is preserved exactly).
    pub fn balanced(&self) -> NumMatrix {
        let n = self.dim;
        let mut a = self.clone();
        let radix = 2.0f64;
        for _ in 0..50 {
            let mut converged = true;
            for i in 0..n {
                let mut c: f64 = (0..n)
                    .filter(|&k| k != i)
                    .map(|k| a.get(k, i).abs())
                    .sum();
                let mut r: f64 = (0..n)
                    .filter(|&k| k != i)
                    .map(|k| a.get(i, k).abs())
                    .sum();
                if c == 0.0 || r == 0.0 {
                    continue;
                }
                let s = c + r;
                let mut f = 1.0;
                while c < r / radix {
                    c *= radix;
                    r /= radix;
                    f *= radix;
                }
                while c >= r * radix {
                    c /= radix;
                    r *= radix;
                    f /= radix;
                }
                if c + r < 0.95 * s {
                    converged = false;
                    for k in 0..n {
                        let v = a.get(i, k) / f;
                        a.set(i, k, v);
                        let v = a.get(k, i) * f;
                        a.set(k, i, v);
                    }
                }
            }
            if converged {
                break;
            }
        }
        a
    }

    /// Eigenvalues of the balanced matrix via a real Schur decomposition.
    pub fn complex_eigenvalues(&self) -> Result<Vec<(f64, f64)>> {
        if !self.is_finite() {
            return Err(Error::NonFinite);
        }
        let b = self.balanced();
        let m = DMatrix::from_row_slice(self.dim, self.dim, &b.data);
        let schur = nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 10_000)
            .ok_or(Error::EigenFailure { t: f64::NAN })?;
        let eig = schur.complex_eigenvalues();
        Ok(eig.iter().map(|z| (z.re, z.im)).collect())
    }
}

/// LU decomposition with partial pivoting.
pub struct Lu {
    dim: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
    sign: f64,
}

impl Lu {
    fn new(a: &NumMatrix) -> Result<Lu> {
        if !a.is_finite() {
            return Err(Error::NonFinite);
        }
        let n = a.dim;
        let mut lu = a.data.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for i in k + 1..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::Singular { det: 0.0 });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let m = lu[i * n + k] / pivot;
                lu[i * n + k] = m;
                for j in k + 1..n {
                    lu[i * n + j] -= m * lu[k * n + j];
                }
            }
        }
        Ok(Lu {
            dim: n,
            lu,
            piv,
            sign,
        })
    }

    pub fn det(&self) -> f64 {
        let n = self.dim;
        (0..n).fold(self.sign, |d, k| d * self.lu[k * n + k])
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &NumMatrix) -> Result<NumMatrix> {
        if b.dim != self.dim {
            return Err(Error::dim(self.dim, b.dim));
        }
        let n = self.dim;
        let mut x = Matrix::zeros(n);
        let mut col = vec![0.0; n];
        for j in 0..n {
            for i in 0..n {
                col[i] = *b.get(self.piv[i], j);
            }
            // forward substitution (unit lower)
            for i in 1..n {
                for k in 0..i {
                    col[i] -= self.lu[i * n + k] * col[k];
                }
            }
            // back substitution
            for i in (0..n).rev() {
                for k in i + 1..n {
                    col[i] -= self.lu[i * n + k] * col[k];
                }
                col[i] /= self.lu[i * n + i];
            }
            for i in 0..n {
                x.set(i, j, col[i]);
            }
        }
        if !x.is_finite() {
            return Err(Error::Singular { det: self.det() });
        }
        Ok(x)
    }
}

// ---------------------------------------------------------------------------
// Group elements
// ---------------------------------------------------------------------------

/// Invertible numeric matrix (Lie group element).
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    m: NumMatrix,
}

impl GroupElement {
    pub fn new(m: NumMatrix) -> Result<Self> {
        Self::with_det_floor(m, DEFAULT_DET_FLOOR)
    }

    pub fn with_det_floor(m: NumMatrix, floor: f64) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        let det = m.det();
        if det.abs() <= floor {
            return Err(Error::Singular { det });
        }
        Ok(GroupElement { m })
    }

    pub fn identity(dim: usize) -> Self {
        GroupElement {
            m: Matrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn matrix(&self) -> &NumMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> NumMatrix {
        self.m
    }

    pub fn mul(&self, rhs: &GroupElement) -> GroupElement {
        GroupElement {
            m: &self.m * &rhs.m,
        }
    }

    pub fn inverse(&self) -> Result<GroupElement> {
        Ok(GroupElement {
            m: self.m.inverse()?,
        })
    }

    /// Conjugation `g⁻¹ a g`.
    pub fn conjugate(&self, a: &NumMatrix) -> Result<NumMatrix> {
        let inv = self.m.inverse()?;
        Ok(&(&inv * a) * &self.m)
    }

    /// Distance from orthogonality `‖gᵀg − I‖_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        let gtg = &self.m.transpose() * &self.m;
        (&gtg - &Matrix::identity(self.m.dim())).frobenius_norm()
    }

    /// Re-orthogonalization by modified Gram–Schmidt on columns.
    pub fn orthogonalized(&self) -> GroupElement {
        let n = self.m.dim();
        let mut cols: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..n).map(|i| *self.m.get(i, j)).collect())
            .collect();
        for j in 0..n {
            for k in 0..j {
                let dot: f64 = (0..n).map(|i| cols[k][i] * cols[j][i]).sum();
                for i in 0..n {
                    cols[j][i] -= dot * cols[k][i];
                }
            }
            let norm: f64 = (0..n).map(|i| cols[j][i] * cols[j][i]).sum::<f64>().sqrt();
            for i in 0..n {
                cols[j][i] /= norm;
            }
        }
        GroupElement {
            m: Matrix::from_fn(n, |i, j| cols[j][i]),
        }
    }
}

// ---------------------------------------------------------------------------
// Serialization: {"dim": n, "rows": [[...], ...]}
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct MatrixDoc<E> {
    dim: usize,
    rows: Vec<Vec<E>>,
}

impl Serialize for NumMatrix {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        MatrixDoc {
            dim: self.dim,
            rows: self.rows(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for NumMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = MatrixDoc::<f64>::deserialize(d)?;
        if doc.rows.len() != doc.dim {
            return Err(D::Error::custom("row count does not match dim"));
        }
        Matrix::from_rows(doc.rows).map_err(D::Error::custom)
    }
}

impl Serialize for RatMatrix {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        MatrixDoc {
            dim: self.dim,
            rows: (0..self.dim)
                .map(|i| {
                    (0..self.dim)
                        .map(|j| rational_to_string(self.get(i, j)))
                        .collect()
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RatMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = MatrixDoc::<String>::deserialize(d)?;
        if doc.rows.len() != doc.dim {
            return Err(D::Error::custom("row count does not match dim"));
        }
        let mut rows = Vec::with_capacity(doc.dim);
        for row in doc.rows {
            let parsed: Option<Vec<_>> = row.iter().map(|s| rational_from_str(s)).collect();
            rows.push(parsed.ok_or_else(|| D::Error::custom("invalid rational entry"))?);
        }
        Matrix::from_rows(rows).map_err(D::Error::custom)
    }
}

/// Matrix unit `E_ij` (1 in row i, column j).
pub fn matrix_unit<S: Scalar>(dim: usize, i: usize, j: usize) -> Matrix<S> {
    let mut m = Matrix::zeros(dim);
    m.set(i, j, S::one());
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn m2(rows: [[f64; 2]; 2]) -> NumMatrix {
        Matrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn bracket_matrix_units() {
        // [E12, E21] = E11 - E22 in gl(2)
        let e12 = matrix_unit::<f64>(2, 0, 1);
        let e21 = matrix_unit::<f64>(2, 1, 0);
        let b = bracket(&e12, &e21).unwrap();
        assert_eq!(b, m2([[1.0, 0.0], [0.0, -1.0]]));
    }

    #[test]
    fn bracket_self_is_zero() {
        let a = m2([[0.3, -1.2], [2.5, 0.7]]);
        assert!(bracket(&a, &a).unwrap().is_zero());
    }

    #[test]
    fn bracket_2x2_oracle() {
        let a = m2([[0.0, 1.0], [1.0, 0.0]]);
        let b = m2([[0.0, -1.0], [1.0, 0.0]]);
        assert_eq!(bracket(&a, &b).unwrap(), m2([[2.0, 0.0], [0.0, -2.0]]));
    }

    #[test]
    fn bracket_dim_mismatch() {
        let a = Matrix::<f64>::identity(2);
        let b = Matrix::<f64>::identity(3);
        assert!(matches!(
            bracket(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn exact_bracket_antisymmetry_and_jacobi() {
        let r = |n: i64, d: i64| BigRational::from_ratio(n, d);
        let a = Matrix::from_rows(vec![
            vec![r(1, 2), r(-3, 4)],
            vec![r(5, 7), r(0, 1)],
        ])
        .unwrap();
        let b = Matrix::from_rows(vec![
            vec![r(2, 3), r(1, 5)],
            vec![r(-1, 2), r(4, 9)],
        ])
        .unwrap();
        let c = Matrix::from_rows(vec![
            vec![r(0, 1), r(7, 3)],
            vec![r(1, 8), r(-2, 5)],
        ])
        .unwrap();
        let ab = bracket(&a, &b).unwrap();
        let ba = bracket(&b, &a).unwrap();
        assert!((&ab + &ba).is_zero());
        let jac = &(&bracket(&a, &bracket(&b, &c).unwrap()).unwrap()
            + &bracket(&b, &bracket(&c, &a).unwrap()).unwrap())
            + &bracket(&c, &bracket(&a, &b).unwrap()).unwrap();
        assert!(jac.is_zero());
    }

    #[test]
    fn lu_solve_and_det() {
        let a = m2([[4.0, 3.0], [6.0, 3.0]]);
        let lu = a.lu().unwrap();
        assert!((lu.det() - (-6.0)).abs() < 1e-12);
        let inv = a.inverse().unwrap();
        let prod = &a * &inv;
        assert!((&prod - &Matrix::identity(2)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn eigenvalues_of_rotation_generator() {
        let a = m2([[0.0, -1.0], [1.0, 0.0]]);
        let mut eig = a.complex_eigenvalues().unwrap();
        eig.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap());
        assert!((eig[0].0).abs() < 1e-12 && (eig[0].1 + 1.0).abs() < 1e-12);
        assert!((eig[1].0).abs() < 1e-12 && (eig[1].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn group_element_rejects_singular() {
        let a = m2([[1.0, 2.0], [2.0, 4.0]]);
        assert!(matches!(GroupElement::new(a), Err(Error::Singular { .. })));
    }

    #[test]
    fn serde_round_trip_numeric() {
        let a = m2([[1.5, -2.0], [0.25, 3.0]]);
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.contains("\"dim\":2"));
        let back: NumMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn serde_round_trip_exact() {
        let r = |n: i64, d: i64| BigRational::from_ratio(n, d);
        let a = Matrix::from_rows(vec![
            vec![r(1, 3), r(-2, 1)],
            vec![r(0, 1), r(5, 7)],
        ])
        .unwrap();
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.contains("1/3"));
        let back: RatMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(a, back);
    }
}
