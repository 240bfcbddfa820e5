//! R-matrix splittings `π₊`/`π₋` of a matrix Lie algebra, the induced
//! post-Lie product and double bracket, and sampling-based certification of
//! the defining identities.
//!
//! Shipped splittings:
//! * `lower_triangular` — `π₊` keeps the lower triangle including the
//!   diagonal, so `g₋` is the strictly upper triangle;
//! * `qr_skew` — `π₊(a) = a_low − a_lowᵀ` (image `so(n)`), complementary
//!   part upper triangular; this is the splitting behind QR-type flows.
//!
//! Custom splittings are explicit n²×n² matrices acting on column-major
//! vectorized elements. Certification is by random sampling; the report
//! records the sample count, seed and tolerance used.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::matrix::{bracket, Matrix, NumMatrix};
use crate::scalar::Scalar;
use crate::Result;

/// Default tolerance for numeric certification.
pub const DEFAULT_VALIDATION_TOL: f64 = 1e-10;
/// Default number of random sample pairs.
pub const DEFAULT_SAMPLE_COUNT: usize = 100;

/// Which projector to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplittingKind {
    LowerTriangular,
    QrSkew,
    Custom,
}

impl SplittingKind {
    pub fn name(&self) -> &'static str {
        match self {
            SplittingKind::LowerTriangular => "lower_triangular",
            SplittingKind::QrSkew => "qr_skew",
            SplittingKind::Custom => "custom",
        }
    }
}

/// Residual report from sampling-based certification.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    pub dim: usize,
    pub kind: String,
    pub sample_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tol: f64,
    /// Max residual of the splitting identity for `π₊`.
    pub mybe_plus: f64,
    /// Max residual of the splitting identity for `π₋`.
    pub mybe_minus: f64,
    /// Max residual of the modified classical Yang–Baxter equation for
    /// `R = id − 2π₊`.
    pub mcybe: f64,
    /// Max of `‖π₋([π₊x, π₊y])‖_F` (closure of the plus image).
    pub closure_plus: f64,
    /// Max of `‖π₊([π₋x, π₋y])‖_F` (closure of the minus image).
    pub closure_minus: f64,
    pub validated: bool,
}

impl ValidationReport {
    pub fn max_residual(&self) -> f64 {
        self.mybe_plus
            .max(self.mybe_minus)
            .max(self.mcybe)
            .max(self.closure_plus)
            .max(self.closure_minus)
    }
}

/// A splitting `g = g₊ ⊕ g₋` packaged with its certification state.
#[derive(Clone, Debug)]
pub struct SplittingSpec {
    dim: usize,
    kind: SplittingKind,
    /// n²×n² action on column-major vectorized matrices (custom kind only).
    custom: Option<NumMatrix>,
    validation: Option<ValidationReport>,
}

#[derive(Serialize, Deserialize)]
struct SpecDoc {
    dim: usize,
    kind: SplittingKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<f64>>>,
}

impl SplittingSpec {
    pub fn lower_triangular(dim: usize) -> Self {
        SplittingSpec {
            dim,
            kind: SplittingKind::LowerTriangular,
            custom: None,
            validation: None,
        }
    }

    pub fn qr_skew(dim: usize) -> Self {
        SplittingSpec {
            dim,
            kind: SplittingKind::QrSkew,
            custom: None,
            validation: None,
        }
    }

    /// Custom `π₊` given by its n²×n² coefficient matrix on column-major
    /// vectorized elements.
    pub fn custom(dim: usize, coeffs: NumMatrix) -> Result<Self> {
        if coeffs.dim() != dim * dim {
            return Err(Error::dim(dim * dim, coeffs.dim()));
        }
        if !coeffs.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(SplittingSpec {
            dim,
            kind: SplittingKind::Custom,
            custom: Some(coeffs),
            validation: None,
        })
    }

    /// The scaled identity `π₊ = ½·id`, which fails certification; useful
    /// as a negative control.
    pub fn half_identity(dim: usize) -> Self {
        let n2 = dim * dim;
        let coeffs = Matrix::from_fn(n2, |i, j| if i == j { 0.5 } else { 0.0 });
        SplittingSpec::custom(dim, coeffs).expect("square by construction")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> SplittingKind {
        self.kind
    }

    pub fn custom_matrix(&self) -> Option<&NumMatrix> {
        self.custom.as_ref()
    }

    pub fn validation(&self) -> Option<&ValidationReport> {
        self.validation.as_ref()
    }

    pub fn is_validated(&self) -> bool {
        self.validation.as_ref().is_some_and(|r| r.validated)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let doc = SpecDoc {
            dim: self.dim,
            kind: self.kind,
            matrix: self.custom.as_ref().map(|m| m.rows()),
        };
        serde_json::to_value(doc).expect("spec serialization cannot fail")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let doc: SpecDoc = serde_json::from_value(v.clone())
            .map_err(|e| Error::InvalidInput(format!("splitting spec: {e}")))?;
        match doc.kind {
            SplittingKind::LowerTriangular => Ok(SplittingSpec::lower_triangular(doc.dim)),
            SplittingKind::QrSkew => Ok(SplittingSpec::qr_skew(doc.dim)),
            SplittingKind::Custom => {
                let rows = doc.matrix.ok_or_else(|| {
                    Error::InvalidInput("custom splitting requires a matrix".into())
                })?;
                let m = Matrix::from_rows(rows)?;
                SplittingSpec::custom(doc.dim, m)
            }
        }
    }

    /// Applies `π₊` or `π₋` to `a`. Linear; `project(+, a) + project(-, a) = a`.
    pub fn project<S: Scalar>(&self, side: Side, a: &Matrix<S>) -> Result<Matrix<S>> {
        if a.dim() != self.dim {
            return Err(Error::dim(self.dim, a.dim()));
        }
        let plus = match self.kind {
            SplittingKind::LowerTriangular => Matrix::from_fn(self.dim, |i, j| {
                if i >= j {
                    a.get(i, j).clone()
                } else {
                    S::zero()
                }
            }),
            SplittingKind::QrSkew => Matrix::from_fn(self.dim, |i, j| {
                if i > j {
                    a.get(i, j).clone()
                } else if i < j {
                    a.get(j, i).neg()
                } else {
                    S::zero()
                }
            }),
            SplittingKind::Custom => {
                let p = self.custom.as_ref().expect("custom kind carries a matrix");
                let n = self.dim;
                let mut out = Matrix::zeros(n);
                // column-major vectorization: vec(a)[j*n + i] = a[i][j]
                for jj in 0..n {
                    for ii in 0..n {
                        let row = jj * n + ii;
                        let mut acc = S::zero();
                        for jc in 0..n {
                            for ic in 0..n {
                                let c = *p.get(row, jc * n + ic);
                                if c == 0.0 {
                                    continue;
                                }
                                let c = S::from_f64_exact(c).ok_or(Error::NonFinite)?;
                                acc = acc.add(&c.mul(a.get(ic, jc)));
                            }
                        }
                        out.set(ii, jj, acc);
                    }
                }
                out
            }
        };
        Ok(match side {
            Side::Plus => plus,
            Side::Minus => a - &plus,
        })
    }

    /// Post-Lie product `a ▷ b = -[π₊(a), b]`.
    pub fn post_lie<S: Scalar>(&self, a: &Matrix<S>, b: &Matrix<S>) -> Result<Matrix<S>> {
        let pa = self.project(Side::Plus, a)?;
        Ok(-&bracket(&pa, b)?)
    }

    /// Double bracket `⟦a, b⟧ = [π₋a, b] + [a, π₋b] − [a, b]`.
    pub fn double_bracket<S: Scalar>(&self, a: &Matrix<S>, b: &Matrix<S>) -> Result<Matrix<S>> {
        let ma = self.project(Side::Minus, a)?;
        let mb = self.project(Side::Minus, b)?;
        Ok(&(&bracket(&ma, b)? + &bracket(a, &mb)?) - &bracket(a, b)?)
    }

    /// `a ▶ b = a ▷ b + [a, b] = [π₋(a), b]`.
    pub fn black_product<S: Scalar>(&self, a: &Matrix<S>, b: &Matrix<S>) -> Result<Matrix<S>> {
        let ma = self.project(Side::Minus, a)?;
        bracket(&ma, b)
    }

    /// `a ≻ b = a ▷ b + ½[a, b] = [½R(a), b]` with `R = id − 2π₊`.
    pub fn succ_product<S: Scalar>(&self, a: &Matrix<S>, b: &Matrix<S>) -> Result<Matrix<S>> {
        let tri = self.post_lie(a, b)?;
        let half = S::from_ratio(1, 2);
        Ok(&tri + &bracket(a, b)?.scale(&half))
    }

    /// `R(a) = a − 2π₊(a)`.
    pub fn r_matrix<S: Scalar>(&self, a: &Matrix<S>) -> Result<Matrix<S>> {
        let pa = self.project(Side::Plus, a)?;
        Ok(a - &pa.scale(&S::from_ratio(2, 1)))
    }

    /// Residual of the splitting identity
    /// `[πx, πy] + π([x, y]) − π([πx, y] + [x, πy])` for the given side.
    pub fn mybe_residual(&self, side: Side, x: &NumMatrix, y: &NumMatrix) -> Result<f64> {
        let px = self.project(side, x)?;
        let py = self.project(side, y)?;
        let lhs = &bracket(&px, &py)? + &self.project(side, &bracket(x, y)?)?;
        let rhs = self.project(side, &(&bracket(&px, y)? + &bracket(x, &py)?))?;
        Ok((&lhs - &rhs).frobenius_norm())
    }

    /// Residual of `[R(x), R(y)] − R([R(x), y] + [x, R(y)]) + [x, y]`.
    pub fn mcybe_residual(&self, x: &NumMatrix, y: &NumMatrix) -> Result<f64> {
        let rx = self.r_matrix(x)?;
        let ry = self.r_matrix(y)?;
        let inner = &bracket(&rx, y)? + &bracket(x, &ry)?;
        let resid = &(&bracket(&rx, &ry)? - &self.r_matrix(&inner)?) + &bracket(x, y)?;
        Ok(resid.frobenius_norm())
    }

    /// `‖π∓([π±x, π±y])‖_F` — how far the ± image is from closing under the
    /// bracket.
    pub fn closure_residual(&self, side: Side, x: &NumMatrix, y: &NumMatrix) -> Result<f64> {
        let px = self.project(side, x)?;
        let py = self.project(side, y)?;
        let other = match side {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        };
        Ok(self.project(other, &bracket(&px, &py)?)?.frobenius_norm())
    }

    /// Certifies the splitting on explicit sample pairs and stores the
    /// report. The spec is considered immutable afterwards.
    pub fn validate_with_samples(
        &mut self,
        samples: &[(NumMatrix, NumMatrix)],
        tol: f64,
        seed: Option<u64>,
    ) -> Result<ValidationReport> {
        if samples.is_empty() {
            return Err(Error::InvalidInput(
                "validation requires at least one sample pair".into(),
            ));
        }
        let mut report = ValidationReport {
            dim: self.dim,
            kind: self.kind.name().to_string(),
            sample_count: samples.len(),
            seed,
            tol,
            mybe_plus: 0.0,
            mybe_minus: 0.0,
            mcybe: 0.0,
            closure_plus: 0.0,
            closure_minus: 0.0,
            validated: false,
        };
        for (x, y) in samples {
            report.mybe_plus = report.mybe_plus.max(self.mybe_residual(Side::Plus, x, y)?);
            report.mybe_minus = report
                .mybe_minus
                .max(self.mybe_residual(Side::Minus, x, y)?);
            report.mcybe = report.mcybe.max(self.mcybe_residual(x, y)?);
            report.closure_plus = report
                .closure_plus
                .max(self.closure_residual(Side::Plus, x, y)?);
            report.closure_minus = report
                .closure_minus
                .max(self.closure_residual(Side::Minus, x, y)?);
        }
        report.validated = report.max_residual() <= tol;
        self.validation = Some(report.clone());
        Ok(report)
    }

    /// Certifies on `count` seeded random pairs with entries uniform in
    /// [-1, 1].
    pub fn validate_random(
        &mut self,
        count: usize,
        seed: u64,
        tol: f64,
    ) -> Result<ValidationReport> {
        let samples = sample_pairs(self.dim, count, seed);
        self.validate_with_samples(&samples, tol, Some(seed))
    }
}

/// Seeded random sample pairs with entries uniform in [-1, 1].
pub fn sample_pairs(dim: usize, count: usize, seed: u64) -> Vec<(NumMatrix, NumMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (
                NumMatrix::random_uniform(dim, &mut rng),
                NumMatrix::random_uniform(dim, &mut rng),
            )
        })
        .collect()
}
