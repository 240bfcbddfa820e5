//! The BCH-type fixed-point recursion `χ` driving the group factorization
//! `exp(t x) = exp(π₊χ) exp(π₋χ)`, the graded post-Lie Magnus recursion for
//! its series coefficients, and the Bernoulli-weighted `dexp*⁻¹` series.
//!
//! The series recursion, with `A_i` the order-i part of the ordered
//! `▷`-exponential applied to the base point and `D_s` the order-s part of
//! `dexp*⁻¹`, reads
//!
//! ```text
//!     n Ω_n = Σ_{s=0}^{n-1} D_s(A_{n-1-s}),   Ω_1 = a₀.
//! ```
//!
//! Its coefficients coincide order by order with those of the fixed point,
//! which the verification suites check empirically.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::Error;
use crate::expmap::{expm, logm, DEFAULT_BCH_RADIUS};
use crate::matrix::{Matrix, NumMatrix};
use crate::scalar::Scalar;
use crate::splitting::{Side, SplittingSpec};
use crate::Result;

/// Default truncation order for graded series.
pub const DEFAULT_SERIES_ORDER: usize = 8;
/// Default fixed-point tolerance.
pub const DEFAULT_CHI_TOL: f64 = 1e-14;
/// Default fixed-point iteration cap.
pub const DEFAULT_CHI_MAX_ITER: usize = 200;

/// Bernoulli numbers B₀..B_N in the `ad/(e^{ad} − 1)` convention (B₁ = −1/2).
#[derive(Clone, Debug)]
pub struct BernoulliTable {
    values: Vec<BigRational>,
}

impl BernoulliTable {
    pub fn new(max: usize) -> Self {
        let mut values: Vec<BigRational> = Vec::with_capacity(max + 1);
        values.push(<BigRational as One>::one());
        let mut binom_row = vec![BigInt::from(1), BigInt::from(1)]; // C(1, ·)
        for n in 1..=max {
            // binomial row for n+1: C(n+1, j), j = 0..=n+1
            binom_row = {
                let mut next = vec![BigInt::from(1)];
                for j in 1..binom_row.len() {
                    next.push(&binom_row[j - 1] + &binom_row[j]);
                }
                next.push(BigInt::from(1));
                next
            };
            // Σ_{j=0}^{n} C(n+1, j) B_j = 0
            let mut acc = <BigRational as Zero>::zero();
            for (j, b) in values.iter().enumerate() {
                acc += BigRational::from_integer(binom_row[j].clone()) * b;
            }
            let divisor = BigRational::from_integer(binom_row[n].clone());
            values.push(-acc / divisor);
        }
        BernoulliTable { values }
    }

    pub fn get(&self, j: usize) -> &BigRational {
        &self.values[j]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Truncated power series `Σ_{n=1}^{N} tⁿ cₙ` with matrix coefficients.
#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "Matrix<S>: Serialize"))]
pub struct GradedSeries<S: Scalar> {
    dim: usize,
    splitting_kind: String,
    base_point: Matrix<S>,
    coefficients: Vec<Matrix<S>>,
}

impl<S: Scalar> GradedSeries<S>
where
    Matrix<S>: Serialize,
{
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base_point(&self) -> &Matrix<S> {
        &self.base_point
    }

    /// Coefficient of `tⁿ` (1-based).
    pub fn coefficient(&self, n: usize) -> &Matrix<S> {
        &self.coefficients[n - 1]
    }

    /// Horner evaluation of the truncated series at `t`.
    pub fn eval(&self, t: &S) -> Matrix<S> {
        let mut acc: Matrix<S> = Matrix::zeros(self.dim);
        for c in self.coefficients.iter().rev() {
            acc = &acc.scale(t) + c;
        }
        acc.scale(t)
    }
}

/// Result of the fixed-point solve.
#[derive(Clone, Debug)]
pub struct ChiResult {
    pub chi: NumMatrix,
    pub iterations: usize,
    /// Frobenius distance between the last two iterates.
    pub residual: f64,
}

/// Solves `c = π₊(c) + log(exp(−π₊(c)) exp(t x))` by fixed-point iteration
/// started at `t x`.
pub fn chi_fixed_point(
    spec: &SplittingSpec,
    x: &NumMatrix,
    t: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ChiResult> {
    let start = x.scale(&t);
    chi_fixed_point_from(spec, x, t, &start, tol, max_iter)
}

/// Fixed-point solve from an explicit starting guess (used for the
/// uniqueness checks).
pub fn chi_fixed_point_from(
    spec: &SplittingSpec,
    x: &NumMatrix,
    t: f64,
    start: &NumMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<ChiResult> {
    if x.dim() != spec.dim() {
        return Err(Error::dim(spec.dim(), x.dim()));
    }
    let tx = x.scale(&t);
    let norm = tx.frobenius_norm();
    if norm > DEFAULT_BCH_RADIUS {
        return Err(Error::BchRadius {
            norm,
            radius: DEFAULT_BCH_RADIUS,
        });
    }
    let e_tx = expm(&tx)?;
    let mut c = start.clone();
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let p = spec.project(Side::Plus, &c)?;
        let g = expm(&-&p)?.mul(&e_tx);
        let next = &p + &logm(&g)?;
        residual = (&next - &c).frobenius_norm();
        c = next;
        if residual <= tol {
            return Ok(ChiResult {
                chi: c,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// `‖exp(t x) − exp(π₊χ) exp(π₋χ)‖_F` for a candidate `χ` value.
pub fn factorization_residual(
    spec: &SplittingSpec,
    x: &NumMatrix,
    t: f64,
    chi_value: &NumMatrix,
) -> Result<f64> {
    let lhs = expm(&x.scale(&t))?;
    let gp = expm(&spec.project(Side::Plus, chi_value)?)?;
    let gm = expm(&spec.project(Side::Minus, chi_value)?)?;
    Ok((lhs.matrix() - gp.mul(&gm).matrix()).frobenius_norm())
}

/// The printed low-order terms of the expansion `χ(t x) = Σ tⁿ χₙ(x)`:
///
/// ```text
///   χ₁ = x
///   χ₂ = −½ [π₊(x), x]
///   χ₃ = ¼ [π₊([π₊(x), x]), x] + 1/12 ([π₊(x), [π₊(x), x]] − [[π₊(x), x], x])
/// ```
///
/// Used as an independent cross-check of the graded recursion.
pub fn chi_printed_terms<S: Scalar>(
    spec: &SplittingSpec,
    x: &Matrix<S>,
    order: usize,
) -> Result<Vec<Matrix<S>>> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidInput(format!(
            "printed terms available for orders 1..=3, got {order}"
        )));
    }
    let mut terms = vec![x.clone()];
    if order >= 2 {
        let px = spec.project(Side::Plus, x)?;
        let c = px.comm(x); // [π₊(x), x]
        terms.push(c.scale(&S::from_ratio(-1, 2)));
        if order >= 3 {
            let t1 = spec.project(Side::Plus, &c)?.comm(x).scale(&S::from_ratio(1, 4));
            let t2 = px.comm(&c).scale(&S::from_ratio(1, 12));
            let t3 = c.comm(x).scale(&S::from_ratio(-1, 12));
            terms.push(&(&t1 + &t2) + &t3);
        }
    }
    Ok(terms)
}

/// Truncated `dexp*⁻¹_x(y) = Σ_{n≤N} Bₙ/n! ad*ⁿ_x(y)` with `ad*` built from
/// the double bracket.
pub fn dexp_star_inv<S: Scalar>(
    spec: &SplittingSpec,
    x: &Matrix<S>,
    y: &Matrix<S>,
    order: usize,
) -> Result<Matrix<S>> {
    let bern = BernoulliTable::new(order);
    let mut acc = y.clone();
    let mut word = y.clone();
    let mut factorial = <BigRational as One>::one();
    for n in 1..=order {
        word = spec.double_bracket(x, &word)?;
        factorial *= BigRational::from_integer(BigInt::from(n));
        let weight = S::from_rational(&(bern.get(n) / &factorial));
        acc = &acc + &word.scale(&weight);
    }
    Ok(acc)
}

/// Graded coefficients `Ω₁..Ω_N` of the post-Lie Magnus expansion at `a₀`.
/// Arithmetic is exact when `a₀` is exact-mode.
pub fn magnus_coefficients<S: Scalar>(
    spec: &SplittingSpec,
    a0: &Matrix<S>,
    order: usize,
) -> Result<GradedSeries<S>> {
    if order < 1 {
        return Err(Error::InvalidInput("series order must be >= 1".into()));
    }
    if a0.dim() != spec.dim() {
        return Err(Error::dim(spec.dim(), a0.dim()));
    }
    let bern = BernoulliTable::new(order);
    let dim = a0.dim();
    let mut omegas: Vec<Matrix<S>> = vec![a0.clone()];

    // a_parts[i] = order-i part of exp^▷(Ω)(a₀); a_parts[0] = a₀.
    let mut a_parts: Vec<Matrix<S>> = vec![a0.clone()];

    for n in 2..=order {
        // Extend a_parts to index n−1 using Ω₁..Ω_{n−1}.
        let i = n - 1;
        a_parts.push(tri_exponential_part(spec, &omegas, a0, i)?);

        // n Ωₙ = Σ_{s=0}^{n-1} D_s(A_{n-1-s})
        let mut sum = a_parts[n - 1].clone();
        for s in 1..=n - 1 {
            let z = &a_parts[n - 1 - s];
            sum = &sum + &dexp_inv_part(spec, &omegas, &bern, s, z)?;
        }
        omegas.push(sum.scale(&S::from_ratio(1, n as i64)));
    }

    Ok(GradedSeries {
        dim,
        splitting_kind: spec.kind().name().to_string(),
        base_point: a0.clone(),
        coefficients: omegas,
    })
}

/// Order-i part of `exp^▷(Ω)(a₀)`:
/// `Σ_{u=1}^{i} 1/u! Σ_{k₁+⋯+k_u=i} Ω_{k₁} ▷ (⋯ (Ω_{k_u} ▷ a₀))`.
fn tri_exponential_part<S: Scalar>(
    spec: &SplittingSpec,
    omegas: &[Matrix<S>],
    a0: &Matrix<S>,
    i: usize,
) -> Result<Matrix<S>> {
    let dim = a0.dim();
    // g[u][m] = Σ_{k₁+⋯+k_u=m} nested ▷-words applied to a₀
    let mut prev: Vec<Matrix<S>> = (0..=i)
        .map(|m| {
            if m == 0 {
                a0.clone()
            } else {
                Matrix::zeros(dim)
            }
        })
        .collect();
    let mut total: Matrix<S> = Matrix::zeros(dim);
    let mut factorial = <BigRational as One>::one();
    for u in 1..=i {
        let mut cur: Vec<Matrix<S>> = (0..=i).map(|_| Matrix::zeros(dim)).collect();
        for m in u..=i {
            let mut acc: Matrix<S> = Matrix::zeros(dim);
            for k in 1..=m - (u - 1) {
                if prev[m - k].is_zero() {
                    continue;
                }
                acc = &acc + &spec.post_lie(&omegas[k - 1], &prev[m - k])?;
            }
            cur[m] = acc;
        }
        factorial *= BigRational::from_integer(BigInt::from(u));
        let inv_fact = S::from_rational(&factorial.recip());
        total = &total + &cur[i].scale(&inv_fact);
        prev = cur;
    }
    Ok(total)
}

/// Order-s part of `dexp*⁻¹` applied to `z`:
/// `Σ_{j=1}^{s} B_j/j! Σ_{k₁+⋯+k_j=s} ad*_{Ω_{k₁}} ⋯ ad*_{Ω_{k_j}}(z)`.
fn dexp_inv_part<S: Scalar>(
    spec: &SplittingSpec,
    omegas: &[Matrix<S>],
    bern: &BernoulliTable,
    s: usize,
    z: &Matrix<S>,
) -> Result<Matrix<S>> {
    let dim = z.dim();
    let mut prev: Vec<Matrix<S>> = (0..=s)
        .map(|m| if m == 0 { z.clone() } else { Matrix::zeros(dim) })
        .collect();
    let mut total: Matrix<S> = Matrix::zeros(dim);
    let mut factorial = <BigRational as One>::one();
    for j in 1..=s {
        let mut cur: Vec<Matrix<S>> = (0..=s).map(|_| Matrix::zeros(dim)).collect();
        for m in j..=s {
            let mut acc: Matrix<S> = Matrix::zeros(dim);
            for k in 1..=m - (j - 1) {
                if prev[m - k].is_zero() {
                    continue;
                }
                acc = &acc + &spec.double_bracket(&omegas[k - 1], &prev[m - k])?;
            }
            cur[m] = acc;
        }
        factorial *= BigRational::from_integer(BigInt::from(j));
        let weight = S::from_rational(&(bern.get(j) / &factorial));
        total = &total + &cur[s].scale(&weight);
        prev = cur;
    }
    Ok(total)
}

/// Least-squares slope of `log(err)` against `log(t)`, ignoring points whose
/// error has sunk below `floor` (fixed-point tolerance plus f64 roundoff).
/// Returns `(slope, points_used)`.
pub fn log_log_slope(points: &[(f64, f64)], floor: f64) -> (f64, usize) {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, err)| *err > floor)
        .map(|&(t, err)| (t.ln(), err.ln()))
        .collect();
    let n = usable.len();
    if n < 2 {
        return (f64::NAN, n);
    }
    let mean_x = usable.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let mean_y = usable.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in &usable {
        num += (x - mean_x) * (y - mean_y);
        den += (x - mean_x) * (x - mean_x);
    }
    (num / den, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::bracket;
    use crate::splitting::sample_pairs;
    use num_rational::BigRational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m2(rows: [[f64; 2]; 2]) -> NumMatrix {
        Matrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn bernoulli_values() {
        let b = BernoulliTable::new(8);
        let r = |n: i64, d: i64| BigRational::from_ratio(n, d);
        assert_eq!(*b.get(0), r(1, 1));
        assert_eq!(*b.get(1), r(-1, 2));
        assert_eq!(*b.get(2), r(1, 6));
        assert_eq!(*b.get(3), r(0, 1));
        assert_eq!(*b.get(4), r(-1, 30));
        assert_eq!(*b.get(6), r(1, 42));
        assert_eq!(*b.get(8), r(-1, 30));
    }

    #[test]
    fn chi_trivial_on_plus_subalgebra() {
        // x in g₊ for the lower_triangular projector: χ(tx) = tx at once
        let spec = SplittingSpec::lower_triangular(2);
        let x = m2([[0.5, 0.0], [0.7, -0.2]]);
        let res = chi_fixed_point(&spec, &x, 0.3, 1e-14, 50).unwrap();
        assert!((&res.chi - &x.scale(&0.3)).frobenius_norm() < 1e-13);
        assert!(res.iterations <= 2);
    }

    #[test]
    fn chi_trivial_on_minus_subalgebra() {
        let spec = SplittingSpec::lower_triangular(2);
        let x = m2([[0.0, 0.8], [0.0, 0.0]]);
        let res = chi_fixed_point(&spec, &x, 0.3, 1e-14, 50).unwrap();
        assert!((&res.chi - &x.scale(&0.3)).frobenius_norm() < 1e-13);
    }

    #[test]
    fn chi_second_order_oracle() {
        // lower_triangular gl(2), x = [[0,1],[1,0]]: χ₂ = ½ diag(1, −1)
        let spec = SplittingSpec::lower_triangular(2);
        let x = m2([[0.0, 1.0], [1.0, 0.0]]);
        let expect_chi2 = m2([[0.5, 0.0], [0.0, -0.5]]);
        let series = magnus_coefficients(&spec, &x, 3).unwrap();
        assert!((series.coefficient(2) - &expect_chi2).frobenius_norm() < 1e-14);
        // and the fixed point matches tx + t²χ₂ to O(t³)
        let t = 1e-3;
        let res = chi_fixed_point(&spec, &x, t, 1e-15, 100).unwrap();
        let approx = &x.scale(&t) + &expect_chi2.scale(&(t * t));
        assert!((&res.chi - &approx).frobenius_norm() < 10.0 * t * t * t);
    }

    #[test]
    fn chi_radius_guard() {
        let spec = SplittingSpec::lower_triangular(2);
        let x = m2([[0.0, 1.0], [1.0, 0.0]]);
        assert!(matches!(
            chi_fixed_point(&spec, &x, 0.6, 1e-14, 50),
            Err(Error::BchRadius { .. })
        ));
    }

    #[test]
    fn chi_factorization_residual_small() {
        let spec = SplittingSpec::qr_skew(4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let raw = NumMatrix::random_uniform(4, &mut rng);
        let x = raw.scale(&(1.0 / raw.frobenius_norm()));
        let t = 0.2;
        let res = chi_fixed_point(&spec, &x, t, 1e-14, 200).unwrap();
        let r = factorization_residual(&spec, &x, t, &res.chi).unwrap();
        assert!(r <= 1e-10, "residual {r}");
        assert!(res.iterations <= 30, "iterations {}", res.iterations);
    }

    #[test]
    fn printed_terms_match_series_numeric() {
        let spec = SplittingSpec::lower_triangular(3);
        let (x, _) = &sample_pairs(3, 1, 77)[0];
        let printed = chi_printed_terms(&spec, x, 3).unwrap();
        let series = magnus_coefficients(&spec, x, 3).unwrap();
        for n in 1..=3 {
            let d = (&printed[n - 1] - series.coefficient(n)).frobenius_norm();
            assert!(d <= 1e-13, "order {n}: {d}");
        }
    }

    #[test]
    fn printed_terms_match_series_exact_sl2() {
        let r = |n: i64, d: i64| BigRational::from_ratio(n, d);
        let spec = SplittingSpec::lower_triangular(2);
        let a0 = Matrix::from_rows(vec![
            vec![r(1, 2), r(2, 3)],
            vec![r(-1, 5), r(-1, 2)],
        ])
        .unwrap();
        let printed = chi_printed_terms(&spec, &a0, 3).unwrap();
        let series = magnus_coefficients(&spec, &a0, 3).unwrap();
        for n in 1..=3 {
            assert_eq!(
                printed[n - 1],
                *series.coefficient(n),
                "exact mismatch at order {n}"
            );
        }
    }

    #[test]
    fn printed_terms_vanish_on_minus() {
        let spec = SplittingSpec::lower_triangular(2);
        let x = m2([[0.0, 2.0], [0.0, 0.0]]);
        let printed = chi_printed_terms(&spec, &x, 3).unwrap();
        assert!(printed[1].is_zero());
        assert!(printed[2].is_zero());
    }

    #[test]
    fn magnus_omega2_qr_skew_oracle() {
        let spec = SplittingSpec::qr_skew(2);
        let a0 = m2([[0.0, 1.0], [1.0, 0.0]]);
        let series = magnus_coefficients(&spec, &a0, 2).unwrap();
        assert!(
            (series.coefficient(2) - &m2([[1.0, 0.0], [0.0, -1.0]])).frobenius_norm() < 1e-15
        );
    }

    #[test]
    fn magnus_stationary_on_subalgebras() {
        let r = |n: i64, d: i64| BigRational::from_ratio(n, d);
        let spec = SplittingSpec::lower_triangular(2);
        // a₀ in g₊ (lower incl. diagonal)
        let a_plus = Matrix::from_rows(vec![
            vec![r(1, 3), r(0, 1)],
            vec![r(2, 5), r(-1, 7)],
        ])
        .unwrap();
        let series = magnus_coefficients(&spec, &a_plus, 6).unwrap();
        for n in 2..=6 {
            assert!(series.coefficient(n).is_zero(), "order {n} not zero");
        }
        // a₀ in g₋ (strictly upper)
        let a_minus = Matrix::from_rows(vec![
            vec![r(0, 1), r(3, 4)],
            vec![r(0, 1), r(0, 1)],
        ])
        .unwrap();
        let series = magnus_coefficients(&spec, &a_minus, 6).unwrap();
        for n in 2..=6 {
            assert!(series.coefficient(n).is_zero(), "order {n} not zero");
        }
    }

    #[test]
    fn magnus_order_validation() {
        let spec = SplittingSpec::lower_triangular(2);
        let a0 = m2([[0.0, 1.0], [1.0, 0.0]]);
        assert!(matches!(
            magnus_coefficients(&spec, &a0, 0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn dexp_star_inv_low_orders() {
        let spec = SplittingSpec::qr_skew(3);
        let pairs = sample_pairs(3, 3, 4);
        for (x, y) in &pairs {
            let d0 = dexp_star_inv(&spec, x, y, 0).unwrap();
            assert!((&d0 - y).frobenius_norm() < 1e-15);
            let d1 = dexp_star_inv(&spec, x, y, 1).unwrap();
            let expect = y - &spec.double_bracket(x, y).unwrap().scale(&0.5);
            assert!((&d1 - &expect).frobenius_norm() < 1e-15);
        }
        // commuting case: ⟦x, y⟧ = 0 → y for all N
        let x = m2([[1.0, 0.0], [0.0, 2.0]]);
        let spec2 = SplittingSpec::lower_triangular(2);
        let d = dexp_star_inv(&spec2, &x, &x, 6).unwrap();
        assert!((&d - &x).frobenius_norm() < 1e-15);
    }

    #[test]
    fn series_matches_fixed_point_to_high_order() {
        let spec = SplittingSpec::lower_triangular(3);
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let raw = NumMatrix::random_uniform(3, &mut rng);
        let x = raw.scale(&(1.0 / raw.frobenius_norm()));
        let series = magnus_coefficients(&spec, &x, 6).unwrap();
        let t = 0.05;
        let fp = chi_fixed_point(&spec, &x, t, 1e-15, 200).unwrap();
        let err = (&series.eval(&t) - &fp.chi).frobenius_norm();
        // truncation error is O(t⁷)
        assert!(err < 1e-7, "err {err}");
    }

    #[test]
    fn truncated_chi_factorization_residual_order() {
        // with χ evaluated from the order-N series, the group factorization
        // residual decays as t^{N+1}
        let spec = SplittingSpec::qr_skew(3);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let raw = NumMatrix::random_uniform(3, &mut rng);
        let x = raw.scale(&(2.0 / raw.frobenius_norm()));
        let order = 4;
        let series = magnus_coefficients(&spec, &x, order).unwrap();
        let points: Vec<(f64, f64)> = (3..=6)
            .map(|k| {
                let t = 2f64.powi(-k);
                let r = factorization_residual(&spec, &x, t, &series.eval(&t)).unwrap();
                (t, r)
            })
            .collect();
        let (slope, used) = log_log_slope(&points, 1e-12);
        assert!(used >= 3);
        assert!(
            (slope - (order as f64 + 1.0)).abs() <= 0.4,
            "slope {slope} from {used} points"
        );
        // x in g₊: χ = tx factorizes to machine precision
        let xp = spec.project(Side::Plus, &x).unwrap();
        let r = factorization_residual(&spec, &xp, 0.1, &xp.scale(&0.1)).unwrap();
        assert!(r <= 1e-14, "plus-subalgebra residual {r}");
    }

    #[test]
    fn slope_fit_utility() {
        // synthetic fourth-order data with a floor
        let pts: Vec<(f64, f64)> = (3..=8)
            .map(|k| {
                let t = 2f64.powi(-k);
                (t, (0.3 * t.powi(4)).max(1e-15))
            })
            .collect();
        let (slope, used) = log_log_slope(&pts, 1e-12);
        assert!((slope - 4.0).abs() < 0.05, "slope {slope}");
        assert!(used >= 3);
    }

    #[test]
    fn graded_series_serializes_per_order() {
        let spec = SplittingSpec::qr_skew(2);
        let a0 = m2([[0.0, 1.0], [1.0, 0.0]]);
        let series = magnus_coefficients(&spec, &a0, 3).unwrap();
        let doc = serde_json::to_value(&series).unwrap();
        assert_eq!(doc["splitting_kind"], "qr_skew");
        assert_eq!(doc["coefficients"].as_array().unwrap().len(), 3);
        assert_eq!(doc["coefficients"][1]["rows"][0][0], 1.0); // Ω₂ = diag(1,−1)
        // exact mode serializes entries as rational strings
        let r = |n: i64, d: i64| BigRational::from_ratio(n, d);
        let a0 = Matrix::from_rows(vec![vec![r(0, 1), r(1, 2)], vec![r(1, 2), r(0, 1)]]).unwrap();
        let series = magnus_coefficients(&spec, &a0, 2).unwrap();
        let doc = serde_json::to_value(&series).unwrap();
        assert_eq!(doc["coefficients"][1]["rows"][0][0], "1/4");
    }

    #[test]
    fn alternate_factorization_identity() {
        // exp(tx) = exp(−π₋χ(−tx)) exp(−π₊χ(−tx))
        let spec = SplittingSpec::qr_skew(3);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let raw = NumMatrix::random_uniform(3, &mut rng);
        let x = raw.scale(&(1.0 / raw.frobenius_norm()));
        let t = 0.2;
        let chim = chi_fixed_point(&spec, &x, -t, 1e-14, 200).unwrap().chi;
        let lhs = expm(&x.scale(&t)).unwrap();
        let gm = expm(&-&spec.project(Side::Minus, &chim).unwrap()).unwrap();
        let gp = expm(&-&spec.project(Side::Plus, &chim).unwrap()).unwrap();
        let rhs = gm.mul(&gp);
        assert!((lhs.matrix() - rhs.matrix()).frobenius_norm() < 1e-10);
    }

    #[test]
    fn projector_adstar_pushforward() {
        // π₊(ad*_{w₁} ⋯ ad*_{w_u} a₀) = (−1)ᵘ ad_{π₊w₁} ⋯ ad_{π₊w_u} π₊(a₀)
        for spec in [
            SplittingSpec::lower_triangular(3),
            SplittingSpec::qr_skew(3),
        ] {
            let samples = sample_pairs(3, 4, 55);
            let a0 = &samples[0].0;
            let words: Vec<&NumMatrix> = vec![&samples[1].0, &samples[2].1, &samples[3].0];
            for u in 1..=3 {
                let mut inner = a0.clone();
                for w in words[..u].iter().rev() {
                    inner = spec.double_bracket(w, &inner).unwrap();
                }
                let lhs = spec.project(Side::Plus, &inner).unwrap();
                let mut rhs = spec.project(Side::Plus, a0).unwrap();
                for w in words[..u].iter().rev() {
                    let pw = spec.project(Side::Plus, w).unwrap();
                    rhs = bracket(&pw, &rhs).unwrap();
                }
                if u % 2 == 1 {
                    rhs = -&rhs;
                }
                assert!(
                    (&lhs - &rhs).frobenius_norm() <= 1e-12,
                    "u = {u} kind {:?}",
                    spec.kind()
                );
            }
        }
    }
}
