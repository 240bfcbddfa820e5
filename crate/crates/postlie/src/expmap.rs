//! Matrix exponential, principal logarithm and the numerical BCH map.
//!
//! `expm` is scaling-and-squaring with diagonal Padé approximants, `logm`
//! is inverse scaling-and-squaring (Denman–Beavers square roots, then a
//! Gauss–Legendre partial-fraction Padé form of `log(I+X)`). Both target
//! ~1e-13 relative accuracy on the well-conditioned inputs this crate
//! produces.

use crate::error::Error;
use crate::matrix::{GroupElement, Matrix, NumMatrix};
use crate::Result;

/// Default Frobenius-norm radius inside which the BCH map is trusted.
pub const DEFAULT_BCH_RADIUS: f64 = 0.5;

#[allow(clippy::excessive_precision)]
const THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

fn pade_coeffs(m: usize) -> &'static [f64] {
    match m {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[
            17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
        ],
        9 => &[
            17643225600.0,
            8821612800.0,
            2075673600.0,
            302702400.0,
            30270240.0,
            2162160.0,
            110880.0,
            3960.0,
            90.0,
            1.0,
        ],
        13 => &[
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ],
        _ => unreachable!(),
    }
}

/// Evaluates the order-m Padé approximant of exp at `a` by solving
/// `(V - U) r = (V + U)`.
fn pade_exp(a: &NumMatrix, m: usize) -> Result<NumMatrix> {
    let n = a.dim();
    let b = pade_coeffs(m);
    let ident = Matrix::identity(n);
    let a2 = a * a;
    let (u, v) = if m <= 9 {
        // even powers a^0, a^2, ..., a^(m-1)
        let mut powers = vec![ident.clone()];
        while powers.len() < (m + 1).div_ceil(2) {
            powers.push(&a2 * powers.last().unwrap());
        }
        let mut u_inner = Matrix::zeros(n);
        let mut v = Matrix::zeros(n);
        for (k, coeff) in b.iter().enumerate() {
            let pow = &powers[k / 2];
            if k % 2 == 1 {
                u_inner = &u_inner + &pow.scale(coeff);
            } else {
                v = &v + &pow.scale(coeff);
            }
        }
        (a * &u_inner, v)
    } else {
        let a4 = &a2 * &a2;
        let a6 = &a2 * &a4;
        let u_hi = &(&a6.scale(&b[13]) + &a4.scale(&b[11])) + &a2.scale(&b[9]);
        let u_lo = &(&(&a6.scale(&b[7]) + &a4.scale(&b[5])) + &a2.scale(&b[3])) + &ident.scale(&b[1]);
        let u = a * &(&(&a6 * &u_hi) + &u_lo);
        let v_hi = &(&a6.scale(&b[12]) + &a4.scale(&b[10])) + &a2.scale(&b[8]);
        let v = &(&(&a6 * &v_hi) + &(&a6.scale(&b[6]) + &a4.scale(&b[4]))) + &(&a2.scale(&b[2]) + &ident.scale(&b[0]));
        (u, v)
    };
    let p = &v + &u;
    let q = &v - &u;
    q.lu()?.solve_matrix(&p)
}

/// Scaling-and-squaring matrix exponential.
pub fn expm(a: &NumMatrix) -> Result<GroupElement> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let norm = a.one_norm();
    for &(m, theta) in &THETA[..4] {
        if norm <= theta {
            return GroupElement::new(pade_exp(a, m)?);
        }
    }
    let theta13 = THETA[4].1;
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.scale(&0.5f64.powi(s));
    let mut e = pade_exp(&scaled, 13)?;
    for _ in 0..s {
        e = &e * &e;
    }
    GroupElement::new(e)
}

/// Denman–Beavers iteration with determinant scaling for the principal
/// matrix square root.
fn sqrtm_db(a: &NumMatrix) -> Result<NumMatrix> {
    let n = a.dim();
    let mut y = a.clone();
    let mut z = Matrix::identity(n);
    let mut last_change = f64::INFINITY;
    for it in 0..60 {
        let dy = y.det().abs();
        let dz = z.det().abs();
        if dy == 0.0 || dz == 0.0 || !dy.is_finite() || !dz.is_finite() {
            return Err(Error::Singular { det: dy * dz });
        }
        let mu = (dy * dz).powf(-1.0 / (2.0 * n as f64));
        let ys = y.scale(&mu);
        let zs = z.scale(&mu);
        let y_next = (&ys + &zs.inverse()?).scale(&0.5);
        let z_next = (&zs + &ys.inverse()?).scale(&0.5);
        let change = (&y_next - &y).frobenius_norm() / y_next.frobenius_norm().max(1e-300);
        y = y_next;
        z = z_next;
        if change < 1e-14 || (it > 4 && change >= last_change && change < 1e-10) {
            return Ok(y);
        }
        last_change = change;
    }
    Err(Error::NoConvergence {
        iterations: 60,
        residual: last_change,
    })
}

/// Gauss–Legendre nodes and weights on [0, 1], computed by Newton iteration
/// on the Legendre polynomial.
fn gauss_legendre_01(m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    for i in 1..=m {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            // P_m(x) and P'_m(x) by the three-term recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let mut p0 = 1.0;
        let mut p1 = x;
        for k in 2..=m {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((x + 1.0) / 2.0, w / 2.0));
    }
    out
}

/// Partial-fraction Padé approximant of `log(I + X)`:
/// `Σ_i w_i X (I + x_i X)^{-1}` over the Gauss–Legendre rule.
fn pade_log(x: &NumMatrix, m: usize) -> Result<NumMatrix> {
    let n = x.dim();
    let ident = Matrix::identity(n);
    let mut acc = Matrix::zeros(n);
    for (xi, wi) in gauss_legendre_01(m) {
        let lhs = &ident + &x.scale(&xi);
        let sol = lhs.lu()?.solve_matrix(x)?;
        acc = &acc + &sol.scale(&wi);
    }
    Ok(acc)
}

/// Principal matrix logarithm by inverse scaling-and-squaring.
///
/// Fails with [`Error::LogBranch`] when the spectrum touches the closed
/// negative real axis.
pub fn logm(g: &GroupElement) -> Result<NumMatrix> {
    let a = g.matrix();
    let eigs = a.complex_eigenvalues()?;
    for &(re, im) in &eigs {
        let mag = (re * re + im * im).sqrt();
        if mag < 1e-300 {
            return Err(Error::Singular { det: 0.0 });
        }
        if re <= 0.0 && im.abs() <= 1e-14 * (1.0 + mag) {
            return Err(Error::LogBranch { re, im });
        }
    }
    let n = a.dim();
    let ident = Matrix::identity(n);
    let mut b = a.clone();
    let mut k = 0u32;
    while (&b - &ident).one_norm() > 0.25 {
        b = sqrtm_db(&b)?;
        k += 1;
        if k > 60 {
            return Err(Error::NoConvergence {
                iterations: 60,
                residual: (&b - &ident).one_norm(),
            });
        }
    }
    let x = &b - &ident;
    let log_b = pade_log(&x, 12)?;
    Ok(log_b.scale(&(2.0f64.powi(k as i32))))
}

/// Numerical Baker–Campbell–Hausdorff map `log(exp(a) exp(b))` with the
/// default radius.
pub fn bch(a: &NumMatrix, b: &NumMatrix) -> Result<NumMatrix> {
    bch_with_radius(a, b, DEFAULT_BCH_RADIUS)
}

pub fn bch_with_radius(a: &NumMatrix, b: &NumMatrix, radius: f64) -> Result<NumMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::dim(a.dim(), b.dim()));
    }
    let norm = a.frobenius_norm() + b.frobenius_norm();
    if norm > radius {
        return Err(Error::BchRadius { norm, radius });
    }
    let product = expm(a)?.mul(&expm(b)?);
    logm(&product)
}

/// Reduced BCH map `bch(a, b) - a - b`.
pub fn bch_reduced(a: &NumMatrix, b: &NumMatrix) -> Result<NumMatrix> {
    let full = bch(a, b)?;
    Ok(&(&full - a) - b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::bracket;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m2(rows: [[f64; 2]; 2]) -> NumMatrix {
        Matrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn expm_zero_is_identity() {
        let e = expm(&Matrix::zeros(3)).unwrap();
        assert!((e.matrix() - &Matrix::identity(3)).frobenius_norm() < 1e-15);
    }

    #[test]
    fn expm_diagonal() {
        let a = m2([[0.3, 0.0], [0.0, -1.7]]);
        let e = expm(&a).unwrap();
        assert!((e.matrix().get(0, 0) - 0.3f64.exp()).abs() < 1e-14);
        assert!((e.matrix().get(1, 1) - (-1.7f64).exp()).abs() < 1e-14);
        assert!(e.matrix().get(0, 1).abs() < 1e-15);
    }

    #[test]
    fn expm_rotation_generator() {
        let t = 0.7;
        let a = m2([[0.0, -t], [t, 0.0]]);
        let e = expm(&a).unwrap();
        let expect = m2([[t.cos(), -t.sin()], [t.sin(), t.cos()]]);
        assert!((e.matrix() - &expect).frobenius_norm() < 1e-14);
    }

    #[test]
    fn expm_large_norm_uses_squaring() {
        let a = m2([[0.0, -8.0], [8.0, 0.0]]);
        let e = expm(&a).unwrap();
        let expect = m2([[8.0f64.cos(), -(8.0f64.sin())], [8.0f64.sin(), 8.0f64.cos()]]);
        assert!((e.matrix() - &expect).frobenius_norm() < 1e-12);
    }

    #[test]
    fn logm_identity_is_zero() {
        let l = logm(&GroupElement::identity(4)).unwrap();
        assert!(l.frobenius_norm() < 1e-15);
    }

    #[test]
    fn logm_diagonal() {
        let g = GroupElement::new(m2([[2.0, 0.0], [0.0, 3.0]])).unwrap();
        let l = logm(&g).unwrap();
        assert!((l.get(0, 0) - 2.0f64.ln()).abs() < 1e-13);
        assert!((l.get(1, 1) - 3.0f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn logm_expm_round_trip_small_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in 2..=6 {
            for _ in 0..5 {
                let raw = NumMatrix::random_uniform(dim, &mut rng);
                let a = raw.scale(&(0.5 / raw.frobenius_norm()));
                let back = logm(&expm(&a).unwrap()).unwrap();
                assert!(
                    (&back - &a).frobenius_norm() <= 1e-11,
                    "dim {} residual {}",
                    dim,
                    (&back - &a).frobenius_norm()
                );
            }
        }
    }

    #[test]
    fn logm_branch_error_on_negative_axis() {
        let g = GroupElement::new(m2([[-1.0, 0.0], [0.0, 2.0]])).unwrap();
        assert!(matches!(logm(&g), Err(Error::LogBranch { .. })));
    }

    #[test]
    fn bch_with_zero_returns_a() {
        let a = m2([[0.1, 0.2], [-0.05, 0.03]]);
        let z = Matrix::zeros(2);
        let c = bch(&a, &z).unwrap();
        assert!((&c - &a).frobenius_norm() < 1e-13);
    }

    #[test]
    fn bch_commuting_adds() {
        let a = m2([[0.2, 0.0], [0.0, -0.1]]);
        let b = m2([[0.1, 0.0], [0.0, 0.15]]);
        let c = bch(&a, &b).unwrap();
        assert!((&c - &(&a + &b)).frobenius_norm() < 1e-14);
    }

    #[test]
    fn bch_reduced_commuting_is_zero() {
        let a = m2([[0.2, 0.0], [0.0, -0.1]]);
        let b = m2([[0.1, 0.0], [0.0, 0.15]]);
        assert!(bch_reduced(&a, &b).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn bch_radius_guard() {
        let a = m2([[0.4, 0.0], [0.0, 0.4]]);
        let b = m2([[0.0, 0.4], [0.4, 0.0]]);
        assert!(matches!(bch(&a, &b), Err(Error::BchRadius { .. })));
    }

    /// Degree-3 truncation of the BCH series; the remainder must scale as
    /// the fourth power of the input size.
    #[test]
    fn bch_series_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a0 = NumMatrix::random_uniform(3, &mut rng);
        let b0 = NumMatrix::random_uniform(3, &mut rng);
        let series = |a: &NumMatrix, b: &NumMatrix| {
            let ab = bracket(a, b).unwrap();
            let aab = bracket(a, &ab).unwrap();
            let bba = bracket(b, &bracket(b, a).unwrap()).unwrap();
            &(&(a + b) + &ab.scale(&0.5)) + &(&aab.scale(&(1.0 / 12.0)) + &bba.scale(&(1.0 / 12.0)))
        };
        let resid = |eps: f64| {
            let a = a0.scale(&eps);
            let b = b0.scale(&eps);
            (&bch(&a, &b).unwrap() - &series(&a, &b)).frobenius_norm()
        };
        let r1 = resid(0.04);
        let r2 = resid(0.02);
        let ratio = r1 / r2;
        assert!(
            (8.0..40.0).contains(&ratio),
            "expected ~16x reduction, got {ratio}"
        );
    }

    /// Leading term of the reduced map: bch_reduced(εa, εb) = ε²/2·[a,b] + O(ε³).
    #[test]
    fn bch_reduced_leading_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = NumMatrix::random_uniform(3, &mut rng);
        let b = NumMatrix::random_uniform(3, &mut rng);
        let half_ab = bracket(&a, &b).unwrap().scale(&0.5);
        let resid = |eps: f64| {
            let r = bch_reduced(&a.scale(&eps), &b.scale(&eps)).unwrap();
            (&r - &half_ab.scale(&(eps * eps))).frobenius_norm()
        };
        let r1 = resid(0.02);
        let r2 = resid(0.01);
        let ratio = r1 / r2;
        assert!((5.0..13.0).contains(&ratio), "expected ~8x (cubic), got {ratio}");
    }

    /// Associativity surrogate: exp(bch(a, bch(b, c))) = exp(a) exp(b) exp(c).
    #[test]
    fn bch_associativity_surrogate() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let scale = 0.12;
        let a = NumMatrix::random_uniform(3, &mut rng).scale(&scale);
        let b = NumMatrix::random_uniform(3, &mut rng).scale(&scale);
        let c = NumMatrix::random_uniform(3, &mut rng).scale(&scale);
        let lhs = expm(&bch(&a, &bch(&b, &c).unwrap()).unwrap()).unwrap();
        let rhs = expm(&a).unwrap().mul(&expm(&b).unwrap()).mul(&expm(&c).unwrap());
        assert!((lhs.matrix() - rhs.matrix()).frobenius_norm() < 1e-10);
    }
}
