//! Structure constants with exact-rational entries, their catalogs, and
//! splittings expressed on the chosen basis.

use std::sync::Arc;

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::Error;
use crate::matrix::{Matrix, RatMatrix};
use crate::scalar::rational_from_str;
use crate::splitting::{Side, SplittingKind, SplittingSpec};
use crate::Result;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// A Lie algebra given by exact structure constants `[eᵢ, eⱼ] = Σ c^k_ij e_k`,
/// optionally with its defining matrix representation.
#[derive(Debug)]
pub struct StructureConstants {
    name: String,
    dim: usize,
    labels: Vec<String>,
    /// Flattened `[i][j][k]` coefficient of `e_k` in `[eᵢ, eⱼ]`.
    c: Vec<BigRational>,
    /// Basis matrices of the defining representation, when known.
    basis_rep: Option<Vec<RatMatrix>>,
}

impl StructureConstants {
    pub fn new(
        name: impl Into<String>,
        labels: Vec<String>,
        entries: &[(usize, usize, usize, BigRational)],
        basis_rep: Option<Vec<RatMatrix>>,
    ) -> Result<Arc<Self>> {
        let dim = labels.len();
        let mut c = vec![BigRational::zero(); dim * dim * dim];
        for &(i, j, k, ref v) in entries {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::InvalidInput(format!(
                    "structure constant index ({i},{j},{k}) out of range for dim {dim}"
                )));
            }
            c[(i * dim + j) * dim + k] = v.clone();
        }
        let sc = StructureConstants {
            name: name.into(),
            dim,
            labels,
            c,
            basis_rep,
        };
        sc.check()?;
        Ok(Arc::new(sc))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn basis_rep(&self) -> Option<&[RatMatrix]> {
        self.basis_rep.as_deref()
    }

    pub fn constant(&self, i: usize, j: usize, k: usize) -> &BigRational {
        &self.c[(i * self.dim + j) * self.dim + k]
    }

    /// Coordinates of `[eᵢ, eⱼ]`.
    pub fn bracket_basis(&self, i: usize, j: usize) -> &[BigRational] {
        let d = self.dim;
        &self.c[(i * d + j) * d..(i * d + j + 1) * d]
    }

    /// Coordinates of `[x, y]` for coordinate vectors.
    pub fn bracket_vec(&self, x: &[BigRational], y: &[BigRational]) -> Vec<BigRational> {
        let d = self.dim;
        let mut out = vec![BigRational::zero(); d];
        for i in 0..d {
            if x[i].is_zero() {
                continue;
            }
            for j in 0..d {
                if y[j].is_zero() {
                    continue;
                }
                let xy = &x[i] * &y[j];
                for (k, ck) in self.bracket_basis(i, j).iter().enumerate() {
                    if !ck.is_zero() {
                        out[k] += &xy * ck;
                    }
                }
            }
        }
        out
    }

    /// Antisymmetry and the Jacobi identity, exactly.
    fn check(&self) -> Result<()> {
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    if self.constant(i, j, k) + self.constant(j, i, k) != BigRational::zero() {
                        return Err(Error::InvalidInput(format!(
                            "structure constants not antisymmetric at ({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        for i in 0..d {
            for j in i + 1..d {
                for k in j + 1..d {
                    for l in 0..d {
                        let mut acc = BigRational::zero();
                        for m in 0..d {
                            acc += self.constant(j, k, m) * self.constant(i, m, l);
                            acc += self.constant(k, i, m) * self.constant(j, m, l);
                            acc += self.constant(i, j, m) * self.constant(k, m, l);
                        }
                        if !acc.is_zero() {
                            return Err(Error::InvalidInput(format!(
                                "Jacobi identity fails at ({i},{j},{k};{l})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `sl(2)` with the basis (e, h, f): `[e,f] = h`, `[h,e] = 2e`,
    /// `[h,f] = -2f`.
    pub fn sl2() -> Arc<Self> {
        let entries = vec![
            (0, 2, 1, rat(1, 1)),
            (2, 0, 1, rat(-1, 1)),
            (1, 0, 0, rat(2, 1)),
            (0, 1, 0, rat(-2, 1)),
            (1, 2, 2, rat(-2, 1)),
            (2, 1, 2, rat(2, 1)),
        ];
        let unit = |i: usize, j: usize| {
            let mut m: RatMatrix = Matrix::zeros(2);
            m.set(i, j, rat(1, 1));
            m
        };
        let h = {
            let mut m: RatMatrix = Matrix::zeros(2);
            m.set(0, 0, rat(1, 1));
            m.set(1, 1, rat(-1, 1));
            m
        };
        StructureConstants::new(
            "sl2",
            vec!["e".into(), "h".into(), "f".into()],
            &entries,
            Some(vec![unit(0, 1), h, unit(1, 0)]),
        )
        .expect("sl2 constants are consistent")
    }

    /// `gl(n)` with the matrix-unit basis `E_ab` ordered row-major:
    /// `[E_ab, E_cd] = δ_bc E_ad − δ_da E_cb`.
    pub fn gl(n: usize) -> Arc<Self> {
        let idx = |a: usize, b: usize| a * n + b;
        let mut entries = Vec::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let i = idx(a, b);
                        let j = idx(c, d);
                        if b == c {
                            entries.push((i, j, idx(a, d), rat(1, 1)));
                        }
                        if d == a {
                            entries.push((i, j, idx(c, b), rat(-1, 1)));
                        }
                    }
                }
            }
        }
        // merge duplicate (i,j,k) contributions (diagonal cases overlap)
        let mut merged: std::collections::BTreeMap<(usize, usize, usize), BigRational> =
            std::collections::BTreeMap::new();
        for (i, j, k, v) in entries {
            *merged.entry((i, j, k)).or_insert_with(BigRational::zero) += v;
        }
        let entries: Vec<_> = merged
            .into_iter()
            .filter(|(_, v)| !v.is_zero())
            .map(|((i, j, k), v)| (i, j, k, v))
            .collect();
        let labels = (0..n)
            .flat_map(|a| (0..n).map(move |b| format!("E{}{}", a + 1, b + 1)))
            .collect();
        let rep = (0..n)
            .flat_map(|a| {
                (0..n).map(move |b| {
                    let mut m: RatMatrix = Matrix::zeros(n);
                    m.set(a, b, rat(1, 1));
                    m
                })
            })
            .collect();
        StructureConstants::new(format!("gl{n}"), labels, &entries, Some(rep))
            .expect("gl(n) constants are consistent")
    }

    /// Built-in catalogs by name.
    pub fn from_json(v: &serde_json::Value) -> Result<Arc<Self>> {
        let dim = v
            .get("dim")
            .and_then(|d| d.as_u64())
            .ok_or_else(|| Error::InvalidInput("structure constants need a dim".into()))? as usize;
        let labels = match v.get("labels") {
            Some(ls) => serde_json::from_value::<Vec<String>>(ls.clone())
                .map_err(|e| Error::InvalidInput(format!("labels: {e}")))?,
            None => (0..dim).map(|i| format!("x{i}")).collect(),
        };
        if labels.len() != dim {
            return Err(Error::InvalidInput("label count differs from dim".into()));
        }
        let raw = v
            .get("c")
            .and_then(|c| c.as_array())
            .ok_or_else(|| Error::InvalidInput("structure constants need a c array".into()))?;
        let mut entries = Vec::new();
        for item in raw {
            let row = item
                .as_array()
                .filter(|r| r.len() == 4)
                .ok_or_else(|| Error::InvalidInput("c entries are [i, j, k, \"p/q\"]".into()))?;
            let i = row[0].as_u64().ok_or_else(bad_index)? as usize;
            let j = row[1].as_u64().ok_or_else(bad_index)? as usize;
            let k = row[2].as_u64().ok_or_else(bad_index)? as usize;
            let val = match &row[3] {
                serde_json::Value::String(s) => rational_from_str(s)
                    .ok_or_else(|| Error::InvalidInput(format!("bad rational {s:?}")))?,
                serde_json::Value::Number(n) => {
                    BigRational::from_float(n.as_f64().unwrap_or(f64::NAN))
                        .ok_or_else(|| Error::InvalidInput("non-finite constant".into()))?
                }
                other => {
                    return Err(Error::InvalidInput(format!(
                        "bad structure constant value {other}"
                    )))
                }
            };
            entries.push((i, j, k, val));
        }
        StructureConstants::new("custom", labels, &entries, None)
    }
}

fn bad_index() -> Error {
    Error::InvalidInput("structure constant indices must be integers".into())
}

/// Built-in structure-constant catalogs: `sl2`, `gl2`, `gl3`.
pub fn catalog(name: &str) -> Option<Arc<StructureConstants>> {
    match name {
        "sl2" => Some(StructureConstants::sl2()),
        "gl2" => Some(StructureConstants::gl(2)),
        "gl3" => Some(StructureConstants::gl(3)),
        _ => None,
    }
}

/// Expands `target` as an exact linear combination of `basis` matrices, by
/// Gaussian elimination over the rationals. `None` when outside the span.
pub fn expand_in_basis(basis: &[RatMatrix], target: &RatMatrix) -> Option<Vec<BigRational>> {
    let n = target.dim();
    let rows = n * n;
    let cols = basis.len();
    // augmented system [basis entries | target]
    let mut aug: Vec<Vec<BigRational>> = (0..rows)
        .map(|r| {
            let (i, j) = (r / n, r % n);
            let mut row: Vec<BigRational> = basis.iter().map(|b| b.get(i, j).clone()).collect();
            row.push(target.get(i, j).clone());
            row
        })
        .collect();
    let mut pivot_rows = Vec::new();
    let mut r0 = 0;
    for c in 0..cols {
        let Some(pr) = (r0..rows).find(|&r| !aug[r][c].is_zero()) else {
            continue;
        };
        aug.swap(r0, pr);
        let inv = aug[r0][c].recip();
        for x in aug[r0].iter_mut() {
            *x *= &inv;
        }
        for r in 0..rows {
            if r != r0 && !aug[r][c].is_zero() {
                let f = aug[r][c].clone();
                for cc in 0..=cols {
                    let delta = &f * &aug[r0][cc];
                    aug[r][cc] -= delta;
                }
            }
        }
        pivot_rows.push((r0, c));
        r0 += 1;
    }
    // inconsistent rows mean the target is outside the span
    for r in r0..rows {
        if !aug[r][cols].is_zero() {
            return None;
        }
    }
    let mut coords = vec![BigRational::zero(); cols];
    for (r, c) in pivot_rows {
        coords[c] = aug[r][cols].clone();
    }
    Some(coords)
}

/// A splitting expressed on the basis of a structure-constant algebra:
/// `π₊(eᵢ) = Σ_l plus[i][l] e_l` with exact rational coefficients.
#[derive(Clone, Debug)]
pub struct BasisSplitting {
    name: String,
    plus: Vec<Vec<BigRational>>,
}

impl BasisSplitting {
    pub fn from_rows(name: impl Into<String>, plus: Vec<Vec<BigRational>>) -> Self {
        BasisSplitting {
            name: name.into(),
            plus,
        }
    }

    /// Derives the basis action of a matrix-level splitting by applying it
    /// to each basis matrix of the defining representation and re-expanding.
    pub fn from_matrix_splitting(
        sc: &StructureConstants,
        kind: SplittingKind,
    ) -> Result<BasisSplitting> {
        let rep = sc.basis_rep().ok_or_else(|| {
            Error::UnsupportedSplitting(format!(
                "{} carries no defining representation to derive the splitting from",
                sc.name()
            ))
        })?;
        let n = rep[0].dim();
        let spec = match kind {
            SplittingKind::LowerTriangular => SplittingSpec::lower_triangular(n),
            SplittingKind::QrSkew => SplittingSpec::qr_skew(n),
            SplittingKind::Custom => {
                return Err(Error::UnsupportedSplitting(
                    "custom matrix splittings have no canonical basis action".into(),
                ))
            }
        };
        let mut plus = Vec::with_capacity(sc.dim());
        for b in rep {
            let image = spec.project(Side::Plus, b)?;
            let coords = expand_in_basis(rep, &image).ok_or_else(|| {
                Error::UnsupportedSplitting(format!(
                    "π₊ image of a basis element of {} leaves the span",
                    sc.name()
                ))
            })?;
            plus.push(coords);
        }
        Ok(BasisSplitting {
            name: kind.name().to_string(),
            plus,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.plus.len()
    }

    pub fn project_plus(&self, x: &[BigRational]) -> Vec<BigRational> {
        let d = self.plus.len();
        let mut out = vec![BigRational::zero(); d];
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (l, c) in self.plus[i].iter().enumerate() {
                if !c.is_zero() {
                    out[l] += xi * c;
                }
            }
        }
        out
    }

    pub fn project_minus(&self, x: &[BigRational]) -> Vec<BigRational> {
        let p = self.project_plus(x);
        x.iter().zip(p).map(|(xi, pi)| xi - pi).collect()
    }

    /// `π₊ ∘ π₊ = π₊`, exactly.
    pub fn is_projector(&self) -> bool {
        let d = self.plus.len();
        for i in 0..d {
            let pi = self.plus[i].clone();
            let ppi = self.project_plus(&pi);
            if ppi != pi {
                return false;
            }
        }
        true
    }

    /// Exact check of the splitting identity on all basis pairs, for both
    /// `π₊` and `π₋`.
    pub fn satisfies_mybe(&self, sc: &StructureConstants) -> bool {
        let d = sc.dim();
        let basis = |i: usize| {
            let mut v = vec![BigRational::zero(); d];
            v[i] = rat(1, 1);
            v
        };
        for plus_side in [true, false] {
            let proj = |x: &[BigRational]| {
                if plus_side {
                    self.project_plus(x)
                } else {
                    self.project_minus(x)
                }
            };
            for i in 0..d {
                for j in 0..d {
                    let x = basis(i);
                    let y = basis(j);
                    let px = proj(&x);
                    let py = proj(&y);
                    let lhs: Vec<BigRational> = sc
                        .bracket_vec(&px, &py)
                        .iter()
                        .zip(proj(&sc.bracket_vec(&x, &y)))
                        .map(|(a, b)| a + b)
                        .collect();
                    let inner: Vec<BigRational> = sc
                        .bracket_vec(&px, &y)
                        .iter()
                        .zip(sc.bracket_vec(&x, &py))
                        .map(|(a, b)| a + b)
                        .collect();
                    let rhs = proj(&inner);
                    if lhs != rhs {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Structure constants of the double bracket
    /// `⟦x, y⟧ = [π₋x, y] + [x, π₋y] − [x, y]`, validated exactly.
    pub fn double_constants(&self, sc: &StructureConstants) -> Result<Arc<StructureConstants>> {
        let d = sc.dim();
        if self.plus.len() != d {
            return Err(Error::dim(d, self.plus.len()));
        }
        let mut entries = Vec::new();
        for i in 0..d {
            let mut ei = vec![BigRational::zero(); d];
            ei[i] = rat(1, 1);
            let mi = self.project_minus(&ei);
            for j in 0..d {
                let mut ej = vec![BigRational::zero(); d];
                ej[j] = rat(1, 1);
                let mj = self.project_minus(&ej);
                let mut coords = sc.bracket_vec(&mi, &ej);
                for (k, v) in sc.bracket_vec(&ei, &mj).into_iter().enumerate() {
                    coords[k] += v;
                }
                for (k, v) in sc.bracket_basis(i, j).iter().enumerate() {
                    coords[k] -= v;
                }
                for (k, v) in coords.into_iter().enumerate() {
                    if !v.is_zero() {
                        entries.push((i, j, k, v));
                    }
                }
            }
        }
        let labels = (0..d).map(|i| sc.label(i).to_string()).collect();
        StructureConstants::new(
            format!("{}_double_{}", sc.name(), self.name),
            labels,
            &entries,
            None,
        )
        .map_err(|e| match e {
            // Jacobi failure here means the splitting is not an R-matrix
            Error::InvalidInput(msg) => Error::UnsupportedSplitting(format!(
                "double bracket of {} under {} is not a Lie bracket: {msg}",
                sc.name(),
                self.name
            )),
            other => other,
        })
    }
}
