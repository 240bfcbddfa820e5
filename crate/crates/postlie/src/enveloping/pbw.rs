//! PBW normal forms and the Hopf operations of the enveloping algebra.
//!
//! Monomials are stored as non-decreasing index sequences (the empty word is
//! the unit), coefficients are exact rationals, and every element carries a
//! filtration cap: words longer than the cap are truncated away, and binary
//! operations propagate the minimum cap of their operands.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::Error;
use crate::scalar::rational_to_string;
use crate::Result;

use super::structure::StructureConstants;

pub(crate) type Word = Vec<u8>;

/// Element of the enveloping algebra in PBW normal form.
#[derive(Clone)]
pub struct PbwElement {
    sc: Arc<StructureConstants>,
    cap: usize,
    terms: BTreeMap<Word, BigRational>,
}

impl PbwElement {
    pub fn zero(sc: &Arc<StructureConstants>, cap: usize) -> Self {
        PbwElement {
            sc: sc.clone(),
            cap,
            terms: BTreeMap::new(),
        }
    }

    pub fn unit(sc: &Arc<StructureConstants>, cap: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Vec::new(), BigRational::from_integer(1.into()));
        PbwElement {
            sc: sc.clone(),
            cap,
            terms,
        }
    }

    pub fn generator(sc: &Arc<StructureConstants>, i: usize, cap: usize) -> Result<Self> {
        if i >= sc.dim() {
            return Err(Error::InvalidInput(format!(
                "generator index {i} out of range for dim {}",
                sc.dim()
            )));
        }
        let mut terms = BTreeMap::new();
        terms.insert(vec![i as u8], BigRational::from_integer(1.into()));
        Ok(PbwElement {
            sc: sc.clone(),
            cap,
            terms,
        })
    }

    /// Degree-1 element with the given coordinates.
    pub fn from_coords(sc: &Arc<StructureConstants>, coords: &[BigRational], cap: usize) -> Self {
        let mut terms = BTreeMap::new();
        for (i, c) in coords.iter().enumerate() {
            if !c.is_zero() {
                terms.insert(vec![i as u8], c.clone());
            }
        }
        PbwElement {
            sc: sc.clone(),
            cap,
            terms,
        }
    }

    /// Straightens an arbitrary word into PBW normal form: adjacent
    /// out-of-order pairs `x_j x_i` (j > i) rewrite to `x_i x_j + [x_j, x_i]`
    /// until ordered. Iterative with an explicit work stack.
    pub fn normalize_word(
        sc: &Arc<StructureConstants>,
        word: &[u8],
        coeff: BigRational,
        cap: usize,
    ) -> Self {
        let mut out = PbwElement::zero(sc, cap);
        if coeff.is_zero() {
            return out;
        }
        let mut stack: Vec<(Word, BigRational)> = vec![(word.to_vec(), coeff)];
        while let Some((w, c)) = stack.pop() {
            if w.len() > cap {
                continue;
            }
            match w.windows(2).position(|p| p[0] > p[1]) {
                None => out.insert_term(w, c),
                Some(p) => {
                    let (j, i) = (w[p] as usize, w[p + 1] as usize);
                    let mut swapped = w.clone();
                    swapped.swap(p, p + 1);
                    stack.push((swapped, c.clone()));
                    for (k, ck) in sc.bracket_basis(j, i).iter().enumerate() {
                        if ck.is_zero() {
                            continue;
                        }
                        let mut shorter = Vec::with_capacity(w.len() - 1);
                        shorter.extend_from_slice(&w[..p]);
                        shorter.push(k as u8);
                        shorter.extend_from_slice(&w[p + 2..]);
                        stack.push((shorter, &c * ck));
                    }
                }
            }
        }
        out
    }

    fn insert_term(&mut self, word: Word, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(word);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn algebra(&self) -> &Arc<StructureConstants> {
        &self.sc
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &BigRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, word: &[u8]) -> BigRational {
        self.terms.get(word).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Highest word length present.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|w| w.len()).max().unwrap_or(0)
    }

    /// Terms of exact word length `k`.
    pub fn degree_part(&self, k: usize) -> Self {
        PbwElement {
            sc: self.sc.clone(),
            cap: self.cap,
            terms: self
                .terms
                .iter()
                .filter(|(w, _)| w.len() == k)
                .map(|(w, c)| (w.clone(), c.clone()))
                .collect(),
        }
    }

    pub(crate) fn same_algebra(&self, other: &Self) -> Result<()> {
        if !Arc::ptr_eq(&self.sc, &other.sc) && self.sc.name() != other.sc.name() {
            return Err(Error::TagMismatch {
                left: format!("U({})", self.sc.name()),
                right: format!("U({})", other.sc.name()),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_algebra(other)?;
        let cap = self.cap.min(other.cap);
        let mut out = PbwElement {
            sc: self.sc.clone(),
            cap,
            terms: BTreeMap::new(),
        };
        for (w, c) in self.terms.iter().chain(other.terms.iter()) {
            if w.len() <= cap {
                out.insert_term(w.clone(), c.clone());
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|c| -c)
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        if k.is_zero() {
            return PbwElement::zero(&self.sc, self.cap);
        }
        self.map_coeffs(|c| c * k)
    }

    fn map_coeffs(&self, f: impl Fn(&BigRational) -> BigRational) -> Self {
        PbwElement {
            sc: self.sc.clone(),
            cap: self.cap,
            terms: self
                .terms
                .iter()
                .map(|(w, c)| (w.clone(), f(c)))
                .collect(),
        }
    }

    /// Concatenation product, straightened back into PBW form.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        self.same_algebra(other)?;
        let cap = self.cap.min(other.cap);
        let mut out = PbwElement::zero(&self.sc, cap);
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                if w1.len() + w2.len() > cap {
                    continue;
                }
                let mut w = Vec::with_capacity(w1.len() + w2.len());
                w.extend_from_slice(w1);
                w.extend_from_slice(w2);
                let piece = PbwElement::normalize_word(&self.sc, &w, c1 * c2, cap);
                for (pw, pc) in piece.terms {
                    out.insert_term(pw, pc);
                }
            }
        }
        Ok(out)
    }

    /// Coshuffle coproduct: generators are primitive, extended
    /// multiplicatively. On a PBW monomial this enumerates position subsets;
    /// both legs of each summand stay PBW-ordered.
    pub fn coproduct(&self) -> PbwTensor {
        let mut out = PbwTensor::zero(&self.sc, self.cap);
        for (w, c) in &self.terms {
            let n = w.len();
            for mask in 0u32..(1u32 << n) {
                let mut left = Vec::new();
                let mut right = Vec::new();
                for (pos, &letter) in w.iter().enumerate() {
                    if mask & (1 << pos) != 0 {
                        left.push(letter);
                    } else {
                        right.push(letter);
                    }
                }
                out.insert_term(left, right, c.clone());
            }
        }
        out
    }

    /// Antipode `S(x₁⋯x_k) = (−1)^k x_k ⋯ x₁`, straightened.
    pub fn antipode(&self) -> Self {
        let mut out = PbwElement::zero(&self.sc, self.cap);
        for (w, c) in &self.terms {
            let mut rev = w.clone();
            rev.reverse();
            let signed = if w.len() % 2 == 1 { -c } else { c.clone() };
            let piece = PbwElement::normalize_word(&self.sc, &rev, signed, self.cap);
            for (pw, pc) in piece.terms {
                out.insert_term(pw, pc);
            }
        }
        out
    }

    /// Counit: the coefficient of the empty word.
    pub fn counit(&self) -> BigRational {
        self.coeff(&[])
    }

    /// Concatenation exponential `Σ_{n≤cap} vⁿ/n!` of a degree-1 element.
    pub fn exp_concat(
        sc: &Arc<StructureConstants>,
        coords: &[BigRational],
        cap: usize,
    ) -> Result<Self> {
        let v = PbwElement::from_coords(sc, coords, cap);
        let mut acc = PbwElement::unit(sc, cap);
        let mut power = PbwElement::unit(sc, cap);
        let mut factorial = BigRational::from_integer(1.into());
        for n in 1..=cap {
            power = power.concat(&v)?;
            factorial *= BigRational::from_integer(n.into());
            acc = acc.add(&power.scale(&factorial.recip()))?;
            if power.is_zero() {
                break;
            }
        }
        Ok(acc)
    }
}

impl PartialEq for PbwElement {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl std::fmt::Debug for PbwElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (w, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", rational_to_string(c))?;
            if w.is_empty() {
                write!(f, "·1")?;
            } else {
                for &i in w.iter() {
                    write!(f, "·{}", self.sc.label(i as usize))?;
                }
            }
        }
        Ok(())
    }
}

/// Element of the tensor square, used for coproduct identities.
#[derive(Clone)]
pub struct PbwTensor {
    sc: Arc<StructureConstants>,
    cap: usize,
    terms: BTreeMap<(Word, Word), BigRational>,
}

impl PbwTensor {
    pub fn zero(sc: &Arc<StructureConstants>, cap: usize) -> Self {
        PbwTensor {
            sc: sc.clone(),
            cap,
            terms: BTreeMap::new(),
        }
    }

    pub(crate) fn insert_term(&mut self, left: Word, right: Word, coeff: BigRational) {
        if coeff.is_zero() || left.len() > self.cap || right.len() > self.cap {
            return;
        }
        let entry = self.terms.entry((left, right));
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn algebra(&self) -> &Arc<StructureConstants> {
        &self.sc
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Word, Word), &BigRational)> {
        self.terms.iter()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.sc.name() != other.sc.name() {
            return Err(Error::TagMismatch {
                left: format!("U({})⊗U({})", self.sc.name(), self.sc.name()),
                right: format!("U({})⊗U({})", other.sc.name(), other.sc.name()),
            });
        }
        let mut out = PbwTensor {
            sc: self.sc.clone(),
            cap: self.cap.min(other.cap),
            terms: self.terms.clone(),
        };
        for ((l, r), c) in &other.terms {
            out.insert_term(l.clone(), r.clone(), -c);
        }
        Ok(out)
    }

    /// Swaps the two legs (for cocommutativity checks).
    pub fn flip(&self) -> Self {
        let mut out = PbwTensor::zero(&self.sc, self.cap);
        for ((l, r), c) in &self.terms {
            out.insert_term(r.clone(), l.clone(), c.clone());
        }
        out
    }

    /// Componentwise concatenation product on the tensor square.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let cap = self.cap.min(other.cap);
        let mut out = PbwTensor::zero(&self.sc, cap);
        for ((l1, r1), c1) in &self.terms {
            for ((l2, r2), c2) in &other.terms {
                let left = mono_concat(&self.sc, l1, l2, cap);
                let right = mono_concat(&self.sc, r1, r2, cap);
                for (lw, lc) in left.terms() {
                    for (rw, rc) in right.terms() {
                        out.insert_term(lw.clone(), rw.clone(), c1 * c2 * lc * rc);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Multiplies the legs back together: `μ(S ⊗ id)`-style compositions are
    /// built from this plus [`PbwElement::antipode`].
    pub fn multiply_legs(&self) -> Result<PbwElement> {
        let mut out = PbwElement::zero(&self.sc, self.cap);
        for ((l, r), c) in &self.terms {
            let le = PbwElement::normalize_word(&self.sc, l, c.clone(), self.cap);
            let re = PbwElement::normalize_word(
                &self.sc,
                r,
                BigRational::from_integer(1.into()),
                self.cap,
            );
            let prod = le.concat(&re)?;
            for (w, cc) in prod.terms {
                out.insert_term(w, cc);
            }
        }
        Ok(out)
    }
}

fn mono_concat(sc: &Arc<StructureConstants>, a: &[u8], b: &[u8], cap: usize) -> PbwElement {
    let mut w = Vec::with_capacity(a.len() + b.len());
    w.extend_from_slice(a);
    w.extend_from_slice(b);
    PbwElement::normalize_word(sc, &w, BigRational::from_integer(1.into()), cap)
}

impl PartialEq for PbwTensor {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl std::fmt::Debug for PbwTensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PbwTensor({} terms)", self.terms.len())
    }
}
