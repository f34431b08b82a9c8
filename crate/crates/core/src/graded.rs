//! Truncated graded-commutative polynomial algebra over the rationals.
//!
//! Even generators `x_0..x_{n-1}` sit in degree 0, odd generators `a_0..a_{m-1}`
//! in degree 1. Elements are truncated by total even degree.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Generator counts and truncation degree shared by elements that can interact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GradedShape {
    pub n_even: usize,
    pub n_odd: usize,
    pub truncation: u32,
}

impl GradedShape {
    pub fn new(n_even: usize, n_odd: usize, truncation: u32) -> Result<Self> {
        if n_odd > 64 {
            return Err(Error::Dimension(format!(
                "at most 64 odd generators are supported, got {n_odd}"
            )));
        }
        Ok(Self { n_even, n_odd, truncation })
    }

    /// Shape for plain polynomials (no odd part).
    pub fn polynomial(n_even: usize, truncation: u32) -> Self {
        Self { n_even, n_odd: 0, truncation }
    }
}

/// A monomial `a^I x^E`, with `I` stored as a bitmask (strictly increasing by construction).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub odd: u64,
    pub even: Vec<u32>,
}

impl Monomial {
    pub fn unit(n_even: usize) -> Self {
        Self { odd: 0, even: vec![0; n_even] }
    }

    pub fn odd_degree(&self) -> usize {
        self.odd.count_ones() as usize
    }

    pub fn even_degree(&self) -> u32 {
        self.even.iter().sum()
    }

    pub fn odd_indices(&self) -> Vec<usize> {
        bits(self.odd)
    }

    pub fn even_only(&self) -> Monomial {
        Monomial { odd: 0, even: self.even.clone() }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.odd_degree()
            .cmp(&other.odd_degree())
            .then_with(|| self.odd_indices().cmp(&other.odd_indices()))
            .then_with(|| self.even_degree().cmp(&other.even_degree()))
            .then_with(|| other.even.cmp(&self.even))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.odd_indices().iter().map(|i| i.to_string()).collect();
        let exps: Vec<String> = self.even.iter().map(|e| e.to_string()).collect();
        write!(f, "α^{{{}}} x^({})", idx.join(","), exps.join(","))
    }
}

pub(crate) fn bits(mask: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    let mut m = mask;
    while m != 0 {
        let i = m.trailing_zeros() as usize;
        out.push(i);
        m &= m - 1;
    }
    out
}

/// Sign of `a^A * a^B` when rewritten in increasing order, or `None` if they overlap.
fn koszul_sign(a: u64, b: u64) -> Option<bool> {
    if a & b != 0 {
        return None;
    }
    let mut inversions = 0u32;
    for j in bits(b) {
        inversions += (a >> (j + 1)).count_ones();
    }
    Some(inversions % 2 == 1)
}

/// Generator of the algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Generator {
    Even(usize),
    Odd(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedGradedElement {
    shape: GradedShape,
    terms: BTreeMap<Monomial, Q>,
}

impl TruncatedGradedElement {
    pub fn zero(shape: GradedShape) -> Self {
        Self { shape, terms: BTreeMap::new() }
    }

    pub fn one(shape: GradedShape) -> Self {
        Self::constant(shape, Q::one())
    }

    pub fn constant(shape: GradedShape, c: Q) -> Self {
        let mut e = Self::zero(shape);
        e.add_term(Monomial::unit(shape.n_even), c);
        e
    }

    pub fn even_gen(shape: GradedShape, l: usize) -> Result<Self> {
        if l >= shape.n_even {
            return Err(Error::Dimension(format!("even generator {l} out of range")));
        }
        let mut even = vec![0; shape.n_even];
        even[l] = 1;
        let mut e = Self::zero(shape);
        e.add_term(Monomial { odd: 0, even }, Q::one());
        Ok(e)
    }

    pub fn odd_gen(shape: GradedShape, k: usize) -> Result<Self> {
        if k >= shape.n_odd {
            return Err(Error::Dimension(format!("odd generator {k} out of range")));
        }
        let mut e = Self::zero(shape);
        e.add_term(Monomial { odd: 1 << k, even: vec![0; shape.n_even] }, Q::one());
        Ok(e)
    }

    pub fn generator(shape: GradedShape, g: Generator) -> Result<Self> {
        match g {
            Generator::Even(l) => Self::even_gen(shape, l),
            Generator::Odd(k) => Self::odd_gen(shape, k),
        }
    }

    /// `c * a^{odd[0]} a^{odd[1]} ... x^even`, with odd factors given in any order.
    pub fn monomial(shape: GradedShape, odd: &[usize], even: &[u32], c: Q) -> Result<Self> {
        if even.len() != shape.n_even {
            return Err(Error::Dimension(format!(
                "exponent vector has length {}, expected {}",
                even.len(),
                shape.n_even
            )));
        }
        let mut mask = 0u64;
        let mut negative = false;
        for &k in odd {
            if k >= shape.n_odd {
                return Err(Error::Dimension(format!("odd generator {k} out of range")));
            }
            match koszul_sign(mask, 1 << k) {
                None => return Ok(Self::zero(shape)),
                Some(s) => negative ^= s,
            }
            mask |= 1 << k;
        }
        let mut e = Self::zero(shape);
        e.add_term(Monomial { odd: mask, even: even.to_vec() }, if negative { -c } else { c });
        Ok(e)
    }

    /// Builds an element from canonical monomials; terms above the truncation are dropped.
    pub fn from_terms(shape: GradedShape, terms: impl IntoIterator<Item = (Monomial, Q)>) -> Result<Self> {
        let mut e = Self::zero(shape);
        for (m, c) in terms {
            if m.even.len() != shape.n_even || (shape.n_odd < 64 && m.odd >> shape.n_odd != 0) {
                return Err(Error::Dimension("monomial does not fit the shape".into()));
            }
            e.add_term(m, c);
        }
        Ok(e)
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() || m.even_degree() > self.shape.truncation {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn shape(&self) -> GradedShape {
        self.shape
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, Q> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> Q {
        self.terms.get(m).cloned().unwrap_or_else(Q::zero)
    }

    /// Odd degree if the element is homogeneous (zero counts as homogeneous of every degree).
    pub fn odd_degree(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(Monomial::odd_degree);
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    pub fn max_even_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::even_degree).max()
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = Self::zero(self.shape);
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Q::one())
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = Self::zero(self.shape);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if ma.even_degree() + mb.even_degree() > self.shape.truncation {
                    continue;
                }
                let Some(neg) = koszul_sign(ma.odd, mb.odd) else {
                    continue;
                };
                let even = ma.even.iter().zip(&mb.even).map(|(a, b)| a + b).collect();
                let c = ca * cb;
                out.add_term(Monomial { odd: ma.odd | mb.odd, even }, if neg { -c } else { c });
            }
        }
        Ok(out)
    }

    /// Re-truncates into `target`; generator counts may grow (indices are kept).
    pub fn embed(&self, target: GradedShape) -> Result<Self> {
        if target.n_even < self.shape.n_even || target.n_odd < self.shape.n_odd {
            return Err(Error::Dimension("cannot embed into a smaller shape".into()));
        }
        let mut out = Self::zero(target);
        for (m, c) in &self.terms {
            let mut even = m.even.clone();
            even.resize(target.n_even, 0);
            out.add_term(Monomial { odd: m.odd, even }, c.clone());
        }
        Ok(out)
    }

    /// Partial derivative in an even generator.
    pub fn partial_even(&self, l: usize) -> Result<Self> {
        if l >= self.shape.n_even {
            return Err(Error::Dimension(format!("even generator {l} out of range")));
        }
        let mut out = Self::zero(self.shape);
        for (m, c) in &self.terms {
            let e = m.even[l];
            if e == 0 {
                continue;
            }
            let mut even = m.even.clone();
            even[l] -= 1;
            out.add_term(Monomial { odd: m.odd, even }, c * q(e as i64));
        }
        Ok(out)
    }

    /// Evaluates an element without odd part at a rational point.
    pub fn evaluate(&self, point: &[Q]) -> Result<Q> {
        if point.len() != self.shape.n_even {
            return Err(Error::Dimension("point has the wrong length".into()));
        }
        let mut acc = Q::zero();
        for (m, c) in &self.terms {
            if m.odd != 0 {
                return Err(Error::Degree("cannot evaluate an element with odd part".into()));
            }
            let mut v = c.clone();
            for (x, &e) in point.iter().zip(&m.even) {
                for _ in 0..e {
                    v *= x;
                }
            }
            acc += v;
        }
        Ok(acc)
    }

    /// Substitutes `x_l -> x_l + p_l`.
    pub fn translate(&self, p: &[Q]) -> Result<Self> {
        if p.len() != self.shape.n_even {
            return Err(Error::Dimension("shift has the wrong length".into()));
        }
        let shape = self.shape;
        let shifted: Vec<Self> = (0..shape.n_even)
            .map(|l| Self::even_gen(shape, l)?.add(&Self::constant(shape, p[l].clone())))
            .collect::<Result<_>>()?;
        let mut out = Self::zero(shape);
        for (m, c) in &self.terms {
            let mut t = Self::zero(shape);
            t.add_term(Monomial { odd: m.odd, even: vec![0; shape.n_even] }, c.clone());
            for (l, &e) in m.even.iter().enumerate() {
                for _ in 0..e {
                    t = t.multiply(&shifted[l])?;
                }
            }
            out = out.add(&t)?;
        }
        Ok(out)
    }

    /// One monomial per line, `coeff * α^I x^E`, in canonical order.
    pub fn to_lines(&self) -> Vec<String> {
        self.terms.iter().map(|(m, c)| format!("{c} * {m}")).collect()
    }

    /// Compact polynomial notation, e.g. `x0^2 + x1^2 - 1/2*a0*a1`.
    pub fn pretty(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let mut factors: Vec<String> = m.odd_indices().iter().map(|k| format!("a{k}")).collect();
            for (l, &e) in m.even.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(format!("x{l}")),
                    _ => factors.push(format!("x{l}^{e}")),
                }
            }
            let mag = c.abs();
            let body = match (factors.is_empty(), mag.is_one()) {
                (true, _) => mag.to_string(),
                (false, true) => factors.join("*"),
                (false, false) => format!("{}*{}", mag, factors.join("*")),
            };
            if i == 0 {
                if c.is_negative() {
                    s.push('-');
                }
            } else {
                s.push_str(if c.is_negative() { " - " } else { " + " });
            }
            s.push_str(&body);
        }
        s
    }
}

impl fmt::Display for TruncatedGradedElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_lines().join("\n"))
    }
}

/// A derivation given by generator images, extended by the graded Leibniz rule.
#[derive(Clone, Debug)]
pub struct Derivation {
    shape: GradedShape,
    degree: i32,
    even_images: Vec<TruncatedGradedElement>,
    odd_images: Vec<TruncatedGradedElement>,
}

impl Derivation {
    /// `degree` is the shift in odd degree. Generators without an image are sent to 0.
    pub fn new(
        shape: GradedShape,
        degree: i32,
        images: Vec<(Generator, TruncatedGradedElement)>,
    ) -> Result<Self> {
        let mut even_images = vec![None; shape.n_even];
        let mut odd_images = vec![None; shape.n_odd];
        for (g, img) in images {
            if img.shape != shape {
                return Err(Error::Dimension(format!("image of {g:?} has the wrong shape")));
            }
            let (slot, source_degree) = match g {
                Generator::Even(l) if l < shape.n_even => (&mut even_images[l], 0),
                Generator::Odd(k) if k < shape.n_odd => (&mut odd_images[k], 1),
                _ => return Err(Error::Dimension(format!("generator {g:?} out of range"))),
            };
            if slot.is_some() {
                return Err(Error::Degree(format!("generator {g:?} assigned twice")));
            }
            let expected = source_degree + degree;
            if let Some(bad) = img.terms.keys().find(|m| m.odd_degree() as i32 != expected) {
                return Err(Error::Degree(format!(
                    "image of {g:?} contains {bad}, expected odd degree {expected}"
                )));
            }
            *slot = Some(img);
        }
        let fill = |v: Vec<Option<TruncatedGradedElement>>| {
            v.into_iter()
                .map(|o| o.unwrap_or_else(|| TruncatedGradedElement::zero(shape)))
                .collect()
        };
        Ok(Self { shape, degree, even_images: fill(even_images), odd_images: fill(odd_images) })
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn shape(&self) -> GradedShape {
        self.shape
    }

    pub fn image(&self, g: Generator) -> &TruncatedGradedElement {
        match g {
            Generator::Even(l) => &self.even_images[l],
            Generator::Odd(k) => &self.odd_images[k],
        }
    }

    fn apply_monomial(&self, m: &Monomial, out: &mut TruncatedGradedElement) -> Result<()> {
        let shape = self.shape;
        let odd = m.odd_indices();
        let odd_parity = self.degree.rem_euclid(2) == 1;
        let unit = vec![0; shape.n_even];
        for (s, &k) in odd.iter().enumerate() {
            let img = &self.odd_images[k];
            if img.is_zero() {
                continue;
            }
            let before: u64 = odd[..s].iter().fold(0, |acc, &i| acc | (1 << i));
            let after: u64 = odd[s + 1..].iter().fold(0, |acc, &i| acc | (1 << i));
            let left = TruncatedGradedElement::from_terms(
                shape,
                [(Monomial { odd: before, even: unit.clone() }, Q::one())],
            )?;
            let right = TruncatedGradedElement::from_terms(
                shape,
                [(Monomial { odd: after, even: m.even.clone() }, Q::one())],
            )?;
            let mut t = left.multiply(img)?.multiply(&right)?;
            if odd_parity && s % 2 == 1 {
                t = t.neg();
            }
            *out = out.add(&t)?;
        }
        let odd_part = TruncatedGradedElement::from_terms(
            shape,
            [(Monomial { odd: m.odd, even: unit.clone() }, Q::one())],
        )?;
        let sign_neg = odd_parity && odd.len() % 2 == 1;
        for (l, &e) in m.even.iter().enumerate() {
            if e == 0 || self.even_images[l].is_zero() {
                continue;
            }
            let mut even = m.even.clone();
            even[l] -= 1;
            let c = if sign_neg { -q(e as i64) } else { q(e as i64) };
            let rest = TruncatedGradedElement::from_terms(shape, [(Monomial { odd: 0, even }, c)])?;
            let t = odd_part.multiply(&rest)?.multiply(&self.even_images[l])?;
            *out = out.add(&t)?;
        }
        Ok(())
    }

    pub fn apply(&self, a: &TruncatedGradedElement) -> Result<TruncatedGradedElement> {
        if a.shape != self.shape {
            return Err(Error::Dimension("element shape differs from derivation shape".into()));
        }
        let mut out = TruncatedGradedElement::zero(self.shape);
        for (m, c) in &a.terms {
            let mut part = TruncatedGradedElement::zero(self.shape);
            self.apply_monomial(m, &mut part)?;
            out = out.add(&part.scale(c))?;
        }
        Ok(out)
    }
}

/// Builds the derivation from generator images and applies it to `a`.
pub fn apply_derivation(
    degree: i32,
    images: Vec<(Generator, TruncatedGradedElement)>,
    a: &TruncatedGradedElement,
) -> Result<TruncatedGradedElement> {
    Derivation::new(a.shape(), degree, images)?.apply(a)
}

/// Every monomial of the given odd degree whose even degree is at most `max_even`,
/// in canonical order.
pub fn monomial_basis(n_even: usize, n_odd: usize, odd_degree: usize, max_even: u32) -> Vec<Monomial> {
    let mut odd_masks = Vec::new();
    for mask in 0..(1u64 << n_odd) {
        if mask.count_ones() as usize == odd_degree {
            odd_masks.push(mask);
        }
    }
    let mut evens = Vec::new();
    let mut cur = vec![0u32; n_even];
    fn rec(l: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if l == cur.len() {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur[l] = e;
            rec(l + 1, left - e, cur, out);
        }
        cur[l] = 0;
    }
    rec(0, max_even, &mut cur, &mut evens);
    let mut out: Vec<Monomial> = odd_masks
        .iter()
        .flat_map(|&odd| evens.iter().map(move |e| Monomial { odd, even: e.clone() }))
        .collect();
    out.sort();
    out
}

/// Number of monomials `binom(m, q) * binom(n + t, n)` without materialising them.
pub fn basis_size(n_even: usize, n_odd: usize, odd_degree: usize, max_even: u32) -> usize {
    fn binom(a: u128, b: u128) -> u128 {
        if b > a {
            return 0;
        }
        let b = b.min(a - b);
        (0..b).fold(1u128, |acc, i| acc * (a - i) / (i + 1))
    }
    let s = binom(n_odd as u128, odd_degree as u128) * binom(n_even as u128 + max_even as u128, n_even as u128);
    usize::try_from(s).unwrap_or(usize::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sh(n: usize, m: usize, t: u32) -> GradedShape {
        GradedShape::new(n, m, t).unwrap()
    }

    #[test]
    fn odd_square_vanishes() {
        let s = sh(1, 2, 3);
        let a = TruncatedGradedElement::odd_gen(s, 0).unwrap();
        assert!(a.multiply(&a).unwrap().is_zero());
    }

    #[test]
    fn odd_generators_anticommute() {
        let s = sh(1, 2, 3);
        let a = TruncatedGradedElement::odd_gen(s, 0).unwrap();
        let b = TruncatedGradedElement::odd_gen(s, 1).unwrap();
        let ab = a.multiply(&b).unwrap();
        let ba = b.multiply(&a).unwrap();
        assert_eq!(ab, ba.neg());
        assert!(!ab.is_zero());
    }

    #[test]
    fn truncation_drops_high_terms() {
        let s = sh(1, 0, 2);
        let x = TruncatedGradedElement::even_gen(s, 0).unwrap();
        let x2 = x.multiply(&x).unwrap();
        let p = x.add(&x2).unwrap();
        assert_eq!(p.multiply(&x).unwrap(), x2);
    }

    #[test]
    fn monomial_constructor_normalises_sign() {
        let s = sh(0, 3, 0);
        let a = TruncatedGradedElement::monomial(s, &[2, 0], &[], q(1)).unwrap();
        let b = TruncatedGradedElement::monomial(s, &[0, 2], &[], q(-1)).unwrap();
        assert_eq!(a, b);
        assert!(TruncatedGradedElement::monomial(s, &[1, 1], &[], q(1)).unwrap().is_zero());
    }

    #[test]
    fn leibniz_on_even_product() {
        let s = sh(2, 0, 4);
        let x = TruncatedGradedElement::even_gen(s, 0).unwrap();
        let y = TruncatedGradedElement::even_gen(s, 1).unwrap();
        let xy = x.multiply(&y).unwrap();
        let out = apply_derivation(
            0,
            vec![(Generator::Even(0), TruncatedGradedElement::one(s)), (Generator::Even(1), TruncatedGradedElement::zero(s))],
            &xy,
        )
        .unwrap();
        assert_eq!(out, y);
    }

    #[test]
    fn odd_derivation_on_mixed_monomial() {
        // d(a x) = d(a) x - a d(x) = 0 - a a = 0 with d(a) = 0, d(x) = a.
        let s = sh(1, 1, 3);
        let a = TruncatedGradedElement::odd_gen(s, 0).unwrap();
        let x = TruncatedGradedElement::even_gen(s, 0).unwrap();
        let ax = a.multiply(&x).unwrap();
        let out = apply_derivation(1, vec![(Generator::Even(0), a.clone())], &ax).unwrap();
        assert!(out.is_zero());
        // With two odd generators the sign is visible: d(a0 x) = -a0 a1 for d(x) = a1.
        let s = sh(1, 2, 3);
        let a0 = TruncatedGradedElement::odd_gen(s, 0).unwrap();
        let a1 = TruncatedGradedElement::odd_gen(s, 1).unwrap();
        let x = TruncatedGradedElement::even_gen(s, 0).unwrap();
        let out = apply_derivation(1, vec![(Generator::Even(0), a1.clone())], &a0.multiply(&x).unwrap()).unwrap();
        assert_eq!(out, a0.multiply(&a1).unwrap().neg());
    }

    #[test]
    fn derivation_kills_unit() {
        let s = sh(2, 2, 3);
        let a0 = TruncatedGradedElement::odd_gen(s, 0).unwrap();
        let out = apply_derivation(1, vec![(Generator::Even(1), a0)], &TruncatedGradedElement::one(s)).unwrap();
        assert!(out.is_zero());
    }

    #[test]
    fn wrong_image_degree_is_rejected() {
        let s = sh(1, 1, 3);
        let x = TruncatedGradedElement::even_gen(s, 0).unwrap();
        let err = Derivation::new(s, 1, vec![(Generator::Even(0), x)]).unwrap_err();
        assert!(matches!(err, Error::Degree(_)));
    }

    #[test]
    fn mismatched_shapes_error() {
        let a = TruncatedGradedElement::one(sh(1, 1, 2));
        let b = TruncatedGradedElement::one(sh(2, 1, 2));
        assert!(matches!(a.multiply(&b), Err(Error::Dimension(_))));
    }

    #[test]
    fn translation_expands_binomially() {
        let s = GradedShape::polynomial(1, 4);
        let x = TruncatedGradedElement::even_gen(s, 0).unwrap();
        let x2 = x.multiply(&x).unwrap();
        let t = x2.translate(&[q(3)]).unwrap();
        assert_eq!(t.pretty(), "9 + 6*x0 + x0^2");
    }

    #[test]
    fn basis_size_matches_enumeration() {
        for (n, m, qd, t) in [(2, 1, 0, 4), (3, 3, 2, 5), (2, 3, 1, 0)] {
            assert_eq!(monomial_basis(n, m, qd, t).len(), basis_size(n, m, qd, t));
        }
    }

    #[test]
    fn text_format_is_one_monomial_per_line() {
        let s = sh(2, 2, 2);
        let e = TruncatedGradedElement::monomial(s, &[1, 0], &[1, 0], q_frac(-1, 2)).unwrap();
        assert_eq!(e.to_lines(), vec!["1/2 * α^{0,1} x^(1,0)".to_string()]);
    }

    const N: usize = 2;
    const M: usize = 3;
    const T: u32 = 3;

    fn arb_element_at(t: u32) -> impl Strategy<Value = TruncatedGradedElement> {
        let term = (0u64..(1 << M), proptest::collection::vec(0u32..=2, N), -3i64..=3, 1i64..=3);
        proptest::collection::vec(term, 0..5).prop_map(move |ts| {
            let s = GradedShape::new(N, M, t).unwrap();
            let terms = ts.into_iter().map(|(odd, even, a, b)| (Monomial { odd, even }, q_frac(a, b)));
            TruncatedGradedElement::from_terms(s, terms).unwrap()
        })
    }

    fn arb_element() -> impl Strategy<Value = TruncatedGradedElement> {
        arb_element_at(T)
    }

    fn homogeneous_parts(e: &TruncatedGradedElement) -> Vec<TruncatedGradedElement> {
        (0..=M)
            .map(|d| {
                TruncatedGradedElement::from_terms(
                    e.shape(),
                    e.terms().iter().filter(|(m, _)| m.odd_degree() == d).map(|(m, c)| (m.clone(), c.clone())),
                )
                .unwrap()
            })
            .collect()
    }

    /// Odd derivation; with `preserve` the even images have no constant term, so the
    /// derivation never lowers even degree and passes to every truncation.
    fn arb_odd_derivation(t: u32, preserve: bool) -> impl Strategy<Value = Derivation> {
        let e = || arb_element_at(t);
        (e(), e(), e(), e(), e()).prop_map(move |(e0, e1, o0, o1, o2)| {
            let s = e0.shape();
            let pick = |e: &TruncatedGradedElement, d: usize| homogeneous_parts(e).swap_remove(d);
            let raise = |e: TruncatedGradedElement| {
                if preserve {
                    TruncatedGradedElement::from_terms(
                        s,
                        e.terms().iter().filter(|(m, _)| m.even_degree() > 0).map(|(m, c)| (m.clone(), c.clone())),
                    )
                    .unwrap()
                } else {
                    e
                }
            };
            Derivation::new(
                s,
                1,
                vec![
                    (Generator::Even(0), raise(pick(&e0, 1))),
                    (Generator::Even(1), raise(pick(&e1, 1))),
                    (Generator::Odd(0), pick(&o0, 2)),
                    (Generator::Odd(1), pick(&o1, 2)),
                    (Generator::Odd(2), pick(&o2, 2)),
                ],
            )
            .unwrap()
        })
    }

    fn leibniz_holds(d: &Derivation, a: &TruncatedGradedElement, b: &TruncatedGradedElement) -> bool {
        homogeneous_parts(a).iter().enumerate().all(|(i, ai)| {
            let lhs = d.apply(&ai.multiply(b).unwrap()).unwrap();
            let first = d.apply(ai).unwrap().multiply(b).unwrap();
            let second = ai.multiply(&d.apply(b).unwrap()).unwrap();
            let rhs = if i % 2 == 1 { first.sub(&second).unwrap() } else { first.add(&second).unwrap() };
            lhs == rhs
        })
    }

    fn truncate(e: &TruncatedGradedElement, t: u32) -> TruncatedGradedElement {
        let s = GradedShape::new(N, M, t).unwrap();
        TruncatedGradedElement::from_terms(s, e.terms().clone()).unwrap()
    }

    proptest! {
        #[test]
        fn product_is_associative(a in arb_element(), b in arb_element(), c in arb_element()) {
            let l = a.multiply(&b).unwrap().multiply(&c).unwrap();
            let r = a.multiply(&b.multiply(&c).unwrap()).unwrap();
            prop_assert_eq!(l, r);
        }

        #[test]
        fn product_is_graded_commutative(a in arb_element(), b in arb_element()) {
            for (i, ai) in homogeneous_parts(&a).iter().enumerate() {
                for (j, bj) in homogeneous_parts(&b).iter().enumerate() {
                    let ab = ai.multiply(bj).unwrap();
                    let ba = bj.multiply(ai).unwrap();
                    if (i * j) % 2 == 1 {
                        prop_assert_eq!(ab, ba.neg());
                    } else {
                        prop_assert_eq!(ab, ba);
                    }
                }
            }
        }

        #[test]
        fn leibniz_rule_holds_under_truncation(d in arb_odd_derivation(T, true), a in arb_element(), b in arb_element()) {
            prop_assert!(leibniz_holds(&d, &a, &b));
        }

        #[test]
        fn leibniz_rule_holds_for_degree_lowering_derivations(
            d in arb_odd_derivation(16, false),
            a in arb_element_at(16),
            b in arb_element_at(16),
        ) {
            prop_assert!(leibniz_holds(&d, &a, &b));
        }

        #[test]
        fn truncation_is_an_algebra_quotient(a in arb_element(), b in arb_element(), t in 0u32..T) {
            let full = truncate(&a.multiply(&b).unwrap(), t);
            let low = truncate(&a, t).multiply(&truncate(&b, t)).unwrap();
            prop_assert_eq!(full, low);
        }
    }
}
