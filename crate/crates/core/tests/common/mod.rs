//! Polynomial substitution and fixed-point oracles shared by the integration tests.
#![allow(dead_code)]

use gencov::exact::RationalMatrix;
use gencov::graded::{monomial_basis, q, GradedShape, TruncatedGradedElement, Q};

pub fn gens(shape: GradedShape) -> Vec<TruncatedGradedElement> {
    (0..shape.n_even).map(|l| TruncatedGradedElement::even_gen(shape, l).unwrap()).collect()
}

/// `x_i -> sum_j m[i][j] x_j` applied to a truncated polynomial.
pub fn substitute(e: &TruncatedGradedElement, m: &[Vec<Q>]) -> TruncatedGradedElement {
    let shape = e.shape();
    let x = gens(shape);
    let images: Vec<TruncatedGradedElement> = m
        .iter()
        .map(|row| row.iter().zip(&x).fold(TruncatedGradedElement::zero(shape), |acc, (c, g)| acc.add(&g.scale(c)).unwrap()))
        .collect();
    let mut out = TruncatedGradedElement::zero(shape);
    for (mono, c) in e.terms() {
        let mut t = TruncatedGradedElement::constant(shape, c.clone());
        for (l, &k) in mono.even.iter().enumerate() {
            for _ in 0..k {
                t = t.multiply(&images[l]).unwrap();
            }
        }
        out = out.add(&t).unwrap();
    }
    out
}

/// Coefficient vectors of `elems` in the monomial basis of degree <= t.
pub fn coordinates(n: usize, t: u32, elems: &[TruncatedGradedElement]) -> Vec<Vec<Q>> {
    let basis = monomial_basis(n, 0, 0, t);
    elems.iter().map(|e| basis.iter().map(|m| e.coefficient(m)).collect()).collect()
}

pub fn rank_of(rows: &[Vec<Q>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    RationalMatrix::from_dense(rows).unwrap().rank()
}

/// Dimension and basis of the polynomials (degree <= t) fixed by every matrix in `group`.
pub fn fixed_polynomials(n: usize, t: u32, group: &[Vec<Vec<Q>>]) -> Vec<Vec<Q>> {
    let shape = GradedShape::polynomial(n, t);
    let basis = monomial_basis(n, 0, 0, t);
    let mut rows = Vec::new();
    for g in group {
        let cols: Vec<Vec<Q>> = basis
            .iter()
            .map(|m| {
                let e = TruncatedGradedElement::from_terms(shape, [(m.clone(), q(1))]).unwrap();
                let d = substitute(&e, g).sub(&e).unwrap();
                basis.iter().map(|b| d.coefficient(b)).collect()
            })
            .collect();
        for i in 0..basis.len() {
            rows.push(cols.iter().map(|c| c[i].clone()).collect::<Vec<_>>());
        }
    }
    RationalMatrix::from_dense(&rows).unwrap().kernel()
}

pub fn same_span(a: &[Vec<Q>], b: &[Vec<Q>]) -> bool {
    let union: Vec<Vec<Q>> = a.iter().chain(b).cloned().collect();
    rank_of(a) == a.len() && rank_of(b) == b.len() && rank_of(&union) == a.len() && a.len() == b.len()
}
