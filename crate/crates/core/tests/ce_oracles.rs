//! H⁰ of CE cochains against independent group-averaging oracles: polynomials fixed by
//! a group element of infinite order (or a generating pair) are computed by plain linear
//! algebra on substituted monomials, with no reference to the CE differential.

mod common;

use common::{coordinates, fixed_polynomials, gens, same_span};
use gencov::ce::{build_ce_complex, invariants_h0, ActionLieData, CeOptions};
use gencov::graded::{q, q_frac, GradedShape, TruncatedGradedElement, Q};
use num_traits::Zero;

fn rot2(c: Q, s: Q) -> Vec<Vec<Q>> {
    vec![vec![c.clone(), -s.clone()], vec![s, c]]
}

#[test]
fn so2_invariants_match_rotation_averaging() {
    for t in 1..=6 {
        let h0 = invariants_h0(&ActionLieData::so2_plane(), t).unwrap();
        let oracle = fixed_polynomials(2, t, &[rot2(q_frac(3, 5), q_frac(4, 5))]);
        assert!(same_span(&coordinates(2, t, &h0), &oracle), "truncation {t}");
        assert_eq!(h0.len(), (t / 2 + 1) as usize);
    }
}

#[test]
fn so2_invariants_at_truncation_four_are_powers_of_r_squared() {
    let shape = GradedShape::polynomial(2, 4);
    let x = gens(shape);
    let r2 = x[0].multiply(&x[0]).unwrap().add(&x[1].multiply(&x[1]).unwrap()).unwrap();
    let expected = vec![TruncatedGradedElement::one(shape), r2.clone(), r2.multiply(&r2).unwrap()];
    let h0 = invariants_h0(&ActionLieData::so2_plane(), 4).unwrap();
    assert!(same_span(&coordinates(2, 4, &h0), &coordinates(2, 4, &expected)));
}

#[test]
fn so3_invariants_match_two_axis_averaging() {
    let (c, s) = (q_frac(3, 5), q_frac(4, 5));
    let z = vec![vec![c.clone(), -s.clone(), q(0)], vec![s.clone(), c.clone(), q(0)], vec![q(0), q(0), q(1)]];
    let x = vec![vec![q(1), q(0), q(0)], vec![q(0), c.clone(), -s.clone()], vec![q(0), s, c]];
    for t in 1..=4 {
        let h0 = invariants_h0(&ActionLieData::so3_space(), t).unwrap();
        let oracle = fixed_polynomials(3, t, &[z.clone(), x.clone()]);
        assert!(same_span(&coordinates(3, t, &h0), &oracle), "truncation {t}");
    }
}

#[test]
fn jordan_block_invariants_match_unipotent_element() {
    // rho = y d/dx integrates to I + tJ; invariance under I + J forces invariance for all t
    let s = GradedShape::polynomial(2, 1);
    let y = TruncatedGradedElement::even_gen(s, 1).unwrap();
    let action = ActionLieData::new(2, vec![vec![vec![Q::zero()]]], vec![vec![y, TruncatedGradedElement::zero(s)]]).unwrap();
    let g = vec![vec![q(1), q(1)], vec![q(0), q(1)]];
    for t in 1..=5 {
        let h0 = invariants_h0(&action, t).unwrap();
        let oracle = fixed_polynomials(2, t, &[g.clone()]);
        assert!(same_span(&coordinates(2, t, &h0), &oracle), "truncation {t}");
        assert_eq!(h0.len(), t as usize + 1);
    }
}

#[test]
fn recentered_rotation_invariants_are_powers_of_the_shifted_radius() {
    // around (1, 0): r^2 - 1 = 2u + u^2 + y^2 has a linear term, so its powers give T + 1
    // independent invariants
    let action = ActionLieData::so2_plane().recentered(&[q(1), q(0)]).unwrap();
    for t in 1..=5 {
        let shape = GradedShape::polynomial(2, t);
        let x = gens(shape);
        let s = x[0].scale(&q(2)).add(&x[0].multiply(&x[0]).unwrap()).unwrap().add(&x[1].multiply(&x[1]).unwrap()).unwrap();
        let mut powers = vec![TruncatedGradedElement::one(shape)];
        for _ in 0..t {
            let next = powers.last().unwrap().multiply(&s).unwrap();
            powers.push(next);
        }
        let h0 = invariants_h0(&action, t).unwrap();
        assert!(same_span(&coordinates(2, t, &h0), &coordinates(2, t, &powers)), "truncation {t}");
    }
}

#[test]
fn complexes_are_exact_through_top_degree() {
    for action in [ActionLieData::so2_plane(), ActionLieData::so3_space(), ActionLieData::so2_plane().recentered(&[q(1), q(0)]).unwrap()] {
        for t in 1..=5 {
            let cx = build_ce_complex(&action, &CeOptions { truncation: t, max_ce_degree: action.dim(), ..CeOptions::default() }).unwrap();
            assert!(cx.composites_vanish().unwrap());
        }
    }
}
