//! Tangent complexes and Chevalley–Eilenberg cochains of a Lie algebra acting on
//! truncated polynomial rings by polynomial vector fields.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::RationalMatrix;
use crate::graded::{
    basis_size, monomial_basis, q, Derivation, Generator, GradedShape, Monomial, TruncatedGradedElement, Q,
};

pub const DEFAULT_TRUNCATION: u32 = 4;
pub const DEFAULT_BASIS_CAP: usize = 20_000;

/// A Lie algebra `g` with basis `a_0..a_{m-1}`, structure constants `[a_i, a_j] = c^k_ij a_k`,
/// and an action `rho(a_i) = sum_l f_il d/dx_l` by polynomial vector fields on `R^n`.
#[derive(Clone, Debug)]
pub struct ActionLieData {
    n: usize,
    m: usize,
    structure: Vec<Q>,
    fields: Vec<Vec<TruncatedGradedElement>>,
}

impl ActionLieData {
    /// `structure[k][i][j] = c^k_ij`; `fields[i][l]` is the `d/dx_l` component of `rho(a_i)`.
    /// All axioms are checked exactly.
    pub fn new(n: usize, structure: Vec<Vec<Vec<Q>>>, fields: Vec<Vec<TruncatedGradedElement>>) -> Result<Self> {
        let m = structure.len();
        if structure.iter().any(|s| s.len() != m || s.iter().any(|r| r.len() != m)) {
            return Err(Error::Dimension(format!("structure constants must be {m}x{m}x{m}")));
        }
        if fields.len() != m || fields.iter().any(|f| f.len() != n) {
            return Err(Error::Dimension(format!("expected {m} vector fields with {n} components")));
        }
        let mut degree = 0;
        for f in fields.iter().flatten() {
            let s = f.shape();
            if s.n_even != n {
                return Err(Error::Dimension("vector field component has the wrong variable count".into()));
            }
            if f.terms().keys().any(|k| k.odd != 0) {
                return Err(Error::Degree("vector field components must have no odd part".into()));
            }
            degree = degree.max(f.max_even_degree().unwrap_or(0));
        }
        let shape = GradedShape::polynomial(n, degree);
        let fields = fields
            .into_iter()
            .map(|f| {
                f.into_iter()
                    .map(|c| {
                        let p = GradedShape::polynomial(n, c.shape().truncation);
                        TruncatedGradedElement::from_terms(p, c.terms().clone())?.embed(shape)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let structure = structure.into_iter().flatten().flatten().collect();
        let data = Self { n, m, structure, fields };
        data.validate()?;
        Ok(data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn c(&self, k: usize, i: usize, j: usize) -> &Q {
        &self.structure[(k * self.m + i) * self.m + j]
    }

    pub fn field(&self, i: usize, l: usize) -> &TruncatedGradedElement {
        &self.fields[i][l]
    }

    fn field_degree(&self) -> u32 {
        self.fields.first().and_then(|f| f.first()).map_or(0, |c| c.shape().truncation)
    }

    fn validate(&self) -> Result<()> {
        let m = self.m;
        for k in 0..m {
            for i in 0..m {
                for j in 0..m {
                    if *self.c(k, i, j) != -self.c(k, j, i).clone() {
                        return Err(Error::LieData(format!("c^{k}_{i}{j} is not antisymmetric")));
                    }
                }
            }
        }
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for t in 0..m {
                        let mut s = Q::zero();
                        for l in 0..m {
                            s += self.c(l, i, j) * self.c(t, l, k);
                            s += self.c(l, j, k) * self.c(t, l, i);
                            s += self.c(l, k, i) * self.c(t, l, j);
                        }
                        if !s.is_zero() {
                            return Err(Error::LieData(format!("Jacobi identity fails for ({i},{j},{k})")));
                        }
                    }
                }
            }
        }
        let wide = GradedShape::polynomial(self.n, 2 * self.field_degree().max(1));
        let fields: Vec<Vec<TruncatedGradedElement>> = self
            .fields
            .iter()
            .map(|f| f.iter().map(|c| c.embed(wide)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        for i in 0..m {
            for j in (i + 1)..m {
                let br = vector_field_bracket(&fields[i], &fields[j])?;
                for l in 0..self.n {
                    let mut rhs = TruncatedGradedElement::zero(wide);
                    for k in 0..m {
                        rhs = rhs.add(&fields[k][l].scale(self.c(k, i, j)))?;
                    }
                    if br[l] != rhs {
                        return Err(Error::Representation(format!(
                            "[rho({i}), rho({j})] differs from the structure constants in component {l}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// True when some action field is nonzero at the origin of the chart.
    pub fn moves_origin(&self) -> bool {
        let zero = Monomial::unit(self.n);
        self.fields.iter().flatten().any(|f| !f.coefficient(&zero).is_zero())
    }

    /// Same action written in coordinates centred at `p` (`x = p + u`).
    pub fn recentered(&self, p: &[Q]) -> Result<Self> {
        if p.len() != self.n {
            return Err(Error::Dimension("base point has the wrong length".into()));
        }
        let fields = self
            .fields
            .iter()
            .map(|f| f.iter().map(|c| c.translate(p)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.n, self.structure_3d(), fields)
    }

    fn structure_3d(&self) -> Vec<Vec<Vec<Q>>> {
        (0..self.m)
            .map(|k| (0..self.m).map(|i| (0..self.m).map(|j| self.c(k, i, j).clone()).collect()).collect())
            .collect()
    }

    /// Rotations of the plane, `rho = y d/dx - x d/dy`.
    pub fn so2_plane() -> Self {
        let s = GradedShape::polynomial(2, 1);
        let x = TruncatedGradedElement::even_gen(s, 0).unwrap();
        let y = TruncatedGradedElement::even_gen(s, 1).unwrap();
        Self::new(2, vec![vec![vec![Q::zero()]]], vec![vec![y, x.neg()]]).unwrap()
    }

    /// Rotations of space, `L_i = eps_ijk x_j d/dx_k`, for which `[L_i, L_j] = -eps_ijk L_k`.
    pub fn so3_space() -> Self {
        let s = GradedShape::polynomial(3, 1);
        let x: Vec<_> = (0..3).map(|l| TruncatedGradedElement::even_gen(s, l).unwrap()).collect();
        let mut fields = vec![vec![TruncatedGradedElement::zero(s); 3]; 3];
        let mut structure = vec![vec![vec![Q::zero(); 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let e = levi_civita(i, j, k);
                    if e != 0 {
                        fields[i][k] = fields[i][k].add(&x[j].scale(&q(e))).unwrap();
                        structure[k][i][j] = q(-e);
                    }
                }
            }
        }
        Self::new(3, structure, fields).unwrap()
    }

    /// Abelian algebra of dimension `m` acting by zero on `R^n`.
    /// Translations of `R^n`, `e_l -> d/dx_l`: abelian, and every point is moved.
    pub fn translations(n: usize) -> Self {
        let s = GradedShape::polynomial(n, 0);
        let fields = (0..n)
            .map(|i| (0..n).map(|l| TruncatedGradedElement::constant(s, if i == l { Q::one() } else { Q::zero() })).collect())
            .collect();
        Self::new(n, vec![vec![vec![Q::zero(); n]; n]; n], fields).unwrap()
    }

    pub fn trivial(n: usize, m: usize) -> Self {
        let s = GradedShape::polynomial(n, 0);
        Self::new(
            n,
            vec![vec![vec![Q::zero(); m]; m]; m],
            vec![vec![TruncatedGradedElement::zero(s); n]; m],
        )
        .unwrap()
    }
}

pub(crate) fn levi_civita(i: usize, j: usize, k: usize) -> i64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

/// `[X, Y]^b = X^a d_a Y^b - Y^a d_a X^b`.
pub fn vector_field_bracket(
    x: &[TruncatedGradedElement],
    y: &[TruncatedGradedElement],
) -> Result<Vec<TruncatedGradedElement>> {
    let shape = x[0].shape();
    (0..x.len())
        .map(|b| {
            let mut acc = TruncatedGradedElement::zero(shape);
            for a in 0..x.len() {
                acc = acc.add(&x[a].multiply(&y[b].partial_even(a)?)?)?;
                acc = acc.sub(&y[a].multiply(&x[b].partial_even(a)?)?)?;
            }
            Ok(acc)
        })
        .collect()
}

/// The two-term complex `g[1] -> T_p R^n`.
#[derive(Clone, Debug)]
pub struct TangentComplex {
    pub anchor: RationalMatrix,
    pub base_point: Vec<Q>,
}

impl TangentComplex {
    /// `(dim H^-1, dim H^0)`.
    pub fn cohomology(&self) -> (usize, usize) {
        let r = self.anchor.rank();
        (self.anchor.cols() - r, self.anchor.rows() - r)
    }
}

pub fn build_tangent_complex(action: &ActionLieData, p: &[Q]) -> Result<TangentComplex> {
    if p.len() != action.n {
        return Err(Error::Dimension("base point has the wrong length".into()));
    }
    let mut anchor = RationalMatrix::zeros(action.n, action.m);
    for j in 0..action.m {
        for l in 0..action.n {
            anchor.set(l, j, action.field(j, l).evaluate(p)?);
        }
    }
    Ok(TangentComplex { anchor, base_point: p.to_vec() })
}

pub fn cohomology_of_tangent_complex(tc: &TangentComplex) -> (usize, usize) {
    tc.cohomology()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CeOptions {
    pub truncation: u32,
    pub max_ce_degree: usize,
    pub basis_cap: usize,
}

impl Default for CeOptions {
    fn default() -> Self {
        Self { truncation: DEFAULT_TRUNCATION, max_ce_degree: 2, basis_cap: DEFAULT_BASIS_CAP }
    }
}

/// How the even truncation depends on the cochain degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Filtration {
    /// `Lambda^q (x) R/m^{T+1}` for every `q`; used when the action fixes the base point.
    Uniform,
    /// `Lambda^q (x) R/m^{T+1-q}`; needed when fields have constant terms, since `d` then
    /// lowers the polynomial degree by one.
    Shifted,
}

#[derive(Clone, Debug)]
pub struct CeLevel {
    pub degree: usize,
    pub even_truncation: Option<u32>,
    pub basis: Vec<Monomial>,
    /// Matrix of `d` from this level to the next (columns indexed by `basis`).
    pub differential: RationalMatrix,
}

#[derive(Clone, Debug)]
pub struct CeComplex {
    pub shape: GradedShape,
    pub filtration: Filtration,
    pub levels: Vec<CeLevel>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelSummary {
    pub degree: usize,
    pub basis_size: usize,
    pub rank: usize,
    pub nullity: usize,
    pub cohomology_dim: usize,
}

impl CeComplex {
    /// Checks that consecutive differentials compose to the zero matrix.
    pub fn composites_vanish(&self) -> Result<bool> {
        for w in self.levels.windows(2) {
            if !w[1].differential.mul(&w[0].differential)?.is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn summaries(&self) -> Vec<LevelSummary> {
        let ranks: Vec<usize> = self.levels.iter().map(|l| l.differential.rank()).collect();
        self.levels
            .iter()
            .enumerate()
            .map(|(q, l)| {
                let nullity = l.basis.len() - ranks[q];
                let incoming = if q == 0 { 0 } else { ranks[q - 1] };
                LevelSummary {
                    degree: l.degree,
                    basis_size: l.basis.len(),
                    rank: ranks[q],
                    nullity,
                    cohomology_dim: nullity - incoming,
                }
            })
            .collect()
    }

    /// Cocycles in degree 0 as polynomials.
    pub fn h0_basis(&self) -> Result<Vec<TruncatedGradedElement>> {
        let level = &self.levels[0];
        let t = level.even_truncation.unwrap_or(0);
        let shape = GradedShape::polynomial(self.shape.n_even, t);
        level
            .differential
            .kernel()
            .into_iter()
            .map(|v| {
                TruncatedGradedElement::from_terms(
                    shape,
                    level.basis.iter().cloned().zip(v).filter(|(_, c)| !c.is_zero()),
                )
            })
            .collect()
    }
}

/// The CE differential on `Lambda g^v (x) R[x]/m^{T+1}` as a derivation.
pub fn ce_derivation(action: &ActionLieData, truncation: u32) -> Result<Derivation> {
    let (n, m) = (action.n, action.m);
    let shape = GradedShape::new(n, m, truncation)?;
    let odd: Vec<TruncatedGradedElement> =
        (0..m).map(|i| TruncatedGradedElement::odd_gen(shape, i)).collect::<Result<_>>()?;
    let mut images = Vec::with_capacity(n + m);
    for l in 0..n {
        let mut img = TruncatedGradedElement::zero(shape);
        for (i, a) in odd.iter().enumerate() {
            img = img.add(&a.multiply(&action.field(i, l).embed(shape)?)?)?;
        }
        images.push((Generator::Even(l), img));
    }
    let half = Q::new(1.into(), 2.into());
    for k in 0..m {
        let mut img = TruncatedGradedElement::zero(shape);
        for i in 0..m {
            for j in 0..m {
                let c = action.c(k, i, j);
                if !c.is_zero() {
                    img = img.sub(&odd[i].multiply(&odd[j])?.scale(&(c * &half)))?;
                }
            }
        }
        images.push((Generator::Odd(k), img));
    }
    Derivation::new(shape, 1, images)
}

pub fn build_ce_complex(action: &ActionLieData, opts: &CeOptions) -> Result<CeComplex> {
    if opts.truncation < 1 {
        return Err(Error::Degree("truncation degree must be at least 1".into()));
    }
    let (n, m) = (action.n, action.m);
    let t = opts.truncation;
    let filtration = if action.moves_origin() { Filtration::Shifted } else { Filtration::Uniform };
    let even_truncation = |q: usize| -> Option<u32> {
        match filtration {
            Filtration::Uniform => Some(t),
            Filtration::Shifted => t.checked_sub(q as u32),
        }
    };
    let top = opts.max_ce_degree.min(m);
    let mut bases = Vec::with_capacity(top + 2);
    for qd in 0..=(top + 1) {
        let basis = match even_truncation(qd) {
            Some(tq) if qd <= m => {
                let size = basis_size(n, m, qd, tq);
                if size > opts.basis_cap {
                    return Err(Error::BasisSize { size, cap: opts.basis_cap });
                }
                monomial_basis(n, m, qd, tq)
            }
            _ => Vec::new(),
        };
        bases.push(basis);
    }
    let d = ce_derivation(action, t)?;
    let shape = d.shape();
    let mut levels = Vec::with_capacity(top + 1);
    for qd in 0..=top {
        let target: HashMap<&Monomial, usize> = bases[qd + 1].iter().enumerate().map(|(i, b)| (b, i)).collect();
        let columns: Vec<BTreeMap<usize, Q>> = bases[qd]
            .par_iter()
            .map(|b| -> Result<BTreeMap<usize, Q>> {
                let src = TruncatedGradedElement::from_terms(shape, [(b.clone(), Q::one())])?;
                let img = d.apply(&src)?;
                Ok(img
                    .terms()
                    .iter()
                    .filter_map(|(mono, c)| target.get(mono).map(|&r| (r, c.clone())))
                    .collect())
            })
            .collect::<Result<_>>()?;
        let differential = RationalMatrix::from_columns(bases[qd + 1].len(), columns)?;
        levels.push(CeLevel { degree: qd, even_truncation: even_truncation(qd), basis: bases[qd].clone(), differential });
    }
    Ok(CeComplex { shape, filtration, levels })
}

/// Basis of `H^0`, the invariant truncated polynomials.
pub fn invariants_h0(action: &ActionLieData, truncation: u32) -> Result<Vec<TruncatedGradedElement>> {
    let opts = CeOptions { truncation, max_ce_degree: 0, basis_cap: DEFAULT_BASIS_CAP };
    build_ce_complex(action, &opts)?.h0_basis()
}

/// Checks `[M_i, M_j] = c^k_ij M_k` exactly.
pub fn check_representation(action: &ActionLieData, module: &[RationalMatrix]) -> Result<()> {
    let m = action.m;
    if module.len() != m {
        return Err(Error::Dimension(format!("expected {m} module matrices, got {}", module.len())));
    }
    let d = module.first().map_or(0, RationalMatrix::rows);
    if module.iter().any(|a| a.rows() != d || a.cols() != d) {
        return Err(Error::Dimension("module matrices must be square of equal size".into()));
    }
    for i in 0..m {
        for j in 0..m {
            let lhs = module[i].mul(&module[j])?.sub(&module[j].mul(&module[i])?)?;
            let mut rhs = RationalMatrix::zeros(d, d);
            for (k, mk) in module.iter().enumerate() {
                rhs = rhs.add(&mk.scale(action.c(k, i, j)))?;
            }
            if lhs != rhs {
                return Err(Error::Representation(format!("[M_{i}, M_{j}] differs from c^k_{i}{j} M_k")));
            }
        }
    }
    Ok(())
}

/// CE complex of `g` with coefficients in truncated polynomials on `R^n x V`.
///
/// `V` carries the linear action `M_i`; its coordinate functions are acted on by the
/// vector fields `-M_i v`, which makes `i -> field` a Lie algebra map. The truncation
/// bounds the total degree in base and fibre variables together.
pub fn equivariant_observables_toy(
    action: &ActionLieData,
    module: &[RationalMatrix],
    opts: &CeOptions,
) -> Result<CeComplex> {
    check_representation(action, module)?;
    let (n, m) = (action.n, action.m);
    let d = module.first().map_or(0, RationalMatrix::rows);
    let total = n + d;
    let shape = GradedShape::polynomial(total, action.field_degree().max(1));
    let coords: Vec<TruncatedGradedElement> =
        (0..total).map(|l| TruncatedGradedElement::even_gen(shape, l)).collect::<Result<_>>()?;
    let mut fields = Vec::with_capacity(m);
    for i in 0..m {
        let mut f = Vec::with_capacity(total);
        for l in 0..n {
            f.push(action.field(i, l).embed(shape)?);
        }
        for a in 0..d {
            let mut comp = TruncatedGradedElement::zero(shape);
            for (b, c) in module[i].column_entries_of_row(a) {
                comp = comp.sub(&coords[n + b].scale(&c))?;
            }
            f.push(comp);
        }
        fields.push(f);
    }
    let combined = ActionLieData::new(total, action.structure_3d(), fields)?;
    build_ce_complex(&combined, opts)
}

impl RationalMatrix {
    /// Nonzero entries `(col, value)` of row `i`.
    pub fn column_entries_of_row(&self, i: usize) -> Vec<(usize, Q)> {
        (0..self.cols())
            .filter_map(|j| self.column(j).get(&i).map(|v| (j, v.clone())))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::q_frac;

    fn origin(n: usize) -> Vec<Q> {
        vec![Q::zero(); n]
    }

    #[test]
    fn so2_anchor_and_cohomology() {
        let a = ActionLieData::so2_plane();
        let tc = build_tangent_complex(&a, &origin(2)).unwrap();
        assert!(tc.anchor.is_zero());
        assert_eq!(tc.cohomology(), (1, 2));
        let tc = build_tangent_complex(&a, &[q(1), q(0)]).unwrap();
        assert_eq!(tc.anchor.get(0, 0), q(0));
        assert_eq!(tc.anchor.get(1, 0), q(-1));
        assert_eq!(tc.cohomology(), (0, 1));
    }

    #[test]
    fn so3_and_trivial_anchors() {
        let tc = build_tangent_complex(&ActionLieData::so3_space(), &origin(3)).unwrap();
        assert_eq!(tc.cohomology(), (3, 3));
        let tc = build_tangent_complex(&ActionLieData::trivial(2, 2), &[q(3), q_frac(1, 2)]).unwrap();
        assert!(tc.anchor.is_zero());
        assert_eq!(tc.cohomology(), (2, 2));
    }

    #[test]
    fn rank_nullity_for_tangent_complex() {
        let a = ActionLieData::so3_space();
        for p in [[q(1), q(0), q(0)], [q(1), q(2), q(-3)], [q(0), q(0), q(0)]] {
            let tc = build_tangent_complex(&a, &p).unwrap();
            let (h_minus, _) = tc.cohomology();
            assert_eq!(h_minus + tc.anchor.rank(), 3);
        }
    }

    #[test]
    fn bad_structure_constants_are_rejected() {
        let s = GradedShape::polynomial(1, 0);
        let z = TruncatedGradedElement::zero(s);
        let mut c = vec![vec![vec![Q::zero(); 2]; 2]; 2];
        c[0][0][1] = q(1);
        let err = ActionLieData::new(1, c, vec![vec![z.clone()], vec![z]]).unwrap_err();
        assert!(matches!(err, Error::LieData(_)));
    }

    #[test]
    fn non_homomorphic_action_is_rejected() {
        // Abelian algebra acting by x d/dx and d/dx, which do not commute.
        let s = GradedShape::polynomial(1, 1);
        let x = TruncatedGradedElement::even_gen(s, 0).unwrap();
        let one = TruncatedGradedElement::one(s);
        let err = ActionLieData::new(1, vec![vec![vec![Q::zero(); 2]; 2]; 2], vec![vec![x], vec![one]]).unwrap_err();
        assert!(matches!(err, Error::Representation(_)));
    }

    #[test]
    fn differential_on_even_generator_is_the_action() {
        let a = ActionLieData::so3_space();
        let d = ce_derivation(&a, 3).unwrap();
        let shape = d.shape();
        for l in 0..3 {
            let xl = TruncatedGradedElement::even_gen(shape, l).unwrap();
            let mut expected = TruncatedGradedElement::zero(shape);
            for i in 0..3 {
                let ai = TruncatedGradedElement::odd_gen(shape, i).unwrap();
                expected = expected.add(&ai.multiply(&a.field(i, l).embed(shape).unwrap()).unwrap()).unwrap();
            }
            assert_eq!(d.apply(&xl).unwrap(), expected);
        }
    }

    #[test]
    fn abelian_odd_generators_are_closed() {
        let a = ActionLieData::trivial(2, 3);
        let d = ce_derivation(&a, 2).unwrap();
        for k in 0..3 {
            let ak = TruncatedGradedElement::odd_gen(d.shape(), k).unwrap();
            assert!(d.apply(&ak).unwrap().is_zero());
        }
    }

    #[test]
    fn so3_structure_constants_match_bracket() {
        let a = ActionLieData::so3_space();
        assert_eq!(*a.c(2, 0, 1), q(-1));
        assert_eq!(*a.c(0, 1, 2), q(-1));
        assert_eq!(*a.c(1, 0, 2), q(1));
    }

    #[test]
    fn so2_complex_squares_to_zero() {
        let opts = CeOptions { truncation: 4, max_ce_degree: 1, ..Default::default() };
        let c = build_ce_complex(&ActionLieData::so2_plane(), &opts).unwrap();
        assert!(c.composites_vanish().unwrap());
        assert_eq!(c.filtration, Filtration::Uniform);
    }

    #[test]
    fn so2_invariants() {
        let h0 = invariants_h0(&ActionLieData::so2_plane(), 4).unwrap();
        assert_eq!(h0.len(), 3);
    }

    #[test]
    fn trivial_invariants_are_everything() {
        let h0 = invariants_h0(&ActionLieData::trivial(1, 1), 2).unwrap();
        let lines: Vec<String> = h0.iter().map(TruncatedGradedElement::pretty).collect();
        assert_eq!(lines, vec!["1", "x0", "x0^2"]);
    }

    #[test]
    fn basis_cap_is_enforced() {
        let opts = CeOptions { truncation: 6, max_ce_degree: 2, basis_cap: 50 };
        let err = build_ce_complex(&ActionLieData::so3_space(), &opts).unwrap_err();
        assert!(matches!(err, Error::BasisSize { .. }));
    }

    #[test]
    fn empty_module_reproduces_plain_complex() {
        let a = ActionLieData::so2_plane();
        let opts = CeOptions { truncation: 3, max_ce_degree: 1, ..Default::default() };
        let plain = build_ce_complex(&a, &opts).unwrap();
        let toy = equivariant_observables_toy(&a, &[RationalMatrix::zeros(0, 0)], &opts).unwrap();
        assert_eq!(plain.levels.len(), toy.levels.len());
        for (p, t) in plain.levels.iter().zip(&toy.levels) {
            assert_eq!(p.basis, t.basis);
            assert_eq!(p.differential, t.differential);
        }
    }

    #[test]
    fn non_representation_is_rejected() {
        let a = ActionLieData::so3_space();
        let mats = vec![RationalMatrix::identity(2); 3];
        let err = equivariant_observables_toy(&a, &mats, &CeOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Representation(_)));
    }
}
