//! Truncated jets `sum_j eps^j A_j` (mod `eps^k`) of linear operators, the
//! perturbation operators `D_j`, and maps induced on symmetric algebras.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_traits::{One, ToPrimitive, Zero};

use crate::covariance::{laplacian_deformation, Scenario};
use crate::error::{Error, Result};
use crate::exact::RationalMatrix;
use crate::graded::{monomial_basis, q, Derivation, Generator, GradedShape, Monomial, TruncatedGradedElement, Q};
use crate::mesh::field::{sup_diff, sup_norm};
use crate::mesh::io::BinaryBlock;
use crate::mesh::{laplace_beltrami, lie_derivative_metric, lie_derivative_scalar, MeshVectorField, MetricField, ScalarField};
use crate::report::{CheckReport, Refinement, Residual, TolerancePolicy};

pub const DEFAULT_MAX_ORDER: usize = 5;

/// A linear operator backend for jet arithmetic.
pub trait Operator: Clone + Send + Sync {
    type Scalar: Clone;

    /// `(rows, cols)`.
    fn shape(&self) -> (usize, usize);
    /// `self ∘ other`.
    fn compose(&self, other: &Self) -> Result<Self>;
    fn add(&self, other: &Self) -> Result<Self>;
    fn scale(&self, s: &Self::Scalar) -> Self;
    fn identity(n: usize) -> Self;
    fn ratio(num: i64, den: i64) -> Self::Scalar;

    fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&Self::ratio(-1, 1)))
    }

    fn zero_like(&self) -> Self {
        self.scale(&Self::ratio(0, 1))
    }
}

/// Operators whose size can be measured.
pub trait OperatorNorm {
    fn max_abs(&self) -> f64;
}

fn check_compose(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a.1 != b.0 {
        return Err(Error::Shape(format!("cannot compose {}x{} with {}x{}", a.0, a.1, b.0, b.1)));
    }
    Ok(())
}

fn check_same(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("cannot add {}x{} and {}x{}", a.0, a.1, b.0, b.1)));
    }
    Ok(())
}

impl Operator for DMatrix<f64> {
    type Scalar = f64;

    fn shape(&self) -> (usize, usize) {
        (self.nrows(), self.ncols())
    }

    fn compose(&self, other: &Self) -> Result<Self> {
        check_compose(self.shape(), other.shape())?;
        Ok(self * other)
    }

    fn add(&self, other: &Self) -> Result<Self> {
        check_same(self.shape(), other.shape())?;
        Ok(self + other)
    }

    fn scale(&self, s: &f64) -> Self {
        self * *s
    }

    fn identity(n: usize) -> Self {
        DMatrix::identity(n, n)
    }

    fn ratio(num: i64, den: i64) -> f64 {
        num as f64 / den as f64
    }
}

impl OperatorNorm for DMatrix<f64> {
    fn max_abs(&self) -> f64 {
        self.amax()
    }
}

impl Operator for RationalMatrix {
    type Scalar = Q;

    fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    fn compose(&self, other: &Self) -> Result<Self> {
        check_compose(Operator::shape(self), Operator::shape(other))?;
        self.mul(other)
    }

    fn add(&self, other: &Self) -> Result<Self> {
        check_same(Operator::shape(self), Operator::shape(other))?;
        RationalMatrix::add(self, other)
    }

    fn scale(&self, s: &Q) -> Self {
        RationalMatrix::scale(self, s)
    }

    fn identity(n: usize) -> Self {
        RationalMatrix::identity(n)
    }

    fn ratio(num: i64, den: i64) -> Q {
        Q::new(num.into(), den.into())
    }
}

impl OperatorNorm for RationalMatrix {
    fn max_abs(&self) -> f64 {
        (0..self.cols())
            .flat_map(|j| self.column(j).values().map(|v| v.to_f64().unwrap_or(f64::INFINITY).abs()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }
}

type Apply = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Matrix-free operator on grid functions.
#[derive(Clone)]
pub struct MeshOperator {
    dim: usize,
    f: Apply,
}

impl MeshOperator {
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self { dim, f: Arc::new(f) }
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::Shape(format!("operator acts on {} values, got {}", self.dim, v.len())));
        }
        Ok((self.f)(v))
    }
}

impl std::fmt::Debug for MeshOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MeshOperator({})", self.dim)
    }
}

impl Operator for MeshOperator {
    type Scalar = f64;

    fn shape(&self) -> (usize, usize) {
        (self.dim, self.dim)
    }

    fn compose(&self, other: &Self) -> Result<Self> {
        check_compose(self.shape(), other.shape())?;
        let (a, b) = (self.f.clone(), other.f.clone());
        Ok(Self::new(self.dim, move |v| a(&b(v))))
    }

    fn add(&self, other: &Self) -> Result<Self> {
        check_same(self.shape(), other.shape())?;
        let (a, b) = (self.f.clone(), other.f.clone());
        Ok(Self::new(self.dim, move |v| a(v).iter().zip(b(v)).map(|(x, y)| x + y).collect()))
    }

    fn scale(&self, s: &f64) -> Self {
        let (a, s) = (self.f.clone(), *s);
        Self::new(self.dim, move |v| a(v).iter().map(|x| s * x).collect())
    }

    fn identity(n: usize) -> Self {
        Self::new(n, |v| v.to_vec())
    }

    fn ratio(num: i64, den: i64) -> f64 {
        num as f64 / den as f64
    }
}

/// `sum_{j<k} eps^j coeffs[j]` in `R[eps]/(eps^k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonJet<Op> {
    pub coeffs: Vec<Op>,
}

impl<Op: Operator> EpsilonJet<Op> {
    pub fn new(coeffs: Vec<Op>) -> Result<Self> {
        let first = coeffs.first().ok_or_else(|| Error::Shape("a jet needs at least one coefficient".into()))?;
        let shape = first.shape();
        if coeffs.iter().any(|c| c.shape() != shape) {
            return Err(Error::Shape("jet coefficients have different shapes".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// `op + 0 eps + ...` truncated at `eps^k`.
    pub fn constant(op: Op, k: usize) -> Self {
        let zero = op.zero_like();
        let mut coeffs = vec![zero; k.max(1)];
        coeffs[0] = op;
        Self { coeffs }
    }

    pub fn identity(n: usize, k: usize) -> Self {
        Self::constant(Op::identity(n), k)
    }

    /// Cauchy product truncated at the smaller order.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        let k = self.order().min(other.order());
        let mut coeffs = Vec::with_capacity(k);
        for j in 0..k {
            let mut acc = self.coeffs[0].compose(&other.coeffs[j])?;
            for a in 1..=j {
                acc = acc.add(&self.coeffs[a].compose(&other.coeffs[j - a])?)?;
            }
            coeffs.push(acc);
        }
        Ok(Self { coeffs })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let k = self.order().min(other.order());
        let coeffs = (0..k).map(|j| self.coeffs[j].add(&other.coeffs[j])).collect::<Result<_>>()?;
        Ok(Self { coeffs })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let k = self.order().min(other.order());
        let coeffs = (0..k).map(|j| self.coeffs[j].sub(&other.coeffs[j])).collect::<Result<_>>()?;
        Ok(Self { coeffs })
    }

    /// `sum_{j<k} eps^j L^j / j!`.
    pub fn exponential(l: &Op, k: usize) -> Result<Self> {
        let (r, c) = l.shape();
        if r != c {
            return Err(Error::Shape("the generator of an exponential jet must be square".into()));
        }
        let mut coeffs = vec![Op::identity(r)];
        let mut power = Op::identity(r);
        let mut fact: i64 = 1;
        for j in 1..k {
            power = l.compose(&power)?;
            fact *= j as i64;
            coeffs.push(power.scale(&Op::ratio(1, fact)));
        }
        Ok(Self { coeffs })
    }
}

impl<Op: Operator + PartialEq> EpsilonJet<Op> {
    /// Inverse `sum_m (-N)^m` of `I + N`; the leading coefficient must be the identity.
    pub fn inverse(&self) -> Result<Self> {
        let (r, c) = self.coeffs[0].shape();
        if r != c || self.coeffs[0] != Op::identity(r) {
            return Err(Error::NotInvertible("leading coefficient is not the identity".into()));
        }
        let k = self.order();
        let mut minus_n = self.clone();
        minus_n.coeffs[0] = minus_n.coeffs[0].zero_like();
        minus_n.coeffs = minus_n.coeffs.iter().map(|a| a.scale(&Op::ratio(-1, 1))).collect();
        let mut acc = Self::identity(r, k);
        let mut power = Self::identity(r, k);
        for _ in 1..k {
            power = power.compose(&minus_n)?;
            acc = acc.add(&power)?;
        }
        Ok(acc)
    }
}

/// `[L, Q] = LQ - QL`.
pub fn d1<Op: Operator>(l: &Op, q: &Op) -> Result<Op> {
    l.compose(q)?.sub(&q.compose(l)?)
}

/// `1/2 [L^2, Q] - [L, Q] L`.
pub fn d2<Op: Operator>(l: &Op, q: &Op) -> Result<Op> {
    let l2 = l.compose(l)?;
    let half = l2.compose(q)?.sub(&q.compose(&l2)?)?.scale(&Op::ratio(1, 2));
    half.sub(&d1(l, q)?.compose(l)?)
}

/// `D_1 .. D_{k_max - 1}` from `(1/j!) L^j Q = sum_{a+b=j} D_a L^b / b!`, `D_0 = Q`,
/// solved by forward substitution.
pub fn solve_dk<Op: Operator>(l: &Op, q: &Op, k_max: usize) -> Result<Vec<Op>> {
    let exp = EpsilonJet::exponential(l, k_max)?;
    let mut d = vec![q.clone()];
    for j in 1..k_max {
        let mut dj = exp.coeffs[j].compose(q)?;
        for (a, da) in d.iter().enumerate() {
            dj = dj.sub(&da.compose(&exp.coeffs[j - a])?)?;
        }
        d.push(dj);
    }
    d.remove(0);
    Ok(d)
}

/// Per-coefficient residual of `exp(eps L) ∘ Q = (Q + sum eps^j D_j) ∘ exp(eps L)` mod `eps^k`,
/// relative to the size of the left-hand coefficient (absolute when that vanishes).
pub fn check_jet_square<Op: Operator + OperatorNorm>(l: &Op, q: &Op, k: usize) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(Error::Shape("jet order must be at least 2".into()));
    }
    let exp = EpsilonJet::exponential(l, k)?;
    let mut dq = vec![q.clone()];
    dq.extend(solve_dk(l, q, k)?);
    let lhs = exp.compose(&EpsilonJet::constant(q.clone(), k))?;
    let rhs = EpsilonJet { coeffs: dq }.compose(&exp)?;
    Ok(lhs
        .coeffs
        .iter()
        .zip(&rhs.coeffs)
        .map(|(a, b)| {
            let scale = a.max_abs().max(b.max_abs());
            let diff = a.sub(b).map(|d| d.max_abs()).unwrap_or(f64::INFINITY);
            if scale > 0.0 {
                diff / scale
            } else {
                diff
            }
        })
        .collect())
}

/// Jet of square matrices as a binary block: `n = 2`, `N = size`, one component per order,
/// each component row-major.
pub fn jet_to_block(jet: &EpsilonJet<DMatrix<f64>>) -> Result<BinaryBlock> {
    let (r, c) = jet.coeffs[0].shape();
    if r != c {
        return Err(Error::Shape("only square operators can be serialised".into()));
    }
    let comps = jet
        .coeffs
        .iter()
        .map(|m| (0..r).flat_map(|i| (0..c).map(move |j| m[(i, j)])).collect())
        .collect();
    Ok(BinaryBlock { n: 2, size: r as u32, comps })
}

pub fn jet_from_block(block: &BinaryBlock) -> Result<EpsilonJet<DMatrix<f64>>> {
    if block.n != 2 {
        return Err(Error::Format("operator jets are stored with n = 2".into()));
    }
    let s = block.size as usize;
    let coeffs = block
        .comps
        .iter()
        .map(|c| {
            if c.len() != s * s {
                return Err(Error::Format("component has the wrong length".into()));
            }
            Ok(DMatrix::from_fn(s, s, |i, j| c[i * s + j]))
        })
        .collect::<Result<Vec<_>>>()?;
    EpsilonJet::new(coeffs)
}

pub const GEOMETRIC_CONSISTENCY_ANCHOR: &str = "Delta_{g + eps L_V g} = Delta_g + eps [L_V, Delta_g]";

/// `laplacian_deformation(g, L_V g, phi)` against `[L_V, Delta_g] phi` built from
/// matrix-free mesh operators.
pub fn geometric_consistency_residual(g: &MetricField, v: &MeshVectorField, phi: &ScalarField) -> Result<Residual> {
    let mesh = phi.mesh;
    let nodes = mesh.num_nodes();
    let lv = {
        let v = v.clone();
        MeshOperator::new(nodes, move |x| {
            let s = ScalarField { mesh, values: x.to_vec() };
            lie_derivative_scalar(&v, &s).expect("same mesh").values
        })
    };
    let lap = {
        let g = g.clone();
        MeshOperator::new(nodes, move |x| {
            let s = ScalarField { mesh, values: x.to_vec() };
            laplace_beltrami(&g, &s).expect("same mesh").values
        })
    };
    let commutator = d1(&lv, &lap)?.apply(&phi.values)?;
    let lv_g = lie_derivative_metric(v, g.tensor())?;
    let formula = laplacian_deformation(g, &lv_g, phi)?;
    Ok(Residual::new(sup_diff(&formula.values, &commutator), sup_norm(&formula.values).max(sup_norm(&commutator))))
}

pub fn check_geometric_consistency(s: &Scenario, grids: &[usize], policy: &TolerancePolicy) -> Result<CheckReport> {
    let residuals = grids
        .iter()
        .map(|&n| {
            let d = s.sample(n)?;
            geometric_consistency_residual(&d.g, &d.v, &d.phi)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(policy.report(
        "geometric_consistency",
        GEOMETRIC_CONSISTENCY_ANCHOR,
        Refinement::Grid,
        grids.to_vec(),
        grids.iter().map(|&n| 1.0 / n as f64).collect(),
        residuals,
    ))
}

/// Finite-dimensional graded space `V` concentrated in degrees 0 and 1, with
/// `Sym(V)` realised as the graded-commutative algebra on its basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedSpace {
    degrees: Vec<u8>,
}

impl GradedSpace {
    pub fn new(degrees: Vec<u8>) -> Result<Self> {
        if degrees.iter().any(|&d| d > 1) {
            return Err(Error::Degree("the toy space lives in degrees 0 and 1".into()));
        }
        Ok(Self { degrees })
    }

    pub fn even(dim: usize) -> Self {
        Self { degrees: vec![0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    fn evens(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.degrees[i] == 0).collect()
    }

    fn odds(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.degrees[i] == 1).collect()
    }

    fn shape(&self, max_degree: u32) -> GradedShape {
        GradedShape { n_even: self.evens().len(), n_odd: self.odds().len(), truncation: max_degree }
    }

    /// Basis vector `i` as a generator of the algebra.
    fn generator(&self, i: usize, shape: GradedShape) -> Result<TruncatedGradedElement> {
        match self.degrees[i] {
            0 => TruncatedGradedElement::even_gen(shape, self.evens().iter().position(|&e| e == i).unwrap_or(0)),
            _ => TruncatedGradedElement::odd_gen(shape, self.odds().iter().position(|&o| o == i).unwrap_or(0)),
        }
    }

    /// Image of the linear map `a` on generator `i`: `sum_r a[r, i] e_r`.
    fn linear_image(&self, a: &RationalMatrix, i: usize, shape: GradedShape) -> Result<TruncatedGradedElement> {
        let mut out = TruncatedGradedElement::zero(shape);
        for (&r, c) in a.column(i) {
            out = out.add(&self.generator(r, shape)?.scale(c))?;
        }
        Ok(out)
    }

    /// Monomial basis of `Sym^p(V)`.
    pub fn sym_basis(&self, p: u32) -> Vec<Monomial> {
        let (ne, no) = (self.evens().len(), self.odds().len());
        (0..=(p as usize).min(no))
            .flat_map(|qd| {
                monomial_basis(ne, no, qd, p - qd as u32)
                    .into_iter()
                    .filter(move |m| m.even_degree() + qd as u32 == p)
            })
            .collect()
    }

    fn matrix_on_sym(
        &self,
        p: u32,
        image: impl Fn(&Monomial) -> Result<TruncatedGradedElement>,
    ) -> Result<RationalMatrix> {
        let basis = self.sym_basis(p);
        let index: std::collections::HashMap<&Monomial, usize> = basis.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let mut m = RationalMatrix::zeros(basis.len(), basis.len());
        for (j, b) in basis.iter().enumerate() {
            for (mono, c) in image(b)?.terms() {
                let i = *index
                    .get(mono)
                    .ok_or_else(|| Error::Degree("image leaves the symmetric power".into()))?;
                m.set(i, j, c.clone());
            }
        }
        Ok(m)
    }

    fn check_square(&self, a: &RationalMatrix) -> Result<()> {
        if a.rows() != self.dim() || a.cols() != self.dim() {
            return Err(Error::Shape(format!("expected a {0}x{0} matrix", self.dim())));
        }
        Ok(())
    }

    /// Derivation extension of a linear map `d` to `Sym^p`. With odd directions present,
    /// `d` must raise degree by one (even to odd, odd to zero); on a purely even space it
    /// is a degree-zero derivation.
    pub fn derivation_on_sym(&self, d: &RationalMatrix, p: u32) -> Result<RationalMatrix> {
        self.check_square(d)?;
        let shape = self.shape(p);
        let graded = !self.odds().is_empty();
        for j in 0..self.dim() {
            for &r in d.column(j).keys() {
                let ok = if graded { self.degrees[j] == 0 && self.degrees[r] == 1 } else { true };
                if !ok {
                    return Err(Error::Degree(format!("entry ({r},{j}) does not raise degree by one")));
                }
            }
        }
        let mut images = Vec::new();
        for i in 0..self.dim() {
            let g = match self.degrees[i] {
                0 => Generator::Even(self.evens().iter().position(|&e| e == i).unwrap_or(0)),
                _ => Generator::Odd(self.odds().iter().position(|&o| o == i).unwrap_or(0)),
            };
            images.push((g, self.linear_image(d, i, shape)?));
        }
        let der = Derivation::new(shape, if graded { 1 } else { 0 }, images)?;
        self.matrix_on_sym(p, |m| der.apply(&TruncatedGradedElement::from_terms(shape, [(m.clone(), Q::one())])?))
    }

    /// Algebra-morphism extension of a degree-preserving linear map to `Sym^p`.
    pub fn morphism_on_sym(&self, a: &RationalMatrix, p: u32) -> Result<RationalMatrix> {
        self.check_square(a)?;
        for j in 0..self.dim() {
            if a.column(j).keys().any(|&r| self.degrees[r] != self.degrees[j]) {
                return Err(Error::Degree("morphism must preserve degree".into()));
            }
        }
        let shape = self.shape(p);
        let evens = self.evens();
        let odds = self.odds();
        let even_img: Vec<_> = evens.iter().map(|&i| self.linear_image(a, i, shape)).collect::<Result<_>>()?;
        let odd_img: Vec<_> = odds.iter().map(|&i| self.linear_image(a, i, shape)).collect::<Result<_>>()?;
        self.matrix_on_sym(p, |m| {
            let mut out = TruncatedGradedElement::one(shape);
            for k in m.odd_indices() {
                out = out.multiply(&odd_img[k])?;
            }
            for (l, &e) in m.even.iter().enumerate() {
                for _ in 0..e {
                    out = out.multiply(&even_img[l])?;
                }
            }
            Ok(out)
        })
    }
}

/// `Sym^p` of a jet `alpha`, for `p = 0..=max_degree`, coefficientwise in `eps`.
///
/// Coefficient `j` of `Sym(alpha)` is the `eps^j` part of the product of generator
/// images, computed here by polarisation: multiplication is bilinear, so each
/// coefficient is a sum over compositions of `j`.
pub fn induced_sym_isomorphism(
    space: &GradedSpace,
    alpha: &EpsilonJet<RationalMatrix>,
    max_degree: u32,
) -> Result<Vec<EpsilonJet<RationalMatrix>>> {
    let n = space.dim();
    if alpha.coeffs[0] != RationalMatrix::identity(n) {
        return Err(Error::NotInvertible("leading coefficient is not the identity".into()));
    }
    let k = alpha.order();
    (0..=max_degree).map(|p| sym_power_of_jet(space, alpha, p, k)).collect()
}

fn sym_power_of_jet(
    space: &GradedSpace,
    alpha: &EpsilonJet<RationalMatrix>,
    p: u32,
    k: usize,
) -> Result<EpsilonJet<RationalMatrix>> {
    let shape = space.shape(p);
    let gens: Vec<Vec<TruncatedGradedElement>> = (0..space.dim())
        .map(|i| alpha.coeffs.iter().map(|a| space.linear_image(a, i, shape)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let evens = space.evens();
    let odds = space.odds();
    let coeffs = (0..k)
        .map(|j| {
            space.matrix_on_sym(p, |m| {
                // factors in canonical order: odd generators first, then even ones
                let mut factors: Vec<usize> = m.odd_indices().iter().map(|&o| odds[o]).collect();
                for (l, &e) in m.even.iter().enumerate() {
                    factors.extend(std::iter::repeat_n(evens[l], e as usize));
                }
                // jet product of the factor images, keeping orders < k
                let mut acc: Vec<TruncatedGradedElement> = vec![TruncatedGradedElement::zero(shape); k];
                acc[0] = TruncatedGradedElement::one(shape);
                for &f in &factors {
                    let mut next = vec![TruncatedGradedElement::zero(shape); k];
                    for a in 0..k {
                        for b in 0..(k - a) {
                            let t = acc[a].multiply(&gens[f][b])?;
                            next[a + b] = next[a + b].add(&t)?;
                        }
                    }
                    acc = next;
                }
                Ok(acc[j].clone())
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EpsilonJet { coeffs })
}

/// Exact check that `Sym(alpha)` intertwines the derivation extensions of `d_V` and
/// `d_W = alpha d_V alpha^{-1}`: returns `(p, j, zero)` per symmetric degree and order.
pub fn check_sym_intertwining(
    space: &GradedSpace,
    alpha: &EpsilonJet<RationalMatrix>,
    d_v: &RationalMatrix,
    max_degree: u32,
) -> Result<Vec<(u32, usize, bool)>> {
    let k = alpha.order();
    let d_w = alpha.compose(&EpsilonJet::constant(d_v.clone(), k))?.compose(&alpha.inverse()?)?;
    let sym = induced_sym_isomorphism(space, alpha, max_degree)?;
    let mut out = Vec::new();
    for p in 0..=max_degree {
        let dv = EpsilonJet::constant(space.derivation_on_sym(d_v, p)?, k);
        let dw = EpsilonJet {
            coeffs: d_w.coeffs.iter().map(|c| space.derivation_on_sym(c, p)).collect::<Result<_>>()?,
        };
        let s = &sym[p as usize];
        let lhs = s.compose(&dv)?;
        let rhs = dw.compose(s)?;
        for j in 0..k {
            out.push((p, j, lhs.coeffs[j] == rhs.coeffs[j]));
        }
    }
    Ok(out)
}

/// Rational matrix from integer rows.
pub fn int_matrix(rows: &[&[i64]]) -> RationalMatrix {
    let d: Vec<Vec<Q>> = rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect();
    RationalMatrix::from_dense(&d).expect("rectangular rows")
}

/// True when all entries of `m` vanish.
pub fn is_zero_matrix(m: &RationalMatrix) -> bool {
    (0..m.cols()).all(|j| m.column(j).values().all(Zero::is_zero))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::TorusMesh;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn d1_is_commutator() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l = random_matrix(&mut rng, 5);
        let q = random_matrix(&mut rng, 5);
        assert!((d1(&l, &q).unwrap() - (&l * &q - &q * &l)).amax() < 1e-14);
        assert_eq!(d1(&q, &q).unwrap().amax(), 0.0);
    }

    #[test]
    fn d2_for_square_zero_generator() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = random_matrix(&mut rng, 4);
        let mut l = DMatrix::zeros(4, 4);
        l[(0, 3)] = 1.5;
        l[(1, 2)] = -0.5;
        assert_eq!((&l * &l).amax(), 0.0);
        let expected = -(d1(&l, &q).unwrap() * &l);
        assert!((d2(&l, &q).unwrap() - expected).amax() < 1e-14);
        assert_eq!(d2(&DMatrix::zeros(4, 4), &q).unwrap().amax(), 0.0);
    }

    #[test]
    fn solver_reproduces_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = random_matrix(&mut rng, 5);
        let q = random_matrix(&mut rng, 5);
        let d = solve_dk(&l, &q, 3).unwrap();
        assert!((&d[0] - d1(&l, &q).unwrap()).amax() < 1e-14);
        assert!((&d[1] - d2(&l, &q).unwrap()).amax() < 1e-13);
    }

    #[test]
    fn rational_solver_matches_closed_form_exactly() {
        let l = int_matrix(&[&[1, 2, 0], &[0, -1, 3], &[2, 0, 1]]);
        let q = int_matrix(&[&[0, 1, 1], &[4, 0, -2], &[1, 1, 1]]);
        let d = solve_dk(&l, &q, 3).unwrap();
        assert_eq!(d[0], d1(&l, &q).unwrap());
        assert_eq!(d[1], d2(&l, &q).unwrap());
        assert!(check_jet_square(&l, &q, 5).unwrap().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn jet_square_holds_for_random_operators() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for k in 2..=DEFAULT_MAX_ORDER {
            let l = random_matrix(&mut rng, 5);
            let q = random_matrix(&mut rng, 5);
            for r in check_jet_square(&l, &q, k).unwrap() {
                assert!(r < 1e-12, "order {k}: {r}");
            }
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let l = DMatrix::<f64>::zeros(3, 3);
        let q = DMatrix::<f64>::zeros(4, 4);
        assert!(matches!(d1(&l, &q), Err(Error::Shape(_))));
    }

    #[test]
    fn jet_inverse_requires_unit_leading_term() {
        let a = EpsilonJet::new(vec![int_matrix(&[&[2, 0], &[0, 1]]), int_matrix(&[&[0, 0], &[1, 0]])]).unwrap();
        assert!(matches!(a.inverse(), Err(Error::NotInvertible(_))));
        let b = EpsilonJet::new(vec![RationalMatrix::identity(2), int_matrix(&[&[0, 1], &[1, 0]]), int_matrix(&[&[1, 0], &[0, 0]])]).unwrap();
        let prod = b.compose(&b.inverse().unwrap()).unwrap();
        assert_eq!(prod, EpsilonJet::identity(2, 3));
    }

    #[test]
    fn block_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let jet = EpsilonJet::exponential(&random_matrix(&mut rng, 4), 3).unwrap();
        let block = jet_to_block(&jet).unwrap();
        assert_eq!(block.comps.len(), 3);
        assert_eq!(jet_from_block(&block).unwrap(), jet);
    }

    #[test]
    fn translation_commutes_with_flat_operator() {
        let mesh = TorusMesh::new(2, 16).unwrap();
        let g = MetricField::flat(mesh);
        let v = MeshVectorField::constant(mesh, &[1.0 / 16.0, 0.0]).unwrap();
        let phi = ScalarField::from_fn(mesh, |x| (2.0 * std::f64::consts::PI * x[0]).sin() * x[1].cos());
        let r = geometric_consistency_residual(&g, &v, &phi).unwrap();
        assert!(r.value < 1e-12 * r.scale.max(1.0));
        let r = geometric_consistency_residual(&g, &MeshVectorField::zero(mesh), &phi).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn identity_jet_induces_identity() {
        let space = GradedSpace::new(vec![0, 0, 1]).unwrap();
        let alpha = EpsilonJet::identity(3, 3);
        for (p, s) in induced_sym_isomorphism(&space, &alpha, 3).unwrap().iter().enumerate() {
            let size = space.sym_basis(p as u32).len();
            assert_eq!(s.coeffs[0], RationalMatrix::identity(size));
            assert!(s.coeffs[1..].iter().all(is_zero_matrix));
        }
    }

    #[test]
    fn zero_differential_extends_to_zero() {
        let space = GradedSpace::new(vec![0, 1]).unwrap();
        for p in 0..=3 {
            assert!(is_zero_matrix(&space.derivation_on_sym(&RationalMatrix::zeros(2, 2), p).unwrap()));
        }
    }

    #[test]
    fn two_dimensional_identity_complex() {
        // V = (k -> k) with d = id, alpha = 1 + eps N, N strictly lower triangular.
        let d = int_matrix(&[&[0, 0], &[1, 0]]);
        let n = int_matrix(&[&[0, 0], &[3, 0]]);
        let alpha = EpsilonJet::new(vec![RationalMatrix::identity(2), n]).unwrap();
        let plain = GradedSpace::even(2);
        assert!(check_sym_intertwining(&plain, &alpha, &d, 2).unwrap().iter().all(|t| t.2));
    }

    #[test]
    fn graded_complex_through_degree_three() {
        let space = GradedSpace::new(vec![0, 0, 1, 1]).unwrap();
        let d = int_matrix(&[&[0, 0, 0, 0], &[0, 0, 0, 0], &[1, 2, 0, 0], &[-1, 3, 0, 0]]);
        let n1 = int_matrix(&[&[0, 0, 0, 0], &[2, 0, 0, 0], &[0, 0, 0, 0], &[0, 0, 5, 0]]);
        let n2 = int_matrix(&[&[1, 1, 0, 0], &[0, -1, 0, 0], &[0, 0, 2, 1], &[0, 0, 0, 3]]);
        let alpha = EpsilonJet::new(vec![RationalMatrix::identity(4), n1, n2]).unwrap();
        let checks = check_sym_intertwining(&space, &alpha, &d, 3).unwrap();
        assert_eq!(checks.len(), 4 * 3);
        assert!(checks.iter().all(|t| t.2));
    }

    #[test]
    fn misgraded_maps_are_rejected() {
        let space = GradedSpace::new(vec![0, 1]).unwrap();
        assert!(matches!(space.derivation_on_sym(&int_matrix(&[&[1, 0], &[0, 0]]), 2), Err(Error::Degree(_))));
        assert!(matches!(space.morphism_on_sym(&int_matrix(&[&[1, 1], &[0, 1]]), 2), Err(Error::Degree(_))));
    }

    proptest! {
        #[test]
        fn solver_is_linear_in_q(seed in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l = random_matrix(&mut rng, 4);
            let q1 = random_matrix(&mut rng, 4);
            let q2 = random_matrix(&mut rng, 4);
            let combo = &q1 * a + &q2 * b;
            let d = solve_dk(&l, &combo, 4).unwrap();
            let d1s = solve_dk(&l, &q1, 4).unwrap();
            let d2s = solve_dk(&l, &q2, 4).unwrap();
            for j in 0..3 {
                let lin = &d1s[j] * a + &d2s[j] * b;
                prop_assert!((&d[j] - lin).amax() <= 1e-12 * (1.0 + d[j].amax()));
            }
        }

        #[test]
        fn jet_square_is_exact_for_all_operators(seed in 0u64..1000, k in 2usize..=5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l = random_matrix(&mut rng, 5);
            let q = random_matrix(&mut rng, 5);
            for r in check_jet_square(&l, &q, k).unwrap() {
                prop_assert!(r < 1e-12);
            }
        }
    }
}
