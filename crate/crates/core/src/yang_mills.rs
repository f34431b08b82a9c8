//! Lie-algebra-valued differential forms on the torus mesh, the Hodge star, `d_A`,
//! and the equivariance squares of the linearised Yang-Mills complex
//! `Ω⁰[1] -> Ω¹ -> Ω^{n-1}[-1] -> Ωⁿ[-2]`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::field::{sup_diff, sup_norm};
use crate::mesh::io::BinaryBlock;
use crate::mesh::ops::central_diff;
use crate::mesh::random::{random_displacement, rng, SmoothTensor, SmoothVector, TrigPoly};
use crate::mesh::{Diffeomorphism, InterpolationMethod, MetricField, TorusMesh};
use crate::report::{CheckReport, Refinement, Residual, TolerancePolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LieAlgebra {
    U1,
    Su2,
}

impl LieAlgebra {
    pub fn dim(self) -> usize {
        match self {
            LieAlgebra::U1 => 1,
            LieAlgebra::Su2 => 3,
        }
    }

    /// Structure constants `[e_a, e_b] = f_ab^c e_c`; `epsilon_abc` for su(2).
    pub fn structure(self, a: usize, b: usize, c: usize) -> f64 {
        match self {
            LieAlgebra::U1 => 0.0,
            LieAlgebra::Su2 => levi_civita3(a, b, c),
        }
    }

    pub fn is_abelian(self) -> bool {
        self == LieAlgebra::U1
    }

    pub fn bracket(self, x: &[f64], y: &[f64]) -> Vec<f64> {
        match self {
            LieAlgebra::U1 => vec![0.0],
            LieAlgebra::Su2 => vec![x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]],
        }
    }

    /// Invariant pairing in the basis above. For su(2) with `e_a = -i sigma_a / 2` this is
    /// `-2 tr(xy)`, the negative trace form normalised to the identity matrix.
    pub fn pairing(self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).map(|(a, b)| a * b).sum()
    }
}

fn levi_civita3(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Increasing index combinations of size `p` from `0..n`, in lexicographic order.
pub fn combos(n: usize, p: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, p: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if p <= n {
        rec(0, n, p, &mut Vec::new(), &mut out);
    }
    out
}

fn combo_index(n: usize, c: &[usize]) -> usize {
    combos(n, c.len()).iter().position(|x| x == c).expect("valid combination")
}

/// Sign of the permutation sorting the concatenation `(i, j)` of disjoint increasing lists.
fn shuffle_sign(i: &[usize], j: &[usize]) -> f64 {
    let inversions: usize = i.iter().map(|a| j.iter().filter(|b| *b < a).count()).sum();
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn minor_det(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    if rows.is_empty() {
        return 1.0;
    }
    DMatrix::from_fn(rows.len(), cols.len(), |a, b| m[(rows[a], cols[b])]).determinant()
}

/// `p`-form with coefficients in a Lie algebra; `comps[c * dim_g + a]` holds the nodal
/// values of the coefficient of `e_a dx^{I_c}`, `I_c` the `c`-th increasing combination.
#[derive(Clone, Debug, PartialEq)]
pub struct LieAlgValuedForm {
    pub mesh: TorusMesh,
    pub degree: usize,
    pub algebra: LieAlgebra,
    pub comps: Vec<Vec<f64>>,
}

impl LieAlgValuedForm {
    pub fn new(mesh: TorusMesh, degree: usize, algebra: LieAlgebra, comps: Vec<Vec<f64>>) -> Result<Self> {
        if degree > mesh.dim() {
            return Err(Error::Degree(format!("form degree {degree} exceeds dimension {}", mesh.dim())));
        }
        let expected = combos(mesh.dim(), degree).len() * algebra.dim();
        if comps.len() != expected || comps.iter().any(|c| c.len() != mesh.num_nodes()) {
            return Err(Error::Shape(format!("expected {expected} components of {} values", mesh.num_nodes())));
        }
        Ok(Self { mesh, degree, algebra, comps })
    }

    pub fn zero(mesh: TorusMesh, degree: usize, algebra: LieAlgebra) -> Result<Self> {
        let count = combos(mesh.dim(), degree).len() * algebra.dim();
        Self::new(mesh, degree, algebra, vec![vec![0.0; mesh.num_nodes()]; count])
    }

    /// Samples `f(combination, basis index, x)`.
    pub fn from_fn(
        mesh: TorusMesh,
        degree: usize,
        algebra: LieAlgebra,
        f: impl Fn(usize, usize, &[f64]) -> f64,
    ) -> Result<Self> {
        let count = combos(mesh.dim(), degree).len();
        let dg = algebra.dim();
        let comps = (0..count * dg)
            .map(|k| (0..mesh.num_nodes()).map(|i| f(k / dg, k % dg, &mesh.coords(i)[..mesh.dim()])).collect())
            .collect();
        Self::new(mesh, degree, algebra, comps)
    }

    pub fn num_combos(&self) -> usize {
        combos(self.mesh.dim(), self.degree).len()
    }

    pub fn component(&self, combo: usize, a: usize) -> &[f64] {
        &self.comps[combo * self.algebra.dim() + a]
    }

    pub fn sup_norm(&self) -> f64 {
        self.comps.iter().map(|c| sup_norm(c)).fold(0.0, f64::max)
    }

    pub fn sup_diff(&self, other: &Self) -> f64 {
        self.comps.iter().zip(&other.comps).map(|(a, b)| sup_diff(a, b)).fold(0.0, f64::max)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.mesh != other.mesh || self.algebra != other.algebra {
            return Err(Error::Shape("forms live on different meshes or algebras".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        if self.degree != other.degree {
            return Err(Error::Degree("cannot add forms of different degree".into()));
        }
        let comps = self.comps.iter().zip(&other.comps).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect();
        Ok(Self { comps, ..self.clone() })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { comps: self.comps.iter().map(|c| c.iter().map(|x| s * x).collect()).collect(), ..self.clone() }
    }

    /// Binary layout of the mesh module with one component per (combination, basis) pair.
    pub fn to_block(&self) -> BinaryBlock {
        let refs: Vec<&[f64]> = self.comps.iter().map(Vec::as_slice).collect();
        BinaryBlock::from_mesh(&self.mesh, &refs).expect("components match the mesh")
    }

    pub fn from_block(block: &BinaryBlock, degree: usize, algebra: LieAlgebra) -> Result<Self> {
        Self::new(block.mesh()?, degree, algebra, block.comps.clone())
    }
}

/// Centered-difference exterior derivative, componentwise in the algebra.
pub fn exterior_d(w: &LieAlgValuedForm) -> Result<LieAlgValuedForm> {
    let n = w.mesh.dim();
    if w.degree >= n {
        return Err(Error::Degree(format!("d of a {}-form in dimension {n}", w.degree)));
    }
    let dg = w.algebra.dim();
    let mut out = LieAlgValuedForm::zero(w.mesh, w.degree + 1, w.algebra)?;
    for (kc, k) in combos(n, w.degree + 1).iter().enumerate() {
        for (pos, &axis) in k.iter().enumerate() {
            let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
            let mut rest = k.clone();
            rest.remove(pos);
            let ic = combo_index(n, &rest);
            for a in 0..dg {
                let d = central_diff(&w.mesh, w.component(ic, a), axis);
                for (o, v) in out.comps[kc * dg + a].iter_mut().zip(d) {
                    *o += sign * v;
                }
            }
        }
    }
    Ok(out)
}

/// `[alpha ∧ beta]`: wedge on form indices, Lie bracket on coefficients.
pub fn wedge_bracket(alpha: &LieAlgValuedForm, beta: &LieAlgValuedForm) -> Result<LieAlgValuedForm> {
    alpha.check_compatible(beta)?;
    let n = alpha.mesh.dim();
    let (p, q) = (alpha.degree, beta.degree);
    if p + q > n {
        return Err(Error::Degree(format!("wedge of degrees {p} and {q} exceeds dimension {n}")));
    }
    let alg = alpha.algebra;
    let dg = alg.dim();
    let mut out = LieAlgValuedForm::zero(alpha.mesh, p + q, alg)?;
    if alg.is_abelian() {
        return Ok(out);
    }
    let ci = combos(n, p);
    let cj = combos(n, q);
    for (kc, k) in combos(n, p + q).iter().enumerate() {
        for (ii, i) in ci.iter().enumerate() {
            if !i.iter().all(|x| k.contains(x)) {
                continue;
            }
            let j: Vec<usize> = k.iter().copied().filter(|x| !i.contains(x)).collect();
            let jj = cj.iter().position(|c| *c == j).expect("complement is a combination");
            let sign = shuffle_sign(i, &j);
            for c in 0..dg {
                for a in 0..dg {
                    for b in 0..dg {
                        let f = alg.structure(a, b, c);
                        if f == 0.0 {
                            continue;
                        }
                        let (x, y) = (alpha.component(ii, a), beta.component(jj, b));
                        for ((o, u), v) in out.comps[kc * dg + c].iter_mut().zip(x).zip(y) {
                            *o += sign * f * u * v;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `d_A w = dw + [A ∧ w]`.
pub fn covariant_d(a: &LieAlgValuedForm, w: &LieAlgValuedForm) -> Result<LieAlgValuedForm> {
    if a.degree != 1 {
        return Err(Error::Degree("the connection must be a 1-form".into()));
    }
    exterior_d(w)?.add(&wedge_bracket(a, w)?)
}

/// Pointwise star: `(*w)_J = sqrt(g) sign(I^c, J) w^{I^c}` with `w^I` raised by the minors of
/// `g^{-1}`, which realises `w ∧ *eta = <w, eta>_g vol_g`.
pub fn hodge_star(g: &MetricField, w: &LieAlgValuedForm) -> Result<LieAlgValuedForm> {
    let mesh = w.mesh;
    if g.mesh() != mesh {
        return Err(Error::Shape("metric and form live on different meshes".into()));
    }
    let n = mesh.dim();
    let p = w.degree;
    let dg = w.algebra.dim();
    let cp = combos(n, p);
    let cq = combos(n, n - p);
    // for each target J: source combination I^c and sign
    let targets: Vec<(usize, f64)> = cq
        .iter()
        .map(|j| {
            let ic: Vec<usize> = (0..n).filter(|x| !j.contains(x)).collect();
            (cp.iter().position(|c| *c == ic).expect("complement"), shuffle_sign(&ic, j))
        })
        .collect();
    let nodes = mesh.num_nodes();
    let per_node: Vec<Vec<f64>> = (0..nodes)
        .into_par_iter()
        .map(|i| {
            let ginv = g.inverse_at(i);
            let sg = g.sqrt_det()[i];
            let mut out = vec![0.0; cq.len() * dg];
            for (jc, &(ic, sign)) in targets.iter().enumerate() {
                for (kc, k) in cp.iter().enumerate() {
                    let m = minor_det(&ginv, &cp[ic], k);
                    if m == 0.0 {
                        continue;
                    }
                    for a in 0..dg {
                        out[jc * dg + a] += sg * sign * m * w.component(kc, a)[i];
                    }
                }
            }
            out
        })
        .collect();
    let comps = (0..cq.len() * dg).map(|c| per_node.iter().map(|v| v[c]).collect()).collect();
    LieAlgValuedForm::new(mesh, n - p, w.algebra, comps)
}

/// `(d_A *_g d_A) w = d*dw + d*[A∧w] + [A∧*dw] + [A∧*[A∧w]]`.
pub fn ym_middle_operator(g: &MetricField, a: &LieAlgValuedForm, w: &LieAlgValuedForm) -> Result<LieAlgValuedForm> {
    if w.degree != 1 || a.degree != 1 {
        return Err(Error::Degree("the middle operator acts on 1-forms with a 1-form connection".into()));
    }
    let star_dw = hodge_star(g, &exterior_d(w)?)?;
    let star_aw = hodge_star(g, &wedge_bracket(a, w)?)?;
    exterior_d(&star_dw)?
        .add(&exterior_d(&star_aw)?)?
        .add(&wedge_bracket(a, &star_dw)?)?
        .add(&wedge_bracket(a, &star_aw)?)
}

/// `(f^* w)_K = sum_I (w_I ∘ f) det J[I, K]`, `J = df`.
pub fn pullback_form(f: &Diffeomorphism, w: &LieAlgValuedForm) -> Result<LieAlgValuedForm> {
    if f.mesh() != w.mesh {
        return Err(Error::Shape("diffeomorphism and form live on different meshes".into()));
    }
    if f.is_identity() {
        return Ok(w.clone());
    }
    let mesh = w.mesh;
    let n = mesh.dim();
    let dg = w.algebra.dim();
    let refs: Vec<&[f64]> = w.comps.iter().map(Vec::as_slice).collect();
    let s = f.sample_at_images(&refs)?;
    let cp = combos(n, w.degree);
    let per_node: Vec<Vec<f64>> = (0..mesh.num_nodes())
        .into_par_iter()
        .map(|node| {
            let jac = f.jacobian_at(node);
            let mut out = vec![0.0; cp.len() * dg];
            for (kc, k) in cp.iter().enumerate() {
                for (ic, i) in cp.iter().enumerate() {
                    let m = minor_det(&jac, i, k);
                    for a in 0..dg {
                        out[kc * dg + a] += m * s[ic * dg + a][node];
                    }
                }
            }
            out
        })
        .collect();
    let comps = (0..cp.len() * dg).map(|c| per_node.iter().map(|v| v[c]).collect()).collect();
    LieAlgValuedForm::new(mesh, w.degree, w.algebra, comps)
}

/// `F_A = dA + 1/2 [A ∧ A]`.
pub fn field_strength(a: &LieAlgValuedForm) -> Result<LieAlgValuedForm> {
    exterior_d(a)?.add(&wedge_bracket(a, a)?.scale(0.5))
}

/// `S_YM = 1/2 int <F_A ∧ *F_A>`, paired with the invariant form of the algebra.
pub fn ym_action(g: &MetricField, a: &LieAlgValuedForm) -> Result<f64> {
    let f = field_strength(a)?;
    let star = hodge_star(g, &f)?;
    let n = a.mesh.dim();
    let dg = a.algebra.dim();
    let c2 = combos(n, 2);
    let cq = combos(n, n - 2);
    let mut top = vec![0.0; a.mesh.num_nodes()];
    for (ic, i) in c2.iter().enumerate() {
        for (jc, j) in cq.iter().enumerate() {
            if i.iter().any(|x| j.contains(x)) {
                continue;
            }
            let sign = shuffle_sign(i, j);
            for node in 0..top.len() {
                let x: Vec<f64> = (0..dg).map(|b| f.component(ic, b)[node]).collect();
                let y: Vec<f64> = (0..dg).map(|b| star.component(jc, b)[node]).collect();
                top[node] += sign * a.algebra.pairing(&x, &y);
            }
        }
    }
    Ok(0.5 * a.mesh.integrate(&top))
}

pub mod anchors {
    pub const FIRST_SQUARE: &str = "f^*(d_A alpha) = d_{f^*A}(f^*alpha) on Omega^0(X, g)";
    pub const MIDDLE_SQUARE: &str = "f^*((d_A *_g d_A) omega) = (d + f^*A) *_{f^*g} (d + f^*A)(f^*omega) on Omega^1(X, g)";
    pub const LAST_SQUARE: &str = "f^*(d_A beta) = d_{f^*A}(f^*beta) on Omega^{n-1}(X, g)";
}

/// Sup-norm residuals of the three squares, each against the size of its left-hand side.
pub fn ym_square_residuals(
    g: &MetricField,
    a: &LieAlgValuedForm,
    f: &Diffeomorphism,
    alpha: &LieAlgValuedForm,
    omega: &LieAlgValuedForm,
    beta: &LieAlgValuedForm,
) -> Result<[Residual; 3]> {
    let n = a.mesh.dim();
    if alpha.degree != 0 || omega.degree != 1 || beta.degree + 1 != n {
        return Err(Error::Degree("test fields must have degrees 0, 1 and n-1".into()));
    }
    let fa = pullback_form(f, a)?;
    let fg = crate::mesh::pullback_metric(f, g)?;
    let res = |lhs: LieAlgValuedForm, rhs: LieAlgValuedForm| Residual::new(lhs.sup_diff(&rhs), lhs.sup_norm().max(rhs.sup_norm()));
    let first = res(pullback_form(f, &covariant_d(a, alpha)?)?, covariant_d(&fa, &pullback_form(f, alpha)?)?);
    let middle = res(
        pullback_form(f, &ym_middle_operator(g, a, omega)?)?,
        ym_middle_operator(&fg, &fa, &pullback_form(f, omega)?)?,
    );
    let last = res(pullback_form(f, &covariant_d(a, beta)?)?, covariant_d(&fa, &pullback_form(f, beta)?)?);
    Ok([first, middle, last])
}

pub const CONNECTION_AMPLITUDE: f64 = 0.5;

/// Seeded continuum data for the Yang-Mills squares.
#[derive(Clone, Debug)]
pub struct YmScenario {
    pub dim: usize,
    pub algebra: LieAlgebra,
    pub metric: SmoothTensor,
    pub connection: Vec<TrigPoly>,
    pub alpha: Vec<TrigPoly>,
    pub omega: Vec<TrigPoly>,
    pub beta: Vec<TrigPoly>,
    pub displacement: SmoothVector,
    /// Cubic splines by default: pullback cost stays linear in the node count.
    pub interpolation: InterpolationMethod,
}

/// All Yang-Mills data on one grid.
pub struct YmData {
    pub g: MetricField,
    pub a: LieAlgValuedForm,
    pub f: Diffeomorphism,
    pub alpha: LieAlgValuedForm,
    pub omega: LieAlgValuedForm,
    pub beta: LieAlgValuedForm,
}

impl YmScenario {
    pub fn random(seed: u64, dim: usize, algebra: LieAlgebra) -> Self {
        let s = seed.wrapping_mul(1000);
        let dg = algebra.dim();
        let polys = |offset: u64, degree: usize, amplitude: f64| {
            let mut r = rng(s + offset);
            (0..combos(dim, degree).len() * dg).map(|_| TrigPoly::random(&mut r, dim, 1, amplitude, true)).collect()
        };
        Self {
            dim,
            algebra,
            metric: SmoothTensor::random_metric(s + 11, dim, crate::covariance::METRIC_AMPLITUDE),
            connection: polys(12, 1, CONNECTION_AMPLITUDE),
            alpha: polys(13, 0, 1.0),
            omega: polys(14, 1, 1.0),
            beta: polys(15, dim - 1, 1.0),
            displacement: random_displacement(s + 16, dim, crate::covariance::DISPLACEMENT_AMPLITUDE),
            interpolation: InterpolationMethod::CubicSpline,
        }
    }

    pub fn sample(&self, size: usize) -> Result<YmData> {
        let mesh = TorusMesh::new(self.dim, size)?;
        let form = |p: &[TrigPoly], degree: usize| {
            LieAlgValuedForm::new(mesh, degree, self.algebra, p.iter().map(|t| t.sample(&mesh)).collect())
        };
        Ok(YmData {
            g: self.metric.sample_metric(&mesh)?,
            a: form(&self.connection, 1)?,
            f: self.displacement.as_displacement(&mesh)?.with_method(self.interpolation),
            alpha: form(&self.alpha, 0)?,
            omega: form(&self.omega, 1)?,
            beta: form(&self.beta, self.dim - 1)?,
        })
    }
}

/// Refinement study of all three squares.
pub fn check_ym_equivariance(s: &YmScenario, grids: &[usize], policy: &TolerancePolicy) -> Result<Vec<CheckReport>> {
    let per_grid = grids
        .iter()
        .map(|&n| {
            let d = s.sample(n)?;
            ym_square_residuals(&d.g, &d.a, &d.f, &d.alpha, &d.omega, &d.beta)
        })
        .collect::<Result<Vec<_>>>()?;
    let names = [("ym_first_square", anchors::FIRST_SQUARE), ("ym_middle_square", anchors::MIDDLE_SQUARE), ("ym_last_square", anchors::LAST_SQUARE)];
    Ok(names
        .iter()
        .enumerate()
        .map(|(k, (name, anchor))| {
            policy.report(
                name,
                anchor,
                Refinement::Grid,
                grids.to_vec(),
                grids.iter().map(|&n| 1.0 / n as f64).collect(),
                per_grid.iter().map(|r| r[k].clone()).collect(),
            )
        })
        .collect())
}
