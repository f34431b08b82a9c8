use nalgebra::DMatrix;

use super::torus::TorusMesh;
use crate::error::{Error, Result};

fn check_len(mesh: &TorusMesh, v: &[f64], what: &str) -> Result<()> {
    if v.len() != mesh.num_nodes() {
        return Err(Error::Shape(format!(
            "{what} has {} values, mesh has {} nodes",
            v.len(),
            mesh.num_nodes()
        )));
    }
    Ok(())
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub mesh: TorusMesh,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: TorusMesh, values: Vec<f64>) -> Result<Self> {
        check_len(&mesh, &values, "scalar field")?;
        Ok(Self { mesh, values })
    }

    pub fn constant(mesh: TorusMesh, c: f64) -> Self {
        Self { mesh, values: vec![c; mesh.num_nodes()] }
    }

    pub fn from_fn(mesh: TorusMesh, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..mesh.num_nodes()).map(|i| f(&mesh.coords(i)[..mesh.dim()])).collect();
        Self { mesh, values }
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { mesh: self.mesh, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self { mesh: self.mesh, values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect() }
    }
}

/// Density stored as its `d^n x` coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField {
    pub mesh: TorusMesh,
    pub values: Vec<f64>,
}

impl DensityField {
    pub fn new(mesh: TorusMesh, values: Vec<f64>) -> Result<Self> {
        check_len(&mesh, &values, "density field")?;
        Ok(Self { mesh, values })
    }

    pub fn integral(&self) -> f64 {
        self.mesh.integrate(&self.values)
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeshVectorField {
    pub mesh: TorusMesh,
    pub comps: Vec<Vec<f64>>,
}

impl MeshVectorField {
    pub fn new(mesh: TorusMesh, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != mesh.dim() {
            return Err(Error::Shape(format!("vector field needs {} components", mesh.dim())));
        }
        for c in &comps {
            check_len(&mesh, c, "vector component")?;
        }
        Ok(Self { mesh, comps })
    }

    pub fn zero(mesh: TorusMesh) -> Self {
        Self { mesh, comps: vec![vec![0.0; mesh.num_nodes()]; mesh.dim()] }
    }

    pub fn constant(mesh: TorusMesh, v: &[f64]) -> Result<Self> {
        if v.len() != mesh.dim() {
            return Err(Error::Shape("constant vector has the wrong length".into()));
        }
        Ok(Self { mesh, comps: v.iter().map(|&c| vec![c; mesh.num_nodes()]).collect() })
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.mesh.num_nodes())
            .map(|i| self.comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { mesh: self.mesh, comps: self.comps.iter().map(|c| c.iter().map(|v| v * s).collect()).collect() }
    }
}

/// Symmetric 2-tensor with lower indices, components stored as `comps[mu * n + nu]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensorField {
    pub mesh: TorusMesh,
    pub comps: Vec<Vec<f64>>,
}

impl SymTensorField {
    pub fn new(mesh: TorusMesh, comps: Vec<Vec<f64>>) -> Result<Self> {
        let n = mesh.dim();
        if comps.len() != n * n {
            return Err(Error::Shape(format!("tensor field needs {} components", n * n)));
        }
        for c in &comps {
            check_len(&mesh, c, "tensor component")?;
        }
        for mu in 0..n {
            for nu in 0..mu {
                let a = &comps[mu * n + nu];
                let b = &comps[nu * n + mu];
                let scale = sup_norm(a).max(sup_norm(b)).max(1.0);
                if sup_diff(a, b) > 1e-12 * scale {
                    return Err(Error::Geometry(format!("tensor is not symmetric in ({mu},{nu})")));
                }
            }
        }
        Ok(Self { mesh, comps })
    }

    pub fn zero(mesh: TorusMesh) -> Self {
        let n = mesh.dim();
        Self { mesh, comps: vec![vec![0.0; mesh.num_nodes()]; n * n] }
    }

    pub fn identity(mesh: TorusMesh) -> Self {
        let n = mesh.dim();
        let mut t = Self::zero(mesh);
        for mu in 0..n {
            t.comps[mu * n + mu] = vec![1.0; mesh.num_nodes()];
        }
        t
    }

    /// Constant symmetric tensor from a row-major `n x n` matrix.
    pub fn constant(mesh: TorusMesh, m: &[f64]) -> Result<Self> {
        let n = mesh.dim();
        if m.len() != n * n {
            return Err(Error::Shape("constant tensor has the wrong size".into()));
        }
        Self::new(mesh, m.iter().map(|&v| vec![v; mesh.num_nodes()]).collect())
    }

    pub fn component(&self, mu: usize, nu: usize) -> &[f64] {
        &self.comps[mu * self.mesh.dim() + nu]
    }

    pub fn at(&self, node: usize) -> DMatrix<f64> {
        let n = self.mesh.dim();
        DMatrix::from_fn(n, n, |a, b| self.comps[a * n + b][node])
    }

    pub fn sup_norm(&self) -> f64 {
        self.comps.iter().map(|c| sup_norm(c)).fold(0.0, f64::max)
    }

    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + s * y).collect())
            .collect();
        Self { mesh: self.mesh, comps }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { mesh: self.mesh, comps: self.comps.iter().map(|c| c.iter().map(|v| v * s).collect()).collect() }
    }

    pub fn sup_diff(&self, other: &Self) -> f64 {
        self.comps.iter().zip(&other.comps).map(|(a, b)| sup_diff(a, b)).fold(0.0, f64::max)
    }

    /// Builds a field nodewise from `n x n` matrices, symmetrising exactly.
    pub fn from_matrices(mesh: TorusMesh, mats: &[DMatrix<f64>]) -> Self {
        let n = mesh.dim();
        let mut comps = vec![vec![0.0; mesh.num_nodes()]; n * n];
        for (node, m) in mats.iter().enumerate() {
            for a in 0..n {
                for b in 0..n {
                    comps[a * n + b][node] = 0.5 * (m[(a, b)] + m[(b, a)]);
                }
            }
        }
        Self { mesh, comps }
    }
}

/// SPD metric with cached inverse and volume factor.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField {
    tensor: SymTensorField,
    inverse: Vec<Vec<f64>>,
    sqrt_det: Vec<f64>,
}

impl MetricField {
    pub fn new(tensor: SymTensorField) -> Result<Self> {
        let mesh = tensor.mesh;
        let n = mesh.dim();
        let nodes = mesh.num_nodes();
        let mut inverse = vec![vec![0.0; nodes]; n * n];
        let mut sqrt_det = vec![0.0; nodes];
        for node in 0..nodes {
            let g = tensor.at(node);
            let chol = g
                .clone()
                .cholesky()
                .ok_or_else(|| Error::Geometry(format!("metric is not positive definite at node {node}")))?;
            let det: f64 = chol.l_dirty().diagonal().iter().map(|d| d * d).product();
            sqrt_det[node] = det.sqrt();
            let inv = chol.inverse();
            for a in 0..n {
                for b in 0..n {
                    inverse[a * n + b][node] = 0.5 * (inv[(a, b)] + inv[(b, a)]);
                }
            }
        }
        Ok(Self { tensor, inverse, sqrt_det })
    }

    pub fn flat(mesh: TorusMesh) -> Self {
        Self::new(SymTensorField::identity(mesh)).expect("identity metric is SPD")
    }

    pub fn constant(mesh: TorusMesh, m: &[f64]) -> Result<Self> {
        Self::new(SymTensorField::constant(mesh, m)?)
    }

    pub fn mesh(&self) -> TorusMesh {
        self.tensor.mesh
    }

    pub fn tensor(&self) -> &SymTensorField {
        &self.tensor
    }

    pub fn g(&self, mu: usize, nu: usize) -> &[f64] {
        self.tensor.component(mu, nu)
    }

    pub fn inv(&self, mu: usize, nu: usize) -> &[f64] {
        &self.inverse[mu * self.mesh().dim() + nu]
    }

    pub fn sqrt_det(&self) -> &[f64] {
        &self.sqrt_det
    }

    pub fn inverse_at(&self, node: usize) -> DMatrix<f64> {
        let n = self.mesh().dim();
        DMatrix::from_fn(n, n, |a, b| self.inverse[a * n + b][node])
    }

    /// `sqrt(det g) g^{mu nu}`, the coefficient of the divergence-form Laplacian.
    pub fn densitized_inverse(&self) -> SymTensorField {
        let comps = self
            .inverse
            .iter()
            .map(|c| c.iter().zip(&self.sqrt_det).map(|(a, s)| a * s).collect())
            .collect();
        SymTensorField { mesh: self.mesh(), comps }
    }

    /// Raises both indices: `g^{mu rho} g^{nu sigma} t_{rho sigma}`.
    pub fn raise(&self, t: &SymTensorField) -> SymTensorField {
        let mesh = self.mesh();
        let mats: Vec<DMatrix<f64>> = (0..mesh.num_nodes())
            .map(|i| {
                let gi = self.inverse_at(i);
                &gi * t.at(i) * &gi
            })
            .collect();
        SymTensorField::from_matrices(mesh, &mats)
    }

    /// `g^{mu nu} t_{mu nu}` nodewise.
    pub fn trace(&self, t: &SymTensorField) -> Vec<f64> {
        let mesh = self.mesh();
        let n = mesh.dim();
        (0..mesh.num_nodes())
            .map(|i| {
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        s += self.inverse[a * n + b][i] * t.comps[a * n + b][i];
                    }
                }
                s
            })
            .collect()
    }
}
