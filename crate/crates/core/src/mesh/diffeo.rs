//! Diffeomorphisms of the torus of the form `x -> x + u(x)` with periodic `u`,
//! their pullbacks, inverses and vector-field flows.

use nalgebra::DMatrix;

use super::field::{DensityField, MeshVectorField, MetricField, ScalarField, SymTensorField};
use super::ops::same_mesh;
use super::spectral::{frequency, fft_nd, spectral_derivative, InterpolationMethod, Interpolator};
use super::torus::TorusMesh;
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Largest `|t| max|V|` accepted by [`flow`].
const INVERSE_MAX_ITERATIONS: usize = 200;

pub const FLOW_AMPLITUDE_BOUND: f64 = 0.25;

#[derive(Clone, Debug)]
pub struct Diffeomorphism {
    mesh: TorusMesh,
    disp: Vec<Vec<f64>>,
    /// `jac[a * n + b] = d f^a / d x^b`
    jac: Vec<Vec<f64>>,
    det: Vec<f64>,
    method: InterpolationMethod,
    identity: bool,
}

impl Diffeomorphism {
    pub fn identity(mesh: TorusMesh) -> Self {
        Self::from_displacement(mesh, vec![vec![0.0; mesh.num_nodes()]; mesh.dim()]).expect("identity is valid")
    }

    /// Rigid translation `x -> x + s`.
    pub fn translation(mesh: TorusMesh, s: &[f64]) -> Result<Self> {
        if s.len() != mesh.dim() {
            return Err(Error::Shape("translation vector has the wrong length".into()));
        }
        Self::from_displacement(mesh, s.iter().map(|&c| vec![c; mesh.num_nodes()]).collect())
    }

    /// Validates `det J > 0` and a sampled Lipschitz bound `|grad u| < 1`, which makes
    /// `x -> x + u(x)` injective on the torus.
    pub fn from_displacement(mesh: TorusMesh, disp: Vec<Vec<f64>>) -> Result<Self> {
        Self::build(mesh, disp, true)
    }

    /// Maps known to be bijective (flows, compositions, inverses) only need `det J > 0`.
    fn build(mesh: TorusMesh, disp: Vec<Vec<f64>>, check_lipschitz: bool) -> Result<Self> {
        let n = mesh.dim();
        let nodes = mesh.num_nodes();
        if disp.len() != n || disp.iter().any(|c| c.len() != nodes) {
            return Err(Error::Shape("displacement does not match the mesh".into()));
        }
        if disp.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("displacement has non-finite values".into()));
        }
        let identity = disp.iter().flatten().all(|&v| v == 0.0);
        let mut jac = vec![vec![0.0; nodes]; n * n];
        for a in 0..n {
            let constant = disp[a].iter().all(|&v| v == disp[a][0]);
            for b in 0..n {
                let d = if constant { vec![0.0; nodes] } else { spectral_derivative(&mesh, &disp[a], b) };
                jac[a * n + b] = d.iter().map(|v| v + if a == b { 1.0 } else { 0.0 }).collect();
            }
        }
        let mut det = vec![0.0; nodes];
        for (i, d) in det.iter_mut().enumerate() {
            let j = DMatrix::from_fn(n, n, |a, b| jac[a * n + b][i]);
            *d = j.determinant();
            if *d <= 0.0 {
                return Err(Error::Geometry(format!("Jacobian determinant {d} is not positive at node {i}")));
            }
            let grad_u = j - DMatrix::identity(n, n);
            let lip = grad_u.norm();
            if check_lipschitz && lip >= 1.0 {
                return Err(Error::Geometry(format!("displacement gradient {lip} too large for a diffeomorphism at node {i}")));
            }
        }
        Ok(Self { mesh, disp, jac, det, method: InterpolationMethod::Spectral, identity })
    }

    pub fn with_method(mut self, method: InterpolationMethod) -> Self {
        self.method = method;
        self
    }

    pub fn mesh(&self) -> TorusMesh {
        self.mesh
    }

    pub fn method(&self) -> InterpolationMethod {
        self.method
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn displacement(&self) -> &[Vec<f64>] {
        &self.disp
    }

    pub fn det(&self) -> &[f64] {
        &self.det
    }

    pub fn jacobian_at(&self, node: usize) -> DMatrix<f64> {
        let n = self.mesh.dim();
        DMatrix::from_fn(n, n, |a, b| self.jac[a * n + b][node])
    }

    pub fn image_points(&self) -> Vec<[f64; 3]> {
        (0..self.mesh.num_nodes())
            .map(|i| {
                let mut p = self.mesh.coords(i);
                for (a, c) in self.disp.iter().enumerate() {
                    p[a] += c[i];
                }
                p
            })
            .collect()
    }

    /// Samples the given grid functions at `f(x_i)`.
    pub fn sample_at_images(&self, fields: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        if self.identity {
            return Ok(fields.iter().map(|f| f.to_vec()).collect());
        }
        for f in fields {
            check_band(&self.mesh, f)?;
        }
        let interp = Interpolator::new(self.mesh, fields, self.method);
        Ok(interp.eval(&self.image_points()))
    }

    /// Nodewise inverse by fixed-point iteration `y = x - u(y)`.
    pub fn inverse(&self) -> Result<Self> {
        if self.identity {
            return Ok(self.clone());
        }
        let mesh = self.mesh;
        let n = mesh.dim();
        let refs: Vec<&[f64]> = self.disp.iter().map(Vec::as_slice).collect();
        let interp = Interpolator::new(mesh, &refs, self.method);
        let base: Vec<[f64; 3]> = (0..mesh.num_nodes()).map(|i| mesh.coords(i)).collect();
        let mut w: Vec<Vec<f64>> = self.disp.iter().map(|c| c.iter().map(|v| -v).collect()).collect();
        let mut converged = false;
        for _ in 0..INVERSE_MAX_ITERATIONS {
            let pts: Vec<[f64; 3]> = base
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    let mut p = *x;
                    for a in 0..n {
                        p[a] += w[a][i];
                    }
                    p
                })
                .collect();
            let u = interp.eval(&pts);
            let next: Vec<Vec<f64>> = u.iter().map(|c| c.iter().map(|v| -v).collect()).collect();
            let change = next.iter().zip(&w).flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs())).fold(0.0, f64::max);
            w = next;
            if change < 1e-14 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NotInvertible(format!("fixed-point inverse did not converge in {INVERSE_MAX_ITERATIONS} iterations")));
        }
        Ok(Self::build(mesh, w, false)?.with_method(self.method))
    }

    /// `self ∘ other`, i.e. `x -> self(other(x))`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.mesh != other.mesh {
            return Err(Error::Shape("cannot compose maps on different meshes".into()));
        }
        let refs: Vec<&[f64]> = self.disp.iter().map(Vec::as_slice).collect();
        let outer = if self.identity {
            self.disp.clone()
        } else {
            Interpolator::new(self.mesh, &refs, self.method).eval(&other.image_points())
        };
        let disp = other.disp.iter().zip(&outer).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect();
        Ok(Self::build(self.mesh, disp, false)?.with_method(self.method))
    }

    /// Largest nodal difference of the displacements.
    pub fn distance(&self, other: &Self) -> f64 {
        self.disp
            .iter()
            .zip(&other.disp)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Rejects data whose spectrum is not resolved by the grid: non-finite values, or
/// more than a `1e-3` fraction of the amplitude in modes with `|k| > 0.4 N`.
pub fn check_band(mesh: &TorusMesh, v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("field has non-finite values".into()));
    }
    let mut data: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_nd(mesh, &mut data, false);
    let n = mesh.size();
    let cutoff = 0.4 * n as f64;
    let (mut total, mut high) = (0.0, 0.0);
    for (idx, c) in data.iter().enumerate() {
        let m = mesh.multi_index(idx);
        let e = c.norm_sqr();
        total += e;
        if (0..mesh.dim()).any(|a| (frequency(m[a], n) as f64).abs() > cutoff) {
            high += e;
        }
    }
    if total > 0.0 && (high / total).sqrt() > 1e-3 {
        return Err(Error::Numeric(format!(
            "field is under-resolved: {:.2e} of its amplitude sits near the Nyquist frequency",
            (high / total).sqrt()
        )));
    }
    Ok(())
}

pub fn pullback_scalar(f: &Diffeomorphism, phi: &ScalarField) -> Result<ScalarField> {
    same_mesh(&f.mesh, &phi.mesh)?;
    let mut v = f.sample_at_images(&[&phi.values])?;
    Ok(ScalarField { mesh: phi.mesh, values: v.remove(0) })
}

/// `(mu ∘ f) det J`.
pub fn pullback_density(f: &Diffeomorphism, mu: &DensityField) -> Result<DensityField> {
    same_mesh(&f.mesh, &mu.mesh)?;
    let v = f.sample_at_images(&[&mu.values])?.remove(0);
    Ok(DensityField { mesh: mu.mesh, values: v.iter().zip(&f.det).map(|(a, d)| a * d).collect() })
}

/// `J^T (t ∘ f) J` for a lower-index symmetric tensor.
pub fn pullback_tensor(f: &Diffeomorphism, t: &SymTensorField) -> Result<SymTensorField> {
    same_mesh(&f.mesh, &t.mesh)?;
    let mesh = t.mesh;
    let n = mesh.dim();
    let refs: Vec<&[f64]> = t.comps.iter().map(Vec::as_slice).collect();
    let s = f.sample_at_images(&refs)?;
    let mats: Vec<DMatrix<f64>> = (0..mesh.num_nodes())
        .map(|i| {
            let j = f.jacobian_at(i);
            let g = DMatrix::from_fn(n, n, |a, b| s[a * n + b][i]);
            j.transpose() * g * j
        })
        .collect();
    Ok(SymTensorField::from_matrices(mesh, &mats))
}

pub fn pullback_metric(f: &Diffeomorphism, g: &MetricField) -> Result<MetricField> {
    if f.identity {
        return Ok(g.clone());
    }
    MetricField::new(pullback_tensor(f, g.tensor())?)
}

/// `J^{-1} (V ∘ f)`.
pub fn pullback_vector(f: &Diffeomorphism, v: &MeshVectorField) -> Result<MeshVectorField> {
    same_mesh(&f.mesh, &v.mesh)?;
    let mesh = v.mesh;
    let n = mesh.dim();
    let refs: Vec<&[f64]> = v.comps.iter().map(Vec::as_slice).collect();
    let s = f.sample_at_images(&refs)?;
    let mut comps = vec![vec![0.0; mesh.num_nodes()]; n];
    for i in 0..mesh.num_nodes() {
        let j = f.jacobian_at(i);
        let rhs = nalgebra::DVector::from_fn(n, |a, _| s[a][i]);
        let x = j.lu().solve(&rhs).ok_or_else(|| Error::Numeric(format!("singular Jacobian at node {i}")))?;
        for a in 0..n {
            comps[a][i] = x[a];
        }
    }
    Ok(MeshVectorField { mesh, comps })
}

/// Time-`t` flow of `V` by RK4 on node trajectories with spectrally interpolated velocity.
pub fn flow(v: &MeshVectorField, t: f64) -> Result<Diffeomorphism> {
    let mesh = v.mesh;
    let n = mesh.dim();
    let vmax = v.max_norm();
    let amp = t.abs() * vmax;
    if !amp.is_finite() || amp > FLOW_AMPLITUDE_BOUND {
        return Err(Error::Flow(format!("|t| max|V| = {amp:.3} exceeds the bound {FLOW_AMPLITUDE_BOUND}")));
    }
    if amp == 0.0 {
        return Ok(Diffeomorphism::identity(mesh));
    }
    let steps = ((amp * mesh.size() as f64).ceil() as usize).max(8);
    let dt = t / steps as f64;
    let refs: Vec<&[f64]> = v.comps.iter().map(Vec::as_slice).collect();
    let interp = Interpolator::new(mesh, &refs, InterpolationMethod::Spectral);
    let base: Vec<[f64; 3]> = (0..mesh.num_nodes()).map(|i| mesh.coords(i)).collect();
    let nodes = base.len();
    let shifted = |disp: &[Vec<f64>], k: &[Vec<f64>], s: f64| -> Vec<[f64; 3]> {
        (0..nodes)
            .map(|i| {
                let mut p = base[i];
                for a in 0..n {
                    p[a] += disp[a][i] + s * k[a][i];
                }
                p
            })
            .collect()
    };
    let zero = vec![vec![0.0; nodes]; n];
    let mut disp = zero.clone();
    for _ in 0..steps {
        let k1 = interp.eval(&shifted(&disp, &zero, 0.0));
        let k2 = interp.eval(&shifted(&disp, &k1, 0.5 * dt));
        let k3 = interp.eval(&shifted(&disp, &k2, 0.5 * dt));
        let k4 = interp.eval(&shifted(&disp, &k3, dt));
        for a in 0..n {
            for i in 0..nodes {
                disp[a][i] += dt / 6.0 * (k1[a][i] + 2.0 * k2[a][i] + 2.0 * k3[a][i] + k4[a][i]);
            }
        }
    }
    Diffeomorphism::build(mesh, disp, false)
}
