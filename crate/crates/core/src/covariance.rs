//! Numerical covariance identities for the metric-coupled scalar field on the torus:
//! commuting squares under pullback, the first-order deformation of the Laplacian,
//! stress-energy tensors and the infinitesimal covariance identity.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mesh::field::{sup_diff, sup_norm};
use crate::mesh::ops::{central_diff, flux_divergence, same_mesh};
use crate::mesh::random::{random_displacement, random_scalar, SmoothTensor, SmoothVector, TrigPoly};
use crate::mesh::{
    bv_differential, laplace_beltrami, lie_derivative_metric, lie_derivative_scalar, pullback_density,
    pullback_metric, pullback_scalar, DensityField, Diffeomorphism, MeshVectorField, MetricField, ScalarField,
    SymTensorField, TorusMesh,
};
use crate::report::{CheckReport, Refinement, Residual, TolerancePolicy};

/// Polynomial potential `V(phi) = sum_n lambda_n phi^n / n!`, `n >= 2`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PotentialSpec {
    coeffs: BTreeMap<u32, f64>,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

impl PotentialSpec {
    pub fn new(coeffs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, l) in coeffs {
            if n < 2 {
                return Err(Error::Config(format!("potential coefficients start at n = 2, got n = {n}")));
            }
            if l != 0.0 {
                *map.entry(n).or_insert(0.0) += l;
            }
        }
        Ok(Self { coeffs: map })
    }

    pub fn free() -> Self {
        Self::default()
    }

    pub fn phi4(lambda: f64) -> Self {
        Self::new([(4, lambda)]).expect("n = 4 is valid")
    }

    pub fn is_free(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coefficients(&self) -> &BTreeMap<u32, f64> {
        &self.coeffs
    }

    pub fn value(&self, phi: f64) -> f64 {
        self.coeffs.iter().map(|(&n, l)| l * phi.powi(n as i32) / factorial(n)).sum()
    }

    /// `V'(phi) = sum_n lambda_n phi^{n-1} / (n-1)!`.
    pub fn derivative(&self, phi: f64) -> f64 {
        self.coeffs.iter().map(|(&n, l)| l * phi.powi(n as i32 - 1) / factorial(n - 1)).sum()
    }
}

/// `int F vol_g` by the grid sum.
pub fn integrate_with_volume(g: &MetricField, f: &[f64]) -> f64 {
    let mesh = g.mesh();
    mesh.integrate(&f.iter().zip(g.sqrt_det()).map(|(a, s)| a * s).collect::<Vec<_>>())
}

/// `S_g(phi) = int (-1/2 phi Delta_g phi + V(phi)) vol_g`.
pub fn action_functional(g: &MetricField, phi: &ScalarField, v: &PotentialSpec) -> Result<f64> {
    let q = bv_differential(g, phi)?;
    let mesh = phi.mesh;
    let dens: Vec<f64> = (0..mesh.num_nodes())
        .map(|i| -0.5 * phi.values[i] * q.values[i] + v.value(phi.values[i]) * g.sqrt_det()[i])
        .collect();
    Ok(mesh.integrate(&dens))
}

/// Euler–Lagrange density `Q_g phi + V'(phi) vol_g`.
pub fn euler_lagrange(g: &MetricField, phi: &ScalarField, v: &PotentialSpec) -> Result<DensityField> {
    let mut q = bv_differential(g, phi)?;
    if !v.is_free() {
        for (i, val) in q.values.iter_mut().enumerate() {
            *val += v.derivative(phi.values[i]) * g.sqrt_det()[i];
        }
    }
    Ok(q)
}

/// `f^*(E_g phi)` against `E_{f^*g}(f^*phi)` for the Euler–Lagrange density `E`.
pub fn interacting_equivariance_residual(
    g: &MetricField,
    phi: &ScalarField,
    f: &Diffeomorphism,
    v: &PotentialSpec,
) -> Result<Residual> {
    let lhs = pullback_density(f, &euler_lagrange(g, phi, v)?)?;
    let rhs = euler_lagrange(&pullback_metric(f, g)?, &pullback_scalar(f, phi)?, v)?;
    Ok(Residual::new(sup_diff(&lhs.values, &rhs.values), sup_norm(&lhs.values)))
}

pub fn scalar_equivariance_residual(g: &MetricField, phi: &ScalarField, f: &Diffeomorphism) -> Result<Residual> {
    interacting_equivariance_residual(g, phi, f, &PotentialSpec::free())
}

/// `dg^{mu nu} = -g^{mu rho} g^{nu sigma} dg_{rho sigma}`, the variation of the inverse metric.
pub fn raised_variation(g: &MetricField, dg: &SymTensorField) -> SymTensorField {
    g.raise(dg).scale(-1.0)
}

/// First-order change of `Delta_g phi` along `g + t dg` (lower-index `dg`):
/// `-1/2 tr(g^-1 dg) Delta_g phi + (1/sqrt g) d_mu(sqrt g (1/2 tr(g^-1 dg) g^{mu nu} + dg^{mu nu}) d_nu phi)`.
pub fn laplacian_deformation(g: &MetricField, dg: &SymTensorField, phi: &ScalarField) -> Result<ScalarField> {
    same_mesh(&g.mesh(), &dg.mesh)?;
    same_mesh(&g.mesh(), &phi.mesh)?;
    let mesh = g.mesh();
    let n = mesh.dim();
    let tr = g.trace(dg);
    let up = raised_variation(g, dg);
    let mut coef = SymTensorField::zero(mesh);
    for mu in 0..n {
        for nu in 0..n {
            let c = &mut coef.comps[mu * n + nu];
            for i in 0..mesh.num_nodes() {
                c[i] = g.sqrt_det()[i] * (0.5 * tr[i] * g.inv(mu, nu)[i] + up.component(mu, nu)[i]);
            }
        }
    }
    let flux = flux_divergence(&coef, &phi.values);
    let lap = laplace_beltrami(g, phi)?;
    let values = (0..mesh.num_nodes())
        .map(|i| -0.5 * tr[i] * lap.values[i] + flux[i] / g.sqrt_det()[i])
        .collect();
    Ok(ScalarField { mesh, values })
}

/// Centered gradient `d_mu phi`.
pub fn gradient(phi: &ScalarField) -> Vec<Vec<f64>> {
    (0..phi.mesh.dim()).map(|mu| central_diff(&phi.mesh, &phi.values, mu)).collect()
}

fn tensor_from_gradient(g: &MetricField, phi: &ScalarField, a: f64, b: f64) -> Result<SymTensorField> {
    same_mesh(&g.mesh(), &phi.mesh)?;
    let mesh = g.mesh();
    let n = mesh.dim();
    let d = gradient(phi);
    let mut norm2 = vec![0.0; mesh.num_nodes()];
    for r in 0..n {
        for s in 0..n {
            for i in 0..mesh.num_nodes() {
                norm2[i] += g.inv(r, s)[i] * d[r][i] * d[s][i];
            }
        }
    }
    let mut t = SymTensorField::zero(mesh);
    for mu in 0..n {
        for nu in 0..n {
            let gm = g.g(mu, nu);
            t.comps[mu * n + nu] = (0..mesh.num_nodes()).map(|i| a * d[mu][i] * d[nu][i] + b * gm[i] * norm2[i]).collect();
        }
    }
    Ok(t)
}

/// `T_{mu nu} = -d_mu phi d_nu phi - 1/2 g_{mu nu} g^{rho sigma} d_rho phi d_sigma phi`.
pub fn stress_energy(g: &MetricField, phi: &ScalarField) -> Result<SymTensorField> {
    tensor_from_gradient(g, phi, -1.0, -0.5)
}

/// `T_{mu nu} = 1/2 d_mu phi d_nu phi - 1/4 g_{mu nu} |d phi|^2`, the tensor with
/// `d/dt S_{g_t}(phi) = int (d/dt g^{mu nu}) T_{mu nu} vol_g` for the free action.
pub fn variational_stress_energy(g: &MetricField, phi: &ScalarField) -> Result<SymTensorField> {
    tensor_from_gradient(g, phi, 0.5, -0.25)
}

/// `int up^{mu nu} t_{mu nu} vol_g`.
pub fn pairing(g: &MetricField, up: &SymTensorField, t: &SymTensorField) -> f64 {
    let mesh = g.mesh();
    let contracted: Vec<f64> = (0..mesh.num_nodes())
        .map(|i| up.comps.iter().zip(&t.comps).map(|(a, b)| a[i] * b[i]).sum())
        .collect();
    integrate_with_volume(g, &contracted)
}

/// Compares `int dg^{mu nu} T_{mu nu} vol_g` with the centered difference of the free
/// action along `g + t dg`. Details also record the pairing with `stress_energy`
/// and its exact relation `P = -2 dS/dt + int tr(g^-1 dg) |d phi|^2 vol_g`.
pub fn variational_identity(g: &MetricField, phi: &ScalarField, dg: &SymTensorField, t: f64) -> Result<Residual> {
    let up = raised_variation(g, dg);
    let lhs = pairing(g, &up, &variational_stress_energy(g, phi)?);
    let free = PotentialSpec::free();
    let plus = MetricField::new(g.tensor().axpy(t, dg))?;
    let minus = MetricField::new(g.tensor().axpy(-t, dg))?;
    let rhs = (action_functional(&plus, phi, &free)? - action_functional(&minus, phi, &free)?) / (2.0 * t);
    let set2 = pairing(g, &up, &stress_energy(g, phi)?);
    let tr = g.trace(dg);
    let d = gradient(phi);
    let mesh = g.mesh();
    let n = mesh.dim();
    let weighted: Vec<f64> = (0..mesh.num_nodes())
        .map(|i| {
            let mut s = 0.0;
            for r in 0..n {
                for q in 0..n {
                    s += g.inv(r, q)[i] * d[r][i] * d[q][i];
                }
            }
            tr[i] * s
        })
        .collect();
    let relation = set2 - (-2.0 * lhs + integrate_with_volume(g, &weighted));
    let scale = lhs.abs().max(rhs.abs()).max(integrate_with_volume(g, &weighted).abs());
    Ok(Residual::new((lhs - rhs).abs(), scale)
        .with("tensor_pairing", lhs)
        .with("action_derivative", rhs)
        .with("stress_energy_pairing", set2)
        .with("stress_energy_relation_gap", relation.abs()))
}

/// The four summands of `d/dt int (f_t^*phi) Delta_{f_t^*g} (f_t^*phi) vol_{f_t^*g}` at `t = 0`.
pub fn infinitesimal_covariance_terms(g: &MetricField, phi: &ScalarField, v: &MeshVectorField) -> Result<[f64; 4]> {
    let lv_phi = lie_derivative_scalar(v, phi)?;
    let lv_g = lie_derivative_metric(v, g.tensor())?;
    let lap = laplace_beltrami(g, phi)?;
    let lap_lv = laplace_beltrami(g, &lv_phi)?;
    let dlap = laplacian_deformation(g, &lv_g, phi)?;
    let tr = g.trace(&lv_g);
    let nodes = phi.mesh.num_nodes();
    let p = &phi.values;
    let t1: Vec<f64> = (0..nodes).map(|i| lv_phi.values[i] * lap.values[i]).collect();
    let t2: Vec<f64> = (0..nodes).map(|i| p[i] * lap_lv.values[i]).collect();
    let t3: Vec<f64> = (0..nodes).map(|i| p[i] * dlap.values[i]).collect();
    let t4: Vec<f64> = (0..nodes).map(|i| p[i] * lap.values[i] * 0.5 * tr[i]).collect();
    Ok([t1, t2, t3, t4].map(|t| integrate_with_volume(g, &t)))
}

pub fn infinitesimal_covariance_residual(g: &MetricField, phi: &ScalarField, v: &MeshVectorField) -> Result<Residual> {
    let t = infinitesimal_covariance_terms(g, phi, v)?;
    let scale = t.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(Residual::new(t.iter().sum::<f64>().abs(), scale)
        .with("term_lv_phi_lap_phi", t[0])
        .with("term_phi_lap_lv_phi", t[1])
        .with("term_phi_dlap_phi", t[2])
        .with("term_phi_lap_phi_dvol", t[3]))
}

/// `(int (L_V g^{mu nu}) T_{mu nu} vol_g, int (L_V phi) Delta_g phi vol_g)` with
/// `L_V g^{mu nu} = -g^{mu rho} g^{nu sigma} (L_V g)_{rho sigma}` and the variational tensor.
pub fn noether_pairings(g: &MetricField, phi: &ScalarField, v: &MeshVectorField) -> Result<(f64, f64)> {
    let lv_g = lie_derivative_metric(v, g.tensor())?;
    let lhs = pairing(g, &raised_variation(g, &lv_g), &variational_stress_energy(g, phi)?);
    let lv_phi = lie_derivative_scalar(v, phi)?;
    let lap = laplace_beltrami(g, phi)?;
    let el: Vec<f64> = lv_phi.values.iter().zip(&lap.values).map(|(a, b)| a * b).collect();
    Ok((lhs, integrate_with_volume(g, &el)))
}

/// Proportionality constant between the two Noether pairings.
pub const NOETHER_CONSTANT: f64 = 1.0;

pub fn noether_residual(g: &MetricField, phi: &ScalarField, v: &MeshVectorField, constant: f64) -> Result<Residual> {
    let (lhs, el) = noether_pairings(g, phi, v)?;
    Ok(Residual::new((lhs - constant * el).abs(), lhs.abs().max(el.abs()))
        .with("stress_pairing", lhs)
        .with("euler_lagrange_pairing", el))
}

/// Least-squares `c` in `lhs = c * el` over several vector fields.
pub fn fit_noether_constant(g: &MetricField, phi: &ScalarField, fields: &[MeshVectorField]) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for v in fields {
        let (l, e) = noether_pairings(g, phi, v)?;
        num += l * e;
        den += e * e;
    }
    if den == 0.0 {
        return Err(Error::Numeric("Euler-Lagrange pairings vanish; constant is undetermined".into()));
    }
    Ok(num / den)
}

/// Seeded continuum data sampled identically on every grid of a refinement study.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub dim: usize,
    pub metric: SmoothTensor,
    pub phi: TrigPoly,
    pub vector: SmoothVector,
    pub displacement: SmoothVector,
    pub dg: SmoothTensor,
    pub potential: PotentialSpec,
}

pub const METRIC_AMPLITUDE: f64 = 0.15;
pub const DISPLACEMENT_AMPLITUDE: f64 = 0.01;
pub const VECTOR_AMPLITUDE: f64 = 0.5;
pub const VARIATION_AMPLITUDE: f64 = 0.2;

/// All data on one grid.
pub struct MeshData {
    pub mesh: TorusMesh,
    pub g: MetricField,
    pub phi: ScalarField,
    pub v: MeshVectorField,
    pub f: Diffeomorphism,
    pub dg: SymTensorField,
}

impl Scenario {
    pub fn random(seed: u64, dim: usize) -> Self {
        let s = seed.wrapping_mul(1000);
        Self {
            dim,
            metric: SmoothTensor::random_metric(s + 1, dim, METRIC_AMPLITUDE),
            phi: random_scalar(s + 2, dim, 1.0),
            vector: SmoothVector::random(s + 3, dim, VECTOR_AMPLITUDE),
            displacement: random_displacement(s + 4, dim, DISPLACEMENT_AMPLITUDE),
            dg: SmoothTensor::random_symmetric(s + 5, dim, VARIATION_AMPLITUDE),
            potential: PotentialSpec::free(),
        }
    }

    pub fn with_potential(mut self, v: PotentialSpec) -> Self {
        self.potential = v;
        self
    }

    pub fn sample(&self, size: usize) -> Result<MeshData> {
        let mesh = TorusMesh::new(self.dim, size)?;
        Ok(MeshData {
            mesh,
            g: self.metric.sample_metric(&mesh)?,
            phi: ScalarField { mesh, values: self.phi.sample(&mesh) },
            v: self.vector.sample(&mesh)?,
            f: self.displacement.as_displacement(&mesh)?,
            dg: self.dg.sample(&mesh)?,
        })
    }
}

pub mod anchors {
    pub const SCALAR_EQUIVARIANCE: &str = "f^*(Q_g phi) = Q_{f^*g}(f^*phi), Q_g phi = d_mu(sqrt(g) g^{mu nu} d_nu phi) d^n x";
    pub const INTERACTING_EQUIVARIANCE: &str =
        "f^*(Q_g phi + sum_n lambda_n/(n-1)! phi^{n-1} vol_g) = Q_{f^*g}(f^*phi) + sum_n lambda_n/(n-1)! (f^*phi)^{n-1} vol_{f^*g}";
    pub const LAPLACIAN_DEFORMATION: &str =
        "d/dt Delta_{g+t dg} phi = -1/2 tr(g^-1 dg) Delta_g phi + (1/sqrt g) d_mu(sqrt g (1/2 tr(g^-1 dg) g^{mu nu} + dg^{mu nu}) d_nu phi)";
    pub const VARIATIONAL_IDENTITY: &str = "d/dt S_{g_t}(phi) = int dg^{mu nu} T_{mu nu} vol_g";
    pub const INFINITESIMAL_COVARIANCE: &str =
        "int (L_V phi) Delta_g phi vol + int phi Delta_g(L_V phi) vol + int phi (d/dt Delta_{f_t^*g}) phi vol + int phi Delta_g phi (d/dt vol_{f_t^*g}) = 0";
    pub const NOETHER: &str = "int (L_V g^{mu nu}) T_{mu nu} vol_g = c int (L_V phi) Delta_g phi vol_g, vanishing on shell";
}

fn grid_study(
    name: &str,
    anchor: &str,
    grids: &[usize],
    policy: &TolerancePolicy,
    mut eval: impl FnMut(usize) -> Result<Residual>,
) -> Result<CheckReport> {
    let residuals = grids.iter().map(|&n| eval(n)).collect::<Result<Vec<_>>>()?;
    let steps = grids.iter().map(|&n| 1.0 / n as f64).collect();
    Ok(policy.report(name, anchor, Refinement::Grid, grids.to_vec(), steps, residuals))
}

pub fn check_scalar_equivariance(s: &Scenario, grids: &[usize], policy: &TolerancePolicy) -> Result<CheckReport> {
    grid_study("scalar_equivariance", anchors::SCALAR_EQUIVARIANCE, grids, policy, |n| {
        let d = s.sample(n)?;
        scalar_equivariance_residual(&d.g, &d.phi, &d.f)
    })
}

pub fn check_interacting_equivariance(s: &Scenario, grids: &[usize], policy: &TolerancePolicy) -> Result<CheckReport> {
    grid_study("interacting_equivariance", anchors::INTERACTING_EQUIVARIANCE, grids, policy, |n| {
        let d = s.sample(n)?;
        interacting_equivariance_residual(&d.g, &d.phi, &d.f, &s.potential)
    })
}

/// Deformation formula against `(Delta_{g+t dg} - Delta_{g-t dg}) phi / 2t` for each `t`.
pub fn check_laplacian_deformation(
    s: &Scenario,
    size: usize,
    steps: &[f64],
    policy: &TolerancePolicy,
) -> Result<CheckReport> {
    let d = s.sample(size)?;
    let formula = laplacian_deformation(&d.g, &d.dg, &d.phi)?;
    let scale = formula.sup_norm();
    let residuals = steps
        .iter()
        .map(|&t| {
            let plus = laplace_beltrami(&MetricField::new(d.g.tensor().axpy(t, &d.dg))?, &d.phi)?;
            let minus = laplace_beltrami(&MetricField::new(d.g.tensor().axpy(-t, &d.dg))?, &d.phi)?;
            let fd: Vec<f64> = plus.values.iter().zip(&minus.values).map(|(a, b)| (a - b) / (2.0 * t)).collect();
            Ok(Residual::new(sup_diff(&fd, &formula.values), scale))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(policy.report(
        "laplacian_deformation",
        anchors::LAPLACIAN_DEFORMATION,
        Refinement::Step,
        vec![size],
        steps.to_vec(),
        residuals,
    ))
}

/// Joint refinement with the action step tied to the grid, `t = h`.
pub fn check_variational_identity(s: &Scenario, grids: &[usize], policy: &TolerancePolicy) -> Result<CheckReport> {
    grid_study("variational_identity", anchors::VARIATIONAL_IDENTITY, grids, policy, |n| {
        let d = s.sample(n)?;
        variational_identity(&d.g, &d.phi, &d.dg, 1.0 / n as f64)
    })
}

pub fn check_infinitesimal_covariance(s: &Scenario, grids: &[usize], policy: &TolerancePolicy) -> Result<CheckReport> {
    grid_study("infinitesimal_covariance", anchors::INFINITESIMAL_COVARIANCE, grids, policy, |n| {
        let d = s.sample(n)?;
        infinitesimal_covariance_residual(&d.g, &d.phi, &d.v)
    })
}

pub fn check_noether_identity(s: &Scenario, grids: &[usize], policy: &TolerancePolicy) -> Result<CheckReport> {
    let mut r = grid_study("noether_identity", anchors::NOETHER, grids, policy, |n| {
        let d = s.sample(n)?;
        noether_residual(&d.g, &d.phi, &d.v, NOETHER_CONSTANT)
    })?;
    r.details.insert("constant".into(), crate::report::json_number(NOETHER_CONSTANT));
    Ok(r)
}
