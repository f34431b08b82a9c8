//! Second-order stencils on the periodic grid.

use rayon::prelude::*;

use super::field::{DensityField, MeshVectorField, MetricField, ScalarField, SymTensorField};
use super::torus::TorusMesh;
use crate::error::{Error, Result};

pub(crate) fn same_mesh(a: &TorusMesh, b: &TorusMesh) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("fields live on different meshes: {a:?} vs {b:?}")));
    }
    Ok(())
}

/// Centered difference `(v[i+1] - v[i-1]) / 2h` along `axis`.
pub fn central_diff(mesh: &TorusMesh, v: &[f64], axis: usize) -> Vec<f64> {
    let inv = 0.5 / mesh.spacing();
    (0..mesh.num_nodes())
        .into_par_iter()
        .map(|i| (v[mesh.shift(i, axis, 1)] - v[mesh.shift(i, axis, -1)]) * inv)
        .collect()
}

/// Discrete `d_mu (A^{mu nu} d_nu phi)`: compact face-averaged stencil on the diagonal,
/// centered differences off it. Symmetric under the plain grid sum and telescoping.
pub fn flux_divergence(coef: &SymTensorField, phi: &[f64]) -> Vec<f64> {
    let mesh = coef.mesh;
    let n = mesh.dim();
    let h2 = mesh.spacing().powi(2);
    let mut out: Vec<f64> = (0..mesh.num_nodes())
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            for mu in 0..n {
                let a = coef.component(mu, mu);
                let ip = mesh.shift(i, mu, 1);
                let im = mesh.shift(i, mu, -1);
                let up = 0.5 * (a[i] + a[ip]);
                let down = 0.5 * (a[i] + a[im]);
                s += (up * (phi[ip] - phi[i]) - down * (phi[i] - phi[im])) / h2;
            }
            s
        })
        .collect();
    for mu in 0..n {
        for nu in 0..n {
            if mu == nu {
                continue;
            }
            let a = coef.component(mu, nu);
            let dphi = central_diff(&mesh, phi, nu);
            let flux: Vec<f64> = a.iter().zip(&dphi).map(|(x, y)| x * y).collect();
            let div = central_diff(&mesh, &flux, mu);
            out.iter_mut().zip(&div).for_each(|(o, d)| *o += d);
        }
    }
    out
}

/// `Q_g phi = d_mu(sqrt(g) g^{mu nu} d_nu phi)` as a density coefficient.
pub fn bv_differential(g: &MetricField, phi: &ScalarField) -> Result<DensityField> {
    same_mesh(&g.mesh(), &phi.mesh)?;
    Ok(DensityField { mesh: phi.mesh, values: flux_divergence(&g.densitized_inverse(), &phi.values) })
}

/// `Delta_g phi = Q_g phi / sqrt(g)`.
pub fn laplace_beltrami(g: &MetricField, phi: &ScalarField) -> Result<ScalarField> {
    let q = bv_differential(g, phi)?;
    let values = q.values.iter().zip(g.sqrt_det()).map(|(a, s)| a / s).collect();
    Ok(ScalarField { mesh: phi.mesh, values })
}

/// `V^mu d_mu phi`.
pub fn lie_derivative_scalar(v: &MeshVectorField, phi: &ScalarField) -> Result<ScalarField> {
    same_mesh(&v.mesh, &phi.mesh)?;
    let mesh = phi.mesh;
    let mut out = vec![0.0; mesh.num_nodes()];
    for (mu, comp) in v.comps.iter().enumerate() {
        let d = central_diff(&mesh, &phi.values, mu);
        out.iter_mut().zip(comp.iter().zip(&d)).for_each(|(o, (a, b))| *o += a * b);
    }
    Ok(ScalarField { mesh, values: out })
}

/// `(L_V g)_{mu nu} = V^rho d_rho g_{mu nu} + g_{rho nu} d_mu V^rho + g_{mu rho} d_nu V^rho`.
pub fn lie_derivative_metric(v: &MeshVectorField, g: &SymTensorField) -> Result<SymTensorField> {
    same_mesh(&v.mesh, &g.mesh)?;
    let mesh = g.mesh;
    let n = mesh.dim();
    let nodes = mesh.num_nodes();
    // dv[rho][mu] = d_mu V^rho
    let dv: Vec<Vec<Vec<f64>>> =
        v.comps.iter().map(|c| (0..n).map(|mu| central_diff(&mesh, c, mu)).collect()).collect();
    let mut comps = vec![vec![0.0; nodes]; n * n];
    for mu in 0..n {
        for nu in mu..n {
            let gmn = g.component(mu, nu);
            let mut out = vec![0.0; nodes];
            for rho in 0..n {
                let d = central_diff(&mesh, gmn, rho);
                let grn = g.component(rho, nu);
                let gmr = g.component(mu, rho);
                for i in 0..nodes {
                    out[i] += v.comps[rho][i] * d[i] + grn[i] * dv[rho][mu][i] + gmr[i] * dv[rho][nu][i];
                }
            }
            comps[nu * n + mu] = out.clone();
            comps[mu * n + nu] = out;
        }
    }
    Ok(SymTensorField { mesh, comps })
}
