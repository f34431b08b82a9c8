//! Seeded smooth test data: low-mode trigonometric polynomials evaluated on any grid,
//! so the same continuum object can be sampled at several resolutions.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::diffeo::Diffeomorphism;
use super::field::{MeshVectorField, MetricField, ScalarField, SymTensorField};
use super::torus::TorusMesh;
use crate::error::Result;

/// `sum_k a_k cos(2 pi k.x) + b_k sin(2 pi k.x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly {
    pub terms: Vec<([i32; 3], f64, f64)>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: vec![([0, 0, 0], c, 0.0)] }
    }

    /// Random coefficients on all modes with `|k_a| <= max_mode`, normalised so that
    /// the sup norm is at most `amplitude`.
    pub fn random(rng: &mut ChaCha8Rng, dim: usize, max_mode: i32, amplitude: f64, with_constant: bool) -> Self {
        let mut terms = Vec::new();
        let range = |a: usize| if a < dim { -max_mode..=max_mode } else { 0..=0 };
        for k0 in range(0) {
            for k1 in range(1) {
                for k2 in range(2) {
                    let k = [k0, k1, k2];
                    // keep one representative of +-k
                    let first = k.iter().find(|&&c| c != 0).copied();
                    match first {
                        None if !with_constant => continue,
                        Some(c) if c < 0 => continue,
                        _ => {}
                    }
                    let a: f64 = rng.random_range(-1.0..1.0);
                    let b: f64 = if first.is_none() { 0.0 } else { rng.random_range(-1.0..1.0) };
                    terms.push((k, a, b));
                }
            }
        }
        let bound: f64 = terms.iter().map(|(_, a, b)| a.abs() + b.abs()).sum();
        let s = if bound > 0.0 { amplitude / bound } else { 0.0 };
        Self { terms: terms.into_iter().map(|(k, a, b)| (k, a * s, b * s)).collect() }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(k, a, b)| {
                let arg: f64 = 2.0 * PI * k.iter().zip(x).map(|(&ki, xi)| ki as f64 * xi).sum::<f64>();
                a * arg.cos() + b * arg.sin()
            })
            .sum()
    }

    /// Partial derivative along `axis`.
    pub fn derivative(&self, axis: usize) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(k, a, b)| {
                    let w = 2.0 * PI * k[axis] as f64;
                    (*k, w * b, -w * a)
                })
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { terms: self.terms.iter().map(|(k, a, b)| (*k, a * s, b * s)).collect() }
    }

    pub fn sample(&self, mesh: &TorusMesh) -> Vec<f64> {
        (0..mesh.num_nodes()).map(|i| self.eval(&mesh.coords(i)[..mesh.dim()])).collect()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric tensor with trig-polynomial entries, stored as `entries[mu * n + nu]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothTensor {
    pub dim: usize,
    pub entries: Vec<TrigPoly>,
}

impl SmoothTensor {
    /// `I + a P` with `|P_{mu nu}| <= 1`, which stays SPD for `a n < 1`.
    pub fn random_metric(seed: u64, dim: usize, a: f64) -> Self {
        let mut r = rng(seed);
        let mut entries = vec![TrigPoly::zero(); dim * dim];
        for mu in 0..dim {
            for nu in mu..dim {
                let mut p = TrigPoly::random(&mut r, dim, 1, a, true);
                if mu == nu {
                    p.terms.push(([0, 0, 0], 1.0, 0.0));
                }
                entries[mu * dim + nu] = p.clone();
                entries[nu * dim + mu] = p;
            }
        }
        Self { dim, entries }
    }

    /// Random symmetric perturbation with zero mean part allowed.
    pub fn random_symmetric(seed: u64, dim: usize, amplitude: f64) -> Self {
        let mut r = rng(seed);
        let mut entries = vec![TrigPoly::zero(); dim * dim];
        for mu in 0..dim {
            for nu in mu..dim {
                let p = TrigPoly::random(&mut r, dim, 1, amplitude, true);
                entries[mu * dim + nu] = p.clone();
                entries[nu * dim + mu] = p;
            }
        }
        Self { dim, entries }
    }

    pub fn sample(&self, mesh: &TorusMesh) -> Result<SymTensorField> {
        SymTensorField::new(*mesh, self.entries.iter().map(|p| p.sample(mesh)).collect())
    }

    pub fn sample_metric(&self, mesh: &TorusMesh) -> Result<MetricField> {
        MetricField::new(self.sample(mesh)?)
    }
}

/// Smooth vector field with trig-polynomial components.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothVector {
    pub comps: Vec<TrigPoly>,
}

impl SmoothVector {
    pub fn random(seed: u64, dim: usize, amplitude: f64) -> Self {
        let mut r = rng(seed);
        Self { comps: (0..dim).map(|_| TrigPoly::random(&mut r, dim, 1, amplitude, true)).collect() }
    }

    pub fn sample(&self, mesh: &TorusMesh) -> Result<MeshVectorField> {
        MeshVectorField::new(*mesh, self.comps.iter().map(|p| p.sample(mesh)).collect())
    }

    /// Diffeomorphism `x -> x + u(x)` with this field as displacement.
    pub fn as_displacement(&self, mesh: &TorusMesh) -> Result<Diffeomorphism> {
        Diffeomorphism::from_displacement(*mesh, self.comps.iter().map(|p| p.sample(mesh)).collect())
    }
}

pub fn random_scalar(seed: u64, dim: usize, amplitude: f64) -> TrigPoly {
    let mut r = rng(seed);
    TrigPoly::random(&mut r, dim, 1, amplitude, true)
}

pub fn sample_scalar(p: &TrigPoly, mesh: &TorusMesh) -> ScalarField {
    ScalarField { mesh: *mesh, values: p.sample(mesh) }
}

/// Seeded smooth displacement with sup norm `amplitude` and zero mean.
pub fn random_displacement(seed: u64, dim: usize, amplitude: f64) -> SmoothVector {
    let mut r = rng(seed);
    SmoothVector { comps: (0..dim).map(|_| TrigPoly::random(&mut r, dim, 1, amplitude, false)).collect() }
}
