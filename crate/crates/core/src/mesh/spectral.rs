//! FFT-based tools on the periodic grid: spectral derivatives and interpolation at
//! arbitrary points (trigonometric or periodic cubic B-spline).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::torus::TorusMesh;

/// In-place multidimensional FFT (unnormalised in both directions).
pub fn fft_nd(mesh: &TorusMesh, data: &mut [Complex64], inverse: bool) {
    let n = mesh.size();
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..mesh.dim() {
        let stride = mesh.stride(axis);
        for start in 0..mesh.num_nodes() {
            if (start / stride) % n != 0 {
                continue;
            }
            for (j, slot) in line.iter_mut().enumerate() {
                *slot = data[start + j * stride];
            }
            fft.process(&mut line);
            for (j, v) in line.iter().enumerate() {
                data[start + j * stride] = *v;
            }
        }
    }
}

/// Signed frequency of FFT bin `j`; the Nyquist bin reports `n/2`.
pub fn frequency(j: usize, n: usize) -> i64 {
    if 2 * j <= n {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

fn is_nyquist(j: usize, n: usize) -> bool {
    n % 2 == 0 && 2 * j == n
}

fn forward(mesh: &TorusMesh, values: &[f64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(mesh, &mut data, false);
    data
}

fn backward_real(mesh: &TorusMesh, mut data: Vec<Complex64>) -> Vec<f64> {
    fft_nd(mesh, &mut data, true);
    let scale = 1.0 / mesh.num_nodes() as f64;
    data.iter().map(|c| c.re * scale).collect()
}

/// Spectral derivative along `axis` (Nyquist mode dropped).
pub fn spectral_derivative(mesh: &TorusMesh, values: &[f64], axis: usize) -> Vec<f64> {
    let n = mesh.size();
    let stride = mesh.stride(axis);
    let mut data = forward(mesh, values);
    for (idx, c) in data.iter_mut().enumerate() {
        let j = (idx / stride) % n;
        if is_nyquist(j, n) {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= Complex64::new(0.0, 2.0 * PI * frequency(j, n) as f64);
        }
    }
    backward_real(mesh, data)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationMethod {
    /// Trigonometric interpolation; the Nyquist mode is taken as a cosine.
    #[default]
    Spectral,
    /// Periodic cubic B-spline through the samples.
    CubicSpline,
}

/// Interpolates several grid functions at common off-grid points.
pub struct Interpolator {
    mesh: TorusMesh,
    method: InterpolationMethod,
    coeffs: Vec<Vec<Complex64>>,
    spline: Vec<Vec<f64>>,
}

impl Interpolator {
    pub fn new(mesh: TorusMesh, fields: &[&[f64]], method: InterpolationMethod) -> Self {
        let n = mesh.size();
        let scale = 1.0 / mesh.num_nodes() as f64;
        let mut coeffs = Vec::new();
        let mut spline = Vec::new();
        for f in fields {
            let mut c = forward(&mesh, f);
            match method {
                InterpolationMethod::Spectral => {
                    c.iter_mut().for_each(|v| *v *= scale);
                    coeffs.push(c);
                }
                InterpolationMethod::CubicSpline => {
                    for (idx, v) in c.iter_mut().enumerate() {
                        let m = mesh.multi_index(idx);
                        let w: f64 = (0..mesh.dim())
                            .map(|a| (4.0 + 2.0 * (2.0 * PI * m[a] as f64 / n as f64).cos()) / 6.0)
                            .product();
                        *v /= w;
                    }
                    spline.push(backward_real(&mesh, c));
                }
            }
        }
        Self { mesh, method, coeffs, spline }
    }

    pub fn num_fields(&self) -> usize {
        self.coeffs.len().max(self.spline.len())
    }

    /// Values of every field at every point: `out[field][point]`.
    pub fn eval(&self, points: &[[f64; 3]]) -> Vec<Vec<f64>> {
        let per_point: Vec<Vec<f64>> = points
            .par_iter()
            .map(|p| match self.method {
                InterpolationMethod::Spectral => self.eval_spectral(p),
                InterpolationMethod::CubicSpline => self.eval_spline(p),
            })
            .collect();
        (0..self.num_fields()).map(|f| per_point.iter().map(|v| v[f]).collect()).collect()
    }

    fn eval_spectral(&self, p: &[f64; 3]) -> Vec<f64> {
        let n = self.mesh.size();
        let dim = self.mesh.dim();
        let factors: Vec<Vec<Complex64>> = (0..dim)
            .map(|a| {
                (0..n)
                    .map(|j| {
                        let k = frequency(j, n) as f64;
                        let arg = 2.0 * PI * k * p[a];
                        if is_nyquist(j, n) {
                            Complex64::new(arg.cos(), 0.0)
                        } else {
                            Complex64::new(arg.cos(), arg.sin())
                        }
                    })
                    .collect()
            })
            .collect();
        self.coeffs
            .iter()
            .map(|c| {
                let mut total = Complex64::new(0.0, 0.0);
                let rows = self.mesh.num_nodes() / n;
                for r in 0..rows {
                    let base = r * n;
                    let mut inner = Complex64::new(0.0, 0.0);
                    for (j, f0) in factors[0].iter().enumerate() {
                        inner += c[base + j] * f0;
                    }
                    let mut w = Complex64::new(1.0, 0.0);
                    let mut rr = r;
                    for f in factors.iter().skip(1) {
                        w *= f[rr % n];
                        rr /= n;
                    }
                    total += inner * w;
                }
                total.re
            })
            .collect()
    }

    fn eval_spline(&self, p: &[f64; 3]) -> Vec<f64> {
        let n = self.mesh.size();
        let dim = self.mesh.dim();
        let mut taps = [[(0usize, 0.0f64); 4]; 3];
        for a in 0..dim {
            let t = p[a].rem_euclid(1.0) * n as f64;
            let i = t.floor();
            let f = t - i;
            let w = [
                (1.0 - f).powi(3) / 6.0,
                (3.0 * f.powi(3) - 6.0 * f * f + 4.0) / 6.0,
                (-3.0 * f.powi(3) + 3.0 * f * f + 3.0 * f + 1.0) / 6.0,
                f.powi(3) / 6.0,
            ];
            for (s, tap) in taps[a].iter_mut().enumerate() {
                let j = (i as i64 - 1 + s as i64).rem_euclid(n as i64) as usize;
                *tap = (j, w[s]);
            }
        }
        let count = 4usize.pow(dim as u32);
        self.spline
            .iter()
            .map(|c| {
                let mut total = 0.0;
                for combo in 0..count {
                    let mut idx = 0;
                    let mut w = 1.0;
                    let mut rest = combo;
                    for a in 0..dim {
                        let (j, wa) = taps[a][rest % 4];
                        rest /= 4;
                        idx += j * self.mesh.stride(a);
                        w *= wa;
                    }
                    total += w * c[idx];
                }
                total
            })
            .collect()
    }
}
