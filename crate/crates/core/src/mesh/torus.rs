use serde::Serialize;

use crate::error::{Error, Result};

/// Uniform periodic grid on the unit n-torus. Node `i` has multi-index
/// `(i_0, .., i_{n-1})` with `i = i_0 + N i_1 + N^2 i_2` (axis 0 fastest).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct TorusMesh {
    n: usize,
    size: usize,
}

pub const MIN_POINTS: usize = 8;

impl TorusMesh {
    pub fn new(n: usize, size: usize) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::Geometry(format!("torus dimension must be 1, 2 or 3, got {n}")));
        }
        if size < MIN_POINTS {
            return Err(Error::Geometry(format!("need at least {MIN_POINTS} points per axis, got {size}")));
        }
        Ok(Self { n, size })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.size as f64
    }

    pub fn num_nodes(&self) -> usize {
        self.size.pow(self.n as u32)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.size.pow(axis as u32)
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        let mut r = idx;
        for slot in out.iter_mut().take(self.n) {
            *slot = r % self.size;
            r /= self.size;
        }
        out
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().take(self.n).rev().fold(0, |acc, &i| acc * self.size + i % self.size)
    }

    /// Neighbour of `idx` shifted by `k` nodes along `axis`, periodically.
    pub fn shift(&self, idx: usize, axis: usize, k: isize) -> usize {
        let s = self.stride(axis);
        let i = (idx / s) % self.size;
        let j = (i as isize + k).rem_euclid(self.size as isize) as usize;
        idx + j * s - i * s
    }

    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        let h = self.spacing();
        [m[0] as f64 * h, m[1] as f64 * h, m[2] as f64 * h]
    }

    /// Plain grid sum times the cell volume `h^n`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.spacing().powi(self.n as i32)
    }
}
