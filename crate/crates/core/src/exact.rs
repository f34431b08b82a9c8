//! Sparse matrices over the rationals with exact rank and kernel computations.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graded::Q;

type SparseRow = BTreeMap<usize, Q>;

/// Column-compressed rational matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    columns: Vec<SparseRow>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, columns: vec![BTreeMap::new(); cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Q::one());
        }
        m
    }

    pub fn from_dense(data: &[Vec<Q>]) -> Result<Self> {
        let rows = data.len();
        let cols = data.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols);
        for (i, r) in data.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Dimension("ragged dense matrix".into()));
            }
            for (j, v) in r.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        Ok(m)
    }

    pub fn from_columns(rows: usize, columns: Vec<BTreeMap<usize, Q>>) -> Result<Self> {
        if columns.iter().any(|c| c.keys().any(|&r| r >= rows)) {
            return Err(Error::Dimension("column entry out of range".into()));
        }
        let cols = columns.len();
        let columns = columns
            .into_iter()
            .map(|c| c.into_iter().filter(|(_, v)| !v.is_zero()).collect())
            .collect();
        Ok(Self { rows, cols, columns })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Q {
        self.columns[j].get(&i).cloned().unwrap_or_else(Q::zero)
    }

    pub fn set(&mut self, i: usize, j: usize, v: Q) {
        if v.is_zero() {
            self.columns[j].remove(&i);
        } else {
            self.columns[j].insert(i, v);
        }
    }

    pub fn column(&self, j: usize) -> &BTreeMap<usize, Q> {
        &self.columns[j]
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(BTreeMap::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.columns.iter().all(BTreeMap::is_empty)
    }

    pub fn to_dense(&self) -> Vec<Vec<Q>> {
        let mut d = vec![vec![Q::zero(); self.cols]; self.rows];
        for (j, c) in self.columns.iter().enumerate() {
            for (&i, v) in c {
                d[i][j] = v.clone();
            }
        }
        d
    }

    /// `self * other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let columns = other
            .columns
            .iter()
            .map(|oc| {
                let mut acc: SparseRow = BTreeMap::new();
                for (&k, b) in oc {
                    for (&i, a) in &self.columns[k] {
                        let e = acc.entry(i).or_insert_with(Q::zero);
                        *e += a * b;
                    }
                }
                acc.retain(|_, v| !v.is_zero());
                acc
            })
            .collect();
        Ok(Self { rows: self.rows, cols: other.cols, columns })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension("cannot subtract matrices of different shape".into()));
        }
        let mut out = self.clone();
        for (j, c) in other.columns.iter().enumerate() {
            for (&i, v) in c {
                let cur = out.get(i, j);
                out.set(i, j, cur - v);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = self.clone();
        for col in &mut out.columns {
            for v in col.values_mut() {
                *v *= c;
            }
            col.retain(|_, v| !v.is_zero());
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.sub(&other.scale(&-Q::one()))
    }

    fn row_vectors(&self) -> Vec<SparseRow> {
        let mut rows = vec![BTreeMap::new(); self.rows];
        for (j, c) in self.columns.iter().enumerate() {
            for (&i, v) in c {
                rows[i].insert(j, v.clone());
            }
        }
        rows
    }

    /// Reduced row echelon form as a map pivot column -> normalized row.
    fn rref(&self) -> BTreeMap<usize, SparseRow> {
        let mut pivots: BTreeMap<usize, SparseRow> = BTreeMap::new();
        for mut row in self.row_vectors() {
            loop {
                let Some((&lead, _)) = row.iter().next() else { break };
                match pivots.get(&lead) {
                    Some(p) => {
                        let f = row[&lead].clone();
                        axpy(&mut row, &-f, p);
                    }
                    None => {
                        let inv = Q::one() / row[&lead].clone();
                        for v in row.values_mut() {
                            *v *= &inv;
                        }
                        pivots.insert(lead, row);
                        break;
                    }
                }
            }
        }
        // Back substitution, highest pivot first.
        let keys: Vec<usize> = pivots.keys().rev().copied().collect();
        for &pc in &keys {
            let prow = pivots[&pc].clone();
            for (_, row) in pivots.range_mut(..pc) {
                if let Some(f) = row.get(&pc).cloned() {
                    axpy(row, &-f, &prow);
                }
            }
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut pivots: BTreeMap<usize, SparseRow> = BTreeMap::new();
        for mut row in self.row_vectors() {
            while let Some((&lead, _)) = row.iter().next() {
                match pivots.get(&lead) {
                    Some(p) => {
                        let f = row[&lead].clone() / p[&lead].clone();
                        axpy(&mut row, &-f, p);
                    }
                    None => {
                        pivots.insert(lead, row);
                        break;
                    }
                }
            }
        }
        pivots.len()
    }

    pub fn nullity(&self) -> usize {
        self.cols - self.rank()
    }

    /// Basis of the right kernel `{v : self v = 0}`, one vector per free column.
    pub fn kernel(&self) -> Vec<Vec<Q>> {
        let pivots = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains_key(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Q::zero(); self.cols];
                v[f] = Q::one();
                for (&pc, row) in &pivots {
                    if let Some(x) = row.get(&f) {
                        v[pc] = -x.clone();
                    }
                }
                v
            })
            .collect()
    }

    pub fn apply(&self, v: &[Q]) -> Result<Vec<Q>> {
        if v.len() != self.cols {
            return Err(Error::Dimension("vector length differs from column count".into()));
        }
        let mut out = vec![Q::zero(); self.rows];
        for (j, c) in self.columns.iter().enumerate() {
            if v[j].is_zero() {
                continue;
            }
            for (&i, a) in c {
                out[i] += a * &v[j];
            }
        }
        Ok(out)
    }
}

fn axpy(row: &mut SparseRow, f: &Q, p: &SparseRow) {
    for (&j, v) in p {
        let e = row.entry(j).or_insert_with(Q::zero);
        *e += f * v;
        if e.is_zero() {
            row.remove(&j);
        }
    }
}

/// Matrix entries rendered as strings, used in reports.
#[derive(Clone, Debug, Serialize)]
pub struct MatrixSummary {
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
}

impl From<&RationalMatrix> for MatrixSummary {
    fn from(m: &RationalMatrix) -> Self {
        Self { rows: m.rows, cols: m.cols, nnz: m.nnz() }
    }
}
