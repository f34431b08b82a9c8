//! Field serialisation.
//!
//! Binary layout: little-endian `u32 n`, `u32 N`, `u32 ncomp`, followed by
//! `ncomp * N^n` `f64` values, component-major (all nodes of component 0 first),
//! nodes in mesh order.

use std::io::{Read, Write};

use super::torus::TorusMesh;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct BinaryBlock {
    pub n: u32,
    pub size: u32,
    pub comps: Vec<Vec<f64>>,
}

impl BinaryBlock {
    pub fn from_mesh(mesh: &TorusMesh, comps: &[&[f64]]) -> Result<Self> {
        if comps.iter().any(|c| c.len() != mesh.num_nodes()) {
            return Err(Error::Shape("component length differs from node count".into()));
        }
        Ok(Self { n: mesh.dim() as u32, size: mesh.size() as u32, comps: comps.iter().map(|c| c.to_vec()).collect() })
    }

    pub fn mesh(&self) -> Result<TorusMesh> {
        TorusMesh::new(self.n as usize, self.size as usize)
    }

    fn values_per_comp(&self) -> Result<usize> {
        (self.size as usize)
            .checked_pow(self.n)
            .ok_or_else(|| Error::Format("header describes an impossibly large block".into()))
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        let per = self.values_per_comp()?;
        if self.comps.iter().any(|c| c.len() != per) {
            return Err(Error::Shape("component length differs from header".into()));
        }
        w.write_all(&self.n.to_le_bytes())?;
        w.write_all(&self.size.to_le_bytes())?;
        w.write_all(&(self.comps.len() as u32).to_le_bytes())?;
        for c in &self.comps {
            for v in c {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        let mut word = [0u8; 4];
        let mut header = [0u32; 3];
        for slot in &mut header {
            r.read_exact(&mut word).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
            *slot = u32::from_le_bytes(word);
        }
        let mut block = Self { n: header[0], size: header[1], comps: Vec::new() };
        let per = block.values_per_comp()?;
        let mut buf = [0u8; 8];
        for _ in 0..header[2] {
            let mut c = Vec::with_capacity(per);
            for _ in 0..per {
                r.read_exact(&mut buf).map_err(|e| Error::Format(format!("truncated data: {e}")))?;
                c.push(f64::from_le_bytes(buf));
            }
            block.comps.push(c);
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes after data", rest.len())));
        }
        Ok(block)
    }
}

/// CSV with a header `node,<names...>` and one row per node.
pub fn write_csv<W: Write>(w: &mut W, names: &[&str], comps: &[&[f64]]) -> Result<()> {
    if names.len() != comps.len() {
        return Err(Error::Shape("one column name per component is required".into()));
    }
    let nodes = comps.first().map_or(0, |c| c.len());
    if comps.iter().any(|c| c.len() != nodes) {
        return Err(Error::Shape("components have different lengths".into()));
    }
    writeln!(w, "node,{}", names.join(","))?;
    for i in 0..nodes {
        let row: Vec<String> = comps.iter().map(|c| format!("{:e}", c[i])).collect();
        writeln!(w, "{i},{}", row.join(","))?;
    }
    Ok(())
}
