//! Per-vertex data attached to a mesh: maps into the target disk and
//! sections of the pulled-back tangent bundle.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::hyperbolic::{exp_map, log_map, DiskPoint, Mobius, Space, TangentVector};
use crate::mesh::Mesh;

/// A map u: X → Y sampled at mesh vertices; `space` is the target disk.
#[derive(Debug, Clone)]
pub struct MapField {
    pub space: Space,
    pub points: Vec<DiskPoint>,
}

impl MapField {
    pub fn new(space: Space, points: Vec<DiskPoint>) -> Self {
        MapField { space, points }
    }

    /// The identity embedding: target point = domain vertex coordinates.
    pub fn identity(mesh: &Mesh, space: Space) -> Self {
        MapField { space, points: mesh.vertices.clone() }
    }

    /// Möbius map of the mesh vertices.
    pub fn mobius(mesh: &Mesh, space: Space, m: &Mobius) -> Self {
        MapField {
            space,
            points: mesh.vertices.iter().map(|&v| m.apply(v)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// sup_x d(u(x), v(x)), both maps on the same mesh.
    pub fn sup_distance(&self, other: &MapField) -> f64 {
        self.points
            .iter()
            .zip(&other.points)
            .map(|(&a, &b)| self.space.distance(a, b))
            .fold(0.0, f64::max)
    }

    /// Displace by a section: x ↦ exp_{u(x)} v(x).
    pub fn displace(&self, section: &SectionField) -> MapField {
        let points = self
            .points
            .iter()
            .zip(&section.vectors)
            .map(|(&p, v)| exp_map(self.space, p, v))
            .collect();
        MapField { space: self.space, points }
    }

    /// The section v with other = exp_self(v), vertexwise logarithm.
    pub fn log_to(&self, other: &MapField) -> SectionField {
        let vectors = self
            .points
            .iter()
            .zip(&other.points)
            .map(|(&p, &q)| log_map(self.space, p, q))
            .collect();
        SectionField { vectors }
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# mapfield v1 K={}", self.space.k())?;
        for (i, p) in self.points.iter().enumerate() {
            writeln!(w, "{},{},{}", i, p.x, p.y)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<MapField> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty mapfield file".into()))??;
        if !header.starts_with("# mapfield v1") {
            return Err(Error::Parse(format!("unexpected mapfield header: {header}")));
        }
        let k: f64 = header
            .split_whitespace()
            .find_map(|tok| tok.strip_prefix("K="))
            .ok_or_else(|| Error::Parse("missing K= in mapfield header".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad K: {e}")))?;
        let mut points = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split(',');
            let idx: usize = it
                .next()
                .ok_or_else(|| Error::Parse("missing vertex id".into()))?
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("bad vertex id: {e}")))?;
            if idx != points.len() {
                return Err(Error::Parse(format!("vertex ids must be consecutive, got {idx}")));
            }
            let x: f64 = it
                .next()
                .ok_or_else(|| Error::Parse("missing x".into()))?
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("bad x: {e}")))?;
            let y: f64 = it
                .next()
                .ok_or_else(|| Error::Parse("missing y".into()))?
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("bad y: {e}")))?;
            if x * x + y * y >= 1.0 {
                return Err(Error::Parse(format!("vertex {idx} image not interior")));
            }
            points.push(DiskPoint::new(x, y));
        }
        Ok(MapField { space: Space::new(k), points })
    }
}

/// Per-vertex tangent vector at the image of the associated map — the home
/// of velocities, tension fields and displacement sections.
#[derive(Debug, Clone)]
pub struct SectionField {
    pub vectors: Vec<TangentVector>,
}

impl SectionField {
    pub fn zeros(u: &MapField) -> Self {
        SectionField {
            vectors: u.points.iter().map(|&p| TangentVector::zero(p)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Metric norms per vertex.
    pub fn norms(&self, sp: Space) -> Vec<f64> {
        self.vectors.iter().map(|v| v.norm(sp)).collect()
    }

    pub fn sup_norm(&self, sp: Space) -> f64 {
        self.norms(sp).into_iter().fold(0.0, f64::max)
    }

    /// Check base agreement with a map field (used by debug assertions).
    pub fn bases_match(&self, u: &MapField, tol: f64) -> bool {
        self.vectors
            .iter()
            .zip(&u.points)
            .all(|(v, &p)| (v.base.x - p.x).abs() <= tol && (v.base.y - p.y).abs() <= tol)
    }

    pub fn scale(&self, c: f64) -> Self {
        SectionField { vectors: self.vectors.iter().map(|v| v.scale(c)).collect() }
    }
}
