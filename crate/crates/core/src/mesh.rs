//! Triangulated truncated hyperbolic disk (the domain X).
//!
//! Concentric-ring construction: ring j sits at hyperbolic radius j·h and
//! carries ⌈2π sinh(jh)/h⌉ vertices, so edge lengths stay near h across the
//! whole mesh despite the exponential growth of circles. Cotangent weights
//! and dual areas are computed from the hyperbolic edge lengths (angles via
//! the hyperbolic law of cosines, triangle areas via the angle deficit).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::hyperbolic::{DiskPoint, Space};

const TAU: f64 = 2.0 * PI;

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<DiskPoint>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
    pub r_max: f64,
    pub h: f64,
    neighbors: Vec<Vec<usize>>,
    weights: Vec<Vec<f64>>,
    dual_area: Vec<f64>,
    interior: Vec<usize>,
}

impl Mesh {
    /// Concentric-ring mesh of the hyperbolic disk of radius `r_max` with
    /// target edge length `h`. Requires 0 < h ≤ r_max / 4.
    pub fn generate(r_max: f64, h: f64) -> Result<Mesh> {
        if !(h > 0.0 && h <= r_max / 4.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "mesh spacing must satisfy 0 < h <= r_max/4 (got h={h}, r_max={r_max})"
            )));
        }
        let sp = Space::unit();
        let rings = (r_max / h + 1e-9).floor() as usize;

        let mut vertices = vec![DiskPoint::ORIGIN];
        let mut ring_start = vec![0usize; rings + 1];
        let mut ring_len = vec![1usize; rings + 1];
        let mut ring_offset = vec![0.0f64; rings + 1];
        for j in 1..=rings {
            let rho = j as f64 * h;
            let n = (TAU * rho.sinh() / h).ceil() as usize;
            ring_start[j] = vertices.len();
            ring_len[j] = n;
            // stagger alternate rings by half a spacing for rounder stencils
            ring_offset[j] = if j % 2 == 0 { 0.0 } else { 0.5 };
            for i in 0..n {
                let ang = (i as f64 + ring_offset[j]) / n as f64 * TAU;
                vertices.push(DiskPoint::polar(sp, rho, ang));
            }
        }

        let mut triangles = Vec::new();
        // center fan
        let n1 = ring_len[1];
        for i in 0..n1 {
            triangles.push([0, ring_start[1] + i, ring_start[1] + (i + 1) % n1]);
        }
        // annuli, advancing whichever pointer creates the shorter diagonal
        for j in 1..rings {
            let (s1, n1, o1) = (ring_start[j], ring_len[j], ring_offset[j]);
            let (s2, n2, o2) = (ring_start[j + 1], ring_len[j + 1], ring_offset[j + 1]);
            let inner_angle = |i: usize| (i as f64 + o1) / n1 as f64;
            let outer_angle = |k: usize| (k as f64 + o2) / n2 as f64;
            // start the outer pointer at the vertex nearest the first inner one
            let k0 = ((inner_angle(0) * n2 as f64) - o2).round() as i64;
            let k0 = k0.rem_euclid(n2 as i64) as usize;
            let outer_turn = |k: usize| {
                // unwrapped angular position of outer vertex k0 + k
                let base = (k0 as f64 + o2) / n2 as f64;
                let mut t = base + k as f64 / n2 as f64;
                if base > inner_angle(0) + 0.5 / n2 as f64 {
                    t -= 1.0;
                }
                t
            };
            let mut i = 0usize;
            let mut k = 0usize;
            while i < n1 || k < n2 {
                let inner_id = s1 + i % n1;
                let outer_id = s2 + (k0 + k) % n2;
                let advance_inner = if i >= n1 {
                    false
                } else if k >= n2 {
                    true
                } else {
                    // candidate diagonals after each advance
                    let gap_inner = (inner_angle(i + 1) - outer_turn(k)).abs();
                    let gap_outer = (inner_angle(i) - outer_turn(k + 1)).abs();
                    gap_inner <= gap_outer
                };
                if advance_inner {
                    triangles.push([inner_id, outer_id, s1 + (i + 1) % n1]);
                    i += 1;
                } else {
                    triangles.push([inner_id, outer_id, s2 + (k0 + k + 1) % n2]);
                    k += 1;
                }
            }
        }

        let mut boundary = vec![false; vertices.len()];
        for i in 0..ring_len[rings] {
            boundary[ring_start[rings] + i] = true;
        }

        Mesh::from_parts(vertices, triangles, boundary, r_max, h)
    }

    /// Assemble connectivity, cotangent weights and dual areas from raw data.
    pub fn from_parts(
        vertices: Vec<DiskPoint>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<bool>,
        r_max: f64,
        h: f64,
    ) -> Result<Mesh> {
        if boundary.len() != vertices.len() {
            return Err(Error::Parse("boundary flag count != vertex count".into()));
        }
        let sp = Space::unit();
        let n = vertices.len();
        let mut edge_weight: HashMap<(usize, usize), f64> = HashMap::new();
        let mut dual_area = vec![0.0f64; n];

        for t in &triangles {
            let [i0, i1, i2] = *t;
            if i0.max(i1).max(i2) >= n {
                return Err(Error::Parse("triangle index out of range".into()));
            }
            let l0 = sp.distance(vertices[i1], vertices[i2]); // opposite i0
            let l1 = sp.distance(vertices[i0], vertices[i2]);
            let l2 = sp.distance(vertices[i0], vertices[i1]);
            let a0 = hyp_angle(l0, l1, l2);
            let a1 = hyp_angle(l1, l2, l0);
            let a2 = hyp_angle(l2, l0, l1);
            let area = PI - a0 - a1 - a2;
            if !(area > 0.0) {
                return Err(Error::Parse("degenerate triangle in mesh".into()));
            }
            // Circumcentric (Voronoi) dual areas with the usual obtuse
            // clamping; barycentric lumping would lose pointwise
            // consistency of the Laplacian at non-equilateral fans.
            let ids = [i0, i1, i2];
            let ang = [a0, a1, a2];
            let len = [l0, l1, l2];
            if ang[0].max(ang[1]).max(ang[2]) <= PI / 2.0 {
                for m in 0..3 {
                    let (p, q) = ((m + 1) % 3, (m + 2) % 3);
                    // incident sides len[p], len[q] with opposite angles ang[p], ang[q]
                    dual_area[ids[m]] +=
                        (len[p] * len[p] / ang[p].tan() + len[q] * len[q] / ang[q].tan()) / 8.0;
                }
            } else {
                for m in 0..3 {
                    dual_area[ids[m]] += if ang[m] > PI / 2.0 { area / 2.0 } else { area / 4.0 };
                }
            }
            *edge_weight.entry(key(i1, i2)).or_insert(0.0) += 0.5 / a0.tan();
            *edge_weight.entry(key(i0, i2)).or_insert(0.0) += 0.5 / a1.tan();
            *edge_weight.entry(key(i0, i1)).or_insert(0.0) += 0.5 / a2.tan();
        }

        let mut neighbors = vec![Vec::new(); n];
        let mut weights = vec![Vec::new(); n];
        let mut keys: Vec<&(usize, usize)> = edge_weight.keys().collect();
        keys.sort();
        for &&(i, j) in &keys {
            let w = edge_weight[&(i, j)];
            neighbors[i].push(j);
            weights[i].push(w);
            neighbors[j].push(i);
            weights[j].push(w);
        }

        let interior = (0..n).filter(|&i| !boundary[i]).collect();
        Ok(Mesh {
            vertices,
            triangles,
            boundary,
            r_max,
            h,
            neighbors,
            weights,
            dual_area,
            interior,
        })
    }

    pub fn space(&self) -> Space {
        Space::unit()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Cotangent weights aligned with [`neighbors`](Self::neighbors).
    pub fn weights(&self, i: usize) -> &[f64] {
        &self.weights[i]
    }

    pub fn dual_area(&self, i: usize) -> f64 {
        self.dual_area[i]
    }

    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior
    }

    pub fn edge_length(&self, i: usize, j: usize) -> f64 {
        self.space().distance(self.vertices[i], self.vertices[j])
    }

    pub fn hyp_radius(&self, i: usize) -> f64 {
        self.space().distance(DiskPoint::ORIGIN, self.vertices[i])
    }

    /// Interior vertices at hyperbolic distance ≥ `width` from the rim,
    /// i.e. with the truncation collar removed.
    pub fn collar_excluded(&self, width: f64) -> Vec<usize> {
        self.interior
            .iter()
            .copied()
            .filter(|&i| self.hyp_radius(i) < self.r_max - width)
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(|n| n.len()).sum::<usize>() / 2
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# mesh v1 R_max={} h={}", self.r_max, self.h)?;
        writeln!(w, "#vertices {}", self.vertices.len())?;
        for v in &self.vertices {
            writeln!(w, "{},{}", v.x, v.y)?;
        }
        writeln!(w, "#triangles {}", self.triangles.len())?;
        for t in &self.triangles {
            writeln!(w, "{},{},{}", t[0], t[1], t[2])?;
        }
        let ids: Vec<usize> = (0..self.vertices.len()).filter(|&i| self.boundary[i]).collect();
        writeln!(w, "#boundary {}", ids.len())?;
        for i in ids {
            writeln!(w, "{i}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Mesh> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty mesh file".into()))??;
        if !header.starts_with("# mesh v1") {
            return Err(Error::Parse(format!("unexpected mesh header: {header}")));
        }
        let r_max = parse_kv(&header, "R_max=")?;
        let h = parse_kv(&header, "h=")?;

        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        let mut boundary_ids = Vec::new();
        let mut section = String::new();
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                section = rest.split_whitespace().next().unwrap_or("").to_string();
                continue;
            }
            match section.as_str() {
                "vertices" => {
                    let mut it = line.split(',');
                    let x: f64 = field(it.next())?;
                    let y: f64 = field(it.next())?;
                    vertices.push(DiskPoint::new(x, y));
                }
                "triangles" => {
                    let mut it = line.split(',');
                    let a: usize = field(it.next())?;
                    let b: usize = field(it.next())?;
                    let c: usize = field(it.next())?;
                    triangles.push([a, b, c]);
                }
                "boundary" => boundary_ids.push(field::<usize>(Some(line))?),
                _ => return Err(Error::Parse(format!("line outside a known section: {line}"))),
            }
        }
        let mut boundary = vec![false; vertices.len()];
        for i in boundary_ids {
            if i >= boundary.len() {
                return Err(Error::Parse("boundary id out of range".into()));
            }
            boundary[i] = true;
        }
        Mesh::from_parts(vertices, triangles, boundary, r_max, h)
    }
}

fn key(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Angle opposite side `a` in a hyperbolic triangle with sides a, b, c.
fn hyp_angle(a: f64, b: f64, c: f64) -> f64 {
    let cosv = (b.cosh() * c.cosh() - a.cosh()) / (b.sinh() * c.sinh());
    cosv.clamp(-1.0, 1.0).acos()
}

fn parse_kv(header: &str, keyname: &str) -> Result<f64> {
    header
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix(keyname))
        .ok_or_else(|| Error::Parse(format!("missing {keyname} in mesh header")))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad {keyname}: {e}")))
}

fn field<T: std::str::FromStr>(s: Option<&str>) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.ok_or_else(|| Error::Parse("missing field".into()))?
        .trim()
        .parse()
        .map_err(|e| Error::Parse(format!("bad field: {e}")))
}
