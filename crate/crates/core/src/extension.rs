//! Barycentric (conformal barycenter) extension of a circle map to the
//! disk, in the sense of Douady–Earle: u(x) is the zero of the field
//!
//!   F(x, y) = (1/2π) ∫ unit-vector( φ_y( û( φ_x⁻¹(θ) ) ) ) dθ,
//!
//! where φ_z is the Möbius map sending z to 0. The construction is
//! conformally natural, so it commutes with Möbius maps on both sides and
//! is independent of the curvature parameter of the target disk.

use crate::boundary::BoundaryMap;
use crate::error::{Error, Result};
use crate::field::MapField;
use crate::hyperbolic::{exp_map, DiskPoint, Mobius, Space, TangentVector};
use crate::mesh::Mesh;

/// Solver knobs for the barycenter zero-find.
#[derive(Debug, Clone, Copy)]
pub struct ExtendConfig {
    /// Trapezoid node count for the circle quadrature.
    pub quad_m: usize,
    /// Residual tolerance on |F|.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ExtendConfig {
    fn default() -> Self {
        ExtendConfig { quad_m: 1024, tol: 1e-10, max_iter: 100 }
    }
}

/// Result of one extension solve.
#[derive(Debug, Clone, Copy)]
pub struct ExtensionResult {
    pub point: DiskPoint,
    pub residual: f64,
    pub iterations: usize,
}

/// The barycenter vector field F(x, y) over M uniform quadrature angles.
/// The integrand is a unit vector, so |F| ≤ 1; F(x, ·) vanishes exactly at
/// the extension value.
pub fn barycenter_field(bm: &BoundaryMap, x: DiskPoint, y: DiskPoint, quad_m: usize) -> [f64; 2] {
    let phi_x_inv = Mobius::centering(x).inverse();
    let phi_y = Mobius::centering(y);
    let mut fx = 0.0;
    let mut fy = 0.0;
    for j in 0..quad_m {
        let theta = j as f64 / quad_m as f64 * 2.0 * std::f64::consts::PI;
        let pulled = phi_x_inv.apply_boundary(theta);
        let mapped = bm.eval(pulled);
        let pushed = phi_y.apply_boundary(mapped);
        fx += pushed.cos();
        fy += pushed.sin();
    }
    [fx / quad_m as f64, fy / quad_m as f64]
}

fn residual_norm(f: [f64; 2]) -> f64 {
    f[0].hypot(f[1])
}

/// Solve F(x, y) = 0 for y by damped Newton with a finite-difference
/// Jacobian, starting from `init`. Falls back to a geometric averaging step
/// (exp along the field direction) when Newton stalls.
pub fn extend_point_from(
    bm: &BoundaryMap,
    x: DiskPoint,
    init: DiskPoint,
    cfg: &ExtendConfig,
) -> Result<ExtensionResult> {
    let mut y = init;
    let mut f = barycenter_field(bm, x, y, cfg.quad_m);
    let mut res = residual_norm(f);
    let mut iterations = 0;

    while res >= cfg.tol {
        if iterations >= cfg.max_iter {
            return Err(Error::NonConvergence { vertex: usize::MAX, residual: res, iterations });
        }
        iterations += 1;

        // Central finite-difference Jacobian, scaled to the local chart size.
        let d = 1e-6 * (1.0 - y.norm_sq()).max(1e-8);
        let fpx = barycenter_field(bm, x, clamp_disk(y.x + d, y.y), cfg.quad_m);
        let fmx = barycenter_field(bm, x, clamp_disk(y.x - d, y.y), cfg.quad_m);
        let fpy = barycenter_field(bm, x, clamp_disk(y.x, y.y + d), cfg.quad_m);
        let fmy = barycenter_field(bm, x, clamp_disk(y.x, y.y - d), cfg.quad_m);
        let j = [
            [(fpx[0] - fmx[0]) / (2.0 * d), (fpy[0] - fmy[0]) / (2.0 * d)],
            [(fpx[1] - fmx[1]) / (2.0 * d), (fpy[1] - fmy[1]) / (2.0 * d)],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];

        let mut advanced = false;
        if det.abs() > 1e-14 {
            let sx = (-f[0] * j[1][1] + f[1] * j[0][1]) / det;
            let sy = (-j[0][0] * f[1] + j[1][0] * f[0]) / det;
            let mut lambda = 1.0;
            while lambda > 1e-4 {
                let cand = clamp_disk(y.x + lambda * sx, y.y + lambda * sy);
                let fc = barycenter_field(bm, x, cand, cfg.quad_m);
                let rc = residual_norm(fc);
                if rc < res {
                    y = cand;
                    f = fc;
                    res = rc;
                    advanced = true;
                    break;
                }
                lambda *= 0.5;
            }
        }
        if !advanced {
            // Averaging fallback: F points from y toward the barycenter, so
            // step along it with the exponential map (capped step length).
            let sp = Space::unit();
            let dir = TangentVector::new(y, f[0], f[1]);
            let len = dir.norm(sp);
            let step = if len > 0.5 { dir.scale(0.5 / len) } else { dir };
            let cand = exp_map(sp, y, &step);
            let fc = barycenter_field(bm, x, cand, cfg.quad_m);
            let rc = residual_norm(fc);
            if rc >= res {
                return Err(Error::NonConvergence { vertex: usize::MAX, residual: res, iterations });
            }
            y = cand;
            f = fc;
            res = rc;
        }
    }
    Ok(ExtensionResult { point: y, residual: res, iterations })
}

/// Extension at a single point, initialized at x itself.
pub fn extend_point(bm: &BoundaryMap, x: DiskPoint, cfg: &ExtendConfig) -> Result<ExtensionResult> {
    extend_point_from(bm, x, x, cfg)
}

/// Extend over all mesh vertices, warm-starting each solve from the nearest
/// already-solved neighbor. The mesh is truncated, so every vertex —
/// including the outermost ring — is strictly interior and gets a genuine
/// barycenter solve; for outer-ring vertices without a solved neighbor the
/// initial guess is û at the vertex angle pushed inward along the radius.
pub fn extend_field(
    bm: &BoundaryMap,
    mesh: &Mesh,
    target: Space,
    cfg: &ExtendConfig,
) -> Result<MapField> {
    let n = mesh.vertex_count();
    let mut points: Vec<Option<DiskPoint>> = vec![None; n];
    let dom = mesh.space();

    for i in 0..n {
        let x = mesh.vertices[i];
        let warm = mesh
            .neighbors(i)
            .iter()
            .filter(|&&j| j < i)
            .filter_map(|&j| points[j].map(|p| (mesh.edge_length(i, j), p)))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, p)| p);
        let fallback = boundary_guess(bm, dom, x);

        let mut attempt = extend_point_from(bm, x, warm.unwrap_or(fallback), cfg);
        if attempt.is_err() && warm.is_some() {
            attempt = extend_point_from(bm, x, fallback, cfg);
        }
        if attempt.is_err() {
            attempt = extend_point_from(bm, x, x, cfg);
        }
        match attempt {
            Ok(r) => points[i] = Some(r.point),
            Err(Error::NonConvergence { residual, iterations, .. }) => {
                return Err(Error::NonConvergence { vertex: i, residual, iterations })
            }
            Err(e) => return Err(e),
        }
    }

    Ok(MapField::new(target, points.into_iter().map(Option::unwrap).collect()))
}

/// û evaluated at the vertex angle, pushed inside to the vertex's own
/// hyperbolic radius along the inward normal of the target direction.
fn boundary_guess(bm: &BoundaryMap, dom: Space, x: DiskPoint) -> DiskPoint {
    if x.norm_sq() < 1e-20 {
        return DiskPoint::ORIGIN;
    }
    let angle = x.y.atan2(x.x);
    let target_angle = bm.eval(angle);
    let rho = dom.distance(DiskPoint::ORIGIN, x);
    DiskPoint::polar(dom, rho, target_angle)
}


fn clamp_disk(x: f64, y: f64) -> DiskPoint {
    let r2 = x * x + y * y;
    if r2 < 0.999999 {
        DiskPoint::new(x, y)
    } else {
        let s = 0.9999 / r2.sqrt();
        DiskPoint::new(x * s, y * s)
    }
}
