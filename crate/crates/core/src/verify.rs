//! Direct numerical verification of the structural identities the flow is
//! built on: the distance-squared Laplacian identity, subharmonicity of
//! squared distance between harmonic maps, uniqueness of the harmonic limit
//! under interior perturbations, and quasiisometry distortion of barycenter
//! extensions.

use serde::Serialize;

use crate::calculus::{
    differential, laplacian_scalar, section_derivative, singular_values, tension_field,
};
use crate::error::{Error, Result};
use crate::field::{MapField, SectionField};
use crate::flow::{bump_perturbation, discretization_floor, run_flow, FlowConfig};
use crate::hyperbolic::{parallel_transport, transport_rotation};
use crate::mesh::Mesh;

/// Two homotopic maps on one mesh with the connecting section
/// v = log_{u0} u1 (so u1 = exp_{u0} v).
#[derive(Debug, Clone)]
pub struct MapPair {
    pub u0: MapField,
    pub u1: MapField,
    pub v: SectionField,
}

impl MapPair {
    pub fn new(u0: MapField, u1: MapField) -> Result<MapPair> {
        if u0.len() != u1.len() {
            return Err(Error::InvalidConfig("map pair lengths differ".into()));
        }
        let v = u0.log_to(&u1);
        let reproduced = u0.displace(&v);
        let gap = reproduced.sup_distance(&u1);
        if gap > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "exp(u0, log(u0,u1)) misses u1 by {gap:.3e}"
            )));
        }
        Ok(MapPair { u0, u1, v })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DistsqReport {
    /// max over collar-excluded interior vertices of |LHS − RHS|/(1 + |LHS|)
    pub max_rel_discrepancy: f64,
    /// min over the same vertices of the discrete Δδ (≥ ~0 for harmonic pairs)
    pub min_lhs: f64,
    pub vertices_checked: usize,
}

/// Check the identity
///   Δ d(u0,u1)² = 2[ v₁·Δu₁ − v·Δu₀ + ∫₀¹ R(v_s,∂ⁱu_s)v_s·∂ᵢu_s + |∇v_s|² ds ]
/// with Simpson quadrature in s (s_count even, ≥ 8) against the discrete
/// scalar Laplacian of δ = d(u0,u1)². The factor 2 is forced by the flat
/// limit Δ|v|² = 2(v·Δv + |∇v|²). A 2h collar at the truncation rim is
/// excluded.
pub fn distsq_check(mesh: &Mesh, pair: &MapPair, s_count: usize) -> Result<DistsqReport> {
    assert!(s_count >= 8 && s_count % 2 == 0, "Simpson in s needs an even count >= 8");
    let tar = pair.u0.space;
    let n = mesh.vertex_count();

    let delta: Vec<f64> = (0..n)
        .map(|i| tar.distance(pair.u0.points[i], pair.u1.points[i]).powi(2))
        .collect();
    let lhs = laplacian_scalar(mesh, &delta);

    let tension0 = tension_field(mesh, &pair.u0);
    let tension1 = tension_field(mesh, &pair.u1);

    // Simpson accumulation of the s-integral per vertex.
    let mut integral = vec![0.0f64; n];
    let h = 1.0 / s_count as f64;
    let mut v1_section: Option<SectionField> = None;
    for node in 0..=s_count {
        let s = node as f64 * h;
        let u_s = pair.u0.displace(&pair.v.scale(s));
        let v_s = SectionField {
            vectors: (0..n)
                .map(|i| {
                    parallel_transport(tar, pair.u0.points[i], u_s.points[i], &pair.v.vectors[i])
                })
                .collect(),
        };
        let weight = if node == 0 || node == s_count {
            1.0
        } else if node % 2 == 1 {
            4.0
        } else {
            2.0
        };
        for &i in mesh.interior_vertices() {
            let a = differential(mesh, &u_s, i)?;
            let dv = section_derivative(mesh, &u_s, &v_s, i)?;
            let vf = v_s.vectors[i].frame_coords(tar);
            let k2 = tar.k() * tar.k();
            let mut curv = 0.0;
            for col in 0..2 {
                let x = [a[0][col], a[1][col]];
                let vv = vf[0] * vf[0] + vf[1] * vf[1];
                let xx = x[0] * x[0] + x[1] * x[1];
                let vx = vf[0] * x[0] + vf[1] * x[1];
                curv += k2 * (vv * xx - vx * vx);
            }
            let grad = dv[0][0] * dv[0][0] + dv[0][1] * dv[0][1] + dv[1][0] * dv[1][0]
                + dv[1][1] * dv[1][1];
            integral[i] += weight * (curv + grad);
        }
        if node == s_count {
            v1_section = Some(v_s);
        }
    }
    for v in integral.iter_mut() {
        *v *= h / 3.0;
    }
    let v1_section = v1_section.unwrap();

    let checked = mesh.collar_excluded(2.0 * mesh.h);
    let mut max_rel: f64 = 0.0;
    let mut min_lhs = f64::INFINITY;
    for &i in &checked {
        let rhs = 2.0
            * (v1_section.vectors[i].inner(tar, &tension1.vectors[i])
                - pair.v.vectors[i].inner(tar, &tension0.vectors[i])
                + integral[i]);
        let rel = (lhs[i] - rhs).abs() / (1.0 + lhs[i].abs());
        max_rel = max_rel.max(rel);
        min_lhs = min_lhs.min(lhs[i]);
    }
    Ok(DistsqReport {
        max_rel_discrepancy: max_rel,
        min_lhs,
        vertices_checked: checked.len(),
    })
}

/// min over the collar-excluded interior of Δδ − K τ² √δ tanh(K √δ) for a
/// pair of (desk-scale) harmonic maps; nonnegative up to the discretization
/// floor when both maps are harmonic and u0 has nondegeneracy τ.
pub fn subharmonicity_check(mesh: &Mesh, u0: &MapField, u1: &MapField, tau: f64) -> f64 {
    let tar = u0.space;
    let n = mesh.vertex_count();
    let delta: Vec<f64> = (0..n)
        .map(|i| tar.distance(u0.points[i], u1.points[i]).powi(2))
        .collect();
    let lap = laplacian_scalar(mesh, &delta);
    let k = tar.k();
    let mut slack = f64::INFINITY;
    for &i in &mesh.collar_excluded(2.0 * mesh.h) {
        let d = delta[i].max(0.0).sqrt();
        let rhs = k * tau * tau * d * (k * d).tanh();
        slack = slack.min(lap[i] - rhs);
    }
    slack
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub floor: f64,
    /// (perturbation magnitude, sup distance between the perturbed and
    /// unperturbed limits)
    pub sup_distances: Vec<(f64, f64)>,
    /// The unperturbed limit's nondegeneracy, for downstream checks.
    pub tau_limit: f64,
}

/// Flow the given initial map and interior-perturbed copies of it to
/// desk-scale convergence and measure the spread of the limits.
/// Returns the limit maps alongside the report so callers can run further
/// checks on the harmonic pair.
pub fn uniqueness_experiment(
    mesh: &Mesh,
    u0: &MapField,
    magnitudes: &[f64],
    bump_radius: f64,
) -> Result<(UniquenessReport, MapField, Vec<MapField>)> {
    let floor = discretization_floor(mesh, u0.space);
    let mut config = FlowConfig::new(30.0);
    config.conv_tol = Some(1.5 * floor);

    let (limit_base, diag) = run_flow(mesh, u0, &config)?;
    if !diag.converged {
        return Err(Error::InvalidConfig(
            "unperturbed flow failed to reach the desk-scale harmonic threshold".into(),
        ));
    }
    let tau_limit = crate::calculus::nondegeneracy(mesh, &limit_base)?;

    let mut sup_distances = Vec::new();
    let mut limits = Vec::new();
    for &mag in magnitudes {
        let perturbed = bump_perturbation(mesh, u0, mag, bump_radius);
        let (limit, diag) = run_flow(mesh, &perturbed, &config)?;
        if !diag.converged {
            return Err(Error::InvalidConfig(format!(
                "perturbed flow (magnitude {mag}) failed to converge"
            )));
        }
        sup_distances.push((mag, limit.sup_distance(&limit_base)));
        limits.push(limit);
    }
    Ok((
        UniquenessReport { floor, sup_distances, tau_limit },
        limit_base,
        limits,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct QuasiIsometryReport {
    /// max over interior vertices of max(σ₁, 1/σ₂) for the framed du.
    pub distortion: f64,
    /// sup of the framed finite difference of du across edges (a Hessian
    /// surrogate).
    pub hessian_sup: f64,
}

/// Distortion of the pullback metric against the domain metric, and a
/// finite-difference Hessian surrogate.
pub fn quasiisometry_check(mesh: &Mesh, u: &MapField) -> Result<QuasiIsometryReport> {
    let dom = mesh.space();
    let tar = u.space;
    let mut distortion_sq: f64 = 1.0;
    let diffs = crate::calculus::differential_field(mesh, u)?;
    for &i in mesh.interior_vertices() {
        let (s1, s2) = singular_values(&diffs[i]);
        distortion_sq = distortion_sq.max(s1 * s1).max(1.0 / (s2 * s2));
    }

    let mut hessian_sup: f64 = 0.0;
    for &i in mesh.interior_vertices() {
        let ai = &diffs[i];
        for &j in mesh.neighbors(i) {
            let aj = &diffs[j];
            // move A_j into the frames at (x_i, u_i): P^Y_{j→i} ∘ A_j ∘ P^X_{i→j}
            let rx = transport_rotation(dom, mesh.vertices[i], mesh.vertices[j]);
            let ry = transport_rotation(tar, u.points[j], u.points[i]);
            let rxm = [[rx.re, -rx.im], [rx.im, rx.re]];
            let rym = [[ry.re, -ry.im], [ry.im, ry.re]];
            let mut tmp = [[0.0f64; 2]; 2];
            for r in 0..2 {
                for c in 0..2 {
                    tmp[r][c] = aj[r][0] * rxm[0][c] + aj[r][1] * rxm[1][c];
                }
            }
            let mut moved = [[0.0f64; 2]; 2];
            for r in 0..2 {
                for c in 0..2 {
                    moved[r][c] = rym[r][0] * tmp[0][c] + rym[r][1] * tmp[1][c];
                }
            }
            let mut frob = 0.0;
            for r in 0..2 {
                for c in 0..2 {
                    frob += (moved[r][c] - ai[r][c]).powi(2);
                }
            }
            hessian_sup = hessian_sup.max(frob.sqrt() / mesh.edge_length(i, j));
        }
    }
    Ok(QuasiIsometryReport { distortion: distortion_sq.sqrt(), hessian_sup })
}

/// One named check inside a verification report.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    /// "<=" or ">=": how `measured` must compare to `threshold`.
    pub comparison: String,
    pub pass: bool,
}

impl CheckResult {
    pub fn le(name: &str, measured: f64, threshold: f64) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            measured,
            threshold,
            comparison: "<=".into(),
            pass: measured <= threshold,
        }
    }

    pub fn ge(name: &str, measured: f64, threshold: f64) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            measured,
            threshold,
            comparison: ">=".into(),
            pass: measured >= threshold,
        }
    }
}

/// Machine-readable verification report; `lambda0` documents that the
/// Dirichlet-truncated domain satisfies the spectral-gap hypothesis.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub format: String,
    pub suite: String,
    pub lambda0: Option<f64>,
    pub seed: Option<u64>,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn new(suite: &str, lambda0: Option<f64>, seed: Option<u64>, checks: Vec<CheckResult>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        VerifyReport {
            format: "verify-report v1".into(),
            suite: suite.to_string(),
            lambda0,
            seed,
            checks,
            pass,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::{DiskPoint, Mobius, Space};

    fn test_mobius() -> Mobius {
        Mobius { a: DiskPoint::new(0.25, 0.1), rot: 0.4 }
    }

    #[test]
    fn map_pair_validates_log_exp() {
        let mesh = Mesh::generate(1.0, 0.25).unwrap();
        let sp = Space::unit();
        let u0 = MapField::identity(&mesh, sp);
        let u1 = MapField::mobius(&mesh, sp, &test_mobius());
        let pair = MapPair::new(u0, u1).unwrap();
        assert_eq!(pair.v.len(), mesh.vertex_count());
    }

    #[test]
    fn distsq_identical_maps_vanish() {
        let mesh = Mesh::generate(1.0, 0.25).unwrap();
        let sp = Space::unit();
        let u = MapField::identity(&mesh, sp);
        let pair = MapPair::new(u.clone(), u).unwrap();
        let rep = distsq_check(&mesh, &pair, 8).unwrap();
        assert!(rep.max_rel_discrepancy < 1e-12);
        assert!(rep.min_lhs.abs() < 1e-12);
    }

    #[test]
    fn distsq_discrepancy_shrinks_under_refinement() {
        let sp = Space::unit();
        let m = test_mobius();
        let mut prev = f64::INFINITY;
        for &h in &[0.2, 0.1] {
            let mesh = Mesh::generate(1.5, h).unwrap();
            let pair =
                MapPair::new(MapField::identity(&mesh, sp), MapField::mobius(&mesh, sp, &m))
                    .unwrap();
            let rep = distsq_check(&mesh, &pair, 8).unwrap();
            assert!(
                rep.max_rel_discrepancy < prev / 1.5,
                "h={h}: {} vs {}",
                rep.max_rel_discrepancy,
                prev
            );
            prev = rep.max_rel_discrepancy;
        }
    }

    #[test]
    fn subharmonicity_zero_for_identical_maps() {
        let mesh = Mesh::generate(1.0, 0.25).unwrap();
        let sp = Space::unit();
        let u = MapField::identity(&mesh, sp);
        let slack = subharmonicity_check(&mesh, &u, &u, 1.0);
        assert_eq!(slack, 0.0);
    }

    #[test]
    fn subharmonicity_violated_by_synthetic_bump() {
        // Scaling δ up locally (doubling at the bump peak) produces regions
        // of negative Laplacian, so the inequality must fail somewhere: the
        // check is non-vacuous.
        let mesh = Mesh::generate(1.5, 0.15).unwrap();
        let sp = Space::unit();
        let u0 = MapField::identity(&mesh, sp);
        let m = Mobius { a: DiskPoint::new(0.1, 0.0), rot: 0.0 };
        let u1 = MapField::mobius(&mesh, sp, &m);

        // Direct check with the synthetic field: replace δ by δ(1 + bump).
        let n = mesh.vertex_count();
        let delta: Vec<f64> = (0..n)
            .map(|i| sp.distance(u0.points[i], u1.points[i]).powi(2))
            .collect();
        let bumped: Vec<f64> = (0..n)
            .map(|i| {
                let s = (mesh.hyp_radius(i) / 0.8).min(1.0);
                delta[i] * (1.0 + (1.0 - s * s).powi(2))
            })
            .collect();
        let lap = laplacian_scalar(&mesh, &bumped);
        let mut min_slack = f64::INFINITY;
        for &i in &mesh.collar_excluded(2.0 * mesh.h) {
            let d = bumped[i].sqrt();
            min_slack = min_slack.min(lap[i] - 1.0 * d * d.tanh());
        }
        assert!(min_slack < -0.01, "synthetic violation not detected: {min_slack}");
    }

    #[test]
    fn uniqueness_zero_perturbation_is_exact() {
        let mesh = Mesh::generate(1.2, 0.3).unwrap();
        let sp = Space::unit();
        let u0 = bump_perturbation(&mesh, &MapField::identity(&mesh, sp), 0.05, 0.8);
        let (report, _, _) = uniqueness_experiment(&mesh, &u0, &[0.0], 0.8).unwrap();
        assert_eq!(report.sup_distances[0].1, 0.0);
    }

    #[test]
    fn uniqueness_perturbed_flows_reconverge() {
        let mesh = Mesh::generate(1.5, 0.2).unwrap();
        let sp = Space::unit();
        let u0 = MapField::identity(&mesh, sp);
        let (report, base, limits) = uniqueness_experiment(&mesh, &u0, &[0.1], 0.9).unwrap();
        assert!(
            report.sup_distances[0].1 <= 3.0 * report.floor,
            "{} vs floor {}",
            report.sup_distances[0].1,
            report.floor
        );
        // the harmonic pair satisfies the subharmonicity slack bound
        let slack = subharmonicity_check(&mesh, &base, &limits[0], report.tau_limit);
        assert!(slack >= -report.floor, "slack {slack} vs floor {}", report.floor);
    }

    #[test]
    fn quasiisometry_of_isometries_is_tight() {
        let mesh = Mesh::generate(1.5, 0.2).unwrap();
        let sp = Space::unit();
        let rep = quasiisometry_check(&mesh, &MapField::identity(&mesh, sp)).unwrap();
        assert!((rep.distortion - 1.0).abs() < 0.05, "sigma = {}", rep.distortion);
        assert!(rep.hessian_sup < 0.5, "hessian sup = {}", rep.hessian_sup);

        let rep = quasiisometry_check(&mesh, &MapField::mobius(&mesh, sp, &test_mobius())).unwrap();
        assert!((rep.distortion - 1.0).abs() < 0.05);
    }

    #[test]
    fn report_aggregates_pass_flags() {
        let checks = vec![
            CheckResult::le("a", 0.5, 1.0),
            CheckResult::ge("b", 2.0, 1.0),
        ];
        let rep = VerifyReport::new("demo", Some(0.3), Some(7), checks);
        assert!(rep.pass);
        let json = rep.to_json();
        assert!(json.contains("\"suite\": \"demo\""));
        let bad = VerifyReport::new("demo", None, None, vec![CheckResult::le("c", 2.0, 1.0)]);
        assert!(!bad.pass);
    }
}
