//! Velocity-implicit relaxation flow for maps into the hyperbolic disk.
//!
//! Each step solves the linearized elliptic system
//!
//!   −Δv + R(∂ⁱu, v)∂ᵢu = Δu,   v = 0 on the boundary,
//!
//! for the velocity section v and moves the map along it with the
//! exponential map. Because the operator on the left is (minus) the
//! linearization of the tension field, the tension obeys ∂ₜΔu = −Δu along
//! the flow and every norm of Δu decays like e^{−t}; the diagnostics track
//! exactly the quantities that make that visible.

use serde::Serialize;

use crate::calculus::{
    differential_field, energy_density, frobenius_sq, singular_values, tension_field,
};
use crate::error::{Error, Result};
use crate::field::{MapField, SectionField};
use crate::hyperbolic::{transport_rotation, TangentVector};
use crate::mesh::Mesh;
use crate::sparse::{conjugate_gradient, CgSummary, CsrMatrix};

/// Hard floor below which the flow always declares convergence.
pub const HARD_CONVERGENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct FlowConfig {
    /// Explicit Euler step; 0 < dt ≤ 0.1.
    pub dt: f64,
    pub t_end: f64,
    /// Relative residual for the linear solve; must be ≤ 1e−8.
    pub solver_tol: f64,
    /// The p values tracked in the diagnostics (p = 2 is always tracked).
    pub p_norms: Vec<f64>,
    /// Runtime guard: abort when τ[u] falls below this.
    pub tau_floor: f64,
    /// Optional calibrated convergence threshold on ‖Δu‖∞ (e.g. a multiple
    /// of the mesh's discretization floor). The hard 1e−9 floor is always
    /// active.
    pub conv_tol: Option<f64>,
}

impl FlowConfig {
    pub fn new(t_end: f64) -> Self {
        FlowConfig {
            dt: 0.01,
            t_end,
            solver_tol: 1e-10,
            p_norms: vec![2.0],
            tau_floor: 1e-3,
            conv_tol: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return Err(Error::InvalidConfig(format!("dt must be in (0, 0.1], got {}", self.dt)));
        }
        if !(self.solver_tol <= 1e-8 && self.solver_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "solver_tol must be positive and <= 1e-8, got {}",
                self.solver_tol
            )));
        }
        if self.t_end < 0.0 {
            return Err(Error::InvalidConfig("t_end must be nonnegative".into()));
        }
        if self.p_norms.iter().any(|&p| p < 1.0) {
            return Err(Error::InvalidConfig("tracked p values must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub u: MapField,
    pub u0: MapField,
}

/// One diagnostics row; `tension_p` is aligned with `Diagnostics::p_values`.
#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub tension_p: Vec<f64>,
    pub tension_inf: f64,
    pub du_inf: f64,
    pub tau: f64,
    pub dist_sup: f64,
    pub v_inf: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub p_values: Vec<f64>,
    pub records: Vec<StepRecord>,
    pub converged: bool,
    pub converged_at: Option<f64>,
}

impl Diagnostics {
    pub fn tension_p2(&self, record: &StepRecord) -> f64 {
        let idx = self.p_values.iter().position(|&p| p == 2.0).expect("p = 2 is always tracked");
        record.tension_p[idx]
    }

    /// CSV with the pinned column set; one row per completed step.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# diagnostics v1")?;
        writeln!(w, "t,tension_p2,tension_inf,du_inf,tau,dist_sup,v_inf")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.t,
                self.tension_p2(r),
                r.tension_inf,
                r.du_inf,
                r.tau,
                r.dist_sup,
                r.v_inf
            )?;
        }
        Ok(())
    }
}

/// The assembled linear system: area-weighted SPD matrix over 2 dofs per
/// vertex in target orthonormal frames, with boundary rows pinned to the
/// identity (Dirichlet data is zero).
pub struct LinearizedOperator {
    pub matrix: CsrMatrix,
    mass: Vec<f64>,
}

impl LinearizedOperator {
    /// Interior dual-area mass per dof (boundary dofs carry 1).
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Apply L = M⁻¹·matrix to a frame-coordinate vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.matrix.matvec(x, &mut y);
        for i in 0..y.len() {
            y[i] /= self.mass[i];
        }
        y
    }
}

/// Assemble the operator of −Δv + R(∂ⁱu,v)∂ᵢu at the current map:
/// connection Laplacian with parallel-transport couplings plus the
/// curvature potential K²(e[u]·I − du duᵀ), which is positive semidefinite
/// with smallest eigenvalue K²σ₂² = K²τ² at each vertex.
pub fn assemble_linearized(mesh: &Mesh, u: &MapField) -> Result<LinearizedOperator> {
    let tar = u.space;
    let k2 = tar.k() * tar.k();
    let n = mesh.vertex_count();
    let diffs = differential_field(mesh, u)?;

    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(12 * n);
    let mut mass = vec![1.0f64; 2 * n];

    for i in 0..n {
        if mesh.is_boundary(i) {
            triplets.push((2 * i, 2 * i, 1.0));
            triplets.push((2 * i + 1, 2 * i + 1, 1.0));
            continue;
        }
        let area = mesh.dual_area(i);
        mass[2 * i] = area;
        mass[2 * i + 1] = area;

        let mut wsum = 0.0;
        for (&j, &w) in mesh.neighbors(i).iter().zip(mesh.weights(i)) {
            wsum += w;
            if mesh.is_boundary(j) {
                continue; // Dirichlet neighbor contributes nothing
            }
            // coupling −w · Rot(ρ), ρ the frame rotation of transport u_j → u_i
            let rho = transport_rotation(tar, u.points[j], u.points[i]);
            triplets.push((2 * i, 2 * j, -w * rho.re));
            triplets.push((2 * i, 2 * j + 1, w * rho.im));
            triplets.push((2 * i + 1, 2 * j, -w * rho.im));
            triplets.push((2 * i + 1, 2 * j + 1, -w * rho.re));
        }

        let a = &diffs[i];
        let e = frobenius_sq(a);
        // du duᵀ in the target frame
        let aat = [
            [a[0][0] * a[0][0] + a[0][1] * a[0][1], a[0][0] * a[1][0] + a[0][1] * a[1][1]],
            [a[1][0] * a[0][0] + a[1][1] * a[0][1], a[1][0] * a[1][0] + a[1][1] * a[1][1]],
        ];
        let pot = [
            [k2 * (e - aat[0][0]), -k2 * aat[0][1]],
            [-k2 * aat[1][0], k2 * (e - aat[1][1])],
        ];
        triplets.push((2 * i, 2 * i, wsum + area * pot[0][0]));
        triplets.push((2 * i, 2 * i + 1, area * pot[0][1]));
        triplets.push((2 * i + 1, 2 * i, area * pot[1][0]));
        triplets.push((2 * i + 1, 2 * i + 1, wsum + area * pot[1][1]));
    }

    Ok(LinearizedOperator { matrix: CsrMatrix::from_triplets(2 * n, &triplets), mass })
}

fn section_to_frame(u: &MapField, s: &SectionField) -> Vec<f64> {
    let mut x = vec![0.0; 2 * s.len()];
    for (i, v) in s.vectors.iter().enumerate() {
        let c = v.frame_coords(u.space);
        x[2 * i] = c[0];
        x[2 * i + 1] = c[1];
    }
    x
}

fn frame_to_section(u: &MapField, x: &[f64]) -> SectionField {
    let vectors = u
        .points
        .iter()
        .enumerate()
        .map(|(i, &p)| TangentVector::from_frame(u.space, p, [x[2 * i], x[2 * i + 1]]))
        .collect();
    SectionField { vectors }
}

/// Solve −Δv + R(∂ⁱu,v)∂ᵢu = w with zero boundary values, to relative
/// residual `tol` (measured on the area-weighted system).
pub fn solve_velocity(
    mesh: &Mesh,
    u: &MapField,
    w: &SectionField,
    tol: f64,
) -> Result<(SectionField, CgSummary)> {
    let op = assemble_linearized(mesh, u)?;
    solve_velocity_with(&op, mesh, u, w, tol)
}

/// Same as [`solve_velocity`] but reusing an assembled operator.
pub fn solve_velocity_with(
    op: &LinearizedOperator,
    mesh: &Mesh,
    u: &MapField,
    w: &SectionField,
    tol: f64,
) -> Result<(SectionField, CgSummary)> {
    let n = mesh.vertex_count();
    let wf = section_to_frame(u, w);
    let mut rhs = vec![0.0; 2 * n];
    for i in 0..n {
        if !mesh.is_boundary(i) {
            rhs[2 * i] = mesh.dual_area(i) * wf[2 * i];
            rhs[2 * i + 1] = mesh.dual_area(i) * wf[2 * i + 1];
        }
    }
    let mut x = vec![0.0; 2 * n];
    let summary = conjugate_gradient(&op.matrix, &rhs, &mut x, tol, 40 * n + 2000)?;
    Ok((frame_to_section(u, &x), summary))
}

/// One explicit Euler step u ← exp_u(dt·v). Boundary vertices are bitwise
/// unchanged (their velocity is exactly zero).
pub fn flow_step(state: &FlowState, mesh: &Mesh, config: &FlowConfig) -> Result<FlowState> {
    config.validate()?;
    let tau = crate::calculus::nondegeneracy(mesh, &state.u)?;
    if tau < config.tau_floor {
        return Err(Error::DegenerateMap { tau, floor: config.tau_floor, t: state.t });
    }
    let tension = tension_field(mesh, &state.u);
    let (v, _) = solve_velocity(mesh, &state.u, &tension, config.solver_tol)?;
    let u_next = state.u.displace(&v.scale(config.dt));
    Ok(FlowState { t: state.t + config.dt, u: u_next, u0: state.u0.clone() })
}

/// Run the flow to `t_end`, recording diagnostics at every visited state
/// (including t = 0). Convergence is declared when ‖Δu‖∞ falls below the
/// hard floor or the configured threshold.
pub fn run_flow(mesh: &Mesh, u0: &MapField, config: &FlowConfig) -> Result<(MapField, Diagnostics)> {
    config.validate()?;
    let mut p_values = config.p_norms.clone();
    if !p_values.contains(&2.0) {
        p_values.push(2.0);
    }

    let mut u = u0.clone();
    let mut records = Vec::new();
    let mut converged = false;
    let mut converged_at = None;
    let total_steps = (config.t_end / config.dt).round() as usize;

    let mut step = 0usize;
    loop {
        let t = step as f64 * config.dt;
        let wrap = |e: Error| Error::FlowStep { step, source: Box::new(e) };

        let tension = tension_field(mesh, &u);
        let tau = crate::calculus::nondegeneracy(mesh, &u).map_err(wrap)?;
        let e = energy_density(mesh, &u).map_err(wrap)?;
        let du_inf = e.iter().fold(0.0f64, |m, &v| m.max(v)).sqrt();
        let norms = tension.norms(u.space);
        let tension_inf = norms.iter().fold(0.0f64, |m, &v| m.max(v));
        let tension_p: Vec<f64> =
            p_values.iter().map(|&p| crate::calculus::lp_norm(mesh, &norms, p)).collect();
        let dist_sup = u.sup_distance(u0);

        if tau < config.tau_floor {
            return Err(Error::FlowStep {
                step,
                source: Box::new(Error::DegenerateMap { tau, floor: config.tau_floor, t }),
            });
        }

        let (v, _) = solve_velocity(mesh, &u, &tension, config.solver_tol).map_err(wrap)?;
        let v_inf = v.sup_norm(u.space);
        records.push(StepRecord { t, tension_p, tension_inf, du_inf, tau, dist_sup, v_inf });

        let below = tension_inf < HARD_CONVERGENCE_TOL
            || config.conv_tol.map_or(false, |c| tension_inf <= c);
        if below {
            converged = true;
            converged_at = Some(t);
            break;
        }
        if step >= total_steps {
            break;
        }
        u = u.displace(&v.scale(config.dt));
        step += 1;
    }

    Ok((u, Diagnostics { p_values, records, converged, converged_at }))
}

/// Summary statistics extracted from a diagnostics trace.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    /// Least-squares slope of log(‖Δu‖_p) vs t per tracked p, over the fit
    /// window.
    pub decay_slope_p: Vec<(f64, f64)>,
    pub decay_slope_inf: f64,
    pub fit_window: (f64, f64),
    /// Median and max relative drift of ‖v‖∞·τ²/‖Δu‖∞ over the run.
    pub velocity_ratio_median: f64,
    pub velocity_ratio_max_drift: f64,
    pub min_tau: f64,
    pub tension_p2_strictly_decreasing: bool,
    pub dist_sup_nondecreasing: bool,
}

/// Fit decay slopes and boundedness/monotonicity verdicts. `window`
/// restricts the slope fits to t in [lo, hi]; diagnostics need at least 10
/// records.
pub fn estimate_report(diag: &Diagnostics, window: Option<(f64, f64)>) -> Result<EstimateReport> {
    if diag.records.len() < 10 {
        return Err(Error::InvalidConfig(format!(
            "estimate report needs at least 10 records, got {}",
            diag.records.len()
        )));
    }
    let (lo, hi) = window.unwrap_or((
        diag.records.first().unwrap().t,
        diag.records.last().unwrap().t,
    ));

    let fit = |values: &dyn Fn(&StepRecord) -> f64| -> f64 {
        let pts: Vec<(f64, f64)> = diag
            .records
            .iter()
            .filter(|r| r.t >= lo - 1e-12 && r.t <= hi + 1e-12)
            .filter_map(|r| {
                let v = values(r);
                (v > 0.0).then(|| (r.t, v.ln()))
            })
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    };

    let mut decay_slope_p = Vec::new();
    for (idx, &p) in diag.p_values.iter().enumerate() {
        decay_slope_p.push((p, fit(&|r: &StepRecord| r.tension_p[idx])));
    }
    let decay_slope_inf = fit(&|r: &StepRecord| r.tension_inf);

    let mut ratios: Vec<f64> = diag
        .records
        .iter()
        .filter(|r| r.tension_inf > 0.0)
        .map(|r| r.v_inf * r.tau * r.tau / r.tension_inf)
        .collect();
    ratios.sort_by(f64::total_cmp);
    let median = ratios[ratios.len() / 2];
    let max_drift = ratios
        .iter()
        .map(|r| (r / median - 1.0).abs())
        .fold(0.0f64, f64::max);

    let min_tau = diag.records.iter().map(|r| r.tau).fold(f64::INFINITY, f64::min);
    let p2 = diag.p_values.iter().position(|&p| p == 2.0).unwrap();
    let tension_p2_strictly_decreasing = diag
        .records
        .windows(2)
        .all(|w| w[1].tension_p[p2] < w[0].tension_p[p2]);
    let dist_sup_nondecreasing = diag
        .records
        .windows(2)
        .all(|w| w[1].dist_sup >= w[0].dist_sup - 1e-12);

    Ok(EstimateReport {
        decay_slope_p,
        decay_slope_inf,
        fit_window: (lo, hi),
        velocity_ratio_median: median,
        velocity_ratio_max_drift: max_drift,
        min_tau,
        tension_p2_strictly_decreasing,
        dist_sup_nondecreasing,
    })
}

/// Discretization floor of a mesh: the sup tension of the identity map,
/// the reference scale for "harmonic at desk scale".
pub fn discretization_floor(mesh: &Mesh, space: crate::hyperbolic::Space) -> f64 {
    let id = MapField::identity(mesh, space);
    tension_field(mesh, &id).sup_norm(space)
}

/// Perturb a map by a smooth compactly supported bump of the given
/// hyperbolic magnitude: u ← exp_u(mag·(1−(ρ/radius)²)²·ê₁) for domain
/// radius ρ < radius; boundary values are untouched.
pub fn bump_perturbation(mesh: &Mesh, u: &MapField, magnitude: f64, radius: f64) -> MapField {
    let dom = mesh.space();
    let vectors: Vec<TangentVector> = u
        .points
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if mesh.is_boundary(i) {
                return TangentVector::zero(p);
            }
            let rho = mesh.hyp_radius(i);
            let _ = dom;
            let s = rho / radius;
            if s >= 1.0 {
                return TangentVector::zero(p);
            }
            let amp = magnitude * (1.0 - s * s).powi(2);
            TangentVector::from_frame(u.space, p, [amp, 0.0])
        })
        .collect();
    u.displace(&SectionField { vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{dirichlet_scalar_system, lambda0_estimate};
    use crate::hyperbolic::{DiskPoint, Mobius, Space};
    use crate::sparse::{dense_solve, symmetric_eigenvalues};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_dirichlet_section(
        mesh: &Mesh,
        u: &MapField,
        rng: &mut impl Rng,
    ) -> SectionField {
        let vectors = u
            .points
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                if mesh.is_boundary(i) {
                    TangentVector::zero(p)
                } else {
                    TangentVector::from_frame(
                        u.space,
                        p,
                        [rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5],
                    )
                }
            })
            .collect();
        SectionField { vectors }
    }

    #[test]
    fn constant_map_operator_reduces_to_scalar_laplacian() {
        let mesh = Mesh::generate(1.2, 0.3).unwrap();
        let sp = Space::unit();
        let u = MapField::new(sp, vec![DiskPoint::new(0.15, -0.2); mesh.vertex_count()]);
        let op = assemble_linearized(&mesh, &u).unwrap();

        // Extract the interior block of M^{-1/2} K M^{-1/2} and compare its
        // smallest eigenvalue with the scalar Dirichlet eigenvalue.
        let interior: Vec<usize> = (0..mesh.vertex_count())
            .filter(|&i| !mesh.is_boundary(i))
            .flat_map(|i| [2 * i, 2 * i + 1])
            .collect();
        let dense_full = op.matrix.to_dense();
        let n = interior.len();
        let mut a = vec![vec![0.0; n]; n];
        for (r, &i) in interior.iter().enumerate() {
            for (c, &j) in interior.iter().enumerate() {
                a[r][c] = dense_full[i][j] / (op.mass()[i] * op.mass()[j]).sqrt();
            }
        }
        let eigs = symmetric_eigenvalues(&mut a, 300);
        let min_eig = eigs.into_iter().fold(f64::INFINITY, f64::min);
        let l0 = lambda0_estimate(&mesh).unwrap();
        assert!(
            (min_eig - l0).abs() < 1e-6 * l0,
            "connection Laplacian on a constant map: {min_eig} vs lambda0 {l0}"
        );
    }

    #[test]
    fn operator_is_symmetric_and_positive() {
        let mesh = Mesh::generate(1.2, 0.3).unwrap();
        let sp = Space::new(1.5);
        let m = Mobius { a: DiskPoint::new(0.2, 0.1), rot: 0.3 };
        let u = MapField::mobius(&mesh, sp, &m);
        let op = assemble_linearized(&mesh, &u).unwrap();
        assert!(op.matrix.asymmetry() < 1e-10);

        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..100 {
            let s = random_dirichlet_section(&mesh, &u, &mut rng);
            let x = section_to_frame(&u, &s);
            let mut kx = vec![0.0; x.len()];
            op.matrix.matvec(&x, &mut kx);
            let q: f64 = x.iter().zip(&kx).map(|(a, b)| a * b).sum();
            if x.iter().any(|&v| v != 0.0) {
                assert!(q > 0.0, "quadratic form not positive: {q}");
            }
        }

        // self-adjointness in the dual-area inner product
        for _ in 0..10 {
            let sv = random_dirichlet_section(&mesh, &u, &mut rng);
            let sw = random_dirichlet_section(&mesh, &u, &mut rng);
            let xv = section_to_frame(&u, &sv);
            let xw = section_to_frame(&u, &sw);
            let lv = op.apply(&xv);
            let lw = op.apply(&xw);
            let m_inner = |a: &[f64], b: &[f64]| -> f64 {
                a.iter().zip(b).zip(op.mass()).map(|((x, y), m)| x * y * m).sum()
            };
            assert!((m_inner(&lv, &xw) - m_inner(&xv, &lw)).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_load_gives_zero_velocity() {
        let mesh = Mesh::generate(1.2, 0.3).unwrap();
        let sp = Space::unit();
        let u = MapField::identity(&mesh, sp);
        let w = SectionField::zeros(&u);
        let (v, s) = solve_velocity(&mesh, &u, &w, 1e-10).unwrap();
        assert_eq!(s.iterations, 0);
        assert!(v.sup_norm(sp) == 0.0);
    }

    #[test]
    fn velocity_matches_dense_direct_solve() {
        let mesh = Mesh::generate(1.2, 0.3).unwrap();
        assert!(mesh.vertex_count() <= 400);
        let sp = Space::unit();
        let m = Mobius { a: DiskPoint::new(0.25, -0.1), rot: 0.6 };
        let u = MapField::mobius(&mesh, sp, &m);
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let w = random_dirichlet_section(&mesh, &u, &mut rng);

        let (v, _) = solve_velocity(&mesh, &u, &w, 1e-12).unwrap();

        let op = assemble_linearized(&mesh, &u).unwrap();
        let wf = section_to_frame(&u, &w);
        let mut rhs = vec![0.0; wf.len()];
        for i in 0..mesh.vertex_count() {
            if !mesh.is_boundary(i) {
                rhs[2 * i] = mesh.dual_area(i) * wf[2 * i];
                rhs[2 * i + 1] = mesh.dual_area(i) * wf[2 * i + 1];
            }
        }
        let xd = dense_solve(&op.matrix.to_dense(), &rhs).unwrap();
        let vf = section_to_frame(&u, &v);
        let worst = vf.iter().zip(&xd).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
        assert!(worst < 1e-8, "CG vs dense LU: {worst}");
    }

    #[test]
    fn velocity_sup_bound_tracks_potential() {
        // ‖v‖∞ ≤ ‖w‖∞ / (K² τ²) within a modest margin: the potential term
        // alone already controls the solution.
        let mesh = Mesh::generate(1.5, 0.25).unwrap();
        let sp = Space::unit();
        let u = MapField::identity(&mesh, sp);
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        let w = random_dirichlet_section(&mesh, &u, &mut rng);
        let (v, _) = solve_velocity(&mesh, &u, &w, 1e-10).unwrap();
        let tau = crate::calculus::nondegeneracy(&mesh, &u).unwrap();
        let bound = w.sup_norm(sp) / (sp.k() * sp.k() * tau * tau);
        assert!(v.sup_norm(sp) <= bound * 1.05, "{} vs {}", v.sup_norm(sp), bound);
    }

    #[test]
    fn harmonic_fixed_point_and_dirichlet_invariance() {
        let mesh = Mesh::generate(1.5, 0.25).unwrap();
        let sp = Space::unit();
        let u = MapField::identity(&mesh, sp);
        let state = FlowState { t: 0.0, u: u.clone(), u0: u.clone() };
        let mut config = FlowConfig::new(1.0);
        config.dt = 0.05;
        let next = flow_step(&state, &mesh, &config).unwrap();
        // the identity is harmonic up to the mesh floor, so one step moves
        // the map by at most dt * O(floor)
        let floor = discretization_floor(&mesh, sp);
        assert!(next.u.sup_distance(&u) <= 2.0 * config.dt * floor);
        // boundary bitwise unchanged
        for i in 0..mesh.vertex_count() {
            if mesh.is_boundary(i) {
                assert_eq!(next.u.points[i], u.points[i]);
            }
        }
    }

    #[test]
    fn one_step_decreases_tension() {
        let mesh = Mesh::generate(1.5, 0.25).unwrap();
        let sp = Space::unit();
        let u = bump_perturbation(&mesh, &MapField::identity(&mesh, sp), 0.15, 1.0);
        let state = FlowState { t: 0.0, u: u.clone(), u0: u.clone() };
        let mut config = FlowConfig::new(1.0);
        config.dt = 0.05;
        let next = flow_step(&state, &mesh, &config).unwrap();
        let before = tension_field(&mesh, &u).sup_norm(sp);
        let after = tension_field(&mesh, &next.u).sup_norm(sp);
        assert!(after < before, "{after} vs {before}");
    }

    #[test]
    fn run_flow_identity_converges_at_zero() {
        let mesh = Mesh::generate(1.5, 0.25).unwrap();
        let sp = Space::unit();
        let u = MapField::identity(&mesh, sp);
        let mut config = FlowConfig::new(2.0);
        let floor = discretization_floor(&mesh, sp);
        config.conv_tol = Some(1.5 * floor);
        let (final_map, diag) = run_flow(&mesh, &u, &config).unwrap();
        assert!(diag.converged);
        assert_eq!(diag.converged_at, Some(0.0));
        assert_eq!(diag.records.len(), 1);
        assert!(final_map.sup_distance(&u) == 0.0);
        assert!(diag.records[0].tension_inf <= floor);
    }

    #[test]
    fn flow_decays_tension_exponentially() {
        let mesh = Mesh::generate(1.5, 0.15).unwrap();
        let sp = Space::unit();
        let u0 = bump_perturbation(&mesh, &MapField::identity(&mesh, sp), 0.1, 1.0);
        let config = FlowConfig::new(1.0);
        let (_, diag) = run_flow(&mesh, &u0, &config).unwrap();
        let report = estimate_report(&diag, None).unwrap();
        assert!(
            (report.decay_slope_inf + 1.0).abs() < 0.06,
            "sup-norm slope {}",
            report.decay_slope_inf
        );
        let p2_slope = report.decay_slope_p.iter().find(|(p, _)| *p == 2.0).unwrap().1;
        assert!((p2_slope + 1.0).abs() < 0.06, "L2 slope {p2_slope}");
        assert!(report.tension_p2_strictly_decreasing);
        assert!(report.dist_sup_nondecreasing);
        assert!(report.min_tau > 0.8);
    }

    #[test]
    fn halving_dt_changes_little() {
        let mesh = Mesh::generate(1.2, 0.3).unwrap();
        let sp = Space::unit();
        let u0 = bump_perturbation(&mesh, &MapField::identity(&mesh, sp), 0.1, 0.8);
        let mut c1 = FlowConfig::new(0.5);
        c1.dt = 0.02;
        let mut c2 = c1.clone();
        c2.dt = 0.01;
        let (f1, _) = run_flow(&mesh, &u0, &c1).unwrap();
        let (f2, _) = run_flow(&mesh, &u0, &c2).unwrap();
        // first-order integrator: O(dt) difference, small in absolute terms
        assert!(f1.sup_distance(&f2) < 0.5 * 0.02, "{}", f1.sup_distance(&f2));
    }

    #[test]
    fn estimate_report_on_synthetic_exact_decay() {
        let p_values = vec![2.0];
        let records: Vec<StepRecord> = (0..200)
            .map(|k| {
                let t = k as f64 * 0.01;
                StepRecord {
                    t,
                    tension_p: vec![0.7 * (-t).exp()],
                    tension_inf: 1.3 * (-t).exp(),
                    du_inf: 1.5,
                    tau: 0.9,
                    dist_sup: 1.0 - (-t).exp(),
                    v_inf: 0.5 * (-t).exp(),
                }
            })
            .collect();
        let diag = Diagnostics { p_values, records, converged: false, converged_at: None };
        let report = estimate_report(&diag, None).unwrap();
        assert!((report.decay_slope_inf + 1.0).abs() < 1e-6);
        assert!((report.decay_slope_p[0].1 + 1.0).abs() < 1e-6);
        assert!(report.velocity_ratio_max_drift < 1e-9);
    }

    #[test]
    fn degenerate_map_is_rejected() {
        let mesh = Mesh::generate(1.2, 0.3).unwrap();
        let sp = Space::unit();
        let u = MapField::new(sp, vec![DiskPoint::new(0.1, 0.1); mesh.vertex_count()]);
        let state = FlowState { t: 0.0, u: u.clone(), u0: u };
        let config = FlowConfig::new(1.0);
        assert!(matches!(
            flow_step(&state, &mesh, &config),
            Err(Error::DegenerateMap { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let mut c = FlowConfig::new(1.0);
        assert!(c.validate().is_ok());
        c.dt = 0.2;
        assert!(c.validate().is_err());
        c.dt = 0.01;
        c.solver_tol = 1e-6;
        assert!(c.validate().is_err());
    }
}
