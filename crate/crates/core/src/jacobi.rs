//! Jacobi fields along target geodesics and the index form
//! E[J] = ∫₀¹ R(γ′,J)γ′·J + |∇J|² ds.
//!
//! In constant curvature −K² the tangential and normal components decouple:
//! the tangential part is affine in s and the normal scalar j satisfies
//! j″ = (KL)² j, L the geodesic speed. The minimizer over Jacobi fields
//! with J(0) = T carries the natural boundary condition ∇J(1) = 0 and its
//! energy equals K·L·tanh(K·L)·|T_⊥|², which is what `index_lower_bound`
//! evaluates; `index_min` recovers the same value numerically by shooting.

use crate::hyperbolic::{
    curvature_apply, exp_map, parallel_transport, DiskPoint, Space, TangentVector,
};

/// Constant-speed geodesic s ↦ exp(start, s·velocity), s ∈ [0, 1].
#[derive(Debug, Clone)]
pub struct Geodesic {
    pub space: Space,
    pub start: DiskPoint,
    pub velocity: TangentVector,
}

impl Geodesic {
    pub fn new(space: Space, start: DiskPoint, velocity: TangentVector) -> Self {
        Geodesic { space, start, velocity }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm(self.space)
    }

    pub fn point(&self, s: f64) -> DiskPoint {
        exp_map(self.space, self.start, &self.velocity.scale(s))
    }

    /// Metric-orthonormal frame (T̂, N̂) at the start, T̂ along the velocity.
    /// Panics for zero-speed geodesics.
    pub fn start_frame(&self) -> (TangentVector, TangentVector) {
        let speed = self.speed();
        assert!(speed > 0.0, "frame undefined on a zero-length geodesic");
        let t = self.velocity.scale(1.0 / speed);
        // 90-degree coordinate rotation preserves metric norm and angle in a
        // conformal metric.
        let n = TangentVector::new(self.start, -t.vy, t.vx);
        (t, n)
    }
}

/// Jacobi field sampled at S+1 uniform parameter values, with its covariant
/// derivative along the geodesic.
#[derive(Debug, Clone)]
pub struct JacobiField {
    pub j: Vec<TangentVector>,
    pub dj: Vec<TangentVector>,
    /// Scalar components (tangential, normal) of J and ∇J in the parallel
    /// frame, kept alongside the vectors for quadrature and shooting.
    comp_j: Vec<[f64; 2]>,
    comp_dj: Vec<[f64; 2]>,
}

impl JacobiField {
    pub fn node_count(&self) -> usize {
        self.j.len()
    }

    pub fn components(&self) -> (&[[f64; 2]], &[[f64; 2]]) {
        (&self.comp_j, &self.comp_dj)
    }
}

/// Max residual of the Jacobi equation ∇∇J − R(γ′,J)γ′ over interior nodes,
/// measured with 4th-order finite differences of the sampled ∇J.
pub fn jacobi_residual(g: &Geodesic, field: &JacobiField) -> f64 {
    let sp = g.space;
    let s_count = field.node_count() - 1;
    let h = 1.0 / s_count as f64;
    let speed = g.speed();
    let (cj, cdj) = field.components();
    let mut worst: f64 = 0.0;
    for i in 2..s_count.saturating_sub(1) {
        for axis in 0..2 {
            // d/ds of ∇J by 5-point stencil.
            let dd = (cdj[i - 2][axis] - 8.0 * cdj[i - 1][axis] + 8.0 * cdj[i + 1][axis]
                - cdj[i + 2][axis])
                / (12.0 * h);
            // R(γ′, J)γ′ in frame components: (0, (KL)² j_n).
            let r = if axis == 1 {
                (sp.k() * speed).powi(2) * cj[i][1]
            } else {
                0.0
            };
            worst = worst.max((dd - r).abs());
        }
    }
    worst
}

/// Integrate the Jacobi equation ∇∇J = R(γ′,J)γ′ with initial data
/// J(0) = j0, ∇J(0) = dj0, using RK4 in a parallel frame along γ.
pub fn jacobi_integrate(
    g: &Geodesic,
    j0: &TangentVector,
    dj0: &TangentVector,
    s_count: usize,
) -> JacobiField {
    assert!(s_count >= 16, "need at least 16 integration nodes");
    let sp = g.space;
    let speed = g.speed();

    if speed == 0.0 {
        // Degenerate geodesic: the equation reduces to ∇∇J = 0 at a point.
        let mut comp_j = Vec::with_capacity(s_count + 1);
        let mut comp_dj = Vec::with_capacity(s_count + 1);
        let mut j = Vec::with_capacity(s_count + 1);
        let mut dj = Vec::with_capacity(s_count + 1);
        for i in 0..=s_count {
            let s = i as f64 / s_count as f64;
            j.push(j0.add(&dj0.scale(s)));
            dj.push(*dj0);
            comp_j.push([0.0, 0.0]);
            comp_dj.push([0.0, 0.0]);
        }
        return JacobiField { j, dj, comp_j, comp_dj };
    }

    let (t0, n0) = g.start_frame();
    let decomp = |v: &TangentVector| [v.inner(sp, &t0), v.inner(sp, &n0)];
    let omega2 = (sp.k() * speed).powi(2);

    // State (a, b, a', b'): tangential/normal scalars in the parallel frame.
    let mut y = [decomp(j0)[0], decomp(j0)[1], decomp(dj0)[0], decomp(dj0)[1]];
    let deriv = |y: [f64; 4]| [y[2], y[3], 0.0, omega2 * y[1]];
    let h = 1.0 / s_count as f64;

    let mut comp_j = Vec::with_capacity(s_count + 1);
    let mut comp_dj = Vec::with_capacity(s_count + 1);
    comp_j.push([y[0], y[1]]);
    comp_dj.push([y[2], y[3]]);
    for _ in 0..s_count {
        let k1 = deriv(y);
        let k2 = deriv(add4(y, scale4(k1, 0.5 * h)));
        let k3 = deriv(add4(y, scale4(k2, 0.5 * h)));
        let k4 = deriv(add4(y, scale4(k3, h)));
        for i in 0..4 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        comp_j.push([y[0], y[1]]);
        comp_dj.push([y[2], y[3]]);
    }

    // Realize the scalars as tangent vectors through the transported frame.
    let mut j = Vec::with_capacity(s_count + 1);
    let mut dj = Vec::with_capacity(s_count + 1);
    for i in 0..=s_count {
        let s = i as f64 / s_count as f64;
        let p = g.point(s);
        let ts = parallel_transport(sp, g.start, p, &t0);
        let ns = parallel_transport(sp, g.start, p, &n0);
        j.push(frame_combine(&ts, &ns, comp_j[i]));
        dj.push(frame_combine(&ts, &ns, comp_dj[i]));
    }
    JacobiField { j, dj, comp_j, comp_dj }
}

fn add4(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

fn scale4(a: [f64; 4], c: f64) -> [f64; 4] {
    [a[0] * c, a[1] * c, a[2] * c, a[3] * c]
}

fn frame_combine(t: &TangentVector, n: &TangentVector, c: [f64; 2]) -> TangentVector {
    t.scale(c[0]).add(&n.scale(c[1]))
}

/// Index form E[J] = ∫₀¹ R(γ′,J)γ′·J + |∇J|² ds by composite Simpson on the
/// field's own grid (node count must be even).
pub fn index_form(g: &Geodesic, field: &JacobiField) -> f64 {
    let s_count = field.node_count() - 1;
    assert!(s_count % 2 == 0, "Simpson quadrature needs an even interval count");
    let sp = g.space;
    let speed = g.speed();
    let h = 1.0 / s_count as f64;

    let integrand = |i: usize| {
        let p = field.j[i].base;
        let gamma_prime = if speed == 0.0 {
            TangentVector::zero(p)
        } else {
            let t = parallel_transport(sp, g.start, p, &g.velocity);
            t
        };
        let r = curvature_apply(sp, &gamma_prime, &field.j[i]);
        r.inner(sp, &field.j[i]) + field.dj[i].inner(sp, &field.dj[i])
    };

    let mut sum = integrand(0) + integrand(s_count);
    for i in 1..s_count {
        sum += integrand(i) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

/// Minimum of the index form over Jacobi fields with J(0) = T, found by
/// shooting on ∇J(0) for the natural boundary condition ∇J(1) = 0.
/// Zero-length geodesics return 0 (the continuity limit).
pub fn index_min(g: &Geodesic, t_vec: &TangentVector, s_count: usize) -> f64 {
    if g.speed() == 0.0 {
        return 0.0;
    }
    let (t0, n0) = g.start_frame();
    let zero = TangentVector::zero(g.start);

    // Linearity in the initial data: shoot the base trajectory and the two
    // unit derivative trajectories, then solve the 2x2 system for ∇J(1) = 0.
    let base = jacobi_integrate(g, t_vec, &zero, s_count);
    let shoot_t = jacobi_integrate(g, &zero, &t0, s_count);
    let shoot_n = jacobi_integrate(g, &zero, &n0, s_count);

    let end = s_count;
    let b = base.components().1[end];
    let ct = shoot_t.components().1[end];
    let cn = shoot_n.components().1[end];
    // Solve [ct | cn] x = -b.
    let det = ct[0] * cn[1] - ct[1] * cn[0];
    let x0 = (-b[0] * cn[1] + b[1] * cn[0]) / det;
    let x1 = (-ct[0] * b[1] + ct[1] * b[0]) / det;

    let dj0 = t0.scale(x0).add(&n0.scale(x1));
    let field = jacobi_integrate(g, t_vec, &dj0, s_count);
    index_form(g, &field)
}

/// Closed-form lower bound for the index of a geodesic with curvature ≤ −b²:
/// b·L·tanh(b·L)·[|T|² − L⁻²(γ′·T)²]. Returns 0 for zero-length geodesics.
pub fn index_lower_bound(g: &Geodesic, t_vec: &TangentVector, b: f64) -> f64 {
    assert!(b > 0.0);
    let speed = g.speed();
    if speed == 0.0 {
        return 0.0;
    }
    let sp = g.space;
    let tt = t_vec.inner(sp, t_vec);
    let gt = g.velocity.inner(sp, t_vec);
    let normal_part = tt - gt * gt / (speed * speed);
    b * speed * (b * speed).tanh() * normal_part
}
