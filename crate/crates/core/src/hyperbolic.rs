//! Geometry of the Poincaré disk with metric of constant curvature −K².
//!
//! The metric at z is (4/K²)|dz|²/(1−|z|²)², so K = 1 is the standard
//! hyperbolic metric on the unit disk. Möbius maps, distances, geodesics,
//! exponential/logarithm maps and parallel transport are all closed-form;
//! everything here is exact up to floating point.

use num_complex::Complex64;

/// Target (or domain) space: Poincaré disk with sectional curvature −K².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Space {
    k: f64,
}

impl Space {
    /// Disk of curvature −K². Panics unless K > 0.
    pub fn new(k: f64) -> Self {
        assert!(k > 0.0 && k.is_finite(), "curvature parameter must be positive");
        Space { k }
    }

    /// The standard hyperbolic disk (K = 1), used for the domain.
    pub fn unit() -> Self {
        Space { k: 1.0 }
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn curvature(&self) -> f64 {
        -self.k * self.k
    }

    /// Conformal factor λ(z): the metric is λ(z)² |dz|².
    pub fn conformal_factor(&self, p: DiskPoint) -> f64 {
        (2.0 / self.k) / (1.0 - p.norm_sq())
    }

    /// Hyperbolic distance d(z, w) = (2/K) artanh |(w−z)/(1−z̄w)|.
    pub fn distance(&self, z: DiskPoint, w: DiskPoint) -> f64 {
        let num = (w.to_complex() - z.to_complex()).norm();
        let den = (Complex64::new(1.0, 0.0) - z.to_complex().conj() * w.to_complex()).norm();
        (2.0 / self.k) * (num / den).atanh()
    }

    /// Euclidean radius of the circle at hyperbolic distance rho from 0.
    pub fn euclidean_radius(&self, rho: f64) -> f64 {
        (self.k * rho / 2.0).tanh()
    }
}

/// A point strictly inside the unit disk. Ideal boundary points are kept
/// as bare angles and never enter the metric formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPoint {
    pub x: f64,
    pub y: f64,
}

impl DiskPoint {
    pub const ORIGIN: DiskPoint = DiskPoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        debug_assert!(
            x * x + y * y < 1.0,
            "disk point must be strictly interior: |({x}, {y})| >= 1"
        );
        DiskPoint { x, y }
    }

    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn from_complex(c: Complex64) -> Self {
        DiskPoint::new(c.re, c.im)
    }

    /// Point at hyperbolic distance rho from the origin in direction angle.
    pub fn polar(sp: Space, rho: f64, angle: f64) -> Self {
        let r = sp.euclidean_radius(rho);
        DiskPoint::new(r * angle.cos(), r * angle.sin())
    }
}

/// Tangent vector at a disk point, stored in coordinate components.
/// Norms and inner products always use the metric at the base point.
#[derive(Debug, Clone, Copy)]
pub struct TangentVector {
    pub base: DiskPoint,
    pub vx: f64,
    pub vy: f64,
}

impl TangentVector {
    pub fn new(base: DiskPoint, vx: f64, vy: f64) -> Self {
        TangentVector { base, vx, vy }
    }

    pub fn zero(base: DiskPoint) -> Self {
        TangentVector { base, vx: 0.0, vy: 0.0 }
    }

    /// Vector at `base` with metric norm `len`, pointing in coordinate
    /// direction `angle`.
    pub fn from_polar(sp: Space, base: DiskPoint, len: f64, angle: f64) -> Self {
        let e = len / sp.conformal_factor(base);
        TangentVector::new(base, e * angle.cos(), e * angle.sin())
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(self.vx, self.vy)
    }

    pub fn scale(&self, c: f64) -> Self {
        TangentVector::new(self.base, c * self.vx, c * self.vy)
    }

    /// Componentwise sum; both vectors must sit in the same fiber.
    pub fn add(&self, other: &TangentVector) -> Self {
        debug_assert!(same_base(self.base, other.base));
        TangentVector::new(self.base, self.vx + other.vx, self.vy + other.vy)
    }

    pub fn inner(&self, sp: Space, other: &TangentVector) -> f64 {
        debug_assert!(same_base(self.base, other.base));
        let lam = sp.conformal_factor(self.base);
        lam * lam * (self.vx * other.vx + self.vy * other.vy)
    }

    pub fn norm(&self, sp: Space) -> f64 {
        sp.conformal_factor(self.base) * (self.vx * self.vx + self.vy * self.vy).sqrt()
    }

    /// Coordinates in the orthonormal frame (λ⁻¹∂x, λ⁻¹∂y) at the base.
    pub fn frame_coords(&self, sp: Space) -> [f64; 2] {
        let lam = sp.conformal_factor(self.base);
        [lam * self.vx, lam * self.vy]
    }

    /// Inverse of [`frame_coords`](Self::frame_coords).
    pub fn from_frame(sp: Space, base: DiskPoint, coords: [f64; 2]) -> Self {
        let lam = sp.conformal_factor(base);
        TangentVector::new(base, coords[0] / lam, coords[1] / lam)
    }
}

fn same_base(a: DiskPoint, b: DiskPoint) -> bool {
    (a.x - b.x).abs() < 1e-9 && (a.y - b.y).abs() < 1e-9
}

/// Orientation-preserving disk automorphism z ↦ e^{i rot} (z − a)/(1 − ā z).
/// `a` is the point sent to the origin.
#[derive(Debug, Clone, Copy)]
pub struct Mobius {
    pub a: DiskPoint,
    pub rot: f64,
}

impl Mobius {
    pub fn identity() -> Self {
        Mobius { a: DiskPoint::ORIGIN, rot: 0.0 }
    }

    /// The map sending `a` to the origin with no rotation.
    pub fn centering(a: DiskPoint) -> Self {
        Mobius { a, rot: 0.0 }
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.a.norm_sq().sqrt() < tol && normalize_angle(self.rot).min(2.0 * std::f64::consts::PI - normalize_angle(self.rot)) < tol
    }

    pub fn apply(&self, z: DiskPoint) -> DiskPoint {
        let zc = z.to_complex();
        let ac = self.a.to_complex();
        let w = Complex64::from_polar(1.0, self.rot) * (zc - ac) / (Complex64::new(1.0, 0.0) - ac.conj() * zc);
        // Automorphisms keep the open disk invariant; guard against rounding
        // pushing |w| to 1 for points extremely close to the rim.
        debug_assert!(w.norm_sqr() < 1.0 + 1e-12);
        DiskPoint { x: w.re, y: w.im }
    }

    /// Action on ideal boundary points, as angles.
    pub fn apply_boundary(&self, theta: f64) -> f64 {
        let zc = Complex64::from_polar(1.0, theta);
        let ac = self.a.to_complex();
        let w = Complex64::from_polar(1.0, self.rot) * (zc - ac) / (Complex64::new(1.0, 0.0) - ac.conj() * zc);
        normalize_angle(w.arg())
    }

    /// Derivative dφ/dz as a complex number (the map is holomorphic).
    pub fn derivative(&self, z: DiskPoint) -> Complex64 {
        let zc = z.to_complex();
        let ac = self.a.to_complex();
        let den = Complex64::new(1.0, 0.0) - ac.conj() * zc;
        Complex64::from_polar(1.0, self.rot) * (1.0 - ac.norm_sqr()) / (den * den)
    }

    /// Pushforward of a tangent vector: base moves, components multiply by
    /// the holomorphic derivative.
    pub fn pushforward(&self, v: &TangentVector) -> TangentVector {
        let d = self.derivative(v.base);
        let w = d * v.to_complex();
        TangentVector::new(self.apply(v.base), w.re, w.im)
    }

    /// Composition self ∘ other.
    pub fn compose(&self, other: &Mobius) -> Mobius {
        // Work with the 2x2 complex matrices [[e^{iθ}, −e^{iθ}a], [−ā, 1]].
        let (m1, m2) = (self.matrix(), other.matrix());
        let a = m1[0] * m2[0] + m1[1] * m2[2];
        let b = m1[0] * m2[1] + m1[1] * m2[3];
        let c = m1[2] * m2[0] + m1[3] * m2[2];
        let d = m1[2] * m2[1] + m1[3] * m2[3];
        Mobius::from_matrix(a, b, c, d)
    }

    pub fn inverse(&self) -> Mobius {
        let ac = self.a.to_complex();
        let a_inv = -Complex64::from_polar(1.0, self.rot) * ac;
        Mobius {
            a: DiskPoint::new(a_inv.re, a_inv.im),
            rot: normalize_angle(-self.rot),
        }
    }

    fn matrix(&self) -> [Complex64; 4] {
        let e = Complex64::from_polar(1.0, self.rot);
        let ac = self.a.to_complex();
        [e, -e * ac, -ac.conj(), Complex64::new(1.0, 0.0)]
    }

    fn from_matrix(a: Complex64, b: Complex64, _c: Complex64, d: Complex64) -> Mobius {
        // The fixed preimage of 0 is −b/a; the rotation follows from the
        // image of 0, which is b/d.
        let za = -b / a;
        debug_assert!(za.norm_sqr() < 1.0);
        let rot = if za.norm() > 1e-14 {
            (-(b / d) / za).arg()
        } else {
            (a / d).arg()
        };
        Mobius {
            a: DiskPoint::new(za.re, za.im),
            rot: normalize_angle(rot),
        }
    }
}

/// Reduce an angle to [0, 2π).
pub fn normalize_angle(t: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let mut r = t % tau;
    if r < 0.0 {
        r += tau;
    }
    if r >= tau {
        r = 0.0;
    }
    r
}

/// Riemannian exponential map: follow the unit-speed geodesic from z in
/// direction v/|v| for arclength |v|.
pub fn exp_map(sp: Space, z: DiskPoint, v: &TangentVector) -> DiskPoint {
    let t = v.norm(sp);
    if t == 0.0 {
        return z;
    }
    let m = Mobius::centering(z);
    let v0 = m.derivative(z) * v.to_complex();
    let dir = v0 / v0.norm();
    let w0 = dir * (sp.k * t / 2.0).tanh();
    m.inverse().apply(DiskPoint::from_complex(w0))
}

/// Riemannian logarithm: the tangent vector at z whose exponential is w.
/// Unique because the disk is a Hadamard surface.
pub fn log_map(sp: Space, z: DiskPoint, w: DiskPoint) -> TangentVector {
    let m = Mobius::centering(z);
    let w0 = m.apply(w).to_complex();
    let r = w0.norm();
    if r == 0.0 {
        return TangentVector::zero(z);
    }
    let t = (2.0 / sp.k) * r.atanh();
    let v0 = w0 / r * (sp.k * t / 2.0);
    let v = v0 / m.derivative(z);
    TangentVector::new(z, v.re, v.im)
}

/// Parallel transport of v from z to w along the connecting geodesic.
pub fn parallel_transport(sp: Space, z: DiskPoint, w: DiskPoint, v: &TangentVector) -> TangentVector {
    let _ = sp; // transport is unchanged under constant metric rescaling
    if z == w {
        return TangentVector::new(w, v.vx, v.vy);
    }
    let centered = Mobius::centering(z);
    let w0 = centered.apply(w).to_complex();
    let m = Mobius { a: z, rot: -w0.arg() };
    let r = w0.norm();
    // Along the radial geodesic 0 → r the coordinate direction is parallel;
    // only the conformal factor rescales the components.
    let v0 = m.derivative(z) * v.to_complex();
    let vr = v0 * (1.0 - r * r);
    let vw = vr / m.derivative(w);
    TangentVector::new(w, vw.re, vw.im)
}

/// Unit complex factor by which orthonormal-frame coordinates rotate under
/// parallel transport z → w.
pub fn transport_rotation(sp: Space, z: DiskPoint, w: DiskPoint) -> Complex64 {
    let e1 = TangentVector::from_frame(sp, z, [1.0, 0.0]);
    let t = parallel_transport(sp, z, w, &e1);
    let c = t.frame_coords(sp);
    let rho = Complex64::new(c[0], c[1]);
    // Transport is an isometry, so ρ is a unit complex number up to rounding.
    rho / rho.norm()
}

/// Curvature tensor action R(X, v)X = K² (|X|² v − (X·v) X), inner products
/// in the metric. The sign convention makes v · R(X,v)X ≥ 0, so the
/// curvature contribution to the linearized flow operator is positive
/// semidefinite.
pub fn curvature_apply(sp: Space, x: &TangentVector, v: &TangentVector) -> TangentVector {
    debug_assert!(same_base(x.base, v.base));
    let lam = sp.conformal_factor(x.base);
    let c = sp.k * sp.k * lam * lam;
    let xx = x.vx * x.vx + x.vy * x.vy;
    let xv = x.vx * v.vx + x.vy * v.vy;
    TangentVector::new(
        x.base,
        c * (xx * v.vx - xv * x.vx),
        c * (xx * v.vy - xv * x.vy),
    )
}
