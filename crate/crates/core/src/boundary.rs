//! Sampled monotone degree-one circle maps û: S¹ → S¹.
//!
//! A map is stored as M lifted samples at uniform angles and evaluated by
//! periodic piecewise-linear interpolation. Generators sample analytic
//! formulas (identity, Möbius boundary traces, sinusoidal perturbations and
//! their compositions); sampling density is the caller's accuracy knob.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::hyperbolic::Mobius;

const TAU: f64 = 2.0 * PI;

/// Monotone degree-one circle map sampled at M uniform angles.
///
/// `lift[i]` holds the lifted image of θᵢ = 2πi/M; the lift is strictly
/// increasing and advances by exactly 2π over one period.
#[derive(Debug, Clone)]
pub struct BoundaryMap {
    lift: Vec<f64>,
}

impl BoundaryMap {
    pub const MIN_SAMPLES: usize = 64;

    /// Build from lifted samples at uniform angles. Checks monotonicity and
    /// the degree-one condition.
    pub fn from_lifted_samples(lift: Vec<f64>) -> Result<Self> {
        if lift.len() < Self::MIN_SAMPLES {
            return Err(Error::InvalidConfig(format!(
                "boundary map needs at least {} samples, got {}",
                Self::MIN_SAMPLES,
                lift.len()
            )));
        }
        let m = lift.len();
        for i in 0..m {
            let next = if i + 1 < m { lift[i + 1] } else { lift[0] + TAU };
            if next <= lift[i] {
                return Err(Error::MonotonicityViolation(format!(
                    "lifted samples not strictly increasing at index {i}"
                )));
            }
        }
        if !lift.iter().all(|v| v.is_finite()) {
            return Err(Error::Parse("non-finite boundary sample".into()));
        }
        Ok(BoundaryMap { lift })
    }

    pub fn sample_count(&self) -> usize {
        self.lift.len()
    }

    pub fn lifted_samples(&self) -> &[f64] {
        &self.lift
    }

    /// Lifted evaluation: eval(θ + 2πn) = eval(θ) + 2πn, piecewise linear
    /// between nodes and exact at nodes.
    pub fn eval_lifted(&self, theta: f64) -> f64 {
        let m = self.lift.len() as f64;
        let winding = (theta / TAU).floor();
        let frac_angle = theta - winding * TAU;
        let pos = frac_angle / TAU * m;
        let i = (pos.floor() as usize).min(self.lift.len() - 1);
        let frac = pos - i as f64;
        let lo = self.lift[i];
        let hi = if i + 1 < self.lift.len() { self.lift[i + 1] } else { self.lift[0] + TAU };
        lo + (hi - lo) * frac + winding * TAU
    }

    /// Evaluation as an angle in [0, 2π).
    pub fn eval(&self, theta: f64) -> f64 {
        crate::hyperbolic::normalize_angle(self.eval_lifted(theta))
    }

    /// Sup-distance to another boundary map, measured on the union of both
    /// sample grids (angles compared in lifted coordinates).
    pub fn sup_distance(&self, other: &BoundaryMap) -> f64 {
        let n = self.sample_count().max(other.sample_count());
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let th = i as f64 / n as f64 * TAU;
            let d = (self.eval_lifted(th) - other.eval_lifted(th)).abs();
            worst = worst.max(d.min(TAU - d));
        }
        worst
    }
}

/// Analytic test-map generators.
#[derive(Debug, Clone)]
pub enum BoundaryMapKind {
    Identity,
    /// Boundary trace of a disk automorphism.
    MobiusTrace(Mobius),
    /// θ ↦ θ + eps·sin(k·θ); monotone iff |eps·k| < 1.
    Sine { eps: f64, k: u32 },
    /// Function composition, outermost first: [f, g] samples f(g(θ)).
    Composed(Vec<BoundaryMapKind>),
}

impl BoundaryMapKind {
    fn check(&self) -> Result<()> {
        match self {
            BoundaryMapKind::Sine { eps, k } => {
                if (eps * f64::from(*k)).abs() >= 1.0 {
                    return Err(Error::MonotonicityViolation(format!(
                        "sine boundary map with |eps*k| = {} >= 1",
                        (eps * f64::from(*k)).abs()
                    )));
                }
                Ok(())
            }
            BoundaryMapKind::Composed(parts) => parts.iter().try_for_each(|p| p.check()),
            _ => Ok(()),
        }
    }

    /// Exact lifted evaluation of the analytic formula.
    pub fn eval_lifted(&self, theta: f64) -> f64 {
        match self {
            BoundaryMapKind::Identity => theta,
            BoundaryMapKind::MobiusTrace(m) => {
                // Continuous lift pinned by the image of the winding base point.
                let winding = (theta / TAU).floor();
                let frac = theta - winding * TAU;
                let base = m.apply_boundary(0.0);
                let raw = m.apply_boundary(frac);
                let mut unwrapped = raw;
                if unwrapped < base - 1e-12 {
                    unwrapped += TAU;
                }
                unwrapped + winding * TAU
            }
            BoundaryMapKind::Sine { eps, k } => theta + eps * (f64::from(*k) * theta).sin(),
            BoundaryMapKind::Composed(parts) => {
                let mut v = theta;
                for part in parts.iter().rev() {
                    v = part.eval_lifted(v);
                }
                v
            }
        }
    }
}

/// Sample an analytic generator at `m` uniform angles.
pub fn make_boundary_map(kind: &BoundaryMapKind, m: usize) -> Result<BoundaryMap> {
    kind.check()?;
    let lift: Vec<f64> = (0..m)
        .map(|i| kind.eval_lifted(i as f64 / m as f64 * TAU))
        .collect();
    // Normalize the lift so the first sample lands in [0, 2π).
    let shift = (lift[0] / TAU).floor() * TAU;
    let lift = lift.into_iter().map(|v| v - shift).collect();
    BoundaryMap::from_lifted_samples(lift)
}

/// Quasisymmetry constant: max over sampled θ and dyadic scales t of
/// max(ρ, 1/ρ), ρ = [û(θ+t) − û(θ)] / [û(θ) − û(θ−t)] in lifted coordinates.
pub fn quasisymmetry_constant(bm: &BoundaryMap, theta_samples: usize, scales: usize) -> f64 {
    let mut worst: f64 = 1.0;
    for level in 0..scales {
        let t = PI / 2.0 / (1 << level) as f64;
        for i in 0..theta_samples {
            let th = i as f64 / theta_samples as f64 * TAU;
            let num = bm.eval_lifted(th + t) - bm.eval_lifted(th);
            let den = bm.eval_lifted(th) - bm.eval_lifted(th - t);
            let rho = num / den;
            worst = worst.max(rho.max(1.0 / rho));
        }
    }
    worst
}

/// Write in the text format `# boundary-map v1 M=<count>` + `theta,phi` lines.
pub fn write_boundary_map<W: Write>(bm: &BoundaryMap, mut w: W) -> Result<()> {
    writeln!(w, "# boundary-map v1 M={}", bm.sample_count())?;
    for (i, phi) in bm.lifted_samples().iter().enumerate() {
        let theta = i as f64 / bm.sample_count() as f64 * TAU;
        writeln!(w, "{},{}", theta, phi)?;
    }
    Ok(())
}

pub fn read_boundary_map<R: BufRead>(r: R) -> Result<BoundaryMap> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty boundary-map file".into()))??;
    if !header.starts_with("# boundary-map v1") {
        return Err(Error::Parse(format!("unexpected boundary-map header: {header}")));
    }
    let mut lift = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split(',');
        let _theta: f64 = parse_field(it.next(), "theta")?;
        let phi: f64 = parse_field(it.next(), "phi")?;
        lift.push(phi);
    }
    BoundaryMap::from_lifted_samples(lift)
}

fn parse_field(s: Option<&str>, name: &str) -> Result<f64> {
    s.ok_or_else(|| Error::Parse(format!("missing field {name}")))?
        .trim()
        .parse()
        .map_err(|e| Error::Parse(format!("bad {name}: {e}")))
}
