//! Numerical laboratory for harmonic maps between hyperbolic disks.
//!
//! The pieces fit together like this: [`hyperbolic`] provides closed-form
//! Poincaré-disk geometry (Möbius maps, exp/log, parallel transport,
//! curvature); [`mesh`] triangulates a truncated hyperbolic disk and
//! [`calculus`] discretizes differentials, tension fields and the scalar
//! Laplace–Beltrami operator on it; [`boundary`] and [`extension`] build
//! circle maps and their conformal-barycenter extensions into the disk;
//! [`flow`] relaxes a map toward a harmonic one by repeatedly solving the
//! linearized elliptic system −Δv + R(∂ⁱu, v)∂ᵢu = Δu and stepping along v,
//! which makes the tension field decay like e^{−t}; [`jacobi`] handles
//! Jacobi fields and index-form bounds along target geodesics; [`verify`]
//! bundles the end-to-end numerical checks behind machine-readable reports.

pub mod boundary;
pub mod calculus;
pub mod error;
pub mod extension;
pub mod field;
pub mod flow;
pub mod hyperbolic;
pub mod jacobi;
pub mod mesh;
pub mod sparse;
pub mod verify;

pub use error::{Error, Result};
pub use hyperbolic::{DiskPoint, Mobius, Space, TangentVector};
