#![no_std]

//! Field-theoretic machinery of linear micromorphic elasticity.
//!
//! A micromorphic body carries, besides the displacement `u`, a rank-2
//! micro-distortion field `phi` describing rotation, shear, and dilatation
//! of an attached microstructure. This crate provides the full pointwise
//! toolchain for that theory in three dimensions:
//!
//! * dense small-tensor arithmetic with declared index symmetries
//!   ([`tensor`]),
//! * a minimal symbolic expression language with exact first and second
//!   derivatives ([`expr`], [`fields`]),
//! * the anisotropic constitutive model with the six tensors
//!   `A, B, C, E, F, G`, optional smooth position dependence, and an
//!   isotropic constructor ([`material`]),
//! * strains, stresses, energy, and Euler-Lagrange residuals
//!   ([`kinetics`]),
//! * the configurational currents: Eshelby stress, angular momentum with
//!   its orbital/spin split, the scaling flux, and the three balance-law
//!   source terms ([`currents`]),
//! * Gauss-Legendre surface and volume quadrature and the J, L, M
//!   integrals in independent surface and volume forms ([`integrals`]),
//! * manufactured-solution construction: arbitrary smooth `u`, `phi` are
//!   turned into exact solutions by back-computing the body force and
//!   body couple ([`scenarios`]).
//!
//! The crate is `no_std` (alloc only); all floating-point transcendental
//! functions go through `libm` so results are bit-identical regardless of
//! the host `std`.

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod currents;
pub mod expr;
pub mod fields;
pub mod integrals;
pub mod kinetics;
pub mod material;
pub mod rng;
pub mod scenarios;
pub mod tensor;

#[cfg(any(test, feature = "testkit"))]
pub mod testkit;

pub(crate) mod math;

pub use tensor::{SymmetryRelation, SymmetrySpec, Tensor, TensorError, DIM};
