//! Riesz-type nonlocal energies on planar polygons, their boundary potentials,
//! and the area-preserving deformation flows along which the energy is monotone.
pub mod geometry;
pub mod kernel;
pub mod quadrature;
pub mod flow;
pub mod energy;
pub mod verify;
