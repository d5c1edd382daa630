//! Quantum Boltzmann solver for four distinguishable spin-½ fermion species
//! with spin-dependent pair-conversion interactions.
//!
//! The state is a 2×2 Hermitian Wigner matrix per species and energy shell.
//! The numeric core is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the aliases at the crate root fix it to `f64`.

pub mod collision;
pub mod conservation;
pub mod entropy;
pub mod equilibrium;
pub mod error;
pub mod grid;
pub mod initial;
pub mod integrator;
pub mod model;
pub mod reference;
pub mod scalar;
pub mod spinalg;

pub use error::{Error, Result};
pub use conservation::{Functional, StructureKind};
pub use integrator::StepConfig;
pub use model::{Preset, Species};
pub use scalar::Real;

pub type SpinBlock = spinalg::SpinBlock<f64>;
pub type PairBlock = spinalg::PairBlock<f64>;
pub type EnergyGrid = grid::EnergyGrid<f64>;
pub type WignerField = grid::WignerField<f64>;
pub type MomentWeights = grid::MomentWeights<f64>;
pub type Masses = model::Masses<f64>;
pub type InteractionSet = model::InteractionSet<f64>;
pub type VOp = model::VOp<f64>;
pub type GaugeRotation = model::GaugeRotation<f64>;
pub type Model = model::Model<f64>;
pub type CollisionKernel = collision::CollisionKernel<f64>;
pub type CollisionOutput = collision::CollisionOutput<f64>;
pub type EquilibriumParams = equilibrium::EquilibriumParams<f64>;
pub type StructureClass = conservation::StructureClass<f64>;
pub type ConservedVector = conservation::ConservedVector<f64>;
pub type FitReport = equilibrium::FitReport<f64>;
pub type StateSpec = initial::StateSpec<f64>;
pub type Trajectory = integrator::Trajectory<f64>;
pub type Sample = integrator::Sample<f64>;
pub type Diagnostics = integrator::Diagnostics<f64>;
