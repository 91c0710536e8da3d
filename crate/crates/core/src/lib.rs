//! Running-coefficient Casimir trace toolkit.
//!
//! A separation-dependent coefficient `C(ln(d/ℓ*))` fixes the vacuum stress
//! between parallel plates. A static `C` gives a traceless stress; a running
//! `C` leaves a trace `-∂C/∂ln d / d⁴`. The [`scatter1d`] engine computes
//! `C` for Cantor stacks of scalar δ-plates, and [`logfit`] fits the
//! log-periodic running.

// `!(x > 0.0)` is the NaN-rejecting guard used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod logfit;
pub mod output;
pub mod prefractal;
pub mod quadrature;
pub mod scatter1d;
pub mod trace_core;

pub use error::{Error, Result};
pub use logfit::{fit_log_periodic, FitConfig, FitResult};
pub use prefractal::{in_window, min_level, PrefractalSpec};
pub use quadrature::{QuadratureSpec, Scheme};
pub use scatter1d::{cantor_stack, extract_coefficient, stack_energy_per_area, PlateStack};
pub use trace_core::{CoefficientModel, Harmonic, SpectralParams, ThermalState, TraceReport, VacuumStress};
