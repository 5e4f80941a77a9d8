//! Equivalent circuit of a multi-turn complementary spiral resonator (CSR).
//!
//! The spiral etched in the ground plane is modelled as a parallel tank:
//!
//! ```text
//! L_o = 2 (L + W) L_pul          outer-loop inductance
//! L_s = L_o / turns              spiral inductance
//! C_c = 4 (ε0/μ0) L_s = 4 L_s / η0²
//! f_o = 1 / (2π √(L_s C_c))
//! ```
//!
//! Because `C_c` is proportional to `L_s`, the resonance collapses to
//! `f_o = η0 / (4π L_s)`, i.e. `f_o · L_s` is the same for every geometry.
//! That closed form drives [`csr_inverse_design`].

use std::f64::consts::{PI, TAU};

use thiserror::Error;

use crate::units::ETA0;

pub const DEFAULT_TURNS: u32 = 3;
/// 1 nH/mm.
pub const DEFAULT_INDUCTANCE_PER_LENGTH: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CsrError {
    #[error("invalid CSR geometry: {0}")]
    InvalidGeometry(String),
}

fn positive(name: &str, v: f64) -> Result<(), CsrError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CsrError::InvalidGeometry(format!("{name} must be positive, got {v}")))
    }
}

/// Spiral rectangle, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsrGeometry {
    /// Rectangle length (m).
    pub length: f64,
    /// Rectangle width (m).
    pub width: f64,
    pub turns: u32,
    /// Per-unit-length inductance (H/m).
    pub inductance_per_length: f64,
}

impl CsrGeometry {
    pub fn new(length: f64, width: f64, inductance_per_length: f64) -> Self {
        Self {
            length,
            width,
            turns: DEFAULT_TURNS,
            inductance_per_length,
        }
    }

    pub fn validate(&self) -> Result<(), CsrError> {
        positive("length", self.length)?;
        positive("width", self.width)?;
        positive("per-unit-length inductance", self.inductance_per_length)?;
        if self.turns == 0 {
            return Err(CsrError::InvalidGeometry("turns must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsrEquivalent {
    /// Outer-loop inductance (H).
    pub outer_inductance: f64,
    /// Spiral inductance (H).
    pub spiral_inductance: f64,
    /// Coupling capacitance (F).
    pub coupling_capacitance: f64,
    /// Resonant frequency (Hz).
    pub resonant_frequency: f64,
}

pub fn csr_equivalent(geom: &CsrGeometry) -> Result<CsrEquivalent, CsrError> {
    geom.validate()?;
    let outer = 2.0 * (geom.length + geom.width) * geom.inductance_per_length;
    let spiral = outer / geom.turns as f64;
    let coupling = 4.0 * spiral / (ETA0 * ETA0);
    Ok(CsrEquivalent {
        outer_inductance: outer,
        spiral_inductance: spiral,
        coupling_capacitance: coupling,
        resonant_frequency: csr_resonant_frequency(spiral, coupling)?,
    })
}

/// 1 / (2π √(L C)).
pub fn csr_resonant_frequency(inductance: f64, capacitance: f64) -> Result<f64, CsrError> {
    positive("inductance", inductance)?;
    positive("capacitance", capacitance)?;
    Ok(1.0 / (TAU * (inductance * capacitance).sqrt()))
}

/// Geometry resonating at `f_target` with the default three turns.
/// `aspect` is W/L.
pub fn csr_inverse_design(
    f_target: f64,
    inductance_per_length: f64,
    aspect: f64,
) -> Result<CsrGeometry, CsrError> {
    csr_inverse_design_with_turns(f_target, inductance_per_length, aspect, DEFAULT_TURNS)
}

pub fn csr_inverse_design_with_turns(
    f_target: f64,
    inductance_per_length: f64,
    aspect: f64,
    turns: u32,
) -> Result<CsrGeometry, CsrError> {
    positive("target frequency", f_target)?;
    positive("per-unit-length inductance", inductance_per_length)?;
    positive("aspect ratio", aspect)?;
    if turns == 0 {
        return Err(CsrError::InvalidGeometry("turns must be >= 1".into()));
    }
    let spiral = ETA0 / (4.0 * PI * f_target);
    let outer = turns as f64 * spiral;
    let perimeter_half = outer / (2.0 * inductance_per_length);
    let length = perimeter_half / (1.0 + aspect);
    Ok(CsrGeometry {
        length,
        width: aspect * length,
        turns,
        inductance_per_length,
    })
}

/// `f_o · L_s` for every geometry, η0 / (4π) ≈ 29.979 Ω.
pub fn frequency_inductance_product() -> f64 {
    ETA0 / (4.0 * PI)
}
