//! Lumped nonlinear circuit engine: modified nodal analysis with DC, AC and
//! fixed-step trapezoidal transient analyses.

mod ac;
mod dc;
mod kcl;
pub(crate) mod mna;
mod netlist;
mod text;
mod transient;

use thiserror::Error;

use crate::diode::DiodeCardError;

pub use ac::{solve_ac, AcPoint, AcSolution};
pub use dc::{solve_dc, OperatingPoint};
pub use mna::GMIN;
pub use netlist::{
    build_netlist, is_ground, CircuitDescription, Element, ElementKind, ElementSpec, Netlist,
    SourceWaveform, GROUND,
};
pub use text::{parse_description, parse_netlist};
pub use transient::{
    sample_count, solve_transient, solve_transient_with, Advisory, InitialState, Probe,
    TransientOptions, TransientStepper, Waveform,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("circuit has no elements")]
    EmptyCircuit,
    #[error("element {element} references unknown node `{node}`")]
    DanglingNode { element: String, node: String },
    #[error("nodes not connected to ground: {}", nodes.join(", "))]
    FloatingSubcircuit { nodes: Vec<String> },
    #[error("element {element} has non-positive value {value}")]
    NonPositiveValue { element: String, value: f64 },
    #[error("duplicate element name {0}")]
    DuplicateElement(String),
    #[error("element {element}: {reason}")]
    InvalidElement { element: String, reason: String },
    #[error("element {element}: {source}")]
    InvalidModel {
        element: String,
        #[source]
        source: DiodeCardError,
    },
    #[error("Newton iteration did not converge{}: residual {residual:e} after {iterations} iterations",
        time.map(|t| format!(" at t = {t:e} s")).unwrap_or_default())]
    NoConvergence {
        time: Option<f64>,
        residual: f64,
        iterations: usize,
    },
    #[error("singular MNA matrix (voltage-source loop or floating node)")]
    SingularMatrix,
    #[error("nonlinear device {0} needs an operating point for AC analysis")]
    NonlinearWithoutOP(String),
    #[error("`{0}` is not a voltage source in this netlist")]
    UnknownPort(String),
    #[error("invalid analysis request: {0}")]
    InvalidAnalysis(String),
    #[error("netlist line {line}: {reason}")]
    Parse { line: usize, reason: String },
}
