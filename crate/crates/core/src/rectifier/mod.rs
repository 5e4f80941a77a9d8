//! Large-signal rectifier characterization by periodic steady-state
//! transient simulation.
//!
//! The test bench is a Thevenin source (`VS` in series with `RS`) driving the
//! port node, an optional L-section between the port and the rectifier input,
//! and a back end chosen from a [`TopologyRegistry`]:
//!
//! ```text
//! src --RS-- port --[L-section]-- in --[topology]-- out
//! ```
//!
//! "Input power" is the power available from the source, so the sine
//! amplitude is `√(8 R_src P)`.

mod matching;
mod steady;
mod sweep;
mod topology;

use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{
    build_netlist, CircuitDescription, CircuitError, ElementKind, Netlist, SourceWaveform, GROUND,
};
use crate::diode::DiodeModelCard;
use crate::matching::{Component, LSection, MatchError, NetworkElement};
use crate::units::dbm_to_watts;

pub use matching::{auto_match, MatchOutcome, MATCH_TARGET_GAMMA, MAX_MATCH_ITERATIONS};
pub use steady::{large_signal_input_impedance, steady_state};
pub use sweep::{power_sweep, read_sweep_csv, write_sweep_csv, SweepFailure, SweepResult, SweepRow,
    SWEEP_CSV_HEADER};
pub use topology::{
    RectifierTopology, ResistiveLoad, SeriesDiode, ShuntDiode, TopologyRegistry, VoltageDoubler,
};

pub const SOURCE_NODE: &str = "src";
pub const PORT_NODE: &str = "port";
pub const INPUT_NODE: &str = "in";
pub const OUTPUT_NODE: &str = "out";
pub const SOURCE_ELEMENT: &str = "VS";
pub const SOURCE_RESISTOR: &str = "RS";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RectifierError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Matching(#[from] MatchError),
    #[error("no periodic steady state after {cycles} cycles (last relative V_dc change {last_change:.3e})")]
    NoConvergence { cycles: usize, last_change: f64 },
    #[error("matching did not reach |gamma| < {target} in {iterations} iterations (best {best_gamma:.4})")]
    MatchNoConvergence {
        best_gamma: f64,
        iterations: usize,
        best: Option<LSection>,
        target: f64,
    },
    #[error("unknown rectifier topology `{0}`")]
    UnknownTopology(String),
    #[error("invalid rectifier spec: {0}")]
    InvalidSpec(String),
}

/// Everything that defines one rectifier test bench.
#[derive(Debug, Clone)]
pub struct RectifierSpec {
    pub topology: Arc<dyn RectifierTopology>,
    pub diode: DiodeModelCard,
    pub matching: Option<LSection>,
    /// Smoothing capacitance across the load (F).
    pub smoothing_capacitance: f64,
    /// Load resistance (Ω).
    pub load_resistance: f64,
    /// Thevenin source resistance (Ω).
    pub source_impedance: f64,
    /// Drive frequency (Hz).
    pub frequency: f64,
    /// Series coupling / DC-blocking capacitance used by some back ends (F).
    pub coupling_capacitance: f64,
    /// RF choke used by some back ends (H).
    pub choke_inductance: f64,
    pub steps_per_cycle: usize,
    pub max_cycles: usize,
    /// Relative cycle-to-cycle V_dc change accepted as converged.
    pub tolerance: f64,
    /// Accelerate the slow output time constant by extrapolating the
    /// geometric approach to the periodic state.
    pub extrapolate: bool,
}

impl Default for RectifierSpec {
    fn default() -> Self {
        Self {
            topology: Arc::new(SeriesDiode),
            diode: DiodeModelCard::default(),
            matching: None,
            smoothing_capacitance: 100e-12,
            load_resistance: 10e3,
            source_impedance: 50.0,
            frequency: 1.8e9,
            coupling_capacitance: 100e-12,
            choke_inductance: 100e-9,
            steps_per_cycle: 200,
            max_cycles: 2000,
            tolerance: 1e-5,
            extrapolate: true,
        }
    }
}

impl RectifierSpec {
    pub fn with_topology(topology: Arc<dyn RectifierTopology>) -> Self {
        Self {
            topology,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RectifierError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(RectifierError::InvalidSpec(format!("{name} must be positive, got {v}")))
            }
        };
        positive("load resistance", self.load_resistance)?;
        positive("smoothing capacitance", self.smoothing_capacitance)?;
        positive("source impedance", self.source_impedance)?;
        positive("frequency", self.frequency)?;
        positive("coupling capacitance", self.coupling_capacitance)?;
        positive("choke inductance", self.choke_inductance)?;
        positive("tolerance", self.tolerance)?;
        if self.steps_per_cycle < 8 {
            return Err(RectifierError::InvalidSpec(format!(
                "need at least 8 steps per cycle, got {}",
                self.steps_per_cycle
            )));
        }
        if self.max_cycles < 3 {
            return Err(RectifierError::InvalidSpec("max_cycles must be >= 3".into()));
        }
        self.diode
            .validate()
            .map_err(|e| RectifierError::InvalidSpec(e.to_string()))?;
        Ok(())
    }

    /// Sine amplitude delivering `p_dbm` of available power.
    pub fn source_amplitude(&self, p_dbm: f64) -> f64 {
        (8.0 * self.source_impedance * dbm_to_watts(p_dbm)).sqrt()
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }

    pub fn time_step(&self) -> f64 {
        self.period() / self.steps_per_cycle as f64
    }
}

/// Steady-state figures of merit at one drive level.
#[derive(Debug, Clone, PartialEq)]
pub struct RectifierResult {
    pub input_power_dbm: f64,
    /// Cycle-averaged output voltage (V).
    pub v_dc: f64,
    /// V_dc² / (R_load P_available).
    pub efficiency: f64,
    /// Peak-to-peak output voltage over the final cycle (V).
    pub ripple: f64,
    /// Fundamental-frequency impedance looking into the port (Ω).
    pub z_in: Complex64,
    /// Cycles actually simulated.
    pub cycles_to_converge: usize,
    /// State extrapolations applied on the way.
    pub extrapolations: usize,
}

/// Assembled bench plus the names needed to probe it.
#[derive(Debug, Clone)]
pub struct Bench {
    pub netlist: Netlist,
    pub output_node: String,
}

fn push_network(c: &mut CircuitDescription, network: &[NetworkElement], port: &str, input: &str) {
    // each series element opens a new node; the last one lands on `input`
    let n_series = network
        .iter()
        .filter(|e| matches!(e, NetworkElement::Series(_)))
        .count();
    let mut node = port.to_string();
    let mut seen = 0;
    for (i, e) in network.iter().enumerate() {
        let kind = |comp: Component| match comp {
            Component::Resistor(r) => ElementKind::Resistor(r),
            Component::Inductor(l) => ElementKind::Inductor(l),
            Component::Capacitor(cap) => ElementKind::Capacitor(cap),
        };
        match *e {
            NetworkElement::Series(comp) => {
                seen += 1;
                let next = if seen == n_series {
                    input.to_string()
                } else {
                    format!("m{seen}")
                };
                c.declare(next.clone());
                c.push(&format!("XM{i}"), &node, &next, kind(comp));
                node = next;
            }
            NetworkElement::Shunt(comp) => {
                c.push(&format!("XM{i}"), &node, GROUND, kind(comp));
            }
        }
    }
}

/// Builds the bench netlist driven at `p_dbm`.
pub fn build_bench(spec: &RectifierSpec, p_dbm: f64) -> Result<Bench, RectifierError> {
    spec.validate()?;
    if !p_dbm.is_finite() {
        return Err(RectifierError::InvalidSpec(format!("input power {p_dbm} dBm")));
    }
    let mut c = CircuitDescription::new().nodes([SOURCE_NODE, PORT_NODE]);
    c.push(
        SOURCE_ELEMENT,
        SOURCE_NODE,
        GROUND,
        ElementKind::VoltageSource(SourceWaveform::sine(spec.source_amplitude(p_dbm), spec.frequency)),
    );
    c.push(
        SOURCE_RESISTOR,
        SOURCE_NODE,
        PORT_NODE,
        ElementKind::Resistor(spec.source_impedance),
    );
    let network = spec.matching.map(|m| m.elements()).unwrap_or_default();
    let has_series = network
        .iter()
        .any(|e| matches!(e, NetworkElement::Series(_)));
    let input = if has_series { INPUT_NODE } else { PORT_NODE };
    push_network(&mut c, &network, PORT_NODE, input);
    let output_node = spec.topology.build(&mut c, input, OUTPUT_NODE, spec)?;
    let netlist = build_netlist(&c)?;
    Ok(Bench {
        netlist,
        output_node,
    })
}
