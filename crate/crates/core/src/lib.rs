//! Design and simulation toolkit for miniaturized patch rectennas.
//!
//! * [`circuit`]: MNA engine (DC, AC, trapezoidal transient) with a Schottky diode device
//! * [`diode`]: junction diode model and model-card files
//! * [`csr`]: complementary spiral resonator equivalent circuit
//! * [`patch`]: rectangular microstrip patch synthesis
//! * [`matching`]: L-section synthesis and ABCD cascade verification
//! * [`rectifier`]: large-signal rectifier steady state, sweeps and auto-matching
//! * [`link`]: Friis link budget and end-to-end DC estimate

pub mod circuit;
pub mod csr;
pub mod diode;
pub mod link;
pub mod matching;
pub mod patch;
pub mod rectifier;
pub mod units;
