//! Rectifier back ends, selectable by name.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::circuit::{CircuitDescription, ElementKind, GROUND};

use super::{RectifierError, RectifierSpec};

/// A rectifier back end: everything between the matched input node and
/// ground, including the load.
pub trait RectifierTopology: Send + Sync {
    /// Registry key, e.g. `series-diode`.
    fn name(&self) -> &str;

    fn description(&self) -> &str {
        ""
    }

    /// Adds the back end between `input` and ground and returns the node
    /// whose cycle average is the DC output. `output` is a free node name the
    /// topology may use for it.
    fn build(
        &self,
        circuit: &mut CircuitDescription,
        input: &str,
        output: &str,
        spec: &RectifierSpec,
    ) -> Result<String, RectifierError>;
}

impl fmt::Debug for dyn RectifierTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RectifierTopology({})", self.name())
    }
}

fn smoothing_and_load(c: &mut CircuitDescription, out: &str, spec: &RectifierSpec) {
    c.declare(out);
    c.push("CS", out, GROUND, ElementKind::Capacitor(spec.smoothing_capacitance));
    c.push("RL", out, GROUND, ElementKind::Resistor(spec.load_resistance));
}

/// Single series diode feeding a shunt smoothing capacitor and the load.
#[derive(Debug, Default, Clone, Copy)]
pub struct SeriesDiode;

impl RectifierTopology for SeriesDiode {
    fn name(&self) -> &str {
        "series-diode"
    }

    fn description(&self) -> &str {
        "series diode, shunt smoothing capacitor, load"
    }

    fn build(
        &self,
        c: &mut CircuitDescription,
        input: &str,
        output: &str,
        spec: &RectifierSpec,
    ) -> Result<String, RectifierError> {
        c.declare(output);
        c.push("D1", input, output, ElementKind::Diode(spec.diode));
        smoothing_and_load(c, output, spec);
        Ok(output.to_string())
    }
}

/// DC-blocking capacitor, diode to ground, RF choke into the smoothing
/// capacitor and load.
#[derive(Debug, Default, Clone, Copy)]
pub struct ShuntDiode;

impl RectifierTopology for ShuntDiode {
    fn name(&self) -> &str {
        "shunt-diode"
    }

    fn description(&self) -> &str {
        "blocking capacitor, shunt diode, choke, smoothing capacitor, load"
    }

    fn build(
        &self,
        c: &mut CircuitDescription,
        input: &str,
        output: &str,
        spec: &RectifierSpec,
    ) -> Result<String, RectifierError> {
        c.declare("a");
        c.push("CB", input, "a", ElementKind::Capacitor(spec.coupling_capacitance));
        c.push("D1", GROUND, "a", ElementKind::Diode(spec.diode));
        c.declare(output);
        c.push("LC", "a", output, ElementKind::Inductor(spec.choke_inductance));
        smoothing_and_load(c, output, spec);
        Ok(output.to_string())
    }
}

/// Clamp diode followed by a peak-detecting diode (Greinacher doubler).
#[derive(Debug, Default, Clone, Copy)]
pub struct VoltageDoubler;

impl RectifierTopology for VoltageDoubler {
    fn name(&self) -> &str {
        "voltage-doubler"
    }

    fn description(&self) -> &str {
        "coupling capacitor, clamp diode, series diode, smoothing capacitor, load"
    }

    fn build(
        &self,
        c: &mut CircuitDescription,
        input: &str,
        output: &str,
        spec: &RectifierSpec,
    ) -> Result<String, RectifierError> {
        c.declare("a");
        c.push("C1", input, "a", ElementKind::Capacitor(spec.coupling_capacitance));
        c.push("D1", GROUND, "a", ElementKind::Diode(spec.diode));
        c.declare(output);
        c.push("D2", "a", output, ElementKind::Diode(spec.diode));
        smoothing_and_load(c, output, spec);
        Ok(output.to_string())
    }
}

/// The load resistance alone, for calibrating the extraction.
#[derive(Debug, Default, Clone, Copy)]
pub struct ResistiveLoad;

impl RectifierTopology for ResistiveLoad {
    fn name(&self) -> &str {
        "resistive-load"
    }

    fn description(&self) -> &str {
        "linear load resistor at the input"
    }

    fn build(
        &self,
        c: &mut CircuitDescription,
        input: &str,
        _output: &str,
        spec: &RectifierSpec,
    ) -> Result<String, RectifierError> {
        c.push("RL", input, GROUND, ElementKind::Resistor(spec.load_resistance));
        Ok(input.to_string())
    }
}

/// Name-keyed set of topologies.
#[derive(Clone, Default)]
pub struct TopologyRegistry {
    entries: BTreeMap<String, Arc<dyn RectifierTopology>>,
}

impl TopologyRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding the four built-in back ends.
    pub fn with_builtins() -> Self {
        let mut r = Self::new();
        r.register(Arc::new(SeriesDiode));
        r.register(Arc::new(ShuntDiode));
        r.register(Arc::new(VoltageDoubler));
        r.register(Arc::new(ResistiveLoad));
        r
    }

    /// Adds or replaces a topology; returns the one it displaced.
    pub fn register(
        &mut self,
        topology: Arc<dyn RectifierTopology>,
    ) -> Option<Arc<dyn RectifierTopology>> {
        self.entries.insert(topology.name().to_string(), topology)
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn RectifierTopology>> {
        self.entries.get(name).cloned()
    }

    pub fn resolve(&self, name: &str) -> Result<Arc<dyn RectifierTopology>, RectifierError> {
        self.get(name)
            .ok_or_else(|| RectifierError::UnknownTopology(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn RectifierTopology>> {
        self.entries.values()
    }
}

impl fmt::Debug for TopologyRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_registered_by_name() {
        let r = TopologyRegistry::with_builtins();
        let names: Vec<_> = r.names().collect();
        assert_eq!(
            names,
            ["resistive-load", "series-diode", "shunt-diode", "voltage-doubler"]
        );
        assert_eq!(r.resolve("shunt-diode").unwrap().name(), "shunt-diode");
        assert!(matches!(
            r.resolve("bridge"),
            Err(RectifierError::UnknownTopology(_))
        ));
    }

    #[test]
    fn register_replaces() {
        let mut r = TopologyRegistry::with_builtins();
        assert!(r.register(Arc::new(SeriesDiode)).is_some());
        assert_eq!(r.names().count(), 4);
    }
}
