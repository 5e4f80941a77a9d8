use std::collections::{BTreeSet, HashMap, HashSet};
use std::f64::consts::TAU;

use crate::diode::DiodeModelCard;

use super::CircuitError;

/// Canonical ground node name. `gnd` (any case) is accepted as an alias.
pub const GROUND: &str = "0";

pub fn is_ground(name: &str) -> bool {
    name == GROUND || name.eq_ignore_ascii_case("gnd")
}

/// Independent source waveform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceWaveform {
    /// Constant value, applied from t = 0.
    Dc(f64),
    /// `amplitude * sin(2π f t + phase)`.
    Sine {
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
}

impl SourceWaveform {
    pub fn sine(amplitude: f64, frequency: f64) -> Self {
        SourceWaveform::Sine {
            amplitude,
            frequency,
            phase: 0.0,
        }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        match *self {
            SourceWaveform::Dc(v) => v,
            SourceWaveform::Sine {
                amplitude,
                frequency,
                phase,
            } => amplitude * (TAU * frequency * t + phase).sin(),
        }
    }

    /// Value seen by a DC operating-point analysis.
    pub fn dc_value(&self) -> f64 {
        match *self {
            SourceWaveform::Dc(v) => v,
            SourceWaveform::Sine { .. } => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind {
    Resistor(f64),
    Inductor(f64),
    Capacitor(f64),
    /// Anode is the positive terminal.
    Diode(DiodeModelCard),
    /// Branch current flows into the positive terminal through the source.
    VoltageSource(SourceWaveform),
    /// Current flows from the positive terminal through the source to the negative one.
    CurrentSource(SourceWaveform),
}

impl ElementKind {
    pub fn is_nonlinear(&self) -> bool {
        matches!(self, ElementKind::Diode(_))
    }

    /// Whether the element carries an explicit branch current unknown.
    pub fn has_branch(&self) -> bool {
        matches!(self, ElementKind::Inductor(_) | ElementKind::VoltageSource(_))
    }
}

/// Unvalidated element, terminals referenced by node name.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementSpec {
    pub name: String,
    pub pos: String,
    pub neg: String,
    pub kind: ElementKind,
}

/// Structured circuit description fed to [`build_netlist`].
///
/// Ground never needs declaring.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CircuitDescription {
    pub nodes: Vec<String>,
    pub elements: Vec<ElementSpec>,
}

impl CircuitDescription {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(mut self, name: impl Into<String>) -> Self {
        self.declare(name);
        self
    }

    pub fn nodes<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        for name in names {
            self.declare(name);
        }
        self
    }

    pub fn declare(&mut self, name: impl Into<String>) {
        let name = name.into();
        if !is_ground(&name) && !self.nodes.contains(&name) {
            self.nodes.push(name);
        }
    }

    pub fn push(&mut self, name: &str, pos: &str, neg: &str, kind: ElementKind) {
        self.elements.push(ElementSpec {
            name: name.to_string(),
            pos: pos.to_string(),
            neg: neg.to_string(),
            kind,
        });
    }

    pub fn element(mut self, name: &str, pos: &str, neg: &str, kind: ElementKind) -> Self {
        self.push(name, pos, neg, kind);
        self
    }

    pub fn resistor(self, name: &str, pos: &str, neg: &str, ohms: f64) -> Self {
        self.element(name, pos, neg, ElementKind::Resistor(ohms))
    }

    pub fn capacitor(self, name: &str, pos: &str, neg: &str, farads: f64) -> Self {
        self.element(name, pos, neg, ElementKind::Capacitor(farads))
    }

    pub fn inductor(self, name: &str, pos: &str, neg: &str, henries: f64) -> Self {
        self.element(name, pos, neg, ElementKind::Inductor(henries))
    }

    pub fn diode(self, name: &str, anode: &str, cathode: &str, card: DiodeModelCard) -> Self {
        self.element(name, anode, cathode, ElementKind::Diode(card))
    }

    pub fn voltage_source(self, name: &str, pos: &str, neg: &str, wave: SourceWaveform) -> Self {
        self.element(name, pos, neg, ElementKind::VoltageSource(wave))
    }

    pub fn current_source(self, name: &str, pos: &str, neg: &str, wave: SourceWaveform) -> Self {
        self.element(name, pos, neg, ElementKind::CurrentSource(wave))
    }

    /// Declares every terminal referenced by the elements.
    pub fn declare_terminals(mut self) -> Self {
        let terminals: Vec<String> = self
            .elements
            .iter()
            .flat_map(|e| [e.pos.clone(), e.neg.clone()])
            .collect();
        for t in terminals {
            self.declare(t);
        }
        self
    }
}

/// Element with resolved terminals. `None` is ground.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub name: String,
    pub pos: Option<usize>,
    pub neg: Option<usize>,
    pub kind: ElementKind,
}

/// Validated, immutable circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    nodes: Vec<String>,
    elements: Vec<Element>,
}

impl Netlist {
    /// Non-ground node names, sorted.
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, name: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.name == name)
    }

    pub fn has_nonlinear(&self) -> bool {
        self.elements.iter().any(|e| e.kind.is_nonlinear())
    }

    /// Names of elements carrying branch-current unknowns, in element order.
    pub fn branch_names(&self) -> Vec<String> {
        self.elements
            .iter()
            .filter(|e| e.kind.has_branch())
            .map(|e| e.name.clone())
            .collect()
    }
}

fn check_value(name: &str, value: f64) -> Result<(), CircuitError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(CircuitError::NonPositiveValue {
            element: name.to_string(),
            value,
        })
    }
}

fn check_source(name: &str, wave: &SourceWaveform) -> Result<(), CircuitError> {
    let invalid = |reason: &str| CircuitError::InvalidElement {
        element: name.to_string(),
        reason: reason.to_string(),
    };
    match *wave {
        SourceWaveform::Dc(v) if !v.is_finite() => Err(invalid("DC value must be finite")),
        SourceWaveform::Dc(_) => Ok(()),
        SourceWaveform::Sine {
            amplitude,
            frequency,
            phase,
        } => {
            if !(amplitude.is_finite() && amplitude >= 0.0) {
                Err(invalid("sine amplitude must be finite and >= 0"))
            } else if !(frequency.is_finite() && frequency > 0.0) {
                Err(invalid("sine frequency must be > 0"))
            } else if !phase.is_finite() {
                Err(invalid("sine phase must be finite"))
            } else {
                Ok(())
            }
        }
    }
}

/// Validates a description and resolves node names to sorted indices.
pub fn build_netlist(description: &CircuitDescription) -> Result<Netlist, CircuitError> {
    if description.elements.is_empty() {
        return Err(CircuitError::EmptyCircuit);
    }

    let declared: BTreeSet<&str> = description
        .nodes
        .iter()
        .map(String::as_str)
        .filter(|n| !is_ground(n))
        .collect();
    let nodes: Vec<String> = declared.iter().map(|s| s.to_string()).collect();
    let index: HashMap<&str, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();

    let mut seen = HashSet::new();
    let mut elements = Vec::with_capacity(description.elements.len());
    for spec in &description.elements {
        if !seen.insert(spec.name.as_str()) {
            return Err(CircuitError::DuplicateElement(spec.name.clone()));
        }
        let resolve = |node: &str| -> Result<Option<usize>, CircuitError> {
            if is_ground(node) {
                Ok(None)
            } else {
                index
                    .get(node)
                    .copied()
                    .map(Some)
                    .ok_or_else(|| CircuitError::DanglingNode {
                        element: spec.name.clone(),
                        node: node.to_string(),
                    })
            }
        };
        let pos = resolve(&spec.pos)?;
        let neg = resolve(&spec.neg)?;

        match &spec.kind {
            ElementKind::Resistor(v) | ElementKind::Inductor(v) | ElementKind::Capacitor(v) => {
                check_value(&spec.name, *v)?
            }
            ElementKind::Diode(card) => {
                card.validate().map_err(|source| CircuitError::InvalidModel {
                    element: spec.name.clone(),
                    source,
                })?
            }
            ElementKind::VoltageSource(w) | ElementKind::CurrentSource(w) => {
                check_source(&spec.name, w)?
            }
        }
        if pos == neg {
            return Err(CircuitError::InvalidElement {
                element: spec.name.clone(),
                reason: "both terminals on the same node".to_string(),
            });
        }

        elements.push(Element {
            name: spec.name.clone(),
            pos,
            neg,
            kind: spec.kind.clone(),
        });
    }

    check_connectivity(&nodes, &elements)?;
    Ok(Netlist { nodes, elements })
}

/// Every node must reach ground through element connectivity.
fn check_connectivity(nodes: &[String], elements: &[Element]) -> Result<(), CircuitError> {
    // index nodes.len() stands for ground
    let ground = nodes.len();
    let mut adjacency = vec![Vec::new(); nodes.len() + 1];
    for e in elements {
        let a = e.pos.unwrap_or(ground);
        let b = e.neg.unwrap_or(ground);
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    let mut reached = vec![false; nodes.len() + 1];
    let mut stack = vec![ground];
    reached[ground] = true;
    while let Some(n) = stack.pop() {
        for &m in &adjacency[n] {
            if !reached[m] {
                reached[m] = true;
                stack.push(m);
            }
        }
    }
    let floating: Vec<String> = nodes
        .iter()
        .enumerate()
        .filter(|(i, _)| !reached[*i])
        .map(|(_, n)| n.clone())
        .collect();
    if floating.is_empty() {
        Ok(())
    } else {
        Err(CircuitError::FloatingSubcircuit { nodes: floating })
    }
}
