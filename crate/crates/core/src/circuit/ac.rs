use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::dc::OperatingPoint;
use super::mna::{node_v, Device, Mna, GMIN};
use super::netlist::{ElementKind, Netlist};
use super::CircuitError;
use crate::diode;

/// Small-signal solution at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct AcPoint {
    pub frequency: f64,
    /// Phasors for the netlist's nodes, in netlist order.
    pub node_voltages: Vec<Complex64>,
    /// Phasors for branch currents, in [`AcSolution::branch_names`] order.
    pub branch_currents: Vec<Complex64>,
    /// Driving-point impedance seen by the port source.
    pub impedance: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcSolution {
    pub node_names: Vec<String>,
    pub branch_names: Vec<String>,
    pub points: Vec<AcPoint>,
}

impl AcSolution {
    pub fn node_index(&self, node: &str) -> Option<usize> {
        self.node_names.iter().position(|n| n == node)
    }
}

type CMat = DMatrix<Complex64>;

fn cadd(a: &mut CMat, r: Option<usize>, c: Option<usize>, v: Complex64) {
    if let (Some(r), Some(c)) = (r, c) {
        a[(r, c)] += v;
    }
}

fn cstamp(a: &mut CMat, p: Option<usize>, n: Option<usize>, y: Complex64) {
    cadd(a, p, p, y);
    cadd(a, n, n, y);
    cadd(a, p, n, -y);
    cadd(a, n, p, -y);
}

fn cbranch(a: &mut CMat, p: Option<usize>, n: Option<usize>, br: usize, z: Complex64) {
    let one = Complex64::new(1.0, 0.0);
    if let Some(p) = p {
        a[(p, br)] += one;
        a[(br, p)] += one;
    }
    if let Some(n) = n {
        a[(n, br)] -= one;
        a[(br, n)] -= one;
    }
    a[(br, br)] -= z;
}

/// Small-signal AC analysis driven by a unit phasor on the voltage source
/// `port`; every other independent source is zeroed.
///
/// Circuits containing diodes need the operating point they are linearized
/// about.
pub fn solve_ac(
    net: &Netlist,
    freqs: &[f64],
    port: &str,
    op: Option<&OperatingPoint>,
) -> Result<AcSolution, CircuitError> {
    let port_element = net
        .element(port)
        .filter(|e| matches!(e.kind, ElementKind::VoltageSource(_)))
        .ok_or_else(|| CircuitError::UnknownPort(port.to_string()))?;
    if let Some(f) = freqs.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
        return Err(CircuitError::InvalidAnalysis(format!(
            "AC frequency must be positive, got {f}"
        )));
    }

    let mna = Mna::compile(net);
    let bias: Option<&[f64]> = match op {
        Some(op) if op.state.len() == mna.size => Some(&op.state),
        Some(_) => {
            return Err(CircuitError::InvalidAnalysis(
                "operating point belongs to a different netlist".to_string(),
            ))
        }
        None => None,
    };
    if bias.is_none() {
        if let Some(e) = net.elements().iter().find(|e| e.kind.is_nonlinear()) {
            return Err(CircuitError::NonlinearWithoutOP(e.name.clone()));
        }
    }

    let port_branch = mna
        .branch_names
        .iter()
        .position(|n| *n == port_element.name)
        .map(|i| mna.branch_index[i])
        .expect("voltage sources always carry a branch");

    let mut points = Vec::with_capacity(freqs.len());
    for &f in freqs {
        let omega = TAU * f;
        let jw = Complex64::new(0.0, omega);
        let mut a = CMat::zeros(mna.size, mna.size);
        let mut b = DVector::<Complex64>::zeros(mna.size);
        for i in 0..mna.n_nodes {
            a[(i, i)] += Complex64::new(GMIN, 0.0);
        }
        for d in &mna.devices {
            match *d {
                Device::Resistor { a: p, b: n, g } => cstamp(&mut a, p, n, g.into()),
                Device::Capacitor { a: p, b: n, c, .. } => cstamp(&mut a, p, n, jw * c),
                Device::Inductor {
                    a: p, b: n, l, branch, ..
                } => cbranch(&mut a, p, n, branch, jw * l),
                Device::VSource {
                    a: p, b: n, branch, ..
                } => {
                    cbranch(&mut a, p, n, branch, Complex64::new(0.0, 0.0));
                    if branch == port_branch {
                        b[branch] = Complex64::new(1.0, 0.0);
                    }
                }
                Device::ISource { .. } => {}
                Device::Diode {
                    anode,
                    junction,
                    cathode,
                    g_rs,
                    ref card,
                    ..
                } => {
                    if let Some(g) = g_rs {
                        cstamp(&mut a, anode, junction, g.into());
                    }
                    let x = bias.expect("checked above");
                    let v = node_v(x, junction) - node_v(x, cathode);
                    let ss = diode::diode_small_signal(v, card);
                    cstamp(&mut a, junction, cathode, ss.conductance + jw * ss.capacitance);
                }
            }
        }

        let x = solve_complex(a, &b)?;
        let node_voltages = x.iter().take(mna.n_user).copied().collect();
        let branch_currents = mna.branch_index.iter().map(|&i| x[i]).collect();
        // branch current flows into the + terminal; the circuit draws its negative
        let impedance = Complex64::new(1.0, 0.0) / -x[port_branch];
        points.push(AcPoint {
            frequency: f,
            node_voltages,
            branch_currents,
            impedance,
        });
    }

    Ok(AcSolution {
        node_names: mna.node_names.clone(),
        branch_names: mna.branch_names.clone(),
        points,
    })
}

fn solve_complex(a: CMat, b: &DVector<Complex64>) -> Result<DVector<Complex64>, CircuitError> {
    let lu = a.lu();
    let u = lu.u();
    let diag = u.diagonal();
    let max = diag.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let min = diag.iter().fold(f64::INFINITY, |m, v| m.min(v.norm()));
    if !(max > 0.0) || min <= max * 1e-20 {
        return Err(CircuitError::SingularMatrix);
    }
    let x = lu.solve(b).ok_or(CircuitError::SingularMatrix)?;
    if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Ok(x)
    } else {
        Err(CircuitError::SingularMatrix)
    }
}
