use super::mna::{Analysis, Mna, MAX_NEWTON_ITERATIONS};
use super::netlist::{is_ground, Netlist};
use super::CircuitError;

/// DC solution of a netlist.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    node_names: Vec<String>,
    branch_names: Vec<String>,
    voltages: Vec<f64>,
    currents: Vec<f64>,
    /// Full unknown vector, including diode internal nodes.
    pub(crate) state: Vec<f64>,
    residual: f64,
    iterations: usize,
}

impl OperatingPoint {
    /// Node voltage by name; ground reads as 0.
    pub fn voltage(&self, node: &str) -> Option<f64> {
        if is_ground(node) {
            return Some(0.0);
        }
        self.node_names
            .iter()
            .position(|n| n == node)
            .map(|i| self.voltages[i])
    }

    /// Branch current of a voltage source or inductor, flowing from its
    /// positive terminal through the element.
    pub fn branch_current(&self, element: &str) -> Option<f64> {
        self.branch_names
            .iter()
            .position(|n| n == element)
            .map(|i| self.currents[i])
    }

    pub fn node_voltages(&self) -> impl Iterator<Item = (&str, f64)> {
        self.node_names
            .iter()
            .map(String::as_str)
            .zip(self.voltages.iter().copied())
    }

    pub fn branch_currents(&self) -> impl Iterator<Item = (&str, f64)> {
        self.branch_names
            .iter()
            .map(String::as_str)
            .zip(self.currents.iter().copied())
    }

    /// Infinity norm of the KCL residual at the solution.
    pub fn kcl_residual(&self) -> f64 {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub(crate) fn from_state(mna: &Mna, state: Vec<f64>, residual: f64, iterations: usize) -> Self {
        let voltages = state[..mna.n_user].to_vec();
        let currents = mna.branch_index.iter().map(|&i| state[i]).collect();
        OperatingPoint {
            node_names: mna.node_names.clone(),
            branch_names: mna.branch_names.clone(),
            voltages,
            currents,
            state,
            residual,
            iterations,
        }
    }
}

/// Newton–Raphson DC operating point. Inductors are shorts, capacitors open,
/// sinusoidal sources contribute zero.
///
/// Falls back to source stepping when the direct solve does not converge.
pub fn solve_dc(net: &Netlist) -> Result<OperatingPoint, CircuitError> {
    let mna = Mna::compile(net);
    solve_dc_compiled(&mna)
}

pub(crate) fn solve_dc_compiled(mna: &Mna) -> Result<OperatingPoint, CircuitError> {
    let mut ws = mna.workspace();
    let mut x = vec![0.0; mna.size];
    let direct = mna.newton(
        &Analysis::Dc { source_scale: 1.0 },
        &mut x,
        &mut ws,
        MAX_NEWTON_ITERATIONS,
    );
    let failure = match direct {
        Ok(iterations) => return Ok(finish(mna, x, iterations)),
        Err(f) if f.singular => return Err(CircuitError::SingularMatrix),
        Err(f) => f,
    };

    log::debug!(
        "direct DC solve stalled (residual {:e}), trying source stepping",
        failure.residual
    );
    x.iter_mut().for_each(|v| *v = 0.0);
    let mut total = failure.iterations;
    for k in 1..=20 {
        let scale = k as f64 / 20.0;
        match mna.newton(
            &Analysis::Dc {
                source_scale: scale,
            },
            &mut x,
            &mut ws,
            MAX_NEWTON_ITERATIONS,
        ) {
            Ok(n) => total += n,
            Err(f) if f.singular => return Err(CircuitError::SingularMatrix),
            Err(f) => {
                return Err(CircuitError::NoConvergence {
                    time: None,
                    residual: f.residual,
                    iterations: total + f.iterations,
                })
            }
        }
    }
    Ok(finish(mna, x, total))
}

fn finish(mna: &Mna, x: Vec<f64>, iterations: usize) -> OperatingPoint {
    let residual = super::kcl::dc_kcl_residual(mna, &x);
    OperatingPoint::from_state(mna, x, residual, iterations)
}
