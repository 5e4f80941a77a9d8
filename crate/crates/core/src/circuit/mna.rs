//! MNA compilation, stamping and the Newton–Raphson loop.
//!
//! Unknown vector layout: user node voltages (netlist order), diode internal
//! nodes (one per diode with RS > 0), then branch currents for voltage
//! sources and inductors in element order.

use nalgebra::{DMatrix, DVector};

use crate::diode::{self, DiodeModelCard};

use super::netlist::{ElementKind, Netlist, SourceWaveform};
use super::CircuitError;

/// Conductance from every node to ground.
pub const GMIN: f64 = 1e-12;
/// Absolute KCL residual tolerance (A); also applied to branch rows (V).
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Relative update tolerance.
pub const RELTOL: f64 = 1e-9;
/// Absolute update floor for voltages and currents.
const UPDATE_FLOOR: f64 = 1e-12;
pub const MAX_NEWTON_ITERATIONS: usize = 100;

pub(crate) type Node = Option<usize>;

#[derive(Debug, Clone)]
pub(crate) enum Device {
    Resistor {
        a: Node,
        b: Node,
        g: f64,
    },
    Capacitor {
        a: Node,
        b: Node,
        c: f64,
        slot: usize,
    },
    Inductor {
        a: Node,
        b: Node,
        l: f64,
        branch: usize,
        slot: usize,
    },
    VSource {
        a: Node,
        b: Node,
        branch: usize,
        wave: SourceWaveform,
    },
    ISource {
        a: Node,
        b: Node,
        wave: SourceWaveform,
    },
    Diode {
        anode: Node,
        junction: Node,
        cathode: Node,
        g_rs: Option<f64>,
        card: DiodeModelCard,
        slot: usize,
        index: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Integration {
    BackwardEuler,
    Trapezoidal,
}

pub(crate) enum Analysis<'a> {
    Dc {
        source_scale: f64,
    },
    Transient {
        time: f64,
        /// Step used by the reactive companion models.
        h: f64,
        method: Integration,
        history: &'a [f64],
    },
}

/// Compiled circuit.
#[derive(Debug, Clone)]
pub(crate) struct Mna {
    pub n_user: usize,
    pub n_nodes: usize,
    pub size: usize,
    pub devices: Vec<Device>,
    pub node_names: Vec<String>,
    pub branch_names: Vec<String>,
    /// Absolute unknown index of each branch, parallel to `branch_names`.
    pub branch_index: Vec<usize>,
    pub n_slots: usize,
    pub n_diodes: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonFailure {
    pub residual: f64,
    pub iterations: usize,
    pub singular: bool,
}

pub(crate) struct Workspace {
    a: DMatrix<f64>,
    b: DVector<f64>,
    vj: Vec<f64>,
}

#[inline]
pub(crate) fn node_v(x: &[f64], n: Node) -> f64 {
    n.map_or(0.0, |i| x[i])
}

#[inline]
fn add(a: &mut DMatrix<f64>, r: Node, c: Node, v: f64) {
    if let (Some(r), Some(c)) = (r, c) {
        a[(r, c)] += v;
    }
}

#[inline]
fn stamp_conductance(a: &mut DMatrix<f64>, p: Node, n: Node, g: f64) {
    add(a, p, p, g);
    add(a, n, n, g);
    add(a, p, n, -g);
    add(a, n, p, -g);
}

/// Constant current `i` flowing from `p` to `n` through the element.
#[inline]
fn stamp_current(b: &mut DVector<f64>, p: Node, n: Node, i: f64) {
    if let Some(p) = p {
        b[p] -= i;
    }
    if let Some(n) = n {
        b[n] += i;
    }
}

/// Branch constraint `v_p - v_n - r * i_branch = rhs` plus its KCL coupling.
#[inline]
fn stamp_branch(a: &mut DMatrix<f64>, b: &mut DVector<f64>, p: Node, n: Node, br: usize, r: f64, rhs: f64) {
    if let Some(p) = p {
        a[(p, br)] += 1.0;
        a[(br, p)] += 1.0;
    }
    if let Some(n) = n {
        a[(n, br)] -= 1.0;
        a[(br, n)] -= 1.0;
    }
    a[(br, br)] -= r;
    b[br] += rhs;
}

impl Mna {
    pub fn compile(net: &Netlist) -> Self {
        let n_user = net.node_count();
        let mut n_nodes = n_user;
        let mut n_diodes = 0;
        let mut n_slots = 0;
        let mut internal = Vec::new();
        for e in net.elements() {
            if let ElementKind::Diode(card) = &e.kind {
                if card.rs > 0.0 {
                    internal.push(Some(n_nodes));
                    n_nodes += 1;
                } else {
                    internal.push(None);
                }
            }
        }

        let n_branches = net.elements().iter().filter(|e| e.kind.has_branch()).count();
        let size = n_nodes + n_branches;
        let mut next_branch = n_nodes;
        let mut devices = Vec::with_capacity(net.elements().len());
        let mut branch_names = Vec::new();
        let mut branch_index = Vec::new();

        for e in net.elements() {
            let (a, b) = (e.pos, e.neg);
            let device = match &e.kind {
                ElementKind::Resistor(r) => Device::Resistor { a, b, g: 1.0 / r },
                ElementKind::Capacitor(c) => {
                    n_slots += 1;
                    Device::Capacitor {
                        a,
                        b,
                        c: *c,
                        slot: n_slots - 1,
                    }
                }
                ElementKind::Inductor(l) => {
                    n_slots += 1;
                    branch_names.push(e.name.clone());
                    branch_index.push(next_branch);
                    next_branch += 1;
                    Device::Inductor {
                        a,
                        b,
                        l: *l,
                        branch: next_branch - 1,
                        slot: n_slots - 1,
                    }
                }
                ElementKind::VoltageSource(w) => {
                    branch_names.push(e.name.clone());
                    branch_index.push(next_branch);
                    next_branch += 1;
                    Device::VSource {
                        a,
                        b,
                        branch: next_branch - 1,
                        wave: *w,
                    }
                }
                ElementKind::CurrentSource(w) => Device::ISource { a, b, wave: *w },
                ElementKind::Diode(card) => {
                    let inner = internal[n_diodes];
                    n_slots += 1;
                    n_diodes += 1;
                    Device::Diode {
                        anode: a,
                        junction: inner.or(a),
                        cathode: b,
                        g_rs: inner.map(|_| 1.0 / card.rs),
                        card: *card,
                        slot: n_slots - 1,
                        index: n_diodes - 1,
                    }
                }
            };
            devices.push(device);
        }

        Mna {
            n_user,
            n_nodes,
            size,
            devices,
            node_names: net.nodes().to_vec(),
            branch_names,
            branch_index,
            n_slots,
            n_diodes,
        }
    }

    pub fn workspace(&self) -> Workspace {
        Workspace {
            a: DMatrix::zeros(self.size, self.size),
            b: DVector::zeros(self.size),
            vj: vec![0.0; self.n_diodes],
        }
    }

    fn junction_voltages(&self, x: &[f64], out: &mut [f64]) {
        for d in &self.devices {
            if let Device::Diode {
                junction,
                cathode,
                index,
                ..
            } = d
            {
                out[*index] = node_v(x, *junction) - node_v(x, *cathode);
            }
        }
    }

    /// Builds `A x = b` with nonlinear devices linearized at `vj`.
    fn assemble(&self, vj: &[f64], analysis: &Analysis, a: &mut DMatrix<f64>, b: &mut DVector<f64>) {
        a.fill(0.0);
        b.fill(0.0);
        for i in 0..self.n_nodes {
            a[(i, i)] += GMIN;
        }

        for d in &self.devices {
            match *d {
                Device::Resistor { a: p, b: n, g } => stamp_conductance(a, p, n, g),
                Device::Capacitor { a: p, b: n, c, slot } => {
                    if let Analysis::Transient {
                        h, method, history, ..
                    } = analysis
                    {
                        let (v_prev, i_prev) = (history[2 * slot], history[2 * slot + 1]);
                        let (g, ieq) = match method {
                            Integration::Trapezoidal => {
                                let g = 2.0 * c / h;
                                (g, -(g * v_prev + i_prev))
                            }
                            Integration::BackwardEuler => {
                                let g = c / h;
                                (g, -g * v_prev)
                            }
                        };
                        stamp_conductance(a, p, n, g);
                        stamp_current(b, p, n, ieq);
                    }
                }
                Device::Inductor {
                    a: p,
                    b: n,
                    l,
                    branch,
                    slot,
                } => {
                    let (r, rhs) = match analysis {
                        Analysis::Dc { .. } => (0.0, 0.0),
                        Analysis::Transient {
                            h, method, history, ..
                        } => {
                            let (i_prev, v_prev) = (history[2 * slot], history[2 * slot + 1]);
                            match method {
                                Integration::Trapezoidal => {
                                    let r = 2.0 * l / h;
                                    (r, -(r * i_prev + v_prev))
                                }
                                Integration::BackwardEuler => {
                                    let r = l / h;
                                    (r, -r * i_prev)
                                }
                            }
                        }
                    };
                    stamp_branch(a, b, p, n, branch, r, rhs);
                }
                Device::VSource {
                    a: p,
                    b: n,
                    branch,
                    wave,
                } => {
                    let v = match analysis {
                        Analysis::Dc { source_scale } => source_scale * wave.dc_value(),
                        Analysis::Transient { time, .. } => wave.value_at(*time),
                    };
                    stamp_branch(a, b, p, n, branch, 0.0, v);
                }
                Device::ISource { a: p, b: n, wave } => {
                    let i = match analysis {
                        Analysis::Dc { source_scale } => source_scale * wave.dc_value(),
                        Analysis::Transient { time, .. } => wave.value_at(*time),
                    };
                    stamp_current(b, p, n, i);
                }
                Device::Diode {
                    anode,
                    junction,
                    cathode,
                    g_rs,
                    ref card,
                    slot,
                    index,
                } => {
                    if let Some(g) = g_rs {
                        stamp_conductance(a, anode, junction, g);
                    }
                    let v0 = vj[index];
                    let (i0, g0) = diode::junction_iv(v0, card);
                    stamp_conductance(a, junction, cathode, g0);
                    stamp_current(b, junction, cathode, i0 - g0 * v0);

                    if let Analysis::Transient {
                        h, method, history, ..
                    } = analysis
                    {
                        if card.cj0 > 0.0 {
                            let (q_prev, i_prev) = (history[2 * slot], history[2 * slot + 1]);
                            let c0 = diode::junction_capacitance(v0, card);
                            let q0 = diode::junction_charge(v0, card);
                            let (g, ieq) = match method {
                                Integration::Trapezoidal => {
                                    let k = 2.0 / h;
                                    (k * c0, k * (q0 - c0 * v0 - q_prev) - i_prev)
                                }
                                Integration::BackwardEuler => {
                                    let k = 1.0 / h;
                                    (k * c0, k * (q0 - c0 * v0 - q_prev))
                                }
                            };
                            stamp_conductance(a, junction, cathode, g);
                            stamp_current(b, junction, cathode, ieq);
                        }
                    }
                }
            }
        }
    }

    /// Infinity norm of `A x - b`, scaled so round-off in large terms is tolerated.
    fn residual_ok(a: &DMatrix<f64>, b: &DVector<f64>, x: &[f64]) -> (bool, f64) {
        let n = b.len();
        let mut worst = 0.0f64;
        let mut ok = true;
        for i in 0..n {
            let mut sum = -b[i];
            let mut scale = b[i].abs();
            for j in 0..n {
                let t = a[(i, j)] * x[j];
                sum += t;
                scale += t.abs();
            }
            let r = sum.abs();
            worst = worst.max(r);
            if r > RESIDUAL_TOL + 1e-13 * scale {
                ok = false;
            }
        }
        (ok, worst)
    }

    /// Newton–Raphson on the current analysis, updating `x` in place.
    ///
    /// Returns the number of linear solves performed.
    pub fn newton(
        &self,
        analysis: &Analysis,
        x: &mut [f64],
        ws: &mut Workspace,
        max_iter: usize,
    ) -> Result<usize, NewtonFailure> {
        let Workspace { a, b, vj } = ws;
        self.junction_voltages(x, vj);
        let mut limited = false;
        let mut update_ok = false;
        let mut last_residual = f64::INFINITY;
        let mut vj_new = vec![0.0; self.n_diodes];

        for iter in 0..=max_iter {
            self.assemble(vj, analysis, a, b);
            let (res_ok, residual) = Self::residual_ok(a, b, x);
            last_residual = residual;
            if iter > 0 && res_ok && !limited && update_ok {
                return Ok(iter);
            }
            if iter == max_iter {
                break;
            }

            let solution = solve_real(a.clone(), b).map_err(|_| NewtonFailure {
                residual,
                iterations: iter,
                singular: true,
            })?;

            update_ok = solution.iter().zip(x.iter()).all(|(new, old)| {
                (new - old).abs() <= RELTOL * new.abs().max(old.abs()) + UPDATE_FLOOR
            });
            x.copy_from_slice(solution.as_slice());

            self.junction_voltages(x, &mut vj_new);
            limited = false;
            for d in &self.devices {
                if let Device::Diode { ref card, index, .. } = *d {
                    let lim = diode::limit_junction_step(vj_new[index], vj[index], card);
                    if lim != vj_new[index] {
                        limited = true;
                    }
                    vj[index] = lim;
                }
            }
        }
        Err(NewtonFailure {
            residual: last_residual,
            iterations: max_iter,
            singular: false,
        })
    }

    /// Reactive-element history for a state with no stored energy.
    pub fn zero_history(&self) -> Vec<f64> {
        vec![0.0; 2 * self.n_slots]
    }

    /// History consistent with a DC operating point (all capacitor currents
    /// and inductor voltages zero).
    pub fn history_from_dc(&self, x: &[f64]) -> Vec<f64> {
        let mut h = self.zero_history();
        for d in &self.devices {
            match *d {
                Device::Capacitor { a, b, slot, .. } => {
                    h[2 * slot] = node_v(x, a) - node_v(x, b);
                }
                Device::Inductor { branch, slot, .. } => {
                    h[2 * slot] = x[branch];
                }
                Device::Diode {
                    junction,
                    cathode,
                    ref card,
                    slot,
                    ..
                } => {
                    let v = node_v(x, junction) - node_v(x, cathode);
                    h[2 * slot] = diode::junction_charge(v, card);
                }
                _ => {}
            }
        }
        h
    }

    /// Advances reactive history to the accepted solution `x`.
    pub fn update_history(&self, x: &[f64], h: f64, method: Integration, history: &mut [f64]) {
        for d in &self.devices {
            match *d {
                Device::Capacitor { a, b, c, slot } => {
                    let v = node_v(x, a) - node_v(x, b);
                    let (v_prev, i_prev) = (history[2 * slot], history[2 * slot + 1]);
                    let i = match method {
                        Integration::Trapezoidal => 2.0 * c / h * (v - v_prev) - i_prev,
                        Integration::BackwardEuler => c / h * (v - v_prev),
                    };
                    history[2 * slot] = v;
                    history[2 * slot + 1] = i;
                }
                Device::Inductor { a, b, branch, slot, .. } => {
                    history[2 * slot] = x[branch];
                    history[2 * slot + 1] = node_v(x, a) - node_v(x, b);
                }
                Device::Diode {
                    junction,
                    cathode,
                    ref card,
                    slot,
                    ..
                } => {
                    if card.cj0 > 0.0 {
                        let v = node_v(x, junction) - node_v(x, cathode);
                        let q = diode::junction_charge(v, card);
                        let (q_prev, i_prev) = (history[2 * slot], history[2 * slot + 1]);
                        let i = match method {
                            Integration::Trapezoidal => 2.0 / h * (q - q_prev) - i_prev,
                            Integration::BackwardEuler => (q - q_prev) / h,
                        };
                        history[2 * slot] = q;
                        history[2 * slot + 1] = i;
                    }
                }
                _ => {}
            }
        }
    }

    /// Energy stored in linear capacitors and inductors at state `x`.
    pub fn stored_energy(&self, x: &[f64]) -> f64 {
        self.devices
            .iter()
            .map(|d| match *d {
                Device::Capacitor { a, b, c, .. } => {
                    let v = node_v(x, a) - node_v(x, b);
                    0.5 * c * v * v
                }
                Device::Inductor { l, branch, .. } => 0.5 * l * x[branch] * x[branch],
                _ => 0.0,
            })
            .sum()
    }
}

/// Dense LU solve with a pivot-ratio singularity check.
pub(crate) fn solve_real(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>, CircuitError> {
    let lu = a.lu();
    let u = lu.u();
    let diag = u.diagonal();
    let max = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = diag.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if !(max > 0.0) || min <= max * 1e-20 {
        return Err(CircuitError::SingularMatrix);
    }
    let x = lu.solve(b).ok_or(CircuitError::SingularMatrix)?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(CircuitError::SingularMatrix)
    }
}
