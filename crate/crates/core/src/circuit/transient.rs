//! Fixed-step trapezoidal transient analysis.

use std::f64::consts::PI;
use std::io::{self, Write};

use super::dc::OperatingPoint;
use super::mna::{Analysis, Integration, Mna, Workspace, MAX_NEWTON_ITERATIONS};
use super::netlist::{is_ground, Netlist};
use super::CircuitError;

/// Newton iterations above which a step counts as slow.
const SLOW_STEP_ITERATIONS: usize = 50;

pub enum InitialState<'a> {
    /// Capacitors discharged, inductors carrying no current.
    Zero,
    OperatingPoint(&'a OperatingPoint),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransientOptions {
    /// Prewarp reactive companions so the discrete-time response is exact at
    /// this frequency (bilinear-transform prewarping).
    pub prewarp_frequency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Advisory {
    /// Newton needed more than 50 iterations on more than 1% of steps.
    StepTooLarge { slow_steps: usize, total_steps: usize },
}

/// Sampled transient result.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub time: Vec<f64>,
    pub node_names: Vec<String>,
    /// One sample vector per node.
    pub node_voltages: Vec<Vec<f64>>,
    pub branch_names: Vec<String>,
    /// One sample vector per branch.
    pub branch_currents: Vec<Vec<f64>>,
    pub advisories: Vec<Advisory>,
}

impl Waveform {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn voltage(&self, node: &str) -> Option<&[f64]> {
        self.node_names
            .iter()
            .position(|n| n == node)
            .map(|i| self.node_voltages[i].as_slice())
    }

    pub fn current(&self, element: &str) -> Option<&[f64]> {
        self.branch_names
            .iter()
            .position(|n| n == element)
            .map(|i| self.branch_currents[i].as_slice())
    }

    /// CSV with header `time_s,v(<node>)...,i(<branch>)...`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut header = vec!["time_s".to_string()];
        header.extend(self.node_names.iter().map(|n| format!("v({n})")));
        header.extend(self.branch_names.iter().map(|n| format!("i({n})")));
        writeln!(out, "{}", header.join(","))?;
        for k in 0..self.time.len() {
            write!(out, "{:e}", self.time[k])?;
            for series in self.node_voltages.iter().chain(&self.branch_currents) {
                write!(out, ",{:e}", series[k])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Handle to a node voltage or branch current inside a stepper.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    Ground,
    Unknown(usize),
}

/// Incremental transient integrator. One call to [`step`](Self::step)
/// advances one fixed time step.
pub struct TransientStepper {
    mna: Mna,
    dt: f64,
    h_reactive: f64,
    x: Vec<f64>,
    history: Vec<f64>,
    steps: usize,
    method: Integration,
    ws: Workspace,
    slow_steps: usize,
}

impl TransientStepper {
    pub fn new(
        net: &Netlist,
        dt: f64,
        initial: InitialState,
        options: TransientOptions,
    ) -> Result<Self, CircuitError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(CircuitError::InvalidAnalysis(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let h_reactive = match options.prewarp_frequency {
            None => dt,
            Some(f) => {
                let half = PI * f * dt;
                if !(f > 0.0 && half < PI / 2.0) {
                    return Err(CircuitError::InvalidAnalysis(format!(
                        "prewarp frequency {f} Hz is not below Nyquist for dt = {dt}"
                    )));
                }
                dt * half.tan() / half
            }
        };
        let mna = Mna::compile(net);
        let (x, history, method) = match initial {
            InitialState::Zero => (
                vec![0.0; mna.size],
                mna.zero_history(),
                // no consistent capacitor currents yet; start with one BE step
                Integration::BackwardEuler,
            ),
            InitialState::OperatingPoint(op) => {
                if op.state.len() != mna.size {
                    return Err(CircuitError::InvalidAnalysis(
                        "operating point belongs to a different netlist".to_string(),
                    ));
                }
                (
                    op.state.clone(),
                    mna.history_from_dc(&op.state),
                    Integration::Trapezoidal,
                )
            }
        };
        let ws = mna.workspace();
        Ok(TransientStepper {
            mna,
            dt,
            h_reactive,
            x,
            history,
            steps: 0,
            method,
            ws,
            slow_steps: 0,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    /// Advances one step; returns the Newton solve count.
    pub fn step(&mut self) -> Result<usize, CircuitError> {
        let t = (self.steps + 1) as f64 * self.dt;
        let h = match self.method {
            Integration::BackwardEuler => self.dt,
            Integration::Trapezoidal => self.h_reactive,
        };
        let analysis = Analysis::Transient {
            time: t,
            h,
            method: self.method,
            history: &self.history,
        };
        let iterations = self
            .mna
            .newton(&analysis, &mut self.x, &mut self.ws, MAX_NEWTON_ITERATIONS)
            .map_err(|f| {
                if f.singular {
                    CircuitError::SingularMatrix
                } else {
                    CircuitError::NoConvergence {
                        time: Some(t),
                        residual: f.residual,
                        iterations: f.iterations,
                    }
                }
            })?;
        self.mna
            .update_history(&self.x, h, self.method, &mut self.history);
        self.method = Integration::Trapezoidal;
        self.steps += 1;
        if iterations > SLOW_STEP_ITERATIONS {
            self.slow_steps += 1;
        }
        Ok(iterations)
    }

    pub fn probe_node(&self, node: &str) -> Option<Probe> {
        if is_ground(node) {
            return Some(Probe::Ground);
        }
        self.mna
            .node_names
            .iter()
            .position(|n| n == node)
            .map(Probe::Unknown)
    }

    pub fn probe_branch(&self, element: &str) -> Option<Probe> {
        self.mna
            .branch_names
            .iter()
            .position(|n| n == element)
            .map(|i| Probe::Unknown(self.mna.branch_index[i]))
    }

    #[inline]
    pub fn read(&self, probe: Probe) -> f64 {
        match probe {
            Probe::Ground => 0.0,
            Probe::Unknown(i) => self.x[i],
        }
    }

    /// Full integrator state: unknowns followed by reactive history.
    pub fn snapshot(&self) -> Vec<f64> {
        let mut s = self.x.clone();
        s.extend_from_slice(&self.history);
        s
    }

    /// Restores a state produced by [`snapshot`](Self::snapshot) (possibly
    /// extrapolated). Time is not changed.
    pub fn restore(&mut self, state: &[f64]) {
        assert_eq!(state.len(), self.x.len() + self.history.len());
        let (x, h) = state.split_at(self.x.len());
        self.x.copy_from_slice(x);
        self.history.copy_from_slice(h);
    }

    /// Linear capacitor and inductor energy at the current state.
    pub fn stored_energy(&self) -> f64 {
        self.mna.stored_energy(&self.x)
    }

    pub fn advisories(&self) -> Vec<Advisory> {
        if self.steps > 0 && self.slow_steps * 100 > self.steps {
            vec![Advisory::StepTooLarge {
                slow_steps: self.slow_steps,
                total_steps: self.steps,
            }]
        } else {
            Vec::new()
        }
    }
}

/// Number of samples for a run to `t_stop`: floor(t_stop/dt) + 1.
pub fn sample_count(t_stop: f64, dt: f64) -> usize {
    // tolerate t_stop being an exact multiple of dt up to round-off
    ((t_stop / dt) * (1.0 + 1e-12)).floor() as usize + 1
}

/// Transient run over [0, t_stop] with fixed step `dt`.
pub fn solve_transient(
    net: &Netlist,
    t_stop: f64,
    dt: f64,
    initial: InitialState,
) -> Result<Waveform, CircuitError> {
    solve_transient_with(net, t_stop, dt, initial, TransientOptions::default())
}

pub fn solve_transient_with(
    net: &Netlist,
    t_stop: f64,
    dt: f64,
    initial: InitialState,
    options: TransientOptions,
) -> Result<Waveform, CircuitError> {
    if !(t_stop.is_finite() && dt > 0.0 && t_stop >= dt) {
        return Err(CircuitError::InvalidAnalysis(format!(
            "need dt > 0 and t_stop >= dt (t_stop = {t_stop}, dt = {dt})"
        )));
    }
    let mut stepper = TransientStepper::new(net, dt, initial, options)?;
    let n = sample_count(t_stop, dt);
    let mna = &stepper.mna;
    let n_user = mna.n_user;
    let branch_index = mna.branch_index.clone();
    let mut time = Vec::with_capacity(n);
    let mut node_voltages = vec![Vec::with_capacity(n); n_user];
    let mut branch_currents = vec![Vec::with_capacity(n); branch_index.len()];

    let mut record = |stepper: &TransientStepper| {
        time.push(stepper.time());
        for (i, series) in node_voltages.iter_mut().enumerate() {
            series.push(stepper.x[i]);
        }
        for (series, &bi) in branch_currents.iter_mut().zip(&branch_index) {
            series.push(stepper.x[bi]);
        }
    };
    record(&stepper);
    for _ in 1..n {
        stepper.step()?;
        record(&stepper);
    }

    let advisories = stepper.advisories();
    for a in &advisories {
        log::warn!("transient: {a:?}");
    }
    Ok(Waveform {
        time,
        node_names: stepper.mna.node_names.clone(),
        node_voltages,
        branch_names: stepper.mna.branch_names.clone(),
        branch_currents,
        advisories,
    })
}
