use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::circuit::{InitialState, Probe, TransientOptions, TransientStepper};
use crate::units::dbm_to_watts;

use super::{
    build_bench, RectifierError, RectifierResult, RectifierSpec, PORT_NODE, SOURCE_NODE,
};

/// Cycles simulated before the first extrapolation, and between two.
const EXTRAPOLATION_WARMUP: usize = 8;
/// Bounds on ρ/(1−ρ) applied in one extrapolation; the cap adapts between
/// these as jumps succeed or overshoot.
const INITIAL_GAIN_CAP: f64 = 64.0;
const MAX_EXTRAPOLATION_GAIN: f64 = 4096.0;
const GAIN_CAP_STEP: f64 = 4.0;
/// A post-jump change of opposite sign larger than this fraction of the
/// pre-jump change means the jump overshot.
const OVERSHOOT_FRACTION: f64 = 0.25;
/// Cycles needed after the last extrapolation before convergence counts.
const MIN_SETTLE_CYCLES: usize = 3;

#[derive(Debug, Clone, Copy)]
struct CycleStats {
    v_dc: f64,
    ripple: f64,
    v1: Complex64,
    i1: Complex64,
}

/// An extrapolation awaiting confirmation.
struct Jump {
    origin: Vec<f64>,
    change: f64,
    gain: f64,
}

struct Probes {
    src: Probe,
    port: Probe,
    out: Probe,
}

/// Runs one RF period; returns its averages and fundamentals.
fn run_cycle(
    stepper: &mut TransientStepper,
    probes: &Probes,
    n: usize,
    r_src: f64,
    twiddle: &[Complex64],
) -> Result<CycleStats, RectifierError> {
    let mut sum = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut v1 = Complex64::new(0.0, 0.0);
    let mut i1 = Complex64::new(0.0, 0.0);
    for &w in twiddle.iter().take(n) {
        stepper.step()?;
        let out = stepper.read(probes.out);
        let vp = stepper.read(probes.port);
        let ip = (stepper.read(probes.src) - vp) / r_src;
        sum += out;
        lo = lo.min(out);
        hi = hi.max(out);
        v1 += w * vp;
        i1 += w * ip;
    }
    let scale = 2.0 / n as f64;
    Ok(CycleStats {
        v_dc: sum / n as f64,
        ripple: hi - lo,
        v1: v1 * scale,
        i1: i1 * scale,
    })
}

/// Drives the bench to its periodic steady state at `p_dbm` available
/// input power.
///
/// Whole RF periods are simulated until the cycle-averaged output changes by
/// less than `spec.tolerance` (relative) between consecutive cycles, the
/// geometric tail of the remaining approach is equally small and the port
/// fundamentals have settled. When successive cycle-to-cycle changes shrink
/// by a stable ratio the full integrator state is extrapolated to the limit
/// of that geometric sequence.
pub fn steady_state(spec: &RectifierSpec, p_dbm: f64) -> Result<RectifierResult, RectifierError> {
    let bench = build_bench(spec, p_dbm)?;
    let n = spec.steps_per_cycle;
    let dt = spec.time_step();
    let mut stepper = TransientStepper::new(
        &bench.netlist,
        dt,
        InitialState::Zero,
        TransientOptions {
            prewarp_frequency: Some(spec.frequency),
        },
    )?;
    let probes = Probes {
        src: stepper.probe_node(SOURCE_NODE).expect("bench has a source node"),
        port: stepper.probe_node(PORT_NODE).expect("bench has a port node"),
        out: stepper
            .probe_node(&bench.output_node)
            .ok_or_else(|| RectifierError::InvalidSpec(format!(
                "topology output `{}` is not a circuit node",
                bench.output_node
            )))?,
    };
    // sample k of a cycle sits at phase 2π k / n
    let twiddle: Vec<Complex64> = (1..=n)
        .map(|k| Complex64::from_polar(1.0, -TAU * k as f64 / n as f64))
        .collect();

    let tol = spec.tolerance;
    let mut prev: Option<CycleStats> = None;
    let mut changes: Vec<f64> = Vec::new();
    let mut snapshots: Vec<Vec<f64>> = Vec::new();
    let mut since_jump = 0usize;
    let mut extrapolations = 0usize;
    let mut gain_cap = if spec.extrapolate { INITIAL_GAIN_CAP } else { 0.0 };
    // latest stable ratio of the slow mode; bounds the remaining tail
    let mut slow_ratio = 0.0f64;
    let mut pending: Option<Jump> = None;
    let mut last_change = f64::INFINITY;

    for cycle in 1..=spec.max_cycles {
        let outcome = run_cycle(&mut stepper, &probes, n, spec.source_impedance, &twiddle);
        let stats = match (outcome, pending.take()) {
            (Ok(stats), p) => {
                pending = p;
                stats
            }
            (Err(e), Some(jump)) => {
                log::debug!("cycle {cycle}: extrapolated state failed ({e}); rolling back");
                stepper.restore(&jump.origin);
                gain_cap /= GAIN_CAP_STEP;
                prev = None;
                changes.clear();
                snapshots = vec![jump.origin];
                since_jump = 0;
                continue;
            }
            (Err(e), None) => return Err(e),
        };
        since_jump += 1;
        let Some(p) = prev.replace(stats) else {
            snapshots.push(stepper.snapshot());
            continue;
        };
        let change = stats.v_dc - p.v_dc;
        changes.push(change);
        let scale = stats.v_dc.abs();
        last_change = change.abs() / scale.max(f64::MIN_POSITIVE);

        if since_jump == EXTRAPOLATION_WARMUP {
            if let Some(jump) = pending.take() {
                let overshoot = change.signum() != jump.change.signum()
                    && change.abs() > OVERSHOOT_FRACTION * jump.change.abs();
                if overshoot {
                    log::debug!("cycle {cycle}: extrapolation overshot; rolling back");
                    stepper.restore(&jump.origin);
                    gain_cap = jump.gain / GAIN_CAP_STEP;
                    prev = None;
                    changes.clear();
                    snapshots = vec![jump.origin];
                    since_jump = 0;
                    continue;
                }
                gain_cap = (gain_cap * GAIN_CAP_STEP).min(MAX_EXTRAPOLATION_GAIN);
            }
        }

        let ratio = match changes.as_slice() {
            [.., a, b] if *a != 0.0 => b / a,
            _ => 0.0,
        };
        let current = if (0.0..1.0).contains(&ratio) { ratio } else { 0.0 };
        let r = current.max(slow_ratio);
        let tail = change.abs() * r / (1.0 - r);
        let bound = tol * scale + 1e-12;
        let phasor_settled = (stats.v1 - p.v1).norm() <= tol * stats.v1.norm() + 1e-15
            && (stats.i1 - p.i1).norm() <= tol * stats.i1.norm() + 1e-18;
        if since_jump >= MIN_SETTLE_CYCLES
            && pending.is_none()
            && change.abs() <= bound
            && tail <= bound
            && phasor_settled
        {
            let p_avail = dbm_to_watts(p_dbm);
            let efficiency = stats.v_dc * stats.v_dc / (spec.load_resistance * p_avail);
            log::debug!(
                "steady state at {p_dbm} dBm after {cycle} cycles ({extrapolations} extrapolations)"
            );
            return Ok(RectifierResult {
                input_power_dbm: p_dbm,
                v_dc: stats.v_dc,
                efficiency,
                ripple: stats.ripple,
                z_in: stats.v1 / stats.i1,
                cycles_to_converge: cycle,
                extrapolations,
            });
        }

        snapshots.push(stepper.snapshot());
        if snapshots.len() > 2 {
            snapshots.remove(0);
        }
        if changes.len() >= 4 {
            let k = changes.len();
            let r: Vec<f64> = (k - 3..k).map(|i| changes[i] / changes[i - 1]).collect();
            let stable = r.iter().all(|x| (0.5..1.0).contains(x))
                && (r[2] - r[1]).abs() < 1e-2 * (1.0 - r[2])
                && (r[1] - r[0]).abs() < 1e-2 * (1.0 - r[2]);
            if stable {
                slow_ratio = r[2];
            }
            if stable && gain_cap >= 1.0 && since_jump >= EXTRAPOLATION_WARMUP && pending.is_none() {
                let gain = (r[2] / (1.0 - r[2])).min(gain_cap);
                let (old, new) = (&snapshots[0], &snapshots[1]);
                let jumped: Vec<f64> = new
                    .iter()
                    .zip(old)
                    .map(|(s, o)| s + gain * (s - o))
                    .collect();
                pending = Some(Jump {
                    origin: new.clone(),
                    change,
                    gain,
                });
                stepper.restore(&jumped);
                extrapolations += 1;
                since_jump = 0;
                changes.clear();
                snapshots = vec![jumped];
                prev = None;
                log::trace!("cycle {cycle}: extrapolated {gain:.1} cycles ahead (ratio {:.6})", r[2]);
            }
        }
    }
    Err(RectifierError::NoConvergence {
        cycles: spec.max_cycles,
        last_change,
    })
}

/// Fundamental-frequency impedance at the port at `p_dbm`, driven at `f`.
pub fn large_signal_input_impedance(
    spec: &RectifierSpec,
    p_dbm: f64,
    f: f64,
) -> Result<Complex64, RectifierError> {
    let spec = RectifierSpec {
        frequency: f,
        ..spec.clone()
    };
    Ok(steady_state(&spec, p_dbm)?.z_in)
}
