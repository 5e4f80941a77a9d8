use num_complex::Complex64;

use crate::matching::{reflection_coefficient, synthesize_l_section, LSection, MatchError};

use super::{steady_state, RectifierError, RectifierSpec};

pub const MATCH_TARGET_GAMMA: f64 = 0.05;
pub const MAX_MATCH_ITERATIONS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    /// `None` when the bare rectifier was already within target.
    pub network: Option<LSection>,
    /// |Γ| at the port with `network` in place, re-extracted by simulation.
    pub gamma: f64,
    pub iterations: usize,
    /// Port impedance without a network.
    pub z_unmatched: Complex64,
    /// Port impedance with `network` in place.
    pub z_matched: Complex64,
}

/// Fixed-point L-section design against the large-signal input impedance.
///
/// Each iteration synthesizes a section for the current estimate of the
/// rectifier impedance, re-simulates with it in place, and de-embeds the
/// section from the new port impedance to refine the estimate.
pub fn auto_match(spec: &RectifierSpec, p_dbm: f64, f: f64) -> Result<MatchOutcome, RectifierError> {
    let bare = RectifierSpec {
        matching: None,
        frequency: f,
        ..spec.clone()
    };
    let z0 = bare.source_impedance;
    let z_unmatched = steady_state(&bare, p_dbm)?.z_in;
    let gamma0 = reflection_coefficient(z_unmatched, z0)?.gamma.norm();
    if gamma0 < MATCH_TARGET_GAMMA {
        return Ok(MatchOutcome {
            network: None,
            gamma: gamma0,
            iterations: 0,
            z_unmatched,
            z_matched: z_unmatched,
        });
    }

    let mut z_load = z_unmatched;
    let mut best: Option<(LSection, f64, Complex64)> = None;
    for iteration in 1..=MAX_MATCH_ITERATIONS {
        let section = match synthesize_l_section(z_load, z0, f) {
            Ok(sections) => sections[0],
            Err(MatchError::AlreadyMatched { .. }) => break,
            Err(e) => return Err(e.into()),
        };
        let trial = RectifierSpec {
            matching: Some(section),
            ..bare.clone()
        };
        let z_port = steady_state(&trial, p_dbm)?.z_in;
        let gamma = reflection_coefficient(z_port, z0)?.gamma.norm();
        log::debug!("match iteration {iteration}: Z_load = {z_load:.3}, |gamma| = {gamma:.3e}");
        if best.is_none_or(|(_, g, _)| gamma < g) {
            best = Some((section, gamma, z_port));
        }
        if gamma < MATCH_TARGET_GAMMA {
            return Ok(MatchOutcome {
                network: Some(section),
                gamma,
                iterations: iteration,
                z_unmatched,
                z_matched: z_port,
            });
        }
        z_load = section.abcd(f).deembed(z_port);
    }
    Err(RectifierError::MatchNoConvergence {
        best_gamma: best.map_or(gamma0, |(_, g, _)| g),
        iterations: MAX_MATCH_ITERATIONS,
        best: best.map(|(s, _, _)| s),
        target: MATCH_TARGET_GAMMA,
    })
}
