//! Free-space link budget and end-to-end DC power estimate.

use std::f64::consts::PI;

use thiserror::Error;

use crate::rectifier::SweepResult;
use crate::units::{dbm_to_watts, SPEED_OF_LIGHT};

/// Received power may sit this far outside the measured curve and still be
/// evaluated, at the nearest end point.
pub const CURVE_MARGIN_DB: f64 = 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("invalid link: {0}")]
    InvalidLink(String),
    #[error("received power {p_dbm:.3} dBm lies outside the curve range [{min:.3}, {max:.3}] dBm")]
    OutOfCurveRange { p_dbm: f64, min: f64, max: f64 },
    #[error("efficiency curve has no rows")]
    EmptyCurve,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Transmit power (dBm).
    pub p_t: f64,
    /// Transmit antenna gain (dBi).
    pub g_t: f64,
    /// Receive antenna gain (dBi).
    pub g_r: f64,
    /// Distance (m).
    pub d: f64,
    /// Frequency (Hz).
    pub f: f64,
}

impl LinkBudget {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f
    }

    /// Free-space path loss, 20 log10(4π d f / c).
    pub fn path_loss_db(&self) -> f64 {
        20.0 * (4.0 * PI * self.d * self.f / SPEED_OF_LIGHT).log10()
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(LinkError::InvalidLink(format!("distance must be positive, got {}", self.d)));
        }
        if !(self.f.is_finite() && self.f > 0.0) {
            return Err(LinkError::InvalidLink(format!("frequency must be positive, got {}", self.f)));
        }
        if ![self.p_t, self.g_t, self.g_r].iter().all(|v| v.is_finite()) {
            return Err(LinkError::InvalidLink("power and gains must be finite".into()));
        }
        Ok(())
    }
}

/// Friis received power (dBm). Warns below two wavelengths.
pub fn received_power(link: &LinkBudget) -> Result<f64, LinkError> {
    link.validate()?;
    if link.d < 2.0 * link.wavelength() {
        log::warn!(
            "distance {} m is below 2 wavelengths ({} m); far-field assumption is doubtful",
            link.d,
            2.0 * link.wavelength()
        );
    }
    Ok(link.p_t + link.g_t + link.g_r - link.path_loss_db())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcEstimate {
    pub p_received_dbm: f64,
    pub efficiency: f64,
    /// DC output power (W).
    pub p_dc: f64,
    /// DC output voltage interpolated like the efficiency (V).
    pub v_dc: f64,
}

/// Linear interpolation in `x` over strictly increasing `xs`; clamps to the
/// end values outside.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let last = xs.len() - 1;
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[last] {
        return ys[last];
    }
    let i = xs.partition_point(|&v| v <= x) - 1;
    if xs[i] == x {
        return ys[i];
    }
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + t * (ys[i + 1] - ys[i])
}

/// DC power from the rectifier efficiency curve at the received power.
/// Efficiency is interpolated linearly on the dBm axis.
pub fn end_to_end_dc(link: &LinkBudget, curve: &SweepResult) -> Result<DcEstimate, LinkError> {
    let p_r = received_power(link)?;
    dc_from_curve(p_r, curve)
}

pub fn dc_from_curve(p_r_dbm: f64, curve: &SweepResult) -> Result<DcEstimate, LinkError> {
    let rows = &curve.rows;
    if rows.is_empty() {
        return Err(LinkError::EmptyCurve);
    }
    let min = rows[0].p_in_dbm;
    let max = rows[rows.len() - 1].p_in_dbm;
    if !(p_r_dbm >= min - CURVE_MARGIN_DB && p_r_dbm <= max + CURVE_MARGIN_DB) {
        return Err(LinkError::OutOfCurveRange {
            p_dbm: p_r_dbm,
            min,
            max,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.p_in_dbm).collect();
    let eff: Vec<f64> = rows.iter().map(|r| r.efficiency).collect();
    let vdc: Vec<f64> = rows.iter().map(|r| r.v_dc).collect();
    let efficiency = interpolate(&xs, &eff, p_r_dbm).clamp(0.0, 1.0);
    Ok(DcEstimate {
        p_received_dbm: p_r_dbm,
        efficiency,
        p_dc: efficiency * dbm_to_watts(p_r_dbm),
        v_dc: interpolate(&xs, &vdc, p_r_dbm),
    })
}

/// Distance at which the received power equals `p_r_dbm`.
pub fn distance_for_power(link: &LinkBudget, p_r_dbm: f64) -> Result<f64, LinkError> {
    LinkBudget { d: 1.0, ..*link }.validate()?;
    let loss = link.p_t + link.g_t + link.g_r - p_r_dbm;
    Ok(10f64.powf(loss / 20.0) * SPEED_OF_LIGHT / (4.0 * PI * link.f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rectifier::SweepRow;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn link(d: f64) -> LinkBudget {
        LinkBudget {
            p_t: 30.0,
            g_t: 10.0,
            g_r: 2.5,
            d,
            f: 1.8e9,
        }
    }

    fn curve() -> SweepResult {
        let pts = [(-20.0, 0.05, 0.07), (-15.0, 0.18, 0.24), (-10.0, 0.536, 0.732), (-5.0, 0.5, 1.26), (0.0, 0.2, 1.41)];
        SweepResult {
            rows: pts
                .iter()
                .map(|&(p, e, v)| SweepRow {
                    p_in_dbm: p,
                    v_dc: v,
                    efficiency: e,
                    z_in: Complex64::new(50.0, 0.0),
                })
                .collect(),
            failures: Vec::new(),
        }
    }

    #[test]
    fn friis_example() {
        // 4π f / c = 75.4476 m⁻¹ at 1.8 GHz; 20 log10 of that is 37.553 dB
        let expected = 42.5 - 20.0 * (4.0 * PI * 1.8e9 / 299_792_458.0f64).log10();
        let p = received_power(&link(1.0)).unwrap();
        assert_relative_eq!(p, expected, max_relative = 1e-12);
        assert!((p - 4.95).abs() < 0.01, "{p}");
    }

    #[test]
    fn inverse_square() {
        let a = received_power(&link(3.0)).unwrap();
        let b = received_power(&link(6.0)).unwrap();
        assert_relative_eq!(a - b, 20.0 * 2f64.log10(), max_relative = 1e-12);
        assert!((a - b - 6.0206).abs() < 1e-4);
    }

    #[test]
    fn balance_distance() {
        let l = link(1.0);
        let d = distance_for_power(&l, 0.0).unwrap();
        let p = received_power(&LinkBudget { d, ..l }).unwrap();
        assert!(p.abs() < 1e-9, "{p}");
    }

    #[test]
    fn invalid_links() {
        assert!(received_power(&link(0.0)).is_err());
        assert!(received_power(&LinkBudget { f: -1.0, ..link(1.0) }).is_err());
    }

    #[test]
    fn dc_at_a_sweep_point() {
        let est = dc_from_curve(-10.0, &curve()).unwrap();
        assert_eq!(est.efficiency, 0.536);
        assert_relative_eq!(est.p_dc, 53.6e-6, max_relative = 1e-12);
        assert_eq!(est.v_dc, 0.732);
    }

    #[test]
    fn midpoint_is_mean() {
        let est = dc_from_curve(-12.5, &curve()).unwrap();
        assert_relative_eq!(est.efficiency, (0.18 + 0.536) / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn range_guard() {
        assert!(matches!(
            dc_from_curve(20.0, &curve()),
            Err(LinkError::OutOfCurveRange { .. })
        ));
        assert!(matches!(
            dc_from_curve(-23.5, &curve()),
            Err(LinkError::OutOfCurveRange { .. })
        ));
        // inside the margin: end value
        assert_eq!(dc_from_curve(2.0, &curve()).unwrap().efficiency, 0.2);
        assert!(matches!(
            dc_from_curve(0.0, &SweepResult::default()),
            Err(LinkError::EmptyCurve)
        ));
    }

    proptest! {
        #[test]
        fn monotone_in_each_argument(
            pt in -10.0..50.0f64, gt in -5.0..30.0f64, gr in -5.0..10.0f64,
            d in 0.5..1000.0f64, f in 1e8..1e10f64, delta in 1e-3..10.0f64,
        ) {
            let l = LinkBudget { p_t: pt, g_t: gt, g_r: gr, d, f };
            let base = received_power(&l).unwrap();
            let farther = LinkBudget { d: d * (1.0 + delta), ..l };
            let more_power = LinkBudget { p_t: pt + delta, ..l };
            let more_gt = LinkBudget { g_t: gt + delta, ..l };
            let more_gr = LinkBudget { g_r: gr + delta, ..l };
            prop_assert!(received_power(&farther).unwrap() < base);
            prop_assert!(received_power(&more_power).unwrap() > base);
            prop_assert!(received_power(&more_gt).unwrap() > base);
            prop_assert!(received_power(&more_gr).unwrap() > base);
        }

        #[test]
        fn dc_never_exceeds_received(p in -23.0..3.0f64) {
            let est = dc_from_curve(p, &curve()).unwrap();
            prop_assert!(est.p_dc <= dbm_to_watts(p));
            prop_assert!(est.p_dc >= 0.0);
        }
    }
}
