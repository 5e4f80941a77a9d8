//! Rectangular microstrip patch synthesis (Hammerstad cavity-model equations).

use thiserror::Error;

use crate::units::SPEED_OF_LIGHT;

/// Substrate thickness above this fraction of λ0 triggers an advisory.
pub const THICK_SUBSTRATE_FRACTION: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatchError {
    #[error("invalid substrate: {0}")]
    InvalidSubstrate(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PatchAdvisory {
    /// h exceeds 0.05 λ0; the thin-substrate formulas lose accuracy.
    ThickSubstrateWarning { h: f64, lambda0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubstrateSpec {
    pub eps_r: f64,
    pub tan_d: f64,
    /// Thickness (m).
    pub h: f64,
}

impl SubstrateSpec {
    /// FR-4, 1.6 mm.
    pub fn fr4() -> Self {
        Self {
            eps_r: 4.3,
            tan_d: 0.025,
            h: 1.6e-3,
        }
    }

    pub fn validate(&self) -> Result<(), PatchError> {
        if !(self.eps_r.is_finite() && self.eps_r >= 1.0) {
            return Err(PatchError::InvalidSubstrate(format!(
                "eps_r must be >= 1, got {}",
                self.eps_r
            )));
        }
        if !(self.tan_d >= 0.0 && self.tan_d < 1.0) {
            return Err(PatchError::InvalidSubstrate(format!(
                "tan_d must lie in [0, 1), got {}",
                self.tan_d
            )));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(PatchError::InvalidSubstrate(format!(
                "thickness must be positive, got {}",
                self.h
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchDimensions {
    /// Width (m).
    pub w: f64,
    /// Resonant length (m).
    pub l: f64,
    pub eps_eff: f64,
    /// Fringing extension at each radiating edge (m).
    pub delta_l: f64,
    pub f0: f64,
    pub advisories: Vec<PatchAdvisory>,
}

pub fn design_patch(f0: f64, sub: &SubstrateSpec) -> Result<PatchDimensions, PatchError> {
    if !(f0.is_finite() && f0 > 0.0) {
        return Err(PatchError::InvalidInput(format!(
            "frequency must be positive, got {f0}"
        )));
    }
    sub.validate()?;
    let c = SPEED_OF_LIGHT;
    let er = sub.eps_r;
    let h = sub.h;
    let lambda0 = c / f0;

    let mut advisories = Vec::new();
    if h > THICK_SUBSTRATE_FRACTION * lambda0 {
        log::warn!(
            "substrate thickness {h} m exceeds {THICK_SUBSTRATE_FRACTION} lambda0 ({lambda0} m)"
        );
        advisories.push(PatchAdvisory::ThickSubstrateWarning { h, lambda0 });
    }

    let w = c / (2.0 * f0) * (2.0 / (er + 1.0)).sqrt();
    let eps_eff = effective_permittivity(er, h, w);
    let u = w / h;
    let delta_l =
        0.412 * h * (eps_eff + 0.3) * (u + 0.264) / ((eps_eff - 0.258) * (u + 0.8));
    let l = c / (2.0 * f0 * eps_eff.sqrt()) - 2.0 * delta_l;
    if !(l > 0.0) {
        return Err(PatchError::InvalidSubstrate(format!(
            "fringing extension {delta_l} m leaves no resonant length"
        )));
    }
    Ok(PatchDimensions {
        w,
        l,
        eps_eff,
        delta_l,
        f0,
        advisories,
    })
}

/// Effective permittivity of a microstrip of width `w` on height `h`.
pub fn effective_permittivity(eps_r: f64, h: f64, w: f64) -> f64 {
    (eps_r + 1.0) / 2.0 + (eps_r - 1.0) / 2.0 / (1.0 + 12.0 * h / w).sqrt()
}

/// λ_g = c / (f √eps_eff).
pub fn guided_wavelength(f: f64, eps_eff: f64) -> Result<f64, PatchError> {
    if !(f.is_finite() && f > 0.0) {
        return Err(PatchError::InvalidInput(format!(
            "frequency must be positive, got {f}"
        )));
    }
    if !(eps_eff.is_finite() && eps_eff >= 1.0) {
        return Err(PatchError::InvalidInput(format!(
            "eps_eff must be >= 1, got {eps_eff}"
        )));
    }
    Ok(SPEED_OF_LIGHT / (f * eps_eff.sqrt()))
}

/// Physical dimensions expressed in guided wavelengths.
pub fn electrical_size(physical: (f64, f64), lambda_g: f64) -> Result<(f64, f64), PatchError> {
    let ok = |v: f64| v.is_finite() && v > 0.0;
    if !(ok(physical.0) && ok(physical.1) && ok(lambda_g)) {
        return Err(PatchError::InvalidInput(format!(
            "sizes must be positive, got {physical:?} / {lambda_g}"
        )));
    }
    Ok((physical.0 / lambda_g, physical.1 / lambda_g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const MM: f64 = 1e-3;

    #[test]
    fn conventional_patch_within_two_percent() {
        let p = design_patch(1.805e9, &SubstrateSpec::fr4()).unwrap();
        assert!((p.w / (51.16 * MM) - 1.0).abs() < 0.02, "W = {}", p.w);
        assert!((p.l / (39.5 * MM) - 1.0).abs() < 0.02, "L = {}", p.l);
        assert!(p.w > p.l && p.delta_l > 0.0);
        assert!(p.advisories.is_empty());
    }

    #[test]
    fn hand_evaluation_2p4ghz() {
        let sub = SubstrateSpec {
            eps_r: 4.4,
            tan_d: 0.02,
            h: 1.6 * MM,
        };
        let p = design_patch(2.4e9, &sub).unwrap();
        // evaluated by hand: sqrt(2/5.4) = 0.608581, c/(2 f) = 62.4568 mm
        assert_relative_eq!(p.w, 38.0100 * MM, max_relative = 1e-4);
        assert_relative_eq!(p.eps_eff, 4.0857, max_relative = 1e-4);
        assert_relative_eq!(p.l, 29.42 * MM, max_relative = 1e-3);
    }

    #[test]
    fn air_limit() {
        let sub = SubstrateSpec {
            eps_r: 1.0,
            tan_d: 0.0,
            h: 1e-9,
        };
        let p = design_patch(1e9, &sub).unwrap();
        assert_relative_eq!(p.eps_eff, 1.0, max_relative = 1e-12);
        assert!(p.delta_l < 1e-8);
        assert_relative_eq!(p.l, SPEED_OF_LIGHT / 2e9, max_relative = 1e-7);
    }

    #[test]
    fn thick_substrate_is_advisory() {
        let sub = SubstrateSpec {
            h: 10.0 * MM,
            ..SubstrateSpec::fr4()
        };
        let p = design_patch(1.8e9, &sub).unwrap();
        assert!(matches!(
            p.advisories.as_slice(),
            [PatchAdvisory::ThickSubstrateWarning { .. }]
        ));
    }

    #[test]
    fn invalid_substrates() {
        for sub in [
            SubstrateSpec { eps_r: 0.5, ..SubstrateSpec::fr4() },
            SubstrateSpec { tan_d: 1.0, ..SubstrateSpec::fr4() },
            SubstrateSpec { h: 0.0, ..SubstrateSpec::fr4() },
        ] {
            assert!(matches!(
                design_patch(1.8e9, &sub),
                Err(PatchError::InvalidSubstrate(_))
            ));
        }
        assert!(matches!(
            design_patch(-1.0, &SubstrateSpec::fr4()),
            Err(PatchError::InvalidInput(_))
        ));
    }

    #[test]
    fn guided_wavelength_values() {
        assert_relative_eq!(guided_wavelength(1e9, 1.0).unwrap(), 299.792458 * MM);
        assert_relative_eq!(
            guided_wavelength(3e9, 4.0).unwrap(),
            guided_wavelength(3e9, 1.0).unwrap() / 2.0
        );
        let p = design_patch(1.8e9, &SubstrateSpec::fr4()).unwrap();
        let lg = guided_wavelength(1.8e9, p.eps_eff).unwrap();
        assert_relative_eq!(lg, 82.7 * MM, max_relative = 2e-3);
        assert!(guided_wavelength(1e9, 0.5).is_err());
    }

    #[test]
    fn electrical_size_ratios() {
        let (a, b) = electrical_size((82.7 * MM, 41.35 * MM), 82.7 * MM).unwrap();
        assert_relative_eq!(a, 1.0);
        assert_relative_eq!(b, 0.5);
        assert!(electrical_size((0.0, 1.0), 1.0).is_err());
        // the compact antenna at its own guided wavelength
        let p = design_patch(1.845e9, &SubstrateSpec::fr4()).unwrap();
        let lg = guided_wavelength(1.845e9, p.eps_eff).unwrap();
        let (a, b) = electrical_size((44.0 * MM, 31.0 * MM), lg).unwrap();
        assert!(a > 0.5 && b > 0.3 && a > b);
    }

    #[test]
    fn length_decreases_with_permittivity() {
        let mut last = f64::INFINITY;
        for i in 0..200 {
            let sub = SubstrateSpec {
                eps_r: 1.0 + 0.05 * i as f64,
                ..SubstrateSpec::fr4()
            };
            let l = design_patch(1.8e9, &sub).unwrap().l;
            assert!(l < last, "eps_r = {}", sub.eps_r);
            last = l;
        }
    }

    proptest! {
        #[test]
        fn eps_eff_between_bounds(er in 1.01..12.0f64, h in 0.1e-3..3e-3f64, f in 0.5e9..6e9f64) {
            let sub = SubstrateSpec { eps_r: er, tan_d: 0.01, h };
            let p = design_patch(f, &sub).unwrap();
            prop_assert!(p.eps_eff > 1.0 && p.eps_eff < er);
            prop_assert!(p.delta_l > 0.0 && p.l > 0.0);
        }

        #[test]
        fn resonance_identity(er in 1.0..12.0f64, h in 0.1e-3..3e-3f64, f in 0.5e9..6e9f64) {
            let sub = SubstrateSpec { eps_r: er, tan_d: 0.01, h };
            let p = design_patch(f, &sub).unwrap();
            let back = SPEED_OF_LIGHT / (2.0 * (p.l + 2.0 * p.delta_l) * p.eps_eff.sqrt());
            prop_assert!((back / f - 1.0).abs() < 1e-9);
        }
    }
}
