//! Lumped L-section matching synthesis and ABCD cascade analysis.
//!
//! Networks are element lists ordered from the source towards the load.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

/// Impedances are plain complex ohms; the frequency travels alongside.
pub type ComplexImpedance = Complex64;

/// Below this |Γ| a load counts as already matched.
pub const ALREADY_MATCHED_GAMMA: f64 = 1e-6;
/// Every synthesized section must verify below this |Γ|.
pub const SYNTHESIS_GAMMA: f64 = 1e-9;
/// Return loss reported for a perfect match.
pub const RETURN_LOSS_CAP_DB: f64 = 200.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("load already matched (|gamma| = {gamma:.3e})")]
    AlreadyMatched { gamma: f64 },
    #[error("load {0} has no positive resistance and cannot be matched")]
    Unmatchable(Complex64),
    #[error("invalid element: {0}")]
    InvalidElement(String),
    #[error("reflection coefficient undefined for Z = -Z0")]
    DegenerateInput,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    Resistor(f64),
    Inductor(f64),
    Capacitor(f64),
}

impl Component {
    pub fn value(&self) -> f64 {
        match *self {
            Component::Resistor(v) | Component::Inductor(v) | Component::Capacitor(v) => v,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Component::Resistor(_) => "resistor",
            Component::Inductor(_) => "inductor",
            Component::Capacitor(_) => "capacitor",
        }
    }

    pub fn impedance(&self, f: f64) -> Complex64 {
        let w = TAU * f;
        match *self {
            Component::Resistor(r) => Complex64::new(r, 0.0),
            Component::Inductor(l) => Complex64::new(0.0, w * l),
            Component::Capacitor(c) => Complex64::new(0.0, -1.0 / (w * c)),
        }
    }

    fn validate(&self) -> Result<(), MatchError> {
        let v = self.value();
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(MatchError::InvalidElement(format!(
                "{} value must be positive, got {v}",
                self.kind()
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NetworkElement {
    Series(Component),
    Shunt(Component),
}

impl NetworkElement {
    pub fn component(&self) -> Component {
        match *self {
            NetworkElement::Series(c) | NetworkElement::Shunt(c) => c,
        }
    }

    pub fn abcd(&self, f: f64) -> TwoPortABCD {
        match self {
            NetworkElement::Series(c) => TwoPortABCD::series(c.impedance(f)),
            NetworkElement::Shunt(c) => TwoPortABCD::shunt(c.impedance(f).inv()),
        }
    }
}

/// Which element the source sees first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Series element at the source, shunt element across the load.
    SeriesFirst,
    /// Shunt element at the source, series element in line with the load.
    ShuntFirst,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::SeriesFirst => "series-first",
            Topology::ShuntFirst => "shunt-first",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LSection {
    pub topology: Topology,
    pub series: Component,
    pub shunt: Component,
    pub frequency: f64,
}

impl LSection {
    /// Elements from source to load.
    pub fn elements(&self) -> Vec<NetworkElement> {
        let series = NetworkElement::Series(self.series);
        let shunt = NetworkElement::Shunt(self.shunt);
        match self.topology {
            Topology::SeriesFirst => vec![series, shunt],
            Topology::ShuntFirst => vec![shunt, series],
        }
    }

    pub fn abcd(&self, f: f64) -> TwoPortABCD {
        cascade(&self.elements(), f)
    }

    /// Series inductor with shunt capacitor.
    pub fn is_lowpass(&self) -> bool {
        matches!(
            (self.series, self.shunt),
            (Component::Inductor(_), Component::Capacitor(_))
        )
    }

    fn total_reactance(&self) -> f64 {
        let f = self.frequency;
        self.series.impedance(f).norm() + self.shunt.impedance(f).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPortABCD {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl TwoPortABCD {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self { a: one, b: zero, c: zero, d: one }
    }

    pub fn series(z: Complex64) -> Self {
        Self { b: z, ..Self::identity() }
    }

    pub fn shunt(y: Complex64) -> Self {
        Self { c: y, ..Self::identity() }
    }

    /// `self` followed by `next` (towards the load).
    pub fn cascade(&self, next: &Self) -> Self {
        Self {
            a: self.a * next.a + self.b * next.c,
            b: self.a * next.b + self.b * next.d,
            c: self.c * next.a + self.d * next.c,
            d: self.c * next.b + self.d * next.d,
        }
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    /// Input impedance with the output terminated in `z_term`.
    pub fn input_impedance(&self, z_term: Complex64) -> Complex64 {
        (self.a * z_term + self.b) / (self.c * z_term + self.d)
    }

    /// Load impedance that presents `z_in` at the input.
    pub fn deembed(&self, z_in: Complex64) -> Complex64 {
        (self.b - self.d * z_in) / (self.c * z_in - self.a)
    }
}

pub fn cascade(network: &[NetworkElement], f: f64) -> TwoPortABCD {
    network
        .iter()
        .fold(TwoPortABCD::identity(), |acc, e| acc.cascade(&e.abcd(f)))
}

pub fn input_impedance(
    network: &[NetworkElement],
    z_term: ComplexImpedance,
    f: f64,
) -> Result<ComplexImpedance, MatchError> {
    if !(f.is_finite() && f > 0.0) {
        return Err(MatchError::InvalidInput(format!(
            "frequency must be positive, got {f}"
        )));
    }
    for e in network {
        e.component().validate()?;
    }
    Ok(cascade(network, f).input_impedance(z_term))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflection {
    pub gamma: Complex64,
    /// −20 log10 |Γ|, capped at [`RETURN_LOSS_CAP_DB`].
    pub return_loss_db: f64,
}

pub fn reflection_coefficient(z: ComplexImpedance, z0: f64) -> Result<Reflection, MatchError> {
    if !(z0.is_finite() && z0 > 0.0) {
        return Err(MatchError::InvalidInput(format!(
            "reference impedance must be positive, got {z0}"
        )));
    }
    let den = z + z0;
    if den.norm() <= f64::EPSILON * z0 {
        return Err(MatchError::DegenerateInput);
    }
    let gamma = (z - z0) / den;
    let mag = gamma.norm();
    let return_loss_db = if mag > 0.0 {
        (-20.0 * mag.log10()).min(RETURN_LOSS_CAP_DB)
    } else {
        RETURN_LOSS_CAP_DB
    };
    Ok(Reflection {
        gamma,
        return_loss_db,
    })
}

/// Series reactance as a component.
fn series_component(x: f64, w: f64) -> Component {
    if x > 0.0 {
        Component::Inductor(x / w)
    } else {
        Component::Capacitor(-1.0 / (w * x))
    }
}

/// Shunt susceptance as a component.
fn shunt_component(b: f64, w: f64) -> Component {
    if b > 0.0 {
        Component::Capacitor(b / w)
    } else {
        Component::Inductor(-1.0 / (w * b))
    }
}

/// All lossless L-sections transforming `z_load` to `z0` at `f`, lowpass
/// solutions first, then by total reactance.
pub fn synthesize_l_section(
    z_load: ComplexImpedance,
    z0: f64,
    f: f64,
) -> Result<Vec<LSection>, MatchError> {
    if !(f.is_finite() && f > 0.0) {
        return Err(MatchError::InvalidInput(format!(
            "frequency must be positive, got {f}"
        )));
    }
    if !(z_load.re.is_finite() && z_load.im.is_finite()) || z_load.re <= 0.0 {
        return Err(MatchError::Unmatchable(z_load));
    }
    let gamma = reflection_coefficient(z_load, z0)?.gamma.norm();
    if gamma < ALREADY_MATCHED_GAMMA {
        return Err(MatchError::AlreadyMatched { gamma });
    }

    let w = TAU * f;
    let (r, x) = (z_load.re, z_load.im);
    let y_load = z_load.inv();
    let (g, b) = (y_load.re, y_load.im);
    // reactances smaller than this are treated as absent
    let tiny = 1e-12 * z0;

    let mut out = Vec::new();
    let mut push = |topology, x_series: f64, b_shunt: f64| {
        if x_series.abs() <= tiny || b_shunt.abs() * z0 * z0 <= tiny {
            return;
        }
        out.push(LSection {
            topology,
            series: series_component(x_series, w),
            shunt: shunt_component(b_shunt, w),
            frequency: f,
        });
    };

    // shunt across the load: G + jB' must sit on the 1/Z0 resistance circle
    let disc = g / z0 - g * g;
    if disc >= 0.0 {
        let root = disc.sqrt();
        for bp in [root, -root] {
            let x_series = bp / (g * g + bp * bp);
            push(Topology::SeriesFirst, x_series, bp - b);
        }
    }
    // series with the load: R + jX' must sit on the 1/Z0 conductance circle
    let disc = r * (z0 - r);
    if disc >= 0.0 {
        let root = disc.sqrt();
        for xp in [root, -root] {
            let b_shunt = xp / (r * r + xp * xp);
            push(Topology::ShuntFirst, xp - x, b_shunt);
        }
    }

    out.retain(|s| {
        let z_in = s.abcd(f).input_impedance(z_load);
        let ok = reflection_coefficient(z_in, z0)
            .map(|rc| rc.gamma.norm() < SYNTHESIS_GAMMA)
            .unwrap_or(false);
        if !ok {
            log::warn!("discarding L-section {s:?}: fails verification (Z_in = {z_in})");
        }
        ok
    });
    out.sort_by(|a, b| {
        b.is_lowpass()
            .cmp(&a.is_lowpass())
            .then(a.total_reactance().total_cmp(&b.total_reactance()))
    });
    Ok(out)
}
