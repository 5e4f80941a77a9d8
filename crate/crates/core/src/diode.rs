//! Exponential-junction Schottky diode model.
//!
//! Forward law:
//!   I = Is * (exp(v / (N*Vt)) - 1)
//!
//! Below the breakdown knee a reverse term is added:
//!   I_bd = -Ibv * (exp(-(v + Bv)/Vt) - exp(-margin/Vt))
//! which is zero at the knee, so the current stays continuous and monotone.
//! A 1e-12 S junction leakage keeps the law strictly increasing in floating
//! point where `exp` saturates.
//!
//! Junction capacitance follows the depletion formula below `FC * Vj` and the
//! usual linear continuation above it. The series resistance is not part of the
//! junction law; the circuit engine stamps it as a separate resistor.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Thermal voltage at 300 K.
pub const THERMAL_VOLTAGE: f64 = 0.025852;

/// Forward-bias depletion capacitance coefficient (SPICE `FC`).
const DEPLETION_FC: f64 = 0.5;

/// Exponent above which the exponentials are continued linearly.
const EXP_LIMIT: f64 = 80.0;

/// Distance above -Bv (in units of Vt) where the breakdown branch starts.
const BREAKDOWN_MARGIN_VT: f64 = 20.0;

/// Junction leakage conductance (SPICE diode `GMIN`).
pub const JUNCTION_GMIN: f64 = 1e-12;

/// Model card shipped for the HSMS-285x family.
pub const HSMS285X_CARD: &str = include_str!("../models/hsms285x.card");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiodeCardError {
    #[error("invalid diode parameter {key}: {reason}")]
    InvalidParameter { key: &'static str, reason: String },
    #[error("model card line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("model card line {line}: {reason}")]
    Syntax { line: usize, reason: String },
}

/// Junction diode parameters, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiodeModelCard {
    /// Saturation current (A).
    pub is: f64,
    /// Ideality factor.
    pub n: f64,
    /// Series resistance (Ω).
    pub rs: f64,
    /// Zero-bias junction capacitance (F).
    pub cj0: f64,
    /// Junction potential (V).
    pub vj: f64,
    /// Grading coefficient.
    pub m: f64,
    /// Reverse breakdown voltage, positive (V).
    pub bv: f64,
    /// Current at breakdown (A).
    pub ibv: f64,
}

impl Default for DiodeModelCard {
    fn default() -> Self {
        Self::hsms285x()
    }
}

impl DiodeModelCard {
    /// Manufacturer-typical values for the HSMS-285x zero-bias Schottky family.
    pub fn hsms285x() -> Self {
        Self {
            is: 3e-6,
            n: 1.06,
            rs: 25.0,
            cj0: 0.18e-12,
            vj: 0.35,
            m: 0.5,
            bv: 3.8,
            ibv: 3e-4,
        }
    }

    pub fn validate(&self) -> Result<(), DiodeCardError> {
        fn bad(key: &'static str, reason: &str) -> Result<(), DiodeCardError> {
            Err(DiodeCardError::InvalidParameter {
                key,
                reason: reason.to_string(),
            })
        }
        let fields = [
            ("IS", self.is),
            ("N", self.n),
            ("RS", self.rs),
            ("CJ0", self.cj0),
            ("VJ", self.vj),
            ("M", self.m),
            ("BV", self.bv),
            ("IBV", self.ibv),
        ];
        for (key, value) in fields {
            if !value.is_finite() {
                return bad(key, "must be finite");
            }
        }
        if self.is <= 0.0 {
            return bad("IS", "must be > 0");
        }
        if !(1.0..=2.0).contains(&self.n) {
            return bad("N", "must lie in [1, 2]");
        }
        if self.rs < 0.0 {
            return bad("RS", "must be >= 0");
        }
        if self.cj0 < 0.0 {
            return bad("CJ0", "must be >= 0");
        }
        if self.vj <= 0.0 {
            return bad("VJ", "must be > 0");
        }
        if !(self.m > 0.0 && self.m < 1.0) {
            return bad("M", "must lie in (0, 1)");
        }
        if self.bv <= 0.0 {
            return bad("BV", "must be > 0");
        }
        if self.ibv <= 0.0 {
            return bad("IBV", "must be > 0");
        }
        Ok(())
    }

    /// N * Vt.
    pub fn nvt(&self) -> f64 {
        self.n * THERMAL_VOLTAGE
    }

    /// Junction voltage where the reverse-breakdown branch begins.
    pub fn breakdown_knee(&self) -> f64 {
        -self.bv + BREAKDOWN_MARGIN_VT * THERMAL_VOLTAGE
    }

    /// Parses a `KEY=value` model card. Keys not present keep their
    /// HSMS-285x defaults; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, DiodeCardError> {
        let mut card = Self::hsms285x();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| DiodeCardError::Syntax {
                line: line_no,
                reason: format!("expected KEY=value, got `{line}`"),
            })?;
            let key = key.trim();
            let value: f64 = value.trim().parse().map_err(|_| DiodeCardError::Syntax {
                line: line_no,
                reason: format!("`{}` is not a number", value.trim()),
            })?;
            let slot = match key {
                "IS" => &mut card.is,
                "N" => &mut card.n,
                "RS" => &mut card.rs,
                "CJ0" => &mut card.cj0,
                "VJ" => &mut card.vj,
                "M" => &mut card.m,
                "BV" => &mut card.bv,
                "IBV" => &mut card.ibv,
                other => {
                    return Err(DiodeCardError::UnknownKey {
                        line: line_no,
                        key: other.to_string(),
                    })
                }
            };
            *slot = value;
        }
        card.validate()?;
        Ok(card)
    }
}

impl FromStr for DiodeModelCard {
    type Err = DiodeCardError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl fmt::Display for DiodeModelCard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IS={:e}", self.is)?;
        writeln!(f, "N={}", self.n)?;
        writeln!(f, "RS={}", self.rs)?;
        writeln!(f, "CJ0={:e}", self.cj0)?;
        writeln!(f, "VJ={}", self.vj)?;
        writeln!(f, "M={}", self.m)?;
        writeln!(f, "BV={}", self.bv)?;
        writeln!(f, "IBV={:e}", self.ibv)
    }
}

/// Small-signal parameters at a bias point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallSignal {
    /// dI/dv (S).
    pub conductance: f64,
    /// Junction capacitance (F).
    pub capacitance: f64,
}

/// exp(x) and its derivative, continued linearly past `EXP_LIMIT`.
fn limited_exp(x: f64) -> (f64, f64) {
    if x > EXP_LIMIT {
        let e = EXP_LIMIT.exp();
        (e * (1.0 + (x - EXP_LIMIT)), e)
    } else {
        let e = x.exp();
        (e, e)
    }
}

/// Junction current and conductance at junction voltage `v`.
pub(crate) fn junction_iv(v: f64, card: &DiodeModelCard) -> (f64, f64) {
    let nvt = card.nvt();
    let x = v / nvt;
    let (mut i, mut g) = if x > EXP_LIMIT {
        let (e, de) = limited_exp(x);
        (card.is * (e - 1.0), card.is * de / nvt)
    } else {
        (card.is * x.exp_m1(), card.is * x.exp() / nvt)
    };

    let knee = card.breakdown_knee();
    if v < knee {
        let xb = -(v + card.bv) / THERMAL_VOLTAGE;
        let (e, de) = limited_exp(xb);
        let e_knee = (-BREAKDOWN_MARGIN_VT).exp();
        i -= card.ibv * (e - e_knee);
        g += card.ibv * de / THERMAL_VOLTAGE;
    }
    (i + JUNCTION_GMIN * v, g + JUNCTION_GMIN)
}

/// Junction current at junction voltage `v`.
pub fn diode_current(v: f64, card: &DiodeModelCard) -> f64 {
    junction_iv(v, card).0
}

/// Depletion capacitance at junction voltage `v`.
pub fn junction_capacitance(v: f64, card: &DiodeModelCard) -> f64 {
    let vj = card.vj;
    let m = card.m;
    let v_lin = DEPLETION_FC * vj;
    if v < v_lin {
        card.cj0 * (1.0 - v / vj).powf(-m)
    } else {
        let f1 = (1.0 - DEPLETION_FC).powf(-1.0 - m);
        card.cj0 * f1 * (1.0 - DEPLETION_FC * (1.0 + m) + m * v / vj)
    }
}

/// Depletion charge, the integral of [`junction_capacitance`] from 0 to `v`.
pub fn junction_charge(v: f64, card: &DiodeModelCard) -> f64 {
    let vj = card.vj;
    let m = card.m;
    let v_lin = DEPLETION_FC * vj;
    let depletion = |v: f64| card.cj0 * vj / (1.0 - m) * (1.0 - (1.0 - v / vj).powf(1.0 - m));
    if v < v_lin {
        depletion(v)
    } else {
        let f1 = (1.0 - DEPLETION_FC).powf(-1.0 - m);
        let f2 = 1.0 - DEPLETION_FC * (1.0 + m);
        depletion(v_lin)
            + card.cj0 * f1 * (f2 * (v - v_lin) + m / (2.0 * vj) * (v * v - v_lin * v_lin))
    }
}

/// Conductance and junction capacitance at junction voltage `v`.
pub fn diode_small_signal(v: f64, card: &DiodeModelCard) -> SmallSignal {
    SmallSignal {
        conductance: junction_iv(v, card).1,
        capacitance: junction_capacitance(v, card),
    }
}

/// Limits a Newton update of the junction voltage to `2 N Vt`.
///
/// Only steps that move deeper into forward conduction or past the breakdown
/// knee are clamped; elsewhere the exponential cannot overflow.
pub(crate) fn limit_junction_step(v_new: f64, v_old: f64, card: &DiodeModelCard) -> f64 {
    let max_step = 2.0 * card.nvt();
    let step = v_new - v_old;
    if step > max_step && v_new > 0.0 {
        v_old + max_step
    } else if step < -max_step && v_new < card.breakdown_knee() {
        v_old - max_step
    } else {
        v_new
    }
}
