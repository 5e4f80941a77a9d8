//! Plain-text netlist format.
//!
//! One element per line, SPICE-style, terminals implicitly declared:
//!
//! ```text
//! * comment (also `#`)
//! V1 src 0 SIN 0.0632 1.8g 0
//! R1 src port 50
//! L1 port in 4.42n
//! C1 in 0 0.884p
//! D1 in out IS=3e-6 N=1.06 RS=25
//! C2 out 0 100p
//! R2 out 0 10k
//! ```
//!
//! The element letter selects the kind. Sources take `DC <v>`, a bare value,
//! or `SIN <amplitude> <frequency> [phase_rad]`. Diode parameters override
//! the HSMS-285x defaults.

use super::netlist::{build_netlist, CircuitDescription, ElementKind, Netlist, SourceWaveform};
use super::CircuitError;
use crate::diode::DiodeModelCard;
use crate::units::parse_si;

fn err(line: usize, reason: impl Into<String>) -> CircuitError {
    CircuitError::Parse {
        line,
        reason: reason.into(),
    }
}

fn value(line: usize, token: &str) -> Result<f64, CircuitError> {
    parse_si(token).ok_or_else(|| err(line, format!("`{token}` is not a number")))
}

fn source(line: usize, args: &[&str]) -> Result<SourceWaveform, CircuitError> {
    match args {
        [v] => Ok(SourceWaveform::Dc(value(line, v)?)),
        [kw, v] if kw.eq_ignore_ascii_case("dc") => Ok(SourceWaveform::Dc(value(line, v)?)),
        [kw, rest @ ..] if kw.eq_ignore_ascii_case("sin") => match rest {
            [a, f] | [a, f, _] => Ok(SourceWaveform::Sine {
                amplitude: value(line, a)?,
                frequency: value(line, f)?,
                phase: match rest.get(2) {
                    Some(p) => value(line, p)?,
                    None => 0.0,
                },
            }),
            _ => Err(err(line, "SIN needs <amplitude> <frequency> [phase]")),
        },
        _ => Err(err(line, "expected `DC <v>`, `<v>` or `SIN <a> <f> [phase]`")),
    }
}

/// Parses the text format into a description (not yet validated).
pub fn parse_description(text: &str) -> Result<CircuitDescription, CircuitError> {
    let mut desc = CircuitDescription::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line.starts_with('*') {
            continue;
        }
        if line.starts_with('.') {
            if line.eq_ignore_ascii_case(".end") {
                break;
            }
            return Err(err(line_no, format!("unsupported directive `{line}`")));
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let [name, pos, neg, args @ ..] = tokens.as_slice() else {
            return Err(err(line_no, "expected `<name> <node+> <node-> ...`"));
        };
        let letter = name.chars().next().unwrap().to_ascii_uppercase();
        let kind = match letter {
            'R' | 'L' | 'C' => {
                let [v] = args else {
                    return Err(err(line_no, "expected a single value"));
                };
                let v = value(line_no, v)?;
                match letter {
                    'R' => ElementKind::Resistor(v),
                    'L' => ElementKind::Inductor(v),
                    _ => ElementKind::Capacitor(v),
                }
            }
            'D' => {
                let card_text = args.join("\n");
                let card = DiodeModelCard::parse(&card_text)
                    .map_err(|e| err(line_no, e.to_string()))?;
                ElementKind::Diode(card)
            }
            'V' => ElementKind::VoltageSource(source(line_no, args)?),
            'I' => ElementKind::CurrentSource(source(line_no, args)?),
            other => return Err(err(line_no, format!("unknown element type `{other}`"))),
        };
        desc.push(name, pos, neg, kind);
    }
    Ok(desc.declare_terminals())
}

pub fn parse_netlist(text: &str) -> Result<Netlist, CircuitError> {
    build_netlist(&parse_description(text)?)
}
