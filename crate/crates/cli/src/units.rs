//! Quantities written as `"<number> <unit>"`. The unit is mandatory.

use std::fmt;

use dsa_core::em::wavelength;

#[derive(Debug, Clone, PartialEq)]
pub struct UnitError {
    pub text: String,
    pub reason: String,
}

impl fmt::Display for UnitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cannot read {:?}: {}", self.text, self.reason)
    }
}

impl std::error::Error for UnitError {}

/// Which physical dimension a field carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Frequency,
    Length,
    Angle,
    Power,
    Gain,
    Resistance,
    Capacitance,
    Inductance,
}

impl Dim {
    fn accepted(self) -> &'static str {
        match self {
            Dim::Frequency => "Hz, kHz, MHz, GHz",
            Dim::Length => "m, cm, mm, lambda",
            Dim::Angle => "deg, rad",
            Dim::Power => "W, mW, uW, nW, pW, dBW, dBm",
            Dim::Gain => "dBi, linear",
            Dim::Resistance => "ohm",
            Dim::Capacitance => "F, nF, pF",
            Dim::Inductance => "H, uH, nH",
        }
    }
}

fn split(text: &str) -> Result<(f64, &str), UnitError> {
    let err = |reason: &str| UnitError {
        text: text.to_string(),
        reason: reason.to_string(),
    };
    let t = text.trim();
    let cut = t
        .find(|c: char| c.is_whitespace() || (c.is_alphabetic() && c != 'e' && c != 'E'))
        .ok_or_else(|| err("missing unit"))?;
    let (num, unit) = t.split_at(cut);
    let unit = unit.trim();
    if unit.is_empty() {
        return Err(err("missing unit"));
    }
    let value: f64 = num.trim().parse().map_err(|_| err("not a number"))?;
    if !value.is_finite() {
        return Err(err("not finite"));
    }
    Ok((value, unit))
}

/// Converts to SI. Lengths in `lambda` need the carrier frequency.
pub fn parse(text: &str, dim: Dim, carrier: Option<f64>) -> Result<f64, UnitError> {
    let (v, unit) = split(text)?;
    let bad = || UnitError {
        text: text.to_string(),
        reason: format!("unit {unit:?} is not one of {}", dim.accepted()),
    };
    let scale = match (dim, unit) {
        (Dim::Frequency, "Hz") => 1.0,
        (Dim::Frequency, "kHz") => 1e3,
        (Dim::Frequency, "MHz") => 1e6,
        (Dim::Frequency, "GHz") => 1e9,
        (Dim::Length, "m") => 1.0,
        (Dim::Length, "cm") => 1e-2,
        (Dim::Length, "mm") => 1e-3,
        (Dim::Length, "lambda") => match carrier {
            Some(f) => wavelength(f),
            None => {
                return Err(UnitError {
                    text: text.to_string(),
                    reason: "wavelength units need the carrier frequency".into(),
                })
            }
        },
        (Dim::Angle, "deg") => 1.0,
        (Dim::Angle, "rad") => 180.0 / std::f64::consts::PI,
        (Dim::Power, "W") => 1.0,
        (Dim::Power, "mW") => 1e-3,
        (Dim::Power, "uW") => 1e-6,
        (Dim::Power, "nW") => 1e-9,
        (Dim::Power, "pW") => 1e-12,
        (Dim::Power, "dBW") => return Ok(10f64.powf(v / 10.0)),
        (Dim::Power, "dBm") => return Ok(1e-3 * 10f64.powf(v / 10.0)),
        (Dim::Gain, "dBi") => return Ok(10f64.powf(v / 10.0)),
        (Dim::Gain, "linear") => 1.0,
        (Dim::Resistance, "ohm") => 1.0,
        (Dim::Capacitance, "F") => 1.0,
        (Dim::Capacitance, "nF") => 1e-9,
        (Dim::Capacitance, "pF") => 1e-12,
        (Dim::Inductance, "H") => 1.0,
        (Dim::Inductance, "uH") => 1e-6,
        (Dim::Inductance, "nH") => 1e-9,
        _ => return Err(bad()),
    };
    Ok(v * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn units_are_mandatory() {
        assert!(parse("2.4", Dim::Frequency, None).is_err());
        assert!(parse("2.4 m", Dim::Frequency, None).is_err());
        assert_eq!(parse("2.4 GHz", Dim::Frequency, None).unwrap(), 2.4e9);
        assert_eq!(parse("2.4GHz", Dim::Frequency, None).unwrap(), 2.4e9);
    }

    #[test]
    fn decibel_and_wavelength_units() {
        assert!((parse("10 dBm", Dim::Power, None).unwrap() - 0.01).abs() < 1e-15);
        assert!((parse("-30 dBW", Dim::Power, None).unwrap() - 1e-3).abs() < 1e-15);
        assert!((parse("1e1 mW", Dim::Power, None).unwrap() - 0.01).abs() < 1e-15);
        let l = parse("0.25 lambda", Dim::Length, Some(2.4e9)).unwrap();
        assert!((l - wavelength(2.4e9) / 4.0).abs() < 1e-15);
        assert!(parse("0.25 lambda", Dim::Length, None).is_err());
        assert_eq!(parse("-40 deg", Dim::Angle, None).unwrap(), -40.0);
    }
}
