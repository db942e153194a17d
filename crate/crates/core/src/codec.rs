//! Duty-cycle ↔ supply-current codec for the 1 kHz control pilot.
//!
//! The pilot duty cycle advertises the maximum current the charger will
//! supply, following the J1772 piecewise map:
//!
//! | duty d (%)    | meaning                          |
//! |---------------|----------------------------------|
//! | d < 3         | invalid (too low)                |
//! | 3 ≤ d ≤ 7     | digital-communication command    |
//! | 7 < d < 10    | invalid gap (would decode < 6 A) |
//! | 10 ≤ d ≤ 85   | amps = 0.6 · d                   |
//! | 85 < d ≤ 96   | amps = 2.5 · (d − 64)            |
//! | d > 96        | treated as 96% → 80 A            |
//!
//! The two linear segments do not meet at 85%: the low segment tops out at
//! 51 A while the high segment starts at 52.5 A, so currents in
//! (51, 52.5] A have no duty cycle that decodes back to them. The encoder
//! rejects that dead band instead of emitting a duty that silently
//! advertises a different current.

use core::fmt;

/// PWM duty cycle as a percentage in [0, 100].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct DutyCycle {
    percent: f64,
}

impl DutyCycle {
    pub fn percent(value: f64) -> Result<DutyCycle, CodecError> {
        if value.is_finite() && (0.0..=100.0).contains(&value) {
            Ok(DutyCycle { percent: value })
        } else {
            Err(CodecError::DutyOutOfRange(value))
        }
    }

    pub fn value(&self) -> f64 {
        self.percent
    }
}

impl fmt::Display for DutyCycle {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "{}%", self.percent)
    }
}

/// Result of decoding a pilot duty cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AmpacityReading {
    /// Decodable advertisement in [6, 80] A.
    Amps(f64),
    /// 3–7%: request for ISO 15118 digital communication.
    DigitalComm,
    /// Below 3%: not a valid pilot.
    InvalidLow,
    /// 7–10%: would advertise less than the 6 A minimum.
    InvalidGap,
}

impl AmpacityReading {
    pub fn amps(&self) -> Option<f64> {
        match *self {
            AmpacityReading::Amps(a) => Some(a),
            _ => None,
        }
    }
}

impl fmt::Display for AmpacityReading {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            AmpacityReading::Amps(a) => write!(f, "{a} A"),
            AmpacityReading::DigitalComm => f.write_str("digital communication band"),
            AmpacityReading::InvalidLow => f.write_str("invalid duty cycle (below 3%)"),
            AmpacityReading::InvalidGap => f.write_str("invalid duty cycle (7-10% gap)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CodecError {
    DutyOutOfRange(f64),
    /// Encodable currents are [6, 80] A.
    CurrentOutOfRange(f64),
    /// (51, 52.5] A: the piecewise map has no duty that decodes back to
    /// these currents.
    CurrentInDeadBand(f64),
}

impl fmt::Display for CodecError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            CodecError::DutyOutOfRange(d) => {
                write!(f, "duty cycle {d}% outside [0, 100]")
            }
            CodecError::CurrentOutOfRange(a) => {
                write!(f, "current {a} A outside the encodable range [6, 80] A")
            }
            CodecError::CurrentInDeadBand(a) => write!(
                f,
                "current {a} A falls in the (51, 52.5] A dead band of the piecewise duty map"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CodecError {}

/// Decode a duty cycle into the advertised supply current.
pub fn duty_to_current(duty: DutyCycle) -> AmpacityReading {
    let d = duty.value();
    if d < 3.0 {
        AmpacityReading::InvalidLow
    } else if d <= 7.0 {
        AmpacityReading::DigitalComm
    } else if d < 10.0 {
        AmpacityReading::InvalidGap
    } else if d <= 85.0 {
        AmpacityReading::Amps(0.6 * d)
    } else if d <= 96.0 {
        AmpacityReading::Amps(2.5 * (d - 64.0))
    } else {
        // anything past 96% reads as the 96% maximum
        AmpacityReading::Amps(80.0)
    }
}

/// Encode a supply current into the duty cycle that advertises it.
///
/// Total on [6, 51] ∪ (52.5, 80] A; every accepted current decodes back
/// exactly. The (51, 52.5] dead band is rejected (see module docs).
pub fn current_to_duty(amps: f64) -> Result<DutyCycle, CodecError> {
    if !amps.is_finite() || !(6.0..=80.0).contains(&amps) {
        return Err(CodecError::CurrentOutOfRange(amps));
    }
    if amps <= 51.0 {
        DutyCycle::percent(amps / 0.6)
    } else if amps > 52.5 {
        DutyCycle::percent(amps / 2.5 + 64.0)
    } else {
        Err(CodecError::CurrentInDeadBand(amps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn duty(d: f64) -> DutyCycle {
        DutyCycle::percent(d).unwrap()
    }

    #[test]
    fn standard_duty_current_rows() {
        // duty %, advertised A, slack for the table's rounded duty values
        let rows = [
            (10.0, 6.0),
            (16.6, 10.0),
            (17.4, 10.4),
            (18.4, 11.0),
            (25.0, 15.0),
            (26.7, 16.0),
            (50.0, 30.0),
            (53.3, 32.0),
        ];
        for (d, amps) in rows {
            let got = duty_to_current(duty(d)).amps().unwrap();
            assert!(
                (got - amps).abs() <= 0.05,
                "duty {d}% decoded {got} A, expected {amps} A"
            );
        }
    }

    #[test]
    fn above_96_clamps_to_80() {
        assert_eq!(duty_to_current(duty(97.0)), AmpacityReading::Amps(80.0));
        assert_eq!(duty_to_current(duty(100.0)), AmpacityReading::Amps(80.0));
    }

    #[test]
    fn digital_comm_band() {
        assert_eq!(duty_to_current(duty(5.0)), AmpacityReading::DigitalComm);
        assert_eq!(duty_to_current(duty(3.0)), AmpacityReading::DigitalComm);
        assert_eq!(duty_to_current(duty(7.0)), AmpacityReading::DigitalComm);
    }

    #[test]
    fn invalid_bands() {
        assert_eq!(duty_to_current(duty(2.0)), AmpacityReading::InvalidLow);
        assert_eq!(duty_to_current(duty(8.0)), AmpacityReading::InvalidGap);
        assert_eq!(duty_to_current(duty(9.9)), AmpacityReading::InvalidGap);
    }

    #[test]
    fn high_segment_example() {
        let got = duty_to_current(duty(90.0)).amps().unwrap();
        assert!((got - 65.0).abs() < 1e-12);
    }

    #[test]
    fn segment_discontinuity_at_85_preserved() {
        let low = duty_to_current(duty(85.0)).amps().unwrap();
        let high = duty_to_current(duty(85.0 + 1e-9)).amps().unwrap();
        assert!((low - 51.0).abs() < 1e-12);
        assert!((high - 52.5).abs() < 1e-6);
    }

    #[test]
    fn encode_examples() {
        assert!((current_to_duty(30.0).unwrap().value() - 50.0).abs() < 1e-12);
        assert!((current_to_duty(80.0).unwrap().value() - 96.0).abs() < 1e-12);
        assert!((current_to_duty(6.0).unwrap().value() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn encode_rejects_out_of_range() {
        assert!(matches!(
            current_to_duty(100.0),
            Err(CodecError::CurrentOutOfRange(_))
        ));
        assert!(matches!(
            current_to_duty(5.0),
            Err(CodecError::CurrentOutOfRange(_))
        ));
    }

    #[test]
    fn encode_rejects_dead_band() {
        // 52 A would need duty 84.8% on the high segment, but 84.8% decodes
        // via the low segment to 50.88 A — unrepresentable, so refused
        assert!(matches!(
            current_to_duty(52.0),
            Err(CodecError::CurrentInDeadBand(_))
        ));
        assert!(current_to_duty(51.0).is_ok());
        assert!(matches!(
            current_to_duty(52.5),
            Err(CodecError::CurrentInDeadBand(_))
        ));
        let d = current_to_duty(52.5 + 1e-9).unwrap();
        assert!(duty_to_current(d).amps().unwrap() > 52.5);
    }
}
