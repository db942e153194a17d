//! Charging-state classification and the EVSE / EV protocol machines.
//!
//! The J1772 states as seen on the pilot line:
//!
//! | State | High pilot (V) | Low pilot (V) | EV load (Ω) | Meaning           |
//! |-------|----------------|---------------|-------------|-------------------|
//! | A     | 12             | n/a (DC)      | none        | not connected     |
//! | B     | 9              | −12           | 2740        | EV detected       |
//! | C     | 6              | −12           | 882         | EV charging       |
//! | D     | 3              | −12           | 246         | with ventilation  |
//! | E     | 0              | 0             | —           | no power          |
//! | F     | n/a            | −12           | —           | error             |
//!
//! Real chargers classify by measured thresholds rather than the nominal
//! levels; [`ChargerProfile`] carries the per-device boundary voltages.
//! State E is reported only for a dead (≈0 V) pilot and state F is the
//! out-of-band error state, so both sit outside the A>B>C>D voltage ladder.

use alloc::string::String;

use crate::circuit::{DiodeModel, Resistance};
use crate::codec::{current_to_duty, duty_to_current, AmpacityReading, DutyCycle};
use crate::num;

/// Voltage below which the pilot counts as dead (state E).
const DEAD_PILOT_BAND: f64 = 1e-3;

/// Nominal high-pilot levels the EV expects for its own presented load.
const NOMINAL_V_STATE_B: f64 = 9.0;
const NOMINAL_V_STATE_C: f64 = 6.0;

/// J1772 charging state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ChargingState {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl ChargingState {
    /// Position on the voltage ladder A(12) > B(9) > C(6) > D(3) > E(0).
    /// F carries no nominal high level and ranks below everything.
    pub fn rank(&self) -> u8 {
        match self {
            ChargingState::A => 5,
            ChargingState::B => 4,
            ChargingState::C => 3,
            ChargingState::D => 2,
            ChargingState::E => 1,
            ChargingState::F => 0,
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, ChargingState::E | ChargingState::F)
    }
}

impl core::fmt::Display for ChargingState {
    fn fmt(&self, f: &mut core::fmt::Formatter) -> core::fmt::Result {
        let s = match self {
            ChargingState::A => "A",
            ChargingState::B => "B",
            ChargingState::C => "C",
            ChargingState::D => "D",
            ChargingState::E => "E",
            ChargingState::F => "F",
        };
        f.write_str(s)
    }
}

/// Per-charger electrical constants and measured classification boundaries.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ChargerProfile {
    pub name: String,
    /// Pilot source resistor.
    #[cfg_attr(feature = "serde", serde(default = "default_r1"))]
    pub r1: Resistance,
    /// A/B switching boundary (high pilot volts).
    pub v_ab: f64,
    /// B/C switching boundary.
    pub v_bc: f64,
    /// C/F switching boundary; absent on chargers that do not implement
    /// state F (everything positive below `v_bc` then reads C).
    #[cfg_attr(feature = "serde", serde(default))]
    pub v_cf: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub has_state_f: bool,
    /// C/D boundary, only on profiles that classify state D.
    #[cfg_attr(feature = "serde", serde(default))]
    pub v_cd: Option<f64>,
    /// D/E boundary, only meaningful together with `v_cd`.
    #[cfg_attr(feature = "serde", serde(default))]
    pub v_de: Option<f64>,
    /// Maximum supply current advertised over the pilot, in amps.
    pub max_amps: f64,
    /// AC supply voltage used for the delivered-energy ledger.
    #[cfg_attr(feature = "serde", serde(default = "default_supply_volts"))]
    pub supply_volts: f64,
    /// Pilot PWM frequency in hertz.
    #[cfg_attr(feature = "serde", serde(default = "default_pwm_freq"))]
    pub pwm_freq: f64,
    /// Whether the charger holds states E/F until a replug instead of
    /// re-probing the line.
    #[cfg_attr(feature = "serde", serde(default))]
    pub latches_on_error: bool,
}

#[cfg(feature = "serde")]
fn default_r1() -> Resistance {
    Resistance::Ohms(1000.0)
}

#[cfg(feature = "serde")]
fn default_supply_volts() -> f64 {
    220.0
}

#[cfg(feature = "serde")]
fn default_pwm_freq() -> f64 {
    1000.0
}

impl ChargerProfile {
    /// Home charger 1: no state F; everything below the B/C boundary reads C.
    pub fn charger1() -> ChargerProfile {
        ChargerProfile {
            name: String::from("charger1"),
            r1: Resistance::Ohms(1000.0),
            v_ab: 10.6,
            v_bc: 7.8,
            v_cf: None,
            has_state_f: false,
            v_cd: None,
            v_de: None,
            max_amps: 16.0,
            supply_volts: 220.0,
            pwm_freq: 1000.0,
            latches_on_error: false,
        }
    }

    /// Home charger 2: measured C/F boundary at 4.4 V.
    pub fn charger2() -> ChargerProfile {
        ChargerProfile {
            name: String::from("charger2"),
            v_cf: Some(4.4),
            has_state_f: true,
            ..ChargerProfile::charger1()
        }
    }

    /// 30 A public charging station; like charger 1 it does not display
    /// state F.
    pub fn public_charger() -> ChargerProfile {
        ChargerProfile {
            name: String::from("public_charger"),
            max_amps: 30.0,
            ..ChargerProfile::charger1()
        }
    }

    /// Idealized profile with boundaries at the midpoints of the nominal
    /// levels (10.5/7.5/4.5/1.5 V), the only bundled profile that can
    /// classify state D.
    pub fn nominal_j1772() -> ChargerProfile {
        ChargerProfile {
            name: String::from("nominal_j1772"),
            r1: Resistance::Ohms(1000.0),
            v_ab: 10.5,
            v_bc: 7.5,
            v_cf: None,
            has_state_f: true,
            v_cd: Some(4.5),
            v_de: Some(1.5),
            max_amps: 30.0,
            supply_volts: 240.0,
            pwm_freq: 1000.0,
            latches_on_error: false,
        }
    }

    /// Duty cycle this charger advertises for its maximum current. Currents
    /// inside the codec dead band fall back to the 51 A / 85% point.
    pub fn advertised_duty(&self) -> DutyCycle {
        let amps = if self.max_amps > 80.0 {
            80.0
        } else {
            self.max_amps
        };
        current_to_duty(amps)
            .or_else(|_| current_to_duty(51.0))
            .expect("51 A is always encodable")
    }

    /// Check the profile invariants, returning a description of the first
    /// violation. Comparisons are written negated so NaN fields fail.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), String> {
        use alloc::format;
        if !matches!(self.r1, Resistance::Ohms(r) if r > 0.0) {
            return Err(String::from("r1 must be finite and positive"));
        }
        if !(self.v_ab > self.v_bc) {
            return Err(format!(
                "v_ab ({}) must exceed v_bc ({})",
                self.v_ab, self.v_bc
            ));
        }
        if let Some(v_cf) = self.v_cf {
            if !(self.v_bc > v_cf) {
                return Err(format!("v_bc ({}) must exceed v_cf ({v_cf})", self.v_bc));
            }
            if !self.has_state_f {
                return Err(String::from("v_cf given but has_state_f is false"));
            }
        }
        if let (Some(v_cd), Some(v_de)) = (self.v_cd, self.v_de) {
            if !(self.v_bc > v_cd && v_cd > v_de && v_de >= 0.0) {
                return Err(String::from("require v_bc > v_cd > v_de >= 0"));
            }
        }
        if !(self.max_amps > 0.0 && self.max_amps <= 80.0) {
            return Err(format!("max_amps ({}) must lie in (0, 80]", self.max_amps));
        }
        if !(self.pwm_freq > 0.0) {
            return Err(String::from("pwm_freq must be positive"));
        }
        Ok(())
    }
}

/// Per-vehicle constants: state load resistors, error detectors, battery.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct EvProfile {
    pub r_state_b: Resistance,
    pub r_state_c: Resistance,
    pub r_state_d: Resistance,
    pub diode: DiodeModel,
    /// Whether a detected error latches until replug (the observed
    /// fail-safe behavior). When false the vehicle retries after the
    /// debounce window instead.
    pub error_latch: bool,
    /// How far the perceived high pilot may deviate from the nominal level
    /// for the currently presented load before the communication-error
    /// detector trips.
    pub expected_band_tolerance: f64,
    /// Pilot voltage below which the low-pilot-voltage detector trips
    /// (the vehicle's own state-F band).
    pub v_low_error: f64,
    /// Delay between requesting charge and presenting the state C load.
    pub handshake_delay: f64,
    /// How long a detector condition must persist before it trips.
    pub error_debounce: f64,
    pub battery_capacity_kwh: f64,
    /// State of charge the owner has capped charging at, in (0, 1].
    pub charge_limit_fraction: f64,
    /// Current consumed by vehicle electronics when the charger energizes
    /// the line without the vehicle charging.
    pub parasitic_amps: f64,
    /// Whether unsolicited energization reaches the battery (overcharge
    /// hypothesis) or only non-battery loads.
    pub unsolicited_to_battery: bool,
}

impl Default for EvProfile {
    fn default() -> Self {
        EvProfile {
            r_state_b: Resistance::Ohms(2740.0),
            r_state_c: Resistance::Ohms(882.0),
            r_state_d: Resistance::Ohms(246.0),
            diode: DiodeModel::ideal(),
            error_latch: true,
            expected_band_tolerance: 2.0,
            v_low_error: 4.4,
            handshake_delay: 0.5,
            error_debounce: 0.2,
            battery_capacity_kwh: 50.0,
            charge_limit_fraction: 0.9,
            parasitic_amps: 6.0,
            unsolicited_to_battery: false,
        }
    }
}

impl EvProfile {
    /// Check the profile invariants; negated comparisons make NaN fail.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), String> {
        let (rb, rc, rd) = match (
            self.r_state_b.get(),
            self.r_state_c.get(),
            self.r_state_d.get(),
        ) {
            (Some(b), Some(c), Some(d)) => (b, c, d),
            _ => return Err(String::from("state load resistors must be finite")),
        };
        if !(rb > rc && rc > rd && rd > 0.0) {
            return Err(String::from(
                "require r_state_b > r_state_c > r_state_d > 0",
            ));
        }
        if !(self.charge_limit_fraction > 0.0 && self.charge_limit_fraction <= 1.0) {
            return Err(String::from("charge_limit_fraction must lie in (0, 1]"));
        }
        if self.expected_band_tolerance <= 0.0
            || self.handshake_delay < 0.0
            || self.error_debounce < 0.0
            || self.parasitic_amps < 0.0
        {
            return Err(String::from(
                "timing and tolerance fields must be nonnegative",
            ));
        }
        Ok(())
    }
}

/// Classify a measured high pilot voltage against a charger's boundaries.
///
/// A dead pilot (≈0 V) reads E and a negative plateau reads F; otherwise the
/// boundary ladder applies, bottoming out at C for chargers without a
/// state-F boundary.
pub fn classify_state(v_high: f64, profile: &ChargerProfile) -> ChargingState {
    if num::abs(v_high) <= DEAD_PILOT_BAND {
        return ChargingState::E;
    }
    if v_high < 0.0 {
        return ChargingState::F;
    }
    if v_high > profile.v_ab {
        return ChargingState::A;
    }
    if v_high > profile.v_bc {
        return ChargingState::B;
    }
    if let Some(v_cd) = profile.v_cd {
        if v_high > v_cd {
            return ChargingState::C;
        }
        if v_high > profile.v_de.unwrap_or(0.0) {
            return ChargingState::D;
        }
        return ChargingState::E;
    }
    match profile.v_cf {
        Some(v_cf) if profile.has_state_f => {
            if v_high > v_cf {
                ChargingState::C
            } else {
                ChargingState::F
            }
        }
        _ => ChargingState::C,
    }
}

/// Load the vehicle presents on the pilot line in a given state. States
/// without a load row (A, E, F) present an open branch.
pub fn ev_load_for_state(state: ChargingState, profile: &EvProfile) -> Resistance {
    match state {
        ChargingState::A => Resistance::Open,
        ChargingState::B => profile.r_state_b,
        ChargingState::C => profile.r_state_c,
        ChargingState::D => profile.r_state_d,
        ChargingState::E | ChargingState::F => Resistance::Open,
    }
}

/// True when the two sides have read different states for at least the
/// detection window.
pub fn detect_disparity(
    evse_state: ChargingState,
    ev_state: ChargingState,
    hold_time: f64,
    t_detect: f64,
) -> bool {
    evse_state != ev_state && hold_time >= t_detect
}

/// Charger-side machine state: classification plus the S1 PWM switch and
/// the power contactor.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvseStatus {
    pub state: ChargingState,
    pub pwm_active: bool,
    pub advertised_duty: DutyCycle,
    pub contactor_closed: bool,
    pub latched_error: bool,
}

impl EvseStatus {
    /// Fresh charger: state A, 12 V DC on the pilot, contactor open.
    pub fn initial(profile: &ChargerProfile) -> EvseStatus {
        EvseStatus {
            state: ChargingState::A,
            pwm_active: false,
            advertised_duty: profile.advertised_duty(),
            contactor_closed: false,
            latched_error: false,
        }
    }
}

/// Advance the charger machine one step from a measured pilot voltage.
///
/// Entering B switches S1 to the ±12 V PWM at the advertised duty; entering
/// C additionally closes the contactor; returning to A reverts to 12 V DC.
/// E/F open the contactor and, on latching profiles, hold until a replug.
pub fn evse_step(
    status: &EvseStatus,
    measured_v_high: f64,
    profile: &ChargerProfile,
    _dt: f64,
) -> EvseStatus {
    if status.latched_error {
        return *status;
    }
    let state = classify_state(measured_v_high, profile);
    let mut next = *status;
    next.state = state;
    match state {
        ChargingState::A => {
            next.pwm_active = false;
            next.contactor_closed = false;
        }
        ChargingState::B | ChargingState::D => {
            next.pwm_active = true;
            next.contactor_closed = false;
        }
        ChargingState::C => {
            next.pwm_active = true;
            next.contactor_closed = true;
        }
        ChargingState::E | ChargingState::F => {
            next.pwm_active = false;
            next.contactor_closed = false;
            next.latched_error = profile.latches_on_error;
        }
    }
    next
}

/// Clear a latched charger after the cable is replugged.
pub fn evse_reset(status: &EvseStatus, profile: &ChargerProfile) -> EvseStatus {
    let _ = status;
    EvseStatus::initial(profile)
}

/// What the vehicle sees on its end of the pilot line this step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerceivedPilot {
    pub v_high: f64,
    pub duty: Option<DutyCycle>,
    pub pwm_present: bool,
}

/// Owner command delivered to the vehicle machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvCommand {
    None,
    StartCharging,
    StopCharging,
}

/// Which detector latched the vehicle into its error state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LatchReason {
    /// Pilot high voltage fell below the vehicle's state-F band.
    LowPilotVoltage,
    /// Pilot voltage inconsistent with the vehicle's own presented load.
    ExpectedBandMismatch,
}

/// Vehicle-side machine state, including the S2 load switch (as
/// `presented_load`) and the error-detector timers.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvStatus {
    pub plugged: bool,
    pub state: ChargingState,
    pub presented_load: Resistance,
    pub latched_error: bool,
    pub latch_reason: Option<LatchReason>,
    pub charge_requested: bool,
    /// Remaining B→C handshake time, when one is in progress.
    pub handshake_remaining: Option<f64>,
    /// Remaining non-latching F retry time (unused when `error_latch`).
    pub retry_remaining: Option<f64>,
    /// Accumulated time the band detector has been violated.
    pub band_violation_s: f64,
    /// Accumulated time the low-pilot detector has been violated.
    pub low_violation_s: f64,
}

impl EvStatus {
    pub fn unplugged() -> EvStatus {
        EvStatus {
            plugged: false,
            state: ChargingState::A,
            presented_load: Resistance::Open,
            latched_error: false,
            latch_reason: None,
            charge_requested: false,
            handshake_remaining: None,
            retry_remaining: None,
            band_violation_s: 0.0,
            low_violation_s: 0.0,
        }
    }

    /// State right after the connector seats: the hardware divider presents
    /// the state B load immediately.
    pub fn fresh_plugged(profile: &EvProfile) -> EvStatus {
        EvStatus {
            plugged: true,
            state: ChargingState::B,
            presented_load: profile.r_state_b,
            ..EvStatus::unplugged()
        }
    }
}

fn latch(next: &mut EvStatus, reason: LatchReason) {
    next.state = ChargingState::F;
    next.presented_load = Resistance::Open;
    next.latched_error = true;
    next.latch_reason = Some(reason);
    next.handshake_remaining = None;
}

/// Advance the vehicle machine one step.
///
/// A latched vehicle ignores everything until it is physically replugged
/// ([`ev_plug`] / [`ev_replug`]). Otherwise the step applies the owner
/// command, runs the two error detectors against the perceived pilot, and
/// walks the B→C handshake when charging has been requested.
pub fn ev_step(
    status: &EvStatus,
    perceived: PerceivedPilot,
    profile: &EvProfile,
    command: EvCommand,
    dt: f64,
) -> EvStatus {
    let mut next = *status;
    if next.latched_error {
        return next;
    }
    match command {
        EvCommand::None => {}
        EvCommand::StartCharging => next.charge_requested = true,
        EvCommand::StopCharging => {
            next.charge_requested = false;
            next.handshake_remaining = None;
            if next.state == ChargingState::C {
                next.state = ChargingState::B;
                next.presented_load = profile.r_state_b;
            }
        }
    }
    if !next.plugged {
        return next;
    }

    // Non-latching F is a retry: sit out the countdown, then re-present B.
    if next.state == ChargingState::F {
        if let Some(rem) = next.retry_remaining {
            let rem = rem - dt;
            if rem <= 0.0 {
                next.retry_remaining = None;
                next.state = ChargingState::B;
                next.presented_load = profile.r_state_b;
                next.band_violation_s = 0.0;
                next.low_violation_s = 0.0;
            } else {
                next.retry_remaining = Some(rem);
            }
        }
        return next;
    }

    // Error detectors. The expected level is keyed to the load the vehicle
    // itself presents, so a benign load switch never trips the band check.
    let expected = match next.state {
        ChargingState::C => NOMINAL_V_STATE_C,
        _ => NOMINAL_V_STATE_B,
    };
    if perceived.v_high < profile.v_low_error {
        next.low_violation_s += dt;
    } else {
        next.low_violation_s = 0.0;
    }
    if num::abs(perceived.v_high - expected) > profile.expected_band_tolerance {
        next.band_violation_s += dt;
    } else {
        next.band_violation_s = 0.0;
    }
    let tripped = if next.low_violation_s >= profile.error_debounce {
        Some(LatchReason::LowPilotVoltage)
    } else if next.band_violation_s >= profile.error_debounce {
        Some(LatchReason::ExpectedBandMismatch)
    } else {
        None
    };
    if let Some(reason) = tripped {
        latch(&mut next, reason);
        if !profile.error_latch {
            next.latched_error = false;
            next.retry_remaining = Some(profile.error_debounce);
        }
        return next;
    }

    // B→C handshake once charging is requested and a decodable PWM is seen.
    if next.state == ChargingState::B {
        let duty_ok = perceived
            .duty
            .map(|d| matches!(duty_to_current(d), AmpacityReading::Amps(_)))
            .unwrap_or(false);
        if next.charge_requested && perceived.pwm_present && duty_ok {
            let remaining = next.handshake_remaining.unwrap_or(profile.handshake_delay) - dt;
            if remaining <= 0.0 {
                next.state = ChargingState::C;
                next.presented_load = profile.r_state_c;
                next.handshake_remaining = None;
            } else {
                next.handshake_remaining = Some(remaining);
            }
        } else {
            next.handshake_remaining = None;
        }
    }
    next
}

/// Seat the connector: clears any latch and presents the state B load.
pub fn ev_plug(profile: &EvProfile) -> EvStatus {
    EvStatus::fresh_plugged(profile)
}

/// Pull the connector.
pub fn ev_unplug() -> EvStatus {
    EvStatus::unplugged()
}

/// Unplug and reseat in one step; the only action that clears a latched
/// error.
pub fn ev_replug(profile: &EvProfile) -> EvStatus {
    EvStatus::fresh_plugged(profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_table_levels_on_charger2() {
        let p = ChargerProfile::charger2();
        assert_eq!(classify_state(12.0, &p), ChargingState::A);
        assert_eq!(classify_state(8.791, &p), ChargingState::B);
        assert_eq!(classify_state(5.624, &p), ChargingState::C);
        assert_eq!(classify_state(4.0, &p), ChargingState::F);
        assert_eq!(classify_state(0.0, &p), ChargingState::E);
        assert_eq!(classify_state(-12.0, &p), ChargingState::F);
    }

    #[test]
    fn charger1_has_no_state_f() {
        let p = ChargerProfile::charger1();
        assert_eq!(classify_state(4.0, &p), ChargingState::C);
        assert_eq!(classify_state(0.5, &p), ChargingState::C);
        assert_eq!(classify_state(0.0, &p), ChargingState::E);
    }

    #[test]
    fn nominal_profile_classifies_d() {
        let p = ChargerProfile::nominal_j1772();
        assert_eq!(classify_state(12.0 * 246.0 / 1246.0, &p), ChargingState::D);
        assert_eq!(classify_state(3.0, &p), ChargingState::D);
        assert_eq!(classify_state(1.0, &p), ChargingState::E);
        assert_eq!(classify_state(5.0, &p), ChargingState::C);
    }

    #[test]
    fn boundaries_are_inclusive_below() {
        let p = ChargerProfile::charger2();
        assert_eq!(classify_state(10.6, &p), ChargingState::B);
        assert_eq!(classify_state(10.6 + 1e-9, &p), ChargingState::A);
        assert_eq!(classify_state(7.8, &p), ChargingState::C);
        assert_eq!(classify_state(4.4, &p), ChargingState::F);
    }

    #[test]
    fn ev_loads_per_state() {
        let ev = EvProfile::default();
        assert_eq!(
            ev_load_for_state(ChargingState::B, &ev),
            Resistance::Ohms(2740.0)
        );
        assert_eq!(
            ev_load_for_state(ChargingState::C, &ev),
            Resistance::Ohms(882.0)
        );
        assert_eq!(
            ev_load_for_state(ChargingState::D, &ev),
            Resistance::Ohms(246.0)
        );
        assert!(ev_load_for_state(ChargingState::A, &ev).is_open());
        assert!(ev_load_for_state(ChargingState::E, &ev).is_open());
        assert!(ev_load_for_state(ChargingState::F, &ev).is_open());
    }

    #[test]
    fn evse_walks_a_b_c_and_back() {
        let p = ChargerProfile::charger2();
        let s0 = EvseStatus::initial(&p);
        assert_eq!(s0.state, ChargingState::A);
        assert!(!s0.pwm_active);

        let s1 = evse_step(&s0, 8.79, &p, 0.01);
        assert_eq!(s1.state, ChargingState::B);
        assert!(s1.pwm_active);
        assert!(!s1.contactor_closed);

        let s2 = evse_step(&s1, 5.62, &p, 0.01);
        assert_eq!(s2.state, ChargingState::C);
        assert!(s2.contactor_closed);

        let s3 = evse_step(&s2, 12.0, &p, 0.01);
        assert_eq!(s3.state, ChargingState::A);
        assert!(!s3.contactor_closed);
        assert!(!s3.pwm_active);
    }

    #[test]
    fn evse_latch_holds_until_reset() {
        let p = ChargerProfile {
            latches_on_error: true,
            ..ChargerProfile::charger2()
        };
        let s = evse_step(&EvseStatus::initial(&p), 4.0, &p, 0.01);
        assert_eq!(s.state, ChargingState::F);
        assert!(s.latched_error);
        let s2 = evse_step(&s, 8.79, &p, 0.01);
        assert!(s2.latched_error);
        assert_eq!(s2.state, ChargingState::F);
        assert!(!evse_reset(&s2, &p).latched_error);
    }

    fn pwm(v: f64) -> PerceivedPilot {
        PerceivedPilot {
            v_high: v,
            duty: Some(DutyCycle::percent(50.0).unwrap()),
            pwm_present: true,
        }
    }

    #[test]
    fn ev_handshake_reaches_c_after_delay() {
        let ev = EvProfile::default();
        let mut s = ev_plug(&ev);
        s = ev_step(&s, pwm(8.79), &ev, EvCommand::StartCharging, 0.01);
        assert_eq!(s.state, ChargingState::B);
        let mut ticks = 0;
        while s.state == ChargingState::B && ticks < 200 {
            s = ev_step(&s, pwm(8.79), &ev, EvCommand::None, 0.01);
            ticks += 1;
        }
        assert_eq!(s.state, ChargingState::C);
        assert_eq!(s.presented_load, Resistance::Ohms(882.0));
        // handshake_delay 0.5 s at 10 ms ticks
        assert!((49..=51).contains(&ticks), "took {ticks} ticks");
    }

    #[test]
    fn ev_latches_on_low_pilot_in_c() {
        let ev = EvProfile::default();
        let mut s = ev_plug(&ev);
        s.state = ChargingState::C;
        s.presented_load = ev.r_state_c;
        s.charge_requested = true;
        for _ in 0..25 {
            s = ev_step(&s, pwm(4.0), &ev, EvCommand::None, 0.01);
        }
        assert!(s.latched_error);
        assert_eq!(s.state, ChargingState::F);
        assert_eq!(s.latch_reason, Some(LatchReason::LowPilotVoltage));
        assert!(s.presented_load.is_open());
    }

    #[test]
    fn latched_ev_ignores_recovery_and_commands() {
        let ev = EvProfile::default();
        let mut s = ev_plug(&ev);
        s.state = ChargingState::C;
        s.presented_load = ev.r_state_c;
        for _ in 0..25 {
            s = ev_step(&s, pwm(4.0), &ev, EvCommand::None, 0.01);
        }
        assert!(s.latched_error);
        for _ in 0..100 {
            s = ev_step(&s, pwm(8.79), &ev, EvCommand::StartCharging, 0.01);
        }
        assert!(s.latched_error);
        assert_eq!(s.state, ChargingState::F);
        // replug is the only way back
        let fresh = ev_replug(&ev);
        assert!(!fresh.latched_error);
        assert_eq!(fresh.state, ChargingState::B);
    }

    #[test]
    fn ev_stop_reverts_to_b() {
        let ev = EvProfile::default();
        let mut s = ev_plug(&ev);
        s.state = ChargingState::C;
        s.presented_load = ev.r_state_c;
        s.charge_requested = true;
        s = ev_step(&s, pwm(5.62), &ev, EvCommand::StopCharging, 0.01);
        assert_eq!(s.state, ChargingState::B);
        assert_eq!(s.presented_load, Resistance::Ohms(2740.0));
        assert!(!s.charge_requested);
    }

    #[test]
    fn band_mismatch_latches_as_comm_error() {
        let ev = EvProfile::default();
        let mut s = ev_plug(&ev);
        // presenting 2740 but seeing 6.4 V: outside 9 ± 2
        for _ in 0..25 {
            s = ev_step(&s, pwm(6.4), &ev, EvCommand::None, 0.01);
        }
        assert!(s.latched_error);
        assert_eq!(s.latch_reason, Some(LatchReason::ExpectedBandMismatch));
    }

    #[test]
    fn band_check_tolerates_benign_levels() {
        let ev = EvProfile::default();
        let mut s = ev_plug(&ev);
        for _ in 0..100 {
            s = ev_step(&s, pwm(8.79), &ev, EvCommand::None, 0.01);
        }
        assert!(!s.latched_error);
        // forced-charging operating point: EVSE reads C, vehicle stays quiet
        for _ in 0..100 {
            s = ev_step(&s, pwm(7.19), &ev, EvCommand::None, 0.01);
        }
        assert!(!s.latched_error);
    }

    #[test]
    fn disparity_detection_examples() {
        assert!(detect_disparity(
            ChargingState::A,
            ChargingState::C,
            2.0,
            0.5
        ));
        assert!(!detect_disparity(
            ChargingState::B,
            ChargingState::B,
            f64::INFINITY,
            0.5
        ));
        assert!(!detect_disparity(
            ChargingState::B,
            ChargingState::C,
            0.1,
            0.5
        ));
    }

    #[test]
    fn profile_validation() {
        assert!(ChargerProfile::charger1().validate().is_ok());
        assert!(ChargerProfile::charger2().validate().is_ok());
        assert!(ChargerProfile::public_charger().validate().is_ok());
        assert!(ChargerProfile::nominal_j1772().validate().is_ok());
        assert!(EvProfile::default().validate().is_ok());

        let bad = ChargerProfile {
            v_bc: 11.0,
            ..ChargerProfile::charger1()
        };
        assert!(bad.validate().is_err());
    }
}
