//! Deterministic fixed-step co-simulation of charger + cable (+ attack) +
//! vehicle over a scripted event timeline.
//!
//! Each tick solves the pilot circuit quasi-statically (state switching is
//! slow against the 1 kHz PWM), advances both protocol machines, and
//! accumulates the delivered-energy ledger and outcome flags. Waveform-level
//! simulation is only invoked for the duty-cycle attacks, whose
//! vehicle-perceived duty is computed once from a 50 ms, 1 MHz rendering of
//! the engaged configuration.
//!
//! `run` is a pure function of the scenario: identical scenarios produce
//! identical reports bit for bit.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::attack::{
    apply_parallel, apply_serial, automation_output, fake_load_transform, tlc555_transform,
    AttackError, AttackSpec, ParallelAttachmentAttack, SerialInsertionAttack,
};
use crate::circuit::{solve_baseline, PilotSolution, PilotSource, Resistance};
use crate::codec::{duty_to_current, DutyCycle};
use crate::state::{
    detect_disparity, ev_plug, ev_replug, ev_step, ev_unplug, evse_reset, evse_step,
    ChargerProfile, ChargingState, EvCommand, EvProfile, EvStatus, EvseStatus, LatchReason,
    PerceivedPilot,
};
use crate::waveform::{measure, synthesize, PwmParams};

/// Default simulation step: 10 PWM periods.
pub const DEFAULT_TICK: f64 = 0.01;
/// How long a signal-visible state disparity must persist before it counts
/// as a communication fault.
const DISPARITY_DETECT_S: f64 = 0.5;
/// How long the contactor must feed a non-charging vehicle before the
/// unsolicited-energization flag sets (filters the one-tick benign stop
/// transition).
const UNSOLICITED_DEBOUNCE_S: f64 = 0.1;
/// Rendering parameters for the duty-cycle attacks.
const DUTY_SIM_RATE: f64 = 1_000_000.0;
const DUTY_SIM_SPAN: f64 = 0.05;

/// Scripted action at one instant of the timeline.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum EventKind {
    PlugIn,
    Unplug,
    EvStopCharging,
    EvStartCharging,
    EngageAttack,
    DisengageAttack,
    /// Retune the engaged serial/parallel attack resistor.
    SetRAtt {
        ohms: f64,
    },
    /// Unplug and reseat in one step; the only action that clears latches.
    Replug,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Event {
    pub t: f64,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub kind: EventKind,
}

/// Complete description of one run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub charger: ChargerProfile,
    pub ev: EvProfile,
    pub attack: Option<AttackSpec>,
    /// Events sorted by time; ties apply in order.
    pub timeline: Vec<Event>,
    pub duration: f64,
    pub tick: f64,
    /// Battery state of charge at t = 0, in [0, 1].
    pub initial_soc: f64,
}

impl Scenario {
    /// Attack-free scaffold with the default tick and a half-full battery.
    pub fn new(name: &str, charger: ChargerProfile, ev: EvProfile) -> Scenario {
        Scenario {
            name: String::from(name),
            charger,
            ev,
            attack: None,
            timeline: Vec::new(),
            duration: 10.0,
            tick: DEFAULT_TICK,
            initial_soc: 0.5,
        }
    }

    pub fn at(mut self, t: f64, kind: EventKind) -> Scenario {
        self.timeline.push(Event { t, kind });
        self
    }
}

/// One trace sample (end-of-tick view).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TickRecord {
    pub t: f64,
    pub v_evse: f64,
    pub v_ev: f64,
    pub evse_state: ChargingState,
    pub ev_state: ChargingState,
    pub advertised_amps: f64,
    pub drawn_amps: f64,
    pub ev_latched: bool,
}

/// Sticky outcome flags: once set during a run they stay set in the report,
/// even if a later replug recovers the session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OutcomeFlags {
    pub dos_communication_error: bool,
    pub low_pilot_voltage_error: bool,
    pub unsolicited_energization: bool,
    pub overcharge_past_limit: bool,
    pub latched: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimReport {
    pub scenario: String,
    pub flags: OutcomeFlags,
    pub delivered_energy_kwh: f64,
    pub final_evse_state: ChargingState,
    pub final_ev_state: ChargingState,
    pub final_soc: f64,
    pub trace: Vec<TickRecord>,
}

/// Summary bucket for a finished run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Outcome {
    Normal,
    Dos,
    ForcedCharging,
    ErrorLatched,
    RateReduced,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        let s = match self {
            Outcome::Normal => "normal",
            Outcome::Dos => "dos",
            Outcome::ForcedCharging => "forced_charging",
            Outcome::ErrorLatched => "error_latched",
            Outcome::RateReduced => "rate_reduced",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    InvalidTick(f64),
    InvalidDuration(f64),
    InvalidSoc(f64),
    InvalidProfile(String),
    /// Timeline events must be sorted by time.
    UnsortedTimeline {
        index: usize,
    },
    EventAfterEnd {
        t: f64,
        duration: f64,
    },
    EngageWithoutAttack {
        index: usize,
    },
    SetRAttWithoutResistorAttack {
        index: usize,
    },
    SetRAttWhileDisengaged {
        index: usize,
    },
    InvalidRAtt {
        index: usize,
        ohms: f64,
    },
    /// Attack parameters that cannot produce a waveform (checked up front).
    Attack(AttackError),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            SimError::InvalidTick(t) => write!(f, "tick {t} s must be positive and finite"),
            SimError::InvalidDuration(d) => write!(f, "duration {d} s must be positive"),
            SimError::InvalidSoc(s) => write!(f, "initial_soc {s} must lie in [0, 1]"),
            SimError::InvalidProfile(msg) => write!(f, "invalid profile: {msg}"),
            SimError::UnsortedTimeline { index } => {
                write!(f, "timeline event {index} is earlier than its predecessor")
            }
            SimError::EventAfterEnd { t, duration } => {
                write!(f, "event at t = {t} s lies past the {duration} s duration")
            }
            SimError::EngageWithoutAttack { index } => {
                write!(
                    f,
                    "event {index} engages an attack but the scenario has none"
                )
            }
            SimError::SetRAttWithoutResistorAttack { index } => {
                write!(
                    f,
                    "event {index}: set_r_att requires a serial or parallel attack"
                )
            }
            SimError::SetRAttWhileDisengaged { index } => {
                write!(
                    f,
                    "event {index}: set_r_att is only valid while the attack is engaged"
                )
            }
            SimError::InvalidRAtt { index, ohms } => {
                write!(
                    f,
                    "event {index}: r_att {ohms} must be finite and nonnegative"
                )
            }
            SimError::Attack(e) => write!(f, "attack parameters: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SimError {}

impl From<AttackError> for SimError {
    fn from(e: AttackError) -> Self {
        SimError::Attack(e)
    }
}

fn validate(s: &Scenario) -> Result<(), SimError> {
    if !(s.tick.is_finite() && s.tick > 0.0) {
        return Err(SimError::InvalidTick(s.tick));
    }
    if !(s.duration.is_finite() && s.duration > 0.0) {
        return Err(SimError::InvalidDuration(s.duration));
    }
    if !(0.0..=1.0).contains(&s.initial_soc) {
        return Err(SimError::InvalidSoc(s.initial_soc));
    }
    s.charger.validate().map_err(SimError::InvalidProfile)?;
    s.ev.validate().map_err(SimError::InvalidProfile)?;
    let mut engaged = false;
    let mut prev_t = f64::NEG_INFINITY;
    for (index, ev) in s.timeline.iter().enumerate() {
        if ev.t < prev_t {
            return Err(SimError::UnsortedTimeline { index });
        }
        prev_t = ev.t;
        if ev.t > s.duration {
            return Err(SimError::EventAfterEnd {
                t: ev.t,
                duration: s.duration,
            });
        }
        match ev.kind {
            EventKind::EngageAttack => {
                if s.attack.is_none() {
                    return Err(SimError::EngageWithoutAttack { index });
                }
                engaged = true;
            }
            EventKind::DisengageAttack => engaged = false,
            EventKind::SetRAtt { ohms } => {
                match s.attack {
                    Some(a) if a.is_resistor_based() => {}
                    _ => return Err(SimError::SetRAttWithoutResistorAttack { index }),
                }
                if !engaged {
                    return Err(SimError::SetRAttWhileDisengaged { index });
                }
                if !(ohms.is_finite() && ohms >= 0.0) {
                    return Err(SimError::InvalidRAtt { index, ohms });
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// Precomputed behavior of a duty-cycle attack in its engaged state.
#[derive(Debug, Clone, Copy)]
struct DutyAttackPlan {
    /// Duty the vehicle decodes while the attack operates.
    ev_duty: DutyCycle,
    /// Plateau-mean threshold check: the fake-load state gate only arms in
    /// state C, so the plan applies only when the armed check passes.
    armed_check: Option<(f64, f64)>, // (state_gain, v_ref)
}

fn plan_duty_attack(
    attack: &AttackSpec,
    charger: &ChargerProfile,
    ev: &EvProfile,
    src: &PilotSource,
) -> Result<Option<DutyAttackPlan>, SimError> {
    let advertised = charger.advertised_duty();
    match attack {
        AttackSpec::Tlc555(att) => {
            let input = PwmParams {
                freq: charger.pwm_freq,
                duty: advertised,
                v_high: 6.0,
                v_low: -12.0,
            };
            let out = tlc555_transform(att, &input)?;
            Ok(Some(DutyAttackPlan {
                ev_duty: out.duty,
                armed_check: None,
            }))
        }
        AttackSpec::FakeLoad(att) => {
            // Render the engaged configuration: the charger-side plateau is
            // pinned by the fake load while the vehicle is diverted, and the
            // bench traces show the circuit locking onto that level.
            let rf_level = solve_baseline(src, att.r_f, ev.diode).v_evse;
            let pwm = PwmParams {
                freq: charger.pwm_freq,
                duty: advertised,
                v_high: rf_level,
                v_low: -12.0,
            };
            let signal =
                synthesize(&pwm, DUTY_SIM_SPAN, DUTY_SIM_RATE).map_err(AttackError::from)?;
            let out = fake_load_transform(att, &signal, ev.r_state_c)?;
            let m = measure(&out.ev_side);
            let ev_duty = DutyCycle::percent(m.duty_percent.clamp(0.0, 100.0))
                .expect("measured duty is a percentage");
            Ok(Some(DutyAttackPlan {
                ev_duty,
                armed_check: Some((att.state_gain, att.v_ref)),
            }))
        }
        _ => Ok(None),
    }
}

struct EngineState {
    evse: EvseStatus,
    ev: EvStatus,
    engaged: bool,
    r_att: Resistance,
    pending_command: EvCommand,
    disparity_hold: f64,
    unsolicited_hold: f64,
    energy_j: f64,
    battery_j: f64,
    flags: OutcomeFlags,
}

/// Run a scenario to completion.
pub fn run(scenario: &Scenario) -> Result<SimReport, SimError> {
    validate(scenario)?;
    let charger = &scenario.charger;
    let evp = &scenario.ev;
    let src = PilotSource {
        r1: charger.r1,
        ..PilotSource::default()
    };
    let duty_plan = match &scenario.attack {
        Some(a) => plan_duty_attack(a, charger, evp, &src)?,
        None => None,
    };
    let initial_r_att = match scenario.attack {
        Some(AttackSpec::Serial(a)) => a.r_att,
        Some(AttackSpec::Parallel(a)) => a.r_att,
        _ => Resistance::Open,
    };
    let mut st = EngineState {
        evse: EvseStatus::initial(charger),
        ev: EvStatus::unplugged(),
        engaged: false,
        r_att: initial_r_att,
        pending_command: EvCommand::None,
        disparity_hold: 0.0,
        unsolicited_hold: 0.0,
        energy_j: 0.0,
        battery_j: 0.0,
        flags: OutcomeFlags::default(),
    };

    let tick = scenario.tick;
    let n_ticks = {
        let n = crate::num::round(scenario.duration / tick) as usize;
        if n == 0 {
            1
        } else {
            n
        }
    };
    let mut trace = Vec::with_capacity(n_ticks);
    let mut next_event = 0usize;
    let capacity_j = evp.battery_capacity_kwh * 3.6e6;

    for k in 0..n_ticks {
        let t = k as f64 * tick;
        while next_event < scenario.timeline.len() && scenario.timeline[next_event].t <= t {
            apply_event(&mut st, scenario.timeline[next_event].kind, evp, charger);
            next_event += 1;
        }

        // Solve the pilot for the current machine outputs.
        let ev_load = st.ev.presented_load;
        let (sol, evse_level_override) = solve_pilot(scenario, &src, &st, ev_load, evp);

        st.evse = evse_step(&st.evse, sol.v_evse, charger, tick);

        // What the vehicle decodes: the advertised duty unless an engaged
        // duty attack reshapes the waveform on its side of the cable.
        let mut ev_duty = st.evse.advertised_duty;
        if st.engaged {
            if let Some(plan) = duty_plan {
                let armed = match plan.armed_check {
                    None => true,
                    Some((gain, v_ref)) => {
                        let level = evse_level_override.unwrap_or(sol.v_evse);
                        level * st.evse.advertised_duty.value() / 100.0 * gain < v_ref
                    }
                };
                if armed {
                    ev_duty = plan.ev_duty;
                }
            }
        }
        let perceived = PerceivedPilot {
            v_high: sol.v_ev,
            duty: if st.evse.pwm_active {
                Some(ev_duty)
            } else {
                None
            },
            pwm_present: st.evse.pwm_active,
        };
        let command = core::mem::replace(&mut st.pending_command, EvCommand::None);
        st.ev = ev_step(&st.ev, perceived, evp, command, tick);

        // Current and energy ledger.
        let advertised_amps = if st.evse.pwm_active {
            duty_to_current(st.evse.advertised_duty)
                .amps()
                .unwrap_or(0.0)
        } else {
            0.0
        };
        let decoded_amps = if st.evse.pwm_active {
            duty_to_current(ev_duty).amps()
        } else {
            None
        };
        let charging = st.ev.state == ChargingState::C && st.evse.contactor_closed;
        let drawn_amps = if charging {
            decoded_amps.unwrap_or(0.0).min(advertised_amps)
        } else if st.evse.contactor_closed {
            evp.parasitic_amps.min(advertised_amps)
        } else {
            0.0
        };
        st.energy_j += drawn_amps * charger.supply_volts * tick;
        if drawn_amps > 0.0 && (charging || evp.unsolicited_to_battery) {
            st.battery_j += drawn_amps * charger.supply_volts * tick;
        }
        let soc = scenario.initial_soc + st.battery_j / capacity_j;

        // Outcome flags.
        let unsolicited_now = st.evse.contactor_closed && st.ev.state != ChargingState::C;
        if unsolicited_now {
            st.unsolicited_hold += tick;
        } else {
            st.unsolicited_hold = 0.0;
        }
        if st.unsolicited_hold >= UNSOLICITED_DEBOUNCE_S {
            st.flags.unsolicited_energization = true;
        }
        // A disparity is signal-visible when the charger side stops driving
        // a session-shaped pilot (DC, dead, or negative) while the vehicle
        // still holds one; B-vs-C level differences are covered by the
        // vehicle's own band detector instead.
        let visible = matches!(
            st.evse.state,
            ChargingState::A | ChargingState::E | ChargingState::F
        ) && matches!(
            st.ev.state,
            ChargingState::B | ChargingState::C | ChargingState::D
        );
        if visible {
            st.disparity_hold += tick;
        } else {
            st.disparity_hold = 0.0;
        }
        if detect_disparity(
            st.evse.state,
            st.ev.state,
            st.disparity_hold,
            DISPARITY_DETECT_S,
        ) {
            st.flags.dos_communication_error = true;
        }
        match st.ev.latch_reason {
            Some(LatchReason::ExpectedBandMismatch) => st.flags.dos_communication_error = true,
            Some(LatchReason::LowPilotVoltage) => st.flags.low_pilot_voltage_error = true,
            None => {}
        }
        if st.ev.latched_error || st.evse.latched_error {
            st.flags.latched = true;
        }
        if soc > evp.charge_limit_fraction && drawn_amps > 0.0 {
            st.flags.overcharge_past_limit = true;
        }

        trace.push(TickRecord {
            t,
            v_evse: sol.v_evse,
            v_ev: sol.v_ev,
            evse_state: st.evse.state,
            ev_state: st.ev.state,
            advertised_amps,
            drawn_amps,
            ev_latched: st.ev.latched_error,
        });
    }

    Ok(SimReport {
        scenario: scenario.name.clone(),
        flags: st.flags,
        delivered_energy_kwh: st.energy_j / 3.6e6,
        final_evse_state: st.evse.state,
        final_ev_state: st.ev.state,
        final_soc: scenario.initial_soc + st.battery_j / capacity_j,
        trace,
    })
}

fn apply_event(st: &mut EngineState, kind: EventKind, evp: &EvProfile, charger: &ChargerProfile) {
    match kind {
        EventKind::PlugIn => {
            if !st.ev.plugged {
                st.ev = ev_plug(evp);
            }
        }
        EventKind::Unplug => st.ev = ev_unplug(),
        EventKind::Replug => {
            st.ev = ev_replug(evp);
            st.evse = evse_reset(&st.evse, charger);
        }
        EventKind::EvStartCharging => st.pending_command = EvCommand::StartCharging,
        EventKind::EvStopCharging => st.pending_command = EvCommand::StopCharging,
        EventKind::EngageAttack => st.engaged = true,
        EventKind::DisengageAttack => st.engaged = false,
        EventKind::SetRAtt { ohms } => st.r_att = Resistance::Ohms(ohms),
    }
}

/// Solve the high plateau for the current configuration. Returns the pilot
/// solution plus, for the fake-load attack, the charger-side plateau pinned
/// by the substitute load.
fn solve_pilot(
    scenario: &Scenario,
    src: &PilotSource,
    st: &EngineState,
    ev_load: Resistance,
    evp: &EvProfile,
) -> (PilotSolution, Option<f64>) {
    let baseline = || solve_baseline(src, ev_load, evp.diode);
    let Some(attack) = &scenario.attack else {
        return (baseline(), None);
    };
    match attack {
        AttackSpec::Serial(_) => {
            let att = SerialInsertionAttack {
                r_att: st.r_att,
                switch_closed: !st.engaged,
            };
            (apply_serial(&att, src, ev_load, evp.diode), None)
        }
        AttackSpec::Parallel(att) => {
            let att = ParallelAttachmentAttack {
                r_att: st.r_att,
                switch_closed: st.engaged,
                ..*att
            };
            (apply_parallel(&att, src, ev_load, evp.diode), None)
        }
        AttackSpec::Automation(att) => {
            let base = baseline();
            if !st.engaged {
                return (base, None);
            }
            let out = automation_output(att, base.v_evse);
            if out.active {
                (
                    PilotSolution {
                        v_evse: out.v_out,
                        v_ev: out.v_out,
                    },
                    None,
                )
            } else {
                (base, None)
            }
        }
        AttackSpec::Tlc555(_) => (baseline(), None),
        AttackSpec::FakeLoad(att) => {
            let base = baseline();
            if !st.engaged {
                return (base, None);
            }
            // The state gate only arms where the scaled plateau mean sits
            // below the reference (state C); elsewhere the circuit passes
            // the line through untouched.
            let duty = scenario.charger.advertised_duty().value() / 100.0;
            let armed = base.v_evse * duty * att.state_gain < att.v_ref;
            if !armed {
                return (base, None);
            }
            let rf_level = solve_baseline(src, att.r_f, evp.diode).v_evse;
            (
                PilotSolution {
                    v_evse: rf_level,
                    v_ev: rf_level,
                },
                Some(rf_level),
            )
        }
    }
}

/// Map a finished report to its outcome bucket.
///
/// Priority: a communication fault outranks forced charging, which outranks
/// a rate reduction, which outranks a bare latch.
pub fn classify_outcome(report: &SimReport) -> Outcome {
    if report.flags.dos_communication_error {
        return Outcome::Dos;
    }
    if report.flags.unsolicited_energization {
        return Outcome::ForcedCharging;
    }
    let rate_reduced = report.trace.iter().any(|r| {
        r.ev_state == ChargingState::C
            && r.drawn_amps > 0.0
            && r.advertised_amps - r.drawn_amps > 1.0
    });
    if rate_reduced {
        return Outcome::RateReduced;
    }
    if report.flags.latched {
        return Outcome::ErrorLatched;
    }
    Outcome::Normal
}

/// The benign plug-and-charge sequence used by several tests and bundled
/// scenarios: plug at 1 s, request charge at 2 s.
pub fn benign_scenario(charger: ChargerProfile, ev: EvProfile) -> Scenario {
    Scenario::new("benign", charger, ev)
        .at(1.0, EventKind::PlugIn)
        .at(2.0, EventKind::EvStartCharging)
}
