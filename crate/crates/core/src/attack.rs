//! Behavioral models of the five pilot-line attack circuits.
//!
//! Each model maps a benign pilot configuration to an attacked one:
//!
//! * serial insertion — resistor in series with the vehicle, splitting the
//!   two ends' perceived voltages,
//! * parallel attachment — diode+resistor branch in parallel with the
//!   vehicle load, lowering the shared voltage,
//! * automation — comparator/MOSFET stage that sinks extra divider current
//!   only in the targeted state,
//! * TLC555 monostable — regenerates the pilot with a fixed 1.1·R·C high
//!   time, shrinking the duty cycle the vehicle decodes,
//! * fake load — MOSFET switch matrix that briefly swaps the vehicle for a
//!   substitute resistor each period, carving the vehicle-side duty down
//!   while the charger keeps seeing a state C load.
//!
//! The resistor attacks reduce to the closed-form solvers in
//! [`crate::circuit`]; the duty-cycle attacks work on the sampled waveforms
//! of [`crate::waveform`].

use alloc::vec::Vec;
use core::fmt;

use crate::circuit::{
    solve_parallel_branches, solve_serial, Branch, DiodeModel, PilotSolution, PilotSource,
    Resistance,
};
use crate::codec::DutyCycle;
use crate::waveform::{
    rc_alpha, rc_run, rectify, PwmParams, RcStage, SampledSignal, WaveformError,
};

/// Resistor inserted in series with the vehicle, behind a bypass switch.
/// The switch is installed closed, shorting the resistor out until the
/// attack starts.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SerialInsertionAttack {
    pub r_att: Resistance,
    /// Closed bypass = attack disengaged (effective resistance 0).
    pub switch_closed: bool,
}

impl Default for SerialInsertionAttack {
    fn default() -> Self {
        SerialInsertionAttack {
            r_att: Resistance::Ohms(0.0),
            switch_closed: true,
        }
    }
}

impl SerialInsertionAttack {
    /// Resistance actually present in the loop.
    pub fn effective_r(&self) -> Resistance {
        if self.switch_closed {
            Resistance::Ohms(0.0)
        } else {
            self.r_att
        }
    }
}

/// Diode+resistor branch attached in parallel with the vehicle load,
/// behind a series switch. The switch is installed open, leaving the
/// branch disconnected until the attack starts.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ParallelAttachmentAttack {
    pub r_att: Resistance,
    /// Closed switch = attack engaged (branch connected).
    pub switch_closed: bool,
    pub diode: DiodeModel,
}

impl Default for ParallelAttachmentAttack {
    fn default() -> Self {
        ParallelAttachmentAttack {
            r_att: Resistance::Open,
            switch_closed: false,
            diode: DiodeModel::ideal(),
        }
    }
}

impl ParallelAttachmentAttack {
    /// Branch resistance seen by the pilot node.
    pub fn branch_r(&self) -> Resistance {
        if self.switch_closed {
            self.r_att
        } else {
            Resistance::Open
        }
    }
}

/// Serial insertion solved on the pilot loop (a closed bypass reproduces
/// the baseline solution exactly).
pub fn apply_serial(
    att: &SerialInsertionAttack,
    src: &PilotSource,
    r_v: Resistance,
    ev_diode: DiodeModel,
) -> PilotSolution {
    solve_serial(src, att.effective_r(), r_v, ev_diode)
}

/// Parallel attachment solved on the pilot node, honoring the attack
/// branch's own blocking diode.
pub fn apply_parallel(
    att: &ParallelAttachmentAttack,
    src: &PilotSource,
    r_v: Resistance,
    ev_diode: DiodeModel,
) -> PilotSolution {
    solve_parallel_branches(
        src,
        Branch {
            r: att.branch_r(),
            diode: att.diode,
        },
        Branch {
            r: r_v,
            diode: ev_diode,
        },
    )
}

/// Comparator/MOSFET stage attached in parallel with the vehicle.
///
/// An R4/R5 divider taps the pilot onto the comparator's inverting input;
/// while that tap sits below `v_ref` the MOSFET conducts and the extra
/// divider current drops `drop_v` across the charger's R1. The defaults
/// put the tap at 1.3 V in state A (armed but inactive) and 0.975 V in
/// state B (active).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AutomationAttack {
    pub r4: Resistance,
    pub r5: Resistance,
    pub v_ref: f64,
    /// Voltage the MOSFET stage drops across R1 while active.
    pub drop_v: f64,
}

impl Default for AutomationAttack {
    fn default() -> Self {
        AutomationAttack {
            r4: Resistance::Ohms(10_700.0),
            r5: Resistance::Ohms(1_300.0),
            v_ref: 1.2,
            drop_v: 3.0,
        }
    }
}

/// Output of the automation stage for one pilot level.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComparatorOutput {
    pub v_out: f64,
    pub active: bool,
}

/// Evaluate the automation circuit against a pilot high level.
pub fn automation_output(att: &AutomationAttack, v_pilot_high: f64) -> ComparatorOutput {
    let r4 = att.r4.get().expect("R4 must be finite");
    let r5 = att.r5.get().expect("R5 must be finite");
    let pin4 = v_pilot_high * r5 / (r4 + r5);
    let active = pin4 < att.v_ref;
    let v_out = if active {
        let v = v_pilot_high - att.drop_v;
        if v > 0.0 {
            v
        } else {
            0.0
        }
    } else {
        v_pilot_high
    };
    ComparatorOutput { v_out, active }
}

/// Monostable TLC555 stage regenerating the vehicle-side pilot.
///
/// Triggered once per period on the falling edge, the output stays high
/// for 1.1·R·C, so the vehicle decodes `1.1·R·C·f` as its duty cycle no
/// matter what the charger advertised. Defaults reproduce the measured
/// 17.41% (10 A) attack on a 26.5% pilot.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Tlc555Attack {
    pub r: Resistance,
    pub c: f64,
    /// Output-level offset; the bench circuit measured +0.2 V over its
    /// input plateau.
    pub v_offset: f64,
}

impl Default for Tlc555Attack {
    fn default() -> Self {
        Tlc555Attack {
            r: Resistance::Ohms(15_830.0),
            c: 10e-9,
            v_offset: 0.0,
        }
    }
}

impl Tlc555Attack {
    /// Monostable high time in seconds.
    pub fn pulse_width(&self) -> f64 {
        1.1 * self.r.get().expect("R must be finite") * self.c
    }
}

/// Replace the input duty with the monostable pulse width.
pub fn tlc555_transform(att: &Tlc555Attack, input: &PwmParams) -> Result<PwmParams, AttackError> {
    let d = input.duty.value();
    if !(0.0 < d && d < 100.0) {
        return Err(AttackError::NotPwm { duty: d });
    }
    let period = 1.0 / input.freq;
    let pulse = att.pulse_width();
    if pulse >= period {
        return Err(AttackError::RetriggerTooLong { pulse, period });
    }
    let duty = DutyCycle::percent(pulse * input.freq * 100.0).expect("pulse < period");
    Ok(PwmParams {
        freq: input.freq,
        duty,
        v_high: input.v_high + att.v_offset,
        v_low: input.v_low,
    })
}

/// How the fake-load MOSFETs are modeled.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "mode", rename_all = "snake_case"))]
pub enum SwitchModel {
    /// Instantaneous switching; the analytic reference.
    Ideal,
    /// Finite edge slopes from an output RC stage, matching the bench
    /// traces where the vehicle-side voltage cannot step to v_ss.
    RcFaithful { tau_edge: f64 },
}

/// Fake-load attack: four-block analog circuit that diverts part of every
/// high interval away from the vehicle.
///
/// Block 1 low-passes the rectified pilot with a large time constant into
/// the `State` signal (comparator: attack armed only where the scaled
/// plateau-mean sits below `v_ref`, i.e. in state C). Block 2 low-passes it
/// with a small time constant into the ramping `DT` signal. Block 4's
/// switch matrix then routes, per sample:
///
/// * state gate inactive → vehicle connected (pass-through),
/// * state gate active, DT ≤ v_ref → vehicle connected,
/// * state gate active, DT > v_ref → vehicle driven to `v_ss`, charger
///   sees the fake load `r_f`.
///
/// `state_gain`/`dt_gain` are the block divider ratios; the defaults
/// reproduce the measured 26.5% → 18.42% (11 A) reduction with the charger
/// held in state C by a 667 Ω fake load (4.8 V plateau).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FakeLoadAttack {
    /// Block 1 time constant (state measurement).
    pub tau_state: f64,
    /// Block 2 time constant (duty detection ramp).
    pub tau_dt: f64,
    pub v_ref: f64,
    /// Substitute load the charger sees while the vehicle is detached.
    pub r_f: Resistance,
    /// Rail the vehicle side is pulled to while detached.
    pub v_ss: f64,
    /// Divider ratio ahead of the state RC stage.
    pub state_gain: f64,
    /// Divider ratio ahead of the DT RC stage.
    pub dt_gain: f64,
    pub switch: SwitchModel,
}

impl Default for FakeLoadAttack {
    fn default() -> Self {
        FakeLoadAttack {
            tau_state: 20e-3,
            tau_dt: 0.2e-3,
            v_ref: 1.2,
            // 12 * 666.667 / (1000 + 666.667) = 4.8 V: stays inside state C
            r_f: Resistance::Ohms(2000.0 / 3.0),
            v_ss: -12.0,
            state_gain: 0.63,
            dt_gain: 0.41028,
            switch: SwitchModel::RcFaithful { tau_edge: 20e-6 },
        }
    }
}

/// Vehicle-side waveform plus the load the charger saw at each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FakeLoadOutput {
    pub ev_side: SampledSignal,
    /// Per-sample load on the charger: the vehicle's own load while
    /// connected, `r_f` while diverted.
    pub evse_load: Vec<Resistance>,
}

impl FakeLoadOutput {
    /// Fraction of vehicle-connected samples among the diverted-plus-
    /// connected total, for oracle comparisons.
    pub fn diverted_fraction(&self, ev_load: Resistance) -> f64 {
        let total = self.evse_load.len();
        if total == 0 {
            return 0.0;
        }
        let diverted = self.evse_load.iter().filter(|&&r| r != ev_load).count();
        diverted as f64 / total as f64
    }
}

/// Run a charger-side pilot waveform through the fake-load circuit.
///
/// `ev_load` is the resistance the vehicle itself presents; it is what the
/// charger sees whenever the switch matrix keeps the vehicle connected.
/// The internal RC stages are initialized at their periodic steady state
/// (the signal is treated as one period of a repeating waveform), so the
/// output reflects engaged operation rather than power-on transients.
pub fn fake_load_transform(
    att: &FakeLoadAttack,
    evse_signal: &SampledSignal,
    ev_load: Resistance,
) -> Result<FakeLoadOutput, AttackError> {
    let dt = evse_signal.dt();
    for tau in [att.tau_state, att.tau_dt] {
        if dt > tau / 10.0 {
            return Err(AttackError::Waveform(WaveformError::Undersampled {
                dt,
                tau,
            }));
        }
    }
    let rect = rectify(evse_signal, DiodeModel::ideal());
    let state_in: Vec<f64> = rect.samples.iter().map(|v| v * att.state_gain).collect();
    let dt_in: Vec<f64> = rect.samples.iter().map(|v| v * att.dt_gain).collect();
    let state_sig = rc_periodic(&state_in, dt, att.tau_state);
    let dt_sig = rc_periodic(&dt_in, dt, att.tau_dt);

    let n = evse_signal.samples.len();
    let mut ev = Vec::with_capacity(n);
    let mut load = Vec::with_capacity(n);
    for i in 0..n {
        let armed = state_sig[i] < att.v_ref;
        if armed && dt_sig[i] > att.v_ref {
            ev.push(att.v_ss);
            load.push(att.r_f);
        } else {
            ev.push(evse_signal.samples[i]);
            load.push(ev_load);
        }
    }
    let ev_side = SampledSignal {
        sample_rate: evse_signal.sample_rate,
        samples: ev,
    };
    let ev_side = match att.switch {
        SwitchModel::Ideal => ev_side,
        SwitchModel::RcFaithful { tau_edge } => {
            crate::waveform::rc_filter(&ev_side, RcStage::from_tau(tau_edge))
                .map_err(AttackError::Waveform)?
        }
    };
    Ok(FakeLoadOutput {
        ev_side,
        evse_load: load,
    })
}

/// One-pole filter initialized at its periodic steady state.
///
/// The recurrence is affine in its initial value: one pass over the signal
/// maps `y0` to `a·y0 + b` with `a = e^(−duration/τ)`, so the steady state
/// under periodic repetition is the fixed point `b / (1 − a)`.
fn rc_periodic(x: &[f64], dt: f64, tau: f64) -> Vec<f64> {
    let alpha = rc_alpha(dt, tau);
    let mut b = 0.0;
    for &xi in x {
        b += (xi - b) * alpha;
    }
    let a = crate::num::exp(-(x.len() as f64) * dt / tau);
    let y0 = if 1.0 - a > f64::MIN_POSITIVE {
        b / (1.0 - a)
    } else {
        b
    };
    rc_run(x, alpha, y0)
}

/// Tagged description of one attack circuit, as used in scenario files.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum AttackSpec {
    Serial(SerialInsertionAttack),
    Parallel(ParallelAttachmentAttack),
    Automation(AutomationAttack),
    Tlc555(Tlc555Attack),
    FakeLoad(FakeLoadAttack),
}

impl AttackSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            AttackSpec::Serial(_) => "serial",
            AttackSpec::Parallel(_) => "parallel",
            AttackSpec::Automation(_) => "automation",
            AttackSpec::Tlc555(_) => "tlc555",
            AttackSpec::FakeLoad(_) => "fake_load",
        }
    }

    /// Attacks whose engaged resistance can be retuned mid-run.
    pub fn is_resistor_based(&self) -> bool {
        matches!(self, AttackSpec::Serial(_) | AttackSpec::Parallel(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackError {
    /// TLC555 input must be a proper PWM, not DC.
    NotPwm {
        duty: f64,
    },
    /// 1.1·R·C at or beyond the PWM period: retriggering is undefined.
    RetriggerTooLong {
        pulse: f64,
        period: f64,
    },
    Waveform(WaveformError),
}

impl fmt::Display for AttackError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            AttackError::NotPwm { duty } => {
                write!(f, "input duty {duty}% is not a PWM (need 0 < duty < 100)")
            }
            AttackError::RetriggerTooLong { pulse, period } => write!(
                f,
                "monostable pulse {pulse} s reaches the PWM period {period} s"
            ),
            AttackError::Waveform(e) => write!(f, "{e}"),
        }
    }
}

impl From<WaveformError> for AttackError {
    fn from(e: WaveformError) -> Self {
        AttackError::Waveform(e)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for AttackError {}
