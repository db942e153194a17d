//! Closed-form attack-feasibility ranges and brute-force sweeps.
//!
//! For the parallel attachment attack the working range of the attack
//! resistor comes from inverting the divider equation against a charger's
//! switching boundaries; for serial insertion the interesting quantities
//! are the resistances at which each side crosses a boundary and the
//! guaranteed-disparity threshold `r = λ(R1 + R_v)/(V_high − λ)` from the
//! error-tolerance condition `V_diff ≥ λ`.
//!
//! [`sweep`] mirrors the bench procedure of rotating a potentiometer
//! through a resistance grid and recording what each side reads; the test
//! suite uses it as the independent oracle for every closed-form boundary.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::circuit::{
    solve_parallel_branches, solve_serial, Branch, PilotSolution, PilotSource, Resistance,
};
use crate::state::{classify_state, ev_load_for_state, ChargerProfile, ChargingState, EvProfile};

/// Target of a parallel attachment attack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ParallelGoal {
    /// Force both sides from standby into charging.
    BToC,
    /// Force charging into the error state.
    CToF,
    /// Force standby straight into the error state.
    BToF,
}

impl ParallelGoal {
    pub fn label(&self) -> &'static str {
        match self {
            ParallelGoal::BToC => "B->C",
            ParallelGoal::CToF => "C->F",
            ParallelGoal::BToF => "B->F",
        }
    }
}

/// Benign state a serial insertion attack starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SerialGoal {
    /// From state B: charger drifts toward A while the vehicle end drifts
    /// toward C.
    SplitFromB,
    /// From state C: charger drifts toward B while the vehicle end drifts
    /// toward F.
    SplitFromC,
}

impl SerialGoal {
    pub fn label(&self) -> &'static str {
        match self {
            SerialGoal::SplitFromB => "A<-B->C",
            SerialGoal::SplitFromC => "B<-C->F",
        }
    }
}

/// Feasible attack-resistance interval for one parallel goal.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeasibilityRange {
    pub attack_kind: String,
    pub goal: String,
    pub reachable: bool,
    /// Lower bound in ohms, when one constrains the goal.
    pub r_min_ohms: Option<f64>,
    /// Upper bound in ohms.
    pub r_max_ohms: Option<f64>,
    pub notes: Vec<String>,
}

impl FeasibilityRange {
    pub fn contains(&self, r: f64) -> bool {
        self.reachable
            && self.r_min_ohms.map_or(r > 0.0, |lo| r >= lo)
            && self.r_max_ohms.is_none_or(|hi| r <= hi)
    }
}

/// The three serial-insertion thresholds for one benign state.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SerialThresholds {
    pub goal: String,
    /// Error-tolerance width λ = upper boundary − lower boundary.
    pub lambda_volts: f64,
    /// Resistance at which the vehicle end crosses its lower boundary.
    pub ev_boundary_ohms: f64,
    /// Resistance at which the charger end crosses its upper boundary.
    pub evse_boundary_ohms: f64,
    /// Resistance from V_diff ≥ λ: beyond this the two sides are
    /// guaranteed to read different states.
    pub guaranteed_disparity_ohms: f64,
    pub notes: Vec<String>,
}

/// Node voltage target → total load, honoring the shared diode drop:
/// `R_L = R1·(V − v_d) / (V_high − V)`.
fn load_for_voltage(v_target: f64, src: &PilotSource, drop: f64) -> Option<f64> {
    let r1 = src.r1.get()?;
    if v_target >= src.v_high || v_target <= drop {
        return None;
    }
    Some(r1 * (v_target - drop) / (src.v_high - v_target))
}

/// Attack resistance that combines with `r_v` into a total load `r_total`.
fn attack_r_for_load(r_total: f64, r_v: f64) -> Option<f64> {
    if r_total >= r_v {
        // a parallel branch can only lower the total
        return None;
    }
    Some(r_total * r_v / (r_v - r_total))
}

/// Parallel attack resistance that pulls the node to `v_target` with the
/// vehicle presenting `r_v`.
fn parallel_r_for_voltage(v_target: f64, r_v: f64, src: &PilotSource, drop: f64) -> Option<f64> {
    attack_r_for_load(load_for_voltage(v_target, src, drop)?, r_v)
}

/// Lower state boundary protecting against an overshoot into F: the
/// charger's C/F boundary when it has one, otherwise the vehicle's own
/// low-pilot band.
fn f_boundary(charger: &ChargerProfile, ev: &EvProfile, notes: &mut Vec<String>) -> f64 {
    match charger.v_cf {
        Some(v) if charger.has_state_f => v,
        _ => {
            notes.push(format!(
                "charger '{}' has no C/F boundary; using the vehicle low-pilot band {} V",
                charger.name, ev.v_low_error
            ));
            ev.v_low_error
        }
    }
}

/// Working range of the parallel attack resistor for one goal.
///
/// For B→C the upper bound keeps the pre-switch voltage (vehicle still
/// presenting its state B load) at or below the B/C boundary, and the lower
/// bound keeps the post-switch voltage (vehicle now presenting the state C
/// load) above the F boundary — without the post-switch constraint the
/// vehicle's own load change would drag the node into the error band.
pub fn parallel_range(
    goal: ParallelGoal,
    charger: &ChargerProfile,
    ev: &EvProfile,
) -> FeasibilityRange {
    let src = PilotSource {
        r1: charger.r1,
        ..PilotSource::default()
    };
    let drop = ev.diode.forward_drop;
    let r_b = ev.r_state_b.get().expect("state B load is finite");
    let r_c = ev.r_state_c.get().expect("state C load is finite");
    let mut notes = Vec::new();
    let range = |reachable, r_min, r_max, notes| FeasibilityRange {
        attack_kind: String::from("parallel"),
        goal: String::from(goal.label()),
        reachable,
        r_min_ohms: r_min,
        r_max_ohms: r_max,
        notes,
    };
    match goal {
        ParallelGoal::BToC => {
            let upper = parallel_r_for_voltage(charger.v_bc, r_b, &src, drop);
            let floor = f_boundary(charger, ev, &mut notes);
            let lower = parallel_r_for_voltage(floor, r_c, &src, drop);
            notes.push(String::from(
                "lower bound keeps the post-switch node (state C load engaged) above the F boundary",
            ));
            let reachable = match (lower, upper) {
                (Some(lo), Some(hi)) => lo <= hi,
                (None, Some(_)) => true,
                _ => false,
            };
            range(reachable, lower, upper, notes)
        }
        ParallelGoal::CToF => match charger.v_cf.filter(|_| charger.has_state_f) {
            Some(v_cf) => {
                let upper = parallel_r_for_voltage(v_cf, r_c, &src, drop);
                notes.push(String::from(
                    "any smaller attack resistance holds the node in F",
                ));
                range(upper.is_some(), None, upper, notes)
            }
            None => {
                notes.push(format!(
                    "charger '{}' does not implement state F",
                    charger.name
                ));
                range(false, None, None, notes)
            }
        },
        ParallelGoal::BToF => match charger.v_cf.filter(|_| charger.has_state_f) {
            Some(v_cf) => {
                let upper = parallel_r_for_voltage(v_cf, r_b, &src, drop);
                notes.push(String::from(
                    "vehicle keeps its state B load; the node drops straight through the C band",
                ));
                range(upper.is_some(), None, upper, notes)
            }
            None => {
                notes.push(format!(
                    "charger '{}' does not implement state F",
                    charger.name
                ));
                range(false, None, None, notes)
            }
        },
    }
}

/// The serial-insertion thresholds for one benign state.
///
/// The guaranteed-disparity value follows directly from
/// `V_diff = r·V_high/(R1 + r + R_v) = λ` with λ the boundary-to-boundary
/// tolerance of the benign state.
pub fn serial_range(
    goal: SerialGoal,
    charger: &ChargerProfile,
    ev: &EvProfile,
) -> SerialThresholds {
    let src = PilotSource {
        r1: charger.r1,
        ..PilotSource::default()
    };
    let r1 = src.r1.get().expect("R1 is finite");
    let drop = ev.diode.forward_drop;
    let mut notes = Vec::new();
    let (r_v, upper_boundary, lower_boundary) = match goal {
        SerialGoal::SplitFromB => (
            ev.r_state_b.get().expect("finite"),
            charger.v_ab,
            charger.v_bc,
        ),
        SerialGoal::SplitFromC => (
            ev.r_state_c.get().expect("finite"),
            charger.v_bc,
            f_boundary(charger, ev, &mut notes),
        ),
    };
    let lambda = upper_boundary - lower_boundary;
    let vh = src.v_high;
    // vehicle end at the lower boundary: i = (V_t − v_d)/R_v
    let ev_boundary = (vh - drop) * r_v / (lower_boundary - drop) - r1 - r_v;
    // charger end at the upper boundary: i = (V_high − V_t)/R1
    let evse_boundary = (vh - drop) * r1 / (vh - upper_boundary) - r1 - r_v;
    let guaranteed = lambda * (r1 + r_v) / (vh - drop - lambda);
    notes.push(format!("lambda = {upper_boundary} - {lower_boundary} V"));
    SerialThresholds {
        goal: String::from(goal.label()),
        lambda_volts: lambda,
        ev_boundary_ohms: ev_boundary,
        evse_boundary_ohms: evse_boundary,
        guaranteed_disparity_ohms: guaranteed,
        notes,
    }
}

/// Which attack circuit a sweep walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SweepKind {
    Serial,
    Parallel,
}

/// What one grid point did to the system, relative to the benign state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SweepOutcome {
    None,
    StateSwitch,
    Disparity,
    ErrorF,
}

impl core::fmt::Display for SweepOutcome {
    fn fmt(&self, f: &mut core::fmt::Formatter) -> core::fmt::Result {
        let s = match self {
            SweepOutcome::None => "none",
            SweepOutcome::StateSwitch => "state_switch",
            SweepOutcome::Disparity => "disparity",
            SweepOutcome::ErrorF => "error_F",
        };
        f.write_str(s)
    }
}

/// One potentiometer position.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRow {
    pub r_att_ohms: f64,
    pub v_evse: f64,
    pub v_ev: f64,
    pub evse_state: ChargingState,
    pub ev_state: ChargingState,
    pub outcome: SweepOutcome,
}

/// Walk an ascending resistance grid with the vehicle pinned in `benign`
/// state, recording what an observer with the charger's boundary table
/// would read on each side.
pub fn sweep(
    kind: SweepKind,
    benign: ChargingState,
    r_grid: &[f64],
    charger: &ChargerProfile,
    ev: &EvProfile,
) -> Vec<SweepRow> {
    let src = PilotSource {
        r1: charger.r1,
        ..PilotSource::default()
    };
    let r_v = ev_load_for_state(benign, ev);
    r_grid
        .iter()
        .map(|&r| {
            let sol: PilotSolution = match kind {
                SweepKind::Serial => solve_serial(&src, Resistance::ohms(r), r_v, ev.diode),
                SweepKind::Parallel => solve_parallel_branches(
                    &src,
                    Branch {
                        r: Resistance::ohms(r),
                        diode: ev.diode,
                    },
                    Branch {
                        r: r_v,
                        diode: ev.diode,
                    },
                ),
            };
            let evse_state = classify_state(sol.v_evse, charger);
            let ev_state = classify_state(sol.v_ev, charger);
            let outcome = if evse_state == ChargingState::F || ev_state == ChargingState::F {
                SweepOutcome::ErrorF
            } else if evse_state != ev_state {
                SweepOutcome::Disparity
            } else if evse_state != benign {
                SweepOutcome::StateSwitch
            } else {
                SweepOutcome::None
            };
            SweepRow {
                r_att_ohms: r,
                v_evse: sol.v_evse,
                v_ev: sol.v_ev,
                evse_state,
                ev_state,
                outcome,
            }
        })
        .collect()
}

/// Evenly spaced inclusive grid, the shape the CLI sweep emits.
pub fn linear_grid(r_min: f64, r_max: f64, steps: usize) -> Vec<f64> {
    if steps == 0 {
        return Vec::new();
    }
    if steps == 1 {
        return alloc::vec![r_min];
    }
    let step = (r_max - r_min) / (steps - 1) as f64;
    (0..steps).map(|i| r_min + step * i as f64).collect()
}
