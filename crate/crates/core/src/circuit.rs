//! Steady-state solver for the pilot-line resistive network.
//!
//! The control pilot forms a voltage divider: the charger drives ±12 V
//! through its 1 kΩ source resistor, the vehicle loads the line with a
//! diode + state resistor, and attack circuits insert extra resistance in
//! series or in parallel. Only the positive half-cycle is solved; the EV
//! diode blocks the −12 V half, so that plateau is fixed by the source.
//!
//! All solvers here are closed-form and total: they are checked against an
//! independent numeric Kirchhoff-balance oracle in the test suite.

use crate::num;

/// A branch resistance in ohms, with a distinguished open-circuit value.
///
/// `Open` is the identity under parallel combination and absorbing under
/// series combination, which keeps the divider algebra exact instead of
/// approximating a disconnected branch with some large finite number.
///
/// Invariant: finite values are nonnegative (use [`Resistance::ohms`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resistance {
    Ohms(f64),
    Open,
}

impl Resistance {
    pub const OPEN: Resistance = Resistance::Open;

    /// A finite resistance. Panics on negative or non-finite input.
    pub fn ohms(value: f64) -> Resistance {
        assert!(
            value.is_finite() && value >= 0.0,
            "resistance must be finite and nonnegative"
        );
        Resistance::Ohms(value)
    }

    pub fn is_open(&self) -> bool {
        matches!(self, Resistance::Open)
    }

    /// Finite value in ohms, or `None` for an open branch.
    pub fn get(&self) -> Option<f64> {
        match *self {
            Resistance::Ohms(v) => Some(v),
            Resistance::Open => None,
        }
    }

    /// Series combination; an open element cuts the whole path.
    pub fn series(self, other: Resistance) -> Resistance {
        match (self, other) {
            (Resistance::Ohms(a), Resistance::Ohms(b)) => Resistance::Ohms(a + b),
            _ => Resistance::Open,
        }
    }

    /// Parallel (harmonic) combination; an open branch is the identity.
    pub fn parallel(self, other: Resistance) -> Resistance {
        match (self, other) {
            (Resistance::Ohms(a), Resistance::Ohms(b)) => {
                if a == 0.0 || b == 0.0 {
                    Resistance::Ohms(0.0)
                } else {
                    Resistance::Ohms(a * b / (a + b))
                }
            }
            (Resistance::Ohms(a), Resistance::Open) => Resistance::Ohms(a),
            (Resistance::Open, Resistance::Ohms(b)) => Resistance::Ohms(b),
            (Resistance::Open, Resistance::Open) => Resistance::Open,
        }
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for Resistance {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Resistance::Ohms(v) => serializer.serialize_f64(*v),
            Resistance::Open => serializer.serialize_str("open"),
        }
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for Resistance {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visitor;
        impl serde::de::Visitor<'_> for Visitor {
            type Value = Resistance;

            fn expecting(&self, f: &mut core::fmt::Formatter) -> core::fmt::Result {
                f.write_str("a nonnegative number of ohms or the string \"open\"")
            }

            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<Resistance, E> {
                if v.is_finite() && v >= 0.0 {
                    Ok(Resistance::Ohms(v))
                } else {
                    Err(E::custom("resistance must be finite and nonnegative"))
                }
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Resistance, E> {
                self.visit_f64(v as f64)
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Resistance, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Resistance, E> {
                if v.eq_ignore_ascii_case("open") {
                    Ok(Resistance::Open)
                } else {
                    Err(E::custom("expected the string \"open\""))
                }
            }
        }
        deserializer.deserialize_any(Visitor)
    }
}

/// Ideal or fixed-forward-drop diode. Negative voltages are always blocked.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DiodeModel {
    /// Forward drop in volts; 0 models the ideal diode used throughout the
    /// nominal analysis.
    pub forward_drop: f64,
}

impl DiodeModel {
    pub const fn ideal() -> DiodeModel {
        DiodeModel { forward_drop: 0.0 }
    }

    /// Fixed forward drop in volts. Panics outside [0, 1).
    pub fn with_drop(volts: f64) -> DiodeModel {
        assert!(
            volts.is_finite() && (0.0..1.0).contains(&volts),
            "diode forward drop must be in [0, 1) V"
        );
        DiodeModel {
            forward_drop: volts,
        }
    }
}

impl Default for DiodeModel {
    fn default() -> Self {
        DiodeModel::ideal()
    }
}

/// Charger-side pilot driver: rail voltages plus the source resistor R1.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PilotSource {
    pub v_high: f64,
    pub v_low: f64,
    pub r1: Resistance,
}

impl PilotSource {
    /// Panics unless `v_high > 0 > v_low` and R1 is finite and positive.
    pub fn new(v_high: f64, v_low: f64, r1: Resistance) -> PilotSource {
        assert!(
            v_high > 0.0 && v_low < 0.0,
            "rails must satisfy v_high > 0 > v_low"
        );
        assert!(
            matches!(r1, Resistance::Ohms(r) if r > 0.0),
            "R1 must be finite and positive"
        );
        PilotSource { v_high, v_low, r1 }
    }

    fn r1_ohms(&self) -> f64 {
        self.r1.get().expect("R1 is finite by construction")
    }
}

impl Default for PilotSource {
    fn default() -> Self {
        PilotSource {
            v_high: 12.0,
            v_low: -12.0,
            r1: Resistance::Ohms(1000.0),
        }
    }
}

/// High-plateau voltages seen at the two ends of the pilot line.
///
/// `v_diff` is always computed as `v_evse - v_ev`, so the identity holds
/// exactly. It is zero for the baseline and parallel topologies and
/// nonnegative for serial insertion.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PilotSolution {
    pub v_evse: f64,
    pub v_ev: f64,
}

impl PilotSolution {
    pub fn v_diff(&self) -> f64 {
        self.v_evse - self.v_ev
    }
}

/// One diode+resistor branch hanging off the pilot node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Branch {
    pub r: Resistance,
    pub diode: DiodeModel,
}

/// Solve the single-node network: source through R1 into the node, each
/// branch sinking `(x - drop)/r` when forward-biased. Conducting sets are
/// re-evaluated until stable, which terminates quickly for the two-branch
/// networks used here.
pub(crate) fn solve_node(src: &PilotSource, branches: &[Branch]) -> f64 {
    let r1 = src.r1_ohms();
    let finite: alloc::vec::Vec<(f64, f64)> = branches
        .iter()
        .filter_map(|b| b.r.get().map(|r| (r, b.diode.forward_drop)))
        .collect();
    if finite.is_empty() {
        return src.v_high;
    }
    // A zero-ohm conducting branch pins the node at its diode drop.
    let mut conducting: alloc::vec::Vec<bool> = finite.iter().map(|_| true).collect();
    for _ in 0..16 {
        let mut num_acc = src.v_high / r1;
        let mut den_acc = 1.0 / r1;
        let mut shorted: Option<f64> = None;
        for (on, &(r, drop)) in conducting.iter().zip(finite.iter()) {
            if !on {
                continue;
            }
            if r == 0.0 {
                shorted = Some(match shorted {
                    Some(d) => {
                        if drop < d {
                            drop
                        } else {
                            d
                        }
                    }
                    None => drop,
                });
            } else {
                num_acc += drop / r;
                den_acc += 1.0 / r;
            }
        }
        let x = match shorted {
            Some(d) => d,
            None => num_acc / den_acc,
        };
        // A zero-ohm branch conducts at exactly its drop (it pins the node
        // there and absorbs the balance current); finite branches need
        // strict forward bias.
        let next: alloc::vec::Vec<bool> = finite
            .iter()
            .map(|&(r, drop)| if r == 0.0 { x >= drop } else { x > drop })
            .collect();
        if next == conducting {
            return x;
        }
        conducting = next;
    }
    // Conducting-set oscillation only happens at exact-boundary inputs where
    // the candidate solutions coincide; either one is correct there.
    if let Some(d) = finite
        .iter()
        .filter(|&&(r, _)| r == 0.0)
        .map(|&(_, d)| d)
        .reduce(f64::min)
    {
        return d;
    }
    let num_acc = src.v_high / r1 + finite.iter().map(|&(r, d)| d / r).sum::<f64>();
    let den_acc = 1.0 / r1 + finite.iter().map(|&(r, _)| 1.0 / r).sum::<f64>();
    num_acc / den_acc
}

/// Pilot high voltage with only the vehicle load attached (no attack).
///
/// With an ideal diode this is the textbook divider
/// `v_high * r_v / (r1 + r_v)`; a nonzero forward drop reduces the branch
/// current and raises the node accordingly. An open load returns `v_high`.
pub fn solve_baseline(src: &PilotSource, r_v: Resistance, diode: DiodeModel) -> PilotSolution {
    let x = solve_node(src, &[Branch { r: r_v, diode }]);
    PilotSolution { v_evse: x, v_ev: x }
}

/// Serial insertion: `r_att` sits between the charger and the vehicle, so
/// the two ends of the line divide the same loop current differently.
///
/// An open element anywhere in the loop cuts the current entirely and both
/// ends read the source voltage.
pub fn solve_serial(
    src: &PilotSource,
    r_att: Resistance,
    r_v: Resistance,
    diode: DiodeModel,
) -> PilotSolution {
    let r1 = src.r1_ohms();
    let (ra, rv) = match (r_att.get(), r_v.get()) {
        (Some(ra), Some(rv)) => (ra, rv),
        _ => {
            return PilotSolution {
                v_evse: src.v_high,
                v_ev: src.v_high,
            }
        }
    };
    let drop = diode.forward_drop;
    let current = if src.v_high > drop {
        (src.v_high - drop) / (r1 + ra + rv)
    } else {
        0.0
    };
    PilotSolution {
        v_evse: src.v_high - current * r1,
        v_ev: src.v_high - current * (r1 + ra),
    }
}

/// Total vehicle-side load under a parallel attachment attack.
pub fn combine_parallel(r_v: Resistance, r_att: Resistance) -> Resistance {
    r_v.parallel(r_att)
}

/// Parallel attachment: the attack branch shares the pilot node with the
/// vehicle load, so both ends read the same (lowered) voltage.
pub fn solve_parallel(
    src: &PilotSource,
    r_att: Resistance,
    r_v: Resistance,
    diode: DiodeModel,
) -> PilotSolution {
    solve_parallel_branches(src, Branch { r: r_att, diode }, Branch { r: r_v, diode })
}

/// Parallel solve with per-branch diodes (the attack branch carries its own
/// blocking diode).
pub(crate) fn solve_parallel_branches(
    src: &PilotSource,
    attack: Branch,
    vehicle: Branch,
) -> PilotSolution {
    let x = solve_node(src, &[vehicle, attack]);
    PilotSolution { v_evse: x, v_ev: x }
}

/// Round to the nearest whole ampere, as charger panels display current.
pub fn display_amps(amps: f64) -> i64 {
    num::round(amps) as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDEAL: DiodeModel = DiodeModel::ideal();

    fn src() -> PilotSource {
        PilotSource::default()
    }

    #[test]
    fn baseline_open_load_reads_source() {
        let sol = solve_baseline(&src(), Resistance::Open, IDEAL);
        assert_eq!(sol.v_evse, 12.0);
        assert_eq!(sol.v_ev, 12.0);
        assert_eq!(sol.v_diff(), 0.0);
    }

    #[test]
    fn baseline_state_b_load() {
        let sol = solve_baseline(&src(), Resistance::ohms(2740.0), IDEAL);
        let expect = 12.0 * 2740.0 / 3740.0;
        assert!((sol.v_evse - expect).abs() < 1e-12);
        assert!((sol.v_evse - 8.791).abs() < 1e-3);
        assert_eq!(sol.v_evse, sol.v_ev);
    }

    #[test]
    fn baseline_state_c_load() {
        let sol = solve_baseline(&src(), Resistance::ohms(882.0), IDEAL);
        let expect = 12.0 * 882.0 / 1882.0;
        assert!((sol.v_evse - expect).abs() < 1e-12);
        assert!((sol.v_evse - 5.624).abs() < 1e-3);
    }

    #[test]
    fn baseline_diode_drop_raises_node() {
        let sol = solve_baseline(&src(), Resistance::ohms(2740.0), DiodeModel::with_drop(0.7));
        // node = (v*r_v + drop*r1)/(r1 + r_v); the drop pushes state B toward
        // its nominal 9 V
        let expect = (12.0 * 2740.0 + 0.7 * 1000.0) / 3740.0;
        assert!((sol.v_evse - expect).abs() < 1e-12);
        assert!(sol.v_evse > 8.9 && sol.v_evse < 9.1);
    }

    #[test]
    fn serial_zero_attack_matches_baseline() {
        let base = solve_baseline(&src(), Resistance::ohms(2740.0), IDEAL);
        let ser = solve_serial(
            &src(),
            Resistance::ohms(0.0),
            Resistance::ohms(2740.0),
            IDEAL,
        );
        assert_eq!(ser.v_evse, base.v_evse);
        assert_eq!(ser.v_ev, base.v_ev);
        assert_eq!(ser.v_diff(), 0.0);
    }

    #[test]
    fn serial_guaranteed_disparity_point() {
        let sol = solve_serial(
            &src(),
            Resistance::ohms(1138.0),
            Resistance::ohms(2740.0),
            IDEAL,
        );
        let expect_diff = 1138.0 * 12.0 / (1000.0 + 1138.0 + 2740.0);
        assert!((sol.v_diff() - expect_diff).abs() < 1e-12);
        assert!((sol.v_diff() - 2.800).abs() < 1e-3);
    }

    #[test]
    fn serial_measured_attack_value_from_state_b() {
        let sol = solve_serial(
            &src(),
            Resistance::ohms(3780.0),
            Resistance::ohms(2740.0),
            IDEAL,
        );
        let expect = 12.0 - 1000.0 * 12.0 / (1000.0 + 3780.0 + 2740.0);
        assert!((sol.v_evse - expect).abs() < 1e-12);
        assert!((sol.v_evse - 10.40).abs() < 5e-3);
        // the EVSE side rises toward the A boundary but has not crossed the
        // measured 10.6 V threshold yet
        assert!(sol.v_evse < 10.6);
    }

    #[test]
    fn serial_open_element_cuts_loop() {
        let sol = solve_serial(&src(), Resistance::Open, Resistance::ohms(2740.0), IDEAL);
        assert_eq!(sol.v_evse, 12.0);
        assert_eq!(sol.v_ev, 12.0);
    }

    #[test]
    fn combine_open_is_identity() {
        assert_eq!(
            combine_parallel(Resistance::ohms(2740.0), Resistance::Open),
            Resistance::Ohms(2740.0)
        );
        assert_eq!(
            combine_parallel(Resistance::Open, Resistance::Open),
            Resistance::Open
        );
    }

    #[test]
    fn combine_boundary_loads() {
        let r = combine_parallel(Resistance::ohms(2740.0), Resistance::ohms(5762.0));
        let v = r.get().unwrap();
        assert!((v - 2740.0 * 5762.0 / 8502.0).abs() < 1e-9);
        assert!((v - 1857.0).abs() < 0.5);

        let r = combine_parallel(Resistance::ohms(882.0), Resistance::ohms(1685.0));
        let v = r.get().unwrap();
        assert!((v - 579.0).abs() < 0.5);
    }

    #[test]
    fn parallel_open_attack_matches_baseline() {
        let base = solve_baseline(&src(), Resistance::ohms(2740.0), IDEAL);
        let par = solve_parallel(&src(), Resistance::Open, Resistance::ohms(2740.0), IDEAL);
        assert_eq!(par.v_evse, base.v_evse);
        assert_eq!(par.v_diff(), 0.0);
    }

    #[test]
    fn parallel_boundary_values() {
        let par = solve_parallel(
            &src(),
            Resistance::ohms(5762.0),
            Resistance::ohms(2740.0),
            IDEAL,
        );
        assert!((par.v_evse - 7.800).abs() < 1e-3);

        let par = solve_parallel(
            &src(),
            Resistance::ohms(734.0),
            Resistance::ohms(2740.0),
            IDEAL,
        );
        assert!((par.v_evse - 4.400).abs() < 1e-3);
    }

    #[test]
    fn negative_half_cycle_is_blocked() {
        // the solver is only used on the positive plateau, but a source below
        // the diode drop must produce zero branch current
        let low = PilotSource {
            v_high: 0.3,
            v_low: -12.0,
            r1: Resistance::Ohms(1000.0),
        };
        let sol = solve_baseline(&low, Resistance::ohms(2740.0), DiodeModel::with_drop(0.7));
        assert_eq!(sol.v_evse, 0.3);
    }
}
