//! Deterministic co-simulation of the SAE J1772 control-pilot charging
//! protocol and the resistive attack circuits that manipulate it.
//!
//! The crate models the pilot line as a quasi-static voltage divider between
//! the charger's 1 kΩ source resistor and the vehicle's state resistor, plus
//! the serial/parallel/comparator/timer attack circuits that tap into it.
//! On top of the circuit layer sit the EVSE and EV protocol state machines,
//! the duty-cycle/ampacity codec, a sampled-waveform layer for the duty-cycle
//! attacks, feasibility-range analysis for attack resistances, and a
//! fixed-step scenario engine.
//!
//! Everything here is pure computation over immutable values: the crate is
//! `no_std`-compatible (with `alloc`) and all IO, CLI, and file-format
//! handling lives in the companion `cpsim-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod attack;
pub mod circuit;
pub mod codec;
mod num;
pub mod sim;
pub mod state;
pub mod waveform;

pub use circuit::{DiodeModel, PilotSolution, PilotSource, Resistance};
pub use codec::{current_to_duty, duty_to_current, AmpacityReading, DutyCycle};
pub use state::{classify_state, ev_load_for_state, ChargerProfile, ChargingState, EvProfile};
