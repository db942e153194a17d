//! On-disk scenario schema and the bundled scenario set.
//!
//! A scenario file is a JSON object:
//!
//! ```json
//! {
//!   "name": "forced_charging",
//!   "charger": "public_charger",
//!   "ev": { "parasitic_amps": 6.0 },
//!   "attack": { "kind": "parallel", "r_att": 3300.0 },
//!   "timeline": [
//!     { "t": 1.0, "kind": "plug_in" },
//!     { "t": 3.0, "kind": "engage_attack" }
//!   ],
//!   "duration": 15.0,
//!   "tick": 0.01,
//!   "initial_soc": 0.5
//! }
//! ```
//!
//! `charger` is a bundled/registry profile name or an inline profile
//! object; `ev`, `tick`, and `initial_soc` are optional and default to the
//! standard vehicle, 10 ms, and 0.5. Attack parameters not given take the
//! bench defaults for that circuit.

use cpsim_core::attack::AttackSpec;
use cpsim_core::sim::{Event, Scenario, DEFAULT_TICK};
use cpsim_core::state::{ChargerProfile, EvProfile};
use serde::Deserialize;
use std::path::Path;

use crate::profiles;
use crate::CmdError;

/// Bundled scenarios, by the names `simulate` accepts.
pub const BUNDLED: &[(&str, &str)] = &[
    ("benign", include_str!("../scenarios/benign.json")),
    (
        "forced_charging",
        include_str!("../scenarios/forced_charging.json"),
    ),
    ("serial_dos", include_str!("../scenarios/serial_dos.json")),
    ("tlc555", include_str!("../scenarios/tlc555.json")),
    ("fake_load", include_str!("../scenarios/fake_load.json")),
];

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ChargerRef {
    Name(String),
    Inline(ChargerProfile),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(default)]
    name: Option<String>,
    charger: ChargerRef,
    #[serde(default)]
    ev: EvProfile,
    #[serde(default)]
    attack: Option<AttackSpec>,
    timeline: Vec<Event>,
    duration: f64,
    #[serde(default = "default_tick")]
    tick: f64,
    #[serde(default = "default_soc")]
    initial_soc: f64,
}

fn default_tick() -> f64 {
    DEFAULT_TICK
}

fn default_soc() -> f64 {
    0.5
}

fn parse(
    text: &str,
    fallback_name: &str,
    registry: &[ChargerProfile],
) -> Result<Scenario, CmdError> {
    let doc: ScenarioDoc = serde_json::from_str(text)
        .map_err(|e| CmdError::Domain(format!("scenario '{fallback_name}': {e}")))?;
    let charger = match doc.charger {
        ChargerRef::Name(name) => profiles::resolve(registry, &name)?.clone(),
        ChargerRef::Inline(profile) => {
            profile
                .validate()
                .map_err(|e| CmdError::Domain(format!("inline charger profile: {e}")))?;
            profile
        }
    };
    Ok(Scenario {
        name: doc.name.unwrap_or_else(|| fallback_name.to_string()),
        charger,
        ev: doc.ev,
        attack: doc.attack,
        timeline: doc.timeline,
        duration: doc.duration,
        tick: doc.tick,
        initial_soc: doc.initial_soc,
    })
}

/// Load a scenario from a file path or a bundled name.
pub fn load(spec: &str, registry: &[ChargerProfile]) -> Result<Scenario, CmdError> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CmdError::Internal(anyhow::anyhow!("reading {}: {e}", path.display())))?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| spec.to_string());
        return parse(&text, &stem, registry);
    }
    if let Some((name, text)) = BUNDLED.iter().find(|(n, _)| *n == spec) {
        return parse(text, name, registry);
    }
    let names: Vec<&str> = BUNDLED.iter().map(|(n, _)| *n).collect();
    Err(CmdError::Domain(format!(
        "'{spec}' is neither a scenario file nor a bundled scenario (bundled: {})",
        names.join(", ")
    )))
}
