//! Charger-profile registry: the four bundled device profiles plus
//! optional user-supplied profile files.

use anyhow::Context;
use cpsim_core::state::ChargerProfile;
use serde::Deserialize;
use std::path::Path;

use crate::CmdError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    profiles: Vec<ChargerProfile>,
}

/// The profiles shipped with the tool.
pub fn bundled() -> Vec<ChargerProfile> {
    vec![
        ChargerProfile::charger1(),
        ChargerProfile::charger2(),
        ChargerProfile::public_charger(),
        ChargerProfile::nominal_j1772(),
    ]
}

/// Bundled profiles, with entries from `path` (if any) overriding bundled
/// profiles of the same name.
pub fn load_registry(path: Option<&Path>) -> Result<Vec<ChargerProfile>, CmdError> {
    let mut registry = bundled();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading profiles file {}", path.display()))
            .map_err(CmdError::Internal)?;
        let file: ProfileFile = serde_json::from_str(&text)
            .map_err(|e| CmdError::Domain(format!("profiles file {}: {e}", path.display())))?;
        for profile in file.profiles {
            profile
                .validate()
                .map_err(|e| CmdError::Domain(format!("profile '{}': {e}", profile.name)))?;
            registry.retain(|p| p.name != profile.name);
            registry.push(profile);
        }
    }
    Ok(registry)
}

/// Look a profile up by name; unknown names list what is available.
pub fn resolve<'a>(
    registry: &'a [ChargerProfile],
    name: &str,
) -> Result<&'a ChargerProfile, CmdError> {
    registry.iter().find(|p| p.name == name).ok_or_else(|| {
        let known: Vec<&str> = registry.iter().map(|p| p.name.as_str()).collect();
        CmdError::Domain(format!(
            "unknown profile '{name}'; known profiles: {}",
            known.join(", ")
        ))
    })
}
