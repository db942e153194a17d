//! IO companion for the control-pilot co-simulator: profile registry,
//! scenario file schema, and the CSV/table output formats. The `cpsim`
//! binary is a thin command layer over these modules and `cpsim-core`.

pub mod output;
pub mod profiles;
pub mod scenario;

/// Errors surfaced to the CLI user.
pub enum CmdError {
    /// Bad input from the user: exit 2.
    Domain(String),
    /// Unexpected failure (IO and friends): exit 1.
    Internal(anyhow::Error),
}
