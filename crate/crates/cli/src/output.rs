//! Output helpers: 4-significant-digit table numbers, CSV writers for
//! sweeps/traces/signals, and the signal CSV reader.

use anyhow::Context;
use cpsim_core::analysis::SweepRow;
use cpsim_core::sim::TickRecord;
use cpsim_core::waveform::SampledSignal;
use std::io::Write;
use std::path::Path;

use crate::CmdError;

/// Format with four significant digits, as the table output mode uses.
pub fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (3 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CmdError> {
    std::fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CmdError::Internal)
}

/// Sweep table as CSV (full precision; column order is part of the format).
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("r_att_ohms,v_evse,v_ev,evse_state,ev_state,outcome\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.r_att_ohms, r.v_evse, r.v_ev, r.evse_state, r.ev_state, r.outcome
        ));
    }
    out
}

/// Per-tick trace as CSV.
pub fn trace_csv(trace: &[TickRecord]) -> String {
    let mut out =
        String::from("t_s,v_evse,v_ev,evse_state,ev_state,advertised_amps,drawn_amps,ev_latched\n");
    for r in trace {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.t,
            r.v_evse,
            r.v_ev,
            r.evse_state,
            r.ev_state,
            r.advertised_amps,
            r.drawn_amps,
            r.ev_latched
        ));
    }
    out
}

/// Signal as `time_s,volts` CSV.
pub fn signal_csv(signal: &SampledSignal) -> String {
    let mut out = String::with_capacity(signal.samples.len() * 24 + 16);
    out.push_str("time_s,volts\n");
    let dt = signal.dt();
    for (i, v) in signal.samples.iter().enumerate() {
        let _ = writeln_str(&mut out, i as f64 * dt, *v);
    }
    out
}

fn writeln_str(out: &mut String, t: f64, v: f64) -> std::fmt::Result {
    use std::fmt::Write as _;
    writeln!(out, "{t},{v}")
}

/// Read a `time_s,volts` CSV back into a signal; the sample rate is
/// recovered from the first two timestamps.
pub fn read_signal_csv(path: &Path) -> Result<SampledSignal, CmdError> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CmdError::Internal)?;
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 && line.starts_with("time_s") {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(2, ',');
        let (t, v) = (parts.next(), parts.next());
        let parse = |s: Option<&str>| {
            s.and_then(|s| s.trim().parse::<f64>().ok()).ok_or_else(|| {
                CmdError::Domain(format!(
                    "{}:{}: expected 'time,volts'",
                    path.display(),
                    lineno + 1
                ))
            })
        };
        times.push(parse(t)?);
        samples.push(parse(v)?);
    }
    if samples.len() < 2 {
        return Err(CmdError::Domain(format!(
            "{}: need at least two samples",
            path.display()
        )));
    }
    let dt = times[1] - times[0];
    if !(dt.is_finite() && dt > 0.0) {
        return Err(CmdError::Domain(format!(
            "{}: timestamps must be increasing",
            path.display()
        )));
    }
    Ok(SampledSignal {
        sample_rate: 1.0 / dt,
        samples,
    })
}

/// Stdout writer that tolerates a closed pipe.
pub fn print_line(line: &str) {
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{line}");
}
