//! cpsim: command-line front end for the J1772 control-pilot co-simulator.
//!
//! Subcommands: `codec` (duty ↔ current), `solve` (pilot-line voltages
//! under serial/parallel attacks), `range` (feasible attack resistances),
//! `sweep` (potentiometer-style CSV tables), `waveform`
//! (synth/measure/transform), and `simulate` (scenario files).
//!
//! Exit codes: 0 success, 1 internal error, 2 usage or domain error.
//! `simulate` keys its exit code to the outcome: 0 normal, 10 dos,
//! 11 forced_charging, 12 rate_reduced, 13 error_latched.

use clap::{Parser, Subcommand, ValueEnum};
use cpsim_cli::{output, profiles, scenario, CmdError};
use cpsim_core::analysis::{
    linear_grid, parallel_range, serial_range, sweep, ParallelGoal, SerialGoal, SweepKind,
};
use cpsim_core::attack::{
    fake_load_transform, tlc555_transform, FakeLoadAttack, SwitchModel, Tlc555Attack,
};
use cpsim_core::circuit::{
    display_amps, solve_baseline, solve_parallel, solve_serial, DiodeModel, PilotSolution,
    PilotSource, Resistance,
};
use cpsim_core::codec::{current_to_duty, duty_to_current, AmpacityReading, DutyCycle};
use cpsim_core::sim::{classify_outcome, run, Outcome};
use cpsim_core::state::{classify_state, ChargerProfile, ChargingState, EvProfile};
use cpsim_core::waveform::{measure, synthesize, PwmParams};
use output::{print_line, sig4};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "cpsim",
    version,
    about = "J1772 control-pilot charging protocol co-simulator"
)]
struct Cli {
    /// Extra charger profiles (JSON: {"profiles": [...]}) merged over the
    /// bundled charger1/charger2/public_charger/nominal_j1772 set
    #[arg(long, global = true, value_name = "FILE")]
    profiles: Option<PathBuf>,
    /// Printed-output format (files are always full precision)
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Human-readable, numbers at four significant digits
    Table,
    /// Machine-readable JSON at full precision
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Convert between pilot duty cycle and advertised current
    Codec {
        #[command(subcommand)]
        cmd: CodecCmd,
    },
    /// Solve the pilot line, optionally under a resistor attack
    Solve {
        /// Attack topology applied to the line
        #[arg(long, value_enum, default_value_t = SolveAttack::None)]
        attack: SolveAttack,
        /// Attack resistance in ohms (or "open")
        #[arg(long, default_value = "open", value_parser = parse_resistance)]
        r_att: Resistance,
        /// Vehicle load: ohms, "open", or a state name (a/b/c/d)
        #[arg(long, default_value = "2740")]
        r_v: String,
        /// Profile whose boundaries classify the resulting voltages
        #[arg(long, default_value = "charger2")]
        profile: String,
        /// Diode forward drop in volts for both diode branches
        #[arg(long, default_value_t = 0.0)]
        diode_drop: f64,
    },
    /// Feasible attack-resistance range for a state-switching goal
    Range {
        #[arg(long, value_enum)]
        attack: RangeAttack,
        /// parallel: b-c, c-f, b-f; serial: a-b-c, b-c-f
        #[arg(long)]
        goal: String,
        #[arg(long, default_value = "charger2")]
        profile: String,
    },
    /// Emit a resistance-sweep table as CSV
    Sweep {
        #[arg(long, value_enum)]
        attack: RangeAttack,
        /// Benign state the vehicle holds during the sweep (b or c)
        #[arg(long, default_value = "b")]
        state: String,
        #[arg(long)]
        r_min: f64,
        #[arg(long)]
        r_max: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value = "charger2")]
        profile: String,
        /// Output path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// PWM synthesis, measurement, and duty-attack transforms
    Waveform {
        #[command(subcommand)]
        cmd: WaveformCmd,
    },
    /// Run a scenario file (or bundled scenario) and print its outcome
    Simulate {
        /// Scenario file path, or one of the bundled names
        scenario: String,
        /// Write the full report as JSON
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the per-tick trace as CSV
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CodecCmd {
    /// Duty cycle (%) to advertised current
    Decode { duty: f64 },
    /// Current (A) to the duty cycle that advertises it
    Encode { amps: f64 },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolveAttack {
    None,
    Serial,
    Parallel,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RangeAttack {
    Serial,
    Parallel,
}

#[derive(Subcommand)]
enum WaveformCmd {
    /// Synthesize a pilot PWM and write it as time_s,volts CSV
    Synth {
        /// Duty cycle in percent
        #[arg(long)]
        duty: f64,
        #[arg(long, default_value_t = 1000.0)]
        freq: f64,
        #[arg(long, default_value_t = 6.0)]
        v_high: f64,
        #[arg(long, default_value_t = -12.0)]
        v_low: f64,
        #[arg(long, default_value_t = 0.05)]
        duration: f64,
        #[arg(long, default_value_t = 1_000_000.0)]
        rate: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure plateau levels, duty cycle, and frequency of a signal CSV
    Measure {
        #[arg(long)]
        input: PathBuf,
    },
    /// Apply a duty-cycle attack to a synthesized pilot and measure both sides
    Transform {
        #[arg(long, value_enum)]
        attack: DutyAttackKind,
        /// Charger-side duty cycle in percent
        #[arg(long, default_value_t = 26.5)]
        duty: f64,
        /// Charger-side plateau (defaults: 6 V for tlc555, 4.8 V for fake-load)
        #[arg(long)]
        v_high: Option<f64>,
        #[arg(long, default_value_t = 1000.0)]
        freq: f64,
        #[arg(long, default_value_t = -12.0)]
        v_low: f64,
        #[arg(long, default_value_t = 0.05)]
        duration: f64,
        #[arg(long, default_value_t = 1_000_000.0)]
        rate: f64,
        /// Monostable resistor (ohms)
        #[arg(long)]
        r: Option<f64>,
        /// Monostable capacitor (farads)
        #[arg(long)]
        c: Option<f64>,
        /// Output plateau offset of the monostable stage
        #[arg(long, default_value_t = 0.0)]
        v_offset: f64,
        /// Fake load seen by the charger while the vehicle is diverted (ohms)
        #[arg(long)]
        r_f: Option<f64>,
        #[arg(long)]
        tau_state: Option<f64>,
        #[arg(long)]
        tau_dt: Option<f64>,
        #[arg(long)]
        state_gain: Option<f64>,
        #[arg(long)]
        dt_gain: Option<f64>,
        /// Use instantaneous switching instead of the RC-faithful edges
        #[arg(long)]
        ideal_switch: bool,
        /// Write the vehicle-side signal as CSV
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DutyAttackKind {
    Tlc555,
    FakeLoad,
}

fn parse_resistance(s: &str) -> Result<Resistance, String> {
    if s.eq_ignore_ascii_case("open") {
        return Ok(Resistance::Open);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(Resistance::Ohms(v)),
        _ => Err(format!("'{s}' is not a nonnegative resistance or 'open'")),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(CmdError::Domain(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CmdError::Internal(e)) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> Result<i32, CmdError> {
    let registry = profiles::load_registry(cli.profiles.as_deref())?;
    let format = cli.format;
    match cli.command {
        Command::Codec { cmd } => cmd_codec(cmd, format),
        Command::Solve {
            attack,
            r_att,
            r_v,
            profile,
            diode_drop,
        } => cmd_solve(attack, r_att, &r_v, &profile, diode_drop, &registry, format),
        Command::Range {
            attack,
            goal,
            profile,
        } => cmd_range(attack, &goal, &profile, &registry, format),
        Command::Sweep {
            attack,
            state,
            r_min,
            r_max,
            steps,
            profile,
            out,
        } => cmd_sweep(
            attack, &state, r_min, r_max, steps, &profile, &registry, out,
        ),
        Command::Waveform { cmd } => cmd_waveform(cmd, format),
        Command::Simulate {
            scenario,
            out,
            trace,
        } => cmd_simulate(&scenario, out, trace, &registry, format),
    }
}

fn cmd_codec(cmd: CodecCmd, format: Format) -> Result<i32, CmdError> {
    match cmd {
        CodecCmd::Decode { duty } => {
            let duty = DutyCycle::percent(duty).map_err(|e| CmdError::Domain(e.to_string()))?;
            let reading = duty_to_current(duty);
            match format {
                Format::Table => match reading {
                    AmpacityReading::Amps(a) => {
                        print_line(&format!("{} A", sig4(a)));
                    }
                    other => print_line(&other.to_string()),
                },
                Format::Json => print_line(
                    &serde_json::json!({ "duty_percent": duty.value(), "reading": reading })
                        .to_string(),
                ),
            }
            Ok(0)
        }
        CodecCmd::Encode { amps } => {
            let duty = current_to_duty(amps).map_err(|e| CmdError::Domain(e.to_string()))?;
            match format {
                Format::Table => print_line(&format!("{}%", sig4(duty.value()))),
                Format::Json => print_line(
                    &serde_json::json!({ "amps": amps, "duty_percent": duty.value() }).to_string(),
                ),
            }
            Ok(0)
        }
    }
}

/// Vehicle-load argument: plain ohms, "open", or a state letter.
fn parse_r_v(s: &str) -> Result<Resistance, CmdError> {
    let ev = EvProfile::default();
    let named = match s.to_ascii_lowercase().as_str() {
        "a" | "state-a" => Some(Resistance::Open),
        "b" | "state-b" => Some(ev.r_state_b),
        "c" | "state-c" => Some(ev.r_state_c),
        "d" | "state-d" => Some(ev.r_state_d),
        _ => None,
    };
    match named {
        Some(r) => Ok(r),
        None => parse_resistance(s).map_err(CmdError::Domain),
    }
}

fn cmd_solve(
    attack: SolveAttack,
    r_att: Resistance,
    r_v: &str,
    profile: &str,
    diode_drop: f64,
    registry: &[ChargerProfile],
    format: Format,
) -> Result<i32, CmdError> {
    if !(0.0..1.0).contains(&diode_drop) {
        return Err(CmdError::Domain(format!(
            "diode drop {diode_drop} V outside [0, 1)"
        )));
    }
    let diode = DiodeModel {
        forward_drop: diode_drop,
    };
    let r_v = parse_r_v(r_v)?;
    let profile = profiles::resolve(registry, profile)?;
    let src = PilotSource {
        r1: profile.r1,
        ..PilotSource::default()
    };
    let sol: PilotSolution = match attack {
        SolveAttack::None => solve_baseline(&src, r_v, diode),
        SolveAttack::Serial => solve_serial(&src, r_att, r_v, diode),
        SolveAttack::Parallel => solve_parallel(&src, r_att, r_v, diode),
    };
    let evse_state = classify_state(sol.v_evse, profile);
    let ev_state = classify_state(sol.v_ev, profile);
    match format {
        Format::Table => {
            print_line(&format!(
                "v_evse  {} V  (state {})",
                sig4(sol.v_evse),
                evse_state
            ));
            print_line(&format!(
                "v_ev    {} V  (state {})",
                sig4(sol.v_ev),
                ev_state
            ));
            print_line(&format!("v_diff  {} V", sig4(sol.v_diff())));
        }
        Format::Json => print_line(
            &serde_json::json!({
                "v_evse": sol.v_evse,
                "v_ev": sol.v_ev,
                "v_diff": sol.v_diff(),
                "evse_state": evse_state,
                "ev_state": ev_state,
            })
            .to_string(),
        ),
    }
    Ok(0)
}

fn cmd_range(
    attack: RangeAttack,
    goal: &str,
    profile: &str,
    registry: &[ChargerProfile],
    format: Format,
) -> Result<i32, CmdError> {
    let profile = profiles::resolve(registry, profile)?;
    let ev = EvProfile::default();
    match attack {
        RangeAttack::Parallel => {
            let goal = match goal.to_ascii_lowercase().as_str() {
                "b-c" => ParallelGoal::BToC,
                "c-f" => ParallelGoal::CToF,
                "b-f" => ParallelGoal::BToF,
                other => {
                    return Err(CmdError::Domain(format!(
                        "unknown parallel goal '{other}' (expected b-c, c-f, or b-f)"
                    )))
                }
            };
            let range = parallel_range(goal, profile, &ev);
            match format {
                Format::Table => {
                    print_line(&format!("attack  parallel ({})", range.goal));
                    if !range.reachable {
                        print_line("range   unreachable");
                    } else {
                        let lo = range
                            .r_min_ohms
                            .map(|v| format!("{} Ω", sig4(v)))
                            .unwrap_or_else(|| String::from("0 Ω (exclusive)"));
                        let hi = range
                            .r_max_ohms
                            .map(|v| format!("{} Ω", sig4(v)))
                            .unwrap_or_else(|| String::from("unbounded"));
                        print_line(&format!("range   {lo} .. {hi}"));
                    }
                    for note in &range.notes {
                        print_line(&format!("note    {note}"));
                    }
                }
                Format::Json => print_line(&serde_json::to_string(&range).expect("serializable")),
            }
            Ok(0)
        }
        RangeAttack::Serial => {
            let goal = match goal.to_ascii_lowercase().as_str() {
                "a-b-c" | "b" => SerialGoal::SplitFromB,
                "b-c-f" | "c" => SerialGoal::SplitFromC,
                other => {
                    return Err(CmdError::Domain(format!(
                        "unknown serial goal '{other}' (expected a-b-c or b-c-f)"
                    )))
                }
            };
            let t = serial_range(goal, profile, &ev);
            match format {
                Format::Table => {
                    print_line(&format!("attack                serial ({})", t.goal));
                    print_line(&format!("lambda                {} V", sig4(t.lambda_volts)));
                    print_line(&format!(
                        "ev boundary           {} Ω",
                        sig4(t.ev_boundary_ohms)
                    ));
                    print_line(&format!(
                        "evse boundary         {} Ω",
                        sig4(t.evse_boundary_ohms)
                    ));
                    print_line(&format!(
                        "guaranteed disparity  {} Ω",
                        sig4(t.guaranteed_disparity_ohms)
                    ));
                    for note in &t.notes {
                        print_line(&format!("note                  {note}"));
                    }
                }
                Format::Json => print_line(&serde_json::to_string(&t).expect("serializable")),
            }
            Ok(0)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    attack: RangeAttack,
    state: &str,
    r_min: f64,
    r_max: f64,
    steps: usize,
    profile: &str,
    registry: &[ChargerProfile],
    out: Option<PathBuf>,
) -> Result<i32, CmdError> {
    if r_min > r_max {
        return Err(CmdError::Domain(format!(
            "r_min ({r_min}) must not exceed r_max ({r_max})"
        )));
    }
    if !(r_min.is_finite() && r_max.is_finite() && r_min >= 0.0) {
        return Err(CmdError::Domain(String::from(
            "sweep bounds must be finite and nonnegative",
        )));
    }
    let benign = match state.to_ascii_lowercase().as_str() {
        "b" => ChargingState::B,
        "c" => ChargingState::C,
        other => {
            return Err(CmdError::Domain(format!(
                "unknown benign state '{other}' (expected b or c)"
            )))
        }
    };
    let profile = profiles::resolve(registry, profile)?;
    let kind = match attack {
        RangeAttack::Serial => SweepKind::Serial,
        RangeAttack::Parallel => SweepKind::Parallel,
    };
    let csv = if steps == 0 {
        String::new()
    } else {
        let grid = linear_grid(r_min, r_max, steps);
        let rows = sweep(kind, benign, &grid, profile, &EvProfile::default());
        output::sweep_csv(&rows)
    };
    match out {
        Some(path) => output::write_file(&path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(0)
}

fn cmd_waveform(cmd: WaveformCmd, format: Format) -> Result<i32, CmdError> {
    match cmd {
        WaveformCmd::Synth {
            duty,
            freq,
            v_high,
            v_low,
            duration,
            rate,
            out,
        } => {
            let duty = DutyCycle::percent(duty).map_err(|e| CmdError::Domain(e.to_string()))?;
            let p = PwmParams {
                freq,
                duty,
                v_high,
                v_low,
            };
            let signal =
                synthesize(&p, duration, rate).map_err(|e| CmdError::Domain(e.to_string()))?;
            output::write_file(&out, &output::signal_csv(&signal))?;
            Ok(0)
        }
        WaveformCmd::Measure { input } => {
            let signal = output::read_signal_csv(&input)?;
            let m = measure(&signal);
            match format {
                Format::Table => {
                    print_line(&format!("v_high  {} V", sig4(m.v_high)));
                    print_line(&format!("v_low   {} V", sig4(m.v_low)));
                    print_line(&format!("duty    {}%", sig4(m.duty_percent)));
                    print_line(&format!("freq    {} Hz", sig4(m.freq)));
                    match duty_to_current(
                        DutyCycle::percent(m.duty_percent.clamp(0.0, 100.0)).expect("percentage"),
                    ) {
                        AmpacityReading::Amps(a) => {
                            print_line(&format!("decoded {} A", sig4(a)));
                        }
                        other => print_line(&format!("decoded {other}")),
                    }
                }
                Format::Json => print_line(&serde_json::to_string(&m).expect("serializable")),
            }
            Ok(0)
        }
        WaveformCmd::Transform {
            attack,
            duty,
            v_high,
            freq,
            v_low,
            duration,
            rate,
            r,
            c,
            v_offset,
            r_f,
            tau_state,
            tau_dt,
            state_gain,
            dt_gain,
            ideal_switch,
            out,
        } => {
            let duty = DutyCycle::percent(duty).map_err(|e| CmdError::Domain(e.to_string()))?;
            match attack {
                DutyAttackKind::Tlc555 => {
                    let mut att = Tlc555Attack::default();
                    if let Some(r) = r {
                        att.r = parse_resistance(&r.to_string()).map_err(CmdError::Domain)?;
                    }
                    if let Some(c) = c {
                        att.c = c;
                    }
                    att.v_offset = v_offset;
                    let input = PwmParams {
                        freq,
                        duty,
                        v_high: v_high.unwrap_or(6.0),
                        v_low,
                    };
                    let output_pwm = tlc555_transform(&att, &input)
                        .map_err(|e| CmdError::Domain(e.to_string()))?;
                    let in_sig = synthesize(&input, duration, rate)
                        .map_err(|e| CmdError::Domain(e.to_string()))?;
                    let out_sig = synthesize(&output_pwm, duration, rate)
                        .map_err(|e| CmdError::Domain(e.to_string()))?;
                    let m_in = measure(&in_sig);
                    let m_out = measure(&out_sig);
                    report_transform(format, &m_in, &m_out)?;
                    if let Some(path) = out {
                        output::write_file(&path, &output::signal_csv(&out_sig))?;
                    }
                    Ok(0)
                }
                DutyAttackKind::FakeLoad => {
                    let mut att = FakeLoadAttack::default();
                    if let Some(r_f) = r_f {
                        att.r_f = parse_resistance(&r_f.to_string()).map_err(CmdError::Domain)?;
                    }
                    if let Some(v) = tau_state {
                        att.tau_state = v;
                    }
                    if let Some(v) = tau_dt {
                        att.tau_dt = v;
                    }
                    if let Some(v) = state_gain {
                        att.state_gain = v;
                    }
                    if let Some(v) = dt_gain {
                        att.dt_gain = v;
                    }
                    if ideal_switch {
                        att.switch = SwitchModel::Ideal;
                    }
                    let input = PwmParams {
                        freq,
                        duty,
                        v_high: v_high.unwrap_or(4.8),
                        v_low,
                    };
                    let in_sig = synthesize(&input, duration, rate)
                        .map_err(|e| CmdError::Domain(e.to_string()))?;
                    let ev_load = EvProfile::default().r_state_c;
                    let transformed = fake_load_transform(&att, &in_sig, ev_load)
                        .map_err(|e| CmdError::Domain(e.to_string()))?;
                    let m_in = measure(&in_sig);
                    let m_out = measure(&transformed.ev_side);
                    report_transform(format, &m_in, &m_out)?;
                    if let Some(path) = out {
                        output::write_file(&path, &output::signal_csv(&transformed.ev_side))?;
                    }
                    Ok(0)
                }
            }
        }
    }
}

fn report_transform(
    format: Format,
    m_in: &cpsim_core::waveform::Measurement,
    m_out: &cpsim_core::waveform::Measurement,
) -> Result<(), CmdError> {
    let decode = |duty: f64| {
        duty_to_current(DutyCycle::percent(duty.clamp(0.0, 100.0)).expect("percentage")).amps()
    };
    match format {
        Format::Table => {
            let show = |label: &str, m: &cpsim_core::waveform::Measurement| {
                let amps = match decode(m.duty_percent) {
                    Some(a) => format!("{} A (panel {})", sig4(a), display_amps(a)),
                    None => String::from("not decodable"),
                };
                print_line(&format!(
                    "{label}  duty {}%  v_high {} V  -> {amps}",
                    sig4(m.duty_percent),
                    sig4(m.v_high)
                ));
            };
            show("charger side", m_in);
            show("vehicle side", m_out);
        }
        Format::Json => {
            print_line(
                &serde_json::json!({
                    "charger_side": { "measurement": m_in, "amps": decode(m_in.duty_percent) },
                    "vehicle_side": { "measurement": m_out, "amps": decode(m_out.duty_percent) },
                })
                .to_string(),
            );
        }
    }
    Ok(())
}

fn outcome_exit_code(outcome: Outcome) -> i32 {
    match outcome {
        Outcome::Normal => 0,
        Outcome::Dos => 10,
        Outcome::ForcedCharging => 11,
        Outcome::RateReduced => 12,
        Outcome::ErrorLatched => 13,
    }
}

fn cmd_simulate(
    spec: &str,
    out: Option<PathBuf>,
    trace: Option<PathBuf>,
    registry: &[ChargerProfile],
    format: Format,
) -> Result<i32, CmdError> {
    let scenario = scenario::load(spec, registry)?;
    let report = run(&scenario).map_err(|e| CmdError::Domain(e.to_string()))?;
    let outcome = classify_outcome(&report);
    let mut flags = Vec::new();
    if report.flags.dos_communication_error {
        flags.push("dos_communication_error");
    }
    if report.flags.low_pilot_voltage_error {
        flags.push("low_pilot_voltage_error");
    }
    if report.flags.unsolicited_energization {
        flags.push("unsolicited_energization");
    }
    if report.flags.overcharge_past_limit {
        flags.push("overcharge_past_limit");
    }
    if report.flags.latched {
        flags.push("latched");
    }
    match format {
        Format::Table => print_line(&format!(
            "{}: outcome {} | final EVSE {} / EV {} | delivered {} kWh | flags: {}",
            report.scenario,
            outcome,
            report.final_evse_state,
            report.final_ev_state,
            sig4(report.delivered_energy_kwh),
            if flags.is_empty() {
                String::from("-")
            } else {
                flags.join(",")
            },
        )),
        Format::Json => print_line(
            &serde_json::json!({
                "scenario": report.scenario,
                "outcome": outcome,
                "flags": report.flags,
                "final_evse_state": report.final_evse_state,
                "final_ev_state": report.final_ev_state,
                "delivered_energy_kwh": report.delivered_energy_kwh,
            })
            .to_string(),
        ),
    }
    if let Some(path) = out {
        let json =
            serde_json::to_string_pretty(&report).map_err(|e| CmdError::Internal(e.into()))?;
        output::write_file(&path, &json)?;
    }
    if let Some(path) = trace {
        output::write_file(&path, &output::trace_csv(&report.trace))?;
    }
    Ok(outcome_exit_code(outcome))
}
