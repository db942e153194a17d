//! Sampled-signal layer used by the duty-cycle attacks: PWM synthesis,
//! oscilloscope-style measurement, diode rectification, and first-order RC
//! stages.
//!
//! The quasi-static solvers in [`crate::circuit`] cover state switching;
//! this module exists for the attacks that reshape the waveform itself,
//! where duty cycles have to be produced and measured to a tenth of a
//! percentage point. The default 1 MHz rate gives 1000 samples per pilot
//! period, i.e. 0.1 pp duty resolution.

use alloc::vec::Vec;
use core::fmt;

use crate::circuit::DiodeModel;
use crate::codec::DutyCycle;
use crate::num;

/// Minimum samples per PWM period a signal must carry.
pub const MIN_SAMPLES_PER_PERIOD: f64 = 100.0;

/// Rectangular pilot PWM description.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PwmParams {
    pub freq: f64,
    pub duty: DutyCycle,
    pub v_high: f64,
    pub v_low: f64,
}

impl PwmParams {
    /// Pilot-shaped PWM: 1 kHz against a −12 V low rail.
    pub fn pilot(duty: DutyCycle, v_high: f64) -> PwmParams {
        PwmParams {
            freq: 1000.0,
            duty,
            v_high,
            v_low: -12.0,
        }
    }
}

/// Uniformly sampled voltage trace.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampledSignal {
    pub sample_rate: f64,
    pub samples: Vec<f64>,
}

impl SampledSignal {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }
}

/// First-order RC stage described by its time constant.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct RcStage {
    tau: f64,
}

impl RcStage {
    /// Panics unless the time constant is finite and positive.
    pub fn from_tau(tau: f64) -> RcStage {
        assert!(
            tau.is_finite() && tau > 0.0,
            "RC time constant must be positive"
        );
        RcStage { tau }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WaveformError {
    /// Sample rate below 100 samples per period.
    SampleRateTooLow { rate: f64, freq: f64 },
    /// Synthesis asked for fewer than 10 periods.
    DurationTooShort { duration: f64, freq: f64 },
    /// RC stage driven with a sample period above tau/10.
    Undersampled { dt: f64, tau: f64 },
}

impl fmt::Display for WaveformError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            WaveformError::SampleRateTooLow { rate, freq } => write!(
                f,
                "sample rate {rate} Hz below 100 samples per period of a {freq} Hz PWM"
            ),
            WaveformError::DurationTooShort { duration, freq } => write!(
                f,
                "duration {duration} s covers fewer than 10 periods at {freq} Hz"
            ),
            WaveformError::Undersampled { dt, tau } => {
                write!(f, "sample period {dt} s exceeds tau/10 for tau = {tau} s")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for WaveformError {}

/// Synthesize an ideal rectangular PWM.
///
/// Each period carries `round(duty · samples_per_period)` high samples, so
/// the measured duty of a synthesized signal is exact to half a sample.
pub fn synthesize(p: &PwmParams, duration: f64, rate: f64) -> Result<SampledSignal, WaveformError> {
    if rate < MIN_SAMPLES_PER_PERIOD * p.freq {
        return Err(WaveformError::SampleRateTooLow { rate, freq: p.freq });
    }
    if duration * p.freq < 10.0 {
        return Err(WaveformError::DurationTooShort {
            duration,
            freq: p.freq,
        });
    }
    let spp = rate / p.freq;
    let high_len = spp * p.duty.value() / 100.0;
    let n = num::round(duration * rate) as usize;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let pos = i as f64 - num::floor(i as f64 / spp) * spp;
        // half-sample offset makes the per-period high count round(high_len)
        let v = if pos + 0.5 < high_len {
            p.v_high
        } else {
            p.v_low
        };
        samples.push(v);
    }
    Ok(SampledSignal {
        sample_rate: rate,
        samples,
    })
}

/// Scope-style reading of a sampled signal.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Measurement {
    pub v_high: f64,
    pub v_low: f64,
    pub duty_percent: f64,
    pub freq: f64,
}

/// Measure plateau levels, duty cycle, and frequency.
///
/// The duty threshold is the midlevel between the observed extremes rather
/// than 0 V, so rectified signals measure correctly. A signal with no level
/// crossings reports DC: duty 100% for a positive level, 0% otherwise.
pub fn measure(s: &SampledSignal) -> Measurement {
    assert!(!s.samples.is_empty(), "cannot measure an empty signal");
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in &s.samples {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    if hi - lo < 1e-9 {
        let duty = if hi > 0.0 { 100.0 } else { 0.0 };
        return Measurement {
            v_high: hi,
            v_low: lo,
            duty_percent: duty,
            freq: 0.0,
        };
    }
    let mid = 0.5 * (hi + lo);
    let mut above_sum = 0.0;
    let mut above_n = 0usize;
    let mut below_sum = 0.0;
    let mut below_n = 0usize;
    for &v in &s.samples {
        if v > mid {
            above_sum += v;
            above_n += 1;
        } else {
            below_sum += v;
            below_n += 1;
        }
    }
    let duty = 100.0 * above_n as f64 / s.samples.len() as f64;
    let v_high = if above_n > 0 {
        above_sum / above_n as f64
    } else {
        mid
    };
    let v_low = if below_n > 0 {
        below_sum / below_n as f64
    } else {
        mid
    };

    // rising midlevel crossings, linearly interpolated between samples
    let mut first: Option<f64> = None;
    let mut last = 0.0;
    let mut crossings = 0usize;
    for i in 1..s.samples.len() {
        let (a, b) = (s.samples[i - 1], s.samples[i]);
        if a <= mid && b > mid {
            let frac = (mid - a) / (b - a);
            let t = (i as f64 - 1.0 + frac) / s.sample_rate;
            if first.is_none() {
                first = Some(t);
            }
            last = t;
            crossings += 1;
        }
    }
    let freq = match first {
        Some(t0) if crossings >= 2 => (crossings - 1) as f64 / (last - t0),
        _ => 0.0,
    };
    Measurement {
        v_high,
        v_low,
        duty_percent: duty,
        freq,
    }
}

/// Diode rectification: negative samples clamp to 0 and positive samples
/// lose the forward drop (floored at 0). Idempotent for the ideal diode;
/// each pass through a real diode costs another forward drop.
pub fn rectify(s: &SampledSignal, diode: DiodeModel) -> SampledSignal {
    let drop = diode.forward_drop;
    let samples = s
        .samples
        .iter()
        .map(|&v| if v > drop { v - drop } else { 0.0 })
        .collect();
    SampledSignal {
        sample_rate: s.sample_rate,
        samples,
    }
}

/// Discrete first-order low-pass: `y[n+1] = y[n] + (x[n] − y[n])·(1 − e^(−Δt/τ))`
/// with `y[0] = x[0]`.
///
/// For piecewise-constant inputs aligned to the sample grid this recurrence
/// is the exact zero-order-hold solution of the continuous RC stage.
pub fn rc_filter(s: &SampledSignal, stage: RcStage) -> Result<SampledSignal, WaveformError> {
    let dt = s.dt();
    if dt > stage.tau() / 10.0 {
        return Err(WaveformError::Undersampled {
            dt,
            tau: stage.tau(),
        });
    }
    Ok(SampledSignal {
        sample_rate: s.sample_rate,
        samples: rc_run(&s.samples, rc_alpha(dt, stage.tau()), s.samples[0]),
    })
}

/// One-pole smoothing coefficient for a step `dt` against time constant `tau`.
pub(crate) fn rc_alpha(dt: f64, tau: f64) -> f64 {
    1.0 - num::exp(-dt / tau)
}

/// Run the one-pole recurrence from an explicit initial value.
pub(crate) fn rc_run(x: &[f64], alpha: f64, y0: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    if x.is_empty() {
        return out;
    }
    let mut y = y0;
    out.push(y);
    for &xi in &x[..x.len() - 1] {
        y += (xi - y) * alpha;
        out.push(y);
    }
    out
}
