//! Parametric toy speakers and SIR-controlled mixing.
//!
//! A toy speaker is a harmonic stack with geometrically decaying partials,
//! one formant bump, slow pitch drift, syllable-rate amplitude modulation and
//! random pauses. Different parameter draws give sources that occupy
//! different harmonic combs, which is enough structure for mask-based
//! separation to be learnable.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsp::{SAMPLE_RATE_HZ, Waveform};
use crate::error::{Error, Result};

pub const MIN_F0_HZ: f64 = 80.0;
pub const MAX_F0_HZ: f64 = 400.0;
pub const MIN_DURATION_S: f64 = 0.5;
const PEAK_LEVEL: f64 = 0.5;
const MAX_PARTIAL_HZ: f64 = 7600.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ToySpeakerSpec {
    pub speaker_id: String,
    pub f0_hz: f64,
    /// Amplitude ratio between consecutive harmonics, in (0, 1).
    pub harmonic_decay: f64,
    pub formant_center_hz: f64,
    pub am_rate_hz: f64,
}

impl ToySpeakerSpec {
    /// Draws a speaker with log-uniform pitch over the allowed range.
    pub fn random(speaker_id: String, rng: &mut impl Rng) -> Self {
        let u = [rng.r#gen(), rng.r#gen(), rng.r#gen(), rng.r#gen()];
        Self::from_unit(speaker_id, u)
    }

    /// Latin-hypercube draw: each parameter range is cut into `ids.len()`
    /// equal strata and every stratum holds exactly one speaker, so a small
    /// pool still spans the full pitch range.
    pub fn stratified(ids: Vec<String>, rng: &mut impl Rng) -> Vec<Self> {
        let n = ids.len();
        let mut columns: [Vec<usize>; 4] = core::array::from_fn(|_| (0..n).collect());
        for c in &mut columns {
            c.shuffle(rng);
        }
        ids.into_iter()
            .enumerate()
            .map(|(i, id)| {
                let u = core::array::from_fn(|d| (columns[d][i] as f64 + rng.r#gen::<f64>()) / n as f64);
                Self::from_unit(id, u)
            })
            .collect()
    }

    /// Maps a point of the unit cube onto the parameter ranges (pitch on a
    /// log scale).
    fn from_unit(speaker_id: String, u: [f64; 4]) -> Self {
        let lerp = |lo: f64, hi: f64, t: f64| lo + (hi - lo) * t;
        let log_f0 = lerp(libm::log(MIN_F0_HZ), libm::log(MAX_F0_HZ), u[0]);
        Self {
            speaker_id,
            f0_hz: libm::exp(log_f0).clamp(MIN_F0_HZ, MAX_F0_HZ),
            harmonic_decay: lerp(0.55, 0.85, u[1]),
            formant_center_hz: lerp(400.0, 3000.0, u[2]),
            am_rate_hz: lerp(2.5, 6.0, u[3]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_F0_HZ..=MAX_F0_HZ).contains(&self.f0_hz) {
            return Err(Error::InvalidConfig("f0 must lie in [80, 400] Hz"));
        }
        if !(self.harmonic_decay > 0.0 && self.harmonic_decay < 1.0) {
            return Err(Error::InvalidConfig("harmonic decay must lie in (0, 1)"));
        }
        if !(self.formant_center_hz > 0.0 && self.am_rate_hz >= 0.0) {
            return Err(Error::InvalidConfig("formant and modulation rates must be positive"));
        }
        Ok(())
    }

    /// Number of parameters that differ from `other`.
    pub fn differing_fields(&self, other: &Self) -> usize {
        [
            self.f0_hz != other.f0_hz,
            self.harmonic_decay != other.harmonic_decay,
            self.formant_center_hz != other.formant_center_hz,
            self.am_rate_hz != other.am_rate_hz,
        ]
        .iter()
        .filter(|&&d| d)
        .count()
    }
}

/// Deterministic utterance of `duration_s` seconds at 16 kHz, peak-normalized
/// to 0.5.
pub fn synth_speaker_utterance(spec: &ToySpeakerSpec, duration_s: f64, seed: u64) -> Result<Waveform> {
    spec.validate()?;
    if !(duration_s >= MIN_DURATION_S) {
        return Err(Error::InvalidConfig("utterances must last at least 0.5 s"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = SAMPLE_RATE_HZ as f64;
    let len = libm::round(duration_s * sr) as usize;

    let f0 = spec.f0_hz * rng.gen_range(0.97..1.03);
    let drift_rate = rng.gen_range(0.3..1.2);
    let drift_phase = rng.gen_range(0.0..2.0 * PI);
    let am_phase = rng.gen_range(0.0..2.0 * PI);

    let num_partials = (MAX_PARTIAL_HZ / (f0 * 1.03)) as usize;
    let bandwidth = 0.3 * spec.formant_center_hz;
    // Per-partial (cos, sin) weights fold the random starting phase into the
    // amplitude so the partials can be generated by complex rotation.
    let weights: Vec<(f64, f64)> = (1..=num_partials)
        .map(|h| {
            let freq = h as f64 * f0;
            let offset = (freq - spec.formant_center_hz) / bandwidth;
            let amp = libm::pow(spec.harmonic_decay, (h - 1) as f64)
                * (1.0 + 1.5 * libm::exp(-offset * offset));
            let phase = rng.gen_range(0.0..2.0 * PI);
            (amp * libm::cos(phase), amp * libm::sin(phase))
        })
        .collect();

    let envelope = pause_envelope(len, sr, &mut rng);
    let mut samples = vec![0.0; len];
    let mut phase = 0.0f64;
    for (n, out) in samples.iter_mut().enumerate() {
        let t = n as f64 / sr;
        let inst_f0 = f0 * (1.0 + 0.03 * libm::sin(2.0 * PI * drift_rate * t + drift_phase));
        phase += 2.0 * PI * inst_f0 / sr;
        if phase > 2.0 * PI {
            phase -= 2.0 * PI;
        }
        let step = (libm::cos(phase), libm::sin(phase));
        let mut rot = step;
        let mut acc = 0.0;
        for &(wc, ws) in &weights {
            // sin(h phase + theta) = sin(h phase) cos(theta) + cos(h phase) sin(theta)
            acc += rot.1 * wc + rot.0 * ws;
            rot = (rot.0 * step.0 - rot.1 * step.1, rot.0 * step.1 + rot.1 * step.0);
        }
        let am = 0.6 + 0.4 * libm::sin(2.0 * PI * spec.am_rate_hz * t + am_phase);
        *out = acc * am * envelope[n];
    }
    let peak = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        let gain = PEAK_LEVEL / peak;
        samples.iter_mut().for_each(|s| *s *= gain);
    }
    Waveform::new(samples, SAMPLE_RATE_HZ)
}

/// Unit envelope with one 80-200 ms pause per started 0.6 s, ramped with
/// 10 ms raised-cosine edges.
fn pause_envelope(len: usize, sr: f64, rng: &mut impl Rng) -> Vec<f64> {
    let mut env = vec![1.0; len];
    let num_pauses = (len as f64 / sr / 0.6) as usize;
    let ramp = (0.01 * sr) as usize;
    for _ in 0..num_pauses {
        let width = (rng.gen_range(0.08..0.2) * sr) as usize;
        if width + 2 * ramp >= len {
            continue;
        }
        let start = rng.gen_range(0..len - width - 2 * ramp);
        for i in 0..width + 2 * ramp {
            let gain = if i < ramp {
                0.5 + 0.5 * libm::cos(PI * i as f64 / ramp as f64)
            } else if i >= ramp + width {
                0.5 - 0.5 * libm::cos(PI * (i - ramp - width) as f64 / ramp as f64)
            } else {
                0.0
            };
            let e: &mut f64 = &mut env[start + i];
            *e = e.min(gain);
        }
    }
    env
}

/// Signals of one mixture, all truncated to the shortest input.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub mixture: Waveform,
    pub target: Waveform,
    /// Individually rescaled interferers; they sum to [`Mixture::interference`].
    pub interferers: Vec<Waveform>,
    pub interference: Waveform,
    /// Gain applied to every interferer.
    pub gain: f64,
}

/// Rescales the interferer sum so the target-to-interference power ratio is
/// `sir_db` and adds it to the target.
pub fn mix_at_sir(target: &Waveform, interferers: &[Waveform], sir_db: f64) -> Result<Mixture> {
    if interferers.is_empty() {
        return Err(Error::EmptyInput("interferer list"));
    }
    if !sir_db.is_finite() {
        return Err(Error::NonFinite("SIR"));
    }
    let sr = target.sample_rate_hz;
    if interferers.iter().any(|i| i.sample_rate_hz != sr) {
        return Err(Error::InvalidConfig("sample rates differ"));
    }
    let len = interferers
        .iter()
        .map(Waveform::len)
        .fold(target.len(), usize::min);
    if len == 0 {
        return Err(Error::ZeroPowerSource);
    }
    let target = target.truncated(len);
    let mut sum = vec![0.0; len];
    for i in interferers {
        for (s, x) in sum.iter_mut().zip(&i.samples) {
            *s += x;
        }
    }
    let p_target = target.power();
    let p_interf = sum.iter().map(|s| s * s).sum::<f64>() / len as f64;
    if p_target == 0.0 || p_interf == 0.0 {
        return Err(Error::ZeroPowerSource);
    }
    let gain = libm::sqrt(p_target / (p_interf * libm::pow(10.0, sir_db / 10.0)));
    let scaled: Vec<Waveform> = interferers
        .iter()
        .map(|i| Waveform {
            samples: i.samples[..len].iter().map(|s| s * gain).collect(),
            sample_rate_hz: sr,
        })
        .collect();
    let interference = Waveform {
        samples: sum.iter().map(|s| s * gain).collect(),
        sample_rate_hz: sr,
    };
    let mixture = Waveform {
        samples: target
            .samples
            .iter()
            .zip(&interference.samples)
            .map(|(t, i)| t + i)
            .collect(),
        sample_rate_hz: sr,
    };
    Ok(Mixture {
        mixture,
        target,
        interferers: scaled,
        interference,
        gain,
    })
}
