//! Waveform / time-frequency conversion and amplitude-threshold masks.
//!
//! All time-frequency grids are stored frame-major: the `num_bins` values of
//! frame `t` are contiguous at `t * num_bins ..`. This is the layout the
//! recurrent encoder consumes frame by frame.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Range;

pub use num_complex::Complex64;

use crate::error::{Error, Result};

pub const SAMPLE_RATE_HZ: u32 = 16_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("waveform"));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean square over all samples.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64
    }

    pub fn truncated(&self, len: usize) -> Self {
        Self {
            samples: self.samples[..len.min(self.samples.len())].to_vec(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

/// A frequency x time grid, frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TfGrid<T> {
    num_bins: usize,
    num_frames: usize,
    data: Vec<T>,
}

pub type ComplexSpectrogram = TfGrid<Complex64>;
pub type MagnitudeSpectrogram = TfGrid<f64>;
/// Binary T-F indicator.
pub type BinaryMask = TfGrid<bool>;
/// Bins of an anchor within the presence threshold of its maximum.
pub type PresenceMask = BinaryMask;

impl<T> TfGrid<T> {
    pub fn from_vec(num_bins: usize, num_frames: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != num_bins * num_frames {
            return Err(Error::ShapeMismatch {
                context: "time-frequency grid",
                expected: num_bins * num_frames,
                found: data.len(),
            });
        }
        Ok(Self {
            num_bins,
            num_frames,
            data,
        })
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.num_bins, self.num_frames)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, bin: usize, frame: usize) -> &T {
        &self.data[frame * self.num_bins + bin]
    }

    pub fn frame(&self, frame: usize) -> &[T] {
        &self.data[frame * self.num_bins..(frame + 1) * self.num_bins]
    }

    pub fn check_same_shape<U>(&self, other: &TfGrid<U>, context: &'static str) -> Result<()> {
        if self.num_bins != other.num_bins {
            return Err(Error::ShapeMismatch {
                context,
                expected: self.num_bins,
                found: other.num_bins,
            });
        }
        if self.num_frames != other.num_frames {
            return Err(Error::ShapeMismatch {
                context,
                expected: self.num_frames,
                found: other.num_frames,
            });
        }
        Ok(())
    }
}

impl<T: Clone> TfGrid<T> {
    pub fn filled(num_bins: usize, num_frames: usize, value: T) -> Self {
        Self {
            num_bins,
            num_frames,
            data: vec![value; num_bins * num_frames],
        }
    }

    /// Sub-grid covering `frames`.
    pub fn frames(&self, frames: Range<usize>) -> Self {
        let end = frames.end.min(self.num_frames);
        let start = frames.start.min(end);
        Self {
            num_bins: self.num_bins,
            num_frames: end - start,
            data: self.data[start * self.num_bins..end * self.num_bins].to_vec(),
        }
    }
}

impl MagnitudeSpectrogram {
    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }
}

impl BinaryMask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&y| y).count()
    }
}

impl ComplexSpectrogram {
    pub fn magnitude(&self) -> MagnitudeSpectrogram {
        TfGrid {
            num_bins: self.num_bins,
            num_frames: self.num_frames,
            data: self.data.iter().map(|c| libm::hypot(c.re, c.im)).collect(),
        }
    }

    /// Scales every complex bin by the matching real mask value, keeping its
    /// phase.
    pub fn apply_mask(&self, mask: &TfGrid<f64>) -> Result<Self> {
        self.check_same_shape(mask, "mask application")?;
        Ok(TfGrid {
            num_bins: self.num_bins,
            num_frames: self.num_frames,
            data: self
                .data
                .iter()
                .zip(&mask.data)
                .map(|(c, &m)| c * m)
                .collect(),
        })
    }
}

/// In-place complex FFT. Radix-2 for power-of-two lengths, direct DFT otherwise.
#[derive(Debug, Clone)]
struct Fft {
    len: usize,
    twiddles: Vec<Complex64>,
}

impl Fft {
    fn new(len: usize) -> Self {
        let twiddles = (0..len)
            .map(|k| {
                let angle = -2.0 * PI * k as f64 / len as f64;
                Complex64::new(libm::cos(angle), libm::sin(angle))
            })
            .collect();
        Self { len, twiddles }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        if self.len.is_power_of_two() {
            self.radix2(buf);
        } else {
            self.direct(buf);
        }
    }

    /// Inverse transform including the 1/N factor.
    fn inverse(&self, buf: &mut [Complex64]) {
        for c in buf.iter_mut() {
            *c = c.conj();
        }
        self.forward(buf);
        let scale = 1.0 / self.len as f64;
        for c in buf.iter_mut() {
            *c = c.conj() * scale;
        }
    }

    fn radix2(&self, buf: &mut [Complex64]) {
        let n = self.len;
        let mut j = 0;
        for i in 1..n {
            let mut bit = n >> 1;
            while j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let stride = n / size;
            for start in (0..n).step_by(size) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }

    fn direct(&self, buf: &mut [Complex64]) {
        let n = self.len;
        let input = buf.to_vec();
        for (k, out) in buf.iter_mut().enumerate() {
            *out = input
                .iter()
                .enumerate()
                .map(|(i, x)| x * self.twiddles[(i * k) % n])
                .sum();
        }
    }
}

/// Framing parameters with a square-root periodic Hann window used for both
/// analysis and synthesis.
#[derive(Debug, Clone)]
pub struct StftConfig {
    win_len: usize,
    hop: usize,
    window: Vec<f64>,
    fft: Fft,
}

impl PartialEq for StftConfig {
    fn eq(&self, other: &Self) -> bool {
        self.win_len == other.win_len && self.hop == other.hop
    }
}

impl StftConfig {
    /// `hop` must divide `win_len` with at least two frames overlapping each
    /// sample, so the squared window sums to a constant.
    pub fn new(win_len: usize, hop: usize) -> Result<Self> {
        if win_len < 2 || hop == 0 {
            return Err(Error::InvalidConfig("window and hop must be positive"));
        }
        if win_len % hop != 0 || win_len / hop < 2 {
            return Err(Error::InvalidConfig(
                "hop must divide the window length at least twice",
            ));
        }
        let window = (0..win_len)
            .map(|n| {
                let hann = 0.5 - 0.5 * libm::cos(2.0 * PI * n as f64 / win_len as f64);
                libm::sqrt(hann)
            })
            .collect();
        Ok(Self {
            win_len,
            hop,
            window,
            fft: Fft::new(win_len),
        })
    }

    /// 32 ms window, 16 ms hop at 16 kHz.
    pub fn standard() -> Self {
        Self::new(512, 256).expect("valid framing")
    }

    pub fn win_len(&self) -> usize {
        self.win_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    pub fn num_bins(&self) -> usize {
        self.win_len / 2 + 1
    }

    /// Frame count for a signal of `len` samples; a trailing partial frame is
    /// zero-padded.
    pub fn num_frames(&self, len: usize) -> usize {
        if len < self.win_len {
            return 0;
        }
        1 + (len - self.win_len).div_ceil(self.hop)
    }

    /// Length of the overlap-added signal for `num_frames` frames.
    pub fn output_len(&self, num_frames: usize) -> usize {
        if num_frames == 0 {
            return 0;
        }
        self.win_len + (num_frames - 1) * self.hop
    }

    /// Overlap-add gain of the squared window.
    fn ola_gain(&self) -> f64 {
        self.window.iter().map(|w| w * w).sum::<f64>() / self.hop as f64
    }
}

pub fn stft(w: &Waveform, cfg: &StftConfig) -> Result<ComplexSpectrogram> {
    stft_samples(&w.samples, cfg)
}

pub fn stft_samples(samples: &[f64], cfg: &StftConfig) -> Result<ComplexSpectrogram> {
    if samples.len() < cfg.win_len {
        return Err(Error::InputTooShort {
            len: samples.len(),
            win_len: cfg.win_len,
        });
    }
    let num_frames = cfg.num_frames(samples.len());
    let num_bins = cfg.num_bins();
    let mut data = Vec::with_capacity(num_bins * num_frames);
    let mut buf = vec![Complex64::new(0.0, 0.0); cfg.win_len];
    for t in 0..num_frames {
        let start = t * cfg.hop;
        for (n, slot) in buf.iter_mut().enumerate() {
            let x = samples.get(start + n).copied().unwrap_or(0.0);
            *slot = Complex64::new(x * cfg.window[n], 0.0);
        }
        cfg.fft.forward(&mut buf);
        data.extend_from_slice(&buf[..num_bins]);
    }
    TfGrid::from_vec(num_bins, num_frames, data)
}

/// Overlap-add resynthesis; output length is `win_len + (T - 1) * hop`.
pub fn istft(s: &ComplexSpectrogram, cfg: &StftConfig) -> Result<Waveform> {
    if s.num_bins != cfg.num_bins() {
        return Err(Error::ShapeMismatch {
            context: "istft frequency bins",
            expected: cfg.num_bins(),
            found: s.num_bins,
        });
    }
    let n = cfg.win_len;
    let mut out = vec![0.0; cfg.output_len(s.num_frames)];
    let gain = 1.0 / cfg.ola_gain();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for t in 0..s.num_frames {
        let frame = s.frame(t);
        buf[..s.num_bins].copy_from_slice(frame);
        for k in s.num_bins..n {
            buf[k] = frame[n - k].conj();
        }
        cfg.fft.inverse(&mut buf);
        let start = t * cfg.hop;
        for (i, c) in buf.iter().enumerate() {
            out[start + i] += c.re * cfg.window[i] * gain;
        }
    }
    Waveform::new(out, SAMPLE_RATE_HZ)
}

/// Marks bins whose magnitude is more than `threshold_db` below the maximum
/// as absent. An all-zero input yields an all-zero mask.
pub fn presence_mask(m: &MagnitudeSpectrogram, threshold_db: f64) -> PresenceMask {
    let floor = m.max_value() * libm::pow(10.0, -threshold_db / 20.0);
    TfGrid {
        num_bins: m.num_bins,
        num_frames: m.num_frames,
        data: m.data.iter().map(|&v| v > floor).collect(),
    }
}
