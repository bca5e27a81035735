//! Streaming Welch estimator evaluated directly at arbitrary angular frequencies.
//!
//! Segments of `L` samples, periodic Hann window, 50% overlap. Each segment gives
//! the periodogram `S(ω) = dt |Σ_j w_j x_j e^{-iω t_j}|² / Σ_j w_j²`, which is the
//! two-sided density in the convention `<F(t)F(t')> = D δ(t-t')` ⇒ `S = D`. Shot
//! noise of mean flux `N0` therefore reads `S = N0`, i.e. `W = 1`.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Minimum series length, in whole segments, accepted by [`estimate_spectrum`].
pub const MIN_SEGMENTS: usize = 20;

/// Frequencies kept within this many bin widths of DC and Nyquist are dropped.
pub const GUARD_BINS: f64 = 1.0;

/// Samples per phase-table block; the phasor of sample `n` is the exact block
/// phase times a tabulated in-block offset.
const BLOCK: usize = 64;

/// Frequencies of `omegas` that are resolvable with segments of `len` samples.
pub fn usable_frequencies<T: Real>(omegas: &[T], len: usize, dt: T) -> Vec<T> {
    let bin = T::lit(2.0 * PI) / (T::from_usize_lossy(len) * dt);
    let guard = T::lit(GUARD_BINS) * bin;
    let nyquist = T::PI() / dt;
    omegas
        .iter()
        .copied()
        .filter(|&w| w >= guard && w <= nyquist - guard)
        .collect()
}

#[derive(Debug, Clone)]
struct Segment<T> {
    start: usize,
    re: Vec<T>,
    im: Vec<T>,
    blk_re: Vec<T>,
    blk_im: Vec<T>,
}

impl<T: Real> Segment<T> {
    fn new(k: usize) -> Self {
        Self {
            start: 0,
            re: vec![T::zero(); k],
            im: vec![T::zero(); k],
            blk_re: vec![T::zero(); k],
            blk_im: vec![T::zero(); k],
        }
    }

    fn reset(&mut self, start: usize) {
        self.start = start;
        for v in [&mut self.re, &mut self.im, &mut self.blk_re, &mut self.blk_im] {
            v.iter_mut().for_each(|x| *x = T::zero());
        }
    }

    /// Rotates the in-block partial sums by the block phase and adds them in.
    fn flush(&mut self, base_re: &[T], base_im: &[T]) {
        for i in 0..self.re.len() {
            let (a, b) = (self.blk_re[i], self.blk_im[i]);
            self.re[i] += a * base_re[i] - b * base_im[i];
            self.im[i] += a * base_im[i] + b * base_re[i];
            self.blk_re[i] = T::zero();
            self.blk_im[i] = T::zero();
        }
    }
}

/// Accumulates segment periodograms from a sample stream.
#[derive(Debug, Clone)]
pub struct Welch<T> {
    omegas: Vec<T>,
    omega_dt: Vec<f64>,
    dt: T,
    window: Vec<T>,
    window_power: T,
    hop: usize,
    /// `e^{-i ω j dt}` for `j < BLOCK`, row-major in `j`.
    table_re: Vec<T>,
    table_im: Vec<T>,
    base_re: Vec<T>,
    base_im: Vec<T>,
    active: VecDeque<Segment<T>>,
    spare: Vec<Segment<T>>,
    n: usize,
    sum: Vec<T>,
    sum_sq: Vec<T>,
    n_segments: usize,
}

impl<T: Real> Welch<T> {
    /// `len` must be even and at least 4.
    pub fn new(omegas: &[T], len: usize, dt: T) -> Result<Self> {
        if len < 4 || len % 2 != 0 {
            return Err(Error::InvalidSimConfig(format!(
                "segment_length must be even and >= 4, got {len}"
            )));
        }
        let window: Vec<T> = (0..len)
            .map(|j| {
                let c = (2.0 * PI * j as f64 / len as f64).cos();
                T::lit(0.5 * (1.0 - c))
            })
            .collect();
        let window_power = window.iter().fold(T::zero(), |a, &w| a + w * w);
        let omega_dt: Vec<f64> = omegas
            .iter()
            .map(|w| w.to_f64_lossy() * dt.to_f64_lossy())
            .collect();
        let k = omegas.len();
        let mut table_re = Vec::with_capacity(BLOCK * k);
        let mut table_im = Vec::with_capacity(BLOCK * k);
        for j in 0..BLOCK {
            for &a in &omega_dt {
                table_re.push(T::lit((a * j as f64).cos()));
                table_im.push(T::lit(-(a * j as f64).sin()));
            }
        }
        Ok(Self {
            omegas: omegas.to_vec(),
            omega_dt,
            dt,
            window,
            window_power,
            hop: len / 2,
            table_re,
            table_im,
            base_re: vec![T::one(); k],
            base_im: vec![T::zero(); k],
            active: VecDeque::with_capacity(2),
            spare: Vec::new(),
            n: 0,
            sum: vec![T::zero(); k],
            sum_sq: vec![T::zero(); k],
            n_segments: 0,
        })
    }

    pub fn segment_length(&self) -> usize {
        self.window.len()
    }

    pub fn push(&mut self, x: T) {
        let len = self.window.len();
        let k = self.omegas.len();
        if self.n % self.hop == 0 {
            let mut seg = self.spare.pop().unwrap_or_else(|| Segment::new(k));
            seg.reset(self.n);
            self.active.push_back(seg);
        }
        let j = self.n % BLOCK;
        let t_re = &self.table_re[j * k..(j + 1) * k];
        let t_im = &self.table_im[j * k..(j + 1) * k];
        for seg in self.active.iter_mut() {
            let wx = self.window[self.n - seg.start] * x;
            for (acc, &t) in seg.blk_re.iter_mut().zip(t_re) {
                *acc += wx * t;
            }
            for (acc, &t) in seg.blk_im.iter_mut().zip(t_im) {
                *acc += wx * t;
            }
        }
        if self.active.front().is_some_and(|f| self.n - f.start == len - 1) {
            let mut seg = self.active.pop_front().expect("front exists");
            seg.flush(&self.base_re, &self.base_im);
            let norm = self.dt / self.window_power;
            for i in 0..k {
                let p = (seg.re[i] * seg.re[i] + seg.im[i] * seg.im[i]) * norm;
                self.sum[i] += p;
                self.sum_sq[i] += p * p;
            }
            self.n_segments += 1;
            self.spare.push(seg);
        }
        self.n += 1;
        if self.n % BLOCK == 0 {
            for seg in self.active.iter_mut() {
                seg.flush(&self.base_re, &self.base_im);
            }
            for i in 0..k {
                let a = (self.omega_dt[i] * self.n as f64).rem_euclid(2.0 * PI);
                self.base_re[i] = T::lit(a.cos());
                self.base_im[i] = T::lit(-a.sin());
            }
        }
    }

    pub fn extend<I: IntoIterator<Item = T>>(&mut self, xs: I) {
        for x in xs {
            self.push(x);
        }
    }

    pub fn samples(&self) -> usize {
        self.n
    }

    pub fn n_segments(&self) -> usize {
        self.n_segments
    }

    pub fn omegas(&self) -> &[T] {
        &self.omegas
    }

    /// Sum of completed segment periodograms per frequency.
    pub fn periodogram_sum(&self) -> &[T] {
        &self.sum
    }

    /// Mean density and its standard error from the inter-segment scatter.
    pub fn finish(&self) -> (Vec<T>, Option<Vec<T>>) {
        let n = T::from_usize_lossy(self.n_segments.max(1));
        let mean: Vec<T> = self.sum.iter().map(|&s| s / n).collect();
        if self.n_segments < 2 {
            return (mean, None);
        }
        let nm1 = n - T::one();
        let se = self
            .sum_sq
            .iter()
            .zip(&mean)
            .map(|(&sq, &m)| ((sq - n * m * m).max(T::zero()) / nm1 / n).sqrt())
            .collect();
        (mean, Some(se))
    }
}

/// Welch estimate of `W_ph(Ω) = S_NN(Ω) / N0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate<T> {
    pub omega_grid: Vec<T>,
    pub w_ph: Vec<T>,
    /// Absent when the scatter used for it is a single sample.
    pub stderr: Option<Vec<T>>,
    pub n_segments: usize,
    pub n_traj: usize,
}

/// Welch density of one series with inter-segment standard errors, on the
/// usable subset of `omegas`.
pub fn estimate_spectrum<T: Real>(
    series: &[T],
    dt: T,
    segment_length: usize,
    omegas: &[T],
) -> Result<SpectrumEstimate<T>> {
    let need = MIN_SEGMENTS * segment_length;
    if series.len() < need {
        return Err(Error::TooFewSegments {
            have: series.len() / segment_length.max(1),
            need: MIN_SEGMENTS,
            required_duration: need as f64 * dt.to_f64_lossy(),
        });
    }
    let grid = usable_frequencies(omegas, segment_length, dt);
    let mut welch = Welch::new(&grid, segment_length, dt)?;
    welch.extend(series.iter().copied());
    let (mean, se) = welch.finish();
    Ok(SpectrumEstimate {
        omega_grid: grid,
        w_ph: mean,
        stderr: se,
        n_segments: welch.n_segments(),
        n_traj: 1,
    })
}

/// [`estimate_spectrum`] normalized by the mean detected flux `n0`.
pub fn estimate_fano<T: Real>(
    series: &[T],
    n0: T,
    dt: T,
    segment_length: usize,
    omegas: &[T],
) -> Result<SpectrumEstimate<T>> {
    let mut est = estimate_spectrum(series, dt, segment_length, omegas)?;
    est.w_ph.iter_mut().for_each(|w| *w /= n0);
    if let Some(se) = est.stderr.as_mut() {
        se.iter_mut().for_each(|s| *s /= n0);
    }
    Ok(est)
}

/// Weighted least-squares fit of `y = offset + A / (1 + (ω τ)²)`, returning `(τ, A)`.
///
/// `A` is solved linearly for each `τ`; `ln τ` is located by golden-section search
/// within a factor `span` of `tau_guess`.
pub fn fit_lorentzian<T: Real>(
    omegas: &[T],
    values: &[T],
    weights: &[T],
    offset: T,
    tau_guess: T,
    span: T,
) -> (T, T) {
    let amplitude_at = |tau: T| {
        let (mut num, mut den) = (T::zero(), T::zero());
        for ((&w, &y), &wt) in omegas.iter().zip(values).zip(weights) {
            let l = (T::one() + (w * tau).powi(2)).recip();
            num += wt * l * (y - offset);
            den += wt * l * l;
        }
        let a = if den > T::zero() { num / den } else { T::zero() };
        let cost = omegas
            .iter()
            .zip(values)
            .zip(weights)
            .fold(T::zero(), |acc, ((&w, &y), &wt)| {
                let r = y - offset - a / (T::one() + (w * tau).powi(2));
                acc + wt * r * r
            });
        (a, cost)
    };
    let cost = |ln_tau: T| amplitude_at(ln_tau.exp()).1;
    let g = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let (mut a, mut b) = (tau_guess.ln() - span.ln(), tau_guess.ln() + span.ln());
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (cost(c), cost(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = cost(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = cost(d);
        }
        if (b - a).abs() < T::lit(1e-10) {
            break;
        }
    }
    let tau = ((a + b) * T::lit(0.5)).exp();
    (tau, amplitude_at(tau).0)
}
