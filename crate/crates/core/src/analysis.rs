//! Fitting and figures of merit: the decaying-cosine Rabi fit, leakage and
//! CNOT fidelity metrics, and closed-form probability oracles.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SMatrix, SVector};
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::dynamics::{
    run_to_probabilities, sweep_last_pulse_width, DecoherenceParams, IntegrationConfig,
};
use crate::error::{check, Error, Result};
use crate::experiments::TomographyMatrix;
use crate::model::{ProbabilityPair, QubitPairParams, PLANCK_H};
use crate::output::fmt_sig;
use crate::pulses::{Channel, InputLabel, PulseSettings, ScheduleBuilder};

/// Minimum number of samples accepted by [`fit_rabi`].
pub const MIN_FIT_SAMPLES: usize = 20;
/// Minimum number of oscillation periods the samples must span.
pub const MIN_FIT_PERIODS: f64 = 2.0;

const MAX_ITERATIONS: usize = 500;
const REL_TOLERANCE: f64 = 1e-8;
const JACOBIAN_STEP: f64 = 1e-6;

/// Result of fitting `a0·exp(−(W/T2*)²)·cos(2π·freq·W + b0) + a1·W + a2`.
///
/// `W` is in ps and `freq` in GHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiFit {
    pub a0: f64,
    /// ps
    pub t2_star: f64,
    /// GHz
    pub freq: f64,
    /// rad, in (−π, π]
    pub b0: f64,
    /// 1/ps
    pub a1: f64,
    pub a2: f64,
    pub residual_rms: f64,
    pub iterations: usize,
    /// False when the oscillation amplitude vanished, leaving `freq`, `t2_star`
    /// and `b0` undetermined by the data.
    pub frequency_constrained: bool,
}

impl RabiFit {
    pub fn evaluate(&self, w: f64) -> f64 {
        model(&self.as_vector(), w)
    }

    fn as_vector(&self) -> P6 {
        P6::from([self.a0, self.t2_star, self.freq, self.b0, self.a1, self.a2])
    }

    pub const CSV_HEADER: [&'static str; 8] = [
        "a0",
        "t2_star_ps",
        "freq_ghz",
        "b0_rad",
        "a1_per_ps",
        "a2",
        "residual_rms",
        "frequency_constrained",
    ];

    pub fn csv_row(&self) -> Vec<String> {
        vec![
            fmt_sig(self.a0),
            fmt_sig(self.t2_star),
            fmt_sig(self.freq),
            fmt_sig(self.b0),
            fmt_sig(self.a1),
            fmt_sig(self.a2),
            fmt_sig(self.residual_rms),
            self.frequency_constrained.to_string(),
        ]
    }

    /// Flat `key = value` listing.
    pub fn to_key_values(&self) -> String {
        Self::CSV_HEADER
            .iter()
            .zip(self.csv_row())
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

type P6 = SVector<f64, 6>;

fn model(p: &P6, w: f64) -> f64 {
    let env = if p[1].is_infinite() {
        1.0
    } else {
        (-(w / p[1]).powi(2)).exp()
    };
    p[0] * env * (2.0 * PI * p[2] * 1e-3 * w + p[3]).cos() + p[4] * w + p[5]
}

fn cost(p: &P6, xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| (y - model(p, x)).powi(2))
        .sum()
}

/// Fits the decaying-cosine Rabi model by damped least squares.
///
/// Samples are `(W ps, probability)` pairs sorted by strictly increasing W.
/// Without an initial guess the frequency starts at the dominant spectral peak
/// of the linearly detrended samples, and amplitude, phase and decay time
/// come from linear least squares at that frequency.
pub fn fit_rabi(samples: &[(f64, f64)], initial_guess: Option<&RabiFit>) -> Result<RabiFit> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} samples, need at least {MIN_FIT_SAMPLES}",
            samples.len()
        )));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
        return Err(Error::InsufficientData("non-finite sample".into()));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InsufficientData(
            "sample abscissae must be strictly increasing".into(),
        ));
    }
    let span = xs[xs.len() - 1] - xs[0];

    let (p0, has_signal) = match initial_guess {
        Some(g) => (g.as_vector(), g.a0 > 0.0),
        None => initial_parameters(&xs, &ys)?,
    };
    if has_signal && initial_guess.is_none() && span * p0[2] * 1e-3 < MIN_FIT_PERIODS {
        return Err(Error::InsufficientData(format!(
            "samples span {:.2} periods, need {MIN_FIT_PERIODS}",
            span * p0[2] * 1e-3
        )));
    }

    let scale = P6::from([
        1.0,
        p0[1].abs().max(span),
        p0[2].abs().max(1e-3),
        1.0,
        1.0 / span.max(1.0),
        1.0,
    ]);
    let (p, iterations) = levenberg_marquardt(p0, &scale, &xs, &ys)?;
    let rms = (cost(&p, &xs, &ys) / xs.len() as f64).sqrt();
    let amp_floor = 1e-9 * p[5].abs().max(1.0);
    Ok(normalize(p, rms, iterations, p[0].abs() > amp_floor))
}

fn normalize(p: P6, residual_rms: f64, iterations: usize, constrained: bool) -> RabiFit {
    let (mut a0, mut freq, mut b0) = (p[0], p[2], p[3]);
    if freq < 0.0 {
        freq = -freq;
        b0 = -b0;
    }
    if a0 < 0.0 {
        a0 = -a0;
        b0 += PI;
    }
    b0 = b0.rem_euclid(2.0 * PI);
    if b0 > PI {
        b0 -= 2.0 * PI;
    }
    RabiFit {
        a0,
        t2_star: p[1].abs(),
        freq,
        b0,
        a1: p[4],
        a2: p[5],
        residual_rms,
        iterations,
        frequency_constrained: constrained,
    }
}

fn levenberg_marquardt(mut p: P6, scale: &P6, xs: &[f64], ys: &[f64]) -> Result<(P6, usize)> {
    let mut c = cost(&p, xs, ys);
    if !c.is_finite() {
        return Err(Error::FitDiverged("initial residual is not finite".into()));
    }
    let tiny = 1e-28 * xs.len() as f64;
    let mut lambda = 1e-3;
    let mut accepted = 0usize;

    for iter in 0..MAX_ITERATIONS {
        if c <= tiny {
            return Ok((p, iter));
        }
        let (jtj, jtr) = normal_equations(&p, scale, xs, ys);
        let max_diag = (0..6).map(|i| jtj[(i, i)]).fold(0.0, f64::max);
        let step = loop {
            let mut a = jtj;
            for i in 0..6 {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12 * max_diag).max(1e-300);
            }
            let candidate = a.lu().solve(&jtr).map(|d| p + d);
            if let Some(pn) = candidate.filter(|pn| pn.iter().all(|v| v.is_finite())) {
                let cn = cost(&pn, xs, ys);
                if cn.is_finite() && cn < c {
                    lambda = (lambda * 0.1).max(1e-12);
                    break Some((pn, cn));
                }
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                break None;
            }
        };
        match step {
            Some((pn, cn)) => {
                let rel = (0..6)
                    .map(|i| (pn[i] - p[i]).abs() / (p[i].abs() + scale[i] * 1e-6))
                    .fold(0.0, f64::max);
                p = pn;
                c = cn;
                accepted += 1;
                if rel < REL_TOLERANCE {
                    return Ok((p, iter + 1));
                }
            }
            // No descent direction left: a stationary point.
            None if accepted > 0 => return Ok((p, iter)),
            None => {
                return Err(Error::FitDiverged(
                    "residual not reduced after damping escalation".into(),
                ))
            }
        }
    }
    Ok((p, MAX_ITERATIONS))
}

/// `JᵀJ` and `Jᵀr` with a central-difference Jacobian of the model.
fn normal_equations(p: &P6, scale: &P6, xs: &[f64], ys: &[f64]) -> (SMatrix<f64, 6, 6>, P6) {
    let h: [f64; 6] = std::array::from_fn(|i| JACOBIAN_STEP * p[i].abs().max(scale[i]));
    let mut jtj = SMatrix::<f64, 6, 6>::zeros();
    let mut jtr = P6::zeros();
    for (&x, &y) in xs.iter().zip(ys) {
        let mut row = P6::zeros();
        for i in 0..6 {
            let mut hi = *p;
            let mut lo = *p;
            hi[i] += h[i];
            lo[i] -= h[i];
            row[i] = (model(&hi, x) - model(&lo, x)) / (2.0 * h[i]);
        }
        let r = y - model(p, x);
        jtj += row * row.transpose();
        jtr += row * r;
    }
    (jtj, jtr)
}

/// Least-squares line through the samples, `(slope, intercept)`.
fn linear_trend(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Linear least squares `y ≈ Σ c_k basis_k(x)`, returning coefficients and SSE.
fn linear_fit(xs: &[f64], ys: &[f64], basis: &[&dyn Fn(f64) -> f64]) -> (Vec<f64>, f64) {
    let a = DMatrix::from_fn(xs.len(), basis.len(), |i, k| basis[k](xs[i]));
    let b = DVector::from_column_slice(ys);
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-12)
        .unwrap_or_else(|_| DVector::zeros(basis.len()));
    let sse = (&a * &coef - b).norm_squared();
    (coef.iter().copied().collect(), sse)
}

fn initial_parameters(xs: &[f64], ys: &[f64]) -> Result<(P6, bool)> {
    let (slope, intercept) = linear_trend(xs, ys);
    let resid: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| y - slope * x - intercept)
        .collect();
    let span = xs[xs.len() - 1] - xs[0];
    let signal = resid.iter().map(|r| r * r).sum::<f64>().sqrt();
    let data_scale = ys.iter().fold(0.0_f64, |m, y| m.max(y.abs())).max(1e-300);
    if signal <= 1e-12 * data_scale * (xs.len() as f64).sqrt() {
        // Nothing oscillates; park the nonlinear parameters at harmless values.
        let f0 = 1e3 / span.max(1e-9);
        return Ok((P6::from([0.0, span, f0, 0.0, slope, intercept]), false));
    }
    let freq = spectral_peak(xs, &resid)?;
    let w = 2.0 * PI * freq * 1e-3;

    let mut best: Option<(f64, P6)> = None;
    for factor in [0.25, 0.35, 0.5, 0.7, 1.0, 1.4, 2.0, 3.0, 5.0, 10.0] {
        let t2 = factor * span;
        let env = move |x: f64| (-(x / t2).powi(2)).exp();
        let c = move |x: f64| env(x) * (w * x).cos();
        let s = move |x: f64| env(x) * (w * x).sin();
        let lin = |x: f64| x;
        let one = |_: f64| 1.0;
        let (coef, sse) = linear_fit(xs, ys, &[&c, &s, &lin, &one]);
        let a0 = coef[0].hypot(coef[1]);
        let b0 = (-coef[1]).atan2(coef[0]);
        let p = P6::from([a0, t2, freq, b0, coef[2], coef[3]]);
        if best.as_ref().is_none_or(|(b, _)| sse < *b) {
            best = Some((sse, p));
        }
    }
    Ok((best.unwrap().1, true))
}

/// Resamples onto a uniform grid when the abscissae are not evenly spaced.
fn uniform_samples(xs: &[f64], ys: &[f64]) -> (f64, Vec<f64>) {
    let n = xs.len();
    let dx = (xs[n - 1] - xs[0]) / (n - 1) as f64;
    let uniform = xs
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dx).abs() <= 1e-6 * dx);
    if uniform {
        return (dx, ys.to_vec());
    }
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let x = xs[0] + i as f64 * dx;
        while j + 2 < n && xs[j + 1] < x {
            j += 1;
        }
        let t = ((x - xs[j]) / (xs[j + 1] - xs[j])).clamp(0.0, 1.0);
        out.push(ys[j] + t * (ys[j + 1] - ys[j]));
    }
    (dx, out)
}

/// Frequency (GHz) of the largest non-DC peak in the zero-padded spectrum,
/// refined by parabolic interpolation between neighbouring bins.
fn spectral_peak(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let (dx, ys) = uniform_samples(xs, ys);
    let n_pad = (ys.len().next_power_of_two() * 8).max(64);
    let mut buf: Vec<Complex<f64>> = ys.iter().map(|&y| Complex::new(y, 0.0)).collect();
    buf.resize(n_pad, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n_pad).process(&mut buf);
    let mag: Vec<f64> = buf[..n_pad / 2].iter().map(|c| c.norm()).collect();
    // Skip the DC lobe left over from detrending.
    let first = (n_pad / ys.len()).max(1);
    let k = (first..mag.len() - 1)
        .max_by(|&a, &b| mag[a].total_cmp(&mag[b]))
        .ok_or_else(|| Error::InsufficientData("too few samples for a spectrum".into()))?;
    let (l, c, r) = (mag[k - 1], mag[k], mag[k + 1]);
    let denom = l - 2.0 * c + r;
    let shift = if denom.abs() > 0.0 {
        (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Ok((k as f64 + shift) / (n_pad as f64 * dx) * 1e3)
}

/// Dominant oscillation frequency (GHz) of a sampled trace.
pub fn dominant_frequency(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 4 {
        return Err(Error::InsufficientData("need at least 4 samples".into()));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let (slope, intercept) = linear_trend(&xs, &ys);
    let resid: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - slope * x - intercept)
        .collect();
    spectral_peak(&xs, &resid)
}

/// `y ≈ amplitude·cos(2π·freq·x + phase) + offset` at a fixed frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidFit {
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
}

/// Linear least-squares sinusoid at a known frequency (GHz, x in ps).
pub fn fit_sinusoid(samples: &[(f64, f64)], freq: f64) -> SinusoidFit {
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let w = 2.0 * PI * freq * 1e-3;
    let c = move |x: f64| (w * x).cos();
    let s = move |x: f64| (w * x).sin();
    let one = |_: f64| 1.0;
    let (coef, _) = linear_fit(&xs, &ys, &[&c, &s, &one]);
    SinusoidFit {
        amplitude: coef[0].hypot(coef[1]),
        phase: (-coef[1]).atan2(coef[0]),
        offset: coef[2],
    }
}

/// Phase difference in [0, π] between two traces sampled on the same axis,
/// both fitted at the dominant frequency of `a`.
pub fn phase_difference(a: &[(f64, f64)], b: &[(f64, f64)]) -> Result<f64> {
    let freq = dominant_frequency(a)?;
    let pa = fit_sinusoid(a, freq).phase;
    let pb = fit_sinusoid(b, freq).phase;
    let d = (pa - pb).rem_euclid(2.0 * PI);
    Ok(if d > PI { 2.0 * PI - d } else { d })
}

/// Largest flip probability in a `(W_I, probability)` trace; zero when empty.
pub fn leakage_amplitude(trace: &[(f64, f64)]) -> f64 {
    trace.iter().fold(0.0, |m, &(_, p)| m.max(p))
}

/// The four CNOT process fidelities and their minimum.
///
/// Inputs in order |00⟩, |10⟩, |01⟩, |11⟩.
pub fn process_fidelity(f_u: f64, f_l: f64, a_k_prime: f64) -> ([f64; 4], f64) {
    let a = a_k_prime;
    let per = [
        f_u,
        f_u * f_u + (1.0 - f_u) * (1.0 - f_u),
        (1.0 - a) * f_l,
        (1.0 - a) * f_u * f_l + a * (1.0 - f_u) * f_l,
    ];
    let min = per.iter().copied().fold(f64::INFINITY, f64::min);
    (per, min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityReport {
    pub a_k: f64,
    /// Process-independent fidelity, `1 − a_k`.
    pub f: f64,
    pub a_k_prime: f64,
    pub f_u: f64,
    pub f_l: f64,
    /// Process-dependent fidelity, the minimum of `per_process`.
    pub f_prime: f64,
    pub per_process: [f64; 4],
}

impl FidelityReport {
    pub fn new(a_k: f64, a_k_prime: f64, f_u: f64, f_l: f64) -> Self {
        let (per_process, f_prime) = process_fidelity(f_u, f_l, a_k_prime);
        Self {
            a_k,
            f: 1.0 - a_k,
            a_k_prime,
            f_u,
            f_l,
            f_prime,
            per_process,
        }
    }
}

/// Width of a single nπ rectangle on `channel` for an ideal two-level flip, ps.
pub fn nominal_n_pi_width(params: &QubitPairParams, channel: Channel, n_pi: u32) -> f64 {
    let delta = match channel {
        Channel::Upper => params.delta_u,
        Channel::Lower => params.delta_l,
    };
    n_pi as f64 * PLANCK_H / (2.0 * delta)
}

/// Maximizes `f` on `[lo, hi]`: a parallel grid scan at `step`, then
/// golden-section refinement around the best grid point down to 0.01.
pub fn locate_maximum<F>(f: F, lo: f64, hi: f64, step: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    check(lo.is_finite() && hi > lo, "range", "need lo < hi")?;
    check(step > 0.0, "step", "must be > 0")?;
    let n = ((hi - lo) / step).ceil() as usize;
    let xs: Vec<f64> = (0..=n).map(|i| (lo + i as f64 * step).min(hi)).collect();
    let vals = xs.par_iter().map(|&x| f(x)).collect::<Result<Vec<f64>>>()?;
    let k = (0..vals.len())
        .max_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(b.cmp(&a)))
        .unwrap();

    let (mut a, mut b) = (xs[k.saturating_sub(1)], xs[(k + 1).min(xs.len() - 1)]);
    let (mut best_x, mut best_v) = (xs[k], vals[k]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > 0.01 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best_v {
            best_x = x;
            best_v = v;
        }
    }
    Ok((best_x, best_v))
}

/// A located single-qubit nπ pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipFidelity {
    pub channel: Channel,
    pub n_pi: u32,
    /// Pulse width maximizing the flip, ps.
    pub width: f64,
    pub f: f64,
}

/// Flip probability of one qubit after a rectangle of width `w` on its
/// channel, the other qubit idle at its baseline.
pub fn single_flip_probability(
    params: &QubitPairParams,
    dec: &DecoherenceParams,
    channel: Channel,
    w: f64,
    settings: &PulseSettings,
    cfg: &IntegrationConfig,
) -> Result<f64> {
    let s = ScheduleBuilder::new(params, *settings).single(channel, w)?;
    Ok(flip_of(
        channel,
        &run_to_probabilities(&s, params, dec, cfg)?,
    ))
}

fn flip_of(channel: Channel, p: &ProbabilityPair) -> f64 {
    match channel {
        Channel::Upper => 1.0 - p.p_u0,
        Channel::Lower => 1.0 - p.p_l0,
    }
}

/// Flip fidelity of a single-qubit nπ pulse, its width located by scanning
/// within a quarter Rabi period of the nominal value.
pub fn pulse_flip_fidelity_with(
    params: &QubitPairParams,
    dec: &DecoherenceParams,
    channel: Channel,
    n_pi: u32,
    settings: &PulseSettings,
    cfg: &IntegrationConfig,
) -> Result<FlipFidelity> {
    check(n_pi % 2 == 1, "n_pi", "must be odd")?;
    let pi_w = nominal_n_pi_width(params, channel, 1);
    let centre = n_pi as f64 * pi_w + settings.rect_rise.max(settings.rect_fall) * 0.5;
    let lo = (centre - 0.5 * pi_w).max(0.0);
    let hi = centre + 0.5 * pi_w;
    let (width, f) = if settings.rect_fall == 0.0 {
        // One sampled trajectory covers the window at 0.1 ps resolution.
        let n = ((hi - lo) / 0.1).ceil() as usize;
        let widths: Vec<f64> = (0..=n).map(|i| lo + i as f64 * 0.1).collect();
        let builder = ScheduleBuilder::new(params, *settings);
        let pops =
            sweep_last_pulse_width(|w| builder.single(channel, w), &widths, params, dec, cfg)?;
        let flips: Vec<f64> = pops
            .iter()
            .map(|p| flip_of(channel, &ProbabilityPair::from_populations(p)))
            .collect();
        let k = (0..flips.len())
            .max_by(|&a, &b| flips[a].total_cmp(&flips[b]).then(b.cmp(&a)))
            .unwrap();
        (widths[k], flips[k])
    } else {
        let flip = |w: f64| single_flip_probability(params, dec, channel, w, settings, cfg);
        locate_maximum(flip, lo, hi, 2.0)?
    };
    Ok(FlipFidelity {
        channel,
        n_pi,
        width,
        f,
    })
}

/// [`pulse_flip_fidelity_with`] at default pulse settings and integration.
pub fn pulse_flip_fidelity(
    params: &QubitPairParams,
    dec: &DecoherenceParams,
    channel: Channel,
    n_pi: u32,
) -> Result<f64> {
    pulse_flip_fidelity_with(
        params,
        dec,
        channel,
        n_pi,
        &PulseSettings::default(),
        &IntegrationConfig::default(),
    )
    .map(|r| r.f)
}

/// Minimum over inputs of the probability of the correct CNOT output.
pub fn cnot_success_min(d: &TomographyMatrix) -> f64 {
    InputLabel::ALL
        .iter()
        .map(|&l| d.d[l.row()][l.cnot().row()])
        .fold(f64::INFINITY, f64::min)
}

/// Large-J two-pulse probabilities: `P_U⁰ = 1 − sin²α cos²β`, `P_L⁰ = cos²β`.
pub fn analytic_two_pulse(alpha: f64, beta: f64) -> ProbabilityPair {
    let c2b = beta.cos().powi(2);
    ProbabilityPair {
        p_u0: 1.0 - alpha.sin().powi(2) * c2b,
        p_l0: c2b,
    }
}

/// LZS-controlled rotation: `P_U⁰ = 1 − U² sin²α`, `P_L⁰ = U²`.
pub fn analytic_lzs(u_squared: f64, alpha: f64) -> ProbabilityPair {
    analytic_lzs_general(u_squared, alpha.sin().powi(2))
}

/// Both qubits driven by LZS pulses: `P_U⁰ = 1 − V² U²`, `P_L⁰ = U²`.
pub fn analytic_lzs_general(u_squared: f64, v_squared: f64) -> ProbabilityPair {
    ProbabilityPair {
        p_u0: 1.0 - v_squared * u_squared,
        p_l0: u_squared,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const REFERENCE_FIT: RabiFit = RabiFit {
        a0: 0.50,
        t2_star: 1200.0,
        freq: 6.2,
        b0: 0.03 * PI,
        a1: 0.0,
        a2: 0.50,
        residual_rms: 0.0,
        iterations: 0,
        frequency_constrained: true,
    };

    fn synth(truth: &RabiFit, n: usize, dw: f64) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| i as f64 * dw)
            .map(|w| (w, truth.evaluate(w)))
            .collect()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn recovers_reference_parameters() {
        let fit = fit_rabi(&synth(&REFERENCE_FIT, 501, 4.0), None).unwrap();
        assert!(rel(fit.freq, 6.2) < 0.005, "{fit:?}");
        assert!(rel(fit.t2_star, 1200.0) < 0.02, "{fit:?}");
        assert!(rel(fit.a0, 0.5) < 0.02);
        assert!(rel(fit.a2, 0.5) < 0.02);
        assert!((fit.b0 - 0.03 * PI).abs() < 1e-6);
        assert!(fit.residual_rms < 1e-8);
        assert!(fit.frequency_constrained);
    }

    #[test]
    fn recovers_noisy_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let data: Vec<_> = synth(&REFERENCE_FIT, 501, 4.0)
            .into_iter()
            .map(|(w, p)| (w, p + rng.gen_range(-0.02..0.02)))
            .collect();
        let fit = fit_rabi(&data, None).unwrap();
        assert!(rel(fit.freq, 6.2) < 0.05);
        assert!(rel(fit.t2_star, 1200.0) < 0.05);
        assert!(rel(fit.a0, 0.5) < 0.05);
        assert!(rel(fit.a2, 0.5) < 0.05);
        assert!(rel(fit.b0, 0.03 * PI) < 0.05, "{fit:?}");
        assert!(fit.a1.abs() < 0.05 * 0.5 / 2000.0);
        assert!(fit.residual_rms <= 0.015);
    }

    #[test]
    fn constant_samples_are_degenerate_not_divergent() {
        let data: Vec<_> = (0..100).map(|i| (i as f64 * 4.0, 0.5)).collect();
        let fit = fit_rabi(&data, None).unwrap();
        assert!(fit.a0.abs() < 1e-9);
        assert_abs_diff_eq!(fit.a2, 0.5, epsilon = 1e-9);
        assert!(!fit.frequency_constrained);
        assert!(fit.t2_star > 0.0 && fit.freq > 0.0);
    }

    #[test]
    fn fit_errors() {
        let few: Vec<_> = (0..10).map(|i| (i as f64, 0.5)).collect();
        assert!(matches!(
            fit_rabi(&few, None),
            Err(Error::InsufficientData(_))
        ));
        // Under one period of a 6.2 GHz oscillation.
        let short = synth(&REFERENCE_FIT, 40, 2.0);
        assert!(matches!(
            fit_rabi(&short, None),
            Err(Error::InsufficientData(_))
        ));
        let unsorted: Vec<_> = (0..30).map(|i| ((30 - i) as f64, 0.1)).collect();
        assert!(matches!(
            fit_rabi(&unsorted, None),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn explicit_initial_guess_is_used() {
        let truth = RabiFit {
            freq: 5.0,
            t2_star: 900.0,
            ..REFERENCE_FIT
        };
        let guess = RabiFit {
            freq: 5.05,
            t2_star: 1000.0,
            ..REFERENCE_FIT
        };
        let fit = fit_rabi(&synth(&truth, 400, 4.0), Some(&guess)).unwrap();
        assert!(rel(fit.freq, 5.0) < 1e-6);
        assert!(rel(fit.t2_star, 900.0) < 1e-6);
    }

    #[test]
    fn scale_consistency() {
        let base = fit_rabi(&synth(&REFERENCE_FIT, 501, 4.0), None).unwrap();
        for c in [0.3, 0.8, 1.7] {
            let data: Vec<_> = synth(&REFERENCE_FIT, 501, 4.0)
                .into_iter()
                .map(|(w, p)| (w, c * p))
                .collect();
            let fit = fit_rabi(&data, None).unwrap();
            assert!(rel(fit.a0, c * base.a0) < 1e-4);
            assert!(rel(fit.a2, c * base.a2) < 1e-4);
            assert!(rel(fit.freq, base.freq) < 1e-6);
            assert!(rel(fit.t2_star, base.t2_star) < 1e-4);
            assert!((fit.b0 - base.b0).abs() < 1e-5);
        }
    }

    #[test]
    fn key_value_block() {
        let kv = REFERENCE_FIT.to_key_values();
        assert!(kv.contains("freq_ghz = 6.2\n"));
        assert!(kv.contains("t2_star_ps = 1200\n"));
        assert_eq!(kv.lines().count(), RabiFit::CSV_HEADER.len());
    }

    #[test]
    fn sinusoid_phase_tools() {
        let a: Vec<_> = (0..200)
            .map(|i| i as f64 * 4.0)
            .map(|x| (x, (0.006 * 2.0 * PI * x).cos()))
            .collect();
        let b: Vec<_> = a.iter().map(|&(x, y)| (x, 1.0 - y)).collect();
        assert!((dominant_frequency(&a).unwrap() - 6.0).abs() < 0.01);
        assert!((phase_difference(&a, &b).unwrap() - PI).abs() < 1e-9);
        assert!(phase_difference(&a, &a).unwrap() < 1e-9);
    }

    #[test]
    fn leakage_examples() {
        assert_eq!(leakage_amplitude(&[(0.0, 0.0), (4.0, 0.0)]), 0.0);
        assert_eq!(leakage_amplitude(&[]), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let trace: Vec<_> = (0..50).map(|i| (i as f64, rng.gen::<f64>())).collect();
            let mut brute = trace[0].1;
            for &(_, p) in &trace {
                if p > brute {
                    brute = p;
                }
            }
            assert_eq!(leakage_amplitude(&trace), brute);
        }
    }

    #[test]
    fn process_fidelity_examples() {
        assert_eq!(process_fidelity(1.0, 1.0, 0.0), ([1.0; 4], 1.0));
        let (per, f) = process_fidelity(0.5, 1.0, 0.0);
        assert_eq!(per, [0.5, 0.5, 1.0, 0.5]);
        assert_eq!(f, 0.5);
        let r = FidelityReport::new(0.03, 0.01, 0.95, 0.95);
        assert_eq!(r.f, 1.0 - r.a_k);
        assert_eq!(r.f_prime, r.per_process.iter().copied().fold(1.0, f64::min));
    }

    #[test]
    fn process_fidelity_monotone_on_grid() {
        let g: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        for &fu in &g {
            for &fl in &g {
                for &a in &g {
                    let base = process_fidelity(fu, fl, a).1;
                    if fu < 1.0 {
                        // f_U² + (1 − f_U)² dips below ½ only when f_U < ½, so
                        // monotonicity in f_U holds on the operating branch.
                        if fu >= 0.5 {
                            assert!(process_fidelity(fu + 0.1, fl, a).1 >= base - 1e-12);
                        }
                    }
                    if fl < 1.0 {
                        assert!(process_fidelity(fu, fl + 0.1, a).1 >= base - 1e-12);
                    }
                    if a < 1.0 && fu >= 0.5 {
                        assert!(process_fidelity(fu, fl, a + 0.1).1 <= base + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn analytic_examples() {
        let p = analytic_two_pulse(0.0, 0.0);
        assert_eq!((p.p_u0, p.p_l0), (1.0, 1.0));
        let p = analytic_two_pulse(PI / 2.0, 0.0);
        assert_abs_diff_eq!(p.p_u0, 0.0, epsilon = 1e-15);
        assert_eq!(p.p_l0, 1.0);
        let p = analytic_two_pulse(PI / 2.0, PI / 2.0);
        assert_abs_diff_eq!(p.p_u0, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.p_l0, 0.0, epsilon = 1e-15);

        let a = 0.7;
        let p = analytic_lzs(1.0, a);
        assert_abs_diff_eq!(p.p_u0, 1.0 - a.sin().powi(2), epsilon = 1e-15);
        assert_eq!(p.p_l0, 1.0);
        let p = analytic_lzs(0.0, a);
        assert_eq!((p.p_u0, p.p_l0), (1.0, 0.0));
        let p = analytic_lzs(0.5, PI / 2.0);
        assert_abs_diff_eq!(p.p_u0, 0.5, epsilon = 1e-15);
        assert_eq!(p.p_l0, 0.5);
    }

    #[test]
    fn cnot_success_examples() {
        let measured = TomographyMatrix {
            d: [
                [0.09, 0.89, 0.002, 0.02],
                [0.87, 0.12, 0.01, 0.002],
                [0.06, 0.02, 0.74, 0.18],
                [0.02, 0.07, 0.23, 0.68],
            ],
        };
        assert_eq!(cnot_success_min(&measured), 0.68);
        let predicted = TomographyMatrix {
            d: [
                [0.05, 0.95, 0.0, 0.0],
                [0.90, 0.10, 0.0, 0.0],
                [0.003, 0.05, 0.94, 0.007],
                [0.005, 0.05, 0.06, 0.89],
            ],
        };
        assert_eq!(cnot_success_min(&predicted), 0.89);
        assert_eq!(cnot_success_min(&TomographyMatrix::ideal_cnot()), 1.0);
    }

    #[test]
    fn locate_maximum_finds_parabola_peak() {
        let (x, v) =
            locate_maximum(|x| Ok(-(x - 3.21) * (x - 3.21) + 2.0), 0.0, 10.0, 0.5).unwrap();
        assert!((x - 3.21).abs() < 0.01);
        assert!((v - 2.0).abs() < 1e-4);
        assert!(locate_maximum(Ok, 1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn flip_fidelity_rejects_even_n() {
        let p = QubitPairParams::device();
        assert!(pulse_flip_fidelity(&p, &DecoherenceParams::NONE, Channel::Upper, 2).is_err());
    }

    /// Swaps inputs 00↔10 and outputs 00↔10 together; this relabeling maps
    /// the CNOT truth table onto itself.
    fn relabel(d: &TomographyMatrix, perm: [usize; 4]) -> TomographyMatrix {
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[perm[i]][perm[j]] = d.d[i][j];
            }
        }
        TomographyMatrix { d: out }
    }

    proptest! {
        #[test]
        fn cnot_success_permutation_covariant(entries in prop::array::uniform16(0.0f64..1.0)) {
            let mut d = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    d[i][j] = entries[4 * i + j];
                }
            }
            let d = TomographyMatrix { d };
            // Permutations of rows (00,10,01,11) commuting with the CNOT map.
            for perm in [[1, 0, 2, 3], [0, 1, 3, 2], [1, 0, 3, 2]] {
                prop_assert_eq!(cnot_success_min(&d), cnot_success_min(&relabel(&d, perm)));
            }
        }

        #[test]
        fn analytic_outputs_are_probabilities(a in -10.0f64..10.0, b in -10.0f64..10.0, u in 0.0f64..1.0) {
            for p in [analytic_two_pulse(a, b), analytic_lzs(u, a)] {
                prop_assert!((0.0..=1.0 + 1e-15).contains(&p.p_u0));
                prop_assert!((0.0..=1.0).contains(&p.p_l0));
            }
        }

        #[test]
        fn process_fidelity_bounded(fu in 0.0f64..1.0, fl in 0.0f64..1.0, a in 0.0f64..1.0) {
            let (per, f) = process_fidelity(fu, fl, a);
            for v in per {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert_eq!(f, per.iter().copied().fold(f64::INFINITY, f64::min));
        }
    }
}
