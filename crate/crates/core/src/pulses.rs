//! Gate-voltage pulses as piecewise-linear detuning waveforms.
//!
//! A pulse has a total base duration `width` that includes its linear rise
//! and fall edges. When `width ≤ rise + fall` there is no plateau and the
//! pulse degenerates into a triangle peaking at `width / (rise + fall)`.
//!
//! Upper-channel pulse starts are "programmed" generator times; the line
//! delay `sync_offset` is added to them to get the time at the sample. Lower
//! channel pulses arrive as programmed.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{check, Error, Result};
use crate::model::QubitPairParams;
use crate::output::fmt_sig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub channel: Channel,
    /// Programmed start, ps.
    pub start: f64,
    /// Total base duration including edges, ps.
    pub width: f64,
    /// Detuning shift at full envelope, μeV. Positive pushes toward the balance point.
    pub amplitude: f64,
    pub rise: f64,
    pub fall: f64,
}

impl Pulse {
    pub fn validate(&self) -> Result<()> {
        check(self.start.is_finite(), "start", "must be finite")?;
        check(
            self.width >= 0.0 && self.width.is_finite(),
            "width",
            "must be >= 0",
        )?;
        check(
            self.rise >= 0.0 && self.rise.is_finite(),
            "rise",
            "must be >= 0",
        )?;
        check(
            self.fall >= 0.0 && self.fall.is_finite(),
            "fall",
            "must be >= 0",
        )?;
        check(self.amplitude.is_finite(), "amplitude", "must be finite")?;
        Ok(())
    }

    /// Whether the envelope reaches 1 and holds it for a finite time.
    pub fn has_plateau(&self) -> bool {
        self.width > self.rise + self.fall
    }

    /// Envelope maximum: 1 with a plateau, `width / (rise + fall)` otherwise.
    pub fn peak_fraction(&self) -> f64 {
        if self.width <= 0.0 {
            0.0
        } else if self.has_plateau() {
            1.0
        } else {
            self.width / (self.rise + self.fall)
        }
    }

    /// Kinks of the envelope, relative to the pulse start.
    fn corners(&self) -> Vec<f64> {
        if self.width <= 0.0 {
            return Vec::new();
        }
        let mut c = vec![0.0, self.width];
        if self.has_plateau() {
            c.push(self.rise);
            c.push(self.width - self.fall);
        } else {
            c.push(self.width * self.rise / (self.rise + self.fall));
        }
        c
    }
}

/// Fraction of full amplitude at time `t`, measured from `p.start`.
pub fn pulse_envelope(p: &Pulse, t: f64) -> f64 {
    let tau = t - p.start;
    if p.width <= 0.0 || tau < 0.0 || tau > p.width {
        return 0.0;
    }
    let mut v: f64 = 1.0;
    if p.rise > 0.0 {
        v = v.min(tau / p.rise);
    }
    if p.fall > 0.0 {
        v = v.min((p.width - tau) / p.fall);
    }
    v.clamp(0.0, 1.0)
}

/// Gate lever arms, μeV/mV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeverArm {
    pub barrier: f64,
    pub plunger: f64,
}

impl Default for LeverArm {
    fn default() -> Self {
        Self {
            barrier: 100.0,
            plunger: 30.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    Barrier,
    Plunger,
}

pub fn mv_to_detuning(voltage_mv: f64, arm: &LeverArm, gate: GateKind) -> f64 {
    match gate {
        GateKind::Barrier => voltage_mv * arm.barrier,
        GateKind::Plunger => voltage_mv * arm.plunger,
    }
}

/// A detuning waveform on both channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub eps_u0: f64,
    pub eps_l0: f64,
    pub pulses: Vec<Pulse>,
    pub total_duration: f64,
    /// Line delay added to every upper-channel pulse, ps.
    pub sync_offset: f64,
}

/// Interval on which both detunings are linear in time.
///
/// Endpoint values are one-sided limits from inside the interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub eps_start: (f64, f64),
    pub eps_end: (f64, f64),
}

impl Segment {
    pub fn eps_at(&self, t: f64) -> (f64, f64) {
        let len = self.t1 - self.t0;
        if len <= 0.0 {
            return self.eps_start;
        }
        let s = (t - self.t0) / len;
        (
            self.eps_start.0 + s * (self.eps_end.0 - self.eps_start.0),
            self.eps_start.1 + s * (self.eps_end.1 - self.eps_start.1),
        )
    }
}

impl Schedule {
    pub fn new(
        eps_u0: f64,
        eps_l0: f64,
        pulses: Vec<Pulse>,
        total_duration: f64,
        sync_offset: f64,
    ) -> Result<Self> {
        let s = Self {
            eps_u0,
            eps_l0,
            pulses,
            total_duration,
            sync_offset,
        };
        s.validate()?;
        Ok(s)
    }

    /// Baselines only.
    pub fn idle(eps_u0: f64, eps_l0: f64, total_duration: f64) -> Result<Self> {
        Self::new(eps_u0, eps_l0, Vec::new(), total_duration, 0.0)
    }

    /// Builds a schedule whose duration ends with the last pulse.
    pub fn tight(eps_u0: f64, eps_l0: f64, pulses: Vec<Pulse>, sync_offset: f64) -> Result<Self> {
        let mut s = Self {
            eps_u0,
            eps_l0,
            pulses,
            total_duration: 0.0,
            sync_offset,
        };
        s.total_duration = s.last_end();
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check(self.eps_u0.is_finite(), "eps_u0", "must be finite")?;
        check(self.eps_l0.is_finite(), "eps_l0", "must be finite")?;
        check(
            self.sync_offset.is_finite(),
            "sync_offset",
            "must be finite",
        )?;
        check(
            self.total_duration >= 0.0 && self.total_duration.is_finite(),
            "total_duration",
            "must be >= 0",
        )?;
        for p in &self.pulses {
            p.validate()?;
            if p.width > 0.0 && self.effective_start(p) < 0.0 {
                return Err(Error::InvalidSchedule(format!(
                    "{:?} pulse arrives at {} ps, before t = 0",
                    p.channel,
                    self.effective_start(p)
                )));
            }
        }
        if self.total_duration < self.last_end() - 1e-9 {
            return Err(Error::InvalidSchedule(format!(
                "total duration {} ps ends before the last pulse ({} ps)",
                self.total_duration,
                self.last_end()
            )));
        }
        for ch in [Channel::Upper, Channel::Lower] {
            let mut spans: Vec<(f64, f64)> = self
                .pulses
                .iter()
                .filter(|p| p.channel == ch && p.width > 0.0)
                .map(|p| {
                    let s = self.effective_start(p);
                    (s, s + p.width)
                })
                .collect();
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in spans.windows(2) {
                if w[1].0 < w[0].1 - 1e-9 {
                    return Err(Error::InvalidSchedule(format!(
                        "{ch:?} pulses overlap: [{}, {}] and [{}, {}]",
                        w[0].0, w[0].1, w[1].0, w[1].1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Start of a pulse at the sample.
    pub fn effective_start(&self, p: &Pulse) -> f64 {
        match p.channel {
            Channel::Upper => p.start + self.sync_offset,
            Channel::Lower => p.start,
        }
    }

    /// End of the last pulse at the sample (0 if none). Zero-width pulses
    /// count, so that a sweep is continuous as a width goes to zero.
    pub fn last_end(&self) -> f64 {
        self.pulses
            .iter()
            .map(|p| self.effective_start(p) + p.width)
            .fold(0.0, f64::max)
    }

    pub fn evaluate(&self, t: f64) -> Result<(f64, f64)> {
        if !(0.0..=self.total_duration).contains(&t) {
            return Err(Error::OutOfRange {
                t,
                total: self.total_duration,
            });
        }
        Ok(self.evaluate_unchecked(t))
    }

    /// Detunings at `t` without the range check.
    pub fn evaluate_unchecked(&self, t: f64) -> (f64, f64) {
        let mut eu = self.eps_u0;
        let mut el = self.eps_l0;
        for p in &self.pulses {
            let shift = match p.channel {
                Channel::Upper => self.sync_offset,
                Channel::Lower => 0.0,
            };
            let v = p.amplitude * pulse_envelope(p, t - shift);
            match p.channel {
                Channel::Upper => eu += v,
                Channel::Lower => el += v,
            }
        }
        (eu, el)
    }

    /// Sorted, deduplicated kink times within `[0, total_duration]`,
    /// including both ends.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![0.0, self.total_duration];
        for p in &self.pulses {
            let s = self.effective_start(p);
            pts.extend(
                p.corners()
                    .into_iter()
                    .map(|c| s + c)
                    .filter(|&t| t > 0.0 && t < self.total_duration),
            );
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        pts
    }

    /// Decomposes the waveform into linear pieces.
    pub fn segments(&self) -> Vec<Segment> {
        self.breakpoints()
            .windows(2)
            .map(|w| {
                let (t0, t1) = (w[0], w[1]);
                let len = t1 - t0;
                // Two interior samples pin the line exactly, even when the
                // envelope jumps at an endpoint.
                let a = self.evaluate_unchecked(t0 + 0.25 * len);
                let b = self.evaluate_unchecked(t0 + 0.75 * len);
                let extrap = |x: f64, y: f64, s: f64| x + (s - 0.25) * 2.0 * (y - x);
                Segment {
                    t0,
                    t1,
                    eps_start: (extrap(a.0, b.0, 0.0), extrap(a.1, b.1, 0.0)),
                    eps_end: (extrap(a.0, b.0, 1.0), extrap(a.1, b.1, 1.0)),
                }
            })
            .collect()
    }

    /// Waveform sampled every `step` ps as CSV `t_ps,eps_u_uev,eps_l_uev`.
    pub fn waveform_csv(&self, step: f64) -> String {
        let mut out = String::from("t_ps,eps_u_uev,eps_l_uev\n");
        let n = if step > 0.0 {
            (self.total_duration / step).floor() as usize
        } else {
            0
        };
        let mut times: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
        if times.last().copied() != Some(self.total_duration) {
            times.push(self.total_duration);
        }
        for t in times {
            let (eu, el) = self.evaluate_unchecked(t);
            let _ = writeln!(out, "{},{},{}", fmt_sig(t), fmt_sig(eu), fmt_sig(el));
        }
        out
    }
}

/// Tomography input state, written upper-qubit bit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InputLabel {
    S00,
    S10,
    S01,
    S11,
}

impl InputLabel {
    /// Row order of tomography matrices.
    pub const ALL: [InputLabel; 4] = [
        InputLabel::S00,
        InputLabel::S10,
        InputLabel::S01,
        InputLabel::S11,
    ];

    /// Charge-basis index `2u + l`.
    pub fn basis_index(self) -> usize {
        match self {
            InputLabel::S00 => 0,
            InputLabel::S01 => 1,
            InputLabel::S10 => 2,
            InputLabel::S11 => 3,
        }
    }

    /// Position in [`InputLabel::ALL`].
    pub fn row(self) -> usize {
        match self {
            InputLabel::S00 => 0,
            InputLabel::S10 => 1,
            InputLabel::S01 => 2,
            InputLabel::S11 => 3,
        }
    }

    /// Ideal CNOT output: flip the upper qubit iff the lower one is |0⟩.
    pub fn cnot(self) -> InputLabel {
        match self {
            InputLabel::S00 => InputLabel::S10,
            InputLabel::S10 => InputLabel::S00,
            other => other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InputLabel::S00 => "00",
            InputLabel::S10 => "10",
            InputLabel::S01 => "01",
            InputLabel::S11 => "11",
        }
    }
}

impl FromStr for InputLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "00" => Ok(InputLabel::S00),
            "10" => Ok(InputLabel::S10),
            "01" => Ok(InputLabel::S01),
            "11" => Ok(InputLabel::S11),
            other => Err(Error::InvalidLabel(other.to_string())),
        }
    }
}

impl std::fmt::Display for InputLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pulse timing knobs shared by the schedule builders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSettings {
    /// Edges of short (LZS) pulses, ps.
    pub rise: f64,
    pub fall: f64,
    /// Edges of the rectangular control pulses (Rabi, CNOT, state prep), ps.
    pub rect_rise: f64,
    pub rect_fall: f64,
    /// Gap between consecutive pulses at the sample, ps.
    pub gap: f64,
    /// Line delay of the upper channel, ps.
    pub sync_offset: f64,
    /// Width of the short LZS pulses, ps.
    pub lzs_width: f64,
}

impl Default for PulseSettings {
    fn default() -> Self {
        Self {
            rise: 65.0,
            fall: 65.0,
            rect_rise: 0.0,
            rect_fall: 0.0,
            gap: 100.0,
            sync_offset: 200.0,
            lzs_width: 100.0,
        }
    }
}

/// Widths of the 3π preparation pulses used by tomography, ps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrepWidths {
    pub upper: f64,
    pub lower: f64,
}

impl PrepWidths {
    /// Generator widths quoted for the device: 360 ps upper, 390 ps lower.
    pub const DEVICE: PrepWidths = PrepWidths {
        upper: 360.0,
        lower: 390.0,
    };
}

/// Builds the pulse sequences of each experiment from the qubit baselines.
///
/// Builders place pulses by their arrival time at the sample and pre-compensate
/// the upper-channel line delay, so the first pulse always arrives at t = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleBuilder {
    pub eps_u0: f64,
    pub eps_l0: f64,
    pub j_coupling: f64,
    pub settings: PulseSettings,
}

impl ScheduleBuilder {
    pub fn new(params: &QubitPairParams, settings: PulseSettings) -> Self {
        Self {
            eps_u0: params.eps_u0,
            eps_l0: params.eps_l0,
            j_coupling: params.j_coupling,
            settings,
        }
    }

    pub fn with_baselines(mut self, eps_u0: f64, eps_l0: f64) -> Self {
        self.eps_u0 = eps_u0;
        self.eps_l0 = eps_l0;
        self
    }

    fn rect(&self, channel: Channel, arrival: f64, width: f64, amplitude: f64) -> Pulse {
        self.pulse(
            channel,
            arrival,
            width,
            amplitude,
            self.settings.rect_rise,
            self.settings.rect_fall,
        )
    }

    fn short(&self, channel: Channel, arrival: f64, amplitude: f64) -> Pulse {
        self.pulse(
            channel,
            arrival,
            self.settings.lzs_width,
            amplitude,
            self.settings.rise,
            self.settings.fall,
        )
    }

    fn pulse(
        &self,
        channel: Channel,
        arrival: f64,
        width: f64,
        amplitude: f64,
        rise: f64,
        fall: f64,
    ) -> Pulse {
        let start = match channel {
            Channel::Upper => arrival - self.settings.sync_offset,
            Channel::Lower => arrival,
        };
        Pulse {
            channel,
            start,
            width: width.max(0.0),
            amplitude,
            rise,
            fall,
        }
    }

    fn finish(&self, pulses: Vec<Pulse>) -> Result<Schedule> {
        Schedule::tight(self.eps_u0, self.eps_l0, pulses, self.settings.sync_offset)
    }

    fn check_width(name: &'static str, w: f64) -> Result<()> {
        check(w >= 0.0 && w.is_finite(), name, "must be >= 0")
    }

    /// Upper rectangle driving the upper qubit to its balance point.
    pub fn rabi(&self, w1: f64) -> Result<Schedule> {
        Self::check_width("w1", w1)?;
        self.finish(vec![self.rect(Channel::Upper, 0.0, w1, -self.eps_u0)])
    }

    /// Rectangle of width `w` on one channel driving that qubit to balance.
    pub fn single(&self, channel: Channel, w: f64) -> Result<Schedule> {
        Self::check_width("width", w)?;
        let amp = match channel {
            Channel::Upper => -self.eps_u0,
            Channel::Lower => -self.eps_l0,
        };
        self.finish(vec![self.rect(channel, 0.0, w, amp)])
    }

    /// Lower rectangle `w2`, then after the gap an upper rectangle `w1`.
    pub fn two_pulse(&self, w1: f64, w2: f64) -> Result<Schedule> {
        Self::check_width("w1", w1)?;
        Self::check_width("w2", w2)?;
        let lower = self.rect(Channel::Lower, 0.0, w2, -self.eps_l0);
        let upper = self.rect(Channel::Upper, w2 + self.settings.gap, w1, -self.eps_u0);
        self.finish(vec![lower, upper])
    }

    /// State preparation for `label` followed by the CNOT pulse of width `w_i`.
    ///
    /// |11⟩ is prepared with the upper pulse elevated by J, since the lower
    /// qubit is already in |1⟩ when it fires.
    pub fn tomography(&self, label: InputLabel, w_i: f64, prep: PrepWidths) -> Result<Schedule> {
        Self::check_width("w_i", w_i)?;
        Self::check_width("prep_upper", prep.upper)?;
        Self::check_width("prep_lower", prep.lower)?;
        let gap = self.settings.gap;
        let to_balance = -self.eps_u0;
        let mut pulses = Vec::new();
        let mut t = 0.0;
        match label {
            InputLabel::S00 => {}
            InputLabel::S10 => {
                pulses.push(self.rect(Channel::Upper, t, prep.upper, to_balance));
                t += prep.upper + gap;
            }
            InputLabel::S01 => {
                pulses.push(self.rect(Channel::Lower, t, prep.lower, -self.eps_l0));
                t += prep.lower + gap;
            }
            InputLabel::S11 => {
                pulses.push(self.rect(Channel::Lower, t, prep.lower, -self.eps_l0));
                t += prep.lower + gap;
                pulses.push(self.rect(Channel::Upper, t, prep.upper, to_balance + self.j_coupling));
                t += prep.upper + gap;
            }
        }
        pulses.push(self.rect(Channel::Upper, t, w_i, to_balance));
        self.finish(pulses)
    }

    /// Short (triangular) lower pulse of amplitude `a2`, then the upper
    /// rectangle `w1` after the gap.
    pub fn lzs(&self, a2: f64, w1: f64) -> Result<Schedule> {
        Self::check_width("w1", w1)?;
        check(a2.is_finite(), "a2", "must be finite")?;
        let lower = self.short(Channel::Lower, 0.0, a2);
        let upper = self.rect(
            Channel::Upper,
            self.settings.lzs_width + self.settings.gap,
            w1,
            -self.eps_u0,
        );
        self.finish(vec![lower, upper])
    }

    /// Short lower pulse, then a short upper pulse after the gap.
    pub fn controlled_universal(&self, a_u: f64, a_l: f64) -> Result<Schedule> {
        let lower = self.short(Channel::Lower, 0.0, a_l);
        let upper = self.short(
            Channel::Upper,
            self.settings.lzs_width + self.settings.gap,
            a_u,
        );
        self.finish(vec![lower, upper])
    }

    /// Short lower and upper pulses whose programmed separation (from the end
    /// of the lower pulse to the start of the upper one) is `delay`; the
    /// upper pulse then arrives `sync_offset` later than programmed.
    ///
    /// Unlike the other builders, no compensation is applied. The pair is
    /// shifted as a whole so that the earlier arrival is at t = 0.
    pub fn sync(&self, delay: f64, a_u: f64, a_l: f64) -> Result<Schedule> {
        check(delay.is_finite(), "delay", "must be finite")?;
        let s = &self.settings;
        let lower_arrival: f64 = 0.0;
        let upper_arrival = s.lzs_width + delay + s.sync_offset;
        let shift = -lower_arrival.min(upper_arrival);
        let lower = Pulse {
            channel: Channel::Lower,
            start: lower_arrival + shift,
            width: s.lzs_width,
            amplitude: a_l,
            rise: s.rise,
            fall: s.fall,
        };
        let upper = Pulse {
            channel: Channel::Upper,
            start: upper_arrival + shift - s.sync_offset,
            width: s.lzs_width,
            amplitude: a_u,
            rise: s.rise,
            fall: s.fall,
        };
        self.finish(vec![lower, upper])
    }
}
