//! INI-style run configuration.
//!
//! Every key belongs to exactly one section and maps onto one field of
//! [`RunConfig`]. Omitted keys keep their defaults; unknown or repeated keys
//! are rejected. [`RunConfig::serialize`] writes every key, so a serialized
//! config parses back to an equal value.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dynamics::{DecoherenceParams, IntegrationConfig};
use crate::experiments::{Axis, ExperimentSetup, PrepMode};
use crate::model::{ghz_to_uev, QubitPairParams};
use crate::pulses::{InputLabel, PulseSettings};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },
}

impl ConfigError {
    fn invalid(key: &str, message: impl Into<String>) -> Self {
        Self::Validation {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

type ConfigResult<T> = std::result::Result<T, ConfigError>;

/// Inclusive `start..=stop` grid with spacing `step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridRange {
    pub const fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    pub fn axis(&self, name: &str, unit: &str) -> crate::Result<Axis> {
        Axis::range(name, unit, self.start, self.stop, self.step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitsConfig {
    pub delta_u_ghz: f64,
    pub delta_l_ghz: f64,
    pub j_uev: f64,
    pub eps_u0_uev: f64,
    pub eps_l0_uev: f64,
    pub temperature_k: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceConfig {
    /// `None` is written `inf` and disables dephasing.
    pub t2_star_ps: Option<f64>,
    pub gamma1_per_ps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationSection {
    pub dt_ps: f64,
    pub record_stride: usize,
    pub readout_window_ps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulsesConfig {
    pub rise_ps: f64,
    pub fall_ps: f64,
    pub rect_rise_ps: f64,
    pub rect_fall_ps: f64,
    pub gap_ps: f64,
    pub sync_offset_ps: f64,
    pub lzs_width_ps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RabiConfig {
    pub w1: GridRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalRabiConfig {
    pub w1: GridRange,
    pub eps_l: GridRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPulseConfig {
    pub w1: GridRange,
    pub w2: GridRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyConfig {
    pub w: GridRange,
    /// `scan` or `device`.
    pub prep: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityConfig {
    pub j_uev: Vec<f64>,
    pub w_max_ps: f64,
    pub w_step_ps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LzsConfig {
    /// `amplitude` sweeps `a2`; `detuning` sweeps `eps_l` at `amplitude_uev`.
    pub mode: String,
    pub a2: GridRange,
    pub eps_l: GridRange,
    pub amplitude_uev: f64,
    pub w1: GridRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlledUniversalConfig {
    pub eps_u: GridRange,
    pub eps_l: GridRange,
    pub a_u_uev: f64,
    pub a_l_uev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncConfig {
    pub delays_ps: Vec<f64>,
    pub eps_u: GridRange,
    pub eps_l: GridRange,
    pub a_u_uev: f64,
    pub a_l_uev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// CSV to fit; empty means "give it with --input".
    pub input: String,
    /// Column holding the probabilities; x is always the first column.
    pub column: String,
}

/// Single schedule for the `waveform` and `trajectory` subcommands.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleConfig {
    /// rabi, two-pulse, tomography, lzs, controlled-universal or sync.
    pub kind: String,
    pub w1_ps: f64,
    pub w2_ps: f64,
    pub amplitude_uev: f64,
    pub a_u_uev: f64,
    pub a_l_uev: f64,
    pub delay_ps: f64,
    pub label: String,
    pub sample_ps: f64,
}

pub const SCHEDULE_KINDS: [&str; 6] = [
    "rabi",
    "two-pulse",
    "tomography",
    "lzs",
    "controlled-universal",
    "sync",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub qubits: QubitsConfig,
    pub decoherence: DecoherenceConfig,
    pub integration: IntegrationSection,
    pub pulses: PulsesConfig,
    pub rabi: RabiConfig,
    pub conditional_rabi: ConditionalRabiConfig,
    pub two_pulse: TwoPulseConfig,
    pub tomography: TomographyConfig,
    pub fidelity: FidelityConfig,
    pub lzs: LzsConfig,
    pub controlled_universal: ControlledUniversalConfig,
    pub sync: SyncConfig,
    pub fit: FitConfig,
    pub schedule: ScheduleConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let eps_grid = GridRange::new(-400.0, -100.0, 10.0);
        Self {
            qubits: QubitsConfig {
                delta_u_ghz: 6.2,
                delta_l_ghz: 6.0,
                j_uev: 119.0,
                eps_u0_uev: -200.0,
                eps_l0_uev: -200.0,
                temperature_k: 0.010,
            },
            decoherence: DecoherenceConfig {
                t2_star_ps: Some(1200.0),
                gamma1_per_ps: 0.0,
            },
            integration: IntegrationSection {
                dt_ps: 0.05,
                record_stride: 0,
                readout_window_ps: 0.0,
            },
            pulses: PulsesConfig {
                rise_ps: 65.0,
                fall_ps: 65.0,
                rect_rise_ps: 0.0,
                rect_fall_ps: 0.0,
                gap_ps: 100.0,
                sync_offset_ps: 200.0,
                lzs_width_ps: 100.0,
            },
            rabi: RabiConfig {
                w1: GridRange::new(0.0, 1000.0, 4.0),
            },
            conditional_rabi: ConditionalRabiConfig {
                w1: GridRange::new(0.0, 1000.0, 4.0),
                eps_l: GridRange::new(-301.0, 301.0, 2.0),
            },
            two_pulse: TwoPulseConfig {
                w1: GridRange::new(0.0, 1000.0, 4.0),
                w2: GridRange::new(0.0, 1000.0, 4.0),
            },
            tomography: TomographyConfig {
                w: GridRange::new(0.0, 600.0, 2.0),
                prep: "scan".to_string(),
            },
            fidelity: FidelityConfig {
                j_uev: vec![10.0, 25.0, 50.0, 80.0, 119.0, 160.0, 200.0],
                w_max_ps: 1000.0,
                w_step_ps: 4.0,
            },
            lzs: LzsConfig {
                mode: "amplitude".to_string(),
                a2: GridRange::new(150.0, 700.0, 2.0),
                eps_l: GridRange::new(-400.0, 0.0, 2.0),
                amplitude_uev: 400.0,
                w1: GridRange::new(0.0, 400.0, 2.0),
            },
            controlled_universal: ControlledUniversalConfig {
                eps_u: GridRange::new(-400.0, -100.0, 5.0),
                eps_l: GridRange::new(-400.0, -100.0, 5.0),
                a_u_uev: 400.0,
                a_l_uev: 400.0,
            },
            sync: SyncConfig {
                delays_ps: vec![-400.0, -300.0, -200.0, -100.0, 0.0],
                eps_u: eps_grid,
                eps_l: eps_grid,
                a_u_uev: 400.0,
                a_l_uev: 400.0,
            },
            fit: FitConfig {
                input: String::new(),
                column: "p_u0".to_string(),
            },
            schedule: ScheduleConfig {
                kind: "two-pulse".to_string(),
                w1_ps: 200.0,
                w2_ps: 300.0,
                amplitude_uev: 400.0,
                a_u_uev: 400.0,
                a_l_uev: 400.0,
                delay_ps: -200.0,
                label: "00".to_string(),
                sample_ps: 1.0,
            },
        }
    }
}

enum Value<'a> {
    Num(&'a mut f64),
    /// Positive number or `inf` (stored as `None`).
    NumOrInf(&'a mut Option<f64>),
    Count(&'a mut usize),
    List(&'a mut Vec<f64>),
    Word(&'a mut String),
}

struct Slot<'a> {
    section: &'static str,
    key: String,
    value: Value<'a>,
}

impl Value<'_> {
    fn render(&self) -> String {
        match self {
            Value::Num(v) => format!("{v}"),
            Value::NumOrInf(v) => v.map_or_else(|| "inf".to_string(), |x| format!("{x}")),
            Value::Count(v) => v.to_string(),
            Value::List(v) => v
                .iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(", "),
            Value::Word(v) => v.to_string(),
        }
    }

    fn assign(&mut self, key: &str, raw: &str) -> ConfigResult<()> {
        match self {
            Value::Num(v) => **v = parse_finite(key, raw)?,
            Value::NumOrInf(v) => {
                **v = if matches!(
                    raw.to_ascii_lowercase().as_str(),
                    "inf" | "+inf" | "infinity"
                ) {
                    None
                } else {
                    Some(parse_finite(key, raw)?)
                }
            }
            Value::Count(v) => {
                **v = raw
                    .parse()
                    .map_err(|_| ConfigError::invalid(key, "expected a non-negative integer"))?
            }
            Value::List(v) => {
                **v = raw
                    .split(',')
                    .map(|s| s.trim())
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_finite(key, s))
                    .collect::<ConfigResult<_>>()?
            }
            Value::Word(v) => **v = raw.to_string(),
        }
        Ok(())
    }
}

fn parse_finite(key: &str, raw: &str) -> ConfigResult<f64> {
    let x: f64 = raw
        .parse()
        .map_err(|_| ConfigError::invalid(key, format!("`{raw}` is not a number")))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::invalid(key, "must be finite"))
    }
}

fn num<'a>(section: &'static str, key: &str, v: &'a mut f64) -> Slot<'a> {
    Slot {
        section,
        key: key.to_string(),
        value: Value::Num(v),
    }
}

fn word<'a>(section: &'static str, key: &str, v: &'a mut String) -> Slot<'a> {
    Slot {
        section,
        key: key.to_string(),
        value: Value::Word(v),
    }
}

fn list<'a>(section: &'static str, key: &str, v: &'a mut Vec<f64>) -> Slot<'a> {
    Slot {
        section,
        key: key.to_string(),
        value: Value::List(v),
    }
}

/// `<name>_start_<unit>`, `<name>_stop_<unit>`, `<name>_step_<unit>`.
fn grid<'a>(section: &'static str, name: &str, unit: &str, g: &'a mut GridRange) -> [Slot<'a>; 3] {
    [
        num(section, &format!("{name}_start_{unit}"), &mut g.start),
        num(section, &format!("{name}_stop_{unit}"), &mut g.stop),
        num(section, &format!("{name}_step_{unit}"), &mut g.step),
    ]
}

impl RunConfig {
    /// Every key in document order.
    fn slots(&mut self) -> Vec<Slot<'_>> {
        let q = &mut self.qubits;
        let d = &mut self.decoherence;
        let i = &mut self.integration;
        let p = &mut self.pulses;
        let cr = &mut self.conditional_rabi;
        let tp = &mut self.two_pulse;
        let tm = &mut self.tomography;
        let fi = &mut self.fidelity;
        let lz = &mut self.lzs;
        let cu = &mut self.controlled_universal;
        let sy = &mut self.sync;
        let ft = &mut self.fit;
        let sc = &mut self.schedule;
        let mut s = vec![
            num("qubits", "delta_u_ghz", &mut q.delta_u_ghz),
            num("qubits", "delta_l_ghz", &mut q.delta_l_ghz),
            num("qubits", "j_uev", &mut q.j_uev),
            num("qubits", "eps_u0_uev", &mut q.eps_u0_uev),
            num("qubits", "eps_l0_uev", &mut q.eps_l0_uev),
            num("qubits", "temperature_k", &mut q.temperature_k),
            Slot {
                section: "decoherence",
                key: "t2_star_ps".into(),
                value: Value::NumOrInf(&mut d.t2_star_ps),
            },
            num("decoherence", "gamma1_per_ps", &mut d.gamma1_per_ps),
            num("integration", "dt_ps", &mut i.dt_ps),
            Slot {
                section: "integration",
                key: "record_stride".into(),
                value: Value::Count(&mut i.record_stride),
            },
            num("integration", "readout_window_ps", &mut i.readout_window_ps),
            num("pulses", "rise_ps", &mut p.rise_ps),
            num("pulses", "fall_ps", &mut p.fall_ps),
            num("pulses", "rect_rise_ps", &mut p.rect_rise_ps),
            num("pulses", "rect_fall_ps", &mut p.rect_fall_ps),
            num("pulses", "gap_ps", &mut p.gap_ps),
            num("pulses", "sync_offset_ps", &mut p.sync_offset_ps),
            num("pulses", "lzs_width_ps", &mut p.lzs_width_ps),
        ];
        s.extend(grid("rabi", "w1", "ps", &mut self.rabi.w1));
        s.extend(grid("conditional_rabi", "w1", "ps", &mut cr.w1));
        s.extend(grid("conditional_rabi", "eps_l", "uev", &mut cr.eps_l));
        s.extend(grid("two_pulse", "w1", "ps", &mut tp.w1));
        s.extend(grid("two_pulse", "w2", "ps", &mut tp.w2));
        s.extend(grid("tomography", "w", "ps", &mut tm.w));
        s.push(word("tomography", "prep", &mut tm.prep));
        s.push(list("fidelity", "j_uev", &mut fi.j_uev));
        s.push(num("fidelity", "w_max_ps", &mut fi.w_max_ps));
        s.push(num("fidelity", "w_step_ps", &mut fi.w_step_ps));
        s.push(word("lzs", "mode", &mut lz.mode));
        s.extend(grid("lzs", "a2", "uev", &mut lz.a2));
        s.extend(grid("lzs", "eps_l", "uev", &mut lz.eps_l));
        s.push(num("lzs", "amplitude_uev", &mut lz.amplitude_uev));
        s.extend(grid("lzs", "w1", "ps", &mut lz.w1));
        s.extend(grid("controlled_universal", "eps_u", "uev", &mut cu.eps_u));
        s.extend(grid("controlled_universal", "eps_l", "uev", &mut cu.eps_l));
        s.push(num("controlled_universal", "a_u_uev", &mut cu.a_u_uev));
        s.push(num("controlled_universal", "a_l_uev", &mut cu.a_l_uev));
        s.push(list("sync", "delays_ps", &mut sy.delays_ps));
        s.extend(grid("sync", "eps_u", "uev", &mut sy.eps_u));
        s.extend(grid("sync", "eps_l", "uev", &mut sy.eps_l));
        s.push(num("sync", "a_u_uev", &mut sy.a_u_uev));
        s.push(num("sync", "a_l_uev", &mut sy.a_l_uev));
        s.push(word("fit", "input", &mut ft.input));
        s.push(word("fit", "column", &mut ft.column));
        s.push(word("schedule", "kind", &mut sc.kind));
        s.push(num("schedule", "w1_ps", &mut sc.w1_ps));
        s.push(num("schedule", "w2_ps", &mut sc.w2_ps));
        s.push(num("schedule", "amplitude_uev", &mut sc.amplitude_uev));
        s.push(num("schedule", "a_u_uev", &mut sc.a_u_uev));
        s.push(num("schedule", "a_l_uev", &mut sc.a_l_uev));
        s.push(num("schedule", "delay_ps", &mut sc.delay_ps));
        s.push(word("schedule", "label", &mut sc.label));
        s.push(num("schedule", "sample_ps", &mut sc.sample_ps));
        s
    }

    /// Parses and validates a config document.
    pub fn parse(text: &str) -> ConfigResult<Self> {
        let mut cfg = Self::default();
        let mut seen: Vec<(String, String)> = Vec::new();
        let mut section: Option<String> = None;
        {
            let mut slots = cfg.slots();
            for (idx, raw_line) in text.lines().enumerate() {
                let line_no = idx + 1;
                let line = raw_line.trim();
                if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                    continue;
                }
                let parse_err = |message: String| ConfigError::Parse {
                    line: line_no,
                    message,
                };
                if let Some(rest) = line.strip_prefix('[') {
                    let name = rest
                        .strip_suffix(']')
                        .ok_or_else(|| parse_err("unterminated section header".into()))?
                        .trim();
                    if !slots.iter().any(|s| s.section == name) {
                        return Err(parse_err(format!("unknown section [{name}]")));
                    }
                    section = Some(name.to_string());
                    continue;
                }
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| parse_err("expected `key = value`".into()))?;
                let (key, value) = (key.trim(), value.trim());
                let sec = section
                    .clone()
                    .ok_or_else(|| parse_err(format!("key `{key}` outside any section")))?;
                let slot = slots
                    .iter_mut()
                    .find(|s| s.section == sec && s.key == key)
                    .ok_or_else(|| parse_err(format!("unknown key `{key}` in [{sec}]")))?;
                if seen.iter().any(|(s, k)| *s == sec && k == key) {
                    return Err(parse_err(format!("duplicate key `{key}` in [{sec}]")));
                }
                seen.push((sec, key.to_string()));
                slot.value.assign(key, value)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Writes every key, grouped by section.
    pub fn serialize(&self) -> String {
        let mut copy = self.clone();
        let mut out = String::new();
        let mut current = "";
        for slot in copy.slots() {
            if slot.section != current {
                if !current.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{}]", slot.section);
                current = slot.section;
            }
            let _ = writeln!(out, "{} = {}", slot.key, slot.value.render());
        }
        out
    }

    /// Applies a `key=value` override, where `key` is `section.key` or a key
    /// name that occurs in a single section. Revalidates afterwards.
    pub fn set(&mut self, assignment: &str) -> ConfigResult<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::invalid(assignment, "expected key=value"))?;
        let (key, value) = (key.trim(), value.trim());
        let mut next = self.clone();
        {
            let mut slots = next.slots();
            let matches: Vec<usize> = slots
                .iter()
                .enumerate()
                .filter(|(_, s)| match key.split_once('.') {
                    Some((sec, k)) => s.section == sec && s.key == k,
                    None => s.key == key,
                })
                .map(|(i, _)| i)
                .collect();
            let idx = match matches.as_slice() {
                [i] => *i,
                [] => return Err(ConfigError::invalid(key, "unknown key")),
                _ => return Err(ConfigError::invalid(key, "ambiguous; use section.key")),
            };
            let name = slots[idx].key.clone();
            slots[idx].value.assign(&name, value)?;
        }
        next.validate()?;
        *self = next;
        Ok(())
    }

    /// Checks every value against the invariants of the module that uses it.
    pub fn validate(&self) -> ConfigResult<()> {
        let q = &self.qubits;
        positive("delta_u_ghz", q.delta_u_ghz)?;
        positive("delta_l_ghz", q.delta_l_ghz)?;
        non_negative("j_uev", q.j_uev)?;
        positive("temperature_k", q.temperature_k)?;
        if let Some(t2) = self.decoherence.t2_star_ps {
            positive("t2_star_ps", t2)?;
        }
        non_negative("gamma1_per_ps", self.decoherence.gamma1_per_ps)?;
        positive("dt_ps", self.integration.dt_ps)?;
        non_negative("readout_window_ps", self.integration.readout_window_ps)?;
        let p = &self.pulses;
        for (k, v) in [
            ("rise_ps", p.rise_ps),
            ("fall_ps", p.fall_ps),
            ("rect_rise_ps", p.rect_rise_ps),
            ("rect_fall_ps", p.rect_fall_ps),
            ("gap_ps", p.gap_ps),
            ("sync_offset_ps", p.sync_offset_ps),
            ("lzs_width_ps", p.lzs_width_ps),
        ] {
            non_negative(k, v)?;
        }

        check_grid("w1", &self.rabi.w1, true)?;
        check_grid("w1", &self.conditional_rabi.w1, true)?;
        check_grid("eps_l", &self.conditional_rabi.eps_l, false)?;
        check_grid("w1", &self.two_pulse.w1, true)?;
        check_grid("w2", &self.two_pulse.w2, true)?;
        check_grid("w", &self.tomography.w, true)?;
        self.prep_mode()?;

        let f = &self.fidelity;
        if f.j_uev.is_empty() {
            return Err(ConfigError::invalid(
                "j_uev",
                "[fidelity] needs at least one value",
            ));
        }
        for &j in &f.j_uev {
            non_negative("j_uev", j)?;
        }
        positive("w_max_ps", f.w_max_ps)?;
        positive("w_step_ps", f.w_step_ps)?;

        let l = &self.lzs;
        if !matches!(l.mode.as_str(), "amplitude" | "detuning") {
            return Err(ConfigError::invalid(
                "mode",
                "must be `amplitude` or `detuning`",
            ));
        }
        check_grid("a2", &l.a2, false)?;
        check_grid("eps_l", &l.eps_l, false)?;
        check_grid("w1", &l.w1, true)?;

        check_grid("eps_u", &self.controlled_universal.eps_u, false)?;
        check_grid("eps_l", &self.controlled_universal.eps_l, false)?;

        if self.sync.delays_ps.is_empty() {
            return Err(ConfigError::invalid(
                "delays_ps",
                "needs at least one value",
            ));
        }
        check_grid("eps_u", &self.sync.eps_u, false)?;
        check_grid("eps_l", &self.sync.eps_l, false)?;

        if !matches!(self.fit.column.as_str(), "p_u0" | "p_l0") {
            return Err(ConfigError::invalid("column", "must be `p_u0` or `p_l0`"));
        }

        let s = &self.schedule;
        if !SCHEDULE_KINDS.contains(&s.kind.as_str()) {
            return Err(ConfigError::invalid(
                "kind",
                format!("must be one of {}", SCHEDULE_KINDS.join(", ")),
            ));
        }
        non_negative("w1_ps", s.w1_ps)?;
        non_negative("w2_ps", s.w2_ps)?;
        positive("sample_ps", s.sample_ps)?;
        self.schedule_label()?;
        Ok(())
    }

    pub fn prep_mode(&self) -> ConfigResult<PrepMode> {
        match self.tomography.prep.as_str() {
            "scan" => Ok(PrepMode::Scan),
            "device" => Ok(PrepMode::Device),
            _ => Err(ConfigError::invalid("prep", "must be `scan` or `device`")),
        }
    }

    pub fn schedule_label(&self) -> ConfigResult<InputLabel> {
        self.schedule
            .label
            .parse()
            .map_err(|e: crate::Error| ConfigError::invalid("label", e.to_string()))
    }

    pub fn params(&self) -> QubitPairParams {
        let q = &self.qubits;
        QubitPairParams {
            delta_u: ghz_to_uev(q.delta_u_ghz),
            delta_l: ghz_to_uev(q.delta_l_ghz),
            j_coupling: q.j_uev,
            eps_u0: q.eps_u0_uev,
            eps_l0: q.eps_l0_uev,
            temperature: q.temperature_k,
        }
    }

    pub fn decoherence_params(&self) -> DecoherenceParams {
        DecoherenceParams {
            t2_star: self.decoherence.t2_star_ps,
            gamma1: self.decoherence.gamma1_per_ps,
        }
    }

    pub fn integration_config(&self) -> IntegrationConfig {
        IntegrationConfig {
            dt: self.integration.dt_ps,
            record_stride: self.integration.record_stride,
            readout_window: self.integration.readout_window_ps,
            ..IntegrationConfig::default()
        }
    }

    pub fn pulse_settings(&self) -> PulseSettings {
        let p = &self.pulses;
        PulseSettings {
            rise: p.rise_ps,
            fall: p.fall_ps,
            rect_rise: p.rect_rise_ps,
            rect_fall: p.rect_fall_ps,
            gap: p.gap_ps,
            sync_offset: p.sync_offset_ps,
            lzs_width: p.lzs_width_ps,
        }
    }

    pub fn setup(&self) -> ExperimentSetup {
        ExperimentSetup {
            params: self.params(),
            dec: self.decoherence_params(),
            cfg: self.integration_config(),
            settings: self.pulse_settings(),
        }
    }
}

fn positive(key: &str, v: f64) -> ConfigResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, "must be > 0"))
    }
}

fn non_negative(key: &str, v: f64) -> ConfigResult<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, "must be >= 0"))
    }
}

fn check_grid(name: &str, g: &GridRange, widths: bool) -> ConfigResult<()> {
    if !(g.step > 0.0) {
        return Err(ConfigError::invalid(&format!("{name}_step"), "must be > 0"));
    }
    if g.stop < g.start {
        return Err(ConfigError::invalid(
            &format!("{name}_stop"),
            "must be >= start",
        ));
    }
    if widths && g.start < 0.0 {
        return Err(ConfigError::invalid(
            &format!("{name}_start"),
            "widths must be >= 0",
        ));
    }
    Ok(())
}
