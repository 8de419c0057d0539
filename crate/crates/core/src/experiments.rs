//! Parameter-sweep runners for each simulated experiment.
//!
//! Every grid point is an independent simulation. Points are evaluated in
//! parallel and written back by grid index, so results never depend on the
//! thread count.

use rayon::prelude::*;

use crate::analysis::{
    leakage_amplitude, phase_difference, pulse_flip_fidelity_with, FidelityReport,
};
use crate::dynamics::{
    run_to_populations, sweep_last_pulse_width, DecoherenceParams, IntegrationConfig,
};
use crate::error::{check, Error, Result};
use crate::model::{ProbabilityPair, QubitPairParams};
use crate::output::{fmt_sig, CsvTable};
use crate::pulses::{Channel, InputLabel, PrepWidths, PulseSettings, ScheduleBuilder};

/// Lower-qubit detuning used to hold the control in |1⟩, μeV.
pub const CONTROL_ONE_DETUNING: f64 = 200.0;

/// Everything a runner needs besides its sweep axes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExperimentSetup {
    pub params: QubitPairParams,
    pub dec: DecoherenceParams,
    pub cfg: IntegrationConfig,
    pub settings: PulseSettings,
}

impl ExperimentSetup {
    pub fn new(params: QubitPairParams, dec: DecoherenceParams) -> Self {
        Self {
            params,
            dec,
            ..Self::default()
        }
    }

    pub fn builder(&self) -> ScheduleBuilder {
        ScheduleBuilder::new(&self.params, self.settings)
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.dec.validate()
    }
}

/// One sweep axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    /// `ps` or `ueV`.
    pub unit: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, unit: &str, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidGrid(format!("axis `{name}` is empty")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "axis `{name}` has non-finite values"
            )));
        }
        let inc = values.windows(2).all(|w| w[1] > w[0]);
        let dec = values.windows(2).all(|w| w[1] < w[0]);
        if !(inc || dec) {
            return Err(Error::InvalidGrid(format!(
                "axis `{name}` is not strictly monotone"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            unit: unit.to_string(),
            values,
        })
    }

    /// `start, start + step, …` up to `stop` inclusive (within 1e-9 step).
    pub fn range(name: &str, unit: &str, start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
            return Err(Error::InvalidGrid(format!(
                "axis `{name}`: need start <= stop and step > 0"
            )));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        Self::new(
            name,
            unit,
            (0..=n).map(|i| start + i as f64 * step).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn label(&self) -> String {
        format!("{} ({})", self.name, self.unit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub x: Axis,
    /// Absent for 1-D sweeps.
    pub y: Option<Axis>,
}

impl SweepGrid {
    pub fn one_d(x: Axis) -> Self {
        Self { x, y: None }
    }

    pub fn two_d(x: Axis, y: Axis) -> Self {
        Self { x, y: Some(y) }
    }

    pub fn rows(&self) -> usize {
        self.y.as_ref().map_or(1, Axis::len)
    }

    pub fn y_value(&self, iy: usize) -> Option<f64> {
        self.y.as_ref().map(|a| a.values[iy])
    }
}

/// Probability maps indexed `[iy][ix]`; 1-D sweeps have a single row.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    pub grid: SweepGrid,
    pub p_u0: Vec<Vec<f64>>,
    pub p_l0: Vec<Vec<f64>>,
}

impl ProbabilityMap {
    /// Assembles a map from per-row populations, clamping integration
    /// round-off into [0, 1].
    fn from_rows(grid: SweepGrid, rows: Vec<Vec<[f64; 4]>>) -> Self {
        let pairs: Vec<Vec<ProbabilityPair>> = rows
            .iter()
            .map(|r| r.iter().map(ProbabilityPair::from_populations).collect())
            .collect();
        let field = |f: fn(&ProbabilityPair) -> f64| -> Vec<Vec<f64>> {
            pairs
                .iter()
                .map(|r| r.iter().map(|p| f(p).clamp(0.0, 1.0)).collect())
                .collect()
        };
        Self {
            p_u0: field(|p| p.p_u0),
            p_l0: field(|p| p.p_l0),
            grid,
        }
    }

    pub fn is_2d(&self) -> bool {
        self.grid.y.is_some()
    }

    /// `(x, p_u0)` along row `iy`.
    pub fn row_u(&self, iy: usize) -> Vec<(f64, f64)> {
        self.grid
            .x
            .values
            .iter()
            .copied()
            .zip(self.p_u0[iy].iter().copied())
            .collect()
    }

    pub fn row_l(&self, iy: usize) -> Vec<(f64, f64)> {
        self.grid
            .x
            .values
            .iter()
            .copied()
            .zip(self.p_l0[iy].iter().copied())
            .collect()
    }

    /// `(y, p_u0)` down column `ix`.
    pub fn column_u(&self, ix: usize) -> Vec<(f64, f64)> {
        self.column(ix, &self.p_u0)
    }

    pub fn column_l(&self, ix: usize) -> Vec<(f64, f64)> {
        self.column(ix, &self.p_l0)
    }

    fn column(&self, ix: usize, field: &[Vec<f64>]) -> Vec<(f64, f64)> {
        let ys = self
            .grid
            .y
            .as_ref()
            .map(|a| a.values.clone())
            .unwrap_or(vec![0.0]);
        ys.into_iter().zip(field.iter().map(|r| r[ix])).collect()
    }

    /// Long-format CSV: `x,p_u0,p_l0` or `x,y,p_u0,p_l0`, y-major.
    pub fn to_csv(&self) -> String {
        let header: &[&str] = if self.is_2d() {
            &["x", "y", "p_u0", "p_l0"]
        } else {
            &["x", "p_u0", "p_l0"]
        };
        let mut t = CsvTable::new(header);
        self.write_rows(&mut t, &[]);
        t.finish()
    }

    fn write_rows(&self, t: &mut CsvTable, prefix: &[String]) {
        for iy in 0..self.grid.rows() {
            for (ix, &x) in self.grid.x.values.iter().enumerate() {
                let mut row: Vec<String> = prefix.to_vec();
                row.push(fmt_sig(x));
                if let Some(y) = self.grid.y_value(iy) {
                    row.push(fmt_sig(y));
                }
                row.push(fmt_sig(self.p_u0[iy][ix]));
                row.push(fmt_sig(self.p_l0[iy][ix]));
                t.row(row);
            }
        }
    }
}

/// Evaluates `row(iy)` for every row in parallel, keeping grid order.
fn rows_in_parallel<F>(n: usize, row: F) -> Result<Vec<Vec<[f64; 4]>>>
where
    F: Fn(usize) -> Result<Vec<[f64; 4]>> + Sync,
{
    (0..n).into_par_iter().map(&row).collect()
}

/// Evaluates one simulation per grid point in parallel.
fn points_in_parallel<F>(grid: &SweepGrid, point: F) -> Result<Vec<Vec<[f64; 4]>>>
where
    F: Fn(f64, Option<f64>) -> Result<[f64; 4]> + Sync,
{
    let nx = grid.x.len();
    let flat: Vec<[f64; 4]> = (0..nx * grid.rows())
        .into_par_iter()
        .map(|k| point(grid.x.values[k % nx], grid.y_value(k / nx)))
        .collect::<Result<_>>()?;
    Ok(flat.chunks(nx).map(<[_]>::to_vec).collect())
}

/// Upper Rabi sweep over `W₁` with both qubits at their baselines.
pub fn run_rabi(setup: &ExperimentSetup, w1: &Axis) -> Result<ProbabilityMap> {
    setup.validate()?;
    let b = setup.builder();
    let row = sweep_last_pulse_width(
        |w| b.rabi(w),
        &w1.values,
        &setup.params,
        &setup.dec,
        &setup.cfg,
    )?;
    Ok(ProbabilityMap::from_rows(
        SweepGrid::one_d(w1.clone()),
        vec![row],
    ))
}

/// Upper Rabi sweep over `W₁` for each lower-qubit detuning `ε_L`.
pub fn run_conditional_rabi(
    setup: &ExperimentSetup,
    w1: &Axis,
    eps_l: &Axis,
) -> Result<ProbabilityMap> {
    setup.validate()?;
    let p = &setup.params;
    let rows = rows_in_parallel(eps_l.len(), |iy| {
        let b = setup.builder().with_baselines(p.eps_u0, eps_l.values[iy]);
        sweep_last_pulse_width(|w| b.rabi(w), &w1.values, p, &setup.dec, &setup.cfg)
    })?;
    Ok(ProbabilityMap::from_rows(
        SweepGrid::two_d(w1.clone(), eps_l.clone()),
        rows,
    ))
}

/// Lower pulse `W₂`, gap, then upper pulse `W₁`; x = `W₁`, y = `W₂`.
pub fn run_two_pulse(setup: &ExperimentSetup, w1: &Axis, w2: &Axis) -> Result<ProbabilityMap> {
    setup.validate()?;
    let b = setup.builder();
    let rows = rows_in_parallel(w2.len(), |iy| {
        let w2v = w2.values[iy];
        sweep_last_pulse_width(
            |w| b.two_pulse(w, w2v),
            &w1.values,
            &setup.params,
            &setup.dec,
            &setup.cfg,
        )
    })?;
    Ok(ProbabilityMap::from_rows(
        SweepGrid::two_d(w1.clone(), w2.clone()),
        rows,
    ))
}

/// Summary statistics of a two-pulse map (x = `W₁`, y = `W₂`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPulseMetrics {
    /// Largest standard deviation of `p_l0` along `W₁` over all `W₂` rows.
    pub max_row_std_l: f64,
    /// Phase difference of `p_u0` and `p_l0` along `W₂`, rad in [0, π].
    pub phase_opposition: f64,
    /// `W₁` of the column with the largest `p_u0` contrast, where the phase
    /// difference is measured.
    pub column_w1: f64,
}

pub fn two_pulse_metrics(map: &ProbabilityMap) -> Result<TwoPulseMetrics> {
    if !map.is_2d() {
        return Err(Error::InvalidGrid(
            "two-pulse metrics need a 2-D map".into(),
        ));
    }
    let std = |row: &[f64]| {
        let n = row.len() as f64;
        let mean = row.iter().sum::<f64>() / n;
        (row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
    };
    let max_row_std_l = map.p_l0.iter().map(|r| std(r)).fold(0.0, f64::max);
    let contrast = |ix: usize| {
        let col = map.column_u(ix);
        let (lo, hi) = col
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, v)| {
                (lo.min(v), hi.max(v))
            });
        hi - lo
    };
    // First index wins ties, so the choice is independent of evaluation order.
    let mut best = 0;
    for ix in 1..map.grid.x.len() {
        if contrast(ix) > contrast(best) {
            best = ix;
        }
    }
    Ok(TwoPulseMetrics {
        max_row_std_l,
        phase_opposition: phase_difference(&map.column_u(best), &map.column_l(best))?,
        column_w1: map.grid.x.values[best],
    })
}

/// Population-transfer tomography matrix: rows are inputs and columns are
/// outputs, both ordered 00, 10, 01, 11.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomographyMatrix {
    pub d: [[f64; 4]; 4],
}

impl TomographyMatrix {
    /// Truth table of the CNOT controlled by the lower qubit being in |0⟩.
    pub fn ideal_cnot() -> Self {
        let mut d = [[0.0; 4]; 4];
        for l in InputLabel::ALL {
            d[l.row()][l.cnot().row()] = 1.0;
        }
        Self { d }
    }

    /// Row from charge-basis populations (basis index `2u + l`).
    pub fn row_from_populations(pops: &[f64; 4]) -> [f64; 4] {
        InputLabel::ALL.map(|l| pops[l.basis_index()].clamp(0.0, 1.0))
    }

    pub fn row_sums(&self) -> [f64; 4] {
        self.d.map(|r| r.iter().sum())
    }

    /// Column index of the largest entry in each row.
    pub fn argmax_rows(&self) -> [usize; 4] {
        self.d
            .map(|r| (0..4).max_by(|&a, &b| r[a].total_cmp(&r[b])).unwrap())
    }

    /// 4×4 matrix CSV with labeled rows and columns.
    pub fn to_matrix_csv(&self) -> String {
        let mut header = vec!["input"];
        header.extend(InputLabel::ALL.iter().map(|l| l.as_str()));
        let mut t = CsvTable::new(&header);
        for l in InputLabel::ALL {
            let mut row = vec![l.as_str().to_string()];
            row.extend(self.d[l.row()].iter().map(|&v| fmt_sig(v)));
            t.row(row);
        }
        t.finish()
    }

    /// Long-format CSV `input,output,probability`.
    pub fn to_long_csv(&self) -> String {
        let mut t = CsvTable::new(&["input", "output", "probability"]);
        for i in InputLabel::ALL {
            for o in InputLabel::ALL {
                t.row([
                    i.as_str().to_string(),
                    o.as_str().to_string(),
                    fmt_sig(self.d[i.row()][o.row()]),
                ]);
            }
        }
        t.finish()
    }
}

/// How the tomography pulse widths are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrepMode {
    /// Locate each 3π width as the flip maximum of a single-qubit scan.
    #[default]
    Scan,
    /// Generator widths of the device: 360 ps upper, 390 ps lower.
    Device,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyRun {
    pub w_i: Axis,
    /// `traces[row][k]`: output populations (row order) at `w_i.values[k]`.
    pub traces: [Vec<[f64; 4]>; 4],
    /// CNOT pulse width at which `d` is evaluated, ps.
    pub operating_width: f64,
    pub prep: PrepWidths,
    pub d: TomographyMatrix,
}

impl TomographyRun {
    /// Long CSV `input,w_i,output,probability` of the per-input traces.
    pub fn traces_csv(&self) -> String {
        let mut t = CsvTable::new(&["input", "w_i", "output", "probability"]);
        for l in InputLabel::ALL {
            for (k, &w) in self.w_i.values.iter().enumerate() {
                for o in InputLabel::ALL {
                    t.row([
                        l.as_str().to_string(),
                        fmt_sig(w),
                        o.as_str().to_string(),
                        fmt_sig(self.traces[l.row()][k][o.row()]),
                    ]);
                }
            }
        }
        t.finish()
    }
}

/// Operating widths for tomography: `(CNOT width, prep widths)`.
///
/// In scan mode the CNOT pulse shares the upper 3π width.
pub fn locate_3pi(setup: &ExperimentSetup, mode: PrepMode) -> Result<(f64, PrepWidths)> {
    let prep = match mode {
        PrepMode::Device => PrepWidths::DEVICE,
        PrepMode::Scan => {
            let flip = |ch| {
                pulse_flip_fidelity_with(
                    &setup.params,
                    &setup.dec,
                    ch,
                    3,
                    &setup.settings,
                    &setup.cfg,
                )
                .map(|r| r.width)
            };
            PrepWidths {
                upper: flip(Channel::Upper)?,
                lower: flip(Channel::Lower)?,
            }
        }
    };
    Ok((prep.upper, prep))
}

/// Sweeps the CNOT width for all four inputs and evaluates the tomography
/// matrix at the 3π operating width.
pub fn run_cnot_tomography(
    setup: &ExperimentSetup,
    w_i: &Axis,
    mode: PrepMode,
) -> Result<TomographyRun> {
    setup.validate()?;
    let (operating_width, prep) = locate_3pi(setup, mode)?;
    let b = setup.builder();
    let p = &setup.params;
    let per_label: Vec<(Vec<[f64; 4]>, [f64; 4])> = InputLabel::ALL
        .par_iter()
        .map(|&l| {
            let pops = sweep_last_pulse_width(
                |w| b.tomography(l, w, prep),
                &w_i.values,
                p,
                &setup.dec,
                &setup.cfg,
            )?;
            let trace = pops
                .iter()
                .map(TomographyMatrix::row_from_populations)
                .collect();
            let at = run_to_populations(
                &b.tomography(l, operating_width, prep)?,
                p,
                &setup.dec,
                &setup.cfg,
            )?;
            Ok((trace, TomographyMatrix::row_from_populations(&at)))
        })
        .collect::<Result<_>>()?;
    let mut d = [[0.0; 4]; 4];
    let mut traces: [Vec<[f64; 4]>; 4] = Default::default();
    for (l, (trace, row)) in InputLabel::ALL.iter().zip(per_label) {
        d[l.row()] = row;
        traces[l.row()] = trace;
    }
    Ok(TomographyRun {
        w_i: w_i.clone(),
        traces,
        operating_width,
        prep,
        d: TomographyMatrix { d },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityCurve {
    pub j_values: Vec<f64>,
    pub f: Vec<f64>,
    pub f_prime: Vec<f64>,
    pub reports: Vec<FidelityReport>,
}

impl FidelityCurve {
    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new(&["j_uev", "f", "f_prime"]);
        for k in 0..self.j_values.len() {
            t.row([
                fmt_sig(self.j_values[k]),
                fmt_sig(self.f[k]),
                fmt_sig(self.f_prime[k]),
            ]);
        }
        t.finish()
    }
}

/// Upper-flip probability vs `W_I` with the lower qubit held in |1⟩.
pub fn leakage_trace(setup: &ExperimentSetup, w_i: &Axis) -> Result<Vec<(f64, f64)>> {
    let p = &setup.params;
    let b = setup
        .builder()
        .with_baselines(p.eps_u0, CONTROL_ONE_DETUNING);
    let pops = sweep_last_pulse_width(|w| b.rabi(w), &w_i.values, p, &setup.dec, &setup.cfg)?;
    Ok(w_i
        .values
        .iter()
        .zip(&pops)
        .map(|(&w, pop)| (w, 1.0 - ProbabilityPair::from_populations(pop).p_u0))
        .collect())
}

/// Full fidelity analysis at one coupling.
///
/// `A_k` is the leakage maximum without decoherence over `w_i`; `A_k′` is the
/// leakage at the upper 3π width with the setup's decoherence.
pub fn fidelity_at(setup: &ExperimentSetup, w_i: &Axis) -> Result<FidelityReport> {
    setup.validate()?;
    let coherent = ExperimentSetup {
        dec: DecoherenceParams::NONE,
        ..*setup
    };
    let a_k = leakage_amplitude(&leakage_trace(&coherent, w_i)?);
    let flip = |ch| {
        pulse_flip_fidelity_with(
            &setup.params,
            &setup.dec,
            ch,
            3,
            &setup.settings,
            &setup.cfg,
        )
    };
    let fu = flip(Channel::Upper)?;
    let fl = flip(Channel::Lower)?;
    let at = Axis::new("w_i", "ps", vec![fu.width])?;
    let a_k_prime = leakage_trace(setup, &at)?[0].1.max(0.0);
    Ok(FidelityReport::new(a_k, a_k_prime, fu.f, fl.f))
}

/// `F(J)` and `F′(J)` over the given couplings, `W_I` swept on `[0, w_i_max]`.
pub fn run_fidelity_vs_j(
    setup: &ExperimentSetup,
    j_values: &[f64],
    w_i_max: f64,
    w_i_step: f64,
) -> Result<FidelityCurve> {
    check(!j_values.is_empty(), "j_values", "must not be empty")?;
    check(j_values.iter().all(|&j| j > 0.0), "j_values", "must be > 0")?;
    let w_i = Axis::range("w_i", "ps", 0.0, w_i_max, w_i_step)?;
    let reports: Vec<FidelityReport> = j_values
        .par_iter()
        .map(|&j| {
            let s = ExperimentSetup {
                params: setup.params.with_j(j),
                ..*setup
            };
            fidelity_at(&s, &w_i)
        })
        .collect::<Result<_>>()?;
    Ok(FidelityCurve {
        j_values: j_values.to_vec(),
        f: reports.iter().map(|r| r.f).collect(),
        f_prime: reports.iter().map(|r| r.f_prime).collect(),
        reports,
    })
}

/// The swept variable of an LZS map.
#[derive(Debug, Clone, PartialEq)]
pub enum LzsSweep {
    /// Amplitude of the short lower pulse, μeV, at the baseline `ε_L0`.
    Amplitude(Axis),
    /// Lower baseline detuning, μeV, at a fixed short-pulse amplitude.
    Detuning { eps_l: Axis, amplitude: f64 },
}

/// Short lower pulse swept through the LZS regime, followed by the upper
/// rectangle `W₁`; x = `W₁`, y = the swept variable.
pub fn run_lzs_control(
    setup: &ExperimentSetup,
    sweep: &LzsSweep,
    w1: &Axis,
) -> Result<ProbabilityMap> {
    setup.validate()?;
    let p = &setup.params;
    let y = match sweep {
        LzsSweep::Amplitude(a) => a,
        LzsSweep::Detuning { eps_l, .. } => eps_l,
    };
    let rows = rows_in_parallel(y.len(), |iy| {
        let (b, amp) = match sweep {
            LzsSweep::Amplitude(a) => (setup.builder(), a.values[iy]),
            LzsSweep::Detuning { eps_l, amplitude } => (
                setup.builder().with_baselines(p.eps_u0, eps_l.values[iy]),
                *amplitude,
            ),
        };
        sweep_last_pulse_width(|w| b.lzs(amp, w), &w1.values, p, &setup.dec, &setup.cfg)
    })?;
    Ok(ProbabilityMap::from_rows(
        SweepGrid::two_d(w1.clone(), y.clone()),
        rows,
    ))
}

/// Short pulses on both qubits, lower first, over baseline detunings;
/// x = `ε_U`, y = `ε_L`.
pub fn run_controlled_universal(
    setup: &ExperimentSetup,
    eps_u: &Axis,
    eps_l: &Axis,
    a_u: f64,
    a_l: f64,
) -> Result<ProbabilityMap> {
    setup.validate()?;
    let grid = SweepGrid::two_d(eps_u.clone(), eps_l.clone());
    let rows = points_in_parallel(&grid, |eu, el| {
        let b = setup
            .builder()
            .with_baselines(eu, el.unwrap_or(setup.params.eps_l0));
        run_to_populations(
            &b.controlled_universal(a_u, a_l)?,
            &setup.params,
            &setup.dec,
            &setup.cfg,
        )
    })?;
    Ok(ProbabilityMap::from_rows(grid, rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncMap {
    /// Programmed delay from the end of the lower pulse to the start of the
    /// upper one, ps.
    pub delay: f64,
    pub map: ProbabilityMap,
}

/// Short-pulse maps over baseline detunings for each programmed delay,
/// with the upper line delay left uncompensated.
pub fn run_sync_scan(
    setup: &ExperimentSetup,
    delays: &[f64],
    eps_u: &Axis,
    eps_l: &Axis,
    a_u: f64,
    a_l: f64,
) -> Result<Vec<SyncMap>> {
    setup.validate()?;
    check(!delays.is_empty(), "delays", "must not be empty")?;
    let grid = SweepGrid::two_d(eps_u.clone(), eps_l.clone());
    delays
        .iter()
        .map(|&delay| {
            let rows = points_in_parallel(&grid, |eu, el| {
                let b = setup
                    .builder()
                    .with_baselines(eu, el.unwrap_or(setup.params.eps_l0));
                run_to_populations(
                    &b.sync(delay, a_u, a_l)?,
                    &setup.params,
                    &setup.dec,
                    &setup.cfg,
                )
            })?;
            Ok(SyncMap {
                delay,
                map: ProbabilityMap::from_rows(grid.clone(), rows),
            })
        })
        .collect()
}

/// Long CSV `delay,x,y,p_u0,p_l0` over all delays.
pub fn sync_scan_csv(maps: &[SyncMap]) -> String {
    let mut t = CsvTable::new(&["delay", "x", "y", "p_u0", "p_l0"]);
    for m in maps {
        m.map.write_rows(&mut t, &[fmt_sig(m.delay)]);
    }
    t.finish()
}

/// How strongly `p_u0` depends on the y axis: the mean over columns of the
/// column's max − min.
pub fn cross_dependence(map: &ProbabilityMap) -> f64 {
    let nx = map.grid.x.len();
    (0..nx)
        .map(|ix| {
            let col = map.p_u0.iter().map(|r| r[ix]);
            let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
            hi - lo
        })
        .sum::<f64>()
        / nx as f64
}
