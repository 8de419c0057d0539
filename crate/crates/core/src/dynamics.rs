//! Master-equation integration under a pulse schedule.
//!
//! Two equivalent generators are provided:
//!
//! * complex form: `dρ/dt = −(i/ħ)[H, ρ] − Γ₁(ρ − ρ(0)) − D₂∘ρ`
//! * real form on `W = Re ρ + Im ρ`: `dW/dt = −(1/ħ)[H, Wᵀ] − Γ₁(W − W(0)) − D₂∘W`
//!
//! `D₂` is `1/T₂*` on every off-diagonal entry and zero on the diagonal, so
//! dephasing never changes populations. Both forms use classical RK4 with a
//! fixed step, and the step grid is split at every pulse kink so that no step
//! straddles a slope discontinuity of the detuning.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check, Error, Result};
use crate::model::{
    from_real_form, probabilities, thermal_initial_state, to_real_form, CMat4, DensityMatrix,
    Hamiltonian4, Mat4, ProbabilityPair, QubitPairParams, RealStateMatrix, HBAR,
};
use crate::pulses::{Schedule, Segment};

/// Largest allowed phase advance per step, rad.
pub const MAX_PHASE_PER_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceParams {
    /// Inhomogeneous dephasing time in ps; `None` disables dephasing.
    pub t2_star: Option<f64>,
    /// Relaxation rate toward the initial state, 1/ps.
    pub gamma1: f64,
}

impl DecoherenceParams {
    pub const NONE: DecoherenceParams = DecoherenceParams {
        t2_star: None,
        gamma1: 0.0,
    };

    pub fn dephasing(t2_star: f64) -> Self {
        Self {
            t2_star: Some(t2_star),
            gamma1: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t2) = self.t2_star {
            check(t2 > 0.0 && !t2.is_nan(), "t2_star", "must be > 0")?;
        }
        check(
            self.gamma1 >= 0.0 && self.gamma1.is_finite(),
            "gamma1",
            "must be >= 0",
        )
    }

    /// Off-diagonal decay rate `Γ₂ = 1/T₂*`, 1/ps.
    pub fn dephasing_rate(&self) -> f64 {
        match self.t2_star {
            Some(t2) if t2.is_finite() => 1.0 / t2,
            _ => 0.0,
        }
    }
}

impl Default for DecoherenceParams {
    fn default() -> Self {
        Self::NONE
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig {
    /// Nominal step, ps.
    pub dt: f64,
    /// Steps between trajectory samples; 0 records the final state only.
    pub record_stride: usize,
    /// Keep full density matrices alongside the probabilities.
    pub keep_snapshots: bool,
    /// Readout integration time, ps. Populations are averaged over this long
    /// an idle period at the baselines after the schedule; 0 reads the final
    /// state directly.
    pub readout_window: f64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            record_stride: 0,
            keep_snapshots: false,
            readout_window: 0.0,
        }
    }
}

impl IntegrationConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ProbabilityPair>,
    /// Filled only when [`IntegrationConfig::keep_snapshots`] is set.
    pub snapshots: Vec<DensityMatrix>,
}

/// Largest `dt · ‖H(t)‖/ħ` over the schedule, using the row-sum bound of
/// `‖H‖`. `H` is affine in the detunings, so segment endpoints suffice.
pub fn max_phase_per_step(s: &Schedule, params: &QubitPairParams, dt: f64) -> f64 {
    let mut e = hamiltonian(params, (s.eps_u0, s.eps_l0)).row_sum_bound();
    for seg in s.segments() {
        for eps in [seg.eps_start, seg.eps_end] {
            e = e.max(hamiltonian(params, eps).row_sum_bound());
        }
    }
    dt * e / HBAR
}

fn hamiltonian(params: &QubitPairParams, eps: (f64, f64)) -> Hamiltonian4 {
    Hamiltonian4::from_energies(
        params.delta_u,
        params.delta_l,
        params.j_coupling,
        eps.0,
        eps.1,
    )
}

fn check_config(
    s: &Schedule,
    params: &QubitPairParams,
    dec: &DecoherenceParams,
    cfg: &IntegrationConfig,
) -> Result<()> {
    check(cfg.dt > 0.0 && cfg.dt.is_finite(), "dt", "must be > 0")?;
    check(
        cfg.readout_window >= 0.0 && cfg.readout_window.is_finite(),
        "readout_window",
        "must be >= 0",
    )?;
    dec.validate()?;
    s.validate()?;
    let phase = max_phase_per_step(s, params, cfg.dt);
    if phase >= MAX_PHASE_PER_STEP {
        return Err(Error::StepTooLarge { dt: cfg.dt, phase });
    }
    Ok(())
}

/// State representation that RK4 can advance.
trait Rk4State: Copy {
    fn axpy(&self, a: f64, x: &Self) -> Self;
    fn combine(&self, h: f64, k1: &Self, k2: &Self, k3: &Self, k4: &Self) -> Self;
}

impl Rk4State for CMat4 {
    #[inline]
    fn axpy(&self, a: f64, x: &Self) -> Self {
        std::array::from_fn(|i| std::array::from_fn(|j| self[i][j] + x[i][j] * a))
    }

    #[inline]
    fn combine(&self, h: f64, k1: &Self, k2: &Self, k3: &Self, k4: &Self) -> Self {
        let c = h / 6.0;
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                self[i][j] + (k1[i][j] + (k2[i][j] + k3[i][j]) * 2.0 + k4[i][j]) * c
            })
        })
    }
}

impl Rk4State for Mat4 {
    #[inline]
    fn axpy(&self, a: f64, x: &Self) -> Self {
        std::array::from_fn(|i| std::array::from_fn(|j| self[i][j] + a * x[i][j]))
    }

    #[inline]
    fn combine(&self, h: f64, k1: &Self, k2: &Self, k3: &Self, k4: &Self) -> Self {
        let c = h / 6.0;
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                self[i][j] + c * (k1[i][j] + 2.0 * (k2[i][j] + k3[i][j]) + k4[i][j])
            })
        })
    }
}

struct Generator {
    gamma1: f64,
    gamma2: f64,
}

impl Generator {
    #[inline]
    fn complex(&self, h: &Mat4, rho: &CMat4, rho0: &CMat4) -> CMat4 {
        // −(i/ħ)(Hρ − ρH)
        let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let mut c = Complex64::new(0.0, 0.0);
                for k in 0..4 {
                    c += rho[k][j] * h[i][k] - rho[i][k] * h[k][j];
                }
                let mut d = Complex64::new(c.im / HBAR, -c.re / HBAR);
                if self.gamma1 != 0.0 {
                    d -= (rho[i][j] - rho0[i][j]) * self.gamma1;
                }
                if i != j {
                    d -= rho[i][j] * self.gamma2;
                }
                out[i][j] = d;
            }
        }
        out
    }

    #[inline]
    fn real(&self, h: &Mat4, w: &Mat4, w0: &Mat4) -> Mat4 {
        // −(1/ħ)(H Wᵀ − Wᵀ H); (Wᵀ)[k][j] = w[j][k].
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let mut c = 0.0;
                for k in 0..4 {
                    c += h[i][k] * w[j][k] - w[k][i] * h[k][j];
                }
                let mut d = -c / HBAR;
                if self.gamma1 != 0.0 {
                    d -= self.gamma1 * (w[i][j] - w0[i][j]);
                }
                if i != j {
                    d -= self.gamma2 * w[i][j];
                }
                out[i][j] = d;
            }
        }
        out
    }
}

/// Drives RK4 over `segments`, calling `record(step, t, state, segment_end)`
/// after each step.
fn integrate<S, F, R>(
    segments: &[Segment],
    params: &QubitPairParams,
    dt: f64,
    state0: S,
    deriv: F,
    mut record: R,
) -> S
where
    S: Rk4State,
    F: Fn(&Mat4, &S) -> S,
    R: FnMut(usize, f64, &S, bool),
{
    let mut state = state0;
    let mut step = 0usize;
    for seg in segments {
        let len = seg.t1 - seg.t0;
        if len <= 0.0 {
            continue;
        }
        let n = ((len / dt) - 1e-9).ceil().max(1.0) as usize;
        let h = len / n as f64;
        for k in 0..n {
            let t = seg.t0 + k as f64 * h;
            let h0 = hamiltonian(params, seg.eps_at(t)).entries;
            let hm = hamiltonian(params, seg.eps_at(t + 0.5 * h)).entries;
            let h1 = hamiltonian(params, seg.eps_at(t + h)).entries;
            let k1 = deriv(&h0, &state);
            let k2 = deriv(&hm, &state.axpy(0.5 * h, &k1));
            let k3 = deriv(&hm, &state.axpy(0.5 * h, &k2));
            let k4 = deriv(&h1, &state.axpy(h, &k3));
            state = state.combine(h, &k1, &k2, &k3, &k4);
            step += 1;
            let last = k + 1 == n;
            let t_next = if last { seg.t1 } else { t + h };
            record(step, t_next, &state, last);
        }
    }
    state
}

/// Splits linear segments at the given sorted times.
fn split_segments(segments: Vec<Segment>, times: &[f64]) -> Vec<Segment> {
    let mut out = Vec::with_capacity(segments.len() + times.len());
    for seg in segments {
        let mut t0 = seg.t0;
        for &t in times
            .iter()
            .filter(|&&t| t > seg.t0 + 1e-9 && t < seg.t1 - 1e-9)
        {
            out.push(Segment {
                t0,
                t1: t,
                eps_start: seg.eps_at(t0),
                eps_end: seg.eps_at(t),
            });
            t0 = t;
        }
        out.push(Segment {
            t0,
            t1: seg.t1,
            eps_start: seg.eps_at(t0),
            eps_end: seg.eps_end,
        });
    }
    out
}

struct Recorder {
    stride: usize,
    keep: bool,
    traj: Trajectory,
}

impl Recorder {
    fn new(cfg: &IntegrationConfig) -> Self {
        Self {
            stride: cfg.record_stride,
            keep: cfg.keep_snapshots,
            traj: Trajectory::default(),
        }
    }

    fn push(&mut self, t: f64, rho: &DensityMatrix) {
        if self.traj.times.last().is_some_and(|&last| t <= last) {
            return;
        }
        self.traj.times.push(t);
        self.traj.states.push(probabilities(rho));
        if self.keep {
            self.traj.snapshots.push(*rho);
        }
    }
}

/// Integrates the complex master equation from `rho0` over the whole schedule.
pub fn evolve_complex(
    rho0: &DensityMatrix,
    s: &Schedule,
    params: &QubitPairParams,
    dec: &DecoherenceParams,
    cfg: &IntegrationConfig,
) -> Result<(DensityMatrix, Trajectory)> {
    rho0.validate()?;
    check_config(s, params, dec, cfg)?;
    let gen = Generator {
        gamma1: dec.gamma1,
        gamma2: dec.dephasing_rate(),
    };
    let init = rho0.entries;
    let mut rec = Recorder::new(cfg);
    if rec.stride > 0 {
        rec.push(0.0, rho0);
    }
    let last = integrate(
        &s.segments(),
        params,
        cfg.dt,
        init,
        |h, r| gen.complex(h, r, &init),
        |step, t, r, _| {
            if rec.stride > 0 && step % rec.stride == 0 {
                rec.push(t, &DensityMatrix::from_entries_unchecked(*r));
            }
        },
    );
    let final_rho = DensityMatrix::from_entries_unchecked(last);
    rec.push(s.total_duration, &final_rho);
    Ok((final_rho, rec.traj))
}

/// Integrates the real-matrix form from `w0`.
pub fn evolve_real(
    w0: &RealStateMatrix,
    s: &Schedule,
    params: &QubitPairParams,
    dec: &DecoherenceParams,
    cfg: &IntegrationConfig,
) -> Result<(RealStateMatrix, Trajectory)> {
    from_real_form(w0).validate()?;
    check_config(s, params, dec, cfg)?;
    let gen = Generator {
        gamma1: dec.gamma1,
        gamma2: dec.dephasing_rate(),
    };
    let init = w0.entries;
    let mut rec = Recorder::new(cfg);
    if rec.stride > 0 {
        rec.push(0.0, &from_real_form(w0));
    }
    let last = integrate(
        &s.segments(),
        params,
        cfg.dt,
        init,
        |h, w| gen.real(h, w, &init),
        |step, t, w, _| {
            if rec.stride > 0 && step % rec.stride == 0 {
                rec.push(t, &from_real_form(&RealStateMatrix { entries: *w }));
            }
        },
    );
    let final_w = RealStateMatrix { entries: last };
    rec.push(s.total_duration, &from_real_form(&final_w));
    Ok((final_w, rec.traj))
}

/// Charge-basis populations read from `w`: either directly, or averaged
/// (trapezoid rule) over an idle window at the schedule baselines.
fn read_populations(
    w: &Mat4,
    w_ref: &Mat4,
    s: &Schedule,
    params: &QubitPairParams,
    dec: &DecoherenceParams,
    cfg: &IntegrationConfig,
) -> [f64; 4] {
    let diag = |m: &Mat4| std::array::from_fn(|i| m[i][i]);
    if cfg.readout_window == 0.0 {
        return diag(w);
    }
    let gen = Generator {
        gamma1: dec.gamma1,
        gamma2: dec.dephasing_rate(),
    };
    let idle = [Segment {
        t0: 0.0,
        t1: cfg.readout_window,
        eps_start: (s.eps_u0, s.eps_l0),
        eps_end: (s.eps_u0, s.eps_l0),
    }];
    let mut sum = diag(w).map(|x| 0.5 * x);
    let mut last = diag(w);
    let mut steps = 0usize;
    integrate(
        &idle,
        params,
        cfg.dt,
        *w,
        |h, m| gen.real(h, m, w_ref),
        |_, _, m, _| {
            last = diag(m);
            for i in 0..4 {
                sum[i] += last[i];
            }
            steps += 1;
        },
    );
    // Steps are uniform on a single segment.
    std::array::from_fn(|i| (sum[i] - 0.5 * last[i]) / steps as f64)
}

/// Real-form evolution returning the state at each of `times`.
///
/// `times` must be non-decreasing and within `[0, total_duration]`. The step
/// grid is split at every requested time, so each sample is an exact step
/// boundary rather than an interpolation.
pub fn evolve_real_sampled(
    w0: &RealStateMatrix,
    s: &Schedule,
    params: &QubitPairParams,
    dec: &DecoherenceParams,
    cfg: &IntegrationConfig,
    times: &[f64],
) -> Result<Vec<RealStateMatrix>> {
    from_real_form(w0).validate()?;
    check_config(s, params, dec, cfg)?;
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidSchedule("sample times must be sorted".into()));
    }
    if let Some(&t) = times
        .iter()
        .find(|&&t| !(0.0..=s.total_duration).contains(&t))
    {
        return Err(Error::OutOfRange {
            t,
            total: s.total_duration,
        });
    }
    let gen = Generator {
        gamma1: dec.gamma1,
        gamma2: dec.dephasing_rate(),
    };
    let init = w0.entries;
    let mut out = Vec::with_capacity(times.len());
    let mut next = 0;
    while next < times.len() && times[next] <= 1e-9 {
        out.push(*w0);
        next += 1;
    }
    let segments = split_segments(s.segments(), times);
    let last = integrate(
        &segments,
        params,
        cfg.dt,
        init,
        |h, w| gen.real(h, w, &init),
        |_, t, w, seg_end| {
            while seg_end && next < times.len() && times[next] <= t + 1e-9 {
                out.push(RealStateMatrix { entries: *w });
                next += 1;
            }
        },
    );
    while out.len() < times.len() {
        out.push(RealStateMatrix { entries: last });
    }
    Ok(out)
}

/// Populations at each of `times` starting from the thermal state at the
/// schedule baselines.
pub fn run_sampled_populations(
    s: &Schedule,
    params: &QubitPairParams,
    dec: &DecoherenceParams,
    cfg: &IntegrationConfig,
    times: &[f64],
) -> Result<Vec<[f64; 4]>> {
    let w0 = to_real_form(&thermal_initial_state(params, s.eps_u0, s.eps_l0)?);
    let ws = evolve_real_sampled(&w0, s, params, dec, cfg, times)?;
    Ok(ws
        .iter()
        .map(|w| read_populations(&w.entries, &w0.entries, s, params, dec, cfg))
        .collect())
}

/// Final populations for each width in `widths` of the schedule's
/// last-ending pulse.
///
/// `build(w)` must differ from `build(w_max)` only in the width of that pulse.
/// When the pulse has no falling edge its envelope up to any time is
/// independent of its width, so one trajectory of `build(w_max)` sampled at
/// `start + w` serves every width. Otherwise each width is run separately.
pub fn sweep_last_pulse_width<B>(
    build: B,
    widths: &[f64],
    params: &QubitPairParams,
    dec: &DecoherenceParams,
    cfg: &IntegrationConfig,
) -> Result<Vec<[f64; 4]>>
where
    B: Fn(f64) -> Result<Schedule> + Sync,
{
    if widths.is_empty() {
        return Ok(Vec::new());
    }
    let w_max = widths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s = build(w_max)?;
    let last = s.pulses.iter().max_by(|a, b| {
        (s.effective_start(a) + a.width).total_cmp(&(s.effective_start(b) + b.width))
    });
    let Some(last) = last.filter(|p| p.fall == 0.0 && p.width == w_max) else {
        return widths
            .par_iter()
            .map(|&w| run_to_populations(&build(w)?, params, dec, cfg))
            .collect();
    };
    let start = s.effective_start(last);
    let mut order: Vec<usize> = (0..widths.len()).collect();
    order.sort_by(|&a, &b| widths[a].total_cmp(&widths[b]));
    let times: Vec<f64> = order.iter().map(|&i| start + widths[i]).collect();
    let sampled = run_sampled_populations(&s, params, dec, cfg, &times)?;
    let mut out = vec![[0.0; 4]; widths.len()];
    for (k, &i) in order.iter().enumerate() {
        out[i] = sampled[k];
    }
    Ok(out)
}

/// Thermal initialization at the schedule baselines, real-form evolution,
/// and the charge-basis populations at readout.
pub fn run_to_populations(
    s: &Schedule,
    params: &QubitPairParams,
    dec: &DecoherenceParams,
    cfg: &IntegrationConfig,
) -> Result<[f64; 4]> {
    let w0 = to_real_form(&thermal_initial_state(params, s.eps_u0, s.eps_l0)?);
    let cfg = IntegrationConfig {
        record_stride: 0,
        keep_snapshots: false,
        ..*cfg
    };
    let (w, _) = evolve_real(&w0, s, params, dec, &cfg)?;
    Ok(read_populations(
        &w.entries,
        &w0.entries,
        s,
        params,
        dec,
        &cfg,
    ))
}

pub fn run_to_probabilities(
    s: &Schedule,
    params: &QubitPairParams,
    dec: &DecoherenceParams,
    cfg: &IntegrationConfig,
) -> Result<ProbabilityPair> {
    Ok(ProbabilityPair::from_populations(&run_to_populations(
        s, params, dec, cfg,
    )?))
}
