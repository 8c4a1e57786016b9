//! Deterministic integration of the jerk system.
//!
//! Fixed-step methods (Euler, classical RK4) advance on the step grid
//! `t_start + i·h` and reach each output time with one partial step from the
//! last grid point, so the output grid does not need to align with `h`.
//! RK45 is Dormand–Prince 5(4) with linear interpolation onto the output grid.
//!
//! All loops are sequential with a fixed evaluation order; identical inputs
//! give bit-identical outputs.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::jerk::{rhs_unchecked, JerkParams, SystemState};
use crate::series::{SeriesMeta, UniformSeries};

/// Default fixed step, in dimensionless time units.
pub const DEFAULT_STEP: f64 = 1e-3;

/// Step-size controller safety factor for RK45.
pub const RK45_SAFETY: f64 = 0.9;
const RK45_MIN_FACTOR: f64 = 0.2;
const RK45_MAX_FACTOR: f64 = 5.0;

/// Upper bound on fixed steps per run.
const MAX_FIXED_STEPS: f64 = 1e11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euler,
    #[default]
    Rk4,
    Rk45,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(Method::Euler),
            "rk4" => Ok(Method::Rk4),
            "rk45" | "dopri5" => Ok(Method::Rk45),
            other => Err(format!(
                "unknown method {other:?} (expected euler, rk4 or rk45)"
            )),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Euler => "euler",
            Method::Rk4 => "rk4",
            Method::Rk45 => "rk45",
        })
    }
}

/// State component selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signal {
    X,
    Xd,
    #[default]
    Xdd,
}

impl Signal {
    pub fn name(self) -> &'static str {
        match self {
            Signal::X => "x",
            Signal::Xd => "xd",
            Signal::Xdd => "xdd",
        }
    }
}

impl std::str::FromStr for Signal {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Signal::X),
            "xd" => Ok(Signal::Xd),
            "xdd" => Ok(Signal::Xdd),
            other => Err(format!("unknown signal {other:?} (expected x, xd or xdd)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub t_start: f64,
    pub t_end: f64,
    /// Fixed step for Euler/RK4; initial step for RK45.
    pub step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_state: SystemState,
    pub output_points: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            t_start: 0.0,
            t_end: 100.0,
            step: DEFAULT_STEP,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            initial_state: SystemState::DEFAULT_INITIAL,
            output_points: 4700,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_start.is_finite() && self.t_end.is_finite()) {
            return Err(domain("t_start and t_end must be finite"));
        }
        if self.t_end <= self.t_start {
            return Err(domain(format!(
                "t_end must be > t_start (got {} <= {})",
                self.t_end, self.t_start
            )));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(domain(format!("step must be > 0 (got {})", self.step)));
        }
        if self.method != Method::Rk45 && (self.t_end - self.t_start) / self.step > MAX_FIXED_STEPS
        {
            return Err(domain(format!(
                "step {} is too small for span {}",
                self.step,
                self.t_end - self.t_start
            )));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return Err(domain(format!(
                "rel_tol must be > 0 (got {})",
                self.rel_tol
            )));
        }
        if !(self.abs_tol.is_finite() && self.abs_tol > 0.0) {
            return Err(domain(format!(
                "abs_tol must be > 0 (got {})",
                self.abs_tol
            )));
        }
        if !self.initial_state.is_finite() {
            return Err(domain("initial state must be finite"));
        }
        if self.output_points < 2 {
            return Err(domain(format!(
                "output_points must be >= 2 (got {})",
                self.output_points
            )));
        }
        Ok(())
    }

    /// Spacing of the output grid.
    pub fn output_dt(&self) -> f64 {
        (self.t_end - self.t_start) / (self.output_points - 1) as f64
    }

    /// Output time `k`, always `t_start + k·dt`.
    pub fn output_time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.output_dt()
    }
}

/// The three state components sampled on one uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub x: UniformSeries,
    pub xd: UniformSeries,
    pub xdd: UniformSeries,
}

impl Trajectory {
    pub fn channel(&self, signal: Signal) -> &UniformSeries {
        match signal {
            Signal::X => &self.x,
            Signal::Xd => &self.xd,
            Signal::Xdd => &self.xdd,
        }
    }

    pub fn into_channel(self, signal: Signal) -> UniformSeries {
        match signal {
            Signal::X => self.x,
            Signal::Xd => self.xd,
            Signal::Xdd => self.xdd,
        }
    }

    pub fn len(&self) -> usize {
        self.x.values().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn state(&self, k: usize) -> SystemState {
        SystemState::new(
            self.x.values()[k],
            self.xd.values()[k],
            self.xdd.values()[k],
        )
    }
}

fn check_step_args(state: &SystemState, h: f64) -> Result<()> {
    if !(h.is_finite() && h > 0.0) {
        return Err(domain(format!("step must be > 0 and finite (got {h})")));
    }
    if !state.is_finite() {
        return Err(domain(format!("non-finite state {state:?}")));
    }
    Ok(())
}

fn finite_or_overflow(next: SystemState, t_from: f64, t_to: f64) -> Result<SystemState> {
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::Overflow {
            last_valid_time: t_from,
            failed_time: t_to,
        })
    }
}

#[inline]
fn euler_raw(s: &SystemState, h: f64, p: &JerkParams) -> SystemState {
    s.offset(&rhs_unchecked(s, p), h)
}

/// Classical RK4. Stage order: `k1 = f(s)`, `k2 = f(s + h/2·k1)`,
/// `k3 = f(s + h/2·k2)`, `k4 = f(s + h·k3)`, then
/// `s + h/6·(((k1 + 2k2) + 2k3) + k4)` component-wise.
#[inline]
fn rk4_raw(s: &SystemState, h: f64, p: &JerkParams) -> SystemState {
    let half = 0.5 * h;
    let k1 = rhs_unchecked(s, p);
    let k2 = rhs_unchecked(&s.offset(&k1, half), p);
    let k3 = rhs_unchecked(&s.offset(&k2, half), p);
    let k4 = rhs_unchecked(&s.offset(&k3, h), p);
    let sixth = h / 6.0;
    let comb = |a: f64, b: f64, c: f64, d: f64| a + 2.0 * b + 2.0 * c + d;
    SystemState::new(
        s.x + sixth * comb(k1.x, k2.x, k3.x, k4.x),
        s.xd + sixth * comb(k1.xd, k2.xd, k3.xd, k4.xd),
        s.xdd + sixth * comb(k1.xdd, k2.xdd, k3.xdd, k4.xdd),
    )
}

/// One explicit Euler step. Overflow times are relative to the step start.
pub fn euler_step(state: &SystemState, h: f64, params: &JerkParams) -> Result<SystemState> {
    check_step_args(state, h)?;
    finite_or_overflow(euler_raw(state, h, params), 0.0, h)
}

/// One classical RK4 step. Overflow times are relative to the step start.
pub fn rk4_step(state: &SystemState, h: f64, params: &JerkParams) -> Result<SystemState> {
    check_step_args(state, h)?;
    finite_or_overflow(rk4_raw(state, h, params), 0.0, h)
}

/// Integrates `params` under `config` and samples all three components on
/// `config.output_points` equally spaced times covering `[t_start, t_end]`.
pub fn simulate(config: &IntegratorConfig, params: &JerkParams) -> Result<Trajectory> {
    config.validate()?;
    let n = config.output_points;
    let mut states = Vec::with_capacity(n);
    match config.method {
        Method::Euler => fixed_step(config, params, euler_raw, &mut states)?,
        Method::Rk4 => fixed_step(config, params, rk4_raw, &mut states)?,
        Method::Rk45 => dormand_prince(config, params, &mut states)?,
    }
    debug_assert_eq!(states.len(), n);

    let dt = config.output_dt();
    let channel = |name: &str, pick: fn(&SystemState) -> f64| {
        UniformSeries::new(
            config.t_start,
            dt,
            states.iter().map(pick).collect(),
            SeriesMeta::new(format!("simulation-{}", config.method), name, "1"),
        )
    };
    Ok(Trajectory {
        x: channel("x", |s| s.x)?,
        xd: channel("xd", |s| s.xd)?,
        xdd: channel("xdd", |s| s.xdd)?,
    })
}

fn fixed_step(
    config: &IntegratorConfig,
    params: &JerkParams,
    step: fn(&SystemState, f64, &JerkParams) -> SystemState,
    out: &mut Vec<SystemState>,
) -> Result<()> {
    let h = config.step;
    let t0 = config.t_start;
    let grid_time = |i: u64| t0 + i as f64 * h;

    let mut state = config.initial_state;
    let mut i: u64 = 0;
    for k in 0..config.output_points {
        let target = config.output_time(k);
        while grid_time(i + 1) <= target {
            let next = step(&state, h, params);
            state = finite_or_overflow(next, grid_time(i), grid_time(i + 1))?;
            i += 1;
        }
        let remainder = target - grid_time(i);
        if remainder > 0.0 {
            let partial = step(&state, remainder, params);
            out.push(finite_or_overflow(partial, grid_time(i), target)?);
        } else {
            out.push(state);
        }
    }
    Ok(())
}

// Dormand–Prince 5(4) tableau. The system is autonomous, so the time nodes
// c2..c5 are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Error coefficients: fifth-order minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combine(s: [f64; 3], h: f64, terms: &[(f64, [f64; 3])]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (w, k) in terms {
            acc += w * k[j];
        }
        *o = s[j] + h * acc;
    }
    out
}

/// One Dormand–Prince trial step. Returns the fifth-order solution and the
/// scaled error norm (accept when <= 1).
fn dopri_trial(
    s: &SystemState,
    h: f64,
    p: &JerkParams,
    rel_tol: f64,
    abs_tol: f64,
) -> (SystemState, f64) {
    let f = |v: [f64; 3]| rhs_unchecked(&SystemState::from_array(v), p).to_array();
    let y = s.to_array();
    let k1 = f(y);
    let k2 = f(combine(y, h, &[(A21, k1)]));
    let k3 = f(combine(y, h, &[(A31, k1), (A32, k2)]));
    let k4 = f(combine(y, h, &[(A41, k1), (A42, k2), (A43, k3)]));
    let k5 = f(combine(y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]));
    let k6 = f(combine(
        y,
        h,
        &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)],
    ));
    let y5 = combine(y, h, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
    let k7 = f(y5);
    let err = combine(
        [0.0; 3],
        h,
        &[(E1, k1), (E3, k3), (E4, k4), (E5, k5), (E6, k6), (E7, k7)],
    );
    let mut norm: f64 = 0.0;
    for j in 0..3 {
        let scale = abs_tol + rel_tol * y[j].abs().max(y5[j].abs());
        norm = norm.max((err[j] / scale).abs());
    }
    if norm.is_nan() {
        norm = f64::INFINITY;
    }
    (SystemState::from_array(y5), norm)
}

fn dormand_prince(
    config: &IntegratorConfig,
    params: &JerkParams,
    out: &mut Vec<SystemState>,
) -> Result<()> {
    let n = config.output_points;
    let mut t = config.t_start;
    let mut state = config.initial_state;
    let mut h = config.step.min(config.t_end - config.t_start);
    let mut k = 0;

    out.push(state);
    k += 1;

    while k < n {
        let remaining = config.t_end - t;
        let last = h >= remaining;
        let h_try = if last { remaining } else { h };
        if h_try <= f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepUnderflow {
                time: t,
                step: h_try,
            });
        }
        let (next, err) = dopri_trial(&state, h_try, params, config.rel_tol, config.abs_tol);
        if err <= 1.0 && next.is_finite() {
            let t_next = if last { config.t_end } else { t + h_try };
            // Linear interpolation onto every output time in (t, t_next].
            while k < n {
                let target = config.output_time(k);
                // On the final step every remaining time is flushed; the last
                // output time may exceed t_end by rounding.
                if target > t_next && !last {
                    break;
                }
                let frac = ((target - t) / (t_next - t)).clamp(0.0, 1.0);
                out.push(SystemState::new(
                    state.x + (next.x - state.x) * frac,
                    state.xd + (next.xd - state.xd) * frac,
                    state.xdd + (next.xdd - state.xdd) * frac,
                ));
                k += 1;
            }
            t = t_next;
            state = next;
            let factor = if err == 0.0 {
                RK45_MAX_FACTOR
            } else {
                (RK45_SAFETY * err.powf(-0.2)).clamp(RK45_MIN_FACTOR, RK45_MAX_FACTOR)
            };
            h = h_try * factor;
        } else {
            if !err.is_finite() && h_try <= f64::EPSILON * t.abs().max(1.0) * 16.0 {
                return Err(Error::Overflow {
                    last_valid_time: t,
                    failed_time: t + h_try,
                });
            }
            let factor = if err.is_finite() {
                (RK45_SAFETY * err.powf(-0.2)).clamp(RK45_MIN_FACTOR, 1.0)
            } else {
                RK45_MIN_FACTOR
            };
            h = h_try * factor;
        }
    }
    Ok(())
}
