//! The quadratic jerk system `x''' = -A x'' - x ∓ x'^2` in first-order form.
//!
//! State is `(x, x', x'')`; the right-hand side returns its time derivative
//! `(x', x'', J)`. Time is dimensionless; one unit corresponds to
//! `time_scale_s` seconds of circuit time (an RC product).

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Lower edge of the chaotic window for `A` (exclusive).
pub const CHAOTIC_A_MIN: f64 = 2.0168;
/// Upper edge of the chaotic window for `A` (exclusive).
pub const CHAOTIC_A_MAX: f64 = 2.0577;

/// Default bifurcation parameter, inside the chaotic window.
pub const DEFAULT_A: f64 = 2.03;
/// `R·C` for 1 kΩ resistors and 1 µF capacitors.
pub const DEFAULT_TIME_SCALE_S: f64 = 1e-3;

/// Sign of the quadratic term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonlinearitySign {
    /// `J = -A x'' - x - x'^2`
    #[default]
    Minus,
    /// `J = -A x'' - x + x'^2`
    Plus,
}

impl NonlinearitySign {
    pub fn factor(self) -> f64 {
        match self {
            NonlinearitySign::Minus => -1.0,
            NonlinearitySign::Plus => 1.0,
        }
    }
}

impl std::fmt::Display for NonlinearitySign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NonlinearitySign::Minus => "minus",
            NonlinearitySign::Plus => "plus",
        })
    }
}

impl std::str::FromStr for NonlinearitySign {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "minus" | "-" => Ok(NonlinearitySign::Minus),
            "plus" | "+" => Ok(NonlinearitySign::Plus),
            other => Err(format!("unknown sign {other:?} (expected minus or plus)")),
        }
    }
}

/// Dimensionless model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JerkParams {
    a: f64,
    sign: NonlinearitySign,
    time_scale_s: f64,
    quadratic: bool,
}

impl JerkParams {
    pub fn new(a: f64, sign: NonlinearitySign, time_scale_s: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(domain(format!("a must be > 0 and finite (got {a})")));
        }
        if !(time_scale_s.is_finite() && time_scale_s > 0.0) {
            return Err(domain(format!(
                "time_scale_s must be > 0 and finite (got {time_scale_s})"
            )));
        }
        Ok(Self {
            a,
            sign,
            time_scale_s,
            quadratic: true,
        })
    }

    /// Parameters with the default time scale.
    pub fn with_a(a: f64, sign: NonlinearitySign) -> Result<Self> {
        Self::new(a, sign, DEFAULT_TIME_SCALE_S)
    }

    /// The same parameters with the `x'^2` term removed, leaving the linear
    /// system `x''' = -A x'' - x`. Used for closed-form solver checks.
    pub fn linearized(mut self) -> Self {
        self.quadratic = false;
        self
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn sign(&self) -> NonlinearitySign {
        self.sign
    }

    pub fn time_scale_s(&self) -> f64 {
        self.time_scale_s
    }

    pub fn is_linearized(&self) -> bool {
        !self.quadratic
    }

    /// Whether `a` lies strictly inside the chaotic window.
    pub fn in_chaotic_range(&self) -> bool {
        in_chaotic_range(self.a)
    }

    /// Converts seconds of circuit time to dimensionless time units.
    pub fn to_dimensionless(&self, seconds: f64) -> f64 {
        seconds / self.time_scale_s
    }

    /// Converts dimensionless time to seconds of circuit time.
    pub fn to_seconds(&self, t: f64) -> f64 {
        t * self.time_scale_s
    }
}

impl Default for JerkParams {
    fn default() -> Self {
        Self {
            a: DEFAULT_A,
            sign: NonlinearitySign::Minus,
            time_scale_s: DEFAULT_TIME_SCALE_S,
            quadratic: true,
        }
    }
}

/// `(x, x', x'')` at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SystemState {
    pub x: f64,
    pub xd: f64,
    pub xdd: f64,
}

impl SystemState {
    /// Default initial condition. Lies in the attractor's basin for the
    /// default parameters (`A = 2.03`, minus sign).
    pub const DEFAULT_INITIAL: SystemState = SystemState::new(0.0, 0.0, -1.0);

    pub const fn new(x: f64, xd: f64, xdd: f64) -> Self {
        Self { x, xd, xdd }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.xd.is_finite() && self.xdd.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.xd, self.xdd]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    /// `self + h * rate`, component-wise.
    #[inline]
    pub fn offset(&self, rate: &SystemState, h: f64) -> SystemState {
        SystemState::new(
            self.x + h * rate.x,
            self.xd + h * rate.xd,
            self.xdd + h * rate.xdd,
        )
    }
}

/// Time derivative of the state: `(x', x'', J)` with
/// `J = -a x'' - x + s x'^2`, `s = -1` for [`NonlinearitySign::Minus`].
pub fn jerk_rhs(state: &SystemState, params: &JerkParams) -> Result<SystemState> {
    if !state.is_finite() {
        return Err(domain(format!("non-finite state {state:?}")));
    }
    Ok(rhs_unchecked(state, params))
}

#[inline]
pub(crate) fn rhs_unchecked(state: &SystemState, params: &JerkParams) -> SystemState {
    let quadratic = if params.quadratic {
        params.sign.factor() * state.xd * state.xd
    } else {
        0.0
    };
    SystemState::new(
        state.xd,
        state.xdd,
        -params.a * state.xdd - state.x + quadratic,
    )
}

/// `true` iff `2.0168 < a < 2.0577`.
pub fn in_chaotic_range(a: f64) -> bool {
    a > CHAOTIC_A_MIN && a < CHAOTIC_A_MAX
}

/// Seconds per dimensionless time unit for an RC integrator stage.
pub fn circuit_time_scale(resistance_ohm: f64, capacitance_farad: f64) -> Result<f64> {
    if !(resistance_ohm.is_finite() && resistance_ohm > 0.0) {
        return Err(domain(format!(
            "resistance must be > 0 and finite (got {resistance_ohm})"
        )));
    }
    if !(capacitance_farad.is_finite() && capacitance_farad > 0.0) {
        return Err(domain(format!(
            "capacitance must be > 0 and finite (got {capacitance_farad})"
        )));
    }
    Ok(resistance_ohm * capacitance_farad)
}
