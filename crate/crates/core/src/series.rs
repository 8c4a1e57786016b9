//! Raw and uniformly sampled time series.

use crate::error::{domain, Error, Result};

/// Provenance of a trace.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SeriesMeta {
    /// Where the trace came from, e.g. `"computer-4"` or `"experimental"`.
    pub source_id: String,
    /// Signal label, e.g. `"xdd"` or `"V(xdd)"`.
    pub signal: String,
    /// Unit of the time axis, e.g. `"s"` or `"1"` for dimensionless.
    pub unit: String,
}

impl SeriesMeta {
    pub fn new(
        source_id: impl Into<String>,
        signal: impl Into<String>,
        unit: impl Into<String>,
    ) -> Self {
        Self {
            source_id: source_id.into(),
            signal: signal.into(),
            unit: unit.into(),
        }
    }
}

/// Read access shared by [`TimeSeries`] and [`UniformSeries`].
pub trait Samples {
    fn len(&self) -> usize;
    fn time_at(&self, k: usize) -> f64;
    fn value_at(&self, k: usize) -> f64;
    fn meta(&self) -> &SeriesMeta;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A trace on an arbitrary, strictly increasing time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    t: Vec<f64>,
    v: Vec<f64>,
    meta: SeriesMeta,
}

impl TimeSeries {
    pub fn new(t: Vec<f64>, v: Vec<f64>, meta: SeriesMeta) -> Result<Self> {
        if t.len() != v.len() {
            return Err(Error::Shape(format!(
                "{} timestamps but {} values",
                t.len(),
                v.len()
            )));
        }
        if t.len() < 2 {
            return Err(Error::InsufficientData {
                found: t.len(),
                required: 2,
            });
        }
        for (k, (&tk, &vk)) in t.iter().zip(&v).enumerate() {
            if !tk.is_finite() || !vk.is_finite() {
                return Err(domain(format!("non-finite sample at index {k}")));
            }
        }
        for (k, w) in t.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(domain(format!(
                    "time is not strictly increasing at index {}: {} after {}",
                    k + 1,
                    w[1],
                    w[0]
                )));
            }
        }
        Ok(Self { t, v, meta })
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn start(&self) -> f64 {
        self.t[0]
    }

    pub fn end(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    pub fn meta_mut(&mut self) -> &mut SeriesMeta {
        &mut self.meta
    }
}

impl Samples for TimeSeries {
    fn len(&self) -> usize {
        self.t.len()
    }

    fn time_at(&self, k: usize) -> f64 {
        self.t[k]
    }

    fn value_at(&self, k: usize) -> f64 {
        self.v[k]
    }

    fn meta(&self) -> &SeriesMeta {
        &self.meta
    }
}

/// A trace on the grid `t[k] = t0 + k·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSeries {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
    meta: SeriesMeta,
}

impl UniformSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>, meta: SeriesMeta) -> Result<Self> {
        if !t0.is_finite() {
            return Err(domain(format!("t0 must be finite (got {t0})")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(domain(format!("dt must be > 0 and finite (got {dt})")));
        }
        if values.is_empty() {
            return Err(Error::InsufficientData {
                found: 0,
                required: 1,
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(domain(format!("non-finite value at index {k}")));
        }
        Ok(Self {
            t0,
            dt,
            values,
            meta,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `t0 + k·dt`.
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    pub fn same_grid(&self, other: &UniformSeries) -> bool {
        self.t0 == other.t0 && self.dt == other.dt && self.values.len() == other.values.len()
    }

    pub fn meta_mut(&mut self) -> &mut SeriesMeta {
        &mut self.meta
    }

    pub fn with_meta(mut self, meta: SeriesMeta) -> Self {
        self.meta = meta;
        self
    }

    /// Expands the grid into an explicit [`TimeSeries`].
    pub fn to_time_series(&self) -> Result<TimeSeries> {
        let t = (0..self.values.len()).map(|k| self.time(k)).collect();
        TimeSeries::new(t, self.values.clone(), self.meta.clone())
    }
}

impl Samples for UniformSeries {
    fn len(&self) -> usize {
        self.values.len()
    }

    fn time_at(&self, k: usize) -> f64 {
        self.time(k)
    }

    fn value_at(&self, k: usize) -> f64 {
        self.values[k]
    }

    fn meta(&self) -> &SeriesMeta {
        &self.meta
    }
}
