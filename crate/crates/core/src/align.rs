//! Common-grid construction and linear resampling.
//!
//! Traces from different sources have different lengths and sample times.
//! [`build_common_grid`] picks the intersection of their time domains and
//! [`resample_linear`] maps each trace onto it, so every output has exactly
//! `n` samples and no query ever extrapolates.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::series::{Samples, TimeSeries, UniformSeries};

/// `n` equally spaced times covering `[t0, t1]`, endpoints inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommonGrid {
    pub t0: f64,
    pub t1: f64,
    pub n: usize,
}

impl CommonGrid {
    pub fn new(t0: f64, t1: f64, n: usize) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite()) || t1 <= t0 {
            return Err(domain(format!(
                "grid needs finite t1 > t0 (got [{t0}, {t1}])"
            )));
        }
        if n < 2 {
            return Err(domain(format!("grid needs at least 2 points (got {n})")));
        }
        Ok(Self { t0, t1, n })
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / (self.n - 1) as f64
    }

    /// `t0 + k·dt`, clamped to `t1` so the last point never overshoots.
    pub fn time(&self, k: usize) -> f64 {
        (self.t0 + k as f64 * self.dt()).min(self.t1)
    }
}

/// Intersection of the traces' time domains, sampled at `n` points.
pub fn build_common_grid(traces: &[&TimeSeries], n: usize) -> Result<CommonGrid> {
    if traces.is_empty() {
        return Err(Error::Empty);
    }
    if n < 2 {
        return Err(domain(format!("grid needs at least 2 points (got {n})")));
    }
    let t0 = traces
        .iter()
        .map(|s| s.start())
        .fold(f64::NEG_INFINITY, f64::max);
    let t1 = traces.iter().map(|s| s.end()).fold(f64::INFINITY, f64::min);
    if t1 <= t0 {
        return Err(Error::NoOverlap {
            domains: traces
                .iter()
                .map(|s| (s.meta().source_id.clone(), s.start(), s.end()))
                .collect(),
        });
    }
    CommonGrid::new(t0, t1, n)
}

/// Piecewise-linear value of `trace` at `t`, which must lie in its domain.
///
/// A query equal to a knot returns that knot's value exactly. Results are
/// clamped to the bracketing pair's value range.
pub fn interpolate_at(trace: &TimeSeries, t: f64) -> Option<f64> {
    let ts = trace.times();
    let vs = trace.values();
    if !(t >= trace.start() && t <= trace.end()) {
        return None;
    }
    match ts.binary_search_by(|probe| probe.total_cmp(&t)) {
        Ok(i) => Some(vs[i]),
        Err(i) => {
            // ts[i - 1] < t < ts[i]; the left knot is the anchor.
            let (ta, tb) = (ts[i - 1], ts[i]);
            let (va, vb) = (vs[i - 1], vs[i]);
            let frac = (t - ta) / (tb - ta);
            let v = va + (vb - va) * frac;
            Some(v.clamp(va.min(vb), va.max(vb)))
        }
    }
}

/// Resamples `trace` onto `grid`. Fails rather than extrapolate.
pub fn resample_linear(trace: &TimeSeries, grid: &CommonGrid) -> Result<UniformSeries> {
    if grid.t0 < trace.start() || grid.t1 > trace.end() {
        return Err(Error::Extrapolation {
            source_id: trace.meta().source_id.clone(),
            grid_start: grid.t0,
            grid_end: grid.t1,
            trace_start: trace.start(),
            trace_end: trace.end(),
        });
    }
    let values = (0..grid.n)
        .map(|k| interpolate_at(trace, grid.time(k)).expect("grid lies inside trace domain"))
        .collect();
    UniformSeries::new(grid.t0, grid.dt(), values, trace.meta().clone())
}
