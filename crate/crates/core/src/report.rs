//! Comparison reports: every candidate trace scored against one measured
//! trace on a shared grid.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::align::{build_common_grid, resample_linear, CommonGrid};
use crate::error::{domain, Result};
use crate::metrics::{
    cumulative_nrmse_with, horizon_from_windows, select_reference, NrmseVariant, PredictionHorizon,
    WindowedNrmse, DEFAULT_THRESHOLD, DEFAULT_WINDOWS,
};
use crate::series::{Samples, TimeSeries, UniformSeries};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    pub grid_points: usize,
    pub windows: usize,
    pub threshold: f64,
    pub variant: NrmseVariant,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            grid_points: 4700,
            windows: DEFAULT_WINDOWS,
            threshold: DEFAULT_THRESHOLD,
            variant: NrmseVariant::SimulatedMean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateScore {
    pub id: String,
    pub full_nrmse: f64,
    pub windowed: WindowedNrmse,
    pub horizon: PredictionHorizon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonReport {
    pub grid: CommonGrid,
    pub measured_id: String,
    pub variant: NrmseVariant,
    pub windows: usize,
    pub threshold: f64,
    /// Candidate with the smallest full NRMSE.
    pub reference_id: String,
    pub candidates: Vec<CandidateScore>,
}

/// Measured and candidate traces resampled onto one grid.
#[derive(Debug, Clone)]
pub struct AlignedSet {
    pub grid: CommonGrid,
    pub measured: UniformSeries,
    pub candidates: Vec<(String, UniformSeries)>,
}

/// Builds the common grid over all traces and resamples each onto it.
pub fn align_traces(
    measured: &TimeSeries,
    candidates: &[(String, TimeSeries)],
    grid_points: usize,
) -> Result<AlignedSet> {
    let mut all: Vec<&TimeSeries> = vec![measured];
    all.extend(candidates.iter().map(|(_, s)| s));
    let grid = build_common_grid(&all, grid_points)?;
    let measured = resample_linear(measured, &grid)?;
    let candidates = candidates
        .iter()
        .map(|(id, s)| Ok((id.clone(), resample_linear(s, &grid)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AlignedSet {
        grid,
        measured,
        candidates,
    })
}

/// Scores every aligned candidate and selects the reference.
pub fn score_aligned(set: &AlignedSet, options: &CompareOptions) -> Result<ComparisonReport> {
    if set.candidates.is_empty() {
        return Err(crate::Error::Empty);
    }
    let mut seen = BTreeMap::new();
    let mut candidates = Vec::with_capacity(set.candidates.len());
    for (id, series) in &set.candidates {
        let windowed =
            cumulative_nrmse_with(&set.measured, series, options.windows, options.variant)?;
        let full_nrmse = windowed.last_score();
        let horizon = horizon_from_windows(
            &windowed,
            set.measured.t0(),
            set.measured.dt(),
            options.threshold,
        )?;
        if seen.insert(id.clone(), full_nrmse).is_some() {
            return Err(domain(format!("duplicate candidate id {id:?}")));
        }
        candidates.push(CandidateScore {
            id: id.clone(),
            full_nrmse,
            windowed,
            horizon,
        });
    }
    Ok(ComparisonReport {
        grid: set.grid,
        measured_id: set.measured.meta().source_id.clone(),
        variant: options.variant,
        windows: options.windows,
        threshold: options.threshold,
        reference_id: select_reference(&seen)?,
        candidates,
    })
}

/// [`align_traces`] followed by [`score_aligned`].
pub fn compare(
    measured: &TimeSeries,
    candidates: &[(String, TimeSeries)],
    options: &CompareOptions,
) -> Result<ComparisonReport> {
    let set = align_traces(measured, candidates, options.grid_points)?;
    score_aligned(&set, options)
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// One row per prefix: `prefix_end,<candidate ids...>`.
    pub fn windows_csv(&self) -> String {
        let mut out = String::from("prefix_end");
        for c in &self.candidates {
            out.push(',');
            out.push_str(&c.id);
        }
        out.push('\n');
        let Some(first) = self.candidates.first() else {
            return out;
        };
        for (j, end) in first.windowed.boundaries.iter().enumerate() {
            let _ = write!(out, "{end}");
            for c in &self.candidates {
                let _ = write!(out, ",{}", c.windowed.scores[j]);
            }
            out.push('\n');
        }
        out
    }

    /// Candidate with the longest horizon; ties go to the smallest id.
    pub fn horizon_winner(&self) -> Option<&CandidateScore> {
        let mut best: Option<&CandidateScore> = None;
        for c in &self.candidates {
            best = match best {
                None => Some(c),
                Some(b) if c.horizon.span > b.horizon.span => Some(c),
                Some(b) if c.horizon.span == b.horizon.span && c.id < b.id => Some(c),
                keep => keep,
            };
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::nrmse;
    use crate::series::SeriesMeta;

    fn trace(id: &str, t: Vec<f64>, f: impl Fn(f64) -> f64) -> TimeSeries {
        let v = t.iter().map(|&x| f(x)).collect();
        TimeSeries::new(t, v, SeriesMeta::new(id, "v", "s")).unwrap()
    }

    fn grid(n: usize, end: f64) -> Vec<f64> {
        (0..n).map(|k| end * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn end_to_end_matches_composed_operations() {
        let measured = trace("measured", grid(300, 1.0), |t| (6.0 * t).sin());
        let candidates = vec![
            (
                "b".to_string(),
                trace("b", grid(257, 1.1), |t| (6.0 * t).sin() + 0.1 * t),
            ),
            (
                "a".to_string(),
                trace("a", grid(411, 1.0), |t| (6.1 * t).sin()),
            ),
        ];
        let opts = CompareOptions {
            grid_points: 200,
            windows: 4,
            ..Default::default()
        };
        let report = compare(&measured, &candidates, &opts).unwrap();

        let g = build_common_grid(&[&measured, &candidates[0].1, &candidates[1].1], 200).unwrap();
        assert_eq!(report.grid, g);
        let m = resample_linear(&measured, &g).unwrap();
        let mut best = (String::new(), f64::INFINITY);
        for (c, (id, s)) in report.candidates.iter().zip(&candidates) {
            assert_eq!(&c.id, id);
            let r = resample_linear(s, &g).unwrap();
            let full = nrmse(&m, &r).unwrap();
            assert_eq!(c.full_nrmse.to_bits(), full.to_bits());
            assert_eq!(c.windowed.boundaries, vec![50, 100, 150, 200]);
            if full < best.1 {
                best = (id.clone(), full);
            }
        }
        assert_eq!(report.reference_id, best.0);
        assert_eq!(report.measured_id, "measured");
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let measured = trace("m", grid(100, 2.0), |t| t.cos());
        let candidates = vec![(
            "c1".to_string(),
            trace("c1", grid(90, 2.0), |t| t.cos() + 0.01),
        )];
        let report = compare(
            &measured,
            &candidates,
            &CompareOptions {
                grid_points: 50,
                windows: 5,
                ..Default::default()
            },
        )
        .unwrap();
        let json = report.to_json();
        let back = ComparisonReport::from_json(&json).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.to_json(), json);
        assert!(ComparisonReport::from_json(&json.replace("\"threshold\"", "\"bogus\"")).is_err());
    }

    #[test]
    fn windows_csv_shape() {
        let measured = trace("m", grid(100, 2.0), |t| t.cos());
        let candidates = vec![
            (
                "x".to_string(),
                trace("x", grid(90, 2.0), |t| t.cos() + 0.01),
            ),
            (
                "y".to_string(),
                trace("y", grid(90, 2.0), |t| t.cos() * 1.1),
            ),
        ];
        let report = compare(
            &measured,
            &candidates,
            &CompareOptions {
                grid_points: 40,
                windows: 4,
                ..Default::default()
            },
        )
        .unwrap();
        let csv = report.windows_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "prefix_end,x,y");
        assert_eq!(lines.len(), 5);
        let last: Vec<f64> = lines[4].split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(last[0], 40.0);
        assert_eq!(last[1].to_bits(), report.candidates[0].full_nrmse.to_bits());
        assert_eq!(last[2].to_bits(), report.candidates[1].full_nrmse.to_bits());
    }

    #[test]
    fn duplicate_ids_and_empty_rejected() {
        let measured = trace("m", grid(20, 1.0), |t| t * t);
        let c = trace("c", grid(20, 1.0), |t| t);
        let dup = vec![("c".to_string(), c.clone()), ("c".to_string(), c)];
        assert!(compare(
            &measured,
            &dup,
            &CompareOptions {
                grid_points: 10,
                windows: 2,
                ..Default::default()
            }
        )
        .is_err());
        assert!(compare(&measured, &[], &CompareOptions::default()).is_err());
    }
}
