//! Trace scoring: NRMSE (full and cumulative prefixes), reference selection,
//! prediction horizon and trajectory divergence rate.
//!
//! NRMSE is
//!
//! ```text
//! sqrt(Σ (y_k - ŷ_k)²) / sqrt(Σ (y_k - ȳ)²)
//! ```
//!
//! with `y` the measured trace and `ŷ` the simulated one. By default `ȳ` is
//! the mean of the *simulated* trace ([`NrmseVariant::SimulatedMean`]);
//! [`NrmseVariant::MeasuredMean`] gives the conventional form.
//!
//! All sums are Neumaier-compensated and accumulated in index order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::integrate::Trajectory;
use crate::series::UniformSeries;
use crate::sum::{self, NeumaierSum};

/// Default horizon threshold: the score of a constant mean predictor.
pub const DEFAULT_THRESHOLD: f64 = 1.0;
/// Default number of cumulative windows.
pub const DEFAULT_WINDOWS: usize = 10;

/// Which mean normalises the NRMSE denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NrmseVariant {
    /// `ȳ = mean(simulated)`.
    #[default]
    SimulatedMean,
    /// `ȳ = mean(measured)`.
    MeasuredMean,
}

impl std::str::FromStr for NrmseVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "simulated-mean" | "simulated" => Ok(NrmseVariant::SimulatedMean),
            "measured-mean" | "measured" | "conventional" => Ok(NrmseVariant::MeasuredMean),
            other => Err(format!(
                "unknown NRMSE variant {other:?} (expected simulated-mean or measured-mean)"
            )),
        }
    }
}

/// NRMSE of growing prefixes `1..=boundaries[j]` (1-based end indices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedNrmse {
    pub boundaries: Vec<usize>,
    pub scores: Vec<f64>,
}

impl WindowedNrmse {
    pub fn last_score(&self) -> f64 {
        *self.scores.last().expect("at least one window")
    }
}

/// NRMSE on raw slices; the core every other score goes through.
pub fn nrmse_slices(measured: &[f64], simulated: &[f64], variant: NrmseVariant) -> Result<f64> {
    if measured.len() != simulated.len() {
        return Err(Error::Shape(format!(
            "measured has {} samples, simulated has {}",
            measured.len(),
            simulated.len()
        )));
    }
    if measured.len() < 2 {
        return Err(Error::InsufficientData {
            found: measured.len(),
            required: 2,
        });
    }
    let center = match variant {
        NrmseVariant::SimulatedMean => sum::mean(simulated),
        NrmseVariant::MeasuredMean => sum::mean(measured),
    };
    let mut residual = NeumaierSum::new();
    let mut deviation = NeumaierSum::new();
    for (&y, &y_hat) in measured.iter().zip(simulated) {
        let e = y - y_hat;
        residual.add(e * e);
        let d = y - center;
        deviation.add(d * d);
    }
    let denominator = deviation.total();
    if denominator.is_nan() || denominator <= 0.0 {
        return Err(Error::DegenerateDenominator {
            prefix_end: measured.len(),
        });
    }
    Ok(residual.total().max(0.0).sqrt() / denominator.sqrt())
}

fn check_grids(a: &UniformSeries, b: &UniformSeries) -> Result<()> {
    if a.values().len() != b.values().len() {
        return Err(Error::Shape(format!(
            "series lengths differ: {} vs {}",
            a.values().len(),
            b.values().len()
        )));
    }
    if !a.same_grid(b) {
        return Err(Error::Shape(format!(
            "series grids differ: t0 {} / dt {} vs t0 {} / dt {}",
            a.t0(),
            a.dt(),
            b.t0(),
            b.dt()
        )));
    }
    Ok(())
}

/// Full-series NRMSE with the default ([`NrmseVariant::SimulatedMean`]) normalisation.
pub fn nrmse(measured: &UniformSeries, simulated: &UniformSeries) -> Result<f64> {
    nrmse_with(measured, simulated, NrmseVariant::default())
}

pub fn nrmse_with(
    measured: &UniformSeries,
    simulated: &UniformSeries,
    variant: NrmseVariant,
) -> Result<f64> {
    check_grids(measured, simulated)?;
    nrmse_slices(measured.values(), simulated.values(), variant)
}

/// End indices `round(j·n / windows)` for `j = 1..=windows`, half rounded up.
pub fn window_boundaries(n: usize, windows: usize) -> Result<Vec<usize>> {
    if windows == 0 || windows > n {
        return Err(domain(format!(
            "number of windows must be in 1..={n} (got {windows})"
        )));
    }
    let (n, w) = (n as u128, windows as u128);
    Ok((1..=w)
        .map(|j| ((2 * j * n + w) / (2 * w)) as usize)
        .collect())
}

pub fn cumulative_nrmse_slices(
    measured: &[f64],
    simulated: &[f64],
    windows: usize,
    variant: NrmseVariant,
) -> Result<WindowedNrmse> {
    if measured.len() != simulated.len() {
        return Err(Error::Shape(format!(
            "measured has {} samples, simulated has {}",
            measured.len(),
            simulated.len()
        )));
    }
    let boundaries = window_boundaries(measured.len(), windows)?;
    let scores = boundaries
        .iter()
        .map(|&end| nrmse_slices(&measured[..end], &simulated[..end], variant))
        .collect::<Result<Vec<_>>>()?;
    Ok(WindowedNrmse { boundaries, scores })
}

/// NRMSE over prefixes ending at each window boundary, with the mean
/// recomputed per prefix. The last score is the full-series NRMSE.
pub fn cumulative_nrmse(
    measured: &UniformSeries,
    simulated: &UniformSeries,
    windows: usize,
) -> Result<WindowedNrmse> {
    cumulative_nrmse_with(measured, simulated, windows, NrmseVariant::default())
}

pub fn cumulative_nrmse_with(
    measured: &UniformSeries,
    simulated: &UniformSeries,
    windows: usize,
    variant: NrmseVariant,
) -> Result<WindowedNrmse> {
    check_grids(measured, simulated)?;
    cumulative_nrmse_slices(measured.values(), simulated.values(), windows, variant)
}

/// Id with the smallest score; ties go to the lexicographically smallest id.
pub fn select_reference(scores: &BTreeMap<String, f64>) -> Result<String> {
    let mut best: Option<(&String, f64)> = None;
    for (id, &score) in scores {
        if !score.is_finite() {
            return Err(domain(format!("score for {id:?} is not finite ({score})")));
        }
        // BTreeMap iterates in ascending key order, so strict `<` keeps the
        // smallest id among equal scores.
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((id, score));
        }
    }
    best.map(|(id, _)| id.clone()).ok_or(Error::Empty)
}

/// How long a simulation stays within an NRMSE threshold of the reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionHorizon {
    /// Grid time at the end of the last prefix before the first exceedance
    /// (the grid start if the first prefix already exceeds).
    pub time: f64,
    /// `time` measured from the grid start.
    pub span: f64,
    /// Number of leading prefixes within the threshold.
    pub windows_within: usize,
    /// Whether any prefix exceeded the threshold.
    pub exceeded: bool,
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(domain(format!("threshold must be > 0 (got {threshold})")));
    }
    Ok(())
}

/// Horizon from precomputed cumulative scores on a grid starting at `t0`
/// with spacing `dt`.
pub fn horizon_from_windows(
    windowed: &WindowedNrmse,
    t0: f64,
    dt: f64,
    threshold: f64,
) -> Result<PredictionHorizon> {
    check_threshold(threshold)?;
    let within = windowed
        .scores
        .iter()
        .take_while(|&&s| s <= threshold)
        .count();
    let exceeded = within < windowed.scores.len();
    let span = match within {
        0 => 0.0,
        j => (windowed.boundaries[j - 1] - 1) as f64 * dt,
    };
    Ok(PredictionHorizon {
        time: t0 + span,
        span,
        windows_within: within,
        exceeded,
    })
}

/// Prediction horizon of `simulated` against `measured`: the end of the last
/// cumulative prefix before the score first rises above `threshold`.
pub fn prediction_horizon(
    measured: &UniformSeries,
    simulated: &UniformSeries,
    threshold: f64,
    windows: usize,
) -> Result<PredictionHorizon> {
    check_threshold(threshold)?;
    let windowed = cumulative_nrmse(measured, simulated, windows)?;
    horizon_from_windows(&windowed, measured.t0(), measured.dt(), threshold)
}

/// Least-squares slope of `ys` against `ts`.
fn least_squares_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let t_mean = sum::mean(ts);
    let y_mean = sum::mean(ys);
    let mut sxy = NeumaierSum::new();
    let mut sxx = NeumaierSum::new();
    for (&t, &y) in ts.iter().zip(ys) {
        let dt = t - t_mean;
        sxy.add(dt * (y - y_mean));
        sxx.add(dt * dt);
    }
    sxy.total() / sxx.total()
}

fn check_fit_range(len: usize, fit_start: usize, fit_end: usize) -> Result<()> {
    if fit_end >= len {
        return Err(domain(format!(
            "fit range end {fit_end} is outside the series (length {len})"
        )));
    }
    if fit_end < fit_start + 2 {
        return Err(domain(format!(
            "fit range [{fit_start}, {fit_end}] is too short: need fit_end > fit_start + 1"
        )));
    }
    Ok(())
}

fn log_separation_slope(
    t0: f64,
    dt: f64,
    fit_start: usize,
    fit_end: usize,
    separation: impl Fn(usize) -> f64,
) -> Result<f64> {
    let mut ts = Vec::with_capacity(fit_end - fit_start + 1);
    let mut logs = Vec::with_capacity(fit_end - fit_start + 1);
    for k in fit_start..=fit_end {
        let d = separation(k);
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::DegenerateSeparation { index: k });
        }
        ts.push(t0 + k as f64 * dt);
        logs.push(d.ln());
    }
    Ok(least_squares_slope(&ts, &logs))
}

/// Finite-time separation rate between two trajectories on one grid: the
/// least-squares slope of `ln |a_k - b_k|` against `t_k` for `k` in
/// `fit_start..=fit_end` (0-based, inclusive).
///
/// A positive value over the exponential-growth phase of two nearby runs
/// estimates the largest Lyapunov exponent.
pub fn divergence_rate(
    a: &UniformSeries,
    b: &UniformSeries,
    fit_start: usize,
    fit_end: usize,
) -> Result<f64> {
    check_grids(a, b)?;
    check_fit_range(a.values().len(), fit_start, fit_end)?;
    let (av, bv) = (a.values(), b.values());
    log_separation_slope(a.t0(), a.dt(), fit_start, fit_end, |k| {
        (av[k] - bv[k]).abs()
    })
}

/// As [`divergence_rate`], with the Euclidean distance between full states
/// `(x, x', x'')` as the separation.
pub fn trajectory_divergence_rate(
    a: &Trajectory,
    b: &Trajectory,
    fit_start: usize,
    fit_end: usize,
) -> Result<f64> {
    for (ca, cb) in [(&a.x, &b.x), (&a.xd, &b.xd), (&a.xdd, &b.xdd)] {
        check_grids(ca, cb)?;
    }
    check_fit_range(a.len(), fit_start, fit_end)?;
    log_separation_slope(a.x.t0(), a.x.dt(), fit_start, fit_end, |k| {
        let (sa, sb) = (a.state(k), b.state(k));
        let (dx, dxd, dxdd) = (sa.x - sb.x, sa.xd - sb.xd, sa.xdd - sb.xdd);
        (dx * dx + dxd * dxd + dxdd * dxdd).sqrt()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::SeriesMeta;
    use proptest::prelude::*;

    fn us(v: &[f64]) -> UniformSeries {
        UniformSeries::new(0.0, 1.0, v.to_vec(), SeriesMeta::default()).unwrap()
    }

    /// Plain two-pass oracle, no compensation, written independently.
    fn naive_nrmse(y: &[f64], y_hat: &[f64]) -> f64 {
        let n = y_hat.len() as f64;
        let mean = y_hat.iter().sum::<f64>() / n;
        let num: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = y.iter().map(|a| (a - mean).powi(2)).sum();
        num.sqrt() / den.sqrt()
    }

    #[test]
    fn hand_cases() {
        assert_eq!(
            nrmse(&us(&[1.0, 2.0, 3.0]), &us(&[1.0, 2.0, 3.0])).unwrap(),
            0.0
        );
        let v = nrmse(&us(&[0.0, 1.0]), &us(&[1.0, 0.0])).unwrap();
        assert!((v - 2.0).abs() < 1e-12, "{v}");
        let v = nrmse(&us(&[1.0, 2.0, 3.0]), &us(&[2.0, 2.0, 2.0])).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn variants_differ_when_means_differ() {
        // y = [0, 2], ŷ = [1, 1]: residual sqrt(2); about mean(ŷ) = 1 the
        // deviation is sqrt(2), about mean(y) = 1 also sqrt(2).
        let y = us(&[0.0, 2.0]);
        let y_hat = us(&[1.0, 1.0]);
        assert_eq!(
            nrmse_with(&y, &y_hat, NrmseVariant::MeasuredMean).unwrap(),
            1.0
        );
        // ŷ = [2, 2]: residual sqrt(4 + 0) = 2; deviation about 2 is 2,
        // about mean(y) = 1 is sqrt(2).
        let y_hat = us(&[2.0, 2.0]);
        assert!((nrmse_with(&y, &y_hat, NrmseVariant::SimulatedMean).unwrap() - 1.0).abs() < 1e-15);
        assert!(
            (nrmse_with(&y, &y_hat, NrmseVariant::MeasuredMean).unwrap() - 2f64.sqrt()).abs()
                < 1e-15
        );
    }

    #[test]
    fn errors() {
        assert!(matches!(
            nrmse(&us(&[1.0, 2.0]), &us(&[1.0, 2.0, 3.0])),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            nrmse(&us(&[1.0, 1.0]), &us(&[1.0, 1.0])),
            Err(Error::DegenerateDenominator { prefix_end: 2 })
        ));
        assert!(matches!(
            nrmse(&us(&[1.0]), &us(&[1.0])),
            Err(Error::InsufficientData { .. })
        ));
        let shifted = UniformSeries::new(0.5, 1.0, vec![1.0, 2.0], SeriesMeta::default()).unwrap();
        assert!(matches!(
            nrmse(&us(&[1.0, 2.0]), &shifted),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn boundaries() {
        let b = window_boundaries(4700, 10).unwrap();
        assert_eq!(b, (1..=10).map(|j| 470 * j).collect::<Vec<_>>());
        assert_eq!(window_boundaries(10, 3).unwrap(), vec![3, 7, 10]);
        assert_eq!(window_boundaries(5, 5).unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(window_boundaries(7, 1).unwrap(), vec![7]);
        assert!(window_boundaries(3, 4).is_err());
        assert!(window_boundaries(3, 0).is_err());
    }

    #[test]
    fn cumulative_hand_case() {
        let w =
            cumulative_nrmse(&us(&[0.0, 1.0, 0.0, 1.0]), &us(&[0.0, 1.0, 1.0, 1.0]), 2).unwrap();
        assert_eq!(w.boundaries, vec![2, 4]);
        assert_eq!(w.scores[0], 0.0);
        assert!((w.scores[1] - 1.0 / 1.25f64.sqrt()).abs() < 1e-12);
        assert!((w.scores[1] - 0.894_427_190_999_915_9).abs() < 1e-12);
    }

    #[test]
    fn cumulative_identical_is_zero() {
        let v: Vec<f64> = (0..50).map(|k| (k as f64 * 0.3).sin()).collect();
        let w = cumulative_nrmse(&us(&v), &us(&v), 7).unwrap();
        assert!(w.scores.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn cumulative_degenerate_prefix() {
        // First prefix is constant in both series.
        let y = us(&[1.0, 1.0, 2.0, 3.0]);
        match cumulative_nrmse(&y, &y, 2) {
            Err(Error::DegenerateDenominator { prefix_end }) => assert_eq!(prefix_end, 2),
            other => panic!("{other:?}"),
        }
        // Single-sample prefix.
        assert!(cumulative_nrmse(&us(&[0.0, 1.0, 2.0]), &us(&[0.0, 1.0, 2.0]), 3).is_err());
    }

    #[test]
    fn reference_selection() {
        let table: BTreeMap<String, f64> =
            [("1", 1.4752), ("2", 1.5572), ("3", 1.4841), ("4", 1.4748)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect();
        assert_eq!(select_reference(&table).unwrap(), "4");
        let one = BTreeMap::from([("a".to_string(), 0.5)]);
        assert_eq!(select_reference(&one).unwrap(), "a");
        let tie = BTreeMap::from([("b".to_string(), 0.5), ("a".to_string(), 0.5)]);
        assert_eq!(select_reference(&tie).unwrap(), "a");
        assert_eq!(select_reference(&BTreeMap::new()), Err(Error::Empty));
        let nan = BTreeMap::from([("a".to_string(), f64::NAN)]);
        assert!(select_reference(&nan).is_err());
    }

    #[test]
    fn horizon_from_synthetic_scores() {
        let w = WindowedNrmse {
            boundaries: vec![100, 200, 300, 400],
            scores: vec![0.2, 0.4, 0.9, 1.5],
        };
        let h = horizon_from_windows(&w, 0.0, 0.01, 1.0).unwrap();
        assert_eq!(h.windows_within, 3);
        assert!(h.exceeded);
        assert!((h.time - 2.99).abs() < 1e-12);

        let first = WindowedNrmse {
            boundaries: vec![10, 20],
            scores: vec![1.2, 0.1],
        };
        let h = horizon_from_windows(&first, 5.0, 1.0, 1.0).unwrap();
        assert_eq!(
            (h.time, h.span, h.windows_within, h.exceeded),
            (5.0, 0.0, 0, true)
        );

        assert!(horizon_from_windows(&w, 0.0, 0.01, 0.0).is_err());
        assert!(horizon_from_windows(&w, 0.0, 0.01, f64::NAN).is_err());
    }

    #[test]
    fn horizon_on_constructed_series() {
        // Error amplitude steps up per quarter; windows 1-3 stay close,
        // window 4 diverges.
        let n = 400;
        let y: Vec<f64> = (0..n).map(|k| (k as f64 * 0.05).sin()).collect();
        let amp = [0.05, 0.2, 0.5, 6.0];
        let y_hat: Vec<f64> = (0..n)
            .map(|k| y[k] + amp[k / 100] * (k as f64 * 0.7).cos())
            .collect();
        let (ys, yh) = (us(&y), us(&y_hat));
        let w = cumulative_nrmse(&ys, &yh, 4).unwrap();
        for (j, &end) in w.boundaries.iter().enumerate() {
            let oracle = naive_nrmse(&y[..end], &y_hat[..end]);
            assert!((w.scores[j] - oracle).abs() < 1e-12);
        }
        assert!(w.scores[..3].iter().all(|&s| s <= 1.0), "{:?}", w.scores);
        assert!(w.scores[3] > 1.0, "{:?}", w.scores);
        let h = prediction_horizon(&ys, &yh, 1.0, 4).unwrap();
        assert_eq!(h.windows_within, 3);
        assert!(h.exceeded);
        assert_eq!(h.time, 299.0);

        let same = prediction_horizon(&ys, &ys, 1.0, 4).unwrap();
        assert!(!same.exceeded);
        assert_eq!(same.time, 399.0);
        assert!(prediction_horizon(&ys, &yh, 0.0, 4).is_err());
    }

    fn exp_series(scale: f64, rate: f64, n: usize, dt: f64) -> (UniformSeries, UniformSeries) {
        let a: Vec<f64> = (0..n).map(|k| (k as f64 * 0.1).sin()).collect();
        let b: Vec<f64> = (0..n)
            .map(|k| a[k] + scale * (rate * k as f64 * dt).exp())
            .collect();
        let mk = |v: Vec<f64>| UniformSeries::new(0.0, dt, v, SeriesMeta::default()).unwrap();
        (mk(a), mk(b))
    }

    #[test]
    fn planted_exponents() {
        let (a, b) = exp_series(1e-6, 0.5, 401, 0.05);
        let r = divergence_rate(&a, &b, 0, 400).unwrap();
        assert!((r - 0.5).abs() < 1e-9, "{r}");
        let (a, b) = exp_series(1e-3, -0.2, 401, 0.05);
        let r = divergence_rate(&a, &b, 0, 400).unwrap();
        assert!((r + 0.2).abs() < 1e-9, "{r}");
    }

    #[test]
    fn divergence_errors() {
        let (a, b) = exp_series(1e-6, 0.5, 10, 0.1);
        assert!(matches!(
            divergence_rate(&a, &a, 0, 9),
            Err(Error::DegenerateSeparation { index: 0 })
        ));
        assert!(divergence_rate(&a, &b, 3, 4).is_err());
        assert!(divergence_rate(&a, &b, 0, 10).is_err());
        assert!(divergence_rate(&a, &b, 0, 2).is_ok());
    }

    fn arb_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..80).prop_flat_map(|n| {
            (
                prop::collection::vec(-10.0..10.0f64, n),
                prop::collection::vec(-10.0..10.0f64, n),
            )
        })
    }

    proptest! {
        #[test]
        fn identity_is_exactly_zero(v in prop::collection::vec(-1e3..1e3f64, 2..100)) {
            let s = us(&v);
            if let Ok(score) = nrmse(&s, &s) {
                prop_assert_eq!(score, 0.0);
            }
        }

        #[test]
        fn matches_naive_oracle((y, y_hat) in arb_pair()) {
            let oracle = naive_nrmse(&y, &y_hat);
            prop_assume!(oracle.is_finite() && oracle < 1e6);
            let v = nrmse(&us(&y), &us(&y_hat)).unwrap();
            prop_assert!((v - oracle).abs() <= 1e-10 * oracle.max(1.0));
        }

        #[test]
        fn last_window_is_full_score((y, y_hat) in arb_pair(), w in 1usize..10) {
            prop_assume!(y.len() >= 2 * w);
            let full = nrmse(&us(&y), &us(&y_hat)).unwrap();
            let cum = cumulative_nrmse(&us(&y), &us(&y_hat), w).unwrap();
            prop_assert_eq!(cum.last_score().to_bits(), full.to_bits());
            prop_assert_eq!(*cum.boundaries.last().unwrap(), y.len());
        }

        #[test]
        fn argmin_invariant_under_monotone_transform(
            scores in prop::collection::btree_map("[a-e]{1,3}", 0.0..5.0f64, 1..12)
        ) {
            let base = select_reference(&scores).unwrap();
            let mapped: BTreeMap<String, f64> =
                scores.iter().map(|(k, v)| (k.clone(), 3.0 * v + 7.0)).collect();
            prop_assert_eq!(select_reference(&mapped).unwrap(), base.clone());
            let logged: BTreeMap<String, f64> =
                scores.iter().map(|(k, v)| (k.clone(), (v + 1.0).ln())).collect();
            prop_assert_eq!(select_reference(&logged).unwrap(), base);
        }
    }
}
