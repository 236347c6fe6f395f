//! Popularity prediction from a story's early votes.
//!
//! The model predictor fits `(r_fan, r_nonfan)` on the first `vote_window`
//! votes and continues the rate equations from the reconstructed state at
//! the last window vote to `t_final`. The baseline extrapolates the observed
//! vote rate and applies an affine correction fitted on a separate
//! calibration set.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{solve_v2_from, StateV2};
use crate::error::{invalid, Result};
use crate::estimate::{fit_story_interest, pearson, spearman, InterestPrior, StoryFitOptions};
use crate::ode::StepControl;
use crate::simulate::story_rng;
use crate::types::{GlobalParamsV2, StoryRecord, TimeUnit};
use crate::SCHEMA_VERSION;

/// Settings of a prediction run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictionConfig {
    /// Number of early votes (the submitter's included) used for the fit.
    pub vote_window: usize,
    /// Hours after submission at which the final count is taken.
    pub t_final: f64,
    pub popularity_threshold: u64,
    pub use_prior: bool,
    pub constrain_equal_r: bool,
    pub prior: InterestPrior,
    /// Time axis of the baseline extrapolation.
    pub baseline_time: TimeUnit,
}

impl Default for PredictionConfig {
    fn default() -> Self {
        Self {
            vote_window: 10,
            t_final: 72.0,
            popularity_threshold: 500,
            use_prior: false,
            constrain_equal_r: false,
            prior: InterestPrior::paper(),
            baseline_time: TimeUnit::DiggHours,
        }
    }
}

impl PredictionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vote_window < 2 {
            return invalid(format!("vote window must be at least 2, got {}", self.vote_window));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return invalid(format!("t_final must be positive, got {}", self.t_final));
        }
        self.prior.fan.validate()?;
        self.prior.nonfan.validate()
    }

    fn fit_options(&self) -> StoryFitOptions {
        StoryFitOptions {
            prior: self.use_prior.then_some(self.prior),
            window: Some(self.vote_window),
            equal_r: self.constrain_equal_r,
        }
    }
}

/// Model forecast for one story.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryPrediction {
    pub story_id: String,
    pub r_fan: f64,
    pub r_nonfan: f64,
    pub predicted_final: f64,
    pub predicted_promotion: Option<f64>,
}

fn forecast_from(global: &GlobalParamsV2, r_fan: f64, r_nonfan: f64, state: StateV2, t_final: f64) -> Result<(f64, Option<f64>)> {
    let observed = state.v_fan + state.v_nonfan;
    if state.t >= t_final {
        return Ok((observed, state.promoted_at));
    }
    let ctrl = StepControl::default().with_sample_interval(t_final);
    let traj = solve_v2_from(global, r_fan, r_nonfan, state, t_final, &ctrl)?;
    Ok((traj.final_votes(), traj.promotion_time))
}

/// Fits the story on its first `vote_window` votes and forecasts the vote count at `t_final`.
pub fn predict_story(story: &StoryRecord, global: &GlobalParamsV2, config: &PredictionConfig) -> Result<StoryPrediction> {
    config.validate()?;
    if story.n_votes() < config.vote_window {
        return invalid(format!(
            "story {} has {} votes, fewer than the window of {}",
            story.story_id,
            story.n_votes(),
            config.vote_window
        ));
    }
    let fit = fit_story_interest(story, global, &config.fit_options())?;
    if !fit.converged {
        return Err(crate::Error::Fit(format!("story {}: interest fit did not converge", story.story_id)));
    }
    let (predicted_final, predicted_promotion) = forecast_from(global, fit.r_fan, fit.r_nonfan, fit.end_state, config.t_final)?;
    Ok(StoryPrediction {
        story_id: story.story_id.clone(),
        r_fan: fit.r_fan,
        r_nonfan: fit.r_nonfan,
        predicted_final,
        predicted_promotion,
    })
}

/// Whether the story is promoted, judged from its first `k` votes.
pub fn predict_promotion(story: &StoryRecord, global: &GlobalParamsV2, k: usize) -> Result<bool> {
    let window = story.truncated(k);
    if window.promotion_time.is_some() {
        return Ok(true);
    }
    let opts = StoryFitOptions {
        window: Some(k),
        ..StoryFitOptions::default()
    };
    let fit = fit_story_interest(&window, global, &opts)?;
    let state = fit.end_state;
    if state.t >= global.upcoming_lifetime {
        return Ok(false);
    }
    let ctrl = StepControl::default().with_sample_interval(global.upcoming_lifetime);
    let traj = solve_v2_from(global, fit.r_fan, fit.r_nonfan, state, global.upcoming_lifetime, &ctrl)?;
    Ok(traj.promotion_time.is_some())
}

/// Naive extrapolation `v t_final / t` from the first `window` votes, where
/// `t` is the time of the last of them.
pub fn raw_extrapolation(story: &StoryRecord, window: usize, t_final: f64) -> Result<f64> {
    let w = story.truncated(window);
    let t = w.votes.last().map_or(0.0, |v| v.time);
    if !(t > 0.0) {
        return invalid(format!("story {}: window ends at t = 0, extrapolation undefined", story.story_id));
    }
    Ok(w.n_votes() as f64 * t_final / t)
}

/// Affine correction `actual = intercept + slope * raw`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineCalibration {
    pub intercept: f64,
    pub slope: f64,
}

impl BaselineCalibration {
    pub const IDENTITY: Self = Self {
        intercept: 0.0,
        slope: 1.0,
    };

    /// Least-squares fit of `actual` on `raw`.
    pub fn fit(raw: &[f64], actual: &[f64]) -> Result<Self> {
        if raw.len() != actual.len() || raw.len() < 2 {
            return invalid("calibration needs at least two (raw, actual) pairs of equal length");
        }
        let n = raw.len() as f64;
        let (mx, my) = (raw.iter().sum::<f64>() / n, actual.iter().sum::<f64>() / n);
        let sxx: f64 = raw.iter().map(|x| (x - mx).powi(2)).sum();
        if !(sxx > 0.0) {
            return invalid("calibration inputs are all equal");
        }
        let sxy: f64 = raw.iter().zip(actual).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        Ok(Self {
            intercept: my - slope * mx,
            slope,
        })
    }

    pub fn apply(&self, raw: f64) -> f64 {
        self.intercept + self.slope * raw
    }
}

/// Observed vote count at `t_final`, if the record covers that time or states its final count.
pub fn actual_final(story: &StoryRecord, t_final: f64) -> Option<u64> {
    if story.observed_until.is_some_and(|t| t >= t_final) {
        Some(story.votes_by(t_final) as u64)
    } else {
        story.final_votes
    }
}

/// Fits the baseline correction on a calibration set.
pub fn calibrate_baseline(calibration: &[StoryRecord], window: usize, t_final: f64) -> Result<BaselineCalibration> {
    let (mut raw, mut actual) = (Vec::new(), Vec::new());
    for s in calibration.iter().filter(|s| s.n_votes() >= window) {
        if let (Ok(x), Some(y)) = (raw_extrapolation(s, window, t_final), actual_final(s, t_final)) {
            raw.push(x);
            actual.push(y as f64);
        }
    }
    BaselineCalibration::fit(&raw, &actual)
}

/// Calibrated baseline forecast.
pub fn extrapolate_baseline(story: &StoryRecord, window: usize, t_final: f64, calibration: &BaselineCalibration) -> Result<f64> {
    Ok(calibration.apply(raw_extrapolation(story, window, t_final)?))
}

/// Seeded split into `(calibration, evaluation)` sets.
pub fn split_calibration(records: &[StoryRecord], calibration_fraction: f64, seed: u64) -> (Vec<StoryRecord>, Vec<StoryRecord>) {
    let mut idx: Vec<usize> = (0..records.len()).collect();
    idx.shuffle(&mut story_rng(seed, u64::MAX));
    let n_cal = (records.len() as f64 * calibration_fraction.clamp(0.0, 1.0)).round() as usize;
    let mut cal: Vec<usize> = idx[..n_cal].to_vec();
    let mut eval: Vec<usize> = idx[n_cal..].to_vec();
    cal.sort_unstable();
    eval.sort_unstable();
    (
        cal.into_iter().map(|i| records[i].clone()).collect(),
        eval.into_iter().map(|i| records[i].clone()).collect(),
    )
}

/// A forecasting method compared by [`evaluate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Model { use_prior: bool, equal_r: bool },
    Baseline,
}

impl Method {
    pub fn name(&self) -> String {
        match *self {
            Method::Model { use_prior, equal_r } => {
                let mut s = String::from(if equal_r { "model_equal_r" } else { "model" });
                if use_prior {
                    s.push_str("_prior");
                }
                s
            }
            Method::Baseline => "baseline".into(),
        }
    }
}

/// Accuracy of one method over the evaluated stories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub name: String,
    /// Stories with an available prediction.
    pub n: usize,
    pub unavailable: usize,
    /// Fraction of available predictions on the wrong side of the threshold.
    pub error_rate: f64,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
}

/// One evaluated story.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryRow {
    pub story_id: String,
    pub window_votes: usize,
    pub actual_final: u64,
    pub actual_popular: bool,
    /// Predicted final votes per method name; `None` where the method failed.
    pub predicted: BTreeMap<String, Option<f64>>,
}

impl StoryRow {
    pub fn predicted_popular(&self, method: &str, threshold: u64) -> Option<bool> {
        self.predicted.get(method).copied().flatten().map(|p| p >= threshold as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub schema_version: u32,
    pub config: PredictionConfig,
    pub calibration: BaselineCalibration,
    pub calibration_stories: usize,
    /// Stories dropped for having fewer votes than the window or no known outcome.
    pub skipped: usize,
    pub methods: Vec<MethodSummary>,
    pub rows: Vec<StoryRow>,
}

impl PredictionReport {
    pub fn summary(&self, name: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.name == name)
    }

    /// Per-story correctness of a method; `None` where its prediction is unavailable.
    pub fn correct(&self, name: &str) -> Vec<Option<bool>> {
        let th = self.config.popularity_threshold;
        self.rows
            .iter()
            .map(|r| r.predicted_popular(name, th).map(|p| p == r.actual_popular))
            .collect()
    }

    /// Writes one row per story: id, window votes, actual, then one column per method.
    pub fn write_rows_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["story_id".to_string(), "window_votes".into(), "actual_final".into(), "actual_popular".into()];
        header.extend(self.methods.iter().map(|m| m.name.clone()));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.story_id.clone(),
                r.window_votes.to_string(),
                r.actual_final.to_string(),
                r.actual_popular.to_string(),
            ];
            for m in &self.methods {
                rec.push(r.predicted.get(&m.name).copied().flatten().map(|p| p.to_string()).unwrap_or_default());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The methods implied by a configuration: the model as configured, and the baseline.
pub fn default_methods(config: &PredictionConfig) -> Vec<Method> {
    vec![
        Method::Model {
            use_prior: config.use_prior,
            equal_r: config.constrain_equal_r,
        },
        Method::Baseline,
    ]
}

/// Forecasts every evaluation story with each method and scores them.
///
/// The baseline is calibrated on `calibration`, which must not share any
/// story with `evaluation`. Stories with fewer votes than the window, or
/// without a known final count, are skipped.
pub fn evaluate(
    evaluation: &[StoryRecord],
    calibration: &[StoryRecord],
    global: &GlobalParamsV2,
    config: &PredictionConfig,
    methods: &[Method],
) -> Result<PredictionReport> {
    config.validate()?;
    if evaluation.is_empty() {
        return invalid("no stories to evaluate");
    }
    let cal_ids: HashSet<&str> = calibration.iter().map(|s| s.story_id.as_str()).collect();
    if let Some(s) = evaluation.iter().find(|s| cal_ids.contains(s.story_id.as_str())) {
        return invalid(format!("story {} is in both the calibration and evaluation sets", s.story_id));
    }
    let window = config.vote_window;
    let calib = if methods.contains(&Method::Baseline) {
        calibrate_baseline(calibration, window, config.t_final)?
    } else {
        BaselineCalibration::IDENTITY
    };
    let usable: Vec<(&StoryRecord, u64)> = evaluation
        .iter()
        .filter(|s| s.n_votes() >= window)
        .filter_map(|s| actual_final(s, config.t_final).map(|a| (s, a)))
        .collect();
    let skipped = evaluation.len() - usable.len();
    if usable.is_empty() {
        return invalid(format!("no story has at least {window} votes and a known outcome"));
    }
    let th = config.popularity_threshold;
    let rows: Vec<StoryRow> = usable
        .par_iter()
        .map(|&(s, actual)| {
            let predicted = methods
                .iter()
                .map(|m| {
                    let value = match *m {
                        Method::Model { use_prior, equal_r } => {
                            let cfg = PredictionConfig {
                                use_prior,
                                constrain_equal_r: equal_r,
                                ..*config
                            };
                            predict_story(s, global, &cfg).map(|p| p.predicted_final)
                        }
                        Method::Baseline => extrapolate_baseline(s, window, config.t_final, &calib),
                    };
                    if let Err(e) = &value {
                        log::warn!("{}: {} unavailable: {e}", s.story_id, m.name());
                    }
                    (m.name(), value.ok())
                })
                .collect();
            StoryRow {
                story_id: s.story_id.clone(),
                window_votes: window,
                actual_final: actual,
                actual_popular: actual >= th,
                predicted,
            }
        })
        .collect();
    let methods = methods
        .iter()
        .map(|m| summarize(*m, &rows, th))
        .collect();
    Ok(PredictionReport {
        schema_version: SCHEMA_VERSION,
        config: *config,
        calibration: calib,
        calibration_stories: calibration.len(),
        skipped,
        methods,
        rows,
    })
}

fn summarize(method: Method, rows: &[StoryRow], threshold: u64) -> MethodSummary {
    let name = method.name();
    let pairs: Vec<(f64, f64, bool)> = rows
        .iter()
        .filter_map(|r| r.predicted.get(&name).copied().flatten().map(|p| (p, r.actual_final as f64, r.actual_popular)))
        .collect();
    let wrong = pairs.iter().filter(|(p, _, a)| (*p >= threshold as f64) != *a).count();
    let (pred, actual): (Vec<f64>, Vec<f64>) = pairs.iter().map(|&(p, a, _)| (p, a)).unzip();
    MethodSummary {
        method,
        n: pairs.len(),
        unavailable: rows.len() - pairs.len(),
        error_rate: if pairs.is_empty() { 1.0 } else { wrong as f64 / pairs.len() as f64 },
        pearson: pearson(&pred, &actual).ok(),
        spearman: spearman(&pred, &actual).ok(),
        name,
    }
}

/// Result of a paired bootstrap comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedBootstrap {
    /// The statistic on the original sample.
    pub observed: f64,
    /// One-sided p-value for the statistic being positive:
    /// `(1 + #{resampled <= 0}) / (1 + n_boot)`.
    pub p_value: f64,
    pub n_boot: usize,
}

/// Resamples the `n` paired units with replacement and evaluates `stat` on
/// each resample's indices.
pub fn paired_bootstrap<F, R>(n: usize, stat: F, n_boot: usize, rng: &mut R) -> Result<PairedBootstrap>
where
    F: Fn(&[usize]) -> f64,
    R: Rng + ?Sized,
{
    if n == 0 || n_boot == 0 {
        return invalid("paired bootstrap needs data and at least one replicate");
    }
    let all: Vec<usize> = (0..n).collect();
    let observed = stat(&all);
    let mut idx = vec![0usize; n];
    let mut not_positive = 0usize;
    for _ in 0..n_boot {
        for slot in idx.iter_mut() {
            *slot = rng.random_range(0..n);
        }
        if !(stat(&idx) > 0.0) {
            not_positive += 1;
        }
    }
    Ok(PairedBootstrap {
        observed,
        p_value: (1 + not_positive) as f64 / (1 + n_boot) as f64,
        n_boot,
    })
}

/// Bootstrap test that method `better` has a lower error rate than `worse`,
/// over stories where both are available.
pub fn compare_error_rates<R: Rng + ?Sized>(report: &PredictionReport, better: &str, worse: &str, n_boot: usize, rng: &mut R) -> Result<PairedBootstrap> {
    let (a, b) = (report.correct(better), report.correct(worse));
    let pairs: Vec<(f64, f64)> = a
        .iter()
        .zip(&b)
        .filter_map(|(x, y)| Some((f64::from(u8::from(!(*x)?)), f64::from(u8::from(!(*y)?)))))
        .collect();
    paired_bootstrap(
        pairs.len(),
        |idx| idx.iter().map(|&i| pairs[i].1 - pairs[i].0).sum::<f64>() / idx.len() as f64,
        n_boot,
        rng,
    )
}

/// Bootstrap test that method `better` has a higher Spearman correlation with the outcome than `worse`.
pub fn compare_spearman<R: Rng + ?Sized>(report: &PredictionReport, better: &str, worse: &str, n_boot: usize, rng: &mut R) -> Result<PairedBootstrap> {
    let triples: Vec<(f64, f64, f64)> = report
        .rows
        .iter()
        .filter_map(|r| {
            let a = r.predicted.get(better).copied().flatten()?;
            let b = r.predicted.get(worse).copied().flatten()?;
            Some((a, b, r.actual_final as f64))
        })
        .collect();
    paired_bootstrap(
        triples.len(),
        |idx| {
            let pick = |f: fn(&(f64, f64, f64)) -> f64| idx.iter().map(|&i| f(&triples[i])).collect::<Vec<_>>();
            let (a, b, y) = (pick(|t| t.0), pick(|t| t.1), pick(|t| t.2));
            match (spearman(&a, &y), spearman(&b, &y)) {
                (Ok(x), Ok(z)) => x - z,
                _ => 0.0,
            }
        },
        n_boot,
        rng,
    )
}

/// Mean final votes among stories with a given number of fan votes in their first `k` votes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanBucket {
    pub fan_votes: usize,
    pub stories: usize,
    pub mean_final: f64,
    pub stderr: f64,
}

/// Final votes grouped by the number of fan votes among the first `k`
/// votes. Stories with fewer than `k` votes or no known outcome are left out.
pub fn early_fan_fraction_curve(records: &[StoryRecord], k: usize, t_final: f64) -> Result<Vec<FanBucket>> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for s in records.iter().filter(|s| s.n_votes() >= k) {
        if let Some(a) = actual_final(s, t_final) {
            groups.entry(s.fan_split(k).0).or_default().push(a as f64);
        }
    }
    if groups.is_empty() {
        return invalid(format!("no story has {k} votes and a known outcome"));
    }
    Ok(groups
        .into_iter()
        .map(|(fan_votes, v)| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = if v.len() > 1 {
                v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            FanBucket {
                fan_votes,
                stories: v.len(),
                mean_final: mean,
                stderr: (var / n).sqrt(),
            }
        })
        .collect())
}

pub fn write_fan_curve_csv<W: Write>(curve: &[FanBucket], k: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["fan_votes", "fan_fraction", "stories", "mean_final", "stderr"])?;
    for b in curve {
        w.write_record([
            b.fan_votes.to_string(),
            (b.fan_votes as f64 / k as f64).to_string(),
            b.stories.to_string(),
            b.mean_final.to_string(),
            b.stderr.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// How well early interest ratios track final popularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NicheCorrelations {
    /// Stories with at least one fan vote in the window.
    pub stories: usize,
    /// Pearson correlation of final votes with the fitted `r_nonfan / r_fan`.
    pub interest_ratio: f64,
    /// Pearson correlation of final votes with the raw `v_nonfan / v_fan`.
    pub vote_ratio: f64,
}

/// Correlations of final votes with the estimated and raw non-fan/fan
/// ratios over the first `window` votes of each story.
pub fn niche_correlations(records: &[StoryRecord], global: &GlobalParamsV2, window: usize, t_final: f64) -> Result<NicheCorrelations> {
    let opts = StoryFitOptions {
        window: Some(window),
        ..StoryFitOptions::default()
    };
    let rows: Vec<(f64, f64, f64)> = records
        .par_iter()
        .filter_map(|s| {
            let actual = actual_final(s, t_final)?;
            let (vf, vn) = s.fan_split(window);
            if vf == 0 {
                return None;
            }
            let fit = fit_story_interest(s, global, &opts).ok()?;
            (fit.r_fan > 0.0).then(|| (actual as f64, fit.r_nonfan / fit.r_fan, vn as f64 / vf as f64))
        })
        .collect();
    let col = |f: fn(&(f64, f64, f64)) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let (y, rr, vr) = (col(|r| r.0), col(|r| r.1), col(|r| r.2));
    Ok(NicheCorrelations {
        stories: rows.len(),
        interest_ratio: pearson(&y, &rr)?,
        vote_ratio: pearson(&y, &vr)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::VoteEvent;
    use approx::assert_relative_eq;

    fn uniform_story(id: &str, n: usize, spacing: f64) -> StoryRecord {
        let votes = (0..n).map(|i| VoteEvent::new(id, format!("u{i}"), i as f64 * spacing, false)).collect();
        StoryRecord::new(id, 0.0, 0, votes, None, Some(n as u64)).unwrap()
    }

    #[test]
    fn extrapolation_from_half_the_horizon_doubles() {
        let s = uniform_story("a", 11, 3.6);
        assert_relative_eq!(raw_extrapolation(&s, 11, 72.0).unwrap(), 22.0);
        assert!(raw_extrapolation(&uniform_story("b", 3, 0.0), 3, 72.0).is_err());
    }

    #[test]
    fn calibration_on_exact_data_is_identity() {
        let raw = [10.0, 50.0, 200.0, 900.0];
        let c = BaselineCalibration::fit(&raw, &raw).unwrap();
        assert_relative_eq!(c.slope, 1.0, epsilon = 1e-12);
        assert_relative_eq!(c.intercept, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn story_past_threshold_within_window_is_predicted_popular() {
        let g = GlobalParamsV2::paper();
        let s = uniform_story("a", 600, 0.01);
        let cfg = PredictionConfig {
            vote_window: 600,
            ..PredictionConfig::default()
        };
        let p = predict_story(&s, &g, &cfg).unwrap();
        assert!(p.predicted_final >= 500.0);
    }

    #[test]
    fn overlapping_splits_are_rejected() {
        let g = GlobalParamsV2::paper();
        let s = vec![uniform_story("a", 20, 0.1)];
        let cfg = PredictionConfig::default();
        assert!(evaluate(&s, &s, &g, &cfg, &[Method::Baseline]).is_err());
    }

    #[test]
    fn split_is_disjoint_and_covering() {
        let stories: Vec<_> = (0..30).map(|i| uniform_story(&format!("s{i}"), 3, 1.0)).collect();
        let (cal, eval) = split_calibration(&stories, 0.4, 9);
        assert_eq!(cal.len(), 12);
        assert_eq!(cal.len() + eval.len(), 30);
        let ids: HashSet<_> = cal.iter().map(|s| &s.story_id).collect();
        assert!(eval.iter().all(|s| !ids.contains(&s.story_id)));
    }

    #[test]
    fn bootstrap_of_a_clear_difference() {
        let mut rng = story_rng(3, 0);
        let diffs: Vec<f64> = (0..100).map(|i| if i % 4 == 0 { 0.0 } else { 1.0 }).collect();
        let b = paired_bootstrap(diffs.len(), |idx| idx.iter().map(|&i| diffs[i]).sum(), 500, &mut rng).unwrap();
        assert!(b.p_value < 0.01);
    }
}
