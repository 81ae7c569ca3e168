// SPDX-License-Identifier: MIT OR Apache-2.0

//! Simulation harness: piecewise-constant data, the fit → filter pipeline,
//! and aggregated sweeps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cv::fit_cv;
use crate::error::{Error, Result};
use crate::filter::{candidates_from, haar_filter, FilterProfile};
use crate::metrics::{changepoints, hausdorff, mean_squared_error, min_gap, screening_distance};
use crate::signal::{ChangepointSet, ExtendedDistance, Signal};
use crate::tau::{select_tau_with_fit, upper_quantile, FusedCv, TauConfig};

pub const DEFAULT_LEVELS: [f64; 5] = [0.0, 2.0, 4.0, 1.0, 4.0];
pub const DEFAULT_NOISE_SD: f64 = 2.0;
pub const DEFAULT_PERMUTATIONS: usize = 100;
pub const DEFAULT_Q: f64 = 0.95;
const ORACLE_GRID_POINTS: usize = 101;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: usize,
    pub levels: Vec<f64>,
    pub noise_sd: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    /// Five equal segments at levels 0, 2, 4, 1, 4 with noise sd 2.
    pub fn standard(n: usize, seed: u64) -> Self {
        GeneratorSpec {
            n,
            levels: DEFAULT_LEVELS.to_vec(),
            noise_sd: DEFAULT_NOISE_SD,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() || self.levels.iter().any(|l| !l.is_finite()) {
            return Err(Error::invalid_input(
                "levels must be a nonempty list of finite values",
            ));
        }
        if self.n < self.levels.len() {
            return Err(Error::invalid_input(format!(
                "n = {} is smaller than the number of levels ({})",
                self.n,
                self.levels.len()
            )));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::invalid_input(format!(
                "noise sd must be >= 0, got {}",
                self.noise_sd
            )));
        }
        Ok(())
    }

    /// Segment widths: `⌊n/L⌋` each, with the remainder added one apiece to
    /// the trailing segments.
    pub fn segment_widths(&self) -> Vec<usize> {
        let l = self.levels.len();
        let (base, rem) = (self.n / l, self.n % l);
        (0..l).map(|k| base + usize::from(k >= l - rem)).collect()
    }

    /// Changepoints of the mean signal (jumps between equal levels vanish).
    pub fn true_changepoints(&self) -> Result<ChangepointSet> {
        Ok(changepoints(&gen_signal(self)?, 0.0))
    }
}

pub fn gen_signal(spec: &GeneratorSpec) -> Result<Signal> {
    spec.validate()?;
    let mut theta = Vec::with_capacity(spec.n);
    for (w, &level) in spec.segment_widths().into_iter().zip(&spec.levels) {
        theta.extend(std::iter::repeat_n(level, w));
    }
    Ok(Signal::from_vec_unchecked(theta))
}

pub fn gen_data(spec: &GeneratorSpec) -> Result<Signal> {
    let theta = gen_signal(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let y = theta
        .iter()
        .map(|t| t + spec.noise_sd * Distribution::<f64>::sample(&StandardNormal, &mut rng))
        .collect();
    Signal::new(y)
}

/// `⌊0.25 ln² n⌋`, clamped to `[1, ⌊(n-1)/2⌋]`. The flag reports whether the
/// clamp changed the value.
pub fn auto_bandwidth_checked(n: usize) -> (usize, bool) {
    let raw = (0.25 * (n as f64).ln().powi(2)).floor() as usize;
    let hi = ((n.saturating_sub(1)) / 2).max(1);
    let b = raw.clamp(1, hi);
    (b, b != raw)
}

pub fn auto_bandwidth(n: usize) -> usize {
    auto_bandwidth_checked(n).0
}

/// SplitMix64 finaliser, used to derive independent per-trial seeds.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(master: u64, point: usize, trial: usize) -> u64 {
    mix_seed(mix_seed(master, point as u64), trial as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum TauRule {
    Fixed {
        tau: f64,
    },
    /// Permutation calibration with a cross-validated fused lasso refit.
    DataDriven {
        permutations: usize,
        q: f64,
    },
    /// The threshold minimising the filtered Hausdorff distance to the truth.
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub folds: usize,
    pub tau: TauRule,
    /// `None` selects [`auto_bandwidth`].
    pub bandwidth: Option<usize>,
}

impl PipelineConfig {
    pub fn new(tau: TauRule) -> Self {
        PipelineConfig {
            folds: crate::cv::DEFAULT_FOLDS,
            tau,
            bandwidth: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Distances {
    /// `d(S|S₀)`: how far the farthest true changepoint is from the estimate.
    pub screen: ExtendedDistance,
    /// `d(S₀|S)`: how far the farthest estimated changepoint is from the truth.
    pub precision: ExtendedDistance,
    pub hausdorff: ExtendedDistance,
}

impl Distances {
    pub fn between(estimate: &ChangepointSet, truth: &ChangepointSet) -> Self {
        Distances {
            screen: screening_distance(estimate, truth),
            precision: screening_distance(truth, estimate),
            hausdorff: hausdorff(estimate, truth),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub spec: GeneratorSpec,
    pub lambda: f64,
    pub b: usize,
    pub tau: f64,
    pub raw_changepoints: ChangepointSet,
    pub filtered_changepoints: ChangepointSet,
    pub l2_error: f64,
    pub raw: Distances,
    pub filtered: Distances,
    /// Hausdorff distance of the full filtered set at the same threshold.
    pub full_hausdorff: ExtendedDistance,
    pub full_size: usize,
}

/// A fitted trial, ready to be thresholded at any `τ`.
#[derive(Clone, Debug)]
pub struct FittedTrial {
    pub spec: GeneratorSpec,
    pub theta0: Signal,
    pub s0: ChangepointSet,
    pub y: Signal,
    pub theta_hat: Signal,
    pub lambda: f64,
    pub b: usize,
    pub raw: ChangepointSet,
    pub profile: FilterProfile,
    pub candidates: ChangepointSet,
}

impl FittedTrial {
    pub fn new(spec: &GeneratorSpec, folds: usize, bandwidth: Option<usize>) -> Result<Self> {
        let theta0 = gen_signal(spec)?;
        let y = gen_data(spec)?;
        let s0 = changepoints(&theta0, 0.0);
        let (fit, _) = fit_cv(&y, folds, None)?;
        let b = bandwidth.unwrap_or_else(|| auto_bandwidth(spec.n));
        let raw = changepoints(&fit.theta_hat, 0.0);
        let profile = haar_filter(&fit.theta_hat, b)?;
        let candidates = candidates_from(&raw, spec.n, b);
        Ok(FittedTrial {
            spec: spec.clone(),
            theta0,
            s0,
            y,
            theta_hat: fit.theta_hat,
            lambda: fit.lambda,
            b,
            raw,
            profile,
            candidates,
        })
    }

    pub fn reduced_set(&self, tau: f64) -> ChangepointSet {
        self.profile.threshold_on(&self.candidates, tau)
    }

    pub fn record(&self, tau: f64) -> TrialRecord {
        let filtered = self.reduced_set(tau);
        let full = self.profile.threshold(tau);
        TrialRecord {
            spec: self.spec.clone(),
            lambda: self.lambda,
            b: self.b,
            tau,
            raw: Distances::between(&self.raw, &self.s0),
            filtered: Distances::between(&filtered, &self.s0),
            full_hausdorff: hausdorff(&full, &self.s0),
            full_size: full.len(),
            raw_changepoints: self.raw.clone(),
            filtered_changepoints: filtered,
            l2_error: mean_squared_error(&self.theta_hat, &self.theta0),
        }
    }

    /// Thresholds tried by the oracle: 101 equispaced points on `[0, 2H_n]`
    /// plus every candidate filter magnitude, so the minimum over the grid is
    /// the minimum over all thresholds.
    pub fn oracle_grid(&self) -> Vec<f64> {
        let h = min_gap(&self.theta0, &self.s0);
        let top = if h.is_finite() {
            2.0 * h
        } else {
            2.0 * self.profile.max_abs()
        };
        let mut grid: Vec<f64> = (0..ORACLE_GRID_POINTS)
            .map(|k| top * k as f64 / (ORACLE_GRID_POINTS - 1) as f64)
            .collect();
        grid.extend(
            self.candidates
                .iter()
                .filter_map(|&i| self.profile.get(i))
                .map(f64::abs),
        );
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        grid
    }

    /// The smallest threshold achieving the least filtered Hausdorff distance.
    pub fn oracle_tau(&self) -> f64 {
        let mut best = (ExtendedDistance::Infinite, f64::INFINITY);
        for tau in self.oracle_grid() {
            let d = hausdorff(&self.reduced_set(tau), &self.s0);
            if d < best.0 {
                best = (d, tau);
            }
        }
        if best.1.is_finite() {
            best.1
        } else {
            0.0
        }
    }

    pub fn permutation_maxima(&self, permutations: usize, folds: usize) -> Result<Vec<f64>> {
        let cfg = TauConfig::new(permutations, self.b, 0.5, mix_seed(self.spec.seed, 0x7A0));
        let sel = select_tau_with_fit(&self.y, &self.theta_hat, &FusedCv { folds }, cfg)?;
        Ok(sel.per_permutation_maxima)
    }
}

pub fn run_trial(spec: &GeneratorSpec, config: &PipelineConfig) -> Result<TrialRecord> {
    let trial = FittedTrial::new(spec, config.folds, config.bandwidth)?;
    let tau = match config.tau {
        TauRule::Fixed { tau } => {
            if !(tau.is_finite() && tau >= 0.0) {
                return Err(Error::invalid_input(format!(
                    "threshold must be >= 0, got {tau}"
                )));
            }
            tau
        }
        TauRule::DataDriven { permutations, q } => {
            upper_quantile(&trial.permutation_maxima(permutations, config.folds)?, q)
        }
        TauRule::Oracle => trial.oracle_tau(),
    };
    Ok(trial.record(tau))
}

/// Trial-count rates: FPR counts trials with `d(S₀|S) > b`, TPR those with
/// `d(S|S₀) <= b`.
pub fn fpr_tpr(records: &[TrialRecord], b: usize) -> Result<(f64, f64)> {
    if records.is_empty() {
        return Err(Error::invalid_input("no trial records"));
    }
    let n = records.len() as f64;
    let fp = records
        .iter()
        .filter(|r| !r.filtered.precision.within(b))
        .count();
    let tp = records
        .iter()
        .filter(|r| r.filtered.screen.within(b))
        .count();
    Ok((fp as f64 / n, tp as f64 / n))
}

/// Linear-interpolation quantile of finite-or-infinite values.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = p * (v.len() - 1) as f64;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    if lo == hi || v[lo] == v[hi] {
        v[lo]
    } else {
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    }
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Filtered and raw Hausdorff distance as `n` grows, data-driven `τ`.
    HausVsN,
    /// Distances as a function of a fixed `τ` at one sample size.
    TauSweep,
    /// Data-driven `τ` across quantile levels `q` at one sample size.
    QSweep,
    /// Estimation error and CV-selected `λ` as `n` grows.
    L2Scaling,
}

impl Experiment {
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            Experiment::HausVsN => vec![100.0, 774.0, 3000.0],
            Experiment::TauSweep => (0..=20).map(|k| k as f64 * 0.1).collect(),
            Experiment::QSweep => vec![0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99],
            Experiment::L2Scaling => log_spaced(100.0, 10_000.0, 9),
        }
    }

    pub fn axis(self) -> &'static str {
        match self {
            Experiment::HausVsN | Experiment::L2Scaling => "n",
            Experiment::TauSweep => "tau",
            Experiment::QSweep => "q",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Experiment::HausVsN => "haus-vs-n",
            Experiment::TauSweep => "tau-sweep",
            Experiment::QSweep => "q-sweep",
            Experiment::L2Scaling => "l2-scaling",
        }
    }
}

/// `count` sample sizes log-spaced from `lo` to `hi`, rounded to integers.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo.round()];
    }
    (0..count)
        .map(|k| {
            (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (count - 1) as f64)
                .exp()
                .round()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub experiment: Experiment,
    pub grid: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    /// Sample size for the `τ` and `q` sweeps.
    pub n: usize,
    pub folds: usize,
    pub permutations: usize,
    pub q: f64,
    pub levels: Vec<f64>,
    pub noise_sd: f64,
}

impl SweepConfig {
    pub fn new(experiment: Experiment, trials: usize, master_seed: u64) -> Self {
        SweepConfig {
            experiment,
            grid: experiment.default_grid(),
            trials,
            master_seed,
            n: 774,
            folds: crate::cv::DEFAULT_FOLDS,
            permutations: DEFAULT_PERMUTATIONS,
            q: DEFAULT_Q,
            levels: DEFAULT_LEVELS.to_vec(),
            noise_sd: DEFAULT_NOISE_SD,
        }
    }

    fn spec(&self, n: usize, point: usize, trial: usize) -> GeneratorSpec {
        GeneratorSpec {
            n,
            levels: self.levels.clone(),
            noise_sd: self.noise_sd,
            seed: trial_seed(self.master_seed, point, trial),
        }
    }
}

/// One aggregated row per grid value. Distances are for the reduced filter
/// unless prefixed `raw_`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub experiment: String,
    pub axis: String,
    pub value: f64,
    pub n: usize,
    pub trials: usize,
    pub b: usize,
    pub tau_median: f64,
    pub lambda_median: f64,
    pub l2_median: f64,
    pub n_l2_median: f64,
    pub raw_haus_median: f64,
    pub haus_q1: f64,
    pub haus_median: f64,
    pub haus_q3: f64,
    pub screen_q1: f64,
    pub screen_median: f64,
    pub screen_q3: f64,
    pub precision_q1: f64,
    pub precision_median: f64,
    pub precision_q3: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Per-trial output of a sweep: the records behind every row.
#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub records: Vec<Vec<TrialRecord>>,
}

fn aggregate(cfg: &SweepConfig, value: f64, records: &[TrialRecord]) -> Result<SweepRow> {
    let pick = |f: &dyn Fn(&TrialRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
    let haus = pick(&|r| r.filtered.hausdorff.as_f64());
    let screen = pick(&|r| r.filtered.screen.as_f64());
    let precision = pick(&|r| r.filtered.precision.as_f64());
    let l2 = pick(&|r| r.l2_error);
    let n = records[0].spec.n;
    let b = records[0].b;
    let (fpr, tpr) = fpr_tpr(records, b)?;
    Ok(SweepRow {
        experiment: cfg.experiment.name().to_string(),
        axis: cfg.experiment.axis().to_string(),
        value,
        n,
        trials: records.len(),
        b,
        tau_median: median(&pick(&|r| r.tau)),
        lambda_median: median(&pick(&|r| r.lambda)),
        l2_median: median(&l2),
        n_l2_median: n as f64 * median(&l2),
        raw_haus_median: median(&pick(&|r| r.raw.hausdorff.as_f64())),
        haus_q1: quantile(&haus, 0.25),
        haus_median: median(&haus),
        haus_q3: quantile(&haus, 0.75),
        screen_q1: quantile(&screen, 0.25),
        screen_median: median(&screen),
        screen_q3: quantile(&screen, 0.75),
        precision_q1: quantile(&precision, 0.25),
        precision_median: median(&precision),
        precision_q3: quantile(&precision, 0.75),
        fpr,
        tpr,
    })
}

fn grid_n(value: f64) -> Result<usize> {
    if !(value.is_finite() && value >= 1.0 && value.fract() == 0.0) {
        return Err(Error::invalid_input(format!(
            "sample size must be a positive integer, got {value}"
        )));
    }
    Ok(value as usize)
}

/// Runs a sweep. Trials run in parallel; results do not depend on the number
/// of worker threads.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    if cfg.trials == 0 {
        return Err(Error::invalid_input("trials must be at least 1"));
    }
    if cfg.grid.is_empty() {
        return Err(Error::invalid_input("sweep grid is empty"));
    }
    let fit_all = |n: usize, point: usize| -> Result<Vec<FittedTrial>> {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| FittedTrial::new(&cfg.spec(n, point, t), cfg.folds, None))
            .collect()
    };

    let records: Vec<Vec<TrialRecord>> = match cfg.experiment {
        Experiment::HausVsN | Experiment::L2Scaling => cfg
            .grid
            .iter()
            .enumerate()
            .map(|(point, &v)| {
                let n = grid_n(v)?;
                (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| {
                        let trial = FittedTrial::new(&cfg.spec(n, point, t), cfg.folds, None)?;
                        let tau = match cfg.experiment {
                            Experiment::HausVsN => upper_quantile(
                                &trial.permutation_maxima(cfg.permutations, cfg.folds)?,
                                cfg.q,
                            ),
                            _ => trial.oracle_tau(),
                        };
                        Ok(trial.record(tau))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?,
        Experiment::TauSweep => {
            if let Some(bad) = cfg.grid.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
                return Err(Error::invalid_input(format!("invalid threshold {bad}")));
            }
            let trials = fit_all(cfg.n, 0)?;
            cfg.grid
                .iter()
                .map(|&tau| trials.iter().map(|t| t.record(tau)).collect())
                .collect()
        }
        Experiment::QSweep => {
            if let Some(bad) = cfg.grid.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
                return Err(Error::invalid_input(format!(
                    "invalid quantile level {bad}"
                )));
            }
            let trials = fit_all(cfg.n, 0)?;
            let maxima: Vec<Vec<f64>> = trials
                .par_iter()
                .map(|t| t.permutation_maxima(cfg.permutations, cfg.folds))
                .collect::<Result<_>>()?;
            cfg.grid
                .iter()
                .map(|&q| {
                    trials
                        .iter()
                        .zip(&maxima)
                        .map(|(t, m)| t.record(upper_quantile(m, q)))
                        .collect()
                })
                .collect()
        }
    };

    let rows = cfg
        .grid
        .iter()
        .zip(&records)
        .map(|(&v, recs)| aggregate(cfg, v, recs))
        .collect::<Result<_>>()?;
    Ok(SweepOutput { rows, records })
}
