//! Convergence detection, run aggregation and significance tests over
//! logged loss curves.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::RunLog;
use crate::stats::{student_t_cdf, student_t_quantile};

/// Initialiser every other one is compared against.
pub const REFERENCE_INITIALISER: &str = "straddled";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    #[default]
    Train,
    Test,
}

impl LossKind {
    pub fn select<'a>(&self, log: &'a RunLog) -> &'a [f64] {
        match self {
            LossKind::Train => &log.train_loss,
            LossKind::Test => &log.test_loss,
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Train => "train",
            LossKind::Test => "test",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(LossKind::Train),
            "test" => Ok(LossKind::Test),
            other => Err(Error::InvalidArgument(format!("loss must be train or test, got `{other}`"))),
        }
    }
}

/// Runs of one initialiser, in log order.
pub fn group_by_initialiser(logs: &[RunLog]) -> Vec<(String, Vec<&RunLog>)> {
    let mut groups: Vec<(String, Vec<&RunLog>)> = Vec::new();
    for log in logs {
        match groups.iter_mut().find(|(name, _)| *name == log.initialiser) {
            Some((_, runs)) => runs.push(log),
            None => groups.push((log.initialiser.clone(), vec![log])),
        }
    }
    groups
}

/// Epoch-wise mean loss of one initialiser across its runs.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanSeries {
    pub initialiser: String,
    pub mean: Vec<f64>,
    /// Some run hit a non-finite loss; the mean carries the `+∞`.
    pub diverged: bool,
}

pub fn epoch_means(logs: &[RunLog], which: LossKind) -> Result<Vec<MeanSeries>> {
    group_by_initialiser(logs)
        .into_iter()
        .map(|(initialiser, runs)| {
            let series: Vec<&[f64]> = runs.iter().map(|l| which.select(l)).collect();
            let len = series[0].len();
            if series.iter().any(|s| s.len() != len) {
                return Err(Error::InvalidArgument(format!(
                    "runs of `{initialiser}` have different epoch counts"
                )));
            }
            let n = series.len() as f64;
            let mean = (0..len)
                .map(|e| series.iter().map(|s| s[e]).sum::<f64>() / n)
                .collect();
            let diverged = series.iter().any(|s| s.iter().any(|v| !v.is_finite()));
            Ok(MeanSeries {
                initialiser,
                mean,
                diverged,
            })
        })
        .collect()
}

/// Outcome of [`detect_convergence`]. `epoch` is a 0-based index into the
/// loss series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceResult {
    pub converged: bool,
    pub epoch: Option<usize>,
    pub loss: Option<f64>,
}

impl ConvergenceResult {
    pub const NOT_CONVERGED: ConvergenceResult = ConvergenceResult {
        converged: false,
        epoch: None,
        loss: None,
    };
}

/// First epoch `t` whose loss band `[l_t − ε, l_t + ε]` contains every loss
/// in `(t, t + α]`, with `t + α` inside the series.
pub fn detect_convergence(series: &[f64], epsilon: f64, alpha: usize) -> Result<ConvergenceResult> {
    if alpha >= series.len() {
        return Err(Error::InvalidArgument(format!(
            "alpha ({alpha}) must be smaller than the series length ({})",
            series.len()
        )));
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {epsilon}")));
    }
    for t in 0..series.len() - alpha {
        let centre = series[t];
        if !centre.is_finite() {
            continue;
        }
        let (lo, hi) = (centre - epsilon, centre + epsilon);
        if series[t + 1..=t + alpha].iter().all(|&l| l >= lo && l <= hi) {
            return Ok(ConvergenceResult {
                converged: true,
                epoch: Some(t),
                loss: Some(centre),
            });
        }
    }
    Ok(ConvergenceResult::NOT_CONVERGED)
}

/// First epoch from which the series never leaves `final ± epsilon`.
pub fn settling_epoch(series: &[f64], epsilon: f64) -> Option<usize> {
    let last = *series.last()?;
    if !last.is_finite() {
        return None;
    }
    let mut epoch = series.len() - 1;
    while epoch > 0 && (series[epoch - 1] - last).abs() <= epsilon {
        epoch -= 1;
    }
    Some(epoch)
}

/// Sample mean and unbiased variance; identical values give exactly zero
/// variance rather than rounding noise.
fn mean_var(xs: &[f64]) -> (f64, f64) {
    if xs.iter().all(|&x| x == xs[0]) {
        return (xs[0], 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch test statistic, degrees of freedom and one-tailed p-value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelchOutcome {
    pub t: f64,
    pub df: f64,
    /// P-value for the alternative `mean(a) < mean(b)`.
    pub p_value: f64,
}

/// Welch's unequal-variance t-test of `mean(a) < mean(b)`.
///
/// Degenerate cases: when both samples have zero variance the p-value is
/// 0.5 for equal means and 0 or 1 otherwise. A single zero-variance sample
/// goes through the ordinary formulas (the degrees of freedom collapse to
/// those of the other sample). Non-finite values (diverged runs) make the
/// finite side trivially better: p = 0 when only `b` has them, 1 when only
/// `a` does; when both do the test is undefined.
pub fn welch_test(a: &[f64], b: &[f64]) -> Result<WelchOutcome> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "Welch test needs at least 2 samples per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let a_bad = a.iter().any(|v| !v.is_finite());
    let b_bad = b.iter().any(|v| !v.is_finite());
    match (a_bad, b_bad) {
        (true, true) => {
            return Err(Error::InvalidArgument("both samples contain non-finite values".into()))
        }
        (false, true) => {
            return Ok(WelchOutcome {
                t: f64::NEG_INFINITY,
                df: f64::NAN,
                p_value: 0.0,
            })
        }
        (true, false) => {
            return Ok(WelchOutcome {
                t: f64::INFINITY,
                df: f64::NAN,
                p_value: 1.0,
            })
        }
        (false, false) => {}
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        let p_value = if ma == mb {
            0.5
        } else if ma < mb {
            0.0
        } else {
            1.0
        };
        let t = if ma == mb { 0.0 } else { (ma - mb).signum() * f64::INFINITY };
        return Ok(WelchOutcome { t, df: f64::NAN, p_value });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    Ok(WelchOutcome {
        t,
        df,
        p_value: student_t_cdf(t, df),
    })
}

pub fn welch_t_one_tailed(a: &[f64], b: &[f64]) -> Result<f64> {
    welch_test(a, b).map(|w| w.p_value)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Per-epoch mean ± `t_{(1+level)/2, R−1} · s/√R` across runs. With a single
/// run, or zero spread, the band collapses onto the mean.
pub fn confidence_band(runs: &[&[f64]], level: f64) -> Result<Vec<BandPoint>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence level must be in (0, 1), got {level}")));
    }
    let Some(first) = runs.first() else {
        return Err(Error::InvalidArgument("no runs".into()));
    };
    let len = first.len();
    if runs.iter().any(|r| r.len() != len) {
        return Err(Error::InvalidArgument("runs have different lengths".into()));
    }
    let r = runs.len();
    let critical = if r >= 2 {
        student_t_quantile(0.5 + level / 2.0, (r - 1) as f64)
    } else {
        0.0
    };
    Ok((0..len)
        .map(|e| {
            let xs: Vec<f64> = runs.iter().map(|s| s[e]).collect();
            if r < 2 || xs.iter().any(|v| !v.is_finite()) {
                let mean = xs.iter().sum::<f64>() / r as f64;
                return BandPoint { mean, lo: mean, hi: mean };
            }
            let (mean, var) = mean_var(&xs);
            let half = if var > 0.0 {
                critical * (var / r as f64).sqrt()
            } else {
                0.0
            };
            BandPoint {
                mean,
                lo: mean - half,
                hi: mean + half,
            }
        })
        .collect())
}

/// One line of a results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub initialiser: String,
    pub runs: usize,
    pub convergence: ConvergenceResult,
    /// Mean loss at the final epoch; `None` when a run diverged.
    pub final_loss_mean: Option<f64>,
    /// One-tailed Welch p-value of "reference final loss < this final
    /// loss"; `None` for the reference itself.
    pub p_value: Option<f64>,
    pub diverged: bool,
}

/// Settings a summary was computed with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSettings {
    pub loss: LossKind,
    pub epsilon: f64,
    pub alpha: usize,
    pub reference: String,
    pub test: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub settings: AnalysisSettings,
    pub rows: Vec<ComparisonRow>,
}

/// Builds the results table: convergence of each initialiser's epoch-mean
/// curve, and the reference's final-epoch losses tested against each other
/// initialiser's.
pub fn summarise(logs: &[RunLog], epsilon: f64, alpha: usize, which: LossKind) -> Result<Summary> {
    if logs.is_empty() {
        return Err(Error::InvalidArgument("no run logs to summarise".into()));
    }
    let groups = group_by_initialiser(logs);
    let means = epoch_means(logs, which)?;
    let final_losses = |runs: &[&RunLog]| -> Vec<f64> {
        runs.iter().map(|l| *which.select(l).last().expect("non-empty series")).collect()
    };
    let reference = groups
        .iter()
        .find(|(name, _)| name == REFERENCE_INITIALISER)
        .map(|(_, runs)| final_losses(runs));

    let mut rows = Vec::with_capacity(groups.len());
    for ((name, runs), series) in groups.iter().zip(&means) {
        let convergence = if series.diverged {
            ConvergenceResult::NOT_CONVERGED
        } else {
            detect_convergence(&series.mean, epsilon, alpha)?
        };
        let finals = final_losses(runs);
        let p_value = match &reference {
            Some(reference) if name != REFERENCE_INITIALISER => welch_t_one_tailed(reference, &finals).ok(),
            _ => None,
        };
        let last = *series.mean.last().expect("non-empty series");
        rows.push(ComparisonRow {
            initialiser: name.clone(),
            runs: runs.len(),
            convergence,
            final_loss_mean: last.is_finite().then_some(last),
            p_value,
            diverged: series.diverged,
        });
    }
    Ok(Summary {
        settings: AnalysisSettings {
            loss: which,
            epsilon,
            alpha,
            reference: REFERENCE_INITIALISER.to_string(),
            test: "welch one-tailed (reference < other)".to_string(),
        },
        rows,
    })
}
