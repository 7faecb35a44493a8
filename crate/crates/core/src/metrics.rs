//! Success rates, the F comparison parameter, confidence bands and hop counts.

use serde::Serialize;

use crate::error::{Error, Result};
pub use crate::protocols::DeliveryOutcome;

/// Two-sided 95% normal quantile.
pub const Z_975: f64 = 1.959964;

/// End-to-end packet error probability of a path with the given link PERs.
pub fn pep(pers: &[f64]) -> f64 {
    1.0 - pers.iter().map(|p| 1.0 - p).product::<f64>()
}

/// `1 - PEP` of the node's route; voids count as zero.
pub fn success_rate(outcome: &DeliveryOutcome) -> f64 {
    if outcome.delivered {
        outcome.end_to_end_success
    } else {
        0.0
    }
}

/// Mean per-node difference in success rate, FLBRA minus RBF.
pub fn f_parameter(s_flbra: &[f64], s_rbf: &[f64]) -> Result<f64> {
    if s_flbra.len() != s_rbf.len() {
        return Err(Error::Input(format!(
            "success lists differ in length ({} vs {})",
            s_flbra.len(),
            s_rbf.len()
        )));
    }
    if s_flbra.is_empty() {
        return Err(Error::Input("success lists are empty".into()));
    }
    let n = s_flbra.len() as f64;
    let f = s_flbra.iter().zip(s_rbf).map(|(a, b)| a - b).sum::<f64>() / n;
    if !(-1.0..=1.0).contains(&f) {
        return Err(Error::Consistency(format!("F = {f} outside [-1, 1]")));
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub theta1: f64,
    pub mean: f64,
    pub theta2: f64,
}

impl ConfidenceInterval {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.theta2 - self.theta1)
    }
}

/// Normal-approximation 95% interval of the mean.
pub fn confidence_interval(values: &[f64]) -> Result<ConfidenceInterval> {
    if values.len() < 2 {
        return Err(Error::Statistics(format!(
            "confidence interval needs at least 2 values, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = Z_975 * var.sqrt() / n.sqrt();
    Ok(ConfidenceInterval {
        theta1: mean - half,
        mean,
        theta2: mean + half,
    })
}

/// Hop summary for one protocol over one set of sources.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtocolHops {
    /// Mean over delivered sources; `None` if nothing was delivered.
    pub avg: Option<f64>,
    /// Longest delivered route.
    pub farthest: Option<usize>,
    pub voids: usize,
}

impl ProtocolHops {
    pub fn of(outcomes: &[DeliveryOutcome]) -> Self {
        let hops: Vec<usize> = outcomes
            .iter()
            .filter(|o| o.delivered)
            .map(|o| o.hops)
            .collect();
        Self {
            avg: (!hops.is_empty()).then(|| hops.iter().sum::<usize>() as f64 / hops.len() as f64),
            farthest: hops.iter().copied().max(),
            voids: outcomes.len() - hops.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopStats {
    pub flbra: ProtocolHops,
    pub rbf: ProtocolHops,
}

pub fn hop_stats(flbra: &[DeliveryOutcome], rbf: &[DeliveryOutcome]) -> Result<HopStats> {
    if flbra.is_empty() || rbf.is_empty() {
        return Err(Error::Input(
            "hop statistics need at least one outcome per protocol".into(),
        ));
    }
    Ok(HopStats {
        flbra: ProtocolHops::of(flbra),
        rbf: ProtocolHops::of(rbf),
    })
}

/// Per-iteration results, aligned by sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub nodes: Vec<u32>,
    pub s_flbra: Vec<f64>,
    pub s_rbf: Vec<f64>,
    /// `None` marks a void.
    pub hops_flbra: Vec<Option<usize>>,
    pub hops_rbf: Vec<Option<usize>>,
    pub f: f64,
    pub hops: HopStats,
}

impl IterationRecord {
    pub fn new(
        iteration: usize,
        flbra: &[DeliveryOutcome],
        rbf: &[DeliveryOutcome],
    ) -> Result<Self> {
        Self::with_success(
            iteration,
            flbra,
            rbf,
            flbra.iter().map(success_rate).collect(),
            rbf.iter().map(success_rate).collect(),
        )
    }

    /// Record with externally measured success rates (per-packet mode).
    pub fn with_success(
        iteration: usize,
        flbra: &[DeliveryOutcome],
        rbf: &[DeliveryOutcome],
        s_flbra: Vec<f64>,
        s_rbf: Vec<f64>,
    ) -> Result<Self> {
        if flbra.iter().zip(rbf).any(|(a, b)| a.source != b.source) || flbra.len() != rbf.len() {
            return Err(Error::Input(
                "outcome lists are not aligned by source".into(),
            ));
        }
        let hops =
            |o: &[DeliveryOutcome]| o.iter().map(|d| d.delivered.then_some(d.hops)).collect();
        Ok(Self {
            iteration,
            nodes: flbra.iter().map(|o| o.source.0).collect(),
            f: f_parameter(&s_flbra, &s_rbf)?,
            s_flbra,
            s_rbf,
            hops_flbra: hops(flbra),
            hops_rbf: hops(rbf),
            hops: hop_stats(flbra, rbf)?,
        })
    }
}

/// Aggregate over all iterations of one scenario.
///
/// Hop figures are means over iterations of the per-iteration values;
/// `void_count_rbf` is the total over iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub scenario: String,
    pub iterations: Vec<IterationRecord>,
    pub fm: f64,
    /// `None` when fewer than two iterations ran.
    pub ci: Option<ConfidenceInterval>,
    pub avg_hops_flbra: f64,
    pub avg_hops_rbf: f64,
    pub farthest_flbra: f64,
    pub farthest_rbf: f64,
    pub void_count_flbra: usize,
    pub void_count_rbf: usize,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

impl ScenarioResult {
    pub fn aggregate(
        scenario: impl Into<String>,
        iterations: Vec<IterationRecord>,
    ) -> Result<Self> {
        if iterations.is_empty() {
            return Err(Error::Statistics("no iterations to aggregate".into()));
        }
        let fs: Vec<f64> = iterations.iter().map(|r| r.f).collect();
        let ci = match confidence_interval(&fs) {
            Ok(ci) => Some(ci),
            Err(Error::Statistics(_)) => None,
            Err(e) => return Err(e),
        };
        let it = || iterations.iter().map(|r| r.hops);
        Ok(Self {
            scenario: scenario.into(),
            fm: mean(fs.iter().copied()),
            ci,
            avg_hops_flbra: mean(it().filter_map(|h| h.flbra.avg)),
            avg_hops_rbf: mean(it().filter_map(|h| h.rbf.avg)),
            farthest_flbra: mean(it().filter_map(|h| h.flbra.farthest.map(|f| f as f64))),
            farthest_rbf: mean(it().filter_map(|h| h.rbf.farthest.map(|f| f as f64))),
            void_count_flbra: it().map(|h| h.flbra.voids).sum(),
            void_count_rbf: it().map(|h| h.rbf.voids).sum(),
            iterations,
        })
    }

    pub fn theta1(&self) -> Option<f64> {
        self.ci.map(|c| c.theta1)
    }

    pub fn theta2(&self) -> Option<f64> {
        self.ci.map(|c| c.theta2)
    }
}
