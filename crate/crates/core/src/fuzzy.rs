//! Mamdani fuzzy inference for link costs.
//!
//! A link is described by three crisp measurements (mean RSSI, RSSI standard
//! deviation, packet error rate). Each one is fuzzified against three
//! piecewise-linear sets, the eleven-row rule base fires with `min` as the
//! AND operator, consequents are clipped and aggregated with `max`, and the
//! resulting `Cost` membership is collapsed to a crisp value by its centroid.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link_model::LinkQuality;

/// Piecewise-linear fuzzy set over one scalar axis.
///
/// Outside its breakpoint span the function holds the degree of the nearest
/// endpoint, so a set ending at degree 1.0 behaves as a shoulder.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipFunction {
    label: String,
    points: Vec<(f64, f64)>,
}

impl MembershipFunction {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Result<Self> {
        let label = label.into();
        if points.is_empty() {
            return Err(Error::FuzzyConfig(format!(
                "set `{label}` has no breakpoints"
            )));
        }
        for &(x, d) in &points {
            if !x.is_finite() || !d.is_finite() {
                return Err(Error::FuzzyConfig(format!(
                    "set `{label}` has a non-finite breakpoint ({x}, {d})"
                )));
            }
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::FuzzyConfig(format!(
                    "set `{label}` has degree {d} outside [0, 1]"
                )));
            }
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::FuzzyConfig(format!(
                "set `{label}` breakpoints are not strictly increasing in x"
            )));
        }
        Ok(Self { label, points })
    }

    /// Trapezoid `a <= b <= c <= d` rising on `[a, b]`, flat on `[b, c]` and
    /// falling on `[c, d]`. `a == b` gives a left shoulder, `c == d` a right one.
    pub fn trapezoid(label: impl Into<String>, [a, b, c, d]: [f64; 4]) -> Result<Self> {
        let label = label.into();
        if !(a <= b && b <= c && c <= d) {
            return Err(Error::FuzzyConfig(format!(
                "set `{label}` trapezoid ({a}, {b}, {c}, {d}) is not ordered"
            )));
        }
        let mut points = Vec::with_capacity(4);
        if a < b {
            points.push((a, 0.0));
        }
        points.push((b, 1.0));
        if c > b {
            points.push((c, 1.0));
        }
        if d > c {
            points.push((d, 0.0));
        }
        Self::new(label, points)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Degree of membership of `x`.
    pub fn degree(&self, x: f64) -> f64 {
        let pts = &self.points;
        let (x0, d0) = pts[0];
        if x <= x0 {
            return d0;
        }
        let (xn, dn) = pts[pts.len() - 1];
        if x >= xn {
            return dn;
        }
        // first breakpoint strictly to the right of x
        let i = pts.partition_point(|&(px, _)| px <= x);
        let (xa, da) = pts[i - 1];
        let (xb, db) = pts[i];
        da + (db - da) * (x - xa) / (xb - xa)
    }
}

/// Free-function form of [`MembershipFunction::degree`].
pub fn membership_degree(mf: &MembershipFunction, x: f64) -> f64 {
    mf.degree(x)
}

/// The four linguistic variables of the link-cost system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariableName {
    Rssi,
    StdDev,
    Per,
    Cost,
}

impl VariableName {
    /// Set labels in the canonical order used for degree arrays.
    pub fn labels(self) -> [&'static str; 3] {
        match self {
            VariableName::Rssi => ["Weak", "Average", "Strong"],
            VariableName::StdDev => ["Good", "Average", "Bad"],
            VariableName::Per => ["Low", "Medium", "High"],
            VariableName::Cost => ["Low", "Medium", "High"],
        }
    }
}

impl fmt::Display for VariableName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VariableName::Rssi => "RSSI",
            VariableName::StdDev => "StdDev",
            VariableName::Per => "PER",
            VariableName::Cost => "Cost",
        })
    }
}

/// A linguistic variable: a closed universe partitioned by three fuzzy sets.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyVariable {
    name: VariableName,
    universe: (f64, f64),
    sets: [MembershipFunction; 3],
}

impl FuzzyVariable {
    pub fn new(
        name: VariableName,
        universe: (f64, f64),
        sets: [MembershipFunction; 3],
    ) -> Result<Self> {
        let (lo, hi) = universe;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::FuzzyConfig(format!(
                "{name} universe [{lo}, {hi}] is empty or non-finite"
            )));
        }
        for (set, expected) in sets.iter().zip(name.labels()) {
            if set.label() != expected {
                return Err(Error::FuzzyConfig(format!(
                    "{name} expects set `{expected}`, found `{}`",
                    set.label()
                )));
            }
        }
        let var = Self {
            name,
            universe,
            sets,
        };
        if let Some(x) = var.coverage_gap() {
            return Err(Error::FuzzyConfig(format!(
                "{name} sets leave x = {x} uncovered"
            )));
        }
        Ok(var)
    }

    pub fn name(&self) -> VariableName {
        self.name
    }

    pub fn universe(&self) -> (f64, f64) {
        self.universe
    }

    pub fn sets(&self) -> &[MembershipFunction; 3] {
        &self.sets
    }

    pub fn set(&self, label: &str) -> Option<&MembershipFunction> {
        self.sets.iter().find(|s| s.label() == label)
    }

    /// Returns a point of the universe where every set has degree zero.
    ///
    /// Between two consecutive breakpoints every set is linear, so probing
    /// the breakpoints and the midpoints between them is exhaustive.
    fn coverage_gap(&self) -> Option<f64> {
        let (lo, hi) = self.universe;
        let mut xs: Vec<f64> = self
            .sets
            .iter()
            .flat_map(|s| s.points().iter().map(|p| p.0))
            .filter(|&x| x > lo && x < hi)
            .chain([lo, hi])
            .collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let mids: Vec<f64> = xs.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        xs.into_iter()
            .chain(mids)
            .find(|&x| self.sets.iter().all(|s| s.degree(x) <= 0.0))
    }

    /// Degrees of `x` in each set, after clamping `x` to the universe.
    pub fn fuzzify(&self, x: f64) -> Result<[f64; 3]> {
        if !x.is_finite() {
            return Err(Error::InvalidMeasurement(format!(
                "{} value {x} is not finite",
                self.name
            )));
        }
        let x = x.clamp(self.universe.0, self.universe.1);
        Ok([
            self.sets[0].degree(x),
            self.sets[1].degree(x),
            self.sets[2].degree(x),
        ])
    }
}

/// Labeled degrees, as returned by [`fuzzify`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fuzzified {
    pub labels: [&'static str; 3],
    pub degrees: [f64; 3],
}

impl Fuzzified {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| *l == label)
            .map(|i| self.degrees[i])
    }
}

pub fn fuzzify(var: &FuzzyVariable, x: f64) -> Result<Fuzzified> {
    Ok(Fuzzified {
        labels: var.name().labels(),
        degrees: var.fuzzify(x)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RssiTerm {
    Weak = 0,
    Average = 1,
    Strong = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StdDevTerm {
    Good = 0,
    Average = 1,
    Bad = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PerTerm {
    Low = 0,
    Medium = 1,
    High = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostTerm {
    Low = 0,
    Medium = 1,
    High = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Antecedent {
    Rssi(RssiTerm),
    StdDev(StdDevTerm),
    Per(PerTerm),
}

impl Antecedent {
    fn degree(self, inputs: &InputDegrees) -> f64 {
        match self {
            Antecedent::Rssi(t) => inputs.rssi[t as usize],
            Antecedent::StdDev(t) => inputs.stddev[t as usize],
            Antecedent::Per(t) => inputs.per[t as usize],
        }
    }
}

/// `IF a1 AND a2 ... THEN Cost is consequent`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzyRule {
    pub antecedents: Vec<Antecedent>,
    pub consequent: CostTerm,
}

impl FuzzyRule {
    pub fn strength(&self, inputs: &InputDegrees) -> f64 {
        self.antecedents
            .iter()
            .map(|a| a.degree(inputs))
            .fold(1.0, f64::min)
    }
}

/// The link-cost rule base.
///
/// The two leading rows repeat the same PER term in every column, so they are
/// single-antecedent rules. The remaining nine cover every RSSI and standard
/// deviation combination under a low PER.
pub fn rule_base() -> Vec<FuzzyRule> {
    use Antecedent::{Per, Rssi, StdDev};
    use CostTerm as C;

    let mut rules = vec![
        FuzzyRule {
            antecedents: vec![Per(PerTerm::High)],
            consequent: C::High,
        },
        FuzzyRule {
            antecedents: vec![Per(PerTerm::Medium)],
            consequent: C::High,
        },
    ];
    let low_per = [
        (RssiTerm::Weak, StdDevTerm::Bad, C::High),
        (RssiTerm::Weak, StdDevTerm::Average, C::Medium),
        (RssiTerm::Weak, StdDevTerm::Good, C::Low),
        (RssiTerm::Average, StdDevTerm::Bad, C::High),
        (RssiTerm::Average, StdDevTerm::Average, C::Medium),
        (RssiTerm::Average, StdDevTerm::Good, C::Low),
        (RssiTerm::Strong, StdDevTerm::Bad, C::High),
        (RssiTerm::Strong, StdDevTerm::Average, C::Low),
        (RssiTerm::Strong, StdDevTerm::Good, C::Low),
    ];
    rules.extend(low_per.into_iter().map(|(rssi, sd, consequent)| FuzzyRule {
        antecedents: vec![Per(PerTerm::Low), Rssi(rssi), StdDev(sd)],
        consequent,
    }));
    rules
}

/// Fuzzified degrees of the three inputs, indexed by term.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InputDegrees {
    pub rssi: [f64; 3],
    pub stddev: [f64; 3],
    pub per: [f64; 3],
}

/// Aggregated output of the rule base: each cost set clipped at the strongest
/// firing among the rules that conclude it, combined by pointwise max.
#[derive(Debug, Clone, Copy)]
pub struct AggregatedCost<'a> {
    cost: &'a FuzzyVariable,
    levels: [f64; 3],
}

impl<'a> AggregatedCost<'a> {
    pub fn new(cost: &'a FuzzyVariable, levels: [f64; 3]) -> Self {
        Self { cost, levels }
    }

    /// Clip level per cost term (Low, Medium, High).
    pub fn levels(&self) -> [f64; 3] {
        self.levels
    }

    pub fn universe(&self) -> (f64, f64) {
        self.cost.universe()
    }

    pub fn membership(&self, x: f64) -> f64 {
        self.cost
            .sets()
            .iter()
            .zip(self.levels)
            .map(|(set, level)| fmin(set.degree(x), level))
            .fold(0.0, fmax)
    }
}

/// Mamdani inference over `rules`.
pub fn infer<'a>(
    rules: &[FuzzyRule],
    inputs: &InputDegrees,
    cost: &'a FuzzyVariable,
) -> AggregatedCost<'a> {
    let mut levels = [0.0_f64; 3];
    for rule in rules {
        let k = rule.consequent as usize;
        levels[k] = levels[k].max(rule.strength(inputs));
    }
    AggregatedCost::new(cost, levels)
}

/// Crisp output of the link-cost pipeline, inside the Cost universe.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CrispCost(f64);

impl CrispCost {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for CrispCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Result of a centroid computation. `fallback` is set when the aggregated
/// membership had zero area and the universe midpoint was returned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centroid {
    pub value: f64,
    pub fallback: bool,
}

pub const DEFAULT_CENTROID_SAMPLES: usize = 1001;

fn sample_grid(universe: (f64, f64), samples: usize) -> Vec<f64> {
    let (lo, hi) = universe;
    let last = (samples - 1) as f64;
    (0..samples)
        .map(|i| lo + (hi - lo) * (i as f64) / last)
        .collect()
}

// Plain compare-and-select; inputs are never NaN and this vectorizes,
// unlike f64::min/max.
#[inline(always)]
fn fmin(a: f64, b: f64) -> f64 {
    if a < b {
        a
    } else {
        b
    }
}

#[inline(always)]
fn fmax(a: f64, b: f64) -> f64 {
    if a > b {
        a
    } else {
        b
    }
}

/// Trapezoidal centre of area over evenly spaced samples `xs`, with the
/// membership of sample `i` given by `mu(i)`.
#[inline(always)]
fn centroid_of_samples(universe: (f64, f64), xs: &[f64], mu: impl Fn(usize) -> f64) -> Centroid {
    // four independent accumulators so the loop vectorizes
    let mut num = [0.0_f64; 4];
    let mut den = [0.0_f64; 4];
    let full = xs.len() - xs.len() % 4;
    for base in (0..full).step_by(4) {
        for k in 0..4 {
            let m = mu(base + k);
            num[k] += xs[base + k] * m;
            den[k] += m;
        }
    }
    for (i, &x) in xs.iter().enumerate().skip(full) {
        let m = mu(i);
        num[0] += x * m;
        den[0] += m;
    }
    let n = xs.len() - 1;
    let (m0, mn) = (mu(0), mu(n));
    let num = (num[0] + num[1]) + (num[2] + num[3]) - 0.5 * (xs[0] * m0 + xs[n] * mn);
    let den = (den[0] + den[1]) + (den[2] + den[3]) - 0.5 * (m0 + mn);
    if den > 0.0 {
        Centroid {
            value: (num / den).clamp(universe.0, universe.1),
            fallback: false,
        }
    } else {
        Centroid {
            value: 0.5 * (universe.0 + universe.1),
            fallback: true,
        }
    }
}

/// Centroid of an arbitrary membership curve over `universe`, using
/// `samples` evenly spaced points (at least 2).
pub fn centroid(universe: (f64, f64), samples: usize, mu: impl Fn(f64) -> f64) -> Centroid {
    let xs = sample_grid(universe, samples.max(2));
    let values: Vec<f64> = xs.iter().map(|&x| mu(x)).collect();
    centroid_of_samples(universe, &xs, |i| values[i])
}

/// Centroid of an aggregated cost at the given resolution.
pub fn defuzzify_centroid(aggregated: &AggregatedCost<'_>, samples: usize) -> Centroid {
    centroid(aggregated.universe(), samples, |x| aggregated.membership(x))
}

/// Serializable set shape: a trapezoid `[a, b, c, d]` or explicit
/// `[[x, degree], ...]` breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetShape {
    Trapezoid([f64; 4]),
    Points(Vec<[f64; 2]>),
}

impl SetShape {
    pub fn build(&self, label: &str) -> Result<MembershipFunction> {
        match self {
            SetShape::Trapezoid(t) => MembershipFunction::trapezoid(label, *t),
            SetShape::Points(p) => {
                MembershipFunction::new(label, p.iter().map(|&[x, d]| (x, d)).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RssiSets {
    pub weak: SetShape,
    pub average: SetShape,
    pub strong: SetShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StdDevSets {
    pub good: SetShape,
    pub average: SetShape,
    pub bad: SetShape,
}

/// Low / Medium / High partition, shared by PER and Cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSets {
    pub low: SetShape,
    pub medium: SetShape,
    pub high: SetShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableConfig<S> {
    pub universe: [f64; 2],
    pub sets: S,
}

/// Membership breakpoints for the four variables plus centroid resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuzzyConfig {
    pub centroid_samples: usize,
    pub rssi: VariableConfig<RssiSets>,
    pub stddev: VariableConfig<StdDevSets>,
    pub per: VariableConfig<LevelSets>,
    pub cost: VariableConfig<LevelSets>,
}

impl Default for FuzzyConfig {
    fn default() -> Self {
        use SetShape::Trapezoid as T;
        Self {
            centroid_samples: DEFAULT_CENTROID_SAMPLES,
            rssi: VariableConfig {
                universe: [-90.0, -20.0],
                sets: RssiSets {
                    weak: T([-90.0, -90.0, -75.0, -60.0]),
                    average: T([-75.0, -60.0, -50.0, -40.0]),
                    strong: T([-50.0, -40.0, -20.0, -20.0]),
                },
            },
            stddev: VariableConfig {
                universe: [0.0, 10.0],
                sets: StdDevSets {
                    good: T([0.0, 0.0, 1.0, 3.0]),
                    average: T([1.0, 3.0, 5.0, 7.0]),
                    bad: T([5.0, 7.0, 10.0, 10.0]),
                },
            },
            per: VariableConfig {
                universe: [0.0, 1.0],
                sets: LevelSets {
                    low: T([0.0, 0.0, 0.05, 0.15]),
                    medium: T([0.05, 0.15, 0.3, 0.5]),
                    high: T([0.3, 0.5, 1.0, 1.0]),
                },
            },
            cost: VariableConfig {
                universe: [0.0, 1.0],
                sets: LevelSets {
                    low: T([0.0, 0.0, 0.2, 0.4]),
                    medium: T([0.2, 0.4, 0.6, 0.8]),
                    high: T([0.6, 0.8, 1.0, 1.0]),
                },
            },
        }
    }
}

fn variable(
    name: VariableName,
    universe: [f64; 2],
    shapes: [&SetShape; 3],
) -> Result<FuzzyVariable> {
    let [a, b, c] = name.labels();
    FuzzyVariable::new(
        name,
        (universe[0], universe[1]),
        [
            shapes[0].build(a)?,
            shapes[1].build(b)?,
            shapes[2].build(c)?,
        ],
    )
}

impl FuzzyConfig {
    pub fn rssi_variable(&self) -> Result<FuzzyVariable> {
        let s = &self.rssi.sets;
        variable(
            VariableName::Rssi,
            self.rssi.universe,
            [&s.weak, &s.average, &s.strong],
        )
    }

    pub fn stddev_variable(&self) -> Result<FuzzyVariable> {
        let s = &self.stddev.sets;
        variable(
            VariableName::StdDev,
            self.stddev.universe,
            [&s.good, &s.average, &s.bad],
        )
    }

    pub fn per_variable(&self) -> Result<FuzzyVariable> {
        let s = &self.per.sets;
        variable(
            VariableName::Per,
            self.per.universe,
            [&s.low, &s.medium, &s.high],
        )
    }

    pub fn cost_variable(&self) -> Result<FuzzyVariable> {
        let s = &self.cost.sets;
        variable(
            VariableName::Cost,
            self.cost.universe,
            [&s.low, &s.medium, &s.high],
        )
    }
}

/// Ready-to-evaluate link-cost system.
///
/// The cost sets are tabulated once on the centroid grid, which keeps
/// per-link evaluation to a single pass over the samples.
#[derive(Debug)]
pub struct FuzzyEngine {
    rssi: FuzzyVariable,
    stddev: FuzzyVariable,
    per: FuzzyVariable,
    cost: FuzzyVariable,
    rules: Vec<FuzzyRule>,
    grid: Vec<f64>,
    cost_samples: [Vec<f64>; 3],
    fallbacks: AtomicU64,
}

impl Clone for FuzzyEngine {
    fn clone(&self) -> Self {
        Self {
            rssi: self.rssi.clone(),
            stddev: self.stddev.clone(),
            per: self.per.clone(),
            cost: self.cost.clone(),
            rules: self.rules.clone(),
            grid: self.grid.clone(),
            cost_samples: self.cost_samples.clone(),
            fallbacks: AtomicU64::new(self.fallback_count()),
        }
    }
}

impl FuzzyEngine {
    pub fn new(cfg: &FuzzyConfig) -> Result<Self> {
        if cfg.centroid_samples < 2 {
            return Err(Error::FuzzyConfig(format!(
                "centroid_samples must be at least 2, got {}",
                cfg.centroid_samples
            )));
        }
        let cost = cfg.cost_variable()?;
        let grid = sample_grid(cost.universe(), cfg.centroid_samples);
        let tabulate = |k: usize| grid.iter().map(|&x| cost.sets()[k].degree(x)).collect();
        let cost_samples = [tabulate(0), tabulate(1), tabulate(2)];
        Ok(Self {
            rssi: cfg.rssi_variable()?,
            stddev: cfg.stddev_variable()?,
            per: cfg.per_variable()?,
            rules: rule_base(),
            grid,
            cost_samples,
            cost,
            fallbacks: AtomicU64::new(0),
        })
    }

    pub fn rssi(&self) -> &FuzzyVariable {
        &self.rssi
    }

    pub fn stddev(&self) -> &FuzzyVariable {
        &self.stddev
    }

    pub fn per(&self) -> &FuzzyVariable {
        &self.per
    }

    pub fn cost(&self) -> &FuzzyVariable {
        &self.cost
    }

    pub fn rules(&self) -> &[FuzzyRule] {
        &self.rules
    }

    pub fn samples(&self) -> usize {
        self.grid.len()
    }

    /// Number of zero-area defuzzifications seen so far.
    pub fn fallback_count(&self) -> u64 {
        self.fallbacks.load(Ordering::Relaxed)
    }

    pub fn fuzzify_inputs(&self, mean_rssi: f64, stddev: f64, per: f64) -> Result<InputDegrees> {
        Ok(InputDegrees {
            rssi: self.rssi.fuzzify(mean_rssi)?,
            stddev: self.stddev.fuzzify(stddev)?,
            per: self.per.fuzzify(per)?,
        })
    }

    pub fn infer(&self, inputs: &InputDegrees) -> AggregatedCost<'_> {
        infer(&self.rules, inputs, &self.cost)
    }

    /// Centroid of `aggregated` on the engine's tabulated grid.
    pub fn defuzzify(&self, aggregated: &AggregatedCost<'_>) -> Centroid {
        let [l0, l1, l2] = aggregated.levels();
        let [s0, s1, s2] = &self.cost_samples;
        let n = self.grid.len();
        let (s0, s1, s2) = (&s0[..n], &s1[..n], &s2[..n]);
        let c = centroid_of_samples(self.cost.universe(), &self.grid, |i| {
            fmax(fmax(fmin(s0[i], l0), fmin(s1[i], l1)), fmin(s2[i], l2))
        });
        if c.fallback {
            self.fallbacks.fetch_add(1, Ordering::Relaxed);
        }
        c
    }

    /// Crisp cost of a link from its (mean RSSI, RSSI deviation, PER) triple.
    pub fn evaluate(&self, mean_rssi: f64, stddev: f64, per: f64) -> Result<CrispCost> {
        if per.is_finite() && !(0.0..=1.0).contains(&per) {
            return Err(Error::InvalidMeasurement(format!(
                "PER {per} outside [0, 1]"
            )));
        }
        let inputs = self.fuzzify_inputs(mean_rssi, stddev, per)?;
        Ok(CrispCost(self.defuzzify(&self.infer(&inputs)).value))
    }

    pub fn link_cost(&self, q: &LinkQuality) -> Result<CrispCost> {
        self.evaluate(q.mean_rssi, q.rssi_stddev, q.per)
    }
}

/// Free-function form of [`FuzzyEngine::link_cost`]. Builds a throwaway
/// engine, so prefer the method in loops.
pub fn link_cost(q: &LinkQuality, cfg: &FuzzyConfig) -> Result<CrispCost> {
    FuzzyEngine::new(cfg)?.link_cost(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> MembershipFunction {
        MembershipFunction::new("t", vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)]).unwrap()
    }

    fn engine() -> FuzzyEngine {
        FuzzyEngine::new(&FuzzyConfig::default()).unwrap()
    }

    #[test]
    fn triangle_degrees() {
        let t = triangle();
        assert_eq!(membership_degree(&t, 0.5), 1.0);
        assert_eq!(membership_degree(&t, 0.25), 0.5);
        assert_eq!(membership_degree(&t, 2.0), 0.0);
        assert_eq!(membership_degree(&t, -3.0), 0.0);
    }

    #[test]
    fn shoulders_hold_endpoint_degree() {
        let weak = MembershipFunction::trapezoid("Weak", [-90.0, -90.0, -75.0, -60.0]).unwrap();
        assert_eq!(weak.points(), &[(-90.0, 1.0), (-75.0, 1.0), (-60.0, 0.0)]);
        assert_eq!(weak.degree(-120.0), 1.0);
        assert_eq!(weak.degree(-67.5), 0.5);
        assert_eq!(weak.degree(0.0), 0.0);
    }

    #[test]
    fn rejects_bad_breakpoints() {
        assert!(MembershipFunction::new("x", vec![(0.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(MembershipFunction::new("x", vec![(0.0, 0.0), (1.0, 1.5)]).is_err());
        assert!(MembershipFunction::new("x", vec![]).is_err());
        assert!(MembershipFunction::trapezoid("x", [0.0, 2.0, 1.0, 3.0]).is_err());
    }

    #[test]
    fn coverage_gap_is_rejected() {
        let mut cfg = FuzzyConfig::default();
        cfg.per.sets.medium = SetShape::Trapezoid([0.2, 0.25, 0.3, 0.35]);
        let err = cfg.per_variable().unwrap_err();
        assert!(matches!(err, Error::FuzzyConfig(_)), "{err}");
    }

    #[test]
    fn wrong_label_is_rejected() {
        let sets = [
            MembershipFunction::trapezoid("Low", [0.0, 0.0, 0.4, 0.6]).unwrap(),
            MembershipFunction::trapezoid("Mid", [0.2, 0.4, 0.6, 0.8]).unwrap(),
            MembershipFunction::trapezoid("High", [0.4, 0.6, 1.0, 1.0]).unwrap(),
        ];
        assert!(FuzzyVariable::new(VariableName::Cost, (0.0, 1.0), sets).is_err());
    }

    #[test]
    fn fuzzify_universe_floor_and_perfect_link() {
        let e = engine();
        let rssi = fuzzify(e.rssi(), -90.0).unwrap();
        assert_eq!(rssi.degrees, [1.0, 0.0, 0.0]);
        assert_eq!(rssi.get("Weak"), Some(1.0));
        let per = fuzzify(e.per(), 0.0).unwrap();
        assert_eq!(per.degrees, [1.0, 0.0, 0.0]);
        // below the floor clamps to it
        assert_eq!(e.rssi().fuzzify(-140.0).unwrap(), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn fuzzify_rejects_non_finite() {
        let e = engine();
        assert!(matches!(
            e.rssi().fuzzify(f64::NAN),
            Err(Error::InvalidMeasurement(_))
        ));
        assert!(matches!(
            e.per().fuzzify(f64::INFINITY),
            Err(Error::InvalidMeasurement(_))
        ));
    }

    #[test]
    fn rule_base_shape() {
        let rules = rule_base();
        assert_eq!(rules.len(), 11);
        assert_eq!(rules.iter().filter(|r| r.antecedents.len() == 1).count(), 2);
        assert_eq!(rules.iter().filter(|r| r.antecedents.len() == 3).count(), 9);
        assert!(rules
            .iter()
            .filter(|r| r.antecedents.len() == 3)
            .all(|r| r.antecedents[0] == Antecedent::Per(PerTerm::Low)));
    }

    #[test]
    fn high_per_clips_only_cost_high() {
        let e = engine();
        let inputs = InputDegrees {
            rssi: [0.3, 0.7, 0.0],
            stddev: [0.0, 0.4, 0.6],
            per: [0.0, 0.0, 1.0],
        };
        assert_eq!(e.infer(&inputs).levels(), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn perfect_link_clips_only_cost_low() {
        let e = engine();
        let inputs = InputDegrees {
            rssi: [0.0, 0.0, 1.0],
            stddev: [1.0, 0.0, 0.0],
            per: [1.0, 0.0, 0.0],
        };
        assert_eq!(e.infer(&inputs).levels(), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn mixed_per_clips_medium_and_high() {
        // rows: Medium PER -> High (0.4); Low PER & Average & Average -> Medium (0.6)
        let e = engine();
        let inputs = InputDegrees {
            rssi: [0.0, 1.0, 0.0],
            stddev: [0.0, 1.0, 0.0],
            per: [0.6, 0.4, 0.0],
        };
        let agg = e.infer(&inputs);
        assert_eq!(agg.levels(), [0.0, 0.6, 0.4]);
        let medium = e.cost().set("Medium").unwrap();
        let high = e.cost().set("High").unwrap();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let want = medium.degree(x).min(0.6).max(high.degree(x).min(0.4));
            assert_eq!(agg.membership(x), want);
        }
    }

    #[test]
    fn centroid_of_uniform_and_symmetric_triangle() {
        let c = centroid((0.0, 1.0), 1001, |_| 1.0);
        assert!((c.value - 0.5).abs() < 1e-12 && !c.fallback);
        let tri = MembershipFunction::new("t", vec![(0.5, 0.0), (0.7, 1.0), (0.9, 0.0)]).unwrap();
        let c = centroid((0.0, 1.0), 1001, |x| tri.degree(x));
        assert!((c.value - 0.7).abs() < 1e-9, "{}", c.value);
    }

    #[test]
    fn zero_area_falls_back_to_midpoint() {
        let e = engine();
        let agg = AggregatedCost::new(e.cost(), [0.0; 3]);
        let c = e.defuzzify(&agg);
        assert!(c.fallback);
        assert_eq!(c.value, 0.5);
        assert_eq!(e.fallback_count(), 1);
    }

    #[test]
    fn engine_grid_matches_generic_centroid() {
        let e = engine();
        for levels in [[0.2, 0.9, 0.1], [1.0, 0.0, 0.3], [0.0, 0.0, 0.5]] {
            let agg = AggregatedCost::new(e.cost(), levels);
            assert_eq!(e.defuzzify(&agg), defuzzify_centroid(&agg, e.samples()));
        }
    }

    #[test]
    fn link_cost_extremes() {
        let e = engine();
        let good = LinkQuality::new(-40.0, 0.5, 0.0, -90.0);
        let bad = LinkQuality::new(-40.0, 0.5, 1.0, -90.0);
        let low = e.link_cost(&good).unwrap().value();
        let high = e.link_cost(&bad).unwrap().value();
        assert!(low < 1.0 / 3.0, "{low}");
        assert!(high > 2.0 / 3.0, "{high}");
        assert_eq!(
            link_cost(&good, &FuzzyConfig::default()).unwrap().value(),
            low
        );
    }

    #[test]
    fn link_cost_rejects_out_of_range_per() {
        let e = engine();
        assert!(e.evaluate(-50.0, 1.0, 1.5).is_err());
        assert!(e.evaluate(f64::NAN, 1.0, 0.1).is_err());
    }

    #[test]
    fn config_roundtrips_through_toml() {
        let cfg = FuzzyConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: FuzzyConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let pts: FuzzyConfig = toml::from_str(
            "[per.sets]\nlow = [[0.0, 1.0], [0.1, 0.0]]\nmedium = [0.05, 0.15, 0.3, 0.5]\nhigh = [0.3, 0.5, 1.0, 1.0]\n[per]\nuniverse = [0.0, 1.0]\n",
        )
        .unwrap_or_else(|e| panic!("{e}"));
        assert_eq!(
            pts.per_variable().unwrap().sets()[0].points(),
            &[(0.0, 1.0), (0.1, 0.0)]
        );
    }
}
