//! F1 power: per-class correctness cells, paired predictions, and a
//! randomization test on the F1 difference.
//!
//! A wrong prediction for an item of class `c` is drawn uniformly from the
//! other classes. Binary tasks use positive-class F1 (class index 1),
//! multiclass tasks macro-averaged F1.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::RngCore;
use serde::Serialize;

use super::ContingencySpec;
use crate::rng::{uniform, SimRng};
use crate::significance::TestResult;
use crate::sim::{estimate_power, GenerativeProcess, PowerReport, SimulationConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerClassContingency {
    /// Label distribution `p(c)`.
    pub priors: Vec<f64>,
    /// Correctness cells of the two models on items of each class.
    pub cells: Vec<ContingencySpec>,
}

impl PerClassContingency {
    pub fn new(priors: Vec<f64>, cells: Vec<ContingencySpec>) -> Result<Self> {
        let s = Self { priors, cells };
        s.validate()?;
        Ok(s)
    }

    /// Binary task given Table-style prediction cells per class: for items
    /// whose gold label is `class`, the probabilities that (m1, m2) predict
    /// (negative, negative), (positive, negative), (negative, positive) and
    /// (positive, positive).
    pub fn binary_from_predictions(prior_positive: f64, negative: [f64; 4], positive: [f64; 4]) -> Result<Self> {
        // On negatives, predicting negative is correct.
        let neg = ContingencySpec::new(negative[0], negative[2], negative[1], negative[3])?;
        let pos = ContingencySpec::new(positive[3], positive[1], positive[2], positive[0])?;
        Self::new(vec![1.0 - prior_positive, prior_positive], vec![neg, pos])
    }

    /// Empirical label distribution and per-class correctness cells from
    /// class indices in `0..k`.
    pub fn estimate(gold: &[u16], m1: &[u16], m2: &[u16], k: usize) -> Result<Self> {
        if gold.len() != m1.len() || gold.len() != m2.len() {
            return Err(Error::LengthMismatch {
                what: "gold vs predictions",
                left: gold.len(),
                right: m1.len().min(m2.len()),
            });
        }
        if gold.is_empty() {
            return Err(Error::Empty("predictions"));
        }
        let mut counts = vec![[0u64; 4]; k];
        for i in 0..gold.len() {
            let g = gold[i] as usize;
            if g >= k || m1[i] as usize >= k || m2[i] as usize >= k {
                return Err(Error::Misaligned {
                    index: i,
                    reason: format!("label index outside 0..{k}"),
                });
            }
            let cell = match (m1[i] == gold[i], m2[i] == gold[i]) {
                (true, true) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (false, false) => 3,
            };
            counts[g][cell] += 1;
        }
        let n = gold.len() as f64;
        let mut priors = Vec::with_capacity(k);
        let mut cells = Vec::with_capacity(k);
        for c in &counts {
            let t: u64 = c.iter().sum();
            priors.push(t as f64 / n);
            cells.push(if t == 0 {
                ContingencySpec::new(1.0, 0.0, 0.0, 0.0)?
            } else {
                let t = t as f64;
                let f = |x: u64| x as f64 / t;
                // Close the sum exactly so rounding cannot fail validation.
                ContingencySpec::new(f(c[0]), f(c[1]), f(c[2]), (1.0 - f(c[0]) - f(c[1]) - f(c[2])).max(0.0))?
            });
        }
        let s: f64 = priors.iter().sum();
        let last = priors.len() - 1;
        priors[last] = (priors[last] + 1.0 - s).max(0.0);
        Self::new(priors, cells)
    }

    pub fn classes(&self) -> usize {
        self.priors.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.priors.len() < 2 {
            return Err(Error::param("classes", "need at least two classes"));
        }
        if self.priors.len() != self.cells.len() {
            return Err(Error::LengthMismatch {
                what: "class priors vs cells",
                left: self.priors.len(),
                right: self.cells.len(),
            });
        }
        if self.priors.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::param("priors", "must be non-negative"));
        }
        let s: f64 = self.priors.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::param("priors", format!("sum to {s}, not 1")));
        }
        for c in &self.cells {
            c.validate()?;
        }
        Ok(())
    }

    /// Warnings for classes that can never occur.
    pub fn warnings(&self) -> Vec<String> {
        self.priors
            .iter()
            .enumerate()
            .filter(|(_, p)| **p == 0.0)
            .map(|(c, _)| format!("class {c} has prior 0; its cells are ignored"))
            .collect()
    }

    /// Per-model accuracy on each class.
    fn accuracies(&self) -> [Vec<f64>; 2] {
        [
            self.cells.iter().map(|c| c.m1_accuracy()).collect(),
            self.cells.iter().map(|c| c.m2_accuracy()).collect(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum F1Average {
    /// F1 of class 1.
    Binary,
    Macro,
}

impl F1Average {
    pub fn for_classes(k: usize) -> Self {
        if k == 2 {
            F1Average::Binary
        } else {
            F1Average::Macro
        }
    }
}

fn class_f1(tp: f64, fp: f64, fn_: f64) -> f64 {
    let d = 2.0 * tp + fp + fn_;
    if d == 0.0 {
        0.0
    } else {
        2.0 * tp / d
    }
}

/// Confusion tallies for one model.
#[derive(Debug, Clone)]
struct Tally {
    tp: Vec<i64>,
    fp: Vec<i64>,
    fn_: Vec<i64>,
}

impl Tally {
    fn new(k: usize) -> Self {
        Self {
            tp: vec![0; k],
            fp: vec![0; k],
            fn_: vec![0; k],
        }
    }

    fn add(&mut self, gold: u16, pred: u16, w: i64) {
        if gold == pred {
            self.tp[gold as usize] += w;
        } else {
            self.fn_[gold as usize] += w;
            self.fp[pred as usize] += w;
        }
    }

    fn f1(&self, avg: F1Average) -> f64 {
        match avg {
            F1Average::Binary => class_f1(self.tp[1] as f64, self.fp[1] as f64, self.fn_[1] as f64),
            F1Average::Macro => {
                let k = self.tp.len();
                (0..k)
                    .map(|c| class_f1(self.tp[c] as f64, self.fp[c] as f64, self.fn_[c] as f64))
                    .sum::<f64>()
                    / k as f64
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct F1Dataset {
    pub gold: Vec<u16>,
    pub m1: Vec<u16>,
    pub m2: Vec<u16>,
}

/// Paired-prediction process for F1 comparisons.
#[derive(Debug, Clone)]
pub struct F1Process {
    spec: PerClassContingency,
    n: u64,
    randomizations: u64,
    average: F1Average,
    effect: f64,
    cum_priors: Vec<f64>,
}

impl F1Process {
    pub fn new(spec: PerClassContingency, n: u64, randomizations: u64, average: F1Average) -> Result<Self> {
        spec.validate()?;
        if n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        if randomizations < 100 {
            return Err(Error::param("R", "at least 100 randomizations are required"));
        }
        if average == F1Average::Binary && spec.classes() != 2 {
            return Err(Error::param("average", "binary F1 needs exactly two classes"));
        }
        let mut acc = 0.0;
        let cum_priors = spec
            .priors
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let effect = population_f1(&spec, average, 1) - population_f1(&spec, average, 0);
        Ok(Self {
            spec,
            n,
            randomizations,
            average,
            effect,
            cum_priors,
        })
    }

    pub fn spec(&self) -> &PerClassContingency {
        &self.spec
    }

    fn other_label(&self, rng: &mut SimRng, gold: u16) -> u16 {
        let k = self.spec.classes() as u16;
        if k == 2 {
            return 1 - gold;
        }
        let j = ((uniform(rng) * (k - 1) as f64) as u16).min(k - 2);
        if j >= gold {
            j + 1
        } else {
            j
        }
    }

    fn f1_diff(&self, data: &F1Dataset) -> f64 {
        let k = self.spec.classes();
        let (mut t1, mut t2) = (Tally::new(k), Tally::new(k));
        for i in 0..data.gold.len() {
            t1.add(data.gold[i], data.m1[i], 1);
            t2.add(data.gold[i], data.m2[i], 1);
        }
        t2.f1(self.average) - t1.f1(self.average)
    }
}

/// F1 of one model at the population level (expected confusion rates).
fn population_f1(spec: &PerClassContingency, average: F1Average, model: usize) -> f64 {
    let k = spec.classes();
    let acc = &spec.accuracies()[model];
    let tp: Vec<f64> = (0..k).map(|c| spec.priors[c] * acc[c]).collect();
    let fn_: Vec<f64> = (0..k).map(|c| spec.priors[c] * (1.0 - acc[c])).collect();
    let fp: Vec<f64> = (0..k)
        .map(|c| (0..k).filter(|&o| o != c).map(|o| fn_[o] / (k - 1) as f64).sum())
        .collect();
    match average {
        F1Average::Binary => class_f1(tp[1], fp[1], fn_[1]),
        F1Average::Macro => (0..k).map(|c| class_f1(tp[c], fp[c], fn_[c])).sum::<f64>() / k as f64,
    }
}

impl GenerativeProcess for F1Process {
    type Dataset = F1Dataset;

    fn n(&self) -> u64 {
        self.n
    }

    /// Population F1 difference `F1(m2) - F1(m1)`.
    fn effect(&self) -> f64 {
        self.effect
    }

    fn sample(&self, rng: &mut SimRng) -> Result<F1Dataset> {
        let n = self.n as usize;
        let mut d = F1Dataset {
            gold: Vec::with_capacity(n),
            m1: Vec::with_capacity(n),
            m2: Vec::with_capacity(n),
        };
        let last = self.spec.classes() - 1;
        for _ in 0..n {
            let u = uniform(rng);
            let c = self.cum_priors.iter().position(|&p| u < p).unwrap_or(last);
            let cells = self.spec.cells[c].cells();
            let v = uniform(rng);
            let (ok1, ok2) = if v < cells[0] {
                (true, true)
            } else if v < cells[0] + cells[1] {
                (true, false)
            } else if v < cells[0] + cells[1] + cells[2] {
                (false, true)
            } else {
                (false, false)
            };
            let c = c as u16;
            let p1 = if ok1 { c } else { self.other_label(rng, c) };
            let p2 = if ok2 { c } else { self.other_label(rng, c) };
            d.gold.push(c);
            d.m1.push(p1);
            d.m2.push(p2);
        }
        Ok(d)
    }

    fn statistic(&self, data: &F1Dataset) -> f64 {
        self.f1_diff(data)
    }

    fn test(&self, data: &F1Dataset, rng: &mut SimRng) -> Result<TestResult> {
        Ok(f1_randomization_test(data, self.spec.classes(), self.average, self.randomizations, rng))
    }
}

/// Randomization test of the F1 difference: each item's two predictions are
/// exchanged with probability 1/2. Only items where the models disagree can
/// change the statistic, so only those are visited.
pub fn f1_randomization_test(data: &F1Dataset, k: usize, average: F1Average, r: u64, rng: &mut SimRng) -> TestResult {
    let (mut t1, mut t2) = (Tally::new(k), Tally::new(k));
    let mut disagree = Vec::new();
    for i in 0..data.gold.len() {
        t1.add(data.gold[i], data.m1[i], 1);
        t2.add(data.gold[i], data.m2[i], 1);
        if data.m1[i] != data.m2[i] {
            disagree.push(i);
        }
    }
    let observed = t2.f1(average) - t1.f1(average);
    let thresh = observed.abs() - 1e-12;
    let mut count = 0u64;
    let (mut s1, mut s2) = (t1.clone(), t2.clone());
    for _ in 0..r {
        s1.tp.copy_from_slice(&t1.tp);
        s1.fp.copy_from_slice(&t1.fp);
        s1.fn_.copy_from_slice(&t1.fn_);
        s2.tp.copy_from_slice(&t2.tp);
        s2.fp.copy_from_slice(&t2.fp);
        s2.fn_.copy_from_slice(&t2.fn_);
        let mut bits = 0u64;
        for (j, &i) in disagree.iter().enumerate() {
            if j % 64 == 0 {
                bits = rng.next_u64();
            }
            if bits & 1 == 1 {
                let (g, a, b) = (data.gold[i], data.m1[i], data.m2[i]);
                s1.add(g, a, -1);
                s1.add(g, b, 1);
                s2.add(g, b, -1);
                s2.add(g, a, 1);
            }
            bits >>= 1;
        }
        if (s2.f1(average) - s1.f1(average)).abs() >= thresh {
            count += 1;
        }
    }
    let p = (1 + count) as f64 / (r + 1) as f64;
    TestResult::new(p, observed, observed, "f1_randomization")
}

/// Power of the F1 randomization test for given per-class cells.
pub fn f1_power_sim(
    spec: &PerClassContingency,
    n: u64,
    randomizations: u64,
    average: Option<F1Average>,
    config: &SimulationConfig,
) -> Result<PowerReport> {
    let avg = average.unwrap_or_else(|| F1Average::for_classes(spec.classes()));
    let process = F1Process::new(spec.clone(), n, randomizations, avg)?;
    let mut report = estimate_power(&process, config)?;
    let mut w = spec.warnings();
    w.append(&mut report.diagnostics);
    report.diagnostics = w;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cells(bc: f64, o1: f64, o2: f64) -> ContingencySpec {
        ContingencySpec::new(bc, o1, o2, (1.0 - bc - o1 - o2).max(0.0)).unwrap()
    }

    #[test]
    fn estimate_counts_cells_per_class() {
        let gold = [0, 0, 0, 0, 1, 1];
        let m1 = [0, 0, 1, 1, 1, 0];
        let m2 = [0, 1, 0, 1, 1, 1];
        let s = PerClassContingency::estimate(&gold, &m1, &m2, 2).unwrap();
        assert!((s.priors[0] - 4.0 / 6.0).abs() < 1e-15 && (s.priors[1] - 2.0 / 6.0).abs() < 1e-15);
        assert_eq!(s.cells[0].cells(), [0.25, 0.25, 0.25, 0.25]);
        assert_eq!(s.cells[1].cells(), [0.5, 0.0, 0.5, 0.0]);
        assert!(PerClassContingency::estimate(&gold, &m1, &m2[..5], 2).is_err());
    }

    #[test]
    fn identical_cells_have_zero_effect() {
        let s = PerClassContingency::new(vec![0.5, 0.3, 0.2], vec![cells(0.7, 0.1, 0.1); 3]).unwrap();
        let p = F1Process::new(s, 100, 200, F1Average::Macro).unwrap();
        assert_eq!(p.effect(), 0.0);
    }

    #[test]
    fn binary_layout_maps_to_correctness() {
        let s = PerClassContingency::binary_from_predictions(0.4, [0.8, 0.05, 0.1, 0.05], [0.05, 0.1, 0.05, 0.8]).unwrap();
        // Negatives: m1 correct when it predicts negative.
        assert!((s.cells[0].m1_accuracy() - 0.9).abs() < 1e-12);
        assert!((s.cells[0].m2_accuracy() - 0.85).abs() < 1e-12);
        assert!((s.cells[1].m1_accuracy() - 0.9).abs() < 1e-12);
        assert!((s.cells[1].m2_accuracy() - 0.85).abs() < 1e-12);
    }

    #[test]
    fn sampled_labels_are_in_range_and_wrong_when_incorrect() {
        let s = PerClassContingency::new(vec![0.2, 0.3, 0.5], vec![cells(0.0, 0.0, 0.0); 3]).unwrap();
        let p = F1Process::new(s, 500, 100, F1Average::Macro).unwrap();
        let d = p.sample(&mut crate::rng::stream(1, 0)).unwrap();
        for i in 0..500 {
            assert!(d.gold[i] < 3);
            assert_ne!(d.m1[i], d.gold[i]);
            assert_ne!(d.m2[i], d.gold[i]);
        }
    }

    #[test]
    fn zero_prior_warns() {
        let s = PerClassContingency::new(vec![1.0, 0.0], vec![cells(0.9, 0.05, 0.05); 2]).unwrap();
        assert_eq!(s.warnings().len(), 1);
    }
}
