//! Information and thermodynamic entropy bookkeeping.
//!
//! Information entropy is carried in bits; thermodynamic quantities in nats
//! and energy units. The `ln 2` conversion happens only in
//! [`landauer_min_heat`].

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::harness::EnsembleStats;
use crate::model::BathParams;

/// Per-cell probabilities of bit value 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitEnsemble {
    p1: Vec<f64>,
}

impl BitEnsemble {
    pub fn new(p1: Vec<f64>) -> Result<Self> {
        if let Some((j, p)) = p1
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::Domain(format!(
                "probability of cell {j} must lie in [0, 1], got {p}"
            )));
        }
        Ok(BitEnsemble { p1 })
    }

    /// `n` cells all holding the same probability.
    pub fn uniform(n: usize, p1: f64) -> Result<Self> {
        Self::new(vec![p1; n])
    }

    pub fn p1(&self) -> &[f64] {
        &self.p1
    }

    pub fn len(&self) -> usize {
        self.p1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p1.is_empty()
    }

    /// Cells of `self` followed by cells of `other`.
    pub fn concat(&self, other: &BitEnsemble) -> BitEnsemble {
        let mut p1 = self.p1.clone();
        p1.extend_from_slice(&other.p1);
        BitEnsemble { p1 }
    }
}

/// `p log2(1/p)` with the `0 log 0 = 0` limit.
#[inline]
fn surprisal_term(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

pub fn binary_entropy_bits(p: f64) -> f64 {
    surprisal_term(p) + surprisal_term(1.0 - p)
}

/// Shannon entropy of the ensemble in bits, summed over cells.
pub fn shannon_entropy_bits(ensemble: &BitEnsemble) -> f64 {
    ensemble.p1.iter().map(|&p| binary_entropy_bits(p)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatedEnsemble {
    pub ensemble: BitEnsemble,
    pub stderr: Vec<f64>,
    pub samples: Vec<usize>,
}

/// Plug-in frequencies of bit value 1 per cell, with binomial stderr
/// `sqrt(p (1 - p) / n)`.
pub fn estimate_bit_probabilities<S: AsRef<[bool]>>(outcomes: &[S]) -> Result<EstimatedEnsemble> {
    if outcomes.is_empty() {
        return Err(Error::Usage("no cells to estimate".into()));
    }
    let mut p1 = Vec::with_capacity(outcomes.len());
    let mut stderr = Vec::with_capacity(outcomes.len());
    let mut samples = Vec::with_capacity(outcomes.len());
    for (j, cell) in outcomes.iter().enumerate() {
        let cell = cell.as_ref();
        if cell.is_empty() {
            return Err(Error::Usage(format!("cell {j} has no samples")));
        }
        let n = cell.len();
        let ones = cell.iter().filter(|&&b| b).count();
        let p = ones as f64 / n as f64;
        p1.push(p);
        stderr.push((p * (1.0 - p) / n as f64).sqrt());
        samples.push(n);
    }
    Ok(EstimatedEnsemble {
        ensemble: BitEnsemble { p1 },
        stderr,
        samples,
    })
}

/// Minimum heat allowed by the Landauer inequality: `-kT ln 2 ΔS`.
pub fn landauer_min_heat(delta_s_info_bits: f64, bath: &BathParams) -> f64 {
    -bath.kbt * LN_2 * delta_s_info_bits
}

/// Uniform-width occupancy histogram over a real state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Bin `samples` into `bins` equal cells over `[lo, hi)`; samples
    /// outside the range are dropped and counted in the return value.
    pub fn from_samples(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Result<(Self, u64)> {
        if !(hi > lo) || bins == 0 {
            return Err(Error::Usage("histogram needs hi > lo and bins >= 1".into()));
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0u64; bins];
        let mut dropped = 0;
        for &x in samples {
            let k = ((x - lo) / width).floor();
            if k >= 0.0 && (k as usize) < bins {
                counts[k as usize] += 1;
            } else {
                dropped += 1;
            }
        }
        Ok((
            Histogram {
                lo,
                bin_width: width,
                counts,
            },
            dropped,
        ))
    }
}

/// Differential Gibbs entropy in nats: `-Σ p ln p + ln(bin width)`.
pub fn gibbs_entropy_from_histogram(hist: &Histogram) -> Result<f64> {
    if !(hist.bin_width > 0.0) {
        return Err(Error::Usage("bin width must be > 0".into()));
    }
    let total: u64 = hist.counts.iter().sum();
    if total == 0 {
        return Err(Error::Usage("histogram is empty".into()));
    }
    let n = total as f64;
    let h: f64 = hist
        .counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    Ok(h + hist.bin_width.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Measured heat is at or above the bound.
    Consistent,
    ViolatesBound,
    /// Bound is negative and measured heat is indistinguishable from zero:
    /// satisfied, but it carries no information about the process.
    BoundVacuous,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Consistent => "consistent",
            Verdict::ViolatesBound => "violates-bound",
            Verdict::BoundVacuous => "bound-vacuous",
        }
    }
}

/// Significance band for verdicts, in standard errors.
pub const VERDICT_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErasureReport {
    pub s_info_before: f64,
    pub s_info_after: f64,
    pub delta_s_info: f64,
    pub measured_work: f64,
    pub measured_heat_to_bath: f64,
    pub heat_stderr: f64,
    pub kbt: f64,
    pub landauer_min_heat: f64,
    pub verdict: Verdict,
}

impl ErasureReport {
    /// Whether `landauer_min_heat` agrees with `-kT ln 2 ΔS`.
    pub fn is_self_consistent(&self) -> bool {
        let b = -self.kbt * LN_2 * self.delta_s_info;
        (b - self.landauer_min_heat).abs() <= 1e-12 * b.abs().max(1.0)
    }
}

pub fn classify(heat: f64, stderr: f64, bound: f64) -> Verdict {
    let band = VERDICT_SIGMAS * stderr;
    if bound < 0.0 && heat.abs() <= band {
        Verdict::BoundVacuous
    } else if heat >= bound - band {
        Verdict::Consistent
    } else {
        Verdict::ViolatesBound
    }
}

pub fn make_erasure_report(
    before: &BitEnsemble,
    after: &BitEnsemble,
    stats: &EnsembleStats,
    bath: &BathParams,
) -> Result<ErasureReport> {
    if before.len() != after.len() {
        return Err(Error::Usage(format!(
            "cell count mismatch: {} before, {} after",
            before.len(),
            after.len()
        )));
    }
    let s_before = shannon_entropy_bits(before);
    let s_after = shannon_entropy_bits(after);
    let delta = s_after - s_before;
    let bound = landauer_min_heat(delta, bath);
    let heat = stats.heat_to_bath.mean;
    let stderr = stats.heat_to_bath.stderr;
    Ok(ErasureReport {
        s_info_before: s_before,
        s_info_after: s_after,
        delta_s_info: delta,
        measured_work: stats.work.mean,
        measured_heat_to_bath: heat,
        heat_stderr: stderr,
        kbt: bath.kbt,
        landauer_min_heat: bound,
        verdict: classify(heat, stderr, bound),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Estimate;
    use crate::rng::StreamRng;
    use proptest::prelude::*;

    fn stats_with_heat(mean: f64, stderr: f64) -> EnsembleStats {
        EnsembleStats {
            heat_to_bath: Estimate { mean, stderr },
            ..EnsembleStats::empty(100)
        }
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(
            shannon_entropy_bits(&BitEnsemble::uniform(7, 0.5).unwrap()),
            7.0
        );
        let det = BitEnsemble::new(vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(shannon_entropy_bits(&det), 0.0);
        let quarter = BitEnsemble::new(vec![0.25]).unwrap();
        // -(1/4) log2(1/4) - (3/4) log2(3/4) = 2 - (3/4) log2 3
        let oracle = 2.0 - 0.75 * 3f64.log2();
        assert!((shannon_entropy_bits(&quarter) - oracle).abs() < 1e-15);
        assert!((shannon_entropy_bits(&quarter) - 0.811278).abs() < 1e-6);
    }

    #[test]
    fn out_of_range_probability_rejected() {
        assert!(matches!(
            BitEnsemble::new(vec![0.2, 1.1]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            BitEnsemble::new(vec![f64::NAN]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn estimator_examples() {
        let e = estimate_bit_probabilities(&[vec![true; 4]]).unwrap();
        assert_eq!((e.ensemble.p1()[0], e.stderr[0]), (1.0, 0.0));
        let e = estimate_bit_probabilities(&[vec![false, true, false, true]]).unwrap();
        assert_eq!((e.ensemble.p1()[0], e.stderr[0]), (0.5, 0.25));
        let mut rng = StreamRng::new((5, 5));
        let coins: Vec<bool> = (0..10_000).map(|_| rng.coin()).collect();
        let e = estimate_bit_probabilities(&[coins]).unwrap();
        assert!((e.stderr[0] - 0.005).abs() < 1e-5);
        assert!((e.ensemble.p1()[0] - 0.5).abs() < 3.0 * 0.005);
        let empty: [Vec<bool>; 1] = [vec![]];
        assert!(matches!(
            estimate_bit_probabilities(&empty),
            Err(Error::Usage(_))
        ));
        let none: [Vec<bool>; 0] = [];
        assert!(matches!(
            estimate_bit_probabilities(&none),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn landauer_examples() {
        let bath = BathParams::default();
        assert!((landauer_min_heat(-1.0, &bath) - 0.693147).abs() < 1e-6);
        assert_eq!(landauer_min_heat(0.0, &bath), 0.0);
        assert_eq!(landauer_min_heat(12.0, &bath), -12.0 * LN_2);
    }

    #[test]
    fn histogram_examples() {
        let single = Histogram {
            lo: 0.0,
            bin_width: 0.3,
            counts: vec![0, 17, 0],
        };
        assert!((gibbs_entropy_from_histogram(&single).unwrap() - 0.3f64.ln()).abs() < 1e-15);
        let uni = Histogram {
            lo: 0.0,
            bin_width: 0.5,
            counts: vec![3; 8],
        };
        assert!((gibbs_entropy_from_histogram(&uni).unwrap() - 4f64.ln()).abs() < 1e-14);
        let empty = Histogram {
            lo: 0.0,
            bin_width: 0.5,
            counts: vec![0; 8],
        };
        assert!(matches!(
            gibbs_entropy_from_histogram(&empty),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn gaussian_differential_entropy() {
        let mut rng = StreamRng::new((77, 0));
        let samples: Vec<f64> = (0..1_000_000).map(|_| rng.normal()).collect();
        let (h, dropped) = Histogram::from_samples(&samples, -6.0, 6.0, 240).unwrap();
        assert!(dropped < 5);
        assert!((h.bin_width - 0.05).abs() < 1e-12);
        let s = gibbs_entropy_from_histogram(&h).unwrap();
        let oracle = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((s - oracle).abs() < 0.01, "s = {s}");
    }

    #[test]
    fn report_examples() {
        let bath = BathParams::default();
        let all_one = BitEnsemble::uniform(3, 1.0).unwrap();
        let half = BitEnsemble::uniform(3, 0.5).unwrap();
        let r = make_erasure_report(&all_one, &half, &stats_with_heat(0.004, 0.01), &bath).unwrap();
        assert_eq!(r.delta_s_info, 3.0);
        assert_eq!(r.verdict, Verdict::BoundVacuous);
        assert!(r.is_self_consistent());

        let r = make_erasure_report(&half, &half, &stats_with_heat(0.0, 0.0), &bath).unwrap();
        assert_eq!((r.delta_s_info, r.landauer_min_heat), (0.0, 0.0));
        assert_eq!(r.verdict, Verdict::Consistent);

        let one = BitEnsemble::uniform(1, 0.5).unwrap();
        let zero = BitEnsemble::uniform(1, 0.0).unwrap();
        let r = make_erasure_report(&one, &zero, &stats_with_heat(0.8, 0.01), &bath).unwrap();
        assert!((r.landauer_min_heat - LN_2).abs() < 1e-15);
        assert_eq!(r.verdict, Verdict::Consistent);

        let r = make_erasure_report(&one, &zero, &stats_with_heat(0.2, 0.01), &bath).unwrap();
        assert_eq!(r.verdict, Verdict::ViolatesBound);

        assert!(matches!(
            make_erasure_report(&one, &half, &stats_with_heat(0.0, 0.0), &bath),
            Err(Error::Usage(_))
        ));
    }

    proptest! {
        #[test]
        fn entropy_flip_symmetric(p in 0.0f64..=1.0) {
            let a = binary_entropy_bits(p);
            let b = binary_entropy_bits(1.0 - p);
            prop_assert!((a - b).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn entropy_additive(a in proptest::collection::vec(0.0f64..=1.0, 0..20),
                            b in proptest::collection::vec(0.0f64..=1.0, 0..20)) {
            let ea = BitEnsemble::new(a).unwrap();
            let eb = BitEnsemble::new(b).unwrap();
            let joint = shannon_entropy_bits(&ea.concat(&eb));
            let sum = shannon_entropy_bits(&ea) + shannon_entropy_bits(&eb);
            prop_assert!((joint - sum).abs() < 1e-12);
            prop_assert!(joint <= (ea.len() + eb.len()) as f64 + 1e-12);
        }

        #[test]
        fn landauer_linear(ds in -50.0f64..50.0, k in 0.1f64..10.0, s in 0.1f64..10.0) {
            let bath = BathParams::new(k, 1.0).unwrap();
            let scaled = BathParams::new(k * s, 1.0).unwrap();
            let base = landauer_min_heat(ds, &bath);
            prop_assert!((landauer_min_heat(ds * s, &bath) - s * base).abs() <= 1e-12 * base.abs().max(1.0) * s);
            prop_assert!((landauer_min_heat(ds, &scaled) - s * base).abs() <= 1e-12 * base.abs().max(1.0) * s);
        }
    }

    #[test]
    fn entropy_strictly_concave_peak_at_half() {
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let h: Vec<f64> = grid.iter().map(|&p| binary_entropy_bits(p)).collect();
        let (argmax, _) =
            h.iter().enumerate().fold(
                (0, f64::MIN),
                |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
            );
        assert_eq!(grid[argmax], 0.5);
        assert!(h.iter().enumerate().all(|(i, &v)| i == 500 || v < 1.0));
        for w in h.windows(3) {
            assert!(w[1] > 0.5 * (w[0] + w[2]));
        }
    }
}
