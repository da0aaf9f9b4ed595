//! Statistics used by the experiment reports: interpolated quantiles,
//! IQR outlier filtering, code-length-normalized response times, the
//! Wilcoxon signed-rank test, and Cohen's d_z for paired differences.

use statrs::distribution::{ContinuousCDF, Normal};

/// Linear-interpolation quantile between order statistics (the "type 7"
/// convention). `q` in [0, 1]; `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    assert!((0.0..=1.0).contains(&q), "q out of range");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq)]
pub struct IqrResult {
    pub kept: Vec<f64>,
    pub removed: Vec<f64>,
    /// Sample too small to filter (n < 4); returned unfiltered.
    pub too_small: bool,
}

/// Removes points outside [Q1 − 1.5·IQR, Q3 + 1.5·IQR], re-deriving the
/// fences until nothing more falls outside (removal tightens the quartiles,
/// which can expose further outliers; iterating makes the filter
/// idempotent). Samples with fewer than four points pass through
/// unfiltered and are flagged.
pub fn iqr_filter(samples: &[f64]) -> IqrResult {
    if samples.len() < 4 {
        return IqrResult {
            kept: samples.to_vec(),
            removed: Vec::new(),
            too_small: true,
        };
    }
    let mut kept = samples.to_vec();
    let mut removed = Vec::new();
    loop {
        if kept.len() < 4 {
            break;
        }
        let mut sorted = kept.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let q1 = quantile(&sorted, 0.25);
        let q3 = quantile(&sorted, 0.75);
        let iqr = q3 - q1;
        let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let (pass, fail): (Vec<f64>, Vec<f64>) =
            kept.iter().partition(|&&x| (lo..=hi).contains(&x));
        if fail.is_empty() {
            break;
        }
        kept = pass;
        removed.extend(fail);
    }
    IqrResult {
        kept,
        removed,
        too_small: false,
    }
}

/// Seconds per 1,000 generated characters. `None` when chars is zero.
pub fn normalized_time(response_s: f64, chars: u64) -> Option<f64> {
    if chars == 0 {
        return None;
    }
    Some(response_s / (chars as f64 / 1000.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WilcoxonResult {
    /// min(W+, W−) over ranks of non-zero |differences|.
    pub w: f64,
    /// Two-sided p via the normal approximation with continuity correction.
    pub p: f64,
    /// Non-zero differences used.
    pub n: usize,
    /// All differences were zero; W and p are meaningless.
    pub degenerate: bool,
    /// Normal approximation is shaky below n = 20.
    pub small_n: bool,
}

/// Ranks of `values` (ascending), ties sharing the midrank. Returns the
/// ranks aligned with the input and the tie-group sizes.
fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = mid;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Wilcoxon signed-rank test over paired samples. Zero differences are
/// dropped; tied |differences| are mid-ranked; p is the two-sided normal
/// approximation with continuity correction and tie-corrected variance.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> WilcoxonResult {
    let diffs: Vec<f64> = pairs
        .iter()
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return WilcoxonResult {
            w: 0.0,
            p: 1.0,
            n: 0,
            degenerate: true,
            small_n: true,
        };
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = midranks(&abs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = n as f64 * (n as f64 + 1.0) / 2.0;
    let w = w_plus.min(total - w_plus);

    let mean = total / 2.0;
    let tie_term: f64 = ties
        .iter()
        .map(|&t| (t as f64).powi(3) - t as f64)
        .sum::<f64>()
        / 48.0;
    let var = n as f64 * (n as f64 + 1.0) * (2.0 * n as f64 + 1.0) / 24.0 - tie_term;
    let p = if var <= 0.0 {
        1.0
    } else {
        // continuity correction toward the mean; W ≤ mean by construction
        let z = (w - mean + 0.5) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        (2.0 * normal.cdf(z)).min(1.0)
    };
    WilcoxonResult {
        w,
        p,
        n,
        degenerate: false,
        small_n: n < 20,
    }
}

/// Cohen's d_z over paired samples: mean(diff) / sample-sd(diff).
/// `None` when n < 2 or the differences have zero spread.
pub fn cohens_dz(pairs: &[(f64, f64)]) -> Option<f64> {
    if pairs.len() < 2 {
        return None;
    }
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return None;
    }
    Some(mean / var.sqrt())
}

/// Descriptive summary computed after IQR filtering.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub removed_outliers: usize,
}

impl SummaryStats {
    pub fn from_samples(samples: &[f64]) -> Option<SummaryStats> {
        let filtered = iqr_filter(samples);
        let mut kept = filtered.kept;
        if kept.is_empty() {
            return None;
        }
        kept.sort_by(|a, b| a.total_cmp(b));
        let n = kept.len() as f64;
        let mean = kept.iter().sum::<f64>() / n;
        let sd = if kept.len() > 1 {
            (kept.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(SummaryStats {
            n: kept.len(),
            mean,
            sd,
            median: quantile(&kept, 0.5),
            q1: quantile(&kept, 0.25),
            q3: quantile(&kept, 0.75),
            removed_outliers: filtered.removed.len(),
        })
    }
}
