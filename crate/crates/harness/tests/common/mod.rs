//! Brute-force reference implementations of the paired statistics, shared
//! by the property tests and the acceptance suite. Written independently
//! of the main implementation: quadratic rank assignment and an
//! approximated normal CDF.

/// Error-function approximation (maximum absolute error ~1.5e-7).
pub fn erf_approx(x: f64) -> f64 {
    let sign = x.signum();
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

pub fn phi(z: f64) -> f64 {
    0.5 * (1.0 + erf_approx(z / std::f64::consts::SQRT_2))
}

/// Signed-rank via explicit per-point rank counting and tie groups.
/// `None` when every difference is zero.
pub fn oracle_wilcoxon(pairs: &[(f64, f64)]) -> Option<(f64, f64)> {
    let diffs: Vec<f64> = pairs
        .iter()
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return None;
    }
    let n = diffs.len() as f64;
    let mut w_plus = 0.0;
    for di in &diffs {
        // rank of |di| = (#smaller) + (#equal + 1)/2, counting di itself
        let smaller = diffs.iter().filter(|d| d.abs() < di.abs()).count() as f64;
        let equal = diffs.iter().filter(|d| d.abs() == di.abs()).count() as f64;
        if *di > 0.0 {
            w_plus += smaller + (equal + 1.0) / 2.0;
        }
    }
    let total = n * (n + 1.0) / 2.0;
    let w = w_plus.min(total - w_plus);
    let mut seen: Vec<f64> = Vec::new();
    let mut tie_term = 0.0;
    for d in &diffs {
        let a = d.abs();
        if seen.contains(&a) {
            continue;
        }
        seen.push(a);
        let t = diffs.iter().filter(|x| x.abs() == a).count() as f64;
        tie_term += (t.powi(3) - t) / 48.0;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term;
    let p = if var <= 0.0 {
        1.0
    } else {
        (2.0 * phi((w - total / 2.0 + 0.5) / var.sqrt())).min(1.0)
    };
    Some((w, p))
}

pub fn oracle_dz(pairs: &[(f64, f64)]) -> Option<f64> {
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
    if diffs.len() < 2 {
        return None;
    }
    let n = diffs.len() as f64;
    let mean: f64 = diffs.iter().sum::<f64>() / n;
    let ss: f64 = diffs.iter().map(|d| (d - mean) * (d - mean)).sum();
    let sd = (ss / (n - 1.0)).sqrt();
    if sd == 0.0 {
        None
    } else {
        Some(mean / sd)
    }
}
