//! Report emission: a fixed-column CSV with one row per run, and a
//! structured-text summary per task×mode with IQR-filtered stats and,
//! when both modes are present, paired comparisons.

use std::collections::BTreeMap;
use std::io;

use crate::experiment::{Mode, RunRecord};
use crate::stats::{cohens_dz, wilcoxon_signed_rank, SummaryStats};

pub const CSV_COLUMNS: [&str; 11] = [
    "task",
    "mode",
    "seed",
    "response_s",
    "chars",
    "s_per_kchar",
    "callbacks",
    "claims_lost",
    "transient_double_won",
    "converged",
    "duplicates",
];

pub fn write_csv(records: &[RunRecord], w: impl io::Write) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_COLUMNS)?;
    for r in records {
        out.write_record([
            r.task.clone(),
            r.mode.as_str().to_owned(),
            r.seed.to_string(),
            r.response_s.map(|s| format!("{s:.3}")).unwrap_or_default(),
            r.chars.to_string(),
            r.s_per_kchar().map(|s| format!("{s:.3}")).unwrap_or_default(),
            r.callbacks.to_string(),
            r.claims_lost.to_string(),
            r.transient_double_won.to_string(),
            r.converged.to_string(),
            r.duplicates.to_string(),
        ])?;
    }
    out.flush()
}

pub fn read_csv(r: impl io::Read) -> io::Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_owned());
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or("");
        out.push(RunRecord {
            task: field(0).to_owned(),
            mode: Mode::parse(field(1)).ok_or_else(|| bad("bad mode"))?,
            seed: field(2).parse().map_err(|_| bad("bad seed"))?,
            response_s: if field(3).is_empty() {
                None
            } else {
                Some(field(3).parse().map_err(|_| bad("bad response_s"))?)
            },
            chars: field(4).parse().map_err(|_| bad("bad chars"))?,
            callbacks: field(6).parse().map_err(|_| bad("bad callbacks"))?,
            claims_attempted: 0, // not round-tripped through the CSV
            claims_lost: field(7).parse().map_err(|_| bad("bad claims_lost"))?,
            transient_double_won: field(8).parse().map_err(|_| bad("bad double_won"))?,
            converged: field(9).parse().map_err(|_| bad("bad converged"))?,
            duplicates: field(10).parse().map_err(|_| bad("bad duplicates"))?,
        });
    }
    Ok(out)
}

fn group(records: &[RunRecord]) -> BTreeMap<(String, Mode), Vec<&RunRecord>> {
    let mut map: BTreeMap<(String, Mode), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        map.entry((r.task.clone(), r.mode)).or_default().push(r);
    }
    map
}

fn pct_delta(seq: f64, par: f64) -> f64 {
    (par - seq) / seq * 100.0
}

/// Structured-text summary. Only converged runs with a completion time
/// count toward timing stats; normalized times go through the IQR filter
/// per task×mode.
pub fn summary(records: &[RunRecord]) -> String {
    let mut out = String::new();
    let groups = group(records);
    let mut per_cell: BTreeMap<(String, Mode), SummaryStats> = BTreeMap::new();

    for ((task, mode), rows) in &groups {
        let timing: Vec<f64> = rows
            .iter()
            .filter(|r| r.converged)
            .filter_map(|r| r.s_per_kchar())
            .collect();
        let raw: Vec<f64> = rows
            .iter()
            .filter(|r| r.converged)
            .filter_map(|r| r.response_s)
            .collect();
        let lost: u64 = rows.iter().map(|r| r.claims_lost).sum();
        let double: u64 = rows.iter().map(|r| r.transient_double_won).sum();
        let dupes: u64 = rows.iter().map(|r| r.duplicates).sum();
        let unconverged = rows.iter().filter(|r| !r.converged).count();
        out.push_str(&format!("{task} [{}] runs={}\n", mode.as_str(), rows.len()));
        if let Some(s) = SummaryStats::from_samples(&raw) {
            out.push_str(&format!(
                "  response_s       n={} mean={:.2} sd={:.2} median={:.2} q1={:.2} q3={:.2} removed={}\n",
                s.n, s.mean, s.sd, s.median, s.q1, s.q3, s.removed_outliers
            ));
        }
        if let Some(s) = SummaryStats::from_samples(&timing) {
            out.push_str(&format!(
                "  s_per_kchar      n={} mean={:.2} sd={:.2} median={:.2} q1={:.2} q3={:.2} removed={}\n",
                s.n, s.mean, s.sd, s.median, s.q1, s.q3, s.removed_outliers
            ));
            per_cell.insert((task.clone(), *mode), s);
        }
        out.push_str(&format!(
            "  claims_lost={lost} transient_double_won={double} duplicates={dupes} unconverged={unconverged}\n",
        ));
    }

    // paired seq-vs-par comparison per task, matching runs by seed index
    let tasks: Vec<String> = {
        let mut t: Vec<String> = groups.keys().map(|(task, _)| task.clone()).collect();
        t.dedup();
        t
    };
    for task in tasks {
        let seq = groups.get(&(task.clone(), Mode::Sequential));
        let par = groups.get(&(task.clone(), Mode::Parallel));
        let (Some(seq), Some(par)) = (seq, par) else { continue };
        let s_stats = per_cell.get(&(task.clone(), Mode::Sequential));
        let p_stats = per_cell.get(&(task.clone(), Mode::Parallel));
        if let (Some(s), Some(p)) = (s_stats, p_stats) {
            out.push_str(&format!(
                "{task} [par vs seq] Δmean={:+.1}% Δmedian={:+.1}%\n",
                pct_delta(s.mean, p.mean),
                pct_delta(s.median, p.median)
            ));
        }
        let pairs: Vec<(f64, f64)> = seq
            .iter()
            .zip(par.iter())
            .filter(|(a, b)| a.converged && b.converged)
            .filter_map(|(a, b)| Some((a.s_per_kchar()?, b.s_per_kchar()?)))
            .collect();
        if pairs.len() >= 2 {
            let w = wilcoxon_signed_rank(&pairs);
            out.push_str(&format!(
                "  wilcoxon W={:.1} p={:.4}{}{}",
                w.w,
                w.p,
                if w.small_n { " (small n)" } else { "" },
                "\n"
            ));
            if let Some(dz) = cohens_dz(&pairs) {
                out.push_str(&format!("  cohens_dz={dz:.3}\n"));
            }
        }
    }
    out
}
