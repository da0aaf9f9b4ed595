//! Per-run counters shared between the role actors and the harness. Actors
//! hold `Rc` clones and update in place; the harness reads after the run.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

use simnet::VirtualTime;

use crate::conflict::ConflictReport;

#[derive(Clone, Debug, Default)]
pub struct RunMetrics {
    /// Claim writes actually issued (local pre-check rejections excluded).
    pub claims_attempted: u64,
    /// Verify reads that came back Lost.
    pub claims_lost: u64,
    /// Won verdicts per key; a count above one is a transient double-claim
    /// (both agents observed Won before convergence).
    pub won_by_key: BTreeMap<String, u64>,
    /// Characters of body text written into the document.
    pub chars_generated: u64,
    /// Conflict-avoidance backoffs taken.
    pub backoffs: u64,
    /// Marker-missing events (work found already implemented).
    pub anomalies: Vec<String>,
    /// Keys reset by stale reclaim.
    pub reclaims: u64,
    /// Virtual time at which the evaluator saw all tasks done.
    pub completion_time: Option<VirtualTime>,
    pub evaluator_report: Option<ConflictReport>,
    pub evaluator_timed_out: bool,
}

impl RunMetrics {
    /// Keys where more than one agent transiently observed a won claim.
    pub fn transient_double_won(&self) -> u64 {
        self.won_by_key.values().filter(|&&n| n > 1).count() as u64
    }

    pub fn shared() -> SharedMetrics {
        Rc::new(RefCell::new(RunMetrics::default()))
    }
}

pub type SharedMetrics = Rc<RefCell<RunMetrics>>;
