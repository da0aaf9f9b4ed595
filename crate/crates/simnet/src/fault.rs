use crate::sim::ActorId;
use crate::time::VirtualTime;

/// A network partition separating `group` from everyone else between `start`
/// and `end`. Frames crossing the cut are held and delivered on heal; a
/// partition with `end: None` is terminal and frames crossing it are dropped.
#[derive(Clone, Debug)]
pub struct Partition {
    pub group: Vec<ActorId>,
    pub start: VirtualTime,
    pub end: Option<VirtualTime>,
}

impl Partition {
    /// True when the partition separates `a` from `b` at time `t`.
    pub fn separates(&self, a: ActorId, b: ActorId, t: VirtualTime) -> bool {
        if t < self.start {
            return false;
        }
        if let Some(end) = self.end {
            if t >= end {
                return false;
            }
        }
        self.group.contains(&a) != self.group.contains(&b)
    }
}

/// Crash and partition schedule plus a per-frame drop probability.
#[derive(Clone, Debug, Default)]
pub struct FaultPlan {
    pub crashes: Vec<(ActorId, VirtualTime)>,
    pub partitions: Vec<Partition>,
    pub drop_probability: f64,
}
