//! Seeded experiment runs over the simulated network: a script is executed
//! `runs` times per mode, each run with seed `base + i`, and flattened into
//! one record per run for the report layer.

use agents::runner::{run_single, RunSpec};
use agents::script::TaskScript;
use claim_protocol::ProtocolConfig;
use sha2::{Digest, Sha256};
use simnet::{FaultPlan, LatencyModel};

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sequential,
    Parallel,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Sequential => "seq",
            Mode::Parallel => "par",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "seq" | "sequential" => Some(Mode::Sequential),
            "par" | "parallel" => Some(Mode::Parallel),
            _ => None,
        }
    }
}

#[derive(Clone)]
pub struct ExperimentConfig {
    pub script: TaskScript,
    pub mode: Mode,
    /// Parallel implementer count; sequential mode always runs one.
    pub agent_count: usize,
    pub runs: usize,
    /// Base seed; run i uses seed base + i.
    pub seed: u64,
    pub latency: LatencyModel,
    pub faults: FaultPlan,
    pub protocol: ProtocolConfig,
}

impl ExperimentConfig {
    pub fn new(script: TaskScript, mode: Mode) -> Self {
        ExperimentConfig {
            script,
            mode,
            agent_count: 5,
            runs: 50,
            seed: 0,
            latency: LatencyModel::default(),
            faults: FaultPlan::default(),
            protocol: ProtocolConfig::default(),
        }
    }

    pub fn implementers(&self) -> usize {
        match self.mode {
            Mode::Sequential => 1,
            Mode::Parallel => self.agent_count,
        }
    }

    /// Stable digest of everything that determines the run, for stamping
    /// outputs so a record can be traced back to its exact configuration.
    pub fn config_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.script.name.as_bytes());
        h.update(self.script.skeleton.as_bytes());
        for t in &self.script.todos {
            h.update(t.key.as_bytes());
            h.update(t.body.as_bytes());
            h.update(t.duration_ms.unwrap_or(0).to_le_bytes());
        }
        h.update(self.mode.as_str().as_bytes());
        h.update(self.implementers().to_le_bytes());
        h.update(self.runs.to_le_bytes());
        h.update(self.seed.to_le_bytes());
        h.update(format!("{:?}|{:?}|{:?}", self.latency, self.faults, self.protocol).as_bytes());
        let digest = h.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// One run flattened for CSV emission.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunRecord {
    pub task: String,
    pub mode: Mode,
    pub seed: u64,
    /// Virtual seconds from start to evaluator completion; absent when the
    /// evaluator timed out.
    pub response_s: Option<f64>,
    pub chars: u64,
    pub callbacks: u64,
    pub claims_attempted: u64,
    pub claims_lost: u64,
    pub transient_double_won: u64,
    pub converged: bool,
    pub duplicates: u64,
}

impl RunRecord {
    pub fn s_per_kchar(&self) -> Option<f64> {
        crate::stats::normalized_time(self.response_s?, self.chars)
    }
}

pub fn run_spec_for(config: &ExperimentConfig, run_index: usize) -> RunSpec {
    let mut spec = RunSpec::new(
        config.script.clone(),
        config.implementers(),
        config.seed + run_index as u64,
    );
    spec.latency = config.latency;
    spec.faults = config.faults.clone();
    spec.protocol = config.protocol.clone();
    spec
}

pub fn run_experiment(config: &ExperimentConfig) -> Vec<RunRecord> {
    (0..config.runs)
        .map(|i| {
            let spec = run_spec_for(config, i);
            let seed = spec.seed;
            let outcome = run_single(spec);
            let m = &outcome.metrics;
            RunRecord {
                task: config.script.name.clone(),
                mode: config.mode,
                seed,
                response_s: m
                    .completion_time
                    .map(|t| t.as_micros() as f64 / 1_000_000.0),
                chars: m.chars_generated,
                callbacks: outcome.callback_count,
                claims_attempted: m.claims_attempted,
                claims_lost: m.claims_lost,
                transient_double_won: m.transient_double_won(),
                converged: outcome.converged && outcome.quiescent,
                duplicates: m
                    .evaluator_report
                    .as_ref()
                    .map(|r| r.duplicates.iter().map(|(_, n)| *n as u64).sum())
                    .unwrap_or(0),
            }
        })
        .collect()
}
