//! The generation boundary. Implementers ask a generator for the body of a
//! task, handing it the current document snapshot so generated code can be
//! aligned with what already exists. The scripted generator answers from
//! the task script with a deterministic simulated latency; a live model
//! would sit behind the same contract (see [`EXTERNAL_ADAPTER_PROTOCOL`]).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use simnet::VirtualTime;

use crate::script::TaskScript;

#[derive(Clone, Debug)]
pub struct GenRequest {
    /// Full current document text — keeps generation aware of concurrent
    /// work without any agent-to-agent messaging.
    pub snapshot: String,
    pub key: String,
    pub description: String,
}

#[derive(Clone, Debug)]
pub struct GenResponse {
    pub body: String,
    pub delay: VirtualTime,
}

pub trait GeneratorContract {
    fn generate(&mut self, request: &GenRequest) -> GenResponse;
}

/// Wire format for an out-of-process generator (subprocess or HTTP): one
/// JSON request object per call with fields `snapshot`, `key`,
/// `description`; one JSON response object with fields `body` and
/// `delay_ms`. No client ships here — experiments run scripted.
pub const EXTERNAL_ADAPTER_PROTOCOL: &str =
    "request: {\"snapshot\": string, \"key\": string, \"description\": string}\n\
     response: {\"body\": string, \"delay_ms\": number}";

/// Deterministic generator answering from a task script. Latency comes from
/// the script when given, otherwise from a seeded lognormal with an 8 s
/// median scaled by body length — the order of magnitude of interactive
/// model inference.
pub struct ScriptedGenerator {
    script: TaskScript,
    seed: u64,
}

const MEDIAN_MS: f64 = 8000.0;
const SIGMA: f64 = 0.35;

impl ScriptedGenerator {
    pub fn new(script: TaskScript, seed: u64) -> Self {
        ScriptedGenerator { script, seed }
    }

    fn sampled_delay(&self, key: &str, body_chars: usize) -> VirtualTime {
        // per-(seed, key) stream: the same key always costs the same
        let mut h: u64 = self.seed ^ 0x9E37_79B9_7F4A_7C15;
        for b in key.bytes() {
            h = h.wrapping_mul(0x100_0000_01b3).wrapping_add(b as u64);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(h);
        let dist = LogNormal::new(MEDIAN_MS.ln(), SIGMA).expect("valid parameters");
        let scale = (body_chars as f64 / 400.0).clamp(0.25, 3.0);
        let ms = dist.sample(&mut rng) * scale;
        VirtualTime::from_millis(ms.max(1.0) as u64)
    }
}

impl GeneratorContract for ScriptedGenerator {
    fn generate(&mut self, request: &GenRequest) -> GenResponse {
        let todo = self
            .script
            .todo(&request.key)
            .unwrap_or_else(|| panic!("script has no body for key {:?}", request.key));
        let delay = match todo.duration_ms {
            Some(ms) => VirtualTime::from_millis(ms),
            None => self.sampled_delay(&request.key, todo.body.chars().count()),
        };
        GenResponse {
            body: todo.body.trim_end().to_owned(),
            delay,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::script::bundled_script;

    #[test]
    fn scripted_generation_is_deterministic() {
        let script = bundled_script("tic-tac-toe").unwrap();
        let mut g1 = ScriptedGenerator::new(script.clone(), 7);
        let mut g2 = ScriptedGenerator::new(script, 7);
        let req = GenRequest {
            snapshot: String::new(),
            key: "win-check".into(),
            description: "detect a winning line".into(),
        };
        let a = g1.generate(&req);
        let b = g2.generate(&req);
        assert_eq!(a.body, b.body);
        assert_eq!(a.delay, b.delay);
        assert_eq!(a.delay, VirtualTime::from_millis(8000));
    }

    #[test]
    fn sampled_delays_center_near_the_median() {
        let mut script = bundled_script("tic-tac-toe").unwrap();
        for todo in script.todos.iter_mut() {
            todo.duration_ms = None;
        }
        let gen = ScriptedGenerator::new(script.clone(), 1);
        let ms = gen
            .sampled_delay("win-check", 400)
            .as_micros() as f64
            / 1000.0;
        assert!((2000.0..32000.0).contains(&ms), "delay {ms} ms");
    }
}
