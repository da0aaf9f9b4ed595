use agents::TaskScript;
use claim_protocol::ProtocolConfig;
use harness::{read_csv, run_experiment, summary, write_csv, ExperimentConfig, Mode, CSV_COLUMNS};
use simnet::{LatencyModel, VirtualTime};

fn one_todo_script() -> TaskScript {
    TaskScript::parse(
        r#"
name = "solo"
coupling = 0.0
skeleton = "// TODO(only): the single task\n"
[[todos]]
key = "only"
description = "the single task"
body = "function only() { return 1; }"
duration_ms = 2000
"#,
    )
    .unwrap()
}

fn race_free(config: &mut ExperimentConfig) {
    config.latency = LatencyModel::constant(VirtualTime::from_millis(50));
    config.protocol = ProtocolConfig {
        sync_delay: VirtualTime::from_millis(150),
        ..ProtocolConfig::default()
    };
}

#[test]
fn sequential_single_run_is_deterministic() {
    let mut config = ExperimentConfig::new(agents::bundled_script("tic-tac-toe").unwrap(), Mode::Sequential);
    config.runs = 1;
    let a = run_experiment(&config);
    let b = run_experiment(&config);
    assert_eq!(a, b);
    assert_eq!(a.len(), 1);
    let r = &a[0];
    assert!(r.converged);
    assert!(r.response_s.is_some());
    assert_eq!(r.claims_lost, 0);
    assert!(r.chars > 0);
}

#[test]
fn five_agents_on_one_todo_lose_four_claims() {
    let mut config = ExperimentConfig::new(one_todo_script(), Mode::Parallel);
    config.agent_count = 5;
    config.runs = 3;
    race_free(&mut config);
    for record in run_experiment(&config) {
        assert_eq!(record.claims_lost, 4, "seed {}", record.seed);
        assert_eq!(record.transient_double_won, 0, "seed {}", record.seed);
        assert!(record.converged);
    }
}

#[test]
fn sequential_mode_ignores_agent_count() {
    let mut config = ExperimentConfig::new(one_todo_script(), Mode::Sequential);
    config.agent_count = 5;
    assert_eq!(config.implementers(), 1);
    config.runs = 1;
    let records = run_experiment(&config);
    assert_eq!(records[0].claims_lost, 0);
}

#[test]
fn empty_records_give_a_header_only_csv() {
    let mut buf = Vec::new();
    write_csv(&[], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.trim(), CSV_COLUMNS.join(","));
}

#[test]
fn csv_round_trips_the_reported_fields() {
    let mut config = ExperimentConfig::new(one_todo_script(), Mode::Parallel);
    config.agent_count = 2;
    config.runs = 2;
    race_free(&mut config);
    let records = run_experiment(&config);
    let mut buf = Vec::new();
    write_csv(&records, &mut buf).unwrap();
    let parsed = read_csv(buf.as_slice()).unwrap();
    assert_eq!(parsed.len(), records.len());
    for (orig, rt) in records.iter().zip(&parsed) {
        assert_eq!(rt.task, orig.task);
        assert_eq!(rt.mode, orig.mode);
        assert_eq!(rt.seed, orig.seed);
        assert_eq!(rt.chars, orig.chars);
        assert_eq!(rt.callbacks, orig.callbacks);
        assert_eq!(rt.claims_lost, orig.claims_lost);
        assert_eq!(rt.converged, orig.converged);
        let (a, b) = (orig.response_s.unwrap(), rt.response_s.unwrap());
        assert!((a - b).abs() < 0.002); // 3-decimal CSV rounding
    }
}

#[test]
fn two_mode_summary_includes_delta_and_paired_tests() {
    let script = agents::bundled_script("tic-tac-toe").unwrap();
    let mut seq = ExperimentConfig::new(script.clone(), Mode::Sequential);
    seq.runs = 8;
    let mut par = ExperimentConfig::new(script, Mode::Parallel);
    par.agent_count = 3;
    par.runs = 8;
    race_free(&mut par);
    let mut records = run_experiment(&seq);
    records.extend(run_experiment(&par));
    let text = summary(&records);
    assert!(text.contains("Δmean="), "{text}");
    assert!(text.contains("wilcoxon W="), "{text}");
    assert!(text.contains("cohens_dz="), "{text}");
    assert!(text.contains("[seq]"), "{text}");
    assert!(text.contains("[par]"), "{text}");
}

#[test]
fn identical_configs_produce_identical_csv_bytes() {
    let mut config = ExperimentConfig::new(one_todo_script(), Mode::Parallel);
    config.agent_count = 2;
    config.runs = 3;
    config.seed = 17;
    let emit = |config: &ExperimentConfig| {
        let mut buf = Vec::new();
        write_csv(&run_experiment(config), &mut buf).unwrap();
        buf
    };
    assert_eq!(emit(&config), emit(&config));
    assert_eq!(config.config_hash(), config.config_hash());
    let mut other = config.clone();
    other.seed = 18;
    assert_ne!(config.config_hash(), other.config_hash());
}
