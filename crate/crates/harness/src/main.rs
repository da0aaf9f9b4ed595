use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use harness::{read_csv, run_experiment, run_spec_for, summary, write_csv, ExperimentConfig, Mode};
use simnet::SimTrace;
use sync_relay::{FileStorage, RelayCore};

#[derive(Parser)]
#[command(name = "harness", about = "Seeded experiment runs and statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute seeded runs of a task script and write records + summary.
    Run {
        /// Bundled script name or path to a script TOML file.
        #[arg(long)]
        script: String,
        #[arg(long, default_value = "par")]
        mode: String,
        /// Parallel implementer count (sequential mode always runs one).
        #[arg(long, default_value_t = 5)]
        agents: usize,
        #[arg(long, default_value_t = 50)]
        runs: usize,
        /// Base seed; run i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a records.csv produced by `run`.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Re-execute the stamped first run and diff its trace.
    Replay {
        /// trace-0.jsonl from a `run` output directory.
        #[arg(long)]
        trace: PathBuf,
    },
    /// Serve a persistent relay over TCP.
    ServeRelay {
        #[arg(long, default_value = "127.0.0.1:8750")]
        bind: String,
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long, default_value = "default")]
        doc_id: String,
    },
}

#[derive(serde::Serialize, serde::Deserialize)]
struct RunStamp {
    script: String,
    mode: Mode,
    agents: usize,
    runs: usize,
    seed: u64,
    config_hash: String,
}

fn load_script(name: &str) -> Result<agents::TaskScript, String> {
    if let Some(script) = agents::bundled_script(name) {
        return Ok(script);
    }
    let path = Path::new(name);
    if path.exists() {
        let text = fs::read_to_string(path).map_err(|e| format!("read {name}: {e}"))?;
        return agents::TaskScript::parse(&text).map_err(|e| format!("parse {name}: {e}"));
    }
    Err(format!(
        "no bundled script or file named {name:?} (bundled: {})",
        agents::bundled_scripts()
            .iter()
            .map(|s| s.name.clone())
            .collect::<Vec<_>>()
            .join(", ")
    ))
}

fn cmd_run(
    script: &str,
    mode: &str,
    agents: usize,
    runs: usize,
    seed: u64,
    out: &Path,
) -> Result<(), String> {
    let mode = Mode::parse(mode).ok_or("mode must be seq or par")?;
    let task = load_script(script)?;
    let mut config = ExperimentConfig::new(task, mode);
    config.agent_count = agents;
    config.runs = runs;
    config.seed = seed;

    fs::create_dir_all(out).map_err(|e| format!("create {}: {e}", out.display()))?;
    let records = run_experiment(&config);
    let csv_file =
        fs::File::create(out.join("records.csv")).map_err(|e| format!("records.csv: {e}"))?;
    write_csv(&records, csv_file).map_err(|e| format!("records.csv: {e}"))?;

    let text = summary(&records);
    fs::write(out.join("summary.txt"), &text).map_err(|e| format!("summary.txt: {e}"))?;

    // stamp + first-run trace, so `replay` can re-verify determinism later
    let stamp = RunStamp {
        script: script.to_owned(),
        mode,
        agents,
        runs,
        seed,
        config_hash: config.config_hash(),
    };
    let stamp_text = toml::to_string_pretty(&stamp).expect("stamp serializes");
    fs::write(out.join("run.toml"), stamp_text).map_err(|e| format!("run.toml: {e}"))?;
    let trace = agents::run_single(run_spec_for(&config, 0)).trace;
    fs::write(out.join("trace-0.jsonl"), trace.to_lines())
        .map_err(|e| format!("trace-0.jsonl: {e}"))?;

    print!("{text}");
    println!("seed={seed} config_hash={}", stamp.config_hash);
    println!("wrote {}", out.join("records.csv").display());
    Ok(())
}

fn cmd_stats(input: &Path) -> Result<(), String> {
    let path = if input.is_dir() {
        input.join("records.csv")
    } else {
        input.to_path_buf()
    };
    let file = fs::File::open(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let records = read_csv(file).map_err(|e| format!("{}: {e}", path.display()))?;
    print!("{}", summary(&records));
    Ok(())
}

fn cmd_replay(trace_path: &Path) -> Result<(), String> {
    let dir = trace_path.parent().unwrap_or(Path::new("."));
    let stamp_text = fs::read_to_string(dir.join("run.toml"))
        .map_err(|e| format!("run.toml next to the trace is required: {e}"))?;
    let stamp: RunStamp = toml::from_str(&stamp_text).map_err(|e| format!("run.toml: {e}"))?;

    let file = fs::File::open(trace_path).map_err(|e| format!("{}: {e}", trace_path.display()))?;
    let recorded = SimTrace::read_from(std::io::BufReader::new(file))
        .map_err(|e| format!("{}: {e}", trace_path.display()))?;

    let mut config = ExperimentConfig::new(load_script(&stamp.script)?, stamp.mode);
    config.agent_count = stamp.agents;
    config.runs = stamp.runs;
    config.seed = stamp.seed;
    if config.config_hash() != stamp.config_hash {
        return Err(format!(
            "config hash mismatch: stamp {} vs rebuilt {}",
            stamp.config_hash,
            config.config_hash()
        ));
    }
    let replayed = agents::run_single(run_spec_for(&config, 0)).trace;
    if replayed.records == recorded {
        println!("replay identical: {} records", recorded.len());
        Ok(())
    } else {
        let diverged = replayed
            .records
            .iter()
            .zip(&recorded)
            .position(|(a, b)| a != b)
            .unwrap_or_else(|| replayed.records.len().min(recorded.len()));
        Err(format!(
            "replay diverged at record {diverged} ({} replayed vs {} recorded)",
            replayed.records.len(),
            recorded.len()
        ))
    }
}

fn cmd_serve_relay(bind: &str, data_dir: &Path, doc_id: &str) -> Result<(), String> {
    fs::create_dir_all(data_dir).map_err(|e| format!("create {}: {e}", data_dir.display()))?;
    let storage =
        FileStorage::open(data_dir, doc_id).map_err(|e| format!("open storage: {e}"))?;
    let core = RelayCore::new(doc_id, storage);
    let listener = TcpListener::bind(bind).map_err(|e| format!("bind {bind}: {e}"))?;
    log::info!("relay listening on {bind}, doc {doc_id}");
    sync_relay::serve_relay(listener, core).map_err(|e| format!("serve: {e}"))
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            script,
            mode,
            agents,
            runs,
            seed,
            out,
        } => cmd_run(script, mode, *agents, *runs, *seed, out),
        Command::Stats { input } => cmd_stats(input),
        Command::Replay { trace } => cmd_replay(trace),
        Command::ServeRelay {
            bind,
            data_dir,
            doc_id,
        } => cmd_serve_relay(bind, data_dir, doc_id),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
