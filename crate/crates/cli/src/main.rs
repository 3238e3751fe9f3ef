use std::process::ExitCode;

use clap::Parser;

use hrvguard_cli::{
    cmd_ablate, cmd_analyze, cmd_evaluate, cmd_features, cmd_gen_synthetic, cmd_ingest_kb, Cli, Command,
    EXIT_ERROR, EXIT_OK, EXIT_PARTIAL,
};

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::IngestKb(a) => {
            let s = cmd_ingest_kb(&a)?;
            println!("indexed {} chunks from {} documents into {}", s.chunks, s.documents, a.out.display());
            Ok(EXIT_OK)
        }
        Command::Features(a) => {
            let s = cmd_features(&a)?;
            for p in &s.panels {
                println!(
                    "{}_{}  MeanHR {:.1} bpm  RMSSD {:.1} ms  SDNN {:.1} ms",
                    p.subject_id, p.trial_id, p.time.mean_hr, p.time.rmssd, p.time.sdnn
                );
            }
            for (k, e) in &s.failures {
                eprintln!("{k}: {e}");
            }
            println!("{} panels written to {}", s.panels.len(), a.out.display());
            Ok(if s.failures.is_empty() { EXIT_OK } else { EXIT_PARTIAL })
        }
        Command::Analyze(a) => {
            let s = cmd_analyze(&a)?;
            for f in &s.manifest.failed {
                eprintln!("{} failed at step {:?}: {}", f.key, f.step, f.reason);
            }
            println!(
                "{}/{} trials succeeded; run written to {}",
                s.manifest.succeeded,
                s.manifest.trials,
                s.dir.display()
            );
            Ok(s.exit_code())
        }
        Command::Evaluate(a) => {
            let s = cmd_evaluate(&a)?;
            print!("{}", s.to_table());
            Ok(EXIT_OK)
        }
        Command::Ablate(a) => {
            let r = cmd_ablate(&a)?;
            print!("{}", r.to_table());
            let partial = r.entries.iter().any(|e| e.failed > 0);
            Ok(if partial { EXIT_PARTIAL } else { EXIT_OK })
        }
        Command::GenSynthetic(a) => {
            let t = cmd_gen_synthetic(&a)?;
            println!(
                "wrote {} trials to {} and a literature corpus to {}",
                t.len(),
                a.out.join("trials.json").display(),
                a.out.join("corpus").display()
            );
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
