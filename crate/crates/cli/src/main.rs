use std::path::PathBuf;

use adasd::models::DEFAULT_SMOOTHING_ALPHA;
use adasd_cli::compare::write_diff_csv;
use adasd_cli::{cmd_analyze, cmd_compare, cmd_run, cmd_train, ExperimentConfig};
use anyhow::Result;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adasd", version, about = "Adaptive speculative decoding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a character n-gram model and save it as JSON.
    Train {
        /// Training text, one paragraph per line. Defaults to the bundled corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[arg(long, default_value_t = DEFAULT_SMOOTHING_ALPHA)]
        alpha: f64,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode every prompt with every configured method.
    Run {
        /// Experiment config JSON. All fields are optional.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accepted-versus-rejected statistics over trace files or directories.
    Analyze {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(long, default_value = "analysis")]
        out: PathBuf,
    },
    /// Difference of two summary CSVs.
    Compare {
        left: PathBuf,
        right: PathBuf,
        /// Also write the differences as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train { corpus, order, alpha, out } => {
            let model = cmd_train(corpus.as_deref(), order, alpha, &out)?;
            println!("vocabulary size: {}", model.vocabulary().len());
            println!("contexts: {}", model.context_count());
            println!("wrote {}", out.display());
        }
        Command::Run { config, seed, out } => {
            let mut cfg = match config {
                Some(p) => ExperimentConfig::load(&p)?,
                None => ExperimentConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let outcome = cmd_run(&cfg)?;
            println!("{:<16} {:>10} {:>8} {:>8} {:>8} {:>8} {:>8}", "method", "tks_sim", "JSDist", "cand", "match", "AccRate", "speedup");
            let f = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
            for r in &outcome.summary {
                println!(
                    "{:<16} {:>10.4} {:>8} {:>8} {:>8} {:>8} {:>8.3}",
                    r.method, r.tks_sim, f(r.js_dist), f(r.cand), f(r.matched), f(r.acc_rate), r.speedup
                );
            }
            println!("wrote {}", outcome.output_dir.display());
        }
        Command::Analyze { traces, out } => {
            let report = cmd_analyze(&traces, &out)?;
            for (label, class) in [("accepted", report.accepted), ("rejected", report.rejected)] {
                match class {
                    Some(c) => println!(
                        "{label}: {} tokens, mean entropy {:.4}, mean JS distance {:.4}",
                        c.count, c.mean_entropy, c.mean_js_distance
                    ),
                    None => println!("{label}: no tokens"),
                }
            }
            if let Some(s) = report.rejected_exceeds_accepted {
                println!("rejected > accepted: entropy {}, JS distance {}", s.entropy, s.js_distance);
            }
            println!("wrote {}", out.display());
        }
        Command::Compare { left, right, out } => {
            let diffs = cmd_compare(&left, &right)?;
            let f = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
            for d in &diffs {
                println!("{:<16} {:<8} {:>12} {:>12} {:>12}", d.method, d.column, f(d.left), f(d.right), f(d.delta));
            }
            if let Some(o) = out {
                write_diff_csv(&o, &diffs)?;
            }
        }
    }
    Ok(())
}
