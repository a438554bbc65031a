//! `randsft` — runs one experiment config and writes its report.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use randsft::experiments::{exit_code, run, ExperimentConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Parser, Debug)]
#[command(version, about = "Random shifts of finite type: seeded experiments")]
struct Cli {
    /// experiment config (JSON)
    #[arg(long)]
    config: PathBuf,
    /// overrides the config's seed
    #[arg(long)]
    seed: Option<u64>,
    /// worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// output directory; without it the report goes to stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let mut config = match ExperimentConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
    }
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("thread pool: {e}");
            return ExitCode::from(1);
        }
    }

    let (report, files) = run(&config);
    let code = exit_code(&report.status);
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    let payload = serde_json::to_string_pretty(&report.payload).expect("payload serializes");
    match &cli.out {
        None => println!("{json}"),
        Some(dir) => {
            let write = |name: &str, bytes: &[u8]| -> std::io::Result<()> { fs::write(dir.join(name), bytes) };
            let result = fs::create_dir_all(dir).and_then(|_| {
                if cli.format != Format::Csv {
                    write("report.json", json.as_bytes())?;
                    write("payload.json", payload.as_bytes())?;
                }
                for f in &files {
                    let wanted = match cli.format {
                        Format::Both => true,
                        Format::Json => !f.csv,
                        Format::Csv => f.csv,
                    };
                    if wanted {
                        write(&f.name, &f.bytes)?;
                    }
                }
                Ok(())
            });
            if let Err(e) = result {
                eprintln!("cannot write to {}: {e}", dir.display());
                return ExitCode::from(1);
            }
        }
    }
    eprintln!("{:?}: {} ({:.2}s)", report.kind, report.status, report.wall_time_seconds);
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    ExitCode::from(code as u8)
}
