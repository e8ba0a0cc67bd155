use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rclt_cli::{load, run_selected, validate, Command, Overrides, Severity};

#[derive(Parser)]
#[command(name = "rclt", version, about = "Reversible-chain CLT experiments")]
struct Cli {
    #[command(subcommand)]
    action: Action,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Action {
    /// Run every command in the config.
    Run(Common),
    /// Check the config without running it.
    Validate(Common),
    Spectrum(Common),
    Variance(Common),
    Decompose(Common),
    Clt(Common),
    Fclt(Common),
    Maximal(Common),
    UiDiagnostic(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (only, common) = match cli.action {
        Action::Validate(c) => return validate_cmd(&c),
        Action::Run(c) => (None, c),
        Action::Spectrum(c) => (Some("spectrum"), c),
        Action::Variance(c) => (Some("variance"), c),
        Action::Decompose(c) => (Some("decompose"), c),
        Action::Clt(c) => (Some("clt"), c),
        Action::Fclt(c) => (Some("fclt"), c),
        Action::Maximal(c) => (Some("maximal"), c),
        Action::UiDiagnostic(c) => (Some("ui-diagnostic"), c),
    };
    let overrides = Overrides {
        seed: common.seed,
        output_dir: common.out,
    };
    let mut loaded = match load(&common.config, &overrides) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    for d in &loaded.diagnostics {
        eprintln!("{d}");
    }
    if let Some(name) = only {
        if name == "spectrum" && !loaded.config.commands.iter().any(|c| c.name() == name) {
            loaded.config.commands.push(Command::Spectrum);
        }
        if !loaded.config.commands.iter().any(|c| c.name() == name) {
            eprintln!("error: config has no `{name}` command");
            return ExitCode::from(2);
        }
    }
    match run_selected(&loaded, |c| only.is_none_or(|n| c.name() == n)) {
        Ok(manifest) => {
            for c in &manifest.commands {
                let status = if c.passed { "ok" } else { "FAILED" };
                println!("{:<14} {status:<6} {}", c.command, c.files.join(" "));
            }
            if manifest.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(4)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn validate_cmd(common: &Common) -> ExitCode {
    let overrides = Overrides {
        seed: common.seed,
        output_dir: common.out.clone(),
    };
    let diagnostics = validate(&common.config, &overrides);
    for d in &diagnostics {
        println!("{d}");
    }
    if diagnostics.iter().any(|d| d.severity == Severity::Error) {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}
