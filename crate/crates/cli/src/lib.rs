//! Command-line orchestration of the reduction-selection pipeline.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod plot;
pub mod table;

pub use args::{Action, Cli};
pub use commands::execute;
pub use config::RunConfig;
pub use error::{CliError, Result};
pub use manifest::{CommandKind, RunManifest};

/// Carries out a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    match cli.action()? {
        Action::Run(kind, cfg) => {
            let manifest = execute(kind, &cfg)?;
            log::info!(
                "{} wrote {} files to {}",
                kind.as_str(),
                manifest.outputs.len(),
                cfg.paths.output_dir.display()
            );
        }
        Action::Plot { csv, out } => commands::render_plot(&csv, &out)?,
        Action::ShowConfig(cfg) => {
            cfg.validate()?;
            print!("{}", cfg.to_toml());
        }
    }
    Ok(())
}
