use std::net::IpAddr;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "ips",
    version,
    about = "Container yard placement and truck appointment planner"
)]
pub struct Cli {
    /// Engine configuration in TOML. Without it the bundled fixture settings apply.
    #[arg(long, global = true, env = "IPS_CONFIG", value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Container manifest. Without it the bundled 63-container fixture is used.
    #[arg(long, global = true, value_name = "FILE")]
    pub csv: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a manifest and list rejected rows.
    Ingest,
    /// Print stacking class and operational category per container.
    Classify,
    /// Run one scenario and print its report.
    Optimize {
        /// 1 random, 2 random within segments, 3 z-score stacking, 4 full planner.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        scenario: u8,
        /// Seed for the random scenarios. Defaults to the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = ResultFormat::Text)]
        format: ResultFormat,
    },
    /// Show the appointment schedule per time block.
    Schedule {
        /// Rebalance congested blocks and fill spare capacity first.
        #[arg(long)]
        rebalance: bool,
    },
    /// Run all four scenarios and print the comparison.
    Report {
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Start the HTTP service. `--csv` preloads a manifest.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ResultFormat {
    Text,
    Json,
}
