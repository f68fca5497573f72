//! Serves the hashed mock script on a local port, for trying the pipeline
//! without API keys.

use std::net::SocketAddr;

use clap::Parser;
use memelabel_mock_llm::{scripts, spawn_on};

#[derive(Parser)]
#[command(version, about = "Deterministic stand-in for an LLM endpoint")]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8089")]
    bind: SocketAddr,
    /// Per-model chance (per mille) of flipping the coarse label.
    #[arg(long, default_value_t = 80)]
    disagree_per_mille: u64,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let args = Args::parse();
    let server = spawn_on(args.bind, scripts::hashed(args.disagree_per_mille)).await?;
    println!("mock LLM listening on {}", server.url());
    tokio::signal::ctrl_c().await?;
    Ok(())
}
