use std::net::{Ipv4Addr, SocketAddr};

use clap::Parser;
use log::info;

#[derive(Parser)]
#[command(name = "anicode-service", version, about = "Localhost authoring service")]
struct Args {
    #[arg(long, default_value_t = 8765)]
    port: u16,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, args.port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, anicode_service::router(Default::default())).await
}
