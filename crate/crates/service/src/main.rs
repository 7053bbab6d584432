use std::sync::Arc;

use summation_service::store::Store;
use summation_service::{router, AppState, Config};

#[tokio::main]
async fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    if let Err(e) = run().await {
        tracing::error!("{e}");
        std::process::exit(1);
    }
}

async fn run() -> Result<(), String> {
    let config = Config::from_env()?;
    let store = Store::open(&config.data_dir).map_err(|e| format!("{}: {e}", config.data_dir.display()))?;
    tracing::info!("loading state from {}", config.data_dir.display());
    let seed = config.seed;
    let state = tokio::task::spawn_blocking(move || AppState::load(store, seed)).await.map_err(|e| e.to_string())??;
    tracing::info!(
        "{} corpora, {} sessions restored",
        state.corpora.read().expect("lock").len(),
        state.sessions.read().expect("lock").len()
    );
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", config.port)).await.map_err(|e| format!("bind: {e}"))?;
    tracing::info!("listening on {}", config.port);
    axum::serve(listener, router(Arc::new(state))).await.map_err(|e| e.to_string())
}
