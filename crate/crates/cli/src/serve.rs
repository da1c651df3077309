use std::io::Write;

use anyhow::anyhow;
use camscope_service::{app, serve, AppState};
use tokio::net::TcpListener;

use crate::args::ServeArgs;
use crate::commands::{read_bundle, read_model};
use crate::failure::{required, Classify, CmdResult, Failure};

const DEFAULT_LISTEN: &str = "127.0.0.1:8080";

/// Loads everything before binding, so bad inputs never hold a port.
pub fn run(args: ServeArgs) -> CmdResult {
    let data = required(args.data, "data")?;
    let weights = required(args.weights, "weights")?;
    let listen = args.listen.unwrap_or_else(|| DEFAULT_LISTEN.to_owned());
    if let Some(dir) = &args.ui_dir {
        if !dir.is_dir() {
            return Err(Failure::invalid(anyhow!("UI directory {} does not exist", dir.display())));
        }
    }
    let bundle = read_bundle(&data)?;
    let model = read_model(&weights, &bundle)?;
    let state = AppState::new(model, bundle).invalid("cannot prepare class CAMs")?;
    let router = app(state, args.ui_dir);

    let runtime = tokio::runtime::Runtime::new().runtime("cannot start the async runtime")?;
    runtime.block_on(async move {
        let listener = TcpListener::bind(&listen).await.runtime(format!("cannot listen on {listen}"))?;
        let addr = listener.local_addr().runtime("cannot read the bound address")?;
        {
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "listening on http://{addr}");
            let _ = stdout.flush();
        }
        serve(listener, router, shutdown_signal()).await.runtime("server failed")?;
        tracing::info!("shut down");
        Ok(())
    })
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = terminate => {},
    }
}
