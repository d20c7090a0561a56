//! The service side of sensorloop.
//!
//! * [`dashboard`] collects measurements from gateways, keeps them in an
//!   append-only [`store`], publishes events to registered listeners
//!   ([`publisher`]) and runs the analysis rules that send reconfiguration
//!   commands back to the nodes.
//! * [`http`] exposes the dashboard as a JSON API.
//! * [`weather`] is the client for an external weather service, plus a stub
//!   server that answers from CSV fixtures.
//! * [`server`] runs any of these routers on a background runtime.

pub mod dashboard;
pub mod http;
pub mod publisher;
pub mod server;
pub mod store;
pub mod weather;

use std::net::SocketAddr;
use std::sync::Arc;

pub use dashboard::{Dashboard, DashboardConfig, DashboardError};
pub use server::ServerHandle;

/// A running dashboard and its HTTP server.
pub struct RunningDashboard {
    pub dashboard: Arc<Dashboard>,
    pub server: ServerHandle,
}

impl RunningDashboard {
    pub fn url(&self) -> String {
        self.server.url()
    }
}

pub fn spawn_dashboard(config: &DashboardConfig, addr: SocketAddr) -> Result<RunningDashboard, DashboardError> {
    let dashboard = Dashboard::open(config)?;
    let server = server::spawn(http::router(dashboard.clone()), addr, 4)
        .map_err(|e| DashboardError::Internal(format!("cannot serve on {addr}: {e}")))?;
    tracing::info!(url = %server.url(), data_dir = %config.data_dir.display(), "dashboard listening");
    Ok(RunningDashboard { dashboard, server })
}

pub fn spawn_weather_stub(fixtures: weather::stub::Fixtures, addr: SocketAddr) -> std::io::Result<ServerHandle> {
    let server = server::spawn(weather::stub::router(Arc::new(fixtures)), addr, 2)?;
    tracing::info!(url = %server.url(), "weather stub listening");
    Ok(server)
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/dashboard.md")]
struct BookDashboard;
