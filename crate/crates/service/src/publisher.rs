//! Event fan-out to registered listeners.
//!
//! The service connects out to each listener's endpoint at registration
//! and keeps one writer thread per listener. Publishing only pushes a frame
//! onto each matching listener's bounded queue, so a slow listener never
//! holds up ingestion: when a queue is full its oldest frame is discarded
//! and counted as dropped.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::Write;
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use sensorloop_core::protocol::{encode_frame, EventEnvelope, Subscription, Topic};
use thiserror::Error;

pub const DEFAULT_QUEUE_CAPACITY: usize = 1024;

/// A listener that accepts nothing for this long is treated as gone.
const WRITE_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Error)]
pub enum PublishError {
    #[error("invalid subscription: {0}")]
    Invalid(String),
    #[error("listener endpoint {endpoint} unreachable: {reason}")]
    Unreachable { endpoint: String, reason: String },
    #[error("no listener with subscription id {0}")]
    UnknownListener(u64),
}

#[derive(Debug, Default)]
pub struct PublishCounters {
    pub published: AtomicU64,
    pub delivered: AtomicU64,
    pub dropped: AtomicU64,
}

#[derive(Default)]
struct QueueState {
    frames: VecDeque<Vec<u8>>,
    /// Frames popped but not yet written.
    writing: usize,
    closed: bool,
}

struct ListenerQueue {
    state: Mutex<QueueState>,
    ready: Condvar,
}

struct Listener {
    listener_id: String,
    topics: BTreeSet<Topic>,
    queue: Arc<ListenerQueue>,
    writer: Option<JoinHandle<()>>,
}

struct Registry {
    next_event_seq: u64,
    next_subscription: u64,
    listeners: BTreeMap<u64, Listener>,
}

pub struct Publisher {
    registry: Mutex<Registry>,
    capacity: usize,
    connect_timeout: Duration,
    counters: Arc<PublishCounters>,
}

impl Publisher {
    pub fn new(capacity: usize, connect_timeout: Duration) -> Self {
        Self {
            registry: Mutex::new(Registry { next_event_seq: 1, next_subscription: 1, listeners: BTreeMap::new() }),
            capacity: capacity.max(1),
            connect_timeout,
            counters: Arc::default(),
        }
    }

    pub fn counters(&self) -> &PublishCounters {
        &self.counters
    }

    /// Connects to the subscriber and starts its writer. The endpoint has
    /// to accept the connection now; otherwise registration fails.
    pub fn register(&self, sub: &Subscription) -> Result<u64, PublishError> {
        sub.validate().map_err(|e| PublishError::Invalid(e.to_string()))?;
        let unreachable = |reason: String| PublishError::Unreachable { endpoint: sub.endpoint.clone(), reason };
        let addrs: Vec<_> = sub
            .endpoint
            .to_socket_addrs()
            .map_err(|e| PublishError::Invalid(format!("endpoint {:?}: {e}", sub.endpoint)))?
            .collect();
        let mut last_err = "no addresses".to_string();
        let mut stream = None;
        for addr in addrs {
            match TcpStream::connect_timeout(&addr, self.connect_timeout) {
                Ok(s) => {
                    stream = Some(s);
                    break;
                }
                Err(e) => last_err = e.to_string(),
            }
        }
        let stream = stream.ok_or_else(|| unreachable(last_err))?;
        let _ = stream.set_nodelay(true);
        let _ = stream.set_write_timeout(Some(WRITE_TIMEOUT));

        let queue = Arc::new(ListenerQueue { state: Mutex::default(), ready: Condvar::new() });
        let writer = {
            let queue = queue.clone();
            let counters = self.counters.clone();
            let name = format!("listener-{}", sub.listener_id);
            thread::Builder::new()
                .name(name)
                .spawn(move || write_loop(stream, &queue, &counters))
                .map_err(|e| unreachable(e.to_string()))?
        };

        let mut registry = self.registry.lock().unwrap();
        let id = registry.next_subscription;
        registry.next_subscription += 1;
        registry.listeners.insert(
            id,
            Listener { listener_id: sub.listener_id.clone(), topics: sub.topics.clone(), queue, writer: Some(writer) },
        );
        tracing::info!(subscription = id, listener = %sub.listener_id, endpoint = %sub.endpoint, "listener registered");
        Ok(id)
    }

    /// Stops delivery to a listener after its queued frames are written.
    pub fn deregister(&self, subscription_id: u64) -> Result<(), PublishError> {
        let listener = self
            .registry
            .lock()
            .unwrap()
            .listeners
            .remove(&subscription_id)
            .ok_or(PublishError::UnknownListener(subscription_id))?;
        close(listener);
        Ok(())
    }

    /// Listeners whose connection is still up.
    pub fn listener_count(&self) -> usize {
        let registry = self.registry.lock().unwrap();
        registry.listeners.values().filter(|l| !l.queue.state.lock().unwrap().closed).count()
    }

    pub fn listener_ids(&self) -> Vec<(u64, String)> {
        let registry = self.registry.lock().unwrap();
        registry.listeners.iter().map(|(id, l)| (*id, l.listener_id.clone())).collect()
    }

    /// Queues one event for every live listener subscribed to `topic` and
    /// returns the envelope sequence number.
    pub fn publish(&self, topic: Topic, body: serde_json::Value) -> u64 {
        let mut registry = self.registry.lock().unwrap();
        let seq = registry.next_event_seq;
        registry.next_event_seq += 1;
        self.counters.published.fetch_add(1, Ordering::Relaxed);
        let frame = encode_frame(&EventEnvelope { topic, seq, body });
        for listener in registry.listeners.values().filter(|l| l.topics.contains(&topic)) {
            let mut state = listener.queue.state.lock().unwrap();
            if state.closed {
                continue;
            }
            if state.frames.len() >= self.capacity {
                state.frames.pop_front();
                self.counters.dropped.fetch_add(1, Ordering::Relaxed);
            }
            state.frames.push_back(frame.clone());
            listener.queue.ready.notify_one();
        }
        seq
    }

    /// Waits until every queued frame has been written or discarded.
    /// Returns false on timeout.
    pub fn wait_idle(&self, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        loop {
            let busy = {
                let registry = self.registry.lock().unwrap();
                registry.listeners.values().any(|l| {
                    let s = l.queue.state.lock().unwrap();
                    !s.closed && (!s.frames.is_empty() || s.writing > 0)
                })
            };
            if !busy {
                return true;
            }
            if Instant::now() >= deadline {
                return false;
            }
            thread::sleep(Duration::from_millis(2));
        }
    }
}

impl Drop for Publisher {
    fn drop(&mut self) {
        let listeners = std::mem::take(&mut self.registry.lock().unwrap().listeners);
        for listener in listeners.into_values() {
            close(listener);
        }
    }
}

fn close(mut listener: Listener) {
    {
        let mut state = listener.queue.state.lock().unwrap();
        state.closed = true;
        listener.queue.ready.notify_all();
    }
    if let Some(writer) = listener.writer.take() {
        let _ = writer.join();
    }
}

fn write_loop(mut stream: TcpStream, queue: &ListenerQueue, counters: &PublishCounters) {
    loop {
        let frame = {
            let mut state = queue.state.lock().unwrap();
            loop {
                if let Some(frame) = state.frames.pop_front() {
                    state.writing += 1;
                    break frame;
                }
                if state.closed {
                    let _ = stream.shutdown(Shutdown::Both);
                    return;
                }
                state = queue.ready.wait(state).unwrap();
            }
        };
        let result = stream.write_all(&frame);
        let mut state = queue.state.lock().unwrap();
        state.writing -= 1;
        match result {
            Ok(()) => {
                counters.delivered.fetch_add(1, Ordering::Relaxed);
            }
            Err(e) => {
                // The subscriber went away: everything still queued is lost.
                let lost = 1 + state.frames.len() as u64;
                counters.dropped.fetch_add(lost, Ordering::Relaxed);
                state.frames.clear();
                state.closed = true;
                tracing::warn!(error = %e, lost, "listener connection failed, delivery stopped");
                return;
            }
        }
    }
}
