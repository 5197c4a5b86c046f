//! Owns the session on a dedicated thread. Every mutation goes through its
//! queue, and every resulting message is fanned out to all connections.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, mpsc};
use std::thread;
use std::time::{Duration, Instant};

use scenetalk_core::scene::Scene;
use scenetalk_core::session::{NavCommand, Session, UtteranceEvent};
use tokio::sync::{broadcast, mpsc as tmpsc, oneshot};

use crate::wire::{Body, ReplyPayload};

const FANOUT_CAPACITY: usize = 1024;

/// Messages addressed to a single connection.
pub type DirectSender = tmpsc::UnboundedSender<Body>;

enum Command {
    Attach(oneshot::Sender<(Scene, broadcast::Receiver<Body>)>),
    Input(String, Option<DirectSender>),
    Nav(NavCommand),
    Snapshot(oneshot::Sender<Scene>),
    Ssg(oneshot::Sender<String>),
    Transcript(oneshot::Sender<String>),
}

/// Handle to the session thread. Cheap to clone.
#[derive(Clone)]
pub struct Hub {
    tx: mpsc::Sender<Command>,
    driver: Arc<AtomicBool>,
}

/// Held by the driver connection; releases the seat on drop.
pub struct DriverSeat {
    driver: Arc<AtomicBool>,
}

impl Drop for DriverSeat {
    fn drop(&mut self) {
        self.driver.store(false, Ordering::SeqCst);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HubClosed;

impl Hub {
    /// Starts the session thread. It stops when every handle is dropped and
    /// returns the session.
    pub fn spawn(session: Session) -> (Hub, thread::JoinHandle<Session>) {
        let (tx, rx) = mpsc::channel();
        let handle = thread::Builder::new()
            .name("scenetalk-session".into())
            .spawn(move || run(session, rx))
            .expect("spawn session thread");
        let hub = Hub {
            tx,
            driver: Arc::new(AtomicBool::new(false)),
        };
        (hub, handle)
    }

    /// Claims the single driver seat, or None when it is taken.
    pub fn claim_driver(&self) -> Option<DriverSeat> {
        self.driver
            .compare_exchange(false, true, Ordering::SeqCst, Ordering::SeqCst)
            .ok()
            .map(|_| DriverSeat {
                driver: self.driver.clone(),
            })
    }

    async fn ask<T>(&self, make: impl FnOnce(oneshot::Sender<T>) -> Command) -> Result<T, HubClosed> {
        let (tx, rx) = oneshot::channel();
        self.tx.send(make(tx)).map_err(|_| HubClosed)?;
        rx.await.map_err(|_| HubClosed)
    }

    /// A snapshot and a receiver for every message after it.
    pub async fn attach(&self) -> Result<(Scene, broadcast::Receiver<Body>), HubClosed> {
        self.ask(Command::Attach).await
    }

    pub async fn snapshot(&self) -> Result<Scene, HubClosed> {
        self.ask(Command::Snapshot).await
    }

    pub async fn ssg(&self) -> Result<String, HubClosed> {
        self.ask(Command::Ssg).await
    }

    /// The transcript as JSON lines.
    pub async fn transcript(&self) -> Result<String, HubClosed> {
        self.ask(Command::Transcript).await
    }

    /// Queues a user turn. Errors that concern only the sender go to
    /// `direct`.
    pub fn input(&self, text: String, direct: Option<DirectSender>) -> Result<(), HubClosed> {
        self.tx.send(Command::Input(text, direct)).map_err(|_| HubClosed)
    }

    pub fn nav(&self, cmd: NavCommand) -> Result<(), HubClosed> {
        self.tx.send(Command::Nav(cmd)).map_err(|_| HubClosed)
    }
}

/// Wall-clock anchor that maps pending expiries onto real time.
struct Timer {
    anchor: Option<(Instant, f64)>,
}

impl Timer {
    fn deadline(&mut self, session: &Session) -> Option<(Instant, f64)> {
        let Some(at) = session.next_expiry() else {
            self.anchor = None;
            return None;
        };
        let (wall, clock) = *self.anchor.get_or_insert((Instant::now(), session.scene().clock()));
        let wait = Duration::from_secs_f64((at - clock).max(0.0));
        Some((wall + wait, at))
    }
}

fn run(mut session: Session, rx: mpsc::Receiver<Command>) -> Session {
    let (out, _) = broadcast::channel(FANOUT_CAPACITY);
    let utterances = session.subscribe();
    let mut timer = Timer { anchor: None };
    loop {
        let cmd = match timer.deadline(&session) {
            Some((deadline, at)) => match rx.recv_timeout(deadline.saturating_duration_since(Instant::now())) {
                Ok(cmd) => cmd,
                Err(mpsc::RecvTimeoutError::Timeout) => {
                    let dt = at - session.scene().clock();
                    if let Some(delta) = session.tick(dt) {
                        let _ = out.send(Body::SceneDelta(delta));
                    }
                    timer.anchor = Some((deadline, session.scene().clock()));
                    continue;
                }
                Err(mpsc::RecvTimeoutError::Disconnected) => break,
            },
            None => match rx.recv() {
                Ok(cmd) => cmd,
                Err(_) => break,
            },
        };
        match cmd {
            Command::Attach(reply) => {
                let _ = reply.send((session.scene().clone(), out.subscribe()));
            }
            Command::Snapshot(reply) => {
                let _ = reply.send(session.scene().clone());
            }
            Command::Ssg(reply) => {
                let _ = reply.send(session.ssg_text());
            }
            Command::Transcript(reply) => {
                let mut buf = Vec::new();
                let _ = session.transcript().write_jsonl(&mut buf);
                let _ = reply.send(String::from_utf8_lossy(&buf).into_owned());
            }
            Command::Input(text, direct) => match session.handle_user_input(&text) {
                Ok(report) => {
                    let entry = report.entry;
                    let _ = out.send(Body::Reply(ReplyPayload {
                        turn: entry.index,
                        text: entry.reply.clone(),
                        mode: entry.envelope.as_ref().map(|e| e.mode),
                        outcome: entry.outcome.clone(),
                    }));
                    drain(&utterances, &out);
                    if let Some(delta) = entry.delta {
                        let _ = out.send(Body::SceneDelta(delta));
                    }
                }
                Err(e) => {
                    drain(&utterances, &out);
                    if let Some(direct) = direct {
                        let _ = direct.send(Body::error(e.to_string()));
                    }
                }
            },
            Command::Nav(cmd) => {
                let delta = session.navigate(cmd);
                if !delta.is_empty() {
                    let _ = out.send(Body::SceneDelta(delta));
                }
            }
        }
    }
    session
}

fn drain(utterances: &mpsc::Receiver<UtteranceEvent>, out: &broadcast::Sender<Body>) {
    for event in utterances.try_iter() {
        let _ = out.send(Body::Utterance(event));
    }
}
