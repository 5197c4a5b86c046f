//! The conversational loop: user text to scene graph, prompt, model reply,
//! validated program, and spoken feedback. Also owns navigation, keystroke
//! echo, verification and undo.

mod events;
mod nav;
mod transcript;
mod verify;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, mpsc};
use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;

pub use events::{EchoBuffer, Key, KeyEcho, UtteranceEvent, UtteranceKind};
pub use nav::{NavCommand, NavKind};
pub use transcript::{Transcript, TranscriptEntry, TurnOutcome};
pub use verify::describe_delta;

use crate::gateway::{ChatBackend, GatewayError};
use crate::prompt::{
    ClarifyReason, ConversationHistory, ERROR_RECOVERY_TEMPLATE, EnvelopeError, Message, Mode,
    PromptEngine, PromptError, ResponseEnvelope, Role, clarification_reply, out_of_scope_reply,
    parse_envelope,
};
use crate::scene::{Scene, Vec3, normalize_yaw};
use crate::scope::OutOfScopeTask;
use crate::sml::{
    Change, DeltaKind, DiagnosticKind, FieldValue, Field, InterpretError, Limits, RemovedObject,
    SceneDelta, Severity, SmlError, Subject, ValidationReport, Verdict, interpret, revert,
    validate_with,
};
use crate::ssg::{build_ssg, serialize_ssg};

/// Millisecond wall clock used for event and transcript timestamps.
pub trait TimeSource: Send + Sync {
    fn now_ms(&self) -> u64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl TimeSource for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    }
}

/// Deterministic clock that advances by a fixed step on every reading.
#[derive(Debug)]
pub struct StepClock {
    next: AtomicU64,
    step: u64,
}

impl StepClock {
    pub fn new(start_ms: u64, step_ms: u64) -> Self {
        Self {
            next: AtomicU64::new(start_ms),
            step: step_ms,
        }
    }
}

impl Default for StepClock {
    fn default() -> Self {
        Self::new(0, 1)
    }
}

impl TimeSource for StepClock {
    fn now_ms(&self) -> u64 {
        self.next.fetch_add(self.step, Ordering::Relaxed)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("no modification has been made yet")]
    NoModificationYet,
    #[error("nothing to undo")]
    NothingToUndo,
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("undo failed: {0}")]
    Undo(String),
}

/// Reply to one user turn.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnReport {
    pub reply: UtteranceEvent,
    pub entry: TranscriptEntry,
}

impl TurnReport {
    pub fn delta(&self) -> Option<&SceneDelta> {
        self.entry.delta.as_ref()
    }
}

const REPAIR_PREFIX: &str = "Your previous reply could not be used";

/// One user's conversation with one scene. Calls are serialized by `&mut self`.
pub struct Session {
    scene: Scene,
    backend: Arc<dyn ChatBackend>,
    engine: PromptEngine,
    history: ConversationHistory,
    transcript: Transcript,
    time: Arc<dyn TimeSource>,
    limits: Limits,
    echo: EchoBuffer,
    subscribers: Vec<mpsc::Sender<UtteranceEvent>>,
    undo_stack: Vec<SceneDelta>,
    last_change: Option<SceneDelta>,
}

impl Session {
    pub fn new(scene: Scene, backend: Arc<dyn ChatBackend>) -> Self {
        Self {
            scene,
            backend,
            engine: PromptEngine::default(),
            history: ConversationHistory::new(ConversationHistory::DEFAULT_MAX_TURNS),
            transcript: Transcript::default(),
            time: Arc::new(SystemClock),
            limits: Limits::default(),
            echo: EchoBuffer::default(),
            subscribers: Vec::new(),
            undo_stack: Vec::new(),
            last_change: None,
        }
    }

    pub fn with_engine(mut self, engine: PromptEngine) -> Self {
        self.engine = engine;
        self
    }

    pub fn with_max_turns(mut self, max_turns: usize) -> Self {
        self.history.max_turns = max_turns;
        self
    }

    pub fn with_time(mut self, time: Arc<dyn TimeSource>) -> Self {
        self.time = time;
        self
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn history(&self) -> &ConversationHistory {
        &self.history
    }

    pub fn engine(&self) -> &PromptEngine {
        &self.engine
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    /// Current scene graph as JSON.
    pub fn ssg_text(&self) -> String {
        serialize_ssg(&build_ssg(&self.scene))
    }

    /// Ordered stream of every utterance emitted from now on.
    pub fn subscribe(&mut self) -> mpsc::Receiver<UtteranceEvent> {
        let (tx, rx) = mpsc::channel();
        self.subscribers.push(tx);
        rx
    }

    fn emit(&mut self, kind: UtteranceKind, text: impl Into<String>) -> UtteranceEvent {
        let event = UtteranceEvent {
            kind,
            text: text.into(),
            timestamp_ms: self.time.now_ms(),
        };
        self.subscribers.retain(|tx| tx.send(event.clone()).is_ok());
        event
    }

    /// Speaks the key, and the completed word on a boundary. Enter also
    /// submits the line.
    pub fn echo_keystroke(&mut self, key: Key) -> KeyEcho {
        let (spoken, submitted) = self.echo.press(key);
        let events = spoken
            .into_iter()
            .map(|(kind, text)| self.emit(kind, text))
            .collect();
        KeyEcho { events, submitted }
    }

    pub fn input_line(&self) -> &str {
        self.echo.line()
    }

    fn complete(&self, messages: &[Message]) -> Result<String, GatewayError> {
        self.backend.complete(messages)
    }

    /// Runs one turn of the pipeline. The scene changes only when the model
    /// returns a valid modification that runs to completion.
    pub fn handle_user_input(&mut self, text: &str) -> Result<TurnReport, SessionError> {
        let input = text.trim().to_string();
        let timestamp_ms = self.time.now_ms();
        let version_before = self.scene.version();
        let ssg = self.ssg_text();
        let messages = self.engine.build_prompt(&self.history, &ssg, &input)?;

        let mut turn = TurnState::default();
        let outcome = match self.request_envelope(&messages, &input, &mut turn) {
            Err(e) => {
                turn.reply_kind = UtteranceKind::ErrorNotice;
                turn.reply = e.spoken();
                TurnOutcome::GatewayFailed { message: e.to_string() }
            }
            Ok(Fetched::Unusable) => {
                turn.reply = ERROR_RECOVERY_TEMPLATE.to_string();
                TurnOutcome::Recovered
            }
            Ok(Fetched::Unsupported(task)) => {
                turn.reply = out_of_scope_reply(&task);
                TurnOutcome::OutOfScope { task: Some(task) }
            }
            Ok(Fetched::Envelope(env)) => {
                let outcome = self.act_on(&env, &input, &mut turn);
                turn.envelope = Some(env);
                outcome
            }
        };

        if !matches!(outcome, TurnOutcome::GatewayFailed { .. }) {
            let assistant = turn
                .envelope
                .as_ref()
                .map(|e| e.raw.clone())
                .unwrap_or_else(|| turn.reply.clone());
            let now = self.time.now_ms();
            // timestamps come from a monotonic source, so pushes are in order
            let _ = self.history.push(Role::User, input.clone(), timestamp_ms);
            let _ = self.history.push(Role::Assistant, assistant, now);
        }

        let reply = self.emit(turn.reply_kind, turn.reply.clone());
        let entry = self
            .transcript
            .push(TranscriptEntry {
                index: 0,
                timestamp_ms,
                scene_version_before: version_before,
                user_input: input,
                envelope: turn.envelope,
                envelope_errors: turn.envelope_errors,
                validation: turn.validation,
                delta: turn.delta,
                outcome,
                reply: turn.reply,
                utterances: vec![reply.clone()],
            })
            .clone();
        Ok(TurnReport { reply, entry })
    }

    /// Asks the model, re-prompting once with the diagnostic if the reply
    /// cannot be parsed.
    fn request_envelope(
        &self,
        messages: &[Message],
        input: &str,
        turn: &mut TurnState,
    ) -> Result<Fetched, GatewayError> {
        let raw = self.complete(messages)?;
        let err = match parse_envelope(&raw) {
            Ok(env) => return Ok(Fetched::Envelope(env)),
            Err(EnvelopeError::Program(SmlError::Unsupported { task, .. })) => {
                return Ok(Fetched::Unsupported(task));
            }
            Err(e) => e,
        };
        turn.envelope_errors.push(err.to_string());
        let mut repair = messages.to_vec();
        repair.push(Message::new(Role::Assistant, raw));
        repair.push(Message::new(
            Role::User,
            format!(
                "{REPAIR_PREFIX}: {err}. Reply again following the reply format.\n\nUser request: {input}"
            ),
        ));
        let raw = self.complete(&repair)?;
        match parse_envelope(&raw) {
            Ok(env) => Ok(Fetched::Envelope(env)),
            Err(EnvelopeError::Program(SmlError::Unsupported { task, .. })) => Ok(Fetched::Unsupported(task)),
            Err(e) => {
                turn.envelope_errors.push(e.to_string());
                Ok(Fetched::Unusable)
            }
        }
    }

    fn act_on(&mut self, env: &ResponseEnvelope, input: &str, turn: &mut TurnState) -> TurnOutcome {
        let text = env.reply_text.trim();
        let or = |fallback: String| if text.is_empty() { fallback } else { text.to_string() };
        match env.mode {
            Mode::Answer => {
                turn.reply = or("I don't have an answer to that.".into());
                TurnOutcome::Answered
            }
            Mode::Clarify => {
                turn.reply = or(clarification_reply(None));
                TurnOutcome::Clarified
            }
            Mode::ErrorRecovery => {
                turn.reply = or(ERROR_RECOVERY_TEMPLATE.into());
                TurnOutcome::Recovered
            }
            Mode::OutOfScope => {
                let task = env
                    .task
                    .clone()
                    .or_else(|| self.engine.instructions().out_of_scope_for(input));
                turn.reply = match &task {
                    Some(t) if text.is_empty() => out_of_scope_reply(t),
                    _ => or("Sorry, that request is out of scope.".into()),
                };
                TurnOutcome::OutOfScope { task }
            }
            Mode::Modify => self.modify(env, turn),
        }
    }

    fn modify(&mut self, env: &ResponseEnvelope, turn: &mut TurnState) -> TurnOutcome {
        let program = env.program.clone().unwrap_or_default();
        let report = validate_with(&program, &self.scene, &self.limits);
        let verdict = report.verdict;
        let outcome = match verdict {
            Verdict::OutOfScope => {
                let task = report.out_of_scope_task();
                turn.reply = out_of_scope_reply(task.as_ref().unwrap_or(&OutOfScopeTask::ObjectDeletion));
                TurnOutcome::OutOfScope { task }
            }
            Verdict::Rejected => {
                let first = report.errors().next();
                match first.map(|d| &d.kind) {
                    Some(DiagnosticKind::NotFound { query }) => {
                        turn.reply = clarification_reply(Some(&ClarifyReason::NotFound { query: query.clone() }));
                        TurnOutcome::Clarified
                    }
                    Some(DiagnosticKind::Ambiguous { query, candidates }) => {
                        turn.reply = clarification_reply(Some(&ClarifyReason::Ambiguous {
                            query: query.clone(),
                            candidates: candidates.clone(),
                        }));
                        TurnOutcome::Clarified
                    }
                    _ => {
                        let reason = first.map(|d| d.reason.as_str()).unwrap_or("the change is not allowed");
                        turn.reply = format!("I couldn't make that change: {reason}.");
                        TurnOutcome::Rejected
                    }
                }
            }
            Verdict::Ok => match interpret(&program, &mut self.scene) {
                Ok(delta) => {
                    let text = env.reply_text.trim();
                    let mut reply = if text.is_empty() { "Done.".to_string() } else { text.to_string() };
                    for w in report.diagnostics.iter().filter(|d| d.severity == Severity::Warning) {
                        reply.push_str(&format!(" Note: {}.", w.reason));
                    }
                    turn.reply = reply;
                    if !program.is_empty() {
                        self.undo_stack.push(delta.clone());
                        self.last_change = Some(delta.clone());
                        turn.delta = Some(delta);
                    }
                    TurnOutcome::Applied
                }
                Err(e) => {
                    turn.reply = execution_failure_reply(&e);
                    TurnOutcome::ExecutionFailed { message: e.to_string() }
                }
            },
        };
        turn.validation = Some(report);
        outcome
    }

    /// Moves or turns the player. Pans up and down are accepted and change
    /// nothing, since the view has no pitch.
    pub fn navigate(&mut self, cmd: NavCommand) -> SceneDelta {
        let version = self.scene.version();
        let mut delta = SceneDelta::empty(DeltaKind::Navigation, version);
        let player = self.scene.player.clone();
        let step = |dir: Vec3, sign: f64| player.position + dir * (sign * cmd.magnitude);
        let (position, yaw) = match cmd.kind {
            NavKind::MoveForward => (step(player.forward(), 1.0), player.yaw),
            NavKind::MoveBack => (step(player.forward(), -1.0), player.yaw),
            NavKind::StrafeRight => (step(player.right(), 1.0), player.yaw),
            NavKind::StrafeLeft => (step(player.right(), -1.0), player.yaw),
            NavKind::PanRight => (player.position, normalize_yaw(player.yaw + cmd.magnitude)),
            NavKind::PanLeft => (player.position, normalize_yaw(player.yaw - cmd.magnitude)),
            NavKind::PanUp | NavKind::PanDown => return delta,
        };
        if position != player.position {
            delta.changes.push(Change {
                subject: Subject::Player,
                field: Field::Position,
                old: FieldValue::Vector(player.position),
                new: FieldValue::Vector(position),
            });
        }
        if yaw != player.yaw {
            delta.changes.push(Change {
                subject: Subject::Player,
                field: Field::Yaw,
                old: FieldValue::Number(player.yaw),
                new: FieldValue::Number(yaw),
            });
        }
        self.scene.player.position = position;
        self.scene.player.yaw = yaw;
        delta
    }

    /// Advances the scene clock and drops expired markers. The returned
    /// delta carries the new clock so observers stay in step.
    pub fn tick(&mut self, dt: f64) -> Option<SceneDelta> {
        if !(dt > 0.0 && dt.is_finite()) {
            return None;
        }
        let version = self.scene.version();
        let mut delta = SceneDelta::empty(DeltaKind::Expiry, version);
        delta.removed = self
            .scene
            .expire(dt)
            .into_iter()
            .map(|(index, object)| RemovedObject { index, object })
            .collect();
        delta.clock = Some(self.scene.clock());
        Some(delta)
    }

    /// Earliest time a transient marker expires, if any.
    pub fn next_expiry(&self) -> Option<f64> {
        self.scene
            .objects()
            .iter()
            .filter_map(|o| o.transient_until)
            .min_by(f64::total_cmp)
    }

    /// Describes the most recent modification from recorded values, without
    /// consulting the model.
    pub fn verify_last(&mut self) -> Result<UtteranceEvent, SessionError> {
        let text = self
            .last_change
            .as_ref()
            .map(describe_delta)
            .ok_or(SessionError::NoModificationYet)?;
        Ok(self.emit(UtteranceKind::Reply, text))
    }

    /// Reverts the most recent modification and returns the inverse delta
    /// for observers.
    pub fn undo(&mut self) -> Result<SceneDelta, SessionError> {
        let delta = self.undo_stack.last().ok_or(SessionError::NothingToUndo)?;
        // created objects that have not expired yet, with their current index
        let live: Vec<RemovedObject> = delta
            .created
            .iter()
            .filter_map(|o| {
                let index = self.scene.objects().iter().position(|x| x.id == o.id)?;
                Some(RemovedObject {
                    index,
                    object: self.scene.objects()[index].clone(),
                })
            })
            .collect();
        revert(delta, &mut self.scene).map_err(|e| SessionError::Undo(e.to_string()))?;
        let delta = self.undo_stack.pop().expect("checked above");
        let inverse = inverse_delta(&delta, live);
        self.last_change = Some(inverse.clone());
        Ok(inverse)
    }

    pub fn can_undo(&self) -> bool {
        !self.undo_stack.is_empty()
    }
}

#[derive(Default)]
struct TurnState {
    envelope: Option<ResponseEnvelope>,
    envelope_errors: Vec<String>,
    validation: Option<ValidationReport>,
    delta: Option<SceneDelta>,
    reply: String,
    reply_kind: UtteranceKind,
}

enum Fetched {
    Envelope(ResponseEnvelope),
    Unsupported(OutOfScopeTask),
    Unusable,
}

fn execution_failure_reply(e: &InterpretError) -> String {
    format!("{ERROR_RECOVERY_TEMPLATE} {} failed: {}.", e.command, e.message)
}

/// Delta that takes a mirror from `delta.version` back to `delta.base_version`.
fn inverse_delta(delta: &SceneDelta, live_created: Vec<RemovedObject>) -> SceneDelta {
    let created: Vec<_> = delta.created.iter().map(|o| &o.id).collect();
    let mut inv = SceneDelta::empty(DeltaKind::Undo, delta.version);
    inv.version = delta.base_version;
    inv.changes = delta
        .changes
        .iter()
        .rev()
        .filter(|c| !matches!(&c.subject, Subject::Object { id, .. } if created.contains(&id)))
        .map(|c| Change {
            subject: c.subject.clone(),
            field: c.field,
            old: c.new.clone(),
            new: c.old.clone(),
        })
        .collect();
    inv.removed = live_created;
    inv.created = delta.removed.iter().map(|r| r.object.clone()).collect();
    inv
}
