use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::coding::{CodedPrompt, Judgement, code_prompt};
use super::lexicon::Lexicon;
use crate::color::{color_by_name, color_name, color_similarity};
use crate::gateway::{ChatBackend, ScriptRule, ScriptedBackend};
use crate::prompt::Mode;
use crate::scene::{ColorRgba, Scene, SceneObject, Vec3, bounding_extent, horizontal_distance};
use crate::scenefile::BundledScene;
use crate::session::{NavCommand, NavKind, Session, StepClock, Transcript, TurnReport};
use crate::sml::SceneDelta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Volume,
    Pitch,
    LightIntensity,
    /// Scene brightness at the object's position.
    LightDensity,
    /// Per-axis bounding size. Comparisons require every axis to agree.
    Extent,
}

/// A machine-checkable condition on the scene or the last reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Predicate {
    Mode { mode: Mode },
    /// The last prompt changed nothing.
    NoDelta,
    /// The last prompt applied a delta, optionally with this many changes.
    Delta {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        changes: Option<usize>,
    },
    ReplyContains { text: String },
    ColorChanged { object: String },
    /// Named color (nearest palette name) or exact hex.
    ColorIs { object: String, color: String },
    SameColor { object: String, other: String },
    /// Color similarity between two objects stays below a bound.
    ContrastBelow { object: String, against: String, max_similarity: f64 },
    Increased { object: String, quantity: Quantity },
    Decreased { object: String, quantity: Quantity },
    Greater { object: String, than: String, quantity: Quantity },
    /// Highest value among audio or light sources whose name contains `among`.
    Highest { object: String, among: String, quantity: Quantity },
    NearPlayer { object: String, within: f64 },
    Muted { object: String, muted: bool },
    /// The object is audible and every other audio source is silent.
    Isolated { object: String },
    TextContains { object: String, text: String },
    ExtentAtMost { object: String, meters: f64 },
    Transients { count: usize },
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let json = serde_json::to_string(self).map_err(|_| fmt::Error)?;
        f.write_str(&json)
    }
}

/// One scripted action followed by its checks.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Step {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub say: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nav: Option<NavKind>,
    /// Number of times to repeat `nav`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeat: Option<usize>,
    /// Advances the scene clock to this many seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub undo: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expect: Vec<Predicate>,
}

enum Action<'a> {
    Say(&'a str),
    Nav(NavKind, usize),
    At(f64),
    Undo,
}

impl Step {
    fn action(&self) -> Result<Action<'_>, String> {
        let mut found = Vec::new();
        if let Some(s) = &self.say {
            found.push(Action::Say(s));
        }
        if let Some(k) = self.nav {
            found.push(Action::Nav(k, self.repeat.unwrap_or(1)));
        }
        if let Some(t) = self.at {
            found.push(Action::At(t));
        }
        if self.undo {
            found.push(Action::Undo);
        }
        match found.len() {
            1 => Ok(found.pop().expect("one action")),
            0 => Err("step has no action".into()),
            _ => Err("step has more than one action".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskScript {
    pub id: String,
    pub title: String,
    /// Bundled scene key; filled from the bundle when omitted.
    #[serde(default)]
    pub scene: String,
    pub steps: Vec<Step>,
    /// Checked on the final snapshot.
    #[serde(default)]
    pub expect: Vec<Predicate>,
}

impl TaskScript {
    pub fn inputs(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().filter_map(|s| s.say.as_deref())
    }
}

/// Tasks plus the canned model replies that drive them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptBundle {
    pub name: String,
    pub scene: String,
    pub rules: Vec<ScriptRule>,
    pub fallback: String,
    pub tasks: Vec<TaskScript>,
}

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("script bundle: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("task {task} step {step}: {message}")]
    Step { task: String, step: usize, message: String },
    #[error("task {task}: unknown scene '{scene}'")]
    Scene { task: String, scene: String },
}

impl ScriptBundle {
    pub fn from_json(text: &str) -> Result<Self, ScriptError> {
        let mut bundle: ScriptBundle = serde_json::from_str(text)?;
        for t in &mut bundle.tasks {
            if t.scene.is_empty() {
                t.scene = bundle.scene.clone();
            }
            t.scene
                .parse::<BundledScene>()
                .map_err(|_| ScriptError::Scene {
                    task: t.id.clone(),
                    scene: t.scene.clone(),
                })?;
            for (i, s) in t.steps.iter().enumerate() {
                s.action().map_err(|message| ScriptError::Step {
                    task: t.id.clone(),
                    step: i + 1,
                    message,
                })?;
            }
        }
        Ok(bundle)
    }

    pub fn backend(&self) -> ScriptedBackend {
        ScriptedBackend::new(self.rules.clone(), self.fallback.clone())
    }

    /// The six cat-park tasks.
    pub fn cat_park_tasks() -> Self {
        Self::from_json(include_str!("../../resources/scripts/cat_park_tasks.json"))
            .expect("bundled script is valid")
    }

    /// The demo-room walkthrough of the six guiding categories.
    pub fn demo_room_walkthrough() -> Self {
        Self::from_json(include_str!("../../resources/scripts/demo_room_walkthrough.json"))
            .expect("bundled script is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateFailure {
    /// 1-based step number; 0 for the final checks.
    pub step: usize,
    pub predicate: Predicate,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub failure: Option<PredicateFailure>,
    pub transcript: Transcript,
    pub coded: Vec<CodedPrompt>,
    /// Every delta the task produced, in order, including navigation and
    /// clock ticks.
    pub deltas: Vec<SceneDelta>,
    pub final_scene: Scene,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptReport {
    pub tasks: Vec<TaskResult>,
}

impl ScriptReport {
    pub fn all_passed(&self) -> bool {
        self.tasks.iter().all(|t| t.passed)
    }

    pub fn coded(&self) -> Vec<CodedPrompt> {
        self.tasks.iter().flat_map(|t| t.coded.iter().cloned()).collect()
    }

    pub fn summary(&self) -> String {
        self.tasks
            .iter()
            .map(|t| match &t.failure {
                None => format!("task {} PASS {}\n", t.id, t.title),
                Some(f) => format!(
                    "task {} FAIL {} (step {}: {} {})\n",
                    t.id, t.title, f.step, f.predicate, f.detail
                ),
            })
            .collect()
    }
}

struct Ctx<'a> {
    initial: &'a Scene,
    scene: &'a Scene,
    last: Option<&'a TurnReport>,
}

fn find<'a>(scene: &'a Scene, name: &str) -> Result<&'a SceneObject, String> {
    scene.by_name(name).ok_or_else(|| format!("no object named '{name}'"))
}

#[derive(Debug, Clone, Copy)]
enum Value {
    Scalar(f64),
    Vector(Vec3),
}

impl Value {
    fn cmp_all(self, other: Value, f: impl Fn(f64, f64) -> bool) -> bool {
        match (self, other) {
            (Value::Scalar(a), Value::Scalar(b)) => f(a, b),
            (Value::Vector(a), Value::Vector(b)) => f(a.x, b.x) && f(a.y, b.y) && f(a.z, b.z),
            _ => false,
        }
    }

    fn magnitude(self) -> f64 {
        match self {
            Value::Scalar(v) => v,
            Value::Vector(v) => v.max_component(),
        }
    }
}

fn quantity(scene: &Scene, obj: &SceneObject, q: Quantity) -> Result<Value, String> {
    let missing = |facet: &str| format!("{} has no {facet}", obj.name);
    Ok(match q {
        Quantity::Volume => Value::Scalar(obj.audio.as_ref().ok_or_else(|| missing("audio"))?.volume),
        Quantity::Pitch => Value::Scalar(obj.audio.as_ref().ok_or_else(|| missing("audio"))?.pitch),
        Quantity::LightIntensity => Value::Scalar(obj.light.as_ref().ok_or_else(|| missing("light"))?.intensity),
        Quantity::LightDensity => Value::Scalar(scene.light_density_at(obj.position)),
        Quantity::Extent => Value::Vector(bounding_extent(obj)),
    })
}

fn show(v: Value) -> String {
    match v {
        Value::Scalar(x) => format!("{x}"),
        Value::Vector(v) => format!("{v}"),
    }
}

fn color_of(obj: &SceneObject) -> Result<ColorRgba, String> {
    obj.color.ok_or_else(|| format!("{} has no color", obj.name))
}

fn ensure(ok: bool, detail: impl FnOnce() -> String) -> Result<(), String> {
    if ok { Ok(()) } else { Err(detail()) }
}

impl Predicate {
    fn check(&self, ctx: &Ctx) -> Result<(), String> {
        let scene = ctx.scene;
        let last = || ctx.last.ok_or_else(|| "no prompt has been sent".to_string());
        match self {
            Predicate::Mode { mode } => {
                let got = last()?.entry.envelope.as_ref().map(|e| e.mode);
                ensure(got == Some(*mode), || format!("mode was {got:?}"))
            }
            Predicate::NoDelta => ensure(last()?.entry.delta.is_none(), || "a delta was applied".into()),
            Predicate::Delta { changes } => {
                let d = last()?
                    .entry
                    .delta
                    .as_ref()
                    .ok_or_else(|| format!("no delta; reply was '{}'", last().unwrap().reply.text))?;
                let n = d.changes.len() + d.created.len() + d.removed.len();
                ensure(changes.is_none_or(|c| c == n), || format!("{n} changes"))
            }
            Predicate::ReplyContains { text } => {
                let reply = &last()?.reply.text;
                ensure(reply.to_lowercase().contains(&text.to_lowercase()), || {
                    format!("reply was '{reply}'")
                })
            }
            Predicate::ColorChanged { object } => {
                let before = find(ctx.initial, object)?.color;
                let after = find(scene, object)?.color;
                ensure(before != after, || "color unchanged".into())
            }
            Predicate::ColorIs { object, color } => {
                let c = color_of(find(scene, object)?)?;
                let ok = match ColorRgba::from_hex(color) {
                    Some(want) => want == c,
                    None => color_name(c).eq_ignore_ascii_case(color)
                        || color_by_name(color).is_some_and(|w| w == c),
                };
                ensure(ok, || format!("color is {} ({})", c.to_hex(), color_name(c)))
            }
            Predicate::SameColor { object, other } => {
                let a = color_of(find(scene, object)?)?;
                let b = color_of(find(scene, other)?)?;
                ensure(a == b, || format!("{} vs {}", a.to_hex(), b.to_hex()))
            }
            Predicate::ContrastBelow {
                object,
                against,
                max_similarity,
            } => {
                let a = color_of(find(scene, object)?)?;
                let b = color_of(find(scene, against)?)?;
                let sim = color_similarity(a, b);
                ensure(sim < *max_similarity, || format!("similarity {sim:.3}"))
            }
            Predicate::Increased { object, quantity: q } | Predicate::Decreased { object, quantity: q } => {
                let before = quantity(ctx.initial, find(ctx.initial, object)?, *q)?;
                let after = quantity(scene, find(scene, object)?, *q)?;
                let up = matches!(self, Predicate::Increased { .. });
                let ok = after.cmp_all(before, |a, b| if up { a > b } else { a < b });
                ensure(ok, || format!("{} -> {}", show(before), show(after)))
            }
            Predicate::Greater { object, than, quantity: q } => {
                let a = quantity(scene, find(scene, object)?, *q)?;
                let b = quantity(scene, find(scene, than)?, *q)?;
                ensure(a.cmp_all(b, |x, y| x > y), || format!("{} vs {}", show(a), show(b)))
            }
            Predicate::Highest { object, among, quantity: q } => {
                let needle = among.to_lowercase();
                let target = quantity(scene, find(scene, object)?, *q)?.magnitude();
                for o in scene.objects() {
                    if o.name.eq_ignore_ascii_case(object) || !o.name.to_lowercase().contains(&needle) {
                        continue;
                    }
                    if let Ok(v) = quantity(scene, o, *q) {
                        ensure(v.magnitude() < target, || format!("{} has {}", o.name, show(v)))?;
                    }
                }
                Ok(())
            }
            Predicate::NearPlayer { object, within } => {
                let d = horizontal_distance(find(scene, object)?.position, scene.player.position);
                ensure(d <= *within, || format!("{d:.2} m away"))
            }
            Predicate::Muted { object, muted } => {
                let o = find(scene, object)?;
                let a = o.audio.as_ref().ok_or_else(|| format!("{object} has no audio"))?;
                ensure(a.muted == *muted, || format!("muted is {}", a.muted))
            }
            Predicate::Isolated { object } => {
                let o = find(scene, object)?;
                let a = o.audio.as_ref().ok_or_else(|| format!("{object} has no audio"))?;
                ensure(!a.muted && a.volume > 0.0, || format!("{object} is silent"))?;
                for other in scene.objects().iter().filter(|x| x.id != o.id) {
                    if let Some(b) = &other.audio {
                        ensure(b.muted || b.volume == 0.0, || format!("{} is audible", other.name))?;
                    }
                }
                Ok(())
            }
            Predicate::TextContains { object, text } => {
                let o = find(scene, object)?;
                let content = o.text.as_ref().map(|t| t.content.as_str()).unwrap_or_default();
                ensure(content.contains(text.as_str()), || format!("text is '{content}'"))
            }
            Predicate::ExtentAtMost { object, meters } => {
                let e = bounding_extent(find(scene, object)?);
                ensure(e.max_component() <= *meters, || format!("extent {e}"))
            }
            Predicate::Transients { count } => {
                let n = scene.objects().iter().filter(|o| o.is_transient()).count();
                ensure(n == *count, || format!("{n} transient objects"))
            }
        }
    }
}

/// Runs one task in a fresh session on `scene`.
pub fn run_task(script: &TaskScript, scene: Scene, backend: Arc<dyn ChatBackend>, lexicon: &Lexicon) -> TaskResult {
    let initial = scene.clone();
    let mut session = Session::new(scene, backend).with_time(Arc::new(StepClock::default()));
    let mut deltas = Vec::new();
    let mut last: Option<TurnReport> = None;
    let mut failure = None;
    let mut verdicts: Vec<(usize, bool)> = Vec::new();

    'steps: for (i, step) in script.steps.iter().enumerate() {
        let fail = |p: &Predicate, detail: String| PredicateFailure {
            step: i + 1,
            predicate: p.clone(),
            detail,
        };
        let mut said = false;
        match step.action() {
            Err(message) => {
                failure = Some(fail(&Predicate::NoDelta, message));
                break;
            }
            Ok(Action::Say(text)) => match session.handle_user_input(text) {
                Ok(report) => {
                    deltas.extend(report.delta().cloned());
                    last = Some(report);
                    said = true;
                }
                Err(e) => {
                    failure = Some(fail(&Predicate::NoDelta, e.to_string()));
                    break;
                }
            },
            Ok(Action::Nav(kind, n)) => {
                for _ in 0..n {
                    deltas.push(session.navigate(NavCommand::new(kind)));
                }
            }
            Ok(Action::At(t)) => {
                deltas.extend(session.tick(t - session.scene().clock()));
            }
            Ok(Action::Undo) => match session.undo() {
                Ok(d) => deltas.push(d),
                Err(e) => {
                    failure = Some(fail(&Predicate::NoDelta, e.to_string()));
                    break;
                }
            },
        }
        let ctx = Ctx {
            initial: &initial,
            scene: session.scene(),
            last: last.as_ref(),
        };
        let mut ok = true;
        for p in &step.expect {
            if let Err(detail) = p.check(&ctx) {
                failure.get_or_insert_with(|| fail(p, detail));
                ok = false;
            }
        }
        if said {
            let idx = session.transcript().len() - 1;
            verdicts.push((idx, ok));
        }
        if !ok {
            break 'steps;
        }
    }

    if failure.is_none() {
        let ctx = Ctx {
            initial: &initial,
            scene: session.scene(),
            last: last.as_ref(),
        };
        for p in &script.expect {
            if let Err(detail) = p.check(&ctx) {
                failure = Some(PredicateFailure {
                    step: 0,
                    predicate: p.clone(),
                    detail,
                });
                break;
            }
        }
    }

    let coded = session
        .transcript()
        .entries()
        .iter()
        .map(|e| {
            let verified = verdicts.iter().find(|(i, _)| *i == e.index).map(|(_, ok)| *ok);
            code_prompt(e, lexicon, Judgement { verified, task_driven: true })
        })
        .collect();

    TaskResult {
        id: script.id.clone(),
        title: script.title.clone(),
        passed: failure.is_none(),
        failure,
        transcript: session.transcript().clone(),
        coded,
        deltas,
        final_scene: session.scene().clone(),
    }
}

/// Runs every task against its bundled scene, each in a fresh session.
pub fn run_task_scripts(scripts: &[TaskScript], backend: Arc<dyn ChatBackend>) -> ScriptReport {
    let lexicon = Lexicon::bundled();
    let tasks = scripts
        .iter()
        .map(|s| {
            let scene = s
                .scene
                .parse::<BundledScene>()
                .map(|b| b.load())
                .unwrap_or_else(|_| Scene::empty());
            run_task(s, scene, backend.clone(), &lexicon)
        })
        .collect();
    ScriptReport { tasks }
}
