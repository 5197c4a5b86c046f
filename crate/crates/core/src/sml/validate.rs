use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{Arg, Command, SmlProgram, Statement, Target};
use crate::color::color_similarity;
use crate::scene::{MAX_PITCH, MIN_PITCH, ObjectId, Scene, SceneError, SceneObject, TEXTURED_TAG};
use crate::scope::OutOfScopeTask;

/// Numeric guard rails applied before anything runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub volume: (f64, f64),
    pub pitch: (f64, f64),
    pub scale_factor: (f64, f64),
    /// Upper bound on font size; sizes must also be > 0.
    pub max_text_size: f64,
    /// Largest absolute coordinate or offset accepted, in meters.
    pub max_coordinate: f64,
    /// Similarity above which a new color is flagged as blending in.
    pub blend_similarity: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            volume: (0.0, 1.0),
            pitch: (MIN_PITCH, MAX_PITCH),
            scale_factor: (0.01, 100.0),
            max_text_size: 512.0,
            max_coordinate: 10_000.0,
            blend_similarity: 0.92,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiagnosticKind {
    NotFound { query: String },
    Ambiguous { query: String, candidates: Vec<String> },
    OutOfRange { what: String, value: f64, min: f64, max: f64 },
    MissingFacet { object: String, facet: String },
    /// Color change on a textured object without simplifying it first.
    TexturedColor { object: String },
    OutOfScope { task: OutOfScopeTask },
    NameTaken { name: String },
    SelfReference { object: String },
    /// New color is close to a nearby object's color.
    LowContrast { object: String, other: String, similarity: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub statement: usize,
    pub severity: Severity,
    pub reason: String,
    pub kind: DiagnosticKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Ok,
    OutOfScope,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub verdict: Verdict,
    pub diagnostics: Vec<Diagnostic>,
    pub resolved_targets: BTreeMap<usize, ObjectId>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Error)
    }

    pub fn out_of_scope_task(&self) -> Option<OutOfScopeTask> {
        self.errors().find_map(|d| match &d.kind {
            DiagnosticKind::OutOfScope { task } => Some(task.clone()),
            DiagnosticKind::TexturedColor { .. } => Some(OutOfScopeTask::TexturedColorChange),
            _ => None,
        })
    }
}

pub fn validate(program: &SmlProgram, scene: &Scene) -> ValidationReport {
    validate_with(program, scene, &Limits::default())
}

struct Checker<'a> {
    scene: &'a Scene,
    limits: &'a Limits,
    diagnostics: Vec<Diagnostic>,
    resolved: BTreeMap<usize, ObjectId>,
    /// Names of objects the program creates before they are referenced.
    pending_names: Vec<String>,
    simplified: HashSet<ObjectId>,
}

enum Resolved<'a> {
    Existing(&'a SceneObject),
    Pending,
    Player,
}

impl<'a> Checker<'a> {
    fn push(&mut self, statement: usize, severity: Severity, kind: DiagnosticKind) {
        let reason = match &kind {
            DiagnosticKind::NotFound { query } => format!("no object named '{query}' exists"),
            DiagnosticKind::Ambiguous { query, candidates } => {
                format!("'{query}' could mean {}", candidates.join(", "))
            }
            DiagnosticKind::OutOfRange { what, value, min, max } => {
                format!("{what} {value} is outside [{min}, {max}]")
            }
            DiagnosticKind::MissingFacet { object, facet } => format!("{object} has no {facet}"),
            DiagnosticKind::TexturedColor { object } => format!(
                "{object} has a textured material; simplify the material before changing its color"
            ),
            DiagnosticKind::OutOfScope { task } => format!("{task} is out of scope"),
            DiagnosticKind::NameTaken { name } => format!("an object named '{name}' already exists"),
            DiagnosticKind::SelfReference { object } => {
                format!("{object} cannot be moved near itself")
            }
            DiagnosticKind::LowContrast { object, other, similarity } => format!(
                "new color of {object} is {:.0}% similar to {other}",
                similarity * 100.0
            ),
        };
        self.diagnostics.push(Diagnostic {
            statement,
            severity,
            reason,
            kind,
        });
    }

    fn resolve(&mut self, idx: usize, target: &Target) -> Option<Resolved<'a>> {
        let name = match target {
            Target::Player => return Some(Resolved::Player),
            Target::Object(name) => name,
        };
        if self
            .pending_names
            .iter()
            .any(|n| n.eq_ignore_ascii_case(name.trim()))
        {
            return Some(Resolved::Pending);
        }
        match self.scene.resolve_object(name) {
            Ok(obj) => Some(Resolved::Existing(obj)),
            Err(SceneError::Ambiguous { query, candidates }) => {
                self.push(idx, Severity::Error, DiagnosticKind::Ambiguous { query, candidates });
                None
            }
            Err(_) => {
                self.push(idx, Severity::Error, DiagnosticKind::NotFound { query: name.clone() });
                None
            }
        }
    }

    fn range(&mut self, idx: usize, what: &str, value: f64, (min, max): (f64, f64)) {
        if !(min..=max).contains(&value) {
            self.push(
                idx,
                Severity::Error,
                DiagnosticKind::OutOfRange {
                    what: what.into(),
                    value,
                    min,
                    max,
                },
            );
        }
    }

    fn facet(&mut self, idx: usize, obj: &SceneObject, facet: &str, present: bool) {
        if !present {
            self.push(
                idx,
                Severity::Error,
                DiagnosticKind::MissingFacet {
                    object: obj.name.clone(),
                    facet: facet.into(),
                },
            );
        }
    }

    fn statement(&mut self, idx: usize, stmt: &Statement) {
        let limits = self.limits;
        let coord = (-limits.max_coordinate, limits.max_coordinate);
        let target = stmt.target.as_ref().and_then(|t| self.resolve(idx, t));
        if let Some(Resolved::Existing(obj)) = &target {
            self.resolved.insert(idx, obj.id.clone());
        }
        let object = match &target {
            Some(Resolved::Existing(o)) => Some(*o),
            _ => None,
        };

        match stmt.command {
            Command::SetColor => {
                if let Some(obj) = object {
                    if obj.has_tag(TEXTURED_TAG) && !self.simplified.contains(&obj.id) {
                        self.push(
                            idx,
                            Severity::Error,
                            DiagnosticKind::TexturedColor {
                                object: obj.name.clone(),
                            },
                        );
                    }
                    if let Some(new) = stmt.color(0) {
                        self.contrast(idx, obj, new);
                    }
                }
            }
            Command::SimplifyMaterial => {
                if let Some(obj) = object {
                    self.simplified.insert(obj.id.clone());
                }
            }
            Command::Highlight | Command::Face | Command::MovePlayer => {}
            Command::SetScale => {
                if let Some(v) = stmt.vector(0) {
                    for c in [v.x, v.y, v.z] {
                        self.range(idx, "scale", c, limits.scale_factor);
                    }
                }
            }
            Command::ScaleBy => {
                if let Some(f) = stmt.number(0) {
                    self.range(idx, "scale factor", f, limits.scale_factor);
                }
            }
            Command::SetTextSize => {
                if let Some(obj) = object {
                    self.facet(idx, obj, "text", obj.text.is_some());
                }
                if let Some(size) = stmt.number(0)
                    && !(size > 0.0 && size <= limits.max_text_size)
                {
                    self.push(
                        idx,
                        Severity::Error,
                        DiagnosticKind::OutOfRange {
                            what: "text size".into(),
                            value: size,
                            min: 0.0,
                            max: limits.max_text_size,
                        },
                    );
                }
            }
            Command::MoveTo | Command::MoveBy => {
                if let Some(v) = stmt.vector(0) {
                    for c in [v.x, v.y, v.z] {
                        self.range(idx, "coordinate", c, coord);
                    }
                }
            }
            Command::MoveNear => {
                if let Some(Arg::Ref(anchor)) = stmt.args.first() {
                    let anchor = self.resolve(idx, anchor);
                    if let (Some(obj), Some(Resolved::Existing(a))) = (object, &anchor)
                        && obj.id == a.id
                    {
                        self.push(
                            idx,
                            Severity::Error,
                            DiagnosticKind::SelfReference {
                                object: obj.name.clone(),
                            },
                        );
                    }
                }
            }
            Command::SetLightIntensity => {
                if let Some(obj) = object {
                    self.facet(idx, obj, "light", obj.light.is_some());
                }
                if let Some(i) = stmt.number(0) {
                    self.range(idx, "light intensity", i, (0.0, f64::MAX));
                }
            }
            Command::CreateLight => {
                if let Some(v) = stmt.vector(0) {
                    for c in [v.x, v.y, v.z] {
                        self.range(idx, "coordinate", c, coord);
                    }
                }
                if let Some(i) = stmt.number(1) {
                    self.range(idx, "light intensity", i, (0.0, f64::MAX));
                }
            }
            Command::CreatePrimitive => {
                if let Some(Arg::Name(name)) = stmt.args.get(1) {
                    let taken = self.scene.by_name(name.trim()).is_some()
                        || self
                            .pending_names
                            .iter()
                            .any(|n| n.eq_ignore_ascii_case(name.trim()));
                    if name.trim().is_empty() || taken {
                        self.push(
                            idx,
                            Severity::Error,
                            DiagnosticKind::NameTaken { name: name.clone() },
                        );
                    } else {
                        self.pending_names.push(name.trim().to_string());
                    }
                }
                if let Some(v) = stmt.vector(0) {
                    for c in [v.x, v.y, v.z] {
                        self.range(idx, "coordinate", c, coord);
                    }
                }
            }
            Command::SetVolume | Command::SetPitch | Command::SetRange | Command::Mute | Command::Unmute => {
                if let Some(obj) = object {
                    self.facet(idx, obj, "audio source", obj.audio.is_some());
                }
                if let Some(n) = stmt.number(0) {
                    match stmt.command {
                        Command::SetVolume => self.range(idx, "volume", n, limits.volume),
                        Command::SetPitch => self.range(idx, "pitch", n, limits.pitch),
                        Command::SetRange if n <= 0.0 || n > limits.max_coordinate => {
                            self.push(
                                idx,
                                Severity::Error,
                                DiagnosticKind::OutOfRange {
                                    what: "max distance".into(),
                                    value: n,
                                    min: 0.0,
                                    max: limits.max_coordinate,
                                },
                            )
                        }
                        _ => {}
                    }
                }
            }
            Command::SetAmbient => {
                if let Some(n) = stmt.number(0) {
                    self.range(idx, "ambient light", n, (0.0, f64::MAX));
                }
            }
        }
    }

    fn contrast(&mut self, idx: usize, obj: &SceneObject, new: crate::scene::ColorRgba) {
        let blend = self
            .scene
            .objects()
            .iter()
            .filter(|o| o.id != obj.id && !o.is_transient())
            .filter_map(|o| o.color.map(|c| (o, color_similarity(c, new))))
            .filter(|(_, s)| *s >= self.limits.blend_similarity)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((other, similarity)) = blend {
            self.push(
                idx,
                Severity::Warning,
                DiagnosticKind::LowContrast {
                    object: obj.name.clone(),
                    other: other.name.clone(),
                    similarity,
                },
            );
        }
    }
}

/// Resolves every reference, checks numeric ranges and facet presence, and
/// applies the guard rails. Never fails; problems become diagnostics.
pub fn validate_with(program: &SmlProgram, scene: &Scene, limits: &Limits) -> ValidationReport {
    let mut checker = Checker {
        scene,
        limits,
        diagnostics: Vec::new(),
        resolved: BTreeMap::new(),
        pending_names: Vec::new(),
        simplified: HashSet::new(),
    };
    for (idx, stmt) in program.statements.iter().enumerate() {
        checker.statement(idx, stmt);
    }
    let report = ValidationReport {
        verdict: Verdict::Ok,
        diagnostics: checker.diagnostics,
        resolved_targets: checker.resolved,
    };
    let verdict = if report.out_of_scope_task().is_some() {
        Verdict::OutOfScope
    } else if report.errors().next().is_some() {
        Verdict::Rejected
    } else {
        Verdict::Ok
    };
    ValidationReport { verdict, ..report }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{AudioFacet, ColorRgba, Player, TextFacet, Vec3};
    use crate::sml::parse_str;

    fn scene() -> Scene {
        let mut s = Scene::new("test", Player::default(), 0.3);
        let mut speaker = SceneObject::new("spk1", "Speaker 1");
        speaker.audio = Some(AudioFacet {
            clip_id: "dialogue".into(),
            volume: 0.5,
            pitch: 1.0,
            max_distance: 10.0,
            muted: false,
            looping: true,
        });
        s.insert(speaker).unwrap();
        let mut torch = SceneObject::new("torch", "Torch");
        torch.tags = vec!["textured".into()];
        torch.color = Some(ColorRgba::rgb(0x8B, 0x45, 0x13));
        s.insert(torch).unwrap();
        let mut sign = SceneObject::new("sign", "Park Sign");
        sign.text = Some(TextFacet { content: "Welcome".into(), font_size: 12.0 });
        s.insert(sign).unwrap();
        s.insert(SceneObject::new("wc", "White Cat")).unwrap();
        s.insert(SceneObject::new("bc", "Black Cat")).unwrap();
        let mut bench = SceneObject::new("bench", "Bench");
        bench.color = Some(ColorRgba::rgb(0, 0x80, 0));
        s.insert(bench).unwrap();
        let mut grass = SceneObject::new("grass", "Grass");
        grass.color = Some(ColorRgba::rgb(0x10, 0x80, 0x10));
        s.insert(grass).unwrap();
        s
    }

    fn check(src: &str) -> ValidationReport {
        validate(&parse_str(src).unwrap(), &scene())
    }

    #[test]
    fn in_range_volume_is_ok() {
        let r = check(r#"set-volume "speaker 1" 0.8"#);
        assert_eq!(r.verdict, Verdict::Ok);
        assert_eq!(r.resolved_targets[&0], ObjectId::new("spk1"));
    }

    #[test]
    fn out_of_range_volume_is_rejected() {
        let r = check(r#"set-volume "speaker 1" 1.5"#);
        assert_eq!(r.verdict, Verdict::Rejected);
        assert!(matches!(r.diagnostics[0].kind, DiagnosticKind::OutOfRange { .. }));
        assert!(r.diagnostics[0].reason.contains("volume"));
    }

    #[test]
    fn textured_color_change_needs_simplify() {
        let r = check(r#"set-color "torch" #00FF00"#);
        assert_ne!(r.verdict, Verdict::Ok);
        assert_eq!(r.verdict, Verdict::OutOfScope);
        assert!(matches!(r.diagnostics[0].kind, DiagnosticKind::TexturedColor { .. }));
        assert!(r.diagnostics[0].reason.contains("simplify"));
        assert_eq!(r.out_of_scope_task(), Some(OutOfScopeTask::TexturedColorChange));

        let r = check("simplify-material \"torch\"\nset-color \"torch\" #00FF00");
        assert_eq!(r.verdict, Verdict::Ok);

        // simplifying a different object does not unlock the torch
        let r = check("simplify-material \"bench\"\nset-color \"torch\" #00FF00");
        assert_eq!(r.verdict, Verdict::OutOfScope);
        // order matters
        let r = check("set-color \"torch\" #00FF00\nsimplify-material \"torch\"");
        assert_eq!(r.verdict, Verdict::OutOfScope);
    }

    #[test]
    fn unresolved_targets() {
        let r = check(r#"mute "dragon""#);
        assert_eq!(r.verdict, Verdict::Rejected);
        assert!(matches!(r.diagnostics[0].kind, DiagnosticKind::NotFound { .. }));
        let r = check(r#"highlight "cat""#);
        match &r.diagnostics[0].kind {
            DiagnosticKind::Ambiguous { candidates, .. } => {
                assert_eq!(candidates, &["White Cat", "Black Cat"])
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn facets_and_ranges() {
        for src in [
            r#"mute "bench""#,
            r#"set-text-size "bench" 20"#,
            r#"set-text-size "park sign" 0"#,
            r#"set-text-size "park sign" 600"#,
            r#"set-pitch "speaker 1" 0.05"#,
            r#"set-pitch "speaker 1" 3.5"#,
            r#"scale-by "bench" 0"#,
            r#"scale-by "bench" 101"#,
            r#"set-light-intensity "torch" 2"#,
            r#"set-range "speaker 1" 0"#,
            r#"set-ambient -1"#,
            r#"create-light (0, 1, 0) -2"#,
            r#"move-by player (0, 0, 20000)"#,
            r#"move-near "bench" "bench""#,
            r#"create-primitive cube "Bench" (0, 0, 0)"#,
        ] {
            assert_eq!(check(src).verdict, Verdict::Rejected, "{src}");
        }
        for src in [
            r#"set-pitch "speaker 1" 0.4"#,
            r#"set-text-size "park sign" 48"#,
            r#"scale-by "bench" 2"#,
            r#"move-near "speaker 1" player"#,
            r#"create-light (0, 1, 0) 2"#,
            "create-primitive cube \"Door\" (0, 0, 2)\nset-color \"door\" #8B4513",
        ] {
            assert_eq!(check(src).verdict, Verdict::Ok, "{src}");
        }
    }

    #[test]
    fn low_contrast_is_only_a_warning() {
        let r = check(r#"set-color "bench" #108010"#);
        assert_eq!(r.verdict, Verdict::Ok);
        assert!(matches!(
            r.diagnostics[0],
            Diagnostic { severity: Severity::Warning, kind: DiagnosticKind::LowContrast { .. }, .. }
        ));
    }

    #[test]
    fn empty_program_is_ok() {
        let r = validate(&SmlProgram::default(), &scene());
        assert_eq!(r.verdict, Verdict::Ok);
        assert!(r.diagnostics.is_empty());
        let _ = Vec3::ZERO;
    }
}
