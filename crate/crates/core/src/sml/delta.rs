use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scene::{ColorRgba, ObjectId, Scene, SceneObject, Vec3};

/// What a change applies to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Subject {
    Object { id: ObjectId, name: String },
    Player,
    Scene,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Color,
    Tags,
    Scale,
    Position,
    Yaw,
    FontSize,
    LightIntensity,
    Volume,
    Pitch,
    MaxDistance,
    Muted,
    AmbientLight,
}

impl Field {
    pub fn path(&self) -> &'static str {
        match self {
            Field::Color => "color",
            Field::Tags => "tags",
            Field::Scale => "scale",
            Field::Position => "position",
            Field::Yaw => "yaw",
            Field::FontSize => "text.font_size",
            Field::LightIntensity => "light.intensity",
            Field::Volume => "audio.volume",
            Field::Pitch => "audio.pitch",
            Field::MaxDistance => "audio.max_distance",
            Field::Muted => "audio.muted",
            Field::AmbientLight => "ambient_light_intensity",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.path())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum FieldValue {
    Color(Option<ColorRgba>),
    Tags(Vec<String>),
    Vector(Vec3),
    Number(f64),
    Bool(bool),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Change {
    pub subject: Subject,
    pub field: Field,
    pub old: FieldValue,
    pub new: FieldValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovedObject {
    pub index: usize,
    pub object: SceneObject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaKind {
    /// Result of interpreting a modification program.
    Program,
    /// Player moved or turned by keyboard navigation.
    Navigation,
    /// Transient markers expired on a clock tick.
    Expiry,
    /// Inverse of a reverted program delta, for observers.
    Undo,
}

/// Field-level record of one scene mutation. Applying the old values in
/// reverse order undoes it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDelta {
    pub kind: DeltaKind,
    pub base_version: u64,
    pub version: u64,
    /// Undo stamp; zero for deltas that cannot be reverted.
    #[serde(default)]
    pub stamp: u64,
    pub changes: Vec<Change>,
    pub created: Vec<SceneObject>,
    pub removed: Vec<RemovedObject>,
    /// Scene clock after the delta, when the delta advanced it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ApplyError {
    #[error("object '{0}' does not exist")]
    MissingObject(ObjectId),
    #[error("object '{object}' has no {facet}")]
    MissingFacet { object: String, facet: &'static str },
    #[error("{field} cannot hold that value")]
    TypeMismatch { field: Field },
}

impl SceneDelta {
    pub fn empty(kind: DeltaKind, version: u64) -> Self {
        Self {
            kind,
            base_version: version,
            version,
            stamp: 0,
            changes: Vec::new(),
            created: Vec::new(),
            removed: Vec::new(),
            clock: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.changes.is_empty() && self.created.is_empty() && self.removed.is_empty()
    }

    /// Replays this delta onto a mirror of the scene it was produced on.
    /// Observers use this to follow the driver's scene.
    pub fn apply_forward(&self, scene: &mut Scene) -> Result<(), ApplyError> {
        let mut work = scene.clone();
        for r in &self.removed {
            work.remove(&r.object.id);
        }
        // created objects are recorded in their final state
        for obj in &self.created {
            if work.get(&obj.id).is_none() {
                work.insert_at(usize::MAX, obj.clone());
            }
        }
        for c in &self.changes {
            write_field(&mut work, &c.subject, c.field, &c.new)?;
        }
        if matches!(self.kind, DeltaKind::Program | DeltaKind::Undo) {
            work.set_version(self.version);
        }
        if let Some(clock) = self.clock {
            work.set_clock(clock);
        }
        *scene = work;
        Ok(())
    }
}

pub(crate) fn read_field(scene: &Scene, subject: &Subject, field: Field) -> Result<FieldValue, ApplyError> {
    match subject {
        Subject::Scene => match field {
            Field::AmbientLight => Ok(FieldValue::Number(scene.ambient_light_intensity)),
            _ => Err(ApplyError::TypeMismatch { field }),
        },
        Subject::Player => match field {
            Field::Position => Ok(FieldValue::Vector(scene.player.position)),
            Field::Yaw => Ok(FieldValue::Number(scene.player.yaw)),
            _ => Err(ApplyError::TypeMismatch { field }),
        },
        Subject::Object { id, .. } => {
            let o = scene.get(id).ok_or_else(|| ApplyError::MissingObject(id.clone()))?;
            let missing = |facet| ApplyError::MissingFacet {
                object: o.name.clone(),
                facet,
            };
            Ok(match field {
                Field::Color => FieldValue::Color(o.color),
                Field::Tags => FieldValue::Tags(o.tags.clone()),
                Field::Scale => FieldValue::Vector(o.scale),
                Field::Position => FieldValue::Vector(o.position),
                Field::Yaw => FieldValue::Number(o.yaw),
                Field::FontSize => FieldValue::Number(o.text.as_ref().ok_or_else(|| missing("text"))?.font_size),
                Field::LightIntensity => {
                    FieldValue::Number(o.light.as_ref().ok_or_else(|| missing("light"))?.intensity)
                }
                Field::Volume => FieldValue::Number(o.audio.as_ref().ok_or_else(|| missing("audio source"))?.volume),
                Field::Pitch => FieldValue::Number(o.audio.as_ref().ok_or_else(|| missing("audio source"))?.pitch),
                Field::MaxDistance => {
                    FieldValue::Number(o.audio.as_ref().ok_or_else(|| missing("audio source"))?.max_distance)
                }
                Field::Muted => FieldValue::Bool(o.audio.as_ref().ok_or_else(|| missing("audio source"))?.muted),
                Field::AmbientLight => return Err(ApplyError::TypeMismatch { field }),
            })
        }
    }
}

pub(crate) fn write_field(
    scene: &mut Scene,
    subject: &Subject,
    field: Field,
    value: &FieldValue,
) -> Result<(), ApplyError> {
    let mismatch = ApplyError::TypeMismatch { field };
    match subject {
        Subject::Scene => match (field, value) {
            (Field::AmbientLight, FieldValue::Number(n)) => scene.ambient_light_intensity = *n,
            _ => return Err(mismatch),
        },
        Subject::Player => match (field, value) {
            (Field::Position, FieldValue::Vector(v)) => scene.player.position = *v,
            (Field::Yaw, FieldValue::Number(n)) => scene.player.yaw = *n,
            _ => return Err(mismatch),
        },
        Subject::Object { id, .. } => {
            let o = scene
                .get_mut(id)
                .ok_or_else(|| ApplyError::MissingObject(id.clone()))?;
            let name = o.name.clone();
            let missing = |facet| ApplyError::MissingFacet {
                object: name.clone(),
                facet,
            };
            match (field, value) {
                (Field::Color, FieldValue::Color(c)) => o.color = *c,
                (Field::Tags, FieldValue::Tags(t)) => o.tags = t.clone(),
                (Field::Scale, FieldValue::Vector(v)) => o.scale = *v,
                (Field::Position, FieldValue::Vector(v)) => o.position = *v,
                (Field::Yaw, FieldValue::Number(n)) => o.yaw = *n,
                (Field::FontSize, FieldValue::Number(n)) => {
                    o.text.as_mut().ok_or_else(|| missing("text"))?.font_size = *n
                }
                (Field::LightIntensity, FieldValue::Number(n)) => {
                    o.light.as_mut().ok_or_else(|| missing("light"))?.intensity = *n
                }
                (Field::Volume, FieldValue::Number(n)) => {
                    o.audio.as_mut().ok_or_else(|| missing("audio source"))?.volume = *n
                }
                (Field::Pitch, FieldValue::Number(n)) => {
                    o.audio.as_mut().ok_or_else(|| missing("audio source"))?.pitch = *n
                }
                (Field::MaxDistance, FieldValue::Number(n)) => {
                    o.audio.as_mut().ok_or_else(|| missing("audio source"))?.max_distance = *n
                }
                (Field::Muted, FieldValue::Bool(b)) => {
                    o.audio.as_mut().ok_or_else(|| missing("audio source"))?.muted = *b
                }
                _ => return Err(mismatch),
            }
        }
    }
    Ok(())
}
