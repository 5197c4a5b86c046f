//! Mutable scene state and the spatial math the rest of the runtime consults.
//!
//! Coordinates are meters. The ground plane is x/z with y up; a yaw of 0
//! faces +z and increases clockwise when viewed from above, so a yaw of 90
//! faces +x.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Horizontal distance under which a target counts as being at the player.
pub const AT_PLAYER_RADIUS: f64 = 0.5;

/// How long highlight markers stay in the scene, in simulated seconds.
pub const HIGHLIGHT_SECONDS: f64 = 5.0;

/// Tag marking objects whose material is textured; color changes on these
/// require simplifying the material first.
pub const TEXTURED_TAG: &str = "textured";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("no object named '{query}' exists")]
    NotFound { query: String },
    #[error("'{query}' matches several objects: {}", candidates.join(", "))]
    Ambiguous {
        query: String,
        candidates: Vec<String>,
    },
    #[error("duplicate object id '{0}'")]
    DuplicateId(String),
    #[error("duplicate object name '{0}'")]
    DuplicateName(String),
    #[error("object '{object}' has unknown parent '{parent}'")]
    UnknownParent { object: String, parent: String },
    #[error("parent links of '{0}' form a cycle")]
    ParentCycle(String),
    #[error("object '{object}': {message}")]
    InvalidValue { object: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const ONE: Vec3 = Vec3::new(1.0, 1.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn splat(v: f64) -> Self {
        Self::new(v, v, v)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn length(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn component_mul(&self, other: Vec3) -> Vec3 {
        Vec3::new(self.x * other.x, self.y * other.y, self.z * other.z)
    }

    pub fn max_component(&self) -> f64 {
        self.x.max(self.y).max(self.z)
    }

    pub fn min_component(&self) -> f64 {
        self.x.min(self.y).min(self.z)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Vec3::new(v[0], v[1], v[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, rhs: f64) -> Vec3 {
        Vec3::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// 8-bit RGBA color. Serialized as `#RRGGBB`, or `#RRGGBBAA` when not opaque.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ColorRgba {
    pub r: u8,
    pub g: u8,
    pub b: u8,
    pub a: u8,
}

impl ColorRgba {
    pub const fn rgb(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b, a: 255 }
    }

    pub const fn rgba(r: u8, g: u8, b: u8, a: u8) -> Self {
        Self { r, g, b, a }
    }

    pub fn to_hex(&self) -> String {
        if self.a == 255 {
            format!("#{:02X}{:02X}{:02X}", self.r, self.g, self.b)
        } else {
            format!("#{:02X}{:02X}{:02X}{:02X}", self.r, self.g, self.b, self.a)
        }
    }

    /// Parses `#RRGGBB` or `#RRGGBBAA` (either case).
    pub fn from_hex(s: &str) -> Option<Self> {
        let digits = s.strip_prefix('#')?;
        if !digits.chars().all(|c| c.is_ascii_hexdigit()) {
            return None;
        }
        let byte = |i: usize| u8::from_str_radix(&digits[i..i + 2], 16).ok();
        match digits.len() {
            6 => Some(Self::rgb(byte(0)?, byte(2)?, byte(4)?)),
            8 => Some(Self::rgba(byte(0)?, byte(2)?, byte(4)?, byte(6)?)),
            _ => None,
        }
    }
}

impl fmt::Display for ColorRgba {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for ColorRgba {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for ColorRgba {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        ColorRgba::from_hex(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid HEX color '{s}'")))
    }
}

pub const MIN_PITCH: f64 = 0.1;
pub const MAX_PITCH: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioFacet {
    pub clip_id: String,
    pub volume: f64,
    pub pitch: f64,
    pub max_distance: f64,
    #[serde(default)]
    pub muted: bool,
    #[serde(default = "default_true")]
    pub looping: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightKind {
    Point,
    Directional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightFacet {
    pub kind: LightKind,
    pub intensity: f64,
    /// Reach of a point light in meters; ignored for directional lights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextFacet {
    pub content: String,
    pub font_size: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub String);

impl ObjectId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: ObjectId,
    pub name: String,
    pub description: String,
    pub physical: bool,
    pub position: Vec3,
    pub yaw: f64,
    pub scale: Vec3,
    /// Unscaled size of the object's bounds; a 1 m cube unless declared.
    pub base_extent: Vec3,
    pub parent: Option<ObjectId>,
    pub color: Option<ColorRgba>,
    pub text: Option<TextFacet>,
    pub audio: Option<AudioFacet>,
    pub light: Option<LightFacet>,
    pub tags: Vec<String>,
    pub transient_until: Option<f64>,
}

impl SceneObject {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            id: ObjectId::new(id),
            name: name.into(),
            description: String::new(),
            physical: true,
            position: Vec3::ZERO,
            yaw: 0.0,
            scale: Vec3::ONE,
            base_extent: Vec3::ONE,
            parent: None,
            color: None,
            text: None,
            audio: None,
            light: None,
            tags: Vec::new(),
            transient_until: None,
        }
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t.eq_ignore_ascii_case(tag))
    }

    pub fn is_transient(&self) -> bool {
        self.transient_until.is_some()
    }

    fn check(&self) -> Result<(), SceneError> {
        let invalid = |message: String| SceneError::InvalidValue {
            object: self.id.0.clone(),
            message,
        };
        if !self.position.is_finite() || !self.yaw.is_finite() {
            return Err(invalid("transform must be finite".into()));
        }
        if !self.scale.is_finite() || self.scale.min_component() <= 0.0 {
            return Err(invalid(format!("scale {} must be positive", self.scale)));
        }
        if !self.base_extent.is_finite() || self.base_extent.min_component() <= 0.0 {
            return Err(invalid(format!(
                "base extent {} must be positive",
                self.base_extent
            )));
        }
        if let Some(text) = &self.text
            && !(text.font_size > 0.0 && text.font_size.is_finite())
        {
            return Err(invalid(format!("font size {} must be > 0", text.font_size)));
        }
        if let Some(audio) = &self.audio {
            if !(0.0..=1.0).contains(&audio.volume) {
                return Err(invalid(format!("volume {} outside [0, 1]", audio.volume)));
            }
            if !(MIN_PITCH..=MAX_PITCH).contains(&audio.pitch) {
                return Err(invalid(format!(
                    "pitch {} outside [{MIN_PITCH}, {MAX_PITCH}]",
                    audio.pitch
                )));
            }
            if !(audio.max_distance > 0.0 && audio.max_distance.is_finite()) {
                return Err(invalid(format!(
                    "max distance {} must be > 0",
                    audio.max_distance
                )));
            }
        }
        if let Some(light) = &self.light {
            if !(light.intensity >= 0.0 && light.intensity.is_finite()) {
                return Err(invalid(format!(
                    "light intensity {} must be >= 0",
                    light.intensity
                )));
            }
            if light.kind == LightKind::Point {
                match light.range {
                    Some(r) if r > 0.0 && r.is_finite() => {}
                    _ => return Err(invalid("point light needs a finite range > 0".into())),
                }
            }
        }
        Ok(())
    }
}

pub fn normalize_yaw(yaw: f64) -> f64 {
    let y = yaw.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if y >= 360.0 { 0.0 } else { y }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Player {
    pub position: Vec3,
    pub yaw: f64,
}

impl Player {
    pub fn new(position: Vec3, yaw: f64) -> Self {
        Self {
            position,
            yaw: normalize_yaw(yaw),
        }
    }

    /// Unit vector the player faces on the ground plane.
    pub fn forward(&self) -> Vec3 {
        let r = self.yaw.to_radians();
        Vec3::new(r.sin(), 0.0, r.cos())
    }

    /// Unit vector to the player's right on the ground plane.
    pub fn right(&self) -> Vec3 {
        let r = self.yaw.to_radians();
        Vec3::new(r.cos(), 0.0, -r.sin())
    }
}

impl Default for Player {
    fn default() -> Self {
        Self::new(Vec3::ZERO, 0.0)
    }
}

/// The live scene. Cloning yields an immutable snapshot that can move across
/// threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scene {
    pub name: String,
    objects: Vec<SceneObject>,
    pub player: Player,
    pub ambient_light_intensity: f64,
    clock: f64,
    version: u64,
    // undo bookkeeping, not part of the observable state
    #[serde(skip)]
    applied: Vec<u64>,
    #[serde(skip)]
    next_stamp: u64,
}

impl PartialEq for Scene {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.objects == other.objects
            && self.player == other.player
            && self.ambient_light_intensity == other.ambient_light_intensity
            && self.clock == other.clock
            && self.version == other.version
    }
}

impl Scene {
    pub fn new(name: impl Into<String>, player: Player, ambient_light_intensity: f64) -> Self {
        Self {
            name: name.into(),
            objects: Vec::new(),
            player,
            ambient_light_intensity,
            clock: 0.0,
            version: 0,
            applied: Vec::new(),
            next_stamp: 1,
        }
    }

    pub fn empty() -> Self {
        Self::new("empty", Player::default(), 0.0)
    }

    /// Builds a scene from a full object list, checking every invariant.
    pub fn with_objects(
        name: impl Into<String>,
        player: Player,
        ambient_light_intensity: f64,
        objects: Vec<SceneObject>,
    ) -> Result<Self, SceneError> {
        let mut scene = Self::new(name, player, ambient_light_intensity);
        scene.objects = objects;
        scene.check()?;
        Ok(scene)
    }

    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    /// Number of program deltas currently applied on top of the loaded scene.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn get(&self, id: &ObjectId) -> Option<&SceneObject> {
        self.objects.iter().find(|o| &o.id == id)
    }

    pub fn get_mut(&mut self, id: &ObjectId) -> Option<&mut SceneObject> {
        self.objects.iter_mut().find(|o| &o.id == id)
    }

    pub fn by_name(&self, name: &str) -> Option<&SceneObject> {
        self.objects
            .iter()
            .find(|o| o.name.eq_ignore_ascii_case(name))
    }

    pub fn insert(&mut self, object: SceneObject) -> Result<(), SceneError> {
        if self.get(&object.id).is_some() {
            return Err(SceneError::DuplicateId(object.id.0));
        }
        if self.by_name(&object.name).is_some() {
            return Err(SceneError::DuplicateName(object.name));
        }
        object.check()?;
        if let Some(parent) = &object.parent
            && self.get(parent).is_none()
        {
            return Err(SceneError::UnknownParent {
                object: object.id.0,
                parent: parent.0.clone(),
            });
        }
        self.objects.push(object);
        Ok(())
    }

    pub fn remove(&mut self, id: &ObjectId) -> Option<SceneObject> {
        let idx = self.objects.iter().position(|o| &o.id == id)?;
        Some(self.objects.remove(idx))
    }

    pub(crate) fn insert_at(&mut self, index: usize, object: SceneObject) {
        let index = index.min(self.objects.len());
        self.objects.insert(index, object);
    }

    pub(crate) fn set_clock(&mut self, clock: f64) {
        self.clock = clock;
    }

    pub(crate) fn set_version(&mut self, version: u64) {
        self.version = version;
    }

    /// Records a newly applied delta and returns its stamp.
    pub(crate) fn push_applied(&mut self) -> u64 {
        let stamp = self.next_stamp.max(1);
        self.next_stamp = stamp + 1;
        self.applied.push(stamp);
        stamp
    }

    pub(crate) fn top_applied(&self) -> Option<u64> {
        self.applied.last().copied()
    }

    pub(crate) fn pop_applied(&mut self) {
        self.applied.pop();
    }

    /// Checks id/name uniqueness, facet ranges and parent links.
    pub fn check(&self) -> Result<(), SceneError> {
        let mut ids = std::collections::HashSet::new();
        let mut names = std::collections::HashSet::new();
        for o in &self.objects {
            if !ids.insert(o.id.0.as_str()) {
                return Err(SceneError::DuplicateId(o.id.0.clone()));
            }
            if !names.insert(o.name.to_lowercase()) {
                return Err(SceneError::DuplicateName(o.name.clone()));
            }
            o.check()?;
        }
        for o in &self.objects {
            if let Some(parent) = &o.parent
                && !ids.contains(parent.0.as_str())
            {
                return Err(SceneError::UnknownParent {
                    object: o.id.0.clone(),
                    parent: parent.0.clone(),
                });
            }
        }
        for o in &self.objects {
            let mut seen = std::collections::HashSet::new();
            let mut cur = o;
            while let Some(parent) = &cur.parent {
                if !seen.insert(parent.0.as_str()) || parent == &o.id {
                    return Err(SceneError::ParentCycle(o.id.0.clone()));
                }
                match self.get(parent) {
                    Some(p) => cur = p,
                    None => break,
                }
            }
        }
        Ok(())
    }

    /// Advances the simulated clock and drops expired transient objects,
    /// returning what was removed.
    pub fn tick(&mut self, dt: f64) -> Vec<SceneObject> {
        self.expire(dt).into_iter().map(|(_, o)| o).collect()
    }

    /// Like `tick`, but pairs each removed object with its index before
    /// removal.
    pub(crate) fn expire(&mut self, dt: f64) -> Vec<(usize, SceneObject)> {
        if dt > 0.0 && dt.is_finite() {
            self.clock += dt;
        }
        let clock = self.clock;
        let mut expired = Vec::new();
        let mut kept = Vec::with_capacity(self.objects.len());
        for (i, o) in std::mem::take(&mut self.objects).into_iter().enumerate() {
            if o.transient_until.is_some_and(|t| t <= clock) {
                expired.push((i, o));
            } else {
                kept.push(o);
            }
        }
        self.objects = kept;
        expired
    }

    /// Finds an object by case-insensitive exact name, falling back to a
    /// unique case-insensitive substring match. Transient markers are never
    /// matched.
    pub fn resolve_object(&self, query: &str) -> Result<&SceneObject, SceneError> {
        let q = query.trim().to_lowercase();
        if q.is_empty() {
            return Err(SceneError::NotFound {
                query: query.to_string(),
            });
        }
        let candidates = || self.objects.iter().filter(|o| !o.is_transient());
        if let Some(exact) = candidates().find(|o| o.name.to_lowercase() == q) {
            return Ok(exact);
        }
        let partial: Vec<&SceneObject> = candidates()
            .filter(|o| o.name.to_lowercase().contains(&q))
            .collect();
        match partial.as_slice() {
            [] => Err(SceneError::NotFound {
                query: query.to_string(),
            }),
            [one] => Ok(one),
            many => Err(SceneError::Ambiguous {
                query: query.to_string(),
                candidates: many.iter().map(|o| o.name.clone()).collect(),
            }),
        }
    }

    /// Brightness at a point: ambient plus every directional light plus each
    /// in-range point light falling off as `intensity / (1 + d^2)`.
    pub fn light_density_at(&self, p: Vec3) -> f64 {
        let mut total = self.ambient_light_intensity;
        for light_obj in &self.objects {
            let Some(light) = &light_obj.light else {
                continue;
            };
            match light.kind {
                LightKind::Directional => total += light.intensity,
                LightKind::Point => {
                    let d = euclidean_distance(light_obj.position, p);
                    if d <= light.range.unwrap_or(0.0) {
                        total += light.intensity / (1.0 + d * d);
                    }
                }
            }
        }
        total
    }
}

pub fn euclidean_distance(a: Vec3, b: Vec3) -> f64 {
    (a - b).length()
}

/// Per-axis world size of an object: base extent scaled componentwise.
pub fn bounding_extent(obj: &SceneObject) -> Vec3 {
    obj.base_extent.component_mul(obj.scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    InFront,
    Right,
    Behind,
    Left,
    AtPlayer,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::InFront => "in_front",
            Direction::Right => "right",
            Direction::Behind => "behind",
            Direction::Left => "left",
            Direction::AtPlayer => "at_player",
        }
    }

    /// Spoken phrasing, e.g. "in front of you".
    pub fn phrase(&self) -> &'static str {
        match self {
            Direction::InFront => "in front of you",
            Direction::Right => "to your right",
            Direction::Behind => "behind you",
            Direction::Left => "to your left",
            Direction::AtPlayer => "right where you are",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Clockwise bearing of `target` in the player frame, in `[0, 360)` degrees,
/// ignoring height. 0 is straight ahead.
pub fn relative_bearing(player: &Player, target: Vec3) -> f64 {
    let d = target - player.position;
    let world = d.x.atan2(d.z).to_degrees();
    normalize_yaw(world - player.yaw)
}

pub fn horizontal_distance(a: Vec3, b: Vec3) -> f64 {
    (a.x - b.x).hypot(a.z - b.z)
}

/// Classifies a target into one of four 90 degree wedges around the player's
/// facing axis. Wedge bounds are half-open: `[-45, 45)` is in front,
/// `[45, 135)` right, `[135, 225)` behind, `[225, 315)` left.
pub fn egocentric_direction(player: &Player, target: Vec3) -> Direction {
    if horizontal_distance(player.position, target) < AT_PLAYER_RADIUS {
        return Direction::AtPlayer;
    }
    let theta = relative_bearing(player, target);
    if !(45.0..315.0).contains(&theta) {
        Direction::InFront
    } else if theta < 135.0 {
        Direction::Right
    } else if theta < 225.0 {
        Direction::Behind
    } else {
        Direction::Left
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proximity {
    Close,
    Moderate,
    Far,
}

impl Proximity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Proximity::Close => "close",
            Proximity::Moderate => "moderate",
            Proximity::Far => "far",
        }
    }
}

impl fmt::Display for Proximity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceThresholds {
    /// Distances below this are close.
    pub close: f64,
    /// Distances at or above this are far.
    pub far: f64,
}

impl Default for DistanceThresholds {
    fn default() -> Self {
        Self {
            close: 5.0,
            far: 15.0,
        }
    }
}

pub fn qualitative_distance(d: f64) -> Proximity {
    qualitative_distance_with(d, &DistanceThresholds::default())
}

pub fn qualitative_distance_with(d: f64, thresholds: &DistanceThresholds) -> Proximity {
    if d < thresholds.close {
        Proximity::Close
    } else if d < thresholds.far {
        Proximity::Moderate
    } else {
        Proximity::Far
    }
}
