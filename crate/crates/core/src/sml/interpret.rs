use thiserror::Error;

use super::delta::{Change, DeltaKind, Field, FieldValue, SceneDelta, Subject, read_field, write_field};
use super::{Arg, Command, Shape, SmlProgram, Statement, Target};
use crate::color::color_by_name;
use crate::scene::{
    ColorRgba, HIGHLIGHT_SECONDS, LightFacet, LightKind, MAX_PITCH, MIN_PITCH, ObjectId, Player,
    Scene, SceneObject, TEXTURED_TAG, Vec3, bounding_extent, normalize_yaw,
};

/// Horizontal half-width of the player's body, in meters.
pub const PLAYER_RADIUS: f64 = 0.3;

const DEFAULT_LIGHT_RANGE: f64 = 10.0;
const MIN_SCALE: f64 = 0.001;
const MAX_SCALE: f64 = 1000.0;
const MAX_COORDINATE: f64 = 100_000.0;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("statement {} ({command}) failed: {message}", statement + 1)]
pub struct InterpretError {
    pub statement: usize,
    pub command: Command,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RevertError {
    #[error("the scene changed since this delta was applied")]
    Stale,
    #[error("revert failed: {0}")]
    Apply(String),
}

#[derive(Debug, Clone, Default)]
pub struct InterpretOptions {
    /// Fails deliberately before running the statement at this index. Used by
    /// fault-injection tests of atomicity.
    pub fail_before: Option<usize>,
}

struct Run<'a> {
    work: Scene,
    delta: &'a mut SceneDelta,
}

impl Run<'_> {
    fn set(&mut self, subject: Subject, field: Field, new: FieldValue) -> Result<(), String> {
        let old = read_field(&self.work, &subject, field).map_err(|e| e.to_string())?;
        write_field(&mut self.work, &subject, field, &new).map_err(|e| e.to_string())?;
        if old != new {
            self.delta.changes.push(Change {
                subject,
                field,
                old,
                new,
            });
        }
        Ok(())
    }

    fn object(&self, target: Option<&Target>) -> Result<(ObjectId, Subject), String> {
        match target {
            Some(Target::Object(name)) => {
                let o = self.work.resolve_object(name).map_err(|e| e.to_string())?;
                Ok((
                    o.id.clone(),
                    Subject::Object {
                        id: o.id.clone(),
                        name: o.name.clone(),
                    },
                ))
            }
            Some(Target::Player) => Err("expected an object, not the player".into()),
            None => Err("missing target".into()),
        }
    }

    fn get(&self, id: &ObjectId) -> &SceneObject {
        self.work.get(id).expect("resolved ids exist")
    }

    fn position_of(&self, target: &Target) -> Result<Vec3, String> {
        match target {
            Target::Player => Ok(self.work.player.position),
            t => {
                let (id, _) = self.object(Some(t))?;
                Ok(self.get(&id).position)
            }
        }
    }

    fn check_position(v: Vec3) -> Result<Vec3, String> {
        if v.is_finite() && [v.x, v.y, v.z].iter().all(|c| c.abs() <= MAX_COORDINATE) {
            Ok(v)
        } else {
            Err(format!("position {v} is outside the scene bounds"))
        }
    }

    fn check_scale(v: Vec3) -> Result<Vec3, String> {
        if v.is_finite() && v.min_component() >= MIN_SCALE && v.max_component() <= MAX_SCALE {
            Ok(v)
        } else {
            Err(format!("scale {v} is outside [{MIN_SCALE}, {MAX_SCALE}]"))
        }
    }

    fn unique_id(&self, prefix: &str) -> ObjectId {
        (1..)
            .map(|n| ObjectId::new(format!("{prefix}-{n}")))
            .find(|id| self.work.get(id).is_none())
            .expect("unbounded search")
    }

    fn unique_name(&self, base: &str) -> String {
        if self.work.by_name(base).is_none() {
            return base.to_string();
        }
        (2..)
            .map(|n| format!("{base} {n}"))
            .find(|n| self.work.by_name(n).is_none())
            .expect("unbounded search")
    }

    fn create(&mut self, object: SceneObject) -> Result<(), String> {
        self.work.insert(object.clone()).map_err(|e| e.to_string())?;
        self.delta.created.push(object);
        Ok(())
    }

    fn number(stmt: &Statement, idx: usize) -> Result<f64, String> {
        stmt.number(idx).ok_or_else(|| "missing number".into())
    }

    fn vector(stmt: &Statement, idx: usize) -> Result<Vec3, String> {
        stmt.vector(idx).ok_or_else(|| "missing vector".into())
    }

    fn audio_number(&mut self, stmt: &Statement, field: Field, range: (f64, f64)) -> Result<(), String> {
        let (_, subject) = self.object(stmt.target.as_ref())?;
        let n = Self::number(stmt, 0)?;
        if !(range.0..=range.1).contains(&n) {
            return Err(format!("{} {n} outside [{}, {}]", field, range.0, range.1));
        }
        self.set(subject, field, FieldValue::Number(n))
    }

    fn exec(&mut self, stmt: &Statement) -> Result<(), String> {
        match stmt.command {
            Command::SetColor => {
                let (id, subject) = self.object(stmt.target.as_ref())?;
                if self.get(&id).has_tag(TEXTURED_TAG) {
                    return Err("textured material must be simplified first".into());
                }
                let c = stmt.color(0).ok_or("missing color")?;
                self.set(subject, Field::Color, FieldValue::Color(Some(c)))
            }
            Command::SimplifyMaterial => {
                let (id, subject) = self.object(stmt.target.as_ref())?;
                let obj = self.get(&id);
                let tags: Vec<String> = obj
                    .tags
                    .iter()
                    .filter(|t| !t.eq_ignore_ascii_case(TEXTURED_TAG))
                    .cloned()
                    .collect();
                let color = obj.color.or_else(|| guess_color(&obj.name));
                self.set(subject.clone(), Field::Tags, FieldValue::Tags(tags))?;
                self.set(subject, Field::Color, FieldValue::Color(color))
            }
            Command::Highlight => {
                let (id, _) = self.object(stmt.target.as_ref())?;
                let target = self.get(&id);
                let size = bounding_extent(target).max_component() * 1.2;
                let mut marker = SceneObject::new(
                    self.unique_id("highlight").0,
                    self.unique_name(&format!("Highlight: {}", target.name)),
                );
                marker.description = format!("Transparent indicator sphere around {}", target.name);
                marker.physical = false;
                marker.position = target.position;
                marker.base_extent = Vec3::splat(size.max(0.1));
                marker.color = Some(ColorRgba::rgba(0xFF, 0xFF, 0x00, 0x60));
                marker.tags = vec!["indicator".into()];
                marker.transient_until = Some(self.work.clock() + HIGHLIGHT_SECONDS);
                self.create(marker)
            }
            Command::SetScale => {
                let (_, subject) = self.object(stmt.target.as_ref())?;
                let v = Self::check_scale(Self::vector(stmt, 0)?)?;
                self.set(subject, Field::Scale, FieldValue::Vector(v))
            }
            Command::ScaleBy => {
                let (id, subject) = self.object(stmt.target.as_ref())?;
                let f = Self::number(stmt, 0)?;
                let v = Self::check_scale(self.get(&id).scale * f)?;
                self.set(subject, Field::Scale, FieldValue::Vector(v))
            }
            Command::SetTextSize => {
                let (_, subject) = self.object(stmt.target.as_ref())?;
                let n = Self::number(stmt, 0)?;
                if !(n > 0.0 && n <= 512.0) {
                    return Err(format!("text size {n} outside (0, 512]"));
                }
                self.set(subject, Field::FontSize, FieldValue::Number(n))
            }
            Command::MoveTo | Command::MoveBy => {
                let v = Self::vector(stmt, 0)?;
                let (subject, current) = match stmt.target.as_ref() {
                    Some(Target::Player) => (Subject::Player, self.work.player.position),
                    t => {
                        let (id, subject) = self.object(t)?;
                        (subject, self.get(&id).position)
                    }
                };
                let dest = if stmt.command == Command::MoveTo { v } else { current + v };
                self.set(subject, Field::Position, FieldValue::Vector(Self::check_position(dest)?))
            }
            Command::MoveNear => {
                let (id, subject) = self.object(stmt.target.as_ref())?;
                let Some(Arg::Ref(anchor)) = stmt.args.first() else {
                    return Err("missing anchor".into());
                };
                let anchor_pos = self.position_of(anchor)?;
                let facing = self.work.player.forward();
                let obj = self.get(&id);
                let (dir, anchor_half) = match anchor {
                    // in front of the player
                    Target::Player => (facing, PLAYER_RADIUS),
                    // on the player's side of the anchor
                    t => {
                        let (aid, _) = self.object(Some(t))?;
                        if aid == id {
                            return Err("cannot move an object near itself".into());
                        }
                        let a = self.get(&aid);
                        (facing * -1.0, half_extent_along(a, facing))
                    }
                };
                let offset = half_extent_along(obj, facing) + anchor_half;
                let dest = Vec3::new(anchor_pos.x, anchor_pos.y, anchor_pos.z) + dir * offset;
                self.set(subject, Field::Position, FieldValue::Vector(Self::check_position(dest)?))
            }
            Command::MovePlayer => {
                let (id, _) = self.object(stmt.target.as_ref())?;
                let obj = self.get(&id);
                let player = &self.work.player;
                let mut toward = obj.position - player.position;
                toward.y = 0.0;
                let len = toward.length();
                let dir = if len > 1e-9 { toward * (1.0 / len) } else { player.forward() };
                let offset = half_extent_along(obj, dir) + PLAYER_RADIUS;
                let dest = Vec3::new(
                    obj.position.x - dir.x * offset,
                    player.position.y,
                    obj.position.z - dir.z * offset,
                );
                let yaw = normalize_yaw(dir.x.atan2(dir.z).to_degrees());
                self.set(Subject::Player, Field::Position, FieldValue::Vector(Self::check_position(dest)?))?;
                self.set(Subject::Player, Field::Yaw, FieldValue::Number(yaw))
            }
            Command::Face => {
                let (id, _) = self.object(stmt.target.as_ref())?;
                let d = self.get(&id).position - self.work.player.position;
                if d.x.hypot(d.z) < 1e-9 {
                    return Ok(());
                }
                let yaw = normalize_yaw(d.x.atan2(d.z).to_degrees());
                self.set(Subject::Player, Field::Yaw, FieldValue::Number(yaw))
            }
            Command::SetLightIntensity => {
                let (_, subject) = self.object(stmt.target.as_ref())?;
                let n = Self::number(stmt, 0)?;
                if n.is_nan() || n < 0.0 {
                    return Err(format!("light intensity {n} is negative"));
                }
                self.set(subject, Field::LightIntensity, FieldValue::Number(n))
            }
            Command::CreateLight => {
                let at = Self::check_position(Self::vector(stmt, 0)?)?;
                let intensity = Self::number(stmt, 1)?;
                if intensity.is_nan() || intensity < 0.0 {
                    return Err(format!("light intensity {intensity} is negative"));
                }
                let id = self.unique_id("light");
                let name = self.unique_name(&format!("Point Light {}", &id.0["light-".len()..]));
                let mut light = SceneObject::new(id.0, name);
                light.description = "Small glowing sphere carrying a point light".into();
                light.position = at;
                light.base_extent = Vec3::splat(0.2);
                light.color = Some(ColorRgba::rgb(0xFF, 0xFF, 0xE0));
                light.light = Some(LightFacet {
                    kind: LightKind::Point,
                    intensity,
                    range: Some(DEFAULT_LIGHT_RANGE),
                });
                light.tags = vec!["created".into()];
                self.create(light)
            }
            Command::CreatePrimitive => {
                let shape = match stmt.args.first() {
                    Some(Arg::Shape(s)) => *s,
                    _ => return Err("missing shape".into()),
                };
                let name = match stmt.args.get(1) {
                    Some(Arg::Name(n)) => n.trim().to_string(),
                    _ => return Err("missing name".into()),
                };
                let at = Self::check_position(Self::vector(stmt, 2)?)?;
                let mut obj = SceneObject::new(self.unique_id(shape.keyword()).0, name);
                obj.description = format!("A plain {} created on request", shape.keyword());
                obj.position = at;
                obj.color = Some(ColorRgba::rgb(0x80, 0x80, 0x80));
                obj.tags = vec!["created".into(), shape.keyword().into()];
                if shape == Shape::Sphere {
                    obj.base_extent = Vec3::ONE;
                }
                self.create(obj)
            }
            Command::SetVolume => self.audio_number(stmt, Field::Volume, (0.0, 1.0)),
            Command::SetPitch => self.audio_number(stmt, Field::Pitch, (MIN_PITCH, MAX_PITCH)),
            Command::SetRange => self.audio_number(stmt, Field::MaxDistance, (f64::MIN_POSITIVE, MAX_COORDINATE)),
            Command::Mute | Command::Unmute => {
                let (_, subject) = self.object(stmt.target.as_ref())?;
                self.set(subject, Field::Muted, FieldValue::Bool(stmt.command == Command::Mute))
            }
            Command::SetAmbient => {
                let n = Self::number(stmt, 0)?;
                if n.is_nan() || n < 0.0 {
                    return Err(format!("ambient light {n} is negative"));
                }
                self.set(Subject::Scene, Field::AmbientLight, FieldValue::Number(n))
            }
        }
    }
}

/// Half the object's footprint along a horizontal direction, accounting for
/// its yaw.
fn half_extent_along(obj: &SceneObject, dir: Vec3) -> f64 {
    let e = bounding_extent(obj);
    let local = Player::new(Vec3::ZERO, obj.yaw);
    let (fx, fz) = (local.right(), local.forward());
    let along_x = (dir.x * fx.x + dir.z * fx.z).abs();
    let along_z = (dir.x * fz.x + dir.z * fz.z).abs();
    0.5 * (along_x * e.x + along_z * e.z)
}

/// Best-effort color from words in an object's name.
fn guess_color(name: &str) -> Option<ColorRgba> {
    name.split_whitespace()
        .find_map(color_by_name)
        .or(Some(ColorRgba::rgb(0x80, 0x80, 0x80)))
}

pub fn interpret(program: &SmlProgram, scene: &mut Scene) -> Result<SceneDelta, InterpretError> {
    interpret_with(program, scene, &InterpretOptions::default())
}

/// Runs every statement against a working copy and commits only if all of
/// them succeed, so a failure leaves `scene` untouched.
pub fn interpret_with(
    program: &SmlProgram,
    scene: &mut Scene,
    options: &InterpretOptions,
) -> Result<SceneDelta, InterpretError> {
    let base = scene.version();
    let mut delta = SceneDelta::empty(DeltaKind::Program, base);
    if program.is_empty() {
        return Ok(delta);
    }
    let mut run = Run {
        work: scene.clone(),
        delta: &mut delta,
    };
    for (i, stmt) in program.statements.iter().enumerate() {
        if options.fail_before == Some(i) {
            return Err(InterpretError {
                statement: i,
                command: stmt.command,
                message: "injected failure".into(),
            });
        }
        run.exec(stmt).map_err(|message| InterpretError {
            statement: i,
            command: stmt.command,
            message,
        })?;
    }
    let mut work = run.work;
    for created in &mut delta.created {
        if let Some(current) = work.get(&created.id) {
            *created = current.clone();
        }
    }
    work.set_version(base + 1);
    delta.version = base + 1;
    delta.stamp = work.push_applied();
    *scene = work;
    Ok(delta)
}

/// Undoes the most recently applied program delta.
pub fn revert(delta: &SceneDelta, scene: &mut Scene) -> Result<(), RevertError> {
    if delta.stamp == 0 && delta.is_empty() {
        return Ok(());
    }
    if delta.kind != DeltaKind::Program || scene.top_applied() != Some(delta.stamp) {
        return Err(RevertError::Stale);
    }
    let mut work = scene.clone();
    for c in delta.changes.iter().rev() {
        match write_field(&mut work, &c.subject, c.field, &c.old) {
            Ok(()) => {}
            // expired highlight markers are already gone
            Err(_) if is_created(delta, &c.subject) => {}
            Err(e) => return Err(RevertError::Apply(e.to_string())),
        }
    }
    for obj in &delta.created {
        work.remove(&obj.id);
    }
    for r in delta.removed.iter().rev() {
        work.insert_at(r.index, r.object.clone());
    }
    work.set_version(delta.base_version);
    work.pop_applied();
    *scene = work;
    Ok(())
}

fn is_created(delta: &SceneDelta, subject: &Subject) -> bool {
    matches!(subject, Subject::Object { id, .. } if delta.created.iter().any(|o| &o.id == id))
}
