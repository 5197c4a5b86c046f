//! Declarative scene files and the bundled study scenes.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{
    AudioFacet, ColorRgba, LightFacet, ObjectId, Player, Scene, SceneError, SceneObject, TextFacet, Vec3,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SceneFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported format version {0}; expected {FORMAT_VERSION}")]
    UnsupportedVersion(u32),
    #[error("invalid scene: {0}")]
    Invalid(#[from] SceneError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub format_version: u32,
    pub name: String,
    pub ambient_light_intensity: f64,
    pub player: PlayerSpawn,
    pub objects: Vec<ObjectRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerSpawn {
    pub position: Vec3,
    #[serde(default)]
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transform {
    pub position: Vec3,
    #[serde(default)]
    pub yaw: f64,
    #[serde(default = "unit_scale")]
    pub scale: Vec3,
}

fn unit_scale() -> Vec3 {
    Vec3::ONE
}

fn default_true() -> bool {
    true
}

/// One object as written in a scene file. Optional parts may be omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectRecord {
    pub id: ObjectId,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default = "default_true")]
    pub physical: bool,
    #[serde(default = "unit_scale")]
    pub base_extent: Vec3,
    pub transform: Transform,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<ObjectId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<ColorRgba>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<TextFacet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio: Option<AudioFacet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub light: Option<LightFacet>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transient_until: Option<f64>,
}

impl From<ObjectRecord> for SceneObject {
    fn from(r: ObjectRecord) -> Self {
        SceneObject {
            id: r.id,
            name: r.name,
            description: r.description,
            physical: r.physical,
            position: r.transform.position,
            yaw: r.transform.yaw,
            scale: r.transform.scale,
            base_extent: r.base_extent,
            parent: r.parent,
            color: r.color,
            text: r.text,
            audio: r.audio,
            light: r.light,
            tags: r.tags,
            transient_until: r.transient_until,
        }
    }
}

impl From<&SceneObject> for ObjectRecord {
    fn from(o: &SceneObject) -> Self {
        ObjectRecord {
            id: o.id.clone(),
            name: o.name.clone(),
            description: o.description.clone(),
            physical: o.physical,
            base_extent: o.base_extent,
            transform: Transform {
                position: o.position,
                yaw: o.yaw,
                scale: o.scale,
            },
            parent: o.parent.clone(),
            color: o.color,
            text: o.text.clone(),
            audio: o.audio.clone(),
            light: o.light.clone(),
            tags: o.tags.clone(),
            transient_until: o.transient_until,
        }
    }
}

impl SceneFile {
    pub fn from_scene(scene: &Scene) -> Self {
        SceneFile {
            format_version: FORMAT_VERSION,
            name: scene.name.clone(),
            ambient_light_intensity: scene.ambient_light_intensity,
            player: PlayerSpawn {
                position: scene.player.position,
                yaw: scene.player.yaw,
            },
            objects: scene.objects().iter().map(ObjectRecord::from).collect(),
        }
    }

    pub fn into_scene(self) -> Result<Scene, SceneFileError> {
        if self.format_version != FORMAT_VERSION {
            return Err(SceneFileError::UnsupportedVersion(self.format_version));
        }
        Ok(Scene::with_objects(
            self.name,
            Player::new(self.player.position, self.player.yaw),
            self.ambient_light_intensity,
            self.objects.into_iter().map(SceneObject::from).collect(),
        )?)
    }
}

/// Parses and validates scene-file JSON. Schema errors name the JSON path
/// of the offending value.
pub fn parse_scene(text: &str) -> Result<Scene, SceneFileError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: SceneFile = serde_path_to_error::deserialize(de).map_err(|e| SceneFileError::Schema {
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    })?;
    file.into_scene()
}

pub fn load_scene(path: &Path) -> Result<Scene, SceneFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| SceneFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scene(&text)
}

pub fn scene_to_json(scene: &Scene) -> String {
    serde_json::to_string_pretty(&SceneFile::from_scene(scene)).expect("scene files always serialize")
}

pub fn save_scene(scene: &Scene, path: &Path) -> Result<(), SceneFileError> {
    std::fs::write(path, scene_to_json(scene) + "\n").map_err(|source| SceneFileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// The three study scenes shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BundledScene {
    DemoRoom,
    CatPark,
    SpaceshipRoom,
}

impl BundledScene {
    pub const ALL: [BundledScene; 3] = [BundledScene::DemoRoom, BundledScene::CatPark, BundledScene::SpaceshipRoom];

    pub fn key(&self) -> &'static str {
        match self {
            BundledScene::DemoRoom => "demo-room",
            BundledScene::CatPark => "cat-park",
            BundledScene::SpaceshipRoom => "spaceship-room",
        }
    }

    pub fn json(&self) -> &'static str {
        match self {
            BundledScene::DemoRoom => include_str!("../resources/scenes/demo_room.json"),
            BundledScene::CatPark => include_str!("../resources/scenes/cat_park.json"),
            BundledScene::SpaceshipRoom => include_str!("../resources/scenes/spaceship_room.json"),
        }
    }

    pub fn load(&self) -> Scene {
        parse_scene(self.json()).expect("bundled scenes are valid")
    }
}

impl fmt::Display for BundledScene {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for BundledScene {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        BundledScene::ALL
            .into_iter()
            .find(|b| b.key() == s || format!("scene{}", *b as usize + 1) == s)
            .ok_or_else(|| format!("unknown bundled scene '{s}' (expected demo-room, cat-park or spaceship-room)"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cat_park_has_three_cats() {
        let scene = BundledScene::CatPark.load();
        let cats: Vec<&str> = scene
            .objects()
            .iter()
            .map(|o| o.name.as_str())
            .filter(|n| n.to_lowercase().contains("cat"))
            .collect();
        assert_eq!(cats.len(), 3, "{cats:?}");
        let pitches: Vec<f64> = scene
            .objects()
            .iter()
            .filter(|o| o.name.to_lowercase().contains("cat"))
            .map(|o| o.audio.as_ref().unwrap().pitch)
            .collect();
        assert!(pitches[0] != pitches[1] && pitches[1] != pitches[2] && pitches[0] != pitches[2]);
        for name in ["Bench", "Streetlamp", "Garden Hut"] {
            assert!(scene.by_name(name).is_some(), "{name}");
        }
        assert!(scene.objects().iter().any(|o| o.text.is_some()));
    }

    #[test]
    fn spaceship_has_sixteen_objects_three_sounds() {
        let scene = BundledScene::SpaceshipRoom.load();
        assert_eq!(scene.objects().len(), 16);
        assert_eq!(scene.objects().iter().filter(|o| o.audio.is_some()).count(), 3);
    }

    #[test]
    fn demo_room_contents() {
        let scene = BundledScene::DemoRoom.load();
        for name in ["Torch", "Red Cube", "Green Sphere", "Speaker 1", "Speaker 2", "Welcome Text", "Table"] {
            assert!(scene.by_name(name).is_some(), "{name}");
        }
        assert!(scene.by_name("Torch").unwrap().has_tag("textured"));
    }

    #[test]
    fn schema_errors_carry_paths() {
        let mut v: serde_json::Value = serde_json::from_str(BundledScene::DemoRoom.json()).unwrap();
        v["objects"][2]["transform"]["position"] = serde_json::json!([1, "x", 3]);
        match parse_scene(&v.to_string()) {
            Err(SceneFileError::Schema { path, .. }) => assert_eq!(path, "objects[2].transform.position[1]"),
            other => panic!("{other:?}"),
        }
        let mut v: serde_json::Value = serde_json::from_str(BundledScene::DemoRoom.json()).unwrap();
        v["objects"][0]["colour"] = serde_json::json!("#FFFFFF");
        assert!(matches!(parse_scene(&v.to_string()), Err(SceneFileError::Schema { .. })));
    }

    #[test]
    fn referential_errors() {
        let mut v: serde_json::Value = serde_json::from_str(BundledScene::DemoRoom.json()).unwrap();
        let dup = v["objects"][0]["id"].clone();
        v["objects"][1]["id"] = dup;
        assert!(matches!(
            parse_scene(&v.to_string()),
            Err(SceneFileError::Invalid(SceneError::DuplicateId(_)))
        ));
        let mut v: serde_json::Value = serde_json::from_str(BundledScene::DemoRoom.json()).unwrap();
        v["objects"][1]["parent"] = serde_json::json!("nowhere");
        assert!(matches!(
            parse_scene(&v.to_string()),
            Err(SceneFileError::Invalid(SceneError::UnknownParent { .. }))
        ));
        let mut v: serde_json::Value = serde_json::from_str(BundledScene::DemoRoom.json()).unwrap();
        v["format_version"] = serde_json::json!(9);
        assert!(matches!(parse_scene(&v.to_string()), Err(SceneFileError::UnsupportedVersion(9))));
    }

    #[test]
    fn save_then_load() {
        let dir = tempfile::tempdir().unwrap();
        for b in BundledScene::ALL {
            let scene = b.load();
            let path = dir.path().join(format!("{b}.json"));
            save_scene(&scene, &path).unwrap();
            assert_eq!(load_scene(&path).unwrap(), scene);
        }
        assert!(matches!(
            load_scene(&dir.path().join("missing.json")),
            Err(SceneFileError::Io { .. })
        ));
    }

    #[test]
    fn bundled_names_parse() {
        assert_eq!("cat-park".parse::<BundledScene>(), Ok(BundledScene::CatPark));
        assert_eq!("scene3".parse::<BundledScene>(), Ok(BundledScene::SpaceshipRoom));
        assert!("moon".parse::<BundledScene>().is_err());
    }

    fn arb_vec() -> impl Strategy<Value = Vec3> {
        (-50.0..50.0f64, -5.0..5.0f64, -50.0..50.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    fn arb_object(i: usize) -> impl Strategy<Value = SceneObject> {
        (
            arb_vec(),
            0.0..360.0f64,
            (0.1..4.0f64, 0.1..4.0f64, 0.1..4.0f64),
            prop::option::of(any::<[u8; 4]>()),
            prop::option::of(("[a-z ]{0,12}", 1.0..200.0f64)),
            prop::option::of((0.0..=1.0f64, 0.1..=3.0f64, 1.0..50.0f64, any::<bool>())),
            any::<bool>(),
        )
            .prop_map(move |(pos, yaw, (sx, sy, sz), color, text, audio, textured)| {
                let mut o = SceneObject::new(format!("obj-{i}"), format!("Object {i}"));
                o.position = pos;
                o.yaw = yaw;
                o.scale = Vec3::new(sx, sy, sz);
                o.color = color.map(|[r, g, b, a]| ColorRgba::rgba(r, g, b, a));
                o.text = text.map(|(content, font_size)| TextFacet { content, font_size });
                o.audio = audio.map(|(volume, pitch, max_distance, muted)| AudioFacet {
                    clip_id: format!("clip-{i}"),
                    volume,
                    pitch,
                    max_distance,
                    muted,
                    looping: true,
                });
                if textured {
                    o.tags.push("textured".into());
                }
                o
            })
    }

    proptest! {
        #[test]
        fn file_round_trip(
            objects in (0usize..6).prop_flat_map(|n| (0..n).map(arb_object).collect::<Vec<_>>()),
            spawn in arb_vec(),
            yaw in 0.0..360.0f64,
            ambient in 0.0..2.0f64,
        ) {
            let scene = Scene::with_objects("prop", Player::new(spawn, yaw), ambient, objects).unwrap();
            prop_assert_eq!(parse_scene(&scene_to_json(&scene)).unwrap(), scene);
        }
    }
}
