//! The semantic scene graph sent to the language model with every query.
//!
//! Each annotated object becomes one node carrying its developer metadata
//! plus player-relative accessibility facts: HEX color, text and font size,
//! egocentric direction and distance, local light density, and audio state.
//! Nodes are ordered nearest-first (ties by name) so the payload is
//! deterministic for a given snapshot.
//!
//! The wire form is pretty-printed JSON with a fixed key order; see
//! `docs/ssg.md` for the field reference.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{
    ColorRgba, Direction, Proximity, Scene, Vec3, bounding_extent, egocentric_direction,
    euclidean_distance, qualitative_distance,
};

#[derive(Debug, Error)]
pub enum SsgError {
    #[error("SSG syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("SSG validation error: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightLevel {
    Dark,
    Dim,
    Bright,
}

impl LightLevel {
    pub fn classify(density: f64) -> Self {
        if density < 0.25 {
            LightLevel::Dark
        } else if density < 1.0 {
            LightLevel::Dim
        } else {
            LightLevel::Bright
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsgText {
    pub content: String,
    pub font_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Egocentric {
    pub direction: Direction,
    pub distance_m: f64,
    pub proximity: Proximity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightDensity {
    pub value: f64,
    pub level: LightLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsgAudio {
    pub muted: bool,
    pub volume: f64,
    pub pitch: f64,
    pub max_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsgNode {
    pub name: String,
    pub description: String,
    pub physical: bool,
    pub attached_behavior_tags: Vec<String>,
    pub position: Vec3,
    pub scale: Vec3,
    /// World size in meters.
    pub extent_m: Vec3,
    pub parent: Option<String>,
    pub color: Option<ColorRgba>,
    pub text: Option<SsgText>,
    pub egocentric: Egocentric,
    pub light_density: LightDensity,
    pub audio: Option<SsgAudio>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsgPlayer {
    pub position: Vec3,
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemanticSceneGraph {
    pub scene: String,
    pub generated_at: f64,
    pub ambient_light_intensity: f64,
    pub player: SsgPlayer,
    pub nodes: Vec<SsgNode>,
}

impl SemanticSceneGraph {
    pub fn node(&self, name: &str) -> Option<&SsgNode> {
        self.nodes.iter().find(|n| n.name.eq_ignore_ascii_case(name))
    }
}

pub fn build_ssg(scene: &Scene) -> SemanticSceneGraph {
    let player = &scene.player;
    let mut nodes: Vec<SsgNode> = scene
        .objects()
        .iter()
        .filter(|o| !o.is_transient())
        .map(|o| {
            let distance = euclidean_distance(player.position, o.position);
            let density = scene.light_density_at(o.position);
            SsgNode {
                name: o.name.clone(),
                description: o.description.clone(),
                physical: o.physical,
                attached_behavior_tags: o.tags.clone(),
                position: o.position,
                scale: o.scale,
                extent_m: bounding_extent(o),
                parent: o
                    .parent
                    .as_ref()
                    .and_then(|p| scene.get(p))
                    .map(|p| p.name.clone()),
                color: o.color,
                text: o.text.as_ref().map(|t| SsgText {
                    content: t.content.clone(),
                    font_size: t.font_size,
                }),
                egocentric: Egocentric {
                    direction: egocentric_direction(player, o.position),
                    distance_m: distance,
                    proximity: qualitative_distance(distance),
                },
                light_density: LightDensity {
                    value: density,
                    level: LightLevel::classify(density),
                },
                audio: o.audio.as_ref().map(|a| SsgAudio {
                    muted: a.muted,
                    volume: a.volume,
                    pitch: a.pitch,
                    max_distance: a.max_distance,
                }),
            }
        })
        .collect();
    nodes.sort_by(|a, b| {
        a.egocentric
            .distance_m
            .total_cmp(&b.egocentric.distance_m)
            .then_with(|| a.name.cmp(&b.name))
    });
    SemanticSceneGraph {
        scene: scene.name.clone(),
        generated_at: scene.clock(),
        ambient_light_intensity: scene.ambient_light_intensity,
        player: SsgPlayer {
            position: player.position,
            yaw: player.yaw,
        },
        nodes,
    }
}

pub fn serialize_ssg(ssg: &SemanticSceneGraph) -> String {
    serde_json::to_string_pretty(ssg).expect("SSG serialization is infallible")
}

pub fn parse_ssg(text: &str) -> Result<SemanticSceneGraph, SsgError> {
    let ssg: SemanticSceneGraph = serde_json::from_str(text).map_err(|e| SsgError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut seen = HashSet::new();
    for node in &ssg.nodes {
        if !seen.insert(node.name.to_lowercase()) {
            return Err(SsgError::Validation(format!(
                "duplicate node name '{}'",
                node.name
            )));
        }
    }
    Ok(ssg)
}

/// Colors of everything except `exclude`, used to pick contrasting colors.
pub fn surrounding_colors(ssg: &SemanticSceneGraph, exclude: &str) -> Vec<ColorRgba> {
    ssg.nodes
        .iter()
        .filter(|n| !n.name.eq_ignore_ascii_case(exclude))
        .filter_map(|n| n.color)
        .collect()
}
