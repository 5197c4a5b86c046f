use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scope::OutOfScopeTask;
use crate::sml::Command;

/// What a prompt is about. A prompt may carry several.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoryCode {
    ObjectLocation,
    AudioVolume,
    Color,
    ObjectSize,
    SceneBrightness,
    AudioPitch,
    SceneDescription,
    SemanticDescription,
    Functionality,
    CreationDeletion,
    Other,
}

impl CategoryCode {
    pub const ALL: [CategoryCode; 11] = [
        CategoryCode::ObjectLocation,
        CategoryCode::AudioVolume,
        CategoryCode::Color,
        CategoryCode::ObjectSize,
        CategoryCode::SceneBrightness,
        CategoryCode::AudioPitch,
        CategoryCode::SceneDescription,
        CategoryCode::SemanticDescription,
        CategoryCode::Functionality,
        CategoryCode::CreationDeletion,
        CategoryCode::Other,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            CategoryCode::ObjectLocation => "object_location",
            CategoryCode::AudioVolume => "audio_volume",
            CategoryCode::Color => "color",
            CategoryCode::ObjectSize => "object_size",
            CategoryCode::SceneBrightness => "scene_brightness",
            CategoryCode::AudioPitch => "audio_pitch",
            CategoryCode::SceneDescription => "scene_description",
            CategoryCode::SemanticDescription => "semantic_description",
            CategoryCode::Functionality => "functionality",
            CategoryCode::CreationDeletion => "creation_deletion",
            CategoryCode::Other => "other",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CategoryCode::ObjectLocation => "Object Location",
            CategoryCode::AudioVolume => "Audio Volume",
            CategoryCode::Color => "Color",
            CategoryCode::ObjectSize => "Object Size",
            CategoryCode::SceneBrightness => "Scene Brightness",
            CategoryCode::AudioPitch => "Audio Pitch",
            CategoryCode::SceneDescription => "Scene Description",
            CategoryCode::SemanticDescription => "Semantic Description",
            CategoryCode::Functionality => "Functionality",
            CategoryCode::CreationDeletion => "Creation/Deletion",
            CategoryCode::Other => "Other",
        }
    }

    /// The six categories the accessibility instructions cover.
    pub fn is_guiding(&self) -> bool {
        matches!(
            self,
            CategoryCode::ObjectLocation
                | CategoryCode::AudioVolume
                | CategoryCode::Color
                | CategoryCode::ObjectSize
                | CategoryCode::SceneBrightness
                | CategoryCode::AudioPitch
        )
    }

    pub fn for_command(command: Command) -> CategoryCode {
        match command {
            Command::SetColor | Command::SimplifyMaterial => CategoryCode::Color,
            Command::SetScale | Command::ScaleBy | Command::SetTextSize => CategoryCode::ObjectSize,
            Command::MoveTo
            | Command::MoveBy
            | Command::MoveNear
            | Command::MovePlayer
            | Command::Face
            | Command::Highlight => CategoryCode::ObjectLocation,
            Command::SetLightIntensity | Command::CreateLight | Command::SetAmbient => {
                CategoryCode::SceneBrightness
            }
            Command::CreatePrimitive => CategoryCode::CreationDeletion,
            Command::SetVolume | Command::SetRange | Command::Mute | Command::Unmute => {
                CategoryCode::AudioVolume
            }
            Command::SetPitch => CategoryCode::AudioPitch,
        }
    }

    pub fn for_task(task: &OutOfScopeTask) -> Option<CategoryCode> {
        match task {
            OutOfScopeTask::ObjectDeletion => Some(CategoryCode::CreationDeletion),
            OutOfScopeTask::ZoomMagnifier => Some(CategoryCode::ObjectSize),
            OutOfScopeTask::EdgeEnhancement | OutOfScopeTask::TexturedColorChange => Some(CategoryCode::Color),
            OutOfScopeTask::Other(_) => None,
        }
    }
}

impl fmt::Display for CategoryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CategoryCode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CategoryCode::ALL
            .into_iter()
            .find(|c| c.key() == s || c.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown category '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalGroup {
    Exploration,
    Execution,
    Verification,
}

/// Why the user issued a prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GoalCode {
    /// Understand the whole scene.
    US,
    /// Search within the scene.
    SS,
    /// Question about specific items.
    QI,
    /// External knowledge.
    EK,
    /// Explicit, task-driven modification.
    EM,
    /// Proactive, user-driven modification.
    PM,
    /// Creative modification.
    CM,
    /// Verify changes.
    V,
}

impl GoalCode {
    pub const ALL: [GoalCode; 8] = [
        GoalCode::US,
        GoalCode::SS,
        GoalCode::QI,
        GoalCode::EK,
        GoalCode::EM,
        GoalCode::PM,
        GoalCode::CM,
        GoalCode::V,
    ];

    pub fn group(&self) -> GoalGroup {
        match self {
            GoalCode::US | GoalCode::SS | GoalCode::QI => GoalGroup::Exploration,
            GoalCode::EK | GoalCode::EM | GoalCode::PM | GoalCode::CM => GoalGroup::Execution,
            GoalCode::V => GoalGroup::Verification,
        }
    }

    pub fn key(&self) -> &'static str {
        match self {
            GoalCode::US => "us",
            GoalCode::SS => "ss",
            GoalCode::QI => "qi",
            GoalCode::EK => "ek",
            GoalCode::EM => "em",
            GoalCode::PM => "pm",
            GoalCode::CM => "cm",
            GoalCode::V => "v",
        }
    }
}

/// How a prompt turned out against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectnessCode {
    Success,
    OutOfScopeAck,
    IntentError,
    TechnicalError,
}

impl CorrectnessCode {
    pub const ALL: [CorrectnessCode; 4] = [
        CorrectnessCode::Success,
        CorrectnessCode::OutOfScopeAck,
        CorrectnessCode::IntentError,
        CorrectnessCode::TechnicalError,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            CorrectnessCode::Success => "success",
            CorrectnessCode::OutOfScopeAck => "out_of_scope",
            CorrectnessCode::IntentError => "intent_error",
            CorrectnessCode::TechnicalError => "technical_error",
        }
    }
}
