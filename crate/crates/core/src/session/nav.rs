use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NavKind {
    MoveForward,
    MoveBack,
    StrafeLeft,
    StrafeRight,
    PanLeft,
    PanRight,
    PanUp,
    PanDown,
}

impl NavKind {
    pub const ALL: [NavKind; 8] = [
        NavKind::MoveForward,
        NavKind::MoveBack,
        NavKind::StrafeLeft,
        NavKind::StrafeRight,
        NavKind::PanLeft,
        NavKind::PanRight,
        NavKind::PanUp,
        NavKind::PanDown,
    ];

    pub fn is_move(&self) -> bool {
        matches!(
            self,
            NavKind::MoveForward | NavKind::MoveBack | NavKind::StrafeLeft | NavKind::StrafeRight
        )
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            NavKind::MoveForward => "move_forward",
            NavKind::MoveBack => "move_back",
            NavKind::StrafeLeft => "strafe_left",
            NavKind::StrafeRight => "strafe_right",
            NavKind::PanLeft => "pan_left",
            NavKind::PanRight => "pan_right",
            NavKind::PanUp => "pan_up",
            NavKind::PanDown => "pan_down",
        }
    }
}

impl fmt::Display for NavKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Accepts the snake_case names and the short forms f, b, l, r (moves) and
/// pl, pr, pu, pd (pans).
impl FromStr for NavKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let short = match s.as_str() {
            "f" | "forward" => Some(NavKind::MoveForward),
            "b" | "back" => Some(NavKind::MoveBack),
            "l" | "left" => Some(NavKind::StrafeLeft),
            "r" | "right" => Some(NavKind::StrafeRight),
            "pl" => Some(NavKind::PanLeft),
            "pr" => Some(NavKind::PanRight),
            "pu" => Some(NavKind::PanUp),
            "pd" => Some(NavKind::PanDown),
            _ => None,
        };
        short
            .or_else(|| NavKind::ALL.into_iter().find(|k| k.as_str() == s))
            .ok_or_else(|| format!("unknown navigation '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavCommand {
    pub kind: NavKind,
    /// Meters for moves, degrees for pans.
    pub magnitude: f64,
}

impl NavCommand {
    pub const DEFAULT_STEP_M: f64 = 0.5;
    pub const DEFAULT_PAN_DEG: f64 = 5.0;

    pub fn new(kind: NavKind) -> Self {
        let magnitude = if kind.is_move() {
            Self::DEFAULT_STEP_M
        } else {
            Self::DEFAULT_PAN_DEG
        };
        Self { kind, magnitude }
    }

    /// `None` unless the magnitude is positive and finite.
    pub fn with_magnitude(kind: NavKind, magnitude: f64) -> Option<Self> {
        (magnitude > 0.0 && magnitude.is_finite()).then_some(Self { kind, magnitude })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_parsing() {
        assert_eq!(NavCommand::new(NavKind::MoveForward).magnitude, 0.5);
        assert_eq!(NavCommand::new(NavKind::PanUp).magnitude, 5.0);
        assert_eq!("f".parse::<NavKind>(), Ok(NavKind::MoveForward));
        assert_eq!("pan_right".parse::<NavKind>(), Ok(NavKind::PanRight));
        assert!("up".parse::<NavKind>().is_err());
        assert!(NavCommand::with_magnitude(NavKind::MoveBack, 0.0).is_none());
        assert!(NavCommand::with_magnitude(NavKind::MoveBack, f64::NAN).is_none());
    }
}
