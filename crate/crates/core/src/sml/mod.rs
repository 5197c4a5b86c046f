//! Scene Modification Language.
//!
//! A closed, line-oriented command language the model uses to express scene
//! changes. One statement per line, object names quoted, `;` starts a comment:
//!
//! ```text
//! simplify-material "Torch"
//! set-color "Torch" #FFD700   ; gold
//! scale-by "Bench" 2
//! move-near "Speaker 1" player
//! create-light (0, 2.5, 4) 1.5
//! ```
//!
//! Programs go through [`lex`], [`parse`], [`validate`] and finally
//! [`interpret`], which applies them atomically and returns an invertible
//! [`SceneDelta`]. The full grammar lives in `docs/sml.md`.

mod delta;
mod interpret;
mod lexer;
mod parser;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{ColorRgba, Vec3};
use crate::scope::OutOfScopeTask;

pub use delta::{Change, DeltaKind, Field, FieldValue, RemovedObject, SceneDelta, Subject};
pub use interpret::{
    InterpretError, InterpretOptions, PLAYER_RADIUS, RevertError, interpret, interpret_with,
    revert,
};
pub use lexer::{Token, TokenKind, lex};
pub use parser::{parse, parse_str};
pub use validate::{
    Diagnostic, DiagnosticKind, Limits, Severity, ValidationReport, Verdict, validate,
    validate_with,
};

/// Source position, 1-based. `end_column` is exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Span {
    pub line: usize,
    pub column: usize,
    pub end_column: usize,
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
pub enum SmlError {
    #[error("lexical error at {line}:{column}: {message}")]
    Lex {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("syntax error at {line}:{column}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        column: usize,
        expected: String,
        found: String,
    },
    #[error("unknown command '{name}' at {line}:{column}; did you mean '{suggestion}'?")]
    UnknownCommand {
        line: usize,
        column: usize,
        name: String,
        suggestion: String,
    },
    #[error("'{name}' at {line}:{column} is not supported: {task} is out of scope")]
    Unsupported {
        line: usize,
        column: usize,
        name: String,
        task: OutOfScopeTask,
    },
}

impl SmlError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            SmlError::Lex { line, column, .. }
            | SmlError::Syntax { line, column, .. }
            | SmlError::UnknownCommand { line, column, .. }
            | SmlError::Unsupported { line, column, .. } => (*line, *column),
        }
    }
}

/// Kinds of argument a command slot accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Object,
    ObjectOrPlayer,
    Color,
    Number,
    Vector,
    Shape,
    Name,
}

impl Param {
    fn describe(&self) -> &'static str {
        match self {
            Param::Object => "quoted object name",
            Param::ObjectOrPlayer => "quoted object name or `player`",
            Param::Color => "HEX color",
            Param::Number => "number",
            Param::Vector => "vector (x, y, z)",
            Param::Shape => "shape (cube or sphere)",
            Param::Name => "quoted name",
        }
    }

    fn placeholder(&self) -> &'static str {
        match self {
            Param::Object => "\"object\"",
            Param::ObjectOrPlayer => "\"object\"|player",
            Param::Color => "#RRGGBB",
            Param::Number => "number",
            Param::Vector => "(x, y, z)",
            Param::Shape => "cube|sphere",
            Param::Name => "\"name\"",
        }
    }

    fn is_reference(&self) -> bool {
        matches!(self, Param::Object | Param::ObjectOrPlayer)
    }
}

macro_rules! commands {
    ($( $variant:ident => $kw:literal, [$($param:ident),*], [$($alias:literal),*]; )*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "kebab-case")]
        pub enum Command {
            $($variant,)*
        }

        impl Command {
            pub const ALL: &'static [Command] = &[$(Command::$variant,)*];

            pub fn keyword(&self) -> &'static str {
                match self {
                    $(Command::$variant => $kw,)*
                }
            }

            pub fn params(&self) -> &'static [Param] {
                match self {
                    $(Command::$variant => &[$(Param::$param),*],)*
                }
            }

            /// Everyday words that should steer suggestions to this command.
            pub fn aliases(&self) -> &'static [&'static str] {
                match self {
                    $(Command::$variant => &[$($alias),*],)*
                }
            }
        }
    };
}

commands! {
    SetColor => "set-color", [Object, Color], ["paint", "color", "colour", "recolor", "set-colour", "change-color"];
    SimplifyMaterial => "simplify-material", [Object], ["simplify", "simplify-texture", "flatten-texture"];
    Highlight => "highlight", [Object], ["select", "mark", "show", "indicate"];
    SetScale => "set-scale", [Object, Vector], ["resize-to", "scale-to"];
    ScaleBy => "scale-by", [Object, Number], ["scale", "resize", "grow", "shrink", "enlarge"];
    SetTextSize => "set-text-size", [Object, Number], ["text-size", "font-size", "set-font-size"];
    MoveTo => "move-to", [ObjectOrPlayer, Vector], ["move", "place", "put", "teleport", "position"];
    MoveBy => "move-by", [ObjectOrPlayer, Vector], ["shift", "nudge", "translate", "offset"];
    MoveNear => "move-near", [Object, ObjectOrPlayer], ["bring", "bring-near", "place-near", "grab"];
    MovePlayer => "move-player", [Object], ["go-to", "goto", "walk-to", "approach"];
    Face => "face", [Object], ["look-at", "turn-to", "turn"];
    SetLightIntensity => "set-light-intensity", [Object, Number], ["brighten", "dim", "light", "set-intensity", "intensity"];
    CreateLight => "create-light", [Vector, Number], ["add-light", "new-light", "spawn-light"];
    CreatePrimitive => "create-primitive", [Shape, Name, Vector], ["create", "add", "spawn", "new", "make"];
    SetVolume => "set-volume", [Object, Number], ["volume", "louder", "quieter", "set-loudness"];
    SetPitch => "set-pitch", [Object, Number], ["pitch", "tune"];
    SetRange => "set-range", [Object, Number], ["range", "set-max-distance", "max-distance"];
    Mute => "mute", [Object], ["silence", "quiet"];
    Unmute => "unmute", [Object], ["unsilence", "sound-on"];
    SetAmbient => "set-ambient", [Number], ["ambient", "set-ambient-light", "set-brightness"];
}

impl Command {
    pub fn from_keyword(word: &str) -> Option<Command> {
        Command::ALL.iter().copied().find(|c| c.keyword() == word)
    }

    /// One-line signature such as `set-color "object" #RRGGBB`.
    pub fn usage(&self) -> String {
        std::iter::once(self.keyword())
            .chain(self.params().iter().map(Param::placeholder))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Command whose keyword or alias is closest to `word` by edit distance.
    pub fn suggest(word: &str) -> Command {
        let word = word.to_ascii_lowercase();
        let mut best = (usize::MAX, Command::SetColor);
        for &cmd in Command::ALL {
            let names = std::iter::once(cmd.keyword()).chain(cmd.aliases().iter().copied());
            for name in names {
                let d = strsim::levenshtein(&word, name);
                if d < best.0 {
                    best = (d, cmd);
                }
            }
        }
        best.1
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Cube,
    Sphere,
}

impl Shape {
    pub fn keyword(&self) -> &'static str {
        match self {
            Shape::Cube => "cube",
            Shape::Sphere => "sphere",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Shape> {
        match word {
            "cube" => Some(Shape::Cube),
            "sphere" => Some(Shape::Sphere),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Player,
    Object(String),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Player => f.write_str("player"),
            Target::Object(name) => write_quoted(f, name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arg {
    Color(ColorRgba),
    Number(f64),
    Vector(Vec3),
    Shape(Shape),
    Name(String),
    Ref(Target),
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Color(c) => write!(f, "#{:02X}{:02X}{:02X}", c.r, c.g, c.b),
            Arg::Number(n) => write!(f, "{n}"),
            Arg::Vector(v) => write!(f, "{v}"),
            Arg::Shape(s) => f.write_str(s.keyword()),
            Arg::Name(n) => write_quoted(f, n),
            Arg::Ref(t) => write!(f, "{t}"),
        }
    }
}

fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

/// One parsed command. `target` holds the first object/player slot when the
/// command has one; remaining slots are in `args` in signature order.
///
/// Equality ignores `span`, so reformatted programs compare equal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Statement {
    pub command: Command,
    pub target: Option<Target>,
    pub args: Vec<Arg>,
    #[serde(default)]
    pub span: Span,
}

impl PartialEq for Statement {
    fn eq(&self, other: &Self) -> bool {
        self.command == other.command && self.target == other.target && self.args == other.args
    }
}

impl Statement {
    pub fn new(command: Command, target: Option<Target>, args: Vec<Arg>) -> Self {
        Self {
            command,
            target,
            args,
            span: Span::default(),
        }
    }

    pub fn target_name(&self) -> Option<&str> {
        match &self.target {
            Some(Target::Object(n)) => Some(n),
            _ => None,
        }
    }

    pub fn number(&self, idx: usize) -> Option<f64> {
        match self.args.get(idx) {
            Some(Arg::Number(n)) => Some(*n),
            _ => None,
        }
    }

    pub fn vector(&self, idx: usize) -> Option<Vec3> {
        match self.args.get(idx) {
            Some(Arg::Vector(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn color(&self, idx: usize) -> Option<ColorRgba> {
        match self.args.get(idx) {
            Some(Arg::Color(c)) => Some(*c),
            _ => None,
        }
    }

    /// Checks arity and slot types against the command signature.
    pub fn is_well_formed(&self) -> bool {
        let params = self.command.params();
        let (rest, target_ok) = match params.first() {
            Some(p) if p.is_reference() => (
                &params[1..],
                matches!(
                    (&self.target, p),
                    (Some(Target::Object(_)), _) | (Some(Target::Player), Param::ObjectOrPlayer)
                ),
            ),
            _ => (params, self.target.is_none()),
        };
        target_ok
            && rest.len() == self.args.len()
            && rest.iter().zip(&self.args).all(|(p, a)| match (p, a) {
                (Param::Color, Arg::Color(c)) => c.a == 255,
                (Param::Number, Arg::Number(n)) => n.is_finite(),
                (Param::Vector, Arg::Vector(v)) => v.is_finite(),
                (Param::Shape, Arg::Shape(_)) => true,
                (Param::Name, Arg::Name(_)) => true,
                (Param::Object, Arg::Ref(Target::Object(_))) => true,
                (Param::ObjectOrPlayer, Arg::Ref(_)) => true,
                _ => false,
            })
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.command.keyword())?;
        if let Some(t) = &self.target {
            write!(f, " {t}")?;
        }
        for a in &self.args {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SmlProgram {
    pub statements: Vec<Statement>,
}

impl SmlProgram {
    pub fn new(statements: Vec<Statement>) -> Self {
        Self { statements }
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn commands(&self) -> impl Iterator<Item = Command> + '_ {
        self.statements.iter().map(|s| s.command)
    }
}

/// Canonical text: one statement per line, single spaces, double-quoted
/// names, uppercase HEX. The empty program formats to the empty string.
pub fn format(program: &SmlProgram) -> String {
    program
        .statements
        .iter()
        .map(Statement::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn keywords_round_trip() {
        for &c in Command::ALL {
            assert_eq!(Command::from_keyword(c.keyword()), Some(c));
        }
        assert_eq!(Command::ALL.len(), 20);
    }

    #[test]
    fn suggestions() {
        assert_eq!(Command::suggest("paint"), Command::SetColor);
        assert_eq!(Command::suggest("set-colr"), Command::SetColor);
        assert_eq!(Command::suggest("scale-bye"), Command::ScaleBy);
        assert_eq!(Command::suggest("unmuted"), Command::Unmute);
    }

    #[test]
    fn format_examples() {
        let p = parse_str("set-color  'bench'   #FFFF00").unwrap();
        assert_eq!(format(&p), r#"set-color "bench" #FFFF00"#);
        assert_eq!(format(&SmlProgram::default()), "");
    }

    #[test]
    fn format_escapes_names() {
        let p = SmlProgram::new(vec![Statement::new(
            Command::Mute,
            Some(Target::Object("say \"hi\"\\now".into())),
            vec![],
        )]);
        let text = format(&p);
        assert_eq!(text, r#"mute "say \"hi\"\\now""#);
        assert_eq!(parse_str(&text).unwrap(), p);
    }

    pub(crate) fn arb_name() -> impl Strategy<Value = String> {
        "[A-Za-z0-9 '\"\\\\;#(),.-]{1,12}"
    }

    fn arb_number() -> impl Strategy<Value = f64> {
        prop_oneof![
            -1.0e6f64..1.0e6,
            (-1000i32..1000).prop_map(f64::from),
            Just(0.0),
            Just(1e-9),
        ]
    }

    fn arb_arg(param: Param) -> BoxedStrategy<Arg> {
        match param {
            Param::Color => any::<[u8; 3]>()
                .prop_map(|c| Arg::Color(ColorRgba::rgb(c[0], c[1], c[2])))
                .boxed(),
            Param::Number => arb_number().prop_map(Arg::Number).boxed(),
            Param::Vector => (arb_number(), arb_number(), arb_number())
                .prop_map(|(x, y, z)| Arg::Vector(Vec3::new(x, y, z)))
                .boxed(),
            Param::Shape => prop_oneof![Just(Shape::Cube), Just(Shape::Sphere)]
                .prop_map(Arg::Shape)
                .boxed(),
            Param::Name => arb_name().prop_map(Arg::Name).boxed(),
            Param::Object => arb_name().prop_map(|n| Arg::Ref(Target::Object(n))).boxed(),
            Param::ObjectOrPlayer => prop_oneof![
                Just(Arg::Ref(Target::Player)),
                arb_name().prop_map(|n| Arg::Ref(Target::Object(n)))
            ]
            .boxed(),
        }
    }

    pub(crate) fn arb_statement() -> impl Strategy<Value = Statement> {
        prop::sample::select(Command::ALL.to_vec()).prop_flat_map(|cmd| {
            let args: Vec<_> = cmd.params().iter().map(|p| arb_arg(*p)).collect();
            args.prop_map(move |mut args| {
                let target = match cmd.params().first() {
                    Some(p) if p.is_reference() => match args.remove(0) {
                        Arg::Ref(t) => Some(t),
                        _ => unreachable!(),
                    },
                    _ => None,
                };
                Statement::new(cmd, target, args)
            })
        })
    }

    pub(crate) fn arb_program() -> impl Strategy<Value = SmlProgram> {
        prop::collection::vec(arb_statement(), 0..8).prop_map(SmlProgram::new)
    }

    proptest! {
        #[test]
        fn generated_statements_are_well_formed(s in arb_statement()) {
            prop_assert!(s.is_well_formed());
        }

        #[test]
        fn parse_inverts_format(p in arb_program()) {
            let text = format(&p);
            let back = parse(&lex(&text).unwrap()).unwrap();
            prop_assert_eq!(&back, &p);
            prop_assert_eq!(format(&back), text);
        }
    }
}
