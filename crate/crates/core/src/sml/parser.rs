use super::lexer::{Token, TokenKind, lex};
use super::{Arg, Command, Param, Shape, SmlError, SmlProgram, Span, Statement, Target};
use crate::scope::OutOfScopeTask;

fn describe(kind: &TokenKind) -> String {
    match kind {
        TokenKind::Command(c) | TokenKind::Word(c) => format!("word '{c}'"),
        TokenKind::Str(s) => format!("string \"{s}\""),
        TokenKind::Number(n) => format!("number {n}"),
        TokenKind::Color(c) => format!("color {c}"),
        TokenKind::Vector(v) => format!("vector {v}"),
        TokenKind::Newline => "end of line".into(),
    }
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&'t Token> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    fn end_position(&self) -> (usize, usize) {
        self.tokens
            .last()
            .map_or((1, 1), |t| (t.span.line, t.span.end_column))
    }

    fn statement(&mut self) -> Result<Statement, SmlError> {
        let head = self.next().expect("caller checked for a token");
        let TokenKind::Command(word) = &head.kind else {
            return Err(SmlError::Syntax {
                line: head.span.line,
                column: head.span.column,
                expected: "command".into(),
                found: describe(&head.kind),
            });
        };
        let Some(command) = Command::from_keyword(word) else {
            if let Some(task) = OutOfScopeTask::for_command_word(word) {
                return Err(SmlError::Unsupported {
                    line: head.span.line,
                    column: head.span.column,
                    name: word.clone(),
                    task,
                });
            }
            return Err(SmlError::UnknownCommand {
                line: head.span.line,
                column: head.span.column,
                name: word.clone(),
                suggestion: Command::suggest(word).keyword().to_string(),
            });
        };

        let mut target = None;
        let mut args = Vec::new();
        let mut end = head.span;
        for (i, param) in command.params().iter().enumerate() {
            let token = match self.peek() {
                Some(t) if t.kind != TokenKind::Newline => {
                    self.pos += 1;
                    t
                }
                other => {
                    let (line, column) = other
                        .map(|t| (t.span.line, t.span.column))
                        .unwrap_or_else(|| self.end_position());
                    return Err(SmlError::Syntax {
                        line,
                        column,
                        expected: format!("{} for {}", param.describe(), command),
                        found: other.map_or("end of input".into(), |t| describe(&t.kind)),
                    });
                }
            };
            let arg = slot(*param, token).ok_or_else(|| SmlError::Syntax {
                line: token.span.line,
                column: token.span.column,
                expected: format!("{} for {}", param.describe(), command),
                found: describe(&token.kind),
            })?;
            end = token.span;
            match arg {
                Arg::Ref(t) if i == 0 => target = Some(t),
                a => args.push(a),
            }
        }
        match self.next() {
            None => {}
            Some(t) if t.kind == TokenKind::Newline => {}
            Some(t) => {
                return Err(SmlError::Syntax {
                    line: t.span.line,
                    column: t.span.column,
                    expected: format!("end of {command} statement"),
                    found: describe(&t.kind),
                });
            }
        }
        Ok(Statement {
            command,
            target,
            args,
            span: Span {
                line: head.span.line,
                column: head.span.column,
                end_column: end.end_column,
            },
        })
    }
}

fn slot(param: Param, token: &Token) -> Option<Arg> {
    match (param, &token.kind) {
        (Param::Object | Param::ObjectOrPlayer, TokenKind::Str(s)) => {
            Some(Arg::Ref(Target::Object(s.clone())))
        }
        (Param::ObjectOrPlayer, TokenKind::Word(w)) if w == "player" => {
            Some(Arg::Ref(Target::Player))
        }
        (Param::Color, TokenKind::Color(c)) => Some(Arg::Color(*c)),
        (Param::Number, TokenKind::Number(n)) => Some(Arg::Number(*n)),
        (Param::Vector, TokenKind::Vector(v)) => Some(Arg::Vector(*v)),
        (Param::Shape, TokenKind::Word(w)) => Shape::from_keyword(w).map(Arg::Shape),
        (Param::Name, TokenKind::Str(s)) => Some(Arg::Name(s.clone())),
        _ => None,
    }
}

/// Recursive-descent parse of a token stream: one statement per line, each
/// checked against its command signature. Blank lines are ignored.
pub fn parse(tokens: &[Token]) -> Result<SmlProgram, SmlError> {
    let mut parser = Parser { tokens, pos: 0 };
    let mut statements = Vec::new();
    while let Some(t) = parser.peek() {
        if t.kind == TokenKind::Newline {
            parser.pos += 1;
            continue;
        }
        statements.push(parser.statement()?);
    }
    Ok(SmlProgram { statements })
}

pub fn parse_str(src: &str) -> Result<SmlProgram, SmlError> {
    parse(&lex(src)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{ColorRgba, Vec3};

    #[test]
    fn scale_by_example() {
        let p = parse_str(r#"scale-by "bench" 2.0"#).unwrap();
        assert_eq!(
            p.statements,
            vec![Statement::new(
                Command::ScaleBy,
                Some(Target::Object("bench".into())),
                vec![Arg::Number(2.0)]
            )]
        );
        assert_eq!(p.statements[0].span, Span { line: 1, column: 1, end_column: 21 });
    }

    #[test]
    fn move_player_example() {
        let p = parse_str("move-by player (0, 0, 3)").unwrap();
        assert_eq!(p.statements[0].command, Command::MoveBy);
        assert_eq!(p.statements[0].target, Some(Target::Player));
        assert_eq!(p.statements[0].args, vec![Arg::Vector(Vec3::new(0.0, 0.0, 3.0))]);
    }

    #[test]
    fn unknown_command_suggests_nearest() {
        match parse_str(r#"paint "bench" red"#) {
            Err(SmlError::UnknownCommand { name, suggestion, line, column }) => {
                assert_eq!(name, "paint");
                assert_eq!(suggestion, "set-color");
                assert_eq!((line, column), (1, 1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deletion_words_are_unsupported_not_unknown() {
        match parse_str("\ndelete \"pen\"") {
            Err(SmlError::Unsupported { task, line, .. }) => {
                assert_eq!(task, OutOfScopeTask::ObjectDeletion);
                assert_eq!(line, 2);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_str("zoom \"table\" 2"),
            Err(SmlError::Unsupported { task: OutOfScopeTask::ZoomMagnifier, .. })
        ));
    }

    #[test]
    fn arity_and_type_errors_name_the_expectation() {
        let err = parse_str(r#"set-volume "speaker 1""#).unwrap_err();
        assert!(matches!(&err, SmlError::Syntax { expected, .. } if expected.contains("number")), "{err}");
        let err = parse_str(r#"set-volume "speaker 1" #FFFFFF"#).unwrap_err();
        assert_eq!(err.position(), (1, 24));
        let err = parse_str(r#"mute "a" "b""#).unwrap_err();
        assert!(matches!(&err, SmlError::Syntax { expected, .. } if expected.contains("end of mute")));
        let err = parse_str("mute player").unwrap_err();
        assert!(matches!(err, SmlError::Syntax { .. }));
    }

    #[test]
    fn multi_line_programs() {
        let p = parse_str(
            "; recolor\nsimplify-material \"Torch\"\n\nset-color \"Torch\" #00ff00\ncreate-light (0, 1, 0) 2\ncreate-primitive sphere \"Ball\" (1, 0, 1)\nset-ambient 0.4\nmove-near \"Speaker 1\" player\n",
        )
        .unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p.statements[1].color(0), Some(ColorRgba::rgb(0, 255, 0)));
        assert_eq!(p.statements[2].target, None);
        assert_eq!(p.statements[3].args[0], Arg::Shape(Shape::Sphere));
        assert_eq!(p.statements[5].args, vec![Arg::Ref(Target::Player)]);
        assert_eq!(p.statements[1].span.line, 4);
    }

    #[test]
    fn statement_must_start_with_command() {
        let err = parse_str("\"bench\" mute").unwrap_err();
        assert!(matches!(err, SmlError::Syntax { .. }));
    }
}
