use crate::color::color_name;
use crate::scene::{ColorRgba, ObjectId, TEXTURED_TAG, Vec3};
use crate::sml::{Change, DeltaKind, Field, FieldValue, SceneDelta, Subject};

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn vec3(v: Vec3) -> String {
    format!("({}, {}, {})", num(v.x), num(v.y), num(v.z))
}

fn scale(v: Vec3) -> String {
    if v.x == v.y && v.y == v.z {
        num(v.x)
    } else {
        vec3(v)
    }
}

fn color(c: &Option<ColorRgba>) -> String {
    match c {
        Some(c) => color_name(*c).to_string(),
        None => "no color".into(),
    }
}

fn subject_name(subject: &Subject) -> &str {
    match subject {
        Subject::Object { name, .. } => name,
        Subject::Player => "You",
        Subject::Scene => "The scene",
    }
}

fn sentence(c: &Change) -> String {
    let who = subject_name(&c.subject);
    match (c.field, &c.old, &c.new) {
        (Field::Color, FieldValue::Color(a), FieldValue::Color(b)) => {
            format!("{who} color changed from {} to {}.", color(a), color(b))
        }
        (Field::Tags, FieldValue::Tags(a), FieldValue::Tags(b)) => {
            let had = |t: &Vec<String>| t.iter().any(|x| x == TEXTURED_TAG);
            if had(a) && !had(b) {
                format!("{who} material was simplified to a plain color.")
            } else {
                format!("{who} tags changed from [{}] to [{}].", a.join(", "), b.join(", "))
            }
        }
        (Field::Scale, FieldValue::Vector(a), FieldValue::Vector(b)) => {
            format!("{who} scale changed from {} to {}.", scale(*a), scale(*b))
        }
        (Field::Position, FieldValue::Vector(a), FieldValue::Vector(b)) => match c.subject {
            Subject::Player => format!("You moved from {} to {}.", vec3(*a), vec3(*b)),
            _ => format!("{who} moved from {} to {}.", vec3(*a), vec3(*b)),
        },
        (Field::Yaw, FieldValue::Number(a), FieldValue::Number(b)) => match c.subject {
            Subject::Player => format!("You turned from {} to {} degrees.", num(*a), num(*b)),
            _ => format!("{who} rotated from {} to {} degrees.", num(*a), num(*b)),
        },
        (Field::Muted, _, FieldValue::Bool(true)) => format!("{who} was muted."),
        (Field::Muted, _, FieldValue::Bool(false)) => format!("{who} was unmuted."),
        (field, FieldValue::Number(a), FieldValue::Number(b)) => {
            let what = match field {
                Field::FontSize => "text size",
                Field::LightIntensity => "light intensity",
                Field::Volume => "volume",
                Field::Pitch => "pitch",
                Field::MaxDistance => "audible distance",
                Field::AmbientLight => "ambient light",
                _ => field.path(),
            };
            format!("{who} {what} changed from {} to {}.", num(*a), num(*b))
        }
        (field, _, _) => format!("{who} {} changed.", field.path()),
    }
}

fn touches(subject: &Subject, ids: &[&ObjectId]) -> bool {
    matches!(subject, Subject::Object { id, .. } if ids.contains(&id))
}

/// Renders a delta as plain sentences from the recorded old and new values.
pub fn describe_delta(delta: &SceneDelta) -> String {
    let created: Vec<&ObjectId> = delta.created.iter().map(|o| &o.id).collect();
    let mut out = Vec::new();
    if delta.kind == DeltaKind::Undo {
        out.push("The last modification was undone.".to_string());
    }
    for o in &delta.created {
        out.push(format!("{} was created.", o.name));
    }
    for r in &delta.removed {
        out.push(format!("{} was removed.", r.object.name));
    }
    out.extend(
        delta
            .changes
            .iter()
            .filter(|c| !touches(&c.subject, &created))
            .map(sentence),
    );
    if out.is_empty() {
        return "Nothing changed.".into();
    }
    out.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn change(field: Field, old: FieldValue, new: FieldValue) -> Change {
        Change {
            subject: Subject::Object {
                id: ObjectId::new("bench"),
                name: "Bench".into(),
            },
            field,
            old,
            new,
        }
    }

    #[test]
    fn color_sentence() {
        let mut d = SceneDelta::empty(DeltaKind::Program, 0);
        d.changes.push(change(
            Field::Color,
            FieldValue::Color(Some(ColorRgba::rgb(0, 0x80, 0))),
            FieldValue::Color(Some(ColorRgba::rgb(0xFF, 0xFF, 0))),
        ));
        assert_eq!(describe_delta(&d), "Bench color changed from green to yellow.");
    }

    #[test]
    fn sentences_in_order() {
        let mut d = SceneDelta::empty(DeltaKind::Program, 0);
        d.changes.push(change(
            Field::Scale,
            FieldValue::Vector(Vec3::splat(1.0)),
            FieldValue::Vector(Vec3::splat(1.5)),
        ));
        d.changes.push(change(Field::Volume, FieldValue::Number(0.5), FieldValue::Number(0.25)));
        assert_eq!(
            describe_delta(&d),
            "Bench scale changed from 1 to 1.5. Bench volume changed from 0.5 to 0.25."
        );
    }

    #[test]
    fn empty_delta() {
        assert_eq!(describe_delta(&SceneDelta::empty(DeltaKind::Program, 0)), "Nothing changed.");
    }
}
