//! Text (`.isc`) and JSON (`.isc.json`) forms of a score.

mod json;
mod lexer;
mod parser;
mod printer;

use std::fmt;

pub use json::{from_json, from_json_str, to_json, to_json_string, SchemaError, SCORE_FORMAT};
pub use parser::{parse_condition, parse_named, parse_text};
pub use printer::print_text;

use crate::model::Score;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}:{}:{}: expected {expected}, found {found}", span.file, span.line, span.column)]
pub struct ParseError {
    pub span: SourceSpan,
    pub expected: String,
    pub found: String,
}

/// Why a score source could not be loaded.
#[derive(Debug)]
pub enum LoadError {
    Parse(Vec<ParseError>),
    Schema(Vec<SchemaError>),
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Parse(errs) => {
                for e in errs {
                    writeln!(f, "{e}")?;
                }
                Ok(())
            }
            LoadError::Schema(errs) => {
                for e in errs {
                    writeln!(f, "{e}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for LoadError {}

/// Parses either form; JSON is recognised by a leading `{`.
pub fn parse_any(file: &str, src: &str) -> Result<Score, LoadError> {
    if src.trim_start().starts_with('{') {
        from_json_str(src).map_err(LoadError::Schema)
    } else {
        parse_named(file, src).map_err(LoadError::Parse)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DurationClass, PointRole, SendBehavior, WaitBehavior};

    #[test]
    fn smallest_legal_score() {
        let s = parse_text("to A { dur rigid 5 5; relation start -> end when true dur 5 wait; }").unwrap();
        assert_eq!(s.objects.len(), 1);
        assert_eq!(s.relations.len(), 1);
        let r = s.relations.values().next().unwrap();
        assert_eq!(r.from.as_str(), "A.start");
        assert_eq!(r.to.as_str(), "A.end");
        assert_eq!(r.duration.class, DurationClass::Rigid { min: 5, max: 5 });
    }

    #[test]
    fn unterminated_block() {
        let errs = parse_text("to A {").unwrap_err();
        assert_eq!(errs[0].expected, "`}`");
        assert_eq!(errs[0].span.line, 1);
    }

    #[test]
    fn dangling_reference_is_a_parse_error() {
        let errs = parse_text("to A { relation start -> Z.end when true dur 0 wait; }").unwrap_err();
        assert!(errs[0].found.contains("Z"));
    }

    #[test]
    fn duplicate_object() {
        let errs = parse_text("to A { to B { } to B { } }").unwrap_err();
        assert!(errs[0].found.contains("duplicate"));
    }

    #[test]
    fn fields_and_points() {
        let s = parse_text(
            "to A { var finish; var n = -2; policy delay; point end wa ch; \
             process play_sound param file=\"b.wav\" param gain=3; constraint n < 4; }",
        )
        .unwrap();
        let a = s.object("A").unwrap();
        assert_eq!(a.vars.len(), 2);
        assert_eq!(a.policy, crate::model::InstancePolicy::Delay);
        assert_eq!(a.process.params.len(), 2);
        let e = s.point("A.end").unwrap();
        assert_eq!((e.wait, e.send, e.role), (WaitBehavior::WaitAll, SendBehavior::Choice, PointRole::End));
    }

    #[test]
    fn unicode_label_round_trips() {
        let s = parse_text("to G { to P \"Séquence paysage\" { dur 3; relation start -> end when true dur 3 wait; } relation start -> P.start when true dur 0 wait; }").unwrap();
        assert_eq!(s.object("P").unwrap().name, "Séquence paysage");
        let once = print_text(&s);
        let twice = print_text(&parse_text(&once).unwrap());
        assert_eq!(once, twice);
    }

    #[test]
    fn json_missing_point_reports_path() {
        let s = parse_text("to A { relation start -> end when true dur 0 wait; }").unwrap();
        let mut doc = to_json(&s);
        doc["relations"][0]["to"] = serde_json::Value::String("p99".into());
        let errs = from_json(&doc).unwrap_err();
        assert_eq!(errs[0].path, "$.relations[0].to");
    }

    #[test]
    fn json_type_error_reports_path() {
        let s = parse_text("to A { relation start -> end when true dur 0 wait; }").unwrap();
        let mut doc = to_json(&s);
        doc["objects"][0]["policy"] = serde_json::Value::String("sometimes".into());
        let errs = from_json(&doc).unwrap_err();
        assert_eq!(errs[0].path, "$.objects[0].policy");
    }
}
