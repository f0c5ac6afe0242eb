use serde::{Deserialize, Serialize};

use crate::model::{PointId, TcrId, Tick, ToId, VarValue};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputEvent {
    SetVar { to: ToId, name: String, value: VarValue },
    Choose { point: PointId, relation: TcrId },
    Noop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEntry {
    pub tick: Tick,
    pub event: InputEvent,
}

#[derive(Debug, thiserror::Error)]
#[error("script {path}: {message}")]
pub struct ScriptError {
    pub path: String,
    pub message: String,
}

pub fn parse_script(src: &str) -> Result<Vec<ScriptEntry>, ScriptError> {
    let de = &mut serde_json::Deserializer::from_str(src);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = match path.as_str() {
            "." => "$".to_string(),
            p if p.starts_with('[') => format!("${p}"),
            p => format!("$.{p}"),
        };
        ScriptError { path, message: e.into_inner().to_string() }
    })
}

/// Inputs of each tick, in script order.
pub fn by_tick(script: &[ScriptEntry]) -> std::collections::BTreeMap<Tick, Vec<InputEvent>> {
    let mut out: std::collections::BTreeMap<Tick, Vec<InputEvent>> = Default::default();
    for e in script {
        out.entry(e.tick).or_default().push(e.event.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_event_types() {
        let s = parse_script(
            r#"[{"tick":10,"event":{"type":"set_var","to":"A","name":"finish","value":true}},
                {"tick":3,"event":{"type":"choose","point":"C.end","relation":"r"}},
                {"tick":4,"event":{"type":"noop"}}]"#,
        )
        .unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(
            s[0].event,
            InputEvent::SetVar { to: "A".into(), name: "finish".into(), value: VarValue::Bool(true) }
        );
        assert_eq!(by_tick(&s)[&3].len(), 1);
    }

    #[test]
    fn reports_path() {
        let e = parse_script(r#"[{"tick":1,"event":{"type":"jump"}}]"#).unwrap_err();
        assert!(e.path.starts_with("$[0].event"), "{}", e.path);
    }
}
