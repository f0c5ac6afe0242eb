use std::fmt::Write;

use super::lexer::{is_ident_char, is_ident_start};
use crate::model::{
    Evaluation, InstancePolicy, Interpretation, PointId, PointRole, Score, SendBehavior, TemporalObject,
    ToId, VarValue, WaitBehavior,
};

const KEYWORDS: &[&str] = &["and", "or", "not", "true", "false", "dur"];

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn name(s: &str) -> String {
    let mut chars = s.chars();
    let plain = chars.next().is_some_and(is_ident_start) && chars.all(is_ident_char);
    if plain && !KEYWORDS.contains(&s) {
        s.to_string()
    } else {
        quote(s)
    }
}

fn point_ref(s: &Score, p: &PointId) -> String {
    match s.point(p.as_str()) {
        Some(spec) => {
            let role = match spec.role {
                PointRole::Start => "start",
                PointRole::End => "end",
            };
            format!("{}.{role}", name(spec.owner.as_str()))
        }
        None => name(p.as_str()),
    }
}

/// Renders a score in the text form. Point ids are rendered as
/// `<object>.start` / `<object>.end`; edition results are not part of the text form.
pub fn print_text(s: &Score) -> String {
    let mut out = String::new();
    if let Some(root) = s.root_object() {
        print_object(s, root, 0, &mut out);
    }
    out
}

fn print_object(s: &Score, to: &TemporalObject, depth: usize, out: &mut String) {
    let pad = "    ".repeat(depth);
    let inner = "    ".repeat(depth + 1);
    let _ = write!(out, "{pad}to {}", name(to.id.as_str()));
    if to.name != to.id.as_str() {
        let _ = write!(out, " {}", quote(&to.name));
    }
    out.push_str(" {\n");
    let _ = writeln!(out, "{inner}dur {};", to.duration);
    if to.policy != InstancePolicy::Allow {
        let _ = writeln!(out, "{inner}policy {};", to.policy.name());
    }
    for (var, value) in &to.vars {
        match value {
            VarValue::Unknown => {
                let _ = writeln!(out, "{inner}var {var};");
            }
            v => {
                let _ = writeln!(out, "{inner}var {var} = {v};");
            }
        }
    }
    if to.process.name != "silence" || !to.process.params.is_empty() {
        let _ = write!(out, "{inner}process {}", to.process.name);
        for (k, v) in &to.process.params {
            let _ = write!(out, " param {k}={v}");
        }
        out.push_str(";\n");
    }
    for (role, pid) in [("start", &to.start), ("end", &to.end)] {
        if let Some(p) = s.point(pid.as_str()) {
            if p.wait != WaitBehavior::WaitFirst || p.send != SendBehavior::NoChoice {
                let wait = if p.wait == WaitBehavior::WaitAll { "wa" } else { "wf" };
                let send = if p.send == SendBehavior::Choice { "ch" } else { "nch" };
                let _ = writeln!(out, "{inner}point {role} {wait} {send};");
            }
        }
    }
    if !to.constraint.is_constant_true() {
        let _ = writeln!(out, "{inner}constraint {};", to.constraint);
    }
    for child in &to.children {
        if let Some(c) = s.object(child.as_str()) {
            print_object(s, c, depth + 1, out);
        }
    }
    let owned = |p: &PointId| s.point(p.as_str()).map(|spec| &spec.owner) == Some(&to.id);
    for r in s.relations.values().filter(|r| owned(&r.from) || orphan_source(s, &r.from, &to.id)) {
        let interp = match r.interpretation {
            Interpretation::When => "when",
            Interpretation::Unless => "unless",
        };
        let eval = match r.evaluation {
            Evaluation::Now => "now",
            Evaluation::Wait => "wait",
        };
        let _ = writeln!(
            out,
            "{inner}relation {}: {} -> {} {interp} {} dur {} {eval};",
            name(r.id.as_str()),
            point_ref(s, &r.from),
            point_ref(s, &r.to),
            r.condition,
            r.duration,
        );
    }
    let _ = writeln!(out, "{pad}}}");
}

/// Relations whose source point is undefined are printed in the root block.
fn orphan_source(s: &Score, from: &PointId, current: &ToId) -> bool {
    current == &s.root && s.point(from.as_str()).is_none()
}
