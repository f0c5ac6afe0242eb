use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{tokenize, Tok, Token};
use super::{ParseError, SourceSpan};
use crate::model::{
    CmpOp, Condition, DateSet, Duration, Evaluation, InstancePolicy, Interpretation, Literal, PointId,
    PointRole, PointSpec, ProcessRef, Score, SendBehavior, Tcr, TcrId, TemporalObject, ToId, VarValue,
    WaitBehavior,
};

#[derive(Debug)]
enum PointRef {
    Own(PointRole),
    Qualified(String, PointRole),
}

#[derive(Debug)]
struct RelDecl {
    id: Option<String>,
    from: PointRef,
    to: PointRef,
    condition: Condition,
    interpretation: Interpretation,
    duration: Duration,
    evaluation: Evaluation,
    span: SourceSpan,
}

#[derive(Debug)]
struct ToDecl {
    id: String,
    span: SourceSpan,
    label: Option<String>,
    duration: Duration,
    policy: InstancePolicy,
    vars: BTreeMap<String, VarValue>,
    process: ProcessRef,
    points: BTreeMap<&'static str, (WaitBehavior, SendBehavior)>,
    constraint: Condition,
    children: Vec<ToDecl>,
    relations: Vec<RelDecl>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

fn role_key(role: PointRole) -> &'static str {
    match role {
        PointRole::Start => "start",
        PointRole::End => "end",
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span.clone()
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(ParseError { span: t.span.clone(), expected: expected.into(), found: t.tok.describe() })
    }

    fn expect(&mut self, tok: Tok) -> PResult<Token> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            self.error(format!("`{}`", tok.describe()))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.error(format!("`{kw}`"))
        }
    }

    fn one_of(&mut self, options: &[&'static str]) -> PResult<&'static str> {
        for o in options {
            if self.eat_kw(o) {
                return Ok(o);
            }
        }
        let list: Vec<String> = options.iter().map(|o| format!("`{o}`")).collect();
        self.error(list.join(" or "))
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error("identifier"),
        }
    }

    /// Identifier or quoted string.
    fn name(&mut self) -> PResult<(String, SourceSpan)> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(s) | Tok::Str(s) => {
                self.bump();
                Ok((s, span))
            }
            _ => self.error("name"),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        let neg = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match *self.peek() {
            Tok::Int(n) => {
                self.bump();
                Ok(if neg { -n } else { n })
            }
            _ => self.error("integer"),
        }
    }

    fn ticks(&mut self) -> PResult<u64> {
        match *self.peek() {
            Tok::Int(n) => {
                self.bump();
                Ok(n as u64)
            }
            _ => self.error("non-negative integer"),
        }
    }

    fn duration(&mut self) -> PResult<Duration> {
        if let Tok::Int(_) = self.peek() {
            return Ok(Duration::exactly(self.ticks()?));
        }
        Ok(match self.one_of(&["flexible", "semirigid", "rigid", "random"])? {
            "flexible" => Duration::flexible(),
            "semirigid" => Duration::semi_rigid(self.ticks()?),
            "rigid" => {
                let lo = self.ticks()?;
                Duration::rigid(lo, self.ticks()?)
            }
            _ => {
                let lo = self.ticks()?;
                Duration::random(lo, self.ticks()?)
            }
        })
    }

    fn literal(&mut self) -> PResult<Literal> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(Literal::Str(s))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Literal::Bool(s == "true"))
            }
            Tok::Int(_) | Tok::Minus => Ok(Literal::Int(self.int()?)),
            _ => self.error("literal"),
        }
    }

    fn expr(&mut self) -> PResult<Condition> {
        let mut lhs = self.and_expr()?;
        while self.eat_kw("or") {
            lhs = Condition::or(lhs, self.and_expr()?);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Condition> {
        let mut lhs = self.not_expr()?;
        while self.eat_kw("and") {
            lhs = Condition::and(lhs, self.not_expr()?);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Condition> {
        if self.eat_kw("not") {
            return Ok(Condition::negate(self.not_expr()?));
        }
        let lhs = self.atom()?;
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        Ok(Condition::cmp(op, lhs, self.atom()?))
    }

    fn atom(&mut self) -> PResult<Condition> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Int(_) | Tok::Minus => Ok(Condition::Int(self.int()?)),
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Condition::Bool(s == "true"))
            }
            Tok::Ident(s) if !matches!(s.as_str(), "and" | "or" | "not" | "dur") => {
                self.bump();
                Ok(Condition::Var(s))
            }
            _ => self.error("expression"),
        }
    }

    fn point_ref(&mut self) -> PResult<PointRef> {
        if matches!(self.peek_at(1), Tok::Dot) {
            let (obj, _) = self.name()?;
            self.expect(Tok::Dot)?;
            let role = self.role()?;
            return Ok(PointRef::Qualified(obj, role));
        }
        Ok(PointRef::Own(self.role()?))
    }

    fn role(&mut self) -> PResult<PointRole> {
        Ok(match self.one_of(&["start", "end"])? {
            "start" => PointRole::Start,
            _ => PointRole::End,
        })
    }

    fn relation(&mut self) -> PResult<RelDecl> {
        let span = self.span();
        let id = match (self.peek(), self.peek_at(1)) {
            (Tok::Ident(_) | Tok::Str(_), Tok::Colon) => {
                let (id, _) = self.name()?;
                self.bump();
                Some(id)
            }
            _ => None,
        };
        let from = self.point_ref()?;
        self.expect(Tok::Arrow)?;
        let to = self.point_ref()?;
        let interpretation = match self.one_of(&["when", "unless"])? {
            "when" => Interpretation::When,
            _ => Interpretation::Unless,
        };
        let condition = self.expr()?;
        self.expect_kw("dur")?;
        let duration = self.duration()?;
        let evaluation = match self.one_of(&["now", "wait"])? {
            "now" => Evaluation::Now,
            _ => Evaluation::Wait,
        };
        self.expect(Tok::Semi)?;
        Ok(RelDecl { id, from, to, condition, interpretation, duration, evaluation, span })
    }

    fn object(&mut self) -> PResult<ToDecl> {
        self.expect_kw("to")?;
        let (id, span) = self.name()?;
        let label = match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Some(s)
            }
            _ => None,
        };
        self.expect(Tok::LBrace)?;
        let mut decl = ToDecl {
            id,
            span,
            label,
            duration: Duration::flexible(),
            policy: InstancePolicy::Allow,
            vars: BTreeMap::new(),
            process: ProcessRef::silence(),
            points: BTreeMap::new(),
            constraint: Condition::truth(),
            children: Vec::new(),
            relations: Vec::new(),
        };
        loop {
            if *self.peek() == Tok::RBrace {
                self.bump();
                return Ok(decl);
            }
            if *self.peek() == Tok::Eof {
                return self.error("`}`");
            }
            let kw = self.one_of(&[
                "to", "dur", "policy", "var", "process", "point", "constraint", "relation",
            ]);
            match kw? {
                "to" => {
                    self.pos -= 1;
                    decl.children.push(self.object()?);
                    continue;
                }
                "dur" => decl.duration = self.duration()?,
                "policy" => {
                    let names: Vec<&'static str> = InstancePolicy::ALL.iter().map(|p| p.name()).collect();
                    decl.policy = InstancePolicy::from_name(self.one_of(&names)?).unwrap();
                }
                "var" => {
                    let name = self.ident()?;
                    let value = if *self.peek() == Tok::Eq {
                        self.bump();
                        match self.literal()? {
                            Literal::Bool(b) => VarValue::Bool(b),
                            Literal::Int(n) => VarValue::Int(n),
                            Literal::Str(_) => return self.error("boolean or integer"),
                        }
                    } else {
                        VarValue::Unknown
                    };
                    decl.vars.insert(name, value);
                }
                "process" => {
                    let mut p = ProcessRef::named(self.ident()?);
                    while self.eat_kw("param") {
                        let key = self.ident()?;
                        self.expect(Tok::Eq)?;
                        p.params.insert(key, self.literal()?);
                    }
                    decl.process = p;
                }
                "point" => {
                    let role = self.role()?;
                    let wait = match self.one_of(&["wa", "wf"])? {
                        "wa" => WaitBehavior::WaitAll,
                        _ => WaitBehavior::WaitFirst,
                    };
                    let send = match self.one_of(&["nch", "ch"])? {
                        "ch" => SendBehavior::Choice,
                        _ => SendBehavior::NoChoice,
                    };
                    decl.points.insert(role_key(role), (wait, send));
                }
                "constraint" => decl.constraint = self.expr()?,
                _ => {
                    decl.relations.push(self.relation()?);
                    continue;
                }
            }
            self.expect(Tok::Semi)?;
        }
    }
}

fn point_id(object: &str, role: PointRole) -> PointId {
    PointId(format!("{object}.{}", role_key(role)))
}

/// Parses the text form of a score.
pub fn parse_text(src: &str) -> Result<Score, Vec<ParseError>> {
    parse_named("<input>", src)
}

/// Like [`parse_text`], with `file` recorded in error spans.
pub fn parse_named(file: &str, src: &str) -> Result<Score, Vec<ParseError>> {
    let toks = tokenize(file, src).map_err(|e| vec![e])?;
    let mut p = Parser { toks, pos: 0 };
    let mut roots = Vec::new();
    loop {
        if *p.peek() == Tok::Eof {
            if roots.is_empty() {
                return Err(vec![p.error::<()>("`to`").unwrap_err()]);
            }
            break;
        }
        roots.push(p.object().map_err(|e| vec![e])?);
    }
    resolve(roots)
}

fn resolve(roots: Vec<ToDecl>) -> Result<Score, Vec<ParseError>> {
    let mut errors = Vec::new();
    if roots.len() > 1 {
        errors.push(ParseError {
            span: roots[1].span.clone(),
            expected: "a single root object".into(),
            found: format!("second top-level object `{}`", roots[1].id),
        });
    }
    let root_id = ToId(roots[0].id.clone());

    // flatten, remembering which object declared which relation
    let mut flat: Vec<(&ToDecl, Option<&str>)> = Vec::new();
    fn walk<'a>(d: &'a ToDecl, parent: Option<&'a str>, out: &mut Vec<(&'a ToDecl, Option<&'a str>)>) {
        out.push((d, parent));
        for c in &d.children {
            walk(c, Some(&d.id), out);
        }
    }
    for r in &roots {
        walk(r, None, &mut flat);
    }

    let mut objects = BTreeMap::new();
    let mut points = BTreeMap::new();
    for (d, _) in &flat {
        let id = ToId(d.id.clone());
        if objects.contains_key(&id) {
            errors.push(ParseError {
                span: d.span.clone(),
                expected: "unique object id".into(),
                found: format!("duplicate `{}`", d.id),
            });
            continue;
        }
        for role in [PointRole::Start, PointRole::End] {
            let (wait, send) = d.points.get(role_key(role)).copied().unwrap_or_default();
            let pid = point_id(&d.id, role);
            points.insert(
                pid.clone(),
                PointSpec { id: pid, dates: DateSet::Any, wait, send, owner: id.clone(), role },
            );
        }
        objects.insert(
            id.clone(),
            TemporalObject {
                id: id.clone(),
                name: d.label.clone().unwrap_or_else(|| d.id.clone()),
                start: point_id(&d.id, PointRole::Start),
                end: point_id(&d.id, PointRole::End),
                constraint: d.constraint.clone(),
                duration: d.duration,
                process: d.process.clone(),
                children: d.children.iter().map(|c| ToId(c.id.clone())).collect(),
                vars: d.vars.clone(),
                policy: d.policy,
            },
        );
    }

    let mut relations: BTreeMap<TcrId, Tcr> = BTreeMap::new();
    let explicit: BTreeSet<&str> = flat
        .iter()
        .flat_map(|(d, _)| d.relations.iter().filter_map(|r| r.id.as_deref()))
        .collect();
    for (d, _) in &flat {
        for r in &d.relations {
            let resolve_ref = |pr: &PointRef| -> Result<PointId, ParseError> {
                match pr {
                    PointRef::Own(role) => Ok(point_id(&d.id, *role)),
                    PointRef::Qualified(obj, role) => {
                        if objects.contains_key(obj.as_str()) {
                            Ok(point_id(obj, *role))
                        } else {
                            Err(ParseError {
                                span: r.span.clone(),
                                expected: "defined object".into(),
                                found: format!("unknown object `{obj}`"),
                            })
                        }
                    }
                }
            };
            let (from, to) = match (resolve_ref(&r.from), resolve_ref(&r.to)) {
                (Ok(a), Ok(b)) => (a, b),
                (a, b) => {
                    errors.extend(a.err());
                    errors.extend(b.err());
                    continue;
                }
            };
            let id = match &r.id {
                Some(id) => {
                    if relations.contains_key(id.as_str()) {
                        errors.push(ParseError {
                            span: r.span.clone(),
                            expected: "unique relation id".into(),
                            found: format!("duplicate `{id}`"),
                        });
                        continue;
                    }
                    TcrId(id.clone())
                }
                None => {
                    let base = format!("{from}->{to}");
                    let mut candidate = base.clone();
                    let mut n = 1;
                    while relations.contains_key(candidate.as_str()) || explicit.contains(candidate.as_str()) {
                        n += 1;
                        candidate = format!("{base}#{n}");
                    }
                    TcrId(candidate)
                }
            };
            relations.insert(
                id.clone(),
                Tcr {
                    id,
                    from,
                    to,
                    condition: r.condition.clone(),
                    duration: r.duration,
                    interpretation: r.interpretation,
                    evaluation: r.evaluation,
                },
            );
        }
    }

    if errors.is_empty() {
        Ok(Score { root: root_id, objects, points, relations })
    } else {
        Err(errors)
    }
}

/// Parses a standalone condition expression.
pub fn parse_condition(src: &str) -> Result<Condition, ParseError> {
    let toks = tokenize("<condition>", src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.error("end of expression");
    }
    Ok(e)
}
