//! Evidence queries: positive relational algebra (select, project, join,
//! union) over the named relations of a database, optionally complemented
//! once at the top. The result of a Boolean evidence query is the ws-set
//! of the worlds where it holds.
//!
//! Queries are written as s-expressions, e.g. the functional dependency
//! `SSN -> NAME` as a complemented self-join:
//!
//! ```text
//! (complement (project ()
//!   (join (rel R) (rel R)
//!     (and (= 1.SSN 2.SSN) (!= 1.NAME 2.NAME)))))
//! ```

use std::collections::HashMap;

use crate::budget::Caps;
use crate::error::{Error, Result};
use crate::model::WsSet;
use crate::urel::{ProbabilisticDatabase, URelation, Value};
use crate::wsops;

/// Comparison operators usable in data predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Col(String),
    Lit(Value),
}

/// Predicate over the data columns of a row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pred {
    True,
    False,
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
    Not(Box<Pred>),
    Cmp(Operand, CmpOp, Operand),
}

impl Pred {
    pub fn eval(&self, columns: &HashMap<&str, usize>, row: &[Value]) -> Result<bool> {
        match self {
            Pred::True => Ok(true),
            Pred::False => Ok(false),
            Pred::And(a, b) => Ok(a.eval(columns, row)? && b.eval(columns, row)?),
            Pred::Or(a, b) => Ok(a.eval(columns, row)? || b.eval(columns, row)?),
            Pred::Not(p) => Ok(!p.eval(columns, row)?),
            Pred::Cmp(lhs, op, rhs) => {
                let left = resolve(lhs, columns, row)?;
                let right = resolve(rhs, columns, row)?;
                let ord = left.compare(right)?;
                Ok(match op {
                    CmpOp::Eq => ord.is_eq(),
                    CmpOp::Ne => ord.is_ne(),
                    CmpOp::Lt => ord.is_lt(),
                    CmpOp::Le => ord.is_le(),
                    CmpOp::Gt => ord.is_gt(),
                    CmpOp::Ge => ord.is_ge(),
                })
            }
        }
    }
}

fn resolve<'a>(
    op: &'a Operand,
    columns: &HashMap<&str, usize>,
    row: &'a [Value],
) -> Result<&'a Value> {
    match op {
        Operand::Lit(v) => Ok(v),
        Operand::Col(name) => {
            let i = columns
                .get(name.as_str())
                .ok_or_else(|| Error::UnknownColumn { name: name.clone() })?;
            Ok(&row[*i])
        }
    }
}

/// Positive relational algebra expression.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryExpr {
    Rel(String),
    Select(Box<QueryExpr>, Pred),
    Project(Box<QueryExpr>, Vec<String>),
    /// Join; output columns carry the fixed prefixes `1.` and `2.`.
    Join(Box<QueryExpr>, Box<QueryExpr>, Pred),
    Union(Box<QueryExpr>, Box<QueryExpr>),
}

impl QueryExpr {
    pub fn eval(&self, db: &ProbabilisticDatabase) -> Result<URelation> {
        match self {
            QueryExpr::Rel(name) => Ok(db.relation(name)?.clone()),
            QueryExpr::Select(e, pred) => e.eval(db)?.select(pred),
            QueryExpr::Project(e, cols) => {
                let rel = e.eval(db)?;
                let names: Vec<&str> = cols.iter().map(|c| c.as_str()).collect();
                rel.project(&names)
            }
            QueryExpr::Join(l, r, pred) => l.eval(db)?.join(&r.eval(db)?, "1.", "2.", pred),
            QueryExpr::Union(l, r) => l.eval(db)?.union(&r.eval(db)?),
        }
    }
}

/// A Boolean evidence query: a positive expression, optionally complemented
/// once at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceQuery {
    pub complement: bool,
    pub expr: QueryExpr,
}

impl EvidenceQuery {
    pub fn positive(expr: QueryExpr) -> EvidenceQuery {
        EvidenceQuery {
            complement: false,
            expr,
        }
    }

    pub fn complemented(expr: QueryExpr) -> EvidenceQuery {
        EvidenceQuery {
            complement: true,
            expr,
        }
    }
}

/// Evaluate an evidence query to the ws-set of the worlds where it holds.
/// The complement is taken against the full world-set `{∅}`. An
/// unsatisfiable query yields the empty ws-set (rejected only later, by
/// conditioning).
pub fn evidence_wsset(
    db: &ProbabilisticDatabase,
    query: &EvidenceQuery,
    caps: &Caps,
) -> Result<WsSet> {
    let relation = query.expr.eval(db)?;
    let positive = relation.wsset();
    if query.complement {
        wsops::diff(&WsSet::universal(), &positive, db.world(), caps)
    } else {
        Ok(positive)
    }
}

// ---------------------------------------------------------------------------
// s-expression parser

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String),
    Quoted(String),
    List(Vec<Sexp>),
}

fn tokenize(text: &str) -> Result<Vec<Sexp>> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' => stack.push(Vec::new()),
            ')' => {
                let list = stack
                    .pop()
                    .ok_or_else(|| Error::Parse("unbalanced )".into()))?;
                let parent = stack
                    .last_mut()
                    .ok_or_else(|| Error::Parse("unbalanced )".into()))?;
                parent.push(Sexp::List(list));
            }
            '"' => {
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some(ch) => s.push(ch),
                        None => return Err(Error::Parse("unterminated string literal".into())),
                    }
                }
                stack.last_mut().unwrap().push(Sexp::Quoted(s));
            }
            ';' => {
                // comment to end of line
                for ch in chars.by_ref() {
                    if ch == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {}
            c => {
                let mut s = String::new();
                s.push(c);
                while let Some(&ch) = chars.peek() {
                    if ch.is_whitespace() || ch == '(' || ch == ')' || ch == '"' || ch == ';' {
                        break;
                    }
                    s.push(ch);
                    chars.next();
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
        }
    }
    if stack.len() != 1 {
        return Err(Error::Parse("unbalanced (".into()));
    }
    Ok(stack.pop().unwrap())
}

fn expect_atom(sexp: &Sexp) -> Result<&str> {
    match sexp {
        Sexp::Atom(s) => Ok(s),
        other => Err(Error::Parse(format!("expected a name, got {other:?}"))),
    }
}

fn parse_operand(sexp: &Sexp) -> Result<Operand> {
    match sexp {
        Sexp::Quoted(s) => Ok(Operand::Lit(Value::Str(s.clone()))),
        Sexp::Atom(s) => match s.parse::<i64>() {
            Ok(n) => Ok(Operand::Lit(Value::Int(n))),
            Err(_) => Ok(Operand::Col(s.clone())),
        },
        Sexp::List(_) => Err(Error::Parse("operand cannot be a list".into())),
    }
}

fn parse_pred(sexp: &Sexp) -> Result<Pred> {
    match sexp {
        Sexp::Atom(s) if s == "true" => Ok(Pred::True),
        Sexp::Atom(s) if s == "false" => Ok(Pred::False),
        Sexp::List(items) => {
            let head = expect_atom(
                items
                    .first()
                    .ok_or_else(|| Error::Parse("empty predicate".into()))?,
            )?;
            let args = &items[1..];
            let two = |args: &[Sexp]| -> Result<(Pred, Pred)> {
                if args.len() != 2 {
                    return Err(Error::Parse(format!("{head} takes two arguments")));
                }
                Ok((parse_pred(&args[0])?, parse_pred(&args[1])?))
            };
            match head {
                "and" => {
                    let (a, b) = two(args)?;
                    Ok(Pred::And(Box::new(a), Box::new(b)))
                }
                "or" => {
                    let (a, b) = two(args)?;
                    Ok(Pred::Or(Box::new(a), Box::new(b)))
                }
                "not" => {
                    if args.len() != 1 {
                        return Err(Error::Parse("not takes one argument".into()));
                    }
                    Ok(Pred::Not(Box::new(parse_pred(&args[0])?)))
                }
                "=" | "!=" | "<" | "<=" | ">" | ">=" => {
                    if args.len() != 2 {
                        return Err(Error::Parse(format!("{head} takes two operands")));
                    }
                    let op = match head {
                        "=" => CmpOp::Eq,
                        "!=" => CmpOp::Ne,
                        "<" => CmpOp::Lt,
                        "<=" => CmpOp::Le,
                        ">" => CmpOp::Gt,
                        _ => CmpOp::Ge,
                    };
                    Ok(Pred::Cmp(
                        parse_operand(&args[0])?,
                        op,
                        parse_operand(&args[1])?,
                    ))
                }
                other => Err(Error::Parse(format!("unknown predicate {other:?}"))),
            }
        }
        other => Err(Error::Parse(format!("bad predicate {other:?}"))),
    }
}

fn parse_expr(sexp: &Sexp) -> Result<QueryExpr> {
    let Sexp::List(items) = sexp else {
        return Err(Error::Parse(format!("expected (…), got {sexp:?}")));
    };
    let head = expect_atom(
        items
            .first()
            .ok_or_else(|| Error::Parse("empty expression".into()))?,
    )?;
    let args = &items[1..];
    match head {
        "rel" => {
            if args.len() != 1 {
                return Err(Error::Parse("rel takes one relation name".into()));
            }
            Ok(QueryExpr::Rel(expect_atom(&args[0])?.to_string()))
        }
        "select" => {
            if args.len() != 2 {
                return Err(Error::Parse("select takes (select <pred> <expr>)".into()));
            }
            Ok(QueryExpr::Select(
                Box::new(parse_expr(&args[1])?),
                parse_pred(&args[0])?,
            ))
        }
        "project" => {
            if args.len() != 2 {
                return Err(Error::Parse(
                    "project takes (project (<col>…) <expr>)".into(),
                ));
            }
            let Sexp::List(cols) = &args[0] else {
                return Err(Error::Parse("project column list must be (…)".into()));
            };
            let names: Result<Vec<String>> = cols
                .iter()
                .map(|c| expect_atom(c).map(str::to_string))
                .collect();
            Ok(QueryExpr::Project(Box::new(parse_expr(&args[1])?), names?))
        }
        "join" => {
            if args.len() != 3 {
                return Err(Error::Parse(
                    "join takes (join <expr> <expr> <pred>)".into(),
                ));
            }
            Ok(QueryExpr::Join(
                Box::new(parse_expr(&args[0])?),
                Box::new(parse_expr(&args[1])?),
                parse_pred(&args[2])?,
            ))
        }
        "union" => {
            if args.len() != 2 {
                return Err(Error::Parse("union takes two expressions".into()));
            }
            Ok(QueryExpr::Union(
                Box::new(parse_expr(&args[0])?),
                Box::new(parse_expr(&args[1])?),
            ))
        }
        other => Err(Error::Parse(format!("unknown operator {other:?}"))),
    }
}

/// Parse an evidence query file. `complement` is only allowed at the top.
pub fn parse_evidence_query(text: &str) -> Result<EvidenceQuery> {
    let top = tokenize(text)?;
    if top.len() != 1 {
        return Err(Error::Parse(format!(
            "expected exactly one query expression, found {}",
            top.len()
        )));
    }
    if let Sexp::List(items) = &top[0] {
        if items.first().and_then(|s| expect_atom(s).ok()) == Some("complement") {
            if items.len() != 2 {
                return Err(Error::Parse("complement takes one expression".into()));
            }
            return Ok(EvidenceQuery::complemented(parse_expr(&items[1])?));
        }
    }
    Ok(EvidenceQuery::positive(parse_expr(&top[0])?))
}
