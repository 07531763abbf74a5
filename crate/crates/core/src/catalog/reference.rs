//! Brute-force evaluator for the same SQL subset.
//!
//! It shares only the syntax tree and [`Value`] comparison rules with the real
//! executor. Rows are lists of named cells looked up by linear scan, groups and
//! duplicates are found by pairwise comparison, and nothing is hashed or
//! pre-bound. It is quadratic and meant for cross-checking, not for serving.

use super::schema;
use super::{Catalog, ExecError, ResultRelation, Value};
use crate::parser::{render_expr, Expr, Query, Select, SelectItem, SetExpr, SetOperator, TableRef};

#[derive(Clone)]
struct Cell {
    names: Vec<String>,
    value: Value,
}

type Row = Vec<Cell>;

struct Table {
    header: Vec<Vec<String>>,
    rows: Vec<Row>,
}

fn find(row: &Row, name: &str) -> Option<usize> {
    row.iter()
        .position(|c| c.names.iter().any(|n| n.eq_ignore_ascii_case(name)))
}

fn find_in_header(header: &[Vec<String>], name: &str) -> Option<usize> {
    header
        .iter()
        .position(|names| names.iter().any(|n| n.eq_ignore_ascii_case(name)))
}

fn contains_row(rows: &[Vec<Value>], row: &[Value]) -> bool {
    rows.iter()
        .any(|r| r.len() == row.len() && r.iter().zip(row).all(|(a, b)| a.same(b)))
}

/// Evaluate `query` against `catalog` by direct interpretation.
pub fn evaluate(catalog: &Catalog, query: &Query) -> Result<ResultRelation, ExecError> {
    let t = eval_query(catalog, query)?;
    Ok(ResultRelation {
        column_names: t.header.into_iter().map(|mut n| n.swap_remove(0)).collect(),
        rows: t
            .rows
            .into_iter()
            .map(|r| r.into_iter().map(|c| c.value).collect())
            .collect(),
    })
}

fn eval_query(catalog: &Catalog, query: &Query) -> Result<Table, ExecError> {
    let mut t = eval_set(catalog, &query.body)?;
    if let Some(n) = query.limit {
        while t.rows.len() as u64 > n {
            t.rows.pop();
        }
    }
    Ok(t)
}

fn values(row: &Row) -> Vec<Value> {
    row.iter().map(|c| c.value.clone()).collect()
}

fn eval_set(catalog: &Catalog, expr: &SetExpr) -> Result<Table, ExecError> {
    let (op, left, right) = match expr {
        SetExpr::Select(s) => return eval_select(catalog, s),
        SetExpr::SetOperation { op, left, right } => (op, left, right),
    };
    let l = eval_set(catalog, left)?;
    let r = eval_set(catalog, right)?;
    if l.header.len() != r.header.len() {
        return Err(ExecError::ColumnCountMismatch {
            left: l.header.len(),
            right: r.header.len(),
        });
    }
    let right_values: Vec<Vec<Value>> = r.rows.iter().map(values).collect();
    let mut out_values: Vec<Vec<Value>> = Vec::new();
    let mut out: Vec<Row> = Vec::new();
    let candidates = match op {
        SetOperator::Union => l.rows.iter().chain(r.rows.iter()).collect::<Vec<_>>(),
        _ => l.rows.iter().collect(),
    };
    for row in candidates {
        let v = values(row);
        let in_right = contains_row(&right_values, &v);
        let wanted = match op {
            SetOperator::Union => true,
            SetOperator::Intersect => in_right,
            SetOperator::Except => !in_right,
        };
        if wanted && !contains_row(&out_values, &v) {
            out_values.push(v);
            out.push(row.clone());
        }
    }
    // output takes the left operand's column names
    let header = l.header;
    let rows = out
        .into_iter()
        .map(|row| {
            row.into_iter()
                .zip(&header)
                .map(|(c, names)| Cell {
                    names: names.clone(),
                    value: c.value,
                })
                .collect()
        })
        .collect();
    Ok(Table { header, rows })
}

fn load_table(catalog: &Catalog, from: &TableRef) -> Result<Table, ExecError> {
    match from {
        TableRef::Subquery { query, .. } => eval_query(catalog, query),
        TableRef::Table { name, .. } => {
            let def = schema::TABLES
                .iter()
                .find(|t| t.matches(name))
                .ok_or_else(|| ExecError::UnknownTable(name.clone()))?;
            let header: Vec<Vec<String>> = def
                .columns
                .iter()
                .map(|c| {
                    let mut names = vec![c.name.to_string()];
                    names.extend(c.aliases.iter().map(|a| a.to_string()));
                    names
                })
                .collect();
            let rows = catalog
                .table_rows(def)
                .into_iter()
                .map(|vals| {
                    vals.into_iter()
                        .zip(&header)
                        .map(|(value, names)| Cell {
                            names: names.clone(),
                            value,
                        })
                        .collect()
                })
                .collect();
            Ok(Table { header, rows })
        }
    }
}

fn as_truth(v: &Value) -> Result<Option<bool>, ExecError> {
    match v {
        Value::Bool(b) => Ok(Some(*b)),
        Value::Null => Ok(None),
        other => Err(ExecError::Type(format!("expected a boolean, got {}", other.type_name()))),
    }
}

fn from_truth(t: Option<bool>) -> Value {
    match t {
        Some(b) => Value::Bool(b),
        None => Value::Null,
    }
}

/// Scalar context: a single input row.
fn eval_row_expr(expr: &Expr, row: &Row) -> Result<Value, ExecError> {
    match expr {
        Expr::Column(name) => match find(row, name) {
            Some(i) => Ok(row[i].value.clone()),
            None => Err(ExecError::UnknownColumn(name.clone())),
        },
        Expr::Literal(l) => Ok(Value::from(l)),
        Expr::CountStar => Err(ExecError::MisplacedAggregate("WHERE")),
        Expr::Compare { op, left, right } => {
            let a = eval_row_expr(left, row)?;
            let b = eval_row_expr(right, row)?;
            Value::apply(*op, &a, &b).map_err(ExecError::Type)
        }
        Expr::And(l, r) => {
            let a = as_truth(&eval_row_expr(l, row)?)?;
            let b = as_truth(&eval_row_expr(r, row)?)?;
            Ok(from_truth(kleene_and(a, b)))
        }
        Expr::Or(l, r) => {
            let a = as_truth(&eval_row_expr(l, row)?)?;
            let b = as_truth(&eval_row_expr(r, row)?)?;
            Ok(from_truth(kleene_or(a, b)))
        }
        Expr::Not(e) => Ok(from_truth(as_truth(&eval_row_expr(e, row)?)?.map(|b| !b))),
    }
}

fn kleene_and(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    if a == Some(false) || b == Some(false) {
        Some(false)
    } else if a.is_none() || b.is_none() {
        None
    } else {
        Some(true)
    }
}

fn kleene_or(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    if a == Some(true) || b == Some(true) {
        Some(true)
    } else if a.is_none() || b.is_none() {
        None
    } else {
        Some(false)
    }
}

struct Group {
    members: Vec<Row>,
    key: Vec<Value>,
}

/// Group context: columns must be grouping columns; aliases apply in HAVING.
fn eval_group_expr(
    expr: &Expr,
    group: &Group,
    header: &[Vec<String>],
    group_cols: &[usize],
    aliases: &[(String, Value)],
) -> Result<Value, ExecError> {
    let rec = |e: &Expr| eval_group_expr(e, group, header, group_cols, aliases);
    match expr {
        Expr::Column(name) => {
            for (alias, v) in aliases {
                if alias.eq_ignore_ascii_case(name) {
                    return Ok(v.clone());
                }
            }
            let col = find_in_header(header, name).ok_or_else(|| ExecError::UnknownColumn(name.clone()))?;
            for (k, gc) in group_cols.iter().enumerate() {
                if *gc == col {
                    return Ok(group.key[k].clone());
                }
            }
            Err(ExecError::NotGrouped(name.clone()))
        }
        Expr::Literal(l) => Ok(Value::from(l)),
        Expr::CountStar => Ok(Value::Int(group.members.len() as i64)),
        Expr::Compare { op, left, right } => {
            let a = rec(left)?;
            let b = rec(right)?;
            Value::apply(*op, &a, &b).map_err(ExecError::Type)
        }
        Expr::And(l, r) => Ok(from_truth(kleene_and(as_truth(&rec(l)?)?, as_truth(&rec(r)?)?))),
        Expr::Or(l, r) => Ok(from_truth(kleene_or(as_truth(&rec(l)?)?, as_truth(&rec(r)?)?))),
        Expr::Not(e) => Ok(from_truth(as_truth(&rec(e)?)?.map(|b| !b))),
    }
}

fn has_count(e: &Expr) -> bool {
    match e {
        Expr::CountStar => true,
        Expr::Compare { left, right, .. } => has_count(left) || has_count(right),
        Expr::And(a, b) | Expr::Or(a, b) => has_count(a) || has_count(b),
        Expr::Not(a) => has_count(a),
        _ => false,
    }
}

fn column_label(expr: &Expr, alias: &Option<String>) -> String {
    if let Some(a) = alias {
        return a.clone();
    }
    if let Expr::Column(n) = expr {
        return n.clone();
    }
    render_expr(expr)
}

fn eval_select(catalog: &Catalog, select: &Select) -> Result<Table, ExecError> {
    let input = load_table(catalog, &select.from)?;

    let mut kept: Vec<Row> = Vec::new();
    for row in &input.rows {
        let keep = match &select.selection {
            None => true,
            Some(w) => as_truth(&eval_row_expr(w, row)?)? == Some(true),
        };
        if keep {
            kept.push(row.clone());
        }
    }

    let grouped = !select.group_by.is_empty()
        || select.having.is_some()
        || select.projection.iter().any(|p| matches!(p, SelectItem::Expr { expr, .. } if has_count(expr)));

    let mut header: Vec<Vec<String>> = Vec::new();
    let mut out: Vec<Vec<Value>> = Vec::new();

    if !grouped {
        for item in &select.projection {
            match item {
                SelectItem::Wildcard => header.extend(input.header.iter().cloned()),
                SelectItem::Expr { expr, alias } => header.push(vec![column_label(expr, alias)]),
            }
        }
        for row in &kept {
            let mut vals = Vec::new();
            for item in &select.projection {
                match item {
                    SelectItem::Wildcard => vals.extend(values(row)),
                    SelectItem::Expr { expr, .. } => vals.push(eval_row_expr(expr, row)?),
                }
            }
            out.push(vals);
        }
    } else {
        let mut group_cols = Vec::new();
        for g in &select.group_by {
            group_cols.push(
                find_in_header(&input.header, g).ok_or_else(|| ExecError::UnknownColumn(g.clone()))?,
            );
        }
        let mut groups: Vec<Group> = Vec::new();
        if group_cols.is_empty() {
            groups.push(Group {
                members: kept.clone(),
                key: vec![],
            });
        } else {
            for row in &kept {
                let key: Vec<Value> = group_cols.iter().map(|&c| row[c].value.clone()).collect();
                match groups
                    .iter_mut()
                    .find(|g| g.key.iter().zip(&key).all(|(a, b)| a.same(b)))
                {
                    Some(g) => g.members.push(row.clone()),
                    None => groups.push(Group {
                        members: vec![row.clone()],
                        key,
                    }),
                }
            }
        }
        for item in &select.projection {
            match item {
                SelectItem::Wildcard => return Err(ExecError::NotGrouped("*".into())),
                SelectItem::Expr { expr, alias } => header.push(vec![column_label(expr, alias)]),
            }
        }
        for group in &groups {
            let mut vals = Vec::new();
            let mut aliases = Vec::new();
            for item in &select.projection {
                if let SelectItem::Expr { expr, alias } = item {
                    let v = eval_group_expr(expr, group, &input.header, &group_cols, &[])?;
                    if let Some(a) = alias {
                        aliases.push((a.clone(), v.clone()));
                    }
                    vals.push(v);
                }
            }
            if let Some(h) = &select.having {
                let t = eval_group_expr(h, group, &input.header, &group_cols, &aliases)?;
                if as_truth(&t)? != Some(true) {
                    continue;
                }
            }
            out.push(vals);
        }
    }

    if select.distinct {
        let mut unique: Vec<Vec<Value>> = Vec::new();
        for r in out {
            if !contains_row(&unique, &r) {
                unique.push(r);
            }
        }
        out = unique;
    }

    let rows = out
        .into_iter()
        .map(|vals| {
            vals.into_iter()
                .zip(&header)
                .map(|(value, names)| Cell {
                    names: names.clone(),
                    value,
                })
                .collect()
        })
        .collect();
    Ok(Table { header, rows })
}
