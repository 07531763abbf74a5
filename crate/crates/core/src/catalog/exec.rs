//! Relational executor for the supported subset.
//!
//! Column references are resolved to positions once per SELECT before any row
//! is touched, so name errors surface even on empty tables. Grouping,
//! DISTINCT and set operations hash rows by [`KeyValue`].
//!
//! Row order is deterministic: scans follow storage order, groups and DISTINCT
//! keep first occurrence, UNION appends unseen right rows after the left rows,
//! INTERSECT/EXCEPT keep left order. LIMIT cuts that order.

use std::collections::{HashMap, HashSet};

use super::schema::{self, TableDef};
use super::value::{row_key, Value};
use super::{Catalog, ExecError, ResultRelation};
use crate::parser::{render_expr, CompareOp, Expr, Query, Select, SelectItem, SetExpr, SetOperator, TableRef};

struct Column {
    name: String,
    aliases: &'static [&'static str],
}

impl Column {
    fn matches(&self, name: &str) -> bool {
        self.name.eq_ignore_ascii_case(name) || self.aliases.iter().any(|a| a.eq_ignore_ascii_case(name))
    }
}

struct Relation {
    columns: Vec<Column>,
    rows: Vec<Vec<Value>>,
}

impl Relation {
    fn resolve(&self, name: &str) -> Result<usize, ExecError> {
        self.columns
            .iter()
            .position(|c| c.matches(name))
            .ok_or_else(|| ExecError::UnknownColumn(name.to_string()))
    }
}

pub(super) fn execute(catalog: &Catalog, query: &Query) -> Result<ResultRelation, ExecError> {
    let rel = run_query(catalog, query)?;
    Ok(ResultRelation {
        column_names: rel.columns.into_iter().map(|c| c.name).collect(),
        rows: rel.rows,
    })
}

fn run_query(catalog: &Catalog, query: &Query) -> Result<Relation, ExecError> {
    let mut rel = run_set(catalog, &query.body)?;
    if let Some(limit) = query.limit {
        rel.rows.truncate(usize::try_from(limit).unwrap_or(usize::MAX));
    }
    Ok(rel)
}

fn run_set(catalog: &Catalog, expr: &SetExpr) -> Result<Relation, ExecError> {
    match expr {
        SetExpr::Select(select) => run_select(catalog, select),
        SetExpr::SetOperation { op, left, right } => {
            let left = run_set(catalog, left)?;
            let right = run_set(catalog, right)?;
            if left.columns.len() != right.columns.len() {
                return Err(ExecError::ColumnCountMismatch {
                    left: left.columns.len(),
                    right: right.columns.len(),
                });
            }
            let right_keys: HashSet<_> = right.rows.iter().map(|r| row_key(r)).collect();
            let mut seen = HashSet::new();
            let mut rows = Vec::new();
            for row in left.rows {
                let key = row_key(&row);
                let keep = match op {
                    SetOperator::Union => true,
                    SetOperator::Intersect => right_keys.contains(&key),
                    SetOperator::Except => !right_keys.contains(&key),
                };
                if keep && seen.insert(key) {
                    rows.push(row);
                }
            }
            if *op == SetOperator::Union {
                for row in right.rows {
                    if seen.insert(row_key(&row)) {
                        rows.push(row);
                    }
                }
            }
            Ok(Relation {
                columns: left.columns,
                rows,
            })
        }
    }
}

fn scan(catalog: &Catalog, table: &'static TableDef) -> Relation {
    Relation {
        columns: table
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.to_string(),
                aliases: c.aliases,
            })
            .collect(),
        rows: catalog.table_rows(table),
    }
}

/// Expression with columns bound to positions.
enum Bound {
    /// Input column (row context) or group-key slot (group context).
    Slot(usize),
    /// Already-computed projection value, for HAVING on an alias.
    Projected(usize),
    Literal(Value),
    Count,
    Compare(CompareOp, Box<Bound>, Box<Bound>),
    And(Box<Bound>, Box<Bound>),
    Or(Box<Bound>, Box<Bound>),
    Not(Box<Bound>),
}

struct Env<'a> {
    slots: &'a [Value],
    projected: &'a [Value],
    count: i64,
}

fn truth(v: Value) -> Result<Option<bool>, ExecError> {
    match v {
        Value::Bool(b) => Ok(Some(b)),
        Value::Null => Ok(None),
        other => Err(ExecError::Type(format!("expected a boolean, got {}", other.type_name()))),
    }
}

fn tri(v: Option<bool>) -> Value {
    v.map(Value::Bool).unwrap_or(Value::Null)
}

impl Bound {
    fn eval(&self, env: &Env<'_>) -> Result<Value, ExecError> {
        Ok(match self {
            Bound::Slot(i) => env.slots[*i].clone(),
            Bound::Projected(i) => env.projected[*i].clone(),
            Bound::Literal(v) => v.clone(),
            Bound::Count => Value::Int(env.count),
            Bound::Compare(op, l, r) => {
                Value::apply(*op, &l.eval(env)?, &r.eval(env)?).map_err(ExecError::Type)?
            }
            Bound::And(l, r) => {
                let (a, b) = (truth(l.eval(env)?)?, truth(r.eval(env)?)?);
                tri(match (a, b) {
                    (Some(false), _) | (_, Some(false)) => Some(false),
                    (Some(true), Some(true)) => Some(true),
                    _ => None,
                })
            }
            Bound::Or(l, r) => {
                let (a, b) = (truth(l.eval(env)?)?, truth(r.eval(env)?)?);
                tri(match (a, b) {
                    (Some(true), _) | (_, Some(true)) => Some(true),
                    (Some(false), Some(false)) => Some(false),
                    _ => None,
                })
            }
            Bound::Not(e) => tri(truth(e.eval(env)?)?.map(|b| !b)),
        })
    }

    fn holds(&self, env: &Env<'_>) -> Result<bool, ExecError> {
        Ok(truth(self.eval(env)?)? == Some(true))
    }
}

/// Binds expressions over plain input rows (WHERE and non-aggregate SELECT).
fn bind_row(expr: &Expr, input: &Relation, clause: &'static str) -> Result<Bound, ExecError> {
    let rec = |e: &Expr| bind_row(e, input, clause).map(Box::new);
    Ok(match expr {
        Expr::Column(name) => Bound::Slot(input.resolve(name)?),
        Expr::Literal(lit) => Bound::Literal(lit.into()),
        Expr::CountStar => return Err(ExecError::MisplacedAggregate(clause)),
        Expr::Compare { op, left, right } => Bound::Compare(*op, rec(left)?, rec(right)?),
        Expr::And(l, r) => Bound::And(rec(l)?, rec(r)?),
        Expr::Or(l, r) => Bound::Or(rec(l)?, rec(r)?),
        Expr::Not(e) => Bound::Not(rec(e)?),
    })
}

struct GroupScope<'a> {
    input: &'a Relation,
    /// Input column positions of the GROUP BY keys.
    keys: &'a [usize],
    /// Projection aliases visible to HAVING.
    aliases: &'a [Option<String>],
}

fn bind_group(expr: &Expr, scope: &GroupScope<'_>) -> Result<Bound, ExecError> {
    let rec = |e: &Expr| bind_group(e, scope).map(Box::new);
    Ok(match expr {
        Expr::Column(name) => {
            if let Some(i) = scope
                .aliases
                .iter()
                .position(|a| a.as_deref().is_some_and(|a| a.eq_ignore_ascii_case(name)))
            {
                return Ok(Bound::Projected(i));
            }
            let col = scope.input.resolve(name)?;
            match scope.keys.iter().position(|k| *k == col) {
                Some(slot) => Bound::Slot(slot),
                None => return Err(ExecError::NotGrouped(name.clone())),
            }
        }
        Expr::Literal(lit) => Bound::Literal(lit.into()),
        Expr::CountStar => Bound::Count,
        Expr::Compare { op, left, right } => Bound::Compare(*op, rec(left)?, rec(right)?),
        Expr::And(l, r) => Bound::And(rec(l)?, rec(r)?),
        Expr::Or(l, r) => Bound::Or(rec(l)?, rec(r)?),
        Expr::Not(e) => Bound::Not(rec(e)?),
    })
}

fn output_name(expr: &Expr, alias: &Option<String>) -> String {
    match (alias, expr) {
        (Some(a), _) => a.clone(),
        (None, Expr::Column(name)) => name.clone(),
        (None, e) => render_expr(e),
    }
}

fn run_select(catalog: &Catalog, select: &Select) -> Result<Relation, ExecError> {
    let input = match &select.from {
        TableRef::Table { name, .. } => {
            let table = schema::lookup_table(name).ok_or_else(|| ExecError::UnknownTable(name.clone()))?;
            scan(catalog, table)
        }
        TableRef::Subquery { query, .. } => run_query(catalog, query)?,
    };

    let filter = select
        .selection
        .as_ref()
        .map(|e| bind_row(e, &input, "WHERE"))
        .transpose()?;

    let aggregate = !select.group_by.is_empty()
        || select.having.is_some()
        || select.projection.iter().any(|item| match item {
            SelectItem::Expr { expr, .. } => expr.contains_aggregate(),
            SelectItem::Wildcard => false,
        });

    let mut out = if aggregate {
        run_grouped(select, &input, filter.as_ref())?
    } else {
        run_plain(select, &input, filter.as_ref())?
    };

    if select.distinct {
        let mut seen = HashSet::new();
        out.rows.retain(|row| seen.insert(row_key(row)));
    }
    Ok(out)
}

fn run_plain(select: &Select, input: &Relation, filter: Option<&Bound>) -> Result<Relation, ExecError> {
    let mut columns = Vec::new();
    let mut exprs = Vec::new();
    for item in &select.projection {
        match item {
            SelectItem::Wildcard => {
                for (i, c) in input.columns.iter().enumerate() {
                    columns.push(Column {
                        name: c.name.clone(),
                        aliases: c.aliases,
                    });
                    exprs.push(Bound::Slot(i));
                }
            }
            SelectItem::Expr { expr, alias } => {
                exprs.push(bind_row(expr, input, "SELECT")?);
                columns.push(Column {
                    name: output_name(expr, alias),
                    aliases: &[],
                });
            }
        }
    }

    let mut rows = Vec::new();
    for row in &input.rows {
        let env = Env {
            slots: row,
            projected: &[],
            count: 0,
        };
        if let Some(f) = filter {
            if !f.holds(&env)? {
                continue;
            }
        }
        rows.push(exprs.iter().map(|e| e.eval(&env)).collect::<Result<Vec<_>, _>>()?);
    }
    Ok(Relation { columns, rows })
}

fn run_grouped(select: &Select, input: &Relation, filter: Option<&Bound>) -> Result<Relation, ExecError> {
    let keys = select
        .group_by
        .iter()
        .map(|name| input.resolve(name))
        .collect::<Result<Vec<_>, _>>()?;

    let mut columns = Vec::new();
    let mut aliases = Vec::new();
    let mut items = Vec::new();
    for item in &select.projection {
        match item {
            SelectItem::Wildcard => return Err(ExecError::NotGrouped("*".into())),
            SelectItem::Expr { expr, alias } => {
                items.push(expr);
                aliases.push(alias.clone());
                columns.push(Column {
                    name: output_name(expr, alias),
                    aliases: &[],
                });
            }
        }
    }
    // SELECT items see only group keys and COUNT(*); HAVING may also see aliases.
    let select_scope = GroupScope {
        input,
        keys: &keys,
        aliases: &[],
    };
    let projection = items
        .iter()
        .map(|e| bind_group(e, &select_scope))
        .collect::<Result<Vec<_>, _>>()?;
    let having_scope = GroupScope {
        input,
        keys: &keys,
        aliases: &aliases,
    };
    let having = select.having.as_ref().map(|e| bind_group(e, &having_scope)).transpose()?;

    // group key values and member counts, in first-seen order
    let mut groups: Vec<(Vec<Value>, i64)> = Vec::new();
    let mut index: HashMap<Vec<super::value::KeyValue>, usize> = HashMap::new();
    if keys.is_empty() {
        groups.push((Vec::new(), 0));
    }
    for row in &input.rows {
        if let Some(f) = filter {
            let env = Env {
                slots: row,
                projected: &[],
                count: 0,
            };
            if !f.holds(&env)? {
                continue;
            }
        }
        if keys.is_empty() {
            groups[0].1 += 1;
            continue;
        }
        let key_values: Vec<Value> = keys.iter().map(|&k| row[k].clone()).collect();
        let slot = *index.entry(row_key(&key_values)).or_insert_with(|| {
            groups.push((key_values, 0));
            groups.len() - 1
        });
        groups[slot].1 += 1;
    }

    let mut rows = Vec::new();
    for (key_values, count) in &groups {
        let env = Env {
            slots: key_values,
            projected: &[],
            count: *count,
        };
        let values = projection.iter().map(|p| p.eval(&env)).collect::<Result<Vec<_>, _>>()?;
        if let Some(h) = &having {
            let env = Env {
                slots: key_values,
                projected: &values,
                count: *count,
            };
            if !h.holds(&env)? {
                continue;
            }
        }
        rows.push(values);
    }
    Ok(Relation { columns, rows })
}

#[cfg(test)]
mod tests {
    use crate::catalog::{Catalog, DetectionRow, ExecError, ImageMeta, Value};

    fn catalog() -> Catalog {
        let mut cat = Catalog::new();
        for id in 1..=4 {
            cat.insert_image(ImageMeta {
                image_id: id,
                file_path: format!("{id}.jpg"),
                width: 640,
                height: 480,
                timestamp: if id % 2 == 0 { Some(id * 100) } else { None },
            })
            .unwrap();
        }
        let mut oid = 0;
        let mut add = |cat: &mut Catalog, img: i64, class: &str, x: f64, y: f64| {
            oid += 1;
            cat.insert_detection(DetectionRow {
                image_id: img,
                object_id: oid,
                object_class: class.into(),
                bbox_xmin: x,
                bbox_xmax: x + 50.0,
                bbox_ymin: y,
                bbox_ymax: y + 50.0,
            })
            .unwrap();
        };
        for _ in 0..4 {
            add(&mut cat, 1, "horse", 10.0, 10.0);
        }
        add(&mut cat, 2, "horse", 10.0, 10.0);
        add(&mut cat, 2, "car", 400.0, 400.0);
        add(&mut cat, 3, "car", 100.0, 400.0);
        add(&mut cat, 3, "person", 10.0, 10.0);
        for _ in 0..4 {
            add(&mut cat, 4, "horse", 500.0, 10.0);
        }
        cat
    }

    fn ids(cat: &Catalog, sql: &str) -> Vec<i64> {
        let rel = cat.execute(sql).unwrap();
        rel.rows.iter().map(|r| r[0].as_int().unwrap()).collect()
    }

    #[test]
    fn count_having_listing() {
        let cat = catalog();
        let rel = cat
            .execute("SELECT id, COUNT(*) as c\nFROM objects\nWHERE class_name='horse'\nGROUP BY id\nHAVING c = 4")
            .unwrap();
        assert_eq!(rel.column_names, vec!["id", "c"]);
        assert_eq!(rel.rows, vec![vec![Value::Int(1), Value::Int(4)], vec![Value::Int(4), Value::Int(4)]]);
    }

    #[test]
    fn spatial_listing() {
        let cat = catalog();
        assert_eq!(
            ids(&cat, "SELECT DISTINCT id\nFROM objects\nWHERE class_name='car' AND x1>340 AND y1 > 340"),
            vec![2]
        );
    }

    #[test]
    fn pair_intersect_listing() {
        let cat = catalog();
        assert_eq!(
            ids(
                &cat,
                "SELECT DISTINCT id from objects WHERE class_name='horse' INTERSECT SELECT DISTINCT id from objects WHERE class_name= 'car'"
            ),
            vec![2]
        );
    }

    #[test]
    fn legacy_schema_aliases() {
        let cat = catalog();
        let rel = cat
            .execute("SELECT DISTINCT frame FROM object_detection_results WHERE class = 'car' AND x_max < 500")
            .unwrap();
        assert_eq!(rel.column_names, vec!["frame"]);
        assert_eq!(rel.rows, vec![vec![Value::Int(2)], vec![Value::Int(3)]]);
    }

    #[test]
    fn empty_table_yields_empty_relation() {
        let cat = Catalog::new();
        assert!(cat.execute("SELECT DISTINCT id FROM objects WHERE class_name = 'car'").unwrap().is_empty());
        assert!(cat.execute("SELECT id, COUNT(*) AS c FROM objects GROUP BY id").unwrap().is_empty());
        // whole-table aggregate still yields its single row
        let rel = cat.execute("SELECT COUNT(*) FROM objects").unwrap();
        assert_eq!(rel.rows, vec![vec![Value::Int(0)]]);
        assert_eq!(rel.column_names, vec!["COUNT(*)"]);
    }

    #[test]
    fn name_errors_even_on_empty_tables() {
        let cat = Catalog::new();
        assert_eq!(cat.execute("SELECT id FROM nope"), Err(ExecError::UnknownTable("nope".into())));
        assert_eq!(cat.execute("SELECT zzz FROM objects"), Err(ExecError::UnknownColumn("zzz".into())));
        assert!(matches!(
            cat.execute("SELECT class_name, COUNT(*) FROM objects GROUP BY id"),
            Err(ExecError::NotGrouped(_))
        ));
        assert!(matches!(
            cat.execute("SELECT id FROM objects WHERE COUNT(*) > 1"),
            Err(ExecError::MisplacedAggregate("WHERE"))
        ));
    }

    #[test]
    fn type_errors_on_incomparable_operands() {
        let cat = catalog();
        assert!(matches!(cat.execute("SELECT id FROM objects WHERE class_name > 3"), Err(ExecError::Type(_))));
        assert!(matches!(cat.execute("SELECT id FROM objects WHERE id"), Err(ExecError::Type(_))));
    }

    #[test]
    fn set_operations() {
        let cat = catalog();
        assert_eq!(ids(&cat, "SELECT id FROM objects EXCEPT SELECT id FROM objects WHERE class_name = 'horse'"), vec![3]);
        assert_eq!(
            ids(&cat, "SELECT id FROM objects WHERE class_name = 'car' UNION SELECT id FROM objects WHERE class_name = 'person'"),
            vec![2, 3]
        );
        assert!(matches!(
            cat.execute("SELECT id FROM objects UNION SELECT id, object_id FROM objects"),
            Err(ExecError::ColumnCountMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn null_timestamps_filter_out() {
        let cat = catalog();
        assert_eq!(ids(&cat, "SELECT id FROM images WHERE timestamp > 0"), vec![2, 4]);
        assert_eq!(ids(&cat, "SELECT id FROM images WHERE NOT timestamp > 0"), Vec::<i64>::new());
        assert_eq!(ids(&cat, "SELECT id FROM images WHERE timestamp > 0 OR id = 1"), vec![1, 2, 4]);
    }

    #[test]
    fn subquery_and_limit() {
        let cat = catalog();
        assert_eq!(
            ids(&cat, "SELECT id FROM (SELECT id, COUNT(*) AS c FROM objects GROUP BY id) AS g WHERE c > 1"),
            vec![1, 2, 3, 4]
        );
        assert_eq!(ids(&cat, "SELECT DISTINCT id FROM objects LIMIT 2"), vec![1, 2]);
        assert_eq!(ids(&cat, "SELECT * FROM images LIMIT 1"), vec![1]);
    }

    #[test]
    fn rejects_semantic_in_base() {
        let cat = catalog();
        assert_eq!(cat.execute("SELECT id FROM objects SEMANTIC 'x'"), Err(ExecError::SemanticNotAllowed));
    }
}
