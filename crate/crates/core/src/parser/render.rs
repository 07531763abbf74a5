//! Canonical text rendering. Keywords are upper-cased, `SEMANTIC = 'x'` becomes
//! `SEMANTIC 'x'`, and parentheses are emitted only where the tree shape
//! would otherwise be lost on re-parse.

use std::fmt::Write;

use super::ast::*;

pub fn render(query: &SsqlQuery) -> String {
    let mut out = render_query(&query.base);
    if let Some(sem) = &query.semantic {
        out.push_str(" SEMANTIC ");
        push_string_literal(&mut out, &sem.text);
        if let Some(k) = sem.topk {
            let _ = write!(out, " LIMIT {k}");
        }
    }
    out
}

pub fn render_query(query: &Query) -> String {
    let mut out = String::new();
    write_set_expr(&mut out, &query.body);
    if let Some(limit) = query.limit {
        let _ = write!(out, " LIMIT {limit}");
    }
    out
}

fn write_set_expr(out: &mut String, expr: &SetExpr) {
    match expr {
        SetExpr::Select(select) => write_select(out, select),
        SetExpr::SetOperation { op, left, right } => {
            let prec = op.precedence();
            let left_parens = matches!(**left, SetExpr::SetOperation { op: l, .. } if l.precedence() < prec);
            let right_parens = matches!(**right, SetExpr::SetOperation { op: r, .. } if r.precedence() <= prec);
            write_operand(out, left, left_parens);
            out.push(' ');
            out.push_str(op.keyword());
            out.push(' ');
            write_operand(out, right, right_parens);
        }
    }
}

fn write_operand(out: &mut String, expr: &SetExpr, parens: bool) {
    if parens {
        out.push('(');
        write_set_expr(out, expr);
        out.push(')');
    } else {
        write_set_expr(out, expr);
    }
}

fn write_select(out: &mut String, select: &Select) {
    out.push_str("SELECT ");
    if select.distinct {
        out.push_str("DISTINCT ");
    }
    for (i, item) in select.projection.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        match item {
            SelectItem::Wildcard => out.push('*'),
            SelectItem::Expr { expr, alias } => {
                write_expr(out, expr);
                if let Some(alias) = alias {
                    out.push_str(" AS ");
                    out.push_str(alias);
                }
            }
        }
    }
    out.push_str(" FROM ");
    match &select.from {
        TableRef::Table { name, alias } => {
            out.push_str(name);
            write_alias(out, alias);
        }
        TableRef::Subquery { query, alias } => {
            out.push('(');
            out.push_str(&render_query(query));
            out.push(')');
            write_alias(out, alias);
        }
    }
    if let Some(selection) = &select.selection {
        out.push_str(" WHERE ");
        write_expr(out, selection);
    }
    if !select.group_by.is_empty() {
        out.push_str(" GROUP BY ");
        out.push_str(&select.group_by.join(", "));
    }
    if let Some(having) = &select.having {
        out.push_str(" HAVING ");
        write_expr(out, having);
    }
}

fn write_alias(out: &mut String, alias: &Option<String>) {
    if let Some(alias) = alias {
        out.push_str(" AS ");
        out.push_str(alias);
    }
}

pub fn render_expr(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr);
    out
}

// binding strength: OR 1, AND 2, NOT 3, comparison 4, atoms 5
fn strength(expr: &Expr) -> u8 {
    match expr {
        Expr::Or(..) => 1,
        Expr::And(..) => 2,
        Expr::Not(_) => 3,
        Expr::Compare { .. } => 4,
        Expr::Column(_) | Expr::Literal(_) | Expr::CountStar => 5,
    }
}

fn write_child(out: &mut String, expr: &Expr, parens: bool) {
    if parens {
        out.push('(');
        write_expr(out, expr);
        out.push(')');
    } else {
        write_expr(out, expr);
    }
}

fn write_expr(out: &mut String, expr: &Expr) {
    match expr {
        Expr::Column(name) => out.push_str(name),
        Expr::Literal(lit) => write_literal(out, lit),
        Expr::CountStar => out.push_str("COUNT(*)"),
        Expr::Compare { op, left, right } => {
            write_child(out, left, strength(left) < 5);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_child(out, right, strength(right) < 5);
        }
        Expr::And(left, right) => {
            write_child(out, left, strength(left) < 2);
            out.push_str(" AND ");
            write_child(out, right, strength(right) <= 2);
        }
        Expr::Or(left, right) => {
            write_child(out, left, false);
            out.push_str(" OR ");
            write_child(out, right, strength(right) <= 1);
        }
        Expr::Not(inner) => {
            out.push_str("NOT ");
            write_child(out, inner, strength(inner) < 3);
        }
    }
}

fn write_literal(out: &mut String, lit: &Literal) {
    match lit {
        Literal::Integer(v) => {
            let _ = write!(out, "{v}");
        }
        // Debug formatting is the shortest text that reparses to the same bits,
        // and always carries a `.` or an exponent.
        Literal::Float(v) => {
            let _ = write!(out, "{v:?}");
        }
        Literal::String(s) => push_string_literal(out, s),
    }
}

fn push_string_literal(out: &mut String, s: &str) {
    out.push('\'');
    out.push_str(&s.replace('\'', "''"));
    out.push('\'');
}
