//! proptest strategies for arbitrary (not necessarily executable) syntax trees.

use proptest::prelude::*;
use ssql_core::parser::{
    is_keyword, CompareOp, Expr, Literal, Query, SemanticClause, Select, SelectItem, SetExpr, SetOperator,
    SsqlQuery, TableRef,
};

pub fn ident() -> impl Strategy<Value = String> {
    "[a-z_][a-z0-9_]{0,8}".prop_filter("reserved word", |s| !is_keyword(s) && !s.eq_ignore_ascii_case("count"))
}

pub fn literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        any::<i64>().prop_map(Literal::Integer),
        (-1000i64..1000).prop_map(Literal::Integer),
        any::<f64>().prop_filter("finite", |f| f.is_finite()).prop_map(Literal::Float),
        (-1000.0f64..1000.0).prop_map(Literal::Float),
        "[ -~é漢]{0,12}".prop_map(Literal::String),
    ]
}

pub fn compare_op() -> impl Strategy<Value = CompareOp> {
    prop_oneof![
        Just(CompareOp::Eq),
        Just(CompareOp::NotEq),
        Just(CompareOp::Lt),
        Just(CompareOp::LtEq),
        Just(CompareOp::Gt),
        Just(CompareOp::GtEq),
    ]
}

pub fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        3 => ident().prop_map(Expr::Column),
        3 => literal().prop_map(Expr::Literal),
        1 => Just(Expr::CountStar),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            3 => (compare_op(), inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::compare(op, l, r)),
            2 => (inner.clone(), inner.clone()).prop_map(|(l, r)| Expr::and(l, r)),
            2 => (inner.clone(), inner.clone()).prop_map(|(l, r)| Expr::or(l, r)),
            1 => inner.prop_map(|e| Expr::Not(Box::new(e))),
        ]
    })
}

fn select_item() -> impl Strategy<Value = SelectItem> {
    prop_oneof![
        1 => Just(SelectItem::Wildcard),
        4 => (expr(), proptest::option::of(ident())).prop_map(|(expr, alias)| SelectItem::Expr { expr, alias }),
    ]
}

fn table_ref(depth: u32) -> BoxedStrategy<TableRef> {
    let table = (ident(), proptest::option::of(ident())).prop_map(|(name, alias)| TableRef::Table { name, alias });
    if depth == 0 {
        return table.boxed();
    }
    prop_oneof![
        3 => table,
        1 => (query(depth - 1), proptest::option::of(ident()))
            .prop_map(|(q, alias)| TableRef::Subquery { query: Box::new(q), alias }),
    ]
    .boxed()
}

fn select(depth: u32) -> BoxedStrategy<Select> {
    (
        any::<bool>(),
        proptest::collection::vec(select_item(), 1..4),
        table_ref(depth),
        proptest::option::of(expr()),
        proptest::collection::vec(ident(), 0..3),
        proptest::option::of(expr()),
    )
        .prop_map(|(distinct, projection, from, selection, group_by, having)| Select {
            distinct,
            projection,
            from,
            selection,
            group_by,
            having,
        })
        .boxed()
}

fn set_operator() -> impl Strategy<Value = SetOperator> {
    prop_oneof![Just(SetOperator::Union), Just(SetOperator::Intersect), Just(SetOperator::Except)]
}

fn set_expr(depth: u32) -> BoxedStrategy<SetExpr> {
    let leaf = select(depth).prop_map(|s| SetExpr::Select(Box::new(s)));
    if depth == 0 {
        return leaf.boxed();
    }
    prop_oneof![
        2 => leaf,
        1 => (set_operator(), set_expr(depth - 1), set_expr(depth - 1)).prop_map(|(op, l, r)| SetExpr::SetOperation {
            op,
            left: Box::new(l),
            right: Box::new(r),
        }),
    ]
    .boxed()
}

pub fn query(depth: u32) -> BoxedStrategy<Query> {
    (set_expr(depth), proptest::option::of(0u64..1000))
        .prop_map(|(body, limit)| Query { body, limit })
        .boxed()
}

pub fn semantic_clause() -> impl Strategy<Value = SemanticClause> {
    ("[ -~]{0,10}[a-z][ -~]{0,10}", proptest::option::of(1u64..100)).prop_map(|(text, topk)| SemanticClause { text, topk })
}

pub fn ssql_query() -> impl Strategy<Value = SsqlQuery> {
    (query(2), proptest::option::of(semantic_clause())).prop_map(|(base, semantic)| SsqlQuery { base, semantic })
}
