//! Random executable queries.
//!
//! Every generated query is well-typed and well-scoped against the catalog
//! schema: comparisons pair numbers with numbers and text with text, grouped
//! SELECTs reference only keys and COUNT(*), and set operands agree on arity.

use rand::seq::IndexedRandom;
use rand::Rng;
use ssql_core::parser::{CompareOp, Expr, Literal, Query, Select, SelectItem, SetExpr, SetOperator, TableRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Int,
    Float,
    Text,
    Bool,
}

impl Ty {
    fn numeric(self) -> bool {
        matches!(self, Ty::Int | Ty::Float)
    }

    fn compatible(self, other: Ty) -> bool {
        (self.numeric() && other.numeric()) || (self == Ty::Text && other == Ty::Text)
    }
}

#[derive(Debug, Clone)]
struct Col {
    /// Every name the column answers to; the first is its output name.
    names: Vec<&'static str>,
    owned: Option<String>,
    ty: Ty,
}

impl Col {
    fn named(name: String, ty: Ty) -> Self {
        Col {
            names: Vec::new(),
            owned: Some(name),
            ty,
        }
    }

    fn output_name(&self) -> String {
        self.owned.clone().unwrap_or_else(|| self.names[0].to_string())
    }

    fn reference<R: Rng>(&self, rng: &mut R) -> String {
        match &self.owned {
            Some(n) => n.clone(),
            None => self.names.choose(rng).unwrap().to_string(),
        }
    }
}

fn objects() -> Vec<Col> {
    let c = |names: &[&'static str], ty| Col {
        names: names.to_vec(),
        owned: None,
        ty,
    };
    vec![
        c(&["id", "image_id", "frame"], Ty::Int),
        c(&["object_id"], Ty::Int),
        c(&["class_name", "object_class", "class"], Ty::Text),
        c(&["x1", "bbox_xmin", "x_min"], Ty::Float),
        c(&["y1", "bbox_ymin", "y_min"], Ty::Float),
        c(&["x2", "bbox_xmax", "x_max"], Ty::Float),
        c(&["y2", "bbox_ymax", "y_max"], Ty::Float),
    ]
}

fn images() -> Vec<Col> {
    let c = |names: &[&'static str], ty| Col {
        names: names.to_vec(),
        owned: None,
        ty,
    };
    vec![
        c(&["id", "image_id", "frame"], Ty::Int),
        c(&["file_path"], Ty::Text),
        c(&["width"], Ty::Int),
        c(&["height"], Ty::Int),
        c(&["timestamp"], Ty::Int),
    ]
}

pub struct QueryGen<R> {
    rng: R,
    fresh: usize,
}

impl<R: Rng> QueryGen<R> {
    pub fn new(rng: R) -> Self {
        Self { rng, fresh: 0 }
    }

    fn name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    /// A query nesting subqueries and set operations up to `depth` levels.
    pub fn query(&mut self, depth: u32) -> Query {
        self.fresh = 0;
        self.gen_query(depth, None).0
    }

    fn gen_query(&mut self, depth: u32, arity: Option<usize>) -> (Query, Vec<Col>) {
        let (body, cols) = self.gen_set(depth, arity);
        let limit = self.rng.random_bool(0.15).then(|| self.rng.random_range(0..30));
        (Query { body, limit }, cols)
    }

    fn gen_set(&mut self, depth: u32, arity: Option<usize>) -> (SetExpr, Vec<Col>) {
        if depth > 0 && self.rng.random_bool(0.3) {
            let op = *[SetOperator::Union, SetOperator::Intersect, SetOperator::Except]
                .choose(&mut self.rng)
                .unwrap();
            let (left, cols) = self.gen_set(depth - 1, arity);
            let right = (0..50)
                .map(|_| self.gen_set(depth - 1, Some(cols.len())))
                .find(|(_, rc)| cols.iter().zip(rc).all(|(l, r)| l.ty == r.ty || l.ty.compatible(r.ty)))
                .map_or_else(|| left.clone(), |(r, _)| r);
            let expr = SetExpr::SetOperation {
                op,
                left: Box::new(left),
                right: Box::new(right),
            };
            return (expr, cols);
        }
        let (select, cols) = self.gen_select(depth, arity);
        (SetExpr::Select(Box::new(select)), cols)
    }

    fn gen_select(&mut self, depth: u32, arity: Option<usize>) -> (Select, Vec<Col>) {
        let (from, input) = if depth > 0 && self.rng.random_bool(0.25) {
            let (q, cols) = self.gen_query(depth - 1, None);
            let alias = self.rng.random_bool(0.5).then(|| self.name("t"));
            (
                TableRef::Subquery {
                    query: Box::new(q),
                    alias,
                },
                cols,
            )
        } else if self.rng.random_bool(0.6) {
            let name = *["objects", "object_detection_results", "detections"].choose(&mut self.rng).unwrap();
            (table(name), objects())
        } else {
            let name = *["images", "image_meta"].choose(&mut self.rng).unwrap();
            (table(name), images())
        };

        let usable: Vec<Col> = input.iter().filter(|c| c.ty != Ty::Bool).cloned().collect();
        let selection = (!usable.is_empty() && self.rng.random_bool(0.7)).then(|| {
            let atoms: Vec<(Expr, Ty)> = usable.iter().map(|c| (Expr::Column(c.reference(&mut self.rng)), c.ty)).collect();
            self.predicate(2, &atoms)
        });
        let distinct = self.rng.random_bool(0.3);

        let mut select = Select {
            distinct,
            projection: Vec::new(),
            from,
            selection,
            group_by: Vec::new(),
            having: None,
        };
        let cols = if self.rng.random_bool(0.3) {
            self.grouped(&mut select, &input, arity)
        } else {
            self.plain(&mut select, &input, arity)
        };
        (select, cols)
    }

    fn plain(&mut self, select: &mut Select, input: &[Col], arity: Option<usize>) -> Vec<Col> {
        let wildcard_fits = arity.is_none_or(|n| n == input.len());
        if wildcard_fits && self.rng.random_bool(0.2) {
            select.projection.push(SelectItem::Wildcard);
            return input.to_vec();
        }
        let n = arity.unwrap_or_else(|| self.rng.random_range(1..=3));
        let mut out = Vec::new();
        for _ in 0..n {
            let roll = self.rng.random_range(0..100);
            let (expr, mut alias, ty) = if roll < 80 {
                let col = input.choose(&mut self.rng).unwrap();
                let alias = self.rng.random_bool(0.3).then(|| self.name("a"));
                (Expr::Column(col.reference(&mut self.rng)), alias, col.ty)
            } else if roll < 93 {
                let ty = *[Ty::Int, Ty::Float, Ty::Text].choose(&mut self.rng).unwrap();
                (Expr::Literal(self.literal(ty)), Some(self.name("l")), ty)
            } else {
                let usable: Vec<(Expr, Ty)> = input
                    .iter()
                    .filter(|c| c.ty != Ty::Bool)
                    .map(|c| (Expr::Column(c.reference(&mut self.rng)), c.ty))
                    .collect();
                if usable.is_empty() {
                    (Expr::Literal(Literal::Integer(1)), Some(self.name("l")), Ty::Int)
                } else {
                    (self.comparison(&usable), Some(self.name("p")), Ty::Bool)
                }
            };
            let written = match (&alias, &expr) {
                (Some(a), _) => a.clone(),
                (None, Expr::Column(name)) => name.clone(),
                _ => unreachable!("non-column items are always aliased"),
            };
            // a repeated output name would be shadowed; rename it
            let name = if out.iter().any(|c: &Col| c.output_name().eq_ignore_ascii_case(&written)) {
                let fresh = self.name("d");
                alias = Some(fresh.clone());
                fresh
            } else {
                written
            };
            select.projection.push(SelectItem::Expr { expr, alias });
            out.push(Col::named(name, ty));
        }
        out
    }

    fn grouped(&mut self, select: &mut Select, input: &[Col], arity: Option<usize>) -> Vec<Col> {
        let n_keys = self.rng.random_range(0..=2.min(input.len()));
        let mut keys: Vec<(String, Ty)> = Vec::new();
        for col in input.choose_multiple(&mut self.rng, n_keys) {
            keys.push((col.reference(&mut self.rng), col.ty));
        }
        select.group_by = keys.iter().map(|k| k.0.clone()).collect();

        let n = arity.unwrap_or_else(|| self.rng.random_range(1..=keys.len() + 1));
        let mut out = Vec::new();
        let mut count_alias = None;
        for i in 0..n {
            let use_key = !keys.is_empty() && (i < keys.len() && self.rng.random_bool(0.7));
            if use_key {
                let (name, ty) = keys[i].clone();
                let alias = self.rng.random_bool(0.3).then(|| self.name("k"));
                out.push(Col::named(alias.clone().unwrap_or_else(|| name.clone()), ty));
                select.projection.push(SelectItem::Expr {
                    expr: Expr::Column(name),
                    alias,
                });
            } else {
                let alias = self.name("c");
                count_alias.get_or_insert(alias.clone());
                out.push(Col::named(alias.clone(), Ty::Int));
                select.projection.push(SelectItem::Expr {
                    expr: Expr::CountStar,
                    alias: Some(alias),
                });
            }
        }
        // keep output names unique
        let mut seen: Vec<String> = Vec::new();
        for (item, col) in select.projection.iter_mut().zip(out.iter_mut()) {
            if seen.iter().any(|s| s.eq_ignore_ascii_case(&col.output_name())) {
                let a = self.name("d");
                if let SelectItem::Expr { alias, .. } = item {
                    *alias = Some(a.clone());
                }
                *col = Col::named(a, col.ty);
            }
            seen.push(col.output_name());
        }

        if self.rng.random_bool(0.5) {
            let mut atoms: Vec<(Expr, Ty)> = vec![(Expr::CountStar, Ty::Int)];
            if let Some(a) = count_alias {
                atoms.push((Expr::Column(a), Ty::Int));
            }
            for (name, ty) in &keys {
                if *ty != Ty::Bool {
                    atoms.push((Expr::Column(name.clone()), *ty));
                }
            }
            select.having = Some(self.predicate(1, &atoms));
        }
        out
    }

    fn predicate(&mut self, depth: u32, atoms: &[(Expr, Ty)]) -> Expr {
        if depth == 0 || self.rng.random_bool(0.4) {
            return self.comparison(atoms);
        }
        match self.rng.random_range(0..5) {
            0 | 1 => Expr::and(self.predicate(depth - 1, atoms), self.predicate(depth - 1, atoms)),
            2 | 3 => Expr::or(self.predicate(depth - 1, atoms), self.predicate(depth - 1, atoms)),
            _ => Expr::Not(Box::new(self.predicate(depth - 1, atoms))),
        }
    }

    fn comparison(&mut self, atoms: &[(Expr, Ty)]) -> Expr {
        let op = *[
            CompareOp::Eq,
            CompareOp::NotEq,
            CompareOp::Lt,
            CompareOp::LtEq,
            CompareOp::Gt,
            CompareOp::GtEq,
        ]
        .choose(&mut self.rng)
        .unwrap();
        let (left, ty) = atoms.choose(&mut self.rng).unwrap().clone();
        let partners: Vec<&(Expr, Ty)> = atoms.iter().filter(|(_, t)| t.compatible(ty)).collect();
        let right = if self.rng.random_bool(0.25) {
            partners.choose(&mut self.rng).unwrap().0.clone()
        } else {
            let lit_ty = if ty.numeric() && self.rng.random_bool(0.3) {
                if ty == Ty::Int { Ty::Float } else { Ty::Int }
            } else {
                ty
            };
            Expr::Literal(self.literal(lit_ty))
        };
        if self.rng.random_bool(0.2) {
            Expr::compare(op, right, left)
        } else {
            Expr::compare(op, left, right)
        }
    }

    fn literal(&mut self, ty: Ty) -> Literal {
        match ty {
            Ty::Int => Literal::Integer(match self.rng.random_range(0..3) {
                0 => self.rng.random_range(0..6),
                1 => self.rng.random_range(0..70),
                _ => self.rng.random_range(-5..700),
            }),
            Ty::Float => Literal::Float(self.rng.random_range(0..1300) as f64 / 2.0),
            Ty::Text => {
                let pool = ["car", "horse", "person", "dog", "umbrella", "img/7.jpg", "zebra", ""];
                Literal::String(pool.choose(&mut self.rng).unwrap().to_string())
            }
            Ty::Bool => unreachable!("no boolean literals"),
        }
    }
}

fn table(name: &str) -> TableRef {
    TableRef::Table {
        name: name.to_string(),
        alias: None,
    }
}
