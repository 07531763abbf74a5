//! Front end for the query dialect: a closed SQL subset followed by an
//! optional `SEMANTIC '<text>' [LIMIT k]` clause.
//!
//! ```
//! use ssql_core::parser::{parse, split};
//!
//! let q = parse("SELECT DISTINCT id FROM objects WHERE class_name = 'car' SEMANTIC 'red car'").unwrap();
//! let (base, predicate) = split(&q);
//! assert_eq!(base, "SELECT DISTINCT id FROM objects WHERE class_name = 'car'");
//! assert_eq!(predicate.unwrap().text, "red car");
//! ```

pub mod ast;
mod lexer;
mod render;

pub use ast::*;
pub use lexer::is_keyword;
pub use render::{render, render_expr, render_query};

use lexer::{tokenize, Keyword, Token, TokenKind};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: expected {}, found {found}", .expected.join(" or "))]
    Syntax {
        line: usize,
        column: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("SEMANTIC may appear at most once (second occurrence at line {line}, column {column})")]
    MultipleSemantic { line: usize, column: usize },
    #[error("empty SEMANTIC predicate at line {line}, column {column}")]
    EmptySemantic { line: usize, column: usize },
}

impl ParseError {
    /// 1-based (line, column) of the offending token.
    pub fn position(&self) -> (usize, usize) {
        match self {
            ParseError::Syntax { line, column, .. }
            | ParseError::MultipleSemantic { line, column }
            | ParseError::EmptySemantic { line, column } => (*line, *column),
        }
    }
}

/// Parse query text into an [`SsqlQuery`], detaching the trailing semantic clause.
pub fn parse(source: &str) -> Result<SsqlQuery, ParseError> {
    let tokens = tokenize(source)?;
    if let Some(second) = tokens
        .iter()
        .filter(|t| t.kind == TokenKind::Keyword(Keyword::Semantic))
        .nth(1)
    {
        return Err(ParseError::MultipleSemantic {
            line: second.line,
            column: second.column,
        });
    }
    let mut parser = Parser { tokens, pos: 0 };
    parser.parse_statement()
}

/// Parse a pure relational query; a `SEMANTIC` clause is rejected.
pub fn parse_relational(source: &str) -> Result<Query, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0 };
    let query = parser.parse_query()?;
    parser.eat(&TokenKind::Semicolon);
    parser.expect_eof()?;
    Ok(query)
}

/// Separate the relational base (as canonical text) from the semantic predicate.
pub fn split(query: &SsqlQuery) -> (String, Option<SemanticClause>) {
    (render_query(&query.base), query.semantic.clone())
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_nth(&self, n: usize) -> &TokenKind {
        &self.tokens[(self.pos + n).min(self.tokens.len() - 1)].kind
    }

    fn advance(&mut self) -> Token {
        let tok = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        tok
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if &self.peek().kind == kind {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, kw: Keyword) -> bool {
        self.eat(&TokenKind::Keyword(kw))
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let tok = self.peek();
        ParseError::Syntax {
            line: tok.line,
            column: tok.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: tok.kind.describe(),
        }
    }

    fn expect(&mut self, kind: TokenKind, name: &str) -> Result<(), ParseError> {
        if self.eat(&kind) {
            Ok(())
        } else {
            Err(self.error(&[name]))
        }
    }

    fn expect_keyword(&mut self, kw: Keyword) -> Result<(), ParseError> {
        self.expect(TokenKind::Keyword(kw), kw.as_str())
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        if self.peek().kind == TokenKind::Eof {
            Ok(())
        } else {
            Err(self.error(&["end of input"]))
        }
    }

    fn expect_ident(&mut self) -> Result<String, ParseError> {
        match &self.peek().kind {
            TokenKind::Ident(name) => {
                let name = name.clone();
                self.advance();
                Ok(name)
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn expect_unsigned(&mut self) -> Result<u64, ParseError> {
        match &self.peek().kind {
            TokenKind::Integer(digits) => match digits.parse::<u64>() {
                Ok(v) => {
                    self.advance();
                    Ok(v)
                }
                Err(_) => Err(self.error(&["integer in range"])),
            },
            _ => Err(self.error(&["integer"])),
        }
    }

    fn parse_statement(&mut self) -> Result<SsqlQuery, ParseError> {
        let base = self.parse_query()?;
        let semantic = if self.peek().kind == TokenKind::Keyword(Keyword::Semantic) {
            self.advance();
            self.eat(&TokenKind::Eq);
            let tok = self.peek().clone();
            let text = match tok.kind {
                TokenKind::String(s) => s,
                _ => return Err(self.error(&["string literal"])),
            };
            self.advance();
            if text.trim().is_empty() {
                return Err(ParseError::EmptySemantic {
                    line: tok.line,
                    column: tok.column,
                });
            }
            let topk = if self.eat_keyword(Keyword::Limit) {
                let at = self.peek().clone();
                let k = self.expect_unsigned()?;
                if k == 0 {
                    return Err(ParseError::Syntax {
                        line: at.line,
                        column: at.column,
                        expected: vec!["positive integer".into()],
                        found: "0".into(),
                    });
                }
                Some(k)
            } else {
                None
            };
            Some(SemanticClause { text, topk })
        } else {
            None
        };
        self.eat(&TokenKind::Semicolon);
        if self.peek().kind != TokenKind::Eof {
            let mut expected = vec!["end of input"];
            if semantic.is_none() {
                expected.insert(0, "SEMANTIC");
            }
            return Err(self.error(&expected));
        }
        Ok(SsqlQuery { base, semantic })
    }

    fn parse_query(&mut self) -> Result<Query, ParseError> {
        let body = self.parse_set_expr(0)?;
        let limit = if self.eat_keyword(Keyword::Limit) {
            Some(self.expect_unsigned()?)
        } else {
            None
        };
        Ok(Query { body, limit })
    }

    fn peek_set_operator(&self) -> Option<SetOperator> {
        match self.peek().kind {
            TokenKind::Keyword(Keyword::Union) => Some(SetOperator::Union),
            TokenKind::Keyword(Keyword::Intersect) => Some(SetOperator::Intersect),
            TokenKind::Keyword(Keyword::Except) => Some(SetOperator::Except),
            _ => None,
        }
    }

    // precedence climbing; all set operators are left-associative
    fn parse_set_expr(&mut self, min_prec: u8) -> Result<SetExpr, ParseError> {
        let mut left = self.parse_set_operand()?;
        while let Some(op) = self.peek_set_operator() {
            if op.precedence() < min_prec {
                break;
            }
            self.advance();
            let right = self.parse_set_expr(op.precedence() + 1)?;
            left = SetExpr::SetOperation {
                op,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn parse_set_operand(&mut self) -> Result<SetExpr, ParseError> {
        match self.peek().kind {
            TokenKind::Keyword(Keyword::Select) => Ok(SetExpr::Select(Box::new(self.parse_select()?))),
            TokenKind::LParen => {
                self.advance();
                let inner = self.parse_set_expr(0)?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.error(&["SELECT", "`(`"])),
        }
    }

    fn parse_select(&mut self) -> Result<Select, ParseError> {
        self.expect_keyword(Keyword::Select)?;
        let distinct = self.eat_keyword(Keyword::Distinct);
        let mut projection = vec![self.parse_select_item()?];
        while self.eat(&TokenKind::Comma) {
            projection.push(self.parse_select_item()?);
        }
        self.expect_keyword(Keyword::From)?;
        let from = self.parse_table_ref()?;
        let selection = if self.eat_keyword(Keyword::Where) {
            Some(self.parse_expr()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.eat_keyword(Keyword::Group) {
            self.expect_keyword(Keyword::By)?;
            group_by.push(self.expect_ident()?);
            while self.eat(&TokenKind::Comma) {
                group_by.push(self.expect_ident()?);
            }
        }
        let having = if self.eat_keyword(Keyword::Having) {
            Some(self.parse_expr()?)
        } else {
            None
        };
        Ok(Select {
            distinct,
            projection,
            from,
            selection,
            group_by,
            having,
        })
    }

    fn parse_select_item(&mut self) -> Result<SelectItem, ParseError> {
        if self.eat(&TokenKind::Star) {
            return Ok(SelectItem::Wildcard);
        }
        let expr = self.parse_expr()?;
        let alias = if self.eat_keyword(Keyword::As) {
            Some(self.expect_ident()?)
        } else {
            None
        };
        Ok(SelectItem::Expr { expr, alias })
    }

    fn parse_alias(&mut self) -> Result<Option<String>, ParseError> {
        if self.eat_keyword(Keyword::As) {
            return self.expect_ident().map(Some);
        }
        if let TokenKind::Ident(name) = &self.peek().kind {
            let name = name.clone();
            self.advance();
            return Ok(Some(name));
        }
        Ok(None)
    }

    fn parse_table_ref(&mut self) -> Result<TableRef, ParseError> {
        match &self.peek().kind {
            TokenKind::Ident(_) => {
                let name = self.expect_ident()?;
                let alias = self.parse_alias()?;
                Ok(TableRef::Table { name, alias })
            }
            TokenKind::LParen => {
                self.advance();
                let query = self.parse_query()?;
                self.expect(TokenKind::RParen, "`)`")?;
                let alias = self.parse_alias()?;
                Ok(TableRef::Subquery {
                    query: Box::new(query),
                    alias,
                })
            }
            _ => Err(self.error(&["table name", "`(`"])),
        }
    }

    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.parse_and()?;
        while self.eat_keyword(Keyword::Or) {
            let right = self.parse_and()?;
            left = Expr::or(left, right);
        }
        Ok(left)
    }

    fn parse_and(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.parse_not()?;
        while self.eat_keyword(Keyword::And) {
            let right = self.parse_not()?;
            left = Expr::and(left, right);
        }
        Ok(left)
    }

    fn parse_not(&mut self) -> Result<Expr, ParseError> {
        if self.eat_keyword(Keyword::Not) {
            return Ok(Expr::Not(Box::new(self.parse_not()?)));
        }
        self.parse_comparison()
    }

    fn parse_comparison(&mut self) -> Result<Expr, ParseError> {
        let left = self.parse_primary()?;
        let op = match self.peek().kind {
            TokenKind::Eq => CompareOp::Eq,
            TokenKind::NotEq => CompareOp::NotEq,
            TokenKind::Lt => CompareOp::Lt,
            TokenKind::LtEq => CompareOp::LtEq,
            TokenKind::Gt => CompareOp::Gt,
            TokenKind::GtEq => CompareOp::GtEq,
            _ => return Ok(left),
        };
        self.advance();
        let right = self.parse_primary()?;
        Ok(Expr::compare(op, left, right))
    }

    fn parse_primary(&mut self) -> Result<Expr, ParseError> {
        let tok = self.peek().clone();
        match tok.kind {
            TokenKind::Ident(name) => {
                if name.eq_ignore_ascii_case("count") && *self.peek_nth(1) == TokenKind::LParen {
                    self.advance();
                    self.advance();
                    self.expect(TokenKind::Star, "`*`")?;
                    self.expect(TokenKind::RParen, "`)`")?;
                    Ok(Expr::CountStar)
                } else {
                    self.advance();
                    Ok(Expr::Column(name))
                }
            }
            TokenKind::String(s) => {
                self.advance();
                Ok(Expr::Literal(Literal::String(s)))
            }
            TokenKind::Integer(_) | TokenKind::Float(_) => self.parse_number(false),
            TokenKind::Minus => {
                self.advance();
                match self.peek().kind {
                    TokenKind::Integer(_) | TokenKind::Float(_) => self.parse_number(true),
                    _ => Err(self.error(&["number"])),
                }
            }
            TokenKind::LParen => {
                self.advance();
                let inner = self.parse_expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.error(&["column", "literal", "COUNT(*)", "`(`"])),
        }
    }

    fn parse_number(&mut self, negative: bool) -> Result<Expr, ParseError> {
        let tok = self.peek().clone();
        let sign = if negative { "-" } else { "" };
        let lit = match &tok.kind {
            TokenKind::Integer(digits) => format!("{sign}{digits}")
                .parse::<i64>()
                .map(Literal::Integer)
                .map_err(|_| self.error(&["integer in 64-bit range"]))?,
            TokenKind::Float(text) => {
                let v = format!("{sign}{text}")
                    .parse::<f64>()
                    .map_err(|_| self.error(&["number"]))?;
                if !v.is_finite() {
                    return Err(self.error(&["finite number"]));
                }
                Literal::Float(v)
            }
            _ => return Err(self.error(&["number"])),
        };
        self.advance();
        Ok(Expr::Literal(lit))
    }
}
