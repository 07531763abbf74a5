use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Select,
    Distinct,
    From,
    Where,
    Group,
    By,
    Having,
    As,
    And,
    Or,
    Not,
    Intersect,
    Union,
    Except,
    Limit,
    Semantic,
}

impl Keyword {
    fn lookup(word: &str) -> Option<Keyword> {
        const TABLE: &[(&str, Keyword)] = &[
            ("SELECT", Keyword::Select),
            ("DISTINCT", Keyword::Distinct),
            ("FROM", Keyword::From),
            ("WHERE", Keyword::Where),
            ("GROUP", Keyword::Group),
            ("BY", Keyword::By),
            ("HAVING", Keyword::Having),
            ("AS", Keyword::As),
            ("AND", Keyword::And),
            ("OR", Keyword::Or),
            ("NOT", Keyword::Not),
            ("INTERSECT", Keyword::Intersect),
            ("UNION", Keyword::Union),
            ("EXCEPT", Keyword::Except),
            ("LIMIT", Keyword::Limit),
            ("SEMANTIC", Keyword::Semantic),
        ];
        TABLE
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(word))
            .map(|(_, kw)| *kw)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Select => "SELECT",
            Keyword::Distinct => "DISTINCT",
            Keyword::From => "FROM",
            Keyword::Where => "WHERE",
            Keyword::Group => "GROUP",
            Keyword::By => "BY",
            Keyword::Having => "HAVING",
            Keyword::As => "AS",
            Keyword::And => "AND",
            Keyword::Or => "OR",
            Keyword::Not => "NOT",
            Keyword::Intersect => "INTERSECT",
            Keyword::Union => "UNION",
            Keyword::Except => "EXCEPT",
            Keyword::Limit => "LIMIT",
            Keyword::Semantic => "SEMANTIC",
        }
    }
}

/// True if `word` would lex as a reserved keyword rather than an identifier.
pub fn is_keyword(word: &str) -> bool {
    Keyword::lookup(word).is_some()
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    /// Unsigned digit run; sign is handled by the parser.
    Integer(String),
    Float(String),
    String(String),
    Comma,
    LParen,
    RParen,
    Star,
    Minus,
    Semicolon,
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Keyword(k) => k.as_str().to_string(),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Integer(s) | TokenKind::Float(s) => format!("number `{s}`"),
            TokenKind::String(s) => format!("string '{s}'"),
            TokenKind::Comma => "`,`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Semicolon => "`;`".into(),
            TokenKind::Eq => "`=`".into(),
            TokenKind::NotEq => "`<>`".into(),
            TokenKind::Lt => "`<`".into(),
            TokenKind::LtEq => "`<=`".into(),
            TokenKind::Gt => "`>`".into(),
            TokenKind::GtEq => "`>=`".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub column: usize,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, buf: &mut String, pred: impl Fn(char) -> bool) {
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            buf.push(c);
            self.bump();
        }
    }
}

fn lex_error(line: usize, column: usize, expected: &[&str], found: String) -> ParseError {
    ParseError::Syntax {
        line,
        column,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found,
    }
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        chars: source.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();

    loop {
        // whitespace and `--` comments
        while let Some(c) = cur.peek() {
            if c.is_whitespace() {
                cur.bump();
            } else if c == '-' {
                let mut ahead = cur.chars.clone();
                ahead.next();
                if ahead.peek() == Some(&'-') {
                    while let Some(c) = cur.peek() {
                        if c == '\n' {
                            break;
                        }
                        cur.bump();
                    }
                } else {
                    break;
                }
            } else {
                break;
            }
        }

        let (line, column) = (cur.line, cur.column);
        let Some(c) = cur.peek() else {
            tokens.push(Token {
                kind: TokenKind::Eof,
                line,
                column,
            });
            return Ok(tokens);
        };

        let kind = if c.is_alphabetic() || c == '_' {
            let mut word = String::new();
            cur.take_while(&mut word, |c| c.is_alphanumeric() || c == '_');
            match Keyword::lookup(&word) {
                Some(kw) => TokenKind::Keyword(kw),
                None => TokenKind::Ident(word),
            }
        } else if c.is_ascii_digit() || c == '.' {
            lex_number(&mut cur, line, column)?
        } else if c == '\'' {
            cur.bump();
            let mut text = String::new();
            loop {
                match cur.bump() {
                    Some('\'') => {
                        if cur.peek() == Some('\'') {
                            cur.bump();
                            text.push('\'');
                        } else {
                            break;
                        }
                    }
                    Some(ch) => text.push(ch),
                    None => {
                        return Err(lex_error(
                            line,
                            column,
                            &["closing `'`"],
                            "end of input".into(),
                        ))
                    }
                }
            }
            TokenKind::String(text)
        } else {
            cur.bump();
            match c {
                ',' => TokenKind::Comma,
                '(' => TokenKind::LParen,
                ')' => TokenKind::RParen,
                '*' => TokenKind::Star,
                '-' => TokenKind::Minus,
                ';' => TokenKind::Semicolon,
                '=' => {
                    if cur.peek() == Some('=') {
                        cur.bump();
                    }
                    TokenKind::Eq
                }
                '<' => match cur.peek() {
                    Some('=') => {
                        cur.bump();
                        TokenKind::LtEq
                    }
                    Some('>') => {
                        cur.bump();
                        TokenKind::NotEq
                    }
                    _ => TokenKind::Lt,
                },
                '>' => {
                    if cur.peek() == Some('=') {
                        cur.bump();
                        TokenKind::GtEq
                    } else {
                        TokenKind::Gt
                    }
                }
                '!' if cur.peek() == Some('=') => {
                    cur.bump();
                    TokenKind::NotEq
                }
                other => {
                    return Err(lex_error(
                        line,
                        column,
                        &["token"],
                        format!("character `{other}`"),
                    ))
                }
            }
        };
        tokens.push(Token { kind, line, column });
    }
}

fn lex_number(cur: &mut Cursor<'_>, line: usize, column: usize) -> Result<TokenKind, ParseError> {
    let mut text = String::new();
    cur.take_while(&mut text, |c| c.is_ascii_digit());
    let mut is_float = false;
    if cur.peek() == Some('.') {
        is_float = true;
        text.push('.');
        cur.bump();
        cur.take_while(&mut text, |c| c.is_ascii_digit());
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        is_float = true;
        text.push('e');
        cur.bump();
        if let Some(sign @ ('+' | '-')) = cur.peek() {
            text.push(sign);
            cur.bump();
        }
        let before = text.len();
        cur.take_while(&mut text, |c| c.is_ascii_digit());
        if text.len() == before {
            return Err(lex_error(line, column, &["exponent digits"], text));
        }
    }
    if !text.bytes().any(|b| b.is_ascii_digit()) {
        return Err(lex_error(line, column, &["number"], text));
    }
    if matches!(cur.peek(), Some(c) if c.is_alphabetic() || c == '_') {
        return Err(lex_error(
            line,
            cur.column,
            &["delimiter after number"],
            format!("`{}`", cur.peek().unwrap()),
        ));
    }
    Ok(if is_float {
        TokenKind::Float(text)
    } else {
        TokenKind::Integer(text)
    })
}
