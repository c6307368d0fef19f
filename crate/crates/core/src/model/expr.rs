//! Tokenizer and affine-expression evaluator shared by every statement kind.

use std::collections::BTreeMap;

use super::ModelError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Le,
    Ge,
    EqEq,
    Assign,
    Colon,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    /// 1-based column.
    pub column: usize,
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub(crate) fn tokenize(
    text: &str,
    line: usize,
    col_offset: usize,
) -> Result<Vec<Token>, ModelError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let syntax = |col: usize, message: String| ModelError::Syntax {
        line,
        column: col + col_offset + 1,
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ':' => Tok::Colon,
            '<' | '>' | '=' => {
                let next = chars.get(i + 1).copied();
                match (c, next) {
                    ('<', Some('=')) => {
                        i += 1;
                        Tok::Le
                    }
                    ('>', Some('=')) => {
                        i += 1;
                        Tok::Ge
                    }
                    ('=', Some('=')) => {
                        i += 1;
                        Tok::EqEq
                    }
                    ('=', _) => Tok::Assign,
                    _ => return Err(syntax(start, format!("expected `{c}=`"))),
                }
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let literal: String = chars[i..j].iter().collect();
                let value: f64 = literal
                    .parse()
                    .map_err(|_| syntax(start, format!("invalid number `{literal}`")))?;
                i = j;
                out.push(Token {
                    tok: Tok::Num(value),
                    column: start + col_offset + 1,
                });
                continue;
            }
            c if is_ident_start(c) => {
                let mut j = i;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                let name: String = chars[i..j].iter().collect();
                i = j;
                out.push(Token {
                    tok: Tok::Ident(name),
                    column: start + col_offset + 1,
                });
                continue;
            }
            other => return Err(syntax(start, format!("unexpected character `{other}`"))),
        };
        i += 1;
        out.push(Token {
            tok,
            column: start + col_offset + 1,
        });
    }
    Ok(out)
}

/// `constant + Σ coeff·var` with variables identified by ordinal.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Affine {
    pub constant: f64,
    pub terms: BTreeMap<usize, f64>,
}

impl Affine {
    fn scalar(v: f64) -> Self {
        Affine {
            constant: v,
            terms: BTreeMap::new(),
        }
    }

    fn var(index: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(index, 1.0);
        Affine {
            constant: 0.0,
            terms,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.values().all(|&c| c == 0.0)
    }

    fn scale(mut self, k: f64) -> Self {
        self.constant *= k;
        for c in self.terms.values_mut() {
            *c *= k;
        }
        self
    }

    fn add(mut self, other: Affine, sign: f64) -> Self {
        self.constant += sign * other.constant;
        for (v, c) in other.terms {
            *self.terms.entry(v).or_insert(0.0) += sign * c;
        }
        self
    }

    pub fn sub(self, other: Affine) -> Self {
        self.add(other, -1.0)
    }

    /// Drops zero coefficients produced by cancellation.
    pub fn pruned(mut self) -> Self {
        self.terms.retain(|_, c| *c != 0.0);
        self
    }
}

pub(crate) enum Name {
    Scalar(f64),
    Variable(usize),
    Unknown,
}

/// Recursive-descent parser over one token slice.
pub(crate) struct ExprParser<'a, R: Fn(&str) -> Name> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
    end_column: usize,
    resolve: R,
    /// Whether unknown identifiers are reported as variables (true) or params.
    pub unknown_is_variable: bool,
}

impl<'a, R: Fn(&str) -> Name> ExprParser<'a, R> {
    pub fn new(toks: &'a [Token], line: usize, end_column: usize, resolve: R) -> Self {
        ExprParser {
            toks,
            pos: 0,
            line,
            end_column,
            resolve,
            unknown_is_variable: true,
        }
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    pub fn next(&mut self) -> Option<&Token> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn column(&self) -> usize {
        self.toks
            .get(self.pos)
            .map_or(self.end_column, |t| t.column)
    }

    pub fn error(&self, message: impl Into<String>) -> ModelError {
        ModelError::Syntax {
            line: self.line,
            column: self.column(),
            message: message.into(),
        }
    }

    pub fn expr(&mut self) -> Result<Affine, ModelError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = acc.add(rhs, 1.0);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = acc.add(rhs, -1.0);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Affine, ModelError> {
        let mut acc = self.unary()?;
        loop {
            let column = self.column();
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = self.multiply(acc, rhs, column)?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    if !rhs.is_constant() {
                        return Err(ModelError::Nonlinear {
                            line: self.line,
                            column,
                        });
                    }
                    if rhs.constant == 0.0 {
                        return Err(ModelError::Syntax {
                            line: self.line,
                            column,
                            message: "division by zero".into(),
                        });
                    }
                    acc = acc.scale(1.0 / rhs.constant);
                }
                // juxtaposition: `500 A`, `2 (A + B)`
                Some(Tok::Ident(_)) | Some(Tok::Num(_)) | Some(Tok::LParen) => {
                    let rhs = self.primary()?;
                    acc = self.multiply(acc, rhs, column)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn multiply(&self, a: Affine, b: Affine, column: usize) -> Result<Affine, ModelError> {
        match (a.is_constant(), b.is_constant()) {
            (true, _) => Ok(b.scale(a.constant)),
            (false, true) => Ok(a.scale(b.constant)),
            (false, false) => Err(ModelError::Nonlinear {
                line: self.line,
                column,
            }),
        }
    }

    fn unary(&mut self) -> Result<Affine, ModelError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(self.unary()?.scale(-1.0))
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Affine, ModelError> {
        let Some(token) = self.toks.get(self.pos).cloned() else {
            return Err(self.error("unexpected end of expression"));
        };
        self.pos += 1;
        match token.tok {
            Tok::Num(v) => Ok(Affine::scalar(v)),
            Tok::Ident(name) => match (self.resolve)(&name) {
                Name::Scalar(v) => Ok(Affine::scalar(v)),
                Name::Variable(i) => Ok(Affine::var(i)),
                Name::Unknown if name == "inf" => Ok(Affine::scalar(f64::INFINITY)),
                Name::Unknown if self.unknown_is_variable => Err(ModelError::UndeclaredVariable {
                    line: self.line,
                    name,
                }),
                Name::Unknown => Err(ModelError::UnresolvedParam {
                    line: self.line,
                    name,
                }),
            },
            Tok::LParen => {
                let inner = self.expr()?;
                match self.next() {
                    Some(Token {
                        tok: Tok::RParen, ..
                    }) => Ok(inner),
                    _ => {
                        self.pos -= 1;
                        Err(self.error("expected `)`"))
                    }
                }
            }
            _ => {
                self.pos -= 1;
                Err(self.error("expected a number, name, or `(`"))
            }
        }
    }
}

/// Evaluates an expression that must be a scalar (no variables).
pub(crate) fn eval_scalar<R: Fn(&str) -> Name>(
    toks: &[Token],
    line: usize,
    end_column: usize,
    resolve: R,
) -> Result<f64, ModelError> {
    let mut p = ExprParser::new(toks, line, end_column, resolve);
    p.unknown_is_variable = false;
    let value = p.expr()?;
    if !p.at_end() {
        return Err(p.error("unexpected trailing input"));
    }
    if !value.is_constant() {
        return Err(ModelError::Syntax {
            line,
            column: toks.first().map_or(1, |t| t.column),
            message: "expected a numeric expression without variables".into(),
        });
    }
    if value.constant.is_nan() {
        return Err(ModelError::Syntax {
            line,
            column: toks.first().map_or(1, |t| t.column),
            message: "expression is not a number".into(),
        });
    }
    Ok(value.constant)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(text: &str) -> Result<Affine, ModelError> {
        let toks = tokenize(text, 1, 0)?;
        let mut p = ExprParser::new(&toks, 1, text.len() + 1, |n| match n {
            "k" => Name::Scalar(4.0),
            "A" => Name::Variable(0),
            "B" => Name::Variable(1),
            _ => Name::Unknown,
        });
        let e = p.expr()?;
        assert!(p.at_end());
        Ok(e.pruned())
    }

    #[test]
    fn juxtaposition_and_precedence() {
        let e = eval("500 A + k*B - 2 (A - 3) / 4").unwrap();
        assert_eq!(e.terms[&0], 499.5);
        assert_eq!(e.terms[&1], 4.0);
        assert_eq!(e.constant, 1.5);
    }

    #[test]
    fn rejects_products_of_variables() {
        assert!(matches!(eval("A * B"), Err(ModelError::Nonlinear { .. })));
        assert!(matches!(eval("A B"), Err(ModelError::Nonlinear { .. })));
        assert!(matches!(eval("k / A"), Err(ModelError::Nonlinear { .. })));
    }

    #[test]
    fn cancellation_prunes_terms() {
        let e = eval("A + B - A").unwrap();
        assert_eq!(e.terms.len(), 1);
    }

    #[test]
    fn scientific_literals() {
        let toks = tokenize("1.5e3 2E-2", 1, 0).unwrap();
        assert_eq!(toks[0].tok, Tok::Num(1500.0));
        assert_eq!(toks[1].tok, Tok::Num(0.02));
    }

    #[test]
    fn unknown_names_are_reported_by_context() {
        assert!(matches!(
            eval("A + C"),
            Err(ModelError::UndeclaredVariable { ref name, .. }) if name == "C"
        ));
        let toks = tokenize("q + 1", 3, 0).unwrap();
        let err = eval_scalar(&toks, 3, 6, |_| Name::Unknown).unwrap_err();
        assert!(matches!(err, ModelError::UnresolvedParam { line: 3, .. }));
    }
}
