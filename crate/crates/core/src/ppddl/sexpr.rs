//! Minimal s-expression reader with source positions. PDDL identifiers
//! are case-insensitive, so symbols are lowercased during lexing;
//! `;` starts a comment running to the end of the line.

use super::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone)]
pub enum SExpr {
    Sym(String, Pos),
    List(Vec<SExpr>, Pos),
}

impl SExpr {
    pub fn pos(&self) -> Pos {
        match self {
            SExpr::Sym(_, p) | SExpr::List(_, p) => *p,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            SExpr::Sym(s, _) => Some(s),
            SExpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            SExpr::Sym(..) => None,
        }
    }

    /// First element when this is a list headed by a symbol.
    pub fn head(&self) -> Option<&str> {
        self.as_list()
            .and_then(|items| items.first())
            .and_then(|e| e.as_sym())
    }
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    at: usize,
    line: u32,
    col: u32,
}

#[derive(Debug)]
enum Token {
    LParen(Pos),
    RParen(Pos),
    Sym(String, Pos),
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            at: 0,
            line: 1,
            col: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let b = *self.bytes.get(self.at)?;
        self.at += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.at).copied()
    }

    fn next_token(&mut self) -> Option<Token> {
        loop {
            let b = self.peek()?;
            match b {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.bump();
                }
                b';' => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                b'(' => {
                    let p = self.pos();
                    self.bump();
                    return Some(Token::LParen(p));
                }
                b')' => {
                    let p = self.pos();
                    self.bump();
                    return Some(Token::RParen(p));
                }
                _ => {
                    let p = self.pos();
                    let start = self.at;
                    while let Some(c) = self.peek() {
                        if c.is_ascii_whitespace() || c == b'(' || c == b')' || c == b';' {
                            break;
                        }
                        self.bump();
                    }
                    let text = self.src[start..self.at].to_ascii_lowercase();
                    return Some(Token::Sym(text, p));
                }
            }
        }
    }
}

/// Reads all top-level forms in the input.
pub fn read_all(src: &str) -> Result<Vec<SExpr>, ParseError> {
    let mut lexer = Lexer::new(src);
    let mut stack: Vec<(Vec<SExpr>, Pos)> = Vec::new();
    let mut top = Vec::new();
    while let Some(token) = lexer.next_token() {
        match token {
            Token::LParen(p) => stack.push((Vec::new(), p)),
            Token::RParen(p) => match stack.pop() {
                Some((items, open)) => {
                    let expr = SExpr::List(items, open);
                    match stack.last_mut() {
                        Some((parent, _)) => parent.push(expr),
                        None => top.push(expr),
                    }
                }
                None => {
                    return Err(ParseError::new(
                        ParseErrorKind::Syntax("unmatched closing parenthesis".into()),
                        p,
                    ))
                }
            },
            Token::Sym(text, p) => {
                let expr = SExpr::Sym(text, p);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(expr),
                    None => top.push(expr),
                }
            }
        }
    }
    if let Some((_, open)) = stack.pop() {
        return Err(ParseError::new(
            ParseErrorKind::Syntax("unclosed parenthesis".into()),
            open,
        ));
    }
    Ok(top)
}

/// Parses a probability weight: a decimal or a `p/q` rational.
pub fn parse_weight(text: &str, pos: Pos) -> Result<f64, ParseError> {
    let value = if let Some((num, den)) = text.split_once('/') {
        let n: f64 = num.parse().map_err(|_| bad_number(text, pos))?;
        let d: f64 = den.parse().map_err(|_| bad_number(text, pos))?;
        if d == 0.0 {
            return Err(bad_number(text, pos));
        }
        n / d
    } else {
        text.parse().map_err(|_| bad_number(text, pos))?
    };
    Ok(value)
}

fn bad_number(text: &str, pos: Pos) -> ParseError {
    ParseError::new(
        ParseErrorKind::Syntax(format!("expected a number, found `{}`", text)),
        pos,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_track_lines() {
        let exprs = read_all("(a\n  (b c))").unwrap();
        assert_eq!(exprs.len(), 1);
        let items = exprs[0].as_list().unwrap();
        let inner = items[1].pos();
        assert_eq!((inner.line, inner.col), (2, 3));
    }

    #[test]
    fn unclosed_paren_reports_opening() {
        let err = read_all("(a (b c)").unwrap_err();
        assert_eq!((err.line, err.col), (1, 1));
    }

    #[test]
    fn rational_weights() {
        let p = Pos { line: 1, col: 1 };
        assert_eq!(parse_weight("3/4", p).unwrap(), 0.75);
        assert_eq!(parse_weight("0.8", p).unwrap(), 0.8);
        assert!(parse_weight("x", p).is_err());
    }
}
