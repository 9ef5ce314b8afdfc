use super::error::{SyntaxError, SyntaxErrorKind};

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    /// Bare word: keyword or identifier, resolved by the parser.
    Word(String),
    /// `[x]`, `"x"` or `` `x` ``.
    QuotedIdent(String),
    String(String),
    Number(String),
    LParen,
    RParen,
    Comma,
    Semicolon,
    Dot,
    Star,
    Slash,
    Plus,
    Minus,
    Percent,
    Concat,
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
            TokenKind::Word(w) => w.clone(),
            TokenKind::QuotedIdent(w) => format!("[{w}]"),
            TokenKind::String(s) => format!("'{s}'"),
            TokenKind::Number(n) => n.clone(),
            TokenKind::LParen => "(".into(),
            TokenKind::RParen => ")".into(),
            TokenKind::Comma => ",".into(),
            TokenKind::Semicolon => ";".into(),
            TokenKind::Dot => ".".into(),
            TokenKind::Star => "*".into(),
            TokenKind::Slash => "/".into(),
            TokenKind::Plus => "+".into(),
            TokenKind::Minus => "-".into(),
            TokenKind::Percent => "%".into(),
            TokenKind::Concat => "||".into(),
            TokenKind::Eq => "=".into(),
            TokenKind::NotEq => "<>".into(),
            TokenKind::Lt => "<".into(),
            TokenKind::LtEq => "<=".into(),
            TokenKind::Gt => ">".into(),
            TokenKind::GtEq => ">=".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Byte offset of the first character.
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '#' || c == '$'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '#' || c == '$'
}

/// Splits source text into tokens. Comments (`--` and `/* */`) and
/// whitespace are dropped.
pub fn tokenize(source: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<(usize, char)> = source.char_indices().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    macro_rules! advance {
        () => {{
            if chars[i].1 == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let (offset, c) = chars[i];
        let (tok_line, tok_col) = (line, col);
        let peek = chars.get(i + 1).map(|p| p.1);

        if c.is_whitespace() {
            advance!();
            continue;
        }
        if c == '-' && peek == Some('-') {
            while i < chars.len() && chars[i].1 != '\n' {
                advance!();
            }
            continue;
        }
        if c == '/' && peek == Some('*') {
            advance!();
            advance!();
            loop {
                if i >= chars.len() {
                    return Err(SyntaxError::new(
                        SyntaxErrorKind::UnterminatedComment,
                        tok_line,
                        tok_col,
                        offset,
                    ));
                }
                if chars[i].1 == '*' && chars.get(i + 1).map(|p| p.1) == Some('/') {
                    advance!();
                    advance!();
                    break;
                }
                advance!();
            }
            continue;
        }

        let kind = if is_ident_start(c) {
            let mut word = String::new();
            while i < chars.len() && is_ident_char(chars[i].1) {
                word.push(chars[i].1);
                advance!();
            }
            push(&mut tokens, TokenKind::Word(word), offset, tok_line, tok_col);
            continue;
        } else if c.is_ascii_digit() || (c == '.' && peek.is_some_and(|p| p.is_ascii_digit())) {
            let mut num = String::new();
            let mut seen_dot = false;
            while i < chars.len() {
                let ch = chars[i].1;
                if ch.is_ascii_digit() {
                    num.push(ch);
                } else if ch == '.' && !seen_dot {
                    seen_dot = true;
                    num.push(ch);
                } else if (ch == 'e' || ch == 'E')
                    && chars.get(i + 1).is_some_and(|p| p.1.is_ascii_digit() || p.1 == '-' || p.1 == '+')
                {
                    num.push(ch);
                    advance!();
                    num.push(chars[i].1);
                } else {
                    break;
                }
                advance!();
            }
            push(&mut tokens, TokenKind::Number(num), offset, tok_line, tok_col);
            continue;
        } else if c == '\'' {
            let mut s = String::new();
            advance!();
            loop {
                if i >= chars.len() {
                    return Err(SyntaxError::new(
                        SyntaxErrorKind::UnterminatedString,
                        tok_line,
                        tok_col,
                        offset,
                    ));
                }
                let ch = chars[i].1;
                if ch == '\'' {
                    if chars.get(i + 1).map(|p| p.1) == Some('\'') {
                        s.push('\'');
                        advance!();
                        advance!();
                        continue;
                    }
                    advance!();
                    break;
                }
                s.push(ch);
                advance!();
            }
            push(&mut tokens, TokenKind::String(s), offset, tok_line, tok_col);
            continue;
        } else if c == '[' || c == '"' || c == '`' {
            let close = match c {
                '[' => ']',
                other => other,
            };
            let mut s = String::new();
            advance!();
            loop {
                if i >= chars.len() {
                    return Err(SyntaxError::new(
                        SyntaxErrorKind::UnterminatedIdentifier,
                        tok_line,
                        tok_col,
                        offset,
                    ));
                }
                let ch = chars[i].1;
                if ch == close {
                    if close != ']' && chars.get(i + 1).map(|p| p.1) == Some(close) {
                        s.push(close);
                        advance!();
                        advance!();
                        continue;
                    }
                    advance!();
                    break;
                }
                s.push(ch);
                advance!();
            }
            push(&mut tokens, TokenKind::QuotedIdent(s.trim().to_string()), offset, tok_line, tok_col);
            continue;
        } else {
            match (c, peek) {
                ('|', Some('|')) => {
                    advance!();
                    TokenKind::Concat
                }
                ('<', Some('>')) | ('!', Some('=')) => {
                    advance!();
                    TokenKind::NotEq
                }
                ('<', Some('=')) => {
                    advance!();
                    TokenKind::LtEq
                }
                ('>', Some('=')) => {
                    advance!();
                    TokenKind::GtEq
                }
                ('=', Some('=')) => {
                    advance!();
                    TokenKind::Eq
                }
                ('(', _) => TokenKind::LParen,
                (')', _) => TokenKind::RParen,
                (',', _) => TokenKind::Comma,
                (';', _) => TokenKind::Semicolon,
                ('.', _) => TokenKind::Dot,
                ('*', _) => TokenKind::Star,
                ('/', _) => TokenKind::Slash,
                ('+', _) => TokenKind::Plus,
                ('-', _) => TokenKind::Minus,
                ('%', _) => TokenKind::Percent,
                ('=', _) => TokenKind::Eq,
                ('<', _) => TokenKind::Lt,
                ('>', _) => TokenKind::Gt,
                _ => {
                    return Err(SyntaxError::new(
                        SyntaxErrorKind::UnexpectedCharacter(c),
                        tok_line,
                        tok_col,
                        offset,
                    ))
                }
            }
        };
        advance!();
        push(&mut tokens, kind, offset, tok_line, tok_col);
    }

    tokens.push(Token { kind: TokenKind::Eof, offset: source.len(), line, column: col });
    Ok(tokens)
}

fn push(tokens: &mut Vec<Token>, kind: TokenKind, offset: usize, line: usize, column: usize) {
    tokens.push(Token { kind, offset, line, column });
}
