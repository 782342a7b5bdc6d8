use std::fmt;

use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Colon,
    Becomes,
    ChooseFrom,
    Eq,
    Neq,
    NotIn,
    Subset,
    And,
    Or,
    Implies,
    Bang,
    Maplet,
    Override,
    DomSub,
    Plus,
    Backslash,
    Star,
    Arrow,
    PartialArrow,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Tok::Ident(_) => "identifier",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Colon => ":",
            Tok::Becomes => ":=",
            Tok::ChooseFrom => "::",
            Tok::Eq => "=",
            Tok::Neq => "/=",
            Tok::NotIn => "/:",
            Tok::Subset => "<:",
            Tok::And => "/\\",
            Tok::Or => "\\/",
            Tok::Implies => "=>",
            Tok::Bang => "!",
            Tok::Maplet => "|->",
            Tok::Override => "<+",
            Tok::DomSub => "<<|",
            Tok::Plus => "+",
            Tok::Backslash => "\\",
            Tok::Star => "*",
            Tok::Arrow => "->",
            Tok::PartialArrow => "+->",
            Tok::Eof => "end of input",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const SYMBOLS: &[(&str, Tok)] = &[
    ("|->", Tok::Maplet),
    ("<<|", Tok::DomSub),
    ("+->", Tok::PartialArrow),
    (":=", Tok::Becomes),
    ("::", Tok::ChooseFrom),
    ("/=", Tok::Neq),
    ("/:", Tok::NotIn),
    ("<:", Tok::Subset),
    ("/\\", Tok::And),
    ("\\/", Tok::Or),
    ("=>", Tok::Implies),
    ("<+", Tok::Override),
    ("->", Tok::Arrow),
    ("{", Tok::LBrace),
    ("}", Tok::RBrace),
    ("(", Tok::LParen),
    (")", Tok::RParen),
    ("[", Tok::LBracket),
    ("]", Tok::RBracket),
    (",", Tok::Comma),
    (".", Tok::Dot),
    (":", Tok::Colon),
    ("=", Tok::Eq),
    ("!", Tok::Bang),
    ("+", Tok::Plus),
    ("\\", Tok::Backslash),
    ("*", Tok::Star),
];

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut rest = text;

    while let Some(c) = rest.chars().next() {
        let pos = Pos { line, col };
        if c == '\n' {
            line += 1;
            col = 1;
            rest = &rest[1..];
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            rest = &rest[c.len_utf8()..];
            continue;
        }
        if rest.starts_with("--") {
            let end = rest.find('\n').unwrap_or(rest.len());
            col += rest[..end].chars().count() as u32;
            rest = &rest[end..];
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let end = rest
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .unwrap_or(rest.len());
            out.push(Token {
                tok: Tok::Ident(rest[..end].to_string()),
                pos,
            });
            col += end as u32;
            rest = &rest[end..];
            continue;
        }
        match SYMBOLS.iter().find(|(s, _)| rest.starts_with(s)) {
            Some((sym, tok)) => {
                out.push(Token { tok: tok.clone(), pos });
                col += sym.len() as u32;
                rest = &rest[sym.len()..];
            }
            None => {
                return Err(ParseError::Syntax {
                    pos,
                    found: format!("character {c:?}"),
                    expected: vec!["identifier".into(), "symbol".into()],
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn longest_symbol_wins() {
        assert_eq!(
            kinds("a |-> b <<| c +-> d + e"),
            vec![
                Tok::Ident("a".into()),
                Tok::Maplet,
                Tok::Ident("b".into()),
                Tok::DomSub,
                Tok::Ident("c".into()),
                Tok::PartialArrow,
                Tok::Ident("d".into()),
                Tok::Plus,
                Tok::Ident("e".into()),
                Tok::Eof
            ]
        );
        assert_eq!(kinds("\\/ \\ /\\"), vec![Tok::Or, Tok::Backslash, Tok::And, Tok::Eof]);
    }

    #[test]
    fn comments_and_positions() {
        let toks = tokenize("-- header\n  x := {}").unwrap();
        assert_eq!(toks[0].pos, Pos { line: 2, col: 3 });
        assert_eq!(toks[1].tok, Tok::Becomes);
        assert_eq!(toks[1].pos, Pos { line: 2, col: 5 });
    }

    #[test]
    fn stray_character_is_positioned() {
        match tokenize("x\n  ? y") {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, Pos { line: 2, col: 3 }),
            other => panic!("unexpected {other:?}"),
        }
    }
}
