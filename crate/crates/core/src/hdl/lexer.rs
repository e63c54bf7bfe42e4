use super::error::HdlError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// `$signed`, `$unsigned`, ...
    System(String),
    /// Literal with optional explicit width.
    Number {
        width: Option<u32>,
        value: u64,
    },
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub start: usize,
    pub end: usize,
}

const SYMBOLS: [&str; 28] = [
    "<<", ">>", "==", "!=", "<=", "(", ")", "[", "]", "{", "}", ";", ",", ":", ".", "@", "#", "=",
    "+", "-", "&", "|", "^", "~", "!", "?", "*", "<",
];

pub fn lex(src: &str) -> Result<Vec<Token>, HdlError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let start = i;
            i += 2;
            loop {
                if i + 1 >= bytes.len() {
                    return Err(HdlError::syntax(start, "end of block comment"));
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    i += 2;
                    break;
                }
                i += 1;
            }
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'$')
            {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                start,
                end: i,
            });
            continue;
        }
        if c == b'$' {
            i += 1;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            if i == start + 1 {
                return Err(HdlError::syntax(start, "system function name"));
            }
            out.push(Token {
                tok: Tok::System(src[start + 1..i].to_string()),
                start,
                end: i,
            });
            continue;
        }
        if c.is_ascii_digit() || c == b'\'' {
            let (tok, next) = lex_number(src, i)?;
            out.push(Token {
                tok,
                start,
                end: next,
            });
            i = next;
            continue;
        }
        match SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            Some(sym) => {
                i += sym.len();
                out.push(Token {
                    tok: Tok::Sym(sym),
                    start,
                    end: i,
                });
            }
            None => return Err(HdlError::syntax(start, "token")),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        start: src.len(),
        end: src.len(),
    });
    Ok(out)
}

fn lex_number(src: &str, start: usize) -> Result<(Tok, usize), HdlError> {
    let bytes = src.as_bytes();
    let mut i = start;
    let digits_end = |mut j: usize, ok: &dyn Fn(u8) -> bool| {
        while j < bytes.len() && (ok(bytes[j]) || bytes[j] == b'_') {
            j += 1;
        }
        j
    };
    let mut width = None;
    if bytes[i].is_ascii_digit() {
        let end = digits_end(i, &|b| b.is_ascii_digit());
        let text: String = src[i..end].chars().filter(|&c| c != '_').collect();
        let value: u64 = text
            .parse()
            .map_err(|_| HdlError::syntax(i, "decimal literal below 2^64"))?;
        i = end;
        if bytes.get(i) != Some(&b'\'') {
            return Ok((Tok::Number { width: None, value }, i));
        }
        width = Some(u32::try_from(value).map_err(|_| HdlError::syntax(start, "literal width"))?);
    }
    // at the tick
    i += 1;
    if matches!(bytes.get(i), Some(b's') | Some(b'S')) {
        return Err(HdlError::syntax(
            i,
            "unsigned literal (signed literals are outside the subset)",
        ));
    }
    let radix = match bytes.get(i) {
        Some(b'b') | Some(b'B') => 2,
        Some(b'o') | Some(b'O') => 8,
        Some(b'd') | Some(b'D') => 10,
        Some(b'h') | Some(b'H') => 16,
        _ => return Err(HdlError::syntax(i, "base specifier b, o, d or h")),
    };
    i += 1;
    let body_start = i;
    let end = digits_end(i, &|b| (b as char).is_digit(radix));
    if end == body_start {
        return Err(HdlError::syntax(body_start, "literal digits"));
    }
    let text: String = src[body_start..end].chars().filter(|&c| c != '_').collect();
    let value = u64::from_str_radix(&text, radix)
        .map_err(|_| HdlError::syntax(body_start, "literal value below 2^64"))?;
    Ok((
        Tok::Number {
            width: width.or(Some(32)),
            value,
        },
        end,
    ))
}
