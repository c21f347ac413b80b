// SPDX-License-Identifier: Apache-2.0

use super::FrontendError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// Sized or unsized number: (width, value).
    Number(Option<u32>, u64),
    Sym(&'static str),
    /// Backtick directive, `#` delay and other things outside the subset.
    Unsupported(String),
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

const SYMBOLS: &[&str] = &[
    "<=", "==", "!=", "&&", "||", "(", ")", "[", "]", "{", "}", ";", ",", ".", ":", "@", "?", "=",
    "&", "|", "^", "~", "!", "+", "-", "*", "/", "<", ">", "%",
];

pub fn lex(text: &str, origin: &str) -> Result<Vec<Token>, FrontendError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (l0, c0) = (line, col);
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(FrontendError::Syntax {
                        origin: origin.into(),
                        line: l0,
                        column: c0,
                        expected: "end of block comment".into(),
                    });
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        let (l0, c0) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                s.push(chars[i]);
                bump!();
            }
            out.push(Token { tok: Tok::Ident(s), line: l0, col: c0 });
            continue;
        }
        if c.is_ascii_digit() || c == '\'' {
            let mut digits = String::new();
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '_') {
                if chars[i] != '_' {
                    digits.push(chars[i]);
                }
                bump!();
            }
            if i < chars.len() && chars[i] == '\'' {
                bump!();
                let width = if digits.is_empty() {
                    None
                } else {
                    match digits.parse::<u32>() {
                        Ok(w) if (1..=64).contains(&w) => Some(w),
                        _ => return Err(syntax(origin, l0, c0, "literal width between 1 and 64")),
                    }
                };
                let base = match chars.get(i).map(|c| c.to_ascii_lowercase()) {
                    Some('b') => 2,
                    Some('h') => 16,
                    Some('d') => 10,
                    Some('o') => 8,
                    _ => return Err(syntax(origin, line, col, "base letter b, h, d or o")),
                };
                bump!();
                let mut body = String::new();
                while i < chars.len() && (chars[i].is_ascii_hexdigit() || chars[i] == '_' || "xXzZ?".contains(chars[i])) {
                    if "xXzZ?".contains(chars[i]) {
                        return Err(FrontendError::Unsupported {
                            origin: origin.into(),
                            line,
                            construct: "x/z literal".into(),
                        });
                    }
                    if chars[i] != '_' {
                        body.push(chars[i]);
                    }
                    bump!();
                }
                let value = u64::from_str_radix(&body, base)
                    .map_err(|_| syntax(origin, l0, c0, "valid literal digits"))?;
                if let Some(w) = width {
                    if w < 64 && value >> w != 0 {
                        return Err(syntax(origin, l0, c0, "literal value that fits its width"));
                    }
                }
                out.push(Token { tok: Tok::Number(width, value), line: l0, col: c0 });
            } else {
                let value = digits
                    .parse::<u64>()
                    .map_err(|_| syntax(origin, l0, c0, "decimal literal"))?;
                out.push(Token { tok: Tok::Number(None, value), line: l0, col: c0 });
            }
            continue;
        }
        if c == '`' || c == '#' || c == '$' {
            let mut s = String::from(c);
            bump!();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                bump!();
            }
            out.push(Token { tok: Tok::Unsupported(s), line: l0, col: c0 });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                for _ in 0..sym.len() {
                    bump!();
                }
                out.push(Token { tok: Tok::Sym(sym), line: l0, col: c0 });
            }
            None => return Err(syntax(origin, l0, c0, "a token")),
        }
    }
    Ok(out)
}

fn syntax(origin: &str, line: u32, column: u32, expected: &str) -> FrontendError {
    FrontendError::Syntax {
        origin: origin.into(),
        line,
        column,
        expected: expected.into(),
    }
}
