//! Tokenizer shared by rule, fact and module files. `%` starts a line comment.

use std::fmt;

use num::{BigInt, BigRational, Num, Zero};

use super::parser::ParseError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Number(BigRational),
    Str(String),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(n) => write!(f, "number {n}"),
            Tok::Str(_) => f.write_str("string literal"),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const PUNCTS: &[&str] = &[
    ":-", "<=", ">=", "!=", "(", ")", ",", ".", ":", ";", "/", "{", "}", "<", ">", "=", "+", "-",
    "*",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    let advance = |i: &mut usize, line: &mut u32, col: &mut u32, n: usize, chars: &[char]| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1, &chars);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1, &chars);
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            let mut end = i;
            loop {
                while end < chars.len() && (chars[end].is_ascii_alphanumeric() || chars[end] == '_')
                {
                    end += 1;
                }
                // dotted continuation such as `R0.1`
                if end + 1 < chars.len() && chars[end] == '.' && chars[end + 1].is_ascii_digit() {
                    end += 1;
                    continue;
                }
                break;
            }
            let text: String = chars[start..end].iter().collect();
            advance(&mut i, &mut line, &mut col, end - start, &chars);
            out.push(Token {
                tok: Tok::Ident(text),
                pos,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            let mut end = i;
            let digits = |end: &mut usize| {
                while *end < chars.len() && chars[*end].is_ascii_digit() {
                    *end += 1;
                }
            };
            digits(&mut end);
            let int_part: String = chars[start..end].iter().collect();
            let mut value =
                BigRational::from_integer(BigInt::from_str_radix(&int_part, 10).unwrap());
            if end + 1 < chars.len() && chars[end] == '.' && chars[end + 1].is_ascii_digit() {
                let frac_start = end + 1;
                end += 1;
                digits(&mut end);
                let frac: String = chars[frac_start..end].iter().collect();
                let scale = BigInt::from(10).pow(frac.len() as u32);
                let frac_val = BigInt::from_str_radix(&frac, 10).unwrap();
                value += BigRational::new(frac_val, scale);
            }
            if end + 1 < chars.len() && chars[end] == '/' && chars[end + 1].is_ascii_digit() {
                let den_start = end + 1;
                end += 1;
                digits(&mut end);
                let den: String = chars[den_start..end].iter().collect();
                let den = BigInt::from_str_radix(&den, 10).unwrap();
                if den.is_zero() {
                    return Err(ParseError::syntax(
                        pos,
                        "zero denominator in rational literal",
                    ));
                }
                value /= BigRational::from_integer(den);
            }
            advance(&mut i, &mut line, &mut col, end - start, &chars);
            out.push(Token {
                tok: Tok::Number(value),
                pos,
            });
            continue;
        }
        if c == '"' {
            let mut s = String::new();
            let mut j = i + 1;
            loop {
                match chars.get(j) {
                    None | Some('\n') => {
                        return Err(ParseError::syntax(pos, "unterminated string literal"))
                    }
                    Some('"') => break,
                    Some('\\') => {
                        match chars.get(j + 1) {
                            Some('n') => s.push('\n'),
                            Some(&e @ ('"' | '\\')) => s.push(e),
                            _ => {
                                return Err(ParseError::syntax(
                                    pos,
                                    "invalid escape in string literal",
                                ))
                            }
                        }
                        j += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        j += 1;
                    }
                }
            }
            let len = j + 1 - i;
            advance(&mut i, &mut line, &mut col, len, &chars);
            out.push(Token {
                tok: Tok::Str(s),
                pos,
            });
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        match PUNCTS.iter().find(|p| rest.starts_with(*p)) {
            Some(p) => {
                advance(&mut i, &mut line, &mut col, p.len(), &chars);
                out.push(Token {
                    tok: Tok::Punct(p),
                    pos,
                });
            }
            None => {
                return Err(ParseError::syntax(
                    pos,
                    format!("unexpected character `{c}`"),
                ))
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, column: col },
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn dotted_rule_ids_and_terminators() {
        assert_eq!(
            toks("R0.1: x."),
            vec![
                Tok::Ident("R0.1".into()),
                Tok::Punct(":"),
                Tok::Ident("x".into()),
                Tok::Punct("."),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn decimals_are_exact() {
        let t = toks("0.8 10000.");
        assert_eq!(
            t[0],
            Tok::Number(BigRational::new(BigInt::from(4), BigInt::from(5)))
        );
        assert_eq!(
            t[1],
            Tok::Number(BigRational::from_integer(BigInt::from(10000)))
        );
        assert_eq!(t[2], Tok::Punct("."));
    }

    #[test]
    fn comments_and_positions() {
        let t = tokenize("% header\n  p :- q.").unwrap();
        assert_eq!(t[0].pos, Pos { line: 2, column: 3 });
        assert_eq!(t[1].tok, Tok::Punct(":-"));
    }

    #[test]
    fn bad_character_is_positioned() {
        let err = tokenize("p(X) :- q(X) & r.").unwrap_err();
        assert_eq!(
            err.position(),
            Pos {
                line: 1,
                column: 14
            }
        );
    }
}
