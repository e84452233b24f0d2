//! Minimal S-expression reader for solver output and emitted scripts.

use std::fmt;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    /// Symbol, numeral, decimal, bit-vector literal or keyword. Quoted
    /// `|symbols|` are stored without the bars.
    Atom(String),
    Str(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(l) => Some(l),
            _ => None,
        }
    }

    pub fn is_atom(&self, s: &str) -> bool {
        self.atom() == Some(s)
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a) => f.write_str(a),
            Sexp::Str(s) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
            Sexp::List(items) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SexpError {
    #[error("unbalanced `)` at byte {0}")]
    UnexpectedClose(usize),
    #[error("unterminated list")]
    Unterminated,
    #[error("unterminated string or quoted symbol")]
    UnterminatedQuote,
}

/// Reads every top-level expression of `text`.
pub fn parse_sexps(text: &str) -> Result<Vec<Sexp>, SexpError> {
    let bytes = text.as_bytes();
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            b'(' => stack.push(Vec::new()),
            b')' => {
                if stack.len() == 1 {
                    return Err(SexpError::UnexpectedClose(i));
                }
                let done = stack.pop().expect("non-empty");
                stack.last_mut().expect("root").push(Sexp::List(done));
            }
            b'"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match bytes.get(i) {
                        None => return Err(SexpError::UnterminatedQuote),
                        Some(b'"') if bytes.get(i + 1) == Some(&b'"') => {
                            s.push('"');
                            i += 2;
                        }
                        Some(b'"') => break,
                        Some(_) => {
                            let ch = text[i..].chars().next().expect("in bounds");
                            s.push(ch);
                            i += ch.len_utf8();
                        }
                    }
                }
                stack.last_mut().expect("root").push(Sexp::Str(s));
            }
            b'|' => {
                let end = text[i + 1..].find('|').ok_or(SexpError::UnterminatedQuote)?;
                stack.last_mut().expect("root").push(Sexp::Atom(text[i + 1..i + 1 + end].to_string()));
                i += end + 1;
            }
            b if b.is_ascii_whitespace() => {}
            _ => {
                let start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && !b"()\";|".contains(&bytes[i]) {
                    i += 1;
                }
                stack.last_mut().expect("root").push(Sexp::Atom(text[start..i].to_string()));
                continue;
            }
        }
        i += 1;
    }
    if stack.len() != 1 {
        return Err(SexpError::Unterminated);
    }
    Ok(stack.pop().expect("root"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_and_quotes() {
        let e = parse_sexps("(a (b |c d| \"e\"\"f\") ; comment\n 1.5) x").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].to_string(), "(a (b c d \"e\"\"f\") 1.5)");
        assert!(e[1].is_atom("x"));
        assert!(parse_sexps("(a").is_err());
        assert!(parse_sexps("a)").is_err());
    }
}
