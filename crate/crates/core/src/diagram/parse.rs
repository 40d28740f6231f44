//! S-expression syntax for diagrams.
//!
//! ```text
//! expr := atom | (seq expr expr+) | (par expr expr+)
//! atom := id | tick | swap | (OP ALG) | (state NAME z*) | (effect NAME z*)
//! OP   := mult | comult | unit | counit | cap | cup
//! z    := 1.5 | -2i | 0.5+1e-3i
//! ```
//!
//! A variable with `k` amplitudes spans `log2 k` legs; without amplitudes it
//! is a symbolic single leg.

use num_complex::Complex64 as C64;
use super::{ Diagram, DiagramError, DiagramResult, GenOp, NodeKind };

#[derive(Clone, Debug, PartialEq)]
enum Sexp {
    Atom(String, usize, usize),
    List(Vec<Sexp>, usize, usize),
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> DiagramError {
    DiagramError::Syntax { line, col, msg: msg.into() }
}

fn tokenize(text: &str) -> Vec<(String, usize, usize)> {
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 1);
    let mut cur: Option<(String, usize, usize)> = None;
    for ch in text.chars() {
        let flush = |cur: &mut Option<(String, usize, usize)>, out: &mut Vec<_>| {
            if let Some(t) = cur.take() { out.push(t); }
        };
        match ch {
            '(' | ')' => {
                flush(&mut cur, &mut out);
                out.push((ch.to_string(), line, col));
            }
            c if c.is_whitespace() => flush(&mut cur, &mut out),
            c => match cur.as_mut() {
                Some(t) => t.0.push(c),
                None => cur = Some((c.to_string(), line, col)),
            },
        }
        if ch == '\n' { line += 1; col = 1; } else { col += 1; }
    }
    if let Some(t) = cur { out.push(t); }
    out
}

fn read(tokens: &[(String, usize, usize)], pos: &mut usize) -> DiagramResult<Sexp> {
    let Some((t, l, c)) = tokens.get(*pos).cloned() else {
        let (l, c) = tokens.last().map(|x| (x.1, x.2)).unwrap_or((1, 1));
        return Err(syntax(l, c, "unexpected end of input"));
    };
    *pos += 1;
    match t.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => return Err(syntax(l, c, "unclosed parenthesis")),
                    Some((x, _, _)) if x == ")" => { *pos += 1; break; }
                    _ => items.push(read(tokens, pos)?),
                }
            }
            Ok(Sexp::List(items, l, c))
        }
        ")" => Err(syntax(l, c, "unexpected ')'")),
        _ => Ok(Sexp::Atom(t, l, c)),
    }
}

/// Parses `1`, `-2.5`, `3i`, `-i`, `1+2i`, `1e-3-4i`.
pub fn parse_complex(s: &str) -> Option<C64> {
    let s = s.trim();
    if let Some(body) = s.strip_suffix('i') {
        // split at the last sign that is not part of an exponent
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                split = Some(k);
                break;
            }
        }
        let imag = |t: &str| -> Option<f64> {
            match t {
                "" | "+" => Some(1.0),
                "-" => Some(-1.0),
                _ => t.parse().ok(),
            }
        };
        match split {
            Some(k) => Some(C64::new(body[..k].parse().ok()?, imag(&body[k..])?)),
            None => Some(C64::new(0.0, imag(body)?)),
        }
    } else {
        Some(C64::new(s.parse().ok()?, 0.0))
    }
}

/// Parses the diagram syntax, accepting only the listed algebra names.
pub fn parse_dsl(text: &str, algebras: &[&str]) -> DiagramResult<Diagram> {
    let tokens = tokenize(text);
    let mut pos = 0;
    let e = read(&tokens, &mut pos)?;
    if let Some((_, l, c)) = tokens.get(pos) {
        return Err(syntax(*l, *c, "trailing input"));
    }
    build(&e, algebras)
}

fn build(e: &Sexp, algebras: &[&str]) -> DiagramResult<Diagram> {
    match e {
        Sexp::Atom(a, l, c) => match a.as_str() {
            "id" => Ok(Diagram::identity(1)),
            "tick" => Ok(Diagram::tick()),
            "swap" => Ok(Diagram::swap()),
            _ => Err(syntax(*l, *c, format!("unknown atom '{a}'"))),
        },
        Sexp::List(items, l, c) => {
            let head = match items.first() {
                Some(Sexp::Atom(h, _, _)) => h.as_str(),
                _ => return Err(syntax(*l, *c, "expected an operator")),
            };
            let args = &items[1..];
            match head {
                "seq" | "par" => {
                    if args.len() < 2 {
                        return Err(syntax(*l, *c, format!("{head} needs at least two arguments")));
                    }
                    let parts = args.iter().map(|a| build(a, algebras)).collect::<DiagramResult<Vec<_>>>()?;
                    if head == "par" { return Ok(Diagram::par_all(&parts)); }
                    Diagram::seq_all(&parts)
                }
                "state" | "effect" => {
                    let name = match args.first() {
                        Some(Sexp::Atom(n, _, _)) => n.clone(),
                        _ => return Err(syntax(*l, *c, "expected a variable name")),
                    };
                    let mut vals = Vec::new();
                    for a in &args[1..] {
                        match a {
                            Sexp::Atom(s, al, ac) => vals.push(
                                parse_complex(s).ok_or_else(|| syntax(*al, *ac, format!("bad number '{s}'")))?,
                            ),
                            Sexp::List(_, al, ac) => return Err(syntax(*al, *ac, "expected a number")),
                        }
                    }
                    let (arity, vector) = if vals.is_empty() {
                        (1, None)
                    } else {
                        let k = vals.len();
                        if !k.is_power_of_two() || k < 2 {
                            return Err(syntax(*l, *c, format!("{k} amplitudes is not a power of two")));
                        }
                        (k.trailing_zeros() as usize, Some(vals))
                    };
                    Ok(Diagram::node(if head == "state" {
                        NodeKind::State { name, arity, vector }
                    } else {
                        NodeKind::Effect { name, arity, vector }
                    }))
                }
                op => {
                    let Some(op) = GenOp::from_name(op) else {
                        return Err(syntax(*l, *c, format!("unknown operator '{op}'")));
                    };
                    let alg = match args {
                        [Sexp::Atom(a, _, _)] => a,
                        _ => return Err(syntax(*l, *c, format!("{} takes one algebra name", op.name()))),
                    };
                    if !algebras.contains(&alg.as_str()) {
                        return Err(DiagramError::UnknownAlgebra(alg.clone()));
                    }
                    Ok(Diagram::gen(alg, op))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::ONE;

    const ALGS: &[&str] = &["ghz", "w"];

    #[test]
    fn examples() {
        let d = parse_dsl("(seq (unit w) (comult w))", ALGS).unwrap();
        assert_eq!((d.n_inputs(), d.n_outputs()), (0, 2));
        let t = parse_dsl("(par tick tick)", ALGS).unwrap();
        assert_eq!((t.n_inputs(), t.n_outputs(), t.node_count()), (2, 2, 2));
        // 3 outputs then 3 inputs: well formed
        assert!(parse_dsl("(seq (par (comult ghz) id) (par id (mult ghz) ) )", ALGS).is_ok());
        assert_eq!(
            parse_dsl("(seq (comult ghz) (mult ghz) (mult ghz))", ALGS),
            Err(DiagramError::Arity(1, 2)),
        );
    }

    #[test]
    fn errors_carry_positions() {
        match parse_dsl("(seq (unit w)\n  (frob w))", ALGS) {
            Err(DiagramError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 3)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_dsl("(seq (unit w)", ALGS), Err(DiagramError::Syntax { .. })));
        assert_eq!(parse_dsl("(unit zx)", ALGS), Err(DiagramError::UnknownAlgebra("zx".into())));
        assert!(parse_dsl("(unit zx)", &["zx"]).is_ok());
        assert!(matches!(parse_dsl("id id", ALGS), Err(DiagramError::Syntax { .. })));
    }

    #[test]
    fn variables_and_numbers() {
        let d = parse_dsl("(state psi 1 0 0 1+2i)", ALGS).unwrap();
        assert_eq!(d.n_outputs(), 2);
        let e = parse_dsl("(effect xi)", ALGS).unwrap();
        assert_eq!(e.n_inputs(), 1);
        assert_eq!(parse_complex("-i"), Some(C64::new(0., -1.)));
        assert_eq!(parse_complex("1e-3-4i"), Some(C64::new(1e-3, -4.)));
        assert_eq!(parse_complex("2.5"), Some(C64::new(2.5, 0.)));
        assert_eq!(parse_complex("1+i"), Some(ONE + C64::new(0., 1.)));
        assert!(parse_complex("x").is_none());
    }
}
