//! Plain-text forest documents.
//!
//! One record per line: `vertex <id> <framing|unframed>` or `edge <id> <id>`.
//! Comments start with `#`. Exactly one vertex is `unframed`. Emission is
//! normalized (vertices sorted by id, then edges), so `emit ∘ parse` is a
//! normal form and `parse ∘ emit` is the identity.

use thiserror::Error;

use crate::plumbing::{Forest, ForestError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DocumentError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: {source}")]
    Semantic {
        line: usize,
        #[source]
        source: ForestError,
    },
    /// Semantic errors only detectable once the whole document is read.
    #[error("{0}")]
    Structure(#[from] ForestError),
}

fn syntax(line: usize, reason: impl Into<String>) -> DocumentError {
    DocumentError::Syntax {
        line,
        reason: reason.into(),
    }
}

/// Parse a forest document.
pub fn parse(text: &str) -> Result<Forest, DocumentError> {
    let mut names: Vec<String> = Vec::new();
    let mut framings: Vec<Option<i64>> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let mut tokens = line.split_whitespace();
        let Some(head) = tokens.next() else { continue };
        match head {
            "vertex" => {
                let id = tokens
                    .next()
                    .ok_or_else(|| syntax(lineno, "vertex: missing id"))?;
                let framing_tok = tokens
                    .next()
                    .ok_or_else(|| syntax(lineno, "vertex: missing framing"))?;
                if let Some(extra) = tokens.next() {
                    return Err(syntax(lineno, format!("vertex: unexpected token `{extra}`")));
                }
                let framing = if framing_tok == "unframed" {
                    None
                } else {
                    Some(framing_tok.parse::<i64>().map_err(|_| {
                        syntax(lineno, format!("vertex: bad framing `{framing_tok}`"))
                    })?)
                };
                if names.iter().any(|n| n == id) {
                    return Err(DocumentError::Semantic {
                        line: lineno,
                        source: ForestError::DuplicateVertex(id.to_owned()),
                    });
                }
                names.push(id.to_owned());
                framings.push(framing);
            }
            "edge" => {
                let a = tokens
                    .next()
                    .ok_or_else(|| syntax(lineno, "edge: missing endpoint"))?;
                let b = tokens
                    .next()
                    .ok_or_else(|| syntax(lineno, "edge: missing endpoint"))?;
                if let Some(extra) = tokens.next() {
                    return Err(syntax(lineno, format!("edge: unexpected token `{extra}`")));
                }
                let ia = names.iter().position(|n| n == a).ok_or_else(|| {
                    DocumentError::Semantic {
                        line: lineno,
                        source: ForestError::UnknownVertex(a.to_owned()),
                    }
                })?;
                let ib = names.iter().position(|n| n == b).ok_or_else(|| {
                    DocumentError::Semantic {
                        line: lineno,
                        source: ForestError::UnknownVertex(b.to_owned()),
                    }
                })?;
                edges.push((ia, ib));
            }
            other => {
                return Err(syntax(lineno, format!("unknown record `{other}`")));
            }
        }
    }

    Ok(Forest::from_indexed(names, framings, edges)?)
}

/// Emit the normalized document for a forest.
pub fn emit(forest: &Forest) -> String {
    let mut vertex_lines: Vec<String> = (0..forest.vertex_count())
        .map(|i| match forest.framing(i) {
            Some(f) => format!("vertex {} {}", forest.name(i), f),
            None => format!("vertex {} unframed", forest.name(i)),
        })
        .collect();
    vertex_lines.sort();
    let mut edge_lines: Vec<String> = forest
        .edges()
        .iter()
        .map(|&(a, b)| {
            let (x, y) = if forest.name(a) <= forest.name(b) {
                (forest.name(a), forest.name(b))
            } else {
                (forest.name(b), forest.name(a))
            };
            format!("edge {x} {y}")
        })
        .collect();
    edge_lines.sort();

    let mut out = String::new();
    for l in vertex_lines.into_iter().chain(edge_lines) {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_basic() {
        let f = parse("vertex a -2\nvertex k unframed\nedge k a\n").unwrap();
        assert_eq!(f.vertex_count(), 2);
        assert_eq!(f.framing(f.index_of("a").unwrap()), Some(-2));
        assert_eq!(f.v0(), f.index_of("k").unwrap());
        assert!(f.has_edge(0, 1));
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let f = parse("# header\n\nvertex a -2   # trailing\nvertex k unframed\n").unwrap();
        assert_eq!(f.vertex_count(), 2);
    }

    #[test]
    fn two_unframed_is_semantic_error() {
        let err = parse("vertex a unframed\nvertex b unframed\n").unwrap_err();
        assert!(matches!(
            err,
            DocumentError::Structure(ForestError::MultipleUnframed(_, _))
        ));
    }

    #[test]
    fn syntax_error_carries_line_number() {
        let err = parse("vertex a -2\nvertx b -3\n").unwrap_err();
        assert_eq!(
            err,
            DocumentError::Syntax {
                line: 2,
                reason: "unknown record `vertx`".into()
            }
        );
    }

    #[test]
    fn bad_framing_is_syntax_error() {
        let err = parse("vertex a minus2\n").unwrap_err();
        assert!(matches!(err, DocumentError::Syntax { line: 1, .. }));
    }

    #[test]
    fn unknown_edge_endpoint_is_semantic() {
        let err = parse("vertex a -2\nvertex k unframed\nedge a z\n").unwrap_err();
        assert!(matches!(
            err,
            DocumentError::Semantic {
                line: 3,
                source: ForestError::UnknownVertex(_)
            }
        ));
    }

    #[test]
    fn cycle_is_semantic() {
        let err = parse(
            "vertex a -2\nvertex b -2\nvertex c -2\nvertex k unframed\n\
             edge a b\nedge b c\nedge c a\n",
        )
        .unwrap_err();
        assert!(matches!(
            err,
            DocumentError::Structure(ForestError::Cycle)
        ));
    }

    #[test]
    fn emit_parse_normalizes_idempotently() {
        let doc = "vertex z -5\nvertex a -2\nvertex k unframed\nedge z a\nedge k z\n";
        let once = emit(&parse(doc).unwrap());
        let twice = emit(&parse(&once).unwrap());
        assert_eq!(once, twice);
    }

    #[test]
    fn parse_emit_is_identity_on_labeled_forests() {
        let f = parse("vertex z -5\nvertex a -2\nvertex k unframed\nedge z a\nedge k z\n").unwrap();
        let g = parse(&emit(&f)).unwrap();
        let labeled = |h: &Forest| {
            let mut verts: Vec<(String, Option<i64>)> = (0..h.vertex_count())
                .map(|i| (h.name(i).to_owned(), h.framing(i)))
                .collect();
            verts.sort();
            let mut edges: Vec<(String, String)> = h
                .edges()
                .iter()
                .map(|&(a, b)| {
                    let (x, y) = (h.name(a).to_owned(), h.name(b).to_owned());
                    if x <= y {
                        (x, y)
                    } else {
                        (y, x)
                    }
                })
                .collect();
            edges.sort();
            (verts, edges)
        };
        assert_eq!(labeled(&f), labeled(&g));
    }
}
