//! Drawing file format.
//!
//! A drawing is a JSON document:
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "vertices": [
//!     {"id": "a", "x": "0", "y": "-3/7"}
//!   ],
//!   "edges": [
//!     {"u": "a", "v": "b", "bends": [["1/2", "4"]], "tag": "pink"}
//!   ]
//! }
//! ```
//!
//! Coordinates are rational strings: optional sign, digits, optionally `/`
//! and a positive denominator. [`serialize_drawing`] writes the canonical
//! form shown above (one vertex or edge per line, reduced rationals, `tag`
//! omitted when absent), and parsing then serializing a canonical file
//! reproduces it byte for byte.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::drawing::{Drawing, DrawingError, EdgeSpec};
use crate::geometry::{Point, Rational};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RationalError {
    #[error("empty string")]
    Empty,
    #[error("expected [sign]digits[/digits]")]
    Syntax,
    #[error("zero denominator")]
    ZeroDenominator,
}

pub fn parse_rational(s: &str) -> Result<Rational, RationalError> {
    if s.is_empty() {
        return Err(RationalError::Empty);
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (s, None),
    };
    let digits = num.strip_prefix(['+', '-']).unwrap_or(num);
    let all_digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(digits) || den.is_some_and(|d| !all_digits(d)) {
        return Err(RationalError::Syntax);
    }
    let num: BigInt = num.parse().map_err(|_| RationalError::Syntax)?;
    let den: BigInt = match den {
        Some(d) => d.parse().map_err(|_| RationalError::Syntax)?,
        None => BigInt::from(1),
    };
    if den.is_zero() {
        return Err(RationalError::ZeroDenominator);
    }
    Ok(Rational::new(num, den))
}

/// Reduced `n` or `n/d`.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Serde adapter storing a [`Rational`] as its string form.
pub mod rational_string {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text)
            .map_err(|e| serde::de::Error::custom(format!("rational `{text}`: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported format_version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("{field}: malformed rational `{value}`: {reason}")]
    MalformedRational {
        field: String,
        value: String,
        reason: RationalError,
    },
    #[error("{field}: zero denominator in `{value}`")]
    ZeroDenominator { field: String, value: String },
    #[error("{field}: duplicate vertex id `{id}`")]
    DuplicateVertexId { field: String, id: String },
    #[error("{field}: unknown endpoint `{id}`")]
    UnknownEndpoint { field: String, id: String },
    #[error("{field}: {source}")]
    Structure { field: String, source: DrawingError },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrawingDoc {
    pub format_version: u32,
    pub vertices: Vec<VertexDoc>,
    pub edges: Vec<EdgeDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexDoc {
    pub id: String,
    pub x: String,
    pub y: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub u: String,
    pub v: String,
    #[serde(default)]
    pub bends: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

fn coord(field: String, value: &str) -> Result<Rational, FormatError> {
    parse_rational(value).map_err(|reason| match reason {
        RationalError::ZeroDenominator => FormatError::ZeroDenominator {
            field,
            value: value.to_string(),
        },
        reason => FormatError::MalformedRational {
            field,
            value: value.to_string(),
            reason,
        },
    })
}

impl DrawingDoc {
    pub fn from_drawing(d: &Drawing) -> Self {
        let vertices = d
            .vertices()
            .iter()
            .map(|v| VertexDoc {
                id: v.id.clone(),
                x: format_rational(&v.pos.x),
                y: format_rational(&v.pos.y),
            })
            .collect();
        let edges = d
            .edges()
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let (u, v) = d.edge_ids(k);
                EdgeDoc {
                    u: u.to_string(),
                    v: v.to_string(),
                    bends: e
                        .bends
                        .iter()
                        .map(|b| [format_rational(&b.x), format_rational(&b.y)])
                        .collect(),
                    tag: e.tag.clone(),
                }
            })
            .collect();
        DrawingDoc {
            format_version: FORMAT_VERSION,
            vertices,
            edges,
        }
    }

    pub fn to_drawing(&self) -> Result<Drawing, FormatError> {
        if self.format_version != FORMAT_VERSION {
            return Err(FormatError::UnsupportedVersion(self.format_version));
        }
        let mut vertices = Vec::with_capacity(self.vertices.len());
        let mut ids = std::collections::HashSet::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if !ids.insert(v.id.as_str()) {
                return Err(FormatError::DuplicateVertexId {
                    field: format!("vertices[{i}].id"),
                    id: v.id.clone(),
                });
            }
            let x = coord(format!("vertices[{i}].x"), &v.x)?;
            let y = coord(format!("vertices[{i}].y"), &v.y)?;
            vertices.push((v.id.clone(), Point::new(x, y)));
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for (k, e) in self.edges.iter().enumerate() {
            for (end, id) in [("u", &e.u), ("v", &e.v)] {
                if !ids.contains(id.as_str()) {
                    return Err(FormatError::UnknownEndpoint {
                        field: format!("edges[{k}].{end}"),
                        id: id.clone(),
                    });
                }
            }
            let bends = e
                .bends
                .iter()
                .enumerate()
                .map(|(b, [x, y])| {
                    Ok(Point::new(
                        coord(format!("edges[{k}].bends[{b}][0]"), x)?,
                        coord(format!("edges[{k}].bends[{b}][1]"), y)?,
                    ))
                })
                .collect::<Result<Vec<_>, FormatError>>()?;
            edges.push(EdgeSpec {
                u: e.u.clone(),
                v: e.v.clone(),
                bends,
                tag: e.tag.clone(),
            });
        }
        Drawing::new(vertices, edges).map_err(|source| {
            let field = match &source {
                DrawingError::SelfLoop { edge, .. }
                | DrawingError::DuplicateEdge { edge, .. }
                | DrawingError::RepeatedPoint { edge, .. }
                | DrawingError::UnknownEndpoint { edge, .. } => format!("edges[{edge}]"),
                _ => "vertices".to_string(),
            };
            FormatError::Structure { field, source }
        })
    }
}

fn json_syntax(e: serde_json::Error) -> FormatError {
    FormatError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

pub fn parse_drawing(text: &str) -> Result<Drawing, FormatError> {
    let doc: DrawingDoc = serde_json::from_str(text).map_err(json_syntax)?;
    doc.to_drawing()
}

fn q(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

/// Canonical text of a drawing, newline-terminated.
pub fn serialize_drawing(d: &Drawing) -> String {
    let doc = DrawingDoc::from_drawing(d);
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("  \"format_version\": {},\n", doc.format_version));
    let vertices: Vec<String> = doc
        .vertices
        .iter()
        .map(|v| {
            format!(
                "    {{\"id\": {}, \"x\": {}, \"y\": {}}}",
                q(&v.id),
                q(&v.x),
                q(&v.y)
            )
        })
        .collect();
    list(&mut out, "vertices", &vertices, true);
    let edges: Vec<String> = doc
        .edges
        .iter()
        .map(|e| {
            let bends: Vec<String> = e
                .bends
                .iter()
                .map(|[x, y]| format!("[{}, {}]", q(x), q(y)))
                .collect();
            let mut s = format!(
                "    {{\"u\": {}, \"v\": {}, \"bends\": [{}]",
                q(&e.u),
                q(&e.v),
                bends.join(", ")
            );
            if let Some(tag) = &e.tag {
                s.push_str(&format!(", \"tag\": {}", q(tag)));
            }
            s.push('}');
            s
        })
        .collect();
    list(&mut out, "edges", &edges, false);
    out.push_str("}\n");
    out
}

fn list(out: &mut String, name: &str, items: &[String], comma: bool) {
    let tail = if comma { "," } else { "" };
    if items.is_empty() {
        out.push_str(&format!("  \"{name}\": []{tail}\n"));
    } else {
        out.push_str(&format!(
            "  \"{name}\": [\n{}\n  ]{tail}\n",
            items.join(",\n")
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drawing::convex_complete;
    use crate::geometry::rational;
    use proptest::prelude::*;

    #[test]
    fn rational_grammar() {
        assert_eq!(parse_rational("-3/7").unwrap(), rational(-3, 7));
        assert_eq!(parse_rational("12").unwrap(), rational(12, 1));
        assert_eq!(parse_rational("+4/6").unwrap(), rational(2, 3));
        assert_eq!(parse_rational("1/0"), Err(RationalError::ZeroDenominator));
        for bad in ["", "1.5", "1/-2", "a", "1/", "/2", "--1", " 1"] {
            assert!(parse_rational(bad).is_err(), "{bad:?}");
        }
        assert_eq!(format_rational(&rational(4, -6)), "-2/3");
        assert_eq!(format_rational(&rational(8, 4)), "2");
    }

    #[test]
    fn zero_denominator_field() {
        let text = r#"{"format_version": 1, "vertices": [{"id": "a", "x": "1/0", "y": "0"}], "edges": []}"#;
        assert_eq!(
            parse_drawing(text),
            Err(FormatError::ZeroDenominator {
                field: "vertices[0].x".into(),
                value: "1/0".into()
            })
        );
    }

    #[test]
    fn unknown_endpoint_and_duplicates() {
        let text = r#"{"format_version": 1, "vertices": [{"id": "a", "x": "0", "y": "0"}], "edges": [{"u": "a", "v": "z"}]}"#;
        assert_eq!(
            parse_drawing(text),
            Err(FormatError::UnknownEndpoint {
                field: "edges[0].v".into(),
                id: "z".into()
            })
        );
        let dup = r#"{"format_version": 1, "vertices": [{"id": "a", "x": "0", "y": "0"}, {"id": "a", "x": "1", "y": "0"}], "edges": []}"#;
        assert!(matches!(
            parse_drawing(dup),
            Err(FormatError::DuplicateVertexId { .. })
        ));
        let version = r#"{"format_version": 2, "vertices": [], "edges": []}"#;
        assert_eq!(
            parse_drawing(version),
            Err(FormatError::UnsupportedVersion(2))
        );
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_drawing("{\n  \"format_version\": 1,\n  \"vertices\": [,\n").unwrap_err();
        assert!(
            matches!(err, FormatError::Syntax { line: 3, .. }),
            "{err:?}"
        );
        let unknown_field = r#"{"format_version": 1, "vertices": [], "edges": [], "extra": 0}"#;
        assert!(matches!(
            parse_drawing(unknown_field),
            Err(FormatError::Syntax { .. })
        ));
    }

    #[test]
    fn canonical_round_trip() {
        let d = convex_complete(6).unwrap();
        let text = serialize_drawing(&d);
        assert_eq!(parse_drawing(&text).unwrap(), d);
        assert_eq!(serialize_drawing(&parse_drawing(&text).unwrap()), text);
        assert!(text.starts_with("{\n  \"format_version\": 1,\n  \"vertices\": [\n    {\"id\": \"1\", \"x\": \"1\", \"y\": \"1\"},"));
    }

    #[test]
    fn non_canonical_input_is_normalized() {
        let text = r#"{"vertices": [{"id": "a", "x": "2/4", "y": "0"}, {"id": "b", "x": "3", "y": "+1"}],
            "edges": [{"u": "a", "v": "b", "tag": "pink"}], "format_version": 1}"#;
        let d = parse_drawing(text).unwrap();
        let canon = serialize_drawing(&d);
        assert!(canon.contains("\"x\": \"1/2\""));
        assert!(canon.contains("{\"u\": \"a\", \"v\": \"b\", \"bends\": [], \"tag\": \"pink\"}"));
        assert_eq!(parse_drawing(&canon).unwrap(), d);
    }

    #[test]
    fn empty_drawing() {
        let text = serialize_drawing(&Drawing::empty());
        assert_eq!(
            text,
            "{\n  \"format_version\": 1,\n  \"vertices\": [],\n  \"edges\": []\n}\n"
        );
        assert_eq!(parse_drawing(&text).unwrap(), Drawing::empty());
    }

    proptest! {
        #[test]
        fn rational_strings_round_trip(n in -10_000i64..10_000, d in 1i64..10_000) {
            let r = rational(n, d);
            prop_assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
        }

        #[test]
        fn drawings_round_trip(
            coords in prop::collection::btree_set((-50i64..50, 1i64..8, -50i64..50), 2..8),
            tag in prop::option::of("[a-z \"\\\\]{0,6}"),
            bend in (-100i64..100, -100i64..100),
        ) {
            let vertices: Vec<(String, Point)> = coords
                .iter()
                .enumerate()
                .map(|(i, &(x, d, y))| (format!("v{i}"), Point::new(rational(x, d), rational(y, 1))))
                .collect();
            prop_assume!(vertices.iter().map(|v| &v.1).collect::<std::collections::HashSet<_>>().len() == vertices.len());
            let mut spec = EdgeSpec::straight("v0", "v1").with_bends(vec![Point::new(rational(bend.0, 3), rational(bend.1, 1))]);
            spec.tag = tag;
            let Ok(d) = Drawing::new(vertices, vec![spec]) else { return Ok(()); };
            let text = serialize_drawing(&d);
            prop_assert_eq!(parse_drawing(&text).unwrap(), d);
        }
    }
}
