//! Plain-text curve files.
//!
//! The first non-comment line is a header, either
//!
//! ```text
//! closed
//! ```
//!
//! or
//!
//! ```text
//! open <kind0> <kind1>
//! ```
//!
//! where each `<kind>` is `axis`, `fixed`, `cylinder <rho>` or
//! `plane <rho>`. Every following line holds one node as `r z`. Lines
//! starting with `#` and blank lines are ignored. Floats are written in
//! shortest round-trip decimal form, so serialize/parse is bit-exact.

use crate::error::Error;
use crate::mesh::{BoundaryKind, DiscreteCurve, Topology};
use crate::vec2::Vec2;
use crate::Result;

pub fn serialize(curve: &DiscreteCurve) -> String {
    let mut out = String::new();
    match curve.topology() {
        Topology::Closed => out.push_str("closed\n"),
        Topology::Open { start, end } => {
            out.push_str("open ");
            push_kind(&mut out, start);
            out.push(' ');
            push_kind(&mut out, end);
            out.push('\n');
        }
    }
    for p in curve.nodes() {
        out.push_str(&format!("{} {}\n", p.x, p.y));
    }
    out
}

fn push_kind(out: &mut String, kind: BoundaryKind) {
    match kind {
        BoundaryKind::Axis => out.push_str("axis"),
        BoundaryKind::Fixed => out.push_str("fixed"),
        BoundaryKind::CylinderSlide { rho } => out.push_str(&format!("cylinder {rho}")),
        BoundaryKind::PlaneSlide { rho } => out.push_str(&format!("plane {rho}")),
    }
}

pub fn parse(text: &str) -> Result<DiscreteCurve> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 0,
        message: "empty curve file".into(),
    })?;

    let mut tokens = header.split_whitespace();
    let topology = match tokens.next() {
        Some("closed") => {
            if tokens.next().is_some() {
                return Err(Error::Parse {
                    line: header_line,
                    message: "unexpected tokens after 'closed'".into(),
                });
            }
            Topology::Closed
        }
        Some("open") => {
            let start = parse_kind(&mut tokens, header_line)?;
            let end = parse_kind(&mut tokens, header_line)?;
            if tokens.next().is_some() {
                return Err(Error::Parse {
                    line: header_line,
                    message: "unexpected tokens after endpoint kinds".into(),
                });
            }
            Topology::Open { start, end }
        }
        _ => {
            return Err(Error::Parse {
                line: header_line,
                message: "header must be 'closed' or 'open <kind> <kind>'".into(),
            })
        }
    };

    let mut nodes = Vec::new();
    for (line_no, line) in lines {
        let mut parts = line.split_whitespace();
        let r = parse_float(parts.next(), line_no)?;
        let z = parse_float(parts.next(), line_no)?;
        if parts.next().is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: "expected exactly two coordinates per line".into(),
            });
        }
        nodes.push(Vec2::new(r, z));
    }

    match topology {
        Topology::Closed => DiscreteCurve::closed(nodes),
        Topology::Open { start, end } => DiscreteCurve::open(nodes, start, end),
    }
}

fn parse_kind<'a>(
    tokens: &mut impl Iterator<Item = &'a str>,
    line: usize,
) -> Result<BoundaryKind> {
    match tokens.next() {
        Some("axis") => Ok(BoundaryKind::Axis),
        Some("fixed") => Ok(BoundaryKind::Fixed),
        Some("cylinder") => Ok(BoundaryKind::CylinderSlide {
            rho: parse_float(tokens.next(), line)?,
        }),
        Some("plane") => Ok(BoundaryKind::PlaneSlide {
            rho: parse_float(tokens.next(), line)?,
        }),
        other => Err(Error::Parse {
            line,
            message: format!("unknown endpoint kind {other:?}"),
        }),
    }
}

fn parse_float(token: Option<&str>, line: usize) -> Result<f64> {
    let token = token.ok_or_else(|| Error::Parse {
        line,
        message: "missing number".into(),
    })?;
    token.parse::<f64>().map_err(|e| Error::Parse {
        line,
        message: format!("bad float {token:?}: {e}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_closed() {
        let c = DiscreteCurve::closed(vec![
            Vec2::new(1.0, 0.0),
            Vec2::new(2.0, 0.1 + 0.2), // deliberately non-representable sum
            Vec2::new(1.5, -1.0 / 3.0),
        ])
        .unwrap();
        let text = serialize(&c);
        let back = parse(&text).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn round_trip_open_with_densities() {
        let c = DiscreteCurve::open(
            vec![
                Vec2::new(1.0, 0.0),
                Vec2::new(1.1, 0.25),
                Vec2::new(1.2, 0.5),
                Vec2::new(1.0, 1.0),
            ],
            BoundaryKind::PlaneSlide { rho: -0.5 },
            BoundaryKind::CylinderSlide { rho: 0.125 },
        )
        .unwrap();
        let back = parse(&serialize(&c)).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = "# snapshot, t = 0.25\n\nopen axis axis\n0 -1\n0.8 -0.5\n# mid\n0.8 0.5\n0 1\n";
        let c = parse(text).unwrap();
        assert_eq!(c.n_nodes(), 4);
        assert!(c.is_axis_node(0));
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse("").is_err());
        assert!(parse("sideways\n1 2\n").is_err());
        assert!(parse("closed extra\n1 0\n2 0\n2 1\n").is_err());
        assert!(parse("open axis\n0 0\n1 0\n1 1\n0 1\n").is_err());
        assert!(parse("closed\n1 0\n2 zero\n2 1\n").is_err());
        assert!(parse("closed\n1 0 7\n2 0\n2 1\n").is_err());
        // Structurally fine but violates curve invariants (r < 0).
        assert!(parse("closed\n-1 0\n2 0\n2 1\n").is_err());
        // Non-finite coordinates are rejected by validation.
        assert!(parse("closed\nNaN 0\n2 0\n2 1\n").is_err());
        assert!(parse("closed\ninf 0\n2 0\n2 1\n").is_err());
    }
}
