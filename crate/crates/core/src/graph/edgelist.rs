//! Plain-text edge lists.
//!
//! ```text
//! n 4
//! 0 1
//! 1 2
//! embedding circle 1
//! pos 0 0.25
//! ```
//!
//! `#` starts a comment. The `embedding` line is optional: without it one
//! coordinate per `pos` line means a line embedding and two mean the plane.

use std::io::{BufRead, Write};

use super::{Embedding, Graph};
use crate::error::{Error, Result};

pub fn write_edge_list<W: Write>(g: &Graph, mut out: W) -> Result<()> {
    writeln!(out, "n {}", g.n())?;
    for (u, v) in g.edges() {
        writeln!(out, "{u} {v}")?;
    }
    match g.embedding() {
        None => {}
        Some(Embedding::Line(pos)) => {
            writeln!(out, "embedding line")?;
            for (v, x) in pos.iter().enumerate() {
                writeln!(out, "pos {v} {x}")?;
            }
        }
        Some(Embedding::Circle { radius, angles }) => {
            writeln!(out, "embedding circle {radius}")?;
            for (v, a) in angles.iter().enumerate() {
                writeln!(out, "pos {v} {a}")?;
            }
        }
        Some(Embedding::Plane(pts)) => {
            writeln!(out, "embedding plane")?;
            for (v, p) in pts.iter().enumerate() {
                writeln!(out, "pos {v} {} {}", p[0], p[1])?;
            }
        }
    }
    Ok(())
}

enum Kind {
    Line,
    Circle(f64),
    Plane,
}

pub fn read_edge_list<R: BufRead>(input: R) -> Result<Graph> {
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    let mut kind: Option<Kind> = None;
    let mut coords: Vec<(usize, Vec<f64>)> = Vec::new();

    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let err = |msg: String| Error::Parse { line: lineno, msg };
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        let int = |s: &str| s.parse::<usize>().map_err(|_| err(format!("expected a vertex id, got {s:?}")));
        let real = |s: &str| s.parse::<f64>().map_err(|_| err(format!("expected a number, got {s:?}")));
        match tokens[0] {
            "n" => {
                if n.is_some() {
                    return Err(err("duplicate `n` header".into()));
                }
                if tokens.len() != 2 {
                    return Err(err("expected `n <count>`".into()));
                }
                n = Some(int(tokens[1])?);
            }
            "embedding" => {
                kind = Some(match (tokens.get(1).copied(), tokens.len()) {
                    (Some("line"), 2) => Kind::Line,
                    (Some("plane"), 2) => Kind::Plane,
                    (Some("circle"), 3) => Kind::Circle(real(tokens[2])?),
                    _ => return Err(err("expected `embedding line|plane|circle <radius>`".into())),
                });
            }
            "pos" => {
                if tokens.len() < 3 {
                    return Err(err("expected `pos <vertex> <coords...>`".into()));
                }
                let v = int(tokens[1])?;
                let xs = tokens[2..].iter().map(|s| real(s)).collect::<Result<Vec<_>>>()?;
                coords.push((v, xs));
            }
            _ => {
                if n.is_none() {
                    return Err(err("edge before `n` header".into()));
                }
                if tokens.len() != 2 {
                    return Err(err("expected `<u> <v>`".into()));
                }
                edges.push((int(tokens[0])?, int(tokens[1])?));
            }
        }
    }

    let n = n.ok_or(Error::Parse {
        line: 0,
        msg: "missing `n <count>` header".into(),
    })?;
    let g = Graph::from_edges(n, &edges)?;
    if coords.is_empty() {
        return Ok(g);
    }
    let dims = coords[0].1.len();
    let kind = kind.unwrap_or(if dims == 2 { Kind::Plane } else { Kind::Line });
    let want = if matches!(kind, Kind::Plane) { 2 } else { 1 };
    let mut table: Vec<Option<Vec<f64>>> = vec![None; n];
    for (v, xs) in coords {
        if v >= n || xs.len() != want {
            return Err(Error::Parse {
                line: 0,
                msg: format!("bad `pos` entry for vertex {v}"),
            });
        }
        table[v] = Some(xs);
    }
    let table = table
        .into_iter()
        .enumerate()
        .map(|(v, xs)| {
            xs.ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("vertex {v} has no position"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let embedding = match kind {
        Kind::Line => Embedding::Line(table.into_iter().map(|x| x[0]).collect()),
        Kind::Circle(radius) => Embedding::Circle {
            radius,
            angles: table.into_iter().map(|x| x[0]).collect(),
        },
        Kind::Plane => Embedding::Plane(table.into_iter().map(|x| [x[0], x[1]]).collect()),
    };
    g.with_embedding(embedding)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::TopologySpec;

    fn roundtrip(g: &Graph) -> Graph {
        let mut buf = Vec::new();
        write_edge_list(g, &mut buf).unwrap();
        read_edge_list(buf.as_slice()).unwrap()
    }

    #[test]
    fn roundtrips_with_and_without_embedding() {
        for spec in [
            TopologySpec::Ring { n: 7 },
            TopologySpec::SpatialRing { n: 12, radius: 2.5 },
            TopologySpec::SpatialLine { n: 12, l_max: 10.0 },
            TopologySpec::RandomGeometric { n: 60, r: 0.3 },
        ] {
            let g = spec.build(1).unwrap();
            let back = roundtrip(&g);
            assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
            assert_eq!(back.embedding(), g.embedding());
        }
    }

    #[test]
    fn reports_line_numbers() {
        let text = "n 3\n0 1\n1 x\n";
        match read_edge_list(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(read_edge_list("0 1\n".as_bytes()).is_err());
    }
}
