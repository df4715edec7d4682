//! Line-oriented surface files and saddle-connection CSV output.
//!
//! ```text
//! # three-square L
//! origami n=3 h=(1,2,3) v=(1)(2,3)
//! ```
//!
//! ```text
//! polygon
//! edge 1 0 pair=2
//! edge 0 1 pair=3
//! edge -1 0 pair=0
//! edge 0 -1 pair=1
//! ```

use std::io::Write;
use std::path::Path;

use super::{build_origami, build_polygon, builtin, FlatError, Permutation, Result, SaddleConnection, TranslationSurface, Vec2};

#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceSpec {
    Builtin(String),
    Origami { h: Permutation, v: Permutation },
    Polygon { edges: Vec<Vec2>, pairing: Vec<usize> },
}

impl SurfaceSpec {
    pub fn build(&self) -> Result<TranslationSurface> {
        match self {
            SurfaceSpec::Builtin(name) => builtin(name),
            SurfaceSpec::Origami { h, v } => build_origami(h, v),
            SurfaceSpec::Polygon { edges, pairing } => build_polygon(edges, pairing),
        }
    }
}

/// Splits `n=3 h=(1 2 3) v=(1)(2 3)` into key/value pairs; values may contain spaces.
fn key_values(rest: &str) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for token in rest.split_whitespace() {
        match token.split_once('=') {
            Some((k, v)) if !k.is_empty() && !k.contains('(') => out.push((k.to_string(), v.to_string())),
            _ => match out.last_mut() {
                Some((_, v)) => {
                    v.push(' ');
                    v.push_str(token);
                }
                None => out.push((String::new(), token.to_string())),
            },
        }
    }
    out
}

fn parse_origami(rest: &str, line: usize) -> Result<SurfaceSpec> {
    let err = |msg: String| FlatError::Parse { line, msg };
    let (mut n, mut h, mut v) = (None, None, None);
    for (k, val) in key_values(rest) {
        match k.as_str() {
            "n" => n = Some(val.parse::<usize>().map_err(|_| err(format!("n = '{val}' is not an integer")))?),
            "h" => h = Some(val),
            "v" => v = Some(val),
            other => return Err(err(format!("unknown origami key '{other}'"))),
        }
    }
    let n = n.ok_or_else(|| err("missing n=".into()))?;
    let h = Permutation::parse_cycles(&h.unwrap_or_default(), n).map_err(|e| err(e.to_string()))?;
    let v = Permutation::parse_cycles(&v.unwrap_or_default(), n).map_err(|e| err(e.to_string()))?;
    Ok(SurfaceSpec::Origami { h, v })
}

pub fn parse_surface(text: &str) -> Result<SurfaceSpec> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (first_no, first) = lines.next().ok_or(FlatError::Parse {
        line: 0,
        msg: "empty surface file".into(),
    })?;
    let (head, rest) = first.split_once(char::is_whitespace).unwrap_or((first, ""));
    match head {
        "origami" => {
            if let Some((line, _)) = lines.next() {
                return Err(FlatError::Parse {
                    line,
                    msg: "unexpected content after origami line".into(),
                });
            }
            parse_origami(rest, first_no)
        }
        "polygon" => {
            let mut edges = Vec::new();
            let mut pairing = Vec::new();
            for (line, l) in lines {
                let err = |msg: String| FlatError::Parse { line, msg };
                let parts: Vec<&str> = l.split_whitespace().collect();
                match parts.as_slice() {
                    ["edge", x, y, pair] => {
                        let x: f64 = x.parse().map_err(|_| err(format!("bad coordinate '{x}'")))?;
                        let y: f64 = y.parse().map_err(|_| err(format!("bad coordinate '{y}'")))?;
                        let p = pair
                            .strip_prefix("pair=")
                            .and_then(|p| p.parse::<usize>().ok())
                            .ok_or_else(|| err(format!("expected pair=<slot>, got '{pair}'")))?;
                        edges.push(Vec2::new(x, y));
                        pairing.push(p);
                    }
                    _ => return Err(err(format!("expected 'edge <x> <y> pair=<slot>', got '{l}'"))),
                }
            }
            Ok(SurfaceSpec::Polygon { edges, pairing })
        }
        "builtin" => Ok(SurfaceSpec::Builtin(rest.trim().to_string())),
        other => Err(FlatError::Parse {
            line: first_no,
            msg: format!("unknown surface kind '{other}'"),
        }),
    }
}

/// Resolves a builtin name or reads a surface file.
pub fn read_surface(name_or_path: &str) -> Result<TranslationSurface> {
    if super::BUILTIN_NAMES.iter().any(|b| b.eq_ignore_ascii_case(name_or_path)) {
        return builtin(if name_or_path.eq_ignore_ascii_case("l3") { "L3" } else { name_or_path });
    }
    let path = Path::new(name_or_path);
    let text = std::fs::read_to_string(path).map_err(|e| FlatError::Io(format!("{}: {e}", path.display())))?;
    parse_surface(&text)?.build()
}

/// Writes `len,hol_x,hol_y,start,end` rows.
pub fn write_saddle_csv<W: Write>(out: W, connections: &[SaddleConnection]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| FlatError::Io(e.to_string());
    w.write_record(["len", "hol_x", "hol_y", "start", "end"]).map_err(io)?;
    for c in connections {
        w.write_record([
            format!("{:.12}", c.length()),
            format!("{:.12}", c.holonomy.x),
            format!("{:.12}", c.holonomy.y),
            c.start.to_string(),
            c.end.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| FlatError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origami_line_with_spaces() {
        let spec = parse_surface("# L\norigami n=3 h=(1 2 3) v=(1)(2 3)\n").unwrap();
        let s = spec.build().unwrap();
        assert_eq!(s.cone_points()[0].multiple, 3);
    }

    #[test]
    fn polygon_file() {
        let text = "polygon\nedge 1 0 pair=2\nedge 0 1 pair=3\nedge -1 0 pair=0\nedge 0 -1 pair=1\n";
        let s = parse_surface(text).unwrap().build().unwrap();
        assert_eq!(s.genus(), 1);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = parse_surface("polygon\nedge 1 0 pair=2\nedge x 1 pair=3\n").unwrap_err();
        assert!(matches!(e, FlatError::Parse { line: 3, .. }));
        assert!(parse_surface("origami n=2 q=(1)").is_err());
        assert!(parse_surface("sphere").is_err());
    }

    #[test]
    fn csv_columns() {
        let s = builtin("torus").unwrap();
        let sc = super::super::enumerate_saddle_connections(&s, 1.0).unwrap();
        let mut buf = Vec::new();
        write_saddle_csv(&mut buf, &sc).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("len,hol_x,hol_y,start,end\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
