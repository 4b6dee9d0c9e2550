use super::{Mesh2D, Tag};
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

const HEADER: &str = "defdom-mesh v1";

/// Serialises a mesh. Coordinates use the shortest representation that
/// round-trips exactly.
pub fn write_mesh(mesh: &Mesh2D) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{HEADER}");
    let _ = writeln!(s, "vertices {}", mesh.vertices.len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:?} {:?}", v[0], v[1]);
    }
    let _ = writeln!(s, "cells {}", mesh.cells.len());
    for (c, t) in mesh.cells.iter().enumerate() {
        match mesh.mids.get(c) {
            Some(m) => writeln!(s, "{} {} {} {} {} {}", t[0], t[1], t[2], m[0], m[1], m[2]),
            None => writeln!(s, "{} {} {}", t[0], t[1], t[2]),
        }
        .ok();
    }
    let _ = writeln!(s, "boundary {}", mesh.boundary.len());
    for e in &mesh.boundary {
        let _ = writeln!(s, "{} {} {}", e.v[0], e.v[1], e.tag);
    }
    let _ = writeln!(s, "periodic {}", mesh.periodic.len());
    for (a, b) in &mesh.periodic {
        let _ = writeln!(s, "{a} {b}");
    }
    s
}

pub fn save_mesh(mesh: &Mesh2D, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_mesh(mesh))?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh2D> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, Vec<&'a str>)> {
        for (i, l) in self.it.by_ref() {
            self.last = i + 1;
            let toks: Vec<&str> = l.split_whitespace().collect();
            if !toks.is_empty() {
                return Ok((i + 1, toks));
            }
        }
        Err(Error::Parse { line: self.last + 1, msg: "unexpected end of file".into() })
    }

    fn section(&mut self, name: &str) -> Result<usize> {
        let (line, t) = self.next()?;
        if t.len() != 2 || t[0] != name {
            return Err(Error::Parse { line, msg: format!("expected `{name} <count>`") });
        }
        t[1].parse().map_err(|_| Error::Parse { line, msg: format!("bad count `{}`", t[1]) })
    }
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse { line, msg: format!("cannot parse `{s}`") })
}

pub fn parse_mesh(text: &str) -> Result<Mesh2D> {
    let mut lines = Lines { it: text.lines().enumerate(), last: 0 };
    let (line, head) = lines.next()?;
    if head.join(" ") != HEADER {
        return Err(Error::Parse { line, msg: format!("expected header `{HEADER}`") });
    }
    let n = lines.section("vertices")?;
    let mut vertices = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, t) = lines.next()?;
        if t.len() != 2 {
            return Err(Error::Parse { line, msg: "expected `x y`".into() });
        }
        vertices.push([num(line, t[0])?, num(line, t[1])?]);
    }
    let m = lines.section("cells")?;
    let mut cells = Vec::with_capacity(m);
    let mut mids = Vec::new();
    let mut width = None;
    for _ in 0..m {
        let (line, t) = lines.next()?;
        if t.len() != 3 && t.len() != 6 {
            return Err(Error::Parse { line, msg: "expected 3 or 6 node indices".into() });
        }
        if *width.get_or_insert(t.len()) != t.len() {
            return Err(Error::Parse { line, msg: "mixed linear and quadratic cells".into() });
        }
        let ix: Vec<usize> = t.iter().map(|s| num(line, s)).collect::<Result<_>>()?;
        cells.push([ix[0], ix[1], ix[2]]);
        if ix.len() == 6 {
            mids.push([ix[3], ix[4], ix[5]]);
        }
    }
    let k = lines.section("boundary")?;
    let mut bnd = Vec::with_capacity(k);
    for _ in 0..k {
        let (line, t) = lines.next()?;
        if t.len() != 3 {
            return Err(Error::Parse { line, msg: "expected `v0 v1 tag`".into() });
        }
        bnd.push((num(line, t[0])?, num(line, t[1])?, t[2].parse::<Tag>()?));
    }
    let p = lines.section("periodic")?;
    let mut periodic = Vec::with_capacity(p);
    for _ in 0..p {
        let (line, t) = lines.next()?;
        if t.len() != 2 {
            return Err(Error::Parse { line, msg: "expected `inlet outlet`".into() });
        }
        periodic.push((num(line, t[0])?, num(line, t[1])?));
    }
    let nv = vertices.len();
    if periodic.iter().any(|&(a, b)| a >= nv || b >= nv) {
        return Err(Error::Validation("periodic pair references a missing vertex".into()));
    }
    Mesh2D::from_parts(vertices, cells, mids, &bnd, periodic)
}
