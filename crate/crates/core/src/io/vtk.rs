use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Triangle grid with point data, written as a legacy ASCII VTK (v3.0)
/// unstructured grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VtkGrid {
    pub title: String,
    pub points: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub vectors: Vec<(String, Vec<Point>)>,
    pub scalars: Vec<(String, Vec<f64>)>,
}

impl VtkGrid {
    pub fn new(title: &str, points: Vec<Point>, triangles: Vec<[usize; 3]>) -> Self {
        Self {
            title: title.replace('\n', " "),
            points,
            triangles,
            ..Self::default()
        }
    }

    pub fn with_vectors(mut self, name: &str, values: Vec<Point>) -> Self {
        self.vectors.push((name.to_string(), values));
        self
    }

    pub fn with_scalars(mut self, name: &str, values: Vec<f64>) -> Self {
        self.scalars.push((name.to_string(), values));
        self
    }

    fn check(&self) -> Result<()> {
        let n = self.points.len();
        if let Some(t) = self.triangles.iter().find(|t| t.iter().any(|&v| v >= n)) {
            return Err(Error::InvalidMesh(format!("triangle {t:?} refers to a missing point")));
        }
        let lens = self.vectors.iter().map(|(k, v)| (k, v.len()));
        for (name, len) in lens.chain(self.scalars.iter().map(|(k, v)| (k, v.len()))) {
            if len != n {
                return Err(Error::InvalidMesh(format!("field {name} has {len} values for {n} points")));
            }
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(Error::InvalidMesh(format!("invalid field name {name:?}")));
            }
        }
        Ok(())
    }

    /// Coordinates use the shortest representation that parses back to the
    /// same double.
    pub fn to_legacy_string(&self) -> Result<String> {
        self.check()?;
        let mut s = String::new();
        let _ = writeln!(s, "# vtk DataFile Version 3.0");
        let _ = writeln!(s, "{}", if self.title.is_empty() { "elastoswim" } else { &self.title });
        let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
        let _ = writeln!(s, "POINTS {} double", self.points.len());
        for p in &self.points {
            let _ = writeln!(s, "{:e} {:e} 0", p[0], p[1]);
        }
        let _ = writeln!(s, "CELLS {} {}", self.triangles.len(), 4 * self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(s, "CELL_TYPES {}", self.triangles.len());
        for _ in &self.triangles {
            let _ = writeln!(s, "5");
        }
        if !self.vectors.is_empty() || !self.scalars.is_empty() {
            let _ = writeln!(s, "POINT_DATA {}", self.points.len());
        }
        for (name, values) in &self.scalars {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in values {
                let _ = writeln!(s, "{v:e}");
            }
        }
        for (name, values) in &self.vectors {
            let _ = writeln!(s, "VECTORS {name} double");
            for v in values {
                let _ = writeln!(s, "{:e} {:e} 0", v[0], v[1]);
            }
        }
        Ok(s)
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_legacy_string()?)?;
        Ok(())
    }
}

struct Tokens<'a> {
    lines: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
    word: usize,
}

impl<'a> Tokens<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        let line = self.lines.get(self.pos).map_or(self.lines.last().map_or(0, |l| l.0), |l| l.0);
        Error::Parse {
            line,
            column: 1,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Result<&'a str> {
        while let Some((_, words)) = self.lines.get(self.pos) {
            if let Some(&w) = words.get(self.word) {
                self.word += 1;
                return Ok(w);
            }
            self.pos += 1;
            self.word = 0;
        }
        Err(self.err("unexpected end of file"))
    }

    fn keyword(&mut self, expected: &str) -> Result<()> {
        let w = self.next()?;
        if !w.eq_ignore_ascii_case(expected) {
            return Err(self.err(format!("expected {expected}, found {w}")));
        }
        Ok(())
    }

    fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let w = self.next()?;
        w.parse().map_err(|_| self.err(format!("invalid {what} {w:?}")))
    }

    fn rest_of_line(&mut self) {
        if self.word > 0 {
            self.pos += 1;
            self.word = 0;
        }
    }
}

/// Reads the subset of legacy ASCII VTK written by [`VtkGrid`]: an
/// unstructured grid of triangles with double point data.
pub fn read_vtk(text: &str) -> Result<VtkGrid> {
    let mut raw = text.lines().enumerate();
    let header = raw.next().map(|(_, l)| l.trim()).unwrap_or("");
    if !header.starts_with("# vtk DataFile Version") {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "missing vtk header".into(),
        });
    }
    let title = raw.next().map(|(_, l)| l.trim().to_string()).unwrap_or_default();
    let lines = raw
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, w)| !w.is_empty())
        .collect();
    let mut tok = Tokens { lines, pos: 0, word: 0 };
    tok.keyword("ASCII")?;
    tok.keyword("DATASET")?;
    tok.keyword("UNSTRUCTURED_GRID")?;
    tok.keyword("POINTS")?;
    let n: usize = tok.parse("point count")?;
    tok.next()?;
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let x = tok.parse("coordinate")?;
        let y = tok.parse("coordinate")?;
        let _z: f64 = tok.parse("coordinate")?;
        points.push([x, y]);
    }
    tok.keyword("CELLS")?;
    let m: usize = tok.parse("cell count")?;
    let _size: usize = tok.parse("cell list size")?;
    let mut triangles = Vec::with_capacity(m);
    for _ in 0..m {
        let k: usize = tok.parse("cell size")?;
        if k != 3 {
            return Err(tok.err(format!("only triangles are supported, found a cell of size {k}")));
        }
        let t = [tok.parse("index")?, tok.parse("index")?, tok.parse("index")?];
        if t.iter().any(|&v| v >= n) {
            return Err(tok.err(format!("cell {t:?} refers to a missing point")));
        }
        triangles.push(t);
    }
    tok.keyword("CELL_TYPES")?;
    let mt: usize = tok.parse("cell type count")?;
    if mt != m {
        return Err(tok.err(format!("{mt} cell types for {m} cells")));
    }
    for _ in 0..m {
        let ty: u32 = tok.parse("cell type")?;
        if ty != 5 {
            return Err(tok.err(format!("unsupported cell type {ty}")));
        }
    }
    let mut grid = VtkGrid {
        title,
        points,
        triangles,
        ..VtkGrid::default()
    };
    tok.rest_of_line();
    if tok.pos >= tok.lines.len() {
        return Ok(grid);
    }
    tok.keyword("POINT_DATA")?;
    let np: usize = tok.parse("point data count")?;
    if np != n {
        return Err(tok.err(format!("POINT_DATA {np} does not match {n} points")));
    }
    loop {
        tok.rest_of_line();
        if tok.pos >= tok.lines.len() {
            break;
        }
        let kind = tok.next()?.to_ascii_uppercase();
        let name = tok.next()?.to_string();
        tok.next()?;
        match kind.as_str() {
            "SCALARS" => {
                tok.rest_of_line();
                tok.keyword("LOOKUP_TABLE")?;
                tok.next()?;
                let values = (0..n).map(|_| tok.parse("value")).collect::<Result<Vec<f64>>>()?;
                grid.scalars.push((name, values));
            }
            "VECTORS" => {
                let mut values = Vec::with_capacity(n);
                for _ in 0..n {
                    let x = tok.parse("value")?;
                    let y = tok.parse("value")?;
                    let _z: f64 = tok.parse("value")?;
                    values.push([x, y]);
                }
                grid.vectors.push((name, values));
            }
            other => return Err(tok.err(format!("unsupported point data section {other}"))),
        }
    }
    Ok(grid)
}
