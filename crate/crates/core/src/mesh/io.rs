//! Plain-text `KSMESH 1` format.
//!
//! ```text
//! KSMESH 1
//! # macro acute 2
//! V <count>
//! x y            (one line per vertex)
//! T <count>
//! i j k          (one line per triangle, 0-based, counter-clockwise)
//! ```
//!
//! Lines starting with `#` are comments. The optional `# macro <kind> <n>`
//! comment records macroelement provenance. Coordinates are written with 17
//! significant digits so a save/load round trip is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{MacroKind, Mesh, Point2};
use crate::error::{Error, Result};

const HEADER: &str = "KSMESH 1";

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::with_capacity(48 * mesh.n_vertices() + 24 * mesh.n_triangles() + 64);
    out.push_str(HEADER);
    out.push('\n');
    if let (kind @ (MacroKind::Acute | MacroKind::NonAcute), Some(n)) =
        (mesh.macro_kind(), mesh.nsquare())
    {
        let _ = writeln!(out, "# macro {kind} {n}");
    }
    let _ = writeln!(out, "V {}", mesh.n_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(out, "{:.16e} {:.16e}", p.x, p.y);
    }
    let _ = writeln!(out, "T {}", mesh.n_triangles());
    for [i, j, k] in mesh.triangles() {
        let _ = writeln!(out, "{i} {j} {k}");
    }
    out
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_mesh(mesh))?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_mesh(&text, path)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    path: &'a Path,
    last: usize,
    provenance: Option<(MacroKind, usize)>,
}

impl<'a> Lines<'a> {
    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: PathBuf::from(self.path),
            line,
            message: message.into(),
        }
    }

    /// Next non-blank, non-comment line with its 1-based number.
    fn next_data(&mut self) -> Result<(usize, &'a str)> {
        while let Some((i, raw)) = self.inner.next() {
            let line = raw.trim();
            self.last = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let words: Vec<&str> = comment.split_whitespace().collect();
                if let ["macro", kind, n] = words[..] {
                    let kind = kind
                        .parse()
                        .map_err(|_| self.err(i + 1, "bad macro kind"))?;
                    let n = n.parse().map_err(|_| self.err(i + 1, "bad macro count"))?;
                    self.provenance = Some((kind, n));
                }
                continue;
            }
            return Ok((i + 1, line));
        }
        Err(self.err(self.last + 1, "unexpected end of file"))
    }

    fn section(&mut self, tag: &str) -> Result<usize> {
        let (no, line) = self.next_data()?;
        let mut words = line.split_whitespace();
        match (words.next(), words.next(), words.next()) {
            (Some(t), Some(count), None) if t == tag => count
                .parse()
                .map_err(|_| self.err(no, format!("bad {tag} count `{count}`"))),
            _ => Err(self.err(no, format!("expected `{tag} <count>`, found `{line}`"))),
        }
    }
}

pub fn parse_mesh(text: &str, path: &Path) -> Result<Mesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        path,
        last: 0,
        provenance: None,
    };
    let (no, header) = lines.next_data()?;
    if header != HEADER {
        return Err(lines.err(no, format!("expected `{HEADER}` header, found `{header}`")));
    }

    let nv = lines.section("V")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (no, line) = lines.next_data()?;
        let xy: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| lines.err(no, format!("bad coordinate: {e}")))?;
        match xy[..] {
            [x, y] if x.is_finite() && y.is_finite() => vertices.push(Point2::new(x, y)),
            _ => {
                return Err(lines.err(
                    no,
                    format!("expected two finite coordinates, found `{line}`"),
                ))
            }
        }
    }

    let nt = lines.section("T")?;
    let mut triangles = Vec::with_capacity(nt);
    let mut tri_lines = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (no, line) = lines.next_data()?;
        let idx: Vec<usize> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| lines.err(no, format!("bad vertex index: {e}")))?;
        let [i, j, k] = idx[..] else {
            return Err(lines.err(no, format!("expected three vertex indices, found `{line}`")));
        };
        if let Some(&bad) = [i, j, k].iter().find(|&&v| v >= nv) {
            return Err(lines.err(no, format!("vertex index {bad} out of range (V = {nv})")));
        }
        triangles.push([i, j, k]);
        tri_lines.push(no);
    }
    if let Ok((no, line)) = lines.next_data() {
        return Err(lines.err(no, format!("trailing content `{line}`")));
    }

    let (kind, nsquare) = match lines.provenance {
        Some((kind, n)) => (kind, Some(n)),
        None => (MacroKind::External, None),
    };
    Mesh::with_provenance(vertices, triangles, kind, nsquare).map_err(|e| match e {
        Error::DegenerateTriangle { index, area } => lines.err(
            tri_lines[index],
            format!("triangle {index} is not counter-clockwise (signed area {area:e})"),
        ),
        Error::InvalidMesh(msg) => lines.err(0, msg),
        other => other,
    })
}
