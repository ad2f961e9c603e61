//! Legacy ASCII VTK output (`UNSTRUCTURED_GRID` with point data), plus a
//! small reader used to self-check emitted files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::FeFunction;
use crate::mesh::Mesh;

const VTK_TRIANGLE: u8 = 5;

/// Renders `fields` as point data on `mesh`.
pub fn write_vtk(mesh: &Mesh, title: &str, fields: &[(&str, &FeFunction)]) -> Result<String> {
    for (_, f) in fields {
        f.check_len(mesh.n_vertices())?;
    }
    let nv = mesh.n_vertices();
    let nt = mesh.n_triangles();
    let mut s = String::with_capacity(64 * nv + 32 * nt);
    let title = title.replace('\n', " ");
    s.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(s, "{title}");
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {nv} double");
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:.16e} {:.16e} 0", p.x, p.y);
    }
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for [a, b, c] in mesh.triangles() {
        let _ = writeln!(s, "3 {a} {b} {c}");
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(s, "{VTK_TRIANGLE}");
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {nv}");
        for (name, f) in fields {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in f.values() {
                let _ = writeln!(s, "{v:.16e}");
            }
        }
    }
    Ok(s)
}

pub fn save_vtk(
    mesh: &Mesh,
    title: &str,
    fields: &[(&str, &FeFunction)],
    path: impl AsRef<Path>,
) -> Result<()> {
    fs::write(path, write_vtk(mesh, title, fields)?)?;
    Ok(())
}

/// Contents of a legacy VTK triangle file.
#[derive(Debug, Clone, PartialEq)]
pub struct VtkData {
    pub title: String,
    pub points: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub point_data: Vec<(String, Vec<f64>)>,
}

/// Parses the subset of legacy ASCII VTK produced by [`write_vtk`].
pub fn parse_vtk(text: &str) -> std::result::Result<VtkData, String> {
    let mut lines = text.lines();
    let version = lines.next().ok_or("empty file")?;
    if !version.starts_with("# vtk DataFile Version") {
        return Err(format!("bad version line `{version}`"));
    }
    let title = lines.next().ok_or("missing title")?.to_string();
    if lines.next().map(str::trim) != Some("ASCII") {
        return Err("only ASCII files are supported".into());
    }
    if lines.next().map(str::trim) != Some("DATASET UNSTRUCTURED_GRID") {
        return Err("expected DATASET UNSTRUCTURED_GRID".into());
    }
    let mut tokens = Tokens(lines.flat_map(str::split_whitespace));
    let mut next = |what: &str| tokens.next(what);
    fn num<T: std::str::FromStr>(tok: &str) -> std::result::Result<T, String> {
        tok.parse().map_err(|_| format!("bad number `{tok}`"))
    }
    fn expect(tok: &str, kw: &str) -> std::result::Result<(), String> {
        if tok == kw {
            Ok(())
        } else {
            Err(format!("expected `{kw}`, found `{tok}`"))
        }
    }

    expect(next("POINTS")?, "POINTS")?;
    let np: usize = num(next("point count")?)?;
    next("point type")?;
    let mut points = Vec::with_capacity(np);
    for _ in 0..np {
        points.push([num(next("x")?)?, num(next("y")?)?, num(next("z")?)?]);
    }

    expect(next("CELLS")?, "CELLS")?;
    let nc: usize = num(next("cell count")?)?;
    let size: usize = num(next("cell list size")?)?;
    if size != 4 * nc {
        return Err(format!("cell list size {size} is not 4 x {nc}"));
    }
    let mut triangles = Vec::with_capacity(nc);
    for _ in 0..nc {
        if num::<usize>(next("cell arity")?)? != 3 {
            return Err("only triangles are supported".into());
        }
        let tri = [num(next("i")?)?, num(next("j")?)?, num(next("k")?)?];
        if tri.iter().any(|&i: &usize| i >= np) {
            return Err(format!("cell {tri:?} references a missing point"));
        }
        triangles.push(tri);
    }
    expect(next("CELL_TYPES")?, "CELL_TYPES")?;
    if num::<usize>(next("cell type count")?)? != nc {
        return Err("CELL_TYPES count mismatch".into());
    }
    for _ in 0..nc {
        if num::<u8>(next("cell type")?)? != VTK_TRIANGLE {
            return Err("non-triangle cell type".into());
        }
    }

    let mut point_data = Vec::new();
    if let Ok(tok) = next("POINT_DATA") {
        if tok != "POINT_DATA" {
            return Err(format!("expected `POINT_DATA`, found `{tok}`"));
        }
        if num::<usize>(next("point data count")?)? != np {
            return Err("POINT_DATA count mismatch".into());
        }
        while let Ok(tok) = next("SCALARS") {
            if tok != "SCALARS" {
                return Err(format!("expected `SCALARS`, found `{tok}`"));
            }
            let name = next("field name")?.to_string();
            next("field type")?;
            if num::<usize>(next("component count")?)? != 1 {
                return Err("only scalar fields are supported".into());
            }
            expect(next("LOOKUP_TABLE")?, "LOOKUP_TABLE")?;
            next("table name")?;
            let values = (0..np)
                .map(|_| next("field value").and_then(num::<f64>))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            point_data.push((name, values));
        }
    }
    Ok(VtkData {
        title,
        points,
        triangles,
        point_data,
    })
}

struct Tokens<I>(I);

impl<'a, I: Iterator<Item = &'a str>> Tokens<I> {
    fn next(&mut self, what: &str) -> std::result::Result<&'a str, String> {
        self.0
            .next()
            .ok_or_else(|| format!("unexpected end of file reading {what}"))
    }
}

/// Re-reads a written file and checks it reproduces `mesh` and `fields`.
pub fn verify_vtk_file(
    path: impl AsRef<Path>,
    mesh: &Mesh,
    fields: &[(&str, &FeFunction)],
) -> Result<()> {
    let path = path.as_ref();
    let fail = |message: String| Error::Parse {
        path: path.into(),
        line: 0,
        message,
    };
    let data = parse_vtk(&fs::read_to_string(path)?).map_err(fail)?;
    if data.points.len() != mesh.n_vertices() || data.triangles != mesh.triangles() {
        return Err(fail("mesh does not match".into()));
    }
    for ((name, f), (read_name, values)) in fields.iter().zip(&data.point_data) {
        if name != read_name || values.as_slice() != f.values() {
            return Err(fail(format!("field `{name}` does not match")));
        }
    }
    if fields.len() != data.point_data.len() {
        return Err(fail("field count does not match".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_macro_mesh, MacroKind};

    #[test]
    fn written_file_parses_back() {
        let mesh = build_macro_mesh(2, MacroKind::NonAcute);
        let u = FeFunction::new(
            (0..mesh.n_vertices())
                .map(|i| (i as f64).sqrt() - 3.0)
                .collect(),
        );
        let v = FeFunction::constant(mesh.n_vertices(), 0.25);
        let text = write_vtk(&mesh, "u and v", &[("u", &u), ("v", &v)]).unwrap();
        let data = parse_vtk(&text).unwrap();
        assert_eq!(data.title, "u and v");
        assert_eq!(data.triangles, mesh.triangles());
        assert_eq!(data.point_data.len(), 2);
        assert_eq!(data.point_data[0].1, u.values());
        for (p, q) in data.points.iter().zip(mesh.vertices()) {
            assert_eq!((p[0], p[1], p[2]), (q.x, q.y, 0.0));
        }

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.vtk");
        save_vtk(&mesh, "t", &[("u", &u)], &path).unwrap();
        verify_vtk_file(&path, &mesh, &[("u", &u)]).unwrap();
        assert!(verify_vtk_file(&path, &mesh, &[("u", &v)]).is_err());
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_vtk("").is_err());
        assert!(parse_vtk("# vtk DataFile Version 3.0\nx\nBINARY\n").is_err());
        let mesh = build_macro_mesh(1, MacroKind::Acute);
        let text = write_vtk(&mesh, "t", &[]).unwrap();
        assert!(parse_vtk(&text).unwrap().point_data.is_empty());
        let truncated = &text[..text.len() / 2];
        assert!(parse_vtk(truncated).is_err());
    }
}
