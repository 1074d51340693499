//! Field serialization: flat CSV `(x, y, value)` and legacy VTK structured points.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

/// Writes `x,y,<name>` rows in row-major node order with 17 significant digits.
pub fn write_field_csv<W: Write>(mut w: W, name: &str, field: &ScalarField) -> Result<()> {
    writeln!(w, "x,y,{name}")?;
    let g = field.grid;
    for j in 0..g.ny {
        for i in 0..g.nx {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", g.x(i), g.y(j), field.at(i, j))?;
        }
    }
    Ok(())
}

/// Reads a field written by [`write_field_csv`], recovering the grid from the
/// coordinate columns.
pub fn read_field_csv<R: BufRead>(r: R) -> Result<ScalarField> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty field file".into()))??;
    if header.split(',').count() != 3 {
        return Err(Error::Parse(format!(
            "expected 3 columns in header `{header}`"
        )));
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut vals = [0.0; 3];
        let mut parts = line.split(',');
        for v in vals.iter_mut() {
            let tok = parts
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: too few columns", n + 2)))?;
            *v = tok
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad number `{tok}`", n + 2)))?;
        }
        rows.push(vals);
    }
    if rows.len() < 4 {
        return Err(Error::Parse("field file needs at least a 2x2 grid".into()));
    }
    let (x0, y0) = (rows[0][0], rows[0][1]);
    let nx = rows.iter().take_while(|r| r[1] == y0).count();
    if nx < 2 || rows.len() % nx != 0 {
        return Err(Error::Parse("rows do not form a rectangular grid".into()));
    }
    let ny = rows.len() / nx;
    let dx = rows[1][0] - x0;
    let grid = Grid::new(nx, ny, dx, x0, y0)?;
    let tol = 1e-9 * dx;
    for (k, r) in rows.iter().enumerate() {
        let (i, j) = (k % nx, k / nx);
        if (r[0] - grid.x(i)).abs() > tol || (r[1] - grid.y(j)).abs() > tol {
            return Err(Error::Parse(format!(
                "row {} is off the uniform grid",
                k + 2
            )));
        }
    }
    Ok(ScalarField {
        grid,
        values: rows.iter().map(|r| r[2]).collect(),
    })
}

/// Writes named fields on one grid as a legacy ASCII STRUCTURED_POINTS file.
pub fn write_vtk<W: Write>(mut w: W, title: &str, fields: &[(&str, &ScalarField)]) -> Result<()> {
    let grid = match fields.first() {
        Some((_, f)) => f.grid,
        None => return Err(Error::Config("no fields to write".into())),
    };
    for (_, f) in fields {
        grid.check_same(&f.grid)?;
    }
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} 1", grid.nx, grid.ny)?;
    writeln!(w, "ORIGIN {:.16e} {:.16e} 0", grid.x0, grid.y0)?;
    writeln!(w, "SPACING {:.16e} {:.16e} 1", grid.dx, grid.dx)?;
    writeln!(w, "POINT_DATA {}", grid.len())?;
    for (name, f) in fields {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in &f.values {
            writeln!(w, "{v:.16e}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let grid = Grid::new(5, 3, 0.25, -0.5, -0.25).unwrap();
        let f = ScalarField::from_fn(grid, |x, y| (3.0 * x).sin() * y + 1.0 / 3.0);
        let mut buf = Vec::new();
        write_field_csv(&mut buf, "q", &f).unwrap();
        let back = read_field_csv(&buf[..]).unwrap();
        assert!(back.grid.same_as(&grid));
        assert_eq!(back.values, f.values);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(read_field_csv(&b"x,y,v\n0,0,1\n1,0,abc\n"[..]).is_err());
        assert!(read_field_csv(&b""[..]).is_err());
        assert!(read_field_csv(&b"x,y,v\n0,0,1\n1,0,1\n2,0,1\n0,1,1\n1,1,1\n"[..]).is_err());
    }

    #[test]
    fn vtk_header_and_sizes() {
        let grid = Grid::new(3, 2, 0.5, 0.0, 0.0).unwrap();
        let a = ScalarField::constant(grid, 1.0);
        let b = ScalarField::constant(grid, 2.0);
        let mut buf = Vec::new();
        write_vtk(&mut buf, "test", &[("a", &a), ("b", &b)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains("DIMENSIONS 3 2 1"));
        assert!(text.contains("POINT_DATA 6"));
        assert_eq!(text.matches("SCALARS").count(), 2);
        assert_eq!(text.lines().count(), 8 + 2 * (2 + 6));
    }
}
