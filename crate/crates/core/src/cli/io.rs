//! CSV and OBJ text formats. Numbers are written with 17 significant
//! digits so files round-trip exactly and repeat byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::LimitNullCurve;
use crate::error::{Error, Result};
use crate::graph::GraphGrid;
use crate::lorentz::LVec3;
use crate::radial::RadialProfile;
use crate::solver::SurfacePatch;
use crate::spectral::{node, nodes};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn table(header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    // writing into a Vec cannot fail
    w.write_record(header).unwrap();
    for r in rows {
        w.write_record(r.into_iter().map(num)).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

/// `u,v,x,y,z`, rows ordered by `v` then `u`.
pub fn surface_csv(patch: &SurfacePatch) -> String {
    let us = nodes(patch.n());
    let rows = patch
        .psi()
        .iter()
        .zip(patch.v_levels())
        .flat_map(|(row, &v)| {
            row.iter()
                .zip(us.clone())
                .map(move |(p, u)| vec![u, v, p.x, p.y, p.z])
        });
    table(&["u", "v", "x", "y", "z"], rows)
}

pub fn profile_csv(p: &RadialProfile) -> String {
    let rows = (0..p.len()).map(|k| vec![p.v[k], p.f[k], p.h[k]]);
    table(&["v", "f", "h"], rows)
}

/// `u,v,x,y,z,p,q,r,s,t` for the rows above the puncture.
pub fn graph_csv(gg: &GraphGrid) -> String {
    let rows = gg.rows().iter().zip(gg.v_levels()).flat_map(|(row, &v)| {
        let n = row.len();
        row.iter()
            .enumerate()
            .map(move |(j, s)| vec![node(j, n), v, s.x, s.y, s.z, s.p, s.q, s.r, s.s, s.t])
    });
    table(&["u", "v", "x", "y", "z", "p", "q", "r", "s", "t"], rows)
}

/// `u,b1,b2,b3,A` of a limit null curve.
pub fn curve_csv(c: &LimitNullCurve) -> String {
    let n = c.n();
    let a = c.height.re();
    let rows = c
        .raw
        .iter()
        .enumerate()
        .map(|(j, b)| vec![node(j, n), b.x, b.y, b.z, a[j]]);
    table(&["u", "b1", "b2", "b3", "A"], rows)
}

/// Wavefront OBJ: vertices row-major in `v` then `u`, one quad per grid
/// cell, with the seam at `u = 2π` closed back onto `u = 0`.
pub fn export_obj(patch: &SurfacePatch) -> String {
    let n = patch.n();
    let mut out = String::new();
    writeln!(out, "# surface patch {} x {}", patch.rows(), n).unwrap();
    for p in patch.psi().iter().flatten() {
        writeln!(out, "v {} {} {}", num(p.x), num(p.y), num(p.z)).unwrap();
    }
    for k in 0..patch.rows() - 1 {
        for j in 0..n {
            let jn = (j + 1) % n;
            let a = k * n + j + 1;
            let b = k * n + jn + 1;
            let c = (k + 1) * n + jn + 1;
            let d = (k + 1) * n + j + 1;
            writeln!(out, "f {a} {b} {c} {d}").unwrap();
        }
    }
    out
}

/// Surface patch from `u,v,x,y,z` text. `ψ_v` is estimated from the rows.
pub fn parse_surface_csv(text: &str, label: &str) -> Result<SurfacePatch> {
    let bad = |msg: String| Error::Input {
        path: label.to_string(),
        msg,
    };
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["u", "v", "x", "y", "z"] {
        return Err(bad(format!(
            "expected header u,v,x,y,z, got {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut levels: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<(f64, LVec3)>> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| bad(format!("line {line}: {e}")))?;
        let vals = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| bad(format!("line {line}: '{s}' is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if vals.iter().any(|x| !x.is_finite()) {
            return Err(bad(format!("line {line}: non-finite value")));
        }
        let (u, v) = (vals[0], vals[1]);
        if levels.last() != Some(&v) {
            if levels.last().is_some_and(|last| v <= *last) {
                return Err(bad(format!("line {line}: v = {v} is out of order")));
            }
            levels.push(v);
            rows.push(Vec::new());
        }
        rows.last_mut()
            .unwrap()
            .push((u, LVec3::new(vals[2], vals[3], vals[4])));
    }
    if rows.is_empty() {
        return Err(bad("no data rows".into()));
    }
    let n = rows[0].len();
    let mut psi = Vec::with_capacity(rows.len());
    for (k, row) in rows.into_iter().enumerate() {
        if row.len() != n {
            return Err(bad(format!(
                "level {k} has {} nodes, expected {n}",
                row.len()
            )));
        }
        for (j, (u, _)) in row.iter().enumerate() {
            if (u - node(j, n)).abs() > 1e-12 {
                return Err(bad(format!(
                    "level {k}, node {j}: u = {u} is not the grid node {}",
                    node(j, n)
                )));
            }
        }
        psi.push(row.into_iter().map(|(_, p)| p).collect());
    }
    SurfacePatch::from_positions(levels, psi).map_err(|e| bad(e.to_string()))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

pub fn read_surface(path: &Path) -> Result<SurfacePatch> {
    parse_surface_csv(&read_text(path)?, &path.display().to_string())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}
