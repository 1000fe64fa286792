//! Plain-text mesh format.
//!
//! ```text
//! nodes <N> cells <M>
//! x y          (N lines, 17 significant digits)
//! i j k        (M lines, 0-based vertex indices)
//! ```

use std::io::{BufRead, Write};

use super::TriMesh;
use crate::{Error, Result};

/// Mesh geometry as stored in a mesh file.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshFile {
    pub vertices: Vec<[f64; 2]>,
    pub cells: Vec<[u32; 3]>,
}

impl From<&TriMesh> for MeshFile {
    fn from(m: &TriMesh) -> Self {
        MeshFile {
            vertices: m.vertices().to_vec(),
            cells: m.cells().to_vec(),
        }
    }
}

impl MeshFile {
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "nodes {} cells {}", self.vertices.len(), self.cells.len())?;
        for p in &self.vertices {
            writeln!(out, "{:.16e} {:.16e}", p[0], p[1])?;
        }
        for c in &self.cells {
            writeln!(out, "{} {} {}", c[0], c[1], c[2])?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read<R: BufRead>(input: R) -> Result<MeshFile> {
        let mut lines = input.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, l)) => Ok((i + 1, l?)),
                None => Err(Error::Parse {
                    line: 0,
                    msg: format!("unexpected end of file, expected {what}"),
                }),
            }
        };
        let (ln, header) = next("header")?;
        let h: Vec<&str> = header.split_whitespace().collect();
        let bad_header = || Error::Parse {
            line: ln,
            msg: "expected `nodes <N> cells <M>`".into(),
        };
        if h.len() != 4 || h[0] != "nodes" || h[2] != "cells" {
            return Err(bad_header());
        }
        let n: usize = h[1].parse().map_err(|_| bad_header())?;
        let m: usize = h[3].parse().map_err(|_| bad_header())?;
        let mut vertices = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, l) = next("a vertex line")?;
            let v = parse_fields::<f64, 2>(&l, ln)?;
            vertices.push(v);
        }
        let mut cells = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, l) = next("a cell line")?;
            let c = parse_fields::<u32, 3>(&l, ln)?;
            if c.iter().any(|&i| i as usize >= n) {
                return Err(Error::Parse {
                    line: ln,
                    msg: "vertex index out of range".into(),
                });
            }
            cells.push(c);
        }
        Ok(MeshFile { vertices, cells })
    }
}

fn parse_fields<T: std::str::FromStr + Copy + Default, const K: usize>(
    line: &str,
    ln: usize,
) -> Result<[T; K]> {
    let mut out = [T::default(); K];
    let mut it = line.split_whitespace();
    for slot in out.iter_mut() {
        *slot = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse {
                line: ln,
                msg: format!("expected {K} numbers"),
            })?;
    }
    if it.next().is_some() {
        return Err(Error::Parse {
            line: ln,
            msg: format!("expected {K} numbers"),
        });
    }
    Ok(out)
}
