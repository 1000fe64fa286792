use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Axis-aligned rectangle `[x0, x0 + lx] × [y0, y0 + ly]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    pub x0: f64,
    pub y0: f64,
    pub lx: f64,
    pub ly: f64,
}

impl Rectangle {
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }
}

/// The polygonal domains supported by the initial mesh generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    /// `(-1, 1)²`
    Square,
    /// `(0, 1)²`
    UnitSquare,
    /// `(-1, 1)² \ (-1, 0]²`
    LShape,
}

impl Domain {
    pub fn area(&self) -> f64 {
        match self {
            Domain::Square => 4.0,
            Domain::UnitSquare => 1.0,
            Domain::LShape => 3.0,
        }
    }

    /// The rectangle when the domain is one, `None` otherwise.
    pub fn rectangle(&self) -> Option<Rectangle> {
        match self {
            Domain::Square => Some(Rectangle {
                x0: -1.0,
                y0: -1.0,
                lx: 2.0,
                ly: 2.0,
            }),
            Domain::UnitSquare => Some(Rectangle {
                x0: 0.0,
                y0: 0.0,
                lx: 1.0,
                ly: 1.0,
            }),
            Domain::LShape => None,
        }
    }

    fn bounding_box(&self) -> Rectangle {
        match self {
            Domain::UnitSquare => self.rectangle().unwrap(),
            Domain::Square | Domain::LShape => Rectangle {
                x0: -1.0,
                y0: -1.0,
                lx: 2.0,
                ly: 2.0,
            },
        }
    }

    /// Whether the closed domain contains the point.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let b = self.bounding_box();
        let inside_box = x >= b.x0 && x <= b.x0 + b.lx && y >= b.y0 && y <= b.y0 + b.ly;
        match self {
            Domain::LShape => inside_box && !(x < 0.0 && y < 0.0),
            _ => inside_box,
        }
    }

    /// Whether the point lies on the boundary polygon (exact comparisons;
    /// bisection vertices have exactly representable coordinates).
    pub fn on_boundary(&self, x: f64, y: f64) -> bool {
        if !self.contains(x, y) {
            return false;
        }
        let b = self.bounding_box();
        let on_box = x == b.x0 || x == b.x0 + b.lx || y == b.y0 || y == b.y0 + b.ly;
        match self {
            Domain::LShape => on_box || (x == 0.0 && y <= 0.0) || (y == 0.0 && x <= 0.0),
            _ => on_box,
        }
    }

    /// Grid parameter `n` for a uniform grid with `target_cells` triangles:
    /// squares per side on the squares, squares per unit length on the L-shape.
    pub(crate) fn grid_resolution(&self, target_cells: usize) -> Result<usize> {
        // square and unit square: 2 n² cells over the full box; L-shape: 3/4 of a
        // 2n × 2n box, i.e. 6 n² cells with n squares per unit length
        let per_square = match self {
            Domain::Square | Domain::UnitSquare => 2,
            Domain::LShape => 6,
        };
        if target_cells == 0 || target_cells % per_square != 0 {
            return Err(unreachable_target(*self, target_cells));
        }
        let sq = target_cells / per_square;
        let n = (sq as f64).sqrt().round() as usize;
        if n == 0 || n * n != sq {
            return Err(unreachable_target(*self, target_cells));
        }
        Ok(n)
    }

    /// Default initial cell count: 512 on the squares, 384 on the L-shape.
    pub fn default_initial_cells(&self) -> usize {
        match self {
            Domain::Square | Domain::UnitSquare => 512,
            Domain::LShape => 384,
        }
    }
}

fn unreachable_target(domain: Domain, target: usize) -> Error {
    Error::Config(format!(
        "{target} cells cannot be produced by a uniform right-triangle grid on {domain}"
    ))
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::Square => "square",
            Domain::UnitSquare => "unit-square",
            Domain::LShape => "lshape",
        })
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(Domain::Square),
            "unit-square" => Ok(Domain::UnitSquare),
            "lshape" | "l-shape" => Ok(Domain::LShape),
            other => Err(Error::Config(format!("unknown domain `{other}`"))),
        }
    }
}
