//! Triangulations, newest vertex bisection and mesh overlays.

mod domain;
pub mod io;
mod refine;
mod trimesh;
mod union;

pub use domain::{Domain, Rectangle};
pub use io::MeshFile;
pub use refine::{refine, uniform_refine};
pub use trimesh::{barycentric, make_initial_mesh, CellKey, InitialMesh, TriMesh, MAX_DEPTH, NONE};
pub use union::{ancestor_map, transfer_values, union_mesh};
