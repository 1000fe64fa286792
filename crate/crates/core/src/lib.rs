//! Adaptive multimesh finite elements for the spectral fractional Laplacian.
//!
//! The fractional problem `(-Δ)^s u = f` with homogeneous Dirichlet data is
//! replaced by a sum of poles of a sinc-quadrature rational approximation of
//! `λ^{-s}`. Each pole becomes a reaction–diffusion problem that is solved on
//! its own adaptively refined P1 mesh; the meshes all descend from one
//! initial triangulation by newest vertex bisection, so their overlay (the
//! union mesh) is again a bisection mesh that contains every parametric
//! finite element space.
//!
//! Module map:
//!
//! * [`mesh`]: bisection forests, refinement, overlays, ASCII mesh files.
//! * [`rational`]: rational approximation coefficients and error bound.
//! * [`fem`]: P1 assembly, the sparse solver and recombination.
//! * [`estimate`]: hierarchical local Neumann indicators and global estimates.
//! * [`adaptive`]: joint weighted Dörfler marking and the adaptive loop.
//! * [`reference`]: spectral-series reference solutions on rectangles.

pub mod adaptive;
pub mod error;
pub mod estimate;
pub mod fem;
pub mod mesh;
pub mod quadrature;
pub mod rational;
pub mod reference;

pub use error::{Error, Result};
