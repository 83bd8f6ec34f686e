//! Exact-arithmetic engine for negative-definite plumbed forests with one
//! unframed vertex.
//!
//! A plumbing forest is a forest with integer framings on all vertices except
//! a single distinguished unframed vertex `v0`. The framed part `G` carries an
//! integer intersection form (framings on the diagonal, 1 per edge); when that
//! form is negative definite the forest presents a 3-manifold with an embedded
//! knot. This crate implements:
//!
//! - [`plumbing`]: forests, intersection forms, exact definiteness tests, the
//!   Σ-class orthogonal to the framed vertices, and canonical forms for
//!   isomorphism testing;
//! - [`calculus`]: the blow-up/blow-down move calculus, reduction to reduced
//!   form and the equivalence decision;
//! - [`lattice`]: the knot lattice chain complex over F₂ — characteristic
//!   vectors, the minimizers f and g, the differential, Maslov grading, the
//!   knot filtration A, and truncated homology/filtration fingerprints;
//! - [`maps`]: the structural chain maps between a forest and its blow-up
//!   (vertex family P/R, edge family S/T, homotopies H₀/H and the stabilized
//!   operator C);
//! - [`verify`]: seeded property-test suites that mechanically check the
//!   identities the maps are supposed to satisfy;
//! - [`document`]: the plain-text forest file format.
//!
//! All arithmetic is exact: integers for forms and minimizers, rationals for
//! gradings and the filtration. No floating point anywhere.

pub mod calculus;
pub mod document;
pub mod lattice;
pub mod maps;
pub mod plumbing;
pub mod verify;

pub use plumbing::{Forest, ForestError, IntersectionForm, SigmaClass};
