//! A combinatorial engine for factorization structures over finite discrete
//! varieties.
//!
//! The engine realizes families of fibers over the powers `X^n` of a finite
//! point set `X`, together with the two kinds of structure isomorphisms such a
//! family carries: transport along diagonal embeddings (the Ran condition) and
//! product decompositions over disjointness loci (the factorization
//! condition). On top of that it implements:
//!
//! * validation of every coherence law the structures must satisfy, with
//!   complete failure reports instead of exceptions;
//! * the gluing construction that rebuilds a full structure from data given
//!   only near the small diagonal, including explicit chart transitions and a
//!   cocycle verifier;
//! * pullback along maps of varieties, both the naive fiber-product form
//!   (with its failure locus) and the corrected two-step form that pulls back
//!   the diagonal-neighborhood data and reglues;
//! * universal families indexed by a catalog of varieties, with a
//!   composition-coherence checker and a built-in commutative example family.
//!
//! All arithmetic is exact: isomorphisms of vector-space fibers are matrices
//! over arbitrary-precision rationals, and every law is checked as an exact
//! equality. The matrix kernel is generic over the scalar type; the engine
//! instantiates it at [`Rat`].

pub mod fiber;
pub mod format;
pub mod glue;
pub mod matrix;
pub mod mutate;
pub mod pullback;
pub mod report;
pub mod scalar;
pub mod structure;
pub mod surjection;
pub mod universal;
pub mod variety;

/// The concrete scalar used by the engine: arbitrary-precision rationals.
pub type Rat = num_rational::BigRational;

/// Matrices over [`Rat`], the concrete instantiation used for all
/// vector-space isomorphisms.
pub type RatMatrix = matrix::Matrix<Rat>;

pub use fiber::{Fiber, FiberMap, FiberTheory, Iso};
pub use report::{Law, ValidationReport, Violation};
pub use structure::{StrictMorphism, StrictStructure, WeakMorphism, WeakStructure};
pub use surjection::Surjection;
pub use variety::{Config, EtaleMap, Locus, PointId, Variety};
