//! Desk verification of the constructive ingredients behind infinite-rank
//! results for elliptic curves over quadratic and ring-class-field towers:
//! exact quadratic-point witness families, Heegner-point trace relations,
//! class numbers of imaginary quadratic orders, the recurrence integrality
//! obstruction, and the inert-prime search criterion.
//!
//! Everything certificate-bearing is exact (GMP integers and rationals);
//! floating point appears only in the analytic Heegner computations, always
//! with explicit precision and tolerances.

pub mod catalog;
pub mod classfield;
pub mod curve;
pub mod exact;
pub mod hecke;
pub mod heegner;
pub mod primesearch;
pub mod recurrence;
pub mod witness;

pub use catalog::{Catalog, CurveCatalogEntry};
pub use curve::{CurveQ, Point, QuadraticPoint};
pub use exact::{Int, QuadElem, QuadField, Rat};
pub use hecke::ApTable;
pub use heegner::{PeriodLattice, TracePoint};
