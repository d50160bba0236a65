//! Chart-local tensor calculus with expression coefficients.

mod endo;
mod field;
mod form;

pub use endo::{nijenhuis_pair, EndField, MetricField, NumericMatrix};
pub use field::{lie_bracket, random_fields, VectorField};
pub use form::{exterior_derivative, interior_product, lie_derivative, wedge, KForm};
