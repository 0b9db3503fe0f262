//! The Agmon distance d⁰(x) = d_ℓ(0,x) by power series, geodesic shooting and
//! shortest paths on a lattice graph.

pub mod build;
pub mod checks;
pub mod dijkstra;
pub mod field;
pub mod jacobi;
pub mod series;
pub mod shooting;

pub use build::{build_distance_field, FieldBuild, FieldOptions};
pub use dijkstra::{dijkstra_distance, FinslerGraph};
pub use field::{DistanceField, Provenance};
pub use series::EikonalSeries;
pub use shooting::{shoot_distance, GeodesicBundle, ShootingConfig};
