//! Parameters, grids, weighted quadrature and fields.

mod arcs;
mod ball;
mod field;
mod params;
mod sphere;

pub use arcs::ArcSet;
pub use ball::HalfBallGrid;
pub use field::{
    folded_dirichlet_energy, random_field, weighted_dirichlet_energy, weighted_l2_inner, GridRef,
    ScalarField,
};
pub use params::FractionalParams;
pub use sphere::{GridDescription, HemisphereGrid, MAX_NODES, MIN_NODES};
