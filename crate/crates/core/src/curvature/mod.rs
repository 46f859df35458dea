//! Ollivier-Ricci and attribute-mixed curvature over graph edges.

mod distribution;
mod oracle;
mod table;
mod transport;

pub use distribution::{base_distribution, mixed_distribution, DiscreteDistribution};
pub use oracle::ot_oracle;
pub use table::{
    local_distance, mixed_curvature_table, ollivier_curvature, scaled_similarity, support_costs, CurvatureTable,
    EdgeCurvature, DISTANCE_CAP,
};
pub use transport::wasserstein;
