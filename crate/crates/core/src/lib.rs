pub mod chains;
pub mod error;
pub mod gaussbonnet;
pub mod geodesics;
pub mod integrands;
pub mod metrics;
pub mod oracle;
pub mod presets;
pub mod quadrature;
pub mod simplices;

pub use chains::{AbstractSimplex, Coeff, SingularChain};
pub use error::{GeomError, Result};
pub use gaussbonnet::{verify_identity, Budgets, GBReport, TheoremBudget};
pub use metrics::{ChartedMetric, CurvatureData, MetricKind};
pub use quadrature::QuadResult;
pub use simplices::{Face, GeodesicSimplex};
