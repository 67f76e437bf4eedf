//! Mode-by-mode rigidity analysis of the hyperbolic cone tube.

pub mod error;
pub mod frobenius;
pub mod geometry;
pub mod indicial;
pub mod l2class;
pub mod modes;
pub mod scalar;
pub mod series;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Geometry = geometry::ConeGeometry<f64>;
pub type Series = series::TruncatedSeries<f64>;
pub type Block = modes::ModeBlock<f64>;
pub type Operator = modes::RadialOperator<f64>;
pub type Root = indicial::IndicialRoot<f64>;
pub type Branch = frobenius::FrobeniusBranch<f64>;
pub type Report = l2class::L2Report<f64>;
