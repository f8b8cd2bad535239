pub mod bowen;
pub mod config;
pub mod cover;
pub mod entropy;
pub mod error;
pub mod interval;
pub mod lebesgue;
pub mod piecewise;
pub mod rational;
pub mod setcover;
pub mod shift;
pub mod stats;
pub mod verify;
mod words;

pub use config::{LogBase, Settings};
pub use cover::{make_cover, FiniteCover, Space, Subcover};
pub use error::{Error, Result};
pub use interval::{ClosedSegment, Endpoint, Extent, OpenInterval, OpenIntervalSet};
pub use piecewise::{AffinePiece, CompactInterval, PiecewiseAffineMap};
pub use rational::Rational;
