//! Convex closure of the modular inversion graph `G_n`.

pub mod curves;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod heuristic;
pub mod hull;
pub mod numtheory;
pub mod quad;
pub mod rng;
pub mod stats;

pub use curves::{CurveRecord, CurveSpec};
pub use error::{Error, Result};
pub use experiment::ExperimentRecord;
pub use geometry::{convex_hull, ConvexHull, Point};
pub use heuristic::LogFit;
pub use hull::{Algorithm, GnPoint, HullRecord, HullResult, Selection, TriangleChain};
pub use numtheory::{DivisorProfile, Ratio};
pub use rng::CounterRng;
pub use stats::{Bins, FitResult, Histogram, Model};
