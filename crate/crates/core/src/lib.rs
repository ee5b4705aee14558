//! Perfect packing of a square of area `Σ_{n≥n0} n^{-2t}` by the squares of
//! sidelength `n^{-t}`, `1/2 < t < 1`.
//!
//! The packing is driven by [`engine::PackingState`]: it keeps a family of
//! residual rectangles, repeatedly takes the widest one, carves a column of
//! strips off it and fills every strip with a near-lattice block of
//! consecutive squares ([`block`]). Everything the engine produces can be
//! serialized as a [`certificate::Certificate`] and checked independently by
//! [`verify`].

pub mod block;
pub mod certificate;
pub mod engine;
pub mod geometry;
pub mod series;
pub mod sum;
pub mod svg;
pub mod sweep;
pub mod verify;

pub use block::{pack_block, pack_spec, BlockError, BlockResult, BlockSpec, Gap, GapKind};
pub use certificate::Certificate;
pub use engine::{Limits, PackingState, RunReport, Termination};
pub use geometry::{Family, Frame, PlacedSquare, Rect, ResidualTag};
pub use series::{partial_sum, perimeter_budget, side, tail_sum, Params, SeriesValue};
pub use verify::{verify, VerificationReport, VerifyLevel};
