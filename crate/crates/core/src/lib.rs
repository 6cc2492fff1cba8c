//! Rearrangement-invariant norms, maximal operators, indices, discrete
//! modulus and capacity programs, and Lipschitz truncation on finite
//! metric measure spaces.

pub mod error;
pub mod ext;
pub mod maximal;
pub mod metric;
pub mod presets;
pub mod quad;
pub mod rearrange;
pub mod regularize;
pub mod spaces;

pub use error::{Error, Result};
pub use ext::Ext;
