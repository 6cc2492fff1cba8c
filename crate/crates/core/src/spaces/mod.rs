//! Fundamental functions, quasi-concavity tools and the rearrangement-
//! invariant norms evaluated on decreasing step functions.

mod norm;
mod phi;
mod shape;
pub mod shorthand;
mod young;

pub use norm::{fundamental_function, norm, norm_profile, norm_samples, phi_of, NormSpec};
pub use phi::{FundamentalFn, PhiForm};
pub use shape::{
    is_quasiconcave, least_concave_majorant, lorentz_embedding_ratio, psi_form, psi_majorant, EmbeddingRatio,
    QuasiVerdict,
};
pub use young::NFunction;
