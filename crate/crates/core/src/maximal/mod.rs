//! Maximal operators on the half-line and on finite metric spaces, the
//! Hardy and dilation operators, upper fundamental and Boyd indices, and
//! the density criteria built from them.

mod criteria;
mod indices;
mod operators;

pub use criteria::{
    criterion_b, density_criteria_report, lorentz_type, m_phi_norm, normable, Condition, CriteriaReport, Verdict,
    IMPLICATIONS,
};
pub use indices::{
    boyd_upper_lowerbound, closed_form_alpha, default_s_grid, index_report, zippin_upper, BoydEstimate, IndexReport,
    ZippinEstimate,
};
pub use operators::{
    dilation, hardy, herz_riesz_ratios, maximal_decreasing, maximal_metric, maximal_superlevel_measure,
    sandwich_constants, HerzRiesz,
};
