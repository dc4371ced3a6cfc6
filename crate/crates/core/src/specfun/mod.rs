//! Special functions: gamma, digamma and the Mittag-Leffler function.

pub mod calibration;
pub mod contour;
pub mod gamma;
pub mod mittag_leffler;
pub mod quadrature;

pub use calibration::{calibrated, CalibratedConstants};
pub use contour::{ContourQ, HankelContour};
pub use gamma::{digamma_fn, gamma_fn, ln_gamma, rgamma, EULER_GAMMA};
pub use mittag_leffler::{
    dp_drho, dp_dsigma, ml_asymptotic, ml_drho, ml_dsigma, ml_eval, ml_neg, ml_p, ml_partials, ml_q_contour, ml_series,
    q_partials, MLArgument, MLPartials, MLValue, QPartials, Route, RHO_CLAMP,
};
