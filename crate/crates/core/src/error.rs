use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WhetError {
    #[error("time {t} s lies outside the coverage window [-{t_end}, {t_end}]")]
    OutOfWindow { t: f64, t_end: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no sign change on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi}); widen the bracket")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("could not bracket the multiplier after {doublings} doublings")]
    BracketExhausted { doublings: u32 },

    #[error("non-uniform sample spacing at index {index}")]
    NonUniformGrid { index: usize },

    #[error("P_m too small to deliver burst energy in window (half-width {half_width} s > {t_end} s)")]
    BurstTooLong { half_width: f64, t_end: f64 },

    #[error("fading simulation requires a symmetric channel (Gc = Gs, alpha_c = alpha_s)")]
    AsymmetricChannel,
}

pub type Result<T, E = WhetError> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> WhetError {
    WhetError::InvalidParameter { name, reason: reason.into() }
}
