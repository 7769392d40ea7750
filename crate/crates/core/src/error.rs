use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of a closed-form formula.
    Domain { what: &'static str, value: f64 },
    /// Finite-difference operators need at least four nodes per direction.
    GridTooSmall { n_s: usize, n_theta: usize },
    /// Two fields live on different grids.
    GridMismatch,
    /// Requested Fourier modes are not resolved by the θ grid.
    Nyquist { n_max: usize, n_theta: usize },
    /// The delay `1/2` is not an integer multiple of the profile spacing.
    Spacing { h: f64 },
    /// Array lengths or dimensions disagree.
    Shape { expected: usize, found: usize },
    /// A field value is not finite.
    NonFinite { what: &'static str },
    /// The explicit step is above the parabolic stability limit.
    Unstable { dt: f64, limit: f64 },
    /// The collar length fell to the configured floor.
    Pinched { ell: f64 },
    /// The collar length rose above the coordinate-domain bound.
    AboveEllMax { ell: f64 },
    /// A least-squares fit is too badly conditioned to trust.
    IllConditioned { condition: f64 },
    /// Invalid configuration value.
    Config(&'static str),
    /// A flow step failed.
    AtStep { step: usize, cause: alloc::boxed::Box<Error> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => write!(f, "{what} out of range: {value}"),
            Error::GridTooSmall { n_s, n_theta } => {
                write!(f, "grid too small for finite differences: {n_s} x {n_theta}")
            }
            Error::GridMismatch => f.write_str("fields live on different grids"),
            Error::Nyquist { n_max, n_theta } => {
                write!(f, "n_max = {n_max} not resolved by n_theta = {n_theta}")
            }
            Error::Spacing { h } => write!(f, "delay 1/2 is not a multiple of spacing {h}"),
            Error::Shape { expected, found } => {
                write!(f, "shape mismatch: expected {expected}, found {found}")
            }
            Error::NonFinite { what } => write!(f, "non-finite value in {what}"),
            Error::Unstable { dt, limit } => {
                write!(f, "dt = {dt} exceeds explicit stability limit {limit}")
            }
            Error::Pinched { ell } => write!(f, "collar pinched: ell = {ell}"),
            Error::AboveEllMax { ell } => write!(f, "ell = {ell} above coordinate bound"),
            Error::IllConditioned { condition } => {
                write!(f, "ill-conditioned fit (condition number {condition:.3e})")
            }
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::AtStep { step, cause } => write!(f, "step {step}: {cause}"),
        }
    }
}

impl core::error::Error for Error {}
