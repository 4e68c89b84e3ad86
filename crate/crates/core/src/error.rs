use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mode not yet born: queried at t = {t}, birth time {birth}")]
    NotBorn { t: f64, birth: f64 },

    #[error("velocity undefined at x = {x}, t = {t}: density {density:e} below node threshold")]
    Node { x: f64, t: f64, density: f64 },

    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
