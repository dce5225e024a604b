use alloc::string::String;

/// Errors reported by the emulator.
///
/// The variants follow the failure classes of the operations: bad
/// configuration, bad call arguments, inputs outside the physical model, and
/// calls made against an object in the wrong state.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("outside model domain: {0}")]
    Domain(String),
    #[error("invalid state: {0}")]
    State(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
