pub mod beam;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod mac;
pub mod relay;
pub mod ric;
pub mod rsu;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
