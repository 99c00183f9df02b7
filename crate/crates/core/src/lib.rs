pub mod ase;
pub mod ber;
pub mod error;
pub mod jfts;
pub mod policies;
pub mod quad;
pub mod scenario;
pub mod specfun;
pub mod verify;

pub use error::{Error, Result};
