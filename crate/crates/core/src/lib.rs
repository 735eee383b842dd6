pub mod acquisition;
pub mod error;
pub mod gchi2;
pub mod kernels;
pub mod linalg;
pub mod mogp;
pub mod optim;
pub mod oracles;
pub mod quad;
pub mod search;

pub use error::{Error, Result};
