pub mod banded;
pub mod dynamics;
pub mod energetics;
pub mod error;
pub mod io;
pub mod model;
pub mod spectral;
pub mod staticsol;
pub mod stencil;
pub mod twsolve;
pub mod verify;

pub use error::{Error, Result};
