pub mod algebra;
pub mod commands;
pub mod contact;
pub mod dsl;
pub mod equivalence;
pub mod error;
pub mod forms;
pub mod jet;
pub mod pde;
pub mod pfaffian;
pub mod report;
pub mod spencer;

pub use error::{Error, Result};
