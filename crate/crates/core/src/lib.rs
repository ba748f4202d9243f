//! Obstacle problems, capacities and fine-topology experiments for the
//! p-energy on discrete metric measure spaces.

pub mod battery;
pub mod capacity;
pub mod error;
pub mod finetop;
pub mod io;
pub mod linalg;
pub mod line2d;
pub mod oned;
pub mod solver;
pub mod space;

pub use error::{Error, Result};
