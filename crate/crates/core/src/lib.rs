//! Rényi information measures on finite alphabets, certified Rényi capacity,
//! radius and center of finite channels, and closed forms for shift channels
//! and Poisson point-process families.

pub mod capacity;
pub mod families;
pub mod formats;
pub mod error;
pub mod measures;
pub mod order;
pub mod output;
pub mod quadrature;
pub mod cli;
pub mod verify;

mod numeric;

pub use error::{Error, Result};
pub use order::Order;
