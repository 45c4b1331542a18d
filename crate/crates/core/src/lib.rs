pub mod amplitude;
pub mod analysis;
pub mod cli;
pub mod error;
pub mod grid;
pub mod periods;
pub mod poly;
pub mod quadrature;
pub mod surface;
pub mod theta;
