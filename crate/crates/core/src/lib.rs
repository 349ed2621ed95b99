pub mod analysis;
pub mod config;
pub mod diff;
pub mod export;
pub mod frame;
pub mod grid;
pub mod interp;
pub mod laurent;
pub mod oracle;
pub mod pipeline;
pub mod potentials;
pub mod quad;
pub mod reparam;
pub mod sym;
