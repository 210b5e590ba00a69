pub mod cli;
pub mod forms;
pub mod lattice;
pub mod models;
pub mod solve;
pub mod verify;
