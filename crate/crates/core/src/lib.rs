//! Exact Frobenius filtrations, mixed Frobenius structures and their deformed connections.

pub mod ringcore;
pub mod report;
pub mod fdalg;
pub mod frobenius;
pub mod mhs;
pub mod mfs;
pub mod localqh;
pub mod deformed;
