pub mod numkernel;
pub mod krylov;
pub mod phipm;
pub mod integrators;
pub mod swe;
pub mod config;
pub mod harness;
