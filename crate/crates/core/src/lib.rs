pub mod doubled;
pub mod functions;
pub mod harness;
pub mod hochschild;
pub mod operators;
pub mod space;
