pub mod bounds;
pub mod probe;
pub mod sweep;
pub mod train;
pub mod verify;
