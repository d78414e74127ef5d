pub mod region;
pub mod simulate;
pub mod tools;
pub mod verify;
