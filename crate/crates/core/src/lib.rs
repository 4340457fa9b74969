pub mod ack;
pub mod causality;
pub mod checks;
pub mod crypto;
pub mod franking;
pub mod group;
pub mod harness;
pub mod outsourced;

pub type Party = usize;
