//! Simulation and verification of genealogies in selection-driven population
//! models.
//!
//! Two microscopic models are simulated: the max-plus front-propagation
//! particle system ([`frontprop`]) and the Wright-Fisher model with random
//! fitness weights ([`fitnesswf`]). Their ancestral partition processes are
//! traced in [`genealogy`] and compared with exact coalescent references from
//! [`coaltheory`] and the moment computations in [`moments`].

pub mod coaltheory;
pub mod error;
pub mod fitnesswf;
pub mod frontprop;
pub mod genealogy;
pub mod moments;
pub mod partition;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use partition::{MergerSignature, Partition, PartitionPath};
