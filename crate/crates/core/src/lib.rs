//! Communication-aware UAV trajectory learning.
//!
//! The crate is organised bottom-up:
//!
//! * [`radiomap`]: path loss, sector antenna gain, Nakagami fading, SINR and
//!   gridded radio maps over a synthetic city.
//! * [`cityworld`]: the three benchmark cities and the grid MDP the UAV flies in.
//! * [`neural`]: a small dense network with exact backpropagation and Adam.
//! * [`agent`]: DQN / DDQN learners, replay, ε-greedy behaviour and episodes.
//! * [`transfer`]: continuous transfer of a trained policy across environments.
//! * [`harness`]: configuration, experiment orchestration and CSV reporting.
//!
//! Data-parallel loops (radio-map cells, independent seeds) go through [`par`],
//! which uses rayon when the `parallel` feature is enabled and plain iteration
//! otherwise.

pub mod agent;
pub mod cityworld;
pub mod harness;
pub mod neural;
pub mod par;
pub mod radiomap;
pub mod transfer;
pub mod units;

mod error;

pub use error::{Error, Result};
