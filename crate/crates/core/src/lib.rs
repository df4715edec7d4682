//! Recurrence experiments for the `SL(2,R)` action on translation surfaces.

pub mod deviations;
pub mod flat;
pub mod hyperbolic;
pub mod markov;
pub mod seed;
pub mod stats;
pub mod walk;
