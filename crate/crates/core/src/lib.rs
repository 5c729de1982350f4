//! Serial-batch scheduling on identical parallel machines with
//! sequence-dependent family setups, release dates and batch-size bounds,
//! minimising total weighted completion time.

pub mod bench;
pub mod feasibility;
pub mod fixtures;
pub mod genins;
pub mod instance;
pub mod milp;
pub mod oracle;
pub mod scalar;
pub mod solver;
pub mod schedule;
pub mod timing;
pub mod variation;

pub type Time = i64;
pub type Rational = num_rational::Ratio<i64>;

/// Exact MILP model.
pub type MilpModel = milp::Model<Rational>;

pub use feasibility::{check_feasibility, evaluate_twct, EvalError, EvalReport};
pub use instance::{
    max_batch_counts, splittable, validate_instance, BatchCounts, BatchSizeBounds, Instance, Job, Rule,
    SetupMatrix, Violation,
};
pub use scalar::Scalar;
pub use schedule::{Schedule, Sequencing, TimedBatch, TimedJob, UntimedBatch};
pub use timing::{left_shift_timing, machine_twct, TimingError};
pub use variation::{Availability, Initiation, Preemption, VariationConfig};
