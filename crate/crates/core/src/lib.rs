//! Mission planning for agile Earth-observation satellites.
//!
//! The crate ingests satellite ephemerides and image-acquisition requests
//! and produces time-chained acquisition plans. Four families of planners
//! share one spherical-Earth geometry kernel and one plan validator:
//!
//! * [`greedy`]: a 1-second clock that commits the highest-priority
//!   available request,
//! * [`ilp`]: an exact integer model per cluster solved by branch and bound,
//! * [`qubo`]: the same model compiled to a QUBO and annealed,
//! * [`rl`]: PPO and MCTS agents whose policy head is a simulated 4-qubit
//!   parametrized circuit ([`quantum`]).
//!
//! ```
//! use orbit_sched::model::{generate_instance_with, GeneratorConfig, PriorityMix};
//! use orbit_sched::planner::{run_planner, ClusterMethod, PlannerKind, PlannerOptions};
//!
//! let config = GeneratorConfig { horizon_s: 3 * 3600, ..GeneratorConfig::default() };
//! let instance = generate_instance_with(&config, 1, 12, &PriorityMix::default(), 7).unwrap();
//! let options = PlannerOptions::new(PlannerKind::Greedy, ClusterMethod::None);
//! let outcome = run_planner(&instance, &options).unwrap();
//! assert!(outcome.report.ok);
//! ```

pub mod chaining;
pub mod clustering;
pub mod error;
pub mod geometry;
pub mod greedy;
pub mod ilp;
pub mod model;
pub mod planner;
pub mod quantum;
pub mod qubo;
pub mod render;
pub mod rl;

pub use error::{Error, Result};
