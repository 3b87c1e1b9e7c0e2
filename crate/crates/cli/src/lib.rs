//! Command-line front end for the shift-invariant-space sampling analyses:
//! scenario loading, task orchestration, and deterministic report bundles.

pub mod report;
pub mod run;
pub mod scenario;

pub use report::{ReportBundle, VerdictFlags};
pub use run::{run, run_to_dir, RunConfig, RunOutcome};
pub use scenario::{load_scenario, Overrides, Scenario, ScenarioError, Task};
