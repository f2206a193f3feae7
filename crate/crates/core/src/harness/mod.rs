//! Verification harness: instance files, single-instance verification,
//! generated suites, fuzzing, and the worked 2x2 regression.

pub mod example26;
pub mod fuzz;
pub mod instance;
pub mod suite;
pub mod verify;

pub use example26::{run_example26, Example26};
pub use fuzz::{run_fuzz, shrink, FuzzConfig, FuzzDomain, FuzzFinding, FuzzSummary};
pub use instance::{parse_instance, Instance, InstanceFile};
pub use suite::{run_suite, Cell, SuiteConfig, SuiteSummary};
pub use verify::{verify, verify_file, Check, Verdict, VerificationReport, VerifyOptions};
