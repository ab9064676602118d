//! Conventional memory controller: request fragmentation, FR-FCFS
//! scheduling with an open-page policy, watermark write draining, and
//! postponable per-bank refresh.

pub mod mc;
pub mod queue;

pub use mc::{simulate_baseline, BaselineSimOptions, BaselineSimOutput};
pub use queue::{fragment_request, Fragment, RequestQueue};
