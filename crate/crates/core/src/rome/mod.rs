//! Row-granularity device additions and controller: virtual banks, the
//! logic-die command generator, the C/A pin budget, and the simplified
//! memory controller.

pub mod expand;
pub mod mc;
pub mod pins;
pub mod vba;

pub use expand::{expand_refresh_pair, expand_row_command, ExpandedSchedule};
pub use mc::{simulate_rome, RomeSimOptions};
pub use pins::{ca_issue_latency, pin_reallocation, PinBudget, PinReallocation};
pub use vba::VbaAddress;
