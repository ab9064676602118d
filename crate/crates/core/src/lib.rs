//! Cycle-level simulation of two HBM memory subsystems under LLM inference
//! traffic: a conventional HBM4 back-end (32 B column accesses, FR-FCFS,
//! open-page) and a row-granularity back-end (`rome`: 4 KB row commands,
//! virtual banks, a four-state controller).
//!
//! The crate is organized around the pipeline
//! `workload -> trace -> back-end simulation -> report/energy`:
//!
//! * [`dram`] — device geometry, address mapping, the conventional command
//!   set, per-bank state machines and the timing-constraint engine shared
//!   by both back-ends.
//! * [`baseline`] — the conventional memory controller.
//! * [`rome`] — the row-level interface (virtual banks, command expansion,
//!   pin budget) and its simplified controller.
//! * [`workload`] — per-layer LLM traffic generation and request streams.
//! * [`energy`] — per-command energy accounting.
//! * [`harness`] — experiment driver: sweeps, TPOT/LBR pipelines, reports.

pub mod config;
pub mod dram;
pub mod error;
pub mod trace;
pub mod report;
pub mod baseline;
pub mod rome;
pub mod workload;
pub mod energy;
pub mod harness;

pub use error::SimError;

/// Simulation time unit. One tick is 0.25 ns so that every timing parameter
/// in the default tables (minimum 1 ns, finest 243.75 ns refresh cadence)
/// and every data-beat boundary is exactly representable.
pub type Ticks = u64;

/// Ticks per nanosecond.
pub const TICKS_PER_NS: u64 = 4;

/// Converts a nanosecond value to ticks, failing if it is not aligned to the
/// simulation tick.
pub fn ns_to_ticks(ns: f64) -> Result<Ticks, SimError> {
    if !ns.is_finite() || ns < 0.0 {
        return Err(SimError::Config(format!("invalid time value {ns} ns")));
    }
    let t = ns * TICKS_PER_NS as f64;
    if (t - t.round()).abs() > 1e-9 {
        return Err(SimError::Config(format!(
            "{ns} ns is not a multiple of the 0.25 ns simulation tick"
        )));
    }
    Ok(t.round() as Ticks)
}

/// Ticks to nanoseconds, for reporting.
pub fn ticks_to_ns(t: Ticks) -> f64 {
    t as f64 / TICKS_PER_NS as f64
}
