//! Per-run statistics shared by both back-ends.

use std::collections::BTreeMap;

use crate::dram::device::CommandKind;
use crate::{ticks_to_ns, Ticks};

/// Statistics of one simulation run.
#[derive(Debug, Clone, Default)]
pub struct SimReport {
    /// Simulated span from first arrival to last completion, ticks.
    pub elapsed: Ticks,
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub per_channel_bytes: BTreeMap<u64, u64>,
    pub command_counts: BTreeMap<&'static str, u64>,
    /// Fraction of the analytic peak achieved over `elapsed`.
    pub utilization: f64,
    /// Achieved bandwidth in bytes/s.
    pub achieved_bandwidth: f64,
    /// Request latency percentiles (p50, p95, p99), ns.
    pub latency_ns: (f64, f64, f64),
    pub requests_completed: u64,
    /// Refreshes deferred because the target bank was busy.
    pub refresh_deferrals: u64,
    /// Per-VBA refresh stall spans observed (row-granularity back-end), ns.
    pub refresh_stalls_ns: Vec<f64>,
    /// Which timing parameter gated each issued row-level command.
    pub wait_tags: BTreeMap<&'static str, u64>,
    /// Bytes transferred beyond request payload (granularity padding).
    pub overfetch_bytes: u64,
}

impl SimReport {
    pub fn count(&mut self, kind: CommandKind, n: u64) {
        *self.command_counts.entry(kind.name()).or_insert(0) += n;
    }

    pub fn total_bytes(&self) -> u64 {
        self.bytes_read + self.bytes_written
    }

    pub fn finalize(&mut self, peak_bytes_per_s: f64, latencies: &mut Vec<Ticks>) {
        let elapsed_s = ticks_to_ns(self.elapsed) * 1e-9;
        if elapsed_s > 0.0 {
            self.achieved_bandwidth = self.total_bytes() as f64 / elapsed_s;
            self.utilization = if peak_bytes_per_s > 0.0 {
                self.achieved_bandwidth / peak_bytes_per_s
            } else {
                0.0
            };
        }
        latencies.sort_unstable();
        let pct = |p: f64| -> f64 {
            if latencies.is_empty() {
                return 0.0;
            }
            let idx = ((latencies.len() as f64 - 1.0) * p).floor() as usize;
            ticks_to_ns(latencies[idx])
        };
        self.latency_ns = (pct(0.50), pct(0.95), pct(0.99));
        self.requests_completed = latencies.len() as u64;
    }

    /// One-line CSV row of the headline numbers.
    pub fn csv_row(&self) -> String {
        format!(
            "{:.3},{},{},{:.1},{:.6},{:.3},{:.3},{:.3},{}",
            ticks_to_ns(self.elapsed),
            self.bytes_read,
            self.bytes_written,
            self.achieved_bandwidth / 1e9,
            self.utilization,
            self.latency_ns.0,
            self.latency_ns.1,
            self.latency_ns.2,
            self.requests_completed
        )
    }

    pub fn csv_header() -> &'static str {
        "elapsed_ns,bytes_read,bytes_written,bandwidth_gbps,utilization,lat_p50_ns,lat_p95_ns,lat_p99_ns,requests"
    }

    /// Human-readable summary block.
    pub fn summary(&self, label: &str) -> String {
        let mut s = String::new();
        s.push_str(&format!("== {label} ==\n"));
        s.push_str(&format!(
            "  elapsed          {:.1} ns\n  bytes            {} read / {} written\n",
            ticks_to_ns(self.elapsed),
            self.bytes_read,
            self.bytes_written
        ));
        s.push_str(&format!(
            "  bandwidth        {:.2} GB/s ({:.2}% of peak)\n",
            self.achieved_bandwidth / 1e9,
            self.utilization * 100.0
        ));
        s.push_str(&format!(
            "  latency p50/p95/p99  {:.1} / {:.1} / {:.1} ns\n",
            self.latency_ns.0, self.latency_ns.1, self.latency_ns.2
        ));
        if !self.command_counts.is_empty() {
            let counts: Vec<String> = self
                .command_counts
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            s.push_str(&format!("  commands         {}\n", counts.join(" ")));
        }
        if self.refresh_deferrals > 0 {
            s.push_str(&format!("  refresh deferrals {}\n", self.refresh_deferrals));
        }
        s
    }

    /// Percentiles must be monotone; checked when reports are assembled.
    pub fn validate(&self) -> bool {
        let (a, b, c) = self.latency_ns;
        (0.0..=1.0 + 1e-9).contains(&self.utilization) && a <= b && b <= c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finalize_computes_percentiles_and_bandwidth() {
        let mut r = SimReport::default();
        r.elapsed = 1000 * crate::TICKS_PER_NS;
        r.bytes_read = 64_000;
        let mut lats: Vec<Ticks> = (1..=100).map(|i| i * crate::TICKS_PER_NS).collect();
        r.finalize(64e9, &mut lats);
        assert!((r.achieved_bandwidth - 64e9).abs() < 1.0);
        assert!((r.utilization - 1.0).abs() < 1e-9);
        assert_eq!(r.latency_ns.0, 50.0);
        assert!(r.validate());
    }

    #[test]
    fn empty_report_is_zeroed() {
        let mut r = SimReport::default();
        r.finalize(64e9, &mut Vec::new());
        assert_eq!(r.achieved_bandwidth, 0.0);
        assert_eq!(r.requests_completed, 0);
        assert!(r.validate());
    }
}
