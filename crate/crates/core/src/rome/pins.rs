//! C/A pin budget: packet issue latency and the reinvestment of saved pins
//! into additional channels.

use crate::{ns_to_ticks, SimError, Ticks};

/// Per-channel pin accounting for the conventional and row-level interfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PinBudget {
    pub row_ca_pins: u64,
    pub col_ca_pins: u64,
    pub baseline_pins_per_channel: u64,
    pub rome_pins_per_channel: u64,
    pub channels: u64,
    /// Channels sharing one DRAM die; the layout gains one channel per die.
    pub channels_per_die: u64,
}

impl Default for PinBudget {
    fn default() -> Self {
        PinBudget {
            row_ca_pins: 10,
            col_ca_pins: 8,
            baseline_pins_per_channel: 120,
            rome_pins_per_channel: 107,
            channels: 32,
            channels_per_die: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PinReallocation {
    pub saved_pins: u64,
    pub added_channels: u64,
    /// Extra pins needed beyond the savings (negative means leftover pins).
    pub extra_pins: i64,
    pub total_channels: u64,
}

/// Serialization latency of one row-level C/A packet over `pins` pins.
/// Monotonically non-increasing in the pin count.
pub fn ca_issue_latency(pins: u64, packet_bits: u64, ca_rate_bits_per_s: f64) -> Result<Ticks, SimError> {
    if pins == 0 {
        return Err(SimError::Config("C/A pin count must be at least 1".into()));
    }
    let beats = packet_bits.div_ceil(pins);
    let beat_ns = 1e9 / ca_rate_bits_per_s;
    ns_to_ticks(beats as f64 * beat_ns)
}

/// Computes the channel expansion enabled by the narrower row-level C/A
/// interface: savings are aggregated and reinvested one extra channel per
/// die, bounded by what the savings can almost cover (the shortfall is the
/// reported extra pin count).
pub fn pin_reallocation(budget: &PinBudget) -> PinReallocation {
    let per_channel_saving = budget
        .baseline_pins_per_channel
        .saturating_sub(budget.rome_pins_per_channel);
    let saved = budget.channels * per_channel_saving;
    let by_savings = saved.div_ceil(budget.rome_pins_per_channel.max(1));
    let by_layout = budget.channels / budget.channels_per_die.max(1);
    let added = by_savings.min(by_layout);
    let extra = (added * budget.rome_pins_per_channel) as i64 - saved as i64;
    PinReallocation {
        saved_pins: saved,
        added_channels: added,
        extra_pins: extra,
        total_channels: budget.channels + added,
    }
}
