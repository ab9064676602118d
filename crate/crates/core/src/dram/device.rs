//! Device geometry and the command vocabulary.

use crate::config::KvConfig;
use crate::dram::timing::TimingTable;
use crate::{ns_to_ticks, SimError, Ticks};

/// Which controller/interface a device profile is configured for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackEndKind {
    Hbm4,
    Rome,
}

impl BackEndKind {
    pub fn name(self) -> &'static str {
        match self {
            BackEndKind::Hbm4 => "hbm4",
            BackEndKind::Rome => "rome",
        }
    }
}

impl std::str::FromStr for BackEndKind {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "hbm4" => Ok(BackEndKind::Hbm4),
            "rome" => Ok(BackEndKind::Rome),
            other => Err(SimError::Config(format!("unknown back-end `{other}`"))),
        }
    }
}

/// Static description of one HBM cube and the controller-visible knobs that
/// ride along with it (queue depths, refresh policy).
#[derive(Debug, Clone)]
pub struct DeviceConfig {
    pub kind: BackEndKind,
    pub channels_per_cube: u64,
    pub pseudo_channels_per_channel: u64,
    pub bank_groups_per_pc: u64,
    pub banks_per_bank_group: u64,
    pub stack_ids: u64,
    pub rows_per_bank: u64,
    /// Bytes held by one physical bank row.
    pub row_size: u64,
    /// Bank access granularity: bytes transferred by one RD/WR.
    pub column_access_granularity: u64,
    /// Bits per second per data pin.
    pub data_rate: f64,
    pub dq_pins_per_channel: u64,
    pub ca_pins_per_channel: u64,
    pub row_ca_pins: u64,
    pub col_ca_pins: u64,
    pub pins_per_channel: u64,
    /// ns; must equal the simulation tick.
    pub clock_period: f64,
    pub timing: TimingTable,
    /// Request-queue capacity per scheduling unit (pseudo channel for the
    /// baseline, channel for the row-granularity controller).
    pub queue_capacity: usize,
    pub write_queue_capacity: usize,
    pub refresh_enable: bool,
    /// Paired per-bank refresh (row-granularity back-end only).
    pub paired_refresh: bool,
    /// Maximum per-bank refreshes that may be postponed while a bank has
    /// pending work.
    pub refresh_postpone_max: u32,
    /// Row-level C/A packet width in bits (row-granularity back-end).
    pub ca_packet_bits: u64,
    /// C/A pin transfer rate, bits/s/pin.
    pub ca_rate: f64,
}

impl DeviceConfig {
    pub fn from_kv(cfg: &KvConfig) -> Result<Self, SimError> {
        let kind: BackEndKind = cfg.string_or("mode", "hbm4").parse()?;
        let dev = DeviceConfig {
            kind,
            channels_per_cube: cfg.u64("channels_per_cube")?,
            pseudo_channels_per_channel: cfg.u64("pseudo_channels_per_channel")?,
            bank_groups_per_pc: cfg.u64("bank_groups_per_pc")?,
            banks_per_bank_group: cfg.u64("banks_per_bank_group")?,
            stack_ids: cfg.u64("stack_ids")?,
            rows_per_bank: cfg.u64("rows_per_bank")?,
            row_size: cfg.u64("row_size_bytes")?,
            column_access_granularity: cfg.u64("access_granularity_bytes")?,
            data_rate: cfg.f64("data_rate_gbps")? * 1e9,
            dq_pins_per_channel: cfg.u64("dq_pins_per_channel")?,
            ca_pins_per_channel: cfg.u64("ca_pins_per_channel")?,
            row_ca_pins: cfg.u64_or("row_ca_pins", 10)?,
            col_ca_pins: cfg.u64_or("col_ca_pins", 8)?,
            pins_per_channel: cfg.u64_or("pins_per_channel", 120)?,
            clock_period: cfg.f64_or("clock_period_ns", 0.25)?,
            timing: TimingTable::from_kv(cfg, kind)?,
            queue_capacity: cfg.u64_or("queue_capacity", 64)? as usize,
            write_queue_capacity: cfg.u64_or("write_queue_capacity", 64)? as usize,
            refresh_enable: cfg.bool_or("refresh_enable", true)?,
            paired_refresh: cfg.bool_or("paired_refresh", true)?,
            refresh_postpone_max: cfg.u64_or("refresh_postpone_max", 8)? as u32,
            ca_packet_bits: cfg.u64_or("ca_packet_bits", 20)?,
            ca_rate: cfg.f64_or("ca_rate_gbps", 1.0)? * 1e9,
        };
        dev.validate()?;
        Ok(dev)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if (self.clock_period - 0.25).abs() > 1e-12 {
            return Err(SimError::Config(format!(
                "clock_period_ns must equal the 0.25 ns simulation tick, got {}",
                self.clock_period
            )));
        }
        for v in [
            self.channels_per_cube,
            self.pseudo_channels_per_channel,
            self.bank_groups_per_pc,
            self.banks_per_bank_group,
            self.stack_ids,
            self.rows_per_bank,
            self.row_size,
            self.column_access_granularity,
        ] {
            if v == 0 {
                return Err(SimError::Config("zero-sized geometry field".into()));
            }
        }
        if self.row_size % self.column_access_granularity != 0 {
            return Err(SimError::Config(
                "row size must be a multiple of the access granularity".into(),
            ));
        }
        // One column access must fill the pseudo-channel bus for exactly
        // tCCDS, so back-to-back cross-bank-group accesses stream gaplessly.
        let occ = self.column_occupancy_ns();
        let tccds = self.timing.tccds_ns();
        if (occ - tccds).abs() > 1e-9 {
            return Err(SimError::Config(format!(
                "column access occupies the bus for {occ} ns but tCCDS is {tccds} ns"
            )));
        }
        Ok(())
    }

    pub fn banks_per_channel(&self) -> u64 {
        self.pseudo_channels_per_channel
            * self.bank_groups_per_pc
            * self.banks_per_bank_group
            * self.stack_ids
    }

    pub fn banks_per_pc(&self) -> u64 {
        self.bank_groups_per_pc * self.banks_per_bank_group * self.stack_ids
    }

    /// Total byte capacity of the cube.
    pub fn capacity_bytes(&self) -> u64 {
        self.channels_per_cube * self.banks_per_channel() * self.rows_per_bank * self.row_size
    }

    pub fn dq_pins_per_pc(&self) -> u64 {
        self.dq_pins_per_channel / self.pseudo_channels_per_channel
    }

    /// Time one column access occupies a pseudo channel's data bus, in ns.
    pub fn column_occupancy_ns(&self) -> f64 {
        self.column_access_granularity as f64 * 8.0 / (self.dq_pins_per_pc() as f64 * self.data_rate) * 1e9
    }

    pub fn column_occupancy_ticks(&self) -> Ticks {
        ns_to_ticks(self.column_occupancy_ns()).expect("validated occupancy")
    }

    /// Columns per row per bank.
    pub fn columns_per_row(&self) -> u64 {
        self.row_size / self.column_access_granularity
    }

    /// Peak bandwidth of one channel in bytes/s: pins x data rate.
    pub fn peak_channel_bandwidth(&self) -> f64 {
        self.dq_pins_per_channel as f64 * self.data_rate / 8.0
    }

    /// Peak bandwidth of the whole cube in bytes/s.
    pub fn peak_cube_bandwidth(&self) -> f64 {
        self.peak_channel_bandwidth() * self.channels_per_cube as f64
    }

    /// Virtual banks per channel (row-granularity organization): two banks
    /// from different bank groups driven on both pseudo channels.
    pub fn vbas_per_channel(&self) -> u64 {
        self.banks_per_channel() / 4
    }

    /// Effective row transferred by one row-level command: both banks of the
    /// pair on both pseudo channels.
    pub fn effective_row_size(&self) -> u64 {
        self.row_size * 4
    }
}

/// Analytic peak bandwidth oracle: pure pin arithmetic, used by acceptance
/// tests to validate both back-ends.
pub fn analytic_peak(cfg: &DeviceConfig) -> (f64, f64) {
    (cfg.peak_channel_bandwidth(), cfg.peak_cube_bandwidth())
}

/// Fully decoded DRAM location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct DramAddress {
    pub channel: u64,
    pub pseudo_channel: u64,
    pub stack_id: u64,
    pub bank_group: u64,
    pub bank: u64,
    pub row: u64,
    pub column: u64,
}

impl DramAddress {
    pub fn check_bounds(&self, cfg: &DeviceConfig) -> Result<(), SimError> {
        let ok = self.channel < cfg.channels_per_cube
            && self.pseudo_channel < cfg.pseudo_channels_per_channel
            && self.stack_id < cfg.stack_ids
            && self.bank_group < cfg.bank_groups_per_pc
            && self.bank < cfg.banks_per_bank_group
            && self.row < cfg.rows_per_bank
            && self.column < cfg.columns_per_row();
        if ok {
            Ok(())
        } else {
            Err(SimError::Capacity(format!("address out of bounds: {self:?}")))
        }
    }

    /// Flat bank index within a pseudo channel: (stack, group, bank).
    pub fn bank_index(&self, cfg: &DeviceConfig) -> usize {
        ((self.stack_id * cfg.bank_groups_per_pc + self.bank_group) * cfg.banks_per_bank_group
            + self.bank) as usize
    }
}

/// DRAM commands understood by the device model. `RdRow`/`WrRow` are legal
/// only on a row-granularity device; refresh and precharge kinds ignore the
/// column field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CommandKind {
    Act,
    Pre,
    Rd,
    Wr,
    Rda,
    Wra,
    RefAb,
    RefPb,
    RdRow,
    WrRow,
}

impl CommandKind {
    pub fn is_column(self) -> bool {
        matches!(self, CommandKind::Rd | CommandKind::Wr | CommandKind::Rda | CommandKind::Wra)
    }

    pub fn is_read(self) -> bool {
        matches!(self, CommandKind::Rd | CommandKind::Rda | CommandKind::RdRow)
    }

    pub fn is_write(self) -> bool {
        matches!(self, CommandKind::Wr | CommandKind::Wra | CommandKind::WrRow)
    }

    pub fn is_row_level(self) -> bool {
        matches!(self, CommandKind::RdRow | CommandKind::WrRow)
    }

    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Act => "ACT",
            CommandKind::Pre => "PRE",
            CommandKind::Rd => "RD",
            CommandKind::Wr => "WR",
            CommandKind::Rda => "RDA",
            CommandKind::Wra => "WRA",
            CommandKind::RefAb => "REFab",
            CommandKind::RefPb => "REFpb",
            CommandKind::RdRow => "RD_row",
            CommandKind::WrRow => "WR_row",
        }
    }
}

/// A command with its target and issue time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DramCommand {
    pub kind: CommandKind,
    pub target: DramAddress,
    pub issue_cycle: Ticks,
}
