//! Inter-command minimum-delay tables.

use crate::config::KvConfig;
use crate::dram::device::BackEndKind;
use crate::{ns_to_ticks, ticks_to_ns, SimError, Ticks};

/// The active set of minimum delays, in ticks. The conventional set is always
/// present (the row-level command generator expands into it); the row-level
/// set is populated for `rome` profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingTable {
    // conventional parameters
    pub trc: Ticks,
    pub trp: Ticks,
    pub tras: Ticks,
    pub tcl: Ticks,
    pub trcdrd: Ticks,
    pub trcdwr: Ticks,
    pub twr: Ticks,
    pub tfaw: Ticks,
    pub tccdl: Ticks,
    pub tccds: Ticks,
    pub tccdr: Ticks,
    pub trrds: Ticks,
    pub trrdl: Ticks,
    pub twtrs: Ticks,
    pub twtrl: Ticks,
    pub trtw: Ticks,
    pub trtp: Ticks,
    // refresh
    pub trfcpb: Ticks,
    pub trefipb: Ticks,
    pub trrefd: Ticks,
    // row-level parameters (zeroed for pure-conventional profiles)
    pub tr2rs: Ticks,
    pub tr2rr: Ticks,
    pub tr2ws: Ticks,
    pub tr2wr: Ticks,
    pub tw2rs: Ticks,
    pub tw2rr: Ticks,
    pub tw2ws: Ticks,
    pub tw2wr: Ticks,
    pub trd_row: Ticks,
    pub twr_row: Ticks,
}

/// Names of the ten row-level scheduling parameters plus bookkeeping tags,
/// used by the controller instrumentation to record which constraint gated
/// each issued command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowParam {
    TR2RS,
    TR2RR,
    TR2WS,
    TR2WR,
    TW2RS,
    TW2RR,
    TW2WS,
    TW2WR,
    TRdRow,
    TWrRow,
}

impl RowParam {
    pub fn name(self) -> &'static str {
        match self {
            RowParam::TR2RS => "tR2RS",
            RowParam::TR2RR => "tR2RR",
            RowParam::TR2WS => "tR2WS",
            RowParam::TR2WR => "tR2WR",
            RowParam::TW2RS => "tW2RS",
            RowParam::TW2RR => "tW2RR",
            RowParam::TW2WS => "tW2WS",
            RowParam::TW2WR => "tW2WR",
            RowParam::TRdRow => "tRD_row",
            RowParam::TWrRow => "tWR_row",
        }
    }
}

impl TimingTable {
    pub fn from_kv(cfg: &KvConfig, kind: BackEndKind) -> Result<Self, SimError> {
        let t = |key: &str| -> Result<Ticks, SimError> { ns_to_ticks(cfg.f64(key)?) };
        let t_or = |key: &str, d: f64| -> Result<Ticks, SimError> { ns_to_ticks(cfg.f64_or(key, d)?) };
        let row = kind == BackEndKind::Rome;
        let table = TimingTable {
            trc: t("tRC")?,
            trp: t("tRP")?,
            tras: t("tRAS")?,
            tcl: t("tCL")?,
            trcdrd: t("tRCDRD")?,
            trcdwr: t("tRCDWR")?,
            twr: t("tWR")?,
            tfaw: t("tFAW")?,
            tccdl: t("tCCDL")?,
            tccds: t("tCCDS")?,
            tccdr: t("tCCDR")?,
            trrds: t("tRRDS")?,
            trrdl: t_or("tRRDL", 4.0)?,
            twtrs: t_or("tWTRS", 4.0)?,
            twtrl: t_or("tWTRL", 8.0)?,
            trtw: t_or("tRTW", 7.0)?,
            trtp: t_or("tRTP", 4.0)?,
            trfcpb: t_or("tRFCpb", 280.0)?,
            trefipb: t_or("tREFIpb", 243.75)?,
            trrefd: t_or("tRREFD", 8.0)?,
            tr2rs: if row { t("tR2RS")? } else { 0 },
            tr2rr: if row { t("tR2RR")? } else { 0 },
            tr2ws: if row { t("tR2WS")? } else { 0 },
            tr2wr: if row { t("tR2WR")? } else { 0 },
            tw2rs: if row { t("tW2RS")? } else { 0 },
            tw2rr: if row { t("tW2RR")? } else { 0 },
            tw2ws: if row { t("tW2WS")? } else { 0 },
            tw2wr: if row { t("tW2WR")? } else { 0 },
            trd_row: if row { t("tRD_row")? } else { 0 },
            twr_row: if row { t("tWR_row")? } else { 0 },
        };
        table.validate(kind)?;
        Ok(table)
    }

    pub fn validate(&self, kind: BackEndKind) -> Result<(), SimError> {
        if self.trc != self.tras + self.trp {
            return Err(SimError::Config(format!(
                "tRC ({}) must equal tRAS + tRP ({})",
                ticks_to_ns(self.trc),
                ticks_to_ns(self.tras + self.trp)
            )));
        }
        if kind == BackEndKind::Rome && (self.trd_row == 0 || self.twr_row == 0) {
            return Err(SimError::Config("row-level profile missing tRD_row/tWR_row".into()));
        }
        Ok(())
    }

    pub fn tccds_ns(&self) -> f64 {
        ticks_to_ns(self.tccds)
    }

    /// Gap required between two row-level commands on one channel, given the
    /// previous and next command kind and whether they target the same stack
    /// id. Same-VBA spacing is handled separately via `trd_row`/`twr_row`.
    pub fn row_gap(&self, prev_is_read: bool, next_is_read: bool, same_sid: bool) -> (Ticks, RowParam) {
        match (prev_is_read, next_is_read, same_sid) {
            (true, true, true) => (self.tr2rs, RowParam::TR2RS),
            (true, true, false) => (self.tr2rr, RowParam::TR2RR),
            (true, false, true) => (self.tr2ws, RowParam::TR2WS),
            (true, false, false) => (self.tr2wr, RowParam::TR2WR),
            (false, true, true) => (self.tw2rs, RowParam::TW2RS),
            (false, true, false) => (self.tw2rr, RowParam::TW2RR),
            (false, false, true) => (self.tw2ws, RowParam::TW2WS),
            (false, false, false) => (self.tw2wr, RowParam::TW2WR),
        }
    }

    /// Occupancy of one VBA by a row-level command.
    pub fn row_occupancy(&self, is_read: bool) -> (Ticks, RowParam) {
        if is_read {
            (self.trd_row, RowParam::TRdRow)
        } else {
            (self.twr_row, RowParam::TWrRow)
        }
    }
}
