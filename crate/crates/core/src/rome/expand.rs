//! The logic-die command generator.
//!
//! A row-level command expands into a fixed conventional-command schedule,
//! identical on both pseudo channels and independent of device state: two
//! ACTs spaced tRRDS, then the row's column accesses alternating between the
//! two banks at tCCDS (giving each bank tCCDL spacing), the final access per
//! bank carrying auto-precharge. With tRRDS between the ACTs, the first
//! column access lands at tRRDS - tCCDS + tRCDRD so the alternation is
//! exact from the first beat.

use crate::dram::device::{CommandKind, DeviceConfig, DramCommand};
use crate::dram::timing::TimingTable;
use crate::rome::vba::VbaAddress;
use crate::{SimError, Ticks};

/// A fixed schedule of conventional commands, offsets relative to row-level
/// command acceptance. `total_span` is the controller-visible occupancy of
/// the VBA (the configured tRD_row / tWR_row); `data_window` is the
/// contiguous per-pseudo-channel data-bus occupancy.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedSchedule {
    /// (offset, command) for every pseudo channel, offsets non-decreasing.
    pub commands: Vec<(Ticks, DramCommand)>,
    pub total_span: Ticks,
    pub data_window: (Ticks, Ticks),
}

impl ExpandedSchedule {
    /// Commands with absolute issue cycles.
    pub fn materialize(&self, at: Ticks) -> impl Iterator<Item = DramCommand> + '_ {
        self.commands.iter().map(move |(off, c)| DramCommand {
            issue_cycle: at + off,
            ..*c
        })
    }

    /// CSV export (offset_ns, command, pc, bank_group, bank) for golden-file
    /// regression tests.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("offset_ns,command,pc,bank_group,bank\n");
        for (off, c) in &self.commands {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                crate::ticks_to_ns(*off),
                c.kind.name(),
                c.target.pseudo_channel,
                c.target.bank_group,
                c.target.bank
            ));
        }
        out
    }
}

fn required(name: &str, v: Ticks) -> Result<Ticks, SimError> {
    if v == 0 {
        Err(SimError::Config(format!(
            "timing table missing `{name}`, required by the command generator"
        )))
    } else {
        Ok(v)
    }
}

/// Expands RD_row / WR_row for `target`. The schedule shape depends only on
/// the command kind and the timing table; only bank/row fields vary with the
/// target.
pub fn expand_row_command(
    kind: CommandKind,
    target: VbaAddress,
    cfg: &DeviceConfig,
    table: &TimingTable,
) -> Result<ExpandedSchedule, SimError> {
    let is_read = match kind {
        CommandKind::RdRow => true,
        CommandKind::WrRow => false,
        other => {
            return Err(SimError::Request(format!(
                "command generator only expands row-level commands, got {}",
                other.name()
            )))
        }
    };
    target.check_bounds(cfg)?;
    let trrds = required("tRRDS", table.trrds)?;
    let tccds = required("tCCDS", table.tccds)?;
    let trcd = if is_read {
        required("tRCDRD", table.trcdrd)?
    } else {
        required("tRCDWR", table.trcdwr)?
    };
    let (span, _) = table.row_occupancy(is_read);
    let span = required(if is_read { "tRD_row" } else { "tWR_row" }, span)?;
    let cols_per_bank = cfg.columns_per_row();
    let col_kind = if is_read { CommandKind::Rd } else { CommandKind::Wr };
    let col_kind_ap = if is_read { CommandKind::Rda } else { CommandKind::Wra };

    let mut commands = Vec::with_capacity((2 * (2 + 2 * cols_per_bank)) as usize);
    for pc in 0..cfg.pseudo_channels_per_channel {
        // ACT(bank0) @ 0, ACT(bank1) @ tRRDS
        for half in 0..2u64 {
            commands.push((
                half * trrds,
                DramCommand {
                    kind: CommandKind::Act,
                    target: target.to_dram_address(cfg, pc, half as usize, 0),
                    issue_cycle: 0,
                },
            ));
        }
        // Column accesses alternate bank0/bank1 at tCCDS; the last access to
        // each bank auto-precharges.
        let first_col = trrds - tccds + trcd;
        for i in 0..cols_per_bank {
            for half in 0..2u64 {
                let off = first_col + (2 * i + half) * tccds;
                let k = if i + 1 == cols_per_bank { col_kind_ap } else { col_kind };
                commands.push((
                    off,
                    DramCommand {
                        kind: k,
                        target: target.to_dram_address(cfg, pc, half as usize, i),
                        issue_cycle: 0,
                    },
                ));
            }
        }
    }
    commands.sort_by_key(|(off, c)| (*off, c.target.pseudo_channel, c.target.bank_group));

    let first_col = trrds - tccds + trcd;
    let beats = 2 * cols_per_bank; // per pseudo channel
    let data_start = first_col + table.tcl;
    let data_window = (data_start, data_start + beats * tccds);
    Ok(ExpandedSchedule {
        commands,
        total_span: span,
        data_window,
    })
}

/// Expands the per-bank refresh pair: REFpb to each bank of the VBA spaced
/// tRREFD, blocking the VBA for tRFCpb + tRREFD in total. With pairing
/// disabled the two refreshes serialize and the VBA blocks for 2 x tRFCpb.
pub fn expand_refresh_pair(
    target: VbaAddress,
    cfg: &DeviceConfig,
    table: &TimingTable,
    paired: bool,
) -> Result<ExpandedSchedule, SimError> {
    target.check_bounds(cfg)?;
    let second = if paired { table.trrefd } else { table.trfcpb };
    let mut commands = Vec::new();
    for pc in 0..cfg.pseudo_channels_per_channel {
        for half in 0..2u64 {
            commands.push((
                half * second,
                DramCommand {
                    kind: CommandKind::RefPb,
                    target: target.to_dram_address(cfg, pc, half as usize, 0),
                    issue_cycle: 0,
                },
            ));
        }
    }
    commands.sort_by_key(|(off, c)| (*off, c.target.pseudo_channel, c.target.bank_group));
    Ok(ExpandedSchedule {
        commands,
        total_span: second + table.trfcpb,
        data_window: (0, 0),
    })
}
