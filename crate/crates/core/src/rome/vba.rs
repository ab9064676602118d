//! Virtual-bank addressing.
//!
//! One VBA pairs two banks from different bank groups and drives them on
//! both pseudo channels in lock-step, so a single VBA delivers the full
//! channel bandwidth and the effective row grows to 4 KB at the defaults.

use crate::dram::device::{DeviceConfig, DramAddress};
use crate::SimError;

/// A virtual-bank target: `vba` indexes within one stack id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct VbaAddress {
    pub channel: u64,
    pub stack_id: u64,
    pub vba: u64,
    pub row: u64,
}

impl VbaAddress {
    pub fn check_bounds(&self, cfg: &DeviceConfig) -> Result<(), SimError> {
        let per_sid = cfg.vbas_per_channel() / cfg.stack_ids;
        let ok = self.channel < cfg.channels_per_cube
            && self.stack_id < cfg.stack_ids
            && self.vba < per_sid
            && self.row < cfg.rows_per_bank;
        if ok {
            Ok(())
        } else {
            Err(SimError::Capacity(format!("VBA address out of bounds: {self:?}")))
        }
    }

    /// Flat VBA index within the channel.
    pub fn flat_index(&self, cfg: &DeviceConfig) -> usize {
        let per_sid = cfg.vbas_per_channel() / cfg.stack_ids;
        (self.stack_id * per_sid + self.vba) as usize
    }

    /// The two physical banks behind this VBA on one pseudo channel. Bank
    /// pairs tile the (bank group, bank) grid: adjacent bank groups supply
    /// the two halves, the bank index picks within each group.
    pub fn physical_banks(&self, cfg: &DeviceConfig) -> [(u64, u64); 2] {
        let pair = self.vba / cfg.banks_per_bank_group;
        let bank = self.vba % cfg.banks_per_bank_group;
        let bg0 = 2 * pair;
        [(bg0, bank), (bg0 + 1, bank)]
    }

    /// Conventional address for one half of the pair.
    pub fn to_dram_address(&self, cfg: &DeviceConfig, pc: u64, half: usize, column: u64) -> DramAddress {
        let banks = self.physical_banks(cfg);
        DramAddress {
            channel: self.channel,
            pseudo_channel: pc,
            stack_id: self.stack_id,
            bank_group: banks[half].0,
            bank: banks[half].1,
            row: self.row,
            column,
        }
    }
}
