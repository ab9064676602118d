//! Physical-address to DRAM-address mapping.
//!
//! A mapping is an ordered list of fields, lowest stride first. Each field
//! consumes a digit of radix equal to its bound in the device config (mixed
//! radix rather than plain bit slicing so that a 36-channel cube decodes
//! cleanly). The column-offset field is the byte offset within one effective
//! row and must sit lowest so that aligned requests stay contiguous.

use crate::dram::device::{BackEndKind, DeviceConfig, DramAddress};
use crate::rome::VbaAddress;
use crate::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    /// Byte offset within one (effective) row.
    ColumnOffset,
    Channel,
    PseudoChannel,
    StackId,
    BankGroup,
    Bank,
    Row,
    /// Virtual-bank index within a stack id (row-granularity devices).
    Vba,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::ColumnOffset => "coloff",
            Field::Channel => "ch",
            Field::PseudoChannel => "pc",
            Field::StackId => "sid",
            Field::BankGroup => "bg",
            Field::Bank => "bank",
            Field::Row => "row",
            Field::Vba => "vba",
        }
    }

    fn from_name(s: &str) -> Result<Self, SimError> {
        Ok(match s {
            "coloff" => Field::ColumnOffset,
            "ch" => Field::Channel,
            "pc" => Field::PseudoChannel,
            "sid" => Field::StackId,
            "bg" => Field::BankGroup,
            "bank" => Field::Bank,
            "row" => Field::Row,
            "vba" => Field::Vba,
            other => return Err(SimError::Config(format!("unknown mapping field `{other}`"))),
        })
    }

    /// Digit radix of this field for the given device.
    pub fn radix(self, cfg: &DeviceConfig) -> u64 {
        match self {
            Field::ColumnOffset => match cfg.kind {
                BackEndKind::Hbm4 => cfg.row_size,
                BackEndKind::Rome => cfg.effective_row_size(),
            },
            Field::Channel => cfg.channels_per_cube,
            Field::PseudoChannel => cfg.pseudo_channels_per_channel,
            Field::StackId => cfg.stack_ids,
            Field::BankGroup => cfg.bank_groups_per_pc,
            Field::Bank => cfg.banks_per_bank_group,
            Field::Row => cfg.rows_per_bank,
            Field::Vba => cfg.vbas_per_channel() / cfg.stack_ids,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AddressMapping {
    fields: Vec<Field>,
}

impl AddressMapping {
    pub fn new(fields: Vec<Field>) -> Self {
        AddressMapping { fields }
    }

    /// Parses a comma-separated field list, lowest stride first, e.g.
    /// `coloff,ch,pc,bg,bank,sid,row`.
    pub fn parse(spec: &str) -> Result<Self, SimError> {
        let fields = spec
            .split(',')
            .map(|s| Field::from_name(s.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AddressMapping { fields })
    }

    pub fn spec_string(&self) -> String {
        self.fields.iter().map(|f| f.name()).collect::<Vec<_>>().join(",")
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    /// Default conventional mapping: channels interleave at row granularity,
    /// then pseudo channels and the bank walk, stack id and row on top.
    pub fn default_hbm4() -> Self {
        Self::parse("coloff,ch,pc,bg,bank,sid,row").unwrap()
    }

    /// Default row-granularity mapping: channels interleave at effective-row
    /// (4 KB) granularity, then the VBA walk.
    pub fn default_rome() -> Self {
        Self::parse("coloff,ch,vba,sid,row").unwrap()
    }

    /// Checks the field set matches the device kind, the column offset sits
    /// lowest, and the digit product covers the device capacity exactly.
    pub fn validate(&self, cfg: &DeviceConfig) -> Result<(), SimError> {
        let expect: &[Field] = match cfg.kind {
            BackEndKind::Hbm4 => &[
                Field::ColumnOffset,
                Field::Channel,
                Field::PseudoChannel,
                Field::StackId,
                Field::BankGroup,
                Field::Bank,
                Field::Row,
            ],
            BackEndKind::Rome => &[
                Field::ColumnOffset,
                Field::Channel,
                Field::StackId,
                Field::Vba,
                Field::Row,
            ],
        };
        if self.fields.len() != expect.len() {
            return Err(SimError::Config(format!(
                "mapping `{}` must use exactly the fields {:?}",
                self.spec_string(),
                expect.iter().map(|f| f.name()).collect::<Vec<_>>()
            )));
        }
        for f in expect {
            if !self.fields.contains(f) {
                return Err(SimError::Config(format!(
                    "mapping `{}` is missing field `{}`",
                    self.spec_string(),
                    f.name()
                )));
            }
        }
        if self.fields[0] != Field::ColumnOffset {
            return Err(SimError::Config(
                "column offset must be the lowest mapping field".into(),
            ));
        }
        let product: u128 = self.fields.iter().map(|f| f.radix(cfg) as u128).product();
        if product != cfg.capacity_bytes() as u128 {
            return Err(SimError::Config(format!(
                "mapping covers {product} bytes but device capacity is {}",
                cfg.capacity_bytes()
            )));
        }
        Ok(())
    }

    fn digits(&self, addr: u64, cfg: &DeviceConfig) -> Result<Vec<u64>, SimError> {
        if addr >= cfg.capacity_bytes() {
            return Err(SimError::Capacity(format!(
                "address {addr:#x} beyond device capacity {:#x}",
                cfg.capacity_bytes()
            )));
        }
        let mut rest = addr;
        let mut out = Vec::with_capacity(self.fields.len());
        for f in &self.fields {
            let r = f.radix(cfg);
            out.push(rest % r);
            rest /= r;
        }
        Ok(out)
    }

    fn field_value(&self, digits: &[u64], f: Field) -> u64 {
        self.fields
            .iter()
            .position(|&x| x == f)
            .map(|i| digits[i])
            .unwrap_or(0)
    }

    /// Decodes a physical byte address on a conventional device.
    pub fn decode(&self, addr: u64, cfg: &DeviceConfig) -> Result<DramAddress, SimError> {
        self.validate(cfg)?;
        self.decode_unchecked(addr, cfg)
    }

    /// Decode without re-validating the mapping (hot path).
    pub fn decode_unchecked(&self, addr: u64, cfg: &DeviceConfig) -> Result<DramAddress, SimError> {
        let digits = self.digits(addr, cfg)?;
        let coloff = self.field_value(&digits, Field::ColumnOffset);
        Ok(DramAddress {
            channel: self.field_value(&digits, Field::Channel),
            pseudo_channel: self.field_value(&digits, Field::PseudoChannel),
            stack_id: self.field_value(&digits, Field::StackId),
            bank_group: self.field_value(&digits, Field::BankGroup),
            bank: self.field_value(&digits, Field::Bank),
            row: self.field_value(&digits, Field::Row),
            column: coloff / cfg.column_access_granularity,
        })
    }

    /// Re-encodes a decoded address back to the aligned physical base
    /// address (byte offset within one column access is zero).
    pub fn encode(&self, a: &DramAddress, cfg: &DeviceConfig) -> u64 {
        let mut addr: u64 = 0;
        let mut stride: u64 = 1;
        for f in &self.fields {
            let v = match f {
                Field::ColumnOffset => a.column * cfg.column_access_granularity,
                Field::Channel => a.channel,
                Field::PseudoChannel => a.pseudo_channel,
                Field::StackId => a.stack_id,
                Field::BankGroup => a.bank_group,
                Field::Bank => a.bank,
                Field::Row => a.row,
                Field::Vba => 0,
            };
            addr += v * stride;
            stride *= f.radix(cfg);
        }
        addr
    }

    /// Decodes a physical byte address on a row-granularity device.
    pub fn decode_vba(&self, addr: u64, cfg: &DeviceConfig) -> Result<VbaAddress, SimError> {
        let digits = self.digits(addr, cfg)?;
        Ok(VbaAddress {
            channel: self.field_value(&digits, Field::Channel),
            stack_id: self.field_value(&digits, Field::StackId),
            vba: self.field_value(&digits, Field::Vba),
            row: self.field_value(&digits, Field::Row),
        })
    }

    /// Encodes a VBA address to the base physical address of its row.
    pub fn encode_vba(&self, a: &VbaAddress, cfg: &DeviceConfig) -> u64 {
        let mut addr: u64 = 0;
        let mut stride: u64 = 1;
        for f in &self.fields {
            let v = match f {
                Field::ColumnOffset => 0,
                Field::Channel => a.channel,
                Field::StackId => a.stack_id,
                Field::Vba => a.vba,
                Field::Row => a.row,
                _ => 0,
            };
            addr += v * stride;
            stride *= f.radix(cfg);
        }
        addr
    }

    /// Standard sweep candidates for a device kind.
    pub fn sweep_candidates(kind: BackEndKind) -> Vec<AddressMapping> {
        let specs: &[&str] = match kind {
            BackEndKind::Hbm4 => &[
                "coloff,ch,pc,bg,bank,sid,row",
                "coloff,pc,bg,bank,ch,sid,row",
                "coloff,ch,pc,sid,bg,bank,row",
                "coloff,bg,bank,pc,row,sid,ch",
            ],
            BackEndKind::Rome => &[
                "coloff,ch,vba,sid,row",
                "coloff,vba,ch,sid,row",
                "coloff,ch,sid,vba,row",
                "coloff,vba,sid,row,ch",
            ],
        };
        specs.iter().map(|s| AddressMapping::parse(s).unwrap()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::KvConfig;
    use rand::{Rng, SeedableRng};

    fn hbm4() -> DeviceConfig {
        let text = include_str!("../../../../configs/devices/hbm4.cfg");
        DeviceConfig::from_kv(&KvConfig::parse(text, "hbm4").unwrap()).unwrap()
    }

    fn rome() -> DeviceConfig {
        let text = include_str!("../../../../configs/devices/rome.cfg");
        DeviceConfig::from_kv(&KvConfig::parse(text, "rome").unwrap()).unwrap()
    }

    #[test]
    fn zero_address_decodes_to_zero() {
        let cfg = hbm4();
        let m = AddressMapping::default_hbm4();
        assert_eq!(m.decode(0, &cfg).unwrap(), DramAddress::default());
    }

    #[test]
    fn round_trip_random_aligned_addresses() {
        let cfg = hbm4();
        let ag = cfg.column_access_granularity;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for m in AddressMapping::sweep_candidates(BackEndKind::Hbm4) {
            m.validate(&cfg).unwrap();
            for _ in 0..10_000 {
                let addr = rng.gen_range(0..cfg.capacity_bytes() / ag) * ag;
                let d = m.decode_unchecked(addr, &cfg).unwrap();
                assert_eq!(m.encode(&d, &cfg), addr);
            }
        }
    }

    #[test]
    fn rome_round_trip() {
        let cfg = rome();
        let row = cfg.effective_row_size();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for m in AddressMapping::sweep_candidates(BackEndKind::Rome) {
            m.validate(&cfg).unwrap();
            for _ in 0..10_000 {
                let addr = rng.gen_range(0..cfg.capacity_bytes() / row) * row;
                let v = m.decode_vba(addr, &cfg).unwrap();
                assert_eq!(m.encode_vba(&v, &cfg), addr);
            }
        }
    }

    #[test]
    fn channel_interleaves_at_row_granularity() {
        // With the channel field directly above the column offset, an address
        // and its neighbor one row size away land in different channels.
        let cfg = hbm4();
        let m = AddressMapping::default_hbm4();
        let a = m.decode(0, &cfg).unwrap();
        let b = m.decode(cfg.row_size, &cfg).unwrap();
        assert_ne!(a.channel, b.channel);
    }

    #[test]
    fn out_of_range_address_is_capacity_error() {
        let cfg = hbm4();
        let m = AddressMapping::default_hbm4();
        assert!(matches!(
            m.decode(cfg.capacity_bytes(), &cfg),
            Err(SimError::Capacity(_))
        ));
    }

    #[test]
    fn wrong_field_set_is_config_error() {
        let cfg = hbm4();
        let m = AddressMapping::parse("coloff,ch,vba,sid,row").unwrap();
        assert!(matches!(m.validate(&cfg), Err(SimError::Config(_))));
    }
}
