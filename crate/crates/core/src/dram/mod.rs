//! Shared device model: geometry, conventional command set, address
//! decoding, timing constraints and per-bank state machines.

pub mod device;
pub mod timing;
pub mod mapping;
pub mod state;

pub use device::{BackEndKind, CommandKind, DeviceConfig, DramAddress, DramCommand};
pub use mapping::{AddressMapping, Field};
pub use state::{BusKind, ChannelState, PcState};
pub use timing::TimingTable;
