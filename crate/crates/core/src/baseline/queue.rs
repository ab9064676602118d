//! Request fragmentation and the bounded request queue.

use std::collections::VecDeque;

use crate::dram::device::{DeviceConfig, DramAddress};
use crate::dram::mapping::AddressMapping;
use crate::trace::MemRequest;
use crate::{SimError, Ticks};

/// One column access carved out of a host request.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    /// Index of the originating request.
    pub req: usize,
    /// Age for oldest-first tie breaking (global admission order).
    pub id: u64,
    pub addr: DramAddress,
    pub is_write: bool,
    pub arrival: Ticks,
}

/// Splits a request into column accesses, one per access-granularity unit.
pub fn fragment_request(
    req: &MemRequest,
    req_index: usize,
    first_id: u64,
    mapping: &AddressMapping,
    cfg: &DeviceConfig,
) -> Result<Vec<Fragment>, SimError> {
    let ag = cfg.column_access_granularity;
    req.check_granularity(ag)?;
    let n = req.size / ag;
    let mut out = Vec::with_capacity(n as usize);
    for i in 0..n {
        let addr = mapping.decode_unchecked(req.base_address + i * ag, cfg)?;
        out.push(Fragment {
            req: req_index,
            id: first_id + i,
            addr,
            is_write: req.kind == crate::trace::ReqKind::Write,
            arrival: req.arrival,
        });
    }
    Ok(out)
}

/// Bounded FIFO of fragments. Admission takes a prefix when capacity is
/// short and reports backpressure so the front end stalls.
#[derive(Debug, Clone)]
pub struct RequestQueue {
    pub capacity: usize,
    entries: VecDeque<Fragment>,
}

impl RequestQueue {
    pub fn new(capacity: usize) -> Self {
        RequestQueue {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Admits as many fragments as fit; returns (admitted, backpressure).
    pub fn enqueue(&mut self, fragments: &[Fragment]) -> (usize, bool) {
        let free = self.capacity.saturating_sub(self.entries.len());
        let take = free.min(fragments.len());
        for f in &fragments[..take] {
            self.entries.push_back(f.clone());
        }
        (take, take < fragments.len())
    }

    pub fn pop_front(&mut self) -> Option<Fragment> {
        self.entries.pop_front()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fragment> {
        self.entries.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::KvConfig;
    use crate::trace::{MemRequest, ReqKind};

    fn cfg() -> DeviceConfig {
        let text = include_str!("../../../../configs/devices/hbm4.cfg");
        DeviceConfig::from_kv(&KvConfig::parse(text, "hbm4").unwrap()).unwrap()
    }

    #[test]
    fn one_cache_line_is_one_fragment() {
        let c = cfg();
        let m = AddressMapping::default_hbm4();
        let r = MemRequest::new(0, ReqKind::Read, 0, 32, 0, "t");
        assert_eq!(fragment_request(&r, 0, 0, &m, &c).unwrap().len(), 1);
    }

    #[test]
    fn four_kb_splits_into_128_fragments() {
        let c = cfg();
        let m = AddressMapping::default_hbm4();
        let r = MemRequest::new(0, ReqKind::Read, 0, 4096, 0, "t");
        let frags = fragment_request(&r, 0, 0, &m, &c).unwrap();
        assert_eq!(frags.len(), 128);
        // fragments cover consecutive physical addresses
        let back: Vec<u64> = frags.iter().map(|f| m.encode(&f.addr, &c)).collect();
        for (i, a) in back.iter().enumerate() {
            assert_eq!(*a, i as u64 * 32);
        }
    }

    #[test]
    fn misaligned_request_is_alignment_error() {
        let c = cfg();
        let m = AddressMapping::default_hbm4();
        let r = MemRequest::new(0, ReqKind::Read, 8, 32, 0, "t");
        assert!(matches!(
            fragment_request(&r, 0, 0, &m, &c),
            Err(SimError::Request(_))
        ));
    }

    #[test]
    fn queue_admits_prefix_and_signals_backpressure() {
        let c = cfg();
        let m = AddressMapping::default_hbm4();
        let r = MemRequest::new(0, ReqKind::Read, 0, 64, 0, "t");
        let frags = fragment_request(&r, 0, 0, &m, &c).unwrap();
        assert_eq!(frags.len(), 2);
        let mut q = RequestQueue::new(1);
        let (admitted, backpressure) = q.enqueue(&frags);
        assert_eq!(admitted, 1);
        assert!(backpressure);
        assert_eq!(q.len(), 1);
    }
}
