//! Host-side memory requests and the line-oriented trace format:
//! `arrival_ns, R|W, hex_address, size_bytes, layer_tag`.

use std::io::{BufRead, Write};

use crate::{ns_to_ticks, ticks_to_ns, SimError, Ticks};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReqKind {
    Read,
    Write,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemRequest {
    pub id: u64,
    pub kind: ReqKind,
    pub base_address: u64,
    pub size: u64,
    pub arrival: Ticks,
    pub completion: Option<Ticks>,
    pub tag: String,
}

impl MemRequest {
    pub fn new(id: u64, kind: ReqKind, base_address: u64, size: u64, arrival: Ticks, tag: &str) -> Self {
        MemRequest {
            id,
            kind,
            base_address,
            size,
            arrival,
            completion: None,
            tag: tag.to_string(),
        }
    }

    /// Size/alignment check against an access granularity.
    pub fn check_granularity(&self, ag: u64) -> Result<(), SimError> {
        if self.size == 0 || self.size % ag != 0 || self.base_address % ag != 0 {
            return Err(SimError::Request(format!(
                "request {} (addr {:#x}, size {}) not aligned to {} B granularity",
                self.id, self.base_address, self.size, ag
            )));
        }
        Ok(())
    }
}

/// Checks arrival monotonicity, which the simulators rely on.
pub fn check_sorted(trace: &[MemRequest]) -> Result<(), SimError> {
    for w in trace.windows(2) {
        if w[1].arrival < w[0].arrival {
            return Err(SimError::Trace(format!(
                "non-monotone arrivals: request {} at {} ns after request {} at {} ns",
                w[1].id,
                ticks_to_ns(w[1].arrival),
                w[0].id,
                ticks_to_ns(w[0].arrival)
            )));
        }
    }
    Ok(())
}

pub fn write_trace<W: Write>(out: &mut W, trace: &[MemRequest]) -> Result<(), SimError> {
    for r in trace {
        writeln!(
            out,
            "{}, {}, {:#x}, {}, {}",
            ticks_to_ns(r.arrival),
            match r.kind {
                ReqKind::Read => "R",
                ReqKind::Write => "W",
            },
            r.base_address,
            r.size,
            r.tag
        )?;
    }
    Ok(())
}

pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<MemRequest>, SimError> {
    let mut out = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(|s| s.trim()).collect();
        if parts.len() != 5 {
            return Err(SimError::Trace(format!(
                "line {}: expected `arrival_ns, R|W, hex_address, size_bytes, layer_tag`",
                lineno + 1
            )));
        }
        let arrival_ns: f64 = parts[0]
            .parse()
            .map_err(|_| SimError::Trace(format!("line {}: bad arrival `{}`", lineno + 1, parts[0])))?;
        let kind = match parts[1] {
            "R" => ReqKind::Read,
            "W" => ReqKind::Write,
            other => return Err(SimError::Trace(format!("line {}: bad kind `{other}`", lineno + 1))),
        };
        let addr_str = parts[2].trim_start_matches("0x");
        let base_address = u64::from_str_radix(addr_str, 16)
            .map_err(|_| SimError::Trace(format!("line {}: bad address `{}`", lineno + 1, parts[2])))?;
        let size: u64 = parts[3]
            .parse()
            .map_err(|_| SimError::Trace(format!("line {}: bad size `{}`", lineno + 1, parts[3])))?;
        out.push(MemRequest::new(
            out.len() as u64,
            kind,
            base_address,
            size,
            ns_to_ticks(arrival_ns)?,
            parts[4],
        ));
    }
    check_sorted(&out)?;
    Ok(out)
}
