use rowsim::baseline::{simulate_baseline, BaselineSimOptions};
use rowsim::config::KvConfig;
use rowsim::dram::device::DeviceConfig;
use rowsim::dram::mapping::AddressMapping;
use rowsim::trace::{MemRequest, ReqKind};

fn main() {
    let text = std::fs::read_to_string("configs/devices/hbm4.cfg").unwrap();
    let c = DeviceConfig::from_kv(&KvConfig::parse(&text, "hbm4").unwrap()).unwrap();
    let m = AddressMapping::default_hbm4();
    let rows = (16u64 << 20) / c.row_size;
    let trace: Vec<MemRequest> = (0..rows)
        .map(|i| MemRequest::new(i, ReqKind::Read, i * c.row_size * c.channels_per_cube, c.row_size, 0, "s"))
        .collect();
    for (refresh, cap) in [(true, 64usize), (false, 64), (true, 2), (false, 40), (false, 48), (false, 52), (false, 56), (false, 60), (false, 96)] {
        let opts = BaselineSimOptions { refresh_enable: Some(refresh), queue_capacity: Some(cap), ..Default::default() };
        let out = simulate_baseline(&trace, &c, &m, &opts).unwrap();
        println!("refresh={refresh} cap={cap}: util={:.4} deferrals={} refpb={:?}", out.report.utilization, out.report.refresh_deferrals, out.report.command_counts.get("REFpb"));
    }
}
