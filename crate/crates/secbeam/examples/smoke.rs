use secbeam::*;

fn main() {
    let t0 = std::time::Instant::now();
    let sc = Scenario::table_ii();
    let report = minimize_power(&sc, &OptimizerOptions::default());
    println!(
        "status={:?} iters={} P={:.3e} W ({:.1} dBm) Rsec={:.4} Rg={:.4} lb={:.3e} monotone={} elapsed={:?}",
        report.status,
        report.iterations,
        report.rates.total_power,
        secbeam::channel::watts_to_dbm(report.rates.total_power),
        report.rates.secrecy,
        report.rates.general,
        report.sdr_lower_bound,
        check_monotone(&report.power_trace, 1e-3),
        t0.elapsed()
    );
    println!("trace: {:?}", report.power_trace.iter().map(|p| format!("{:.4e}", p)).collect::<Vec<_>>());
    let t1 = std::time::Instant::now();
    let mrt = run_baseline(BaselineKind::MrtBased, &sc, &OptimizerOptions::default());
    println!("MRT: status={:?} P={:.3e} ({:?})", mrt.status, mrt.rates.total_power, t1.elapsed());
    let relay = run_baseline(BaselineKind::RelayBased, &sc, &OptimizerOptions::default());
    println!("Relay: status={:?} P={:.3e}", relay.status, relay.rates.total_power);
    let rp = run_baseline(BaselineKind::RandPhase, &sc, &OptimizerOptions::default());
    println!("RandPhase: status={:?} P={:.3e}", rp.status, rp.rates.total_power);
    let na = run_baseline(BaselineKind::WithoutAn, &sc, &OptimizerOptions::default());
    println!("NoAN: status={:?} P={:.3e}", na.status, na.rates.total_power);
}
