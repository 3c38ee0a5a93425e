//! Fixtures shared by the benchmarks.

use wavelab_core::{Nonlinearity, PeriodicWave, WaveParams};

/// mBBM dnoidal, mBBM cnoidal and BBM reference waves at c = 2.
pub fn reference_waves() -> Vec<(&'static str, PeriodicWave)> {
    let mbbm = Nonlinearity::mbbm();
    let waves = [
        ("mbbm_dn", WaveParams::new(0.0, -0.05, 2.0, 1.0), mbbm.clone()),
        ("mbbm_cn", WaveParams::new(0.0, 0.1, 2.0, 0.0), mbbm),
        ("bbm", WaveParams::new(0.05, -0.1, 2.0, 1.0477), Nonlinearity::bbm()),
    ];
    waves.into_iter().map(|(name, p, nl)| (name, PeriodicWave::new(p, &nl).expect("reference wave exists"))).collect()
}
