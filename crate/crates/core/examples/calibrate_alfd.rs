//! A small ALFD calibration: weights over the null grid, critical value and
//! the held-out certificate. Shipped calibrations use the defaults
//! (20,000 draws, 100,000 certification draws, 1,000 steps).

use rankpred::alfd::{calibrate, null_rejection_profile, CalibrationSettings};
use rankpred::limit::LimitCov;

fn main() -> rankpred::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let rho = -0.5;
    let cov = LimitCov::gaussian(rho)?;
    let mut settings = CalibrationSettings::defaults(rho, 2024)?;
    settings.n_draws = 2_000;
    settings.n_cert = 4_000;
    settings.n_steps = 200;
    settings.epsilon = 0.01;

    let cal = calibrate(&settings, &cov)?;
    let c = &cal.certificate;
    println!("{} iterations, log kappa = {:.4}", cal.iterations, cal.log_kappa);
    println!("max null rejection {:.4}, WAP {:.4}, bound {:.4}", c.max_null_rej, c.wap_test, c.wap_bound);
    for (g, w) in cal.grid.iter().zip(&cal.lambda0).filter(|(_, w)| **w > 0.02) {
        println!("  lambda0({g}) = {w:.3}");
    }
    for r in null_rejection_profile(&cal, 2_000, 200, 7)?.iter().step_by(8) {
        println!("  rejection at c = {:>6}: {:.3} ± {:.3}", r.c, r.rate, r.se);
    }
    Ok(())
}
