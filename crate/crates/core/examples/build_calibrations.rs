//! Rebuilds the shipped calibrations from `configs/` into `calibrations/`.
//! Each takes several minutes per core.
//!
//! ```text
//! cargo run --release --example build_calibrations [-- gaussian|t3|garch]
//! ```

use std::path::PathBuf;

use rankpred::harness::config::load_json;
use rankpred::harness::CalibrateConfig;

fn main() -> rankpred::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let only = std::env::args().nth(1);
    for (name, config, out) in [
        ("gaussian", "calibrate_gaussian.json", "gaussian_rho-0.5.json"),
        ("t3", "calibrate_t3.json", "t3_t3_rho-0.5.json"),
        ("garch", "calibrate_garch.json", "gaussian_garch_y_rho-0.5.json"),
    ] {
        if only.as_deref().is_some_and(|o| o != name) {
            continue;
        }
        let cfg: CalibrateConfig = load_json(&root.join("configs").join(config))?;
        let cal = cfg.run()?;
        let c = &cal.certificate;
        println!("{name}: max null rejection {:.4}, WAP {:.4}, bound {:.4}", c.max_null_rej, c.wap_test, c.wap_bound);
        cal.save(root.join("calibrations").join(out))?;
    }
    Ok(())
}
