//! Run the rank test and the Gaussian baseline on a `t,y,x` CSV file with a
//! shipped calibration.
//!
//! ```text
//! cargo run --release --example test_observed_data -- data.csv [gaussian|t3|kde]
//! ```
//! Without arguments a sample is simulated.

use std::path::PathBuf;

use rankpred::alfd::AlfdCalibration;
use rankpred::dgp::{InnovationSampler, InnovationSpec, Sample};
use rankpred::harness::design::{simulate_design, ModelSpec};
use rankpred::reference::ReferenceKind;
use rankpred::rng::SeedStream;
use rankpred::testkit::{emw_test, wz_test, Reference, TestOptions};

fn main() -> rankpred::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let sample = match args.first() {
        Some(path) => Sample::read_csv(std::fs::File::open(path)?)?,
        None => {
            let sampler = InnovationSampler::new(&InnovationSpec::gaussian(-0.5))?;
            simulate_design(15.0, -15.0, 300, &ModelSpec::default(), &sampler, &mut SeedStream::new(8).rng(0))?
        }
    };
    let kind: ReferenceKind = args.get(1).map_or(Ok(ReferenceKind::Gaussian), |s| s.parse())?;
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("calibrations");
    let cal = AlfdCalibration::load(dir.join(match kind {
        ReferenceKind::T3 => "t3_t3_rho-0.5.json",
        _ => "gaussian_rho-0.5.json",
    }))?;
    let gaussian_cal = AlfdCalibration::load(dir.join("gaussian_rho-0.5.json"))?;

    let opts = TestOptions::default();
    let wz = wz_test(&sample, &Reference::from_kind(kind), &cal, &opts)?;
    let emw = emw_test(&sample, &gaussian_cal, &opts)?;
    for (name, d) in [("rank test", &wz), ("Gaussian baseline", &emw)] {
        println!(
            "{name}: reject = {}, regime = {:?}, statistic {:.3} vs {:.3}, c* = {:.1}",
            d.reject, d.regime, d.statistic, d.threshold, d.c_star
        );
    }
    println!("{}", serde_json::to_string_pretty(&wz.nuisance)?);
    Ok(())
}
