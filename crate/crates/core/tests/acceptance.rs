//! Acceptance criteria, each printed as one PASS/FAIL line. Runs without the
//! libtest harness so the lines appear in `cargo test` output in order.

use std::path::PathBuf;
use std::time::Instant;

use rankpred::alfd::AlfdCalibration;
use rankpred::dgp::{GarchSpec, GarchTarget, InnovationFamily, InnovationSpec, Sample};
use rankpred::harness::{run_power_experiment, ExperimentConfig, PowerTable, TestName};
use rankpred::limit::{log_lr, simulate_many, stats_from_paths, LimitCov, LimitPaths, LimitSimulator};
use rankpred::numeric::{mean, skew_kurtosis};
use rankpred::processes::{bridge, component_ranks, partial_sum_eps, rank_score_bridge, ranks, sufficient_stats, StepPath, SuffStats};
use rankpred::reference::{norm_inv, pseudo_info, ReferenceScore};
use rankpred::rng::SeedStream;
use rankpred::testkit::{standard_estimates, wz_test, Reference, TestOptions};
use rand::Rng;

struct Report {
    failures: Vec<String>,
}

impl Report {
    fn line(&mut self, name: &str, ok: bool, detail: String, started: Instant) {
        println!(
            "[{}] {name}: {detail} ({:.1}s)",
            if ok { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
        if !ok {
            self.failures.push(name.to_string());
        }
    }
}

fn calibration(name: &str) -> AlfdCalibration {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("calibrations").join(name);
    AlfdCalibration::load(&path).unwrap_or_else(|e| panic!("loading {}: {e}", path.display()))
}

fn experiment(t: usize, n_reps: usize, c: &[f64], deltas: &[f64], innovations: InnovationSpec, reference: &str, seed: u64) -> ExperimentConfig {
    serde_json::from_value(serde_json::json!({
        "t": t,
        "n_reps": n_reps,
        "c_list": c,
        "delta_list": deltas,
        "innovations": innovations,
        "reference": reference,
        "seed": seed,
    }))
    .unwrap()
}

fn rate(table: &PowerTable, test: TestName, c: f64, d: f64) -> f64 {
    table.rate(test, c, d).expect("cell present")
}

fn student_t3(rho: f64) -> InnovationSpec {
    InnovationSpec {
        family: InnovationFamily::StudentT { nu: 3.0 },
        rho,
        garch: None,
    }
}

fn size_control(r: &mut Report, gauss: &AlfdCalibration) {
    let started = Instant::now();
    let cs = [0.0, -10.0, -25.0, -50.0, -100.0, -200.0];
    let cfg = experiment(200, 2000, &cs, &[0.0], InnovationSpec::gaussian(-0.5), "gaussian", 101);
    let table = run_power_experiment(&cfg, gauss, gauss).unwrap();
    let mut worst: Vec<String> = Vec::new();
    let mut ok = true;
    for &c in &cs {
        let wz = rate(&table, TestName::Wz, c, 0.0);
        let emw = rate(&table, TestName::Emw, c, 0.0);
        ok &= (0.030..=0.060).contains(&wz) && (0.030..=0.060).contains(&emw);
        worst.push(format!("c={c}: {wz:.3}/{emw:.3}"));
    }
    r.line("1 size control (WZ/EMW, T=200, 2000 reps, in [0.030, 0.060])", ok, worst.join(", "), started);
}

fn t3_power_gain(r: &mut Report, t3: &AlfdCalibration, gauss: &AlfdCalibration) {
    let started = Instant::now();
    let cfg = experiment(500, 1000, &[-25.0], &[1.0, 2.0, 3.0], student_t3(-0.5), "t3", 202);
    let table = run_power_experiment(&cfg, t3, gauss).unwrap();
    let p = |test, d| rate(&table, test, -25.0, d);
    let gain = p(TestName::Wz, 2.0) - p(TestName::Emw, 2.0);
    let ok = gain >= 0.10
        && p(TestName::Wz, 1.0) >= p(TestName::Emw, 1.0) - 0.02
        && p(TestName::Wz, 3.0) >= p(TestName::Emw, 3.0) - 0.02;
    let detail = [1.0, 2.0, 3.0]
        .iter()
        .map(|&d| format!("δ={d}: WZ {:.3} EMW {:.3}", p(TestName::Wz, d), p(TestName::Emw, d)))
        .collect::<Vec<_>>()
        .join(", ");
    r.line("2 power gain under t3 (c=-25, T=500; δ=2 gain >= 0.10, δ=1,3 WZ >= EMW - 0.02)", ok, detail, started);
}

fn gaussian_equivalence(r: &mut Report, gauss: &AlfdCalibration) {
    let started = Instant::now();
    let deltas = [0.0, 1.0, 2.0, 3.0];
    let cfg = experiment(500, 1000, &[-25.0], &deltas, InnovationSpec::gaussian(-0.5), "gaussian", 303);
    let table = run_power_experiment(&cfg, gauss, gauss).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for &d in &deltas {
        let (wz, emw) = (rate(&table, TestName::Wz, -25.0, d), rate(&table, TestName::Emw, -25.0, d));
        ok &= (wz - emw).abs() <= 0.03;
        parts.push(format!("δ={d}: {wz:.3}/{emw:.3}"));
    }
    r.line("3 Gaussian equivalence (|WZ - EMW| <= 0.03, c=-25, T=500)", ok, parts.join(", "), started);
}

fn certificates(r: &mut Report, cals: &[(&str, &AlfdCalibration)]) {
    let started = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, cal) in cals {
        let c = &cal.certificate;
        let deficiency = c.wap_bound - c.wap_test;
        ok &= cal.grid.len() == 57 && c.n_draws >= 100_000 && c.max_null_rej <= 0.055 && deficiency <= cal.epsilon && cal.epsilon <= 0.005;
        parts.push(format!(
            "{name}: max null rej {:.4}, WAP {:.4} vs bound {:.4} (deficiency {:.4}), n={}",
            c.max_null_rej, c.wap_test, c.wap_bound, deficiency, c.n_draws
        ));
    }
    r.line("4 ALFD certificates (max null rej <= 0.055, deficiency <= 0.005)", ok, parts.join("; "), started);
}

fn limit_degeneration(r: &mut Report) {
    let started = Instant::now();
    let c = -200.0;
    let sim = LimitSimulator::new(LimitCov::gaussian(-0.5).unwrap(), 2000).unwrap();
    let draws = simulate_many(&sim, 0.0, c, 100_000, SeedStream::new(505));
    let m = mean(&draws.iter().map(|s| -2.0 * c * s.s4).collect::<Vec<_>>());
    let reference = ReferenceScore::gaussian(-0.5).unwrap();
    let z: Vec<f64> = draws
        .iter()
        .map(|s| {
            let e = standard_estimates(s, &reference).unwrap();
            e.b_star / e.sigma_b_star
        })
        .collect();
    let (skew, kurt) = skew_kurtosis(&z);
    let ok = (0.95..=1.05).contains(&m) && skew.abs() < 0.05 && kurt.abs() < 0.1;
    r.line(
        "5 limit degeneration at c=-200 (mean -2c∫W² in [0.95, 1.05], b*/σ normal)",
        ok,
        format!("mean {m:.4}, skew {skew:.4}, excess kurtosis {kurt:.4}"),
        started,
    );
}

fn invariance(r: &mut Report, gauss: &AlfdCalibration) {
    let started = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();

    // Bridge endpoint.
    let mut rng = SeedStream::new(606).rng(0);
    for _ in 0..200 {
        let inc: Vec<f64> = (0..137).map(|_| rng.random_range(-50.0..50.0)).collect();
        let b = bridge(&StepPath::from_increments(&inc, 0.3));
        ok &= b.end() == 0.0;
    }
    notes.push("B(1) = 0".to_string());

    // Statistics under transforms of observed data.
    let cfg: rankpred::harness::SimulateConfig = serde_json::from_value(serde_json::json!({
        "t": 300, "b": 5.0, "c": -10.0,
        "innovations": {"family": {"name": "student_t", "nu": 3.0}, "rho": -0.5},
        "seed": 607
    }))
    .unwrap();
    // On a dyadic grid the location shifts below are exact in floating point.
    let raw = cfg.run().unwrap();
    let dyadic = |v: &[f64]| v.iter().map(|x| (x * 256.0).round() / 256.0).collect::<Vec<_>>();
    let sample = Sample::new(dyadic(&raw.y), dyadic(&raw.x), 0.0).unwrap();
    let opts = TestOptions::default();
    let base = wz_test(&sample, &Reference::gaussian(), gauss, &opts).unwrap().stats;
    let variants: [(&str, Sample); 4] = [
        ("y -> exp(y/4)", Sample { y: sample.y.iter().map(|v| (v / 4.0).exp()).collect(), ..sample.clone() }),
        ("y -> y^3 + y", Sample { y: sample.y.iter().map(|v| v * v * v + v).collect(), ..sample.clone() }),
        ("y + 1024", Sample { y: sample.y.iter().map(|v| v + 1024.0).collect(), ..sample.clone() }),
        (
            "x + 64",
            Sample {
                x: sample.x.iter().map(|v| v + 64.0).collect(),
                x0: sample.x0 + 64.0,
                ..sample.clone()
            },
        ),
    ];
    for (name, s) in variants {
        let got = wz_test(&s, &Reference::gaussian(), gauss, &opts).unwrap().stats;
        let same = got == base;
        ok &= same;
        if !same {
            notes.push(format!("{name} changed the statistics"));
        }
    }
    notes.push("y monotone / y, x shifts bit-identical".to_string());

    // Deterministic drift added to a simulated score path before bridging.
    // Paths are put on a dyadic grid so every addition is exact.
    let sim = LimitSimulator::new(LimitCov::gaussian(-0.5).unwrap(), 1024).unwrap();
    let q = |v: &StepPath| StepPath::new(v.values.iter().map(|x| (x * 2f64.powi(30)).round() / 2f64.powi(30)).collect());
    for k in 0..50 {
        let mut rng = SeedStream::new(608).rng(k);
        let p = sim.paths(1.5, -7.0, &mut rng);
        let mut p = LimitPaths {
            w_eps: q(&p.w_eps),
            w_gy: q(&p.w_gy),
            w_gx: q(&p.w_gx),
        };
        let before = stats_from_paths(&p);
        let n = p.w_gy.steps() as f64;
        for (t, v) in p.w_gy.values.iter_mut().enumerate() {
            *v += 0.375 * t as f64 / n;
        }
        for (t, v) in p.w_gx.values.iter_mut().enumerate() {
            *v -= 1.25 * t as f64 / n;
        }
        ok &= stats_from_paths(&p) == before;
    }
    notes.push("linear drift before bridging".to_string());
    r.line("6 invariance suite (exact)", ok, notes.join(", "), started);
}

fn martingale(r: &mut Report) {
    let started = Instant::now();
    let cov = LimitCov::gaussian(-0.5).unwrap();
    let j = pseudo_info(&ReferenceScore::gaussian(-0.5).unwrap());
    let sim = LimitSimulator::new(cov, 1000).unwrap();
    let draws = simulate_many(&sim, 0.0, 0.0, 100_000, SeedStream::new(707));
    let mut ok = true;
    let mut parts = Vec::new();
    for (b, c) in [(1.0, 0.0), (0.0, -5.0), (2.0, -10.0)] {
        let m = mean(&draws.iter().map(|s| log_lr(b, c, s, &j).exp()).collect::<Vec<_>>());
        ok &= (0.97..=1.03).contains(&m);
        parts.push(format!("(b={b}, c={c}): {m:.4}"));
    }
    r.line("7 E[exp(log_lr)] under the null in [0.97, 1.03]", ok, parts.join(", "), started);
}

/// Direct-summation statistics for a short sample.
fn oracle_stats(sample: &Sample, sigma_x: f64, rho: f64) -> SuffStats {
    let t = sample.len();
    let tf = t as f64;
    let rank = |v: &[f64], i: usize| 1 + (0..v.len()).filter(|&j| v[j] < v[i] || (v[j] == v[i] && j < i)).count();
    let mut dx = Vec::new();
    let mut prev = sample.x0;
    for &x in &sample.x {
        dx.push(x - prev);
        prev = x;
    }
    let d = 1.0 - rho * rho;
    let mut ly = Vec::new();
    let mut lx = Vec::new();
    for i in 0..t {
        let sy = norm_inv(rank(&sample.y, i) as f64 / (tf + 1.0));
        let sx = norm_inv(rank(&dx, i) as f64 / (tf + 1.0));
        ly.push((sy - rho * sx) / d);
        lx.push((sx - rho * sy) / d);
    }
    let (my, mx) = (ly.iter().sum::<f64>() / tf, lx.iter().sum::<f64>() / tf);
    // W at grid points 0..T.
    let w: Vec<f64> = std::iter::once(0.0)
        .chain(sample.x.iter().map(|x| (x - sample.x0) / (sigma_x * tf.sqrt())))
        .collect();
    let mut s1 = 0.0;
    let mut ix = 0.0;
    for k in 1..=t {
        s1 += w[k - 1] * (ly[k - 1] - my) / tf.sqrt();
        ix += w[k - 1] * (lx[k - 1] - mx) / tf.sqrt();
    }
    let wbar = w[..t].iter().sum::<f64>() / tf;
    let w2 = w[..t].iter().map(|v| v * v).sum::<f64>() / tf;
    SuffStats {
        s1,
        s2: ix + w[t] * wbar,
        s3: w2 - wbar * wbar,
        s4: w2,
    }
}

fn micro_oracle(r: &mut Report) {
    let started = Instant::now();
    let mut rng = SeedStream::new(808).rng(0);
    let mut max_err: f64 = 0.0;
    for _ in 0..2000 {
        let t = rng.random_range(2..=6);
        let y: Vec<f64> = (0..t).map(|_| rng.random_range(-3.0..3.0)).collect();
        let x: Vec<f64> = (0..t).map(|_| rng.random_range(-3.0..3.0)).collect();
        let sample = Sample::new(y, x, rng.random_range(-1.0..1.0)).unwrap();
        let sigma_x = rng.random_range(0.5..2.0);
        let rho = rng.random_range(-0.9..0.9);
        let reference = ReferenceScore::gaussian(rho).unwrap();
        let (r_y, r_x) = component_ranks(&sample).unwrap();
        let (by, bx) = rank_score_bridge(&r_y, &r_x, &reference).unwrap();
        let w = partial_sum_eps(&sample, sigma_x).unwrap();
        let got = sufficient_stats(&w, &by, &bx).unwrap();
        let want = oracle_stats(&sample, sigma_x, rho);
        for (a, b) in [(got.s1, want.s1), (got.s2, want.s2), (got.s3, want.s3), (got.s4, want.s4)] {
            max_err = max_err.max((a - b).abs());
        }
    }
    let mut ranks_ok = true;
    for _ in 0..10_000 {
        let n = rng.random_range(1..40);
        // Small integer values force ties.
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-5..5) as f64).collect();
        let got = ranks(&v);
        let want: Vec<usize> = (0..n)
            .map(|i| 1 + (0..n).filter(|&j| v[j] < v[i] || (v[j] == v[i] && j < i)).count())
            .collect();
        ranks_ok &= got == want;
    }
    r.line(
        "8 micro-scale oracle (T <= 6 stats within 1e-12, ranks on 10^4 inputs)",
        max_err <= 1e-12 && ranks_ok,
        format!("max |stat error| {max_err:.2e}, ranks {}", if ranks_ok { "match" } else { "differ" }),
        started,
    );
}

fn garch_smoke(r: &mut Report, garch: &AlfdCalibration) {
    let started = Instant::now();
    let innovations = InnovationSpec {
        family: InnovationFamily::Gaussian,
        rho: -0.5,
        garch: Some(GarchSpec {
            omega: 1.0,
            alpha1: 0.07,
            beta1: 0.92,
            applies_to: GarchTarget::YOnly,
            square_lagged: true,
        }),
    };
    let cs = [0.0, -25.0, -100.0];
    let cfg = experiment(500, 500, &cs, &[0.0], innovations, "gaussian", 909);
    let table = run_power_experiment(&cfg, garch, garch).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for &c in &cs {
        let (wz, emw) = (rate(&table, TestName::Wz, c, 0.0), rate(&table, TestName::Emw, c, 0.0));
        ok &= (0.02..=0.09).contains(&wz) && (0.02..=0.09).contains(&emw);
        parts.push(format!("c={c}: {wz:.3}/{emw:.3}"));
    }
    r.line("GARCH smoke (y-only GARCH, Gaussian, size in [0.02, 0.09])", ok, parts.join(", "), started);
}

fn main() {
    let mut report = Report { failures: Vec::new() };
    let gauss = calibration("gaussian_rho-0.5.json");
    let t3 = calibration("t3_t3_rho-0.5.json");
    let garch = calibration("gaussian_garch_y_rho-0.5.json");

    size_control(&mut report, &gauss);
    t3_power_gain(&mut report, &t3, &gauss);
    gaussian_equivalence(&mut report, &gauss);
    certificates(&mut report, &[("gaussian", &gauss), ("t3", &t3), ("garch", &garch)]);
    limit_degeneration(&mut report);
    invariance(&mut report, &gauss);
    martingale(&mut report);
    micro_oracle(&mut report);
    garch_smoke(&mut report, &garch);

    if report.failures.is_empty() {
        println!("all acceptance criteria passed");
        return;
    }
    println!("{} criteria failed: {}", report.failures.len(), report.failures.join("; "));
    // Set ACCEPTANCE_STRICT=1 to turn failed criteria into a failing exit status.
    if std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}
