//! Reference scores, Fisher information and the pseudo-information `J_p`
//! for the Gaussian, Student-t and kernel-estimated references.

use rankpred::dgp::{draw_innovations, InnovationFamily, InnovationSpec};
use rankpred::reference::{estimate_reference_kde, marginal_score, pseudo_info, Marginal, ReferenceScore};

fn main() -> rankpred::Result<()> {
    let t3 = Marginal::StudentT { nu: 3.0 };
    println!("{:>6} {:>10} {:>10}", "u", "gaussian", "t3");
    for u in [0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99] {
        println!("{u:>6} {:>10.4} {:>10.4}", marginal_score(&Marginal::Gaussian, u)?, marginal_score(&t3, u)?);
    }

    // Unit-scale information versus the variance-standardized scores used by the test.
    let unit = ReferenceScore::new(t3.clone(), t3.clone(), -0.5)?;
    let std = ReferenceScore::standardized(t3.clone(), t3, -0.5)?;
    println!("t3 information: unit scale {:.4}, unit variance {:.4}", unit.info_y(), std.info_y());
    println!("J_p (unit variance t3, rho_g = -0.5): {:?}", pseudo_info(&std).j);

    let spec = InnovationSpec { family: InnovationFamily::StudentT { nu: 3.0 }, rho: 0.0, garch: None };
    let e: Vec<f64> = draw_innovations(&spec, 20_000, 3)?.iter().map(|v| v[0]).collect();
    let kde = estimate_reference_kde(&e)?;
    for x in [0.0, 1.0, 3.0, 6.0] {
        println!("x = {x}: kde score {:.3}, t3 score {:.3}, gaussian score {x}", kde.score_x(x), Marginal::StudentT { nu: 3.0 }.score_x(x));
    }
    Ok(())
}
