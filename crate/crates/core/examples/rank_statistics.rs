//! From a sample to ranks, bridged rank-score processes and the four
//! sufficient statistics, with the residual-based nuisance estimates.

use rankpred::dgp::{InnovationFamily, InnovationSampler, InnovationSpec};
use rankpred::harness::design::{simulate_design, ModelSpec};
use rankpred::processes::{component_ranks, moment_estimates, normal_scores_correlation, partial_sum_eps, ranks, rank_score_bridge, residual_nuisance, sufficient_stats};
use rankpred::reference::{Marginal, ReferenceScore};
use rankpred::rng::SeedStream;

fn main() -> rankpred::Result<()> {
    let spec = InnovationSpec { family: InnovationFamily::StudentT { nu: 3.0 }, rho: -0.5, garch: None };
    let sampler = InnovationSampler::new(&spec)?;
    let sample = simulate_design(0.0, -10.0, 400, &ModelSpec::default(), &sampler, &mut SeedStream::new(5).rng(0))?;

    let nuis = residual_nuisance(&sample)?;
    let (r_y, r_x) = component_ranks(&sample)?;
    let rho_g = normal_scores_correlation(&r_y, &ranks(&nuis.eps_x_hat));
    println!("residual correlation {:.3}, normal-scores correlation {rho_g:.3}, sigma_x_hat {:.3}", nuis.rho_g_hat, nuis.sigma_x_hat);

    let t3 = Marginal::StudentT { nu: 3.0 };
    let reference = ReferenceScore::standardized(t3.clone(), t3, rho_g)?;
    let w = partial_sum_eps(&sample, nuis.sigma_x_hat)?;
    let (by, bx) = rank_score_bridge(&r_y, &r_x, &reference)?;
    println!("bridge endpoints: {} {}", by.end(), bx.end());
    let stats = sufficient_stats(&w, &by, &bx)?;
    println!("S = {stats:?}");

    let (j_g, sigma_eg) = moment_estimates(&nuis.eps_x_hat, &r_y, &r_x, &reference)?;
    println!("J_g_hat = {j_g:?}");
    println!("sigma_eg_hat = {sigma_eg:?}");
    Ok(())
}
