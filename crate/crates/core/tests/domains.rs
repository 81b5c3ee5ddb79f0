use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spi_core::domains::energy::{price_chain, EnergyConfig};
use spi_core::domains::grid::{column_distributions, grid_kernel, simulate_transition, GridConfig};
use spi_core::domains::random::random_mdp;
use spi_core::mdp::{evaluate_return, Policy};
use spi_core::oracle::{grid_sweep_response, vertex_enumeration_response};
use spi_core::verify::random_triple;

const GRID_ROLLOUTS: usize = 1_000_000;

#[test]
fn grid_kernel_matches_simulated_transitions() {
    let config = GridConfig::with_seed(7);
    let kernel = grid_kernel(&config).unwrap();
    let dists = column_distributions(&config);
    let n = config.n_states();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut entries, mut beyond3, mut beyond5) = (0usize, 0usize, 0usize);
    let mut counts = vec![0u64; n];
    for x in 0..n {
        for a in 0..4 {
            counts.iter_mut().for_each(|c| *c = 0);
            for _ in 0..GRID_ROLLOUTS {
                counts[simulate_transition(&config, &dists, x, a, &mut rng)] += 1;
            }
            for (y, &c) in counts.iter().enumerate() {
                let p = kernel.row(x, a)[y];
                if p == 0.0 {
                    assert_eq!(c, 0, "impossible successor {y} of ({x}, {a}) was reached");
                    continue;
                }
                entries += 1;
                let freq = c as f64 / GRID_ROLLOUTS as f64;
                let se = (p * (1.0 - p) / GRID_ROLLOUTS as f64).sqrt().max(1e-12);
                let z = (freq - p).abs() / se;
                beyond3 += usize::from(z > 3.0);
                beyond5 += usize::from(z > 5.0);
            }
        }
    }
    assert_eq!(beyond5, 0, "entries beyond 5 SE");
    assert!(
        beyond3 as f64 <= 0.01 * entries as f64,
        "{beyond3} of {entries} entries beyond 3 SE"
    );
}

#[test]
fn exact_evaluation_agrees_with_rollouts() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gamma = 0.8;
    let mdp = random_mdp(6, 3, gamma, &mut rng).unwrap();
    let pi = Policy::uniform(6, 3);
    let exact = evaluate_return(&mdp, &pi).unwrap();
    // truncate once the tail weight is below 1e-8
    let horizon = (1e-8f64.ln() / gamma.ln()).ceil() as usize;
    let rollouts = 100_000;
    let draw = |dist: &[f64], rng: &mut ChaCha8Rng| {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in dist.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        dist.len() - 1
    };
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..rollouts {
        let mut x = draw(mdp.initial(), &mut rng);
        let (mut g, mut disc) = (0.0, 1.0);
        for _ in 0..horizon {
            let a = draw(pi.row(x), &mut rng);
            g += disc * mdp.reward(x, a);
            disc *= gamma;
            x = draw(mdp.transition().row(x, a), &mut rng);
        }
        sum += g;
        sq += g * g;
    }
    let mean = sum / rollouts as f64;
    let se = ((sq / rollouts as f64 - mean * mean) / rollouts as f64).sqrt();
    assert!(
        (mean - exact).abs() <= 3.0 * se,
        "rollout mean {mean} vs exact {exact} (se {se})"
    );
}

#[test]
fn price_chain_drift_is_small_away_from_edges() {
    let config = EnergyConfig::default();
    let chain = price_chain(&config).unwrap();
    let levels = config.price_levels();
    let drift: Vec<f64> = (0..levels.len())
        .map(|i| {
            chain
                .row(i, 0)
                .iter()
                .zip(&levels)
                .map(|(p, l)| p * l)
                .sum::<f64>()
                - levels[i]
        })
        .collect();
    for (i, d) in drift.iter().enumerate() {
        eprintln!(
            "price level {:.1}: expected next-step drift {d:+.4}",
            levels[i]
        );
    }
    // interior levels are nearly a martingale; edges are pushed inward
    for d in &drift[3..7] {
        assert!(d.abs() < 0.05, "{d}");
    }
    assert!(drift[0] > 0.0 && drift[levels.len() - 1] < 0.0);
}

#[test]
fn grid_sweep_agrees_with_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut checked = 0;
    while checked < 200 {
        let (p, b, v) = random_triple(&mut rng);
        if p.len() > 3 {
            continue;
        }
        let exact = vertex_enumeration_response(&p, b, &v).unwrap();
        let swept = grid_sweep_response(&p, b, &v, 0.001).unwrap();
        assert!(swept >= exact - 1e-9, "sweep {swept} below exact {exact}");
        assert!(swept - exact <= 2e-3, "sweep {swept} vs exact {exact}");
        checked += 1;
    }
}
