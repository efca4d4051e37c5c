//! Seeded synthetic networks standing in for empirical data.

use rand::Rng as _;

use crate::error::Result;
use crate::graph::{dyad_count, dyads, Graph};
use crate::rng;
use crate::sampler::{self, Proposal, SamplerConfig};
use crate::stats::ModelSpec;

/// Structural parameters giving sparse, clustered graphs around 30 vertices.
pub const CLUSTERED_THETA: [f64; 3] = [0.0, -1.2, 1.2];

/// Last state of a long free chain for `spec`.
pub fn ergm_draw(spec: &ModelSpec, n: usize, seed: u64, burn_in: usize) -> Result<Graph> {
    let cfg = SamplerConfig { burn_in, thin: 1, n_draws: 1, seed, proposal: Proposal::Toggle, keep_graphs: false };
    Ok(sampler::sample_free(spec, n, &cfg, None)?.last)
}

/// Draw from the edges, alternating k-star and GWESP model at [`CLUSTERED_THETA`].
pub fn clustered(n: usize, seed: u64) -> Result<Graph> {
    let spec = ModelSpec::structural().with_theta(&CLUSTERED_THETA)?;
    ergm_draw(&spec, n, seed, 1000 * dyad_count(n).max(1))
}

/// Independent dyads with probability `p`.
pub fn bernoulli(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = rng::rng(seed);
    let mut g = Graph::empty(n);
    for (i, j) in dyads(n) {
        if rng.random::<f64>() < p {
            g.set(i, j, true);
        }
    }
    g
}

/// `hubs` vertices tied to each other vertex with probability `p_hub` on top
/// of a Bernoulli(`p_base`) background.
pub fn hub_heavy(n: usize, hubs: usize, p_hub: f64, p_base: f64, seed: u64) -> Graph {
    let mut rng = rng::rng(seed);
    let mut g = Graph::empty(n);
    for (i, j) in dyads(n) {
        let p = if i < hubs { p_hub } else { p_base };
        if rng.random::<f64>() < p {
            g.set(i, j, true);
        }
    }
    g
}
