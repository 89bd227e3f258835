//! Planted graphs with known structure, for demos and sanity checks.
//!
//! Planted links are undirected, so each one is stored as a pair of opposite
//! `RelatedTo` triples, the way a symmetric relation appears in a KB.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::kb::{GraphBuilder, KnowledgeGraph};

fn link(b: &mut GraphBuilder, x: &str, y: &str) -> Result<()> {
    b.add("RelatedTo", x, y, 1.0)?;
    b.add("RelatedTo", y, x, 1.0)
}

/// Two equal clusters of `n / 2` concepts named `c0 .. c{n-1}`; each
/// within-cluster pair is linked with probability `p_in`, cross pairs never.
pub fn two_cluster_graph(n: usize, p_in: f64, seed: u64) -> Result<KnowledgeGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = KnowledgeGraph::builder();
    let names: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    for s in &names {
        b.add_concept(s)?;
    }
    let half = n / 2;
    for i in 0..n {
        for j in i + 1..n {
            if (i < half) == (j < half) && rng.gen_bool(p_in) {
                link(&mut b, &names[i], &names[j])?;
            }
        }
    }
    Ok(b.build())
}

/// `stars` disjoint stars, each a hub `h{k}` linked to `leaves` leaves
/// `s{k}x{j}`. Two leaves of one star are at distance 2; leaves of
/// different stars are disconnected.
pub fn star_forest(stars: usize, leaves: usize) -> Result<KnowledgeGraph> {
    let mut b = KnowledgeGraph::builder();
    for k in 0..stars {
        let hub = format!("h{k}");
        for j in 0..leaves {
            link(&mut b, &hub, &format!("s{k}x{j}"))?;
        }
    }
    Ok(b.build())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clusters_never_cross() {
        let kg = two_cluster_graph(20, 0.5, 1).unwrap();
        assert_eq!(kg.num_concepts(), 20);
        for t in kg.triples() {
            let idx = |c| kg.surface(c)[1..].parse::<usize>().unwrap();
            assert_eq!(idx(t.subject) < 10, idx(t.object) < 10);
        }
        assert_eq!(
            kg.triples(),
            two_cluster_graph(20, 0.5, 1).unwrap().triples()
        );
    }

    #[test]
    fn star_counts() {
        let kg = star_forest(3, 4).unwrap();
        assert_eq!(kg.num_concepts(), 15);
        assert_eq!(kg.num_triples(), 24);
        let hub = kg.require("h0").unwrap();
        assert_eq!(kg.degree(hub), 8);
    }
}
