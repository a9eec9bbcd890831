//! DSM/graph round trip on random matrices. Shared with the acceptance suite.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use workbench_core::{Interaction, InteractionKind, Model, Uid};
use workbench_synth::{build_dsm, dsm_to_graph, graph_to_dsm, Dsm};

pub fn random_dsm(rng: &mut ChaCha8Rng, max_components: usize) -> Dsm {
    let n = rng.gen_range(1..=max_components);
    let mut order: Vec<Uid> = (0..n).map(|i| Uid::new("cmp", i as u64).unwrap()).collect();
    order.shuffle(rng);
    let mut d = Dsm::new(order.clone());
    let density = rng.gen_range(0.0..0.5);
    for r in &order {
        for c in &order {
            if r == c || !rng.gen_bool(density) {
                continue;
            }
            for k in InteractionKind::ALL {
                if rng.gen_bool(0.4) {
                    d.insert(r, c, k);
                }
            }
        }
    }
    d.cells.retain(|_, k| !k.is_empty());
    d
}

fn model_with(order: &[Uid], interactions: Vec<Interaction>) -> Result<Model, String> {
    let mut m = Model::new();
    let mut sorted = order.to_vec();
    sorted.sort();
    for (i, u) in sorted.iter().enumerate() {
        let got = m.add_component(&format!("C{i}"), None).map_err(|e| e.to_string())?;
        if &got != u {
            return Err(format!("allocated {got}, expected {u}"));
        }
    }
    m.edges.interactions = interactions;
    Ok(m)
}

/// DSM -> graph -> DSM must be the identity, directly and through a stored
/// model, down to the serialized bytes.
pub fn check_dsm_round_trip(seed: u64, trials: usize, max_components: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nonempty = 0;
    for t in 0..trials {
        let d = random_dsm(&mut rng, max_components);
        let (nodes, edges) = dsm_to_graph(&d).map_err(|e| format!("trial {t}: {e}"))?;
        if edges.iter().any(|i| i.a == i.b) {
            return Err(format!("trial {t}: self interaction"));
        }
        let back = build_dsm(&nodes, &edges).map_err(|e| format!("trial {t}: {e}"))?;
        if back != d {
            return Err(format!("trial {t}: build_dsm differs"));
        }
        let m = model_with(&nodes, edges)?;
        let via_model = graph_to_dsm(&m, Some(&d.order)).map_err(|e| format!("trial {t}: {e}"))?;
        if via_model != d {
            return Err(format!("trial {t}: graph_to_dsm differs"));
        }
        if serde_json::to_vec(&via_model).unwrap() != serde_json::to_vec(&d).unwrap() {
            return Err(format!("trial {t}: serialized forms differ"));
        }
        nonempty += usize::from(!d.cells.is_empty());
    }
    if nonempty * 4 < trials * 3 {
        return Err(format!("only {nonempty}/{trials} matrices had cells"));
    }
    Ok(())
}
