//! Exhaustive placement oracle shared by the integration tests.

use std::collections::HashMap;

use cuckoo_paging::graph::{Config, CuckooGraph, KeyChoices};
use cuckoo_paging::Rng;

/// Best (placed, backup) over all legal partial assignments, maximizing
/// placed keys first and minimizing backup keys second.
pub fn brute_force(graph: &CuckooGraph) -> (u32, u32) {
    fn go(
        graph: &CuckooGraph,
        i: usize,
        loads: &mut Vec<u32>,
        memo: &mut HashMap<(usize, Vec<u32>), (u32, i64)>,
    ) -> (u32, i64) {
        if i == graph.len() {
            return (0, 0);
        }
        if let Some(&v) = memo.get(&(i, loads.clone())) {
            return v;
        }
        let ell = graph.config().ell;
        // Leave key i out.
        let mut best = go(graph, i + 1, loads, memo);
        let key = &graph.keys()[i];
        for (slot, &y) in key.cells().iter().enumerate() {
            let y = y as usize;
            if loads[y] < ell {
                loads[y] += 1;
                let (placed, neg_backup) = go(graph, i + 1, loads, memo);
                loads[y] -= 1;
                let cand = (
                    placed + 1,
                    neg_backup - i64::from(key.is_backup_slot(slot)),
                );
                best = best.max(cand);
            }
        }
        memo.insert((i, loads.clone()), best);
        best
    }
    let mut loads = vec![0u32; graph.config().m as usize];
    let (placed, neg_backup) = go(graph, 0, &mut loads, &mut HashMap::new());
    (placed, (-neg_backup) as u32)
}

/// A random small configuration and `n` keys drawn from it.
pub fn small_instance(seed: u32) -> CuckooGraph {
    let mut rng = Rng::new(seed);
    loop {
        let s = 1 + rng.uniform_below(6);
        let t = 1 + rng.uniform_below(12 / s);
        let m = s * t;
        let kb = if t >= 2 { rng.uniform_below(2) } else { 0 };
        let kp = 1 + rng.uniform_below(2.min(s));
        let ell = 1 + rng.uniform_below(2);
        let Ok(config) = Config::new(1.0, m, s, kp, kb, ell) else {
            continue;
        };
        let n = 1 + rng.uniform_below(10);
        let keys = (0..n).map(|_| KeyChoices::draw(&config, &mut rng)).collect();
        return CuckooGraph::from_keys(config, keys).unwrap();
    }
}
