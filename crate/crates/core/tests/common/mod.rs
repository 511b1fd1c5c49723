//! Random instances and reference computations shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use energy_pomdp::model::Pomdp;
use energy_pomdp::product::ProductPomdp;
use energy_pomdp::qualitative::{compute_allowed, qualitative_answer, Feasibility, SupportGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct Shape {
    pub states: usize,
    pub actions: usize,
    /// `None` gives every state its own observation.
    pub observations: Option<usize>,
    pub capacity: u32,
    pub initial_states: usize,
}

/// Random model: action 0 always has a chance to move one state closer to the
/// last state (the target), the other successors are arbitrary.
pub fn random_pomdp(rng: &mut ChaCha8Rng, shape: &Shape) -> Pomdp {
    let n = shape.states;
    let na = shape.actions;
    let mut transitions = Vec::with_capacity(n);
    for s in 0..n {
        let mut row = Vec::with_capacity(na);
        for a in 0..na {
            let k = rng.random_range(1..=3usize);
            let mut succ: Vec<usize> = (0..k).map(|_| rng.random_range(0..n)).collect();
            if a == 0 {
                succ.push((s + 1).min(n - 1));
            }
            let mut weights: Vec<f64> = succ.iter().map(|_| rng.random_range(1..=4) as f64).collect();
            if a == 0 {
                *weights.last_mut().unwrap() += 4.0;
            }
            let total: f64 = weights.iter().sum();
            let mut dist: Vec<(usize, f64)> = succ.into_iter().zip(weights.into_iter().map(|w| w / total)).collect();
            dist.sort_by_key(|&(t, _)| t);
            let mut merged: Vec<(usize, f64)> = Vec::new();
            for (t, p) in dist {
                match merged.last_mut() {
                    Some((u, q)) if *u == t => *q += p,
                    _ => merged.push((t, p)),
                }
            }
            row.push(merged);
        }
        transitions.push(row);
    }
    let (num_obs, observation): (usize, Vec<usize>) = match shape.observations {
        None => (n, (0..n).collect()),
        Some(k) => {
            // The target gets its own observation; the rest share k - 1.
            let mut obs: Vec<usize> = (0..n - 1).map(|_| rng.random_range(0..k - 1)).collect();
            obs.push(k - 1);
            (k, obs)
        }
    };
    let cap = shape.capacity as i64;
    let reload: Vec<bool> = (0..num_obs).map(|z| z % 4 == 1).collect();
    let energy = (0..na)
        .map(|_| {
            (0..num_obs)
                .map(|z| if reload[z] { cap } else { [-1, -1, -1, -2, 0][rng.random_range(0..5usize)] })
                .collect()
        })
        .collect();
    let m = shape.initial_states.min(n - 1).max(1);
    let initial = (0..m).map(|s| (s, 1.0 / m as f64)).collect();
    Pomdp {
        states: (0..n).map(|s| format!("s{s}")).collect(),
        actions: (0..na).map(|a| format!("a{a}")).collect(),
        observations: (0..num_obs).map(|z| format!("z{z}")).collect(),
        transitions,
        observation,
        initial,
        cost: (0..n).map(|_| (0..na).map(|_| rng.random_range(1..=4)).collect()).collect(),
        energy,
        capacity: shape.capacity,
        targets: (0..n).map(|s| s == n - 1).collect(),
    }
}

pub fn is_feasible(model: &Pomdp) -> bool {
    let p = ProductPomdp::for_model(Arc::new(model.clone()));
    let g = SupportGraph::build(&p).unwrap();
    let a = compute_allowed(&g);
    qualitative_answer(&g, &a) == Feasibility::Feasible
}

/// First feasible instance produced from consecutive seeds.
pub fn feasible_pomdp(seed: u64, shape: &Shape) -> Pomdp {
    for k in 0..10_000 {
        let m = random_pomdp(&mut rng(seed.wrapping_mul(7919).wrapping_add(k)), shape);
        assert!(m.validate().is_empty());
        if is_feasible(&m) {
            return m;
        }
    }
    panic!("no feasible instance for seed {seed}");
}
