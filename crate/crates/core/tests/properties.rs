mod common;

use std::collections::HashMap;
use std::sync::Arc;

use energy_pomdp::dtree::{learn_tree, objective, prune_tree, split_gain, Criterion, LearnOptions, Node};
use energy_pomdp::model::{determinize_observations, Pomdp, RawPomdp};
use energy_pomdp::parser::{emit_model, emit_raw_model, parse_model, parse_pomdp, ParsedModel, TrainingSet};
use energy_pomdp::product::{energy_update, BaseRun, ProductPomdp, ProductRun};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use common::Shape;

fn shape(states: usize, actions: usize, obs: Option<usize>, cap: u32) -> Shape {
    Shape { states, actions, observations: obs, capacity: cap, initial_states: 2.min(states) }
}

fn random_raw(rng: &mut ChaCha8Rng, states: usize, actions: usize, obs: usize) -> RawPomdp {
    let base = common::random_pomdp(rng, &shape(states, actions, Some(obs), 0));
    let observation = (0..states)
        .map(|_| {
            (0..actions)
                .map(|_| {
                    let mut w: Vec<(usize, f64)> = (0..obs).map(|z| (z, rng.random_range(0..3) as f64)).collect();
                    if w.iter().all(|&(_, x)| x == 0.0) {
                        w[0].1 = 1.0;
                    }
                    let total: f64 = w.iter().map(|&(_, x)| x).sum();
                    w.into_iter().filter(|&(_, x)| x > 0.0).map(|(z, x)| (z, x / total)).collect()
                })
                .collect()
        })
        .collect();
    RawPomdp {
        states: base.states,
        actions: base.actions,
        observations: base.observations,
        transitions: base.transitions,
        observation,
        initial: base.initial,
        cost: base.cost,
        energy: base.energy,
        capacity: 0,
        targets: base.targets,
    }
}

/// Probability that playing `actions` from the initial distribution produces
/// `observations`, in the raw model.
fn raw_sequence_probability(m: &RawPomdp, actions: &[usize], observations: &[usize]) -> f64 {
    let mut mass: Vec<f64> = vec![0.0; m.states.len()];
    for &(s, p) in &m.initial {
        mass[s] += p;
    }
    for (&a, &z) in actions.iter().zip(observations) {
        let mut next = vec![0.0; mass.len()];
        for (s, &w) in mass.iter().enumerate() {
            for &(t, p) in &m.transitions[s][a] {
                let q: f64 = m.observation[t][a].iter().filter(|&&(y, _)| y == z).map(|&(_, q)| q).sum();
                next[t] += w * p * q;
            }
        }
        mass = next;
    }
    mass.iter().sum()
}

fn det_sequence_probability(m: &Pomdp, actions: &[usize], observations: &[usize]) -> f64 {
    let mut mass: Vec<f64> = vec![0.0; m.num_states()];
    for &(s, p) in &m.initial {
        mass[s] += p;
    }
    for (&a, &z) in actions.iter().zip(observations) {
        let mut next = vec![0.0; mass.len()];
        for (s, &w) in mass.iter().enumerate() {
            for &(t, p) in &m.transitions[s][a] {
                if m.observation[t] == z {
                    next[t] += w * p;
                }
            }
        }
        mass = next;
    }
    mass.iter().sum()
}

fn sample(rng: &mut ChaCha8Rng, dist: &[(usize, f64)]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(i, p) in dist {
        acc += p;
        if u < acc {
            return i;
        }
    }
    dist.last().unwrap().0
}

fn random_training_set(rng: &mut ChaCha8Rng, rows: usize, features: usize, consistent: bool) -> TrainingSet {
    let mut labels: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut set = TrainingSet::new((0..features).map(|i| format!("f{i}")).collect());
    for _ in 0..rows {
        let f: Vec<i64> = (0..features).map(|_| rng.random_range(0..5)).collect();
        let label = if consistent {
            *labels.entry(f.clone()).or_insert_with(|| rng.random_range(0..3))
        } else {
            rng.random_range(0..3)
        };
        set.records.push((f, label));
    }
    set
}

fn class_counts(records: &[&(Vec<i64>, usize)]) -> Vec<u64> {
    let mut c = vec![0u64; 3];
    for (_, a) in records {
        c[*a] += 1;
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn emitted_models_parse_back(seed in any::<u64>(), states in 2usize..8, actions in 1usize..4, cap in 0u32..6) {
        let mut rng = common::rng(seed);
        let m = common::random_pomdp(&mut rng, &shape(states, actions, Some(3), cap));
        let back = parse_pomdp(&emit_model(&m)).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn emitted_raw_models_parse_back(seed in any::<u64>(), states in 2usize..6, actions in 1usize..3) {
        let mut rng = common::rng(seed);
        let m = random_raw(&mut rng, states, actions, 3);
        match parse_model(&emit_raw_model(&m)).unwrap() {
            ParsedModel::Probabilistic(back) => prop_assert_eq!(back, m),
            ParsedModel::Deterministic(back) => prop_assert_eq!(back, determinize_observations(&m)),
        }
    }

    #[test]
    fn determinization_preserves_observation_sequences(seed in any::<u64>(), states in 2usize..5, actions in 1usize..3) {
        let mut rng = common::rng(seed);
        let raw = random_raw(&mut rng, states, actions, 2);
        let det = determinize_observations(&raw);
        prop_assert!(det.validate().is_empty());
        let init = det.observations.len() - 1;
        prop_assert!(det.initial.iter().all(|&(s, _)| det.observation[s] == init) || raw.deterministic_observations().is_some());
        for len in 0..=3usize {
            let combos = (actions * 2).pow(len as u32);
            for mut code in 0..combos {
                let mut acts = Vec::new();
                let mut obs = Vec::new();
                for _ in 0..len {
                    acts.push(code % actions);
                    code /= actions;
                    obs.push(code % 2);
                    code /= 2;
                }
                let p = raw_sequence_probability(&raw, &acts, &obs);
                let q = det_sequence_probability(&det, &acts, &obs);
                prop_assert!((p - q).abs() < 1e-12, "{:?}/{:?}: {} vs {}", acts, obs, p, q);
            }
        }
    }

    #[test]
    fn product_runs_track_base_runs(seed in any::<u64>(), states in 3usize..10, cap in 1u32..6) {
        let mut rng = common::rng(seed);
        let m = common::random_pomdp(&mut rng, &shape(states, 2, Some(3), cap));
        let p = ProductPomdp::build(Arc::new(m.clone())).unwrap();
        for _ in 0..20 {
            // Drive the base model and the product with the same draws.
            let s0 = sample(&mut rng, &m.initial);
            let mut base = BaseRun { initial: s0, steps: Vec::new() };
            let mut x = p.state_of(s0, cap).unwrap();
            let mut run = ProductRun { initial: x, steps: Vec::new() };
            let (mut s, mut level) = (s0, cap as i64);
            for _ in 0..30 {
                if m.targets[s] {
                    break;
                }
                let a = rng.random_range(0..2usize);
                level = energy_update(&m, s, a, level as u32);
                let succ = p.successors(x, a);
                if level <= 0 {
                    prop_assert_eq!(succ, &[(p.sink.unwrap(), 1.0)][..]);
                    break;
                }
                // Same successor distribution, relabelled with the new level.
                let mapped: Vec<(usize, f64)> =
                    m.transitions[s][a].iter().map(|&(t, q)| (p.state_of(t, level as u32).unwrap(), q)).collect();
                let mut expect = mapped.clone();
                expect.sort_by_key(|&(i, _)| i);
                let mut got = succ.to_vec();
                got.sort_by_key(|&(i, _)| i);
                prop_assert_eq!(got, expect);
                let k = rng.random_range(0..mapped.len());
                let (t, y) = (m.transitions[s][a][k].0, mapped[k].0);
                base.steps.push((a, t));
                run.steps.push((a, y));
                prop_assert_eq!(p.observation[y], m.observation[t]);
                s = t;
                x = y;
            }
            prop_assert_eq!(&p.lift_run(&base).unwrap(), &run);
            let (projected, _) = p.project_run(&run).unwrap();
            prop_assert_eq!(projected, base);
        }
    }

    #[test]
    fn chosen_split_maximizes_gain(seed in any::<u64>(), gini in any::<bool>()) {
        let criterion = if gini { Criterion::Gini } else { Criterion::InfoGain };
        let mut rng = common::rng(seed);
        let data = random_training_set(&mut rng, 40, 3, false);
        let all: Vec<&(Vec<i64>, usize)> = data.records.iter().collect();
        let parent = class_counts(&all);
        let mut best = f64::NEG_INFINITY;
        for f in 0..3 {
            for t in 0..4 {
                let left: Vec<_> = all.iter().copied().filter(|r| r.0[f] <= t).collect();
                if left.is_empty() || left.len() == all.len() {
                    continue;
                }
                let g = split_gain(criterion, &parent, &class_counts(&left));
                prop_assert!(g >= -1e-12);
                best = best.max(g);
            }
        }
        let tree = learn_tree(&data, &LearnOptions { criterion, min_leaf: 1, max_depth: Some(1) }).unwrap();
        if let Node::Split { feature, threshold, .. } = &tree.root {
            let left: Vec<_> = all.iter().copied().filter(|r| (r.0[*feature] as f64) <= *threshold).collect();
            let g = split_gain(criterion, &parent, &class_counts(&left));
            prop_assert!((g - best).abs() < 1e-12, "chosen {} best {}", g, best);
        } else {
            prop_assert!(parent.iter().filter(|&&c| c > 0).count() <= 1 || best == f64::NEG_INFINITY);
        }
    }

    #[test]
    fn pruning_never_increases_objective(seed in any::<u64>(), alpha in 0.0f64..20.0) {
        let mut rng = common::rng(seed);
        let data = random_training_set(&mut rng, 60, 3, false);
        let tree = learn_tree(&data, &LearnOptions { criterion: Criterion::Gini, min_leaf: 2, max_depth: None }).unwrap();
        let pruned = prune_tree(&tree, &data, alpha);
        prop_assert!(objective(&pruned, &data, alpha) <= objective(&tree, &data, alpha) + 1e-9);
        prop_assert!(pruned.size() <= tree.size());
    }

    #[test]
    fn unpruned_trees_fit_consistent_data(seed in any::<u64>(), gini in any::<bool>()) {
        let criterion = if gini { Criterion::Gini } else { Criterion::InfoGain };
        let mut rng = common::rng(seed);
        let data = random_training_set(&mut rng, 80, 3, true);
        let tree = learn_tree(&data, &LearnOptions { criterion, min_leaf: 1, max_depth: None }).unwrap();
        for (f, a) in &data.records {
            prop_assert_eq!(tree.eval(f).unwrap(), *a);
        }
    }
}
