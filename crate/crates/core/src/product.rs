//! Energy product: folds the resource level into the state.
//!
//! Product states are pairs `(s, n)` with `1 <= n <= cap` plus an absorbing sink
//! entered whenever the resource is exhausted. Only pairs reachable from
//! `{(s, cap) : λ(s) > 0}` are materialized.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::model::{normalize_order, Distribution, Pomdp};

/// Name of the sink observation.
pub const SINK_OBSERVATION: &str = "bottom";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProductState {
    Pair { base: usize, energy: u32 },
    Sink,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProductError {
    #[error("capacity is 0: the energy objective is disabled, build an unconstrained product instead")]
    ZeroCapacity,
    #[error("step {step}: state {to} is not a successor of state {from} under action {action}")]
    InvalidStep { step: usize, from: usize, action: usize, to: usize },
    #[error("step {step}: resource exhausted before reaching a target")]
    EnergyExhausted { step: usize },
    #[error("step {step}: product state {state} is not part of the product")]
    UnknownState { step: usize, state: usize },
    #[error("step {step}: run passes through the sink")]
    SinkInRun { step: usize },
}

/// `min(cap, n + E(a, O(s)))`; values `<= 0` mean exhaustion.
pub fn energy_update(model: &Pomdp, s: usize, a: usize, n: u32) -> i64 {
    let e = model.energy[a][model.observation[s]];
    (n as i64 + e).min(model.capacity as i64)
}

/// Product of a model with its energy objective.
#[derive(Debug, Clone)]
pub struct ProductPomdp {
    pub base: Arc<Pomdp>,
    pub states: Vec<ProductState>,
    /// Faithful transition rows (targets keep their outgoing edges).
    pub transitions: Vec<Vec<Distribution>>,
    pub observation: Vec<usize>,
    pub initial: Distribution,
    pub targets: Vec<bool>,
    pub sink: Option<usize>,
    /// False for the unconstrained wrapper used when capacity is 0.
    pub energy_enabled: bool,
    index: HashMap<(usize, u32), usize>,
    loops: Vec<(usize, f64)>,
}

impl ProductPomdp {
    /// Builds the reachable part of the energy product.
    pub fn build(model: Arc<Pomdp>) -> Result<Self, ProductError> {
        if model.capacity == 0 {
            return Err(ProductError::ZeroCapacity);
        }
        let cap = model.capacity;
        let n_actions = model.num_actions();
        let mut states: Vec<ProductState> = Vec::new();
        let mut index: HashMap<(usize, u32), usize> = HashMap::new();
        let mut sink: Option<usize> = None;
        let mut queue = VecDeque::new();

        let mut intern = |st: ProductState, states: &mut Vec<ProductState>, queue: &mut VecDeque<usize>| -> usize {
            let key = match st {
                ProductState::Pair { base, energy } => (base, energy),
                ProductState::Sink => (usize::MAX, 0),
            };
            if let Some(&i) = index.get(&key) {
                return i;
            }
            states.push(st);
            let i = states.len() - 1;
            index.insert(key, i);
            queue.push_back(i);
            i
        };

        let initial: Distribution = model
            .initial
            .iter()
            .map(|&(s, p)| (intern(ProductState::Pair { base: s, energy: cap }, &mut states, &mut queue), p))
            .collect();

        let mut transitions: Vec<Vec<Distribution>> = Vec::new();
        while let Some(x) = queue.pop_front() {
            let row: Vec<Distribution> = match states[x] {
                ProductState::Sink => {
                    sink = Some(x);
                    vec![vec![(x, 1.0)]; n_actions]
                }
                ProductState::Pair { base, energy } => (0..n_actions)
                    .map(|a| {
                        let next = energy_update(&model, base, a, energy);
                        if next >= 1 {
                            let dist = model.transitions[base][a]
                                .iter()
                                .map(|&(t, p)| {
                                    let y = intern(
                                        ProductState::Pair { base: t, energy: next as u32 },
                                        &mut states,
                                        &mut queue,
                                    );
                                    (y, p)
                                })
                                .collect();
                            normalize_order(dist)
                        } else {
                            vec![(intern(ProductState::Sink, &mut states, &mut queue), 1.0)]
                        }
                    })
                    .collect(),
            };
            debug_assert_eq!(transitions.len(), x);
            transitions.push(row);
        }

        let sink_obs = model.num_observations();
        let observation = states
            .iter()
            .map(|st| match st {
                ProductState::Pair { base, .. } => model.observation[*base],
                ProductState::Sink => sink_obs,
            })
            .collect();
        let targets: Vec<bool> =
            states.iter().map(|st| matches!(st, ProductState::Pair { base, .. } if model.targets[*base])).collect();
        index.remove(&(usize::MAX, 0));
        Ok(ProductPomdp {
            loops: (0..states.len()).map(|i| (i, 1.0)).collect(),
            base: model,
            states,
            transitions,
            observation,
            initial: normalize_order(initial),
            targets,
            sink,
            energy_enabled: true,
            index,
        })
    }

    /// Wraps a model without an energy objective: every state carries energy 0
    /// and there is no sink.
    pub fn unconstrained(model: Arc<Pomdp>) -> Self {
        let n = model.num_states();
        ProductPomdp {
            states: (0..n).map(|s| ProductState::Pair { base: s, energy: 0 }).collect(),
            transitions: model.transitions.clone(),
            observation: model.observation.clone(),
            initial: model.initial.clone(),
            targets: model.targets.clone(),
            sink: None,
            energy_enabled: false,
            index: (0..n).map(|s| ((s, 0), s)).collect(),
            loops: (0..n).map(|i| (i, 1.0)).collect(),
            base: model,
        }
    }

    /// Builds the energy product, or the unconstrained wrapper when capacity is 0.
    pub fn for_model(model: Arc<Pomdp>) -> Self {
        if model.capacity == 0 {
            Self::unconstrained(model)
        } else {
            Self::build(model).expect("capacity checked")
        }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.base.num_actions()
    }

    /// Base observations followed by the sink observation.
    pub fn num_observations(&self) -> usize {
        self.base.num_observations() + 1
    }

    pub fn sink_observation(&self) -> usize {
        self.base.num_observations()
    }

    pub fn capacity(&self) -> u32 {
        self.base.capacity
    }

    pub fn state_of(&self, base: usize, energy: u32) -> Option<usize> {
        self.index.get(&(base, energy)).copied()
    }

    pub fn base_state(&self, x: usize) -> Option<usize> {
        match self.states[x] {
            ProductState::Pair { base, .. } => Some(base),
            ProductState::Sink => None,
        }
    }

    /// Energy component; 0 for the sink.
    pub fn energy(&self, x: usize) -> u32 {
        match self.states[x] {
            ProductState::Pair { energy, .. } => energy,
            ProductState::Sink => 0,
        }
    }

    pub fn is_sink(&self, x: usize) -> bool {
        Some(x) == self.sink
    }

    /// Cost of playing `a` in `x`; the sink costs 1.
    pub fn cost(&self, x: usize, a: usize) -> i64 {
        match self.states[x] {
            ProductState::Pair { base, .. } => self.base.cost[base][a],
            ProductState::Sink => 1,
        }
    }

    /// Successor distribution used by analyses: targets are absorbing.
    pub fn successors(&self, x: usize, a: usize) -> &[(usize, f64)] {
        if self.targets[x] {
            std::slice::from_ref(&self.loops[x])
        } else {
            &self.transitions[x][a]
        }
    }

    pub fn state_name(&self, x: usize) -> String {
        match self.states[x] {
            ProductState::Pair { base, energy } if self.energy_enabled => {
                format!("{}#{}", self.base.states[base], energy)
            }
            ProductState::Pair { base, .. } => self.base.states[base].clone(),
            ProductState::Sink => SINK_OBSERVATION.to_string(),
        }
    }

    /// The product as a plain model (energy disabled), for inspection.
    pub fn to_pomdp(&self) -> Pomdp {
        let mut observations = self.base.observations.clone();
        observations.push(SINK_OBSERVATION.to_string());
        let n_actions = self.num_actions();
        Pomdp {
            states: (0..self.num_states()).map(|x| self.state_name(x)).collect(),
            actions: self.base.actions.clone(),
            energy: vec![vec![0; observations.len()]; n_actions],
            observations,
            transitions: self.transitions.clone(),
            observation: self.observation.clone(),
            initial: self.initial.clone(),
            cost: (0..self.num_states()).map(|x| (0..n_actions).map(|a| self.cost(x, a)).collect()).collect(),
            capacity: 0,
            targets: self.targets.clone(),
        }
    }

    /// Maps a base run to the product, failing at the first step that exhausts
    /// the resource before a target was reached.
    pub fn lift_run(&self, run: &BaseRun) -> Result<ProductRun, ProductError> {
        let cap = self.capacity();
        let mut current =
            self.state_of(run.initial, cap).ok_or(ProductError::UnknownState { step: 0, state: run.initial })?;
        let mut out = ProductRun { initial: current, steps: Vec::with_capacity(run.steps.len()) };
        let mut prev = run.initial;
        let mut level = cap;
        for (i, &(a, s)) in run.steps.iter().enumerate() {
            let step = i + 1;
            if !self.base.transitions[prev][a].iter().any(|&(t, p)| t == s && p > 0.0) {
                return Err(ProductError::InvalidStep { step, from: prev, action: a, to: s });
            }
            let next = energy_update(&self.base, prev, a, level);
            if next <= 0 {
                return Err(ProductError::EnergyExhausted { step });
            }
            level = next as u32;
            current = self.state_of(s, level).ok_or(ProductError::UnknownState { step, state: s })?;
            out.steps.push((a, current));
            prev = s;
        }
        Ok(out)
    }

    /// Splits a product run into the base run and the energy level after each
    /// step (starting with `cap` before the first action).
    pub fn project_run(&self, run: &ProductRun) -> Result<(BaseRun, Vec<u32>), ProductError> {
        let base_of = |step: usize, x: usize| -> Result<(usize, u32), ProductError> {
            match self.states.get(x) {
                Some(ProductState::Pair { base, energy }) => Ok((*base, *energy)),
                Some(ProductState::Sink) => Err(ProductError::SinkInRun { step }),
                None => Err(ProductError::UnknownState { step, state: x }),
            }
        };
        let (s0, n0) = base_of(0, run.initial)?;
        let mut base = BaseRun { initial: s0, steps: Vec::with_capacity(run.steps.len()) };
        let mut levels = vec![n0];
        for (i, &(a, x)) in run.steps.iter().enumerate() {
            let (s, n) = base_of(i + 1, x)?;
            base.steps.push((a, s));
            levels.push(n);
        }
        Ok((base, levels))
    }
}

/// Run prefix `s0, a1, s1, a2, s2, ...` in the base model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseRun {
    pub initial: usize,
    pub steps: Vec<(usize, usize)>,
}

/// Run prefix over product state indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductRun {
    pub initial: usize,
    pub steps: Vec<(usize, usize)>,
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two-state loop where every action costs one unit of energy.
    fn drain(cap: u32) -> Pomdp {
        Pomdp {
            states: vec!["a".into(), "b".into()],
            actions: vec!["go".into()],
            observations: vec!["z".into()],
            transitions: vec![vec![vec![(0, 0.5), (1, 0.5)]], vec![vec![(0, 1.0)]]],
            observation: vec![0, 0],
            initial: vec![(0, 1.0)],
            cost: vec![vec![1], vec![1]],
            energy: vec![vec![-1]],
            capacity: cap,
            targets: vec![false, false],
        }
    }

    #[test]
    fn energy_update_formula() {
        let mut m = drain(10);
        m.energy[0][0] = -1;
        assert_eq!(energy_update(&m, 0, 0, 4), 3);
        assert_eq!(energy_update(&m, 0, 0, 1), 0);
        m.energy[0][0] = 20;
        assert_eq!(energy_update(&m, 0, 0, 4), 10);
    }

    #[test]
    fn product_of_draining_loop() {
        let p = ProductPomdp::build(Arc::new(drain(2))).unwrap();
        assert!(p.num_states() <= 2 * 2 + 1);
        let sink = p.sink.expect("sink reachable");
        assert_eq!(p.observation[sink], p.sink_observation());
        for a in 0..p.num_actions() {
            assert_eq!(p.transitions[sink][a], vec![(sink, 1.0)]);
        }
        for x in 0..p.num_states() {
            if let ProductState::Pair { energy, .. } = p.states[x] {
                assert!((1..=2).contains(&energy));
            }
        }
        assert_eq!(p.cost(sink, 0), 1);
    }

    #[test]
    fn zero_capacity_is_rejected() {
        assert_eq!(ProductPomdp::build(Arc::new(drain(0))).unwrap_err(), ProductError::ZeroCapacity);
        let p = ProductPomdp::for_model(Arc::new(drain(0)));
        assert!(!p.energy_enabled);
        assert_eq!(p.num_states(), 2);
    }

    #[test]
    fn full_reload_never_reaches_sink() {
        let mut m = drain(3);
        m.energy[0][0] = 3;
        let p = ProductPomdp::build(Arc::new(m)).unwrap();
        assert!(p.sink.is_none());
        let top = p.state_of(0, 3).unwrap();
        assert!(p.transitions[top][0].iter().all(|&(y, _)| !p.is_sink(y)));
    }

    #[test]
    fn lift_and_project() {
        let p = ProductPomdp::build(Arc::new(drain(3))).unwrap();
        let empty = BaseRun { initial: 0, steps: vec![] };
        let lifted = p.lift_run(&empty).unwrap();
        assert_eq!(lifted.initial, p.state_of(0, 3).unwrap());

        let run = BaseRun { initial: 0, steps: vec![(0, 1), (0, 0), (0, 0)] };
        assert_eq!(p.lift_run(&run), Err(ProductError::EnergyExhausted { step: 3 }));

        let run = BaseRun { initial: 0, steps: vec![(0, 1), (0, 0)] };
        let lifted = p.lift_run(&run).unwrap();
        let (back, levels) = p.project_run(&lifted).unwrap();
        assert_eq!(back, run);
        assert_eq!(levels, vec![3, 2, 1]);

        let bad = BaseRun { initial: 0, steps: vec![(0, 1), (0, 1)] };
        assert!(matches!(p.lift_run(&bad), Err(ProductError::InvalidStep { step: 2, .. })));
    }
}
