//! Almost-sure energy-safe reachability over belief supports.
//!
//! Supports reachable from the initial observation are explored by subset
//! construction on the product (targets absorbing). The winning supports and
//! their allowed actions are the greatest fixpoint of: keep the actions whose
//! successor supports all stay in the candidate set, then keep the supports
//! from which a target support is reachable using those actions.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write;

use rand::RngCore;
use thiserror::Error;

use crate::policy::{Policy, PolicyError, SupportTracker};
use crate::product::ProductPomdp;

/// Default bound on the number of explored supports.
pub const DEFAULT_SUPPORT_LIMIT: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QualitativeError {
    #[error("support explosion: more than {limit} belief supports")]
    SupportExplosion { limit: usize },
}

/// Set of product states the system may be in, all sharing one observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeliefSupport {
    /// Sorted product state indices.
    pub states: Vec<usize>,
    pub observation: usize,
    /// Common energy level, `None` if members disagree.
    pub energy: Option<u32>,
}

impl BeliefSupport {
    fn new(product: &ProductPomdp, states: Vec<usize>) -> Self {
        let observation = product.observation[states[0]];
        let e0 = product.energy(states[0]);
        let energy = states.iter().all(|&x| product.energy(x) == e0).then_some(e0);
        BeliefSupport { states, observation, energy }
    }

    pub fn is_homogeneous(&self, product: &ProductPomdp) -> bool {
        self.energy.is_some() && self.states.iter().all(|&x| product.observation[x] == self.observation)
    }
}

#[derive(Debug, Clone)]
pub struct SupportGraph {
    pub supports: Vec<BeliefSupport>,
    /// `successors[v][a]`: `(observation, support)` pairs sorted by observation.
    pub successors: Vec<Vec<Vec<(usize, usize)>>>,
    pub is_target: Vec<bool>,
    /// `(observation, support)` for every initial observation.
    pub initial: Vec<(usize, usize)>,
    index: HashMap<Vec<usize>, usize>,
    num_actions: usize,
}

impl SupportGraph {
    pub fn build(product: &ProductPomdp) -> Result<Self, QualitativeError> {
        Self::build_with_limit(product, DEFAULT_SUPPORT_LIMIT)
    }

    pub fn build_with_limit(product: &ProductPomdp, limit: usize) -> Result<Self, QualitativeError> {
        let mut g = SupportGraph {
            supports: Vec::new(),
            successors: Vec::new(),
            is_target: Vec::new(),
            initial: Vec::new(),
            index: HashMap::new(),
            num_actions: product.num_actions(),
        };
        let mut queue = VecDeque::new();

        let mut init: Vec<(usize, usize)> = product.initial.iter().map(|&(x, _)| (product.observation[x], x)).collect();
        init.sort_unstable();
        for group in group_by_observation(&init) {
            let (z, states) = group;
            let v = g.intern(product, states, &mut queue, limit)?;
            g.initial.push((z, v));
        }

        let mut scratch: Vec<(usize, usize)> = Vec::new();
        while let Some(v) = queue.pop_front() {
            let mut per_action = Vec::with_capacity(g.num_actions);
            for a in 0..g.num_actions {
                scratch.clear();
                for &x in &g.supports[v].states {
                    for &(y, p) in product.successors(x, a) {
                        if p > 0.0 {
                            scratch.push((product.observation[y], y));
                        }
                    }
                }
                scratch.sort_unstable();
                scratch.dedup();
                let mut succ = Vec::new();
                for (z, states) in group_by_observation(&scratch) {
                    let u = g.intern(product, states, &mut queue, limit)?;
                    succ.push((z, u));
                }
                per_action.push(succ);
            }
            debug_assert_eq!(g.successors.len(), v);
            g.successors.push(per_action);
        }
        Ok(g)
    }

    fn intern(
        &mut self,
        product: &ProductPomdp,
        states: Vec<usize>,
        queue: &mut VecDeque<usize>,
        limit: usize,
    ) -> Result<usize, QualitativeError> {
        if let Some(&v) = self.index.get(&states) {
            return Ok(v);
        }
        if self.supports.len() >= limit {
            return Err(QualitativeError::SupportExplosion { limit });
        }
        let v = self.supports.len();
        self.is_target.push(states.iter().all(|&x| product.targets[x]));
        self.supports.push(BeliefSupport::new(product, states.clone()));
        self.index.insert(states, v);
        queue.push_back(v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.supports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty()
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn lookup(&self, states: &[usize]) -> Option<usize> {
        self.index.get(states).copied()
    }

    pub fn initial_vertex(&self, observation: usize) -> Option<usize> {
        self.initial.iter().find(|&&(z, _)| z == observation).map(|&(_, v)| v)
    }

    pub fn successor(&self, v: usize, a: usize, observation: usize) -> Option<usize> {
        let succ = &self.successors[v][a];
        succ.binary_search_by_key(&observation, |&(z, _)| z).ok().map(|i| succ[i].1)
    }
}

fn group_by_observation(pairs: &[(usize, usize)]) -> Vec<(usize, Vec<usize>)> {
    let mut out: Vec<(usize, Vec<usize>)> = Vec::new();
    for &(z, x) in pairs {
        match out.last_mut() {
            Some((last, xs)) if *last == z => xs.push(x),
            _ => out.push((z, vec![x])),
        }
    }
    out
}

/// Winning supports and their allowed actions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllowedTable {
    pub winning: Vec<bool>,
    allowed: Vec<Vec<usize>>,
}

impl AllowedTable {
    /// Allowed actions of a support; empty for losing supports.
    pub fn actions(&self, v: usize) -> &[usize] {
        &self.allowed[v]
    }

    pub fn is_winning(&self, v: usize) -> bool {
        self.winning[v]
    }

    pub fn num_winning(&self) -> usize {
        self.winning.iter().filter(|&&w| w).count()
    }
}

pub fn compute_allowed(graph: &SupportGraph) -> AllowedTable {
    let n = graph.len();
    let na = graph.num_actions();
    let mut winning = vec![true; n];
    let mut allowed: Vec<Vec<usize>> = vec![Vec::new(); n];
    loop {
        for v in 0..n {
            allowed[v].clear();
            if !winning[v] {
                continue;
            }
            for a in 0..na {
                if graph.is_target[v] || graph.successors[v][a].iter().all(|&(_, u)| winning[u]) {
                    allowed[v].push(a);
                }
            }
        }
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (v, acts) in allowed.iter().enumerate() {
            for &a in acts {
                for &(_, u) in &graph.successors[v][a] {
                    preds[u].push(v);
                }
            }
        }
        let mut reach = vec![false; n];
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| winning[v] && graph.is_target[v]).collect();
        for &v in &queue {
            reach[v] = true;
        }
        while let Some(u) = queue.pop_front() {
            for &v in &preds[u] {
                if !reach[v] {
                    reach[v] = true;
                    queue.push_back(v);
                }
            }
        }
        if reach == winning {
            break;
        }
        winning = reach;
    }
    for v in 0..n {
        if !winning[v] {
            allowed[v].clear();
        }
    }
    AllowedTable { winning, allowed }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    Infeasible,
}

impl std::fmt::Display for Feasibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Feasibility::Feasible => "feasible",
            Feasibility::Infeasible => "infeasible",
        })
    }
}

/// Feasible iff every initial support is winning.
pub fn qualitative_answer(graph: &SupportGraph, allowed: &AllowedTable) -> Feasibility {
    if graph.initial.iter().all(|&(_, v)| allowed.is_winning(v)) {
        Feasibility::Feasible
    } else {
        Feasibility::Infeasible
    }
}

/// Lines `support-id : action names` for every winning support.
pub fn export_allowed(graph: &SupportGraph, allowed: &AllowedTable, product: &ProductPomdp) -> String {
    let mut out = String::new();
    for v in 0..graph.len() {
        if !allowed.is_winning(v) {
            continue;
        }
        let _ = write!(out, "{v} :");
        for &a in allowed.actions(v) {
            let _ = write!(out, " {}", product.base.actions[a]);
        }
        out.push('\n');
    }
    out
}

/// Lines `support-id : product state names` for every support.
pub fn export_supports(graph: &SupportGraph, product: &ProductPomdp) -> String {
    let mut out = String::new();
    for (v, sup) in graph.supports.iter().enumerate() {
        let _ = write!(out, "{v} :");
        for &x in &sup.states {
            let _ = write!(out, " {}", product.state_name(x));
        }
        out.push('\n');
    }
    out
}

/// Plays all allowed actions of the current support uniformly at random.
#[derive(Debug, Clone)]
pub struct SigmaAll<'a> {
    tracker: SupportTracker<'a>,
}

impl<'a> SigmaAll<'a> {
    pub fn new(graph: &'a SupportGraph, allowed: &'a AllowedTable) -> Self {
        SigmaAll { tracker: SupportTracker::new(graph, allowed) }
    }

    pub fn support(&self) -> Result<usize, PolicyError> {
        self.tracker.vertex()
    }
}

impl Policy for SigmaAll<'_> {
    fn reset(&mut self, observation: usize) -> Result<(), PolicyError> {
        self.tracker.reset(observation)
    }

    fn decide(&mut self, rng: &mut dyn RngCore) -> Result<usize, PolicyError> {
        self.tracker.uniform(rng)
    }

    fn observe(&mut self, action: usize, observation: usize) -> Result<(), PolicyError> {
        self.tracker.advance(action, observation).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::toy;
    use crate::model::Pomdp;
    use std::sync::Arc;

    fn analyse(model: Pomdp) -> (ProductPomdp, SupportGraph, AllowedTable) {
        let p = ProductPomdp::for_model(Arc::new(model));
        let g = SupportGraph::build(&p).unwrap();
        let a = compute_allowed(&g);
        (p, g, a)
    }

    #[test]
    fn corridor_feasibility_depends_on_reload() {
        let (_, g, a) = analyse(toy::reload_corridor(5, 3, None));
        assert_eq!(qualitative_answer(&g, &a), Feasibility::Infeasible);
        let (_, g, a) = analyse(toy::reload_corridor(5, 3, Some(2)));
        assert_eq!(qualitative_answer(&g, &a), Feasibility::Feasible);
    }

    #[test]
    fn initial_target_is_feasible() {
        let mut m = toy::reload_corridor(3, 2, None);
        m.targets[0] = true;
        let (_, g, a) = analyse(m);
        assert_eq!(qualitative_answer(&g, &a), Feasibility::Feasible);
        let v = g.initial[0].1;
        assert!(g.is_target[v]);
        assert_eq!(a.actions(v).len(), g.num_actions());
    }

    #[test]
    fn sink_support_is_losing() {
        let (p, g, a) = analyse(toy::reload_corridor(5, 3, None));
        let sink = p.sink.unwrap();
        let v = g.lookup(&[sink]).unwrap();
        assert!(!a.is_winning(v));
        assert!(a.actions(v).is_empty());
    }

    #[test]
    fn fully_observable_supports_are_singletons() {
        let (p, g, _) = analyse(toy::reload_corridor(5, 3, Some(2)));
        assert!(g.supports.iter().all(|s| s.states.len() == 1));
        assert_eq!(g.len(), p.num_states());
    }

    #[test]
    fn tiger_allowed_actions_by_energy() {
        let (p, g, a) = analyse(toy::energy_tiger(3));
        assert_eq!(qualitative_answer(&g, &a), Feasibility::Feasible);
        let v0 = g.initial[0].1;
        assert_eq!(a.actions(v0), &[0, 1, 2, 3]);
        for (v, sup) in g.supports.iter().enumerate() {
            assert!(sup.is_homogeneous(&p));
            if sup.energy == Some(1)
                && a.is_winning(v)
                && !g.is_target[v]
                && p.base.observations[sup.observation] != "charger"
            {
                assert!(!a.actions(v).contains(&toy::TIGER_LISTEN));
            }
        }
    }

    #[test]
    fn explosion_guard() {
        let p = ProductPomdp::for_model(Arc::new(toy::energy_tiger(3)));
        assert_eq!(SupportGraph::build_with_limit(&p, 3).unwrap_err(), QualitativeError::SupportExplosion { limit: 3 });
    }

    #[test]
    fn export_lists_winning_supports() {
        let (p, g, a) = analyse(toy::reload_corridor(5, 3, Some(2)));
        let text = export_allowed(&g, &a, &p);
        assert_eq!(text.lines().count(), a.num_winning());
        assert!(text.starts_with("0 : forward"));
        assert_eq!(export_supports(&g, &p).lines().count(), g.len());
    }
}
