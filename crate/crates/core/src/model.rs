//! In-memory POMDP with energy annotations.
//!
//! States, actions and observations are dense indices; names are kept only for
//! display and serialization. Transition rows are sparse and sorted by successor
//! index.

use std::collections::{HashMap, VecDeque};
use std::fmt;

/// Tolerance used for every "sums to one" check.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// Sparse probability distribution: `(index, probability)` pairs sorted by index.
pub type Distribution = Vec<(usize, f64)>;

/// POMDP with a deterministic, state-based observation function.
#[derive(Debug, Clone, PartialEq)]
pub struct Pomdp {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    /// `transitions[s][a]` is the successor distribution of `(s, a)`.
    pub transitions: Vec<Vec<Distribution>>,
    /// `observation[s]` is the observation emitted in state `s`.
    pub observation: Vec<usize>,
    pub initial: Distribution,
    /// `cost[s][a]`; must be positive.
    pub cost: Vec<Vec<i64>>,
    /// `energy[a][z]` is the resource change of playing `a` under observation `z`.
    pub energy: Vec<Vec<i64>>,
    /// Zero disables the energy objective.
    pub capacity: u32,
    pub targets: Vec<bool>,
}

/// POMDP whose observations are drawn from a distribution depending on the
/// entered state and the action that led there.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPomdp {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    pub transitions: Vec<Vec<Distribution>>,
    /// `observation[s][a]`: distribution over observations when entering `s` via `a`.
    pub observation: Vec<Vec<Distribution>>,
    pub initial: Distribution,
    pub cost: Vec<Vec<i64>>,
    pub energy: Vec<Vec<i64>>,
    pub capacity: u32,
    pub targets: Vec<bool>,
}

/// A single invariant violation found by validation.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoStates,
    NoActions,
    NoObservations,
    Shape { what: &'static str, expected: usize, found: usize },
    IndexOutOfRange { what: &'static str, index: usize },
    ProbabilityRange { what: &'static str, value: f64 },
    TransitionSum { state: usize, action: usize, sum: f64 },
    ObservationSum { state: usize, action: usize, sum: f64 },
    InitialSum { sum: f64 },
    EmptyInitial,
    NonPositiveCost { state: usize, action: usize, cost: i64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoStates => write!(f, "model declares no states"),
            Violation::NoActions => write!(f, "model declares no actions"),
            Violation::NoObservations => write!(f, "model declares no observations"),
            Violation::Shape { what, expected, found } => {
                write!(f, "{what} has {found} entries, expected {expected}")
            }
            Violation::IndexOutOfRange { what, index } => write!(f, "{what} index {index} out of range"),
            Violation::ProbabilityRange { what, value } => {
                write!(f, "{what} probability {value} outside (0, 1]")
            }
            Violation::TransitionSum { state, action, sum } => {
                write!(f, "transition distribution of state {state} under action {action} sums to {sum}")
            }
            Violation::ObservationSum { state, action, sum } => {
                write!(f, "observation distribution of state {state} under action {action} sums to {sum}")
            }
            Violation::InitialSum { sum } => write!(f, "initial distribution sums to {sum}"),
            Violation::EmptyInitial => write!(f, "initial distribution has empty support"),
            Violation::NonPositiveCost { state, action, cost } => {
                write!(f, "non-positive cost {cost} for state {state} under action {action}")
            }
        }
    }
}

fn check_distribution(dist: &Distribution, bound: usize, what: &'static str, out: &mut Vec<Violation>) -> f64 {
    let mut sum = 0.0;
    for &(idx, p) in dist {
        if idx >= bound {
            out.push(Violation::IndexOutOfRange { what, index: idx });
        }
        if !(p > 0.0 && p <= 1.0 + PROB_TOLERANCE) {
            out.push(Violation::ProbabilityRange { what, value: p });
        }
        sum += p;
    }
    sum
}

/// Checks shared by both model flavours; returns false when shapes are too broken
/// to continue.
#[allow(clippy::too_many_arguments)]
fn validate_common(
    n_states: usize,
    n_actions: usize,
    n_obs: usize,
    transitions: &[Vec<Distribution>],
    initial: &Distribution,
    cost: &[Vec<i64>],
    energy: &[Vec<i64>],
    targets: &[bool],
    out: &mut Vec<Violation>,
) -> bool {
    if n_states == 0 {
        out.push(Violation::NoStates);
    }
    if n_actions == 0 {
        out.push(Violation::NoActions);
    }
    if n_obs == 0 {
        out.push(Violation::NoObservations);
    }
    let mut shape_ok = true;
    let mut shape = |what, expected: usize, found: usize, out: &mut Vec<Violation>| {
        if expected != found {
            out.push(Violation::Shape { what, expected, found });
            shape_ok = false;
        }
    };
    shape("transition table", n_states, transitions.len(), out);
    shape("cost table", n_states, cost.len(), out);
    shape("energy table", n_actions, energy.len(), out);
    shape("target table", n_states, targets.len(), out);
    for row in transitions {
        shape("transition row", n_actions, row.len(), out);
    }
    for row in cost {
        shape("cost row", n_actions, row.len(), out);
    }
    for row in energy {
        shape("energy row", n_obs, row.len(), out);
    }
    if !shape_ok {
        return false;
    }
    for (s, row) in transitions.iter().enumerate() {
        for (a, dist) in row.iter().enumerate() {
            let sum = check_distribution(dist, n_states, "transition successor", out);
            if (sum - 1.0).abs() > PROB_TOLERANCE {
                out.push(Violation::TransitionSum { state: s, action: a, sum });
            }
        }
    }
    if initial.is_empty() {
        out.push(Violation::EmptyInitial);
    } else {
        let sum = check_distribution(initial, n_states, "initial state", out);
        if (sum - 1.0).abs() > PROB_TOLERANCE {
            out.push(Violation::InitialSum { sum });
        }
    }
    for (s, row) in cost.iter().enumerate() {
        for (a, &c) in row.iter().enumerate() {
            if c < 1 {
                out.push(Violation::NonPositiveCost { state: s, action: a, cost: c });
            }
        }
    }
    true
}

impl Pomdp {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn energy_enabled(&self) -> bool {
        self.capacity > 0
    }

    /// Returns every invariant violation; an empty list means the model is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let ok = validate_common(
            self.num_states(),
            self.num_actions(),
            self.num_observations(),
            &self.transitions,
            &self.initial,
            &self.cost,
            &self.energy,
            &self.targets,
            &mut out,
        );
        if ok {
            if self.observation.len() != self.num_states() {
                out.push(Violation::Shape {
                    what: "observation table",
                    expected: self.num_states(),
                    found: self.observation.len(),
                });
            }
            for &z in &self.observation {
                if z >= self.num_observations() {
                    out.push(Violation::IndexOutOfRange { what: "observation", index: z });
                }
            }
        }
        out
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|s| s == name)
    }
}

impl RawPomdp {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let ok = validate_common(
            self.num_states(),
            self.num_actions(),
            self.num_observations(),
            &self.transitions,
            &self.initial,
            &self.cost,
            &self.energy,
            &self.targets,
            &mut out,
        );
        if !ok {
            return out;
        }
        if self.observation.len() != self.num_states() {
            out.push(Violation::Shape {
                what: "observation table",
                expected: self.num_states(),
                found: self.observation.len(),
            });
            return out;
        }
        for (s, row) in self.observation.iter().enumerate() {
            if row.len() != self.num_actions() {
                out.push(Violation::Shape { what: "observation row", expected: self.num_actions(), found: row.len() });
                continue;
            }
            for (a, dist) in row.iter().enumerate() {
                let sum = check_distribution(dist, self.num_observations(), "observation", &mut out);
                if (sum - 1.0).abs() > PROB_TOLERANCE {
                    out.push(Violation::ObservationSum { state: s, action: a, sum });
                }
            }
        }
        out
    }

    /// If every state emits one fixed observation regardless of the action,
    /// returns that observation per state.
    pub fn deterministic_observations(&self) -> Option<Vec<usize>> {
        self.observation
            .iter()
            .map(|row| {
                let first = match row.first()?.as_slice() {
                    [(z, _)] => *z,
                    _ => return None,
                };
                row.iter().all(|d| matches!(d.as_slice(), [(z, _)] if *z == first)).then_some(first)
            })
            .collect()
    }
}

/// Name of the observation emitted before the first action by
/// [`determinize_observations`].
pub const INIT_OBSERVATION: &str = "init";

/// Folds a probabilistic observation function into the state space.
///
/// States become `(s, z)` pairs with `O'((s, z)) = z` and
/// `δ'((s, z), a)(s', z') = δ(s, a)(s') · O(s', a)(z')`. Initial states are paired
/// with an extra `init` observation, since nothing is observed before the first
/// action. Only pairs reachable from the initial support are kept. When the
/// observation function is already Dirac and action-independent the model is
/// converted directly, without the pairing.
pub fn determinize_observations(model: &RawPomdp) -> Pomdp {
    if let Some(obs) = model.deterministic_observations() {
        return Pomdp {
            states: model.states.clone(),
            actions: model.actions.clone(),
            observations: model.observations.clone(),
            transitions: model.transitions.clone(),
            observation: obs,
            initial: model.initial.clone(),
            cost: model.cost.clone(),
            energy: model.energy.clone(),
            capacity: model.capacity,
            targets: model.targets.clone(),
        };
    }

    let n_actions = model.num_actions();
    let init_obs = model.num_observations();
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |pair: (usize, usize), pairs: &mut Vec<(usize, usize)>, queue: &mut VecDeque<usize>| {
        *index.entry(pair).or_insert_with(|| {
            pairs.push(pair);
            queue.push_back(pairs.len() - 1);
            pairs.len() - 1
        })
    };

    let initial: Distribution =
        model.initial.iter().map(|&(s, p)| (intern((s, init_obs), &mut pairs, &mut queue), p)).collect();

    let mut transitions: Vec<Vec<Distribution>> = Vec::new();
    while let Some(x) = queue.pop_front() {
        let (s, _) = pairs[x];
        let mut row = Vec::with_capacity(n_actions);
        for a in 0..n_actions {
            let mut dist: Distribution = Vec::new();
            for &(s2, p) in &model.transitions[s][a] {
                for &(z2, q) in &model.observation[s2][a] {
                    let y = intern((s2, z2), &mut pairs, &mut queue);
                    dist.push((y, p * q));
                }
            }
            row.push(normalize_order(dist));
        }
        if transitions.len() <= x {
            transitions.resize(x + 1, Vec::new());
        }
        transitions[x] = row;
    }

    let mut observations = model.observations.clone();
    observations.push(INIT_OBSERVATION.to_string());
    let energy = model
        .energy
        .iter()
        .map(|row| {
            let mut row = row.clone();
            row.push(0);
            row
        })
        .collect();

    Pomdp {
        states: pairs.iter().map(|&(s, z)| format!("{}@{}", model.states[s], observations[z])).collect(),
        actions: model.actions.clone(),
        observation: pairs.iter().map(|&(_, z)| z).collect(),
        observations,
        transitions,
        initial: normalize_order(initial),
        cost: pairs.iter().map(|&(s, _)| model.cost[s].clone()).collect(),
        energy,
        capacity: model.capacity,
        targets: pairs.iter().map(|&(s, _)| model.targets[s]).collect(),
    }
}

/// Sorts by index and merges duplicate entries.
pub fn normalize_order(mut dist: Distribution) -> Distribution {
    dist.sort_by_key(|&(i, _)| i);
    let mut out: Distribution = Vec::with_capacity(dist.len());
    for (i, p) in dist {
        match out.last_mut() {
            Some((j, q)) if *j == i => *q += p,
            _ => out.push((i, p)),
        }
    }
    out
}
