//! Exact beliefs over product states and their integer discretization.

use thiserror::Error;

use crate::product::ProductPomdp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BeliefError {
    #[error("observation {observation} has probability zero after action {action}")]
    ZeroProbability { action: usize, observation: usize },
    #[error("no initial state emits observation {observation}")]
    NoInitialState { observation: usize },
}

/// Probability distribution over product states sharing one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    entries: Vec<(usize, f64)>,
    observation: usize,
    energy: u32,
}

impl Belief {
    /// Initial distribution conditioned on the first observation.
    pub fn initial(product: &ProductPomdp, observation: usize) -> Result<Self, BeliefError> {
        let entries: Vec<(usize, f64)> =
            product.initial.iter().copied().filter(|&(x, _)| product.observation[x] == observation).collect();
        Self::from_weights(product, entries, observation).ok_or(BeliefError::NoInitialState { observation })
    }

    pub fn dirac(product: &ProductPomdp, x: usize) -> Self {
        Belief { entries: vec![(x, 1.0)], observation: product.observation[x], energy: product.energy(x) }
    }

    /// Normalizes sorted, merged weights; `None` when the mass is zero.
    fn from_weights(product: &ProductPomdp, entries: Vec<(usize, f64)>, observation: usize) -> Option<Self> {
        let total: f64 = entries.iter().map(|&(_, w)| w).sum();
        if entries.is_empty() || total <= 0.0 {
            return None;
        }
        let energy = product.energy(entries[0].0);
        Some(Belief { entries: entries.into_iter().map(|(x, w)| (x, w / total)).collect(), observation, energy })
    }

    /// `(state, probability)` pairs sorted by state.
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn support(&self) -> Vec<usize> {
        self.entries.iter().map(|&(x, _)| x).collect()
    }

    pub fn observation(&self) -> usize {
        self.observation
    }

    pub fn energy(&self) -> u32 {
        self.energy
    }

    pub fn probability(&self, x: usize) -> f64 {
        self.entries.binary_search_by_key(&x, |&(y, _)| y).map(|i| self.entries[i].1).unwrap_or(0.0)
    }

    pub fn is_target(&self, product: &ProductPomdp) -> bool {
        self.entries.iter().all(|&(x, _)| product.targets[x])
    }

    /// Expected one-step cost of `a`; target states contribute nothing.
    pub fn expected_cost(&self, product: &ProductPomdp, a: usize) -> f64 {
        self.entries.iter().filter(|&&(x, _)| !product.targets[x]).map(|&(x, p)| p * product.cost(x, a) as f64).sum()
    }
}

/// All posteriors reachable by playing `a`: `(observation, probability, posterior)`
/// sorted by observation.
pub fn successor_beliefs(product: &ProductPomdp, belief: &Belief, a: usize) -> Vec<(usize, f64, Belief)> {
    let mut mass: Vec<(usize, usize, f64)> = Vec::new();
    for &(x, p) in &belief.entries {
        for &(y, q) in product.successors(x, a) {
            mass.push((product.observation[y], y, p * q));
        }
    }
    mass.sort_by_key(|&(z, y, _)| (z, y));
    let mut out = Vec::new();
    let mut i = 0;
    while i < mass.len() {
        let z = mass[i].0;
        let mut entries: Vec<(usize, f64)> = Vec::new();
        while i < mass.len() && mass[i].0 == z {
            let (_, y, w) = mass[i];
            match entries.last_mut() {
                Some((last, acc)) if *last == y => *acc += w,
                _ => entries.push((y, w)),
            }
            i += 1;
        }
        let total: f64 = entries.iter().map(|&(_, w)| w).sum();
        if let Some(b) = Belief::from_weights(product, entries, z) {
            out.push((z, total, b));
        }
    }
    out
}

/// Bayes update after playing `a` and observing `z`.
pub fn belief_update(product: &ProductPomdp, belief: &Belief, a: usize, z: usize) -> Result<Belief, BeliefError> {
    let mut entries: Vec<(usize, f64)> = Vec::new();
    for &(x, p) in &belief.entries {
        for &(y, q) in product.successors(x, a) {
            if product.observation[y] == z {
                entries.push((y, p * q));
            }
        }
    }
    entries.sort_by_key(|&(y, _)| y);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
    for (y, w) in entries {
        match merged.last_mut() {
            Some((last, acc)) if *last == y => *acc += w,
            _ => merged.push((y, w)),
        }
    }
    Belief::from_weights(product, merged, z).ok_or(BeliefError::ZeroProbability { action: a, observation: z })
}

/// Dense discretized belief: one entry in `[0, B]` per base state, followed by
/// the energy level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BeliefVector(pub Vec<u32>);

/// Sparse form of a [`BeliefVector`] used as a table key: nonzero
/// `(base state, count)` cells plus the energy level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiscreteBelief {
    pub cells: Vec<(u32, u32)>,
    pub energy: u32,
}

impl DiscreteBelief {
    pub fn to_dense(&self, num_states: usize) -> BeliefVector {
        let mut v = vec![0u32; num_states + 1];
        for &(s, c) in &self.cells {
            v[s as usize] = c;
        }
        v[num_states] = self.energy;
        BeliefVector(v)
    }

    pub fn from_dense(v: &BeliefVector) -> Self {
        let (energy, cells) = v.0.split_last().expect("belief vector has an energy component");
        DiscreteBelief {
            cells: cells.iter().enumerate().filter(|(_, &c)| c > 0).map(|(s, &c)| (s as u32, c)).collect(),
            energy: *energy,
        }
    }
}

fn round_half_up(x: f64) -> u32 {
    (x + 0.5).floor() as u32
}

/// Rounds every probability to the mesh `{0, 1/B, ..., 1}` (half-up, no
/// renormalization). Mass on the sink is dropped.
pub fn discretize_sparse(product: &ProductPomdp, belief: &Belief, precision: u32) -> DiscreteBelief {
    let mut cells: Vec<(u32, u32)> = belief
        .entries
        .iter()
        .filter_map(|&(x, p)| {
            let s = product.base_state(x)?;
            let c = round_half_up(p * precision as f64);
            (c > 0).then_some((s as u32, c))
        })
        .collect();
    // Beliefs are energy-homogeneous, so base states are distinct; sorting keeps
    // the key canonical.
    cells.sort_unstable();
    DiscreteBelief { cells, energy: belief.energy }
}

pub fn discretize(product: &ProductPomdp, belief: &Belief, precision: u32) -> BeliefVector {
    discretize_sparse(product, belief, precision).to_dense(product.base.num_states())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::toy;
    use std::sync::Arc;

    #[test]
    fn rounding_examples() {
        let p = ProductPomdp::build(Arc::new(toy::energy_tiger(4))).unwrap();
        let x = p.state_of(0, 4).unwrap();
        let y = p.state_of(1, 4).unwrap();
        let b = Belief { entries: vec![(x, 1.0 / 3.0), (y, 2.0 / 3.0)], observation: p.observation[x], energy: 4 };
        let v = discretize(&p, &b, 20);
        assert_eq!((v.0[0], v.0[1], *v.0.last().unwrap()), (7, 13, 4));
        let b = Belief { entries: vec![(x, 0.5), (y, 0.5)], observation: p.observation[x], energy: 4 };
        assert_eq!(&discretize(&p, &b, 20).0[..2], &[10, 10]);
        let d = discretize(&p, &Belief::dirac(&p, y), 20);
        assert_eq!(d.0.iter().filter(|&&c| c > 0).count(), 2);
        assert_eq!(d.0[1], 20);
        let sparse = discretize_sparse(&p, &b, 20);
        assert_eq!(DiscreteBelief::from_dense(&sparse.to_dense(p.base.num_states())), sparse);
    }

    #[test]
    fn tiger_listen_posterior() {
        let p = ProductPomdp::build(Arc::new(toy::energy_tiger(3))).unwrap();
        let b0 = Belief::initial(&p, p.observation[p.initial[0].0]).unwrap();
        assert_eq!(b0.entries().len(), 2);
        let hear_left = p.base.observations.iter().position(|z| z == "hear-left").unwrap();
        let b1 = belief_update(&p, &b0, toy::TIGER_LISTEN, hear_left).unwrap();
        let left: f64 = b1
            .entries()
            .iter()
            .filter(|&&(x, _)| p.base.states[p.base_state(x).unwrap()].starts_with("tiger-left"))
            .map(|&(_, q)| q)
            .sum();
        assert!((left - 0.85).abs() < 1e-12);
        assert_eq!(b1.energy(), 2);
    }

    #[test]
    fn dirac_deterministic_step() {
        let p = ProductPomdp::build(Arc::new(toy::reload_corridor(5, 3, Some(2)))).unwrap();
        let x = p.initial[0].0;
        let b = Belief::dirac(&p, x);
        let (y, _) = p.transitions[x][0][0];
        let next = belief_update(&p, &b, 0, p.observation[y]).unwrap();
        assert_eq!(next.entries(), &[(y, 1.0)]);
        let err = belief_update(&p, &b, 0, p.sink_observation()).unwrap_err();
        assert!(matches!(err, BeliefError::ZeroProbability { .. }));
    }
}
