//! RTDP-Bel: trial-based value iteration over discretized beliefs, restricted
//! to the allowed actions of the current belief support.

use std::collections::HashMap;
use std::fmt::Write;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::belief::{belief_update, discretize_sparse, successor_beliefs, Belief, BeliefVector, DiscreteBelief};
use crate::policy::{uniform_index, Policy, PolicyError, SupportTracker};
use crate::product::ProductPomdp;
use crate::qualitative::{AllowedTable, SupportGraph};

pub const DEFAULT_PRECISION: u32 = 20;
pub const DEFAULT_CUTOFF: usize = 1000;
pub const DEFAULT_TRIALS: usize = 2000;

/// Generator for stream `index` of `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws an index from a sparse distribution.
pub fn sample_index(rng: &mut dyn RngCore, dist: &[(usize, f64)]) -> usize {
    let u: f64 = rng.random::<f64>();
    let mut acc = 0.0;
    for &(i, p) in dist {
        acc += p;
        if u < acc {
            return i;
        }
    }
    dist.last().expect("non-empty distribution").0
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("line {0}: missing or malformed header")]
    Header(usize),
    #[error("line {line}: expected {expected} belief entries, found {found}")]
    Arity { line: usize, expected: usize, found: usize },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("table was built for a different model ({0})")]
    Mismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableEntry {
    pub value: f64,
    pub hits: u64,
}

/// Values of discretized beliefs.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub precision: u32,
    pub capacity: u32,
    pub num_states: usize,
    entries: HashMap<DiscreteBelief, TableEntry>,
}

impl ValueTable {
    pub fn new(product: &ProductPomdp, precision: u32) -> Self {
        ValueTable {
            precision,
            capacity: product.capacity(),
            num_states: product.base.num_states(),
            entries: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &DiscreteBelief) -> Option<f64> {
        self.entries.get(key).map(|e| e.value)
    }

    pub fn entry(&self, key: &DiscreteBelief) -> Option<&TableEntry> {
        self.entries.get(key)
    }

    pub fn set(&mut self, key: DiscreteBelief, value: f64) {
        let e = self.entries.entry(key).or_insert(TableEntry { value, hits: 0 });
        e.value = value;
        e.hits += 1;
    }

    /// Entries as dense vectors, sorted.
    pub fn sorted_entries(&self) -> Vec<(BeliefVector, f64)> {
        let mut out: Vec<(BeliefVector, f64)> =
            self.entries.iter().map(|(k, e)| (k.to_dense(self.num_states), e.value)).collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// Checks that the table fits the product.
    pub fn check_compatible(&self, product: &ProductPomdp) -> Result<(), TableError> {
        if self.num_states != product.base.num_states() {
            return Err(TableError::Mismatch(format!(
                "{} states, model has {}",
                self.num_states,
                product.base.num_states()
            )));
        }
        if self.capacity != product.capacity() {
            return Err(TableError::Mismatch(format!("capacity {}, model has {}", self.capacity, product.capacity())));
        }
        Ok(())
    }

    /// Text form: a header line, then `v_1 ... v_n energy : value` per entry.
    pub fn to_text(&self) -> String {
        let mut out = format!("# precision={} capacity={} states={}\n", self.precision, self.capacity, self.num_states);
        for (v, value) in self.sorted_entries() {
            for c in &v.0 {
                let _ = write!(out, "{c} ");
            }
            let _ = writeln!(out, ": {value:.16e}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TableError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(TableError::Header(1))?;
        let mut precision = None;
        let mut capacity = None;
        let mut num_states = None;
        for field in header.trim_start_matches('#').split_whitespace() {
            let (k, v) = field.split_once('=').ok_or(TableError::Header(1))?;
            let v: u64 = v.parse().map_err(|_| TableError::Header(1))?;
            match k {
                "precision" => precision = Some(v as u32),
                "capacity" => capacity = Some(v as u32),
                "states" => num_states = Some(v as usize),
                _ => {}
            }
        }
        let (Some(precision), Some(capacity), Some(num_states)) = (precision, capacity, num_states) else {
            return Err(TableError::Header(1));
        };
        let mut table = ValueTable { precision, capacity, num_states, entries: HashMap::new() };
        for (i, line) in lines {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (lhs, rhs) = line
                .split_once(':')
                .ok_or_else(|| TableError::Syntax { line: line_no, message: "expected ':' before the value".into() })?;
            let counts = lhs
                .split_whitespace()
                .map(|t| t.parse::<u32>())
                .collect::<Result<Vec<u32>, _>>()
                .map_err(|e| TableError::Syntax { line: line_no, message: e.to_string() })?;
            if counts.len() != num_states + 1 {
                return Err(TableError::Arity { line: line_no, expected: num_states + 1, found: counts.len() });
            }
            let value: f64 = rhs
                .trim()
                .parse()
                .map_err(|_| TableError::Syntax { line: line_no, message: format!("bad value '{}'", rhs.trim()) })?;
            table.set(DiscreteBelief::from_dense(&BeliefVector(counts)), value);
        }
        Ok(table)
    }
}

/// Estimate for beliefs without a table entry.
#[derive(Debug, Clone, PartialEq)]
pub enum Heuristic {
    Zero,
    /// Expected value under per-state values (indexed by product state).
    StateValues(Vec<f64>),
}

impl Heuristic {
    pub fn eval(&self, belief: &Belief) -> f64 {
        match self {
            Heuristic::Zero => 0.0,
            Heuristic::StateValues(v) => belief.entries().iter().map(|&(x, p)| p * v[x]).sum(),
        }
    }

    /// Optimal costs of the fully observable product, restricted to actions
    /// that keep it almost-surely winning. Lower bounds the belief values.
    pub fn fully_observable(product: &ProductPomdp) -> Heuristic {
        let n = product.num_states();
        let na = product.num_actions();
        // Almost-sure winning states of the MDP: the same fixpoint as on supports.
        let mut win = vec![true; n];
        let mut allowed: Vec<Vec<usize>> = vec![Vec::new(); n];
        loop {
            for x in 0..n {
                allowed[x] = if win[x] {
                    (0..na).filter(|&a| product.successors(x, a).iter().all(|&(y, _)| win[y])).collect()
                } else {
                    Vec::new()
                };
            }
            let mut reach: Vec<bool> = (0..n).map(|x| win[x] && product.targets[x]).collect();
            let mut changed = true;
            while changed {
                changed = false;
                for x in 0..n {
                    if !reach[x]
                        && allowed[x]
                            .iter()
                            .any(|&a| product.successors(x, a).iter().any(|&(y, p)| p > 0.0 && reach[y]))
                    {
                        reach[x] = true;
                        changed = true;
                    }
                }
            }
            if reach == win {
                break;
            }
            win = reach;
        }
        let mut v = vec![0.0; n];
        for _ in 0..100_000 {
            let mut delta: f64 = 0.0;
            for x in 0..n {
                if product.targets[x] || !win[x] {
                    continue;
                }
                let best = allowed[x]
                    .iter()
                    .map(|&a| {
                        product.cost(x, a) as f64 + product.successors(x, a).iter().map(|&(y, p)| p * v[y]).sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min);
                delta = delta.max((best - v[x]).abs());
                v[x] = best;
            }
            if delta < 1e-10 {
                break;
            }
        }
        Heuristic::StateValues(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    Target,
    Cutoff,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub steps: usize,
    pub terminal: Terminal,
    pub cost: f64,
}

#[derive(Debug, Error)]
pub enum RtdpError {
    #[error("the instance is infeasible: no initial support is winning")]
    Infeasible,
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// Everything the solver and its greedy executor read.
#[derive(Debug, Clone)]
pub struct Rtdp<'a> {
    pub product: &'a ProductPomdp,
    pub graph: &'a SupportGraph,
    pub allowed: &'a AllowedTable,
    pub precision: u32,
    pub heuristic: Heuristic,
}

impl<'a> Rtdp<'a> {
    pub fn new(product: &'a ProductPomdp, graph: &'a SupportGraph, allowed: &'a AllowedTable, precision: u32) -> Self {
        Rtdp { product, graph, allowed, precision, heuristic: Heuristic::Zero }
    }

    pub fn with_heuristic(mut self, heuristic: Heuristic) -> Self {
        self.heuristic = heuristic;
        self
    }

    pub fn key(&self, belief: &Belief) -> DiscreteBelief {
        discretize_sparse(self.product, belief, self.precision)
    }

    fn value(&self, table: &ValueTable, belief: &Belief) -> (f64, bool) {
        if belief.is_target(self.product) {
            return (0.0, true);
        }
        match table.get(&self.key(belief)) {
            Some(v) => (v, true),
            None => (self.heuristic.eval(belief), false),
        }
    }

    /// `Q(b, a)` for every action in `actions`, plus whether any successor
    /// value came from the table.
    pub fn q_values(&self, table: &ValueTable, belief: &Belief, actions: &[usize]) -> (Vec<f64>, bool) {
        let mut seen = false;
        let q = actions
            .iter()
            .map(|&a| {
                let mut q = belief.expected_cost(self.product, a);
                for (_, p, next) in successor_beliefs(self.product, belief, a) {
                    let (v, hit) = self.value(table, &next);
                    seen |= hit && !next.is_target(self.product);
                    q += p * v;
                }
                q
            })
            .collect();
        (q, seen)
    }

    fn argmin(actions: &[usize], q: &[f64]) -> (usize, f64) {
        let mut best = 0;
        for i in 1..q.len() {
            if q[i] < q[best] {
                best = i;
            }
        }
        (actions[best], q[best])
    }

    /// One trial from a sampled initial state.
    pub fn trial(
        &self,
        table: &mut ValueTable,
        rng: &mut dyn RngCore,
        cutoff: usize,
    ) -> Result<TrialRecord, RtdpError> {
        let p = self.product;
        let mut x = sample_index(rng, &p.initial);
        let mut belief = Belief::initial(p, p.observation[x]).map_err(PolicyError::from)?;
        let mut tracker = SupportTracker::new(self.graph, self.allowed);
        tracker.reset(p.observation[x])?;
        let mut cost = 0.0;
        let mut steps = 0;
        loop {
            if p.targets[x] {
                if belief.is_target(p) {
                    table.set(self.key(&belief), 0.0);
                }
                return Ok(TrialRecord { steps, terminal: Terminal::Target, cost });
            }
            if steps >= cutoff {
                return Ok(TrialRecord { steps, terminal: Terminal::Cutoff, cost });
            }
            let actions = tracker.allowed_actions()?;
            let (q, _) = self.q_values(table, &belief, actions);
            let (a, qa) = Self::argmin(actions, &q);
            table.set(self.key(&belief), qa);
            cost += p.cost(x, a) as f64;
            x = sample_index(rng, &p.transitions[x][a]);
            let z = p.observation[x];
            belief = belief_update(p, &belief, a, z).map_err(PolicyError::from)?;
            tracker.advance(a, z)?;
            steps += 1;
        }
    }

    /// Runs `trials` trials on `table`; trial `i` draws from stream `i` of `seed`.
    pub fn solve(
        &self,
        table: &mut ValueTable,
        trials: usize,
        cutoff: usize,
        seed: u64,
    ) -> Result<Vec<TrialRecord>, RtdpError> {
        if !self.graph.initial.iter().all(|&(_, v)| self.allowed.is_winning(v)) {
            return Err(RtdpError::Infeasible);
        }
        let mut trace = Vec::with_capacity(trials);
        for i in 0..trials {
            let mut rng = stream_rng(seed, i as u64);
            trace.push(self.trial(table, &mut rng, cutoff)?);
        }
        Ok(trace)
    }

    pub fn greedy<'t>(&'t self, table: &'t ValueTable) -> GreedyPolicy<'t> {
        GreedyPolicy {
            rtdp: self,
            table,
            tracker: SupportTracker::new(self.graph, self.allowed),
            belief: None,
            decisions: 0,
            fallbacks: 0,
        }
    }
}

/// Plays the table-greedy action, or a uniform allowed action when nothing
/// relevant is in the table.
#[derive(Debug, Clone)]
pub struct GreedyPolicy<'t> {
    rtdp: &'t Rtdp<'t>,
    table: &'t ValueTable,
    tracker: SupportTracker<'t>,
    belief: Option<Belief>,
    decisions: u64,
    fallbacks: u64,
}

impl Policy for GreedyPolicy<'_> {
    fn reset(&mut self, observation: usize) -> Result<(), PolicyError> {
        self.tracker.reset(observation)?;
        self.belief = Some(Belief::initial(self.rtdp.product, observation)?);
        Ok(())
    }

    fn decide(&mut self, rng: &mut dyn RngCore) -> Result<usize, PolicyError> {
        let belief = self.belief.as_ref().ok_or(PolicyError::NotStarted)?;
        let actions = self.tracker.allowed_actions()?;
        self.decisions += 1;
        let here = self.table.get(&self.rtdp.key(belief)).is_some();
        let (q, seen) = self.rtdp.q_values(self.table, belief, actions);
        if !here && !seen {
            self.fallbacks += 1;
            return Ok(actions[uniform_index(rng, actions.len())]);
        }
        Ok(Rtdp::argmin(actions, &q).0)
    }

    fn observe(&mut self, action: usize, observation: usize) -> Result<(), PolicyError> {
        let belief = self.belief.as_ref().ok_or(PolicyError::NotStarted)?;
        self.belief = Some(belief_update(self.rtdp.product, belief, action, observation)?);
        self.tracker.advance(action, observation)?;
        Ok(())
    }

    fn belief(&self) -> Option<&Belief> {
        self.belief.as_ref()
    }

    fn fallback_stats(&self) -> Option<(u64, u64)> {
        Some((self.decisions, self.fallbacks))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::toy;
    use crate::qualitative::compute_allowed;
    use std::sync::Arc;

    struct Solved {
        product: ProductPomdp,
        graph: SupportGraph,
        allowed: AllowedTable,
    }

    fn solved(model: crate::model::Pomdp) -> Solved {
        let product = ProductPomdp::for_model(Arc::new(model));
        let graph = SupportGraph::build(&product).unwrap();
        let allowed = compute_allowed(&graph);
        Solved { product, graph, allowed }
    }

    #[test]
    fn one_step_chain_converges() {
        let s = solved(toy::reload_corridor(2, 3, None));
        let r = Rtdp::new(&s.product, &s.graph, &s.allowed, DEFAULT_PRECISION);
        let mut t = ValueTable::new(&s.product, DEFAULT_PRECISION);
        r.solve(&mut t, 20, 100, 1).unwrap();
        let b0 = Belief::initial(&s.product, s.product.observation[s.product.initial[0].0]).unwrap();
        assert!((t.get(&r.key(&b0)).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn corridor_values_match_shortest_path() {
        let s = solved(toy::reload_corridor(5, 3, Some(2)));
        let r = Rtdp::new(&s.product, &s.graph, &s.allowed, DEFAULT_PRECISION);
        let mut t = ValueTable::new(&s.product, DEFAULT_PRECISION);
        r.solve(&mut t, 50, 100, 3).unwrap();
        let b0 = Belief::initial(&s.product, s.product.observation[s.product.initial[0].0]).unwrap();
        assert!((t.get(&r.key(&b0)).unwrap() - 4.0).abs() < 1e-6);
    }

    #[test]
    fn zero_trials_leave_table_empty() {
        let s = solved(toy::energy_tiger(3));
        let r = Rtdp::new(&s.product, &s.graph, &s.allowed, DEFAULT_PRECISION);
        let mut t = ValueTable::new(&s.product, DEFAULT_PRECISION);
        assert!(r.solve(&mut t, 0, 100, 0).unwrap().is_empty());
        assert!(t.is_empty());
    }

    #[test]
    fn infeasible_instance_is_rejected() {
        let s = solved(toy::reload_corridor(5, 3, None));
        let r = Rtdp::new(&s.product, &s.graph, &s.allowed, DEFAULT_PRECISION);
        let mut t = ValueTable::new(&s.product, DEFAULT_PRECISION);
        assert!(matches!(r.solve(&mut t, 1, 100, 0), Err(RtdpError::Infeasible)));
    }

    #[test]
    fn table_grows_monotonically_and_round_trips() {
        let s = solved(toy::energy_tiger(4));
        let r = Rtdp::new(&s.product, &s.graph, &s.allowed, DEFAULT_PRECISION);
        let mut t = ValueTable::new(&s.product, DEFAULT_PRECISION);
        let mut last = 0;
        for i in 0..50 {
            let mut rng = stream_rng(9, i);
            r.trial(&mut t, &mut rng, 200).unwrap();
            assert!(t.len() >= last);
            last = t.len();
        }
        let text = t.to_text();
        let back = ValueTable::from_text(&text).unwrap();
        assert_eq!(back.sorted_entries(), t.sorted_entries());
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn table_text_errors() {
        assert_eq!(ValueTable::from_text("").unwrap_err(), TableError::Header(1));
        let err = ValueTable::from_text("# precision=20 capacity=3 states=2\n1 2 : 0.5\n").unwrap_err();
        assert_eq!(err, TableError::Arity { line: 2, expected: 3, found: 2 });
        let err = ValueTable::from_text("# precision=20 capacity=3 states=2\n1 2 3 0.5\n").unwrap_err();
        assert!(matches!(err, TableError::Syntax { line: 2, .. }));
    }

    #[test]
    fn tiger_prefers_listening_then_opening() {
        let s = solved(toy::energy_tiger(4));
        let r = Rtdp::new(&s.product, &s.graph, &s.allowed, DEFAULT_PRECISION);
        let mut t = ValueTable::new(&s.product, DEFAULT_PRECISION);
        r.solve(&mut t, 2000, 200, 5).unwrap();
        let mut pol = r.greedy(&t);
        let z0 = s.product.observation[s.product.initial[0].0];
        pol.reset(z0).unwrap();
        let mut rng = stream_rng(0, 0);
        assert_eq!(pol.decide(&mut rng).unwrap(), toy::TIGER_LISTEN);
    }

    #[test]
    fn fully_observable_heuristic_is_exact_on_corridor() {
        let s = solved(toy::reload_corridor(5, 3, Some(2)));
        let Heuristic::StateValues(v) = Heuristic::fully_observable(&s.product) else { unreachable!() };
        assert!((v[s.product.initial[0].0] - 4.0).abs() < 1e-9);
    }
}
