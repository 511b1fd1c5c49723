//! Decision-tree policies: features of discretized beliefs, tree induction,
//! cost-complexity pruning, a text format and the executor.

use std::collections::HashMap;
use std::fmt::{self, Write};

use rand::RngCore;
use thiserror::Error;

use crate::belief::{belief_update, discretize_sparse, Belief, DiscreteBelief};
use crate::model::Pomdp;
use crate::parser::TrainingSet;
use crate::policy::{uniform_index, Policy, PolicyError, SupportTracker};
use crate::product::ProductPomdp;
use crate::qualitative::{AllowedTable, SupportGraph};
use crate::rtdp::{sample_index, stream_rng};

pub const ENERGY_FEATURE: &str = "Energy";
pub const DEFAULT_SIMULATIONS: usize = 1000;
pub const DEFAULT_STEPS: usize = 250;
pub const DEFAULT_MIN_LEAF: usize = 2;
pub const DEFAULT_ALPHA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("empty training set")]
    EmptyData,
    #[error("training set has {found} features, expected {expected}")]
    Arity { expected: usize, found: usize },
    #[error("position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown feature '{0}'")]
    UnknownFeature(String),
    #[error("the model has no grid layout in its state names")]
    NoGrid,
}

// ---------------------------------------------------------------------------
// Features

/// Maps a discretized belief to integer features.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMap {
    /// One count per base state, then the energy level.
    Raw { names: Vec<String> },
    /// Column marginals `x1..xC`, row marginals `y1..yR`, then the energy level.
    /// `cells[s]` is the `(row, col)` of base state `s`, if it has one.
    Grid { rows: usize, cols: usize, cells: Vec<Option<(usize, usize)>>, names: Vec<String> },
}

/// `(row, col)` from names like `r3c4...` or `x4y3...`.
fn grid_position(name: &str) -> Option<(usize, usize)> {
    fn digits(s: &str) -> Option<(usize, &str)> {
        let end = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
        if end == 0 {
            return None;
        }
        Some((s[..end].parse().ok()?, &s[end..]))
    }
    if let Some(rest) = name.strip_prefix('r') {
        let (r, rest) = digits(rest)?;
        let (c, _) = digits(rest.strip_prefix('c')?)?;
        return Some((r, c));
    }
    if let Some(rest) = name.strip_prefix('x') {
        let (x, rest) = digits(rest)?;
        let (y, _) = digits(rest.strip_prefix('y')?)?;
        return Some((y, x));
    }
    None
}

impl FeatureMap {
    pub fn raw(model: &Pomdp) -> Self {
        let mut names: Vec<String> = model.states.iter().map(|s| format!("p_{s}")).collect();
        names.push(ENERGY_FEATURE.into());
        FeatureMap::Raw { names }
    }

    /// Grid marginals, with positions read from the state names.
    pub fn grid(model: &Pomdp) -> Result<Self, TreeError> {
        let cells: Vec<Option<(usize, usize)>> = model.states.iter().map(|s| grid_position(s)).collect();
        let rows = cells.iter().flatten().map(|&(r, _)| r + 1).max().ok_or(TreeError::NoGrid)?;
        let cols = cells.iter().flatten().map(|&(_, c)| c + 1).max().ok_or(TreeError::NoGrid)?;
        let mut names: Vec<String> = (1..=cols).map(|c| format!("x{c}")).collect();
        names.extend((1..=rows).map(|r| format!("y{r}")));
        names.push(ENERGY_FEATURE.into());
        Ok(FeatureMap::Grid { rows, cols, cells, names })
    }

    pub fn names(&self) -> &[String] {
        match self {
            FeatureMap::Raw { names } | FeatureMap::Grid { names, .. } => names,
        }
    }

    pub fn len(&self) -> usize {
        self.names().len()
    }

    pub fn is_empty(&self) -> bool {
        self.names().is_empty()
    }

    pub fn features(&self, belief: &DiscreteBelief) -> Vec<i64> {
        let mut f = vec![0i64; self.len()];
        match self {
            FeatureMap::Raw { .. } => {
                for &(s, c) in &belief.cells {
                    f[s as usize] = c as i64;
                }
            }
            FeatureMap::Grid { cols, cells, .. } => {
                for &(s, c) in &belief.cells {
                    if let Some((r, col)) = cells[s as usize] {
                        f[col] += c as i64;
                        f[cols + r] += c as i64;
                    }
                }
            }
        }
        *f.last_mut().expect("energy feature") = belief.energy as i64;
        f
    }
}

// ---------------------------------------------------------------------------
// Trees

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
}

impl Comparator {
    fn holds(self, v: f64, t: f64) -> bool {
        match self {
            Comparator::Le => v <= t,
            Comparator::Lt => v < t,
            Comparator::Ge => v >= t,
            Comparator::Gt => v > t,
            Comparator::Eq => v == t,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Comparator::Le => "<=",
            Comparator::Lt => "<",
            Comparator::Ge => ">=",
            Comparator::Gt => ">",
            Comparator::Eq => "=",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "<=" => Comparator::Le,
            "<" => Comparator::Lt,
            ">=" => Comparator::Ge,
            ">" => Comparator::Gt,
            "=" => Comparator::Eq,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
pub enum Node {
    Leaf {
        action: usize,
        /// Weighted class counts of the training records reaching this node.
        counts: Vec<u64>,
    },
    Split {
        feature: usize,
        cmp: Comparator,
        threshold: f64,
        /// Taken when the predicate holds.
        yes: Box<Node>,
        no: Box<Node>,
        counts: Vec<u64>,
    },
}

impl PartialEq for Node {
    /// Structural equality; training statistics are ignored.
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Node::Leaf { action: a, .. }, Node::Leaf { action: b, .. }) => a == b,
            (
                Node::Split { feature: f1, cmp: c1, threshold: t1, yes: y1, no: n1, .. },
                Node::Split { feature: f2, cmp: c2, threshold: t2, yes: y2, no: n2, .. },
            ) => f1 == f2 && c1 == c2 && t1 == t2 && y1 == y2 && n1 == n2,
            _ => false,
        }
    }
}

impl Node {
    fn leaf(action: usize) -> Node {
        Node::Leaf { action, counts: Vec::new() }
    }

    pub fn size(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { yes, no, .. } => 1 + yes.size() + no.size(),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { yes, no, .. } => yes.leaves() + no.leaves(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { yes, no, .. } => 1 + yes.depth().max(no.depth()),
        }
    }

    pub fn counts(&self) -> &[u64] {
        match self {
            Node::Leaf { counts, .. } | Node::Split { counts, .. } => counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub feature_names: Vec<String>,
    pub root: Node,
}

impl DecisionTree {
    pub fn single_leaf(feature_names: Vec<String>, action: usize) -> Self {
        DecisionTree { feature_names, root: Node::leaf(action) }
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }

    pub fn leaves(&self) -> usize {
        self.root.leaves()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn eval(&self, features: &[i64]) -> Result<usize, PolicyError> {
        if features.len() != self.feature_names.len() {
            return Err(PolicyError::Arity { expected: self.feature_names.len(), found: features.len() });
        }
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { action, .. } => return Ok(*action),
                Node::Split { feature, cmp, threshold, yes, no, .. } => {
                    node = if cmp.holds(features[*feature] as f64, *threshold) { yes } else { no };
                }
            }
        }
    }

    /// Parses `(feature <= t (yes) (no))` / `[action]`.
    pub fn parse(text: &str, feature_names: &[String]) -> Result<Self, TreeError> {
        let tokens = tokenize_tree(text);
        let mut pos = 0;
        let root = parse_node(&tokens, &mut pos, feature_names)?;
        if pos != tokens.len() {
            return Err(TreeError::Syntax { pos: tokens[pos].0, message: "trailing input".into() });
        }
        Ok(DecisionTree { feature_names: feature_names.to_vec(), root })
    }

    /// Graphviz rendering: predicates on inner nodes, action names on leaves.
    pub fn to_dot(&self, action_names: &[String]) -> String {
        let mut out = String::from("digraph tree {\n  node [fontname=\"Helvetica\"];\n");
        let mut next = 0;
        self.dot_node(&self.root, action_names, &mut next, &mut out);
        out.push_str("}\n");
        out
    }

    fn dot_node(&self, node: &Node, action_names: &[String], next: &mut usize, out: &mut String) -> usize {
        let id = *next;
        *next += 1;
        match node {
            Node::Leaf { action, .. } => {
                let name = action_names.get(*action).cloned().unwrap_or_else(|| action.to_string());
                let _ = writeln!(out, "  n{id} [shape=box, label=\"{}\"];", escape(&name));
            }
            Node::Split { feature, cmp, threshold, yes, no, .. } => {
                let _ = writeln!(
                    out,
                    "  n{id} [label=\"{} {} {}\"];",
                    escape(&self.feature_names[*feature]),
                    cmp.symbol(),
                    threshold
                );
                let y = self.dot_node(yes, action_names, next, out);
                let _ = writeln!(out, "  n{id} -> n{y} [label=\"true\"];");
                let n = self.dot_node(no, action_names, next, out);
                let _ = writeln!(out, "  n{id} -> n{n} [label=\"false\"];");
            }
        }
        id
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

impl fmt::Display for DecisionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(t: &DecisionTree, node: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match node {
                Node::Leaf { action, .. } => write!(f, "[{action}]"),
                Node::Split { feature, cmp, threshold, yes, no, .. } => {
                    write!(f, "({} {} {} ", t.feature_names[*feature], cmp.symbol(), threshold)?;
                    go(t, yes, f)?;
                    f.write_char(' ')?;
                    go(t, no, f)?;
                    f.write_char(')')
                }
            }
        }
        go(self, &self.root, f)
    }
}

fn tokenize_tree(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut start = 0;
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() || matches!(ch, '(' | ')' | '[' | ']') {
            if !cur.is_empty() {
                out.push((start, std::mem::take(&mut cur)));
            }
            if !ch.is_whitespace() {
                out.push((i, ch.to_string()));
            }
        } else {
            if cur.is_empty() {
                start = i;
            }
            cur.push(ch);
        }
    }
    if !cur.is_empty() {
        out.push((start, cur));
    }
    out
}

fn parse_node(tokens: &[(usize, String)], pos: &mut usize, names: &[String]) -> Result<Node, TreeError> {
    let end = tokens.last().map(|t| t.0 + t.1.len()).unwrap_or(0);
    let mut next = |what: &str| -> Result<(usize, String), TreeError> {
        let t = tokens
            .get(*pos)
            .cloned()
            .ok_or_else(|| TreeError::Syntax { pos: end, message: format!("expected {what}, found end of input") })?;
        *pos += 1;
        Ok(t)
    };
    let (p, open) = next("'(' or '['")?;
    match open.as_str() {
        "[" => {
            let (p, a) = next("action")?;
            let action = a.parse().map_err(|_| TreeError::Syntax { pos: p, message: format!("bad action '{a}'") })?;
            let (p, close) = next("']'")?;
            if close != "]" {
                return Err(TreeError::Syntax { pos: p, message: format!("expected ']', found '{close}'") });
            }
            Ok(Node::leaf(action))
        }
        "(" => {
            let (p, name) = next("feature")?;
            let feature = names.iter().position(|n| *n == name).ok_or(TreeError::UnknownFeature(name.clone()))?;
            let _ = p;
            let (p, c) = next("comparator")?;
            let cmp = Comparator::parse(&c)
                .ok_or_else(|| TreeError::Syntax { pos: p, message: format!("bad comparator '{c}'") })?;
            let (p, t) = next("threshold")?;
            let threshold: f64 =
                t.parse().map_err(|_| TreeError::Syntax { pos: p, message: format!("bad threshold '{t}'") })?;
            let yes = Box::new(parse_node(tokens, pos, names)?);
            let no = Box::new(parse_node(tokens, pos, names)?);
            let (p, close) = tokens
                .get(*pos)
                .cloned()
                .ok_or_else(|| TreeError::Syntax { pos: end, message: "expected ')', found end of input".into() })?;
            *pos += 1;
            if close != ")" {
                return Err(TreeError::Syntax { pos: p, message: format!("expected ')', found '{close}'") });
            }
            Ok(Node::Split { feature, cmp, threshold, yes, no, counts: Vec::new() })
        }
        other => Err(TreeError::Syntax { pos: p, message: format!("expected '(' or '[', found '{other}'") }),
    }
}

// ---------------------------------------------------------------------------
// Learning

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    InfoGain,
    Gini,
}

impl std::str::FromStr for Criterion {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "infogain" | "entropy" => Ok(Criterion::InfoGain),
            "gini" => Ok(Criterion::Gini),
            _ => Err(format!("unknown criterion '{s}' (expected infogain or gini)")),
        }
    }
}

/// Impurity of weighted class counts: entropy in bits, or Gini index.
pub fn impurity(criterion: Criterion, counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    match criterion {
        Criterion::InfoGain => counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.log2()
            })
            .sum(),
        Criterion::Gini => 1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>(),
    }
}

/// Impurity decrease of splitting `parent` into `left` and `parent - left`.
pub fn split_gain(criterion: Criterion, parent: &[u64], left: &[u64]) -> f64 {
    let right: Vec<u64> = parent.iter().zip(left).map(|(p, l)| p - l).collect();
    let n: u64 = parent.iter().sum();
    let nl: u64 = left.iter().sum();
    let nr = n - nl;
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    impurity(criterion, parent)
        - (nl as f64 / n) * impurity(criterion, left)
        - (nr as f64 / n) * impurity(criterion, &right)
}

/// Majority class; ties go to the lowest index.
fn majority(counts: &[u64]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnOptions {
    pub criterion: Criterion,
    /// Nodes with fewer records become leaves.
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
}

impl Default for LearnOptions {
    fn default() -> Self {
        LearnOptions { criterion: Criterion::InfoGain, min_leaf: DEFAULT_MIN_LEAF, max_depth: None }
    }
}

/// Deduplicated rows with multiplicities.
struct Rows {
    features: Vec<Vec<i64>>,
    label: Vec<usize>,
    weight: Vec<u64>,
    num_classes: usize,
}

impl Rows {
    fn from(data: &TrainingSet) -> Rows {
        let mut index: HashMap<(&[i64], usize), usize> = HashMap::new();
        let mut rows = Rows { features: Vec::new(), label: Vec::new(), weight: Vec::new(), num_classes: 0 };
        for (f, a) in &data.records {
            rows.num_classes = rows.num_classes.max(a + 1);
            match index.get(&(f.as_slice(), *a)) {
                Some(&i) => rows.weight[i] += 1,
                None => {
                    index.insert((f.as_slice(), *a), rows.features.len());
                    rows.features.push(f.clone());
                    rows.label.push(*a);
                    rows.weight.push(1);
                }
            }
        }
        rows
    }

    fn counts(&self, idx: &[usize]) -> Vec<u64> {
        let mut c = vec![0u64; self.num_classes];
        for &i in idx {
            c[self.label[i]] += self.weight[i];
        }
        c
    }
}

/// Best `feature <= threshold` split of the rows in `idx`: (gain, feature, threshold).
fn best_split(rows: &Rows, idx: &[usize], counts: &[u64], criterion: Criterion) -> Option<(f64, usize, f64)> {
    let num_features = rows.features[idx[0]].len();
    let mut best: Option<(f64, usize, f64)> = None;
    let mut order: Vec<usize> = idx.to_vec();
    for f in 0..num_features {
        order.sort_by_key(|&i| rows.features[i][f]);
        let mut left = vec![0u64; rows.num_classes];
        for k in 0..order.len() - 1 {
            let i = order[k];
            left[rows.label[i]] += rows.weight[i];
            let (v, w) = (rows.features[i][f], rows.features[order[k + 1]][f]);
            if v == w {
                continue;
            }
            let gain = split_gain(criterion, counts, &left);
            // Zero-gain splits are still taken so impure nodes keep refining.
            if best.is_none_or(|(g, _, _)| gain > g + 1e-12) {
                best = Some((gain, f, (v as f64 + w as f64) / 2.0));
            }
        }
    }
    best
}

pub fn learn_tree(data: &TrainingSet, options: &LearnOptions) -> Result<DecisionTree, TreeError> {
    if data.records.is_empty() {
        return Err(TreeError::EmptyData);
    }
    let arity = data.feature_names.len();
    if let Some((f, _)) = data.records.iter().find(|(f, _)| f.len() != arity) {
        return Err(TreeError::Arity { expected: arity, found: f.len() });
    }
    let rows = Rows::from(data);
    let idx: Vec<usize> = (0..rows.features.len()).collect();
    let root = grow(&rows, idx, 0, options);
    Ok(DecisionTree { feature_names: data.feature_names.clone(), root })
}

fn grow(rows: &Rows, idx: Vec<usize>, depth: usize, options: &LearnOptions) -> Node {
    let counts = rows.counts(&idx);
    let total: u64 = counts.iter().sum();
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    let leaf = |counts: Vec<u64>| Node::Leaf { action: majority(&counts), counts };
    if pure || (total as usize) < options.min_leaf || options.max_depth.is_some_and(|d| depth >= d) {
        return leaf(counts);
    }
    let Some((_, feature, threshold)) = best_split(rows, &idx, &counts, options.criterion) else {
        return leaf(counts);
    };
    let (yes, no): (Vec<usize>, Vec<usize>) =
        idx.into_iter().partition(|&i| (rows.features[i][feature] as f64) <= threshold);
    Node::Split {
        feature,
        cmp: Comparator::Le,
        threshold,
        yes: Box::new(grow(rows, yes, depth + 1, options)),
        no: Box::new(grow(rows, no, depth + 1, options)),
        counts,
    }
}

// ---------------------------------------------------------------------------
// Pruning

/// Misclassified training records plus `alpha` per leaf.
pub fn objective(tree: &DecisionTree, data: &TrainingSet, alpha: f64) -> f64 {
    let wrong = data.records.iter().filter(|(f, a)| tree.eval(f).map(|p| p != *a).unwrap_or(true)).count();
    wrong as f64 + alpha * tree.leaves() as f64
}

/// Cost-complexity pruning: collapses a subtree into its majority leaf when
/// that strictly lowers misclassifications + `alpha` * leaves.
pub fn prune_tree(tree: &DecisionTree, data: &TrainingSet, alpha: f64) -> DecisionTree {
    let num_classes =
        data.records.iter().map(|(_, a)| a + 1).chain(std::iter::once(max_action(&tree.root) + 1)).max().unwrap_or(1);
    let mut root = tree.root.clone();
    let all: Vec<usize> = (0..data.records.len()).collect();
    recount(&mut root, data, &all, num_classes);
    if alpha.is_infinite() {
        let counts = root.counts().to_vec();
        return DecisionTree {
            feature_names: tree.feature_names.clone(),
            root: Node::Leaf { action: majority(&counts), counts },
        };
    }
    prune_node(&mut root, alpha);
    DecisionTree { feature_names: tree.feature_names.clone(), root }
}

fn max_action(node: &Node) -> usize {
    match node {
        Node::Leaf { action, .. } => *action,
        Node::Split { yes, no, .. } => max_action(yes).max(max_action(no)),
    }
}

fn recount(node: &mut Node, data: &TrainingSet, idx: &[usize], num_classes: usize) {
    let mut c = vec![0u64; num_classes];
    for &i in idx {
        c[data.records[i].1] += 1;
    }
    match node {
        Node::Leaf { counts, .. } => *counts = c,
        Node::Split { feature, cmp, threshold, yes, no, counts } => {
            *counts = c;
            let (y, n): (Vec<usize>, Vec<usize>) =
                idx.iter().partition(|&&i| cmp.holds(data.records[i].0[*feature] as f64, *threshold));
            recount(yes, data, &y, num_classes);
            recount(no, data, &n, num_classes);
        }
    }
}

/// Prunes bottom-up; returns the subtree's (misclassified, leaves).
fn prune_node(node: &mut Node, alpha: f64) -> (u64, usize) {
    match node {
        Node::Leaf { action, counts } => {
            let total: u64 = counts.iter().sum();
            (total - counts.get(*action).copied().unwrap_or(0), 1)
        }
        Node::Split { yes, no, counts, .. } => {
            let (ey, ly) = prune_node(yes, alpha);
            let (en, ln) = prune_node(no, alpha);
            let (err, leaves) = (ey + en, ly + ln);
            let action = majority(counts);
            let total: u64 = counts.iter().sum();
            let collapsed = total - counts.get(action).copied().unwrap_or(0);
            if collapsed as f64 + alpha < err as f64 + alpha * leaves as f64 {
                *node = Node::Leaf { action, counts: std::mem::take(counts) };
                (collapsed, 1)
            } else {
                (err, leaves)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Training data and execution

/// Simulates `policy` for `simulations` runs of at most `steps` steps and
/// records the features of every pre-decision belief with the chosen action.
/// Run `i` draws from stream `i` of `seed`.
pub fn generate_training_data(
    policy: &mut dyn Policy,
    product: &ProductPomdp,
    features: &FeatureMap,
    precision: u32,
    simulations: usize,
    steps: usize,
    seed: u64,
) -> Result<TrainingSet, PolicyError> {
    let mut set = TrainingSet { feature_names: features.names().to_vec(), records: Vec::new() };
    for i in 0..simulations {
        let mut rng = stream_rng(seed, i as u64);
        let mut x = sample_index(&mut rng, &product.initial);
        let z0 = product.observation[x];
        let mut belief = Belief::initial(product, z0)?;
        policy.reset(z0)?;
        for _ in 0..steps {
            if product.targets[x] || product.is_sink(x) {
                break;
            }
            let a = policy.decide(&mut rng)?;
            set.records.push((features.features(&discretize_sparse(product, &belief, precision)), a));
            x = sample_index(&mut rng, &product.transitions[x][a]);
            let z = product.observation[x];
            belief = belief_update(product, &belief, a, z)?;
            policy.observe(a, z)?;
        }
    }
    Ok(set)
}

/// Executes a tree on the current belief; disallowed recommendations fall
/// back to a uniform allowed action.
#[derive(Debug, Clone)]
pub struct DtPolicy<'a> {
    tree: &'a DecisionTree,
    features: &'a FeatureMap,
    product: &'a ProductPomdp,
    precision: u32,
    tracker: SupportTracker<'a>,
    belief: Option<Belief>,
    decisions: u64,
    fallbacks: u64,
}

impl<'a> DtPolicy<'a> {
    pub fn new(
        tree: &'a DecisionTree,
        features: &'a FeatureMap,
        product: &'a ProductPomdp,
        graph: &'a SupportGraph,
        allowed: &'a AllowedTable,
        precision: u32,
    ) -> Self {
        DtPolicy {
            tree,
            features,
            product,
            precision,
            tracker: SupportTracker::new(graph, allowed),
            belief: None,
            decisions: 0,
            fallbacks: 0,
        }
    }
}

impl Policy for DtPolicy<'_> {
    fn reset(&mut self, observation: usize) -> Result<(), PolicyError> {
        self.tracker.reset(observation)?;
        self.belief = Some(Belief::initial(self.product, observation)?);
        Ok(())
    }

    fn decide(&mut self, rng: &mut dyn RngCore) -> Result<usize, PolicyError> {
        let belief = self.belief.as_ref().ok_or(PolicyError::NotStarted)?;
        let actions = self.tracker.allowed_actions()?;
        let f = self.features.features(&discretize_sparse(self.product, belief, self.precision));
        let a = self.tree.eval(&f)?;
        self.decisions += 1;
        if actions.contains(&a) {
            Ok(a)
        } else {
            self.fallbacks += 1;
            Ok(actions[uniform_index(rng, actions.len())])
        }
    }

    fn observe(&mut self, action: usize, observation: usize) -> Result<(), PolicyError> {
        let belief = self.belief.as_ref().ok_or(PolicyError::NotStarted)?;
        self.belief = Some(belief_update(self.product, belief, action, observation)?);
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

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn grid_energy_tree() -> DecisionTree {
        let mut n: Vec<String> = (1..=8).map(|c| format!("x{c}")).collect();
        n.extend((1..=8).map(|r| format!("y{r}")));
        n.push("Energy".into());
        DecisionTree::parse("(Energy < 2.5 (y7 >= 10 [2] [1]) [0])", &n).unwrap()
    }

    fn features(tree: &DecisionTree, set: &[(&str, i64)]) -> Vec<i64> {
        let mut f = vec![0; tree.feature_names.len()];
        for &(k, v) in set {
            f[tree.feature_names.iter().position(|n| n == k).unwrap()] = v;
        }
        f
    }

    #[test]
    fn grid_energy_tree_evaluation() {
        let t = grid_energy_tree();
        assert_eq!(t.eval(&features(&t, &[("Energy", 5)])).unwrap(), 0);
        assert_eq!(t.eval(&features(&t, &[("Energy", 2), ("y7", 12)])).unwrap(), 2);
        assert_eq!(t.eval(&features(&t, &[("Energy", 2), ("y7", 3)])).unwrap(), 1);
        assert_eq!(t.size(), 5);
        let dot = t.to_dot(&names(&["forward", "turn-left", "turn-right"]));
        assert_eq!(dot.matches("->").count(), 4);
        assert_eq!(dot.matches("label=").count(), 9);
    }

    #[test]
    fn arity_mismatch() {
        assert!(matches!(grid_energy_tree().eval(&[1, 2]), Err(PolicyError::Arity { expected: 17, found: 2 })));
    }

    #[test]
    fn text_round_trip() {
        let t = grid_energy_tree();
        let back = DecisionTree::parse(&t.to_string(), &t.feature_names).unwrap();
        assert_eq!(back, t);
        let leaf = DecisionTree::single_leaf(names(&["a"]), 3);
        assert_eq!(leaf.to_string(), "[3]");
        assert_eq!(leaf.to_dot(&[]).matches("n0").count(), 1);
    }

    #[test]
    fn parse_errors() {
        let n = names(&["a"]);
        assert_eq!(DecisionTree::parse("(b <= 1 [0] [1])", &n).unwrap_err(), TreeError::UnknownFeature("b".into()));
        assert!(matches!(DecisionTree::parse("(a ~ 1 [0] [1])", &n), Err(TreeError::Syntax { .. })));
        assert!(matches!(DecisionTree::parse("(a <= 1 [0]", &n), Err(TreeError::Syntax { .. })));
        assert!(matches!(DecisionTree::parse("[0] [1]", &n), Err(TreeError::Syntax { .. })));
    }

    fn four() -> TrainingSet {
        TrainingSet {
            feature_names: names(&["x"]),
            records: vec![(vec![1], 0), (vec![2], 0), (vec![3], 1), (vec![4], 1)],
        }
    }

    #[test]
    fn four_record_split() {
        let d = four();
        assert!((split_gain(Criterion::InfoGain, &[2, 2], &[2, 0]) - 1.0).abs() < 1e-12);
        assert!((impurity(Criterion::Gini, &[2, 2]) - 0.5).abs() < 1e-12);
        assert!((split_gain(Criterion::Gini, &[2, 2], &[2, 0]) - 0.5).abs() < 1e-12);
        for c in [Criterion::InfoGain, Criterion::Gini] {
            let t = learn_tree(&d, &LearnOptions { criterion: c, min_leaf: 1, max_depth: None }).unwrap();
            assert_eq!(t.to_string(), "(x <= 2.5 [0] [1])");
        }
    }

    #[test]
    fn pruning_limits() {
        let d = four();
        let t = learn_tree(&d, &LearnOptions { min_leaf: 1, ..Default::default() }).unwrap();
        assert_eq!(prune_tree(&t, &d, 0.0), t);
        let leaf = prune_tree(&t, &d, f64::INFINITY);
        assert_eq!(leaf.size(), 1);
        let same = DecisionTree::parse("(x <= 2.5 [0] [0])", &d.feature_names).unwrap();
        assert_eq!(prune_tree(&same, &d, 1e-9).size(), 1);
    }

    #[test]
    fn empty_data_is_rejected() {
        let d = TrainingSet { feature_names: names(&["x"]), records: vec![] };
        assert_eq!(learn_tree(&d, &LearnOptions::default()).unwrap_err(), TreeError::EmptyData);
    }

    #[test]
    fn grid_positions_from_names() {
        assert_eq!(grid_position("r3c4N"), Some((3, 4)));
        assert_eq!(grid_position("r10c0G@goal"), Some((10, 0)));
        assert_eq!(grid_position("x2y1GB"), Some((1, 2)));
        assert_eq!(grid_position("exit"), None);
        assert_eq!(grid_position("rc"), None);
    }
}
