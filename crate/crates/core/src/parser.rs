//! Textual model format and training-set files.
//!
//! The model format is the classic POMDP file format (`states:`, `actions:`,
//! `observations:`, `start:`, `T:`, `O:`, `R:`) with `values: cost` semantics and
//! three additional statement kinds:
//!
//! ```text
//! capacity: <uint>
//! energy: <action|*> : <observation|*> : <int>
//! target: <state|*>
//! ```
//!
//! `R:` entries must not depend on the end state or the observation, i.e. they
//! take the form `R: <action> : <state> : * : * <cost>`. Energy pairs that are
//! never mentioned default to 0; a file without `capacity:` has the energy
//! objective disabled (capacity 0).

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::model::{determinize_observations, Distribution, Pomdp, RawPomdp, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub kind: ErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn syntax(tok: Pos, message: impl Into<String>) -> Self {
        ParseError { kind: ErrorKind::Syntax, line: tok.line, column: tok.column, message: message.into() }
    }

    fn semantic(tok: Pos, message: impl Into<String>) -> Self {
        ParseError { kind: ErrorKind::Semantic, line: tok.line, column: tok.column, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    pos: Pos,
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        };
        let bytes = line.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            if c.is_ascii_whitespace() {
                i += 1;
                continue;
            }
            let start = i;
            if c == b':' {
                i += 1;
            } else {
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b':' {
                    i += 1;
                }
            }
            out.push(Token { text: &line[start..i], pos: Pos { line: ln + 1, column: start + 1 } });
        }
    }
    out
}

const KEYWORDS: &[&str] = &[
    "discount",
    "values",
    "states",
    "actions",
    "observations",
    "start",
    "T",
    "O",
    "R",
    "capacity",
    "energy",
    "target",
];

/// Result of parsing: models whose observations are already a function of the
/// state come back as [`Pomdp`], others as [`RawPomdp`].
#[derive(Debug, Clone, PartialEq)]
pub enum ParsedModel {
    Deterministic(Pomdp),
    Probabilistic(RawPomdp),
}

impl ParsedModel {
    /// Converts to a state-observation model, determinizing when needed.
    pub fn into_pomdp(self) -> Pomdp {
        match self {
            ParsedModel::Deterministic(m) => m,
            ParsedModel::Probabilistic(m) => determinize_observations(&m),
        }
    }
}

struct Parser<'a> {
    toks: Vec<Token<'a>>,
    pos: usize,
    states: Option<Vec<String>>,
    actions: Option<Vec<String>>,
    observations: Option<Vec<String>>,
    values_cost: bool,
    start: Option<Vec<f64>>,
    // [s][a] -> successor -> prob
    trans: Vec<Vec<BTreeMap<usize, f64>>>,
    trans_line: Vec<Vec<Pos>>,
    // [s'][a] -> observation -> prob
    obs: Vec<Vec<BTreeMap<usize, f64>>>,
    obs_line: Vec<Vec<Pos>>,
    cost: Vec<Vec<i64>>,
    cost_line: Vec<Vec<Pos>>,
    energy: Vec<Vec<i64>>,
    capacity: Option<u32>,
    targets: Vec<bool>,
    start_pos: Pos,
}

type Res<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            toks: tokenize(text),
            pos: 0,
            states: None,
            actions: None,
            observations: None,
            values_cost: true,
            start: None,
            trans: Vec::new(),
            trans_line: Vec::new(),
            obs: Vec::new(),
            obs_line: Vec::new(),
            cost: Vec::new(),
            cost_line: Vec::new(),
            energy: Vec::new(),
            capacity: None,
            targets: Vec::new(),
            start_pos: Pos { line: 1, column: 1 },
        }
    }

    fn peek(&self) -> Option<Token<'a>> {
        self.toks.get(self.pos).copied()
    }

    fn last_pos(&self) -> Pos {
        self.toks.get(self.pos.saturating_sub(1)).map(|t| t.pos).unwrap_or(Pos { line: 1, column: 1 })
    }

    fn next(&mut self, what: &str) -> Res<Token<'a>> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(*t)
            }
            None => Err(ParseError::syntax(self.last_pos(), format!("unexpected end of input, expected {what}"))),
        }
    }

    fn expect_colon(&mut self) -> Res<()> {
        let t = self.next("':'")?;
        if t.text != ":" {
            return Err(ParseError::syntax(t.pos, format!("expected ':', found '{}'", t.text)));
        }
        Ok(())
    }

    /// True when the token at `i` begins a statement.
    fn statement_at(&self, i: usize) -> bool {
        let Some(t) = self.toks.get(i) else { return false };
        if !KEYWORDS.contains(&t.text) {
            return false;
        }
        match self.toks.get(i + 1) {
            Some(n) if n.text == ":" => true,
            Some(n) if t.text == "start" && (n.text == "include" || n.text == "exclude") => true,
            _ => false,
        }
    }

    /// Tokens up to the next statement start.
    fn rest_of_statement(&mut self) -> Vec<Token<'a>> {
        let mut out = Vec::new();
        while self.pos < self.toks.len() && !self.statement_at(self.pos) {
            out.push(self.toks[self.pos]);
            self.pos += 1;
        }
        out
    }

    fn parse(mut self) -> Res<RawPomdp> {
        while let Some(t) = self.peek() {
            if !self.statement_at(self.pos) {
                return Err(ParseError::syntax(t.pos, format!("expected a statement, found '{}'", t.text)));
            }
            self.pos += 1;
            match t.text {
                "discount" => {
                    self.expect_colon()?;
                    let v = self.next("discount value")?;
                    parse_f64(v)?;
                }
                "values" => {
                    self.expect_colon()?;
                    let v = self.next("'cost' or 'reward'")?;
                    self.values_cost = match v.text {
                        "cost" => true,
                        "reward" => false,
                        other => {
                            return Err(ParseError::syntax(
                                v.pos,
                                format!("expected 'cost' or 'reward', found '{other}'"),
                            ))
                        }
                    };
                }
                "states" | "actions" | "observations" => self.parse_names(t)?,
                "start" => self.parse_start(t)?,
                "T" => self.parse_transition(t)?,
                "O" => self.parse_observation(t)?,
                "R" => self.parse_cost(t)?,
                "capacity" => {
                    self.expect_colon()?;
                    if self.capacity.is_some() {
                        return Err(ParseError::semantic(t.pos, "duplicate capacity section"));
                    }
                    let v = self.next("capacity")?;
                    let cap: u32 = v.text.parse().map_err(|_| {
                        ParseError::syntax(v.pos, format!("expected non-negative integer capacity, found '{}'", v.text))
                    })?;
                    self.capacity = Some(cap);
                }
                "energy" => self.parse_energy(t)?,
                "target" => {
                    self.expect_colon()?;
                    self.require_preamble(t.pos)?;
                    let v = self.next("target state")?;
                    for s in self.resolve(v, Kind::State)? {
                        self.targets[s] = true;
                    }
                }
                _ => unreachable!(),
            }
            if let Some(n) = self.peek() {
                if !self.statement_at(self.pos) {
                    return Err(ParseError::syntax(
                        n.pos,
                        format!("unexpected '{}' after {} statement", n.text, t.text),
                    ));
                }
            }
        }
        self.finish()
    }

    fn parse_names(&mut self, kw: Token<'a>) -> Res<()> {
        self.expect_colon()?;
        let toks = self.rest_of_statement();
        if toks.is_empty() {
            return Err(ParseError::syntax(kw.pos, format!("{} section is empty", kw.text)));
        }
        let names: Vec<String> = if toks.len() == 1 && toks[0].text.chars().all(|c| c.is_ascii_digit()) {
            let n: usize = toks[0].text.parse().map_err(|_| ParseError::syntax(toks[0].pos, "invalid count"))?;
            if n == 0 {
                return Err(ParseError::semantic(toks[0].pos, format!("{} count must be positive", kw.text)));
            }
            (0..n).map(|i| i.to_string()).collect()
        } else {
            for (i, t) in toks.iter().enumerate() {
                if t.text == "*" || toks[..i].iter().any(|u| u.text == t.text) {
                    return Err(ParseError::semantic(t.pos, format!("invalid or duplicate name '{}'", t.text)));
                }
            }
            toks.iter().map(|t| t.text.to_string()).collect()
        };
        let slot = match kw.text {
            "states" => &mut self.states,
            "actions" => &mut self.actions,
            _ => &mut self.observations,
        };
        if slot.is_some() {
            return Err(ParseError::semantic(kw.pos, format!("duplicate {} section", kw.text)));
        }
        *slot = Some(names);
        if let (Some(s), Some(a), Some(z)) = (&self.states, &self.actions, &self.observations) {
            let (ns, na, nz) = (s.len(), a.len(), z.len());
            self.trans = vec![vec![BTreeMap::new(); na]; ns];
            self.trans_line = vec![vec![Pos::default(); na]; ns];
            self.obs = vec![vec![BTreeMap::new(); na]; ns];
            self.obs_line = vec![vec![Pos::default(); na]; ns];
            self.cost = vec![vec![0; na]; ns];
            self.cost_line = vec![vec![Pos::default(); na]; ns];
            self.energy = vec![vec![0; nz]; na];
            self.targets = vec![false; ns];
        }
        Ok(())
    }

    fn require_preamble(&self, pos: Pos) -> Res<()> {
        if self.states.is_none() || self.actions.is_none() || self.observations.is_none() {
            return Err(ParseError::semantic(pos, "states, actions and observations must be declared first"));
        }
        Ok(())
    }

    fn n(&self, kind: Kind) -> usize {
        self.names(kind).len()
    }

    fn names(&self, kind: Kind) -> &[String] {
        match kind {
            Kind::State => self.states.as_deref(),
            Kind::Action => self.actions.as_deref(),
            Kind::Observation => self.observations.as_deref(),
        }
        .unwrap_or(&[])
    }

    /// Resolves a name, index or `*` wildcard.
    fn resolve(&self, tok: Token<'a>, kind: Kind) -> Res<Vec<usize>> {
        if tok.text == "*" {
            return Ok((0..self.n(kind)).collect());
        }
        let names = self.names(kind);
        if let Some(i) = names.iter().position(|n| n == tok.text) {
            return Ok(vec![i]);
        }
        if let Ok(i) = tok.text.parse::<usize>() {
            if i < names.len() {
                return Ok(vec![i]);
            }
        }
        Err(ParseError::semantic(tok.pos, format!("unknown {} '{}'", kind.label(), tok.text)))
    }

    fn parse_start(&mut self, kw: Token<'a>) -> Res<()> {
        self.require_preamble(kw.pos)?;
        if self.start.is_some() {
            return Err(ParseError::semantic(kw.pos, "duplicate start section"));
        }
        self.start_pos = kw.pos;
        let ns = self.n(Kind::State);
        let mode = self.next("':'")?;
        let mode = match mode.text {
            ":" => None,
            "include" | "exclude" => {
                self.expect_colon()?;
                Some(mode.text)
            }
            _ => unreachable!(),
        };
        let toks = self.rest_of_statement();
        if toks.is_empty() {
            return Err(ParseError::syntax(kw.pos, "start section is empty"));
        }
        let dist = match mode {
            None if toks.len() == 1 && toks[0].text == "uniform" => vec![1.0 / ns as f64; ns],
            None if toks.len() == ns && toks.iter().all(|t| looks_numeric(t.text)) => {
                toks.iter().map(|&t| parse_f64(t)).collect::<Res<Vec<_>>>()?
            }
            None if toks.len() == 1 => {
                let mut d = vec![0.0; ns];
                d[self.resolve(toks[0], Kind::State)?[0]] = 1.0;
                d
            }
            None => {
                return Err(ParseError::syntax(
                    toks[0].pos,
                    format!("expected {ns} start probabilities, found {}", toks.len()),
                ))
            }
            Some(m) => {
                let mut set = vec![m == "exclude"; ns];
                for &t in &toks {
                    for s in self.resolve(t, Kind::State)? {
                        set[s] = m == "include";
                    }
                }
                let k = set.iter().filter(|&&b| b).count();
                if k == 0 {
                    return Err(ParseError::semantic(kw.pos, "start set is empty"));
                }
                set.iter().map(|&b| if b { 1.0 / k as f64 } else { 0.0 }).collect()
            }
        };
        self.start = Some(dist);
        Ok(())
    }

    /// Splits `a : b : c ... value-tokens` into up to `max` colon-separated
    /// index tokens and the trailing data tokens.
    fn indices_and_data(&mut self, kw: Token<'a>, max: usize) -> Res<(Vec<Token<'a>>, Vec<Token<'a>>)> {
        self.expect_colon()?;
        self.require_preamble(kw.pos)?;
        let mut idx = vec![self.next("identifier")?];
        while idx.len() < max && self.peek().map(|t| t.text == ":").unwrap_or(false) {
            self.pos += 1;
            idx.push(self.next("identifier")?);
        }
        if let Some(t) = self.peek() {
            if t.text == ":" {
                return Err(ParseError::syntax(t.pos, format!("too many ':' fields in {} statement", kw.text)));
            }
        }
        let data = self.rest_of_statement();
        Ok((idx, data))
    }

    fn parse_transition(&mut self, kw: Token<'a>) -> Res<()> {
        let (idx, data) = self.indices_and_data(kw, 3)?;
        let ns = self.n(Kind::State);
        let actions = self.resolve(idx[0], Kind::Action)?;
        match idx.len() {
            3 => {
                let from = self.resolve(idx[1], Kind::State)?;
                let to = self.resolve(idx[2], Kind::State)?;
                let p = single_value(kw, &data)?;
                for &a in &actions {
                    for &s in &from {
                        for &t in &to {
                            set_prob(&mut self.trans[s][a], t, p);
                            self.trans_line[s][a] = kw.pos;
                        }
                    }
                }
            }
            2 => {
                let from = self.resolve(idx[1], Kind::State)?;
                let row = self.row(kw, &data, ns)?;
                for &a in &actions {
                    for &s in &from {
                        self.trans[s][a] = row_map(&row);
                        self.trans_line[s][a] = kw.pos;
                    }
                }
            }
            _ => {
                let matrix = self.matrix(kw, &data, ns, ns, true)?;
                for &a in &actions {
                    for (s, row) in matrix.iter().enumerate() {
                        self.trans[s][a] = row_map(row);
                        self.trans_line[s][a] = kw.pos;
                    }
                }
            }
        }
        Ok(())
    }

    fn parse_observation(&mut self, kw: Token<'a>) -> Res<()> {
        let (idx, data) = self.indices_and_data(kw, 3)?;
        let (ns, nz) = (self.n(Kind::State), self.n(Kind::Observation));
        let actions = self.resolve(idx[0], Kind::Action)?;
        match idx.len() {
            3 => {
                let to = self.resolve(idx[1], Kind::State)?;
                let zs = self.resolve(idx[2], Kind::Observation)?;
                let p = single_value(kw, &data)?;
                for &a in &actions {
                    for &s in &to {
                        for &z in &zs {
                            set_prob(&mut self.obs[s][a], z, p);
                            self.obs_line[s][a] = kw.pos;
                        }
                    }
                }
            }
            2 => {
                let to = self.resolve(idx[1], Kind::State)?;
                let row = self.row(kw, &data, nz)?;
                for &a in &actions {
                    for &s in &to {
                        self.obs[s][a] = row_map(&row);
                        self.obs_line[s][a] = kw.pos;
                    }
                }
            }
            _ => {
                let matrix = self.matrix(kw, &data, ns, nz, false)?;
                for &a in &actions {
                    for (s, row) in matrix.iter().enumerate() {
                        self.obs[s][a] = row_map(row);
                        self.obs_line[s][a] = kw.pos;
                    }
                }
            }
        }
        Ok(())
    }

    fn parse_cost(&mut self, kw: Token<'a>) -> Res<()> {
        let (idx, data) = self.indices_and_data(kw, 4)?;
        if idx.len() != 4 {
            return Err(ParseError::syntax(
                kw.pos,
                "R statement must have the form 'R: <action> : <state> : * : * <cost>'",
            ));
        }
        for t in &idx[2..] {
            if t.text != "*" {
                return Err(ParseError::semantic(
                    t.pos,
                    "costs may depend only on the state and the action; use '*' for end state and observation",
                ));
            }
        }
        let actions = self.resolve(idx[0], Kind::Action)?;
        let states = self.resolve(idx[1], Kind::State)?;
        let v = single_value(kw, &data)?;
        let v = if self.values_cost { v } else { -v };
        if v.fract() != 0.0 || v.abs() > i64::MAX as f64 {
            return Err(ParseError::semantic(data[0].pos, format!("cost must be an integer, found {v}")));
        }
        for &a in &actions {
            for &s in &states {
                self.cost[s][a] = v as i64;
                self.cost_line[s][a] = kw.pos;
            }
        }
        Ok(())
    }

    fn parse_energy(&mut self, kw: Token<'a>) -> Res<()> {
        let (idx, data) = self.indices_and_data(kw, 3)?;
        // `energy: a : z : e` tokenizes the value as a third colon field.
        let (idx, value) = match (idx.len(), data.as_slice()) {
            (3, []) => (&idx[..2], idx[2]),
            _ => {
                return Err(ParseError::syntax(
                    kw.pos,
                    "energy statement must have the form 'energy: <action> : <observation> : <int>'",
                ))
            }
        };
        let e: i64 = value.text.parse().map_err(|_| {
            ParseError::syntax(value.pos, format!("expected integer energy change, found '{}'", value.text))
        })?;
        for a in self.resolve(idx[0], Kind::Action)? {
            for z in self.resolve(idx[1], Kind::Observation)? {
                self.energy[a][z] = e;
            }
        }
        Ok(())
    }

    fn row(&self, kw: Token<'a>, data: &[Token<'a>], n: usize) -> Res<Vec<f64>> {
        if data.len() == 1 && data[0].text == "uniform" {
            return Ok(vec![1.0 / n as f64; n]);
        }
        if data.len() != n {
            return Err(ParseError::syntax(
                kw.pos,
                format!("expected {n} probabilities in {} row, found {}", kw.text, data.len()),
            ));
        }
        data.iter().map(|&t| parse_f64(t)).collect()
    }

    fn matrix(&self, kw: Token<'a>, data: &[Token<'a>], rows: usize, cols: usize, square: bool) -> Res<Vec<Vec<f64>>> {
        if data.len() == 1 {
            match data[0].text {
                "uniform" => return Ok(vec![vec![1.0 / cols as f64; cols]; rows]),
                "identity" if square => {
                    return Ok((0..rows).map(|i| (0..cols).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect())
                }
                _ => {}
            }
        }
        if data.len() != rows * cols {
            return Err(ParseError::syntax(
                kw.pos,
                format!("expected {} entries in {} matrix, found {}", rows * cols, kw.text, data.len()),
            ));
        }
        let flat = data.iter().map(|&t| parse_f64(t)).collect::<Res<Vec<_>>>()?;
        Ok(flat.chunks(cols).map(|c| c.to_vec()).collect())
    }

    fn finish(self) -> Res<RawPomdp> {
        let eof = self.last_pos();
        let (Some(states), Some(actions), Some(observations)) = (self.states, self.actions, self.observations) else {
            return Err(ParseError::semantic(eof, "missing states, actions or observations section"));
        };
        let Some(start) = self.start else {
            return Err(ParseError::semantic(eof, "missing start section"));
        };
        let to_dist = |m: &BTreeMap<usize, f64>| -> Distribution { m.iter().map(|(&i, &p)| (i, p)).collect() };
        let model = RawPomdp {
            transitions: self.trans.iter().map(|r| r.iter().map(to_dist).collect()).collect(),
            observation: self.obs.iter().map(|r| r.iter().map(to_dist).collect()).collect(),
            initial: start.iter().enumerate().filter(|(_, &p)| p != 0.0).map(|(i, &p)| (i, p)).collect(),
            cost: self.cost,
            energy: self.energy,
            capacity: self.capacity.unwrap_or(0),
            targets: self.targets,
            states,
            actions,
            observations,
        };
        if let Some(v) = model.validate().into_iter().next() {
            let pos = match &v {
                Violation::TransitionSum { state, action, .. } => self.trans_line[*state][*action],
                Violation::ObservationSum { state, action, .. } => self.obs_line[*state][*action],
                Violation::NonPositiveCost { state, action, .. } => self.cost_line[*state][*action],
                Violation::InitialSum { .. } | Violation::EmptyInitial => self.start_pos,
                _ => eof,
            };
            let pos = if pos.line == 0 { eof } else { pos };
            let msg = describe(&v, &model);
            return Err(ParseError::semantic(pos, msg));
        }
        Ok(model)
    }
}

fn describe(v: &Violation, m: &RawPomdp) -> String {
    match v {
        Violation::TransitionSum { state, action, sum } => format!(
            "transition distribution for state '{}' under action '{}' sums to {sum}",
            m.states[*state], m.actions[*action]
        ),
        Violation::ObservationSum { state, action, sum } => format!(
            "observation distribution for state '{}' under action '{}' sums to {sum}",
            m.states[*state], m.actions[*action]
        ),
        Violation::NonPositiveCost { state, action, cost } => {
            format!("non-positive cost {cost} for state '{}' under action '{}'", m.states[*state], m.actions[*action])
        }
        other => other.to_string(),
    }
}

#[derive(Clone, Copy)]
enum Kind {
    State,
    Action,
    Observation,
}

impl Kind {
    fn label(self) -> &'static str {
        match self {
            Kind::State => "state",
            Kind::Action => "action",
            Kind::Observation => "observation",
        }
    }
}

fn looks_numeric(s: &str) -> bool {
    s.parse::<f64>().is_ok()
}

fn parse_f64(t: Token<'_>) -> Res<f64> {
    t.text
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ParseError::syntax(t.pos, format!("expected a number, found '{}'", t.text)))
}

fn single_value(kw: Token<'_>, data: &[Token<'_>]) -> Res<f64> {
    match data {
        [v] => parse_f64(*v),
        [] => Err(ParseError::syntax(kw.pos, format!("missing value in {} statement", kw.text))),
        [_, extra, ..] => {
            Err(ParseError::syntax(extra.pos, format!("unexpected '{}' in {} statement", extra.text, kw.text)))
        }
    }
}

fn set_prob(row: &mut BTreeMap<usize, f64>, i: usize, p: f64) {
    if p == 0.0 {
        row.remove(&i);
    } else {
        row.insert(i, p);
    }
}

fn row_map(row: &[f64]) -> BTreeMap<usize, f64> {
    row.iter().enumerate().filter(|(_, &p)| p != 0.0).map(|(i, &p)| (i, p)).collect()
}

/// Parses a model file.
pub fn parse_model(text: &str) -> Result<ParsedModel, ParseError> {
    let raw = Parser::new(text).parse()?;
    Ok(match raw.deterministic_observations() {
        Some(_) => ParsedModel::Deterministic(determinize_observations(&raw)),
        None => ParsedModel::Probabilistic(raw),
    })
}

/// Parses a model file and determinizes its observations if necessary.
pub fn parse_pomdp(text: &str) -> Result<Pomdp, ParseError> {
    parse_model(text).map(ParsedModel::into_pomdp)
}

struct Names<'a>(&'a [String]);

impl fmt::Display for Names<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().enumerate().all(|(i, n)| *n == i.to_string()) {
            return write!(f, "{}", self.0.len());
        }
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(n)?;
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn emit_common(
    out: &mut String,
    states: &[String],
    actions: &[String],
    observations: &[String],
    initial: &Distribution,
    capacity: u32,
    targets: &[bool],
    transitions: &[Vec<Distribution>],
) {
    use std::fmt::Write;
    let _ = writeln!(out, "values: cost");
    let _ = writeln!(out, "states: {}", Names(states));
    let _ = writeln!(out, "actions: {}", Names(actions));
    let _ = writeln!(out, "observations: {}", Names(observations));
    let mut start = vec![0.0; states.len()];
    for &(s, p) in initial {
        start[s] = p;
    }
    let _ = write!(out, "start:");
    for p in start {
        let _ = write!(out, " {p}");
    }
    let _ = writeln!(out);
    if capacity > 0 {
        let _ = writeln!(out, "capacity: {capacity}");
    }
    for (s, &t) in targets.iter().enumerate() {
        if t {
            let _ = writeln!(out, "target: {}", states[s]);
        }
    }
    for (s, row) in transitions.iter().enumerate() {
        for (a, dist) in row.iter().enumerate() {
            for &(t, p) in dist {
                let _ = writeln!(out, "T: {} : {} : {} {p}", actions[a], states[s], states[t]);
            }
        }
    }
}

fn emit_costs_and_energy(
    out: &mut String,
    states: &[String],
    actions: &[String],
    observations: &[String],
    cost: &[Vec<i64>],
    energy: &[Vec<i64>],
) {
    use std::fmt::Write;
    let first = cost.first().and_then(|r| r.first()).copied();
    if let Some(c0) = first.filter(|&c0| cost.iter().flatten().all(|&c| c == c0)) {
        let _ = writeln!(out, "R: * : * : * : * {c0}");
    } else {
        for (s, row) in cost.iter().enumerate() {
            for (a, c) in row.iter().enumerate() {
                let _ = writeln!(out, "R: {} : {} : * : * {c}", actions[a], states[s]);
            }
        }
    }
    for (a, row) in energy.iter().enumerate() {
        for (z, &e) in row.iter().enumerate() {
            if e != 0 {
                let _ = writeln!(out, "energy: {} : {} : {e}", actions[a], observations[z]);
            }
        }
    }
}

/// Renders a model in the extended file format.
pub fn emit_model(model: &Pomdp) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    emit_common(
        &mut out,
        &model.states,
        &model.actions,
        &model.observations,
        &model.initial,
        model.capacity,
        &model.targets,
        &model.transitions,
    );
    for (s, &z) in model.observation.iter().enumerate() {
        let _ = writeln!(out, "O: * : {} : {} 1", model.states[s], model.observations[z]);
    }
    emit_costs_and_energy(&mut out, &model.states, &model.actions, &model.observations, &model.cost, &model.energy);
    out
}

/// Renders a model with probabilistic observations.
pub fn emit_raw_model(model: &RawPomdp) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    emit_common(
        &mut out,
        &model.states,
        &model.actions,
        &model.observations,
        &model.initial,
        model.capacity,
        &model.targets,
        &model.transitions,
    );
    for (s, row) in model.observation.iter().enumerate() {
        for (a, dist) in row.iter().enumerate() {
            for &(z, p) in dist {
                let _ = writeln!(out, "O: {} : {} : {} {p}", model.actions[a], model.states[s], model.observations[z]);
            }
        }
    }
    emit_costs_and_energy(&mut out, &model.states, &model.actions, &model.observations, &model.cost, &model.energy);
    out
}

/// Feature vectors paired with action labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TrainingSet {
    pub feature_names: Vec<String>,
    pub records: Vec<(Vec<i64>, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrainingSetError {
    #[error("line {line}: expected {expected} columns, found {found}")]
    ColumnCount { line: usize, expected: usize, found: usize },
    #[error("line {line}: '{cell}' is not an integer")]
    NotInteger { line: usize, cell: String },
    #[error("line {line}: '{cell}' is not a valid action label")]
    BadLabel { line: usize, cell: String },
    #[error("missing header row")]
    MissingHeader,
}

impl TrainingSet {
    pub fn new(feature_names: Vec<String>) -> Self {
        TrainingSet { feature_names, records: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Column name of the action label.
pub const LABEL_COLUMN: &str = "action";

/// Comma-separated integers, header row first, action label last.
pub fn write_training_set(set: &TrainingSet) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    for name in &set.feature_names {
        out.push_str(name);
        out.push(',');
    }
    out.push_str(LABEL_COLUMN);
    out.push('\n');
    for (features, label) in &set.records {
        for v in features {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{label}");
    }
    out
}

pub fn read_training_set(text: &str) -> Result<TrainingSet, TrainingSetError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(TrainingSetError::MissingHeader)?;
    let mut cols: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
    cols.pop();
    let expected = cols.len() + 1;
    let mut set = TrainingSet::new(cols);
    for (i, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != expected {
            return Err(TrainingSetError::ColumnCount { line: i + 1, expected, found: cells.len() });
        }
        let features = cells[..expected - 1]
            .iter()
            .map(|c| c.parse::<i64>().map_err(|_| TrainingSetError::NotInteger { line: i + 1, cell: c.to_string() }))
            .collect::<Result<Vec<_>, _>>()?;
        let last = cells[expected - 1];
        let label = last.parse::<usize>().map_err(|_| {
            if last.parse::<i64>().is_ok() {
                TrainingSetError::BadLabel { line: i + 1, cell: last.to_string() }
            } else {
                TrainingSetError::NotInteger { line: i + 1, cell: last.to_string() }
            }
        })?;
        set.records.push((features, label));
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
# two-state corridor
values: cost
states: s0 s1
actions: move stay
observations: here there
start: 1.0 0.0
capacity: 5
target: s1
T: move : s0 : s1 1.0
T: move : s1 : s1 1.0
T: stay : * : * 0.5
O: * : s0 : here 1.0
O: * : s1 : there 1.0
R: * : * : * : * 1
energy: move : * : -1
";

    #[test]
    fn minimal_file_with_energy() {
        let m = parse_pomdp(MINIMAL).unwrap();
        assert_eq!(m.capacity, 5);
        assert_eq!(m.energy[0], vec![-1, -1]);
        assert_eq!(m.energy[1], vec![0, 0]);
        assert_eq!(m.targets, vec![false, true]);
        assert_eq!(m.observation, vec![0, 1]);
        assert_eq!(m.transitions[0][1], vec![(0, 0.5), (1, 0.5)]);
        assert!(m.validate().is_empty());
    }

    #[test]
    fn missing_energy_section_means_capacity_zero() {
        let text: String = MINIMAL
            .lines()
            .filter(|l| !l.starts_with("capacity") && !l.starts_with("energy"))
            .map(|l| format!("{l}\n"))
            .collect();
        let m = parse_pomdp(&text).unwrap();
        assert_eq!(m.capacity, 0);
        assert!(m.energy.iter().flatten().all(|&e| e == 0));
    }

    #[test]
    fn short_row_is_a_syntax_error_on_its_line() {
        let text = MINIMAL.replace("T: move : s1 : s1 1.0", "T: move : s1 0.5");
        let err = parse_pomdp(&text).unwrap_err();
        assert_eq!(err.kind, ErrorKind::Syntax);
        assert_eq!(err.line, 10);
        assert!(err.to_string().starts_with("10:"));
    }

    #[test]
    fn semantic_errors_carry_locations() {
        let err = parse_pomdp(&MINIMAL.replace("target: s1", "target: s9")).unwrap_err();
        assert_eq!((err.kind, err.line), (ErrorKind::Semantic, 8));
        assert!(err.message.contains("unknown state 's9'"));

        let err = parse_pomdp(&format!("{MINIMAL}capacity: 3\n")).unwrap_err();
        assert!(err.message.contains("duplicate capacity"));

        let err = parse_pomdp(&MINIMAL.replace("T: move : s1 : s1 1.0\n", "")).unwrap_err();
        assert_eq!(err.kind, ErrorKind::Semantic);
        assert!(err.message.contains("sums to 0"), "{err}");

        let err = parse_pomdp(&MINIMAL.replace("R: * : * : * : * 1", "R: * : * : * : * 0")).unwrap_err();
        assert!(err.message.contains("non-positive cost"));
        assert_eq!(err.line, 14);

        let err = parse_pomdp(&MINIMAL.replace("R: * : * : * : * 1", "R: * : * : s1 : * 1")).unwrap_err();
        assert_eq!(err.kind, ErrorKind::Semantic);
    }

    #[test]
    fn row_and_matrix_forms() {
        let text = "\
states: 2
actions: a
observations: z
start: uniform
T: a
identity
O: a uniform
R: a : * : * : * 2
";
        let m = parse_pomdp(text).unwrap();
        assert_eq!(m.states, vec!["0", "1"]);
        assert_eq!(m.transitions[1][0], vec![(1, 1.0)]);
        assert_eq!(m.initial, vec![(0, 0.5), (1, 0.5)]);
        assert_eq!(m.cost, vec![vec![2], vec![2]]);
    }

    #[test]
    fn emit_round_trip() {
        let m = parse_pomdp(MINIMAL).unwrap();
        let text = emit_model(&m);
        assert_eq!(parse_pomdp(&text).unwrap(), m);
    }

    #[test]
    fn zero_energy_emits_no_energy_lines() {
        let mut m = parse_pomdp(MINIMAL).unwrap();
        for row in &mut m.energy {
            row.iter_mut().for_each(|e| *e = 0);
        }
        assert!(!emit_model(&m).contains("energy:"));
    }

    #[test]
    fn single_state_model() {
        let text = "states: only\nactions: a\nobservations: z\nstart: only\nT: a : only : only 1\nO: a : only : z 1\nR: a : only : * : * 1\n";
        let m = parse_pomdp(text).unwrap();
        let emitted = emit_model(&m);
        assert!(emitted.contains("states: only\n"));
        assert_eq!(parse_pomdp(&emitted).unwrap(), m);
    }

    #[test]
    fn probabilistic_observations_stay_raw() {
        let text = MINIMAL.replace("O: * : s1 : there 1.0", "O: * : s1 : there 0.6\nO: * : s1 : here 0.4");
        match parse_model(&text).unwrap() {
            ParsedModel::Probabilistic(raw) => {
                assert_eq!(raw.observation[1][0], vec![(0, 0.4), (1, 0.6)]);
                let back = parse_model(&emit_raw_model(&raw)).unwrap();
                assert_eq!(back, ParsedModel::Probabilistic(raw));
            }
            other => panic!("expected raw model, got {other:?}"),
        }
    }

    #[test]
    fn training_set_encoding() {
        let mut set = TrainingSet::new(vec!["s0".into(), "s1".into(), "Energy".into()]);
        assert_eq!(write_training_set(&set), "s0,s1,Energy,action\n");
        set.records.push((vec![7, 13, 4], 2));
        let text = write_training_set(&set);
        assert!(text.ends_with("7,13,4,2\n"));
        assert_eq!(read_training_set(&text).unwrap(), set);
    }

    #[test]
    fn training_set_errors() {
        assert!(matches!(
            read_training_set("a,b,action\n1,2\n"),
            Err(TrainingSetError::ColumnCount { line: 2, expected: 3, found: 2 })
        ));
        assert!(matches!(read_training_set("a,action\n1.5,2\n"), Err(TrainingSetError::NotInteger { line: 2, .. })));
        assert!(matches!(read_training_set(""), Err(TrainingSetError::MissingHeader)));
    }
}
