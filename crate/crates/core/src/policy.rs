//! Executable policies.
//!
//! A policy object is a stateful executor: it is reset with the first
//! observation, asked for an action, and told which observation followed.
//! Executors borrow the (immutable) analysis results, so one executor per
//! simulation thread is cheap.

use rand::RngCore;
use thiserror::Error;

use crate::belief::{Belief, BeliefError};
use crate::qualitative::{AllowedTable, SupportGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("no initial belief support for observation {0}")]
    UnknownInitialObservation(usize),
    #[error("support {support}: action {action} cannot produce observation {observation}")]
    EmptySuccessor { support: usize, action: usize, observation: usize },
    #[error("support {support} has no allowed action")]
    NoAllowedAction { support: usize },
    #[error("policy used before reset")]
    NotStarted,
    #[error("feature vector has {found} entries, tree expects {expected}")]
    Arity { expected: usize, found: usize },
    #[error(transparent)]
    Belief(#[from] BeliefError),
}

pub trait Policy {
    /// Starts a new run after the initial observation.
    fn reset(&mut self, observation: usize) -> Result<(), PolicyError>;

    /// Chooses the next action.
    fn decide(&mut self, rng: &mut dyn RngCore) -> Result<usize, PolicyError>;

    /// Reports the observation that followed `action`.
    fn observe(&mut self, action: usize, observation: usize) -> Result<(), PolicyError>;

    /// Current exact belief, for executors that maintain one.
    fn belief(&self) -> Option<&Belief> {
        None
    }

    /// `(decisions, fallbacks)` for executors that can fall back to uniform
    /// allowed actions.
    fn fallback_stats(&self) -> Option<(u64, u64)> {
        None
    }
}

/// Follows the current belief support through the support graph.
#[derive(Debug, Clone)]
pub struct SupportTracker<'a> {
    pub graph: &'a SupportGraph,
    pub allowed: &'a AllowedTable,
    vertex: Option<usize>,
}

impl<'a> SupportTracker<'a> {
    pub fn new(graph: &'a SupportGraph, allowed: &'a AllowedTable) -> Self {
        SupportTracker { graph, allowed, vertex: None }
    }

    pub fn reset(&mut self, observation: usize) -> Result<(), PolicyError> {
        let v = self.graph.initial_vertex(observation).ok_or(PolicyError::UnknownInitialObservation(observation))?;
        self.vertex = Some(v);
        Ok(())
    }

    pub fn advance(&mut self, action: usize, observation: usize) -> Result<usize, PolicyError> {
        let v = self.vertex()?;
        let next = self.graph.successor(v, action, observation).ok_or(PolicyError::EmptySuccessor {
            support: v,
            action,
            observation,
        })?;
        self.vertex = Some(next);
        Ok(next)
    }

    pub fn vertex(&self) -> Result<usize, PolicyError> {
        self.vertex.ok_or(PolicyError::NotStarted)
    }

    /// Allowed actions of the current support; empty sets are a contract violation.
    pub fn allowed_actions(&self) -> Result<&'a [usize], PolicyError> {
        let v = self.vertex()?;
        let acts = self.allowed.actions(v);
        if acts.is_empty() {
            return Err(PolicyError::NoAllowedAction { support: v });
        }
        Ok(acts)
    }

    /// Uniform draw from the allowed actions.
    pub fn uniform(&self, rng: &mut dyn RngCore) -> Result<usize, PolicyError> {
        let acts = self.allowed_actions()?;
        Ok(acts[uniform_index(rng, acts.len())])
    }
}

/// Uniform index in `0..n`; shared by every executor so that fallbacks consume
/// randomness identically.
pub fn uniform_index(rng: &mut dyn RngCore, n: usize) -> usize {
    use rand::Rng;
    rng.random_range(0..n)
}
