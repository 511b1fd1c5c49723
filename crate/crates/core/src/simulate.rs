//! Monte-Carlo policy evaluation with an energy audit on the base model.

use std::fmt::Write;

use rand::RngCore;
use rayon::prelude::*;

use crate::model::Pomdp;
use crate::policy::{Policy, PolicyError};
use crate::product::{BaseRun, ProductPomdp};
use crate::rtdp::{sample_index, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Target,
    Sink,
    Cutoff,
}

/// One step of a run: product state before the step, chosen action, the
/// following observation, the base-model energy level after the step, and
/// the step cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceStep {
    pub state: usize,
    pub action: usize,
    pub observation: usize,
    pub energy: i64,
    pub cost: i64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunResult {
    pub outcome: Outcome,
    pub steps: usize,
    pub cost: f64,
    pub violations: usize,
    pub decisions: u64,
    pub fallbacks: u64,
}

/// Steps `1..=m` (`m` the first target position, or the whole run) whose
/// energy level is not positive.
pub fn energy_violations(model: &Pomdp, run: &BaseRun) -> usize {
    let cap = model.capacity as i64;
    let mut level = cap;
    let mut prev = run.initial;
    let mut count = 0;
    if model.targets[prev] {
        return 0;
    }
    for &(a, s) in &run.steps {
        level = (level + model.energy[a][model.observation[prev]]).min(cap);
        if level <= 0 {
            count += 1;
        }
        if model.targets[s] {
            break;
        }
        prev = s;
    }
    count
}

/// Simulates one run. The initial state is drawn first, then each step draws
/// the policy's action and the successor, in that order.
pub fn run_episode(
    policy: &mut dyn Policy,
    product: &ProductPomdp,
    cutoff: usize,
    rng: &mut dyn RngCore,
    mut trace: Option<&mut Vec<TraceStep>>,
) -> Result<RunResult, PolicyError> {
    let base = &product.base;
    let audit = product.energy_enabled;
    let cap = base.capacity as i64;
    let stats0 = policy.fallback_stats().unwrap_or((0, 0));

    let mut x = sample_index(rng, &product.initial);
    policy.reset(product.observation[x])?;
    let mut level = cap;
    let mut violations = 0;
    let mut cost = 0i64;
    let mut steps = 0;
    let outcome = loop {
        if product.targets[x] {
            break Outcome::Target;
        }
        if product.is_sink(x) {
            break Outcome::Sink;
        }
        if steps >= cutoff {
            break Outcome::Cutoff;
        }
        let a = policy.decide(rng)?;
        let c = product.cost(x, a);
        cost += c;
        if audit {
            let s = product.base_state(x).expect("non-sink state");
            level = (level + base.energy[a][base.observation[s]]).min(cap);
            if level <= 0 {
                violations += 1;
            }
        }
        let y = sample_index(rng, &product.transitions[x][a]);
        let z = product.observation[y];
        if let Some(t) = trace.as_deref_mut() {
            t.push(TraceStep { state: x, action: a, observation: z, energy: level, cost: c });
        }
        x = y;
        steps += 1;
        if !product.is_sink(x) {
            policy.observe(a, z)?;
        }
    };
    let stats1 = policy.fallback_stats().unwrap_or((0, 0));
    Ok(RunResult {
        outcome,
        steps,
        cost: cost as f64,
        violations,
        decisions: stats1.0 - stats0.0,
        fallbacks: stats1.1 - stats0.1,
    })
}

/// Aggregated evaluation of one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub policy: String,
    /// Table entries or tree nodes, when meaningful.
    pub size: Option<usize>,
    pub sims: usize,
    pub cutoff: usize,
    pub seed: u64,
    pub val: f64,
    /// Half-width of the normal-approximation 95% confidence interval.
    pub half_width: f64,
    pub reach: f64,
    pub sink: f64,
    pub truncated: f64,
    pub mean_steps: f64,
    pub fallback_rate: Option<f64>,
    pub violations: usize,
}

impl EvalReport {
    /// Val underestimates the true value: some runs were cut off or died.
    pub fn is_lower_bound(&self) -> bool {
        self.truncated > 0.0 || self.sink > 0.0
    }

    pub fn val_text(&self) -> String {
        format!("{}{:.3}", if self.is_lower_bound() { "~" } else { "" }, self.val)
    }

    pub fn upper(&self) -> f64 {
        self.val + self.half_width
    }

    pub fn lower(&self) -> f64 {
        self.val - self.half_width
    }

    pub fn from_runs(policy: &str, runs: &[RunResult], cutoff: usize, seed: u64) -> Self {
        let n = runs.len();
        let nf = n.max(1) as f64;
        let mean = runs.iter().map(|r| r.cost).sum::<f64>() / nf;
        let var = if n > 1 { runs.iter().map(|r| (r.cost - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        let frac = |o: Outcome| runs.iter().filter(|r| r.outcome == o).count() as f64 / nf;
        let decisions: u64 = runs.iter().map(|r| r.decisions).sum();
        let fallbacks: u64 = runs.iter().map(|r| r.fallbacks).sum();
        EvalReport {
            policy: policy.to_string(),
            size: None,
            sims: n,
            cutoff,
            seed,
            val: mean,
            half_width: 1.96 * (var / nf).sqrt(),
            reach: frac(Outcome::Target),
            sink: frac(Outcome::Sink),
            truncated: frac(Outcome::Cutoff),
            mean_steps: runs.iter().map(|r| r.steps as f64).sum::<f64>() / nf,
            fallback_rate: (decisions > 0).then(|| fallbacks as f64 / decisions as f64),
            violations: runs.iter().map(|r| r.violations).sum(),
        }
    }

    pub fn with_size(mut self, size: usize) -> Self {
        self.size = Some(size);
        self
    }
}

/// Evaluates `sims` independent runs; run `i` draws from stream `i` of `seed`.
/// `threads = None` uses the global pool.
pub fn evaluate<P, F>(
    name: &str,
    make_policy: F,
    product: &ProductPomdp,
    sims: usize,
    cutoff: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<EvalReport, PolicyError>
where
    P: Policy,
    F: Fn() -> P + Sync + Send,
{
    let work = || -> Result<Vec<RunResult>, PolicyError> {
        (0..sims)
            .into_par_iter()
            .map_init(&make_policy, |policy, i| {
                let mut rng = stream_rng(seed, i as u64);
                run_episode(policy, product, cutoff, &mut rng, None)
            })
            .collect()
    };
    let runs = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build().expect("thread pool").install(work)?,
        None => work()?,
    };
    Ok(EvalReport::from_runs(name, &runs, cutoff, seed))
}

const COLUMNS: [&str; 11] =
    ["policy", "size", "val", "ci95", "reach", "sink", "cutoff", "steps", "fallback", "violations", "runs"];

fn row(r: &EvalReport) -> Vec<String> {
    vec![
        r.policy.clone(),
        r.size.map(|s| s.to_string()).unwrap_or_else(|| "-".into()),
        r.val_text(),
        format!("{:.3}", r.half_width),
        format!("{:.4}", r.reach),
        format!("{:.4}", r.sink),
        format!("{:.4}", r.truncated),
        format!("{:.2}", r.mean_steps),
        r.fallback_rate.map(|f| format!("{f:.4}")).unwrap_or_else(|| "-".into()),
        r.violations.to_string(),
        r.sims.to_string(),
    ]
}

/// Aligned plain-text table. Values prefixed with `~` are lower bounds.
pub fn report_table(reports: &[EvalReport]) -> String {
    let rows: Vec<Vec<String>> = reports.iter().map(row).collect();
    let widths: Vec<usize> = (0..COLUMNS.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([COLUMNS[c].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(COLUMNS.to_vec());
    for r in &rows {
        line(r.iter().map(String::as_str).collect());
    }
    out
}

pub fn report_csv(reports: &[EvalReport]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for r in reports {
        out.push_str(&row(r).join(","));
        out.push('\n');
    }
    out
}

/// One line per step: `state action observation energy cost`.
pub fn format_trace(product: &ProductPomdp, trace: &[TraceStep]) -> String {
    let mut out = String::new();
    let obs_name =
        |z: usize| product.base.observations.get(z).map(String::as_str).unwrap_or(crate::product::SINK_OBSERVATION);
    for t in trace {
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            product.state_name(t.state),
            product.base.actions[t.action],
            obs_name(t.observation),
            t.energy,
            t.cost
        );
    }
    out
}
