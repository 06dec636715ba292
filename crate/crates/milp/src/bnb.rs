use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use crate::error::LpError;
use crate::lp::{BasisSnapshot, DualSimplex, LpStatus};
use crate::model::{Constraint, MilpModel, VarId};
use crate::tolerances::Tolerances;

/// Floor on the incumbent magnitude used when normalizing the gap.
pub const GAP_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSettings {
    /// Relative optimality gap at which the search stops.
    pub rel_gap: f64,
    /// Maximum number of node LPs solved.
    pub node_limit: usize,
    /// Re-solve each new incumbent with its binaries rounded and fixed, so
    /// the reported point is exactly integral.
    pub polish_incumbents: bool,
    pub tolerances: Tolerances,
}

impl Default for MilpSettings {
    fn default() -> Self {
        Self {
            rel_gap: 1e-4,
            node_limit: 1_000_000,
            polish_incumbents: true,
            tolerances: Tolerances::default(),
        }
    }
}

impl MilpSettings {
    pub fn with_gap(rel_gap: f64) -> Self {
        Self {
            rel_gap,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// The tree was exhausted; no open node could beat the incumbent.
    Optimal,
    /// Stopped because the remaining nodes could improve the incumbent by at
    /// most the relative gap tolerance.
    GapLimit,
    NodeLimit,
    Infeasible,
}

impl SolveStatus {
    /// True when the incumbent is proven optimal within the gap tolerance.
    pub fn is_solved(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::GapLimit)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::GapLimit => "gap-limit",
            SolveStatus::NodeLimit => "node-limit",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub wall_time: Duration,
    pub values: Option<Vec<f64>>,
}

/// Observer for the search; every method has an empty default.
pub trait SearchMonitor {
    fn on_incumbent(&mut self, _values: &[f64], _objective: f64) {}
    /// Called after each node with the global bound and current incumbent.
    fn on_node(&mut self, _nodes: usize, _bound: f64, _incumbent: Option<f64>) {}
}

#[derive(Debug, Default, Clone, Copy)]
pub struct NoopMonitor;

impl SearchMonitor for NoopMonitor {}

/// Source of globally valid cutting planes, queried at fractional nodes.
pub trait CutGenerator {
    fn separate(&mut self, model: &MilpModel, values: &[f64]) -> Vec<Constraint>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct NoCuts;

impl CutGenerator for NoCuts {
    fn separate(&mut self, _model: &MilpModel, _values: &[f64]) -> Vec<Constraint> {
        Vec::new()
    }
}

#[derive(Debug, Clone)]
struct Node {
    bound: f64,
    seq: u64,
    fixings: Vec<(u32, bool)>,
    /// Optimal basis of the parent node, with the parent's sequence number.
    warm: Option<(u64, Rc<BasisSnapshot>)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap on bound; among equal bounds the older node first.
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

pub fn solve_milp(model: &MilpModel, settings: &MilpSettings) -> Result<SolveReport, LpError> {
    solve_milp_with(model, settings, &mut NoCuts, &mut NoopMonitor)
}

/// Branch-and-bound: depth-first until a first incumbent, best-bound after.
pub fn solve_milp_with(
    model: &MilpModel,
    settings: &MilpSettings,
    cuts: &mut dyn CutGenerator,
    monitor: &mut dyn SearchMonitor,
) -> Result<SolveReport, LpError> {
    let start = Instant::now();
    let mut lp = DualSimplex::new(model, settings.tolerances)?;
    let mut binaries: Vec<(usize, i32)> = model
        .binaries()
        .map(|v| (v.0, model.var(v).priority))
        .collect();
    binaries.sort_by_key(|&(j, p)| (std::cmp::Reverse(p), j));
    let int_tol = settings.tolerances.integrality;

    let mut stack: Vec<Node> = vec![Node {
        bound: f64::INFINITY,
        seq: 0,
        fixings: Vec::new(),
        warm: None,
    }];
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut seq = 1u64;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut pruned_bound = f64::NEG_INFINITY;
    let mut global_bound = f64::INFINITY;
    let mut nodes = 0usize;
    let mut hit_node_limit = false;
    let mut gap_closed = false;

    let threshold = |inc: &Option<(f64, Vec<f64>)>| -> f64 {
        match inc {
            Some((obj, _)) => obj + settings.rel_gap * obj.abs().max(GAP_EPSILON),
            None => f64::NEG_INFINITY,
        }
    };

    let mut plunge: Option<Node> = None;
    // Node whose optimal basis the LP currently holds.
    let mut lp_holds: Option<u64> = None;
    loop {
        let dived = plunge.is_some();
        let node = if incumbent.is_none() {
            stack.pop()
        } else if let Some(child) = plunge.take() {
            Some(child)
        } else {
            if !stack.is_empty() {
                heap.extend(stack.drain(..));
            }
            heap.pop()
        };
        let Some(node) = node else { break };
        if incumbent.is_some() && node.bound <= threshold(&incumbent) {
            pruned_bound = pruned_bound.max(node.bound);
            if dived {
                continue;
            }
            // Best-bound order: every remaining node is within the gap.
            for rest in heap.drain() {
                pruned_bound = pruned_bound.max(rest.bound);
            }
            gap_closed = true;
            break;
        }
        if nodes >= settings.node_limit {
            stack.push(node);
            hit_node_limit = true;
            break;
        }
        nodes += 1;

        lp.reset_bounds();
        for &(j, up) in &node.fixings {
            let v = if up { 1.0 } else { 0.0 };
            lp.set_var_bounds(VarId(j as usize), v, v);
        }
        if let Some((parent, snap)) = &node.warm {
            if lp_holds != Some(*parent) {
                lp.restore(snap);
            }
        }
        lp_holds = None;
        let mut status = lp.solve()?;
        let mut frac = None;
        let mut obj = f64::NEG_INFINITY;
        loop {
            if status == LpStatus::Infeasible {
                break;
            }
            obj = lp.objective().min(node.bound);
            frac = most_fractional(lp.values(), &binaries, int_tol);
            if frac.is_none() || obj <= threshold(&incumbent) {
                break;
            }
            let new_cuts = cuts.separate(model, lp.values());
            if new_cuts.is_empty() {
                break;
            }
            for c in &new_cuts {
                lp.add_row(&c.terms, c.sense, c.rhs);
            }
            status = lp.solve()?;
        }

        if status == LpStatus::Infeasible {
            // nothing to record
        } else if obj <= threshold(&incumbent) {
            pruned_bound = pruned_bound.max(obj);
        } else if let Some(j) = frac {
            let xj = lp.values()[j];
            let first_up = xj >= 0.5;
            let snap = Rc::new(lp.snapshot());
            lp_holds = Some(node.seq);
            let mut make = |up: bool| {
                let mut fixings = node.fixings.clone();
                fixings.push((j as u32, up));
                let child = Node {
                    bound: obj,
                    seq,
                    fixings,
                    warm: Some((node.seq, Rc::clone(&snap))),
                };
                seq += 1;
                child
            };
            let preferred = make(first_up);
            let other = make(!first_up);
            if incumbent.is_none() {
                stack.push(other);
                stack.push(preferred);
            } else {
                heap.push(other);
                plunge = Some(preferred);
            }
        } else {
            let mut values = lp.values().to_vec();
            let mut obj = obj;
            if settings.polish_incumbents {
                for &(j, _) in &binaries {
                    let r = values[j].round();
                    lp.set_var_bounds(VarId(j), r, r);
                }
                if lp.solve()? == LpStatus::Optimal {
                    values = lp.values().to_vec();
                    obj = lp.objective().min(node.bound);
                }
            }
            if incumbent.as_ref().is_none_or(|(best, _)| obj > *best) {
                monitor.on_incumbent(&values, obj);
                incumbent = Some((obj, values));
            }
        }

        let open = stack
            .iter()
            .chain(heap.iter())
            .chain(plunge.iter())
            .map(|n| n.bound)
            .fold(f64::NEG_INFINITY, f64::max);
        let inc_obj = incumbent.as_ref().map(|i| i.0);
        let candidate = open
            .max(pruned_bound)
            .max(inc_obj.unwrap_or(f64::NEG_INFINITY));
        global_bound = global_bound.min(candidate);
        monitor.on_node(nodes, global_bound, inc_obj);
    }

    let open = stack
        .iter()
        .chain(heap.iter())
        .map(|n| n.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    let (status, objective, values) = match incumbent {
        Some((obj, vals)) => {
            let status = if hit_node_limit {
                SolveStatus::NodeLimit
            } else if gap_closed || pruned_bound > obj + 1e-9 * obj.abs().max(1.0) {
                SolveStatus::GapLimit
            } else {
                SolveStatus::Optimal
            };
            (status, Some(obj), Some(vals))
        }
        None if hit_node_limit => (SolveStatus::NodeLimit, None, None),
        None => (SolveStatus::Infeasible, None, None),
    };
    let bound = match objective {
        Some(obj) => global_bound.min(open.max(pruned_bound).max(obj)),
        None if hit_node_limit => global_bound,
        None => f64::NEG_INFINITY,
    };
    log::debug!(
        "branch-and-bound finished: status={} nodes={} objective={:?} bound={}",
        status.as_str(),
        nodes,
        objective,
        bound
    );
    let gap = match objective {
        Some(obj) => ((bound - obj) / obj.abs().max(GAP_EPSILON)).max(0.0),
        None => f64::INFINITY,
    };
    Ok(SolveReport {
        status,
        objective,
        bound,
        gap,
        nodes,
        lp_iterations: lp.iterations(),
        wall_time: start.elapsed(),
        values,
    })
}

/// Most fractional binary within the highest priority class present.
/// `binaries` is sorted by decreasing priority.
fn most_fractional(values: &[f64], binaries: &[(usize, i32)], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, i32, f64)> = None;
    for &(j, prio) in binaries {
        if best.is_some_and(|b| prio < b.1) {
            break;
        }
        let x = values[j];
        let f = (x - x.floor()).min(x.ceil() - x);
        if f > tol && best.is_none_or(|(_, _, bf)| f > bf) {
            best = Some((j, prio, f));
        }
    }
    best.map(|b| b.0)
}
