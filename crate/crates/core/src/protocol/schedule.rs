//! Timed code schedules: node-local preparations and CNOTs, qubit sends over
//! quantum links, and terminations whose correction bits are routed through
//! the network.
//!
//! A schedule is data. [`execute`] drives it through a
//! [`FormulaEngine`](crate::formula::FormulaEngine), tracks where every qubit
//! is and when it is next usable, and records the link traffic. Steps are
//! relative; the executor adds a base offset so rounds can be pipelined.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::traffic::{Payload, TrafficLog};
use super::ProtocolError;
use crate::formula::{FormulaEngine, QubitId};
use crate::network::{LinkId, LinkKind, Network, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrepState {
    Plus,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Action {
    Prepare {
        node: String,
        qubit: String,
        state: PrepState,
    },
    /// Both qubits must sit at the same node.
    Cnot { control: String, target: String },
    /// Moves a qubit over a quantum link during `step`.
    Send {
        qubit: String,
        link: usize,
        step: u64,
    },
    /// X-measures `victim`; the outcome leaves at `step` and follows
    /// `routes[i]` (one hop per step) to the node holding `corrections[i]`.
    /// An empty route means the correction is local.
    Terminate {
        victim: String,
        corrections: Vec<String>,
        routes: Vec<Vec<usize>>,
        step: u64,
    },
}

pub type Schedule = Vec<Action>;

/// Link permissions applied while executing.
#[derive(Clone, Debug, Default)]
pub struct LinkFilter {
    /// Links qubits may be sent over; `None` allows every quantum link.
    pub sends: Option<BTreeSet<LinkId>>,
    /// Links correction bits may traverse; `None` allows every link.
    pub routes: Option<BTreeSet<LinkId>>,
}

#[derive(Clone, Debug)]
pub struct Execution {
    pub names: BTreeMap<String, QubitId>,
    /// Current node of each qubit, indexed by `QubitId`.
    pub location: Vec<NodeId>,
    /// First step at which each qubit may next leave its node.
    pub available_from: Vec<u64>,
    pub log: TrafficLog,
    /// Number of payload units each link carried.
    pub link_uses: BTreeMap<LinkId, u64>,
}

impl Execution {
    pub fn qubit(&self, name: &str) -> Option<QubitId> {
        self.names.get(name).copied()
    }

    pub fn node_of(&self, q: QubitId) -> NodeId {
        self.location[q.index()]
    }
}

/// Runs `schedule` on `engine`, offsetting every step by `base_step`.
pub fn execute(
    net: &Network,
    schedule: &[Action],
    engine: &mut FormulaEngine,
    base_step: u64,
    filter: &LinkFilter,
) -> Result<Execution, ProtocolError> {
    let mut ex = Execution {
        names: BTreeMap::new(),
        location: Vec::new(),
        available_from: Vec::new(),
        log: TrafficLog::new(),
        link_uses: BTreeMap::new(),
    };
    // Qubits prepared before this schedule started are not addressable.
    let offset = engine.qubit_count();
    let lookup = |ex: &Execution, name: &str| {
        ex.qubit(name)
            .ok_or_else(|| ProtocolError::Schedule(format!("unknown qubit {name:?}")))
    };
    let slot = |q: QubitId| q.index() - offset;

    for action in schedule {
        match action {
            Action::Prepare { node, qubit, state } => {
                let at = net
                    .find_node(node)
                    .ok_or_else(|| ProtocolError::Schedule(format!("unknown node {node:?}")))?;
                if ex.names.contains_key(qubit) {
                    return Err(ProtocolError::Schedule(format!(
                        "qubit {qubit:?} prepared twice"
                    )));
                }
                let q = match state {
                    PrepState::Plus => engine.new_plus().0,
                    PrepState::Zero => engine.new_zero(),
                };
                debug_assert_eq!(slot(q), ex.location.len());
                ex.names.insert(qubit.clone(), q);
                ex.location.push(at);
                ex.available_from.push(base_step + 1);
            }
            Action::Cnot { control, target } => {
                let c = lookup(&ex, control)?;
                let t = lookup(&ex, target)?;
                if ex.location[slot(c)] != ex.location[slot(t)] {
                    return Err(ProtocolError::Schedule(format!(
                        "CNOT {control:?} -> {target:?} across nodes {} and {}",
                        net.name(ex.location[slot(c)]),
                        net.name(ex.location[slot(t)])
                    )));
                }
                engine.apply_cnot(c, t)?;
                let ready = ex.available_from[slot(c)].max(ex.available_from[slot(t)]);
                ex.available_from[slot(c)] = ready;
                ex.available_from[slot(t)] = ready;
            }
            Action::Send { qubit, link, step } => {
                let q = lookup(&ex, qubit)?;
                let id = LinkId(*link);
                let l = net.link(id).ok_or(ProtocolError::UnknownLink(id))?;
                let step = base_step + step;
                if l.kind != LinkKind::Quantum {
                    return Err(ProtocolError::KindViolation { step, link: id });
                }
                if let Some(allowed) = &filter.sends {
                    if !allowed.contains(&id) {
                        return Err(ProtocolError::LinkNotAllowed(id));
                    }
                }
                if ex.location[slot(q)] != l.src {
                    return Err(ProtocolError::Schedule(format!(
                        "{qubit:?} is at {}, not at the tail of {id}",
                        net.name(ex.location[slot(q)])
                    )));
                }
                if step < ex.available_from[slot(q)] {
                    return Err(ProtocolError::Schedule(format!(
                        "{qubit:?} sent at step {step} before it is ready (step {})",
                        ex.available_from[slot(q)]
                    )));
                }
                ex.log.push(step, id, Payload::Qubit, "qubit");
                *ex.link_uses.entry(id).or_insert(0) += 1;
                ex.location[slot(q)] = l.dst;
                ex.available_from[slot(q)] = step + 1;
            }
            Action::Terminate {
                victim,
                corrections,
                routes,
                step,
            } => {
                let v = lookup(&ex, victim)?;
                let step = base_step + step;
                if routes.len() != corrections.len() {
                    return Err(ProtocolError::Schedule(format!(
                        "termination of {victim:?} has {} corrections but {} routes",
                        corrections.len(),
                        routes.len()
                    )));
                }
                if step < ex.available_from[slot(v)] {
                    return Err(ProtocolError::Schedule(format!(
                        "{victim:?} measured for step {step} before it is ready"
                    )));
                }
                let mut targets = Vec::with_capacity(corrections.len());
                for (name, route) in corrections.iter().zip(routes) {
                    let c = lookup(&ex, name)?;
                    let mut at = ex.location[slot(v)];
                    for (hop, &raw) in route.iter().enumerate() {
                        let id = LinkId(raw);
                        let l = net.link(id).ok_or(ProtocolError::UnknownLink(id))?;
                        if let Some(allowed) = &filter.routes {
                            if !allowed.contains(&id) {
                                return Err(ProtocolError::LinkNotAllowed(id));
                            }
                        }
                        if l.src != at {
                            return Err(ProtocolError::Schedule(format!(
                                "correction route for {name:?} breaks at {id}"
                            )));
                        }
                        ex.log
                            .push(step + hop as u64, id, Payload::Bit, "correction");
                        *ex.link_uses.entry(id).or_insert(0) += 1;
                        at = l.dst;
                    }
                    if at != ex.location[slot(c)] {
                        return Err(ProtocolError::Schedule(format!(
                            "correction route for {name:?} ends at {}, qubit is at {}",
                            net.name(at),
                            net.name(ex.location[slot(c)])
                        )));
                    }
                    let arrival = step + route.len() as u64;
                    let af = &mut ex.available_from[slot(c)];
                    *af = (*af).max(arrival);
                    targets.push(c);
                }
                engine.terminate(v, &targets)?;
            }
        }
    }
    Ok(ex)
}

/// Bell pairs `(transmitter-side, receiver-side)` per pair index `1..=k`, if
/// the engine's final state is exactly one two-qubit cluster per pair and
/// nothing else.
pub fn bell_pairs(
    net: &Network,
    engine: &FormulaEngine,
    ex: &Execution,
) -> Result<Vec<(QubitId, QubitId)>, String> {
    let report = engine.classify();
    if !report.unresolved.is_empty() {
        return Err(format!(
            "{} qubits left unresolved",
            report.unresolved.len()
        ));
    }
    if !report.idle.is_empty() {
        return Err(format!("{} idle qubits left active", report.idle.len()));
    }
    let k = net.pairs();
    let mut pairs: Vec<Option<(QubitId, QubitId)>> = vec![None; k];
    let offset = ex.names.values().map(|q| q.index()).min().unwrap_or(0);
    for cluster in &report.clusters {
        let owned = cluster.qubits.iter().all(|q| q.index() >= offset);
        if !owned {
            continue;
        }
        if cluster.qubits.len() != 2 {
            return Err(format!(
                "symbol {} is held by {} qubits",
                cluster.symbol,
                cluster.qubits.len()
            ));
        }
        let (a, b) = (cluster.qubits[0], cluster.qubits[1]);
        let role = |q: QubitId| {
            net.node(ex.location[q.index() - offset])
                .map(|n| n.role.clone())
        };
        let (ra, rb) = (role(a), role(b));
        let found = match (ra, rb) {
            (
                Some(crate::network::Role::Transmitter(i)),
                Some(crate::network::Role::Receiver(j)),
            ) if i == j => Some((i, a, b)),
            (
                Some(crate::network::Role::Receiver(j)),
                Some(crate::network::Role::Transmitter(i)),
            ) if i == j => Some((i, b, a)),
            _ => None,
        };
        let Some((i, t, r)) = found else {
            return Err(format!(
                "symbol {} is shared by {} and {}",
                cluster.symbol,
                net.name(ex.location[a.index() - offset]),
                net.name(ex.location[b.index() - offset])
            ));
        };
        if pairs[i - 1].replace((t, r)).is_some() {
            return Err(format!("pair {i} received two Bell pairs"));
        }
    }
    pairs
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or_else(|| format!("pair {} received no Bell pair", i + 1)))
        .collect()
}
