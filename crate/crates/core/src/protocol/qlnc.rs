//! The entanglement-distribution code on the separation network.
//!
//! Six stages, four of which use links:
//!
//! 1. every receiver `r_i` builds a `(k+1)`-qubit GHZ state on symbol `a_i`
//!    and sends one copy to every other transmitter and one to `m2`;
//! 2. `m2` accumulates `a_1 + ... + a_k` into a fresh qubit;
//! 3. `m2` X-measures its copies, correcting `r_i` over the classical
//!    `m2 -> r_i` link, and forwards the sum to `m1`;
//! 4. `m1` fans the sum out to every transmitter;
//! 5. `t_j` adds in the `k - 1` copies it holds, leaving `a_j`;
//! 6. `t_i` X-measures its copies of `a_j`, correcting `t_j` over `t_i -> t_j`.

use std::collections::BTreeMap;

use super::schedule::{bell_pairs, execute, Action, LinkFilter, PrepState, Schedule};
use super::traffic::TrafficLog;
use super::ProtocolError;
use crate::formula::{FormulaEngine, QubitId};
use crate::network::{LinkId, LinkKind, Network, NodeId, Role};
use crate::stabilizer::{self, TableauError};

/// Node ids of the separation network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prop1Layout {
    pub k: usize,
    pub transmitters: Vec<NodeId>,
    pub receivers: Vec<NodeId>,
    pub m1: NodeId,
    pub m2: NodeId,
}

impl Prop1Layout {
    /// Finds `t_i`, `r_i` by role and the relays by the names `m1`, `m2`.
    pub fn from_network(net: &Network) -> Result<Self, ProtocolError> {
        let k = net.pairs();
        if k < 2 {
            return Err(ProtocolError::NotProp1(format!("k = {k}, need at least 2")));
        }
        let relay = |name: &str| {
            net.find_node(name)
                .filter(|&id| net.node(id).is_some_and(|n| n.role == Role::Relay))
                .ok_or_else(|| ProtocolError::NotProp1(format!("no relay named {name}")))
        };
        Self::with_relays(net, relay("m1")?, relay("m2")?)
    }

    pub fn with_relays(net: &Network, m1: NodeId, m2: NodeId) -> Result<Self, ProtocolError> {
        let k = net.pairs();
        let mut transmitters = Vec::with_capacity(k);
        let mut receivers = Vec::with_capacity(k);
        for i in 1..=k {
            transmitters.push(
                net.transmitter(i)
                    .ok_or_else(|| ProtocolError::NotProp1(format!("no transmitter {i}")))?,
            );
            receivers.push(
                net.receiver(i)
                    .ok_or_else(|| ProtocolError::NotProp1(format!("no receiver {i}")))?,
            );
        }
        Ok(Self {
            k,
            transmitters,
            receivers,
            m1,
            m2,
        })
    }
}

fn missing(net: &Network, src: NodeId, dst: NodeId, kind: LinkKind) -> ProtocolError {
    ProtocolError::MissingLink {
        src: net.name(src).to_string(),
        dst: net.name(dst).to_string(),
        kind,
    }
}

/// Names used for the schedule's qubits.
pub fn root_name(i: usize) -> String {
    format!("a{i}@r{i}")
}

pub fn sum_name(j: usize) -> String {
    format!("sum>t{j}")
}

/// Builds the six-stage schedule. `lookup` picks the link for each required
/// movement; it is called once per movement, in schedule order.
pub fn prop1_schedule_with(
    net: &Network,
    layout: &Prop1Layout,
    mut lookup: impl FnMut(NodeId, NodeId, LinkKind) -> Option<LinkId>,
) -> Result<Schedule, ProtocolError> {
    let k = layout.k;
    let t = |i: usize| layout.transmitters[i - 1];
    let r = |i: usize| layout.receivers[i - 1];
    let (m1, m2) = (layout.m1, layout.m2);
    let mut link = |src: NodeId, dst: NodeId, kind: LinkKind| {
        lookup(src, dst, kind)
            .map(|id| id.0)
            .ok_or_else(|| missing(net, src, dst, kind))
    };
    let node = |id: NodeId| net.name(id).to_string();
    let copy = |i: usize, j: usize| format!("a{i}>t{j}");
    let at_m2 = |i: usize| format!("a{i}>m2");

    let mut s = Vec::new();
    // Stage 1.
    for i in 1..=k {
        s.push(Action::Prepare {
            node: node(r(i)),
            qubit: root_name(i),
            state: PrepState::Plus,
        });
        let mut outgoing: Vec<(String, NodeId)> = (1..=k)
            .filter(|&j| j != i)
            .map(|j| (copy(i, j), t(j)))
            .collect();
        outgoing.push((at_m2(i), m2));
        for (name, _) in &outgoing {
            s.push(Action::Prepare {
                node: node(r(i)),
                qubit: name.clone(),
                state: PrepState::Zero,
            });
            s.push(Action::Cnot {
                control: root_name(i),
                target: name.clone(),
            });
        }
        for (name, dst) in outgoing {
            s.push(Action::Send {
                qubit: name,
                link: link(r(i), dst, LinkKind::Quantum)?,
                step: 1,
            });
        }
    }
    // Stage 2.
    s.push(Action::Prepare {
        node: node(m2),
        qubit: sum_name(1),
        state: PrepState::Zero,
    });
    for i in 1..=k {
        s.push(Action::Cnot {
            control: at_m2(i),
            target: sum_name(1),
        });
    }
    // Stage 3.
    for i in 1..=k {
        s.push(Action::Terminate {
            victim: at_m2(i),
            corrections: vec![root_name(i)],
            routes: vec![vec![link(m2, r(i), LinkKind::Classical)?]],
            step: 2,
        });
    }
    s.push(Action::Send {
        qubit: sum_name(1),
        link: link(m2, m1, LinkKind::Quantum)?,
        step: 2,
    });
    // Stage 4.
    for j in 2..=k {
        s.push(Action::Prepare {
            node: node(m1),
            qubit: sum_name(j),
            state: PrepState::Zero,
        });
        s.push(Action::Cnot {
            control: sum_name(1),
            target: sum_name(j),
        });
    }
    for j in 1..=k {
        s.push(Action::Send {
            qubit: sum_name(j),
            link: link(m1, t(j), LinkKind::Quantum)?,
            step: 3,
        });
    }
    // Stage 5.
    for j in 1..=k {
        for i in (1..=k).filter(|&i| i != j) {
            s.push(Action::Cnot {
                control: copy(i, j),
                target: sum_name(j),
            });
        }
    }
    // Stage 6: t_i holds a_j for every j != i.
    for i in 1..=k {
        for j in (1..=k).filter(|&j| j != i) {
            s.push(Action::Terminate {
                victim: copy(j, i),
                corrections: vec![sum_name(j)],
                routes: vec![vec![link(t(i), t(j), LinkKind::Classical)?]],
                step: 4,
            });
        }
    }
    Ok(s)
}

/// The schedule over the network's own links (first match per movement).
pub fn prop1_schedule(net: &Network, layout: &Prop1Layout) -> Result<Schedule, ProtocolError> {
    prop1_schedule_with(net, layout, |s, d, kind| net.find_link(s, d, kind))
}

/// Outcome of one distribution round.
#[derive(Clone, Debug)]
pub struct RoundOutcome {
    /// `(transmitter half, receiver half)` for pairs `1..=k`.
    pub pairs: Vec<(QubitId, QubitId)>,
    /// Nodes holding each pair's two qubits when the round ends.
    pub holders: Vec<(NodeId, NodeId)>,
    /// One new Bell pair per transmitter-receiver pair.
    pub inventory_delta: Vec<u64>,
    pub log: TrafficLog,
    /// Steps until the pairs count as available to the superdense layer.
    pub latency: u64,
    /// Step after which every correction has physically arrived.
    pub settled_after: u64,
}

/// Latency accounting for a distribution round.
///
/// With the default of 3, the stage-6 correction bits are overlapped with the
/// first use of the new pairs. With 4 a pair is only used once every
/// correction has landed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Latency(pub u64);

impl Default for Latency {
    fn default() -> Self {
        Latency(3)
    }
}

impl Latency {
    pub fn is_default(self) -> bool {
        self == Latency::default()
    }
}

/// Runs one round on `net` starting after `base_step`, with `engine` fresh.
pub fn qlnc_round(
    net: &Network,
    engine: &mut FormulaEngine,
    base_step: u64,
    latency: Latency,
) -> Result<RoundOutcome, ProtocolError> {
    if engine.qubit_count() != 0 {
        return Err(ProtocolError::InvalidArgs(
            "distribution rounds need a fresh formula engine".into(),
        ));
    }
    let layout = Prop1Layout::from_network(net)?;
    let schedule = prop1_schedule(net, &layout)?;
    let ex = execute(net, &schedule, engine, base_step, &LinkFilter::default())?;
    ex.log.check(net)?;
    let pairs = bell_pairs(net, engine, &ex).map_err(ProtocolError::Distribution)?;
    let settled_after = pairs
        .iter()
        .flat_map(|&(a, b)| [ex.available_from[a.index()], ex.available_from[b.index()]])
        .max()
        .unwrap_or(base_step + 1)
        - 1;
    let holders = pairs
        .iter()
        .map(|&(t, r)| (ex.node_of(t), ex.node_of(r)))
        .collect();
    Ok(RoundOutcome {
        holders,
        inventory_delta: vec![1; layout.k],
        pairs,
        log: ex.log,
        latency: latency.0,
        settled_after,
    })
}

/// Replays the engine's circuit on a tableau and checks each pair for
/// `|Phi+>`, decoupled from every other qubit.
pub fn verify_with_oracle(
    engine: &FormulaEngine,
    pairs: &[(QubitId, QubitId)],
) -> Result<OracleCheck, TableauError> {
    let mut replay = stabilizer::replay(engine.circuit(), engine.qubit_count())?;
    let mut bell = Vec::with_capacity(pairs.len());
    for &(t, r) in pairs {
        bell.push(replay.tableau.is_bell(t.index(), r.index())?);
    }
    Ok(OracleCheck {
        bell,
        disagreements: replay.disagreements,
        tableau: replay.tableau,
    })
}

#[derive(Clone, Debug)]
pub struct OracleCheck {
    pub bell: Vec<bool>,
    /// Terminations where the tableau outcome was deterministic and differed
    /// from the engine's bit.
    pub disagreements: usize,
    pub tableau: stabilizer::Tableau,
}

impl OracleCheck {
    pub fn all_bell(&self) -> bool {
        self.bell.iter().all(|&b| b)
    }
}

/// How many payload units each link of the round carried, keyed by link.
pub fn usage_by_link(log: &TrafficLog) -> BTreeMap<LinkId, u64> {
    let mut m = BTreeMap::new();
    for r in log.records() {
        *m.entry(r.link).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_prop1, prop1_component, NetworkBuilder, Prop1Component};
    use crate::protocol::traffic::Payload;

    #[test]
    fn two_pairs_end_with_own_symbols() {
        let net = build_prop1(2).unwrap();
        let mut e = FormulaEngine::new(1);
        let out = qlnc_round(&net, &mut e, 0, Latency::default()).unwrap();
        let report = e.classify();
        assert_eq!(report.clusters.len(), 2);
        assert!(report.unresolved.is_empty());
        let layout = Prop1Layout::from_network(&net).unwrap();
        for (i, &(t, r)) in out.pairs.iter().enumerate() {
            assert_eq!(e.formula(t).unwrap(), e.formula(r).unwrap());
            assert_eq!(
                out.holders[i],
                (layout.transmitters[i], layout.receivers[i])
            );
        }
        assert_eq!(out.latency, 3);
        assert_eq!(out.settled_after, 4);
    }

    #[test]
    fn traffic_uses_each_component_in_its_stage() {
        let k = 3;
        let net = build_prop1(k).unwrap();
        let mut e = FormulaEngine::new(5);
        let out = qlnc_round(&net, &mut e, 0, Latency::default()).unwrap();
        let mut by_stage: BTreeMap<(Prop1Component, u64), u64> = BTreeMap::new();
        for rec in out.log.records() {
            let c = prop1_component(&net, rec.link).unwrap();
            match c {
                Prop1Component::F | Prop1Component::G => assert_eq!(rec.payload, Payload::Bit),
                _ => assert_eq!(rec.payload, Payload::Qubit),
            }
            *by_stage.entry((c, rec.step)).or_insert(0) += 1;
        }
        use Prop1Component::*;
        let k = k as u64;
        assert_eq!(by_stage[&(B, 1)], k * (k - 1));
        assert_eq!(by_stage[&(C, 1)], k);
        assert_eq!(by_stage[&(D, 2)], 1);
        assert_eq!(by_stage[&(F, 2)], k);
        assert_eq!(by_stage[&(E, 3)], k);
        assert_eq!(by_stage[&(G, 4)], k * (k - 1));
        assert_eq!(by_stage.len(), 6);
        assert!(
            out.log.on_link(LinkId(0)).next().is_none(),
            "component A idle"
        );
    }

    #[test]
    fn oracle_confirms_pairs() {
        for k in 2..=4 {
            let net = build_prop1(k).unwrap();
            for seed in 0..10 {
                let mut e = FormulaEngine::new(seed);
                let out = qlnc_round(&net, &mut e, 0, Latency::default()).unwrap();
                let check = verify_with_oracle(&e, &out.pairs).unwrap();
                assert!(check.all_bell(), "k={k} seed={seed}");
                assert_eq!(check.disagreements, 0);
            }
        }
    }

    #[test]
    fn missing_correction_links_are_reported() {
        let full = build_prop1(2).unwrap();
        let mut b = NetworkBuilder::new(2);
        for n in full.nodes() {
            b.node(n.name.clone(), n.role.clone());
        }
        for (i, l) in full.links().iter().enumerate() {
            if prop1_component(&full, LinkId(i)) != Some(Prop1Component::F) {
                b.link(l.src, l.dst, l.kind, l.rate);
            }
        }
        let net = b.build();
        let mut e = FormulaEngine::new(0);
        let err = qlnc_round(&net, &mut e, 0, Latency::default()).unwrap_err();
        match err {
            ProtocolError::MissingLink { src, dst, kind } => {
                assert_eq!(src, "m2");
                assert_eq!(dst, "r1");
                assert_eq!(kind, LinkKind::Classical);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn engine_must_be_fresh() {
        let net = build_prop1(2).unwrap();
        let mut e = FormulaEngine::new(0);
        e.new_zero();
        assert!(qlnc_round(&net, &mut e, 0, Latency::default()).is_err());
    }

    #[test]
    fn non_prop1_network_rejected() {
        let net = crate::network::build_butterfly();
        let mut e = FormulaEngine::new(0);
        assert!(matches!(
            qlnc_round(&net, &mut e, 0, Latency::default()),
            Err(ProtocolError::NotProp1(_))
        ));
    }
}
