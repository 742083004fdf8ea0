//! Four-part decompositions of a mixed network.
//!
//! * `c1` carries a classical code at uniform edge rate `w_tilde`; only
//!   routing (one path per pair) is checked here.
//! * `c2` holds one quantum path per pair at uniform rate `w`, used for
//!   superdense-coded qubits.
//! * `c3` carries a qubit-formula code that hands every pair a fresh Bell
//!   pair per round, in either direction.
//! * `c4` carries only the correction bits of that code's terminations.
//!
//! The parts must be edge-disjoint; a link is in at most one part. Split a
//! link with [`Network::normalize_unit_edges`] first to share its capacity.
//! A valid decomposition delivers `w_tilde + 2 w` per pair.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::FormulaEngine;
use crate::network::{format_rate, rate_str, LinkId, LinkKind, Network, NodeId, Rate};
use crate::protocol::qlnc::{prop1_schedule, prop1_schedule_with, Prop1Layout};
use crate::protocol::schedule::{bell_pairs, execute, Action, LinkFilter, PrepState, Schedule};
use crate::protocol::ProtocolError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Part {
    C1,
    C2,
    C3,
    C4,
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Part::C1 => "c1",
            Part::C2 => "c2",
            Part::C3 => "c3",
            Part::C4 => "c4",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateEntry {
    pub link: usize,
    #[serde(with = "rate_str")]
    pub rate: Rate,
}

impl RateEntry {
    pub fn new(link: LinkId, rate: Rate) -> Self {
        Self { link: link.0, rate }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    #[serde(with = "rate_str")]
    pub w_tilde: Rate,
    #[serde(with = "rate_str")]
    pub w: Rate,
    pub c1: Vec<RateEntry>,
    /// Routing paths of the `c1` code, one per pair, as link indices.
    #[serde(default)]
    pub c1_paths: Vec<Vec<usize>>,
    pub c2: Vec<RateEntry>,
    /// Transmitter-to-receiver path of pair `i + 1` at index `i`.
    #[serde(default)]
    pub c2_paths: Vec<Vec<usize>>,
    pub c3: Vec<RateEntry>,
    pub c4: Vec<RateEntry>,
    /// One round of the replenishment code over `c3` and `c4`.
    #[serde(default)]
    pub code: Schedule,
}

impl Decomposition {
    pub fn empty() -> Self {
        Self {
            w_tilde: Rate::from_integer(0),
            w: Rate::from_integer(0),
            c1: Vec::new(),
            c1_paths: Vec::new(),
            c2: Vec::new(),
            c2_paths: Vec::new(),
            c3: Vec::new(),
            c4: Vec::new(),
            code: Vec::new(),
        }
    }

    pub fn part(&self, p: Part) -> &[RateEntry] {
        match p {
            Part::C1 => &self.c1,
            Part::C2 => &self.c2,
            Part::C3 => &self.c3,
            Part::C4 => &self.c4,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("decomposition serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Checks `self` against `net`; the result is the only way to get a rate.
    pub fn validate(self, net: &Network) -> Result<ValidatedDecomposition, DecompositionError> {
        let violations = validate_decomposition(net, &self);
        if violations.is_empty() {
            Ok(ValidatedDecomposition { inner: self })
        } else {
            Err(DecompositionError::NotValidated(violations))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecompViolation {
    UnknownLink {
        part: Part,
        link: usize,
    },
    SharedLink {
        link: usize,
        first: Part,
        second: Part,
    },
    RateAboveCapacity {
        part: Part,
        link: usize,
        rate: Rate,
        capacity: Rate,
    },
    NonUniformRate {
        part: Part,
        link: usize,
        rate: Rate,
        expected: Rate,
    },
    RateWithoutLinks {
        part: Part,
    },
    LinksWithoutRate {
        part: Part,
    },
    ClassicalLinkInC2 {
        link: usize,
    },
    PathCount {
        part: Part,
        expected: usize,
        found: usize,
    },
    BrokenPath {
        part: Part,
        pair: usize,
        reason: String,
    },
    LinkOffPath {
        part: Part,
        link: usize,
    },
    NoReplenishment,
    CodeFailed(String),
    CodeOverRate {
        part: Part,
        link: usize,
        uses: u64,
        rate: Rate,
    },
    CodeOutsideParts {
        link: usize,
    },
}

impl fmt::Display for DecompViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use DecompViolation::*;
        match self {
            UnknownLink { part, link } => write!(f, "{part}: link #{link} does not exist"),
            SharedLink {
                link,
                first,
                second,
            } => {
                write!(f, "link #{link} is in both {first} and {second}")
            }
            RateAboveCapacity {
                part,
                link,
                rate,
                capacity,
            } => write!(
                f,
                "{part}: link #{link} assigned {} but carries at most {}",
                format_rate(rate),
                format_rate(capacity)
            ),
            NonUniformRate {
                part,
                link,
                rate,
                expected,
            } => write!(
                f,
                "{part}: link #{link} has rate {}, component rate is {}",
                format_rate(rate),
                format_rate(expected)
            ),
            RateWithoutLinks { part } => write!(f, "{part}: positive rate but no links"),
            LinksWithoutRate { part } => write!(f, "{part}: links but a zero rate"),
            ClassicalLinkInC2 { link } => write!(f, "c2: link #{link} is classical"),
            PathCount {
                part,
                expected,
                found,
            } => write!(f, "{part}: {found} paths, need one per pair ({expected})"),
            BrokenPath { part, pair, reason } => write!(f, "{part}: path of pair {pair}: {reason}"),
            LinkOffPath { part, link } => write!(f, "{part}: link #{link} is on no path"),
            NoReplenishment => write!(f, "c2 is used but no replenishment code is given"),
            CodeFailed(why) => write!(f, "c3/c4 code: {why}"),
            CodeOverRate {
                part,
                link,
                uses,
                rate,
            } => write!(
                f,
                "{part}: code uses link #{link} {uses} times per round, rate {} cannot sustain w",
                format_rate(rate)
            ),
            CodeOutsideParts { link } => {
                write!(
                    f,
                    "code moves data over link #{link}, which is in neither c3 nor c4"
                )
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum DecompositionError {
    #[error("decomposition has {} violations", .0.len())]
    NotValidated(Vec<DecompViolation>),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// A decomposition that passed [`validate_decomposition`] on some network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidatedDecomposition {
    inner: Decomposition,
}

impl ValidatedDecomposition {
    pub fn decomposition(&self) -> &Decomposition {
        &self.inner
    }

    pub fn into_inner(self) -> Decomposition {
        self.inner
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RateSummary {
    pub w_tilde: Rate,
    pub w: Rate,
    pub achieved: Rate,
}

pub fn achieved_rate(d: &ValidatedDecomposition) -> RateSummary {
    let d = &d.inner;
    RateSummary {
        w_tilde: d.w_tilde,
        w: d.w,
        achieved: d.w_tilde + d.w * Rate::from_integer(2),
    }
}

fn check_paths(
    net: &Network,
    part: Part,
    paths: &[Vec<usize>],
    members: &BTreeSet<usize>,
    out: &mut Vec<DecompViolation>,
) {
    let k = net.pairs();
    if paths.len() != k {
        out.push(DecompViolation::PathCount {
            part,
            expected: k,
            found: paths.len(),
        });
        return;
    }
    let mut seen = BTreeSet::new();
    for (i, path) in paths.iter().enumerate() {
        let pair = i + 1;
        let broken = |reason: String| DecompViolation::BrokenPath { part, pair, reason };
        let (Some(t), Some(r)) = (net.transmitter(pair), net.receiver(pair)) else {
            out.push(broken("pair has no transmitter or receiver".into()));
            continue;
        };
        if path.is_empty() {
            out.push(broken("empty".into()));
            continue;
        }
        let mut at = t;
        let mut ok = true;
        for &l in path {
            let Some(link) = net.link(LinkId(l)) else {
                out.push(broken(format!("link #{l} does not exist")));
                ok = false;
                break;
            };
            if !members.contains(&l) {
                out.push(broken(format!("link #{l} is not in {part}")));
                ok = false;
                break;
            }
            if !seen.insert(l) {
                out.push(broken(format!("link #{l} is on another path")));
                ok = false;
                break;
            }
            if link.src != at {
                out.push(broken(format!(
                    "link #{l} does not start at {}",
                    net.name(at)
                )));
                ok = false;
                break;
            }
            at = link.dst;
        }
        if ok && at != r {
            out.push(broken(format!(
                "ends at {}, not {}",
                net.name(at),
                net.name(r)
            )));
        }
    }
    for &l in members {
        if !seen.contains(&l) {
            out.push(DecompViolation::LinkOffPath { part, link: l });
        }
    }
}

/// Seeds the code is replayed with, so both outcomes of every termination
/// get exercised in practice.
const CODE_SEEDS: u64 = 4;

fn check_code(net: &Network, d: &Decomposition, out: &mut Vec<DecompViolation>) {
    let c3: BTreeSet<LinkId> = d.c3.iter().map(|e| LinkId(e.link)).collect();
    let c4: BTreeSet<LinkId> = d.c4.iter().map(|e| LinkId(e.link)).collect();
    let filter = LinkFilter {
        sends: Some(c3.clone()),
        routes: Some(c3.union(&c4).copied().collect()),
    };
    for seed in 0..CODE_SEEDS {
        let mut engine = FormulaEngine::new(seed);
        let ex = match execute(net, &d.code, &mut engine, 0, &filter) {
            Ok(ex) => ex,
            Err(ProtocolError::LinkNotAllowed(id)) => {
                out.push(DecompViolation::CodeOutsideParts { link: id.0 });
                return;
            }
            Err(e) => {
                out.push(DecompViolation::CodeFailed(e.to_string()));
                return;
            }
        };
        if let Err(e) = ex.log.check(net) {
            out.push(DecompViolation::CodeFailed(e.to_string()));
            return;
        }
        if let Err(e) = bell_pairs(net, &engine, &ex) {
            out.push(DecompViolation::CodeFailed(e));
            return;
        }
        if seed > 0 {
            continue;
        }
        for (part, entries) in [(Part::C3, &d.c3), (Part::C4, &d.c4)] {
            for e in entries.iter() {
                let uses = ex.link_uses.get(&LinkId(e.link)).copied().unwrap_or(0);
                if Rate::from_integer(uses) * d.w > e.rate {
                    out.push(DecompViolation::CodeOverRate {
                        part,
                        link: e.link,
                        uses,
                        rate: e.rate,
                    });
                }
            }
        }
    }
}

/// Every problem found; empty means valid.
pub fn validate_decomposition(net: &Network, d: &Decomposition) -> Vec<DecompViolation> {
    let mut out = Vec::new();
    let mut owner: BTreeMap<usize, Part> = BTreeMap::new();
    for part in [Part::C1, Part::C2, Part::C3, Part::C4] {
        for e in d.part(part) {
            let Some(link) = net.link(LinkId(e.link)) else {
                out.push(DecompViolation::UnknownLink { part, link: e.link });
                continue;
            };
            if let Some(&first) = owner.get(&e.link) {
                out.push(DecompViolation::SharedLink {
                    link: e.link,
                    first,
                    second: part,
                });
            } else {
                owner.insert(e.link, part);
            }
            if e.rate > link.rate {
                out.push(DecompViolation::RateAboveCapacity {
                    part,
                    link: e.link,
                    rate: e.rate,
                    capacity: link.rate,
                });
            }
            if part == Part::C2 && link.kind != LinkKind::Quantum {
                out.push(DecompViolation::ClassicalLinkInC2 { link: e.link });
            }
        }
    }
    let zero = Rate::from_integer(0);
    for (part, entries, rate) in [(Part::C1, &d.c1, d.w_tilde), (Part::C2, &d.c2, d.w)] {
        if entries.is_empty() && rate > zero {
            out.push(DecompViolation::RateWithoutLinks { part });
        }
        if !entries.is_empty() && rate == zero {
            out.push(DecompViolation::LinksWithoutRate { part });
        }
        for e in entries.iter() {
            if e.rate != rate {
                out.push(DecompViolation::NonUniformRate {
                    part,
                    link: e.link,
                    rate: e.rate,
                    expected: rate,
                });
            }
        }
    }
    if !d.c1.is_empty() || !d.c1_paths.is_empty() {
        let members = d.c1.iter().map(|e| e.link).collect();
        check_paths(net, Part::C1, &d.c1_paths, &members, &mut out);
    }
    if !d.c2.is_empty() || !d.c2_paths.is_empty() {
        let members = d.c2.iter().map(|e| e.link).collect();
        check_paths(net, Part::C2, &d.c2_paths, &members, &mut out);
        if d.code.is_empty() {
            out.push(DecompViolation::NoReplenishment);
        }
    }
    if !d.code.is_empty() {
        check_code(net, d, &mut out);
    }
    out
}

/// Breadth-first search for a path `src -> dst` over links accepted by
/// `allowed`. Neighbours are explored in order of node id, then link id.
pub fn shortest_path(
    net: &Network,
    src: NodeId,
    dst: NodeId,
    allowed: impl Fn(LinkId) -> bool,
) -> Option<Vec<LinkId>> {
    let mut out: BTreeMap<NodeId, Vec<(NodeId, LinkId)>> = BTreeMap::new();
    for id in net.link_ids() {
        if allowed(id) {
            let l = net.link(id)?;
            out.entry(l.src).or_default().push((l.dst, id));
        }
    }
    for v in out.values_mut() {
        v.sort();
    }
    let mut prev: BTreeMap<NodeId, (NodeId, LinkId)> = BTreeMap::new();
    let mut seen = BTreeSet::from([src]);
    let mut queue = VecDeque::from([src]);
    while let Some(n) = queue.pop_front() {
        if n == dst {
            let mut path = Vec::new();
            let mut at = dst;
            while at != src {
                let (p, l) = prev[&at];
                path.push(l);
                at = p;
            }
            path.reverse();
            return Some(path);
        }
        for &(m, l) in out.get(&n).map(Vec::as_slice).unwrap_or(&[]) {
            if seen.insert(m) {
                prev.insert(m, (n, l));
                queue.push_back(m);
            }
        }
    }
    None
}

/// Edge-disjoint paths for pairs `1..=k` in order, each the shortest left
/// after the earlier pairs took theirs.
fn pack_pair_paths(
    net: &Network,
    reverse: bool,
    allowed: impl Fn(LinkId) -> bool,
) -> Option<Vec<Vec<LinkId>>> {
    let mut used = BTreeSet::new();
    let mut paths = Vec::new();
    for i in 1..=net.pairs() {
        let (t, r) = (net.transmitter(i)?, net.receiver(i)?);
        let (a, b) = if reverse { (r, t) } else { (t, r) };
        let p = shortest_path(net, a, b, |id| !used.contains(&id) && allowed(id))?;
        used.extend(p.iter().copied());
        paths.push(p);
    }
    Some(paths)
}

fn min_rate<'a>(net: &Network, links: impl IntoIterator<Item = &'a LinkId>) -> Option<Rate> {
    links
        .into_iter()
        .filter_map(|&l| net.link(l).map(|l| l.rate))
        .min()
}

fn to_indices(paths: &[Vec<LinkId>]) -> Vec<Vec<usize>> {
    paths
        .iter()
        .map(|p| p.iter().map(|l| l.0).collect())
        .collect()
}

/// Routing only: `c1` holds one edge-disjoint path per pair over links of
/// either kind, at the smallest rate on them. Empty if some pair cannot be
/// routed.
pub fn routing_decomposition(net: &Network) -> Decomposition {
    routing_over(net, |_| true)
}

fn routing_over(net: &Network, allowed: impl Fn(LinkId) -> bool) -> Decomposition {
    let mut d = Decomposition::empty();
    if net.pairs() == 0 {
        return d;
    }
    let Some(paths) = pack_pair_paths(net, false, allowed) else {
        return d;
    };
    let Some(w) = min_rate(net, paths.iter().flatten()) else {
        return d;
    };
    d.w_tilde = w;
    d.c1 = paths
        .iter()
        .flatten()
        .map(|&l| RateEntry::new(l, w))
        .collect();
    d.c1_paths = to_indices(&paths);
    d
}

/// The separation network's own construction: direct links in `c2`, the
/// distribution code over components B through F in `c3`, and the
/// transmitter-to-transmitter corrections in `c4`.
pub fn prop1_decomposition(net: &Network) -> Result<Decomposition, ProtocolError> {
    use crate::network::{prop1_component, Prop1Component};
    let layout = Prop1Layout::from_network(net)?;
    let code = prop1_schedule(net, &layout)?;
    let one = Rate::from_integer(1);
    let mut d = Decomposition::empty();
    d.w = one;
    d.code = code;
    let mut direct = vec![Vec::new(); layout.k];
    for id in net.link_ids() {
        let rate = net.link(id).map(|l| l.rate).unwrap_or(one);
        match prop1_component(net, id) {
            Some(Prop1Component::A) => {
                let l = net.link(id).expect("listed link");
                if let Some(i) = net.node(l.src).and_then(|n| n.role.transmitter_index()) {
                    direct[i - 1].push(id.0);
                }
                d.c2.push(RateEntry::new(id, one));
            }
            Some(Prop1Component::G) => d.c4.push(RateEntry::new(id, rate.min(one))),
            Some(_) => d.c3.push(RateEntry::new(id, rate.min(one))),
            None => {}
        }
    }
    d.c2_paths = direct;
    Ok(d)
}

/// A code that builds each pair's Bell pair at the receiver and walks one
/// half back along `paths[i]`.
fn reverse_path_code(net: &Network, paths: &[Vec<LinkId>]) -> Schedule {
    let mut s = Vec::new();
    for (i, path) in paths.iter().enumerate() {
        let pair = i + 1;
        let r = net.receiver(pair).expect("pair has receiver");
        let (keep, walk) = (format!("bell{pair}@r"), format!("bell{pair}>t"));
        s.push(Action::Prepare {
            node: net.name(r).to_string(),
            qubit: keep.clone(),
            state: PrepState::Plus,
        });
        s.push(Action::Prepare {
            node: net.name(r).to_string(),
            qubit: walk.clone(),
            state: PrepState::Zero,
        });
        s.push(Action::Cnot {
            control: keep,
            target: walk.clone(),
        });
        for (hop, l) in path.iter().enumerate() {
            s.push(Action::Send {
                qubit: walk.clone(),
                link: l.0,
                step: hop as u64 + 1,
            });
        }
    }
    s
}

struct CodeUse {
    uses: BTreeMap<LinkId, u64>,
    bit_only: BTreeSet<LinkId>,
}

fn code_usage(net: &Network, code: &Schedule, filter: &LinkFilter) -> Option<CodeUse> {
    let mut engine = FormulaEngine::new(0);
    let ex = execute(net, code, &mut engine, 0, filter).ok()?;
    ex.log.check(net).ok()?;
    bell_pairs(net, &engine, &ex).ok()?;
    let mut qubit = BTreeSet::new();
    for r in ex.log.records() {
        if r.payload == crate::protocol::Payload::Qubit {
            qubit.insert(r.link);
        }
    }
    let bit_only = ex
        .link_uses
        .keys()
        .filter(|l| !qubit.contains(l))
        .copied()
        .collect();
    Some(CodeUse {
        uses: ex.link_uses,
        bit_only,
    })
}

fn superdense_candidate(net: &Network) -> Option<Decomposition> {
    let forward = pack_pair_paths(net, false, |id| {
        net.link(id).is_some_and(|l| l.kind == LinkKind::Quantum)
    })?;
    let c2: BTreeSet<LinkId> = forward.iter().flatten().copied().collect();
    let residual = |id: LinkId| !c2.contains(&id);
    let quantum_residual =
        |id: LinkId| residual(id) && net.link(id).is_some_and(|l| l.kind == LinkKind::Quantum);

    let mut attempts: Vec<Schedule> = Vec::new();
    if let Some(back) = pack_pair_paths(net, true, quantum_residual) {
        attempts.push(reverse_path_code(net, &back));
    }
    if let Ok(layout) = Prop1Layout::from_network(net) {
        let pattern = prop1_schedule_with(net, &layout, |s, d, kind| {
            net.links()
                .iter()
                .enumerate()
                .map(|(i, l)| (LinkId(i), l))
                .find(|(id, l)| residual(*id) && l.src == s && l.dst == d && l.kind == kind)
                .map(|(id, _)| id)
        });
        if let Ok(code) = pattern {
            attempts.push(code);
        }
    }
    let allowed: BTreeSet<LinkId> = net.link_ids().filter(|&l| residual(l)).collect();
    let filter = LinkFilter {
        sends: Some(allowed.clone()),
        routes: Some(allowed),
    };
    for code in attempts {
        let Some(usage) = code_usage(net, &code, &filter) else {
            continue;
        };
        let mut w = min_rate(net, &c2)?;
        for (l, &u) in &usage.uses {
            let cap = net.link(*l)?.rate;
            w = w.min(cap / Rate::from_integer(u));
        }
        let mut d = Decomposition::empty();
        d.w = w;
        d.c2 = c2.iter().map(|&l| RateEntry::new(l, w)).collect();
        d.c2_paths = to_indices(&forward);
        for (&l, &u) in &usage.uses {
            let entry = RateEntry::new(l, w * Rate::from_integer(u));
            let src_is_transmitter = net
                .link(l)
                .and_then(|link| net.node(link.src))
                .is_some_and(|n| n.role.transmitter_index().is_some());
            if usage.bit_only.contains(&l) && src_is_transmitter {
                d.c4.push(entry);
            } else {
                d.c3.push(entry);
            }
        }
        d.code = code;
        // Leftover links may still route the pairs classically.
        let taken: BTreeSet<LinkId> = c2.iter().chain(usage.uses.keys()).copied().collect();
        let extra = routing_over(net, |id| !taken.contains(&id));
        d.w_tilde = extra.w_tilde;
        d.c1 = extra.c1;
        d.c1_paths = extra.c1_paths;
        return Some(d);
    }
    None
}

fn total(d: &Decomposition) -> Rate {
    d.w_tilde + d.w * Rate::from_integer(2)
}

/// Best of plain routing and a superdense packing (forward quantum paths in
/// `c2`, replenished by reverse paths or the separation-network pattern,
/// leftovers routed in `c1`). Always valid on a valid network.
pub fn find_decomposition_greedy(net: &Network) -> Decomposition {
    let routing = routing_decomposition(net);
    let candidate = superdense_candidate(net)
        .filter(|d| validate_decomposition(net, d).is_empty())
        .filter(|d| total(d) > total(&routing));
    candidate.unwrap_or(routing)
}
