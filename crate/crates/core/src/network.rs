//! Mixed classical/quantum directed multigraphs.
//!
//! A [`Network`] holds both sub-multigraphs (classical and quantum links) over
//! one node set. Links are rate-weighted, directed, and may be parallel.
//! Rates are exact rationals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bits (classical) or qubits (quantum) per time step.
pub type Rate = Ratio<u64>;

/// Formats a rate as `"p/q"`, always with an explicit denominator.
pub fn format_rate(r: &Rate) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `"p/q"` or a bare integer `"p"`.
pub fn parse_rate(s: &str) -> Result<Rate, NetworkError> {
    let bad = || NetworkError::BadRate(s.to_string());
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: u64 = n.parse().map_err(|_| bad())?;
    let d: u64 = d.parse().map_err(|_| bad())?;
    if d == 0 {
        return Err(bad());
    }
    Ok(Rate::new(n, d))
}

pub(crate) mod rate_str {
    use super::{format_rate, parse_rate, Rate};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rate, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rate(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rate, D::Error> {
        let s = String::deserialize(d)?;
        parse_rate(&s).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod opt_rate_str {
    use super::{format_rate, parse_rate, Rate};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rate>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_str(&format_rate(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rate>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| parse_rate(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("need at least 2 transmitter-receiver pairs, got {0}")]
    InvalidK(usize),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid rate {0:?}")]
    BadRate(String),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("node {0:?} is declared twice")]
    DuplicateNode(String),
    #[error("{role} node {name:?} needs an index")]
    MissingIndex { role: &'static str, name: String },
    #[error("network file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub usize);

impl LinkId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "link#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    /// Sender of bitstream `i` (1-based).
    Transmitter(usize),
    /// Destination of bitstream `i` (1-based).
    Receiver(usize),
    Relay,
}

impl Role {
    pub fn transmitter_index(&self) -> Option<usize> {
        match self {
            Role::Transmitter(i) => Some(*i),
            _ => None,
        }
    }

    pub fn receiver_index(&self) -> Option<usize> {
        match self {
            Role::Receiver(i) => Some(*i),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub name: String,
    pub role: Role,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Classical,
    Quantum,
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkKind::Classical => write!(f, "classical"),
            LinkKind::Quantum => write!(f, "quantum"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Link {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: LinkKind,
    pub rate: Rate,
}

/// A mixed directed multigraph. Immutable once built; see [`NetworkBuilder`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    nodes: Vec<Node>,
    links: Vec<Link>,
    pairs: usize,
}

#[derive(Clone, Debug, Default)]
pub struct NetworkBuilder {
    nodes: Vec<Node>,
    links: Vec<Link>,
    pairs: usize,
}

impl NetworkBuilder {
    pub fn new(pairs: usize) -> Self {
        Self {
            pairs,
            ..Self::default()
        }
    }

    pub fn node(&mut self, name: impl Into<String>, role: Role) -> NodeId {
        self.nodes.push(Node {
            name: name.into(),
            role,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Endpoints are not checked here; [`Network::validate`] reports them.
    pub fn link(&mut self, src: NodeId, dst: NodeId, kind: LinkKind, rate: Rate) -> LinkId {
        self.links.push(Link {
            src,
            dst,
            kind,
            rate,
        });
        LinkId(self.links.len() - 1)
    }

    pub fn quantum(&mut self, src: NodeId, dst: NodeId) -> LinkId {
        self.link(src, dst, LinkKind::Quantum, Rate::from_integer(1))
    }

    pub fn classical(&mut self, src: NodeId, dst: NodeId) -> LinkId {
        self.link(src, dst, LinkKind::Classical, Rate::from_integer(1))
    }

    pub fn build(self) -> Network {
        Network {
            nodes: self.nodes,
            links: self.links,
            pairs: self.pairs,
        }
    }
}

/// A set of nodes on the "inside" of a cut.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub inside: BTreeSet<NodeId>,
}

impl Partition {
    pub fn new(inside: impl IntoIterator<Item = NodeId>) -> Self {
        Self {
            inside: inside.into_iter().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    UndeclaredEndpoint { link: LinkId, node: NodeId },
    NonPositiveRate { link: LinkId },
    DuplicateRole { role: Role, nodes: Vec<NodeId> },
    MissingRole { role: Role },
    IndexOutOfRange { node: NodeId, role: Role },
    DuplicateName { name: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UndeclaredEndpoint { link, node } => {
                write!(f, "{link} references undeclared node {}", node.0)
            }
            Violation::NonPositiveRate { link } => write!(f, "{link} has a non-positive rate"),
            Violation::DuplicateRole { role, nodes } => {
                write!(f, "role {role:?} is held by {} nodes", nodes.len())
            }
            Violation::MissingRole { role } => write!(f, "no node holds role {role:?}"),
            Violation::IndexOutOfRange { node, role } => {
                write!(f, "node {} has role {role:?} outside 1..k", node.0)
            }
            Violation::DuplicateName { name } => write!(f, "node name {name:?} is not unique"),
        }
    }
}

impl Network {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id.0)
    }

    pub fn link(&self, id: LinkId) -> Option<&Link> {
        self.links.get(id.0)
    }

    /// Number of transmitter-receiver pairs.
    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn link_ids(&self) -> impl Iterator<Item = LinkId> + '_ {
        (0..self.links.len()).map(LinkId)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn links_of_kind(&self, kind: LinkKind) -> impl Iterator<Item = (LinkId, &Link)> + '_ {
        self.links
            .iter()
            .enumerate()
            .filter(move |(_, l)| l.kind == kind)
            .map(|(i, l)| (LinkId(i), l))
    }

    pub fn find_node(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name).map(NodeId)
    }

    pub fn name(&self, id: NodeId) -> &str {
        self.nodes.get(id.0).map_or("?", |n| n.name.as_str())
    }

    pub fn transmitter(&self, i: usize) -> Option<NodeId> {
        self.role_holder(&Role::Transmitter(i))
    }

    pub fn receiver(&self, i: usize) -> Option<NodeId> {
        self.role_holder(&Role::Receiver(i))
    }

    fn role_holder(&self, role: &Role) -> Option<NodeId> {
        self.nodes.iter().position(|n| &n.role == role).map(NodeId)
    }

    pub fn transmitters(&self) -> Vec<NodeId> {
        (1..=self.pairs)
            .filter_map(|i| self.transmitter(i))
            .collect()
    }

    pub fn receivers(&self) -> Vec<NodeId> {
        (1..=self.pairs).filter_map(|i| self.receiver(i)).collect()
    }

    /// First link `src -> dst` of the given kind, in stable order.
    pub fn find_link(&self, src: NodeId, dst: NodeId, kind: LinkKind) -> Option<LinkId> {
        self.links
            .iter()
            .position(|l| l.src == src && l.dst == dst && l.kind == kind)
            .map(LinkId)
    }

    pub fn count(&self, kind: LinkKind) -> usize {
        self.links.iter().filter(|l| l.kind == kind).count()
    }

    /// Every type-level invariant that does not hold. Empty means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut names = BTreeSet::new();
        for n in &self.nodes {
            if !names.insert(n.name.as_str()) {
                out.push(Violation::DuplicateName {
                    name: n.name.clone(),
                });
            }
        }
        for (i, l) in self.links.iter().enumerate() {
            for end in [l.src, l.dst] {
                if end.0 >= self.nodes.len() {
                    out.push(Violation::UndeclaredEndpoint {
                        link: LinkId(i),
                        node: end,
                    });
                }
            }
            if l.rate.is_zero() {
                out.push(Violation::NonPositiveRate { link: LinkId(i) });
            }
        }
        let mut holders: BTreeMap<Role, Vec<NodeId>> = BTreeMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let index = match n.role {
                Role::Transmitter(j) | Role::Receiver(j) => j,
                Role::Relay => continue,
            };
            if index == 0 || index > self.pairs {
                out.push(Violation::IndexOutOfRange {
                    node: NodeId(i),
                    role: n.role.clone(),
                });
                continue;
            }
            holders.entry(n.role.clone()).or_default().push(NodeId(i));
        }
        for i in 1..=self.pairs {
            for role in [Role::Transmitter(i), Role::Receiver(i)] {
                match holders.get(&role) {
                    None => out.push(Violation::MissingRole { role }),
                    Some(nodes) if nodes.len() > 1 => out.push(Violation::DuplicateRole {
                        role,
                        nodes: nodes.clone(),
                    }),
                    Some(_) => {}
                }
            }
        }
        out
    }

    /// Total rate of links of the selected kinds leaving `p.inside`.
    pub fn cut_out_capacity(
        &self,
        p: &Partition,
        kinds: &[LinkKind],
    ) -> Result<Rate, NetworkError> {
        if p.inside.is_empty() {
            return Err(NetworkError::InvalidPartition("empty".into()));
        }
        if p.inside.len() >= self.nodes.len() {
            return Err(NetworkError::InvalidPartition(
                "must leave at least one node outside".into(),
            ));
        }
        if let Some(bad) = p.inside.iter().find(|n| n.0 >= self.nodes.len()) {
            return Err(NetworkError::InvalidPartition(format!(
                "node {} is not in the network",
                bad.0
            )));
        }
        Ok(self
            .links
            .iter()
            .filter(|l| kinds.contains(&l.kind))
            .filter(|l| p.inside.contains(&l.src) && !p.inside.contains(&l.dst))
            .map(|l| l.rate)
            .fold(Rate::zero(), |a, b| a + b))
    }

    /// Splits every link into parallel links of rate at most 1: `floor(r)`
    /// unit links followed by one link carrying the fractional remainder.
    pub fn normalize_unit_edges(&self) -> Network {
        let one = Rate::from_integer(1);
        let mut links = Vec::with_capacity(self.links.len());
        for l in &self.links {
            let whole = l.rate.to_integer();
            for _ in 0..whole {
                links.push(Link {
                    rate: one,
                    ..l.clone()
                });
            }
            let frac = l.rate.fract();
            if !frac.is_zero() {
                links.push(Link {
                    rate: frac,
                    ..l.clone()
                });
            }
        }
        Network {
            nodes: self.nodes.clone(),
            links,
            pairs: self.pairs,
        }
    }

    /// Total rate per `(src, dst, kind)`.
    pub fn aggregate_rates(&self) -> BTreeMap<(NodeId, NodeId, LinkKind), Rate> {
        let mut m = BTreeMap::new();
        for l in &self.links {
            *m.entry((l.src, l.dst, l.kind)).or_insert_with(Rate::zero) += l.rate;
        }
        m
    }

    pub fn to_json(&self) -> String {
        let file = NetworkFile::from(self);
        let mut s = serde_json::to_string_pretty(&file).expect("network serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Network, NetworkError> {
        let file: NetworkFile = serde_json::from_str(text)?;
        file.try_into()
    }
}

/// Approximate rate for display.
pub fn rate_f64(r: &Rate) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RoleTag {
    Transmitter,
    Receiver,
    Relay,
}

#[derive(Serialize, Deserialize)]
struct NodeEntry {
    id: String,
    role: RoleTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    index: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct LinkEntry {
    src: String,
    dst: String,
    kind: LinkKind,
    #[serde(with = "rate_str")]
    rate: Rate,
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    k: usize,
    nodes: Vec<NodeEntry>,
    links: Vec<LinkEntry>,
}

impl From<&Network> for NetworkFile {
    fn from(n: &Network) -> Self {
        let nodes = n
            .nodes
            .iter()
            .map(|node| {
                let (role, index) = match node.role {
                    Role::Transmitter(i) => (RoleTag::Transmitter, Some(i)),
                    Role::Receiver(i) => (RoleTag::Receiver, Some(i)),
                    Role::Relay => (RoleTag::Relay, None),
                };
                NodeEntry {
                    id: node.name.clone(),
                    role,
                    index,
                }
            })
            .collect();
        let links = n
            .links
            .iter()
            .map(|l| LinkEntry {
                src: n.name(l.src).to_string(),
                dst: n.name(l.dst).to_string(),
                kind: l.kind,
                rate: l.rate,
            })
            .collect();
        NetworkFile {
            k: n.pairs,
            nodes,
            links,
        }
    }
}

impl TryFrom<NetworkFile> for Network {
    type Error = NetworkError;

    fn try_from(file: NetworkFile) -> Result<Self, Self::Error> {
        let mut b = NetworkBuilder::new(file.k);
        let mut ids = BTreeMap::new();
        for entry in file.nodes {
            let role = match (entry.role, entry.index) {
                (RoleTag::Transmitter, Some(i)) => Role::Transmitter(i),
                (RoleTag::Receiver, Some(i)) => Role::Receiver(i),
                (RoleTag::Relay, _) => Role::Relay,
                (RoleTag::Transmitter, None) => {
                    return Err(NetworkError::MissingIndex {
                        role: "transmitter",
                        name: entry.id,
                    })
                }
                (RoleTag::Receiver, None) => {
                    return Err(NetworkError::MissingIndex {
                        role: "receiver",
                        name: entry.id,
                    })
                }
            };
            if ids.contains_key(&entry.id) {
                return Err(NetworkError::DuplicateNode(entry.id));
            }
            let id = b.node(entry.id.clone(), role);
            ids.insert(entry.id, id);
        }
        for l in file.links {
            let src = *ids.get(&l.src).ok_or(NetworkError::UnknownNode(l.src))?;
            let dst = *ids.get(&l.dst).ok_or(NetworkError::UnknownNode(l.dst))?;
            b.link(src, dst, l.kind, l.rate);
        }
        Ok(b.build())
    }
}

/// Fig.-1 style loop: A (transmitter 1) and B (receiver 1) joined by one
/// unit quantum link in each direction.
pub fn build_two_node_loop() -> Network {
    let mut b = NetworkBuilder::new(1);
    let a = b.node("A", Role::Transmitter(1));
    let r = b.node("B", Role::Receiver(1));
    b.quantum(a, r);
    b.quantum(r, a);
    b.build()
}

/// The two-unicast butterfly: sources `s1`, `s2`, coding node `u`, fan-out
/// node `v`, sinks `y1`, `y2`. Stream 1 goes from the top-left source to the
/// bottom-right sink, stream 2 the other way. All links classical, rate 1.
///
/// Links, in order: `s1->u`, `s2->u`, `u->v`, `v->y1`, `v->y2`, `s1->y2`,
/// `s2->y1`.
pub fn build_butterfly() -> Network {
    let mut b = NetworkBuilder::new(2);
    let s1 = b.node("s1", Role::Transmitter(1));
    let s2 = b.node("s2", Role::Transmitter(2));
    let u = b.node("u", Role::Relay);
    let v = b.node("v", Role::Relay);
    let y1 = b.node("y1", Role::Receiver(1));
    let y2 = b.node("y2", Role::Receiver(2));
    b.classical(s1, u);
    b.classical(s2, u);
    b.classical(u, v);
    b.classical(v, y1);
    b.classical(v, y2);
    b.classical(s1, y2);
    b.classical(s2, y1);
    b.build()
}

/// Which of the seven link families of the separation network a link is in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Prop1Component {
    /// `t_i -> r_i`, quantum.
    A,
    /// `r_i -> t_j` for `j != i`, quantum.
    B,
    /// `r_i -> m2`, quantum.
    C,
    /// `m2 -> m1`, quantum.
    D,
    /// `m1 -> t_i`, quantum.
    E,
    /// `m2 -> r_i`, classical.
    F,
    /// `t_i -> t_j` for `j != i`, classical.
    G,
}

/// The separation network on `k` pairs: nodes `t1..tk`, `r1..rk`, `m1`, `m2`
/// and unit-rate links listed component by component (A through G).
pub fn build_prop1(k: usize) -> Result<Network, NetworkError> {
    if k < 2 {
        return Err(NetworkError::InvalidK(k));
    }
    let mut b = NetworkBuilder::new(k);
    let t: Vec<NodeId> = (1..=k)
        .map(|i| b.node(format!("t{i}"), Role::Transmitter(i)))
        .collect();
    let r: Vec<NodeId> = (1..=k)
        .map(|i| b.node(format!("r{i}"), Role::Receiver(i)))
        .collect();
    let m1 = b.node("m1", Role::Relay);
    let m2 = b.node("m2", Role::Relay);
    for (&ti, &ri) in t.iter().zip(&r) {
        b.quantum(ti, ri);
    }
    for (i, &ri) in r.iter().enumerate() {
        for (j, &tj) in t.iter().enumerate() {
            if i != j {
                b.quantum(ri, tj);
            }
        }
    }
    for &ri in &r {
        b.quantum(ri, m2);
    }
    b.quantum(m2, m1);
    for &ti in &t {
        b.quantum(m1, ti);
    }
    for &ri in &r {
        b.classical(m2, ri);
    }
    for i in 0..k {
        for j in 0..k {
            if i != j {
                b.classical(t[i], t[j]);
            }
        }
    }
    Ok(b.build())
}

/// Classifies a link of a network laid out like [`build_prop1`] by its
/// endpoints' roles. Relays are identified by the names `m1` and `m2`.
pub fn prop1_component(net: &Network, link: LinkId) -> Option<Prop1Component> {
    let l = net.link(link)?;
    let src = net.node(l.src)?;
    let dst = net.node(l.dst)?;
    use LinkKind::*;
    use Role::*;
    match (&src.role, &dst.role, l.kind) {
        (Transmitter(i), Receiver(j), Quantum) if i == j => Some(Prop1Component::A),
        (Receiver(i), Transmitter(j), Quantum) if i != j => Some(Prop1Component::B),
        (Receiver(_), Relay, Quantum) if dst.name == "m2" => Some(Prop1Component::C),
        (Relay, Relay, Quantum) if src.name == "m2" && dst.name == "m1" => Some(Prop1Component::D),
        (Relay, Transmitter(_), Quantum) if src.name == "m1" => Some(Prop1Component::E),
        (Relay, Receiver(_), Classical) if src.name == "m2" => Some(Prop1Component::F),
        (Transmitter(i), Transmitter(j), Classical) if i != j => Some(Prop1Component::G),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rate(n: u64, d: u64) -> Rate {
        Rate::new(n, d)
    }

    #[test]
    fn two_node_loop_shape() {
        let n = build_two_node_loop();
        assert_eq!(n.count(LinkKind::Quantum), 2);
        assert_eq!(n.count(LinkKind::Classical), 0);
        assert!(n.validate().is_empty());
        let a = n.find_node("A").unwrap();
        let b = n.find_node("B").unwrap();
        let cap = |id| {
            n.cut_out_capacity(&Partition::new([id]), &[LinkKind::Quantum])
                .unwrap()
        };
        assert_eq!(cap(a), rate(1, 1));
        assert_eq!(cap(b), rate(1, 1));
    }

    #[test]
    fn butterfly_shape() {
        let n = build_butterfly();
        assert_eq!(n.nodes().len(), 6);
        assert_eq!(n.count(LinkKind::Classical), 7);
        assert!(n.validate().is_empty());
        // The coding node's only way out is the bottleneck.
        let u = n.find_node("u").unwrap();
        let cut = n
            .cut_out_capacity(&Partition::new([u]), &[LinkKind::Classical])
            .unwrap();
        assert_eq!(cut, rate(1, 1));
    }

    #[test]
    fn prop1_counts() {
        let n = build_prop1(3).unwrap();
        assert_eq!(n.count(LinkKind::Quantum), 16);
        assert_eq!(n.count(LinkKind::Classical), 9);
        assert!(n.links().iter().all(|l| l.rate == rate(1, 1)));
        assert!(matches!(build_prop1(1), Err(NetworkError::InvalidK(1))));
        for k in 2..=16 {
            let n = build_prop1(k).unwrap();
            assert!(n.validate().is_empty(), "k={k}");
            assert_eq!(n.count(LinkKind::Quantum), k * k + 2 * k + 1);
            assert_eq!(n.count(LinkKind::Classical), k * k);
        }
    }

    #[test]
    fn prop1_components_cover_every_link() {
        let n = build_prop1(4).unwrap();
        let mut counts = BTreeMap::new();
        for id in n.link_ids() {
            *counts.entry(prop1_component(&n, id).unwrap()).or_insert(0) += 1;
        }
        use Prop1Component::*;
        assert_eq!(counts[&A], 4);
        assert_eq!(counts[&B], 12);
        assert_eq!(counts[&C], 4);
        assert_eq!(counts[&D], 1);
        assert_eq!(counts[&E], 4);
        assert_eq!(counts[&F], 4);
        assert_eq!(counts[&G], 12);
    }

    #[test]
    fn prop1_cuts() {
        for k in 2..=8 {
            let n = build_prop1(k).unwrap();
            let tx = Partition::new(n.transmitters());
            let q = n.cut_out_capacity(&tx, &[LinkKind::Quantum]).unwrap();
            let c = n.cut_out_capacity(&tx, &[LinkKind::Classical]).unwrap();
            assert_eq!(q, Rate::from_integer(k as u64));
            assert_eq!(c, Rate::zero());
            // Receivers plus relays: only component E leaves towards transmitters.
            let mut other = n.receivers();
            other.push(n.find_node("m1").unwrap());
            other.push(n.find_node("m2").unwrap());
            let back = Partition::new(other);
            let q = n.cut_out_capacity(&back, &[LinkKind::Quantum]).unwrap();
            // B and E both leave this side: k(k-1) + k.
            assert_eq!(q, Rate::from_integer((k * k) as u64));
        }
    }

    #[test]
    fn invalid_partitions() {
        let n = build_two_node_loop();
        let all = Partition::new(n.node_ids());
        assert!(n.cut_out_capacity(&all, &[LinkKind::Quantum]).is_err());
        assert!(n
            .cut_out_capacity(&Partition::new([]), &[LinkKind::Quantum])
            .is_err());
        assert!(n
            .cut_out_capacity(&Partition::new([NodeId(9)]), &[LinkKind::Quantum])
            .is_err());
    }

    #[test]
    fn validate_reports_problems() {
        let mut b = NetworkBuilder::new(1);
        let t = b.node("t", Role::Transmitter(1));
        b.node("r", Role::Receiver(1));
        b.quantum(t, NodeId(7));
        let v = b.build().validate();
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::UndeclaredEndpoint { .. }));

        let mut b = NetworkBuilder::new(1);
        b.node("t", Role::Transmitter(1));
        b.node("t2", Role::Transmitter(1));
        b.node("r", Role::Receiver(1));
        let v = b.build().validate();
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::DuplicateRole { .. }));

        let mut b = NetworkBuilder::new(1);
        let t = b.node("t", Role::Transmitter(1));
        let r = b.node("r", Role::Receiver(1));
        b.link(t, r, LinkKind::Classical, Rate::zero());
        assert!(matches!(
            b.build().validate()[..],
            [Violation::NonPositiveRate { .. }]
        ));
    }

    #[test]
    fn normalize_examples() {
        let mut b = NetworkBuilder::new(1);
        let t = b.node("t", Role::Transmitter(1));
        let r = b.node("r", Role::Receiver(1));
        b.link(t, r, LinkKind::Quantum, rate(2, 1));
        b.link(r, t, LinkKind::Quantum, rate(1, 1));
        b.link(r, t, LinkKind::Classical, rate(3, 2));
        let n = b.build().normalize_unit_edges();
        let rates: Vec<(LinkKind, Rate)> = n.links().iter().map(|l| (l.kind, l.rate)).collect();
        assert_eq!(
            rates,
            vec![
                (LinkKind::Quantum, rate(1, 1)),
                (LinkKind::Quantum, rate(1, 1)),
                (LinkKind::Quantum, rate(1, 1)),
                (LinkKind::Classical, rate(1, 1)),
                (LinkKind::Classical, rate(1, 2)),
            ]
        );
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        for net in [
            build_two_node_loop(),
            build_butterfly(),
            build_prop1(3).unwrap(),
        ] {
            let text = net.to_json();
            let back = Network::from_json(&text).unwrap();
            assert_eq!(back, net);
            assert_eq!(back.to_json(), text);
        }
    }

    #[test]
    fn json_format_details() {
        let text = build_two_node_loop().to_json();
        assert!(text.contains(r#""rate": "1/1""#));
        assert!(text.contains(r#""role": "transmitter""#));
        let bad = r#"{"k":1,"nodes":[{"id":"a","role":"relay"}],"links":[{"src":"a","dst":"zz","kind":"quantum","rate":"1/1"}]}"#;
        assert!(matches!(
            Network::from_json(bad),
            Err(NetworkError::UnknownNode(_))
        ));
        let bad_rate = r#"{"k":1,"nodes":[{"id":"a","role":"relay"}],"links":[{"src":"a","dst":"a","kind":"quantum","rate":"1/0"}]}"#;
        assert!(Network::from_json(bad_rate).is_err());
        assert_eq!(parse_rate("3").unwrap(), rate(3, 1));
        assert_eq!(parse_rate("6/4").unwrap(), rate(3, 2));
    }

    fn random_network() -> impl Strategy<Value = Network> {
        let link = (0usize..6, 0usize..6, any::<bool>(), 1u64..7, 1u64..4);
        proptest::collection::vec(link, 1..14).prop_map(|links| {
            let mut b = NetworkBuilder::new(0);
            let ids: Vec<NodeId> = (0..6)
                .map(|i| b.node(format!("n{i}"), Role::Relay))
                .collect();
            for (s, d, q, num, den) in links {
                let kind = if q {
                    LinkKind::Quantum
                } else {
                    LinkKind::Classical
                };
                b.link(ids[s], ids[d], kind, Rate::new(num, den));
            }
            b.build()
        })
    }

    proptest! {
        #[test]
        fn normalize_preserves_cuts(net in random_network(), mask in 1u32..63) {
            let norm = net.normalize_unit_edges();
            prop_assert!(norm.links().iter().all(|l| l.rate <= Rate::from_integer(1)));
            prop_assert_eq!(norm.aggregate_rates(), net.aggregate_rates());
            let p = Partition::new((0..6).filter(|i| mask & (1 << i) != 0).map(NodeId));
            for kinds in [&[LinkKind::Quantum][..], &[LinkKind::Classical], &[LinkKind::Quantum, LinkKind::Classical]] {
                prop_assert_eq!(
                    norm.cut_out_capacity(&p, kinds).unwrap(),
                    net.cut_out_capacity(&p, kinds).unwrap()
                );
            }
        }
    }
}
