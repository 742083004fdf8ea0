use std::collections::HashMap;

use num_traits::Zero;

use super::ProtocolError;
use crate::network::{LinkId, LinkKind, Network, Rate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Payload {
    /// A qubit in an arbitrary (possibly entangled) state.
    Qubit,
    /// A classical bit. On a quantum link it rides as a basis state and is
    /// charged against the qubit rate.
    Bit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrafficRecord {
    pub step: u64,
    pub link: LinkId,
    pub payload: Payload,
    pub purpose: &'static str,
}

/// Every payload unit moved over a link, in order of recording.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrafficLog {
    records: Vec<TrafficRecord>,
}

impl TrafficLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, step: u64, link: LinkId, payload: Payload, purpose: &'static str) {
        self.records.push(TrafficRecord {
            step,
            link,
            payload,
            purpose,
        });
    }

    pub fn extend(&mut self, other: TrafficLog) {
        self.records.extend(other.records);
    }

    pub fn records(&self) -> &[TrafficRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Last step in which anything moved; 0 for an empty log.
    pub fn last_step(&self) -> u64 {
        self.records.iter().map(|r| r.step).max().unwrap_or(0)
    }

    pub fn on_link(&self, link: LinkId) -> impl Iterator<Item = &TrafficRecord> + '_ {
        self.records.iter().filter(move |r| r.link == link)
    }

    /// Checks link existence, kind discipline and per-step capacity.
    pub fn check(&self, net: &Network) -> Result<(), ProtocolError> {
        let mut used: HashMap<(u64, LinkId), u64> = HashMap::new();
        for r in &self.records {
            let link = net.link(r.link).ok_or(ProtocolError::UnknownLink(r.link))?;
            if r.step == 0 {
                return Err(ProtocolError::Schedule(format!(
                    "{} used at step 0; steps start at 1",
                    r.link
                )));
            }
            if r.payload == Payload::Qubit && link.kind == LinkKind::Classical {
                return Err(ProtocolError::KindViolation {
                    step: r.step,
                    link: r.link,
                });
            }
            *used.entry((r.step, r.link)).or_insert(0) += 1;
        }
        let mut worst: Vec<_> = used.into_iter().collect();
        worst.sort();
        for ((step, id), count) in worst {
            let rate = net.link(id).map(|l| l.rate).unwrap_or_else(Rate::zero);
            if Rate::from_integer(count) > rate {
                return Err(ProtocolError::CapacityExceeded {
                    step,
                    link: id,
                    used: count,
                    rate,
                });
            }
        }
        Ok(())
    }

    /// Largest number of payload units any single link carried in one step.
    pub fn peak_per_step(&self, link: LinkId) -> u64 {
        let mut per: HashMap<u64, u64> = HashMap::new();
        for r in self.on_link(link) {
            *per.entry(r.step).or_insert(0) += 1;
        }
        per.values().copied().max().unwrap_or(0)
    }
}
