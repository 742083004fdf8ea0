//! Time-stepped protocols over mixed networks.
//!
//! One time step is one parallel use of every link. Node-local operations
//! are free. Every run produces a [`TrafficLog`] that is checked against link
//! rates and kinds before a report is returned.

pub mod butterfly;
pub mod qlnc;
pub mod runs;
pub mod schedule;
pub mod superdense;
pub mod traffic;

use thiserror::Error;

use crate::formula::FormulaError;
use crate::network::{LinkId, LinkKind, NetworkError, Rate};
use crate::stabilizer::TableauError;

pub use butterfly::{run_butterfly, ButterflyOutput};
pub use qlnc::{qlnc_round, verify_with_oracle, Latency, Prop1Layout, RoundOutcome};
pub use runs::{
    combined_elapsed, fig1_elapsed, qlnc_only_elapsed, run_combined, run_fig1_loop, run_qlnc_only,
    run_superdense_only, superdense_only_elapsed, superdense_only_paper_literal, Mode, RunOptions,
    RunOutput,
};
pub use superdense::{superdense_decode, superdense_encode, BellSession, SuperdenseMessage};
pub use traffic::{Payload, TrafficLog, TrafficRecord};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("{link} carried {used} units in step {step}, rate is {rate}")]
    CapacityExceeded {
        step: u64,
        link: LinkId,
        used: u64,
        rate: Rate,
    },
    #[error("qubit sent over classical {link} in step {step}")]
    KindViolation { step: u64, link: LinkId },
    #[error("{0} does not exist")]
    UnknownLink(LinkId),
    #[error("{0} is not available to this code")]
    LinkNotAllowed(LinkId),
    #[error("no {kind:?} link {src} -> {dst}")]
    MissingLink {
        src: String,
        dst: String,
        kind: LinkKind,
    },
    #[error("schedule error: {0}")]
    Schedule(String),
    #[error("termination rejected: {0}")]
    TerminationInvalid(#[from] FormulaError),
    #[error("distribution did not yield one Bell pair per pair: {0}")]
    Distribution(String),
    #[error("invalid arguments: {0}")]
    InvalidArgs(String),
    #[error("no shared Bell pair available")]
    NoBellPair,
    #[error("stabilizer oracle: {0}")]
    Oracle(#[from] TableauError),
    #[error("oracle rejected pair {pair} in round {round}")]
    OracleRejected { round: u64, pair: usize },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("pair {pair} received a corrupted stream")]
    PayloadCorrupted { pair: usize },
    #[error("not a separation network: {0}")]
    NotProp1(String),
    #[error("stream lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("Bell inventory of pair {pair} went negative at step {step}")]
    InventoryUnderflow { pair: usize, step: u64 },
}

impl ProtocolError {
    /// True for errors caused by the caller's arguments rather than by a
    /// broken invariant during the run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            ProtocolError::InvalidArgs(_)
                | ProtocolError::LengthMismatch(..)
                | ProtocolError::NotProp1(_)
                | ProtocolError::Network(_)
        )
    }
}

/// Shared Bell pairs per transmitter-receiver pair (indices `1..=k`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BellInventory {
    counts: Vec<u64>,
    peak: Vec<u64>,
}

impl BellInventory {
    pub fn new(k: usize) -> Self {
        Self {
            counts: vec![0; k],
            peak: vec![0; k],
        }
    }

    pub fn pairs(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, pair: usize) -> u64 {
        self.counts[pair - 1]
    }

    /// Largest count each pair reached.
    pub fn peak(&self, pair: usize) -> u64 {
        self.peak[pair - 1]
    }

    pub fn max_peak(&self) -> u64 {
        self.peak.iter().copied().max().unwrap_or(0)
    }

    pub fn add(&mut self, pair: usize, n: u64) {
        let c = &mut self.counts[pair - 1];
        *c += n;
        let p = &mut self.peak[pair - 1];
        *p = (*p).max(*c);
    }

    pub fn add_delta(&mut self, delta: &[u64]) {
        for (i, &d) in delta.iter().enumerate() {
            self.add(i + 1, d);
        }
    }

    pub fn consume(&mut self, pair: usize) -> Result<(), ProtocolError> {
        let c = &mut self.counts[pair - 1];
        if *c == 0 {
            return Err(ProtocolError::NoBellPair);
        }
        *c -= 1;
        Ok(())
    }
}
