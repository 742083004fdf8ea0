//! Superdense coding on a stabilizer tableau.
//!
//! Mapping: `00 -> I`, `01 -> X`, `10 -> Z`, `11 -> XZ` on the transmitter's
//! half. Decoding is `CNOT(t, r)`, `H(t)` and two Z measurements; the
//! transmitter half gives the high bit, the receiver half the low bit.

use std::collections::BTreeMap;
use std::fmt;

use super::ProtocolError;
use crate::stabilizer::Tableau;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SuperdenseMessage {
    pub high: bool,
    pub low: bool,
}

impl SuperdenseMessage {
    pub const ALL: [SuperdenseMessage; 4] = [
        SuperdenseMessage::new(false, false),
        SuperdenseMessage::new(false, true),
        SuperdenseMessage::new(true, false),
        SuperdenseMessage::new(true, true),
    ];

    pub const fn new(high: bool, low: bool) -> Self {
        Self { high, low }
    }

    /// `0..=3` with `high` as the upper bit.
    pub fn from_bits(v: u8) -> Self {
        Self::new(v & 2 != 0, v & 1 != 0)
    }

    pub fn bits(self) -> u8 {
        (self.high as u8) << 1 | self.low as u8
    }
}

impl fmt::Display for SuperdenseMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.high as u8, self.low as u8)
    }
}

/// Applies the encoding Pauli to `half`.
pub fn superdense_encode(
    t: &mut Tableau,
    m: SuperdenseMessage,
    half: usize,
) -> Result<(), ProtocolError> {
    if m.low {
        t.x_gate(half)?;
    }
    if m.high {
        t.z_gate(half)?;
    }
    Ok(())
}

/// Bell-basis measurement of `(t_half, r_half)`. Consumes the pair.
pub fn superdense_decode(
    t: &mut Tableau,
    t_half: usize,
    r_half: usize,
) -> Result<SuperdenseMessage, ProtocolError> {
    t.cnot(t_half, r_half)?;
    t.h(t_half)?;
    // After the inverse Bell circuit both qubits are in basis states.
    let high = t.measure_z_with(t_half, || false)?;
    let low = t.measure_z_with(r_half, || false)?;
    debug_assert!(high.deterministic && low.deterministic);
    Ok(SuperdenseMessage::new(high.bit, low.bit))
}

/// A tableau plus bookkeeping of which qubit pairs currently share `|Phi+>`.
///
/// Encoding or decoding anything that is not a registered live pair fails
/// with [`ProtocolError::NoBellPair`].
#[derive(Clone, Debug)]
pub struct BellSession {
    tableau: Tableau,
    /// transmitter half -> receiver half
    live: BTreeMap<usize, usize>,
}

impl BellSession {
    pub fn new(qubits: usize) -> Result<Self, ProtocolError> {
        Ok(Self {
            tableau: Tableau::new(qubits)?,
            live: BTreeMap::new(),
        })
    }

    /// Wraps a tableau that already holds pairs; register them before use.
    pub fn from_tableau(tableau: Tableau) -> Self {
        Self {
            tableau,
            live: BTreeMap::new(),
        }
    }

    pub fn tableau(&mut self) -> &mut Tableau {
        &mut self.tableau
    }

    /// Prepares `|Phi+>` on `(t_half, r_half)` from `|00>`.
    pub fn prepare_pair(&mut self, t_half: usize, r_half: usize) -> Result<(), ProtocolError> {
        self.tableau.h(t_half)?;
        self.tableau.cnot(t_half, r_half)?;
        self.register(t_half, r_half)
    }

    /// Registers an existing pair; the tableau must confirm it.
    pub fn register(&mut self, t_half: usize, r_half: usize) -> Result<(), ProtocolError> {
        if !self.tableau.is_bell(t_half, r_half)? {
            return Err(ProtocolError::NoBellPair);
        }
        self.live.insert(t_half, r_half);
        Ok(())
    }

    pub fn encode(&mut self, m: SuperdenseMessage, t_half: usize) -> Result<(), ProtocolError> {
        if !self.live.contains_key(&t_half) {
            return Err(ProtocolError::NoBellPair);
        }
        superdense_encode(&mut self.tableau, m, t_half)
    }

    pub fn decode(
        &mut self,
        t_half: usize,
        r_half: usize,
    ) -> Result<SuperdenseMessage, ProtocolError> {
        if self.live.get(&t_half) != Some(&r_half) {
            return Err(ProtocolError::NoBellPair);
        }
        self.live.remove(&t_half);
        let m = superdense_decode(&mut self.tableau, t_half, r_half)?;
        // Return both qubits to |0> so the slots can be reused.
        if m.high {
            self.tableau.x_gate(t_half)?;
        }
        if m.low {
            self.tableau.x_gate(r_half)?;
        }
        Ok(m)
    }

    /// Encode, transmit and decode one message on a fresh pair.
    pub fn round_trip(
        &mut self,
        m: SuperdenseMessage,
        t_half: usize,
        r_half: usize,
    ) -> Result<SuperdenseMessage, ProtocolError> {
        self.prepare_pair(t_half, r_half)?;
        self.encode(m, t_half)?;
        self.decode(t_half, r_half)
    }
}
