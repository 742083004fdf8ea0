//! Mixed classical/quantum network simulation: qubit-formula network codes,
//! a stabilizer tableau oracle, superdense coding and throughput runs.

pub mod cli;
pub mod decomposition;
pub mod formula;
pub mod network;
pub mod protocol;
pub mod report;
pub mod stabilizer;

pub use decomposition::{Decomposition, ValidatedDecomposition};
pub use formula::{FormulaEngine, FormulaError, QubitFormula, QubitId, SymbolId};
pub use network::{Link, LinkId, LinkKind, Network, NetworkError, NodeId, Partition, Rate, Role};
pub use protocol::ProtocolError;
pub use report::{Comparison, ThroughputReport};
pub use stabilizer::{PauliString, Tableau, TableauError};
