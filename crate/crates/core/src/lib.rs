//! Justification-based truth maintenance for shared management data, plus the
//! epidemic belief-propagation machinery used to keep a node group consistent.
//!
//! The crate is `no_std` and only needs `alloc`:
//!
//! - [`kb`]: the per-node knowledge base. Data are believed when every
//!   antecedent is present; believed data are further tagged internal (all
//!   support generated locally) or external (some support received).
//! - [`dsl`]: parser and renderer for the Prolog-shaped `.jkb` knowledge-base
//!   format and the one-line state reports.
//! - [`protocol`]: the per-node state machine for unbridled (flooding) and
//!   controlled (backoff + replication-controlling function) propagation.
//! - [`sim`]: a deterministic cycle-based simulator over random overlays.
//! - [`fixtures`]: the bundled knowledge bases from the two case studies.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dsl;
pub mod fixtures;
pub mod kb;
pub mod protocol;
pub mod sim;
mod symbol;

pub use kb::{
    Antecedent, AntecedentKind, Cycle, DatumDefinition, KbError, KnowledgeBase, Label,
    LabelChange, Origin, Provenance, SourceTag, StateReport,
};
pub use symbol::{InvalidSymbol, NodeId, SymbolId};
