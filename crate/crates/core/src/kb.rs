//! Per-node knowledge base: datum definitions, justification presences and
//! the labels derived from them.
//!
//! A datum is believed ("in") when every one of its antecedents is satisfied.
//! A justification antecedent is satisfied when it is present; a datum
//! antecedent is satisfied when that datum is itself in. A believed datum is
//! internal when every justification antecedent was generated locally and
//! every datum antecedent is itself internal, and external otherwise.
//!
//! Every mutation relabels the affected part of the datum DAG before it
//! returns, so stored labels always agree with the presences.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::symbol::{NodeId, SymbolId};

/// Simulation time, in cycles.
pub type Cycle = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// Produced by a management service module on this node.
    Generated,
    /// Learned from a belief-change message; carries the originating node.
    Received(NodeId),
}

/// Where a justification presence came from and when it was recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub origin: Origin,
    pub at: Cycle,
}

impl Provenance {
    pub fn generated(at: Cycle) -> Self {
        Self { origin: Origin::Generated, at }
    }

    pub fn received(source: NodeId, at: Cycle) -> Self {
        Self { origin: Origin::Received(source), at }
    }

    pub fn is_generated(&self) -> bool {
        matches!(self.origin, Origin::Generated)
    }

    pub fn source(&self) -> Option<NodeId> {
        match self.origin {
            Origin::Generated => None,
            Origin::Received(node) => Some(node),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AntecedentKind {
    Justification,
    Datum,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Antecedent {
    pub target: SymbolId,
    pub kind: AntecedentKind,
}

impl Antecedent {
    pub fn justification(target: SymbolId) -> Self {
        Self { target, kind: AntecedentKind::Justification }
    }

    pub fn datum(target: SymbolId) -> Self {
        Self { target, kind: AntecedentKind::Datum }
    }
}

/// A datum with its conjunctive list of antecedents. Antecedent order only
/// affects presentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatumDefinition {
    pub id: SymbolId,
    pub antecedents: Vec<Antecedent>,
}

impl DatumDefinition {
    pub fn new(id: SymbolId, antecedents: Vec<Antecedent>) -> Self {
        Self { id, antecedents }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Out,
    InInternal,
    InExternal,
}

impl Label {
    pub fn is_in(self) -> bool {
        !matches!(self, Label::Out)
    }

    /// Keyword used in state reports.
    pub fn keyword(self) -> &'static str {
        match self {
            Label::Out => "out",
            Label::InInternal => "internal",
            Label::InExternal => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelChange {
    pub datum: SymbolId,
    pub old: Label,
    pub new: Label,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KbError {
    #[error("symbol `{0}` is already declared")]
    DuplicateSymbol(SymbolId),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(SymbolId),
    #[error("datum `{datum}` references unknown antecedent `{antecedent}`")]
    UnknownAntecedent { datum: SymbolId, antecedent: SymbolId },
    #[error("datum `{datum}` uses `{antecedent}` as a {expected:?} but it is not one")]
    AntecedentKindMismatch {
        datum: SymbolId,
        antecedent: SymbolId,
        expected: AntecedentKind,
    },
    #[error("datum `{datum}` lists antecedent `{antecedent}` more than once")]
    DuplicateAntecedent { datum: SymbolId, antecedent: SymbolId },
    #[error("datum `{0}` has no antecedents")]
    EmptyDefinition(SymbolId),
    #[error("definition of `{0}` would create a cycle")]
    CyclicDefinition(SymbolId),
    #[error("`{0}` is a datum; datum states are derived, never set")]
    NotAJustification(SymbolId),
    #[error("`{0}` is not a datum")]
    NotADatum(SymbolId),
}

/// Whether a satisfied antecedent is backed by local (`mod`) or received
/// (`msg`) knowledge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceTag {
    Mod,
    Msg,
}

impl SourceTag {
    pub fn keyword(self) -> &'static str {
        match self {
            SourceTag::Mod => "mod",
            SourceTag::Msg => "msg",
        }
    }
}

/// Answer to a datum query. `support` lists antecedents in definition order
/// and is empty when the datum is out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateReport {
    pub datum: SymbolId,
    pub label: Label,
    pub support: Vec<(SymbolId, SourceTag)>,
}

impl fmt::Display for StateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{} (", self.datum, self.label.keyword())?;
        for (i, (name, tag)) in self.support.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}:{}", name, tag.keyword())?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Entry {
    Justification(usize),
    Datum(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Input {
    Justification(usize),
    Datum(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct DatumNode {
    def: DatumDefinition,
    inputs: Vec<Input>,
    dependents: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct Schema {
    index: BTreeMap<SymbolId, Entry>,
    justifications: Vec<SymbolId>,
    // Data that reference each justification, by datum index.
    justification_dependents: Vec<Vec<usize>>,
    // Definition order. Antecedents always precede their dependents.
    data: Vec<DatumNode>,
}

/// The belief store of one management node.
///
/// Definitions live behind an `Arc` and are shared copy-on-write, so cloning
/// a populated knowledge base for every peer of a large group only copies
/// presences and labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KnowledgeBase {
    schema: Arc<Schema>,
    presences: Vec<Option<Provenance>>,
    labels: Vec<Label>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_justification(&mut self, id: SymbolId) -> Result<(), KbError> {
        if self.schema.index.contains_key(&id) {
            return Err(KbError::DuplicateSymbol(id));
        }
        let schema = Arc::make_mut(&mut self.schema);
        let slot = schema.justifications.len();
        schema.index.insert(id.clone(), Entry::Justification(slot));
        schema.justifications.push(id);
        schema.justification_dependents.push(Vec::new());
        self.presences.push(None);
        Ok(())
    }

    /// Adds a datum. Every antecedent must already exist, so definition order
    /// is always a topological order of the datum graph.
    pub fn define_datum(&mut self, def: DatumDefinition) -> Result<Label, KbError> {
        if self.schema.index.contains_key(&def.id) {
            return Err(KbError::DuplicateSymbol(def.id));
        }
        if def.antecedents.is_empty() {
            return Err(KbError::EmptyDefinition(def.id));
        }
        let mut inputs = Vec::with_capacity(def.antecedents.len());
        let mut listed = BTreeSet::new();
        for ant in &def.antecedents {
            if ant.target == def.id {
                return Err(KbError::CyclicDefinition(def.id.clone()));
            }
            if !listed.insert(&ant.target) {
                return Err(KbError::DuplicateAntecedent {
                    datum: def.id.clone(),
                    antecedent: ant.target.clone(),
                });
            }
            let input = match (self.schema.index.get(&ant.target), ant.kind) {
                (None, _) => {
                    return Err(KbError::UnknownAntecedent {
                        datum: def.id.clone(),
                        antecedent: ant.target.clone(),
                    })
                }
                (Some(Entry::Justification(j)), AntecedentKind::Justification) => {
                    Input::Justification(*j)
                }
                (Some(Entry::Datum(d)), AntecedentKind::Datum) => Input::Datum(*d),
                (Some(_), expected) => {
                    return Err(KbError::AntecedentKindMismatch {
                        datum: def.id.clone(),
                        antecedent: ant.target.clone(),
                        expected,
                    })
                }
            };
            inputs.push(input);
        }

        let schema = Arc::make_mut(&mut self.schema);
        let idx = schema.data.len();
        for input in &inputs {
            match *input {
                Input::Justification(j) => schema.justification_dependents[j].push(idx),
                Input::Datum(d) => schema.data[d].dependents.push(idx),
            }
        }
        schema.index.insert(def.id.clone(), Entry::Datum(idx));
        schema.data.push(DatumNode { def, inputs, dependents: Vec::new() });
        let label = self.compute_label(idx);
        self.labels.push(label);
        Ok(label)
    }

    /// Records (`Some`) or retracts (`None`) the presence of a justification
    /// and relabels every datum downstream of it.
    ///
    /// A received presence never replaces a generated one; otherwise the
    /// latest write wins. Returns the label changes in propagation order.
    pub fn set_presence(
        &mut self,
        id: &SymbolId,
        presence: Option<Provenance>,
    ) -> Result<Vec<LabelChange>, KbError> {
        let slot = self.justification_slot(id)?;
        let current = self.presences[slot];
        if let (Some(cur), Some(new)) = (current, presence) {
            if cur.is_generated() && !new.is_generated() {
                return Ok(Vec::new());
            }
        }
        if current == presence {
            return Ok(Vec::new());
        }
        self.presences[slot] = presence;

        let schema = Arc::clone(&self.schema);
        let mut work: BTreeSet<usize> =
            schema.justification_dependents[slot].iter().copied().collect();
        let mut changes = Vec::new();
        // Dependents always have larger indices than their antecedents, so
        // ascending order visits each datum after everything it reads.
        while let Some(idx) = work.pop_first() {
            let old = self.labels[idx];
            let new = self.compute_label(idx);
            if old != new {
                self.labels[idx] = new;
                changes.push(LabelChange { datum: schema.data[idx].def.id.clone(), old, new });
                work.extend(schema.data[idx].dependents.iter().copied());
            }
        }
        Ok(changes)
    }

    /// Recomputes the label of a datum from its antecedents' current state.
    pub fn relabel(&self, id: &SymbolId) -> Result<Label, KbError> {
        let idx = self.datum_index(id)?;
        Ok(self.compute_label(idx))
    }

    pub fn label(&self, id: &SymbolId) -> Result<Label, KbError> {
        Ok(self.labels[self.datum_index(id)?])
    }

    pub fn presence(&self, id: &SymbolId) -> Result<Option<Provenance>, KbError> {
        Ok(self.presences[self.justification_slot(id)?])
    }

    pub fn query(&self, id: &SymbolId) -> Result<StateReport, KbError> {
        let idx = self.datum_index(id)?;
        let label = self.labels[idx];
        let node = &self.schema.data[idx];
        let support = if label.is_in() {
            node.def
                .antecedents
                .iter()
                .zip(&node.inputs)
                .map(|(ant, input)| {
                    let local = match *input {
                        Input::Justification(j) => {
                            self.presences[j].is_some_and(|p| p.is_generated())
                        }
                        Input::Datum(d) => self.labels[d] == Label::InInternal,
                    };
                    let tag = if local { SourceTag::Mod } else { SourceTag::Msg };
                    (ant.target.clone(), tag)
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(StateReport { datum: node.def.id.clone(), label, support })
    }

    pub fn is_justification(&self, id: &SymbolId) -> bool {
        matches!(self.schema.index.get(id), Some(Entry::Justification(_)))
    }

    pub fn is_datum(&self, id: &SymbolId) -> bool {
        matches!(self.schema.index.get(id), Some(Entry::Datum(_)))
    }

    /// Declared justifications in declaration order.
    pub fn justifications(&self) -> impl Iterator<Item = (&SymbolId, Option<Provenance>)> + '_ {
        self.schema.justifications.iter().zip(self.presences.iter().copied())
    }

    /// Datum definitions in definition order.
    pub fn definitions(&self) -> impl Iterator<Item = &DatumDefinition> + '_ {
        self.schema.data.iter().map(|node| &node.def)
    }

    /// Datum labels in definition order.
    pub fn labels(&self) -> impl Iterator<Item = (&SymbolId, Label)> + '_ {
        self.schema.data.iter().map(|n| &n.def.id).zip(self.labels.iter().copied())
    }

    fn justification_slot(&self, id: &SymbolId) -> Result<usize, KbError> {
        match self.schema.index.get(id) {
            Some(Entry::Justification(j)) => Ok(*j),
            Some(Entry::Datum(_)) => Err(KbError::NotAJustification(id.clone())),
            None => Err(KbError::UnknownSymbol(id.clone())),
        }
    }

    fn datum_index(&self, id: &SymbolId) -> Result<usize, KbError> {
        match self.schema.index.get(id) {
            Some(Entry::Datum(d)) => Ok(*d),
            Some(Entry::Justification(_)) => Err(KbError::NotADatum(id.clone())),
            None => Err(KbError::UnknownSymbol(id.clone())),
        }
    }

    fn compute_label(&self, idx: usize) -> Label {
        let mut internal = true;
        for input in &self.schema.data[idx].inputs {
            match *input {
                Input::Justification(j) => match self.presences[j] {
                    None => return Label::Out,
                    Some(p) => internal &= p.is_generated(),
                },
                Input::Datum(d) => match self.labels[d] {
                    Label::Out => return Label::Out,
                    Label::InExternal => internal = false,
                    Label::InInternal => {}
                },
            }
        }
        if internal {
            Label::InInternal
        } else {
            Label::InExternal
        }
    }
}
