//! The `.jkb` knowledge-base format.
//!
//! A `.jkb` file is a sequence of Prolog-shaped clauses, each ending in `.`:
//!
//! ```text
//! justification(adm_cmd).
//! justification(async_sig).
//! justificationIsPresent(X) :- generated(X).
//! justificationIsPresent(X) :- received(X).
//! datumIsInternal(qos_pol) :-
//!  generated(adm_cmd),
//!  generated(async_sig).
//! datum(qos_pol) :-
//!  justificationIsPresent(adm_cmd),
//!  justificationIsPresent(async_sig).
//! generated(adm_cmd).
//! ```
//!
//! Only these clause shapes exist; nothing is evaluated as Prolog. The two
//! `justificationIsPresent` bridge rules are fixed boilerplate and are checked
//! verbatim. `%` starts a comment that runs to the end of the line.
//! `received(id).` may carry the sending node as `received(id, 7).`.

mod parser;
mod render;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::kb::{
    Antecedent, DatumDefinition, KbError, KnowledgeBase, Provenance, StateReport,
};
use crate::symbol::{NodeId, SymbolId};

pub use parser::parse_program;
pub use render::render_program;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BridgeSource {
    Generated,
    Received,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BodyAtom {
    JustificationIsPresent(SymbolId),
    Generated(SymbolId),
    Datum(SymbolId),
    DatumIsInternal(SymbolId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Clause {
    JustificationDecl(SymbolId),
    GeneratedFact(SymbolId),
    ReceivedFact { id: SymbolId, source: Option<NodeId> },
    PresenceBridge(BridgeSource),
    /// `datum(id) :- ...` with `justificationIsPresent`/`datum` atoms.
    DatumRule { id: SymbolId, body: Vec<BodyAtom> },
    /// `datumIsInternal(id) :- ...` with `generated`/`datumIsInternal` atoms.
    DatumInternalRule { id: SymbolId, body: Vec<BodyAtom> },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub clauses: Vec<Clause>,
}

impl Program {
    pub fn count(&self, pred: impl Fn(&Clause) -> bool) -> usize {
        self.clauses.iter().filter(|c| pred(c)).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}, column {col}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
        found: String,
    },
    #[error(
        "line {line}: rules for `{datum}` disagree on antecedents \
         (datum rule and datumIsInternal rule must reference the same set)"
    )]
    IncoherentRulePair { line: usize, datum: SymbolId },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Kb(#[from] KbError),
}

/// Text of a state report, e.g. `qos_pol:internal (adm_cmd:mod async_sig:mod)`.
pub fn render_report(report: &StateReport) -> String {
    use alloc::string::ToString;
    report.to_string()
}

/// Builds a knowledge base from a parsed program.
///
/// Declarations come first, then datum definitions in dependency order
/// (file order among independent data), then presence facts.
pub fn load(program: &Program) -> Result<KnowledgeBase, LoadError> {
    let mut kb = KnowledgeBase::new();
    for clause in &program.clauses {
        if let Clause::JustificationDecl(id) = clause {
            kb.declare_justification(id.clone())?;
        }
    }

    let rules: Vec<(&SymbolId, &[BodyAtom])> = program
        .clauses
        .iter()
        .filter_map(|c| match c {
            Clause::DatumRule { id, body } => Some((id, body.as_slice())),
            _ => None,
        })
        .collect();
    for def in dependency_order(&rules)? {
        kb.define_datum(def)?;
    }

    for clause in &program.clauses {
        match clause {
            Clause::GeneratedFact(id) => {
                kb.set_presence(id, Some(Provenance::generated(0)))?;
            }
            Clause::ReceivedFact { id, source } => {
                let from = source.unwrap_or(NodeId::UNSPECIFIED);
                kb.set_presence(id, Some(Provenance::received(from, 0)))?;
            }
            _ => {}
        }
    }
    Ok(kb)
}

/// Parses and loads in one step.
pub fn load_str(text: &str) -> Result<KnowledgeBase, DslError> {
    let program = parse_program(text)?;
    Ok(load(&program)?)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DslError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Load(#[from] LoadError),
}

fn definition(id: &SymbolId, body: &[BodyAtom]) -> DatumDefinition {
    let antecedents = body
        .iter()
        .map(|atom| match atom {
            BodyAtom::Datum(d) | BodyAtom::DatumIsInternal(d) => Antecedent::datum(d.clone()),
            BodyAtom::JustificationIsPresent(j) | BodyAtom::Generated(j) => {
                Antecedent::justification(j.clone())
            }
        })
        .collect();
    DatumDefinition::new(id.clone(), antecedents)
}

// Stable topological sort (Kahn, smallest file index first). References to
// data not defined in this program are left for `define_datum` to reject.
fn dependency_order(rules: &[(&SymbolId, &[BodyAtom])]) -> Result<Vec<DatumDefinition>, KbError> {
    let mut position = BTreeMap::new();
    for (i, (id, _)) in rules.iter().enumerate() {
        if position.insert(*id, i).is_some() {
            return Err(KbError::DuplicateSymbol((*id).clone()));
        }
    }
    let mut indegree = alloc::vec![0usize; rules.len()];
    let mut dependents = alloc::vec![Vec::new(); rules.len()];
    for (i, (_, body)) in rules.iter().enumerate() {
        for atom in body.iter() {
            if let BodyAtom::Datum(d) = atom {
                if let Some(&p) = position.get(d) {
                    indegree[i] += 1;
                    dependents[p].push(i);
                }
            }
        }
    }
    let mut ready: BTreeSet<usize> = (0..rules.len()).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(rules.len());
    while let Some(i) = ready.pop_first() {
        order.push(definition(rules[i].0, rules[i].1));
        for &dep in &dependents[i] {
            indegree[dep] -= 1;
            if indegree[dep] == 0 {
                ready.insert(dep);
            }
        }
    }
    if order.len() < rules.len() {
        let stuck = (0..rules.len()).find(|&i| indegree[i] > 0).unwrap_or(0);
        return Err(KbError::CyclicDefinition(rules[stuck].0.clone()));
    }
    Ok(order)
}
