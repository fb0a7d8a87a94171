//! The `check` verb: load a knowledge base, apply facts, report every datum.

use beliefnet_core::dsl::{self, DslError, LoadError, ParseError};
use beliefnet_core::{KbError, NodeId, Provenance, SymbolId};

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("fact `{name}`: {source}")]
    Fact { name: String, source: KbError },
    #[error("fact `{0}`: not a valid symbol")]
    BadSymbol(String),
}

impl CheckError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CheckError::Parse(_) => 1,
            CheckError::Load(_) | CheckError::Fact { .. } | CheckError::BadSymbol(_) => 2,
        }
    }
}

/// Report lines, one per datum in definition order.
pub fn check(text: &str, generated: &[String], received: &[String]) -> Result<Vec<String>, CheckError> {
    let mut kb = match dsl::load_str(text) {
        Ok(kb) => kb,
        Err(DslError::Parse(e)) => return Err(e.into()),
        Err(DslError::Load(e)) => return Err(e.into()),
    };
    let facts = generated
        .iter()
        .map(|g| (g, Provenance::generated(0)))
        .chain(received.iter().map(|r| (r, Provenance::received(NodeId::UNSPECIFIED, 0))));
    for (name, presence) in facts {
        let id = SymbolId::new(name).map_err(|_| CheckError::BadSymbol(name.clone()))?;
        kb.set_presence(&id, Some(presence))
            .map_err(|source| CheckError::Fact { name: name.clone(), source })?;
    }
    let ids: Vec<SymbolId> = kb.definitions().map(|d| d.id.clone()).collect();
    Ok(ids
        .iter()
        .map(|id| dsl::render_report(&kb.query(id).expect("defined datum")))
        .collect())
}
