use alloc::string::String;
use alloc::sync::Arc;
use core::fmt;

/// Name of a justification or datum.
///
/// Accepted shape is `[a-zA-Z][a-zA-Z0-9_]*`. The single letter `X` is
/// reserved for the presence bridge rules and is rejected.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolId(Arc<str>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid identifier `{0}`")]
pub struct InvalidSymbol(pub String);

impl SymbolId {
    pub fn new(name: &str) -> Result<Self, InvalidSymbol> {
        if is_valid_symbol(name) {
            Ok(Self(Arc::from(name)))
        } else {
            Err(InvalidSymbol(String::from(name)))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub(crate) fn is_valid_symbol(name: &str) -> bool {
    let mut chars = name.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    first.is_ascii_alphabetic()
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && name != "X"
}

impl fmt::Display for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl TryFrom<&str> for SymbolId {
    type Error = InvalidSymbol;

    fn try_from(value: &str) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

/// Identifier of a management node (a simulated peer).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(pub u32);

impl NodeId {
    /// Source recorded for received presences whose sender is not known,
    /// e.g. `received(x).` facts loaded from a file.
    pub const UNSPECIFIED: NodeId = NodeId(u32::MAX);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
