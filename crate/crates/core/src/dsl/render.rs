use alloc::string::String;
use core::fmt::Write;

use crate::kb::{AntecedentKind, KnowledgeBase, Origin};
use crate::symbol::NodeId;

/// Pretty-prints a knowledge base back into `.jkb` text.
///
/// Loading the output reproduces the same definitions, labels and presences,
/// except that presence timestamps are not part of the format and load as 0.
pub fn render_program(kb: &KnowledgeBase) -> String {
    let mut out = String::new();
    for (id, _) in kb.justifications() {
        let _ = writeln!(out, "justification({id}).");
    }
    out.push_str("justificationIsPresent(X) :- generated(X).\n");
    out.push_str("justificationIsPresent(X) :- received(X).\n");
    for def in kb.definitions() {
        let _ = writeln!(out, "datum({}) :-", def.id);
        for (i, ant) in def.antecedents.iter().enumerate() {
            let sep = if i + 1 == def.antecedents.len() { "." } else { "," };
            let pred = match ant.kind {
                AntecedentKind::Justification => "justificationIsPresent",
                AntecedentKind::Datum => "datum",
            };
            let _ = writeln!(out, " {pred}({}){sep}", ant.target);
        }
        let _ = writeln!(out, "datumIsInternal({}) :-", def.id);
        for (i, ant) in def.antecedents.iter().enumerate() {
            let sep = if i + 1 == def.antecedents.len() { "." } else { "," };
            let pred = match ant.kind {
                AntecedentKind::Justification => "generated",
                AntecedentKind::Datum => "datumIsInternal",
            };
            let _ = writeln!(out, " {pred}({}){sep}", ant.target);
        }
    }
    for (id, presence) in kb.justifications() {
        match presence.map(|p| p.origin) {
            None => {}
            Some(Origin::Generated) => {
                let _ = writeln!(out, "generated({id}).");
            }
            Some(Origin::Received(NodeId::UNSPECIFIED)) => {
                let _ = writeln!(out, "received({id}).");
            }
            Some(Origin::Received(node)) => {
                let _ = writeln!(out, "received({id}, {node}).");
            }
        }
    }
    out
}
