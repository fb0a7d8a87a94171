//! Per-node consistency maintenance: turns local presence changes into
//! belief-change messages, applies received changes, and decides whether to
//! pass them on.
//!
//! Two strategies are supported:
//!
//! - **Unbridled**: flood every newly seen change to all neighbours except
//!   the one it came from; duplicates are discarded.
//! - **Controlled**: hold a newly seen change for a backoff window of `T`
//!   cycles, counting the duplicate copies `ηb` that arrive meanwhile, then
//!   forward with probability `ρ / (1 + ηb)`.
//!
//! Every node is a deterministic state machine; all randomness is supplied
//! by the caller as uniform samples.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use crate::kb::{Cycle, KbError, KnowledgeBase, Provenance};
use crate::symbol::{NodeId, SymbolId};

/// Globally unique identity of one originated belief change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChangeId {
    pub origin: NodeId,
    pub seq: u64,
}

impl fmt::Display for ChangeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.origin, self.seq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Assert,
    Retract,
}

impl Action {
    pub fn keyword(self) -> &'static str {
        match self {
            Action::Assert => "assert",
            Action::Retract => "retract",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct GroupId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeliefChangeMessage {
    pub change_id: ChangeId,
    pub justification: SymbolId,
    pub action: Action,
    pub group: GroupId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    Unbridled,
    Controlled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    /// Proliferation constant, in (0, 1]. Ignored by unbridled replication.
    pub rho: f64,
    /// Backoff window in cycles. Ignored by unbridled replication.
    pub backoff: Cycle,
}

impl StrategyConfig {
    pub fn unbridled() -> Self {
        Self { kind: StrategyKind::Unbridled, rho: 1.0, backoff: 0 }
    }

    pub fn controlled(rho: f64, backoff: Cycle) -> Result<Self, ProtocolError> {
        rcf(rho, 0)?;
        Ok(Self { kind: StrategyKind::Controlled, rho, backoff })
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        rcf(self.rho, 0).map(|_| ())
    }

    // A zero-length window cannot collect duplicates, so the change goes out
    // straight away as in unbridled replication.
    fn holds_back(&self) -> bool {
        self.kind == StrategyKind::Controlled && self.backoff > 0
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error("justification `{0}` is not declared on this node")]
    UnknownSymbol(SymbolId),
    #[error("message for group {got:?} delivered to node of group {expected:?}")]
    WrongGroup { expected: GroupId, got: GroupId },
    #[error("no pending backoff for change {0}")]
    NoPendingEntry(ChangeId),
    #[error("backoff for change {change} is due at cycle {due}, not {now}")]
    BackoffNotDue { change: ChangeId, due: Cycle, now: Cycle },
}

/// Replication controlling function: forwarding probability `ρ / (1 + ηb)`.
pub fn rcf(rho: f64, eta_b: u32) -> Result<f64, ProtocolError> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(ProtocolError::InvalidParameter("rho must lie in (0, 1]"));
    }
    Ok(rho / (1.0 + f64::from(eta_b)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outbound {
    pub to: NodeId,
    pub message: BeliefChangeMessage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ForwardDecision {
    Forward(Vec<Outbound>),
    Scheduled { at: Cycle },
    Drop,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingChange {
    pub first_seen: Cycle,
    /// Copies received after the first one while the window is open (ηb).
    pub duplicates: u32,
    pub sender: NodeId,
    pub message: BeliefChangeMessage,
}

#[derive(Debug, Clone)]
pub struct NodeState {
    pub id: NodeId,
    pub group: GroupId,
    pub neighbors: Vec<NodeId>,
    pub kb: KnowledgeBase,
    pub seen: BTreeSet<ChangeId>,
    pub pending: BTreeMap<ChangeId, PendingChange>,
    pub seq: u64,
    pub strategy: StrategyConfig,
    /// Messages refused because the justification is unknown locally.
    pub rejected: u64,
}

impl NodeState {
    pub fn new(
        id: NodeId,
        group: GroupId,
        neighbors: Vec<NodeId>,
        kb: KnowledgeBase,
        strategy: StrategyConfig,
    ) -> Self {
        Self {
            id,
            group,
            neighbors,
            kb,
            seen: BTreeSet::new(),
            pending: BTreeMap::new(),
            seq: 0,
            strategy,
            rejected: 0,
        }
    }

    /// A management service on this node changed a justification. The change
    /// is applied with generated provenance and always sent to every
    /// neighbour.
    pub fn on_local_change(
        &mut self,
        justification: &SymbolId,
        action: Action,
        now: Cycle,
    ) -> Result<Vec<Outbound>, ProtocolError> {
        if !self.kb.is_justification(justification) {
            return Err(ProtocolError::UnknownSymbol(justification.clone()));
        }
        let presence = match action {
            Action::Assert => Some(Provenance::generated(now)),
            Action::Retract => None,
        };
        self.kb.set_presence(justification, presence)?;
        let change_id = ChangeId { origin: self.id, seq: self.seq };
        self.seq += 1;
        self.seen.insert(change_id);
        let message = BeliefChangeMessage {
            change_id,
            justification: justification.clone(),
            action,
            group: self.group,
        };
        Ok(self.fan_out(&message, None))
    }

    /// Handles one delivered copy of a belief change sent by neighbour `from`.
    pub fn on_receive(
        &mut self,
        from: NodeId,
        msg: &BeliefChangeMessage,
        now: Cycle,
    ) -> Result<ForwardDecision, ProtocolError> {
        if msg.group != self.group {
            return Err(ProtocolError::WrongGroup { expected: self.group, got: msg.group });
        }
        if self.seen.contains(&msg.change_id) {
            if let Some(entry) = self.pending.get_mut(&msg.change_id) {
                entry.duplicates += 1;
            }
            return Ok(ForwardDecision::Drop);
        }
        if !self.kb.is_justification(&msg.justification) {
            self.rejected += 1;
            return Err(ProtocolError::UnknownSymbol(msg.justification.clone()));
        }
        self.apply_received(msg, now)?;
        self.seen.insert(msg.change_id);

        if self.strategy.holds_back() {
            let at = now + self.strategy.backoff;
            self.pending.insert(
                msg.change_id,
                PendingChange { first_seen: now, duplicates: 0, sender: from, message: msg.clone() },
            );
            Ok(ForwardDecision::Scheduled { at })
        } else {
            Ok(ForwardDecision::Forward(self.fan_out(msg, Some(from))))
        }
    }

    /// Closes the backoff window of a change and forwards it iff
    /// `sample < ρ / (1 + ηb)`.
    pub fn on_backoff_expiry(
        &mut self,
        change: ChangeId,
        now: Cycle,
        sample: f64,
    ) -> Result<ForwardDecision, ProtocolError> {
        let entry = self.pending.get(&change).ok_or(ProtocolError::NoPendingEntry(change))?;
        let due = entry.first_seen + self.strategy.backoff;
        if due != now {
            return Err(ProtocolError::BackoffNotDue { change, due, now });
        }
        let entry = self.pending.remove(&change).expect("checked above");
        let p = rcf(self.strategy.rho, entry.duplicates)?;
        if sample < p {
            Ok(ForwardDecision::Forward(self.fan_out(&entry.message, Some(entry.sender))))
        } else {
            Ok(ForwardDecision::Drop)
        }
    }

    fn apply_received(&mut self, msg: &BeliefChangeMessage, now: Cycle) -> Result<(), KbError> {
        let current = self.kb.presence(&msg.justification)?;
        match msg.action {
            Action::Assert => {
                let p = Provenance::received(msg.change_id.origin, now);
                self.kb.set_presence(&msg.justification, Some(p))?;
            }
            // Hearsay never clears locally generated knowledge.
            Action::Retract if current.is_some_and(|p| !p.is_generated()) => {
                self.kb.set_presence(&msg.justification, None)?;
            }
            Action::Retract => {}
        }
        Ok(())
    }

    fn fan_out(&self, message: &BeliefChangeMessage, except: Option<NodeId>) -> Vec<Outbound> {
        self.neighbors
            .iter()
            .filter(|&&n| Some(n) != except)
            .map(|&to| Outbound { to, message: message.clone() })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Send,
    Recv,
    Drop,
    DeliverFail,
}

impl TraceKind {
    pub fn keyword(self) -> &'static str {
        match self {
            TraceKind::Send => "send",
            TraceKind::Recv => "recv",
            TraceKind::Drop => "drop",
            TraceKind::DeliverFail => "deliver_fail",
        }
    }
}

/// One line of the event trace. Displays as the tab-separated record
/// `cycle event change_id from to justification action`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub cycle: Cycle,
    pub kind: TraceKind,
    pub change_id: ChangeId,
    pub from: NodeId,
    pub to: NodeId,
    pub justification: SymbolId,
    pub action: Action,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.cycle,
            self.kind.keyword(),
            self.change_id,
            self.from,
            self.to,
            self.justification,
            self.action.keyword()
        )
    }
}
