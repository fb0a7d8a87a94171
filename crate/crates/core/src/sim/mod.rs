//! Cycle-based simulation of one node group spreading a single belief change.
//!
//! Each cycle runs four phases in a fixed order:
//!
//! 1. deliver the transmissions due this cycle, each lost independently with
//!    `loss_prob` (transmissions to crashed nodes are always lost);
//! 2. let receivers process the delivered copies, in delivery order;
//! 3. close the backoff windows that expire this cycle;
//! 4. enqueue the resulting sends, due `delay` cycles later.
//!
//! The run stops at quiescence: nothing in flight and no open backoff window.

mod overlay;
pub mod seed;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::kb::{Cycle, KnowledgeBase, Provenance};
use crate::protocol::{
    Action, BeliefChangeMessage, ChangeId, ForwardDecision, GroupId, NodeState, Outbound,
    ProtocolError, StrategyConfig, StrategyKind, TraceEvent, TraceKind,
};
use crate::symbol::{NodeId, SymbolId};

pub use overlay::{build_overlay, Overlay, Topology};
use seed::{derive, keyed, stream, unit};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("overlay still disconnected after {retries} attempts")]
    DisconnectedAfterRetries { retries: u64 },
    #[error("every node crashed in run {run}")]
    NoLiveNodes { run: usize },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

impl From<&'static str> for SimError {
    fn from(msg: &'static str) -> Self {
        SimError::InvalidConfig(String::from(msg))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub group_size: usize,
    pub topology: Topology,
    pub strategy: StrategyConfig,
    pub loss_prob: f64,
    /// Per-hop delay in cycles (minimum when `delay_max` is set).
    pub delay: Cycle,
    /// When set, each hop takes a uniform integer delay in `delay..=delay_max`.
    pub delay_max: Option<Cycle>,
    pub crash_prob: f64,
    pub runs: usize,
    pub seed: u64,
    /// Knowledge base every node starts from.
    pub kb: KnowledgeBase,
    pub target_datum: SymbolId,
    pub changed_justification: SymbolId,
}

impl ExperimentConfig {
    pub fn new(kb: KnowledgeBase, target_datum: SymbolId, changed_justification: SymbolId) -> Self {
        Self {
            group_size: 10,
            topology: Topology::RandomRegular { degree: 4 },
            strategy: StrategyConfig::unbridled(),
            loss_prob: 0.0,
            delay: 1,
            delay_max: None,
            crash_prob: 0.0,
            runs: 10,
            seed: 42,
            kb,
            target_datum,
            changed_justification,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.group_size < 2 {
            return Err("group_size must be at least 2".into());
        }
        if !(0.0..=1.0).contains(&self.loss_prob) {
            return Err("loss_prob must lie in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.crash_prob) {
            return Err("crash_prob must lie in [0, 1]".into());
        }
        if self.delay < 1 {
            return Err("delay must be at least 1 cycle".into());
        }
        if self.delay_max.is_some_and(|max| max < self.delay) {
            return Err("delay_max must not be below delay".into());
        }
        if self.runs == 0 {
            return Err("runs must be at least 1".into());
        }
        self.strategy.validate()?;
        if !self.kb.is_datum(&self.target_datum) {
            return Err(SimError::InvalidConfig(alloc::format!(
                "target_datum `{}` is not a datum of the fixture",
                self.target_datum
            )));
        }
        if !self.kb.is_justification(&self.changed_justification) {
            return Err(SimError::InvalidConfig(alloc::format!(
                "changed_justification `{}` is not a justification of the fixture",
                self.changed_justification
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub run: usize,
    pub origin: NodeId,
    pub live_nodes: usize,
    pub messages_sent: u64,
    pub messages_delivered: u64,
    pub messages_lost: u64,
    pub coherent_fraction: f64,
    pub cycles_to_quiescence: Cycle,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentMetrics {
    pub runs: Vec<RunMetrics>,
}

impl ExperimentMetrics {
    pub fn mean(&self, field: impl Fn(&RunMetrics) -> f64) -> f64 {
        if self.runs.is_empty() {
            return f64::NAN;
        }
        self.runs.iter().map(field).sum::<f64>() / self.runs.len() as f64
    }

    pub fn mean_messages_sent(&self) -> f64 {
        self.mean(|r| r.messages_sent as f64)
    }

    pub fn mean_coherent_fraction(&self) -> f64 {
        self.mean(|r| r.coherent_fraction)
    }
}

/// Receives trace events from a run.
pub trait TraceSink {
    fn record(&mut self, event: TraceEvent);

    fn enabled(&self) -> bool {
        true
    }
}

impl TraceSink for () {
    fn record(&mut self, _event: TraceEvent) {}

    fn enabled(&self) -> bool {
        false
    }
}

impl TraceSink for Vec<TraceEvent> {
    fn record(&mut self, event: TraceEvent) {
        self.push(event);
    }
}

struct Transmission {
    from: NodeId,
    to: NodeId,
    message: BeliefChangeMessage,
}

struct Run<'a, S: TraceSink> {
    cfg: &'a ExperimentConfig,
    seed: u64,
    nodes: Vec<NodeState>,
    crashed: Vec<bool>,
    in_flight: BTreeMap<Cycle, Vec<Transmission>>,
    timers: BTreeMap<Cycle, Vec<(NodeId, ChangeId)>>,
    sent: u64,
    delivered: u64,
    lost: u64,
    sink: &'a mut S,
}

impl<S: TraceSink> Run<'_, S> {
    fn trace(&mut self, cycle: Cycle, kind: TraceKind, from: NodeId, to: NodeId, msg: &BeliefChangeMessage) {
        if self.sink.enabled() {
            self.sink.record(TraceEvent {
                cycle,
                kind,
                change_id: msg.change_id,
                from,
                to,
                justification: msg.justification.clone(),
                action: msg.action,
            });
        }
    }

    fn send(&mut self, now: Cycle, from: NodeId, outbound: Vec<Outbound>) {
        for Outbound { to, message } in outbound {
            let delay = match self.cfg.delay_max {
                Some(max) if max > self.cfg.delay => {
                    let span = max - self.cfg.delay + 1;
                    let bits = self.event_key(stream::DELAY, from, to, message.change_id);
                    self.cfg.delay + bits % span
                }
                _ => self.cfg.delay,
            };
            self.sent += 1;
            self.trace(now, TraceKind::Send, from, to, &message);
            self.in_flight.entry(now + delay).or_default().push(Transmission { from, to, message });
        }
    }

    fn event_key(&self, stream: u64, from: NodeId, to: NodeId, change: ChangeId) -> u64 {
        keyed(self.seed, &[stream, from.0.into(), to.0.into(), change.origin.0.into(), change.seq])
    }

    fn is_lost(&self, t: &Transmission) -> bool {
        if self.crashed[t.to.index()] {
            return true;
        }
        self.cfg.loss_prob > 0.0
            && unit(self.event_key(stream::LOSS, t.from, t.to, t.message.change_id)) < self.cfg.loss_prob
    }

    fn step(&mut self, now: Cycle) -> Result<(), SimError> {
        let arriving = self.in_flight.remove(&now).unwrap_or_default();
        let mut received = Vec::with_capacity(arriving.len());
        for t in arriving {
            if self.is_lost(&t) {
                self.lost += 1;
                self.trace(now, TraceKind::DeliverFail, t.from, t.to, &t.message);
            } else {
                self.delivered += 1;
                received.push(t);
            }
        }

        let mut outbox = Vec::new();
        for t in received {
            let node = &mut self.nodes[t.to.index()];
            let kind = match node.on_receive(t.from, &t.message, now) {
                Ok(ForwardDecision::Forward(out)) => {
                    outbox.push((t.to, out));
                    TraceKind::Recv
                }
                Ok(ForwardDecision::Scheduled { at }) => {
                    self.timers.entry(at).or_default().push((t.to, t.message.change_id));
                    TraceKind::Recv
                }
                Ok(ForwardDecision::Drop) | Err(ProtocolError::UnknownSymbol(_)) => TraceKind::Drop,
                Err(e) => return Err(e.into()),
            };
            self.trace(now, kind, t.from, t.to, &t.message);
        }

        for (node, change) in self.timers.remove(&now).unwrap_or_default() {
            let sample = unit(self.event_key(stream::FORWARD, node, node, change));
            match self.nodes[node.index()].on_backoff_expiry(change, now, sample)? {
                ForwardDecision::Forward(out) => outbox.push((node, out)),
                ForwardDecision::Drop | ForwardDecision::Scheduled { .. } => {}
            }
        }

        for (from, out) in outbox {
            self.send(now, from, out);
        }
        Ok(())
    }
}

/// Runs repetition `run` of an experiment.
pub fn run_once<S: TraceSink>(
    cfg: &ExperimentConfig,
    run: usize,
    sink: &mut S,
) -> Result<RunMetrics, SimError> {
    cfg.validate()?;
    let n = cfg.group_size;
    let run_seed = derive(cfg.seed, run as u64);
    let overlay = build_overlay(n, cfg.topology, derive(run_seed, stream::TOPOLOGY))?;

    let crashed: Vec<bool> = (0..n as u64)
        .map(|i| cfg.crash_prob > 0.0 && unit(keyed(run_seed, &[stream::CRASH, i])) < cfg.crash_prob)
        .collect();
    let live: Vec<usize> = (0..n).filter(|&i| !crashed[i]).collect();
    if live.is_empty() {
        return Err(SimError::NoLiveNodes { run });
    }
    // The live node with the smallest keyed draw: uniform among live nodes,
    // and stable when nodes are added, so sweeps over group size compare
    // runs with the same origin.
    let origin = live
        .iter()
        .map(|&i| (keyed(run_seed, &[stream::ORIGIN, i as u64]), i))
        .min()
        .map(|(_, i)| NodeId(i as u32))
        .expect("live is non-empty");

    // Everything except the changed justification is already believed locally.
    let mut template = cfg.kb.clone();
    let others: Vec<SymbolId> = template
        .justifications()
        .map(|(id, _)| id.clone())
        .filter(|id| *id != cfg.changed_justification)
        .collect();
    for id in &others {
        template.set_presence(id, Some(Provenance::generated(0))).map_err(ProtocolError::from)?;
    }
    let nodes: Vec<NodeState> = (0..n)
        .map(|i| {
            let id = NodeId(i as u32);
            let neighbors = overlay.neighbors(id).to_vec();
            NodeState::new(id, GroupId(0), neighbors, template.clone(), cfg.strategy)
        })
        .collect();
    drop(overlay);

    let mut state = Run {
        cfg,
        seed: run_seed,
        nodes,
        crashed,
        in_flight: BTreeMap::new(),
        timers: BTreeMap::new(),
        sent: 0,
        delivered: 0,
        lost: 0,
        sink,
    };
    let first = state.nodes[origin.index()].on_local_change(&cfg.changed_justification, Action::Assert, 0)?;
    state.send(0, origin, first);

    let mut now: Cycle = 0;
    while !(state.in_flight.is_empty() && state.timers.is_empty()) {
        now += 1;
        state.step(now)?;
    }

    let believed = |node: &NodeState| {
        node.kb.label(&cfg.target_datum).map(|l| l.is_in()).map_err(ProtocolError::from)
    };
    let reference = believed(&state.nodes[origin.index()])?;
    let mut coherent = 0usize;
    for &i in &live {
        if believed(&state.nodes[i])? == reference {
            coherent += 1;
        }
    }
    debug_assert_eq!(state.sent, state.delivered + state.lost);
    Ok(RunMetrics {
        run,
        origin,
        live_nodes: live.len(),
        messages_sent: state.sent,
        messages_delivered: state.delivered,
        messages_lost: state.lost,
        coherent_fraction: coherent as f64 / live.len() as f64,
        cycles_to_quiescence: now + 1,
    })
}

/// Runs all `cfg.runs` repetitions sequentially.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentMetrics, SimError> {
    let runs = (0..cfg.runs).map(|r| run_once(cfg, r, &mut ())).collect::<Result<_, _>>()?;
    Ok(ExperimentMetrics { runs })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    GroupSize(Vec<usize>),
    LossProb(Vec<f64>),
    Rho(Vec<f64>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::GroupSize(_) => "group_size",
            SweepAxis::LossProb(_) => "loss_prob",
            SweepAxis::Rho(_) => "rho",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepAxis::GroupSize(v) => v.len(),
            SweepAxis::LossProb(v) | SweepAxis::Rho(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, i: usize) -> f64 {
        match self {
            SweepAxis::GroupSize(v) => v[i] as f64,
            SweepAxis::LossProb(v) | SweepAxis::Rho(v) => v[i],
        }
    }

    /// The template with the `i`-th axis value applied.
    pub fn configure(&self, template: &ExperimentConfig, i: usize) -> Result<ExperimentConfig, SimError> {
        let mut cfg = template.clone();
        match self {
            SweepAxis::GroupSize(v) => cfg.group_size = v[i],
            SweepAxis::LossProb(v) => cfg.loss_prob = v[i],
            SweepAxis::Rho(v) => {
                if cfg.strategy.kind != StrategyKind::Controlled {
                    return Err("a rho sweep needs the controlled strategy".into());
                }
                cfg.strategy.rho = v[i];
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub metrics: ExperimentMetrics,
}

/// One row per axis value, in the order given.
pub fn sweep(template: &ExperimentConfig, axis: &SweepAxis) -> Result<Vec<SweepRow>, SimError> {
    if axis.is_empty() {
        return Err("sweep axis has no values".into());
    }
    (0..axis.len())
        .map(|i| {
            let cfg = axis.configure(template, i)?;
            Ok(SweepRow { axis_value: axis.value(i), metrics: run_experiment(&cfg)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl;
    use crate::fixtures;

    fn sym(s: &str) -> SymbolId {
        SymbolId::new(s).unwrap()
    }

    fn link_fault(n: usize, topology: Topology) -> ExperimentConfig {
        let kb = dsl::load_str(fixtures::LINK_FAULT).unwrap();
        let mut cfg = ExperimentConfig::new(kb, sym("link_flt_det"), sym("dev_not_rcv"));
        cfg.group_size = n;
        cfg.topology = topology;
        cfg
    }

    #[test]
    fn two_nodes_single_edge() {
        let cfg = link_fault(2, Topology::Complete);
        let m = run_once(&cfg, 0, &mut ()).unwrap();
        assert_eq!(m.messages_sent, 1);
        assert_eq!(m.messages_delivered, 1);
        assert_eq!(m.coherent_fraction, 1.0);
        assert_eq!(m.cycles_to_quiescence, 2);
    }

    #[test]
    fn total_loss_leaves_only_origin_coherent() {
        let mut cfg = link_fault(8, Topology::RandomRegular { degree: 4 });
        cfg.loss_prob = 1.0;
        for run in 0..5 {
            let m = run_once(&cfg, run, &mut ()).unwrap();
            assert_eq!(m.messages_delivered, 0);
            assert_eq!(m.messages_sent, 4);
            assert_eq!(m.coherent_fraction, 1.0 / 8.0);
        }
    }

    #[test]
    fn controlled_without_backoff_reaches_everyone() {
        let mut cfg = link_fault(14, Topology::RandomRegular { degree: 4 });
        cfg.strategy = StrategyConfig::controlled(0.2, 0).unwrap();
        for run in 0..20 {
            let m = run_once(&cfg, run, &mut ()).unwrap();
            assert_eq!(m.coherent_fraction, 1.0, "run {run}");
        }
    }

    #[test]
    fn controlled_never_exceeds_one_forward_per_node() {
        let mut cfg = link_fault(60, Topology::RandomRegular { degree: 4 });
        cfg.strategy = StrategyConfig::controlled(1.0, 3).unwrap();
        for run in 0..10 {
            let mut trace = Vec::new();
            let m = run_once(&cfg, run, &mut trace).unwrap();
            // Origin sends to its 4 neighbours, every other forwarder to 3.
            let senders: alloc::collections::BTreeSet<_> =
                trace.iter().filter(|e| e.kind == TraceKind::Send).map(|e| e.from).collect();
            assert_eq!(m.messages_sent, 4 + 3 * (senders.len() as u64 - 1), "run {run}");
        }
    }

    #[test]
    fn crashed_nodes_leave_denominator() {
        let mut cfg = link_fault(20, Topology::RandomRegular { degree: 4 });
        cfg.crash_prob = 0.3;
        for run in 0..10 {
            let m = run_once(&cfg, run, &mut ()).unwrap();
            assert!(m.live_nodes < 20 || run > 0);
            assert_eq!(m.messages_sent, m.messages_delivered + m.messages_lost);
            assert!((0.0..=1.0).contains(&m.coherent_fraction));
        }
        cfg.crash_prob = 1.0;
        assert_eq!(run_once(&cfg, 0, &mut ()), Err(SimError::NoLiveNodes { run: 0 }));
    }

    #[test]
    fn jittered_delay_is_deterministic() {
        let mut cfg = link_fault(30, Topology::RandomRegular { degree: 4 });
        cfg.delay_max = Some(4);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        let ma = run_once(&cfg, 3, &mut a).unwrap();
        let mb = run_once(&cfg, 3, &mut b).unwrap();
        assert_eq!(ma, mb);
        assert_eq!(a, b);
        assert_eq!(ma.coherent_fraction, 1.0);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = link_fault(10, Topology::Complete);
        cfg.loss_prob = 1.5;
        assert!(matches!(run_once(&cfg, 0, &mut ()), Err(SimError::InvalidConfig(_))));
        let mut cfg = link_fault(10, Topology::Complete);
        cfg.target_datum = sym("dev_not_rcv");
        assert!(matches!(run_once(&cfg, 0, &mut ()), Err(SimError::InvalidConfig(_))));
        let mut cfg = link_fault(10, Topology::Complete);
        cfg.changed_justification = sym("link_flt_det");
        assert!(matches!(run_once(&cfg, 0, &mut ()), Err(SimError::InvalidConfig(_))));
        let cfg = link_fault(10, Topology::Complete);
        assert!(sweep(&cfg, &SweepAxis::Rho(alloc::vec![0.5])).is_err());
        assert!(sweep(&cfg, &SweepAxis::GroupSize(alloc::vec![])).is_err());
    }
}
