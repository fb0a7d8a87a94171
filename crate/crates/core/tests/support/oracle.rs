//! Brute-force reference labeller and random knowledge-base shapes.
//!
//! The reference recomputes every label from scratch from a truth table over
//! the antecedents, sharing no code with the incremental labeller.

#![allow(dead_code)]

use beliefnet_core::{
    Antecedent, DatumDefinition, KnowledgeBase, Label, NodeId, Provenance, SymbolId,
};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ref {
    Just(usize),
    Datum(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Presence {
    Absent,
    Generated,
    Received,
}

pub const PRESENCES: [Presence; 3] = [Presence::Absent, Presence::Generated, Presence::Received];

impl Presence {
    pub fn provenance(self) -> Option<Provenance> {
        match self {
            Presence::Absent => None,
            Presence::Generated => Some(Provenance::generated(0)),
            Presence::Received => Some(Provenance::received(NodeId(1), 0)),
        }
    }
}

/// A datum may only reference data defined before it.
#[derive(Debug, Clone)]
pub struct KbShape {
    pub justifications: usize,
    pub data: Vec<Vec<Ref>>,
}

pub fn jname(i: usize) -> SymbolId {
    SymbolId::new(&format!("j{i}")).unwrap()
}

pub fn dname(i: usize) -> SymbolId {
    SymbolId::new(&format!("d{i}")).unwrap()
}

impl KbShape {
    pub fn random(rng: &mut impl Rng, max_just: usize, max_data: usize, max_depth: usize) -> Self {
        let justifications = rng.random_range(1..=max_just);
        let n_data = rng.random_range(1..=max_data);
        let mut data: Vec<Vec<Ref>> = Vec::with_capacity(n_data);
        let mut depth: Vec<usize> = Vec::with_capacity(n_data);
        for _ in 0..n_data {
            let usable: Vec<usize> = (0..data.len()).filter(|&d| depth[d] < max_depth).collect();
            let wanted = rng.random_range(1..=4);
            let mut ants = Vec::new();
            for _ in 0..wanted {
                let r = if !usable.is_empty() && rng.random_bool(0.35) {
                    Ref::Datum(usable[rng.random_range(0..usable.len())])
                } else {
                    Ref::Just(rng.random_range(0..justifications))
                };
                if !ants.contains(&r) {
                    ants.push(r);
                }
            }
            let d = 1 + ants
                .iter()
                .filter_map(|r| match r {
                    Ref::Datum(k) => Some(depth[*k]),
                    Ref::Just(_) => None,
                })
                .max()
                .unwrap_or(0);
            depth.push(d);
            data.push(ants);
        }
        Self { justifications, data }
    }

    pub fn depth(&self) -> usize {
        let mut depth = Vec::with_capacity(self.data.len());
        for ants in &self.data {
            let d = 1 + ants
                .iter()
                .filter_map(|r| match r {
                    Ref::Datum(k) => Some(depth[*k]),
                    Ref::Just(_) => None,
                })
                .max()
                .unwrap_or(0);
            depth.push(d);
        }
        depth.into_iter().max().unwrap_or(0)
    }

    pub fn build(&self) -> KnowledgeBase {
        let mut kb = KnowledgeBase::new();
        for j in 0..self.justifications {
            kb.declare_justification(jname(j)).unwrap();
        }
        for (i, ants) in self.data.iter().enumerate() {
            let antecedents = ants
                .iter()
                .map(|r| match *r {
                    Ref::Just(j) => Antecedent::justification(jname(j)),
                    Ref::Datum(d) => Antecedent::datum(dname(d)),
                })
                .collect();
            kb.define_datum(DatumDefinition::new(dname(i), antecedents)).unwrap();
        }
        kb
    }
}

/// Labels of every datum, in definition order.
pub fn oracle(shape: &KbShape, presences: &[Presence]) -> Vec<Label> {
    let mut labels: Vec<Label> = Vec::with_capacity(shape.data.len());
    for ants in &shape.data {
        let present = ants.iter().all(|r| match *r {
            Ref::Just(j) => presences[j] != Presence::Absent,
            Ref::Datum(d) => labels[d] != Label::Out,
        });
        let local = ants.iter().all(|r| match *r {
            Ref::Just(j) => presences[j] == Presence::Generated,
            Ref::Datum(d) => labels[d] == Label::InInternal,
        });
        labels.push(match (present, local) {
            (false, _) => Label::Out,
            (true, true) => Label::InInternal,
            (true, false) => Label::InExternal,
        });
    }
    labels
}

/// Moves justification `j` of `kb` to `to`. A received presence cannot
/// overwrite a generated one, so that transition retracts first.
pub fn apply(kb: &mut KnowledgeBase, j: usize, from: Presence, to: Presence) {
    let id = jname(j);
    if from == Presence::Generated && to == Presence::Received {
        kb.set_presence(&id, None).unwrap();
    }
    kb.set_presence(&id, to.provenance()).unwrap();
}

pub fn kb_labels(kb: &KnowledgeBase) -> Vec<Label> {
    kb.labels().map(|(_, l)| l).collect()
}

/// Reflected ternary Gray code over `n` justifications: consecutive
/// assignments differ in exactly one justification.
pub struct GrayWalk {
    digits: Vec<u8>,
    dir: Vec<i8>,
}

impl GrayWalk {
    pub fn new(n: usize) -> Self {
        Self { digits: vec![0; n], dir: vec![1; n] }
    }

    pub fn assignment(&self) -> Vec<Presence> {
        self.digits.iter().map(|&d| PRESENCES[d as usize]).collect()
    }

    /// Advances to the next assignment, returning `(index, old, new)` of the
    /// changed justification, or `None` once every assignment was visited.
    pub fn advance(&mut self) -> Option<(usize, Presence, Presence)> {
        for j in 0..self.digits.len() {
            let next = self.digits[j] as i8 + self.dir[j];
            if (0..3).contains(&next) {
                let old = PRESENCES[self.digits[j] as usize];
                self.digits[j] = next as u8;
                return Some((j, old, PRESENCES[next as usize]));
            }
            self.dir[j] = -self.dir[j];
        }
        None
    }
}

/// Walks every assignment of `shape`, checking the incremental labeller and
/// its reported changes against the reference. Returns the number of
/// assignments checked, or a description of the first mismatch.
pub fn check_exhaustively(shape: &KbShape) -> Result<u64, String> {
    let mut kb = shape.build();
    let mut walk = GrayWalk::new(shape.justifications);
    let mut cases = 0u64;
    loop {
        let assignment = walk.assignment();
        let expected = oracle(shape, &assignment);
        let got = kb_labels(&kb);
        if got != expected {
            return Err(format!("{shape:?} under {assignment:?}: got {got:?}, expected {expected:?}"));
        }
        cases += 1;
        let Some((j, from, to)) = walk.advance() else { break };
        let before = kb_labels(&kb);
        let mut changes = Vec::new();
        if from == Presence::Generated && to == Presence::Received {
            changes.extend(kb.set_presence(&jname(j), None).unwrap());
        }
        changes.extend(kb.set_presence(&jname(j), to.provenance()).unwrap());
        // Replaying the reported changes over the old labels must give the new ones.
        let mut replayed = before;
        for c in changes {
            let idx: usize = c.datum.as_str()[1..].parse().unwrap();
            if replayed[idx] != c.old {
                return Err(format!("stale change {c:?} in {shape:?}"));
            }
            replayed[idx] = c.new;
        }
        if replayed != kb_labels(&kb) {
            return Err(format!("change list incomplete in {shape:?}"));
        }
    }
    Ok(cases)
}
