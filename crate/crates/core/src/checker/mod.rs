//! Explicit-state analysis: reachable-set construction, invariants, Hoare
//! cases, unwinding conditions and the bounded properties.

mod bounded;
mod counterexample;
mod hoare;
mod unwinding;

use std::fmt;

use indexmap::IndexSet;
use thiserror::Error;

use crate::config::DomainId;
use crate::kernel::{Event, PortBuffer, State};
use crate::model::Model;

pub use bounded::{verify_properties, verify_property, BoundedLimits, DEFAULT_MAX_SEQUENCES};
pub use counterexample::Counterexample;
pub use hoare::{hoare_cases, run_hoare_suite, HoareCase, HoareResult};
pub use unwinding::{verify_unwinding, KindVerdict, UnwindingReport};

pub const DEFAULT_BUDGET: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("state budget of {budget} exceeded ({explored} states found, {frontier} still queued)")]
    StateBudget {
        budget: usize,
        explored: usize,
        frontier: usize,
    },
    #[error("bound {bound} needs {needed} event sequences, over the limit of {limit}")]
    SequenceBudget {
        bound: usize,
        needed: u128,
        limit: usize,
    },
}

const NO_PARENT: u32 = u32::MAX;

/// Every state reachable from boot, with the full transition table.
#[derive(Debug, Clone)]
pub struct ReachableSet {
    /// In breadth-first discovery order; index 0 is the boot state.
    pub states: IndexSet<State>,
    /// `edges[i * alpha + k]` is the successor of state `i` under alphabet
    /// event `k`.
    pub edges: Vec<u32>,
    pub alpha: usize,
    parent: Vec<(u32, u32)>,
}

impl ReachableSet {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &State {
        &self.states[i]
    }

    pub fn succ(&self, i: usize, k: usize) -> usize {
        self.edges[i * self.alpha + k] as usize
    }

    /// Follows alphabet indices from state `i`.
    pub fn run_from(&self, mut i: usize, seq: &[u16]) -> usize {
        for &k in seq {
            i = self.succ(i, k as usize);
        }
        i
    }

    pub fn index_of(&self, s: &State) -> Option<usize> {
        self.states.get_index_of(s)
    }

    /// A shortest event sequence from boot to state `i`.
    pub fn prefix(&self, m: &Model, mut i: usize) -> Vec<Event> {
        let mut out = Vec::new();
        while self.parent[i].0 != NO_PARENT {
            let (p, k) = self.parent[i];
            out.push(m.alphabet[k as usize]);
            i = p as usize;
        }
        out.reverse();
        out
    }

    /// Number of scheduler-equivalent ordered state pairs: the pairs any
    /// two-state condition has to consider.
    pub fn pairs(&self) -> u64 {
        let mut counts = std::collections::BTreeMap::<DomainId, u64>::new();
        for s in &self.states {
            *counts.entry(s.current).or_default() += 1;
        }
        counts.values().map(|n| n * n).sum()
    }
}

/// Breadth-first closure of the boot state under the model's alphabet.
pub fn explore(m: &Model, budget: usize) -> Result<ReachableSet, CheckError> {
    let alpha = m.alphabet.len();
    let mut states = IndexSet::new();
    states.insert(m.init());
    let mut parent = vec![(NO_PARENT, 0)];
    let mut edges = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let s = states[i].clone();
        for (k, e) in m.alphabet.iter().enumerate() {
            let (j, fresh) = states.insert_full(m.exec(&s, e));
            if fresh {
                if states.len() > budget {
                    return Err(CheckError::StateBudget {
                        budget,
                        explored: states.len() - 1,
                        frontier: states.len() - 1 - i,
                    });
                }
                parent.push((i as u32, k as u32));
            }
            edges.push(j as u32);
        }
        i += 1;
    }
    Ok(ReachableSet {
        states,
        edges,
        alpha,
        parent,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Invariant {
    PortConsistent,
    CapacityBound,
    LocalsComplete,
    CurrentValid,
}

impl Invariant {
    pub fn name(self) -> &'static str {
        match self {
            Invariant::PortConsistent => "port_consistent",
            Invariant::CapacityBound => "capacity_bound",
            Invariant::LocalsComplete => "locals_complete",
            Invariant::CurrentValid => "current_valid",
        }
    }
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The invariants `s` breaks.
pub fn invariant_violations(m: &Model, s: &State) -> Vec<Invariant> {
    let cfg = &m.cfg;
    let mut out = Vec::new();
    let names_match = s.comm.ports.iter().all(|(id, p)| {
        s.comm.ids_by_name.get(&p.port) == Some(id)
            && s.comm.port_owner.get(id) == Some(&cfg.port(p.port).owner)
    });
    if !s.comm.port_consistent() || !names_match {
        out.push(Invariant::PortConsistent);
    }
    let within = s.comm.ports.values().all(|p| match &p.buffer {
        PortBuffer::Queuing(q) => q.len() <= cfg.capacity(p.port),
        PortBuffer::Sampling(_) => true,
    });
    if !within {
        out.push(Invariant::CapacityBound);
    }
    if !s.locals.keys().copied().eq(m.domains.iter().copied()) {
        out.push(Invariant::LocalsComplete);
    }
    let current_ok = match s.current {
        DomainId::Transmitter => true,
        DomainId::Partition(p) => cfg.is_partition(p),
        DomainId::Scheduler => false,
    };
    if !current_ok {
        out.push(Invariant::CurrentValid);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantFailure {
    pub state: usize,
    pub prefix: Vec<Event>,
    pub violated: Vec<Invariant>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantReport {
    pub holds: bool,
    pub states_checked: usize,
    pub failure: Option<InvariantFailure>,
}

/// Index and broken invariants of the first offending state.
pub fn first_invariant_failure<'a>(
    m: &Model,
    states: impl IntoIterator<Item = &'a State>,
) -> Option<(usize, Vec<Invariant>)> {
    states.into_iter().enumerate().find_map(|(i, s)| {
        let v = invariant_violations(m, s);
        (!v.is_empty()).then_some((i, v))
    })
}

pub fn check_invariants(m: &Model, rs: &ReachableSet) -> InvariantReport {
    let failure = first_invariant_failure(m, &rs.states).map(|(i, violated)| InvariantFailure {
        state: i,
        prefix: rs.prefix(m, i),
        violated,
    });
    InvariantReport {
        holds: failure.is_none(),
        states_checked: rs.len(),
        failure,
    }
}

/// Verdict-vector check: for each recorded implication whose premises all
/// hold, the conclusion must hold too.
pub fn implication_audit(
    verdicts: &[crate::security::Verdict],
) -> Vec<crate::security::Implication> {
    crate::security::implication_violations(&|p| {
        verdicts.iter().find(|v| v.property == p).map(|v| v.holds)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, PortIdStrategy};
    use crate::equivalence::TransmitterView;
    use crate::kernel::SemanticsVariant;

    fn cfg1(strategy: PortIdStrategy, v: SemanticsVariant) -> Model {
        let cfg = parse_config(
            "partition 1 P1\npartition 2 P2\nqueuingchannel C source=P1.qs dest=P2.qd capacity=1\n",
        )
        .unwrap()
        .with_portid_strategy(strategy);
        Model::new(cfg, v, TransmitterView::SourceOnly)
    }

    #[test]
    fn schedules_only_gives_one_state_per_runnable_domain() {
        let m = cfg1(PortIdStrategy::StaticFromConfig, SemanticsVariant::FIXED);
        let alphabet: Vec<Event> = m
            .alphabet
            .iter()
            .copied()
            .filter(|e| matches!(e, Event::Schedule(_)))
            .collect();
        let m = Model::with_alphabet(m.cfg, m.variant, m.tview, alphabet);
        let rs = explore(&m, 100).unwrap();
        assert_eq!(rs.len(), 3);
        assert_eq!(rs.pairs(), 3);
    }

    #[test]
    fn closed_under_the_alphabet() {
        let m = cfg1(PortIdStrategy::RuntimeCounter, SemanticsVariant::ARINC);
        let rs = explore(&m, DEFAULT_BUDGET).unwrap();
        for i in (0..rs.len()).step_by(7) {
            for (k, e) in m.alphabet.iter().enumerate() {
                let j = rs.index_of(&m.exec(rs.state(i), e)).expect("closed");
                assert_eq!(j, rs.succ(i, k));
            }
            assert_eq!(&m.reach(&rs.prefix(&m, i)), rs.state(i));
        }
    }

    #[test]
    fn budget_is_enforced() {
        let m = cfg1(PortIdStrategy::StaticFromConfig, SemanticsVariant::FIXED);
        match explore(&m, 10) {
            Err(CheckError::StateBudget { budget, explored, frontier }) => {
                assert_eq!(budget, 10);
                assert_eq!(explored, 10);
                assert!(frontier > 0);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn invariants_hold_and_corruption_is_caught() {
        let m = cfg1(PortIdStrategy::StaticFromConfig, SemanticsVariant::ARINC);
        let rs = explore(&m, DEFAULT_BUDGET).unwrap();
        let report = check_invariants(&m, &rs);
        assert!(report.holds);
        assert_eq!(report.states_checked, rs.len());

        let mut bad = m.init();
        let id = *bad.comm.created.iter().next().unwrap();
        bad.comm.ports.remove(&id);
        let states = [m.init(), bad];
        assert_eq!(
            first_invariant_failure(&m, &states),
            Some((1, vec![Invariant::PortConsistent]))
        );
    }
}
