//! Information-flow properties: `sources`, `ipurge`, observational
//! equivalence, and single-instance evaluation of each property.
//!
//! The exhaustive drivers live in [`crate::checker`]; this module holds the
//! definitions they are checked against.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::checker::Counterexample;
use crate::config::DomainId;
use crate::kernel::{event_domain, next_current, Event, State};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum PropertyId {
    Noninterference,
    WeakNoninterference,
    NoninterferenceR,
    WeakNoninterferenceR,
    Nonleakage,
    Noninfluence,
    StrongNoninfluence,
    LocalRespect,
    WeakStepConsistent,
}

impl PropertyId {
    pub const ALL: [PropertyId; 9] = [
        PropertyId::Noninterference,
        PropertyId::WeakNoninterference,
        PropertyId::NoninterferenceR,
        PropertyId::WeakNoninterferenceR,
        PropertyId::Nonleakage,
        PropertyId::Noninfluence,
        PropertyId::StrongNoninfluence,
        PropertyId::LocalRespect,
        PropertyId::WeakStepConsistent,
    ];

    /// The properties quantified over event sequences up to a bound.
    pub const BOUNDED: [PropertyId; 7] = [
        PropertyId::Noninterference,
        PropertyId::WeakNoninterference,
        PropertyId::NoninterferenceR,
        PropertyId::WeakNoninterferenceR,
        PropertyId::Nonleakage,
        PropertyId::Noninfluence,
        PropertyId::StrongNoninfluence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PropertyId::Noninterference => "noninterference",
            PropertyId::WeakNoninterference => "weak_noninterference",
            PropertyId::NoninterferenceR => "noninterference_r",
            PropertyId::WeakNoninterferenceR => "weak_noninterference_r",
            PropertyId::Nonleakage => "nonleakage",
            PropertyId::Noninfluence => "noninfluence",
            PropertyId::StrongNoninfluence => "strong_noninfluence",
            PropertyId::LocalRespect => "local_respect",
            PropertyId::WeakStepConsistent => "weak_step_consistent",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn is_unwinding(self) -> bool {
        matches!(self, PropertyId::LocalRespect | PropertyId::WeakStepConsistent)
    }

    /// Whether the property starts only from the boot state.
    pub fn from_boot(self) -> bool {
        matches!(self, PropertyId::Noninterference | PropertyId::WeakNoninterference)
    }
}

impl fmt::Display for PropertyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An implication between properties: if every premise holds, so does the
/// conclusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Implication {
    pub premises: &'static [PropertyId],
    pub conclusion: PropertyId,
}

const fn imp(premises: &'static [PropertyId], conclusion: PropertyId) -> Implication {
    Implication { premises, conclusion }
}

use PropertyId as P;

pub const IMPLICATIONS: [Implication; 8] = [
    imp(&[P::LocalRespect, P::WeakStepConsistent], P::StrongNoninfluence),
    imp(&[P::StrongNoninfluence], P::Noninfluence),
    imp(&[P::StrongNoninfluence], P::NoninterferenceR),
    imp(&[P::StrongNoninfluence], P::Nonleakage),
    imp(&[P::NoninterferenceR], P::Noninterference),
    imp(&[P::Noninterference], P::WeakNoninterference),
    // Not drawn in the usual proof diagram but sound for this model.
    imp(&[P::NoninterferenceR], P::WeakNoninterferenceR),
    imp(&[P::WeakNoninterferenceR], P::WeakNoninterference),
];

/// Implications violated by a verdict vector. Properties missing from
/// `holds` are treated as unknown and never violate anything.
pub fn implication_violations(holds: &dyn Fn(PropertyId) -> Option<bool>) -> Vec<Implication> {
    IMPLICATIONS
        .iter()
        .filter(|i| {
            i.premises.iter().all(|&p| holds(p) == Some(true)) && holds(i.conclusion) == Some(false)
        })
        .copied()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub property: PropertyId,
    pub holds: bool,
    /// Sequence bound, for bounded properties.
    pub bound: Option<usize>,
    pub witness: Option<Counterexample>,
}

impl Verdict {
    pub fn pass(property: PropertyId, bound: Option<usize>) -> Self {
        Verdict {
            property,
            holds: true,
            bound,
            witness: None,
        }
    }

    pub fn fail(property: PropertyId, bound: Option<usize>, witness: Counterexample) -> Self {
        Verdict {
            property,
            holds: false,
            bound,
            witness: Some(witness),
        }
    }
}

/// `sources as s d`: the domains allowed to pass information to `d` while
/// `events` run from `s`.
pub fn sources(m: &Model, events: &[Event], s: &State, d: DomainId) -> BTreeSet<DomainId> {
    match events.split_first() {
        None => BTreeSet::from([d]),
        Some((a, rest)) => {
            let u = m.dom(s, a);
            let mut srcs = sources(m, rest, &m.exec(s, a), d);
            if srcs.iter().any(|&v| m.interferes(u, v)) {
                srcs.insert(u);
            }
            srcs
        }
    }
}

/// `ipurge as s d`: `events` without those whose domain is not a source for
/// `d`. A purged event does not advance the state.
pub fn ipurge(m: &Model, events: &[Event], s: &State, d: DomainId) -> Vec<Event> {
    let mut out = Vec::new();
    let mut st = s.clone();
    for (i, a) in events.iter().enumerate() {
        if sources(m, &events[i..], &st, d).contains(&m.dom(&st, a)) {
            out.push(*a);
            st = m.exec(&st, a);
        }
    }
    out
}

/// Event domains depend on the state only through the running domain, and
/// only scheduling changes it, so `sources` can be computed from `current`
/// alone. Returns a bit mask over `m.domains`.
pub fn sources_from(m: &Model, current: DomainId, events: &[Event], d: DomainId) -> u32 {
    purge_from(m, current, events, d).0
}

/// `ipurge` computed from the running domain alone; returns the sources mask
/// and the retained positions.
pub fn purge_from(m: &Model, current: DomainId, events: &[Event], d: DomainId) -> (u32, Vec<usize>) {
    let doms = event_domains(m, current, events);
    let mut mask = 1u32 << m.domain_index(d);
    let mut keep = Vec::new();
    for i in (0..events.len()).rev() {
        let u = doms[i];
        let reaches = m
            .domains
            .iter()
            .enumerate()
            .any(|(j, &v)| mask & (1 << j) != 0 && m.interferes(u, v));
        if reaches {
            mask |= 1 << m.domain_index(u);
            keep.push(i);
        }
    }
    keep.reverse();
    (mask, keep)
}

fn event_domains(m: &Model, mut current: DomainId, events: &[Event]) -> Vec<DomainId> {
    events
        .iter()
        .map(|e| {
            let u = event_domain(current, e);
            current = next_current(&m.cfg, current, e);
            u
        })
        .collect()
}

/// `s ◁ as ≅ t ◁ bs @ d`.
pub fn obs_equiv(m: &Model, s: &State, a: &[Event], t: &State, b: &[Event], d: DomainId) -> bool {
    m.vpeq(&m.run(a, s), d, &m.run(b, t))
}

/// `s ≈D≈ t`.
pub fn vpeq_all<'a>(
    m: &Model,
    s: &State,
    ds: impl IntoIterator<Item = &'a DomainId>,
    t: &State,
) -> bool {
    ds.into_iter().all(|&d| m.vpeq(s, d, t))
}

/// Result of evaluating one property instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instance {
    /// Some antecedent is false (or the shape does not fit the property).
    Vacuous,
    Holds,
    /// The conclusion fails; carries the first differing view component.
    Violated(String),
}

impl Instance {
    pub fn is_violation(&self) -> bool {
        matches!(self, Instance::Violated(_))
    }
}

/// The concrete ingredients of one property instance.
#[derive(Debug, Clone, Copy)]
pub struct InstanceArgs<'a> {
    pub s: &'a State,
    pub t: &'a State,
    pub run_a: &'a [Event],
    pub run_b: &'a [Event],
    pub event: Option<&'a Event>,
    pub observer: DomainId,
}

/// Evaluates `kind` on one instance. Single-state properties read only `s`;
/// `bs`-free properties require `run_b` to be the sequence the definition
/// compares against (the purge, or `run_a` itself).
pub fn evaluate(m: &Model, kind: PropertyId, x: InstanceArgs<'_>) -> Instance {
    let InstanceArgs {
        s,
        t,
        run_a,
        run_b,
        event,
        observer: d,
    } = x;
    let sched = DomainId::Scheduler;
    let conclude = |s2: &State, t2: &State| match m.view_diff(s2, d, t2) {
        None => Instance::Holds,
        Some(diff) => Instance::Violated(diff),
    };
    let runs = |s: &State, t: &State| conclude(&m.run(run_a, s), &m.run(run_b, t));
    let sources_eq = || vpeq_all(m, s, &sources(m, run_a, s, d), t) && m.vpeq(s, sched, t);
    match kind {
        P::Noninterference | P::NoninterferenceR => {
            if ipurge(m, run_a, s, d) != run_b {
                return Instance::Vacuous;
            }
            runs(s, s)
        }
        P::WeakNoninterference | P::WeakNoninterferenceR => {
            if ipurge(m, run_a, s, d) != ipurge(m, run_b, s, d) {
                return Instance::Vacuous;
            }
            runs(s, s)
        }
        P::Nonleakage => {
            if run_a != run_b || !sources_eq() {
                return Instance::Vacuous;
            }
            runs(s, t)
        }
        P::Noninfluence => {
            if !sources_eq() || ipurge(m, run_a, s, d) != ipurge(m, run_b, s, d) {
                return Instance::Vacuous;
            }
            runs(s, t)
        }
        P::StrongNoninfluence => {
            if !sources_eq() || ipurge(m, run_a, t, d) != run_b {
                return Instance::Vacuous;
            }
            runs(s, t)
        }
        P::LocalRespect => {
            let Some(a) = event else {
                return Instance::Vacuous;
            };
            if m.interferes(m.dom(s, a), d) {
                return Instance::Vacuous;
            }
            conclude(s, &m.exec(s, a))
        }
        P::WeakStepConsistent => {
            let Some(a) = event else {
                return Instance::Vacuous;
            };
            let u = m.dom(s, a);
            let antecedent = m.vpeq(s, d, t)
                && m.vpeq(s, sched, t)
                && m.interferes(u, d)
                && m.vpeq(s, u, t);
            if !antecedent {
                return Instance::Vacuous;
            }
            conclude(&m.exec(s, a), &m.exec(t, a))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, PartId, PortId};
    use crate::equivalence::TransmitterView;
    use crate::kernel::{Message, SemanticsVariant};

    const P1: DomainId = DomainId::Partition(PartId(1));
    const P2: DomainId = DomainId::Partition(PartId(2));
    const T: DomainId = DomainId::Transmitter;
    const S: DomainId = DomainId::Scheduler;

    fn cfg1(v: SemanticsVariant) -> Model {
        let cfg = parse_config(
            "partition 1 P1\npartition 2 P2\nqueuingchannel C source=P1.qs dest=P2.qd capacity=1\n",
        )
        .unwrap();
        Model::new(cfg, v, TransmitterView::SourceOnly)
    }

    #[test]
    fn sources_examples() {
        let m = cfg1(SemanticsVariant::FIXED);
        let s0 = m.init();
        assert_eq!(sources(&m, &[], &s0, P1), BTreeSet::from([P1]));
        assert_eq!(
            sources(&m, &[Event::Schedule(P2)], &s0, P1),
            BTreeSet::from([S, P1])
        );
        let s = m.exec(&s0, &Event::Schedule(P2));
        let recv = [Event::ReceiveQueuingMessage(PortId(2))];
        assert_eq!(sources(&m, &recv, &s, T), BTreeSet::from([T]));
        assert!(ipurge(&m, &recv, &s, T).is_empty());
        assert_eq!(ipurge(&m, &recv, &s, P2), recv);
    }

    #[test]
    fn schedules_are_never_purged() {
        let m = cfg1(SemanticsVariant::FIXED);
        let s0 = m.init();
        let run = [
            Event::SendQueuingMessage(PortId(1), Message(0)),
            Event::Schedule(P2),
            Event::PartitionAction(0),
            Event::Schedule(T),
        ];
        for &d in &m.domains {
            let purged = ipurge(&m, &run, &s0, d);
            assert!(purged.contains(&run[1]) && purged.contains(&run[3]));
        }
        // P1's send reaches P2 only via a later transfer.
        assert_eq!(ipurge(&m, &run, &s0, P2), vec![run[1], run[2], run[3]]);
    }

    #[test]
    fn fast_purge_agrees_with_definition() {
        let m = cfg1(SemanticsVariant::ARINC);
        let s0 = m.init();
        let a = &m.alphabet;
        for (i, &e1) in a.iter().enumerate() {
            for &e2 in &a[i % 5..i % 5 + 6] {
                for &e3 in &[Event::Schedule(T), e1, Event::TransferQueuing(crate::config::ChannelRef(0))] {
                    let run = [e1, e2, e3];
                    for &d in &m.domains {
                        let (mask, keep) = purge_from(&m, s0.current, &run, d);
                        let kept: Vec<Event> = keep.iter().map(|&k| run[k]).collect();
                        assert_eq!(kept, ipurge(&m, &run, &s0, d));
                        let srcs: BTreeSet<DomainId> = m
                            .domains
                            .iter()
                            .enumerate()
                            .filter(|(j, _)| mask & (1 << j) != 0)
                            .map(|(_, &x)| x)
                            .collect();
                        assert_eq!(srcs, sources(&m, &run, &s0, d));
                    }
                }
            }
        }
    }

    #[test]
    fn covert_send_status_instance() {
        let send = Event::SendQueuingMessage(PortId(1), Message(0));
        let status = Event::GetQueuingPortStatus(PortId(1));
        for (v, violated) in [(SemanticsVariant::ARINC, true), (SemanticsVariant::FIXED, false)] {
            let m = cfg1(v);
            let s = m.reach(&[send]);
            let t = m.reach(&[status]);
            let args = InstanceArgs {
                s: &s,
                t: &t,
                run_a: &[],
                run_b: &[],
                event: Some(&send),
                observer: P1,
            };
            let r = evaluate(&m, P::WeakStepConsistent, args);
            assert_eq!(r.is_violation(), violated, "{r:?}");
            if violated {
                assert_eq!(r, Instance::Violated("P1 locals: ret=NOT_AVAILABLE vs ret=NO_ERROR".into()));
            }
        }
    }

    #[test]
    fn implication_table_flags_only_broken_edges() {
        let all_true = |_: PropertyId| Some(true);
        assert!(implication_violations(&all_true).is_empty());
        let broken = |p: PropertyId| Some(p != P::Nonleakage);
        let v = implication_violations(&broken);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].conclusion, P::Nonleakage);
        let unknown = |p: PropertyId| (p != P::LocalRespect).then_some(p != P::StrongNoninfluence);
        assert!(implication_violations(&unknown).is_empty());
    }
}
