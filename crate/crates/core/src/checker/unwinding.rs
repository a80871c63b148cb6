use std::collections::HashMap;

use rayon::prelude::*;

use super::{Counterexample, ReachableSet};
use crate::config::DomainId;
use crate::equivalence::View;
use crate::kernel::{event_domain, EventKind};
use crate::model::Model;
use crate::security::{PropertyId, Verdict};

/// `ids[d][s]`: a small integer standing for domain `d`'s view of state `s`.
/// Equal ids mean equal views.
pub(super) fn view_ids(m: &Model, rs: &ReachableSet) -> Vec<Vec<u32>> {
    m.domains
        .par_iter()
        .map(|&d| {
            let mut ids: HashMap<View, u32> = HashMap::new();
            rs.states
                .iter()
                .map(|s| {
                    let next = ids.len() as u32;
                    *ids.entry(m.view(s, d)).or_insert(next)
                })
                .collect()
        })
        .collect()
}

/// Verdicts restricted to the events of one kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KindVerdict {
    pub kind: EventKind,
    /// Alphabet events of this kind.
    pub events: usize,
    pub local_respect: Option<Counterexample>,
    pub weak_step_consistent: Option<Counterexample>,
}

impl KindVerdict {
    pub fn holds(&self) -> bool {
        self.local_respect.is_none() && self.weak_step_consistent.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnwindingReport {
    pub local_respect: Verdict,
    pub weak_step_consistent: Verdict,
    pub per_kind: Vec<KindVerdict>,
}

/// A violation located by (witness state, alphabet index, domain index).
/// `other` is the second state for step consistency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Hit {
    state: usize,
    event: usize,
    domain: usize,
    other: usize,
}

/// Checks local respect over every reachable state and weak step consistency
/// over every scheduler-equivalent pair, for every alphabet event and domain.
pub fn verify_unwinding(m: &Model, rs: &ReachableSet) -> UnwindingReport {
    let ids = view_ids(m, rs);
    let sched = m.domain_index(DomainId::Scheduler);
    let dom_idx: HashMap<DomainId, usize> =
        m.domains.iter().enumerate().map(|(i, &d)| (d, i)).collect();

    let lr_hits: Vec<Option<Hit>> = (0..m.alphabet.len())
        .into_par_iter()
        .map(|k| {
            let e = &m.alphabet[k];
            for (i, s) in rs.states.iter().enumerate() {
                let u = event_domain(s.current, e);
                let j = rs.succ(i, k);
                for (di, &d) in m.domains.iter().enumerate() {
                    if !m.interferes(u, d) && ids[di][i] != ids[di][j] {
                        return Some(Hit {
                            state: i,
                            event: k,
                            domain: di,
                            other: j,
                        });
                    }
                }
            }
            None
        })
        .collect();

    let wsc_hits: Vec<Option<Hit>> = (0..m.alphabet.len())
        .into_par_iter()
        .map(|k| {
            let e = &m.alphabet[k];
            let mut best: Option<Hit> = None;
            for (di, &d) in m.domains.iter().enumerate() {
                let mut groups: HashMap<(u32, u32, u32), (usize, u32)> = HashMap::new();
                for (i, s) in rs.states.iter().enumerate() {
                    if best.is_some_and(|b| b.other <= i) {
                        break;
                    }
                    let u = event_domain(s.current, e);
                    if !m.interferes(u, d) {
                        continue;
                    }
                    let key = (ids[di][i], ids[sched][i], ids[dom_idx[&u]][i]);
                    let after = ids[di][rs.succ(i, k)];
                    let (rep, rep_after) = *groups.entry(key).or_insert((i, after));
                    if rep_after != after {
                        let hit = Hit {
                            state: rep,
                            event: k,
                            domain: di,
                            other: i,
                        };
                        if best.is_none_or(|b| (hit.other, hit.domain) < (b.other, b.domain)) {
                            best = Some(hit);
                        }
                        break;
                    }
                }
            }
            best
        })
        .collect();

    let lr_cx = |h: Hit| {
        let s = rs.state(h.state);
        let d = m.domains[h.domain];
        let e = m.alphabet[h.event];
        Counterexample {
            kind: PropertyId::LocalRespect,
            prefix_a: rs.prefix(m, h.state),
            prefix_b: Vec::new(),
            event: Some(e),
            run_a: Vec::new(),
            run_b: Vec::new(),
            observer: d,
            diff: m.view_diff(s, d, rs.state(h.other)).unwrap_or_default(),
        }
        .minimize(m)
    };
    let wsc_cx = |h: Hit| {
        let d = m.domains[h.domain];
        let e = m.alphabet[h.event];
        let (s2, t2) = (rs.state(rs.succ(h.state, h.event)), rs.state(rs.succ(h.other, h.event)));
        Counterexample {
            kind: PropertyId::WeakStepConsistent,
            prefix_a: rs.prefix(m, h.state),
            prefix_b: rs.prefix(m, h.other),
            event: Some(e),
            run_a: Vec::new(),
            run_b: Vec::new(),
            observer: d,
            diff: m.view_diff(s2, d, t2).unwrap_or_default(),
        }
        .minimize(m)
    };

    let first_of = |hits: &[Option<Hit>], kind: Option<EventKind>, order: fn(&Hit) -> (usize, usize, usize)| {
        hits.iter()
            .flatten()
            .filter(|h| kind.is_none_or(|k| m.alphabet[h.event].kind() == k))
            .min_by_key(|h| order(h))
            .copied()
    };
    let lr_order: fn(&Hit) -> (usize, usize, usize) = |h| (h.state, h.event, h.domain);
    let wsc_order: fn(&Hit) -> (usize, usize, usize) = |h| (h.other, h.event, h.domain);

    let per_kind = EventKind::ALL
        .iter()
        .filter_map(|&kind| {
            let events = m.alphabet.iter().filter(|e| e.kind() == kind).count();
            (events > 0).then(|| KindVerdict {
                kind,
                events,
                local_respect: first_of(&lr_hits, Some(kind), lr_order).map(lr_cx),
                weak_step_consistent: first_of(&wsc_hits, Some(kind), wsc_order).map(wsc_cx),
            })
        })
        .collect();

    let verdict = |p, hit: Option<Hit>, cx: &dyn Fn(Hit) -> Counterexample| match hit {
        None => Verdict::pass(p, None),
        Some(h) => Verdict::fail(p, None, cx(h)),
    };
    UnwindingReport {
        local_respect: verdict(
            PropertyId::LocalRespect,
            first_of(&lr_hits, None, lr_order),
            &lr_cx,
        ),
        weak_step_consistent: verdict(
            PropertyId::WeakStepConsistent,
            first_of(&wsc_hits, None, wsc_order),
            &wsc_cx,
        ),
        per_kind,
    }
}
