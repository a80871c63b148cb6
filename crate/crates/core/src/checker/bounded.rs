//! Exhaustive checks of the sequence-quantified properties up to a bound.
//!
//! Every sequence of at most `bound` alphabet events is enumerated in
//! length-then-lexicographic order. Because event domains depend only on the
//! running domain, `sources` and `ipurge` are tabulated once per (running
//! domain, observer, sequence). Pairwise conditions are checked by grouping
//! states on the views the antecedent fixes, so no state pair is visited
//! explicitly.

use std::collections::HashMap;

use rayon::prelude::*;

use super::unwinding::{verify_unwinding, view_ids};
use super::{CheckError, Counterexample, ReachableSet};
use crate::config::DomainId;
use crate::kernel::Event;
use crate::model::Model;
use crate::security::{purge_from, PropertyId, Verdict};

pub const DEFAULT_MAX_SEQUENCES: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundedLimits {
    pub max_sequences: usize,
}

impl Default for BoundedLimits {
    fn default() -> Self {
        BoundedLimits {
            max_sequences: DEFAULT_MAX_SEQUENCES,
        }
    }
}

/// Checks one property. The unwinding conditions ignore `bound`.
pub fn verify_property(
    m: &Model,
    rs: &ReachableSet,
    p: PropertyId,
    bound: usize,
    limits: BoundedLimits,
) -> Result<Verdict, CheckError> {
    Ok(verify_properties(m, rs, &[p], bound, limits)?.remove(0))
}

/// Checks several properties, sharing the sequence tables between them.
/// Verdicts come back in the order asked.
pub fn verify_properties(
    m: &Model,
    rs: &ReachableSet,
    props: &[PropertyId],
    bound: usize,
    limits: BoundedLimits,
) -> Result<Vec<Verdict>, CheckError> {
    let unwinding = props
        .iter()
        .any(|p| p.is_unwinding())
        .then(|| verify_unwinding(m, rs));
    let bounded = props.iter().any(|p| !p.is_unwinding());
    let tables = if bounded {
        Some(Tables::build(m, rs, bound, limits)?)
    } else {
        None
    };
    Ok(props
        .iter()
        .map(|&p| match p {
            PropertyId::LocalRespect => unwinding.as_ref().unwrap().local_respect.clone(),
            PropertyId::WeakStepConsistent => {
                unwinding.as_ref().unwrap().weak_step_consistent.clone()
            }
            _ => tables.as_ref().unwrap().verdict(p),
        })
        .collect())
}

struct Tables<'a> {
    m: &'a Model,
    rs: &'a ReachableSet,
    bound: usize,
    ids: Vec<Vec<u32>>,
    seqs: Vec<Vec<u16>>,
    /// Each state's running domain, as an index among the distinct ones.
    cur: Vec<usize>,
    /// Indexed by `slot(c, d, q)`.
    mask: Vec<u32>,
    purge: Vec<u32>,
    /// Least sequence with the same purge.
    rep: Vec<u32>,
    /// Per antecedent mask: each state's class among states agreeing on the
    /// masked domains' views. Class numbers are unique across masks.
    classes: HashMap<u32, Vec<u32>>,
    n_classes: usize,
}

/// A violating instance, by state and sequence indices.
#[derive(Debug, Clone, Copy)]
struct Hit {
    s: usize,
    t: usize,
    a: usize,
    b: usize,
    d: usize,
}

struct Scratch {
    generation: u32,
    stamp: Vec<u32>,
    first: Vec<(u32, u32)>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            generation: 0,
            stamp: vec![0; n],
            first: vec![(0, 0); n],
        }
    }

    fn reset(&mut self) {
        self.generation += 1;
    }

    /// Records `(state, value)` for `class` if it is the first member seen
    /// since the last reset; returns the first member.
    fn first_of(&mut self, class: u32, state: usize, value: u32) -> (usize, u32) {
        let k = class as usize;
        if self.stamp[k] != self.generation {
            self.stamp[k] = self.generation;
            self.first[k] = (state as u32, value);
        }
        let (s, v) = self.first[k];
        (s as usize, v)
    }
}

fn sequence_count(alpha: usize, bound: usize) -> u128 {
    (0..=bound as u32).map(|k| (alpha as u128).pow(k)).sum()
}

impl<'a> Tables<'a> {
    fn build(
        m: &'a Model,
        rs: &'a ReachableSet,
        bound: usize,
        limits: BoundedLimits,
    ) -> Result<Self, CheckError> {
        let alpha = m.alphabet.len();
        let needed = sequence_count(alpha, bound);
        if needed > limits.max_sequences as u128 {
            return Err(CheckError::SequenceBudget {
                bound,
                needed,
                limit: limits.max_sequences,
            });
        }
        let mut seqs: Vec<Vec<u16>> = vec![Vec::new()];
        let mut offsets = vec![0usize];
        let mut start = 0;
        for _ in 0..bound {
            let end = seqs.len();
            offsets.push(end);
            for q in start..end {
                for k in 0..alpha {
                    let mut next = seqs[q].clone();
                    next.push(k as u16);
                    seqs.push(next);
                }
            }
            start = end;
        }
        let index_of = |seq: &[u16]| {
            offsets[seq.len()] + seq.iter().fold(0, |acc, &k| acc * alpha + k as usize)
        };

        let mut currents: Vec<DomainId> = rs.states.iter().map(|s| s.current).collect();
        currents.sort();
        currents.dedup();
        let cur = rs
            .states
            .iter()
            .map(|s| currents.binary_search(&s.current).unwrap())
            .collect();

        let nd = m.domains.len();
        let nq = seqs.len();
        let per_cd: Vec<(Vec<u32>, Vec<u32>)> = (0..currents.len() * nd)
            .into_par_iter()
            .map(|cd| {
                let (c, d) = (currents[cd / nd], m.domains[cd % nd]);
                let mut masks = Vec::with_capacity(nq);
                let mut purges = Vec::with_capacity(nq);
                for seq in &seqs {
                    let events: Vec<Event> = seq.iter().map(|&k| m.alphabet[k as usize]).collect();
                    let (mask, keep) = purge_from(m, c, &events, d);
                    let kept: Vec<u16> = keep.iter().map(|&i| seq[i]).collect();
                    masks.push(mask);
                    purges.push(index_of(&kept) as u32);
                }
                (masks, purges)
            })
            .collect();
        let mut mask = Vec::with_capacity(per_cd.len() * nq);
        let mut purge = Vec::with_capacity(per_cd.len() * nq);
        let mut rep = Vec::with_capacity(per_cd.len() * nq);
        for (masks, purges) in per_cd {
            let mut least: HashMap<u32, u32> = HashMap::new();
            for (q, &p) in purges.iter().enumerate() {
                rep.push(*least.entry(p).or_insert(q as u32));
            }
            mask.extend(masks);
            purge.extend(purges);
        }

        let ids = view_ids(m, rs);
        let sched_bit = 1u32 << m.domain_index(DomainId::Scheduler);
        let mut wanted: Vec<u32> = mask.iter().map(|&x| x | sched_bit).collect();
        wanted.sort_unstable();
        wanted.dedup();
        let per_mask: Vec<(u32, Vec<u32>, usize)> = wanted
            .par_iter()
            .map(|&mk| {
                let doms: Vec<usize> = (0..nd).filter(|&j| mk & (1 << j) != 0).collect();
                let mut seen: HashMap<Vec<u32>, u32> = HashMap::new();
                let local = (0..rs.len())
                    .map(|s| {
                        let key: Vec<u32> = doms.iter().map(|&j| ids[j][s]).collect();
                        let next = seen.len() as u32;
                        *seen.entry(key).or_insert(next)
                    })
                    .collect();
                (mk, local, seen.len())
            })
            .collect();
        let mut classes = HashMap::new();
        let mut n_classes = 0;
        for (mk, local, count) in per_mask {
            let base = n_classes as u32;
            classes.insert(mk, local.into_iter().map(|x| x + base).collect());
            n_classes += count;
        }

        Ok(Tables {
            m,
            rs,
            bound,
            ids,
            seqs,
            cur,
            mask,
            purge,
            rep,
            classes,
            n_classes,
        })
    }

    fn slot(&self, c: usize, d: usize, q: usize) -> usize {
        (c * self.m.domains.len() + d) * self.seqs.len() + q
    }

    /// Observer `d`'s view id after running sequence `q` from state `s`.
    fn v(&self, d: usize, s: usize, q: usize) -> u32 {
        self.ids[d][self.rs.run_from(s, &self.seqs[q])]
    }

    fn class(&self, s: usize, d: usize, q: usize) -> u32 {
        let sched_bit = 1u32 << self.m.domain_index(DomainId::Scheduler);
        let mk = self.mask[self.slot(self.cur[s], d, q)] | sched_bit;
        self.classes[&mk][s]
    }

    fn purge_of(&self, s: usize, d: usize, q: usize) -> usize {
        self.purge[self.slot(self.cur[s], d, q)] as usize
    }

    fn rep_of(&self, s: usize, d: usize, q: usize) -> usize {
        self.rep[self.slot(self.cur[s], d, q)] as usize
    }

    fn verdict(&self, p: PropertyId) -> Verdict {
        let hit = self.search(p);
        match hit {
            None => Verdict::pass(p, Some(self.bound)),
            Some(h) => Verdict::fail(p, Some(self.bound), self.counterexample(p, h)),
        }
    }

    /// The first violation in (sequence, observer, state) order.
    fn search(&self, p: PropertyId) -> Option<Hit> {
        use PropertyId as P;
        let n = self.rs.len();
        let nd = self.m.domains.len();
        let states = if p.from_boot() { 1 } else { n };
        (0..self.seqs.len())
            .into_par_iter()
            .map_init(
                || Scratch::new(self.n_classes),
                |sc, q| {
                    for d in 0..nd {
                        let found = match p {
                            P::Noninterference | P::NoninterferenceR => (0..states).find_map(|s| {
                                let b = self.purge_of(s, d, q);
                                (self.v(d, s, q) != self.v(d, s, b)).then_some(Hit { s, t: s, a: q, b, d })
                            }),
                            P::WeakNoninterference | P::WeakNoninterferenceR => {
                                (0..states).find_map(|s| {
                                    let r = self.rep_of(s, d, q);
                                    (self.v(d, s, q) != self.v(d, s, r))
                                        .then_some(Hit { s, t: s, a: r, b: q, d })
                                })
                            }
                            P::Nonleakage => self.leak(sc, d, q),
                            P::Noninfluence => (0..n)
                                .find_map(|s| {
                                    let r = self.rep_of(s, d, q);
                                    (self.v(d, s, q) != self.v(d, s, r))
                                        .then_some(Hit { s, t: s, a: r, b: q, d })
                                })
                                .or_else(|| {
                                    // Only sequences that represent their purge class
                                    // need the two-state check.
                                    self.leak_where(sc, d, q, |s| self.rep_of(s, d, q) == q)
                                }),
                            P::StrongNoninfluence => self.strong(sc, d, q),
                            P::LocalRespect | P::WeakStepConsistent => {
                                unreachable!("unwinding conditions are not bounded")
                            }
                        };
                        if found.is_some() {
                            return found;
                        }
                    }
                    None
                },
            )
            .find_first(Option::is_some)
            .flatten()
    }

    fn leak(&self, sc: &mut Scratch, d: usize, q: usize) -> Option<Hit> {
        self.leak_where(sc, d, q, |_| true)
    }

    /// Among states passing `keep`, those in one antecedent class must give
    /// `d` the same view after `q`.
    fn leak_where(
        &self,
        sc: &mut Scratch,
        d: usize,
        q: usize,
        keep: impl Fn(usize) -> bool,
    ) -> Option<Hit> {
        sc.reset();
        (0..self.rs.len()).filter(|&s| keep(s)).find_map(|s| {
            let val = self.v(d, s, q);
            let (f, fv) = sc.first_of(self.class(s, d, q), s, val);
            (fv != val).then_some(Hit { s: f, t: s, a: q, b: q, d })
        })
    }

    /// Within a class, every state running `q` must match every state running
    /// the purge of `q`.
    fn strong(&self, sc: &mut Scratch, d: usize, q: usize) -> Option<Hit> {
        sc.reset();
        (0..self.rs.len()).find_map(|s| {
            let b = self.purge_of(s, d, q);
            let vp = self.v(d, s, b);
            let (f, fp) = sc.first_of(self.class(s, d, q), s, vp);
            if self.v(d, s, q) != fp {
                Some(Hit { s, t: f, a: q, b, d })
            } else if vp != fp {
                let t = if self.v(d, f, q) != vp { s } else { f };
                Some(Hit { s: f, t, a: q, b, d })
            } else {
                None
            }
        })
    }

    fn counterexample(&self, p: PropertyId, h: Hit) -> Counterexample {
        let m = self.m;
        let events = |q: usize| -> Vec<Event> {
            self.seqs[q].iter().map(|&k| m.alphabet[k as usize]).collect()
        };
        let d = m.domains[h.d];
        let (run_a, run_b) = (events(h.a), events(h.b));
        let single = matches!(
            p,
            PropertyId::Noninterference
                | PropertyId::WeakNoninterference
                | PropertyId::NoninterferenceR
                | PropertyId::WeakNoninterferenceR
        );
        let (s, t) = (self.rs.state(h.s), self.rs.state(h.t));
        let diff = m
            .view_diff(&m.run(&run_a, s), d, &m.run(&run_b, t))
            .unwrap_or_default();
        Counterexample {
            kind: p,
            prefix_a: self.rs.prefix(m, h.s),
            prefix_b: if single {
                Vec::new()
            } else {
                self.rs.prefix(m, h.t)
            },
            event: None,
            run_a,
            run_b,
            observer: d,
            diff,
        }
        .minimize(m)
    }

}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::equivalence::TransmitterView;
    use crate::kernel::SemanticsVariant;

    #[test]
    fn sequence_enumeration_is_complete() {
        let cfg = parse_config("partition 1 A\npartition 2 B\n").unwrap();
        let m = Model::new(cfg, SemanticsVariant::FIXED, TransmitterView::SourceOnly);
        let rs = super::super::explore(&m, 1000).unwrap();
        let t = Tables::build(&m, &rs, 2, BoundedLimits::default()).unwrap();
        let a = m.alphabet.len();
        assert_eq!(t.seqs.len(), 1 + a + a * a);
        let err = Tables::build(&m, &rs, 9, BoundedLimits { max_sequences: 1000 });
        assert!(matches!(err, Err(CheckError::SequenceBudget { .. })));
    }

    #[test]
    fn bound_zero_holds_everywhere() {
        let cfg = parse_config(
            "partition 1 P1\npartition 2 P2\nqueuingchannel C source=P1.qs dest=P2.qd capacity=1\n",
        )
        .unwrap();
        let m = Model::new(cfg, SemanticsVariant::ARINC, TransmitterView::SourceOnly);
        let rs = super::super::explore(&m, 100_000).unwrap();
        for v in verify_properties(&m, &rs, &PropertyId::BOUNDED, 0, BoundedLimits::default()).unwrap() {
            assert!(v.holds, "{}", v.property);
            assert_eq!(v.bound, Some(0));
        }
    }
}
