//! The interference relation between security domains.

use std::collections::BTreeSet;

use crate::config::{DomainId, SysConfig};

/// `u ~> v`: information may flow from `u` to `v`. Anything not listed is
/// forbidden.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    interferes: BTreeSet<(DomainId, DomainId)>,
}

impl Policy {
    pub fn interferes(&self, from: DomainId, to: DomainId) -> bool {
        self.interferes.contains(&(from, to))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (DomainId, DomainId)> + '_ {
        self.interferes.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.interferes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interferes.is_empty()
    }
}

/// Builds the policy: reflexive, the scheduler reaches every domain, and each
/// channel from `a` to `b` contributes `a ~> Transmitter` and `Transmitter ~> b`.
pub fn derive_policy(cfg: &SysConfig) -> Policy {
    let domains = cfg.domains();
    let mut interferes = BTreeSet::new();
    for &d in &domains {
        interferes.insert((d, d));
        interferes.insert((DomainId::Scheduler, d));
    }
    for c in &cfg.channels {
        let src = DomainId::Partition(cfg.port(c.source).owner);
        interferes.insert((src, DomainId::Transmitter));
        for &dst in &c.destinations {
            interferes.insert((DomainId::Transmitter, DomainId::Partition(cfg.port(dst).owner)));
        }
    }
    Policy { interferes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, PartId};

    const P1: DomainId = DomainId::Partition(PartId(1));
    const P2: DomainId = DomainId::Partition(PartId(2));
    const P3: DomainId = DomainId::Partition(PartId(3));
    const T: DomainId = DomainId::Transmitter;
    const S: DomainId = DomainId::Scheduler;

    #[test]
    fn cfg1_policy_is_exact() {
        let cfg = parse_config(
            "partition 1 P1\npartition 2 P2\nqueuingchannel C source=P1.qs dest=P2.qd capacity=1\n",
        )
        .unwrap();
        let policy = derive_policy(&cfg);
        let mut expected: BTreeSet<_> = [(P1, T), (T, P2)].into_iter().collect();
        for d in [S, T, P1, P2] {
            expected.insert((d, d));
            expected.insert((S, d));
        }
        assert_eq!(policy.pairs().collect::<BTreeSet<_>>(), expected);
        assert!(!policy.interferes(T, P1));
        assert!(!policy.interferes(P2, T));
        assert!(!policy.interferes(P1, S));
    }

    #[test]
    fn no_channels_gives_reflexive_plus_scheduler() {
        let cfg = parse_config("partition 1 A\npartition 2 B\n").unwrap();
        let policy = derive_policy(&cfg);
        // 4 reflexive pairs, plus scheduler to the 3 others.
        assert_eq!(policy.len(), 7);
        assert!(!policy.interferes(P1, T));
    }

    #[test]
    fn multicast_sampling_reaches_every_destination() {
        let cfg = parse_config(
            "partition 1 A\npartition 2 B\npartition 3 C\nsamplingchannel S source=A.s dest=B.d,C.d\n",
        );
        // Port names are global, so `C.d` clashes with `B.d`.
        assert!(cfg.is_err());
        let cfg = parse_config(
            "partition 1 A\npartition 2 B\npartition 3 C\nsamplingchannel S source=A.s dest=B.d1,C.d2\n",
        )
        .unwrap();
        let policy = derive_policy(&cfg);
        assert!(policy.interferes(T, P2));
        assert!(policy.interferes(T, P3));
        assert!(policy.interferes(P1, T));
        assert!(!policy.interferes(P1, P2));
    }
}
