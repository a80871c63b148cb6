#![allow(dead_code)]

use sepkern::config::{parse_config, DomainId, PartId, PortIdStrategy, SysConfig};
use sepkern::equivalence::TransmitterView;
use sepkern::kernel::{Event, EventKind, SemanticsVariant};
use sepkern::Model;

pub const CFG1: &str = "\
partition 1 P1
partition 2 P2
queuingchannel C source=P1.qs dest=P2.qd capacity=1
messages 2
";

/// Three partitions: sampling from P1 to P2, queuing from P2 to P3.
pub const CFG3: &str = "\
partition 1 P1
partition 2 P2
partition 3 P3
samplingchannel S source=P1.ss dest=P2.sd
queuingchannel Q source=P2.qs dest=P3.qd capacity=1
messages 1
";

pub const P1: DomainId = DomainId::Partition(PartId(1));
pub const P2: DomainId = DomainId::Partition(PartId(2));
pub const P3: DomainId = DomainId::Partition(PartId(3));
pub const T: DomainId = DomainId::Transmitter;
pub const S: DomainId = DomainId::Scheduler;

pub const VARIANTS: [(SemanticsVariant, PortIdStrategy); 4] = [
    (SemanticsVariant::FIXED, PortIdStrategy::StaticFromConfig),
    (SemanticsVariant::FIXED, PortIdStrategy::RuntimeCounter),
    (SemanticsVariant::ARINC, PortIdStrategy::StaticFromConfig),
    (SemanticsVariant::ARINC, PortIdStrategy::RuntimeCounter),
];

pub fn cfg(text: &str, strategy: PortIdStrategy) -> SysConfig {
    parse_config(text).unwrap().with_portid_strategy(strategy)
}

pub fn cfg1_model(v: SemanticsVariant, strategy: PortIdStrategy) -> Model {
    Model::new(cfg(CFG1, strategy), v, TransmitterView::SourceOnly)
}

/// CFG3 without the status, lookup, clear and partition-action events,
/// which only multiply the return-register contents.
pub fn cfg3_model(v: SemanticsVariant, strategy: PortIdStrategy) -> Model {
    let full = Model::new(cfg(CFG3, strategy), v, TransmitterView::SourceOnly);
    let keep = |e: &Event| {
        !matches!(
            e.kind(),
            EventKind::GetSamplingPortId
                | EventKind::GetQueuingPortId
                | EventKind::GetSamplingPortStatus
                | EventKind::GetQueuingPortStatus
                | EventKind::ClearQueuingPort
                | EventKind::PartitionAction
        )
    };
    let alphabet = full.alphabet.iter().copied().filter(keep).collect();
    Model::with_alphabet(full.cfg, v, TransmitterView::SourceOnly, alphabet)
}

/// A small CFG1 alphabet for brute-force oracles.
pub fn cfg1_small(v: SemanticsVariant, strategy: PortIdStrategy) -> Model {
    let full = cfg1_model(v, strategy);
    let c = full.cfg.find_channel("C").unwrap();
    let qs = full.cfg.find_port("qs").unwrap();
    let qd = full.cfg.find_port("qd").unwrap();
    let mut alphabet = vec![
        Event::SendQueuingMessage(sepkern::config::PortId(1), sepkern::kernel::Message(0)),
        Event::ReceiveQueuingMessage(sepkern::config::PortId(2)),
        Event::Schedule(P1),
        Event::Schedule(P2),
        Event::Schedule(T),
        Event::TransferQueuing(c),
    ];
    if strategy == PortIdStrategy::RuntimeCounter {
        alphabet.push(Event::CreateQueuingPort(qs));
        alphabet.push(Event::CreateQueuingPort(qd));
    }
    Model::with_alphabet(full.cfg, v, TransmitterView::SourceOnly, alphabet)
}
