//! Static system configuration: partitions, channels and the ports they link.
//!
//! The configuration is fixed at build time. Everything the kernel needs to
//! know about a port (mode, direction, owner, capacity) is looked up here by
//! [`PortRef`], an index into [`SysConfig::ports`].

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::kernel::{Event, Message};

/// Identifier of a configured partition, as written in `partition <id> <name>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartId(pub u32);

/// A security domain. Ordering is Scheduler < Transmitter < partitions by id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DomainId {
    Scheduler,
    Transmitter,
    Partition(PartId),
}

impl DomainId {
    pub fn partition(self) -> Option<PartId> {
        match self {
            DomainId::Partition(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PortMode {
    Sampling,
    Queuing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Source,
    Destination,
}

/// Index of a configured port in [`SysConfig::ports`]. Stands for the port name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortRef(pub u16);

/// Index of a configured channel in [`SysConfig::channels`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChannelRef(pub u16);

/// Kernel-assigned port identifier handed out to partitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortId(pub u32);

impl fmt::Display for PortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub id: PartId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortConf {
    pub name: String,
    pub mode: PortMode,
    pub direction: Direction,
    pub owner: PartId,
    pub static_id: Option<PortId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelConf {
    pub name: String,
    pub mode: PortMode,
    pub source: PortRef,
    pub destinations: Vec<PortRef>,
    /// Buffer size of both endpoints. Always 1 for sampling channels.
    pub capacity: usize,
}

/// How the kernel picks the identifier returned by a port creation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PortIdStrategy {
    /// Identifiers fixed in the configuration; every port exists from boot.
    StaticFromConfig,
    /// A global counter starting at 1, bumped on each successful creation.
    RuntimeCounter,
}

pub const DEFAULT_MESSAGES: u8 = 2;
pub const DEFAULT_CAPACITY: usize = 1;
/// Domain sets are packed into `u32` masks by the checker.
pub const MAX_PARTITIONS: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SysConfig {
    /// Sorted by id.
    pub partitions: Vec<Partition>,
    pub channels: Vec<ChannelConf>,
    pub ports: Vec<PortConf>,
    pub message_alphabet_size: u8,
    pub portid_strategy: PortIdStrategy,
    pub default_capacity: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigErrorKind {
    #[error("no partitions")]
    NoPartitions,
    #[error("too many partitions (max {MAX_PARTITIONS})")]
    TooManyPartitions,
    #[error("duplicate partition `{0}`")]
    DuplicatePartition(String),
    #[error("partition name `{0}` is reserved")]
    ReservedName(String),
    #[error("duplicate channel `{0}`")]
    DuplicateChannel(String),
    #[error("duplicate port name `{0}`")]
    DuplicatePort(String),
    #[error("unknown partition `{0}`")]
    UnknownPartition(String),
    #[error("dangling reference: {0}")]
    Dangling(String),
    #[error("queuing channel `{channel}` must have exactly one destination, got {count}")]
    QueuingDestinations { channel: String, count: usize },
    #[error("channel `{0}` has no destination")]
    NoDestination(String),
    #[error("channel `{0}`: capacity must be at least 1")]
    ZeroCapacity(String),
    #[error("duplicate static port id {0}")]
    DuplicateStaticId(u32),
    #[error("port `{0}` has no static id")]
    MissingStaticId(String),
    #[error("channel `{channel}` connects partition `{partition}` to itself")]
    SelfLoop { channel: String, partition: String },
    #[error("port `{port}` does not match channel `{channel}`")]
    PortMismatch { port: String, channel: String },
    #[error("port `{0}` belongs to more than one channel")]
    SharedPort(String),
    #[error("message alphabet must have between 1 and 255 tokens")]
    BadAlphabet,
    #[error("unknown keyword `{0}`")]
    UnknownKeyword(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("malformed declaration: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {kind}")]
    At { line: usize, kind: ConfigErrorKind },
    #[error("{0}")]
    Invalid(ConfigErrorKind),
}

impl ConfigError {
    pub fn kind(&self) -> &ConfigErrorKind {
        match self {
            ConfigError::At { kind, .. } | ConfigError::Invalid(kind) => kind,
        }
    }
}

impl SysConfig {
    pub fn partition_ids(&self) -> impl Iterator<Item = PartId> + '_ {
        self.partitions.iter().map(|p| p.id)
    }

    /// Scheduler, Transmitter, then partitions in id order.
    pub fn domains(&self) -> Vec<DomainId> {
        let mut out = vec![DomainId::Scheduler, DomainId::Transmitter];
        out.extend(self.partition_ids().map(DomainId::Partition));
        out
    }

    pub fn is_partition(&self, p: PartId) -> bool {
        self.partitions.iter().any(|x| x.id == p)
    }

    pub fn partition_name(&self, p: PartId) -> &str {
        self.partitions
            .iter()
            .find(|x| x.id == p)
            .map(|x| x.name.as_str())
            .unwrap_or("?")
    }

    pub fn domain_name(&self, d: DomainId) -> String {
        match d {
            DomainId::Scheduler => "Scheduler".to_string(),
            DomainId::Transmitter => "Transmitter".to_string(),
            DomainId::Partition(p) => self.partition_name(p).to_string(),
        }
    }

    /// Resolves `Scheduler`, `Transmitter`, a partition name or a numeric partition id.
    pub fn find_domain(&self, name: &str) -> Option<DomainId> {
        match name {
            "Scheduler" => Some(DomainId::Scheduler),
            "Transmitter" => Some(DomainId::Transmitter),
            _ => self.find_partition(name).map(DomainId::Partition),
        }
    }

    pub fn find_partition(&self, name: &str) -> Option<PartId> {
        if let Some(p) = self.partitions.iter().find(|p| p.name == name) {
            return Some(p.id);
        }
        let id: u32 = name.parse().ok()?;
        self.partitions.iter().find(|p| p.id.0 == id).map(|p| p.id)
    }

    pub fn port(&self, r: PortRef) -> &PortConf {
        &self.ports[r.0 as usize]
    }

    pub fn port_refs(&self) -> impl Iterator<Item = PortRef> {
        (0..self.ports.len() as u16).map(PortRef)
    }

    pub fn find_port(&self, name: &str) -> Option<PortRef> {
        self.ports
            .iter()
            .position(|p| p.name == name)
            .map(|i| PortRef(i as u16))
    }

    pub fn channel(&self, c: ChannelRef) -> &ChannelConf {
        &self.channels[c.0 as usize]
    }

    pub fn channel_refs(&self) -> impl Iterator<Item = ChannelRef> {
        (0..self.channels.len() as u16).map(ChannelRef)
    }

    pub fn find_channel(&self, name: &str) -> Option<ChannelRef> {
        self.channels
            .iter()
            .position(|c| c.name == name)
            .map(|i| ChannelRef(i as u16))
    }

    /// The channel a port is an endpoint of.
    pub fn channel_of(&self, r: PortRef) -> Option<&ChannelConf> {
        self.channels
            .iter()
            .find(|c| c.source == r || c.destinations.contains(&r))
    }

    /// Buffer capacity of a port, taken from its channel.
    pub fn capacity(&self, r: PortRef) -> usize {
        self.channel_of(r)
            .map(|c| c.capacity)
            .unwrap_or(self.default_capacity)
    }

    /// All identifiers a port can ever be given under the current strategy.
    pub fn possible_port_ids(&self) -> Vec<PortId> {
        match self.portid_strategy {
            PortIdStrategy::StaticFromConfig => {
                let ids: BTreeSet<PortId> = self.ports.iter().filter_map(|p| p.static_id).collect();
                ids.into_iter().collect()
            }
            PortIdStrategy::RuntimeCounter => {
                (1..=self.ports.len() as u32).map(PortId).collect()
            }
        }
    }

    /// Same configuration under another identifier strategy. Static ids are
    /// kept as assigned at parse time.
    pub fn with_portid_strategy(mut self, strategy: PortIdStrategy) -> Self {
        self.portid_strategy = strategy;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigErrorKind> {
        use ConfigErrorKind as E;
        if self.partitions.is_empty() {
            return Err(E::NoPartitions);
        }
        if self.partitions.len() > MAX_PARTITIONS {
            return Err(E::TooManyPartitions);
        }
        let mut ids = HashSet::new();
        let mut names = HashSet::new();
        for p in &self.partitions {
            if p.name == "Scheduler" || p.name == "Transmitter" {
                return Err(E::ReservedName(p.name.clone()));
            }
            if !ids.insert(p.id) || !names.insert(p.name.as_str()) {
                return Err(E::DuplicatePartition(p.name.clone()));
            }
        }
        if self.message_alphabet_size == 0 {
            return Err(E::BadAlphabet);
        }
        if self.default_capacity == 0 {
            return Err(E::ZeroCapacity("<default>".into()));
        }

        let mut port_names = HashSet::new();
        let mut static_ids = HashSet::new();
        for p in &self.ports {
            if !port_names.insert(p.name.as_str()) {
                return Err(E::DuplicatePort(p.name.clone()));
            }
            if !self.is_partition(p.owner) {
                return Err(E::Dangling(format!("owner of port `{}`", p.name)));
            }
            match p.static_id {
                Some(id) => {
                    if !static_ids.insert(id) {
                        return Err(E::DuplicateStaticId(id.0));
                    }
                }
                None if self.portid_strategy == PortIdStrategy::StaticFromConfig => {
                    return Err(E::MissingStaticId(p.name.clone()));
                }
                None => {}
            }
        }

        let mut channel_names = HashSet::new();
        let mut used = vec![false; self.ports.len()];
        for c in &self.channels {
            if !channel_names.insert(c.name.as_str()) {
                return Err(E::DuplicateChannel(c.name.clone()));
            }
            if c.destinations.is_empty() {
                return Err(E::NoDestination(c.name.clone()));
            }
            if c.mode == PortMode::Queuing && c.destinations.len() != 1 {
                return Err(E::QueuingDestinations {
                    channel: c.name.clone(),
                    count: c.destinations.len(),
                });
            }
            if c.capacity == 0 {
                return Err(E::ZeroCapacity(c.name.clone()));
            }
            let endpoints = std::iter::once((c.source, Direction::Source))
                .chain(c.destinations.iter().map(|&d| (d, Direction::Destination)));
            for (r, dir) in endpoints {
                let Some(port) = self.ports.get(r.0 as usize) else {
                    return Err(E::Dangling(format!("port #{} in channel `{}`", r.0, c.name)));
                };
                if port.mode != c.mode || port.direction != dir {
                    return Err(E::PortMismatch {
                        port: port.name.clone(),
                        channel: c.name.clone(),
                    });
                }
                if std::mem::replace(&mut used[r.0 as usize], true) {
                    return Err(E::SharedPort(port.name.clone()));
                }
            }
            let src_owner = self.port(c.source).owner;
            if c.destinations.iter().any(|&d| self.port(d).owner == src_owner) {
                return Err(E::SelfLoop {
                    channel: c.name.clone(),
                    partition: self.partition_name(src_owner).to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Parses the line-oriented configuration format.
///
/// ```text
/// partition 1 P1
/// partition 2 P2
/// queuingchannel C source=P1.qs dest=P2.qd capacity=1
/// samplingchannel S source=P1.ss dest=P2.sd,P3.sd
/// messages 2
/// portids static
/// ```
///
/// Ports are declared implicitly by the channels that use them. Static ids
/// are assigned 1, 2, ... in order of first appearance.
pub fn parse_config(text: &str) -> Result<SysConfig, ConfigError> {
    use ConfigErrorKind as E;

    let mut cfg = SysConfig {
        partitions: Vec::new(),
        channels: Vec::new(),
        ports: Vec::new(),
        message_alphabet_size: DEFAULT_MESSAGES,
        portid_strategy: PortIdStrategy::StaticFromConfig,
        default_capacity: DEFAULT_CAPACITY,
    };
    // Channel declarations may precede the partitions they mention.
    let mut pending: Vec<(usize, PendingChannel)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let at = |kind| ConfigError::At { line, kind };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut words = content.split_whitespace();
        let keyword = words.next().unwrap_or_default();
        let rest: Vec<&str> = words.collect();
        match keyword {
            "partition" => {
                let [id, name] = rest[..] else {
                    return Err(at(E::Malformed("expected `partition <id> <name>`".into())));
                };
                let id: u32 = id
                    .parse()
                    .map_err(|_| at(E::Malformed(format!("bad partition id `{id}`"))))?;
                if !is_ident(name) {
                    return Err(at(E::Malformed(format!("bad partition name `{name}`"))));
                }
                if cfg.partitions.iter().any(|p| p.id.0 == id || p.name == name) {
                    return Err(at(E::DuplicatePartition(name.to_string())));
                }
                cfg.partitions.push(Partition {
                    id: PartId(id),
                    name: name.to_string(),
                });
            }
            "samplingchannel" | "queuingchannel" => {
                let mode = if keyword == "samplingchannel" {
                    PortMode::Sampling
                } else {
                    PortMode::Queuing
                };
                let pc = parse_channel(mode, &rest).map_err(at)?;
                pending.push((line, pc));
            }
            "messages" => {
                let [k] = rest[..] else {
                    return Err(at(E::Malformed("expected `messages <k>`".into())));
                };
                cfg.message_alphabet_size = match k.parse::<u8>() {
                    Ok(k) if k >= 1 => k,
                    _ => return Err(at(E::BadAlphabet)),
                };
            }
            "portids" => {
                cfg.portid_strategy = match rest[..] {
                    ["static"] => PortIdStrategy::StaticFromConfig,
                    ["counter"] => PortIdStrategy::RuntimeCounter,
                    _ => {
                        return Err(at(E::Malformed("expected `portids static|counter`".into())))
                    }
                };
            }
            other => return Err(at(E::UnknownKeyword(other.to_string()))),
        }
    }

    cfg.partitions.sort_by_key(|p| p.id);
    if cfg.partitions.is_empty() {
        return Err(ConfigError::Invalid(E::NoPartitions));
    }

    for (line, pc) in pending {
        let at = |kind| ConfigError::At { line, kind };
        if cfg.channels.iter().any(|c| c.name == pc.name) {
            return Err(at(E::DuplicateChannel(pc.name)));
        }
        let add_port = |cfg: &mut SysConfig, (part, port): (String, String), dir| {
            let owner = cfg
                .find_partition(&part)
                .ok_or_else(|| E::UnknownPartition(part.clone()))?;
            if cfg.find_port(&port).is_some() {
                return Err(E::DuplicatePort(port));
            }
            let static_id = PortId(cfg.ports.len() as u32 + 1);
            cfg.ports.push(PortConf {
                name: port,
                mode: pc.mode,
                direction: dir,
                owner,
                static_id: Some(static_id),
            });
            Ok(PortRef(cfg.ports.len() as u16 - 1))
        };
        let source = add_port(&mut cfg, pc.source, Direction::Source).map_err(at)?;
        let mut destinations = Vec::new();
        for d in pc.destinations {
            destinations.push(add_port(&mut cfg, d, Direction::Destination).map_err(at)?);
        }
        let channel = ChannelConf {
            name: pc.name,
            mode: pc.mode,
            source,
            destinations,
            capacity: pc.capacity.unwrap_or(match pc.mode {
                PortMode::Sampling => 1,
                PortMode::Queuing => cfg.default_capacity,
            }),
        };
        cfg.channels.push(channel);
        // Per-channel checks get the channel's line number.
        let mut probe = cfg.clone();
        probe.portid_strategy = PortIdStrategy::RuntimeCounter;
        probe.validate().map_err(at)?;
    }

    cfg.validate().map_err(ConfigError::Invalid)?;
    Ok(cfg)
}

struct PendingChannel {
    name: String,
    mode: PortMode,
    source: (String, String),
    destinations: Vec<(String, String)>,
    capacity: Option<usize>,
}

fn parse_channel(mode: PortMode, rest: &[&str]) -> Result<PendingChannel, ConfigErrorKind> {
    use ConfigErrorKind as E;
    let (name, fields) = rest
        .split_first()
        .ok_or_else(|| E::Malformed("channel needs a name".into()))?;
    if !is_ident(name) {
        return Err(E::Malformed(format!("bad channel name `{name}`")));
    }
    let mut source = None;
    let mut destinations = None;
    let mut capacity = None;
    for field in fields {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| E::Malformed(format!("expected key=value, got `{field}`")))?;
        match (key, mode) {
            ("source", _) => source = Some(parse_endpoint(value)?),
            ("dest", _) => {
                destinations = Some(
                    value
                        .split(',')
                        .map(parse_endpoint)
                        .collect::<Result<Vec<_>, _>>()?,
                );
            }
            ("capacity", PortMode::Queuing) => {
                let n: usize = value
                    .parse()
                    .map_err(|_| E::Malformed(format!("bad capacity `{value}`")))?;
                if n == 0 {
                    return Err(E::ZeroCapacity(name.to_string()));
                }
                capacity = Some(n);
            }
            _ => return Err(E::UnknownKey(key.to_string())),
        }
    }
    let destinations = destinations.ok_or_else(|| E::NoDestination(name.to_string()))?;
    if mode == PortMode::Queuing && destinations.len() != 1 {
        return Err(E::QueuingDestinations {
            channel: name.to_string(),
            count: destinations.len(),
        });
    }
    Ok(PendingChannel {
        name: name.to_string(),
        mode,
        source: source.ok_or_else(|| E::Malformed(format!("channel `{name}` has no source")))?,
        destinations,
        capacity,
    })
}

fn parse_endpoint(s: &str) -> Result<(String, String), ConfigErrorKind> {
    match s.split_once('.') {
        Some((part, port)) if !part.is_empty() && is_ident(port) => {
            Ok((part.to_string(), port.to_string()))
        }
        _ => Err(ConfigErrorKind::Malformed(format!(
            "expected <partition>.<port>, got `{s}`"
        ))),
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Renders a configuration back to the text format. Static ids are implied by
/// port order, so `parse_config(render_config(c)) == c` for parsed configs.
pub fn render_config(cfg: &SysConfig) -> String {
    let mut out = String::new();
    for p in &cfg.partitions {
        out.push_str(&format!("partition {} {}\n", p.id.0, p.name));
    }
    let endpoint = |r: PortRef| {
        let port = cfg.port(r);
        format!("{}.{}", cfg.partition_name(port.owner), port.name)
    };
    for c in &cfg.channels {
        let dests: Vec<String> = c.destinations.iter().map(|&d| endpoint(d)).collect();
        match c.mode {
            PortMode::Sampling => out.push_str(&format!(
                "samplingchannel {} source={} dest={}\n",
                c.name,
                endpoint(c.source),
                dests.join(",")
            )),
            PortMode::Queuing => out.push_str(&format!(
                "queuingchannel {} source={} dest={} capacity={}\n",
                c.name,
                endpoint(c.source),
                dests.join(","),
                c.capacity
            )),
        }
    }
    out.push_str(&format!("messages {}\n", cfg.message_alphabet_size));
    out.push_str(match cfg.portid_strategy {
        PortIdStrategy::StaticFromConfig => "portids static\n",
        PortIdStrategy::RuntimeCounter => "portids counter\n",
    });
    out
}

/// The finite event alphabet for bounded exploration: every hypercall over
/// every configured port (by name or by any assignable id) and every message,
/// scheduling of each partition and the transmitter, one transfer per channel
/// and one abstract action token per partition. `Init` is boot-only and
/// excluded.
pub fn instantiate_alphabet(cfg: &SysConfig) -> Vec<Event> {
    let names: Vec<PortRef> = cfg.port_refs().collect();
    let ids = cfg.possible_port_ids();
    let msgs: Vec<Message> = (0..cfg.message_alphabet_size).map(Message).collect();
    let mut out = Vec::new();
    let by_name: [fn(PortRef) -> Event; 4] = [
        Event::CreateSamplingPort,
        Event::GetSamplingPortId,
        Event::CreateQueuingPort,
        Event::GetQueuingPortId,
    ];
    let by_id: [fn(PortId) -> Event; 5] = [
        Event::ReadSamplingMessage,
        Event::GetSamplingPortStatus,
        Event::ReceiveQueuingMessage,
        Event::GetQueuingPortStatus,
        Event::ClearQueuingPort,
    ];
    let with_msg: [fn(PortId, Message) -> Event; 2] =
        [Event::WriteSamplingMessage, Event::SendQueuingMessage];
    for ctor in by_name {
        out.extend(names.iter().map(|&r| ctor(r)));
    }
    for ctor in with_msg {
        for &id in &ids {
            out.extend(msgs.iter().map(|&m| ctor(id, m)));
        }
    }
    for ctor in by_id {
        out.extend(ids.iter().map(|&id| ctor(id)));
    }
    out.extend(cfg.partition_ids().map(|p| Event::Schedule(DomainId::Partition(p))));
    out.push(Event::Schedule(DomainId::Transmitter));
    for c in cfg.channel_refs() {
        out.push(match cfg.channel(c).mode {
            PortMode::Sampling => Event::TransferSampling(c),
            PortMode::Queuing => Event::TransferQueuing(c),
        });
    }
    out.extend((0..cfg.partitions.len() as u8).map(Event::PartitionAction));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const CFG1: &str = "\
partition 1 P1
partition 2 P2
queuingchannel C source=P1.qs dest=P2.qd capacity=1
messages 2
";

    #[test]
    fn parses_cfg1() {
        let cfg = parse_config(CFG1).unwrap();
        assert_eq!(cfg.partitions.len(), 2);
        assert_eq!(cfg.channels.len(), 1);
        assert_eq!(cfg.ports.len(), 2);
        let qs = cfg.port(cfg.find_port("qs").unwrap());
        assert_eq!(qs.direction, Direction::Source);
        assert_eq!(qs.owner, PartId(1));
        assert_eq!(qs.static_id, Some(PortId(1)));
        let qd = cfg.port(cfg.find_port("qd").unwrap());
        assert_eq!(qd.owner, PartId(2));
        assert_eq!(cfg.channels[0].capacity, 1);
        assert_eq!(cfg.portid_strategy, PortIdStrategy::StaticFromConfig);
        assert_eq!(parse_config(&render_config(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn rejects_empty_partition_list() {
        let err = parse_config("messages 2\n").unwrap_err();
        assert_eq!(err.kind(), &ConfigErrorKind::NoPartitions);
        assert_eq!(err.to_string(), "no partitions");
    }

    #[test]
    fn rejects_multicast_queuing() {
        let err = parse_config(
            "partition 1 A\npartition 2 B\npartition 3 C\n\
             queuingchannel Q source=A.s dest=B.d,C.d2 capacity=1\n",
        )
        .unwrap_err();
        assert!(matches!(
            err,
            ConfigError::At { line: 4, kind: ConfigErrorKind::QueuingDestinations { count: 2, .. } }
        ));
    }

    #[test]
    fn rejects_bad_declarations() {
        let cases = [
            ("partition 1 A\npartition 2 B\nqueuingchannel Q source=A.p dest=B.d capacity=0\n", 3),
            ("partition 1 A\npartition 2 B\nqueuingchannel Q source=A.p dest=X.d\n", 3),
            ("partition 1 A\npartition 2 B\nsamplingchannel S source=A.p dest=B.p\n", 3),
            ("partition 1 A\npartition 2 B\nsamplingchannel S source=A.p dest=A.q\n", 3),
            ("partition 1 A\nfrobnicate 3\n", 2),
            ("partition 1 A\npartition 2 B\nsamplingchannel S source=A.p dest=B.q capacity=2\n", 3),
            ("partition 1 A\npartition 1 B\n", 2),
            ("partition 1 A\nmessages 0\n", 2),
        ];
        for (text, line) in cases {
            match parse_config(text) {
                Err(ConfigError::At { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("expected line error for {text:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn duplicate_static_id_is_caught_by_validation() {
        let mut cfg = parse_config(CFG1).unwrap();
        cfg.ports[1].static_id = Some(PortId(1));
        assert_eq!(cfg.validate(), Err(ConfigErrorKind::DuplicateStaticId(1)));
    }

    #[test]
    fn comments_and_counter_strategy() {
        let cfg = parse_config(&format!("# two partitions\n{CFG1}portids counter # runtime ids\n")).unwrap();
        assert_eq!(cfg.portid_strategy, PortIdStrategy::RuntimeCounter);
        assert_eq!(cfg.possible_port_ids(), vec![PortId(1), PortId(2)]);
    }

    #[test]
    fn cfg1_alphabet() {
        let cfg = parse_config(CFG1).unwrap();
        let alpha = instantiate_alphabet(&cfg);
        let qs = cfg.port(cfg.find_port("qs").unwrap()).static_id.unwrap();
        let p = |n| DomainId::Partition(PartId(n));
        for e in [
            Event::SendQueuingMessage(qs, Message(0)),
            Event::SendQueuingMessage(qs, Message(1)),
            Event::Schedule(p(1)),
            Event::Schedule(p(2)),
            Event::Schedule(DomainId::Transmitter),
            Event::TransferQueuing(ChannelRef(0)),
        ] {
            assert!(alpha.contains(&e), "{e:?}");
        }
        // 4 by name x 2 ports, 2 with message x 2 ids x 2 messages, 5 by id x 2,
        // 3 schedules, 1 transfer, 2 actions.
        assert_eq!(alpha.len(), 8 + 8 + 10 + 3 + 1 + 2);
        assert!(!alpha.contains(&Event::Init));
        assert!(!alpha.contains(&Event::Schedule(DomainId::Scheduler)));
    }

    #[test]
    fn alphabet_without_channels_or_extra_messages() {
        let cfg = parse_config("partition 1 A\npartition 2 B\n").unwrap();
        let alpha = instantiate_alphabet(&cfg);
        assert!(alpha
            .iter()
            .all(|e| !matches!(e, Event::TransferQueuing(_) | Event::TransferSampling(_))));

        let cfg = parse_config(&format!("{CFG1}messages 1\n")).unwrap();
        let msgs: BTreeSet<Message> = instantiate_alphabet(&cfg)
            .into_iter()
            .filter_map(|e| match e {
                Event::SendQueuingMessage(_, m) | Event::WriteSamplingMessage(_, m) => Some(m),
                _ => None,
            })
            .collect();
        assert_eq!(msgs.into_iter().collect::<Vec<_>>(), vec![Message(0)]);
    }

    #[test]
    fn channel_may_precede_partitions() {
        let cfg = parse_config("queuingchannel C source=1.a dest=2.b\npartition 2 B\npartition 1 A\n").unwrap();
        assert_eq!(cfg.partitions[0].name, "A");
        assert_eq!(cfg.channels[0].capacity, DEFAULT_CAPACITY);
    }
}
