//! Textual form of events: `Send_Queuing_Message(1,m0)`, `Schedule(P2)`,
//! `Transfer_Queuing_Message(C)`. Trace lines prefix the executing domain.

use thiserror::Error;

use super::{Event, EventKind, Message};
use crate::config::{DomainId, PortId, SysConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventParseError {
    #[error("malformed event `{0}`")]
    Malformed(String),
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("`{event}` expects {expected} argument(s)")]
    Arity { event: String, expected: usize },
    #[error("unknown port `{0}`")]
    UnknownPort(String),
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error("bad argument `{0}`")]
    BadArgument(String),
}

pub fn render_event(cfg: &SysConfig, e: &Event) -> String {
    let name = e.kind().name();
    let port = |r| cfg.port(r).name.clone();
    let args = match *e {
        Event::CreateSamplingPort(r)
        | Event::CreateQueuingPort(r)
        | Event::GetSamplingPortId(r)
        | Event::GetQueuingPortId(r) => port(r),
        Event::WriteSamplingMessage(id, m) | Event::SendQueuingMessage(id, m) => {
            format!("{id},{m}")
        }
        Event::ReadSamplingMessage(id)
        | Event::GetSamplingPortStatus(id)
        | Event::ReceiveQueuingMessage(id)
        | Event::GetQueuingPortStatus(id)
        | Event::ClearQueuingPort(id) => id.to_string(),
        Event::Schedule(d) => cfg.domain_name(d),
        Event::TransferSampling(c) | Event::TransferQueuing(c) => cfg.channel(c).name.clone(),
        Event::PartitionAction(t) => format!("t{t}"),
        Event::Init => return name.to_string(),
    };
    format!("{name}({args})")
}

/// `Domain: Event(args)`.
pub fn render_trace_line(cfg: &SysConfig, domain: DomainId, e: &Event) -> String {
    format!("{}: {}", cfg.domain_name(domain), render_event(cfg, e))
}

/// Events joined with `;`.
pub fn render_events(cfg: &SysConfig, events: &[Event]) -> String {
    events
        .iter()
        .map(|e| render_event(cfg, e))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn parse_events(cfg: &SysConfig, text: &str) -> Result<Vec<Event>, EventParseError> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_event(cfg, s))
        .collect()
}

/// Parses one event. A leading `Domain:` trace prefix is accepted and ignored.
pub fn parse_event(cfg: &SysConfig, text: &str) -> Result<Event, EventParseError> {
    let text = text.trim();
    let text = match text.split_once(": ") {
        Some((_, rest)) => rest.trim(),
        None => text,
    };
    let (name, args) = match text.split_once('(') {
        Some((name, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| EventParseError::Malformed(text.to_string()))?;
            let args: Vec<&str> = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(str::trim).collect()
            };
            (name.trim(), args)
        }
        None => (text, Vec::new()),
    };
    let kind = EventKind::from_name(name)
        .ok_or_else(|| EventParseError::UnknownEvent(name.to_string()))?;
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(EventParseError::Arity {
                event: name.to_string(),
                expected: n,
            })
        }
    };
    let port = |s: &str| cfg.find_port(s).ok_or_else(|| EventParseError::UnknownPort(s.to_string()));
    let id = |s: &str| {
        s.parse::<u32>()
            .map(PortId)
            .map_err(|_| EventParseError::BadArgument(s.to_string()))
    };
    let msg = |s: &str| {
        s.strip_prefix('m')
            .and_then(|n| n.parse::<u8>().ok())
            .map(Message)
            .ok_or_else(|| EventParseError::BadArgument(s.to_string()))
    };
    let channel = |s: &str| {
        cfg.find_channel(s)
            .ok_or_else(|| EventParseError::UnknownChannel(s.to_string()))
    };

    use EventKind as K;
    let event = match kind {
        K::CreateSamplingPort => {
            arity(1)?;
            Event::CreateSamplingPort(port(args[0])?)
        }
        K::CreateQueuingPort => {
            arity(1)?;
            Event::CreateQueuingPort(port(args[0])?)
        }
        K::GetSamplingPortId => {
            arity(1)?;
            Event::GetSamplingPortId(port(args[0])?)
        }
        K::GetQueuingPortId => {
            arity(1)?;
            Event::GetQueuingPortId(port(args[0])?)
        }
        K::WriteSamplingMessage => {
            arity(2)?;
            Event::WriteSamplingMessage(id(args[0])?, msg(args[1])?)
        }
        K::SendQueuingMessage => {
            arity(2)?;
            Event::SendQueuingMessage(id(args[0])?, msg(args[1])?)
        }
        K::ReadSamplingMessage => {
            arity(1)?;
            Event::ReadSamplingMessage(id(args[0])?)
        }
        K::GetSamplingPortStatus => {
            arity(1)?;
            Event::GetSamplingPortStatus(id(args[0])?)
        }
        K::ReceiveQueuingMessage => {
            arity(1)?;
            Event::ReceiveQueuingMessage(id(args[0])?)
        }
        K::GetQueuingPortStatus => {
            arity(1)?;
            Event::GetQueuingPortStatus(id(args[0])?)
        }
        K::ClearQueuingPort => {
            arity(1)?;
            Event::ClearQueuingPort(id(args[0])?)
        }
        K::Schedule => {
            arity(1)?;
            let d = cfg
                .find_domain(args[0])
                .ok_or_else(|| EventParseError::UnknownDomain(args[0].to_string()))?;
            Event::Schedule(d)
        }
        K::TransferSampling => {
            arity(1)?;
            Event::TransferSampling(channel(args[0])?)
        }
        K::TransferQueuing => {
            arity(1)?;
            Event::TransferQueuing(channel(args[0])?)
        }
        K::PartitionAction => {
            arity(1)?;
            let t = args[0]
                .strip_prefix('t')
                .and_then(|n| n.parse::<u8>().ok())
                .ok_or_else(|| EventParseError::BadArgument(args[0].to_string()))?;
            Event::PartitionAction(t)
        }
        K::Init => {
            arity(0)?;
            Event::Init
        }
    };
    Ok(event)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, ChannelRef, PartId, PortRef};

    #[test]
    fn renders_and_parses() {
        let cfg = parse_config(
            "partition 1 P1\npartition 2 P2\nqueuingchannel C source=P1.qs dest=P2.qd capacity=1\n",
        )
        .unwrap();
        let events = [
            Event::SendQueuingMessage(PortId(1), Message(0)),
            Event::CreateQueuingPort(PortRef(1)),
            Event::Schedule(DomainId::Partition(PartId(2))),
            Event::Schedule(DomainId::Transmitter),
            Event::TransferQueuing(ChannelRef(0)),
            Event::PartitionAction(1),
            Event::Init,
        ];
        let text = render_events(&cfg, &events);
        assert_eq!(
            text,
            "Send_Queuing_Message(1,m0);Create_Queuing_Port(qd);Schedule(P2);\
             Schedule(Transmitter);Transfer_Queuing_Message(C);Partition_Action(t1);Init"
        );
        assert_eq!(parse_events(&cfg, &text).unwrap(), events);
        assert_eq!(
            parse_event(&cfg, "P1: Send_Queuing_Message(1, m0)").unwrap(),
            events[0]
        );
        assert!(parse_event(&cfg, "Send_Queuing_Message(1)").is_err());
        assert!(parse_event(&cfg, "Create_Queuing_Port(nope)").is_err());
        assert!(parse_event(&cfg, "Fly(1)").is_err());
    }
}
