//! What each domain can observe of a state.
//!
//! Two states are equivalent for a domain iff the domain's [`View`]s of them
//! are equal. A partition sees its locals, its mode, which of its ports exist
//! and the contents of its destination ports; it does not see its own source
//! buffers. The scheduler sees the running domain. The transmitter sees the
//! created ports and the source buffers it drains (or, with
//! [`TransmitterView::Full`], every buffer).

use std::fmt::Write as _;

use crate::config::{Direction, DomainId, PortId, PortRef, SysConfig};
use crate::kernel::{LocalStore, PartitionMode, PortBuffer, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TransmitterView {
    #[default]
    SourceOnly,
    Full,
}

impl TransmitterView {
    pub fn name(self) -> &'static str {
        match self {
            TransmitterView::SourceOnly => "source-only",
            TransmitterView::Full => "full",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum View {
    Partition {
        locals: LocalStore,
        mode: Option<PartitionMode>,
        ports: Vec<(PortRef, PortId)>,
        buffers: Vec<(PortRef, PortBuffer)>,
    },
    Scheduler {
        locals: LocalStore,
        current: DomainId,
    },
    Transmitter {
        locals: LocalStore,
        created: Vec<(PortRef, PortId)>,
        buffers: Vec<(PortRef, PortBuffer)>,
    },
}

pub fn view(cfg: &SysConfig, tv: TransmitterView, s: &State, d: DomainId) -> View {
    let locals = s.local(d).clone();
    match d {
        DomainId::Scheduler => View::Scheduler {
            locals,
            current: s.current,
        },
        DomainId::Transmitter => {
            let created = s.comm.ids_by_name.iter().map(|(&r, &id)| (r, id)).collect();
            let buffers = s
                .comm
                .ports
                .values()
                .filter(|p| {
                    tv == TransmitterView::Full || cfg.port(p.port).direction == Direction::Source
                })
                .map(|p| (p.port, p.buffer.clone()))
                .collect();
            View::Transmitter {
                locals,
                created,
                buffers,
            }
        }
        DomainId::Partition(part) => {
            let owned = s
                .comm
                .ports
                .iter()
                .filter(|(id, _)| s.comm.port_owner.get(id) == Some(&part));
            let mut ports = Vec::new();
            let mut buffers = Vec::new();
            for (&id, p) in owned {
                ports.push((p.port, id));
                if cfg.port(p.port).direction == Direction::Destination {
                    buffers.push((p.port, p.buffer.clone()));
                }
            }
            ports.sort();
            buffers.sort();
            View::Partition {
                locals,
                mode: s.part_mode.get(&part).copied(),
                ports,
                buffers,
            }
        }
    }
}

/// `s ~d~ t`.
pub fn vpeq(cfg: &SysConfig, tv: TransmitterView, s: &State, d: DomainId, t: &State) -> bool {
    view(cfg, tv, s, d) == view(cfg, tv, t, d)
}

/// `s ≈D≈ t`: equivalent for every domain in `ds`.
pub fn vpeq_set<'a>(
    cfg: &SysConfig,
    tv: TransmitterView,
    s: &State,
    ds: impl IntoIterator<Item = &'a DomainId>,
    t: &State,
) -> bool {
    ds.into_iter().all(|&d| vpeq(cfg, tv, s, d, t))
}

/// The first view component on which `s` and `t` differ for `d`.
pub fn view_diff(
    cfg: &SysConfig,
    tv: TransmitterView,
    s: &State,
    d: DomainId,
    t: &State,
) -> Option<String> {
    let who = cfg.domain_name(d);
    let ports = |ps: &[(PortRef, PortId)]| {
        let items: Vec<String> = ps
            .iter()
            .map(|(r, id)| format!("{}#{}", cfg.port(*r).name, id))
            .collect();
        format!("{{{}}}", items.join(","))
    };
    let buffers = |a: &[(PortRef, PortBuffer)], b: &[(PortRef, PortBuffer)]| -> Option<String> {
        let mut out = String::new();
        let names: std::collections::BTreeSet<PortRef> =
            a.iter().chain(b).map(|(r, _)| *r).collect();
        for r in names {
            let find = |xs: &[(PortRef, PortBuffer)]| {
                xs.iter()
                    .find(|(x, _)| *x == r)
                    .map_or("<uncreated>".to_string(), |(_, buf)| buf.to_string())
            };
            let (l, rr) = (find(a), find(b));
            if l != rr {
                let _ = write!(out, "{who} buffer {}: {l} vs {rr}", cfg.port(r).name);
                return Some(out);
            }
        }
        None
    };
    match (view(cfg, tv, s, d), view(cfg, tv, t, d)) {
        (a, b) if a == b => None,
        (
            View::Scheduler { locals: la, current: ca },
            View::Scheduler { locals: lb, current: cb },
        ) => Some(if la != lb {
            format!("{who} locals: {la} vs {lb}")
        } else {
            format!(
                "{who} current: {} vs {}",
                cfg.domain_name(ca),
                cfg.domain_name(cb)
            )
        }),
        (
            View::Transmitter { locals: la, created: ca, buffers: ba },
            View::Transmitter { locals: lb, created: cb, buffers: bb },
        ) => Some(if la != lb {
            format!("{who} locals: {la} vs {lb}")
        } else if ca != cb {
            format!("{who} created ports: {} vs {}", ports(&ca), ports(&cb))
        } else {
            buffers(&ba, &bb).unwrap_or_else(|| format!("{who} view differs"))
        }),
        (
            View::Partition { locals: la, mode: ma, ports: pa, buffers: ba },
            View::Partition { locals: lb, mode: mb, ports: pb, buffers: bb },
        ) => Some(if la != lb {
            format!("{who} locals: {la} vs {lb}")
        } else if ma != mb {
            format!("{who} mode: {ma:?} vs {mb:?}")
        } else if pa != pb {
            format!("{who} ports: {} vs {}", ports(&pa), ports(&pb))
        } else {
            buffers(&ba, &bb).unwrap_or_else(|| format!("{who} view differs"))
        }),
        _ => Some(format!("{who} view differs")),
    }
}
