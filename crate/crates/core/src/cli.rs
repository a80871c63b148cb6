//! The `sepkern` command line: `run` analyses a configuration, `replay`
//! re-checks a single recorded counterexample.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::checker::{
    check_invariants, explore, hoare_cases, implication_audit, run_hoare_suite,
    verify_properties, verify_unwinding, BoundedLimits, CheckError, Counterexample, KindVerdict,
    DEFAULT_BUDGET, DEFAULT_MAX_SEQUENCES,
};
use crate::config::{parse_config, PortIdStrategy, SysConfig};
use crate::equivalence::TransmitterView;
use crate::kernel::{parse_event, parse_events, render_event, render_events, SemanticsVariant};
use crate::model::Model;
use crate::security::{Instance, PropertyId, Verdict};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "sepkern", version, about = "Information-flow checker for a partitioned separation kernel model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Explore a configuration and run the requested checks.
    Run(RunArgs),
    /// Re-check one counterexample printed by `run`.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Semantics {
    Arinc,
    Fixed,
}

impl Semantics {
    pub fn variant(self) -> SemanticsVariant {
        match self {
            Semantics::Arinc => SemanticsVariant::ARINC,
            Semantics::Fixed => SemanticsVariant::FIXED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PortIds {
    Static,
    Counter,
}

impl PortIds {
    fn strategy(self) -> PortIdStrategy {
        match self {
            PortIds::Static => PortIdStrategy::StaticFromConfig,
            PortIds::Counter => PortIdStrategy::RuntimeCounter,
        }
    }

    fn of(s: PortIdStrategy) -> Self {
        match s {
            PortIdStrategy::StaticFromConfig => PortIds::Static,
            PortIdStrategy::RuntimeCounter => PortIds::Counter,
        }
    }

    fn name(self) -> &'static str {
        match self {
            PortIds::Static => "static",
            PortIds::Counter => "counter",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TView {
    SourceOnly,
    Full,
}

impl TView {
    fn view(self) -> TransmitterView {
        match self {
            TView::SourceOnly => TransmitterView::SourceOnly,
            TView::Full => TransmitterView::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, clap::Args)]
pub struct ModelArgs {
    /// System configuration file.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum, default_value = "fixed")]
    pub semantics: Semantics,
    /// Port identifier assignment; overrides the configuration file.
    #[arg(long, value_enum)]
    pub portids: Option<PortIds>,
    #[arg(long = "transmitter-view", value_enum, default_value = "source-only")]
    pub transmitter_view: TView,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// `all`, or a comma-separated subset of reach,invariants,hoare,unwinding,properties.
    #[arg(long, default_value = "all")]
    pub checks: String,
    /// Longest event sequence for the bounded properties.
    #[arg(long, default_value_t = 2)]
    pub bound: usize,
    /// Maximum number of reachable states.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    /// Maximum number of event sequences for the bounded properties.
    #[arg(long = "max-sequences", default_value_t = DEFAULT_MAX_SEQUENCES)]
    pub max_sequences: usize,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Report wall-clock time (makes output vary between runs).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, clap::Args)]
pub struct ReplayArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub property: String,
    #[arg(long)]
    pub observer: String,
    #[arg(long = "prefix-a", default_value = "")]
    pub prefix_a: String,
    #[arg(long = "prefix-b", default_value = "")]
    pub prefix_b: String,
    #[arg(long)]
    pub event: Option<String>,
    #[arg(long = "run-a", default_value = "")]
    pub run_a: String,
    #[arg(long = "run-b", default_value = "")]
    pub run_b: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckSet {
    pub reach: bool,
    pub invariants: bool,
    pub hoare: bool,
    pub unwinding: bool,
    pub properties: bool,
}

pub fn parse_checks(text: &str) -> Result<CheckSet, String> {
    let mut set = CheckSet {
        reach: false,
        invariants: false,
        hoare: false,
        unwinding: false,
        properties: false,
    };
    for item in text.split(',').map(str::trim) {
        match item {
            "all" => {
                set = CheckSet {
                    reach: true,
                    invariants: true,
                    hoare: true,
                    unwinding: true,
                    properties: true,
                }
            }
            "reach" => set.reach = true,
            "invariants" => set.invariants = true,
            "hoare" => set.hoare = true,
            "unwinding" => set.unwinding = true,
            "properties" => set.properties = true,
            other => return Err(format!("unknown check `{other}`")),
        }
    }
    Ok(set)
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub config: String,
    pub variant: VariantReport,
    pub checks: Vec<CheckReport>,
    pub stats: Stats,
}

#[derive(Debug, Serialize)]
pub struct VariantReport {
    pub semantics: &'static str,
    pub send: crate::kernel::SendMode,
    pub transfer: crate::kernel::TransferMode,
    pub portids: &'static str,
    pub transmitter_view: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Stats {
    pub states: usize,
    pub pairs: u64,
    pub wallclock_ms: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub holds: bool,
    pub bound: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub per_event: Vec<EventRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cases: Vec<CaseRow>,
}

#[derive(Debug, Serialize)]
pub struct EventRow {
    pub event: &'static str,
    pub events: usize,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessReport>,
}

#[derive(Debug, Serialize)]
pub struct CaseRow {
    pub name: &'static str,
    pub event: &'static str,
    pub checked: usize,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub property: &'static str,
    pub observer: String,
    pub prefix_a: Vec<String>,
    pub prefix_b: Vec<String>,
    pub event: Option<String>,
    pub run_a: Vec<String>,
    pub run_b: Vec<String>,
    pub diff: String,
    pub length: usize,
    pub replay: String,
}

fn shell_quote(arg: &str) -> String {
    let plain = !arg.is_empty()
        && arg
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "_-./:=,".contains(c));
    if plain {
        arg.to_string()
    } else {
        format!("'{}'", arg.replace('\'', r"'\''"))
    }
}

struct Context<'a> {
    cfg_path: &'a str,
    model: &'a Model,
    semantics: Semantics,
    portids: PortIds,
    tview: TView,
}

impl Context<'_> {
    fn witness(&self, cx: &Counterexample) -> WitnessReport {
        let cfg = &self.model.cfg;
        let names = |es: &[crate::kernel::Event]| es.iter().map(|e| render_event(cfg, e)).collect();
        let mut cmd = vec![
            "sepkern".to_string(),
            "replay".to_string(),
            "--config".to_string(),
            self.cfg_path.to_string(),
            "--semantics".to_string(),
            self.semantics.to_possible_value().unwrap().get_name().to_string(),
            "--portids".to_string(),
            self.portids.name().to_string(),
            "--transmitter-view".to_string(),
            self.tview.to_possible_value().unwrap().get_name().to_string(),
        ];
        cmd.extend(cx.replay_args(cfg));
        WitnessReport {
            property: cx.kind.name(),
            observer: cfg.domain_name(cx.observer),
            prefix_a: names(&cx.prefix_a),
            prefix_b: names(&cx.prefix_b),
            event: cx.event.map(|e| render_event(cfg, &e)),
            run_a: names(&cx.run_a),
            run_b: names(&cx.run_b),
            diff: cx.diff.clone(),
            length: cx.total_events(),
            replay: cmd.iter().map(|a| shell_quote(a)).collect::<Vec<_>>().join(" "),
        }
    }

    fn verdict(&self, v: &Verdict) -> CheckReport {
        CheckReport {
            name: v.property.name().to_string(),
            holds: v.holds,
            bound: v.bound,
            witness: v.witness.as_ref().map(|w| self.witness(w)),
            detail: None,
            per_event: Vec::new(),
            cases: Vec::new(),
        }
    }

    fn unwinding(&self, v: &Verdict, rows: &[KindVerdict]) -> CheckReport {
        fn pick(p: PropertyId, k: &KindVerdict) -> Option<&Counterexample> {
            match p {
                PropertyId::LocalRespect => k.local_respect.as_ref(),
                _ => k.weak_step_consistent.as_ref(),
            }
        }
        let pick = |k| pick(v.property, k);
        let mut report = self.verdict(v);
        report.per_event = rows
            .iter()
            .map(|k| EventRow {
                event: k.kind.name(),
                events: k.events,
                holds: pick(k).is_none(),
                witness: pick(k).map(|w| self.witness(w)),
            })
            .collect();
        report
    }
}

fn load_model(args: &ModelArgs) -> Result<(Model, PortIds), String> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read {}: {e}", args.config.display()))?;
    let mut cfg: SysConfig =
        parse_config(&text).map_err(|e| format!("{}: {e}", args.config.display()))?;
    if let Some(p) = args.portids {
        cfg = cfg.with_portid_strategy(p.strategy());
    }
    let portids = PortIds::of(cfg.portid_strategy);
    let model = Model::new(cfg, args.semantics.variant(), args.transmitter_view.view());
    Ok((model, portids))
}

/// Runs the analyses and builds the report. Errors are usage, configuration
/// or budget problems.
pub fn build_report(args: &RunArgs) -> Result<Report, String> {
    let started = Instant::now();
    let checks = parse_checks(&args.checks)?;
    let (model, portids) = load_model(&args.model)?;
    let cfg_path = args.model.config.display().to_string();
    let ctx = Context {
        cfg_path: &cfg_path,
        model: &model,
        semantics: args.model.semantics,
        portids,
        tview: args.model.transmitter_view,
    };
    let fmt_err = |e: CheckError| e.to_string();
    let rs = explore(&model, args.budget).map_err(fmt_err)?;
    let mut out = Vec::new();

    if checks.reach {
        out.push(CheckReport {
            name: "reach".into(),
            holds: true,
            bound: None,
            witness: None,
            detail: Some(format!("{} states, {} events in the alphabet", rs.len(), model.alphabet.len())),
            per_event: Vec::new(),
            cases: Vec::new(),
        });
    }
    if checks.invariants {
        let r = check_invariants(&model, &rs);
        let detail = match &r.failure {
            None => format!("{} states checked", r.states_checked),
            Some(f) => format!(
                "state {} breaks {} (reached by {})",
                f.state,
                f.violated.iter().map(|i| i.name()).collect::<Vec<_>>().join(","),
                render_events(&model.cfg, &f.prefix)
            ),
        };
        out.push(CheckReport {
            name: "invariants".into(),
            holds: r.holds,
            bound: None,
            witness: None,
            detail: Some(detail),
            per_event: Vec::new(),
            cases: Vec::new(),
        });
    }
    if checks.hoare {
        let results = run_hoare_suite(&model, &rs, &hoare_cases());
        let instances: usize = results.iter().map(|r| r.checked).sum();
        out.push(CheckReport {
            name: "hoare".into(),
            holds: results.iter().all(|r| r.holds),
            bound: None,
            witness: None,
            detail: Some(format!("{} cases, {instances} instances", results.len())),
            per_event: Vec::new(),
            cases: results
                .iter()
                .map(|r| CaseRow {
                    name: r.name,
                    event: r.kind.name(),
                    checked: r.checked,
                    holds: r.holds,
                    failure: r.failure.map(|(i, e)| {
                        format!(
                            "{} after {}",
                            render_event(&model.cfg, &e),
                            render_events(&model.cfg, &rs.prefix(&model, i))
                        )
                    }),
                })
                .collect(),
        });
    }
    let mut verdicts = Vec::new();
    if checks.unwinding {
        let u = verify_unwinding(&model, &rs);
        out.push(ctx.unwinding(&u.local_respect, &u.per_kind));
        out.push(ctx.unwinding(&u.weak_step_consistent, &u.per_kind));
        verdicts.push(u.local_respect);
        verdicts.push(u.weak_step_consistent);
    }
    if checks.properties {
        let limits = BoundedLimits {
            max_sequences: args.max_sequences,
        };
        let vs = verify_properties(&model, &rs, &PropertyId::BOUNDED, args.bound, limits)
            .map_err(fmt_err)?;
        out.extend(vs.iter().map(|v| ctx.verdict(v)));
        verdicts.extend(vs);
        let broken = implication_audit(&verdicts);
        out.push(CheckReport {
            name: "implications".into(),
            holds: broken.is_empty(),
            bound: Some(args.bound),
            witness: None,
            detail: Some(if broken.is_empty() {
                "verdicts respect every recorded implication".into()
            } else {
                broken
                    .iter()
                    .map(|i| {
                        let premises: Vec<_> = i.premises.iter().map(|p| p.name()).collect();
                        format!("{} => {}", premises.join(" & "), i.conclusion)
                    })
                    .collect::<Vec<_>>()
                    .join("; ")
            }),
            per_event: Vec::new(),
            cases: Vec::new(),
        });
    }

    let v = model.variant;
    Ok(Report {
        config: cfg_path.clone(),
        variant: VariantReport {
            semantics: v.name(),
            send: v.send_mode,
            transfer: v.transfer_mode,
            portids: portids.name(),
            transmitter_view: model.tview.name(),
        },
        checks: out,
        stats: Stats {
            states: rs.len(),
            pairs: rs.pairs(),
            wallclock_ms: args.timing.then(|| started.elapsed().as_millis() as u64),
        },
    })
}

fn render_witness(out: &mut String, w: &WitnessReport, indent: &str) {
    let seq = |xs: &[String]| {
        if xs.is_empty() {
            "(boot)".to_string()
        } else {
            xs.join("; ")
        }
    };
    out.push_str(&format!("{indent}observer: {}\n", w.observer));
    out.push_str(&format!("{indent}prefix a: {}\n", seq(&w.prefix_a)));
    if !w.prefix_b.is_empty() || w.property == "weak_step_consistent" {
        out.push_str(&format!("{indent}prefix b: {}\n", seq(&w.prefix_b)));
    }
    if let Some(e) = &w.event {
        out.push_str(&format!("{indent}event:    {e}\n"));
    }
    if w.event.is_none() {
        out.push_str(&format!("{indent}run a:    {}\n", w.run_a.join("; ")));
        out.push_str(&format!("{indent}run b:    {}\n", w.run_b.join("; ")));
    }
    out.push_str(&format!("{indent}diff:     {}\n", w.diff));
    out.push_str(&format!("{indent}replay:   {}\n", w.replay));
}

pub fn render_text(r: &Report) -> String {
    let mut out = String::new();
    out.push_str(&format!("config: {}\n", r.config));
    out.push_str(&format!(
        "variant: semantics={} send={:?} transfer={:?} portids={} transmitter-view={}\n",
        r.variant.semantics, r.variant.send, r.variant.transfer, r.variant.portids, r.variant.transmitter_view
    ));
    out.push_str(&format!("states: {}  pairs: {}\n", r.stats.states, r.stats.pairs));
    if let Some(ms) = r.stats.wallclock_ms {
        out.push_str(&format!("wallclock: {ms} ms\n"));
    }
    for c in &r.checks {
        let mark = if c.holds { "PASS" } else { "FAIL" };
        let bound = c.bound.map(|b| format!(" (L={b})")).unwrap_or_default();
        let detail = c.detail.as_deref().map(|d| format!(": {d}")).unwrap_or_default();
        out.push_str(&format!("\n[{mark}] {}{bound}{detail}\n", c.name));
        for case in c.cases.iter().filter(|x| !x.holds) {
            out.push_str(&format!(
                "    case {} ({}) fails: {}\n",
                case.name,
                case.event,
                case.failure.as_deref().unwrap_or("")
            ));
        }
        if !c.per_event.is_empty() {
            for row in &c.per_event {
                out.push_str(&format!(
                    "    {:<28} {:>4} events  {}\n",
                    row.event,
                    row.events,
                    if row.holds { "pass" } else { "FAIL" }
                ));
            }
            for row in &c.per_event {
                if let Some(w) = &row.witness {
                    out.push_str(&format!("  counterexample on {} ({} events):\n", row.event, w.length));
                    render_witness(&mut out, w, "    ");
                }
            }
        } else if let Some(w) = &c.witness {
            out.push_str(&format!("  counterexample ({} events):\n", w.length));
            render_witness(&mut out, w, "    ");
        }
    }
    out
}

fn run(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let report = match build_report(args) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    };
    let text = match args.format {
        Format::Text => render_text(&report),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            s
        }
    };
    let _ = out.write_all(text.as_bytes());
    if report.checks.iter().all(|c| c.holds) {
        EXIT_PASS
    } else {
        EXIT_VIOLATION
    }
}

/// Builds the counterexample described by replay flags.
pub fn counterexample_from_args(model: &Model, args: &ReplayArgs) -> Result<Counterexample, String> {
    let cfg = &model.cfg;
    let kind = PropertyId::from_name(&args.property)
        .ok_or_else(|| format!("unknown property `{}`", args.property))?;
    let observer = cfg
        .find_domain(&args.observer)
        .ok_or_else(|| format!("unknown domain `{}`", args.observer))?;
    let events = |s: &str| parse_events(cfg, s).map_err(|e| e.to_string());
    Ok(Counterexample {
        kind,
        prefix_a: events(&args.prefix_a)?,
        prefix_b: events(&args.prefix_b)?,
        event: args
            .event
            .as_deref()
            .map(|e| parse_event(cfg, e))
            .transpose()
            .map_err(|e| e.to_string())?,
        run_a: events(&args.run_a)?,
        run_b: events(&args.run_b)?,
        observer,
        diff: String::new(),
    })
}

fn replay(args: &ReplayArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = load_model(&args.model).and_then(|(model, _)| {
        let cx = counterexample_from_args(&model, args)?;
        Ok(cx.replay(&model))
    });
    match result {
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
        Ok(Instance::Violated(diff)) => {
            let _ = writeln!(out, "{} violated: {diff}", args.property);
            EXIT_VIOLATION
        }
        Ok(Instance::Holds) => {
            let _ = writeln!(out, "{} holds on this instance", args.property);
            EXIT_PASS
        }
        Ok(Instance::Vacuous) => {
            let _ = writeln!(out, "{}: antecedent does not hold, nothing to check", args.property);
            EXIT_PASS
        }
    }
}

/// Entry point shared by the binary and the tests.
pub fn main_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            if e.use_stderr() {
                let _ = write!(err, "{e}");
            } else {
                let _ = write!(out, "{e}");
            }
            return code;
        }
    };
    match &cli.command {
        Command::Run(a) => run(a, out, err),
        Command::Replay(a) => replay(a, out, err),
    }
}
