//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;

use sepkern::checker::{
    explore, first_invariant_failure, hoare_cases, implication_audit, run_hoare_suite,
    verify_properties, verify_unwinding, BoundedLimits, Invariant,
};
use sepkern::config::PortIdStrategy;
use sepkern::equivalence::TransmitterView;
use sepkern::kernel::{EventKind, Message, PortBuffer, SemanticsVariant};
use sepkern::security::PropertyId;
use sepkern::Model;

use common::*;

const BIN: &str = env!("CARGO_BIN_EXE_sepkern");
const CC1_LIMIT: Duration = Duration::from_secs(10);
const FIXED_LIMIT: Duration = Duration::from_secs(60);
const CC1_MAX_WITNESS: usize = 6;
const MIN_HOARE_CASES: usize = 33;
const BOUND: usize = 2;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn(&Ctx) -> Outcome);

struct Ctx {
    _dir: tempfile::TempDir,
    cfg1: PathBuf,
}

/// Runs the CLI in-process and returns exit code, stdout and elapsed time.
fn cli(args: &[&str]) -> (i32, Vec<u8>, Duration) {
    let mut argv = vec!["sepkern"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let t0 = Instant::now();
    let code = sepkern::cli::main_with(argv, &mut out, &mut err);
    (code, out, t0.elapsed())
}

fn run_json(cfg: &Path, extra: &[&str]) -> Result<(i32, Value, Vec<u8>, Duration), String> {
    let mut args = vec!["run", "--config", cfg.to_str().unwrap(), "--format", "json"];
    args.extend_from_slice(extra);
    let (code, out, dt) = cli(&args);
    let v = serde_json::from_slice(&out).map_err(|e| format!("bad JSON (exit {code}): {e}"))?;
    Ok((code, v, out, dt))
}

fn check<'a>(report: &'a Value, name: &str) -> Result<&'a Value, String> {
    report["checks"]
        .as_array()
        .and_then(|cs| cs.iter().find(|c| c["name"] == name))
        .ok_or_else(|| format!("report has no `{name}` check"))
}

fn failing_rows<'a>(report: &'a Value, name: &str) -> Result<Vec<&'a Value>, String> {
    Ok(check(report, name)?["per_event"]
        .as_array()
        .map(|rows| rows.iter().filter(|r| r["holds"] == false).collect())
        .unwrap_or_default())
}

fn row<'a>(report: &'a Value, name: &str, event: &str) -> Result<Option<&'a Value>, String> {
    Ok(failing_rows(report, name)?.into_iter().find(|r| r["event"] == event))
}

fn replay_via_shell(w: &Value) -> Result<(), String> {
    let cmd = w["replay"].as_str().ok_or("witness without replay command")?;
    let args = cmd.strip_prefix("sepkern ").ok_or("replay command not for sepkern")?;
    let out = Command::new("sh")
        .arg("-c")
        .arg(format!("'{BIN}' {args}"))
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    if out.status.code() != Some(1) || !stdout.contains(w["diff"].as_str().unwrap_or("")) {
        return Err(format!("replay did not reproduce: {cmd} -> {stdout}"));
    }
    Ok(())
}

fn collect_witnesses(v: &Value, out: &mut Vec<Value>) {
    match v {
        Value::Object(map) => {
            if let Some(w) = map.get("witness") {
                out.push(w.clone());
            }
            map.values().for_each(|x| collect_witnesses(x, out));
        }
        Value::Array(xs) => xs.iter().for_each(|x| collect_witnesses(x, out)),
        _ => {}
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn covert_channel_send(ctx: &Ctx) -> Outcome {
    let (code, r, _, dt) = run_json(&ctx.cfg1, &["--semantics", "arinc"])?;
    ensure(code == 1, format!("exit {code}, expected 1"))?;
    let w = row(&r, "weak_step_consistent", "Send_Queuing_Message")?
        .ok_or("no weak_step_consistent violation on Send_Queuing_Message")?["witness"]
        .clone();
    let len = w["length"].as_u64().unwrap_or(u64::MAX) as usize;
    ensure(len <= CC1_MAX_WITNESS, format!("witness has {len} events"))?;
    replay_via_shell(&w)?;
    ensure(dt < CC1_LIMIT, format!("took {dt:?}"))?;
    Ok(format!("{len}-event witness ({}), replayed, {:.2}s", w["diff"].as_str().unwrap_or(""), dt.as_secs_f64()))
}

fn covert_channel_transfer(ctx: &Ctx) -> Outcome {
    let (_, r, _, _) = run_json(&ctx.cfg1, &["--semantics", "arinc"])?;
    let w = row(&r, "weak_step_consistent", "Transfer_Queuing_Message")?
        .ok_or("no weak_step_consistent violation on Transfer_Queuing_Message")?["witness"]
        .clone();
    replay_via_shell(&w)?;
    Ok(format!("{}-event witness, observer {}", w["length"], w["observer"].as_str().unwrap_or("")))
}

fn covert_channel_ids(ctx: &Ctx) -> Outcome {
    let is_create = |r: &&Value| {
        r["event"] == "Create_Queuing_Port" || r["event"] == "Create_Sampling_Port"
    };
    let mut found = Vec::new();
    for sem in ["arinc", "fixed"] {
        let (_, counter, _, _) = run_json(&ctx.cfg1, &["--semantics", sem, "--portids", "counter"])?;
        let rows = failing_rows(&counter, "weak_step_consistent")?;
        let w = rows
            .iter()
            .find(|r| is_create(r))
            .ok_or(format!("{sem}/counter: no Create violation"))?;
        replay_via_shell(&w["witness"])?;
        found.push(w["event"].as_str().unwrap_or("").to_string());

        let (_, stat, _, _) = run_json(&ctx.cfg1, &["--semantics", sem, "--portids", "static"])?;
        for name in ["weak_step_consistent", "local_respect"] {
            let bad = failing_rows(&stat, name)?.into_iter().filter(|r| is_create(r)).count();
            ensure(bad == 0, format!("{sem}/static: Create violates {name}"))?;
        }
    }
    Ok(format!("counter: {} violations; static: none", found.join(", ")))
}

fn fixed_model_secure(ctx: &Ctx) -> Outcome {
    let (code, r, _, dt) = run_json(&ctx.cfg1, &["--semantics", "fixed", "--portids", "static", "--bound", "2"])?;
    let names = [
        "local_respect",
        "weak_step_consistent",
        "strong_noninfluence",
        "noninfluence",
        "nonleakage",
        "noninterference_r",
        "noninterference",
        "weak_noninterference",
    ];
    for n in names {
        let c = check(&r, n)?;
        ensure(c["holds"] == true, format!("{n} fails"))?;
        if !PropertyId::from_name(n).is_some_and(|p| p.is_unwinding()) {
            ensure(c["bound"] == BOUND, format!("{n} bound {}", c["bound"]))?;
        }
    }
    ensure(code == 0, format!("exit {code}"))?;
    ensure(dt < FIXED_LIMIT, format!("took {dt:?}"))?;
    Ok(format!(
        "{} states, {} checks hold at L={BOUND}, {:.2}s",
        r["stats"]["states"],
        names.len(),
        dt.as_secs_f64()
    ))
}

fn inference_framework(_: &Ctx) -> Outcome {
    let mut models = Vec::new();
    for (v, strat) in VARIANTS {
        models.push((format!("CFG1 {} {strat:?}", v.name()), cfg1_model(v, strat)));
    }
    for (v, strat) in VARIANTS {
        models.push((format!("CFG3 {} {strat:?}", v.name()), cfg3_model(v, strat)));
    }
    let mut unwinding_passes = 0;
    let mut vectors = BTreeSet::new();
    for (name, m) in &models {
        let rs = explore(m, 200_000).map_err(|e| format!("{name}: {e}"))?;
        let u = verify_unwinding(m, &rs);
        let mut verdicts =
            verify_properties(m, &rs, &PropertyId::BOUNDED, BOUND, BoundedLimits::default())
                .map_err(|e| format!("{name}: {e}"))?;
        let unwinding = u.local_respect.holds && u.weak_step_consistent.holds;
        verdicts.push(u.local_respect);
        verdicts.push(u.weak_step_consistent);
        let broken = implication_audit(&verdicts);
        ensure(broken.is_empty(), format!("{name}: implication broken: {broken:?}"))?;
        if unwinding {
            unwinding_passes += 1;
            let failing: Vec<_> = verdicts.iter().filter(|v| !v.holds).map(|v| v.property).collect();
            ensure(failing.is_empty(), format!("{name}: unwinding holds but {failing:?} fail"))?;
        }
        for v in &verdicts {
            if let Some(w) = &v.witness {
                ensure(w.reproduces(m), format!("{name}: {} witness does not replay", v.property))?;
            }
        }
        vectors.insert(verdicts.iter().map(|v| v.holds).collect::<Vec<_>>());
    }
    ensure(unwinding_passes > 0, "no variant passes unwinding")?;
    Ok(format!(
        "{} models at L={BOUND}, {} distinct verdict vectors, {unwinding_passes} with unwinding",
        models.len(),
        vectors.len()
    ))
}

fn invariants(_: &Ctx) -> Outcome {
    let mut models = Vec::new();
    for (v, strat) in VARIANTS {
        models.push(cfg1_model(v, strat));
        models.push(cfg3_model(v, strat));
    }
    for v in [SemanticsVariant::FIXED, SemanticsVariant::ARINC] {
        let full = cfg(CFG3, PortIdStrategy::StaticFromConfig);
        models.push(Model::new(full, v, TransmitterView::SourceOnly));
    }
    let mut total = 0;
    for m in &models {
        let rs = explore(m, 200_000).map_err(|e| e.to_string())?;
        if let Some((i, bad)) = first_invariant_failure(m, &rs.states) {
            return Err(format!("state {i} breaks {bad:?}"));
        }
        total += rs.len();
    }

    // Negative controls: an overfull queue and a dangling owner entry.
    let m = cfg1_model(SemanticsVariant::FIXED, PortIdStrategy::StaticFromConfig);
    let good = m.init();
    let mut overfull = good.clone();
    let qs = m.cfg.find_port("qs").ok_or("no qs")?;
    let id = *overfull.comm.ids_by_name.get(&qs).ok_or("qs not created")?;
    match &mut overfull.comm.ports.get_mut(&id).ok_or("no port")?.buffer {
        PortBuffer::Queuing(q) => {
            q.push_back(Message(0));
            q.push_back(Message(1));
        }
        PortBuffer::Sampling(_) => return Err("qs is not queuing".into()),
    }
    let mut dangling = good.clone();
    dangling.comm.port_owner.remove(&id);
    let caught_overfull = first_invariant_failure(&m, [&good, &overfull]);
    let caught_dangling = first_invariant_failure(&m, [&good, &dangling]);
    ensure(
        caught_overfull == Some((1, vec![Invariant::CapacityBound])),
        format!("overfull queue not caught: {caught_overfull:?}"),
    )?;
    ensure(
        caught_dangling.as_ref().is_some_and(|(i, v)| *i == 1 && v.contains(&Invariant::PortConsistent)),
        format!("dangling port not caught: {caught_dangling:?}"),
    )?;
    Ok(format!("{total} reachable states over {} models; corrupted states rejected", models.len()))
}

fn hoare_suite(_: &Ctx) -> Outcome {
    let cases = hoare_cases();
    ensure(cases.len() >= MIN_HOARE_CASES, format!("only {} cases", cases.len()))?;
    let kinds: BTreeSet<_> = cases.iter().map(|c| c.kind).collect();
    let missing: Vec<_> = EventKind::ALL.iter().filter(|k| !kinds.contains(k)).collect();
    ensure(missing.is_empty(), format!("kinds without a case: {missing:?}"))?;
    let mut checked = 0;
    for (v, strat) in VARIANTS {
        let m = cfg1_model(v, strat);
        let rs = explore(&m, 200_000).map_err(|e| e.to_string())?;
        for r in run_hoare_suite(&m, &rs, &cases) {
            ensure(r.holds, format!("{} {strat:?} {}: {:?}", v.name(), r.name, r.failure))?;
            checked += r.checked;
        }
    }
    // CFG1 has no sampling ports, so the existing-port case for sampling
    // creation needs the three-partition configuration.
    let case = "create_sampling_returns_existing_port";
    let m = cfg3_model(SemanticsVariant::FIXED, PortIdStrategy::RuntimeCounter);
    let rs = explore(&m, 200_000).map_err(|e| e.to_string())?;
    let r = run_hoare_suite(&m, &rs, &cases)
        .into_iter()
        .find(|r| r.name == case)
        .ok_or("existing-port case missing")?;
    ensure(r.holds && r.checked > 0, format!("{case}: holds={} checked={}", r.holds, r.checked))?;
    Ok(format!(
        "{} cases over {} kinds, {checked} CFG1 instances; {case} on {} states",
        cases.len(),
        kinds.len(),
        r.checked
    ))
}

fn determinism_and_replay(ctx: &Ctx) -> Outcome {
    let mut witnesses = 0;
    for flags in [&["--semantics", "arinc", "--portids", "counter"][..], &["--semantics", "arinc"][..]] {
        let (_, r, a, _) = run_json(&ctx.cfg1, flags)?;
        let (_, _, b, _) = run_json(&ctx.cfg1, flags)?;
        ensure(a == b, format!("{flags:?}: reports differ"))?;
        let mut ws = Vec::new();
        collect_witnesses(&r, &mut ws);
        for w in &ws {
            replay_via_shell(w)?;
        }
        witnesses += ws.len();
    }
    ensure(witnesses > 0, "no counterexamples emitted")?;
    Ok(format!("identical reports; {witnesses} witnesses replayed"))
}

fn transmitter_view_probe(ctx: &Ctx) -> Outcome {
    let (_, full, _, _) = run_json(&ctx.cfg1, &["--transmitter-view", "full", "--checks", "unwinding"])?;
    for ev in ["Receive_Queuing_Message", "Clear_Queuing_Port"] {
        let r = row(&full, "local_respect", ev)?.ok_or(format!("full view: no violation by {ev}"))?;
        let obs = r["witness"]["observer"].as_str().unwrap_or("");
        ensure(obs == "Transmitter", format!("{ev} observer {obs}"))?;
        replay_via_shell(&r["witness"])?;
    }
    let (_, src, _, _) = run_json(&ctx.cfg1, &["--transmitter-view", "source-only", "--checks", "unwinding"])?;
    ensure(check(&src, "local_respect")?["holds"] == true, "source-only view violates local_respect")?;
    Ok("full view: Receive and Clear leak to Transmitter; source-only: none".into())
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let cfg1 = dir.path().join("cfg1.sk");
    std::fs::write(&cfg1, CFG1).expect("write config");
    let ctx = Ctx { _dir: dir, cfg1 };

    let criteria: [Criterion; 9] = [
        ("covert channel: full-queue send status", covert_channel_send),
        ("covert channel: blocked transfer", covert_channel_transfer),
        ("covert channel: port id counter", covert_channel_ids),
        ("fixed model security", fixed_model_secure),
        ("implication order across variants", inference_framework),
        ("reachable-state invariants", invariants),
        ("pre/post suite", hoare_suite),
        ("determinism and replay", determinism_and_replay),
        ("transmitter view probe", transmitter_view_probe),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        match f(&ctx) {
            Ok(msg) => println!("PASS {} {name}: {msg} [{:.1}s]", i + 1, t0.elapsed().as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL {} {name}: {msg}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
