mod export;
mod games;
mod report;
mod trace;
mod wire;
mod world;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use tfrank::harness::baseline::narrate;
use tfrank::harness::run_attack_demo;

use crate::report::Index;
use crate::trace::{parse_log, parse_trace};
use crate::wire::{ReportFile, TagJson};
use crate::world::{Mode, Server, World};

#[derive(Parser)]
#[command(name = "tfrank", version, about = "Franking simulator, report builder and judge")]
struct Cli {
    /// 2p, group-N or outsourced
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Party count for outsourced mode
    #[arg(long, global = true)]
    parties: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Where server keys, counters and client state live between runs
    #[arg(long, global = true, env = "TF_STATE_DIR")]
    state_dir: Option<PathBuf>,
    /// Machine-readable output
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a JSON-lines trace and print the event log
    Simulate {
        trace: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Build a report from an event log
    Report {
        log: PathBuf,
        /// Event ids: a send (all its deliveries), SEND@PARTY, or a delivery id
        #[arg(long, value_delimiter = ',')]
        select: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        redact: Vec<String>,
        #[arg(long)]
        cid: Option<String>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Judge a report against the saved server state
    Judge { report: PathBuf },
    /// Print the tag an event produced, for replay-check
    Tag { log: PathBuf, event: String },
    /// Ask the outsourced server whether two tags prove a replay
    ReplayCheck { t: PathBuf, u: PathBuf },
    /// Metadata baseline against tagged receptions
    AttackDemo,
    /// Quick Monte Carlo sweeps of every security game
    Games {
        #[arg(long, default_value_t = 200)]
        seeds: u64,
    },
}

/// Exit 1: a verdict the caller asked about came out negative.
#[derive(Debug)]
struct Rejected(String);

impl std::fmt::Display for Rejected {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Rejected {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => match e.downcast_ref::<Rejected>() {
            Some(r) => {
                eprintln!("{r}");
                ExitCode::from(1)
            }
            None => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn read(p: &Path) -> Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn need_state(cli: &Cli) -> Result<World> {
    let dir = cli.state_dir.as_ref().ok_or_else(|| anyhow!("this command needs --state-dir or TF_STATE_DIR"))?;
    if !World::exists(dir) {
        bail!("no saved state in {}", dir.display());
    }
    World::load(dir)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Simulate { trace, out } => {
            let events = parse_trace(&read(trace)?)?;
            let mut w = match &cli.state_dir {
                Some(d) if World::exists(d) => {
                    let w = World::load(d)?;
                    if let Some(m) = &cli.mode {
                        let m = Mode::parse(m, cli.parties)?;
                        if m != w.mode {
                            bail!("state in {} is {} mode, not {}", d.display(), w.mode.name(), m.name());
                        }
                    }
                    w
                }
                _ => World::new(Mode::parse(cli.mode.as_deref().unwrap_or("2p"), cli.parties)?, cli.seed),
            };
            let mut log = String::new();
            for (line, ev) in &events {
                let e = w.step(ev).with_context(|| format!("trace line {line}"))?;
                log.push_str(&serde_json::to_string(&e)?);
                log.push('\n');
            }
            if let Some(d) = &cli.state_dir {
                w.save(d)?;
            }
            emit(out, &log)
        }
        Cmd::Report { log, select, redact, cid, out } => {
            let ix = Index::from_log(&parse_log(&read(log)?)?)?;
            let rep = ix.build(select, redact, cid.as_deref())?;
            emit(out, &(serde_json::to_string_pretty(&rep)? + "\n"))
        }
        Cmd::Judge { report } => {
            let w = need_state(&cli)?;
            let rep: ReportFile = serde_json::from_str(&read(report)?).context("malformed report file")?;
            // a report that does not even decode is rejected like any other
            let entries: Result<Vec<_>> = rep.entries.iter().map(|e| e.to_entry()).collect();
            let g = entries.ok().and_then(|es| w.judge_report(&rep.cid, &es));
            let g = g.ok_or_else(|| Rejected("report rejected".into()))?;
            let text = if cli.json { export::to_json(&g) + "\n" } else { export::to_dot(&g, &[]) };
            emit(&None, &text)
        }
        Cmd::Tag { log, event } => {
            let log = parse_log(&read(log)?)?;
            let t = find_tag(&log, event)?;
            emit(&None, &(serde_json::to_string(&t)? + "\n"))
        }
        Cmd::ReplayCheck { t, u } => {
            let w = need_state(&cli)?;
            let Server::Out(srv) = &w.server else {
                bail!("replay-check needs outsourced-mode state, found {}", w.mode.name());
            };
            let parse = |p: &Path| -> Result<_> {
                let j: TagJson = serde_json::from_str(&read(p)?).with_context(|| format!("malformed tag file {}", p.display()))?;
                j.to_tag().with_context(|| format!("malformed tag file {}", p.display()))
            };
            let verdict = srv.judge_replay(&parse(t)?, &parse(u)?);
            if cli.json {
                return emit(&None, &(serde_json::json!({ "convicted": verdict }).to_string() + "\n"));
            }
            match verdict {
                Some(p) => emit(&None, &format!("party {p} convicted\n")),
                None => emit(&None, "no replay\n"),
            }
        }
        Cmd::AttackDemo => {
            let v = run_attack_demo();
            if cli.json {
                #[derive(Serialize)]
                struct V {
                    baseline_win: bool,
                    qcc_win: bool,
                }
                emit(&None, &(serde_json::to_string(&V { baseline_win: v.baseline_win, qcc_win: v.qcc_win })? + "\n"))?;
            } else {
                emit(&None, &(narrate(&v) + "\n"))?;
            }
            if !(v.baseline_win && !v.qcc_win) {
                return Err(Rejected("unexpected verdict".into()).into());
            }
            Ok(())
        }
        Cmd::Games { seeds } => {
            let lines = games::run_all(*seeds);
            let ok = lines.iter().all(|l| l.pass);
            if cli.json {
                emit(&None, &(serde_json::to_string(&lines)? + "\n"))?;
            } else {
                for l in &lines {
                    println!("{} {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.game, l.detail);
                }
            }
            if !ok {
                return Err(Rejected("some games failed".into()).into());
            }
            Ok(())
        }
    }
}

fn find_tag(log: &[trace::LogEvent], event: &str) -> Result<TagJson> {
    for e in log.iter().filter(|e| e.status == trace::Status::Ok) {
        match e.op.as_str() {
            "send" if e.id.as_deref() == Some(event) => return e.t_s.clone().ok_or_else(|| anyhow!("send without tag")),
            "deliver" => {
                let at = format!("{}@{}", e.send.as_deref().unwrap_or_default(), e.to.unwrap_or_default());
                if e.id.as_deref() == Some(event) || at == event {
                    return e.t_r.clone().ok_or_else(|| anyhow!("delivery without tag"));
                }
            }
            _ => {}
        }
    }
    bail!("no tagged event {event:?} in the log")
}
