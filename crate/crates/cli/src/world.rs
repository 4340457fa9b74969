//! Simulator state: server, clients, everything the log refers back to, and
//! its on-disk form.
//!
//! A state directory holds three files. `keystore.json` (mode 0600) has the
//! MAC key and channel keys. `server.jsonl` has a header record and one
//! counter record per conversation. `session.json` has the client side.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use tfrank::ack::ServerTag;
use tfrank::causality::CausalityGraph;
use tfrank::crypto::{ChannelState, MacKey, OpeningKey, LAMBDA};
use tfrank::franking::{ClientState, CounterTable, FrankedCiphertext, OutboxEntry, ReportEntry, ServerState};
use tfrank::group::GroupServerState;
use tfrank::outsourced::OutServerState;
use tfrank::Party;

use crate::report::Index;
use crate::trace::{LogEvent, TraceEvent};
use crate::wire::{b64, unb64, unb64_32, CiphertextJson, TagJson};

pub const MAX_CID: usize = 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    TwoParty,
    Group(usize),
    Outsourced(usize),
}

impl Mode {
    /// `2p`, `group-N`, or `outsourced` (party count from `parties`).
    pub fn parse(s: &str, parties: Option<usize>) -> Result<Mode> {
        let m = match s {
            "2p" => Mode::TwoParty,
            "outsourced" => Mode::Outsourced(parties.unwrap_or(2)),
            _ => match s.strip_prefix("group-").map(str::parse::<usize>) {
                Some(Ok(n)) => Mode::Group(n),
                _ => bail!("unknown mode {s:?}; expected 2p, group-N or outsourced"),
            },
        };
        if let (Mode::TwoParty, Some(n)) = (m, parties) {
            if n != 2 {
                bail!("mode 2p has exactly two parties");
            }
        }
        if let (Mode::Group(n), Some(p)) = (m, parties) {
            if n != p {
                bail!("--parties {p} disagrees with mode group-{n}");
            }
        }
        if m.parties() < 2 {
            bail!("need at least two parties");
        }
        Ok(m)
    }

    pub fn parties(self) -> usize {
        match self {
            Mode::TwoParty => 2,
            Mode::Group(n) | Mode::Outsourced(n) => n,
        }
    }

    pub fn name(self) -> String {
        match self {
            Mode::TwoParty => "2p".into(),
            Mode::Group(n) => format!("group-{n}"),
            Mode::Outsourced(_) => "outsourced".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Server {
    Two(ServerState),
    Group(GroupServerState),
    Out(OutServerState),
}

impl Server {
    fn k_mac(&self) -> &MacKey {
        match self {
            Server::Two(s) => s.k_mac(),
            Server::Group(s) => s.k_mac(),
            Server::Out(s) => s.k_mac(),
        }
    }

    fn table(&self) -> Option<&CounterTable> {
        match self {
            Server::Two(s) => Some(s.table()),
            Server::Group(s) => Some(s.table()),
            Server::Out(_) => None,
        }
    }

    pub fn judge(&self, cid: &[u8], rho: &[ReportEntry]) -> Option<CausalityGraph> {
        match self {
            Server::Two(s) => s.judge(cid, rho),
            Server::Group(s) => s.judge(cid, rho),
            Server::Out(s) => s.judge(cid, rho),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Conversation {
    pub clients: Vec<ClientState>,
    /// Latest tag per party (outsourced mode only).
    pub chains: Vec<ServerTag>,
    /// Ground-truth counters.
    pub truth: Vec<(u64, u64)>,
}

pub struct World {
    pub mode: Mode,
    pub seed: u64,
    pub rng: ChaCha20Rng,
    pub server: Server,
    pub channel_keys: BTreeMap<String, [u8; LAMBDA]>,
    pub convs: BTreeMap<String, Conversation>,
    pub cur: Option<String>,
    /// Every send, tagged or not, with its conversation.
    pub cts: BTreeMap<String, (String, FrankedCiphertext)>,
    /// Event id (and `send@party` for deliveries) to the tag it produced.
    pub tags: BTreeMap<String, ServerTag>,
    pub index: Index,
    pub seq: u64,
}

pub fn check_cid(cid: &str) -> Result<()> {
    if cid.len() > MAX_CID {
        bail!("conversation id is {} bytes; the limit is {MAX_CID}", cid.len());
    }
    Ok(())
}

impl World {
    pub fn new(mode: Mode, seed: u64) -> World {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let n = mode.parties();
        let server = match mode {
            Mode::TwoParty => Server::Two(ServerState::init(&mut rng)),
            Mode::Group(_) => Server::Group(GroupServerState::init(&mut rng, n).expect("n >= 2")),
            Mode::Outsourced(_) => Server::Out(OutServerState::init(&mut rng, n, b"").expect("n >= 2").0),
        };
        World {
            mode,
            seed,
            rng,
            server,
            channel_keys: BTreeMap::new(),
            convs: BTreeMap::new(),
            cur: None,
            cts: BTreeMap::new(),
            tags: BTreeMap::new(),
            index: Index::default(),
            seq: 0,
        }
    }

    /// Switch to `cid`, creating it on first use.
    pub fn enter(&mut self, cid: &str) -> Result<()> {
        check_cid(cid)?;
        if !self.convs.contains_key(cid) {
            let n = self.mode.parties();
            let k = match self.channel_keys.get(cid) {
                Some(k) => *k,
                None => {
                    let mut k = [0u8; LAMBDA];
                    self.rng.fill(&mut k);
                    self.channel_keys.insert(cid.to_string(), k);
                    k
                }
            };
            let clients = (0..n).map(|p| ClientState::init_group(p, k, n)).collect::<Result<_, _>>()?;
            let chains = match &self.server {
                Server::Out(s) => s.init_tags(cid.as_bytes()),
                _ => Vec::new(),
            };
            self.convs.insert(cid.to_string(), Conversation { clients, chains, truth: vec![(0, 0); n] });
        }
        self.cur = Some(cid.to_string());
        Ok(())
    }

    pub fn current(&mut self) -> Result<String> {
        if self.cur.is_none() {
            self.enter("conversation")?;
        }
        Ok(self.cur.clone().expect("entered"))
    }

    pub fn check_party(&self, p: Party) -> Result<()> {
        if p >= self.mode.parties() {
            bail!("party {p} out of range for {} parties", self.mode.parties());
        }
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let keys = KeystoreFile {
            k_mac: b64(&self.server.k_mac().0),
            channel_keys: self.channel_keys.iter().map(|(c, k)| (c.clone(), b64(k))).collect(),
        };
        write_private(&dir.join("keystore.json"), &serde_json::to_vec_pretty(&keys)?)?;

        let mut lines = vec![serde_json::to_string(&ServerRecord::Server {
            mode: self.mode.name(),
            parties: self.mode.parties(),
        })?];
        if let Some(t) = self.server.table() {
            for (cid, ctrs) in t.iter() {
                let cid = String::from_utf8(cid.clone()).context("non UTF-8 conversation id")?;
                lines.push(serde_json::to_string(&ServerRecord::Counters { cid, counters: ctrs.clone() })?);
            }
        }
        fs::write(dir.join("server.jsonl"), lines.join("\n") + "\n")?;

        let session = SessionFile::capture(self);
        fs::write(dir.join("session.json"), serde_json::to_vec_pretty(&session)?)?;
        Ok(())
    }

    pub fn exists(dir: &Path) -> bool {
        dir.join("server.jsonl").exists()
    }

    pub fn load(dir: &Path) -> Result<World> {
        let raw = fs::read(dir.join("keystore.json")).context("reading keystore.json")?;
        let keys: KeystoreFile = serde_json::from_slice(&raw).map_err(|e| anyhow!("corrupt state: keystore.json: {e}"))?;
        let k_mac = MacKey(unb64_32(&keys.k_mac).context("corrupt state: keystore.json k_mac")?);
        let mut channel_keys = BTreeMap::new();
        for (cid, k) in &keys.channel_keys {
            let k = unb64_32(k).with_context(|| format!("corrupt state: keystore.json channel key {cid:?}"))?;
            channel_keys.insert(cid.clone(), k);
        }

        let text = fs::read_to_string(dir.join("server.jsonl")).context("reading server.jsonl")?;
        if !text.ends_with('\n') {
            bail!("corrupt state: server.jsonl is truncated (no final newline)");
        }
        let mut mode = None;
        let mut table: Option<CounterTable> = None;
        for (no, line) in text.lines().enumerate() {
            let rec: ServerRecord = serde_json::from_str(line)
                .map_err(|e| anyhow!("corrupt state: server.jsonl record {}: {e}", no + 1))?;
            match rec {
                ServerRecord::Server { mode: m, parties } => {
                    if no != 0 {
                        bail!("corrupt state: server.jsonl record {}: second header", no + 1);
                    }
                    let m = Mode::parse(&m, Some(parties))
                        .map_err(|e| anyhow!("corrupt state: server.jsonl record 1: {e}"))?;
                    table = Some(CounterTable::new(parties));
                    mode = Some(m);
                }
                ServerRecord::Counters { cid, counters } => {
                    let t = table.as_mut().ok_or_else(|| anyhow!("corrupt state: server.jsonl record {}: counters before header", no + 1))?;
                    if matches!(mode, Some(Mode::Outsourced(_))) {
                        bail!("corrupt state: server.jsonl record {} (cid {cid:?}): outsourced server keeps no counters", no + 1);
                    }
                    check_cid(&cid).map_err(|e| anyhow!("corrupt state: server.jsonl record {}: {e}", no + 1))?;
                    t.set(cid.as_bytes(), counters)
                        .map_err(|e| anyhow!("corrupt state: server.jsonl record {} (cid {cid:?}): {e}", no + 1))?;
                }
            }
        }
        let mode = mode.ok_or_else(|| anyhow!("corrupt state: server.jsonl has no header"))?;
        let table = table.expect("set with mode");
        let server = match mode {
            Mode::TwoParty => Server::Two(ServerState::from_parts(k_mac, table)),
            Mode::Group(_) => Server::Group(GroupServerState::from_parts(k_mac, table)),
            Mode::Outsourced(n) => Server::Out(OutServerState::from_parts(k_mac, n)),
        };

        let raw = fs::read(dir.join("session.json")).context("reading session.json")?;
        let session: SessionFile =
            serde_json::from_slice(&raw).map_err(|e| anyhow!("corrupt state: session.json: {e}"))?;
        session.restore(mode, server, channel_keys).map_err(|e| anyhow!("corrupt state: session.json: {e:#}"))
    }
}

fn write_private(path: &Path, bytes: &[u8]) -> Result<()> {
    #[cfg(unix)]
    {
        use std::io::Write;
        use std::os::unix::fs::OpenOptionsExt;
        let mut f = fs::OpenOptions::new().write(true).create(true).truncate(true).mode(0o600).open(path)?;
        f.write_all(bytes)?;
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(path, fs::Permissions::from_mode(0o600))?;
        Ok(())
    }
    #[cfg(not(unix))]
    {
        fs::write(path, bytes)?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct KeystoreFile {
    k_mac: String,
    channel_keys: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase", deny_unknown_fields)]
enum ServerRecord {
    Server { mode: String, parties: usize },
    Counters { cid: String, counters: Vec<(u64, u64)> },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClientJson {
    send_ctr: u64,
    seen: Vec<BTreeSet<u64>>,
    outbox: BTreeMap<u64, (String, String, String)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConvJson {
    clients: Vec<ClientJson>,
    chains: Vec<TagJson>,
    truth: Vec<(u64, u64)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionFile {
    seed: u64,
    rng_word_pos: String,
    seq: u64,
    cur: Option<String>,
    convs: BTreeMap<String, ConvJson>,
    cts: BTreeMap<String, (String, CiphertextJson)>,
    tags: BTreeMap<String, TagJson>,
    index: Index,
}

impl SessionFile {
    fn capture(w: &World) -> SessionFile {
        let convs = w
            .convs
            .iter()
            .map(|(cid, c)| {
                let clients = c
                    .clients
                    .iter()
                    .map(|cl| {
                        let ch = cl.channel();
                        ClientJson {
                            send_ctr: ch.send_ctr(),
                            seen: (0..ch.parties()).map(|q| ch.seen(q).clone()).collect(),
                            outbox: cl
                                .outbox()
                                .iter()
                                .map(|(i, e)| (*i, (b64(&e.m), b64(&e.k_f.0), b64(&e.c_f.0))))
                                .collect(),
                        }
                    })
                    .collect();
                let conv = ConvJson { clients, chains: c.chains.iter().map(TagJson::from_tag).collect(), truth: c.truth.clone() };
                (cid.clone(), conv)
            })
            .collect();
        SessionFile {
            seed: w.seed,
            rng_word_pos: w.rng.get_word_pos().to_string(),
            seq: w.seq,
            cur: w.cur.clone(),
            convs,
            cts: w.cts.iter().map(|(id, (cid, c))| (id.clone(), (cid.clone(), CiphertextJson::from_ct(c)))).collect(),
            tags: w.tags.iter().map(|(id, t)| (id.clone(), TagJson::from_tag(t))).collect(),
            index: w.index.clone(),
        }
    }

    fn restore(self, mode: Mode, server: Server, channel_keys: BTreeMap<String, [u8; LAMBDA]>) -> Result<World> {
        let n = mode.parties();
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_word_pos(self.rng_word_pos.parse().context("rng_word_pos")?);
        let mut convs = BTreeMap::new();
        for (cid, c) in self.convs {
            let k = *channel_keys.get(&cid).ok_or_else(|| anyhow!("conversation {cid:?} has no channel key"))?;
            if c.clients.len() != n || c.truth.len() != n {
                bail!("conversation {cid:?}: expected {n} parties");
            }
            let mut clients = Vec::new();
            for (p, cl) in c.clients.into_iter().enumerate() {
                let chan = ChannelState::from_parts(p, n, k, cl.send_ctr, cl.seen)
                    .with_context(|| format!("conversation {cid:?} party {p}"))?;
                let mut outbox = BTreeMap::new();
                for (i, (m, kf, cf)) in cl.outbox {
                    let e = OutboxEntry {
                        m: unb64(&m)?,
                        k_f: OpeningKey(unb64_32(&kf)?),
                        c_f: tfrank::crypto::Commitment(unb64_32(&cf)?),
                    };
                    outbox.insert(i, e);
                }
                clients.push(ClientState::from_parts(chan, outbox));
            }
            let chains = c.chains.iter().map(TagJson::to_tag).collect::<Result<_>>()?;
            convs.insert(cid, Conversation { clients, chains, truth: c.truth });
        }
        let mut cts = BTreeMap::new();
        for (id, (cid, c)) in self.cts {
            cts.insert(id.clone(), (cid, c.to_ct().with_context(|| format!("ciphertext of {id:?}"))?));
        }
        let mut tags = BTreeMap::new();
        for (id, t) in self.tags {
            tags.insert(id.clone(), t.to_tag().with_context(|| format!("tag of {id:?}"))?);
        }
        Ok(World {
            mode,
            seed: self.seed,
            rng,
            server,
            channel_keys,
            convs,
            cur: self.cur,
            cts,
            tags,
            index: self.index,
            seq: self.seq,
        })
    }
}

impl World {
    fn counters(&self, cid: &str) -> Vec<(u64, u64)> {
        self.convs.get(cid).map(|c| c.truth.clone()).unwrap_or_default()
    }

    fn fresh_id(&self, id: &str) -> Result<()> {
        if self.cts.contains_key(id) || self.tags.contains_key(id) {
            bail!("event id {id:?} already used");
        }
        Ok(())
    }

    fn pred_tag(&self, pred: &Option<String>) -> Result<Option<ServerTag>> {
        match pred {
            None => Ok(None),
            Some(_) if !matches!(self.mode, Mode::Outsourced(_)) => bail!("pred only applies in outsourced mode"),
            Some(p) => self.tags.get(p).cloned().map(Some).ok_or_else(|| anyhow!("pred {p:?} names no tagged event")),
        }
    }

    /// Runs one trace event. Errors mean the trace is malformed; protocol
    /// rejections come back as rejected log events.
    pub fn step(&mut self, ev: &TraceEvent) -> Result<LogEvent> {
        self.seq += 1;
        let seq = self.seq;
        match ev {
            TraceEvent::Init { cid } => {
                self.enter(cid)?;
                Ok(LogEvent::new(seq, "init", cid, self.counters(cid)))
            }
            TraceEvent::Send { id, from, msg, pred } => {
                self.fresh_id(id)?;
                self.check_party(*from)?;
                let pred = self.pred_tag(pred)?;
                let cid = self.current()?;
                let conv = self.convs.get_mut(&cid).expect("entered");
                let c = conv.clients[*from].snd(&mut self.rng, msg.as_bytes());
                let k_f = conv.clients[*from].outbox()[&c.i].k_f;
                self.cts.insert(id.clone(), (cid.clone(), c.clone()));
                let cb = cid.as_bytes();
                let t = match &mut self.server {
                    Server::Two(s) => s.tag_send(cb, *from, c.c_f).ok(),
                    Server::Group(s) => s.tag_send(cb, *from, c.c_f).ok(),
                    Server::Out(s) => s.tag_send(cb, *from, c.c_f, pred.as_ref().unwrap_or(&conv.chains[*from])),
                };
                let mut e = LogEvent::new(seq, "send", &cid, Vec::new());
                e.id = Some(id.clone());
                e.from = Some(*from);
                e.msg = Some(msg.clone());
                e.k_f = Some(b64(&k_f.0));
                e.ct = Some(CiphertextJson::from_ct(&c));
                let Some(t) = t else {
                    e.counters = self.counters(&cid);
                    return Ok(e.rejected("server refused to tag the send"));
                };
                if let Some(ch) = conv.chains.get_mut(*from) {
                    *ch = t.clone();
                }
                conv.truth[*from].0 += 1;
                self.tags.insert(id.clone(), t.clone());
                let sent = crate::report::SentMsg {
                    cid: cid.clone(),
                    from: *from,
                    msg: msg.clone(),
                    k_f: b64(&k_f.0),
                    c_f: b64(&c.c_f.0),
                    t_s: TagJson::from_tag(&t),
                };
                self.index.sends.insert(id.clone(), sent);
                e.t_s = Some(TagJson::from_tag(&t));
                e.counters = self.counters(&cid);
                Ok(e)
            }
            TraceEvent::Deliver { send, to, id, pred } => {
                if let Some(id) = id {
                    self.fresh_id(id)?;
                }
                self.check_party(*to)?;
                let pred = self.pred_tag(pred)?;
                let (cid, c) = self.cts.get(send).cloned().ok_or_else(|| anyhow!("deliver refers to unknown send {send:?}"))?;
                let from = c.c_e.sender;
                let mut e = LogEvent::new(seq, "deliver", &cid, Vec::new());
                e.id = id.clone();
                e.send = Some(send.clone());
                e.from = Some(from);
                e.to = Some(*to);
                if *to == from {
                    e.counters = self.counters(&cid);
                    return Ok(e.rejected("a party does not receive its own message"));
                }
                let conv = self.convs.get_mut(&cid).expect("send created it");
                if conv.clients[*to].rcv_from(from, &c).is_none() {
                    e.counters = self.counters(&cid);
                    return Ok(e.rejected("client rejected the ciphertext"));
                }
                let cb = cid.as_bytes();
                let t = match &mut self.server {
                    Server::Two(s) => s.tag_recv(cb, *to, c.c_f).ok(),
                    Server::Group(s) => s.tag_recv(cb, *to, from, c.c_f).ok(),
                    Server::Out(s) => s.tag_recv(cb, *to, from, c.c_f, pred.as_ref().unwrap_or(&conv.chains[*to])),
                };
                let Some(t) = t else {
                    e.counters = self.counters(&cid);
                    return Ok(e.rejected("server refused to tag the reception"));
                };
                if let Some(ch) = conv.chains.get_mut(*to) {
                    *ch = t.clone();
                }
                conv.truth[*to].1 += 1;
                // an untagged send is never in the index, so its deliveries stay unreportable
                if self.index.sends.contains_key(send) {
                    let d = crate::report::Delivery { send: send.clone(), to: *to, id: id.clone(), t_r: TagJson::from_tag(&t) };
                    self.index.deliveries.push(d);
                }
                self.tags.insert(format!("{send}@{to}"), t.clone());
                if let Some(id) = id {
                    self.tags.insert(id.clone(), t.clone());
                }
                e.t_r = Some(TagJson::from_tag(&t));
                e.counters = self.counters(&cid);
                Ok(e)
            }
            TraceEvent::Redact { refs } => {
                let cid = self.current()?;
                self.index.redactions.extend(refs.iter().cloned());
                let mut e = LogEvent::new(seq, "redact", &cid, self.counters(&cid));
                e.refs = refs.clone();
                Ok(e)
            }
            TraceEvent::Report { refs } => {
                let cid = self.current()?;
                let rep = self.index.build(refs, &[], if refs.is_empty() { Some(&cid) } else { None })?;
                let mut e = LogEvent::new(seq, "report", &rep.cid, self.counters(&rep.cid));
                e.refs = refs.clone();
                e.report = Some(rep.entries);
                Ok(e)
            }
        }
    }

    pub fn judge_report(&self, cid: &str, entries: &[ReportEntry]) -> Option<CausalityGraph> {
        self.server.judge(cid.as_bytes(), entries)
    }
}
