use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::Rng;
use tfrank::ack::ServerTag;
use tfrank::crypto::{commit, commit_verify, mac_tag, MacKey};
use tfrank_bench::{clients, group, judged, outsourced, rng, two_party, CID};

fn primitives(c: &mut Criterion) {
    let mut r = rng(1);
    let key = MacKey::random(&mut r);
    let mut g = c.benchmark_group("primitives");
    for len in [32usize, 1024] {
        let m = vec![7u8; len];
        g.throughput(Throughput::Bytes(len as u64));
        g.bench_with_input(BenchmarkId::new("mac", len), &m, |b, m| b.iter(|| mac_tag(&key, black_box(m))));
        g.bench_with_input(BenchmarkId::new("commit", len), &m, |b, m| b.iter(|| commit(&mut r, black_box(m))));
        let (k_f, c_f) = commit(&mut r, &m);
        g.bench_with_input(BenchmarkId::new("commit_verify", len), &m, |b, m| {
            b.iter(|| commit_verify(black_box(m), &k_f, &c_f))
        });
    }
    g.finish();
}

fn channel(c: &mut Criterion) {
    let mut g = c.benchmark_group("channel");
    let m = vec![b'x'; 256];
    g.bench_function("snd", |b| {
        let mut r = rng(2);
        let mut cl = clients(&mut r, 2);
        b.iter(|| cl[0].snd(&mut r, black_box(&m)))
    });
    g.bench_function("snd_rcv", |b| {
        let mut r = rng(3);
        let mut cl = clients(&mut r, 2);
        b.iter(|| {
            let ct = cl[0].snd(&mut r, &m);
            cl[1].rcv(&ct).unwrap()
        })
    });
    g.finish();
}

fn tagging(c: &mut Criterion) {
    let mut g = c.benchmark_group("tag");
    let mut r = rng(4);
    let c_f = tfrank::crypto::Commitment(r.gen());
    g.bench_function("stateful_send", |b| {
        let (mut srv, _) = two_party(0, 4);
        b.iter(|| srv.tag_send(CID, 0, black_box(c_f)).unwrap())
    });
    g.bench_function("outsourced_send", |b| {
        let (srv, _, _) = outsourced(0, 4);
        let init: ServerTag = srv.init_tags(CID).remove(0);
        b.iter(|| srv.tag_send(CID, 0, black_box(c_f), &init).unwrap())
    });
    g.finish();
}

fn judging(c: &mut Criterion) {
    let mut g = c.benchmark_group("judge");
    for msgs in [16usize, 128, 1024] {
        let (srv, rep) = two_party(msgs, 5);
        g.throughput(Throughput::Elements(msgs as u64));
        g.bench_with_input(BenchmarkId::new("two_party", msgs), &rep, |b, rep| b.iter(|| srv.judge(CID, rep).unwrap()));
        let (osrv, orep, _) = outsourced(msgs, 5);
        g.bench_with_input(BenchmarkId::new("outsourced", msgs), &orep, |b, rep| b.iter(|| osrv.judge(CID, rep).unwrap()));
    }
    for n in [3usize, 8] {
        let (srv, rep) = group(n, 64, 6);
        g.bench_with_input(BenchmarkId::new("group_64_msgs", n), &rep, |b, rep| b.iter(|| srv.judge(CID, rep).unwrap()));
    }
    g.finish();
}

fn validity(c: &mut Criterion) {
    let mut g = c.benchmark_group("validity");
    for msgs in [16usize, 128, 1024] {
        let full = judged(msgs);
        g.bench_with_input(BenchmarkId::new("full", msgs), &full, |b, gr| b.iter(|| gr.is_valid_subgraph()));
    }
    g.finish();
}

fn replay(c: &mut Criterion) {
    let (srv, _, tags) = outsourced(8, 7);
    // both owned by party 1, so both MACs get checked
    assert_eq!(tags[1].ack.owner(), tags[2].ack.owner());
    c.bench_function("judge_replay", |b| b.iter(|| srv.judge_replay(black_box(&tags[1]), black_box(&tags[2]))));
}

criterion_group!(benches, primitives, channel, tagging, judging, validity, replay);
criterion_main!(benches);
