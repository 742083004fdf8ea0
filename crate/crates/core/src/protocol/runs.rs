//! The timed comparison runs on the separation network and the two-node loop.
//!
//! Every run simulates the full schedule, moves a seeded payload end to end,
//! checks the traffic log and compares the decoded streams with the source.
//! The closed forms next to each run give the elapsed time the schedule is
//! built to hit; tests hold the two together.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::qlnc::{qlnc_round, verify_with_oracle, Latency, Prop1Layout};
use super::superdense::{BellSession, SuperdenseMessage};
use super::traffic::{Payload, TrafficLog};
use super::{BellInventory, ProtocolError};
use crate::formula::FormulaEngine;
use crate::network::{build_prop1, build_two_node_loop, LinkId, LinkKind, Network, Rate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "fig1")]
    Fig1Loop,
    #[serde(rename = "butterfly")]
    Butterfly,
    #[serde(rename = "prop1-combined")]
    Combined,
    #[serde(rename = "prop1-qlnc-only")]
    QlncOnly,
    #[serde(rename = "prop1-superdense-only")]
    SuperdenseOnly,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Fig1Loop => "fig1",
            Mode::Butterfly => "butterfly",
            Mode::Combined => "prop1-combined",
            Mode::QlncOnly => "prop1-qlnc-only",
            Mode::SuperdenseOnly => "prop1-superdense-only",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub seed: u64,
    pub latency: Latency,
    /// Replay every distribution round on a stabilizer tableau and decode
    /// the superdense qubits on that tableau.
    pub oracle: bool,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub mode: Mode,
    pub k: usize,
    pub n_b: u64,
    pub elapsed: u64,
    /// Steps before the first payload unit can move.
    pub setup: u64,
    pub per_pair_bits: Vec<u64>,
    pub paper_literal_elapsed: Option<Rate>,
    pub seed: u64,
    pub latency: Latency,
    /// Distribution rounds whose pairs the tableau confirmed.
    pub oracle_rounds: Option<u64>,
    /// Largest number of Bell pairs any pair had in flight or ready.
    pub inventory_peak: Option<u64>,
    pub log: TrafficLog,
}

impl RunOutput {
    /// Mean over pairs of delivered bits, divided by elapsed steps.
    pub fn avg_rate(&self) -> Rate {
        if self.elapsed == 0 || self.k == 0 {
            return Rate::from_integer(0);
        }
        let total: u64 = self.per_pair_bits.iter().sum();
        Rate::new(total, self.k as u64 * self.elapsed)
    }

    /// Mean per-pair rate once the pipeline is full.
    pub fn steady_rate(&self) -> Rate {
        let span = self.elapsed.saturating_sub(self.setup);
        if span == 0 || self.k == 0 {
            return Rate::from_integer(0);
        }
        let total: u64 = self.per_pair_bits.iter().sum();
        Rate::new(total, self.k as u64 * span)
    }
}

/// `n_b / 2 + latency`; zero for an empty stream.
pub fn combined_elapsed(n_b: u64, latency: Latency) -> u64 {
    if n_b == 0 {
        0
    } else {
        n_b.div_ceil(2) + latency.0
    }
}

pub fn qlnc_only_elapsed(n_b: u64) -> u64 {
    n_b
}

/// `ceil(k n_b / (k + 1)) + 3`: one superdense slot per `k` steps.
pub fn superdense_only_elapsed(k: u64, n_b: u64) -> u64 {
    if n_b == 0 {
        0
    } else {
        (k * n_b).div_ceil(k + 1) + 3
    }
}

/// `((k + 1) / k) n_b + 3`, the time as printed alongside the rate `(k+1)/k`.
pub fn superdense_only_paper_literal(k: u64, n_b: u64) -> Rate {
    Rate::new(k + 1, k) * Rate::from_integer(n_b) + Rate::from_integer(3)
}

pub fn fig1_elapsed(n_b: u64) -> u64 {
    if n_b == 0 {
        0
    } else {
        n_b.div_ceil(2) + 1
    }
}

fn round_rng(seed: u64, round: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(round);
    rng
}

/// Seeded payload: `k` streams of `n_b` bits.
pub fn payload(seed: u64, k: usize, n_b: u64) -> Vec<Vec<bool>> {
    let mut rng = round_rng(seed, u64::MAX);
    (0..k)
        .map(|_| (0..n_b).map(|_| rng.gen()).collect())
        .collect()
}

fn check_k(k: usize) -> Result<(), ProtocolError> {
    if k < 2 {
        return Err(ProtocolError::InvalidArgs(format!(
            "k must be at least 2, got {k}"
        )));
    }
    Ok(())
}

fn direct_links(net: &Network, layout: &Prop1Layout) -> Result<Vec<LinkId>, ProtocolError> {
    layout
        .transmitters
        .iter()
        .zip(&layout.receivers)
        .map(|(&t, &r)| {
            net.find_link(t, r, LinkKind::Quantum)
                .ok_or_else(|| ProtocolError::MissingLink {
                    src: net.name(t).to_string(),
                    dst: net.name(r).to_string(),
                    kind: LinkKind::Quantum,
                })
        })
        .collect()
}

fn verify_streams(sent: &[Vec<bool>], got: &[Vec<bool>]) -> Result<(), ProtocolError> {
    for (i, (s, g)) in sent.iter().zip(got).enumerate() {
        if s != g {
            return Err(ProtocolError::PayloadCorrupted { pair: i + 1 });
        }
    }
    Ok(())
}

fn message(stream: &[bool], at: usize) -> (SuperdenseMessage, usize) {
    match stream.get(at + 1) {
        Some(&low) => (SuperdenseMessage::new(stream[at], low), 2),
        None => (SuperdenseMessage::new(stream[at], false), 1),
    }
}

fn push_message(out: &mut Vec<bool>, m: SuperdenseMessage, width: usize) {
    out.push(m.high);
    if width == 2 {
        out.push(m.low);
    }
}

/// QLNC distribution pipelined with superdense coding over component (a).
///
/// Round `s` starts in step `s`; its pairs carry two bits per pair over the
/// direct link in step `s + latency`.
pub fn run_combined(k: usize, n_b: u64, opts: RunOptions) -> Result<RunOutput, ProtocolError> {
    check_k(k)?;
    if !n_b.is_multiple_of(2) {
        return Err(ProtocolError::InvalidArgs(format!(
            "n_b must be even, got {n_b}"
        )));
    }
    if opts.latency.0 < 3 {
        return Err(ProtocolError::InvalidArgs(format!(
            "latency {} is shorter than the three link stages of a round",
            opts.latency.0
        )));
    }
    let net = build_prop1(k)?;
    let layout = Prop1Layout::from_network(&net)?;
    let direct = direct_links(&net, &layout)?;
    let source = payload(opts.seed, k, n_b);
    let mut received = vec![Vec::with_capacity(n_b as usize); k];
    let mut log = TrafficLog::new();
    let mut inventory = BellInventory::new(k);
    let latency = opts.latency.0;
    let rounds = n_b / 2;
    let mut spare = BellSession::new(2)?;

    for step in 1..=rounds + latency {
        // Pairs from round `step - latency` are spent before the new round
        // adds its own.
        if step > latency {
            for i in 1..=k {
                inventory
                    .consume(i)
                    .map_err(|_| ProtocolError::InventoryUnderflow { pair: i, step })?;
            }
        }
        if step > rounds {
            continue;
        }
        let round = step;
        let mut engine = FormulaEngine::with_rng(round_rng(opts.seed, round));
        let out = qlnc_round(&net, &mut engine, round - 1, opts.latency)?;
        inventory.add_delta(&out.inventory_delta);
        let at = 2 * (round - 1) as usize;
        let send_step = round + latency;
        let mut oracle = if opts.oracle {
            let check = verify_with_oracle(&engine, &out.pairs)?;
            if let Some(p) = check.bell.iter().position(|&b| !b) {
                return Err(ProtocolError::OracleRejected { round, pair: p + 1 });
            }
            let mut session = BellSession::from_tableau(check.tableau);
            for &(t, r) in &out.pairs {
                session.register(t.index(), r.index())?;
            }
            Some(session)
        } else {
            None
        };
        for i in 0..k {
            let (m, width) = message(&source[i], at);
            let decoded = match oracle.as_mut() {
                Some(session) => {
                    let (t, r) = out.pairs[i];
                    session.encode(m, t.index())?;
                    session.decode(t.index(), r.index())?
                }
                None => spare.round_trip(m, 0, 1)?,
            };
            log.push(send_step, direct[i], Payload::Qubit, "superdense qubit");
            push_message(&mut received[i], decoded, width);
        }
        log.extend(out.log);
    }
    log.check(&net)?;
    verify_streams(&source, &received)?;
    let peak = inventory.max_peak();
    if rounds > 0 && peak > latency {
        return Err(ProtocolError::Schedule(format!(
            "{peak} Bell pairs in flight, pipeline depth is {latency}"
        )));
    }
    Ok(RunOutput {
        mode: Mode::Combined,
        k,
        n_b,
        elapsed: log.last_step(),
        setup: latency,
        per_pair_bits: received.iter().map(|s| s.len() as u64).collect(),
        paper_literal_elapsed: None,
        seed: opts.seed,
        latency: opts.latency,
        oracle_rounds: opts.oracle.then_some(rounds),
        inventory_peak: Some(peak),
        log,
    })
}

/// One basis-state bit per pair per step over component (a).
pub fn run_qlnc_only(k: usize, n_b: u64, opts: RunOptions) -> Result<RunOutput, ProtocolError> {
    check_k(k)?;
    let net = build_prop1(k)?;
    let layout = Prop1Layout::from_network(&net)?;
    let direct = direct_links(&net, &layout)?;
    let source = payload(opts.seed, k, n_b);
    let mut received = vec![Vec::with_capacity(n_b as usize); k];
    let mut log = TrafficLog::new();
    for t in 0..n_b {
        for i in 0..k {
            log.push(t + 1, direct[i], Payload::Bit, "basis-state bit");
            received[i].push(source[i][t as usize]);
        }
    }
    log.check(&net)?;
    verify_streams(&source, &received)?;
    Ok(RunOutput {
        mode: Mode::QlncOnly,
        k,
        n_b,
        elapsed: log.last_step(),
        setup: 0,
        per_pair_bits: received.iter().map(|s| s.len() as u64).collect(),
        paper_literal_elapsed: None,
        seed: opts.seed,
        latency: opts.latency,
        oracle_rounds: None,
        inventory_peak: None,
        log,
    })
}

/// Superdense coding with Bell pairs replenished through the `m2 -> m1`
/// bottleneck, shared equally.
///
/// Pair `i` gets its `m`-th Bell pair half over `r_i -> m2` in step
/// `i + m k`, `m2 -> m1` in the next step and `m1 -> t_i` in the one after.
/// The direct link carries one qubit per step from step 4 on; every `k`-th
/// of them is superdense-coded.
pub fn run_superdense_only(
    k: usize,
    n_b: u64,
    opts: RunOptions,
) -> Result<RunOutput, ProtocolError> {
    check_k(k)?;
    let net = build_prop1(k)?;
    let layout = Prop1Layout::from_network(&net)?;
    let direct = direct_links(&net, &layout)?;
    let find = |src, dst| {
        net.find_link(src, dst, LinkKind::Quantum)
            .ok_or_else(|| ProtocolError::MissingLink {
                src: net.name(src).to_string(),
                dst: net.name(dst).to_string(),
                kind: LinkKind::Quantum,
            })
    };
    let bottleneck = find(layout.m2, layout.m1)?;
    let source = payload(opts.seed, k, n_b);
    let mut received = vec![Vec::with_capacity(n_b as usize); k];
    let mut log = TrafficLog::new();
    let mut session = BellSession::new(2)?;
    let kk = k as u64;

    for i in 1..=k {
        let up = find(layout.receivers[i - 1], layout.m2)?;
        let down = find(layout.m1, layout.transmitters[i - 1])?;
        let stream = &source[i - 1];
        let out = &mut received[i - 1];
        let mut sent = 0usize;
        let mut slot = 0u64;
        while sent < stream.len() {
            slot += 1;
            let step = 3 + slot;
            let remaining = stream.len() - sent;
            if slot.is_multiple_of(kk) && remaining >= 2 {
                let m = slot / kk - 1;
                let start = i as u64 + m * kk;
                log.push(start, up, Payload::Qubit, "Bell half to m2");
                log.push(start + 1, bottleneck, Payload::Qubit, "Bell half to m1");
                log.push(start + 2, down, Payload::Qubit, "Bell half to t");
                let (msg, width) = message(stream, sent);
                let decoded = session.round_trip(msg, 0, 1)?;
                log.push(step, direct[i - 1], Payload::Qubit, "superdense qubit");
                push_message(out, decoded, width);
                sent += width;
            } else {
                log.push(step, direct[i - 1], Payload::Bit, "basis-state bit");
                out.push(stream[sent]);
                sent += 1;
            }
        }
    }
    log.check(&net)?;
    verify_streams(&source, &received)?;
    Ok(RunOutput {
        mode: Mode::SuperdenseOnly,
        k,
        n_b,
        elapsed: log.last_step(),
        setup: 3,
        per_pair_bits: received.iter().map(|s| s.len() as u64).collect(),
        paper_literal_elapsed: Some(superdense_only_paper_literal(kk, n_b)),
        seed: opts.seed,
        latency: opts.latency,
        oracle_rounds: None,
        inventory_peak: None,
        log,
    })
}

/// Two-node loop: `B -> A` streams Bell halves, `A -> B` streams superdense
/// qubits one step behind.
pub fn run_fig1_loop(n_b: u64, opts: RunOptions) -> Result<RunOutput, ProtocolError> {
    if !n_b.is_multiple_of(2) {
        return Err(ProtocolError::InvalidArgs(format!(
            "n_b must be even, got {n_b}"
        )));
    }
    let net = build_two_node_loop();
    let a = net
        .transmitter(1)
        .ok_or_else(|| ProtocolError::NotProp1("no A".into()))?;
    let b = net
        .receiver(1)
        .ok_or_else(|| ProtocolError::NotProp1("no B".into()))?;
    let missing = |s, d| ProtocolError::MissingLink {
        src: net.name(s).to_string(),
        dst: net.name(d).to_string(),
        kind: LinkKind::Quantum,
    };
    let forward = net
        .find_link(a, b, LinkKind::Quantum)
        .ok_or_else(|| missing(a, b))?;
    let back = net
        .find_link(b, a, LinkKind::Quantum)
        .ok_or_else(|| missing(b, a))?;
    let source = payload(opts.seed, 1, n_b);
    let mut received = Vec::with_capacity(n_b as usize);
    let mut log = TrafficLog::new();
    let mut session = BellSession::new(2)?;
    for m in 1..=n_b / 2 {
        log.push(m, back, Payload::Qubit, "Bell half to A");
        let (msg, width) = message(&source[0], 2 * (m - 1) as usize);
        let decoded = session.round_trip(msg, 0, 1)?;
        log.push(m + 1, forward, Payload::Qubit, "superdense qubit");
        push_message(&mut received, decoded, width);
    }
    log.check(&net)?;
    verify_streams(&source, std::slice::from_ref(&received))?;
    Ok(RunOutput {
        mode: Mode::Fig1Loop,
        k: 1,
        n_b,
        elapsed: log.last_step(),
        setup: 1,
        per_pair_bits: vec![received.len() as u64],
        paper_literal_elapsed: None,
        seed: opts.seed,
        latency: opts.latency,
        oracle_rounds: None,
        inventory_peak: None,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(seed: u64) -> RunOptions {
        RunOptions {
            seed,
            ..RunOptions::default()
        }
    }

    #[test]
    fn closed_forms_at_spot_values() {
        let l = Latency::default();
        assert_eq!(combined_elapsed(1000, l), 503);
        assert_eq!(qlnc_only_elapsed(1000), 1000);
        assert_eq!(superdense_only_elapsed(10, 1000), 913);
        assert_eq!(
            superdense_only_paper_literal(10, 1000),
            Rate::from_integer(1103)
        );
        assert_eq!(superdense_only_elapsed(10, 1100), 1003);
        assert_eq!(combined_elapsed(40000, l), 20003);
        assert_eq!(superdense_only_elapsed(19, 40000), 38003);
        assert_eq!(fig1_elapsed(2), 2);
        assert_eq!(combined_elapsed(2, l), 4);
        assert_eq!(combined_elapsed(2, Latency(4)), 5);
    }

    #[test]
    fn combined_small() {
        let out = run_combined(2, 2, opts(0)).unwrap();
        assert_eq!(out.elapsed, 4);
        assert_eq!(out.per_pair_bits, vec![2, 2]);
        assert_eq!(out.inventory_peak, Some(1));
    }

    #[test]
    fn combined_matches_closed_form() {
        for k in 2..=4 {
            for n_b in [2u64, 4, 10, 32] {
                for latency in [3, 4] {
                    let o = RunOptions {
                        seed: 7,
                        latency: Latency(latency),
                        oracle: false,
                    };
                    let out = run_combined(k, n_b, o).unwrap();
                    assert_eq!(out.elapsed, combined_elapsed(n_b, Latency(latency)));
                    assert!(out.inventory_peak.unwrap() <= latency);
                }
            }
        }
    }

    #[test]
    fn combined_with_oracle() {
        let o = RunOptions {
            seed: 3,
            oracle: true,
            ..RunOptions::default()
        };
        let out = run_combined(3, 8, o).unwrap();
        assert_eq!(out.oracle_rounds, Some(4));
        assert_eq!(out.per_pair_bits, vec![8; 3]);
    }

    #[test]
    fn combined_rejects_odd_stream() {
        assert!(matches!(
            run_combined(2, 3, opts(0)),
            Err(ProtocolError::InvalidArgs(_))
        ));
        assert!(matches!(
            run_combined(1, 2, opts(0)),
            Err(ProtocolError::InvalidArgs(_))
        ));
    }

    #[test]
    fn qlnc_only_rate_is_one() {
        let out = run_qlnc_only(3, 50, opts(1)).unwrap();
        assert_eq!(out.elapsed, 50);
        assert_eq!(out.avg_rate(), Rate::from_integer(1));
        let empty = run_qlnc_only(3, 0, opts(1)).unwrap();
        assert_eq!(empty.elapsed, 0);
    }

    #[test]
    fn superdense_only_matches_closed_form() {
        for k in 2..=5u64 {
            for n_b in [1u64, 2, 3, 7, 11, 24, 25, 60] {
                let out = run_superdense_only(k as usize, n_b, opts(2)).unwrap();
                assert_eq!(
                    out.elapsed,
                    superdense_only_elapsed(k, n_b),
                    "k={k} n_b={n_b}"
                );
            }
        }
    }

    #[test]
    fn superdense_only_steady_rate() {
        let out = run_superdense_only(10, 1100, opts(0)).unwrap();
        assert_eq!(out.elapsed, 1003);
        assert_eq!(out.steady_rate(), Rate::new(11, 10));
        assert_eq!(out.paper_literal_elapsed, Some(Rate::from_integer(1213)));
    }

    #[test]
    fn fig1_pipeline() {
        let out = run_fig1_loop(2, opts(0)).unwrap();
        assert_eq!(out.elapsed, 2);
        let out = run_fig1_loop(200, opts(0)).unwrap();
        assert_eq!(out.elapsed, 101);
        assert_eq!(out.steady_rate(), Rate::from_integer(2));
        assert!(run_fig1_loop(3, opts(0)).is_err());
    }

    #[test]
    fn payload_is_seeded() {
        assert_eq!(payload(5, 2, 64), payload(5, 2, 64));
        assert_ne!(payload(5, 2, 64), payload(6, 2, 64));
    }
}
