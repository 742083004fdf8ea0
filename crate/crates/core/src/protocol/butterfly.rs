//! XOR network code on the butterfly.
//!
//! Each source sends its bit straight to the far sink and into the coding
//! node `u`; `u` forwards `b1 ^ b2` over the bottleneck `u -> v`, and `v` fans
//! it out. Bit `t` leaves the sources in step `t` and is decoded at the end of
//! step `t + 2`.

use super::traffic::{Payload, TrafficLog};
use super::ProtocolError;
use crate::network::{build_butterfly, LinkId, LinkKind, Network};

#[derive(Clone, Debug)]
pub struct ButterflyOutput {
    /// Stream recovered at the sink of `b1` (`y1`).
    pub out1: Vec<bool>,
    /// Stream recovered at the sink of `b2` (`y2`).
    pub out2: Vec<bool>,
    /// What crossed the bottleneck, one bit per step.
    pub bottleneck: Vec<bool>,
    pub bottleneck_link: LinkId,
    pub elapsed: u64,
    pub log: TrafficLog,
    pub network: Network,
}

pub fn run_butterfly(b1: &[bool], b2: &[bool]) -> Result<ButterflyOutput, ProtocolError> {
    if b1.len() != b2.len() {
        return Err(ProtocolError::LengthMismatch(b1.len(), b2.len()));
    }
    let net = build_butterfly();
    let id = |name: &str| {
        net.find_node(name)
            .ok_or_else(|| ProtocolError::Schedule(format!("butterfly has no node {name}")))
    };
    let (s1, s2, u, v, y1, y2) = (
        id("s1")?,
        id("s2")?,
        id("u")?,
        id("v")?,
        id("y1")?,
        id("y2")?,
    );
    let link = |a, b| {
        net.find_link(a, b, LinkKind::Classical)
            .ok_or_else(|| ProtocolError::MissingLink {
                src: net.name(a).to_string(),
                dst: net.name(b).to_string(),
                kind: LinkKind::Classical,
            })
    };
    let (s1u, s2u, uv) = (link(s1, u)?, link(s2, u)?, link(u, v)?);
    let (vy1, vy2, s1y2, s2y1) = (link(v, y1)?, link(v, y2)?, link(s1, y2)?, link(s2, y1)?);

    let mut log = TrafficLog::new();
    let mut bottleneck = Vec::with_capacity(b1.len());
    let mut out1 = Vec::with_capacity(b1.len());
    let mut out2 = Vec::with_capacity(b1.len());
    for (t, (&x1, &x2)) in b1.iter().zip(b2).enumerate() {
        let step = t as u64 + 1;
        log.push(step, s1u, Payload::Bit, "b1 to coder");
        log.push(step, s2u, Payload::Bit, "b2 to coder");
        log.push(step, s1y2, Payload::Bit, "b1 direct");
        log.push(step, s2y1, Payload::Bit, "b2 direct");
        let coded = x1 ^ x2;
        log.push(step + 1, uv, Payload::Bit, "b1^b2");
        log.push(step + 2, vy1, Payload::Bit, "b1^b2 fanout");
        log.push(step + 2, vy2, Payload::Bit, "b1^b2 fanout");
        bottleneck.push(coded);
        // Sinks hold the direct bit until the coded bit arrives.
        out1.push(coded ^ x2);
        out2.push(coded ^ x1);
    }
    log.check(&net)?;
    let elapsed = log.last_step();
    Ok(ButterflyOutput {
        out1,
        out2,
        bottleneck,
        bottleneck_link: uv,
        elapsed,
        log,
        network: net,
    })
}

/// Parses a `0`/`1` string.
pub fn parse_bits(s: &str) -> Option<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

pub fn format_bits(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_streams() {
        let b1 = parse_bits("1011").unwrap();
        let b2 = parse_bits("0110").unwrap();
        let out = run_butterfly(&b1, &b2).unwrap();
        assert_eq!(format_bits(&out.out1), "1011");
        assert_eq!(format_bits(&out.out2), "0110");
        assert_eq!(format_bits(&out.bottleneck), "1101");
        assert_eq!(out.elapsed, 6);
        assert_eq!(out.log.peak_per_step(out.bottleneck_link), 1);
    }

    #[test]
    fn equal_streams_give_zero_bottleneck() {
        let b = parse_bits("110100").unwrap();
        let out = run_butterfly(&b, &b).unwrap();
        assert!(out.bottleneck.iter().all(|&x| !x));
        assert_eq!(out.out1, b);
        assert_eq!(out.out2, b);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            run_butterfly(&[true], &[]),
            Err(ProtocolError::LengthMismatch(1, 0))
        ));
        assert!(parse_bits("01x").is_none());
    }

    #[test]
    fn empty_streams() {
        let out = run_butterfly(&[], &[]).unwrap();
        assert_eq!(out.elapsed, 0);
        assert!(out.log.is_empty());
    }

    proptest! {
        #[test]
        fn random_streams_round_trip(
            b1 in proptest::collection::vec(any::<bool>(), 128),
            b2 in proptest::collection::vec(any::<bool>(), 128),
        ) {
            let out = run_butterfly(&b1, &b2).unwrap();
            prop_assert_eq!(&out.out1, &b1);
            prop_assert_eq!(&out.out2, &b2);
            prop_assert_eq!(out.log.peak_per_step(out.bottleneck_link), 1);
            prop_assert_eq!(out.log.on_link(out.bottleneck_link).count(), 128);
        }
    }
}
