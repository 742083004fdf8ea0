//! Throughput reports: JSON for machines, aligned text for people.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::network::{format_rate, opt_rate_str, rate_f64, rate_str, Rate};
use crate::protocol::runs::{
    combined_elapsed, fig1_elapsed, qlnc_only_elapsed, superdense_only_elapsed,
    superdense_only_paper_literal, Mode, RunOutput,
};
use crate::protocol::Latency;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub mode: Mode,
    pub k: usize,
    pub n_b: u64,
    pub elapsed_steps: u64,
    /// Mean delivered bits per pair over the whole run, per step.
    #[serde(with = "rate_str")]
    pub avg_rate: Rate,
    /// The same after the pipeline-fill steps.
    #[serde(with = "rate_str")]
    pub steady_rate: Rate,
    pub per_pair_bits: Vec<u64>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "opt_rate_str"
    )]
    pub paper_literal_elapsed: Option<Rate>,
    pub seed: u64,
    pub latency: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<String>,
    /// `true` when timings come from the closed forms instead of a run.
    #[serde(default)]
    pub closed_form: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

fn latency_flags(mode: Mode, latency: Latency) -> Vec<String> {
    if mode == Mode::Combined && !latency.is_default() {
        vec![format!(
            "latency {} differs from the default 3-step round accounting",
            latency.0
        )]
    } else {
        Vec::new()
    }
}

fn rate_over(total: u64, k: usize, steps: u64) -> Rate {
    if steps == 0 || k == 0 {
        Rate::from_integer(0)
    } else {
        Rate::new(total, k as u64 * steps)
    }
}

impl ThroughputReport {
    pub fn from_run(run: &RunOutput) -> Self {
        let oracle = run.oracle_rounds.map(|rounds| {
            format!(
                "all {} pairs Bell-verified in each of {} rounds",
                run.k, rounds
            )
        });
        ThroughputReport {
            mode: run.mode,
            k: run.k,
            n_b: run.n_b,
            elapsed_steps: run.elapsed,
            avg_rate: run.avg_rate(),
            steady_rate: run.steady_rate(),
            per_pair_bits: run.per_pair_bits.clone(),
            paper_literal_elapsed: run.paper_literal_elapsed,
            seed: run.seed,
            latency: run.latency.0,
            oracle,
            closed_form: false,
            flags: latency_flags(run.mode, run.latency),
        }
    }

    /// Timing from the closed forms, for sizes too large to simulate.
    pub fn closed_form(mode: Mode, k: usize, n_b: u64, seed: u64, latency: Latency) -> Self {
        let kk = k as u64;
        let (elapsed, setup, literal) = match mode {
            Mode::Combined => (combined_elapsed(n_b, latency), latency.0, None),
            Mode::QlncOnly => (qlnc_only_elapsed(n_b), 0, None),
            Mode::SuperdenseOnly => (
                superdense_only_elapsed(kk, n_b),
                3,
                Some(superdense_only_paper_literal(kk, n_b)),
            ),
            Mode::Fig1Loop => (fig1_elapsed(n_b), 1, None),
            Mode::Butterfly => (if n_b == 0 { 0 } else { n_b + 2 }, 2, None),
        };
        let total = n_b * kk;
        ThroughputReport {
            mode,
            k,
            n_b,
            elapsed_steps: elapsed,
            avg_rate: rate_over(total, k, elapsed),
            steady_rate: rate_over(total, k, elapsed.saturating_sub(setup)),
            per_pair_bits: vec![n_b; k],
            paper_literal_elapsed: literal,
            seed,
            latency: latency.0,
            oracle: None,
            closed_form: true,
            flags: latency_flags(mode, latency),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode: {}", self.mode.as_str());
        let _ = writeln!(s, "k: {}", self.k);
        let _ = writeln!(s, "n_b: {}", self.n_b);
        let _ = writeln!(s, "elapsed_steps: {}", self.elapsed_steps);
        let _ = writeln!(
            s,
            "avg_rate: {} ({:.4})",
            format_rate(&self.avg_rate),
            rate_f64(&self.avg_rate)
        );
        let _ = writeln!(
            s,
            "steady_rate: {} ({:.4})",
            format_rate(&self.steady_rate),
            rate_f64(&self.steady_rate)
        );
        if let Some(r) = &self.paper_literal_elapsed {
            let _ = writeln!(s, "paper_literal_elapsed: {}", format_rate(r));
        }
        let bits: Vec<String> = self.per_pair_bits.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "per_pair_bits: {}", bits.join(" "));
        let _ = writeln!(s, "seed: {}", self.seed);
        if self.mode == Mode::Combined {
            let _ = writeln!(s, "latency: {}", self.latency);
        }
        if self.closed_form {
            let _ = writeln!(s, "timing: closed form");
        }
        if let Some(o) = &self.oracle {
            let _ = writeln!(s, "oracle: {o}");
        }
        for f in &self.flags {
            let _ = writeln!(s, "flag: {f}");
        }
        s
    }
}

/// The three separation-network modes side by side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub combined: ThroughputReport,
    pub qlnc_only: ThroughputReport,
    pub superdense_only: ThroughputReport,
    /// Superdense-only elapsed over combined elapsed.
    #[serde(with = "rate_str")]
    pub superdense_ratio: Rate,
    /// QLNC-only elapsed over combined elapsed.
    #[serde(with = "rate_str")]
    pub qlnc_ratio: Rate,
}

impl Comparison {
    pub fn new(
        combined: ThroughputReport,
        qlnc_only: ThroughputReport,
        superdense_only: ThroughputReport,
    ) -> Self {
        let ratio = |r: &ThroughputReport| {
            if combined.elapsed_steps == 0 {
                Rate::from_integer(0)
            } else {
                Rate::new(r.elapsed_steps, combined.elapsed_steps)
            }
        };
        Comparison {
            superdense_ratio: ratio(&superdense_only),
            qlnc_ratio: ratio(&qlnc_only),
            combined,
            qlnc_only,
            superdense_only,
        }
    }

    /// The smaller of the two ratios.
    pub fn separation(&self) -> Rate {
        self.superdense_ratio.min(self.qlnc_ratio)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("comparison serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let c = &self.combined;
        let _ = writeln!(s, "k={} n_b={} seed={}", c.k, c.n_b, c.seed);
        let _ = writeln!(
            s,
            "{:<22} {:>8} {:>14} {:>12}",
            "mode", "elapsed", "paper_literal", "avg_rate"
        );
        for r in [&self.combined, &self.qlnc_only, &self.superdense_only] {
            let literal = r
                .paper_literal_elapsed
                .map(|x| {
                    if x.is_integer() {
                        x.to_integer().to_string()
                    } else {
                        format_rate(&x)
                    }
                })
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "{:<22} {:>8} {:>14} {:>12.4}",
                r.mode.as_str(),
                r.elapsed_steps,
                literal,
                rate_f64(&r.avg_rate)
            );
        }
        let _ = writeln!(
            s,
            "separation: superdense-only/combined = {} ({:.4}), qlnc-only/combined = {} ({:.4})",
            format_rate(&self.superdense_ratio),
            rate_f64(&self.superdense_ratio),
            format_rate(&self.qlnc_ratio),
            rate_f64(&self.qlnc_ratio)
        );
        if c.closed_form {
            let _ = writeln!(s, "timing: closed form");
        }
        for f in &c.flags {
            let _ = writeln!(s, "flag: {f}");
        }
        s
    }
}
