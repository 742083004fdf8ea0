//! `qlnc <scenario> [key=value ...]`
//!
//! Exit codes: 0 success, 1 invariant violation, 2 bad configuration or
//! unreadable files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use thiserror::Error;

use crate::decomposition::{
    achieved_rate, find_decomposition_greedy, validate_decomposition, Decomposition,
};
use crate::network::{build_butterfly, build_prop1, build_two_node_loop, format_rate, Network};
use crate::protocol::butterfly::{format_bits, parse_bits};
use crate::protocol::runs::{
    run_combined, run_fig1_loop, run_qlnc_only, run_superdense_only, Mode, RunOptions,
};
use crate::protocol::{run_butterfly, Latency, ProtocolError};
use crate::report::{Comparison, ThroughputReport};

pub const USAGE: &str = "\
usage: qlnc <scenario> [key=value ...]

scenarios:
  fig1                    n_b seed out
  butterfly               b1 b2 out
  prop1-combined          k n_b seed oracle=on|off latency out
  prop1-qlnc-only         k n_b seed out
  prop1-superdense-only   k n_b seed out
  prop1-compare           k n_b seed latency simulate=auto|on|off out
  decompose               net=FILE | topology=loop|butterfly|prop1 [k] out
  validate                net=FILE | topology=... [k] [decomp=FILE]

defaults: k=10 n_b=1000 seed=0 oracle=off latency=3 simulate=auto
";

/// Largest `k` the stabilizer oracle is run for.
pub const ORACLE_MAX_K: usize = 6;

/// `prop1-compare` simulates when `k * k * n_b` is at most this.
pub const SIMULATE_BUDGET: u64 = 2_000_000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    BadConfig(String),
    #[error("{path}: {msg}")]
    File { path: String, msg: String },
    #[error("{0}")]
    Violation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Violation(_) => 1,
            CliError::BadConfig(_) | CliError::File { .. } => 2,
        }
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        if e.is_config_error() {
            CliError::BadConfig(e.to_string())
        } else {
            CliError::Violation(e.to_string())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Fig1,
    Butterfly,
    Combined,
    QlncOnly,
    SuperdenseOnly,
    Compare,
    Decompose,
    Validate,
}

impl Scenario {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "fig1" => Scenario::Fig1,
            "butterfly" => Scenario::Butterfly,
            "prop1-combined" => Scenario::Combined,
            "prop1-qlnc-only" => Scenario::QlncOnly,
            "prop1-superdense-only" => Scenario::SuperdenseOnly,
            "prop1-compare" => Scenario::Compare,
            "decompose" => Scenario::Decompose,
            "validate" => Scenario::Validate,
            _ => return None,
        })
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Scenario::Fig1 => &["n_b", "seed", "out"],
            Scenario::Butterfly => &["b1", "b2", "out"],
            Scenario::Combined => &["k", "n_b", "seed", "oracle", "latency", "out"],
            Scenario::QlncOnly | Scenario::SuperdenseOnly => &["k", "n_b", "seed", "out"],
            Scenario::Compare => &["k", "n_b", "seed", "latency", "simulate", "out"],
            Scenario::Decompose => &["net", "topology", "k", "out"],
            Scenario::Validate => &["net", "topology", "k", "decomp"],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Simulate {
    Auto,
    On,
    Off,
}

#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub k: usize,
    pub n_b: u64,
    pub seed: u64,
    pub oracle: bool,
    pub latency: Latency,
    pub simulate: Simulate,
    pub b1: Vec<bool>,
    pub b2: Vec<bool>,
    pub net: Option<PathBuf>,
    pub topology: Option<String>,
    pub decomp: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::BadConfig(msg.into())
}

fn number<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| bad(format!("{key}={v}: expected a non-negative integer")))
}

impl ScenarioConfig {
    pub fn parse<S: AsRef<str>>(args: &[S]) -> Result<Self, CliError> {
        let (first, rest) = args.split_first().ok_or_else(|| bad("missing scenario"))?;
        let scenario = Scenario::parse(first.as_ref())
            .ok_or_else(|| bad(format!("unknown scenario {:?}", first.as_ref())))?;
        let mut kv = BTreeMap::new();
        for a in rest {
            let a = a.as_ref();
            let (k, v) = a
                .split_once('=')
                .ok_or_else(|| bad(format!("{a:?}: expected key=value")))?;
            if !scenario.keys().contains(&k) {
                return Err(bad(format!("{k} is not a setting of {}", first.as_ref())));
            }
            if kv.insert(k.to_string(), v.to_string()).is_some() {
                return Err(bad(format!("{k} given twice")));
            }
        }
        let get = |k: &str| kv.get(k).map(String::as_str);
        let bits = |k: &str, default: &str| {
            let v = get(k).unwrap_or(default);
            parse_bits(v).ok_or_else(|| bad(format!("{k}={v}: expected a string of 0 and 1")))
        };
        let cfg = ScenarioConfig {
            scenario,
            k: get("k").map(|v| number("k", v)).transpose()?.unwrap_or(10),
            n_b: get("n_b")
                .map(|v| number("n_b", v))
                .transpose()?
                .unwrap_or(1000),
            seed: get("seed")
                .map(|v| number("seed", v))
                .transpose()?
                .unwrap_or(0),
            oracle: match get("oracle").unwrap_or("off") {
                "on" => true,
                "off" => false,
                v => return Err(bad(format!("oracle={v}: expected on or off"))),
            },
            latency: match get("latency").unwrap_or("3") {
                "3" => Latency(3),
                "4" => Latency(4),
                v => return Err(bad(format!("latency={v}: expected 3 or 4"))),
            },
            simulate: match get("simulate").unwrap_or("auto") {
                "auto" => Simulate::Auto,
                "on" => Simulate::On,
                "off" => Simulate::Off,
                v => return Err(bad(format!("simulate={v}: expected auto, on or off"))),
            },
            b1: bits("b1", "1011")?,
            b2: bits("b2", "0110")?,
            net: get("net").map(PathBuf::from),
            topology: get("topology").map(str::to_string),
            decomp: get("decomp").map(PathBuf::from),
            out: get("out").map(PathBuf::from),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        use Scenario::*;
        let prop1 = matches!(
            self.scenario,
            Combined | QlncOnly | SuperdenseOnly | Compare
        );
        if prop1 && self.k < 2 {
            return Err(bad(format!("k={}: need at least 2 pairs", self.k)));
        }
        let even = matches!(self.scenario, Fig1 | Combined | Compare);
        if even && !self.n_b.is_multiple_of(2) {
            return Err(bad(format!("n_b={}: must be even", self.n_b)));
        }
        if self.oracle && self.k > ORACLE_MAX_K {
            return Err(bad(format!(
                "oracle=on supports k <= {ORACLE_MAX_K}; the tableau for k={} would have {} qubits",
                self.k,
                self.k * self.k + 3 * self.k
            )));
        }
        if self.scenario == Butterfly && self.b1.len() != self.b2.len() {
            return Err(bad(format!(
                "b1 and b2 differ in length ({} vs {})",
                self.b1.len(),
                self.b2.len()
            )));
        }
        if matches!(self.scenario, Decompose | Validate) {
            match (&self.net, &self.topology) {
                (None, None) => return Err(bad("give net=FILE or topology=NAME")),
                (Some(_), Some(_)) => return Err(bad("net and topology are exclusive")),
                _ => {}
            }
        }
        Ok(())
    }

    fn options(&self) -> RunOptions {
        RunOptions {
            seed: self.seed,
            latency: self.latency,
            oracle: self.oracle,
        }
    }

    fn network(&self) -> Result<Network, CliError> {
        if let Some(path) = &self.net {
            let text = read(path)?;
            return Network::from_json(&text).map_err(|e| CliError::File {
                path: path.display().to_string(),
                msg: e.to_string(),
            });
        }
        match self.topology.as_deref() {
            Some("loop") => Ok(build_two_node_loop()),
            Some("butterfly") => Ok(build_butterfly()),
            Some("prop1") => build_prop1(self.k).map_err(|e| bad(e.to_string())),
            Some(other) => Err(bad(format!("unknown topology {other:?}"))),
            None => Err(bad("no network given")),
        }
    }
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::File {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

fn write(path: &PathBuf, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::File {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

fn emit(
    cfg: &ScenarioConfig,
    table: String,
    json: impl FnOnce() -> String,
) -> Result<String, CliError> {
    if let Some(out) = &cfg.out {
        write(out, &json())?;
    }
    Ok(table)
}

fn report_for(cfg: &ScenarioConfig, mode: Mode) -> Result<ThroughputReport, CliError> {
    let o = cfg.options();
    let run = match mode {
        Mode::Combined => run_combined(cfg.k, cfg.n_b, o)?,
        Mode::QlncOnly => run_qlnc_only(cfg.k, cfg.n_b, o)?,
        Mode::SuperdenseOnly => run_superdense_only(cfg.k, cfg.n_b, o)?,
        Mode::Fig1Loop => run_fig1_loop(cfg.n_b, o)?,
        Mode::Butterfly => unreachable!("butterfly is reported separately"),
    };
    Ok(ThroughputReport::from_run(&run))
}

/// Runs a parsed configuration; returns what goes to standard output.
pub fn run(cfg: &ScenarioConfig) -> Result<String, CliError> {
    match cfg.scenario {
        Scenario::Fig1 => one(cfg, Mode::Fig1Loop),
        Scenario::Combined => one(cfg, Mode::Combined),
        Scenario::QlncOnly => one(cfg, Mode::QlncOnly),
        Scenario::SuperdenseOnly => one(cfg, Mode::SuperdenseOnly),
        Scenario::Butterfly => butterfly(cfg),
        Scenario::Compare => compare(cfg),
        Scenario::Decompose => decompose(cfg),
        Scenario::Validate => validate(cfg),
    }
}

fn one(cfg: &ScenarioConfig, mode: Mode) -> Result<String, CliError> {
    let r = report_for(cfg, mode)?;
    emit(cfg, r.to_table(), || r.to_json())
}

fn butterfly(cfg: &ScenarioConfig) -> Result<String, CliError> {
    let out = run_butterfly(&cfg.b1, &cfg.b2)?;
    if out.out1 != cfg.b1 || out.out2 != cfg.b2 {
        return Err(CliError::Violation(
            "butterfly sinks decoded the wrong streams".into(),
        ));
    }
    let n = cfg.b1.len() as u64;
    let elapsed = out.elapsed;
    let rate = |steps: u64| {
        if steps == 0 {
            crate::network::Rate::from_integer(0)
        } else {
            crate::network::Rate::new(n, steps)
        }
    };
    let report = ThroughputReport {
        mode: Mode::Butterfly,
        k: 2,
        n_b: n,
        elapsed_steps: elapsed,
        avg_rate: rate(elapsed),
        steady_rate: rate(elapsed.saturating_sub(2)),
        per_pair_bits: vec![n, n],
        paper_literal_elapsed: None,
        seed: 0,
        latency: 0,
        oracle: None,
        closed_form: false,
        flags: Vec::new(),
    };
    let mut s = String::new();
    let _ = writeln!(s, "b1:         {}", format_bits(&cfg.b1));
    let _ = writeln!(s, "b2:         {}", format_bits(&cfg.b2));
    let _ = writeln!(s, "bottleneck: {}", format_bits(&out.bottleneck));
    let _ = writeln!(s, "out1:       {}", format_bits(&out.out1));
    let _ = writeln!(s, "out2:       {}", format_bits(&out.out2));
    let _ = writeln!(
        s,
        "bottleneck peak: {} bit/step",
        out.log.peak_per_step(out.bottleneck_link)
    );
    s.push_str(&report.to_table());
    emit(cfg, s, || report.to_json())
}

fn compare(cfg: &ScenarioConfig) -> Result<String, CliError> {
    let simulate = match cfg.simulate {
        Simulate::On => true,
        Simulate::Off => false,
        Simulate::Auto => {
            (cfg.k as u64)
                .saturating_mul(cfg.k as u64)
                .saturating_mul(cfg.n_b)
                <= SIMULATE_BUDGET
        }
    };
    let modes = [Mode::Combined, Mode::QlncOnly, Mode::SuperdenseOnly];
    let mut rows = Vec::with_capacity(3);
    for mode in modes {
        rows.push(if simulate {
            report_for(cfg, mode)?
        } else {
            ThroughputReport::closed_form(mode, cfg.k, cfg.n_b, cfg.seed, cfg.latency)
        });
    }
    let sd = rows.pop().expect("three rows");
    let q = rows.pop().expect("three rows");
    let c = rows.pop().expect("three rows");
    let cmp = Comparison::new(c, q, sd);
    emit(cfg, cmp.to_table(), || cmp.to_json())
}

fn decompose(cfg: &ScenarioConfig) -> Result<String, CliError> {
    let net = cfg.network()?;
    if let Some(v) = net.validate().first() {
        return Err(bad(format!("network is invalid: {v}")));
    }
    let d = find_decomposition_greedy(&net);
    let summary = d
        .clone()
        .validate(&net)
        .map(|v| achieved_rate(&v))
        .map_err(|e| {
            CliError::Violation(format!("heuristic produced an invalid decomposition: {e}"))
        })?;
    let mut s = String::new();
    let _ = writeln!(s, "pairs: {}", net.pairs());
    for (name, part) in [("c1", &d.c1), ("c2", &d.c2), ("c3", &d.c3), ("c4", &d.c4)] {
        let _ = writeln!(s, "{name}: {} links", part.len());
    }
    let _ = writeln!(s, "w_tilde: {}", format_rate(&summary.w_tilde));
    let _ = writeln!(s, "w: {}", format_rate(&summary.w));
    let _ = writeln!(s, "achieved: {}", format_rate(&summary.achieved));
    emit(cfg, s, || d.to_json())
}

fn validate(cfg: &ScenarioConfig) -> Result<String, CliError> {
    let net = cfg.network()?;
    let mut s = String::new();
    let violations = net.validate();
    for v in &violations {
        let _ = writeln!(s, "network: {v}");
    }
    let mut bad_count = violations.len();
    if let Some(path) = &cfg.decomp {
        let text = read(path)?;
        let d = Decomposition::from_json(&text).map_err(|e| CliError::File {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        let dv = validate_decomposition(&net, &d);
        for v in &dv {
            let _ = writeln!(s, "decomposition: {v}");
        }
        bad_count += dv.len();
        if dv.is_empty() {
            let summary = achieved_rate(&d.validate(&net).expect("no violations"));
            let _ = writeln!(s, "achieved: {}", format_rate(&summary.achieved));
        }
    }
    if bad_count > 0 {
        return Err(CliError::Violation(format!("{s}{bad_count} violations")));
    }
    s.push_str("valid\n");
    Ok(s)
}

/// Parses and runs; returns `(exit code, stdout, stderr)`.
pub fn main_with<S: AsRef<str>>(args: &[S]) -> (i32, String, String) {
    let cfg = match ScenarioConfig::parse(args) {
        Ok(c) => c,
        Err(e) => {
            return (
                e.exit_code(),
                String::new(),
                format!("error: {e}\n\n{USAGE}"),
            )
        }
    };
    match run(&cfg) {
        Ok(out) => (0, out, String::new()),
        Err(e) => (e.exit_code(), String::new(), format!("error: {e}\n")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        main_with(args)
    }

    #[test]
    fn compare_table() {
        let (code, out, _) = run_args(&["prop1-compare", "k=10", "n_b=1000"]);
        assert_eq!(code, 0);
        for needle in [" 503 ", " 1000 ", " 913 ", " 1103 "] {
            assert!(out.contains(needle), "{needle} missing from\n{out}");
        }
    }

    #[test]
    fn bad_configs_exit_two() {
        for args in [
            &["nope"][..],
            &["prop1-combined", "k=1"],
            &["prop1-combined", "n_b=3"],
            &["prop1-combined", "k=7", "oracle=on"],
            &["prop1-combined", "latency=5"],
            &["fig1", "k=3"],
            &["butterfly", "b1=10", "b2=1"],
            &["decompose"],
            &["validate", "net=/nonexistent/net.json"],
        ] {
            assert_eq!(run_args(args).0, 2, "{args:?}");
        }
    }

    #[test]
    fn oracle_cap_message() {
        let (_, _, err) = run_args(&["prop1-combined", "k=7", "oracle=on"]);
        assert!(err.contains("k <= 6"));
    }
}
