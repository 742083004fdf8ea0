use std::fs;
use std::process::{Command, Output};

use qlnc::decomposition::Decomposition;
use qlnc::network::{build_prop1, Network};
use qlnc::report::{Comparison, ThroughputReport};

fn qlnc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlnc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn compare_rows() {
    let o = qlnc(&["prop1-compare", "k=10", "n_b=1000"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row = |mode: &str| {
        text.lines()
            .find(|l| l.starts_with(mode))
            .unwrap_or_else(|| panic!("no {mode} row in\n{text}"))
            .split_whitespace()
            .map(str::to_string)
            .collect::<Vec<_>>()
    };
    assert_eq!(row("prop1-combined ")[1], "503");
    assert_eq!(row("prop1-qlnc-only")[1], "1000");
    let sd = row("prop1-superdense-only");
    assert_eq!(sd[1], "913");
    assert_eq!(sd[2], "1103");
    assert!(text.contains("separation:"));
}

#[test]
fn butterfly_defaults() {
    let o = qlnc(&["butterfly"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("out1:       1011"));
    assert!(text.contains("out2:       0110"));
}

#[test]
fn oracle_line() {
    let o = qlnc(&["prop1-combined", "k=3", "n_b=4", "oracle=on"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("oracle: all 3 pairs Bell-verified"));
}

#[test]
fn exit_codes() {
    assert_eq!(qlnc(&[]).status.code(), Some(2));
    assert_eq!(qlnc(&["--help"]).status.code(), Some(0));
    assert_eq!(
        qlnc(&["prop1-combined", "k=9", "oracle=on"]).status.code(),
        Some(2)
    );
    assert_eq!(qlnc(&["prop1-combined", "n_b=7"]).status.code(), Some(2));
    assert_eq!(qlnc(&["prop1-qlnc-only", "seed=x"]).status.code(), Some(2));
    let o = qlnc(&["prop1-combined", "k=8", "oracle=on"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("k <= 6"));
}

#[test]
fn reports_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = format!("out={}", path.display());
    for scenario in ["prop1-combined", "prop1-qlnc-only", "prop1-superdense-only"] {
        let o = qlnc(&[scenario, "k=3", "n_b=20", "seed=4", &out]);
        assert_eq!(o.status.code(), Some(0), "{scenario}");
        let text = fs::read_to_string(&path).unwrap();
        let r = ThroughputReport::from_json(&text).unwrap();
        assert_eq!(r.to_json(), text);
        assert_eq!(r.mode.as_str(), scenario);
        assert_eq!(r.per_pair_bits, vec![20; 3]);
    }
    let o = qlnc(&["fig1", "n_b=10", &out]);
    assert_eq!(o.status.code(), Some(0));
    let r = ThroughputReport::from_json(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r.elapsed_steps, 6);
    let o = qlnc(&["prop1-compare", "k=19", "n_b=40000", &out]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&path).unwrap();
    let c = Comparison::from_json(&text).unwrap();
    assert_eq!(c.to_json(), text);
    assert_eq!(c.combined.elapsed_steps, 20003);
    assert_eq!(c.superdense_only.elapsed_steps, 38003);
    assert!(c.combined.closed_form);
}

#[test]
fn byte_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let mut seen = Vec::new();
    for run in 0..2 {
        let path = dir.path().join(format!("{run}.json"));
        let out = format!("out={}", path.display());
        let o = qlnc(&[
            "prop1-combined",
            "k=4",
            "n_b=30",
            "seed=77",
            "oracle=on",
            &out,
        ]);
        seen.push((o.stdout, fs::read(&path).unwrap()));
    }
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn decompose_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let net_path = dir.path().join("net.json");
    let dec_path = dir.path().join("dec.json");
    fs::write(&net_path, build_prop1(3).unwrap().to_json()).unwrap();
    let net_arg = format!("net={}", net_path.display());
    let o = qlnc(&[
        "decompose",
        &net_arg,
        &format!("out={}", dec_path.display()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("achieved: 2/1"));
    let d = Decomposition::from_json(&fs::read_to_string(&dec_path).unwrap()).unwrap();
    let net = Network::from_json(&fs::read_to_string(&net_path).unwrap()).unwrap();
    assert!(qlnc::decomposition::validate_decomposition(&net, &d).is_empty());

    let dec_arg = format!("decomp={}", dec_path.display());
    let o = qlnc(&["validate", &net_arg, &dec_arg]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("valid"));

    // Break edge-disjointness and expect an invariant-violation exit.
    let mut broken = d.clone();
    broken.c4.push(broken.c3[0]);
    fs::write(&dec_path, broken.to_json()).unwrap();
    let o = qlnc(&["validate", &net_arg, &dec_arg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("is in both c3 and c4"));
}

#[test]
fn unreadable_files_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let o = qlnc(&["validate", &format!("net={}", bad.display())]);
    assert_eq!(o.status.code(), Some(2));
    let o = qlnc(&["decompose", "topology=ring"]);
    assert_eq!(o.status.code(), Some(2));
}
