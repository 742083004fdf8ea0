use std::ffi::{CStr, CString};
use std::ptr;

use qlnc_ffi::*;

unsafe fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
    qlnc_string_free(p);
    s
}

unsafe fn last_error() -> String {
    let p = qlnc_last_error();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_string_lossy().into_owned()
}

#[test]
fn prop1_network_shape() {
    unsafe {
        let mut net = ptr::null_mut();
        assert_eq!(qlnc_network_prop1(3, &mut net), QlncStatus::Ok);
        let mut q = 0;
        assert_eq!(
            qlnc_network_link_count(net, QlncLinkKind::Quantum, &mut q),
            QlncStatus::Ok
        );
        let mut c = 0;
        assert_eq!(
            qlnc_network_link_count(net, QlncLinkKind::Classical, &mut c),
            QlncStatus::Ok
        );
        assert!(q > 0 && c > 0);
        let mut bad = 99;
        assert_eq!(qlnc_network_violations(net, &mut bad), QlncStatus::Ok);
        assert_eq!(bad, 0);
        let (mut n, mut d) = (0, 0);
        assert_eq!(
            qlnc_network_transmitter_cut(net, QlncLinkKind::Quantum, &mut n, &mut d),
            QlncStatus::Ok
        );
        assert_eq!((n, d), (3, 1));
        qlnc_network_free(net);
    }
}

#[test]
fn network_json_round_trip() {
    unsafe {
        let mut net = ptr::null_mut();
        assert_eq!(qlnc_network_butterfly(&mut net), QlncStatus::Ok);
        let mut text = ptr::null_mut();
        assert_eq!(qlnc_network_to_json(net, &mut text), QlncStatus::Ok);
        let json = take_string(text);
        let c = CString::new(json.clone()).unwrap();
        let mut back = ptr::null_mut();
        assert_eq!(
            qlnc_network_from_json(c.as_ptr(), &mut back),
            QlncStatus::Ok
        );
        let mut text2 = ptr::null_mut();
        assert_eq!(qlnc_network_to_json(back, &mut text2), QlncStatus::Ok);
        assert_eq!(take_string(text2), json);
        qlnc_network_free(net);
        qlnc_network_free(back);
    }
}

#[test]
fn parse_error_sets_message() {
    unsafe {
        let c = CString::new("{not json").unwrap();
        let mut net = ptr::null_mut();
        assert_eq!(
            qlnc_network_from_json(c.as_ptr(), &mut net),
            QlncStatus::Parse
        );
        assert!(net.is_null());
        assert!(!last_error().is_empty());
    }
}

#[test]
fn null_pointers_are_rejected() {
    unsafe {
        assert_eq!(
            qlnc_network_prop1(3, ptr::null_mut()),
            QlncStatus::NullPointer
        );
        let mut q = 0;
        assert_eq!(
            qlnc_network_link_count(ptr::null(), QlncLinkKind::Quantum, &mut q),
            QlncStatus::NullPointer
        );
        assert_eq!(
            qlnc_report_elapsed(ptr::null(), &mut 0),
            QlncStatus::NullPointer
        );
        qlnc_network_free(ptr::null_mut());
        qlnc_report_free(ptr::null_mut());
        qlnc_string_free(ptr::null_mut());
    }
}

#[test]
fn combined_run_matches_closed_form() {
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(
            qlnc_run(QlncMode::Combined, 4, 40, 7, 3, true, &mut r),
            QlncStatus::Ok
        );
        let mut elapsed = 0;
        assert_eq!(qlnc_report_elapsed(r, &mut elapsed), QlncStatus::Ok);
        assert_eq!(elapsed, 40 / 2 + 3);
        let (mut n, mut d) = (0, 0);
        assert_eq!(qlnc_report_avg_rate(r, &mut n, &mut d), QlncStatus::Ok);
        assert_eq!((n, d), (40, 23));
        let mut table = ptr::null_mut();
        assert_eq!(qlnc_report_to_table(r, &mut table), QlncStatus::Ok);
        assert!(take_string(table).contains("oracle:"));

        let mut json = ptr::null_mut();
        assert_eq!(qlnc_report_to_json(r, &mut json), QlncStatus::Ok);
        let json = take_string(json);
        let c = CString::new(json.clone()).unwrap();
        let mut back = ptr::null_mut();
        assert_eq!(qlnc_report_from_json(c.as_ptr(), &mut back), QlncStatus::Ok);
        let mut json2 = ptr::null_mut();
        assert_eq!(qlnc_report_to_json(back, &mut json2), QlncStatus::Ok);
        assert_eq!(take_string(json2), json);
        qlnc_report_free(r);
        qlnc_report_free(back);
    }
}

#[test]
fn baselines_and_loop() {
    unsafe {
        let cases = [
            (QlncMode::QlncOnly, 3, 10, 10),
            (QlncMode::SuperdenseOnly, 3, 12, 9 + 3),
            (QlncMode::Fig1Loop, 2, 10, 6),
        ];
        for (mode, k, n_b, want) in cases {
            let mut r = ptr::null_mut();
            assert_eq!(
                qlnc_run(mode, k, n_b, 1, 3, false, &mut r),
                QlncStatus::Ok,
                "{mode:?}"
            );
            let mut e = 0;
            qlnc_report_elapsed(r, &mut e);
            assert_eq!(e, want, "{mode:?}");
            qlnc_report_free(r);
        }
    }
}

#[test]
fn bad_run_arguments() {
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(
            qlnc_run(QlncMode::Combined, 1, 10, 0, 3, false, &mut r),
            QlncStatus::InvalidArgument
        );
        assert_eq!(
            qlnc_run(QlncMode::Combined, 3, 11, 0, 3, false, &mut r),
            QlncStatus::InvalidArgument
        );
        assert!(last_error().contains("even"));
        assert_eq!(
            qlnc_run(QlncMode::Combined, 3, 10, 0, 2, false, &mut r),
            QlncStatus::InvalidArgument
        );
        assert!(r.is_null());
    }
}

#[test]
fn decompose_prop1() {
    unsafe {
        let mut net = ptr::null_mut();
        qlnc_network_prop1(3, &mut net);
        let (mut n, mut d) = (0, 0);
        let mut json = ptr::null_mut();
        assert_eq!(
            qlnc_network_decompose(net, &mut n, &mut d, &mut json),
            QlncStatus::Ok
        );
        assert!(n * 3 >= 4 * d, "rate {n}/{d} below 1 + 1/k");
        assert!(take_string(json).contains("w_tilde"));
        assert_eq!(
            qlnc_network_decompose(net, &mut n, &mut d, ptr::null_mut()),
            QlncStatus::Ok
        );
        qlnc_network_free(net);
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = include_str!("../include/qlnc.h");
    for name in [
        "QLNC_STATUS_OK",
        "typedef struct QlncNetwork QlncNetwork",
        "typedef struct QlncReport QlncReport",
        "qlnc_last_error",
        "qlnc_string_free",
        "qlnc_network_prop1",
        "qlnc_network_two_node_loop",
        "qlnc_network_butterfly",
        "qlnc_network_from_json",
        "qlnc_network_to_json",
        "qlnc_network_violations",
        "qlnc_network_link_count",
        "qlnc_network_transmitter_cut",
        "qlnc_network_decompose",
        "qlnc_network_free",
        "qlnc_run",
        "qlnc_report_from_json",
        "qlnc_report_elapsed",
        "qlnc_report_avg_rate",
        "qlnc_report_to_json",
        "qlnc_report_to_table",
        "qlnc_report_free",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
