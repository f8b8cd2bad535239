use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use cocompact_ffi::*;

const TWO_RAYS: &str =
    r#"{"space": "R", "elements": [{"intervals": [["-inf", "1"]]}, {"intervals": [["-1", "+inf"]]}]}"#;
const SPLIT_RAYS: &str = r#"{"space": "R", "elements": [{"intervals": [["-inf", "1"], ["2", "+inf"]]}, {"intervals": [["-inf", "-2"], ["-1", "+inf"]]}]}"#;
const PAIR: &str = r#"{"space": {"interval": ["0", "1"]}, "elements": [{"intervals": [["-inf", "3/5"]]}, {"intervals": [["2/5", "+inf"]]}]}"#;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn last_error() -> String {
    let p = coco_last_error();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_string_lossy().into_owned()
}

unsafe fn cover(src: &str) -> *mut CocoCover {
    let mut u = ptr::null_mut();
    assert_eq!(coco_cover_from_json(cstr(src).as_ptr(), &mut u), CocoStatus::Ok);
    u
}

#[test]
fn map_round_trip_and_eval() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(coco_map_preset(cstr("tent").as_ptr(), &mut f), CocoStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(coco_map_eval(f, cstr("3/4").as_ptr(), &mut s), CocoStatus::Ok);
        assert_eq!(CStr::from_ptr(s).to_str().unwrap(), "1/2");
        coco_string_free(s);

        let mut js = ptr::null_mut();
        assert_eq!(coco_map_to_json(f, &mut js), CocoStatus::Ok);
        let mut g = ptr::null_mut();
        assert_eq!(coco_map_from_json(js, &mut g), CocoStatus::Ok);
        let mut t = ptr::null_mut();
        assert_eq!(coco_map_eval(g, cstr("1/8").as_ptr(), &mut t), CocoStatus::Ok);
        assert_eq!(CStr::from_ptr(t).to_str().unwrap(), "1/4");
        coco_string_free(t);
        coco_string_free(js);
        coco_map_free(f);
        coco_map_free(g);
    }
}

#[test]
fn cover_queries() {
    unsafe {
        let u = cover(TWO_RAYS);
        let mut len = 0;
        assert_eq!(coco_cover_len(u, &mut len), CocoStatus::Ok);
        assert_eq!(len, 2);
        let (mut size, mut exact) = (0, false);
        assert_eq!(coco_cover_min_subcover(u, 30, &mut size, &mut exact), CocoStatus::Ok);
        assert_eq!((size, exact), (2, true));
        let mut delta = 0.0;
        assert_eq!(coco_cover_lebesgue(u, &mut delta), CocoStatus::Ok);
        assert_eq!(delta, 2.0);
        coco_cover_free(u);

        let v = cover(PAIR);
        assert_eq!(coco_cover_lebesgue(v, &mut delta), CocoStatus::Ok);
        assert!((delta - 0.2).abs() < 1e-12);
        coco_cover_free(v);
    }
}

#[test]
fn sequence_for_doubling() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(coco_map_preset(cstr("doubling").as_ptr(), &mut f), CocoStatus::Ok);
        let u = cover(SPLIT_RAYS);
        let mut seq = ptr::null_mut();
        assert_eq!(coco_sequence_compute(f, u, 8, ptr::null(), &mut seq), CocoStatus::Ok);
        let mut len = 0;
        assert_eq!(coco_sequence_len(seq, &mut len), CocoStatus::Ok);
        assert_eq!(len, 8);
        let mut n1 = 0;
        assert_eq!(coco_sequence_count(seq, 1, &mut n1), CocoStatus::Ok);
        assert_eq!(n1, 2);
        let mut n0 = 0;
        assert_eq!(coco_sequence_count(seq, 0, &mut n0), CocoStatus::OutOfRange);
        assert_eq!(coco_sequence_count(seq, 9, &mut n0), CocoStatus::OutOfRange);
        let mut h = -1.0;
        assert_eq!(coco_sequence_estimate(seq, 0.02, &mut h), CocoStatus::Ok);
        assert!((0.0..=0.1).contains(&h));
        let mut csv = ptr::null_mut();
        assert_eq!(coco_sequence_to_csv(seq, &mut csv), CocoStatus::Ok);
        let text = CStr::from_ptr(csv).to_str().unwrap().to_owned();
        assert_eq!(text.lines().count(), 9);
        assert!(text.starts_with("n,"));
        coco_string_free(csv);
        coco_sequence_free(seq);
        coco_cover_free(u);
        coco_map_free(f);
    }
}

#[test]
fn settings_json_is_honoured() {
    unsafe {
        let mut f = ptr::null_mut();
        coco_map_preset(cstr("identity").as_ptr(), &mut f);
        let u = cover(SPLIT_RAYS);
        let mut seq = ptr::null_mut();
        let settings = cstr(r#"{"exact_threshold": 10, "log_base": "2"}"#);
        assert_eq!(coco_sequence_compute(f, u, 4, settings.as_ptr(), &mut seq), CocoStatus::Ok);
        let mut n4 = 0;
        coco_sequence_count(seq, 4, &mut n4);
        assert_eq!(n4, 2);
        coco_sequence_free(seq);

        let bad = cstr(r#"{"exact_threshold": "many"}"#);
        assert_eq!(coco_sequence_compute(f, u, 4, bad.as_ptr(), &mut seq), CocoStatus::Parse);
        coco_cover_free(u);
        coco_map_free(f);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(coco_map_preset(cstr("logistic").as_ptr(), &mut f), CocoStatus::InvalidInput);
        assert!(f.is_null());
        assert!(last_error().contains("logistic"));

        assert_eq!(coco_map_preset(ptr::null(), &mut f), CocoStatus::NullPointer);
        assert_eq!(coco_cover_len(ptr::null(), &mut 0), CocoStatus::NullPointer);

        let mut u = ptr::null_mut();
        let gap =
            cstr(r#"{"space": "R", "elements": [{"intervals": [["-inf", "0"]]}, {"intervals": [["1", "+inf"]]}]}"#);
        assert_eq!(coco_cover_from_json(gap.as_ptr(), &mut u), CocoStatus::Parse);
        assert!(last_error().contains("cover"));

        let bytes = [0xffu8, 0];
        assert_eq!(coco_map_preset(bytes.as_ptr().cast(), &mut f), CocoStatus::InvalidUtf8);

        coco_map_free(ptr::null_mut());
        coco_cover_free(ptr::null_mut());
        coco_sequence_free(ptr::null_mut());
        coco_string_free(ptr::null_mut());
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(coco_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/cocompact.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "coco_last_error",
        "coco_string_free",
        "coco_map_preset",
        "coco_map_from_json",
        "coco_map_eval",
        "coco_cover_from_json",
        "coco_cover_min_subcover",
        "coco_cover_lebesgue",
        "coco_sequence_compute",
        "coco_sequence_count",
        "coco_sequence_free",
        "typedef struct CocoMap CocoMap",
        "COCO_STATUS_OK = 0",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let Ok(status) = Command::new("cc").args(["-fsyntax-only", "-xc"]).arg(&header).status() else {
        return;
    };
    assert!(status.success());
}

#[test]
fn c_program_links_against_the_static_library() {
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = deps.join("libcocompact_ffi.a");
    let lib = if lib.exists() { lib } else { deps.parent().unwrap().join("libcocompact_ffi.a") };
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        return;
    }
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let exe = Path::new(env!("CARGO_TARGET_TMPDIR")).join("coco_demo");
    let built = Command::new("cc")
        .arg(root.join("examples/demo.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(built.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("1 2\n"));
    assert!(text.contains("estimate "));
    assert!(text.contains("error: unknown preset \"logistic\""));
}
