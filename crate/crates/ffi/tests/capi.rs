use std::ffi::c_char;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use ckballs_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    let n = unsafe { ck_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn pick_oracle_roundtrip() {
    let alpha = [0.0, 0.0, 0.5, 0.0];
    let mut o: *mut CkOracle = ptr::null_mut();
    unsafe {
        assert_eq!(ck_oracle_pick(alpha.as_ptr(), 2, 1e-10, &mut o), CkStatus::CkOk);
        assert_eq!(ck_oracle_dim(o), 2);
        let mut m = CkMembership::CkUnknown;
        assert_eq!(ck_oracle_membership(o, alpha.as_ptr(), 2, &mut m), CkStatus::CkOk);
        assert_eq!(m, CkMembership::CkMember);
        let far = [0.0, 0.0, 0.9, 0.0];
        assert_eq!(ck_oracle_membership(o, far.as_ptr(), 2, &mut m), CkStatus::CkOk);
        assert_eq!(m, CkMembership::CkNonMember);
        let mut n = 0.0;
        assert_eq!(ck_oracle_norm(o, far.as_ptr(), 2, &mut n), CkStatus::CkOk);
        assert!((n - 1.8).abs() < 1e-6, "{n}");
        ck_oracle_free(o);
    }
}

#[test]
fn null_and_bad_input_report_errors() {
    unsafe {
        let mut m = CkMembership::CkUnknown;
        let w = [0.0; 4];
        assert_eq!(
            ck_oracle_membership(ptr::null(), w.as_ptr(), 2, &mut m),
            CkStatus::CkNullPointer
        );
        assert!(last_error().contains("oracle"));
        assert!(ck_last_error_length() > 0);

        let not_hermitian = [1.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let mut o: *mut CkOracle = ptr::null_mut();
        assert_eq!(
            ck_oracle_idempotent(not_hermitian.as_ptr(), 2, 1e-10, &mut o),
            CkStatus::CkNotHermitian
        );
        assert!(o.is_null());

        let mut out = 0.0;
        assert_ne!(ck_f_ac(-1.0, 1.0, 0.1, &mut out), CkStatus::CkOk);
        assert_eq!(ck_f_ac(1.0, 1.0, 0.0, &mut out), CkStatus::CkOk);
        assert_eq!(ck_last_error_length(), 0);
        ck_oracle_free(ptr::null_mut());
        ck_ideal_free(ptr::null_mut());
        ck_envelope_free(ptr::null_mut());
    }
}

#[test]
fn ideal_and_perp_oracle() {
    // P_{1,1}
    let p = [
        1.0, 0.0, 1.0, 0.0, 1.0, 0.0, //
        1.0, 0.0, 2.0, 0.0, 1.0, 0.0, //
        1.0, 0.0, 1.0, 0.0, 2.0, 0.0,
    ];
    unsafe {
        let mut ideal: *mut CkIdeal = ptr::null_mut();
        assert_eq!(ck_ideal_new(p.as_ptr(), 1, 3, 1e-10, &mut ideal), CkStatus::CkOk);
        let mut nontrivial = 0;
        assert_eq!(ck_ideal_nontrivial(ideal, &mut nontrivial), CkStatus::CkOk);
        assert_eq!(nontrivial, 1);
        let mut delta = 0.0;
        assert_eq!(ck_ideal_delta(ideal, &mut delta), CkStatus::CkOk);
        assert!(delta > 0.0 && delta <= 1.0);

        let w = [0.0, 0.0, 0.5, 0.0, 0.7, 0.0];
        let mut m = CkMembership::CkUnknown;
        assert_eq!(ck_ideal_perp_membership(ideal, w.as_ptr(), 3, 1e-10, &mut m), CkStatus::CkOk);
        assert_eq!(m, CkMembership::CkNonMember);
        let mut slice = CkMembership::CkUnknown;
        assert_eq!(ck_pac_slice_membership(1.0, 1.0, 0.5, 0.7, 1e-10, &mut slice), CkStatus::CkOk);
        assert_eq!(slice, m);

        let mut o: *mut CkOracle = ptr::null_mut();
        assert_eq!(ck_oracle_perp(ideal, 1e-10, &mut o), CkStatus::CkOk);
        ck_ideal_free(ideal);
        let inside = [0.0, 0.0, 0.2, 0.0, 0.2, 0.0];
        assert_eq!(ck_oracle_membership(o, inside.as_ptr(), 3, &mut m), CkStatus::CkOk);
        assert_eq!(m, CkMembership::CkMember);
        ck_oracle_free(o);
    }
}

#[test]
fn envelope_handle() {
    unsafe {
        let mut env: *mut CkEnvelope = ptr::null_mut();
        assert_eq!(ck_envelope_build(5, 1.0, 1.0, 1e-6, &mut env), CkStatus::CkOk);
        assert_eq!(ck_envelope_breakpoint_count(env), 4);
        let mut mu = [0.0; 8];
        let mut written = 0;
        assert_eq!(ck_envelope_breakpoints(env, mu.as_mut_ptr(), mu.len(), &mut written), CkStatus::CkOk);
        assert_eq!(written, 4);
        assert!(mu[..4].windows(2).all(|w| w[0] < w[1]));
        let (mut f, mut active) = (0.0, 99);
        assert_eq!(ck_envelope_eval(env, 0.5 * mu[0], &mut f, &mut active), CkStatus::CkOk);
        assert_eq!(active, 0);
        assert!(f > 0.0);
        let mut ok = 0;
        assert_eq!(ck_envelope_invariants_hold(env, &mut ok), CkStatus::CkOk);
        assert_eq!(ok, 1);
        ck_envelope_free(env);
    }
}

#[test]
fn scalar_functions() {
    unsafe {
        let w = [1.0, 0.0, -1.0, 0.0];
        let mut n = 0.0;
        assert_eq!(ck_example24_norm(w.as_ptr(), &mut n), CkStatus::CkOk);
        assert!((n - 2.0).abs() < 1e-9);
        let mut u = 0.0;
        assert_eq!(ck_curve_intersection(1.0, 1.0, 1.0 / 3.0, 2.0, &mut u), CkStatus::CkOk);
        let (mut f1, mut f2) = (0.0, 0.0);
        ck_f_ac(1.0, 1.0, u, &mut f1);
        ck_f_ac(1.0 / 3.0, 2.0, u, &mut f2);
        assert!((u - 1.0 / 6.0).abs() < 1e-9, "{u}");
        assert!((f1 - f2).abs() < 1e-10);
        let h = 1e-6;
        let (mut lo, mut hi, mut d) = (0.0, 0.0, 0.0);
        ck_f_ac(1.0, 1.0, 0.2 - h, &mut lo);
        ck_f_ac(1.0, 1.0, 0.2 + h, &mut hi);
        ck_f_ac_prime(1.0, 1.0, 0.2, &mut d);
        assert!((d - (hi - lo) / (2.0 * h)).abs() < 1e-6 * d.abs().max(1.0));
    }
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include").join("ckballs.h")
}

#[test]
fn header_declares_every_export() {
    let text = std::fs::read_to_string(header()).unwrap();
    let src = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    for line in src.lines() {
        let Some(rest) = line.split("extern \"C\" fn ").nth(1) else { continue };
        let name = rest.split('(').next().unwrap();
        assert!(text.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(text.contains("typedef struct CkOracle CkOracle;"));
}

#[test]
fn header_compiles_as_c() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let Ok(status) = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(header())
        .status()
    else {
        eprintln!("no C compiler ({cc}); header syntax not checked");
        return;
    };
    assert!(status.success());
}
