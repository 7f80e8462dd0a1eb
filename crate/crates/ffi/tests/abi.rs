use std::ffi::{CStr, CString};
use std::ptr;

use skillparse_ffi::*;

fn last_error() -> String {
    let p = sp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(sp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_arguments_are_reported() {
    unsafe {
        assert_eq!(sp_dataset_generate(3, 0, 0, ptr::null_mut()), SpStatus::NullArgument);
        assert!(last_error().contains("out"));
        let mut n = 0usize;
        assert_eq!(sp_dataset_len(ptr::null(), &mut n), SpStatus::NullArgument);
        let mut ds = ptr::null_mut();
        assert_eq!(sp_dataset_load(ptr::null(), &mut ds), SpStatus::NullArgument);
        assert!(ds.is_null());
        sp_dataset_free(ptr::null_mut());
        sp_model_free(ptr::null_mut());
    }
}

#[test]
fn dataset_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("d.jsonl").to_str().unwrap()).unwrap();
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(sp_dataset_generate(4, 10, 0, &mut ds), SpStatus::Ok);
        assert_eq!(sp_dataset_save(ds, path.as_ptr()), SpStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(sp_dataset_load(path.as_ptr(), &mut back), SpStatus::Ok);
        let mut n = 0;
        assert_eq!(sp_dataset_len(back, &mut n), SpStatus::Ok);
        assert_eq!(n, 4);
        sp_dataset_free(ds);
        sp_dataset_free(back);

        let missing = CString::new(dir.path().join("nope.jsonl").to_str().unwrap()).unwrap();
        let mut ds = ptr::null_mut();
        assert_eq!(sp_dataset_load(missing.as_ptr(), &mut ds), SpStatus::Io);
        assert!(last_error().contains("nope.jsonl"));
    }
}

#[test]
fn bad_arm_and_fraction() {
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(sp_dataset_generate(3, 0, 0, &mut ds), SpStatus::Ok);
        let mut m = ptr::null_mut();
        let arm = CString::new("bogus").unwrap();
        assert_eq!(sp_train(ds, 0.5, 0, arm.as_ptr(), 1, &mut m), SpStatus::InvalidArgument);
        let arm = CString::new("sl3").unwrap();
        assert_eq!(sp_train(ds, 0.0, 0, arm.as_ptr(), 1, &mut m), SpStatus::InvalidArgument);
        assert!(last_error().contains("fraction"));
        assert!(m.is_null());
        sp_dataset_free(ds);
    }
}

#[test]
fn train_save_load_eval_segment() {
    let dir = tempfile::tempdir().unwrap();
    let cdir = CString::new(dir.path().to_str().unwrap()).unwrap();
    unsafe {
        let (mut train, mut test) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(sp_dataset_generate(40, 0, 0, &mut train), SpStatus::Ok);
        assert_eq!(sp_dataset_generate(10, 1_000_000, 0, &mut test), SpStatus::Ok);
        let arm = CString::new("sl3").unwrap();
        let mut model = ptr::null_mut();
        assert_eq!(sp_train(train, 0.5, 0, arm.as_ptr(), 1, &mut model), SpStatus::Ok, "{}", last_error());
        assert_eq!(sp_model_save(model, cdir.as_ptr()), SpStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(sp_model_load(cdir.as_ptr(), &mut loaded), SpStatus::Ok);
        assert_eq!(sp_model_save(loaded, cdir.as_ptr()), SpStatus::InvalidArgument);

        let (mut a, mut b) = (f64::NAN, f64::NAN);
        assert_eq!(sp_eval_offline(model, test, &mut a), SpStatus::Ok);
        assert_eq!(sp_eval_offline(loaded, test, &mut b), SpStatus::Ok);
        assert!((0.0..=1.0).contains(&a));
        assert_eq!(a, b);

        let mut len = 0;
        assert_eq!(sp_segment(loaded, test, 0, ptr::null_mut(), 0, &mut len), SpStatus::BufferTooSmall);
        assert!(len > 0);
        let mut buf = vec![0usize; len];
        assert_eq!(sp_segment(loaded, test, 0, buf.as_mut_ptr(), len, &mut len), SpStatus::Ok);
        assert_eq!(buf[0], 1);
        assert!(buf.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));
        assert_eq!(sp_segment(loaded, test, 99, buf.as_mut_ptr(), len, &mut len), SpStatus::InvalidArgument);

        sp_model_free(model);
        sp_model_free(loaded);
        sp_dataset_free(train);
        sp_dataset_free(test);
    }
}
