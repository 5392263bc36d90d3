use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use conewidth_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cw_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn full_square_width_matches_oracle() {
    let occ = vec![1u8; 16];
    let mut g: *mut CwGridSet = ptr::null_mut();
    unsafe {
        assert_eq!(cw_grid_set_new(0.0, 0.0, 0.25, 4, 4, 1, occ.as_ptr(), &mut g), CwStatus::Ok);
        let mut n = 0usize;
        assert_eq!(cw_grid_set_count(g, &mut n), CwStatus::Ok);
        assert_eq!(n, 16);
        let (mut w, mut b) = (0.0, 0.0);
        assert_eq!(cw_width(g, 1.0, 0.0, 1.0, 2, &mut w), CwStatus::Ok);
        assert_eq!(cw_width_brute_force(g, 1.0, 0.0, 1.0, 2, &mut b), CwStatus::Ok);
        assert!((w - 1.0).abs() < 1e-12, "{w}");
        assert_eq!(w, b);
        cw_grid_set_free(g);
    }
}

#[test]
fn occupancy_layout_is_x_fastest() {
    // bottom row against left column: the widths swap with the axis
    let mut row = vec![0u8; 16];
    row[..4].fill(1);
    let col: Vec<u8> = (0..16).map(|i| u8::from(i % 4 == 0)).collect();
    let widths = |occ: &[u8]| unsafe {
        let mut g: *mut CwGridSet = ptr::null_mut();
        assert_eq!(cw_grid_set_new(0.0, 0.0, 0.25, 4, 4, 0, occ.as_ptr(), &mut g), CwStatus::Ok);
        let (mut wx, mut wy) = (0.0, 0.0);
        assert_eq!(cw_width(g, 1.0, 0.0, 0.5, 3, &mut wx), CwStatus::Ok);
        assert_eq!(cw_width(g, 0.0, 1.0, 0.5, 3, &mut wy), CwStatus::Ok);
        cw_grid_set_free(g);
        (wx, wy)
    };
    let (rx, ry) = widths(&row);
    let (cx, cy) = widths(&col);
    // a 45-degree zigzag stays inside one row of cells
    assert!((rx - 2f64.sqrt()).abs() < 1e-12, "{rx}");
    assert!(ry < 0.5, "{ry}");
    assert_eq!((rx, ry), (cy, cx));
}

#[test]
fn errors_set_status_and_message() {
    let mut g: *mut CwGridSet = ptr::null_mut();
    let occ = [1u8; 4];
    unsafe {
        assert_eq!(cw_grid_set_new(0.0, 0.0, -1.0, 2, 2, 0, occ.as_ptr(), &mut g), CwStatus::InvalidArgument);
        assert!(last_error().contains("spacing"), "{}", last_error());
        assert!(g.is_null());
        assert_eq!(cw_grid_set_new(0.0, 0.0, 0.5, 2, 2, 0, ptr::null(), &mut g), CwStatus::NullPointer);
        assert_eq!(cw_grid_set_count(ptr::null(), ptr::null_mut()), CwStatus::NullPointer);

        let missing = CString::new("/nonexistent/set.pbm").unwrap();
        assert_eq!(cw_grid_set_read_pbm(missing.as_ptr(), &mut g), CwStatus::Io);
        assert!(!last_error().is_empty());

        assert_eq!(cw_grid_set_new(0.0, 0.0, 0.5, 2, 2, 0, occ.as_ptr(), &mut g), CwStatus::Ok);
        assert!(last_error().is_empty());
        let mut w = 0.0;
        assert_eq!(cw_width(g, 1.0, 0.0, 2.0, 3, &mut w), CwStatus::InvalidArgument);
        cw_grid_set_free(g);
        cw_grid_set_free(ptr::null_mut());
    }
}

#[test]
fn point_clouds_and_pbm_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let mut pc: *mut CwPointCloud = ptr::null_mut();
        assert_eq!(cw_point_cloud_four_corner(3, &mut pc), CwStatus::Ok);
        let mut n = 0;
        assert_eq!(cw_point_cloud_len(pc, &mut n), CwStatus::Ok);
        assert_eq!(n, 64);
        let mut xy = [f64::NAN; 2];
        assert_eq!(cw_point_cloud_point(pc, 0, xy.as_mut_ptr()), CwStatus::Ok);
        assert!(xy.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(cw_point_cloud_point(pc, 64, xy.as_mut_ptr()), CwStatus::InvalidArgument);
        cw_point_cloud_free(pc);

        assert_eq!(cw_point_cloud_cantor_product(0.25, 2, 3, &mut pc), CwStatus::Ok);
        assert_eq!(cw_point_cloud_len(pc, &mut n), CwStatus::Ok);
        assert_eq!(n, 8 * 3);
        cw_point_cloud_free(pc);

        let occ = [1u8, 0, 0, 1];
        let mut g: *mut CwGridSet = ptr::null_mut();
        assert_eq!(cw_grid_set_new(0.0, 0.0, 0.5, 2, 2, 0, occ.as_ptr(), &mut g), CwStatus::Ok);
        let path = CString::new(dir.path().join("g.pbm").to_str().unwrap()).unwrap();
        assert_eq!(cw_grid_set_write_pbm(g, path.as_ptr()), CwStatus::Ok);
        let mut g2: *mut CwGridSet = ptr::null_mut();
        assert_eq!(cw_grid_set_read_pbm(path.as_ptr(), &mut g2), CwStatus::Ok);
        let (mut a, mut b) = (0, 0);
        cw_grid_set_count(g, &mut a);
        cw_grid_set_count(g2, &mut b);
        assert_eq!((a, b), (2, 2));
        cw_grid_set_free(g);
        cw_grid_set_free(g2);
    }
}

#[test]
fn theorem9_field_is_lipschitz_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let mut pc: *mut CwPointCloud = ptr::null_mut();
        assert_eq!(cw_point_cloud_four_corner(1, &mut pc), CwStatus::Ok);
        let mut f: *mut CwField = ptr::null_mut();
        assert_eq!(cw_build_theorem9(pc, -0.125, 1.125, 1.0 / 32.0, 1, &mut f), CwStatus::Ok, "{}", last_error());
        let mut lip = f64::NAN;
        assert_eq!(cw_field_lipschitz(f, &mut lip), CwStatus::Ok);
        assert!(lip.is_finite() && lip >= 0.0);
        let path = CString::new(dir.path().join("f.cwf").to_str().unwrap()).unwrap();
        assert_eq!(cw_field_write(f, path.as_ptr()), CwStatus::Ok);
        let mut f2: *mut CwField = ptr::null_mut();
        assert_eq!(cw_field_read(path.as_ptr(), &mut f2), CwStatus::Ok);
        let (mut a, mut b) = (0.0, 0.0);
        assert_eq!(cw_field_evaluate(f, 0.3, 0.7, &mut a), CwStatus::Ok);
        assert_eq!(cw_field_evaluate(f2, 0.3, 0.7, &mut b), CwStatus::Ok);
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(cw_field_evaluate(f, 5.0, 0.0, &mut a), CwStatus::Ok);
        cw_field_free(f);
        cw_field_free(f2);
        cw_point_cloud_free(pc);
    }
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(cw_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/conewidth.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "cw_last_error",
        "cw_version",
        "cw_grid_set_new",
        "cw_grid_set_read_pbm",
        "cw_grid_set_write_pbm",
        "cw_grid_set_count",
        "cw_grid_set_free",
        "cw_width",
        "cw_width_brute_force",
        "cw_point_cloud_read_csv",
        "cw_point_cloud_four_corner",
        "cw_point_cloud_cantor_product",
        "cw_point_cloud_len",
        "cw_point_cloud_point",
        "cw_point_cloud_free",
        "cw_field_read",
        "cw_field_write",
        "cw_field_evaluate",
        "cw_field_lipschitz",
        "cw_field_free",
        "cw_build_theorem9",
        "CW_STATUS_OK",
        "CW_STATUS_PANIC",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    // syntax check with the system C compiler when one is present
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"conewidth.h\"\nint main(void) { CwGridSet *g = 0; size_t n; return cw_grid_set_count(g, &n) == CW_STATUS_NULL_POINTER ? 0 : 1; }\n",
    )
    .unwrap();
    match std::process::Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
    {
        Ok(o) => assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr)),
        Err(e) => eprintln!("no C compiler, syntax check skipped: {e}"),
    }
}
