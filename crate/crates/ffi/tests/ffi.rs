//! Round trips through the C ABI, checked against direct calls into the core crate.

use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use approx::assert_abs_diff_eq;
use l2d_core::analysis::{self, HypothesisClassSpec};
use l2d_core::domain::{InstanceDocument, LabelSpace};
use l2d_core::losses::{self, SurrogateSpec};
use l2d_ffi::*;

const INSTANCE: &str = r#"{
  "n": 2, "n_e": 1,
  "points": [
    {"id": 1, "features": [0.0], "weight": 0.5, "conditional": [0.8, 0.2]},
    {"id": 2, "features": [1.0], "weight": 0.5, "conditional": [0.3, 0.7]}
  ],
  "experts": [{"kind": "misclassification", "predictions": {"1": 0, "2": 0}}]
}"#;

fn parse_spec(token: &str) -> *mut L2dSpec {
    let token = CString::new(token).unwrap();
    let mut spec = ptr::null_mut();
    assert_eq!(unsafe { l2d_spec_parse(token.as_ptr(), &mut spec) }, L2dStatus::Ok);
    assert!(!spec.is_null());
    spec
}

fn parse_instance(json: &str) -> Result<*mut L2dInstance, L2dStatus> {
    let json = CString::new(json).unwrap();
    let mut inst = ptr::null_mut();
    match unsafe { l2d_instance_parse(json.as_ptr(), &mut inst) } {
        L2dStatus::Ok => Ok(inst),
        status => Err(status),
    }
}

fn last_error() -> String {
    let msg = l2d_last_error_message();
    assert!(!msg.is_null());
    unsafe { CStr::from_ptr(msg) }.to_str().unwrap().to_string()
}

#[test]
fn surrogate_loss_and_gradient_match_core() {
    let space = LabelSpace::new(3, 2).unwrap();
    let s = [0.3, -1.2, 0.5, 0.1, -0.4];
    let costs = [0.25, 0.6];
    for spec in SurrogateSpec::all().into_iter().filter(|s| !s.is_constrained()) {
        let handle = parse_spec(&spec.to_string());
        let mut value = f64::NAN;
        let mut grad = [f64::NAN; 5];
        unsafe {
            assert_eq!(
                l2d_surrogate_loss(handle, 3, 2, s.as_ptr(), s.len(), 1, costs.as_ptr(), &mut value),
                L2dStatus::Ok
            );
            assert_eq!(
                l2d_surrogate_gradient(handle, 3, 2, s.as_ptr(), s.len(), 1, costs.as_ptr(), grad.as_mut_ptr()),
                L2dStatus::Ok
            );
            l2d_spec_free(handle);
        }
        assert_eq!(value, losses::surrogate_loss(&spec, space, &s, 1, &costs).unwrap(), "{spec}");
        assert_eq!(grad.to_vec(), losses::surrogate_gradient(&spec, space, &s, 1, &costs).unwrap(), "{spec}");
    }
}

#[test]
fn constrained_spec_rejects_off_plane_scores() {
    let handle = parse_spec("constrained:hinge");
    let s = [1.0, 0.0, 0.0];
    let costs = [0.5];
    let mut value = 0.0;
    let status = unsafe { l2d_surrogate_loss(handle, 2, 1, s.as_ptr(), 3, 0, costs.as_ptr(), &mut value) };
    assert_eq!(status, L2dStatus::InvalidArgument);
    assert!(last_error().contains("zero-sum"), "{}", last_error());
    unsafe { l2d_spec_free(handle) };
}

#[test]
fn deferral_loss_and_prediction() {
    let costs = [0.25, 0.5];
    let cases: [([f64; 5], usize, f64); 3] = [
        ([0.0, 2.0, 0.0, 0.0, 0.0], 1, 0.0),
        ([0.0, 2.0, 0.0, 0.0, 0.0], 0, 1.0),
        ([0.0, 0.0, 0.0, 0.0, 3.0], 2, 0.5),
    ];
    for (s, y, expected) in cases {
        let mut value = f64::NAN;
        let status = unsafe { l2d_deferral_loss(3, 2, s.as_ptr(), 5, y, costs.as_ptr(), &mut value) };
        assert_eq!(status, L2dStatus::Ok);
        assert_eq!(value, expected);
    }
    let tied = [1.0, 3.0, 3.0];
    let mut label = usize::MAX;
    assert_eq!(unsafe { l2d_predict_label(tied.as_ptr(), 3, &mut label) }, L2dStatus::Ok);
    assert_eq!(label, 1);
}

#[test]
fn invalid_inputs_report_status_and_message() {
    let mut spec = ptr::null_mut();
    let bad = CString::new("comp_sum:nope").unwrap();
    assert_eq!(unsafe { l2d_spec_parse(bad.as_ptr(), &mut spec) }, L2dStatus::ParseError);
    assert!(spec.is_null());
    assert!(last_error().contains("valid tokens"));

    assert_eq!(unsafe { l2d_spec_parse(ptr::null(), &mut spec) }, L2dStatus::NullPointer);
    assert!(last_error().contains("token"));

    let s = [0.0, f64::NAN, 0.0];
    let mut label = 0;
    assert_eq!(unsafe { l2d_predict_label(s.as_ptr(), 3, &mut label) }, L2dStatus::InvalidArgument);

    let costs = [0.5];
    let mut value = 0.0;
    let status = unsafe { l2d_deferral_loss(2, 1, [0.0; 3].as_ptr(), 3, 5, costs.as_ptr(), &mut value) };
    assert_eq!(status, L2dStatus::InvalidArgument);
    assert!(last_error().contains("label 5"));

    let mut gap = L2dExpGap::default();
    assert_eq!(unsafe { l2d_binary_exp_gap(1.5, 1.0, &mut gap) }, L2dStatus::DomainError);

    assert_eq!(parse_instance("{").unwrap_err(), L2dStatus::ParseError);
    let unnormalized = INSTANCE.replace("0.5, \"conditional\": [0.8", "0.4, \"conditional\": [0.8");
    assert_eq!(parse_instance(&unnormalized).unwrap_err(), L2dStatus::DomainError);

    unsafe {
        l2d_spec_free(ptr::null_mut());
        l2d_instance_free(ptr::null_mut());
    }
}

#[test]
fn spec_name_reports_required_size() {
    let handle = parse_spec("sum:rho(rho=2)");
    let mut needed = 0;
    let status = unsafe { l2d_spec_name(handle, ptr::null_mut(), 0, &mut needed) };
    assert_eq!(status, L2dStatus::BufferTooSmall);
    assert_eq!(needed, "sum:rho(rho=2.0)".len() + 1);
    let mut buffer = vec![0 as std::ffi::c_char; needed];
    assert_eq!(
        unsafe { l2d_spec_name(handle, buffer.as_mut_ptr(), buffer.len(), &mut needed) },
        L2dStatus::Ok
    );
    let name = unsafe { CStr::from_ptr(buffer.as_ptr()) };
    assert_eq!(name.to_str().unwrap(), "sum:rho(rho=2.0)");
    unsafe { l2d_spec_free(handle) };
}

#[test]
fn instance_q_vector_by_hand() {
    let inst = parse_instance(INSTANCE).unwrap();
    let (mut n, mut n_e, mut points) = (0, 0, 0);
    assert_eq!(unsafe { l2d_instance_shape(inst, &mut n, &mut n_e, &mut points) }, L2dStatus::Ok);
    assert_eq!((n, n_e, points), (2, 1, 2));

    // The expert always answers class 0, so its expected cost is p(x, 1).
    let mut q = [0.0; 3];
    for (x, expected) in [[0.8, 0.2, 0.8], [0.3, 0.7, 0.3]].iter().enumerate() {
        assert_eq!(unsafe { l2d_instance_q_vector(inst, x, q.as_mut_ptr(), 3) }, L2dStatus::Ok);
        for (a, b) in q.iter().zip(expected) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }
    assert_eq!(unsafe { l2d_instance_q_vector(inst, 0, q.as_mut_ptr(), 2) }, L2dStatus::InvalidArgument);
    assert_eq!(unsafe { l2d_instance_q_vector(inst, 7, q.as_mut_ptr(), 3) }, L2dStatus::InvalidArgument);
    unsafe { l2d_instance_free(inst) };
}

#[test]
fn verify_bound_matches_core() {
    let (_, d, panel) = InstanceDocument::from_json(INSTANCE).unwrap().to_parts().unwrap();
    let inst = parse_instance(INSTANCE).unwrap();
    let scores = [[-0.1, 0.4, 0.2], [-0.5, 0.9, 0.3]];
    let flat: Vec<f64> = scores.iter().flatten().copied().collect();
    let table: Vec<Vec<f64>> = scores.iter().map(|r| r.to_vec()).collect();
    for token in ["comp_sum:log", "sum:exp", "comp_sum:mae"] {
        let handle = parse_spec(token);
        let mut out = L2dBoundResult::default();
        let status = unsafe { l2d_verify_bound(handle, inst, flat.as_ptr(), flat.len(), &mut out) };
        assert_eq!(status, L2dStatus::Ok, "{token}");
        let spec: SurrogateSpec = token.parse().unwrap();
        let record =
            analysis::verify_bound(&spec, &d, &panel, &table, &HypothesisClassSpec::AllMeasurable).unwrap();
        assert_eq!(out.lhs, record.lhs);
        assert_eq!(out.rhs, record.rhs);
        assert_eq!(out.rhs_with_constants, record.rhs_with_constants);
        assert_eq!(out.deferral_regret, record.deferral_regret);
        assert_eq!(out.surrogate_regret, record.surrogate_regret);
        assert_eq!(out.holds, 1);
        assert!(out.lhs > 0.0);

        let status = unsafe { l2d_verify_bound(handle, inst, flat.as_ptr(), 5, &mut out) };
        assert_eq!(status, L2dStatus::InvalidArgument);
        unsafe { l2d_spec_free(handle) };
    }
    unsafe { l2d_instance_free(inst) };
}

#[test]
fn verify_bound_refuses_costs_above_one() {
    let shifted = INSTANCE.replace(
        r#""kind": "misclassification","#,
        r#""kind": "misclassification_plus_base", "beta": 0.5,"#,
    );
    let inst = parse_instance(&shifted).unwrap();
    let handle = parse_spec("comp_sum:log");
    let flat = [0.0; 6];
    let mut out = L2dBoundResult::default();
    let status = unsafe { l2d_verify_bound(handle, inst, flat.as_ptr(), 6, &mut out) };
    assert_ne!(status, L2dStatus::Ok);
    assert!(!last_error().is_empty());
    unsafe {
        l2d_spec_free(handle);
        l2d_instance_free(inst);
    }
}

#[test]
fn binary_exp_gap_matches_core() {
    for (eta, lambda) in [(0.5, 1.0), (0.9, 0.5), (1.0, 2.0)] {
        let mut out = L2dExpGap::default();
        assert_eq!(unsafe { l2d_binary_exp_gap(eta, lambda, &mut out) }, L2dStatus::Ok);
        let gap = analysis::binary_exp_gap(eta, lambda).unwrap();
        assert_eq!((out.closed_form, out.numeric), (gap.closed_form, gap.numeric));
    }
    let mut out = L2dExpGap::default();
    unsafe { l2d_binary_exp_gap(0.5, 1.0, &mut out) };
    assert_abs_diff_eq!(out.closed_form, 0.0, epsilon = 1e-15);
}

#[test]
fn header_declares_every_export_and_compiles() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/l2d.h")).unwrap();
    let source = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .filter_map(|rest| rest.split('(').next())
        .collect();
    assert_eq!(exports.len(), 14);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }

    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("cc not found; skipping the C compile check");
        return;
    };
    assert!(cc.status.success());
    let tmp = tempfile::tempdir().unwrap();
    let c_file = tmp.path().join("use.c");
    std::fs::write(
        &c_file,
        "#include \"l2d.h\"\nint main(void) {\n  L2dSpec *spec = NULL;\n  \
         L2dStatus st = l2d_spec_parse(\"comp_sum:log\", &spec);\n  l2d_spec_free(spec);\n  \
         return st == L2D_STATUS_OK ? 0 : 1;\n}\n",
    )
    .unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&c_file)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
