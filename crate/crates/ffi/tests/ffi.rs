use std::ffi::CStr;
use std::path::PathBuf;
use std::ptr;

use l20fs_ffi::*;

fn planted(d: usize, n: usize) -> (Vec<f64>, Vec<usize>) {
    let mut state: u64 = 7;
    let mut next = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    let features: Vec<f64> = (0..d * n).map(|_| next()).collect();
    let labels = (0..n)
        .map(|j| {
            let a = features[j * d + 1];
            let b = features[j * d + 3];
            if a + b > 0.2 {
                2
            } else if a > b {
                1
            } else {
                0
            }
        })
        .collect();
    (features, labels)
}

fn last_error() -> String {
    let p = l20fs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn solve_and_read_back() {
    let (d, n) = (8, 60);
    let (features, labels) = planted(d, n);
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(
            l20fs_dataset_new(features.as_ptr(), d, n, labels.as_ptr(), 3, &mut ds),
            L20fsStatus::Ok
        );
        let config = l20fs_solver_config_default();
        for algorithm in [L20fsAlgorithm::Hiht, L20fsAlgorithm::Ahiht] {
            let mut path = ptr::null_mut();
            assert_eq!(
                l20fs_solve(ds, algorithm, &config, &mut path),
                L20fsStatus::Ok
            );
            let len = l20fs_path_len(path);
            assert_eq!(len, config.path_steps);
            let (mut dd, mut cc) = (0, 0);
            assert_eq!(l20fs_path_dims(path, &mut dd, &mut cc), L20fsStatus::Ok);
            assert_eq!((dd, cc), (d, 3));

            let last = len - 1;
            let mut info = L20fsPointInfo::default();
            assert_eq!(l20fs_path_point(path, last, &mut info), L20fsStatus::Ok);
            let mut support = vec![usize::MAX; d];
            let mut written = 0;
            assert_eq!(
                l20fs_path_support(path, last, support.as_mut_ptr(), d, &mut written),
                L20fsStatus::Ok
            );
            assert_eq!(written, info.support_size);
            assert!(support[..written].windows(2).all(|w| w[0] < w[1]));

            let mut weights = vec![f64::NAN; d * 3];
            assert_eq!(
                l20fs_path_weights(path, last, weights.as_mut_ptr(), d * 3),
                L20fsStatus::Ok
            );
            let nonzero: Vec<usize> = (0..d)
                .filter(|&i| weights[i * 3..i * 3 + 3].iter().any(|&w| w != 0.0))
                .collect();
            assert_eq!(nonzero, support[..written].to_vec());
            let mut bias = [f64::NAN; 3];
            assert_eq!(
                l20fs_path_bias(path, last, bias.as_mut_ptr(), 3),
                L20fsStatus::Ok
            );
            assert!(bias.iter().all(|b| b.is_finite()));

            let mut index = usize::MAX;
            assert_eq!(l20fs_select_by_count(path, 2, &mut index), L20fsStatus::Ok);
            assert!(index < len);
            l20fs_path_free(path);
        }
        l20fs_dataset_free(ds);
    }
}

#[test]
fn error_codes_and_messages() {
    let (features, labels) = planted(4, 20);
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(
            l20fs_dataset_new(ptr::null(), 4, 20, labels.as_ptr(), 3, &mut ds),
            L20fsStatus::NullPointer
        );
        assert!(last_error().contains("features"));
        let mut bad = labels.clone();
        bad[0] = 9;
        assert_eq!(
            l20fs_dataset_new(features.as_ptr(), 4, 20, bad.as_ptr(), 3, &mut ds),
            L20fsStatus::InvalidArgument
        );
        assert!(ds.is_null());
        let mut nan = features.clone();
        nan[5] = f64::NAN;
        assert_ne!(
            l20fs_dataset_new(nan.as_ptr(), 4, 20, labels.as_ptr(), 3, &mut ds),
            L20fsStatus::Ok
        );

        assert_eq!(
            l20fs_dataset_new(features.as_ptr(), 4, 20, labels.as_ptr(), 3, &mut ds),
            L20fsStatus::Ok
        );
        let mut config = l20fs_solver_config_default();
        config.rho = 1.5;
        let mut path = ptr::null_mut();
        assert_eq!(
            l20fs_solve(ds, L20fsAlgorithm::Hiht, &config, &mut path),
            L20fsStatus::InvalidArgument
        );
        assert!(last_error().contains("rho"));

        let config = l20fs_solver_config_default();
        assert_eq!(
            l20fs_solve(ds, L20fsAlgorithm::Hiht, &config, &mut path),
            L20fsStatus::Ok
        );
        let mut info = L20fsPointInfo::default();
        assert_eq!(
            l20fs_path_point(path, 10_000, &mut info),
            L20fsStatus::OutOfRange
        );
        let mut tiny = [0.0f64; 1];
        assert_eq!(
            l20fs_path_weights(path, 0, tiny.as_mut_ptr(), 1),
            L20fsStatus::BufferTooSmall
        );
        assert_eq!(l20fs_path_len(ptr::null()), 0);
        assert_eq!(
            l20fs_path_point(ptr::null(), 0, &mut info),
            L20fsStatus::NullPointer
        );
        l20fs_path_free(path);
        l20fs_dataset_free(ds);
        l20fs_path_free(ptr::null_mut());
        l20fs_dataset_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_api() {
    let header =
        std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/l20fs.h"))
            .unwrap();
    for name in [
        "l20fs_dataset_new",
        "l20fs_dataset_free",
        "l20fs_solve",
        "l20fs_path_free",
        "l20fs_path_len",
        "l20fs_path_point",
        "l20fs_path_support",
        "l20fs_path_weights",
        "l20fs_path_bias",
        "l20fs_select_by_count",
        "l20fs_last_error",
        "typedef struct L20fsDataset L20fsDataset;",
        "typedef struct L20fsPath L20fsPath;",
        "L20FS_STATUS_DIVERGENCE",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Builds and runs a C program against the header and the static library.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libl20fs_ffi.a");
    assert!(
        lib.exists(),
        "static library not found at {}",
        lib.display()
    );
    let out = tempfile::tempdir().unwrap();
    let binary = out.path().join("smoke");
    let status = std::process::Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&binary)
        .status()
        .expect("a C compiler is required for this test");
    assert!(status.success(), "C compilation failed");
    let run = std::process::Command::new(&binary).output().unwrap();
    assert!(
        run.status.success(),
        "C program failed: {}{}",
        String::from_utf8_lossy(&run.stdout),
        String::from_utf8_lossy(&run.stderr)
    );
}
