//! Compiles and runs a C program against the generated header and the static library.

use std::path::{Path, PathBuf};
use std::process::Command;

fn target_dir() -> PathBuf {
    // .../target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("librwm_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Wextra", "-Werror", "-o"])
        .arg(&exe)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap_or_else(|e| panic!("cannot run {cc}: {e}"));
    assert!(status.success(), "C compilation failed");
    let output = Command::new(&exe).output().unwrap();
    assert!(
        output.status.success(),
        "C smoke test failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(String::from_utf8_lossy(&output.stdout).starts_with("ok "));
}

#[test]
fn header_is_up_to_date() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/rwm.h")).unwrap();
    for symbol in [
        "rwm_last_error_message",
        "rwm_transition_probabilities",
        "rwm_simulate_path",
        "rwm_discrete_density",
        "rwm_simulate_to_last_return",
        "rwm_ks_two_sample",
        "typedef struct RwmRng RwmRng;",
        "typedef struct RwmTrajectory RwmTrajectory;",
        "RWM_STATUS_TRUNCATED = 3",
    ] {
        assert!(header.contains(symbol), "header lacks {symbol}");
    }
}
