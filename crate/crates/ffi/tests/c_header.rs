//! Compiles a small C program against the generated header and the static
//! library, then runs it.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "splitmc.h"

int main(void) {
    SmcZooParams p = smc_zoo_params_default();
    p.sigma = 3.0;
    p.b = 10;
    SmcModel *m = NULL;
    if (smc_model_zoo("toy-gaussian-2", &p, &m) != SMC_STATUS_OK) return 1;
    double k = 0.0;
    if (smc_k_sgs(m, 1.0, &k) != SMC_STATUS_OK) return 2;
    if (fabs(k - 10.0 / 19.0) > 1e-12) return 3;
    SmcChain *c = NULL;
    if (smc_chain_new(m, 1.0, 11, NULL, &c) != SMC_STATUS_OK) return 4;
    uint64_t props = 0;
    if (smc_chain_step(c, 10, &props) != SMC_STATUS_OK) return 5;
    double theta = 0.0;
    if (smc_chain_theta(c, &theta, 1) != SMC_STATUS_OK) return 6;
    if (smc_model_zoo("nope", NULL, &m) != SMC_STATUS_INVALID_ARGUMENT) return 7;
    printf("%s\n", smc_last_error());
    smc_chain_free(c);
    smc_model_free(m);
    return 0;
}
"#;

fn profile_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = profile_dir().join("libsplitmc_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let src = tmp.join("splitmc_smoke.c");
    let bin = tmp.join("splitmc_smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("nope"));
}
