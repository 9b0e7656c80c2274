use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "opgeom.h"

int main(void) {
    OpgeomOperator *op = NULL;
    OpgeomFunction *f = NULL;
    OpgeomSeries *s = NULL;
    OpgeomSeriesInfo info;
    double g = 0.0;
    if (opgeom_operator_new("bernstein", 8, 0.0, 0.0, &op) != OPGEOM_STATUS_OK) return 1;
    if (opgeom_function_registry("psi", &f) != OPGEOM_STATUS_OK) return 1;
    if (opgeom_geometric_series(op, f, OPGEOM_METHOD_SOLVE, 0.0, 0, &s) != OPGEOM_STATUS_OK) return 1;
    opgeom_series_eval(s, 0.5, &g);
    opgeom_series_info(s, &info);
    printf("%.12f %.3e\n", g, info.residual_psi_norm);
    if (opgeom_function_registry("nope", &f) != OPGEOM_STATUS_INVALID_ARGUMENT) return 1;
    opgeom_series_free(s);
    opgeom_function_free(f);
    opgeom_operator_free(op);
    return 0;
}
"#;

/// Compiles a C client against the generated header and links it with the static library.
#[test]
fn c_client_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // test binaries live in target/<profile>/deps; `cargo test` builds only the rlib
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let target_dir = profile_dir.parent().unwrap();
    let mut build = Command::new(std::env::var("CARGO").unwrap_or_else(|_| "cargo".into()));
    build.args(["build", "--quiet", "--lib", "-p", "opgeom-ffi", "--target-dir"]).arg(target_dir);
    if profile_dir.file_name().unwrap() == "release" {
        build.arg("--release");
    }
    assert!(build.status().unwrap().success());
    let lib = profile_dir.join("libopgeom_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    let bin = dir.path().join("client");
    std::fs::write(&src, PROGRAM).unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .expect("C compiler");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success());
    let text = String::from_utf8(run.stdout).unwrap();
    let g: f64 = text.split_whitespace().next().unwrap().parse().unwrap();
    assert!((g - 2.0).abs() < 1e-9, "{text}");
}
