use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "escrow.h"

int main(void) {
    EscrowParams p = { 10, 15, 5, 5 };
    EscrowTrade *t = NULL;
    int64_t s = 0, b = 0;
    uint32_t phase = 0;
    char *json = NULL;
    if (escrow_trade_run(&p, ESCROW_SELLER_HONEST, ESCROW_BUYER_HONEST, 0, 1, false, &t) != ESCROW_STATUS_OK) return 1;
    if (escrow_trade_payoffs(t, &s, &b) != ESCROW_STATUS_OK || s != 10 || b != 5) return 2;
    if (escrow_trade_phase(t, &phase) != ESCROW_STATUS_OK || phase != ESCROW_PHASE_ACCEPTED) return 3;
    if (escrow_trade_transcript_json(t, &json) != ESCROW_STATUS_OK || strstr(json, "\"accept\"") == NULL) return 4;
    escrow_string_free(json);
    escrow_trade_free(t);

    EscrowAnalysis *a = NULL;
    size_t n = 0;
    bool unique = true;
    if (escrow_analysis_new(&p, ESCROW_TIE_BREAK_REPORT_ALL, &a) != ESCROW_STATUS_OK) return 5;
    if (escrow_analysis_count(a, &n) != ESCROW_STATUS_OK || n != 4) return 6;
    if (escrow_analysis_unique(a, &unique) != ESCROW_STATUS_OK || unique) return 7;
    escrow_analysis_free(a);

    if (escrow_trade_run(NULL, 0, 0, 0, 0, false, &t) != ESCROW_STATUS_NULL_POINTER) return 8;
    if (strcmp(escrow_last_error(), "params is null") != 0) return 9;
    puts("ok");
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_static_library() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libescrow_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let work = tempfile::tempdir().unwrap();
    let src = work.path().join("smoke.c");
    let bin = work.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("a C compiler is available");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "ok\n");
}
