//! Compiles and runs a small C program against the generated header and the
//! static library. Skipped when no C compiler is on PATH.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "skillparse.h"

int main(void) {
    SpDataset *ds = NULL;
    size_t n = 0;
    if (sp_dataset_generate(5, 0, 1, &ds) != SP_STATUS_OK) return 1;
    if (sp_dataset_len(ds, &n) != SP_STATUS_OK || n != 5) return 2;
    sp_dataset_free(ds);
    if (sp_dataset_load(NULL, &ds) != SP_STATUS_NULL_ARGUMENT) return 3;
    if (sp_last_error() == NULL || strstr(sp_last_error(), "path") == NULL) return 4;
    printf("%s\n", sp_version());
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests/<exe> lives in target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_header() {
    let Ok(cc) = which("cc") else {
        eprintln!("no C compiler; skipping");
        return;
    };
    let lib = target_dir().join("libskillparse_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let bin = dir.path().join("main");
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), env!("CARGO_PKG_VERSION"));
}

fn which(name: &str) -> Result<PathBuf, ()> {
    let path = std::env::var_os("PATH").ok_or(())?;
    std::env::split_paths(&path).map(|p| p.join(name)).find(|p| p.exists()).ok_or(())
}
