#![allow(dead_code)]

pub mod gen;
pub mod oracle;

use std::path::{Path, PathBuf};

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn loans_dir() -> PathBuf {
    repo_root().join("fixtures/loans")
}

pub fn mutant(name: &str) -> PathBuf {
    repo_root()
        .join("fixtures/mutants")
        .join(format!("{name}.rmod"))
}

/// A temporary copy of the loans workspace, optionally with extra module files.
pub fn loans_with(extra: &[&str]) -> tempfile::TempDir {
    let dir = tempfile::tempdir().expect("tempdir");
    copy_dir(&loans_dir(), dir.path());
    for m in extra {
        std::fs::copy(mutant(m), dir.path().join(format!("{m}.rmod"))).expect("copy mutant");
    }
    dir
}

pub fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        let target = to.join(e.file_name());
        if e.path().is_dir() {
            copy_dir(&e.path(), &target);
        } else {
            std::fs::copy(e.path(), target).unwrap();
        }
    }
}
