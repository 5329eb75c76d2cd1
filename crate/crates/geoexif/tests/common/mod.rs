#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use geoexif::api::Api;
use geoexif::fixtures::{generate, FixtureSpec, Manifest, CORPUS_DIR};
use geoexif::scan::{scan_tree, sha256_hex, ScanConfig, ScanOutcome, ScanProgress};
use tempfile::TempDir;

/// A generated corpus plus one finished scan of it.
pub struct Case {
    pub fixture: TempDir,
    pub workspace: TempDir,
    pub manifest: Manifest,
    pub outcome: ScanOutcome,
}

impl Case {
    pub fn corpus(&self) -> PathBuf {
        self.fixture.path().join(CORPUS_DIR)
    }

    pub fn api(&self) -> Api {
        Api::new(self.workspace.path())
    }

    pub fn run_id(&self) -> &str {
        &self.outcome.run.id
    }
}

pub fn generated(preset: &str) -> (TempDir, Manifest) {
    let dir = tempfile::tempdir().unwrap();
    let spec = FixtureSpec::preset(preset).unwrap_or_else(|| panic!("no preset {preset}"));
    let m = generate(&spec, dir.path()).unwrap();
    (dir, m)
}

pub fn scanned(preset: &str) -> Case {
    let (fixture, manifest) = generated(preset);
    let workspace = tempfile::tempdir().unwrap();
    let outcome = scan(&fixture.path().join(CORPUS_DIR), workspace.path());
    Case { fixture, workspace, manifest, outcome }
}

pub fn scan(root: &Path, workspace: &Path) -> ScanOutcome {
    scan_tree(&ScanConfig::new(root, workspace), &ScanProgress::default()).unwrap()
}

/// Relative path -> sha256 of every entry under `root`; directories map to "dir",
/// symlinks to their target, unreadable files to "unreadable".
pub fn digests(root: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for e in walkdir::WalkDir::new(root).min_depth(1).sort_by_file_name() {
        let e = e.unwrap();
        let rel = e.path().strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
        let ft = e.file_type();
        let v = if ft.is_dir() {
            "dir".to_owned()
        } else if ft.is_symlink() {
            format!("link:{}", fs::read_link(e.path()).unwrap().display())
        } else {
            match fs::read(e.path()) {
                Ok(b) => sha256_hex(&b),
                Err(_) => "unreadable".to_owned(),
            }
        };
        out.insert(rel, v);
    }
    out
}

pub fn json(r: &geoexif::api::ApiResponse) -> serde_json::Value {
    assert_eq!(r.status, 200, "{}", r.text());
    serde_json::from_slice(&r.body).unwrap()
}

/// Swap image and text extensions so names point the wrong way.
pub fn misleading(name: &str) -> String {
    let (stem, ext) = name.rsplit_once('.').unwrap_or((name, ""));
    let fake = match ext.to_ascii_lowercase().as_str() {
        "jpg" | "jpeg" => "txt",
        "tif" | "tiff" => "png",
        "txt" => "jpg",
        _ => "dat",
    };
    format!("{stem}.{fake}")
}

pub fn copy_renamed(from: &Path, to: &Path) {
    for e in walkdir::WalkDir::new(from).min_depth(1) {
        let e = e.unwrap();
        let rel = e.path().strip_prefix(from).unwrap();
        if e.file_type().is_dir() {
            fs::create_dir_all(to.join(rel)).unwrap();
        } else {
            let name = misleading(&rel.file_name().unwrap().to_string_lossy());
            fs::copy(e.path(), to.join(rel).with_file_name(name)).unwrap();
        }
    }
}
