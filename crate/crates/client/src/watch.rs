//! Polling file watcher with per-file coalescing.
//!
//! A file is validated once its content has been stable for `settle`, so a
//! burst of writes yields one validation. Validation runs inside the poll
//! loop, which keeps at most one validation per file in flight; a write that
//! lands meanwhile is seen on the next poll and validated once more.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use tfpaas_core::validator::{validate_script, Diagnostic};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FileCheck {
    Diagnostics(Vec<Diagnostic>),
    Unreadable(String),
}

impl FileCheck {
    pub fn errors(&self) -> usize {
        match self {
            FileCheck::Diagnostics(d) => d.iter().filter(|d| d.is_error()).count(),
            FileCheck::Unreadable(_) => 1,
        }
    }

    pub fn warnings(&self) -> usize {
        match self {
            FileCheck::Diagnostics(d) => d.iter().filter(|d| !d.is_error()).count(),
            FileCheck::Unreadable(_) => 0,
        }
    }

    /// Diagnostic lines prefixed with the path.
    pub fn lines(&self, path: &Path) -> Vec<String> {
        match self {
            FileCheck::Diagnostics(d) => d
                .iter()
                .map(|d| format!("{}: {d}", path.display()))
                .collect(),
            FileCheck::Unreadable(reason) => vec![format!("{}: ERROR E_IO: {reason}", path.display())],
        }
    }
}

type Snapshot = Result<Vec<u8>, String>;

fn snapshot(path: &Path) -> Snapshot {
    fs::read(path).map_err(|e| e.to_string())
}

fn check_snapshot(s: &Snapshot) -> FileCheck {
    match s {
        Ok(bytes) => match std::str::from_utf8(bytes) {
            Ok(text) => FileCheck::Diagnostics(validate_script(text)),
            Err(e) => FileCheck::Unreadable(format!("not UTF-8: {e}")),
        },
        Err(reason) => FileCheck::Unreadable(reason.clone()),
    }
}

pub fn check_file(path: &Path) -> FileCheck {
    check_snapshot(&snapshot(path))
}

#[derive(Debug, Clone, Copy)]
pub struct WatchOptions {
    pub poll: Duration,
    pub settle: Duration,
}

impl Default for WatchOptions {
    fn default() -> Self {
        WatchOptions {
            poll: Duration::from_millis(200),
            settle: Duration::from_millis(300),
        }
    }
}

struct Watched {
    path: PathBuf,
    validated: Option<Snapshot>,
    changed: Option<(Snapshot, Instant)>,
}

pub struct Watcher {
    files: Vec<Watched>,
    settle: Duration,
}

impl Watcher {
    pub fn new(paths: &[PathBuf], settle: Duration) -> Self {
        Watcher {
            files: paths
                .iter()
                .map(|p| Watched {
                    path: p.clone(),
                    validated: None,
                    changed: None,
                })
                .collect(),
            settle,
        }
    }

    /// One poll over all files. Returns the files validated in this pass.
    pub fn poll(&mut self, now: Instant) -> Vec<(PathBuf, FileCheck)> {
        let mut out = Vec::new();
        for f in &mut self.files {
            let current = snapshot(&f.path);
            if f.validated.as_ref() == Some(&current) {
                f.changed = None;
                continue;
            }
            // The first sight of a file is reported at once.
            if f.validated.is_some() {
                let since = match &f.changed {
                    Some((seen, since)) if *seen == current => *since,
                    _ => {
                        f.changed = Some((current.clone(), now));
                        now
                    }
                };
                if now.duration_since(since) < self.settle {
                    continue;
                }
            }
            out.push((f.path.clone(), check_snapshot(&current)));
            f.validated = Some(current);
            f.changed = None;
        }
        out
    }

    /// Polls until `stop` is set, handing every validation to `report`.
    pub fn run(&mut self, opts: WatchOptions, stop: &AtomicBool, mut report: impl FnMut(&Path, &FileCheck)) {
        while !stop.load(Ordering::SeqCst) {
            for (path, check) in self.poll(Instant::now()) {
                report(&path, &check);
            }
            thread::sleep(opts.poll);
        }
    }
}
