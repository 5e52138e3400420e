//! One XML file per task under a data directory.
//!
//! Files are written to a temporary name and renamed into place, so readers
//! never see a partial record. The in-memory index is rebuilt from a directory
//! scan on open.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use tfpaas_core::model::RunStatus;
use tfpaas_core::protocol::{decode_record, encode_record, TestResultRecord};
use uuid::Uuid;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("E_UNKNOWN_TASK: {0}")]
    UnknownTask(Uuid),
    #[error("E_DUPLICATE_TASK: {0}")]
    DuplicateTask(Uuid),
    #[error("E_ILLEGAL_TRANSITION: {id}: {from} -> {to}")]
    IllegalTransition {
        id: Uuid,
        from: &'static str,
        to: &'static str,
    },
    #[error("E_INVALID_RECORD: {0}")]
    InvalidRecord(String),
    #[error("E_IO: {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::UnknownTask(_) => "E_UNKNOWN_TASK",
            StoreError::DuplicateTask(_) => "E_DUPLICATE_TASK",
            StoreError::IllegalTransition { .. } => "E_ILLEGAL_TRANSITION",
            StoreError::InvalidRecord(_) => "E_INVALID_RECORD",
            StoreError::Io { .. } => "E_IO",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug)]
pub struct ResultStore {
    dir: PathBuf,
    index: Mutex<HashMap<Uuid, RunStatus>>,
}

/// What a directory scan found besides valid records.
#[derive(Debug, Default)]
pub struct ScanReport {
    pub loaded: usize,
    pub skipped: Vec<String>,
}

impl ResultStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<(ResultStore, ScanReport), StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let mut index = HashMap::new();
        let mut report = ScanReport::default();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let path = entry.map_err(io_err(&dir))?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if name.contains(".tmp") {
                // Leftover of an interrupted write; the rename never happened.
                let _ = fs::remove_file(&path);
                continue;
            }
            let Some(id) = name
                .strip_suffix(".xml")
                .and_then(|stem| Uuid::parse_str(stem).ok())
            else {
                continue;
            };
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            match decode_record(&text) {
                Ok(d) if d.value.task_id == id => {
                    index.insert(id, d.value.result.status);
                    report.loaded += 1;
                }
                Ok(_) => report.skipped.push(format!("{name}: task id does not match file name")),
                Err(e) => report.skipped.push(format!("{name}: {e}")),
            }
        }
        Ok((
            ResultStore {
                dir,
                index: Mutex::new(index),
            },
            report,
        ))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_of(&self, id: Uuid) -> PathBuf {
        self.dir.join(format!("{}.xml", id.hyphenated()))
    }

    fn write(&self, r: &TestResultRecord) -> Result<(), StoreError> {
        let text = encode_record(r).map_err(|e| StoreError::InvalidRecord(e.to_string()))?;
        let target = self.path_of(r.task_id);
        let tmp = self
            .dir
            .join(format!("{}.xml.tmp-{}", r.task_id.hyphenated(), Uuid::new_v4().simple()));
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(text.as_bytes()).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
        drop(f);
        fs::rename(&tmp, &target).map_err(io_err(&target))
    }

    /// Adds a new task. Its id must not be known yet.
    pub fn store_result(&self, r: &TestResultRecord) -> Result<Uuid, StoreError> {
        let mut index = self.index.lock().expect("store index poisoned");
        if index.contains_key(&r.task_id) {
            return Err(StoreError::DuplicateTask(r.task_id));
        }
        self.write(r)?;
        index.insert(r.task_id, r.result.status);
        Ok(r.task_id)
    }

    /// Replaces a PENDING record with its terminal version. Nothing else may
    /// change a stored record.
    pub fn update_result(&self, r: &TestResultRecord) -> Result<(), StoreError> {
        let mut index = self.index.lock().expect("store index poisoned");
        let from = *index
            .get(&r.task_id)
            .ok_or(StoreError::UnknownTask(r.task_id))?;
        let to = r.result.status;
        if from != RunStatus::Pending || !to.is_terminal() {
            return Err(StoreError::IllegalTransition {
                id: r.task_id,
                from: from.as_str(),
                to: to.as_str(),
            });
        }
        self.write(r)?;
        index.insert(r.task_id, to);
        Ok(())
    }

    pub fn fetch_result(&self, id: Uuid) -> Result<TestResultRecord, StoreError> {
        if !self
            .index
            .lock()
            .expect("store index poisoned")
            .contains_key(&id)
        {
            return Err(StoreError::UnknownTask(id));
        }
        let path = self.path_of(id);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        decode_record(&text)
            .map(|d| d.value)
            .map_err(|e| StoreError::InvalidRecord(e.to_string()))
    }

    pub fn status(&self, id: Uuid) -> Option<RunStatus> {
        self.index
            .lock()
            .expect("store index poisoned")
            .get(&id)
            .copied()
    }

    pub fn task_ids(&self) -> Vec<Uuid> {
        let mut ids: Vec<Uuid> = self
            .index
            .lock()
            .expect("store index poisoned")
            .keys()
            .copied()
            .collect();
        ids.sort();
        ids
    }
}
