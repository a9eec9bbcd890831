//! The single writer behind the API: one loaded project, its revision counter
//! and the latest verification report.

use std::path::{Path, PathBuf};

use workbench_core::store::{load_project, save_project};
use workbench_core::{Project, StoreError};
use workbench_verify::{VerificationReport, VerifyPolicy};
use workbench_workflow::project_dir;

pub struct Session {
    pub path: PathBuf,
    pub project: Project,
    /// Bumped by every accepted mutation. Starts at 0 when the service loads
    /// the project.
    pub revision: u64,
    pub latest_report: Option<VerificationReport>,
    pub policy: VerifyPolicy,
    pub replay_log: Option<PathBuf>,
}

impl Session {
    pub fn open(path: &Path, policy: VerifyPolicy, replay_log: Option<PathBuf>) -> Result<Self, StoreError> {
        Ok(Session {
            path: path.to_path_buf(),
            project: load_project(path)?,
            revision: 0,
            latest_report: None,
            policy,
            replay_log,
        })
    }

    pub fn dir(&self) -> PathBuf {
        project_dir(&self.path)
    }

    /// Runs `f` on a copy of the project and keeps the result only if it
    /// saves. Returns the new revision alongside `f`'s value.
    pub fn mutate<T, E>(&mut self, f: impl FnOnce(&mut Project) -> Result<T, E>) -> Result<(u64, T), MutateError<E>> {
        let mut next = self.project.clone();
        let out = f(&mut next).map_err(MutateError::Op)?;
        save_project(&next, &self.path, false).map_err(MutateError::Store)?;
        self.project = next;
        self.revision += 1;
        Ok((self.revision, out))
    }
}

pub enum MutateError<E> {
    Op(E),
    Store(StoreError),
}
