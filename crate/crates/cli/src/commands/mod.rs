pub mod dsa;
pub mod enhance;
pub mod evaluate;
pub mod loss;
pub mod mix;
pub mod oa;
pub mod report;
pub mod wer;

use std::path::{Path, PathBuf};

use sepeval::Execution;

use crate::error::{io_error, CliResult};

/// Settings shared by every command.
#[derive(Debug, Clone, Copy)]
pub struct Ctx {
    pub exec: Execution,
    pub workers: Option<usize>,
}

impl Ctx {
    /// Execution mode for work inside one utterance: parallel only when
    /// there is a single utterance to spread over the pool.
    pub fn inner(&self, utterances: usize) -> Execution {
        if utterances == 1 {
            self.exec
        } else {
            Execution::Sequential
        }
    }
}

pub fn absolute(p: &Path) -> CliResult<PathBuf> {
    std::path::absolute(p).map_err(|e| io_error(p, e))
}
