//! Stderr logger with warnings mirrored to a run log.
//!
//! Verbosity comes from `TICKCOST_LOG` (off, error, warn, info, debug,
//! trace; default info). Run logs carry no timestamps so reruns stay
//! identical.

use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::sync::{Mutex, OnceLock};

use log::{Level, LevelFilter, Log, Metadata, Record};

pub const ENV_VAR: &str = "TICKCOST_LOG";

struct RunLogger {
    stderr: OnceLock<LevelFilter>,
    file: Mutex<Option<File>>,
}

static LOGGER: RunLogger = RunLogger { stderr: OnceLock::new(), file: Mutex::new(None) };

impl Log for RunLogger {
    fn enabled(&self, metadata: &Metadata<'_>) -> bool {
        metadata.level() <= log::max_level()
    }

    fn log(&self, record: &Record<'_>) {
        if record.level() <= Level::Warn {
            if let Some(f) = self.file.lock().ok().as_mut().and_then(|g| g.as_mut()) {
                let _ = writeln!(f, "{}: {}", record.level(), record.args());
            }
        }
        if record.level() <= self.stderr.get().copied().unwrap_or(LevelFilter::Info) {
            eprintln!("[{}] {}", record.level(), record.args());
        }
    }

    fn flush(&self) {
        if let Some(f) = self.file.lock().ok().as_mut().and_then(|g| g.as_mut()) {
            let _ = f.flush();
        }
    }
}

pub fn level_from_env() -> LevelFilter {
    std::env::var(ENV_VAR).ok().and_then(|v| v.parse().ok()).unwrap_or(LevelFilter::Info)
}

/// Installs the logger; later calls are ignored.
pub fn init(stderr_level: LevelFilter) {
    if log::set_logger(&LOGGER).is_ok() {
        let _ = LOGGER.stderr.set(stderr_level);
        // Warnings reach the run log even when stderr is quieter.
        log::set_max_level(stderr_level.max(LevelFilter::Warn));
    }
}

/// Starts a fresh run log at `path`.
pub fn attach_run_log(path: &Path) -> std::io::Result<()> {
    let f = File::create(path)?;
    if let Ok(mut guard) = LOGGER.file.lock() {
        *guard = Some(f);
    }
    Ok(())
}

pub fn flush() {
    LOGGER.flush();
}
