//! Experiment harness: configuration, orchestration and report output.

pub mod config;
pub mod oracle;
pub mod report;
pub mod run;

/// Environment variable that overrides `--workers`.
pub const WORKERS_ENV: &str = "QPSPECTRA_WORKERS";

/// Worker count: the environment variable wins over the flag, which wins
/// over the number of available cores.
pub fn resolve_workers(flag: Option<usize>, env: Option<&str>) -> Result<usize, String> {
    if let Some(v) = env {
        return match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!("{WORKERS_ENV} must be a positive integer, got \"{v}\"")),
        };
    }
    match flag {
        Some(0) => Err("--workers must be positive".into()),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_overrides_flag() {
        assert_eq!(resolve_workers(Some(4), Some("2")), Ok(2));
        assert_eq!(resolve_workers(Some(4), None), Ok(4));
        assert!(resolve_workers(Some(4), Some("zero")).is_err());
        assert!(resolve_workers(Some(0), None).is_err());
    }
}
