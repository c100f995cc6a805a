//! Rayon-backed executor with a private pool per run.

use rayon::prelude::*;
use reflectspde_core::exec::Executor;

pub const THREADS_ENV: &str = "REFLECTSPDE_THREADS";

pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn map_indexed<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        // indexed collect keeps index order whatever the schedule
        self.pool.install(|| (0..count).into_par_iter().map(f).collect())
    }
}

/// `--threads`, else `REFLECTSPDE_THREADS`, else the available parallelism.
pub fn resolve_threads(flag: Option<usize>, env: Option<&str>) -> Result<usize, String> {
    let n = match (flag, env) {
        (Some(n), _) => n,
        (None, Some(s)) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("{THREADS_ENV} = {s:?} is not a thread count"))?,
        (None, None) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    if n == 0 {
        return Err("thread count must be at least 1".into());
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use reflectspde_core::exec::Sequential;

    #[test]
    fn order_matches_sequential() {
        let ex = RayonExecutor::new(4).unwrap();
        let f = |i: usize| (i * 7919) % 1000;
        assert_eq!(ex.map_indexed(5000, f), Sequential.map_indexed(5000, f));
        assert_eq!(ex.threads(), 4);
    }

    #[test]
    fn thread_resolution() {
        assert_eq!(resolve_threads(Some(3), Some("8")), Ok(3));
        assert_eq!(resolve_threads(None, Some(" 8 ")), Ok(8));
        assert!(resolve_threads(None, Some("many")).is_err());
        assert!(resolve_threads(Some(0), None).is_err());
        assert!(resolve_threads(None, None).unwrap() >= 1);
    }
}
