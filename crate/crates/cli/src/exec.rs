//! Bounded, order-preserving parallel map for independent experiment rows.

use std::num::NonZeroUsize;

use crate::error::CliError;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "QLEVY_THREADS";

/// Worker threads: `QLEVY_THREADS` if set, else the available parallelism.
pub fn thread_cap() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<NonZeroUsize>()
            .map(NonZeroUsize::get)
            .map_err(|_| CliError::Environment(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        Err(std::env::VarError::NotPresent) => {
            Ok(std::thread::available_parallelism().map(NonZeroUsize::get).unwrap_or(1))
        }
        Err(e) => Err(CliError::Environment(format!("{THREADS_ENV}: {e}"))),
    }
}

/// Applies `f` to every item on at most `threads` workers; results come back
/// in item order regardless of completion order.
pub fn par_map<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let chunk = items.len().div_ceil(threads);
    let f = &f;
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .enumerate()
            .map(|(c, part)| {
                scope.spawn(move || part.iter().enumerate().map(|(i, t)| f(c * chunk + i, t)).collect::<Vec<R>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker thread panicked")).collect()
    })
}
